"""Weak-form entropy residuals for computed (or synthetic) trajectories.

For a convex C^2 entropy eta built by smoothing |u - k| over a width tied to
the grid scale, the residual of a trajectory against a nonnegative space-time
bump f is the quadrature of

    eta(u) f_t + Q(u) . grad f + R(u) . D^2 f   (+ initial term at t = 0)

where Q and R are the chained transforms of the flux vector and diffusion
primitive by eta'.  Entropy-consistent solutions make this nonnegative up to
quadrature error; a genuinely non-entropic profile drives it negative, which
is the detector the harness exercises.

Quadrature: the state is piecewise constant per cell and per midpoint time
interval, while the analytic bump factors are integrated exactly (their
antiderivatives are polynomials).  Every spatial factor therefore telescopes,
so constant trajectories give exactly zero up to roundoff.  The dissipation
term of the full entropy inequality is omitted; it is nonnegative, so the
omission only makes the nonnegativity check stricter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npp

from .errors import ConfigurationError
from .poly import PiecewisePoly, chain_poly, primitive
from .solver import Trajectory, _slope_tables

_BUMP = np.array([1.0, 0.0, -4.0, 0.0, 6.0, 0.0, -4.0, 0.0, 1.0])  # (1-s^2)^4
_BUMP_D = npp.polyder(_BUMP)
_BUMP_I = npp.polyint(_BUMP)


def _val(coeffs, s):
    s = np.asarray(s, dtype=float)
    return np.where(np.abs(s) < 1.0, npp.polyval(np.clip(s, -1.0, 1.0), coeffs), 0.0)


def _antider(s):
    return npp.polyval(np.clip(np.asarray(s, dtype=float), -1.0, 1.0), _BUMP_I)


@dataclass(frozen=True)
class SpaceTimeBump:
    """Separable polynomial bump test function, C^3 and compactly supported."""

    t_center: float
    t_halfwidth: float
    x_center: tuple
    x_halfwidth: tuple

    @staticmethod
    def build(t_center, t_halfwidth, x_center, x_halfwidth) -> "SpaceTimeBump":
        xc = tuple(float(c) for c in np.atleast_1d(x_center))
        xw = np.atleast_1d(np.asarray(x_halfwidth, dtype=float))
        if xw.size == 1:
            xw = np.repeat(xw, len(xc))
        if t_halfwidth <= 0 or np.any(xw <= 0):
            raise ConfigurationError("bump half-widths must be positive")
        return SpaceTimeBump(float(t_center), float(t_halfwidth), xc, tuple(float(w) for w in xw))

    def time_value(self, t) -> float:
        return float(_val(_BUMP, (t - self.t_center) / self.t_halfwidth))

    def time_integral(self, a, b) -> float:
        sa = (a - self.t_center) / self.t_halfwidth
        sb = (b - self.t_center) / self.t_halfwidth
        return float(self.t_halfwidth * (_antider(sb) - _antider(sa)))

    def axis_cell_integrals(self, axis: int, edges: np.ndarray):
        """Exact per-cell integrals of the axis factor and its first two
        derivatives, from the profile antiderivative at the cell edges."""
        s = (edges - self.x_center[axis]) / self.x_halfwidth[axis]
        w = self.x_halfwidth[axis]
        i0 = w * np.diff(_antider(s))
        i1 = np.diff(_val(_BUMP, s))
        i2 = np.diff(_val(_BUMP_D, s)) / w
        return i0, i1, i2


def entropy_ramp(k: float, eps: float, span) -> PiecewisePoly:
    """C^1 odd ramp through level k: -1 below k-eps, +1 above k+eps, cubic
    between; its primitive is a convex C^2 smoothing of |u - k|."""
    lo = min(span[0], k - 2.0 * eps)
    hi = max(span[1], k + 2.0 * eps)
    lin = np.array([-k, 1.0]) * (1.5 / eps)
    cub = np.array([-k ** 3, 3.0 * k ** 2, -3.0 * k, 1.0]) * (-0.5 / eps ** 3)
    middle = npp.polyadd(lin, cub)
    # global-coordinate coefficients of the narrow cubic wobble by ~1e-11 at
    # the seams; the function is continuous, so skip the strict flag
    return PiecewisePoly(
        np.array([lo, k - eps, k + eps, hi]),
        (np.array([-1.0]), middle, np.array([1.0])),
    )


def _check_support(traj: Trajectory, bump: SpaceTimeBump, t_last: float):
    g = traj.initial
    if len(bump.x_center) != g.dim:
        raise ConfigurationError("bump dimension does not match the grid")
    if bump.t_center + bump.t_halfwidth > t_last + 1e-12:
        raise ConfigurationError("bump support exceeds the trajectory time coverage")
    for axis in range(g.dim):
        lo = g.origin[axis]
        hi = g.origin[axis] + g.extent[axis]
        if bump.x_center[axis] - bump.x_halfwidth[axis] < lo - 1e-12 or \
           bump.x_center[axis] + bump.x_halfwidth[axis] > hi + 1e-12:
            raise ConfigurationError("bump support exceeds the grid box")


def _axis_edges(g, axis: int) -> np.ndarray:
    n = g.shape[axis]
    return g.origin[axis] + np.arange(n + 1) * g.cell_size


def entropy_residual(traj: Trajectory, k_values, bumps) -> list:
    """Residuals for every (level, bump) pair, level-major."""
    model = traj.model
    g0 = traj.initial
    states = list(traj.snapshots)
    if not states:
        raise ConfigurationError("trajectory has no snapshots")
    if states[0][0] > 0.0:
        states = [(0.0, g0)] + states
    t_last = states[-1][0]
    bumps = list(bumps)
    for b in bumps:
        _check_support(traj, b, t_last)
    k_values = [float(k) for k in k_values]
    model.require_in_range(np.asarray(k_values))

    lo, hi = traj.value_range()
    l_flux = max(t.global_bound(lo, hi) for t in _slope_tables(model))
    eps = 2.0 * g0.cell_size * (l_flux if l_flux > 0.0 else 1.0)

    times = [t for t, _ in states]
    mids = [0.0] + [0.5 * (a + b) for a, b in zip(times[:-1], times[1:])] + [times[-1]]

    cell_factors = []
    for b in bumps:
        cell_factors.append([b.axis_cell_integrals(a, _axis_edges(g0, a)) for a in range(g0.dim)])

    results = []
    for k in k_values:
        weight = entropy_ramp(k, eps, (min(lo, 0.0) - 1.0, max(hi, 0.0) + 1.0))
        eta = primitive(weight)
        q_flux = [chain_poly(weight, p) for p in model.flux]
        r_diff = [[None] * model.dim for _ in range(model.dim)]
        for i in range(model.dim):
            for j in range(model.dim):
                if not model.primitive[i][j].is_zero():
                    r_diff[i][j] = chain_poly(weight, model.primitive[i][j])
        for b_idx, bump in enumerate(bumps):
            fac = cell_factors[b_idx]
            total = 0.0
            for j, (t_j, g_j) in enumerate(states):
                a_t, b_t = mids[j], mids[j + 1]
                dq = bump.time_value(b_t) - bump.time_value(a_t)
                iq = bump.time_integral(a_t, b_t)
                vals = g_j.values
                if g0.dim == 1:
                    i0, i1, i2 = fac[0]
                    if dq != 0.0:
                        total += dq * float(np.dot(eta(vals), i0))
                    if iq != 0.0:
                        total += iq * float(np.dot(q_flux[0](vals), i1))
                        if r_diff[0][0] is not None:
                            total += iq * float(np.dot(r_diff[0][0](vals), i2))
                else:
                    i0x, i1x, i2x = fac[0]
                    i0y, i1y, i2y = fac[1]
                    if dq != 0.0:
                        total += dq * float(i0x @ (eta(vals) @ i0y))
                    if iq != 0.0:
                        total += iq * float(i1x @ (q_flux[0](vals) @ i0y))
                        total += iq * float(i0x @ (q_flux[1](vals) @ i1y))
                        if r_diff[0][0] is not None:
                            total += iq * float(i2x @ (r_diff[0][0](vals) @ i0y))
                        if r_diff[1][1] is not None:
                            total += iq * float(i0x @ (r_diff[1][1](vals) @ i2y))
                        if r_diff[0][1] is not None:
                            total += iq * 2.0 * float(i1x @ (r_diff[0][1](vals) @ i1y))
            f0 = bump.time_value(0.0)
            if f0 != 0.0:
                if g0.dim == 1:
                    total += f0 * float(np.dot(eta(g0.values), fac[0][0]))
                else:
                    total += f0 * float(fac[0][0] @ (eta(g0.values) @ fac[1][0]))
            results.append(float(total))
    return results
