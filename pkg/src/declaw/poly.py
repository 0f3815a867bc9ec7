"""Piecewise polynomials on the state axis and the weighted chain calculus.

All scalar nonlinearities (flux components, diffusion entries and their
primitives, entropy weights) are piecewise polynomials: strictly increasing
breakpoints plus one global-coordinate coefficient vector per interval,
constant term first.  Outside the breakpoint span the end piece extends
(the piece index is clamped), so evaluation, differentiation and
antidifferentiation are total.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as npp

from .errors import DomainError, ValidationError

CONTINUITY_TOL = 1e-12


def _deg(coeffs: np.ndarray) -> int:
    """Exact degree by trailing nonzero coefficient; -1 for the zero polynomial."""
    nz = np.nonzero(coeffs)[0]
    return int(nz[-1]) if nz.size else -1


def _trim(coeffs) -> np.ndarray:
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    d = _deg(c)
    return c[: d + 1] if d >= 0 else np.zeros(1)


@dataclass(frozen=True)
class PiecewisePoly:
    """Scalar piecewise polynomial u -> p(u).

    breakpoints: strictly increasing 1-d array, length m+1.
    pieces: m coefficient vectors (constant term first) in the global
        coordinate u; piece i applies on [breakpoints[i], breakpoints[i+1]).
    continuous: when set, adjacent pieces must agree at shared breakpoints
        to within ``CONTINUITY_TOL``.
    """

    breakpoints: np.ndarray
    pieces: tuple = field(repr=False)
    continuous: bool = False

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).copy()
        if bp.ndim != 1 or bp.size < 2:
            raise ValidationError("breakpoints must be a 1-d array with at least two entries")
        if not np.all(np.isfinite(bp)):
            raise ValidationError("breakpoints must be finite")
        if not np.all(np.diff(bp) > 0):
            raise ValidationError("breakpoints must be strictly increasing")
        pieces = tuple(np.atleast_1d(np.asarray(p, dtype=float)).copy() for p in self.pieces)
        if len(pieces) != bp.size - 1:
            raise ValidationError(
                f"expected {bp.size - 1} pieces for {bp.size} breakpoints, got {len(pieces)}"
            )
        for p in pieces:
            if p.ndim != 1 or p.size < 1:
                raise ValidationError("each piece needs at least one coefficient")
            if not np.all(np.isfinite(p)):
                raise ValidationError("piece coefficients must be finite")
        bp.setflags(write=False)
        for p in pieces:
            p.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "pieces", pieces)
        if self.continuous:
            for i in range(1, bp.size - 1):
                left = npp.polyval(bp[i], pieces[i - 1])
                right = npp.polyval(bp[i], pieces[i])
                # budget the evaluation error of large-coefficient pieces
                x = max(1.0, abs(bp[i]))
                eval_scale = max(
                    float(np.sum(np.abs(p) * x ** np.arange(p.size)))
                    for p in (pieces[i - 1], pieces[i])
                )
                tol = CONTINUITY_TOL * max(1.0, abs(left), abs(right)) + 1e-13 * eval_scale
                if abs(left - right) > tol:
                    raise ValidationError(
                        f"pieces disagree at breakpoint {bp[i]!r}: {left!r} vs {right!r}"
                    )

    # -- basics ---------------------------------------------------------

    @property
    def span(self) -> tuple:
        return (float(self.breakpoints[0]), float(self.breakpoints[-1]))

    @property
    def npieces(self) -> int:
        return len(self.pieces)

    def piece_index(self, u, side: str = "right") -> np.ndarray:
        """Clamped piece index; ``side='left'`` selects the piece to the left
        of a breakpoint (used for left limits)."""
        idx = np.searchsorted(self.breakpoints, np.asarray(u, dtype=float), side=side) - 1
        return np.clip(idx, 0, self.npieces - 1)

    def __call__(self, u):
        u_arr = np.asarray(u, dtype=float)
        if self.npieces == 1:
            res = npp.polyval(u_arr, self.pieces[0])
            return float(res) if u_arr.ndim == 0 else res
        idx = self.piece_index(u_arr, side="right")
        if u_arr.ndim == 0:
            return float(npp.polyval(u_arr, self.pieces[int(idx)]))
        out = np.empty_like(u_arr)
        for i in range(self.npieces):
            m = idx == i
            if m.any():
                out[m] = npp.polyval(u_arr[m], self.pieces[i])
        return out

    def left_limit(self, u) -> float:
        """Value approached from below (differs from __call__ only at jumps)."""
        i = int(self.piece_index(np.asarray(u, dtype=float), side="left"))
        return float(npp.polyval(float(u), self.pieces[i]))

    def jumps(self):
        """(location, size) for every interior breakpoint with a discontinuity."""
        out = []
        bp = self.breakpoints
        for i in range(1, bp.size - 1):
            left = npp.polyval(bp[i], self.pieces[i - 1])
            right = npp.polyval(bp[i], self.pieces[i])
            if right != left:
                out.append((float(bp[i]), float(right - left)))
        return out

    # -- calculus -------------------------------------------------------

    def derivative(self) -> "PiecewisePoly":
        return PiecewisePoly(self.breakpoints, tuple(_trim(npp.polyder(p)) if p.size > 1 else np.zeros(1) for p in self.pieces))

    def antiderivative(self) -> "PiecewisePoly":
        """Continuous antiderivative normalized to vanish at u = 0."""
        bp = self.breakpoints
        raw = [npp.polyint(p) for p in self.pieces]
        adjusted = []
        shift = 0.0
        for i, q in enumerate(raw):
            q = q.copy()
            q[0] += shift
            adjusted.append(q)
            if i + 1 < len(raw):
                here = npp.polyval(bp[i + 1], q)
                nxt = npp.polyval(bp[i + 1], raw[i + 1])
                shift = here - nxt
        result = PiecewisePoly(bp, tuple(adjusted), continuous=True)
        c0 = result(0.0)
        if c0 != 0.0:
            result = PiecewisePoly(
                bp, tuple(np.concatenate(([q[0] - c0], q[1:])) for q in result.pieces), continuous=True
            )
        return result

    # -- structure ------------------------------------------------------

    def refined(self, points) -> "PiecewisePoly":
        """Insert extra breakpoints; the represented function is unchanged."""
        pts = np.asarray(points, dtype=float)
        lo, hi = self.span
        pts = pts[(pts > lo) & (pts < hi)]
        bp = np.unique(np.concatenate((self.breakpoints, pts)))
        idx = np.clip(np.searchsorted(self.breakpoints, bp[:-1], side="right") - 1, 0, self.npieces - 1)
        return PiecewisePoly(bp, tuple(self.pieces[int(i)] for i in idx), continuous=self.continuous)

    def extended(self, lo: float, hi: float) -> "PiecewisePoly":
        """Materialize the end-piece extension so the span covers [lo, hi]."""
        bp = self.breakpoints
        new_lo = min(lo, bp[0])
        new_hi = max(hi, bp[-1])
        nbp = bp.copy()
        pieces = list(self.pieces)
        if new_lo < bp[0]:
            nbp = np.concatenate(([new_lo], nbp))
            pieces = [pieces[0]] + pieces
        if new_hi > bp[-1]:
            nbp = np.concatenate((nbp, [new_hi]))
            pieces = pieces + [pieces[-1]]
        return PiecewisePoly(nbp, tuple(pieces), continuous=self.continuous)

    @staticmethod
    def common(p: "PiecewisePoly", q: "PiecewisePoly"):
        """Re-express both on the union span with a shared breakpoint vector."""
        lo = min(p.span[0], q.span[0])
        hi = max(p.span[1], q.span[1])
        pe, qe = p.extended(lo, hi), q.extended(lo, hi)
        bp = np.unique(np.concatenate((pe.breakpoints, qe.breakpoints)))
        pr = pe.refined(bp)
        qr = qe.refined(bp)
        return bp, pr, qr

    # -- algebra --------------------------------------------------------

    def scaled(self, a: float) -> "PiecewisePoly":
        return PiecewisePoly(self.breakpoints, tuple(p * a for p in self.pieces), continuous=self.continuous)

    def __add__(self, other):
        if isinstance(other, PiecewisePoly):
            bp, pr, qr = PiecewisePoly.common(self, other)
            return PiecewisePoly(
                bp,
                tuple(_trim(npp.polyadd(a, b)) for a, b in zip(pr.pieces, qr.pieces)),
                continuous=self.continuous and other.continuous,
            )
        return PiecewisePoly(
            self.breakpoints,
            tuple(np.concatenate(([p[0] + other], p[1:])) for p in self.pieces),
            continuous=self.continuous,
        )

    def __mul__(self, other):
        if isinstance(other, PiecewisePoly):
            bp, pr, qr = PiecewisePoly.common(self, other)
            return PiecewisePoly(
                bp,
                tuple(_trim(npp.polymul(a, b)) for a, b in zip(pr.pieces, qr.pieces)),
                continuous=self.continuous and other.continuous,
            )
        return self.scaled(float(other))

    __rmul__ = __mul__

    def __sub__(self, other):
        if isinstance(other, PiecewisePoly):
            return self + other.scaled(-1.0)
        return self + (-other)

    # -- exact structure predicates --------------------------------------

    def piece_degree(self, i: int) -> int:
        return _deg(self.pieces[i])

    def is_zero(self) -> bool:
        return all(_deg(p) < 0 for p in self.pieces)

    def equals(self, other: "PiecewisePoly") -> bool:
        """Exact equality as functions (coefficient-level, after refinement)."""
        _, pr, qr = PiecewisePoly.common(self, other)
        return all(np.array_equal(_trim(a), _trim(b)) for a, b in zip(pr.pieces, qr.pieces))

    # -- constructors ----------------------------------------------------

    @staticmethod
    def from_poly(coeffs, span) -> "PiecewisePoly":
        return PiecewisePoly(np.asarray(span, dtype=float), (np.asarray(coeffs, dtype=float),), continuous=True)

    @staticmethod
    def constant(value: float, span=(-1.0, 1.0)) -> "PiecewisePoly":
        return PiecewisePoly.from_poly([value], span)

    @staticmethod
    def zero(span=(-1.0, 1.0)) -> "PiecewisePoly":
        return PiecewisePoly.constant(0.0, span)

    @staticmethod
    def step(location: float, low: float, high: float, span) -> "PiecewisePoly":
        """Piecewise constant with a single jump: low for u < location, high above."""
        lo, hi = span
        if not lo < location < hi:
            raise ValidationError("step location must lie inside the span")
        return PiecewisePoly(np.array([lo, location, hi]), (np.array([low]), np.array([high])))

    @staticmethod
    def sign_step(k: float, span) -> "PiecewisePoly":
        """sgn(u - k) as a piecewise constant."""
        return PiecewisePoly.step(k, -1.0, 1.0, span)


def primitive(p: PiecewisePoly) -> PiecewisePoly:
    """Continuous antiderivative P with P' = p piece by piece and P(0) = 0."""
    return p.antiderivative()


def _signed_smooth_integral(bp, f_pieces, w_pieces, u: float) -> float:
    """Signed integral of f * w' from 0 to u across the shared partition.

    The caller guarantees [min(0,u), max(0,u)] lies within [bp[0], bp[-1]].
    """
    lo, hi = (0.0, u) if u >= 0.0 else (u, 0.0)
    total = 0.0
    for i in range(len(f_pieces)):
        a = max(float(bp[i]), lo)
        b = min(float(bp[i + 1]), hi)
        if b <= a:
            continue
        w_der = npp.polyder(w_pieces[i]) if w_pieces[i].size > 1 else np.zeros(1)
        anti = npp.polyint(npp.polymul(f_pieces[i], w_der))
        total += npp.polyval(b, anti) - npp.polyval(a, anti)
    return total if u >= 0.0 else -total


def chain_eval(weight: PiecewisePoly, fn: PiecewisePoly, u: float) -> float:
    """Evaluate the weight-chained transform of ``fn`` at ``u``.

    The result W satisfies W'(u) = weight(u) * fn'(u) away from breakpoints,
    with the representative normalized so step weights sgn(u-k) produce the
    entropy-flux form sgn(u-k) * (fn(u) - fn(k)).  ``weight`` may jump
    (locally bounded variation); ``fn`` must be continuous.
    """
    u = float(u)
    lo = min(weight.span[0], fn.span[0])
    hi = max(weight.span[1], fn.span[1])
    if not (lo <= u <= hi):
        raise DomainError(f"u={u!r} outside the union of definition ranges [{lo!r}, {hi!r}]")
    ext_lo = min(lo, u, 0.0)
    ext_hi = max(hi, u, 0.0)
    we = weight.extended(ext_lo, ext_hi)
    fe = fn.extended(ext_lo, ext_hi)
    bp, fr, wr = PiecewisePoly.common(fe, we)

    value = wr.left_limit(u) * fr(u)
    value -= _signed_smooth_integral(bp, fr.pieces, wr.pieces, u)

    for b, delta in wr.jumps():
        fb = float(fr(b))
        # atom inside the signed integration window [0,u) resp. [u,0)
        if u > 0.0 and (0.0 <= b < u):
            value -= fb * delta
        elif u <= 0.0 and (u <= b < 0.0):
            value += fb * delta
        # constant fixing the representative: half the atom, signed by side
        value += 0.5 * fb * delta * (1.0 if b >= 0.0 else -1.0)
    return float(value)


def chain_poly(weight: PiecewisePoly, fn: PiecewisePoly) -> PiecewisePoly:
    """Piecewise-polynomial form of the chained transform for continuous weights.

    Agrees with :func:`chain_eval` pointwise; used where the transform must be
    evaluated on whole arrays.
    """
    for _, delta in weight.jumps():
        if abs(delta) > 1e-9:
            raise ValidationError("chain_poly requires a continuous weight; use chain_eval")
    lo = min(weight.span[0], fn.span[0], 0.0)
    hi = max(weight.span[1], fn.span[1], 0.0)
    we = weight.extended(lo, hi)
    fe = fn.extended(lo, hi)
    bp, fr, wr = PiecewisePoly.common(fe, we)
    prod = PiecewisePoly(
        bp,
        tuple(
            _trim(npp.polymul(f, npp.polyder(w) if w.size > 1 else np.zeros(1)))
            for f, w in zip(fr.pieces, wr.pieces)
        ),
    )
    integral = prod.antiderivative()
    direct = PiecewisePoly(bp, tuple(_trim(npp.polymul(f, w)) for f, w in zip(fr.pieces, wr.pieces)))
    return direct - integral
