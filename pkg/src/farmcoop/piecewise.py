"""Piecewise curves built from closed-form segments.

A :class:`PiecewiseFunction` is an ordered list of ``(lo, hi, Expression)``
segments starting at 0.  Segments are half-open ``[lo, hi)`` except the
last, which is closed, so evaluation at a breakpoint is unambiguous.  The
final ``hi`` may be ``inf`` for curves defined on all of ``[0, +inf)``.

Construction validates contiguity and continuity at interior breakpoints
(relative tolerance ``CONTINUITY_TOL``); a jump is a hard error, because
the supply-chain model assumes continuous cost and price curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .expressions import Expression, parse_expression

__all__ = [
    "PiecewiseFunction",
    "PiecewiseError",
    "Segment",
    "ShapeReport",
    "check_shape",
    "CONTINUITY_TOL",
]

# Relative continuity tolerance at interior breakpoints.  Valid inputs are
# continuous by construction, so a tight tolerance catches config typos.
CONTINUITY_TOL = 1e-6


class PiecewiseError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    expr: Expression


class PiecewiseFunction:
    """Continuous piecewise function on ``[0, domain_end]``."""

    __slots__ = ("segments", "_bounds")

    def __init__(self, segments):
        segs = []
        for seg in segments:
            if isinstance(seg, Segment):
                lo, hi, expr = seg.lo, seg.hi, seg.expr
            else:
                lo, hi, expr = seg
            if isinstance(expr, str):
                expr = parse_expression(expr)
            hi = math.inf if hi is None else float(hi)
            segs.append(Segment(float(lo), hi, expr))
        if not segs:
            raise PiecewiseError("at least one segment required")
        if segs[0].lo != 0.0:
            raise PiecewiseError(f"domain must start at 0, got {segs[0].lo}")
        for a, b in zip(segs, segs[1:]):
            if not a.hi == b.lo:
                raise PiecewiseError(
                    f"segments not contiguous: [{a.lo}, {a.hi}) then [{b.lo}, {b.hi})"
                )
        for seg in segs:
            if not seg.lo < seg.hi:
                raise PiecewiseError(f"empty segment [{seg.lo}, {seg.hi})")
        object.__setattr__(self, "segments", tuple(segs))
        object.__setattr__(
            self, "_bounds", np.array([s.lo for s in segs] + [segs[-1].hi])
        )
        self._check_continuity()

    def __setattr__(self, name, value):
        raise AttributeError("PiecewiseFunction is immutable")

    def _check_continuity(self):
        for left, right in zip(self.segments, self.segments[1:]):
            x = right.lo
            lv = float(left.expr(float(x)))
            rv = float(right.expr(float(x)))
            scale = max(1.0, abs(lv), abs(rv))
            if not (math.isfinite(lv) and math.isfinite(rv)):
                raise PiecewiseError(f"non-finite value at breakpoint q={x}")
            if abs(lv - rv) > CONTINUITY_TOL * scale:
                raise PiecewiseError(
                    f"discontinuity at q={x}: {lv} (left) vs {rv} (right)"
                )

    # -- properties ---------------------------------------------------------

    @property
    def domain_end(self) -> float:
        return self.segments[-1].hi

    @property
    def breakpoints(self):
        """Interior breakpoints, ascending."""
        return tuple(s.lo for s in self.segments[1:])

    def saturation_start(self) -> float:
        """Start of the final constant segment, or inf if the curve never
        flattens.  Orders beyond this point carry no price information."""
        last = self.segments[-1]
        return last.lo if last.expr.is_constant else math.inf

    # -- evaluation ---------------------------------------------------------

    def _segment_index(self, q: float) -> int:
        if q < 0.0 or q > self.domain_end:
            raise PiecewiseError(
                f"q={q} outside domain [0, {self.domain_end}]"
            )
        # half-open [lo, hi) except the last segment, which is closed
        idx = int(np.searchsorted(self._bounds, q, side="right")) - 1
        return min(idx, len(self.segments) - 1)

    def __call__(self, q):
        if np.isscalar(q):
            seg = self.segments[self._segment_index(float(q))]
            return float(seg.expr(float(q)))
        return self.eval_array(np.asarray(q, dtype=float))

    def eval_array(self, qs: np.ndarray) -> np.ndarray:
        """Vectorized evaluation; every entry must lie in the domain."""
        qs = np.asarray(qs, dtype=float)
        if qs.size and (qs.min() < 0.0 or qs.max() > self.domain_end):
            raise PiecewiseError(
                f"values outside domain [0, {self.domain_end}]"
            )
        idx = np.searchsorted(self._bounds, qs, side="right") - 1
        np.clip(idx, 0, len(self.segments) - 1, out=idx)
        out = np.empty_like(qs)
        for k, seg in enumerate(self.segments):
            mask = idx == k
            if mask.any():
                out[mask] = seg.expr(qs[mask])
        return out

    # -- (de)serialization ---------------------------------------------------

    def to_dicts(self):
        return [
            {
                "lo": s.lo,
                "hi": None if math.isinf(s.hi) else s.hi,
                "expr": s.expr.text,
            }
            for s in self.segments
        ]

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PiecewiseFunction)
            and self.segments == other.segments
        )

    def __hash__(self) -> int:
        return hash(self.segments)

    def __repr__(self) -> str:
        parts = ", ".join(
            f"[{s.lo}, {s.hi}): {s.expr.text!r}" for s in self.segments
        )
        return f"PiecewiseFunction({parts})"


@dataclass(frozen=True)
class ShapeReport:
    """Sampled monotonicity diagnostics for a model curve.

    ``non_increasing`` / ``strictly_decreasing`` describe f itself;
    ``product_non_decreasing`` describes q -> f(q)*q.  Each failed check
    carries the first offending sample in ``witnesses``.
    """

    non_increasing: bool
    strictly_decreasing: bool
    product_non_decreasing: bool
    witnesses: dict

    @property
    def acceptable(self) -> bool:
        # Constant stretches are fine (flat price tails); a genuine increase
        # or a decreasing revenue q*f(q) is not.
        return self.non_increasing and self.product_non_decreasing


def check_shape(f: PiecewiseFunction, upper: float | None = None,
                grid: int = 2001) -> ShapeReport:
    """Sampled verification that ``f`` decreases and ``f(q)*q`` does not.

    Diagnostics only; the caller decides severity.  ``upper`` defaults to
    the domain end and must be finite.
    """
    hi = f.domain_end if upper is None else min(float(upper), f.domain_end)
    if not math.isfinite(hi):
        raise PiecewiseError("shape check needs a finite upper bound")
    qs = np.linspace(0.0, hi, grid)
    ys = f.eval_array(qs)
    dy = np.diff(ys)
    prod = ys * qs
    dprod = np.diff(prod)

    witnesses = {}
    finite = np.isfinite(ys)
    tol = 1e-9 * max(1.0, float(np.abs(ys[finite]).max()) if finite.any() else 1.0)

    increasing = np.where(dy > tol)[0]
    non_increasing = increasing.size == 0
    if not non_increasing:
        k = int(increasing[0])
        witnesses["non_increasing"] = (float(qs[k]), float(qs[k + 1]))

    flat = np.where(np.abs(dy) <= tol)[0]
    strictly_decreasing = non_increasing and flat.size == 0
    if non_increasing and not strictly_decreasing:
        k = int(flat[0])
        witnesses["strictly_decreasing"] = (float(qs[k]), float(qs[k + 1]))

    ptol = 1e-9 * max(1.0, float(np.abs(prod[np.isfinite(prod)]).max()))
    decreasing_prod = np.where(dprod < -ptol)[0]
    product_non_decreasing = decreasing_prod.size == 0
    if not product_non_decreasing:
        k = int(decreasing_prod[0])
        witnesses["product_non_decreasing"] = (float(qs[k]), float(qs[k + 1]))

    return ShapeReport(
        non_increasing=non_increasing,
        strictly_decreasing=strictly_decreasing,
        product_non_decreasing=product_non_decreasing,
        witnesses=witnesses,
    )
