"""The operator governing the edge-cover bracket laws, and its minimum-matching analogue.

For edge cover the iteration closes on scalars: every iterate is
``c·e^{-x}`` on ``[0, lam/2]``, and with ``E(F) = ∫_0^{lam/2} F`` the means
follow ``a_{k+1} = φ(b_k)``, ``b_{k+1} = φ(a_k)`` where
``φ(x) = e^{-x}(1 - e^{-lam/2})``. The matching operator
``(V F)(x) = exp(-∫_{-x}^{lam/2} F)`` has no such closure and is iterated on
a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext

import numpy as np

FLOAT_FLOOR = 1e-13
# The scalar recursion and the fixed point are carried in decimal arithmetic
# and rounded at the end. Rounding is monotone, so orderings that hold exactly
# (a_k <= A <= b_k, monotone sequences) survive in the float outputs.
DIGITS = 60


def _mass_dec(lam: float) -> Decimal:
    if math.isinf(lam):
        return Decimal(1)
    return 1 - (-Decimal(lam) / 2).exp()


def _fixed_point_dec(lam: float) -> Decimal:
    c = _mass_dec(lam)
    A = Decimal(0)
    for _ in range(200):
        e = c * (-A).exp()
        step = (A - e) / (1 + e)
        A -= step
        if abs(step) < Decimal(10) ** (-(DIGITS - 5)):
            break
    return A


def fixed_point_A(lam: float, tol: float = 1e-14) -> float:
    """Root of ``A = e^{-A}(1 - e^{-lam/2})`` by Newton's method from 0 (``lam=inf`` allowed).

    The derivative of ``A - c·e^{-A}`` is at least 1, so the root is unique.
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    with localcontext() as ctx:
        ctx.prec = DIGITS
        A = _fixed_point_dec(lam)
    A = float(A)
    c = 1.0 if math.isinf(lam) else -math.expm1(-0.5 * lam)
    if abs(A - c * math.exp(-A)) >= max(tol, 4e-16):
        raise RuntimeError("Newton iteration did not reach the requested tolerance")
    return A


@dataclass(frozen=True)
class ScalarIterate:
    k: int
    a_k: float
    b_k: float
    lam: float


def scalar_iteration(lam: float, k_max: int) -> list[ScalarIterate]:
    """Means ``a_k`` (lower family) and ``b_k`` (upper family) for ``k = 0..k_max``."""
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if not lam > 0:
        raise ValueError("lam must be positive")
    return [ScalarIterate(k, float(a), float(b), float(lam)) for k, a, b in _scalar_dec(lam, k_max)]


def _scalar_dec(lam, k_max):
    with localcontext() as ctx:
        ctx.prec = DIGITS
        c = _mass_dec(lam)
        a, b = Decimal(0), Decimal(lam) / 2
        out = [(0, a, b)]
        for k in range(1, k_max + 1):
            a, b = c * (-b).exp(), c * (-a).exp()
            out.append((k, a, b))
    return out


def tail_functions(seq: list[ScalarIterate], k: int):
    """``(F_k, G_k)``, the tails of the lower/upper bracket laws, as callables (``k >= 1``)."""
    if k < 1:
        raise ValueError("closed form holds for k >= 1")
    a_prev, b_prev = seq[k - 1].a_k, seq[k - 1].b_k

    def F(x):
        return np.exp(-b_prev) * np.exp(-np.asarray(x, dtype=float))

    def G(x):
        return np.exp(-a_prev) * np.exp(-np.asarray(x, dtype=float))

    return F, G


@dataclass(frozen=True)
class BoundRow:
    k: int
    a_k: float
    b_k: float
    gap: float
    bound_upper: float
    bound_lower: float
    passed: bool


@dataclass(frozen=True)
class ConvergenceReport:
    lam: float
    A: float
    rows: list
    all_pass: bool
    sandwich_ok: bool
    monotone_ok: bool
    two_step_ratio: float
    ratio_k: int

    CSV_HEADER = ("lambda", "k", "a_k", "b_k", "gap", "bound", "pass")

    def csv_rows(self):
        return [(self.lam, r.k, r.a_k, r.b_k, r.gap, r.bound_upper, int(r.passed)) for r in self.rows]


def two_step_ratio(lam: float, k_max: int, threshold: float = 1e-6) -> tuple[float, int]:
    """``(b_{k+2} - A)/(b_k - A)`` at the first ``k`` where ``0 < b_k - A < threshold``.

    Measured once the deviation is small, where the ratio is close to its
    limit ``A^2`` (the derivative of ``φ∘φ`` at the fixed point).
    """
    with localcontext() as ctx:
        ctx.prec = DIGITS
        A = _fixed_point_dec(lam)
        seq = _scalar_dec(lam, k_max)
        for k, _, b in seq[:-2]:
            d = b - A
            if 0 < d < Decimal(threshold):
                return float((seq[k + 2][2] - A) / d), k
    return float("nan"), -1


def convergence_bound_check(lam: float, k_max: int) -> ConvergenceReport:
    """Check ``b_k - A <= lam·e^{-⌊k/2⌋A}`` and ``A - a_k <= A·e^{-⌊k/2⌋A}`` for all ``k <= k_max``."""
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    A = fixed_point_A(lam)
    seq = scalar_iteration(lam, k_max)
    rows = []
    for r in seq:
        decay = math.exp(-(r.k // 2) * A)
        bu, bl = lam * decay, A * decay
        ok = (r.b_k - A <= bu) and (A - r.a_k <= bl)
        rows.append(BoundRow(r.k, r.a_k, r.b_k, r.b_k - r.a_k, bu, bl, ok))
    sandwich = all(0.0 <= r.a_k <= A <= r.b_k <= 0.5 * lam for r in seq)
    mono = all(seq[i + 1].a_k >= seq[i].a_k and seq[i + 1].b_k <= seq[i].b_k for i in range(len(seq) - 1))
    ratio, rk = two_step_ratio(lam, k_max)
    return ConvergenceReport(float(lam), A, rows, all(r.passed for r in rows), sandwich, mono, ratio, rk)


# ---------------------------------------------------------------------------
# minimum-matching operator on a grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridFn:
    """Samples of a function on a uniform grid over ``[lo, hi]``."""

    lo: float
    hi: float
    values: np.ndarray

    @property
    def m(self) -> int:
        return int(self.values.size)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.m)


def apply_matching_operator(F: GridFn) -> GridFn:
    """``(V F)(x) = exp(-∫_{-x}^{hi} F)`` on a grid symmetric about 0, trapezoid rule."""
    if not math.isclose(F.lo, -F.hi):
        raise ValueError("grid must be symmetric about 0")
    v = F.values
    h = (F.hi - F.lo) / (v.size - 1)
    # tail[j] = ∫_{x_j}^{hi} F
    seg = 0.5 * h * (v[:-1] + v[1:])
    tail = np.zeros(v.size)
    tail[:-1] = np.cumsum(seg[::-1])[::-1]
    # -x_i is grid point m-1-i
    return GridFn(F.lo, F.hi, np.exp(-tail[::-1]))


@dataclass(frozen=True, eq=False)
class MatchingOperatorResult:
    lam: float
    m: int
    k_max: int
    from_zero: list = field(repr=False)
    from_one: list = field(repr=False)
    gaps: np.ndarray = field(repr=False)
    alpha_hat: float = float("nan")
    contracting: bool = False

    CSV_HEADER = ("lambda", "alpha_hat", "m", "k_max")

    def csv_row(self):
        return (self.lam, self.alpha_hat, self.m, self.k_max)


def estimate_alpha(gaps: np.ndarray, window: int = 20, floor: float = FLOAT_FLOOR) -> float:
    """Per-two-step ratio ``exp(2·slope)`` from a least-squares fit of ``log gap`` over the last ``window`` usable steps."""
    k = np.flatnonzero(gaps > floor)
    if k.size < 2:
        return float("nan")
    k = k[-window:]
    slope = np.polyfit(k.astype(float), np.log(gaps[k]), 1)[0]
    return float(math.exp(2.0 * slope))


def matching_operator_iterate(lam: float, m: int = 1024, k_max: int = 100) -> MatchingOperatorResult:
    """Iterate the matching operator from ``F ≡ 0`` and ``F ≡ 1`` and measure how fast they merge."""
    if m < 64:
        raise ValueError("grid size must be at least 64")
    if not lam > 0:
        raise ValueError("lam must be positive")
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    half = 0.5 * lam
    lo_f = GridFn(-half, half, np.zeros(m))
    hi_f = GridFn(-half, half, np.ones(m))
    zeros, ones = [lo_f], [hi_f]
    gaps = [float(np.max(np.abs(hi_f.values - lo_f.values)))]
    for _ in range(k_max):
        lo_f = apply_matching_operator(lo_f)
        hi_f = apply_matching_operator(hi_f)
        zeros.append(lo_f)
        ones.append(hi_f)
        gaps.append(float(np.max(np.abs(hi_f.values - lo_f.values))))
    gaps = np.array(gaps)
    alpha = estimate_alpha(gaps)
    return MatchingOperatorResult(float(lam), int(m), int(k_max), zeros, ones, gaps, alpha, bool(alpha < 1.0))
