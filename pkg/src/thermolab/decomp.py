"""Orbit segments, Birkhoff averages, and lambda-decompositions.

A segment (x, n) is classified by the running averages of a nonnegative
weight along its orbit: it is Bad at threshold eta when the full average is
strictly below eta, and Good when every initial window average and (in the
two-sided case) every terminal window average is >= eta.  Ties at exactly
eta are Good.  The decomposition peels the largest Bad prefix first, then
the largest Bad suffix of the remainder; the certified middle is Good.

Core routines operate on plain sequences of weight values so they work
unchanged on torus orbits (floats) and symbolic words (ints / Fractions,
giving exact comparisons).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate
from typing import Optional, Sequence

import numpy as np

from .systems import DynSystem, LambdaFunction, Potential

MODES = ("two-sided", "one-sided-prefix", "one-sided-suffix")


@dataclass(frozen=True)
class OrbitSegment:
    """A base point plus a length: the orbit positions f^0 x .. f^{n-1} x."""

    system: DynSystem
    x: np.ndarray
    n: int


@dataclass
class SegmentClass:
    in_bad: bool
    in_good_two_sided: bool
    in_good_prefix: bool
    min_initial_avg: Optional[float]
    min_terminal_avg: Optional[float]
    degenerate: bool = False


@dataclass
class DecompositionResult:
    p: int
    g: int
    s: int
    eta: float
    mode: str

    def as_tuple(self):
        return (self.p, self.g, self.s)


def prefix_sums(values):
    """Partial sums S_0=0, S_1, ..., S_n; exact for int/Fraction inputs."""
    return [0] + list(accumulate(values))


def window_average(sums, a, b):
    """Average of values[a:b] from prefix sums; rejects empty windows."""
    if not (0 <= a < b <= len(sums) - 1):
        raise ValueError(f"empty or out-of-range window [{a}, {b})")
    return (sums[b] - sums[a]) / (b - a)


def lambda_trace(system, lam, x, n):
    """Values of lam along the orbit segment (x, n) as a float array."""
    if n == 0:
        return np.empty(0)
    block = system.orbit_block(np.atleast_2d(x), n)[0]
    return lam(block)


def phi_trace(system, phi, x, n):
    if n == 0:
        return np.empty(0)
    block = system.orbit_block(np.atleast_2d(x), n)[0]
    return phi(block)


def birkhoff_average(fn, seg: OrbitSegment, window=None):
    """Birkhoff average (1/(b-a)) sum_{i=a}^{b-1} fn(f^i x) over [a, b)."""
    a, b = (0, seg.n) if window is None else window
    values = lambda_trace(seg.system, fn, seg.x, seg.n) if isinstance(
        fn, (LambdaFunction, Potential)) else fn(
            seg.system.orbit_block(np.atleast_2d(seg.x), seg.n)[0])
    sums = prefix_sums(list(values))
    return window_average(sums, a, b)


# -- classification ---------------------------------------------------------


def classify_values(values, eta) -> SegmentClass:
    """Classify a segment from its weight values.

    in_bad iff the full average is < eta (strict).  in_good_two_sided iff
    every initial and every terminal window average is >= eta.  Length-0
    segments are flagged degenerate and count as Good, not Bad.
    """
    values = list(values)
    n = len(values)
    if n == 0:
        return SegmentClass(False, True, True, None, None, degenerate=True)
    sums = prefix_sums(values)
    total = sums[n]
    min_init = None
    min_term = None
    good_init = True
    good_term = True
    for k in range(1, n + 1):
        ai = sums[k] / k
        at = (total - sums[n - k]) / k
        if min_init is None or ai < min_init:
            min_init = ai
        if min_term is None or at < min_term:
            min_term = at
        if sums[k] < eta * k:
            good_init = False
        if total - sums[n - k] < eta * k:
            good_term = False
    in_bad = total < eta * n
    return SegmentClass(
        in_bad=in_bad,
        in_good_two_sided=good_init and good_term,
        in_good_prefix=good_init,
        min_initial_avg=float(min_init),
        min_terminal_avg=float(min_term),
    )


def classify_segment(lam, eta, seg: OrbitSegment) -> SegmentClass:
    return classify_values(lambda_trace(seg.system, lam, seg.x, seg.n), eta)


# -- decomposition -----------------------------------------------------------


class DecompositionError(RuntimeError):
    """Internal consistency failure: the certified middle was not Good."""


def decompose_values(values, eta, mode="two-sided") -> DecompositionResult:
    """Decompose a segment into (p, g, s) with p+g+s = n.

    two-sided: p is the largest k <= n with initial k-average < eta, then s
    is the largest Bad terminal window of the remainder.  one-sided-prefix
    forces s = 0; one-sided-suffix is the mirror with p = 0.  The middle is
    re-certified to be Good in the mode-appropriate sense.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    values = list(values)
    n = len(values)
    if n == 0:
        return DecompositionResult(0, 0, 0, eta, mode)
    sums = prefix_sums(values)
    total = sums[n]

    def largest_bad_prefix(limit):
        for k in range(limit, 0, -1):
            if sums[k] < eta * k:
                return k
        return 0

    def largest_bad_suffix(start, limit):
        # terminal windows of values[start:], window length k <= limit
        base = sums[n]
        for k in range(limit, 0, -1):
            if base - sums[n - k] < eta * k:
                return k
        return 0

    if mode == "one-sided-suffix":
        s = largest_bad_suffix(0, n)
        p, g = 0, n - s
    else:
        p = largest_bad_prefix(n)
        if mode == "one-sided-prefix":
            s, g = 0, n - p
        else:
            s = largest_bad_suffix(p, n - p)
            g = n - p - s

    mid = values[p:p + g]
    cls = classify_values(mid, eta)
    ok = {
        "two-sided": cls.in_good_two_sided,
        "one-sided-prefix": cls.in_good_prefix,
        "one-sided-suffix": cls.degenerate or cls.min_terminal_avg is None
        or cls.min_terminal_avg >= eta,
    }[mode]
    if not ok:
        raise DecompositionError(
            f"middle of length {g} failed G(eta) certification (mode={mode})")
    return DecompositionResult(p, g, s, eta, mode)


def decompose(lam, eta, seg: OrbitSegment, mode="two-sided") -> DecompositionResult:
    return decompose_values(lambda_trace(seg.system, lam, seg.x, seg.n), eta, mode)


def brute_force_decompose_values(values, eta, mode="two-sided") -> DecompositionResult:
    """Independent oracle: direct summation and division, scanning every
    split and checking each part against the displayed definitions."""
    values = list(values)
    n = len(values)
    if n == 0:
        return DecompositionResult(0, 0, 0, eta, mode)

    def is_bad(seq):
        return len(seq) > 0 and sum(seq) / len(seq) < eta

    def good_initial(seq):
        return all(sum(seq[:k]) / k >= eta for k in range(1, len(seq) + 1))

    def good_terminal(seq):
        m = len(seq)
        return all(sum(seq[m - k:]) / k >= eta for k in range(1, m + 1))

    if mode == "one-sided-suffix":
        s = 0
        for k in range(n, 0, -1):
            if is_bad(values[n - k:]):
                s = k
                break
        rest = values[:n - s]
        if not good_terminal(rest):
            raise DecompositionError("oracle middle not Good (suffix mode)")
        return DecompositionResult(0, n - s, s, eta, mode)

    p = 0
    for k in range(n, 0, -1):
        if is_bad(values[:k]):
            p = k
            break
    if mode == "one-sided-prefix":
        if not good_initial(values[p:]):
            raise DecompositionError("oracle middle not Good (prefix mode)")
        return DecompositionResult(p, n - p, 0, eta, mode)
    s = 0
    for k in range(n - p, 0, -1):
        if is_bad(values[n - k:]):
            s = k
            break
    mid = values[p:n - s]
    if not (good_initial(mid) and good_terminal(mid)):
        raise DecompositionError("oracle middle not Good (two-sided)")
    return DecompositionResult(p, n - p - s, s, eta, mode)


# -- products ----------------------------------------------------------------


def product_system(s1: DynSystem, s2: DynSystem) -> DynSystem:
    """Cartesian product acting coordinatewise; the sup metric on stacked
    coordinates is exactly the max of the component metrics."""
    return DynSystem(
        kind="product",
        dimension=s1.dimension + s2.dimension,
        components=(s1, s2),
        label=f"({s1.label})x({s2.label})",
    )


def product_lambda(lam: LambdaFunction, d1: int, lam2: Optional[LambdaFunction] = None):
    """Lift lambda to the product: (x, y) -> lambda(x) * lambda(y).

    The zero set is (lambda^{-1}(0) x X) u (X x lambda^{-1}(0)); it is not a
    ball, so no zero_ball descriptor is attached.
    """
    lam2 = lam2 or lam

    def fn(X):
        return lam(X[:, :d1]) * lam2(X[:, d1:])

    return LambdaFunction(fn=fn, sup_bound=lam.sup_bound * lam2.sup_bound,
                          label=f"product({lam.label})")


def product_potential(phi: Potential, d1: int, phi2: Optional[Potential] = None):
    phi2 = phi2 or phi

    def fn(X):
        return phi(X[:, :d1]) + phi2(X[:, d1:])

    return Potential(fn=fn, label=f"sum({phi.label})")
