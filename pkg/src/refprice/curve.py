"""Markdown price-curve computation.

A curve over rounds [t_start, T] holds the ceiling price p_max up to some
round ``markdown_start`` and then follows the first-order optimality
condition

    p_t = c2 + c1 * (r_t + sum_{s > t} p_s / s),      t in [markdown_start, T],

where r_t is the running-average reference induced by the curve itself.  The
segment is the solution of a dense linear system; it is computed here in O(T)
by rolling the equivalent one-step rule

    p_{t+1} = p_t - c1 * r_t / (t + 1 + c1)

forward from an initial price chosen so the final-round condition
p_T = c1 * r_T + c2 holds.  ``markdown_start`` is located by binary search on
the feasibility of that initial price.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import Instance, PolicyParams, expected_demand_vec

# Initial prices within this distance of the [0, p_max] boundary still count
# as feasible; they are snapped onto the boundary.
FEASIBILITY_TOL = 1e-12


class SolverError(RuntimeError):
    """The curve system is outside the solver's guaranteed regime."""


def harmonic_range(lo: int, hi: int) -> float:
    """Sum of 1/s for s in [lo, hi]; zero when the range is empty."""
    if hi < lo:
        return 0.0
    return float(np.sum(1.0 / np.arange(lo, hi + 1, dtype=float)))


def dominance_margin(c1: float, markdown_start: int, horizon: int) -> float:
    """1 - c1 * sum_{s=markdown_start+1}^{horizon} 1/s; positive iff the curve
    system is strictly diagonally dominant."""
    return 1.0 - c1 * harmonic_range(markdown_start + 1, horizon)


@dataclass
class PriceCurve:
    """A price path over rounds [t_start, T] with its induced references."""

    t_start: int
    markdown_start: int
    prices: np.ndarray
    refs: np.ndarray
    n_probes: int = 0

    def __post_init__(self) -> None:
        self.prices = np.asarray(self.prices, dtype=float)
        self.refs = np.asarray(self.refs, dtype=float)
        if self.prices.shape != self.refs.shape:
            raise ValueError("prices and refs must have equal length")
        if len(self.prices) and not (self.t_start <= self.markdown_start <= self.horizon):
            raise ValueError("markdown_start outside [t_start, horizon]")

    @property
    def horizon(self) -> int:
        return self.t_start + len(self.prices) - 1

    def price_at(self, t: int) -> float:
        return float(self.prices[t - self.t_start])


@dataclass(frozen=True)
class FocSystem:
    """Dense form of the optimality conditions on [markdown_start, horizon].

    Row/column k corresponds to round s_k = markdown_start + k; off-diagonal
    entry (i, j) is -c1 / s_max(i,j) and the right-hand side is
    c1 * markdown_start * r_md / s_k + c2.
    """

    markdown_start: int
    horizon: int
    theta: PolicyParams
    r_md: float

    @property
    def n(self) -> int:
        return self.horizon - self.markdown_start + 1

    def rounds(self) -> np.ndarray:
        return np.arange(self.markdown_start, self.horizon + 1, dtype=float)

    def matrix(self) -> np.ndarray:
        s = self.rounds()
        a = -self.theta.c1 / np.maximum.outer(s, s)
        np.fill_diagonal(a, 1.0)
        return a

    def rhs(self) -> np.ndarray:
        s = self.rounds()
        return self.theta.c1 * self.markdown_start * self.r_md / s + self.theta.c2

    def dominance_margin(self) -> float:
        return dominance_margin(self.theta.c1, self.markdown_start, self.horizon)


def dense_solve(system: FocSystem) -> np.ndarray:
    """Solve the dense system directly.  Test oracle; O(n^3), keep n small."""
    if system.dominance_margin() <= 0.0:
        raise SolverError("system is not strictly diagonally dominant")
    return np.linalg.solve(system.matrix(), system.rhs())


def segment_initial_price(
    theta: PolicyParams, r_md: float, markdown_start: int, horizon: int
) -> float:
    """Initial price of the optimality segment on [markdown_start, horizon].

    Every quantity along the one-step rule is affine in the unknown initial
    price, so one forward pass with coefficient pairs pins it from the
    final-round condition p_T = c1*r_T + c2.
    """
    c1, c2 = theta.c1, theta.c2
    if markdown_start == horizon:
        return c1 * r_md + c2
    if dominance_margin(c1, markdown_start, horizon) <= 0.0:
        raise SolverError(
            "curve system on [%d, %d] is not diagonally dominant (c1=%g)"
            % (markdown_start, horizon, c1)
        )
    # p_t = pa*p0 + pb, r_t = ra*p0 + rb as functions of the initial price p0.
    pa, pb = 1.0, 0.0
    ra, rb = 0.0, r_md
    for t in range(markdown_start, horizon):
        step = c1 / (t + 1.0 + c1)
        pa, pb, ra, rb = (
            pa - step * ra,
            pb - step * rb,
            (t * ra + pa) / (t + 1.0),
            (t * rb + pb) / (t + 1.0),
        )
    denom = pa - c1 * ra
    if abs(denom) < 1e-12:
        raise SolverError("degenerate final-round condition")
    return (c1 * rb + c2 - pb) / denom


def solve_segment(
    theta: PolicyParams, r_md: float, markdown_start: int, horizon: int
) -> tuple[np.ndarray, np.ndarray]:
    """O(T) solution of the optimality conditions on [markdown_start, horizon].

    Returns (prices, refs) with refs[0] = r_md: the one-step rule rolled
    forward from the initial price that meets the final-round condition.
    """
    if markdown_start > horizon:
        raise ValueError("markdown_start must not exceed the horizon")
    c1, c2 = theta.c1, theta.c2
    n = horizon - markdown_start + 1
    if n == 1:
        p = c1 * r_md + c2
        return np.array([p]), np.array([r_md])
    p0 = segment_initial_price(theta, r_md, markdown_start, horizon)

    prices = np.empty(n)
    refs = np.empty(n)
    p, r = p0, r_md
    total = markdown_start * r_md
    for i, t in enumerate(range(markdown_start, horizon + 1)):
        prices[i] = p
        refs[i] = r
        if t == horizon:
            break
        p = p - c1 * r / (t + 1.0 + c1)
        total += prices[i]
        r = total / (t + 1.0)
    # Final round satisfies p_T = c1*r_T + c2 by construction of p0; assign the
    # closed form so the terminal identity holds to the last bit.
    prices[-1] = c1 * refs[-1] + c2
    return prices, refs


def curve_from_markdown_start(
    theta: PolicyParams,
    r_start: float,
    t_start: int,
    markdown_start: int,
    horizon: int,
    p_max: float,
) -> Optional[PriceCurve]:
    """Curve that holds p_max before ``markdown_start`` and then follows the
    optimality segment.  Returns None when the segment's initial price falls
    outside [0, p_max] (the plateau would have to be longer)."""
    if not (1 <= t_start <= markdown_start <= horizon):
        raise ValueError("need 1 <= t_start <= markdown_start <= horizon")
    if not (0.0 <= r_start <= p_max + FEASIBILITY_TOL):
        raise ValueError(f"r_start {r_start} outside [0, {p_max}]")
    r_md = (t_start * r_start + (markdown_start - t_start) * p_max) / markdown_start
    seg_prices, seg_refs = solve_segment(theta, r_md, markdown_start, horizon)
    p0 = seg_prices[0]
    if p0 < -FEASIBILITY_TOL or p0 > p_max + FEASIBILITY_TOL:
        return None
    seg_prices[0] = min(max(p0, 0.0), p_max)

    n_plateau = markdown_start - t_start
    prices = np.concatenate([np.full(n_plateau, p_max), seg_prices])
    if n_plateau:
        t = np.arange(t_start, markdown_start, dtype=float)
        plateau_refs = (t_start * r_start + (t - t_start) * p_max) / t
        refs = np.concatenate([plateau_refs, seg_refs])
    else:
        refs = seg_refs
    return PriceCurve(t_start=t_start, markdown_start=markdown_start, prices=prices, refs=refs)


def solve_curve(
    theta: PolicyParams,
    r_start: float,
    t_start: int,
    horizon: int,
    p_max: float,
    cross_check: bool = False,
) -> PriceCurve:
    """Find the smallest feasible markdown start by binary search and return
    the full curve.

    Feasibility is monotone in the markdown start for valid parameters; with
    ``cross_check`` the result is verified against an exhaustive linear scan
    (debug aid, O(T^2)).
    """
    if t_start > horizon:
        raise ValueError("t_start must not exceed the horizon")
    if not (0.0 <= r_start <= p_max + FEASIBILITY_TOL):
        raise ValueError(f"r_start {r_start} outside [0, {p_max}]")
    probes = 0
    cache: dict[int, bool] = {}

    def feasible(t_md: int) -> bool:
        nonlocal probes
        if t_md not in cache:
            probes += 1
            r_md = (t_start * r_start + (t_md - t_start) * p_max) / t_md
            try:
                p0 = segment_initial_price(theta, r_md, t_md, horizon)
                cache[t_md] = -FEASIBILITY_TOL <= p0 <= p_max + FEASIBILITY_TOL
            except SolverError:
                # Far below the true markdown start the system can lose
                # diagonal dominance; those rounds cannot start the markdown.
                cache[t_md] = False
        return cache[t_md]

    lo, hi = t_start, horizon
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            hi = mid
        else:
            lo = mid + 1
    if not feasible(lo):
        raise SolverError(
            "no feasible markdown start; the final-round case should always be feasible"
        )
    curve = curve_from_markdown_start(theta, r_start, t_start, lo, horizon, p_max)
    assert curve is not None
    curve.n_probes = probes

    if cross_check:
        scan = linear_scan_markdown_start(theta, r_start, t_start, horizon, p_max)
        if scan != curve.markdown_start:
            raise SolverError(
                f"feasibility is not monotone: binary search found {curve.markdown_start}, "
                f"linear scan found {scan}"
            )
    return curve


def linear_scan_markdown_start(
    theta: PolicyParams, r_start: float, t_start: int, horizon: int, p_max: float
) -> int:
    """Smallest feasible markdown start by exhaustive scan (test oracle)."""
    for t_md in range(t_start, horizon + 1):
        try:
            if curve_from_markdown_start(theta, r_start, t_start, t_md, horizon, p_max) is not None:
                return t_md
        except SolverError:
            continue
    raise SolverError("no feasible markdown start found by linear scan")


def induced_references(prices: np.ndarray, t_start: int, r_start: float) -> np.ndarray:
    """Running-average references along a given price path, r[0] = r_start."""
    prices = np.asarray(prices, dtype=float)
    n = len(prices)
    t = np.arange(t_start, t_start + n, dtype=float)
    sums = t_start * r_start + np.concatenate([[0.0], np.cumsum(prices[:-1])])
    return sums / t


def curve_value(inst: Instance, curve: PriceCurve, r_actual: float) -> float:
    """Total expected revenue of posting the curve's prices starting from
    reference ``r_actual`` (which may differ from the curve's own start)."""
    if len(curve.prices) == 0:
        return 0.0
    refs = induced_references(curve.prices, curve.t_start, r_actual)
    demand = expected_demand_vec(inst, curve.prices, refs)
    return float(np.sum(curve.prices * demand))


def foc_residual(curve: PriceCurve, theta: PolicyParams) -> float:
    """Largest violation of p_t = c2 + c1*(r_t + sum_{s>t} p_s/s) on the
    markdown segment [markdown_start, T]."""
    i0 = curve.markdown_start - curve.t_start
    prices = curve.prices[i0:]
    refs = curve.refs[i0:]
    s = np.arange(curve.markdown_start, curve.horizon + 1, dtype=float)
    ratios = prices / s
    tail = np.concatenate([np.cumsum(ratios[::-1])[::-1][1:], [0.0]])
    resid = prices - theta.c2 - theta.c1 * (refs + tail)
    return float(np.max(np.abs(resid)))
