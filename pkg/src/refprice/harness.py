"""Episode simulation, clairvoyant baselines, regret sweeps, and CSV output.

Regret is measured on expected revenue: noise perturbs only what the policy
observes, not how a posted price sequence is scored.  Episodes are
deterministic given (instance, noise, policy spec, T, r1, seed); the seed for
episode i of a run is base_seed + i, with the same seed list reused across the
horizons of a sweep.
"""

from __future__ import annotations

import functools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .curve import induced_references, solve_curve
from .model import (
    Instance,
    NoiseSpec,
    expected_demand,
    expected_demand_vec,
    true_policy_params,
)
from .policies import Policy, make_policy
from . import curve as curve_mod


class SimEnv:
    """One pricing episode: posts prices, draws shocks, tracks the reference.

    The reference follows the running-average dynamics, kept as an exact
    (sum, count) pair.  ``post`` returns the realized demand and advances one
    round; prices outside [0, p_max] are a hard failure.
    """

    def __init__(
        self,
        inst: Instance,
        noise: NoiseSpec,
        T: int,
        r1: float,
        rng: np.random.Generator,
        record: bool = True,
    ):
        if not (0.0 <= r1 <= inst.p_max):
            raise ValueError(f"r1 {r1} outside [0, {inst.p_max}]")
        self.inst = inst
        self.noise = noise
        self.T = T
        self.rng = rng
        self.t = 1
        self._count = 1
        self._total = r1
        self._r = r1
        self.record = record
        if record:
            self.prices = np.empty(T)
            self.refs = np.empty(T)
            self.demands = np.empty(T)

    @property
    def r(self) -> float:
        return self._r

    @property
    def p_max(self) -> float:
        return self.inst.p_max

    def post(self, price: float) -> float:
        if self.t > self.T:
            raise RuntimeError("episode horizon exhausted")
        expected = expected_demand(self.inst, price, self._r)
        demand = expected + self.noise.draw(self.rng)
        if self.record:
            i = self.t - 1
            self.prices[i] = price
            self.refs[i] = self._r
            self.demands[i] = demand
        self._total += price
        self._count += 1
        self._r = self._total / self._count
        self.t += 1
        return demand


@dataclass
class EpisodeRecord:
    """Per-round log of one episode plus totals and provenance."""

    policy_kind: str
    seed: int
    T: int
    r1: float
    instance: Instance
    t: np.ndarray
    price: np.ndarray
    reference: np.ndarray
    demand: np.ndarray
    expected_revenue: np.ndarray
    realized_revenue: np.ndarray
    expected_total: float
    realized_total: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if len(self.t) != self.T:
            raise ValueError("row count must equal the horizon")


def _finish_record(
    inst: Instance,
    policy: Policy,
    seed: int,
    T: int,
    r1: float,
    prices: np.ndarray,
    refs: np.ndarray,
    demands: np.ndarray,
) -> EpisodeRecord:
    expected = expected_demand_vec(inst, prices, refs)
    expected_rev = prices * expected
    realized_rev = prices * demands
    return EpisodeRecord(
        policy_kind=policy.kind,
        seed=seed,
        T=T,
        r1=r1,
        instance=inst,
        t=np.arange(1, T + 1),
        price=prices,
        reference=refs,
        demand=demands,
        expected_revenue=expected_rev,
        realized_revenue=realized_rev,
        expected_total=float(np.sum(expected_rev)),
        realized_total=float(np.sum(realized_rev)),
        meta=policy.meta(),
    )


def run_episode(
    inst: Instance,
    noise: NoiseSpec,
    policy: Union[dict, Policy],
    T: int,
    r1: float,
    seed: int,
) -> EpisodeRecord:
    """Simulate one episode.  ``policy`` is a config mapping (a fresh policy is
    built) or an already-built single-episode Policy."""
    rng = np.random.default_rng(seed)
    if isinstance(policy, dict):
        policy = make_policy(policy, inst, T, r1, rng)

    planned = policy.planned_prices()
    if planned is not None:
        prices = np.asarray(planned, dtype=float)
        if len(prices) != T:
            raise ValueError("planned price path length must equal the horizon")
        refs = induced_references(prices, 1, r1)
        demands = expected_demand_vec(inst, prices, refs) + noise.draw_array(rng, T)
        return _finish_record(inst, policy, seed, T, r1, prices, refs, demands)

    env = SimEnv(inst, noise, T, r1, rng, record=True)
    while env.t <= T:
        t = env.t
        price = policy.next_price(t, env.r)
        r_before = env.r
        demand = env.post(price)
        policy.observe(t, price, r_before, demand)
    return _finish_record(inst, policy, seed, T, r1, env.prices, env.refs, env.demands)


def learn_then_earn(
    inst: Instance,
    noise: NoiseSpec,
    T: int,
    r1: float,
    seed: int,
    t1_budget=None,
    ra=None,
    rb=None,
    c_t1: float = 1.0,
) -> EpisodeRecord:
    """One explore-then-exploit episode; phase metadata lands in the record."""
    spec = {"kind": "learn_then_earn", "t1_budget": t1_budget, "ra": ra, "rb": rb, "c_t1": c_t1}
    return run_episode(inst, noise, spec, T, r1, seed)


def baseline_kind(inst: Instance) -> str:
    """Whether the clairvoyant baseline is the exact optimum or the
    near-optimal curve (asymmetric reference effects)."""
    return "exact_optimum" if inst.symmetric else "near_optimal"


@functools.lru_cache(maxsize=128)
def _clairvoyant_cached(inst: Instance, r1: float, T: int) -> float:
    theta = true_policy_params(inst)
    if inst.symmetric:
        curve = solve_curve(theta, r1, 1, T, inst.p_max)
        return curve_mod.curve_value(inst, curve, r1)
    curve = solve_curve(theta, inst.p_max, 1, T, inst.p_max)
    return curve_mod.curve_value(inst, curve, r1)


def clairvoyant_value(inst: Instance, r1: float, T: int) -> float:
    """Total expected revenue of the clairvoyant curve policy.

    Symmetric effects: the curve from r1, which is the exact optimum.
    Asymmetric: the curve computed from p_max, evaluated from r1; see
    ``baseline_kind``."""
    return _clairvoyant_cached(inst, float(r1), int(T))


@dataclass
class RegretRecord:
    T: int
    n_seeds: int
    mean_regret: float
    stderr: float
    baseline_value: float
    policy_value_mean: float
    flagged: bool = False


def _episode_value(args) -> float:
    inst, noise, policy_spec, T, r1, seed = args
    return run_episode(inst, noise, policy_spec, T, r1, seed).expected_total


def regret_sweep(
    inst: Instance,
    noise: NoiseSpec,
    policy_spec: dict,
    T_list: Sequence[int],
    seeds: int,
    r1: float,
    base_seed: int = 0,
    threads: int = 1,
) -> tuple[list[RegretRecord], Optional[float]]:
    """Mean regret per horizon plus the fitted log-log slope.

    A record is flagged when its mean regret is negative beyond noise
    tolerance (possible against the near-optimal baseline); flagged or
    nonpositive horizons are excluded from the slope fit.
    """
    if len(T_list) == 0:
        raise ValueError("T_list must not be empty")
    if seeds < 1:
        raise ValueError("need at least one seed")
    records = []
    for T in T_list:
        v_star = clairvoyant_value(inst, r1, T)
        jobs = [(inst, noise, policy_spec, T, r1, base_seed + i) for i in range(seeds)]
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                values = list(pool.map(_episode_value, jobs))
        else:
            values = [_episode_value(j) for j in jobs]
        values = np.asarray(values)
        mean_value = float(np.mean(values))
        regret = v_star - mean_value
        stderr = float(np.std(values, ddof=1) / np.sqrt(seeds)) if seeds > 1 else 0.0
        flagged = regret < -1e-6 * abs(v_star)
        records.append(
            RegretRecord(
                T=int(T),
                n_seeds=seeds,
                mean_regret=regret,
                stderr=stderr,
                baseline_value=v_star,
                policy_value_mean=mean_value,
                flagged=flagged,
            )
        )
    return records, fit_loglog_slope(records)


def fit_loglog_slope(records: Sequence[RegretRecord]) -> Optional[float]:
    """OLS slope of ln(mean regret) on ln(T) over usable records."""
    pts = [(r.T, r.mean_regret) for r in records if r.mean_regret > 0 and not r.flagged]
    if len(pts) < 2:
        return None
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope


# ---------------------------------------------------------------------------
# CSV output (headers and layout are part of the external contract)
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_episodes_csv(records: Sequence[EpisodeRecord], path) -> None:
    lines = []
    for key, value in sorted(_episodes_meta(records).items()):
        lines.append(f"# {key}={value}")
    lines.append("episode,seed,t,price,reference,demand,expected_revenue,realized_revenue")
    for i, rec in enumerate(records):
        for j in range(rec.T):
            lines.append(
                ",".join(
                    [
                        str(i),
                        str(rec.seed),
                        str(int(rec.t[j])),
                        _fmt(rec.price[j]),
                        _fmt(rec.reference[j]),
                        _fmt(rec.demand[j]),
                        _fmt(rec.expected_revenue[j]),
                        _fmt(rec.realized_revenue[j]),
                    ]
                )
            )
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _episodes_meta(records: Sequence[EpisodeRecord]) -> dict:
    if not records:
        return {}
    rec = records[0]
    inst = rec.instance
    meta = {
        "policy": rec.policy_kind,
        "T": rec.T,
        "r1": _fmt(rec.r1),
        "episodes": len(records),
        "instance": f"a={inst.a!r} b={inst.b!r} eta_plus={inst.eta_plus!r} "
        f"eta_minus={inst.eta_minus!r} p_max={inst.p_max!r} p_ratio_bound={inst.p_ratio_bound!r}",
    }
    for key in ("t1_budget", "ra", "rb", "t2", "reset_rounds", "degenerate"):
        if key in rec.meta:
            meta[f"policy_{key}"] = rec.meta[key]
    return meta


def write_regret_csv(
    records: Sequence[RegretRecord],
    slope: Optional[float],
    path,
    extra_meta: Optional[dict] = None,
) -> None:
    lines = []
    meta = dict(extra_meta or {})
    for key, value in sorted(meta.items()):
        lines.append(f"# {key}={value}")
    lines.append("T,n_seeds,mean_regret,stderr,baseline_value,policy_value_mean,flagged")
    for r in records:
        lines.append(
            ",".join(
                [
                    str(r.T),
                    str(r.n_seeds),
                    _fmt(r.mean_regret),
                    _fmt(r.stderr),
                    _fmt(r.baseline_value),
                    _fmt(r.policy_value_mean),
                    str(int(r.flagged)),
                ]
            )
        )
    lines.append(f"# slope={_fmt(slope) if slope is not None else 'nan'}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def write_curve_csv(curve, path) -> None:
    lines = ["t,price,reference"]
    for i in range(len(curve.prices)):
        lines.append(
            ",".join([str(curve.t_start + i), _fmt(curve.prices[i]), _fmt(curve.refs[i])])
        )
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
