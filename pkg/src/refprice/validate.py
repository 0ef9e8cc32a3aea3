"""Cross-oracle consistency checks backing the ``validate`` CLI command.

Each check pits a fast implementation against an independent slow oracle:
dense linear solve vs the O(T) recursion, binary search vs linear scan,
closed-form reset plans vs brute force, the one-point gradient estimate vs the
analytic derivative, and the optimality-condition residual of solved curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import (
    FocSystem,
    dense_solve,
    foc_residual,
    linear_scan_markdown_start,
    solve_curve,
    solve_segment,
)
from .model import Instance, PolicyParams, true_policy_params
from .policies import reset_ref

FOC_TOL = 1e-8
ORACLE_TOL = 1e-8
RESET_TOL = 1e-9


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


def random_instance(rng: np.random.Generator, symmetric: bool = True) -> Instance:
    """A random instance satisfying interior-maximizer and nonnegative-demand
    constraints, with moderate headroom above b/(2a)."""
    a = rng.uniform(0.5, 1.5)
    eta_minus = rng.uniform(0.02, 0.95) * a
    eta_plus = eta_minus if symmetric else rng.uniform(0.02, 0.95) * a
    p_max = rng.uniform(0.6, 2.0)
    lo = (a + eta_minus) * p_max
    hi = 2.0 * a * p_max
    b = lo + rng.uniform(0.02, 0.9) * (hi - lo)
    ratio = b / (2.0 * a)
    p_ratio_bound = ratio + rng.uniform(0.0, 0.3) * (p_max - ratio)
    return Instance(
        a=a,
        b=b,
        eta_plus=eta_plus,
        eta_minus=eta_minus,
        p_max=p_max,
        p_ratio_bound=p_ratio_bound,
    )


def random_theta(rng: np.random.Generator, p_max: float) -> PolicyParams:
    """A policy parameter in the well-posed region (c2 at least p_max/2)."""
    return PolicyParams(rng.uniform(0.02, 0.4), rng.uniform(0.5, 0.75) * p_max)


def check_dense_vs_recursion(rng: np.random.Generator, n_cases: int = 50) -> CheckResult:
    worst = 0.0
    for _ in range(n_cases):
        p_max = rng.uniform(0.6, 2.0)
        theta = random_theta(rng, p_max)
        horizon = int(rng.integers(2, 201))
        markdown_start = int(rng.integers(1, horizon + 1))
        r_md = rng.uniform(0.0, p_max)
        system = FocSystem(
            markdown_start=markdown_start, horizon=horizon, theta=theta, r_md=r_md
        )
        if system.dominance_margin() <= 0.0:
            continue
        dense = dense_solve(system)
        fast, _ = solve_segment(theta, r_md, markdown_start, horizon)
        worst = max(worst, float(np.max(np.abs(dense - fast))))
    return CheckResult(
        "dense_vs_recursion", worst <= ORACLE_TOL, f"max abs diff {worst:.3e}"
    )


def check_binary_vs_linear(
    rng: np.random.Generator, n_cases: int = 100, max_T: int = 500
) -> CheckResult:
    mismatches = 0
    for _ in range(n_cases):
        inst = random_instance(rng, symmetric=bool(rng.integers(0, 2)))
        theta = true_policy_params(inst)
        horizon = int(rng.integers(5, max_T + 1))
        r_start = rng.uniform(0.0, inst.p_max)
        fast = solve_curve(theta, r_start, 1, horizon, inst.p_max)
        scan = linear_scan_markdown_start(theta, r_start, 1, horizon, inst.p_max)
        if fast.markdown_start != scan:
            mismatches += 1
    return CheckResult(
        "binary_vs_linear_scan", mismatches == 0, f"{mismatches} mismatches in {n_cases} cases"
    )


def check_foc_residual(
    rng: np.random.Generator, horizons=(100, 1000, 10000), n_cases: int = 5
) -> CheckResult:
    worst = 0.0
    for horizon in horizons:
        for _ in range(n_cases):
            inst = random_instance(rng)
            theta = true_policy_params(inst)
            r_start = rng.uniform(0.0, inst.p_max)
            curve = solve_curve(theta, r_start, 1, horizon, inst.p_max)
            worst = max(worst, foc_residual(curve, theta))
    return CheckResult("foc_residual", worst <= FOC_TOL, f"max residual {worst:.3e}")


def brute_force_reset(t: int, r_t: float, r_target: float, p_max: float, n_max: int = 10000):
    """Smallest N such that N extreme prices plus one in-range correction hit
    the target average exactly.  Exhaustive oracle for reset plans."""
    if abs(r_t - r_target) <= RESET_TOL:
        return 0
    eps = 1e-12 * max(1.0, p_max, t * max(r_t, r_target))
    extreme = p_max if r_t < r_target else 0.0
    for n in range(n_max + 1):
        final = (t + n + 1) * r_target - t * r_t - n * extreme
        if -eps <= final <= p_max + eps:
            return n
    return None


def check_reset_brute_force(rng: np.random.Generator, n_cases: int = 1000) -> CheckResult:
    bad = 0
    worst_err = 0.0
    for _ in range(n_cases):
        p_max = rng.uniform(0.5, 2.0)
        t = int(rng.integers(1, 500))
        r_t = rng.uniform(0.0, p_max)
        r_target = rng.uniform(0.05 * p_max, 0.95 * p_max)
        plan, rounds = reset_ref(t, r_t, r_target, p_max)
        oracle_n = brute_force_reset(t, r_t, r_target, p_max)
        expect_rounds = 0 if oracle_n == 0 and abs(r_t - r_target) <= RESET_TOL else oracle_n + 1
        if abs(r_t - r_target) <= RESET_TOL:
            expect_rounds = 0
        if oracle_n is None or rounds != expect_rounds:
            bad += 1
            continue
        total = t * r_t + sum(plan)
        achieved = total / (t + len(plan)) if plan else r_t
        worst_err = max(worst_err, abs(achieved - r_target))
    passed = bad == 0 and worst_err <= RESET_TOL
    return CheckResult(
        "reset_brute_force",
        passed,
        f"{bad} plan mismatches, max target error {worst_err:.3e}",
    )


def check_gradient_unbiased(
    rng: np.random.Generator, n_points: int = 10, n_draws: int = 10**6
) -> CheckResult:
    """Monte-Carlo mean of the one-point gradient estimate vs the analytic
    revenue derivative, under bounded and gaussian shocks."""
    worst_z = 0.0
    for _ in range(n_points):
        inst = random_instance(rng, symmetric=bool(rng.integers(0, 2)))
        r = rng.uniform(inst.p_ratio_bound, inst.p_max)
        d = 0.5 * (r - inst.p_ratio_bound)
        p = rng.uniform(d, r - d)
        target = inst.b + inst.eta_plus * r - 2.0 * (inst.a + inst.eta_plus) * p
        for shocks in (
            rng.uniform(-0.2, 0.2, size=n_draws),
            rng.normal(0.0, 0.2, size=n_draws),
        ):
            kappa = rng.integers(0, 2, size=n_draws) * 2.0 - 1.0
            pt = p + kappa * d
            demand = inst.b - inst.a * pt + inst.eta_plus * (r - pt) + shocks
            g = pt * demand * kappa / d
            se = float(np.std(g, ddof=1) / math.sqrt(n_draws))
            z = abs(float(np.mean(g)) - target) / se
            worst_z = max(worst_z, z)
    return CheckResult("gradient_unbiased", worst_z <= 3.0, f"max |z| {worst_z:.2f} (limit 3)")


def check_curve_lipschitz(rng: np.random.Generator, n_cases: int = 50) -> CheckResult:
    """Empirical curve sensitivity to the policy parameter.

    The bound 10 * p_max * ||dtheta|| * (1 + ln(T/t1)) has an unspecified
    constant, so violations are reported, never asserted.
    """
    violations = 0
    worst_ratio = 0.0
    for _ in range(n_cases):
        inst = random_instance(rng)
        theta = true_policy_params(inst)
        horizon = int(rng.integers(30, 300))
        r_start = rng.uniform(0.0, inst.p_max)
        thetas = []
        for _ in range(2):
            c1 = min(max(theta.c1 + rng.uniform(-0.05, 0.05), 0.0), 0.45)
            c2 = max(theta.c2 + rng.uniform(-0.05, 0.05) * inst.p_max, 1e-3)
            thetas.append(PolicyParams(c1, c2))
        curves = [solve_curve(th, r_start, 1, horizon, inst.p_max) for th in thetas]
        diff = float(np.max(np.abs(curves[0].prices - curves[1].prices)))
        dtheta = math.hypot(thetas[0].c1 - thetas[1].c1, thetas[0].c2 - thetas[1].c2)
        if dtheta == 0.0:
            continue
        bound = 10.0 * inst.p_max * dtheta * (1.0 + math.log(horizon))
        worst_ratio = max(worst_ratio, diff / bound)
        if diff > bound:
            violations += 1
    return CheckResult(
        "curve_lipschitz_logged",
        True,
        f"{violations} bound violations in {n_cases} cases (worst ratio {worst_ratio:.2f}); informational",
    )


def run_all(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        check_dense_vs_recursion(rng),
        check_binary_vs_linear(rng),
        check_foc_residual(rng),
        check_reset_brute_force(rng),
        check_gradient_unbiased(rng),
        check_curve_lipschitz(rng),
    ]
