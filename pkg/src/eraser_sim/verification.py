"""Built-in grid audits behind ``eraser-sim verify``.

Each check returns its worst deviation together with the tolerance it was
held to.  ``perturb`` is a negative-control hook: it is added to every
simulated quantity before comparison, so any non-zero value large against
the tolerances must make the suite fail.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .correlations import (
    conditioned_fringe,
    corrected_g2_grid,
    g1_grid,
    phase_grid,
    sample_events,
    two_particle_visibility,
    visibility_from_counts,
)
from .experiments import eraser_branches, coherence_dataset, filtered_biphoton, run_conditional, run_conventional, run_double_partial
from .measures import closed_form_suite, concurrence, double_partial_closed_form, predictability, visibility_analytic
from .optics import prepare_biphoton
from .qstate import PI_B, DeviceId

T_GRID = tuple(float(x) for x in np.linspace(0.0, 1.0, 21))
M_GRID = tuple(float(x) for x in np.linspace(0.0, 1.0, 11))
M_GRID_FINE = T_GRID
HEADLINE_T = (0.1, 0.25, 0.5, 0.75, 0.9)
FIG3_T = (0.1, 0.5, 0.9)
MC_RUNS = 100
MC_SAMPLES = 100_000
MC_REQUIRED = 99


@dataclass(frozen=True)
class CheckResult:
    id: str
    description: str
    passed: bool
    worst: float
    tol: float
    detail: str
    seconds: float

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "description": self.description,
            "passed": self.passed,
            "worst": self.worst,
            "tol": self.tol,
            "detail": self.detail,
            "seconds": self.seconds,
        }


@dataclass(frozen=True)
class Check:
    id: str
    description: str
    fn: Callable[[float], tuple[bool, float, float, str]]

    def run(self, perturb: float = 0.0) -> CheckResult:
        start = time.perf_counter()
        passed, worst, tol, detail = self.fn(perturb)
        return CheckResult(self.id, self.description, bool(passed), float(worst), float(tol),
                           detail, time.perf_counter() - start)


def _within(deviations: Sequence[float], tol: float, what: str) -> tuple[bool, float, float, str]:
    worst = max(deviations, default=0.0)
    return worst <= tol, worst, tol, f"max |{what}| = {worst:.3g} over {len(deviations)} points"


def _rhos(m_grid=M_GRID):
    for t in T_GRID:
        for m in m_grid:
            yield t, m, filtered_biphoton(t, m)[0]


# ---------------------------------------------------------------------------


def check_erasure_equality(d: float):
    devs = []
    for t in T_GRID:
        r = run_conventional(t, 1.0)
        P, C = r.simulated.P + d, r.simulated.C + d
        devs.append(abs(P**2 + C**2 - 1.0))
    return _within(devs, 1e-12, "P^2 + C^2 - 1")


def check_conditional_complementarity(d: float):
    devs = []
    for t in T_GRID:
        for tb in T_GRID:
            r = run_conditional(t, tb, 1.0)
            if r.degenerate:
                continue
            P, C = r.simulated.P_cond + d, r.simulated.C_cond + d
            devs.append(abs(P**2 + C**2 - 1.0))
    return _within(devs, 1e-10, "P_cond^2 + C_cond^2 - 1")


def check_conditional_headline(d: float):
    devs, gaps = [], []
    for t in HEADLINE_T:
        r = run_conditional(t, t, 1.0)
        sim = r.simulated
        v = sim.V_QE_cond + d
        devs.append(abs(v - 1.0) / 1e-10)
        devs.append(abs(sim.S + d - 2 * t / (1 + t)) / 1e-12)
        devs.append(abs(r.extras["failure_probability"] + d - (1 - t) / (1 + t)) / 1e-12)
        devs.append(abs(r.extras["failure_probability"] - sim.P) / 1e-12)
        gaps.append(v - math.sqrt(1 - sim.P**2))
    worst = max(devs)
    ok = worst <= 1.0 and min(gaps) > 0
    return ok, worst, 1.0, f"worst deviation / tolerance = {worst:.3g}; min V_cond - sqrt(1-P^2) = {min(gaps):.3g}"


def check_success_concurrence_bound(d: float):
    over, eq_dev, strict = [], [], []
    for t in T_GRID:
        for tb in T_GRID:
            r = run_conditional(t, tb, 1.0)
            if r.degenerate:
                continue
            sim = r.simulated
            lhs, C = sim.S * (sim.C_cond + d), sim.C
            over.append(max(0.0, lhs - C))
            if tb == 1.0:
                eq_dev.append(abs(lhs - C))
            elif t > 0:
                strict.append(C - lhs)
    worst = max(over + eq_dev)
    ok = worst <= 1e-12 and min(strict) > 1e-12
    return ok, worst, 1e-12, f"max violation/equality gap {worst:.3g}; min strict gap {min(strict):.3g}"


def check_wootters(d: float):
    devs = []
    for t, m, rho in _rhos():
        devs.append(abs(concurrence(rho) + d - 2 * m * math.sqrt(t) / (1 + t)))
    return _within(devs, 1e-9, "C - 2M sqrt(t)/(1+t)")


def check_two_particle_visibility(d: float):
    devs = []
    for t, m, rho in _rhos():
        v12 = two_particle_visibility(rho) + d
        devs.append(max(abs(v12 - concurrence(rho)), abs(v12 - 2 * m * math.sqrt(t) / (1 + t))))
    return _within(devs, 1e-9, "V12 - C")


def check_mixed_complementarity(d: float):
    devs = []
    for t, m, rho in _rhos(M_GRID_FINE):
        P, C = predictability(rho) + d, concurrence(rho)
        devs.append(abs(C**2 + P**2 - (P**2 + m**2 * (1 - P**2))))
    for row in coherence_dataset(T_GRID, 0.5):
        t = row["t"]
        P = (1 - t) / (1 + t)
        devs.append(abs(row["C_sq_plus_P_sq"] + d - (P**2 + 0.25 * (1 - P**2))))
        devs.append(abs(row["P_sq"] - P**2))
        devs.append(abs(row["C_sq"] - t / (1 + t) ** 2))
    return _within(devs, 1e-12, "C^2 + P^2 - P^2 - M^2(1-P^2)")


def check_conventional_mixed_bound(d: float):
    devs = []
    for t, m, rho in _rhos():
        v, P = conditioned_fringe(rho) + d, predictability(rho)
        devs.append(abs(v - 2 * m * math.sqrt(t) / (1 + t)))
        devs.append(abs(v - m * math.sqrt(1 - P**2)))
    return _within(devs, 1e-10, "V_QE - M sqrt(1-P^2)")


def check_double_partial(d: float):
    devs = []
    for t1 in FIG3_T:
        for t2 in FIG3_T:
            r = run_double_partial(t1, t2)
            ex = r.extras
            cf = double_partial_closed_form(t1, t2)
            K = ex["knowledge"] + d
            devs += [
                abs(K - (1 - t1) / (1 + t1)),
                abs(ex["stage1_success"] - (1 + t1) / 2),
                abs(ex["V_QE_stage1"] ** 2 - (1 - K**2)),
                abs(ex["intermediate_concurrence"] - math.sqrt(t1)),
                abs(ex["joint_success"] - (t1 + t2) / 2),
                abs(ex["V_final"] - cf["V_final"]),
            ]
            if t1 == t2:
                devs.append(abs(ex["V_final"] + d - 1.0))
    return _within(devs, 1e-10, "two-device quantity - closed form")


def mc_coverage(t: float, M: float, runs: int = MC_RUNS, n: int = MC_SAMPLES, shift: float = 0.0) -> int:
    """How many of ``runs`` seeded estimates land within 3 stderr of the truth."""
    rho, _ = filtered_biphoton(t, M)
    truth = closed_form_suite(t, 1.0, M).V_QE
    hits = 0
    for seed in range(runs):
        est, se = visibility_from_counts(sample_events(rho, n, seed))
        hits += abs(est + shift - truth) < 3 * se
    return hits


def check_monte_carlo(d: float):
    shift = d * 1e6 if d else 0.0
    bell = mc_coverage(1.0, 1.0, shift=shift)
    quarter = mc_coverage(0.25, 1.0, shift=shift)
    worst = MC_RUNS - min(bell, quarter)
    ok = min(bell, quarter) >= MC_REQUIRED
    return ok, worst, MC_RUNS - MC_REQUIRED, f"within 3 stderr: Bell {bell}/{MC_RUNS}, t=1/4 {quarter}/{MC_RUNS}"


def check_no_coincidence_flat(d: float):
    phases = phase_grid(64)
    devs = []
    for t, m, rho in _rhos(M_GRID_FINE):
        devs.append(visibility_analytic(rho) + d)
        fringe = g1_grid(rho, "sigma", phases)
        devs.append((fringe.max() - fringe.min()) / (fringe.max() + fringe.min()))
    return _within(devs, 1e-12, "sigma contrast")


def check_corrected_g2_positive(d: float):
    phases = phase_grid(64)
    worst = 0.0
    states = [rho for _, _, rho in _rhos()]
    states += [_conditioned(t, tb) for t in (0.25, 0.5) for tb in (0.25, 0.5)]
    for rho in states:
        worst = max(worst, -(corrected_g2_grid(rho, phases, phases).min() - d))
    return worst <= 1e-12, worst, 1e-12, f"most negative corrected G2 = {-worst:.3g}"


def _conditioned(t, tb):
    rho, _ = filtered_biphoton(t, 1.0)
    return eraser_branches(rho, DeviceId.M1, PI_B, tb)[0].state


def check_prepare_matches_pipeline(d: float):
    devs = []
    for t, m, rho in _rhos():
        devs.append(float(np.abs(prepare_biphoton(t, m).matrix - rho.matrix).max()) + d)
    return _within(devs, 1e-12, "closed-form state - generated state")


def check_violation_certificate(d: float):
    gaps = []
    for t in T_GRID[1:-1]:
        r = run_conditional(t, t, 1.0)
        a = r.audit("conventional-bound-exceeded")
        general = r.audit("conditional-erasure-relation")
        gaps.append(a.margin - d if general.satisfied else -1.0)
    worst = min(gaps)
    return worst > 0, worst, 0.0, f"min V_cond - sqrt(1-P^2) = {worst:.3g} over {len(gaps)} points"


def check_oracle_agreement(d: float):
    devs, unsatisfied = [], 0
    reports = [run_conventional(t, m) for t in T_GRID for m in M_GRID]
    reports += [run_conditional(t, tb, m) for t in T_GRID for tb in T_GRID for m in (1.0, 0.5)]
    reports += [run_double_partial(a, b) for a in T_GRID[::4] for b in T_GRID[::4]]
    for r in reports:
        unsatisfied += not r.all_satisfied
        if r.degenerate or r.closed_form is None:
            continue
        for key in r.simulated.KEYS:
            a, b = getattr(r.simulated, key), getattr(r.closed_form, key)
            if a is not None and b is not None:
                devs.append(abs(a + d - b))
    ok, worst, tol, detail = _within(devs, 1e-9, "simulated - closed form")
    return ok and unsatisfied == 0, worst, tol, f"{detail}; {unsatisfied} of {len(reports)} reports with failed audits"


CHECKS: tuple[Check, ...] = (
    Check("erasure-equality", "P^2 + C^2 = 1 for the pure filtered biphoton", check_erasure_equality),
    Check("conditional-complementarity", "P_cond^2 + C_cond^2 = 1 on the conditioned state", check_conditional_complementarity),
    Check("conditional-eraser-headline", "full visibility after silent device at t_bs = t", check_conditional_headline),
    Check("success-concurrence-bound", "S C_cond <= C, equality only at t_bs = 1", check_success_concurrence_bound),
    Check("wootters-oracle", "numerical concurrence = 2M sqrt(t)/(1+t)", check_wootters),
    Check("two-particle-visibility", "corrected-G2 phase scan visibility = concurrence", check_two_particle_visibility),
    Check("mixed-complementarity", "C^2 + P^2 = P^2 + M^2(1 - P^2) and the M = 1/2 dataset", check_mixed_complementarity),
    Check("conventional-mixed-bound", "V_QE = M sqrt(1 - P^2)", check_conventional_mixed_bound),
    Check("double-partial", "two partial which-way devices", check_double_partial),
    Check("monte-carlo", "sampled fringe fits cover the analytic visibility", check_monte_carlo),
    Check("no-coincidence-flat", "single-photon sigma fringe is flat", check_no_coincidence_flat),
    Check("corrected-g2-positive", "corrected G2 is non-negative", check_corrected_g2_positive),
    Check("prepare-matches-pipeline", "closed-form state = generated-and-filtered state", check_prepare_matches_pipeline),
    Check("violation-certificate", "conditioned visibility exceeds the unconditional bound", check_violation_certificate),
    Check("oracle-agreement", "every report: simulated = closed form, all audits hold", check_oracle_agreement),
)


def select(only: Optional[str] = None) -> tuple[Check, ...]:
    """All checks, or the one whose id equals ``only``."""
    if only is None:
        return CHECKS
    hits = tuple(c for c in CHECKS if only == c.id)
    if not hits:
        known = ", ".join(c.id for c in CHECKS)
        raise KeyError(f"unknown audit {only!r}; known: {known}")
    return hits


def verify(only: Optional[str] = None, perturb: float = 0.0) -> list[CheckResult]:
    return [c.run(perturb) for c in select(only)]


def format_table(results: Sequence[CheckResult]) -> str:
    width = max(len(r.id) for r in results)
    lines = []
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{status}  {r.id:<{width}}  {r.detail}  (tol {r.tol:g}, {r.seconds:.2f}s)")
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines)
