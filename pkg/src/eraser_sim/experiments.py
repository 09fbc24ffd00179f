"""Scenario runners for the three interferometer setups, audits and sweeps.

Every runner builds its state from the atomic generation sequence through
the optical elements of :mod:`eraser_sim.optics`, measures it numerically
and sets the result beside the closed forms of :mod:`eraser_sim.measures`.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence, Union

from .correlations import conditioned_fringe, sample_events, visibility_from_counts
from .measures import (
    MeasureRecord,
    closed_form_suite,
    concurrence,
    double_partial_closed_form,
    predictability,
    predictability_complement,
    visibility_analytic,
)
from .optics import (
    FILTER_ABSORBED,
    FILTER_PASSED,
    BeamsplitterSpec,
    FilterSpec,
    apply_beamsplitter,
    apply_filter,
    atomic_generation_sequence,
    decohere,
    measure_detector,
)
from .qstate import (
    PI_B,
    PI_B2,
    SIGMA_A,
    SIGMA_A2,
    Branch,
    DensityOperator,
    DetectorRegister,
    DeviceId,
    RegisterValue,
    as_density,
    find_branch,
    mix,
)
from .serialize import dumps, fmt17

SCHEMES = ("conventional", "conditional", "double_partial")
ORACLE_TOL = 1e-9
MARGIN_FLOOR = -1e-9
# strict-inequality certificates are only issued where the exact gap exceeds this
CERTIFICATE_RESOLUTION = 1e-12
LIMITATIONS = (
    "ideal lossless beamsplitters",
    "unit-efficiency eraser detectors",
    "detectors placed exactly at the scan phases",
)

class DegenerateConfiguration(ValueError):
    """The post-selected branch has zero probability."""


_NO_CLICK = {d: DetectorRegister(d, RegisterValue.NO_CLICK) for d in DeviceId}
_CLICK = {d: DetectorRegister(d, RegisterValue.CLICK) for d in DeviceId}


@dataclass(frozen=True)
class ScenarioConfig:
    """Inputs of one run.  Parameters unused by ``scheme`` are kept as given."""

    scheme: str = "conventional"
    t: float = 1.0
    t_bs: float = 1.0
    t1: float = 1.0
    t2: float = 1.0
    M: float = 1.0
    mc_samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        for name in self.used_parameters():
            x = getattr(self, name)
            if not (isinstance(x, (int, float)) and 0.0 <= x <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {x!r}")
        if self.mc_samples < 0:
            raise ValueError("mc_samples must be non-negative")

    def used_parameters(self) -> tuple[str, ...]:
        return {
            "conventional": ("t", "M"),
            "conditional": ("t", "t_bs", "M"),
            "double_partial": ("t1", "t2", "M"),
        }[self.scheme]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Audit:
    """One checked relation ``lhs <op> rhs``.

    ``margin`` is positive when the relation holds with room to spare and
    is bounded below by ``-tol`` whenever ``satisfied`` is true.
    """

    name: str
    relation: str
    lhs: float
    rhs: float
    satisfied: bool
    margin: float
    tol: float

    def to_dict(self) -> dict:
        return asdict(self)


def audit_le(name: str, lhs: float, rhs: float, tol: float = 1e-12) -> Audit:
    margin = rhs - lhs
    return Audit(name, "<=", float(lhs), float(rhs), margin >= -tol, float(margin), tol)


def audit_eq(name: str, lhs: float, rhs: float, tol: float = 1e-10) -> Audit:
    margin = 0.0 - abs(lhs - rhs)
    return Audit(name, "==", float(lhs), float(rhs), margin >= -tol, float(margin), tol)


def audit_gt(name: str, lhs: float, rhs: float) -> Audit:
    margin = lhs - rhs
    return Audit(name, ">", float(lhs), float(rhs), margin > 0, float(margin), 0.0)


@dataclass(frozen=True)
class MonteCarloResult:
    estimate: float
    stderr: float
    n: int
    seed: int
    analytic: float
    outcome: str

    @property
    def z(self) -> float:
        return abs(self.estimate - self.analytic) / self.stderr if self.stderr > 0 else math.inf

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ExperimentReport:
    """Everything one run produces.

    ``closed_form`` is ``None`` only for the mixed-state double-partial
    setup, which has no closed forms to compare against.
    """

    config: ScenarioConfig
    closed_form: Optional[MeasureRecord]
    simulated: MeasureRecord
    audits: tuple[Audit, ...]
    mc: Optional[MonteCarloResult] = None
    degenerate: bool = False
    extras: Mapping[str, Optional[float]] = field(default_factory=dict)
    limitations: tuple[str, ...] = LIMITATIONS

    def __post_init__(self):
        for a in self.audits:
            if a.satisfied and a.margin < MARGIN_FLOOR:
                raise ValueError(f"audit {a.name} satisfied with margin {a.margin}")

    @property
    def all_satisfied(self) -> bool:
        return all(a.satisfied for a in self.audits)

    def audit(self, name: str) -> Audit:
        for a in self.audits:
            if a.name == name:
                return a
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "degenerate": self.degenerate,
            "closed_form": None if self.closed_form is None else self.closed_form.to_dict(),
            "simulated": self.simulated.to_dict(),
            "audits": [a.to_dict() for a in self.audits],
            "all_satisfied": self.all_satisfied,
            "mc": None if self.mc is None else self.mc.to_dict(),
            "extras": dict(self.extras),
            "limitations": list(self.limitations),
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())


# ---------------------------------------------------------------------------
# pipeline pieces


def filtered_biphoton(t: float, M: float) -> tuple[DensityOperator, float]:
    """Generate, filter (keep the passed branch) and decohere the biphoton.

    Returns the normalized state and the filter pass probability.
    """
    branches = apply_filter(atomic_generation_sequence(), FilterSpec(SIGMA_A, t))
    passed = find_branch(branches, FILTER_PASSED)
    return decohere(passed.state, M), passed.probability


def _filter_loss(t: float) -> float:
    branches = apply_filter(atomic_generation_sequence(), FilterSpec(SIGMA_A, t))
    return float(sum(b.probability for b in branches if b.outcome == FILTER_ABSORBED))


def eraser_branches(rho, device: DeviceId, mode, t_bs: float) -> tuple[Branch, Branch]:
    """Beamsplit ``mode`` and read the device on its alternate port.

    Returns ``(no_click, click)``.
    """
    split = apply_beamsplitter(rho, BeamsplitterSpec.on(mode, t_bs))
    branches = measure_detector(split, device, split_alternate(mode))
    return find_branch(branches, _NO_CLICK[device]), find_branch(branches, _CLICK[device])


def split_alternate(mode):
    return {SIGMA_A: SIGMA_A2, PI_B: PI_B2}[mode]


def _measured_mixture(branches: Sequence[Branch]) -> DensityOperator:
    live = [(b.probability, as_density(b.state)) for b in branches if not b.degenerate]
    return mix(live)


def measured_state(cfg: ScenarioConfig) -> tuple[DensityOperator, Optional[str]]:
    """State handed to the event sampler, with every device branch kept.

    The registers record which branch an event belongs to; the second item
    is the register outcome the eraser statistics condition on (``None``
    when no device is present).
    """
    if cfg.scheme == "conventional":
        return filtered_biphoton(cfg.t, cfg.M)[0], None
    if cfg.scheme == "conditional":
        rho, _ = filtered_biphoton(cfg.t, cfg.M)
        success, failure = eraser_branches(rho, DeviceId.M1, PI_B, cfg.t_bs)
        if success.degenerate:
            raise DegenerateConfiguration("the device never stays silent")
        return _measured_mixture([success, failure]), str(_NO_CLICK[DeviceId.M1])
    rho = decohere(atomic_generation_sequence(), cfg.M)
    parts = []
    for first in eraser_branches(rho, DeviceId.M1, SIGMA_A, cfg.t1):
        if first.degenerate:
            continue
        # every first-stage branch passes the second device so all carry both registers
        for second in eraser_branches(first.state, DeviceId.M2, PI_B, cfg.t2):
            parts.append(Branch(second.outcome, first.probability * second.probability, second.state))
    if parts[0].degenerate:
        raise DegenerateConfiguration("the devices are never silent together")
    return _measured_mixture(parts), f"{_NO_CLICK[DeviceId.M1]},{_NO_CLICK[DeviceId.M2]}"


def _monte_carlo(cfg: ScenarioConfig, analytic: float) -> MonteCarloResult:
    rho, outcome = measured_state(cfg)
    counts = sample_events(rho, cfg.mc_samples, cfg.seed)
    est, se = visibility_from_counts(counts, outcome=outcome)
    return MonteCarloResult(float(est), float(se), cfg.mc_samples, cfg.seed, float(analytic), outcome or "none")


def _oracle_audit(sim: MeasureRecord, closed: MeasureRecord, extra_pairs=()) -> Audit:
    worst = 0.0
    for key in MeasureRecord.KEYS:
        a, b = getattr(sim, key), getattr(closed, key)
        if a is None or b is None:
            continue
        worst = max(worst, abs(a - b))
    for a, b in extra_pairs:
        worst = max(worst, abs(a - b))
    return audit_le("oracle-agreement", worst, 0.0, tol=ORACLE_TOL)


def _unconditional_audits(P: float, Q: float, C: float, V: float, V_QE: float, M: float) -> list[Audit]:
    # Q = sqrt(1 - P^2), computed without cancellation
    audits = [
        audit_le("erasure-relation", P**2 + C**2, 1.0),
        audit_le("visibility-le-eraser-visibility", V, V_QE),
        audit_le("eraser-visibility-le-concurrence", V_QE, C),
        audit_le("conventional-eraser-bound", V_QE, Q),
        audit_le("mixed-eraser-bound", V_QE, M * Q),
        audit_le("concurrence-le-coherence", C, M),
        audit_eq("mixed-complementarity", C**2 + P**2, P**2 + M**2 * Q**2, tol=1e-12),
    ]
    if M == 1.0:
        audits.append(audit_eq("erasure-equality", P**2 + C**2, 1.0, tol=1e-10))
    return audits


def _resolvable_gap(t: float) -> bool:
    """Whether ``1 - 2 sqrt(t)/(1+t)`` is large enough to certify in floats."""
    return (1 - math.sqrt(t)) ** 2 / (1 + t) > CERTIFICATE_RESOLUTION


def _unconditional_measures(rho) -> tuple[float, float, float, float]:
    return predictability(rho), visibility_analytic(rho), concurrence(rho), conditioned_fringe(rho)


# ---------------------------------------------------------------------------
# runners


def run_conventional(t: float, M: float = 1.0, mc_samples: int = 0, seed: int = 0) -> ExperimentReport:
    """Filtered biphoton read out with the plain eraser (no which-way device)."""
    cfg = ScenarioConfig("conventional", t=t, M=M, mc_samples=mc_samples, seed=seed)
    rho, p_pass = filtered_biphoton(t, M)
    closed = closed_form_suite(t, 1.0, M)
    P, V, C, V_QE = _unconditional_measures(rho)
    sim = MeasureRecord(
        P=P, V=V, K=P, D=1.0, C=C, V_QE=V_QE, S=1.0, P_cond=P, C_cond=C, V_QE_cond=V_QE,
    )
    Q = predictability_complement(rho)
    audits = _unconditional_audits(P, Q, C, V, V_QE, M)
    audits.append(_oracle_audit(sim, closed))
    mc = _monte_carlo(cfg, closed.V_QE) if mc_samples > 0 else None
    extras = {"filter_pass_probability": p_pass, "filter_loss_probability": _filter_loss(t)}
    return ExperimentReport(cfg, closed, sim, tuple(audits), mc, extras=extras)


def run_conditional(
    t: float, t_bs: float, M: float = 1.0, mc_samples: int = 0, seed: int = 0
) -> ExperimentReport:
    """Filtered biphoton with the partial which-way device on the pi_B path.

    The device is a beamsplitter of transmittance ``t_bs`` feeding a
    detector; the eraser statistics are conditioned on the detector staying
    silent.
    """
    cfg = ScenarioConfig("conditional", t=t, t_bs=t_bs, M=M, mc_samples=mc_samples, seed=seed)
    rho, p_pass = filtered_biphoton(t, M)
    closed = closed_form_suite(t, t_bs, M)
    P, V, C, V_QE = _unconditional_measures(rho)
    success, failure = eraser_branches(rho, DeviceId.M1, PI_B, t_bs)
    S, F = success.probability, failure.probability
    loss = _filter_loss(t)
    extras = {
        "success_probability": S,
        "failure_probability": F,
        "filter_pass_probability": p_pass,
        "filter_loss_probability": loss,
    }
    if success.degenerate:
        sim = MeasureRecord(
            P=P, V=V, K=P, D=1.0, C=C, V_QE=V_QE, S=S,
            P_cond=None, C_cond=None, V_QE_cond=None, degenerate=True,
        )
        return ExperimentReport(cfg, closed, sim, (), None, degenerate=True, extras=extras)

    cond = success.state
    P_c, C_c, V_c = predictability(cond), concurrence(cond), conditioned_fringe(cond)
    sim = MeasureRecord(
        P=P, V=V, K=P, D=1.0, C=C, V_QE=V_QE, S=S, P_cond=P_c, C_cond=C_c, V_QE_cond=V_c,
    )
    Q = predictability_complement(rho)
    audits = _unconditional_audits(P, Q, C, V, V_QE, M)
    audits += [
        audit_le("success-concurrence-bound", S * C_c, C),
        audit_le("conditional-erasure-relation", P_c**2 + C_c**2, 1.0),
        audit_le("conditional-coherence-bound", V_c, M),
        audit_eq("conditional-visibility-equals-concurrence", V_c, C_c, tol=1e-10),
    ]
    if M == 1.0:
        audits.append(audit_eq("conditional-complementarity", P_c**2 + C_c**2, 1.0, tol=1e-10))
    if t_bs == t:
        audits.append(audit_eq("failure-equals-predictability", F, P, tol=1e-12))
        if M == 1.0 and 0.0 < t < 1.0 and _resolvable_gap(t):
            # the post-selected fringe beats the unconditional bound
            audits.append(audit_gt("conventional-bound-exceeded", V_c, Q))
    audits.append(audit_eq("branch-accounting", S + F, 1.0, tol=1e-12))
    audits.append(audit_eq("branch-accounting-with-loss", p_pass * (S + F) + loss, 1.0, tol=1e-12))
    audits.append(_oracle_audit(sim, closed))
    mc = _monte_carlo(cfg, closed.V_QE_cond) if mc_samples > 0 else None
    return ExperimentReport(cfg, closed, sim, tuple(audits), mc, extras=extras)


def run_double_partial(
    t1: float, t2: float, M: float = 1.0, mc_samples: int = 0, seed: int = 0
) -> ExperimentReport:
    """Unfiltered biphoton with two partial which-way devices.

    The first device (transmittance ``t1``, detector M1) watches sigma_A,
    the second (``t2``, detector M2) watches pi_B.  Both must stay silent.
    For ``M < 1`` only pipeline self-consistency is audited.

    Simulated record mapping: ``K`` and ``V_QE`` belong to the state after
    the first silent device, ``S`` is the joint silence probability and the
    ``*_cond`` fields describe the doubly post-selected state.
    """
    cfg = ScenarioConfig("double_partial", t1=t1, t2=t2, M=M, mc_samples=mc_samples, seed=seed)
    rho = decohere(atomic_generation_sequence(), M)
    P, V, C, _ = _unconditional_measures(rho)
    s1, f1 = eraser_branches(rho, DeviceId.M1, SIGMA_A, t1)
    p1 = s1.probability
    K = predictability(s1.state)
    Qk = predictability_complement(s1.state)
    V_QE1 = conditioned_fringe(s1.state)
    C1 = concurrence(s1.state)
    s2, f2 = eraser_branches(s1.state, DeviceId.M2, PI_B, t2)
    joint = p1 * s2.probability
    extras = {
        "knowledge": K,
        "stage1_success": p1,
        "V_QE_stage1": V_QE1,
        "intermediate_concurrence": p1 * C1,
        "joint_success": joint,
    }
    closed = None
    if M == 1.0:
        cf = double_partial_closed_form(t1, t2)
        closed = MeasureRecord(
            P=0.0, V=0.0, K=cf["knowledge"], D=1.0, C=1.0, V_QE=cf["V_QE_stage1"], S=cf["joint_success"],
            P_cond=cf["P_final"], C_cond=cf["C_final"], V_QE_cond=cf["V_final"],
            degenerate=cf["P_final"] is None,
        )
    if s2.degenerate:
        extras.update(P_final=None, C_final=None, V_final=None)
        sim = MeasureRecord(
            P=P, V=V, K=K, D=1.0, C=C, V_QE=V_QE1, S=joint,
            P_cond=None, C_cond=None, V_QE_cond=None, degenerate=True,
        )
        return ExperimentReport(cfg, closed, sim, (), None, degenerate=True, extras=extras)

    fin = s2.state
    P_f, C_f, V_f = predictability(fin), concurrence(fin), conditioned_fringe(fin)
    extras.update(P_final=P_f, C_final=C_f, V_final=V_f)
    sim = MeasureRecord(
        P=P, V=V, K=K, D=1.0, C=C, V_QE=V_QE1, S=joint, P_cond=P_f, C_cond=C_f, V_QE_cond=V_f,
    )
    audits = [
        audit_le("knowledge-eraser-bound", V_QE1**2, Qk**2),
        audit_le("stage1-success-concurrence-bound", p1 * C1, C),
        audit_le("joint-success-concurrence-bound", s2.probability * C_f, C1),
        audit_le("final-erasure-relation", P_f**2 + C_f**2, 1.0),
        audit_le("final-coherence-bound", V_f, M),
        audit_eq("final-visibility-equals-concurrence", V_f, C_f, tol=1e-10),
        audit_eq("stage1-branch-accounting", p1 + f1.probability, 1.0, tol=1e-12),
        audit_eq("stage2-branch-accounting", s2.probability + f2.probability, 1.0, tol=1e-12),
    ]
    if M == 1.0:
        audits += [
            audit_eq("knowledge-eraser-equality", V_QE1**2, Qk**2, tol=1e-10),
            audit_eq("final-complementarity", P_f**2 + C_f**2, 1.0, tol=1e-10),
        ]
        if t1 == t2 and 0.0 < t1 < 1.0 and _resolvable_gap(t1):
            audits.append(audit_gt("knowledge-bound-exceeded", V_f, Qk))
        pairs = [(extras[k], cf[k]) for k in ("stage1_success", "intermediate_concurrence")]
        audits.append(_oracle_audit(sim, closed, pairs))
    mc = _monte_carlo(cfg, V_f) if mc_samples > 0 else None
    return ExperimentReport(cfg, closed, sim, tuple(audits), mc, extras=extras)


def run(config: ScenarioConfig) -> ExperimentReport:
    """Dispatch ``config`` to its scheme runner."""
    c = config
    if c.scheme == "conventional":
        return run_conventional(c.t, c.M, c.mc_samples, c.seed)
    if c.scheme == "conditional":
        return run_conditional(c.t, c.t_bs, c.M, c.mc_samples, c.seed)
    return run_double_partial(c.t1, c.t2, c.M, c.mc_samples, c.seed)


# ---------------------------------------------------------------------------
# sweeps


def grid_configs(
    scheme: str,
    grid: Union[Mapping[str, Sequence[float]], Iterable[Mapping[str, float]]],
    base: Optional[ScenarioConfig] = None,
) -> list[ScenarioConfig]:
    """Expand ``grid`` into configs.

    A mapping of parameter lists is expanded as a Cartesian product, the
    first key varying slowest; an iterable of mappings is taken point by
    point.
    """
    base = replace(base or ScenarioConfig(), scheme=scheme)
    if isinstance(grid, Mapping):
        keys = list(grid)
        values = [list(grid[k]) for k in keys]
        if not keys or any(len(v) == 0 for v in values):
            raise ValueError("empty parameter grid")
        points = [dict(zip(keys, combo)) for combo in itertools.product(*values)]
    else:
        points = [dict(p) for p in grid]
        if not points:
            raise ValueError("empty parameter grid")
    return [replace(base, **p) for p in points]


def sweep(
    scheme: str,
    grid: Union[Mapping[str, Sequence[float]], Iterable[Mapping[str, float]]],
    base: Optional[ScenarioConfig] = None,
) -> list[ExperimentReport]:
    """One report per grid point, in grid order."""
    return [run(cfg) for cfg in grid_configs(scheme, grid, base)]


def coherence_dataset(ts: Sequence[float], M: float = 0.5) -> list[dict]:
    """Rows ``(t, C_sq, P_sq, C_sq_plus_P_sq)`` from simulated runs."""
    rows = []
    for r in sweep("conventional", {"t": list(ts)}, ScenarioConfig(M=M)):
        c2, p2 = r.simulated.C**2, r.simulated.P**2
        rows.append({"t": float(r.config.t), "C_sq": c2, "P_sq": p2, "C_sq_plus_P_sq": c2 + p2})
    return rows


def sweep_csv(reports: Sequence[ExperimentReport]) -> str:
    """CSV, one row per report: config, simulated measures and audit margins."""
    if not reports:
        raise ValueError("no reports to export")
    audit_names: list[str] = []
    for r in reports:
        for a in r.audits:
            if a.name not in audit_names:
                audit_names.append(a.name)
    cfg_keys = ["scheme", "t", "t_bs", "t1", "t2", "M", "mc_samples", "seed"]
    header = (
        cfg_keys + list(MeasureRecord.KEYS) + ["degenerate", "C_sq", "P_sq", "C_sq_plus_P_sq"]
        + [f"margin:{n}" for n in audit_names]
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)

    def cell(x):
        if x is None:
            return ""
        if isinstance(x, bool):
            return "true" if x else "false"
        if isinstance(x, float):
            return fmt17(x)
        return str(x)

    for r in reports:
        sim = r.simulated
        row = [cell(getattr(r.config, k)) for k in cfg_keys]
        row += [cell(getattr(sim, k)) for k in MeasureRecord.KEYS]
        c2, p2 = sim.C**2, sim.P**2
        row += [cell(r.degenerate), cell(c2), cell(p2), cell(c2 + p2)]
        margins = {a.name: a.margin for a in r.audits}
        row += [cell(margins.get(n)) for n in audit_names]
        w.writerow(row)
    return buf.getvalue()
