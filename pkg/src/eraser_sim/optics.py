"""Optical elements and biphoton preparation.

Every element acts on one photon factor of a :mod:`eraser_sim.qstate` state
and accepts either a :class:`PureState` or a :class:`DensityOperator`:

* filter: two-outcome loss channel on one mode,
* beamsplitter: real unitary splitting one mode into its alternate port,
* detector: records whether the alternate port is occupied, in a register,
* decoherence: site dephasing of the interfering photon, which damps the
  biphoton coherence by the coherence factor ``M``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

from .qstate import (
    EPS_PROB,
    FACTOR_DOMAINS,
    PI_A,
    PI_B,
    PI_B2,
    SIGMA_A,
    SIGMA_A2,
    SIGMA_B,
    Branch,
    Channel,
    DensityOperator,
    DetectorRegister,
    DeviceId,
    ModeLabel,
    Port,
    PureState,
    QStateError,
    RegisterValue,
    Site,
    apply_local,
    canonical_factors,
    density_from_pure,
    product_basis,
    projector,
    pure_from_amplitudes,
    pure_from_vector,
)

State = Union[PureState, DensityOperator]

FILTER_PASSED = "passed"
FILTER_ABSORBED = RegisterValue.ABSORBED_LOSS

_ALTERNATE_OF = {SIGMA_A: SIGMA_A2, PI_B: PI_B2}


def _unit_interval(name: str, x: float) -> float:
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def _mode(value) -> ModeLabel:
    if isinstance(value, ModeLabel):
        return value
    for dom in (FACTOR_DOMAINS["sigma"], FACTOR_DOMAINS["pi"]):
        for mode in dom:
            if mode.name == value:
                return mode
    raise ValueError(f"unknown mode {value!r}")


@dataclass(frozen=True)
class FilterSpec:
    target_mode: ModeLabel
    t: float

    def __post_init__(self):
        object.__setattr__(self, "target_mode", _mode(self.target_mode))
        object.__setattr__(self, "t", _unit_interval("filter transmittance", self.t))

    @classmethod
    def from_mapping(cls, cfg: Mapping) -> "FilterSpec":
        return cls(_mode(cfg.get("filter_mode", "sigma_A")), float(cfg["t"]))


@dataclass(frozen=True)
class BeamsplitterSpec:
    input_mode: ModeLabel
    alternate_mode: ModeLabel
    t_bs: float

    def __post_init__(self):
        object.__setattr__(self, "input_mode", _mode(self.input_mode))
        object.__setattr__(self, "alternate_mode", _mode(self.alternate_mode))
        object.__setattr__(self, "t_bs", _unit_interval("beamsplitter transmittance", self.t_bs))
        if _ALTERNATE_OF.get(self.input_mode) != self.alternate_mode:
            raise ValueError(f"{self.alternate_mode} is not the alternate port of {self.input_mode}")

    @classmethod
    def on(cls, input_mode, t_bs: float) -> "BeamsplitterSpec":
        mode = _mode(input_mode)
        if mode not in _ALTERNATE_OF:
            raise ValueError(f"{mode} has no alternate port")
        return cls(mode, _ALTERNATE_OF[mode], t_bs)

    @classmethod
    def from_mapping(cls, cfg: Mapping, key: str = "t_bs", mode: str = "pi_B") -> "BeamsplitterSpec":
        return cls.on(mode, float(cfg[key]))


@dataclass(frozen=True)
class CoherenceFactor:
    M: float

    def __post_init__(self):
        object.__setattr__(self, "M", _unit_interval("coherence factor", self.M))

    def __float__(self):
        return self.M


def _coherence(M) -> float:
    if isinstance(M, CoherenceFactor):
        return M.M
    return _unit_interval("coherence factor", M)


# ---------------------------------------------------------------------------
# Preparation


def prepare_biphoton(t: float, M: Union[float, CoherenceFactor] = 1.0) -> DensityOperator:
    """Filtered, partially coherent biphoton on the ``(sigma, pi)`` factors.

    Populations ``t/(1+t)`` on ``sigma_A pi_A`` and ``1/(1+t)`` on
    ``sigma_B pi_B``; the coherence between them is ``M sqrt(t)/(1+t)``.
    """
    t = _unit_interval("filter transmittance", t)
    m = _coherence(M)
    basis = product_basis(("sigma", "pi"))
    a = basis.index((SIGMA_A, PI_A))
    b = basis.index((SIGMA_B, PI_B))
    mat = np.zeros((len(basis), len(basis)), dtype=complex)
    mat[a, a] = t / (1 + t)
    mat[b, b] = 1 / (1 + t)
    mat[a, b] = mat[b, a] = m * np.sqrt(t) / (1 + t)
    return DensityOperator(("sigma", "pi"), mat)


def _emit(state: PureState, factor: str, transitions: Mapping[int, int]) -> PureState:
    """Let the excited atom decay, emitting one photon into ``factor``.

    ``transitions`` maps an excited level to its final level; the photon's
    mode is fixed by which atom decays.
    """
    entries = []
    factors = state.factors
    ia, ib = factors.index("atom_A"), factors.index("atom_B")
    for lab, amp in state.amplitudes.items():
        for atom_idx, site in ((ia, Site.A), (ib, Site.B)):
            level = lab[atom_idx]
            if level in transitions:
                final = transitions[level]
                new = list(lab)
                new[atom_idx] = final
                mode = next(m for m in FACTOR_DOMAINS[factor] if m.site is site and m.port is Port.PRIMARY)
                entries.append((tuple(new) + (mode,), amp))
    return pure_from_amplitudes(entries, factors + (factor,))


def _excite(state: PureState, lower: int, upper: int) -> PureState:
    """Weak pulse: exactly one atom in ``lower`` is promoted to ``upper``.

    Components with a single candidate atom get that atom excited; with two
    candidates both excitations are added in equal superposition.
    """
    factors = state.factors
    idx = [factors.index("atom_A"), factors.index("atom_B")]
    entries = []
    for lab, amp in state.amplitudes.items():
        candidates = [i for i in idx if lab[i] == lower]
        for i in candidates:
            new = list(lab)
            new[i] = upper
            entries.append((tuple(new), amp / np.sqrt(len(candidates))))
    return pure_from_amplitudes(entries, factors)


def generation_stages() -> dict[str, PureState]:
    """All intermediate states of the two-atom biphoton generation.

    Keys, in order: ``ground`` (both atoms in level 1), ``pi_pulse`` (one
    atom promoted to level 3), ``sigma_decay`` (level 3 -> 2 emitting a
    sigma photon; the simultaneous pi decay channel is not detected),
    ``sigma_pulse`` (level 2 -> 3), ``pi_decay`` (level 3 -> 1 emitting a
    pi photon) and ``photons`` (atoms projected out).
    """
    ground = pure_from_amplitudes({(1, 1): 1.0}, ("atom_A", "atom_B"))
    excited = _excite(ground, 1, 3)
    sigma = _emit(excited, "sigma", {3: 2})
    repumped = _excite_emitter(sigma)
    pi = _emit(repumped, "pi", {3: 1})
    return {
        "ground": ground,
        "pi_pulse": excited,
        "sigma_decay": sigma,
        "sigma_pulse": repumped,
        "pi_decay": pi,
        "photons": _drop_atoms(pi),
    }


def _excite_emitter(state: PureState) -> PureState:
    # The sigma+ pulse only finds one atom in level 2: the one that emitted.
    return _excite(state, 2, 3)


def _drop_atoms(state: PureState) -> PureState:
    ia, ib = state.factors.index("atom_A"), state.factors.index("atom_B")
    levels = {(lab[ia], lab[ib]) for lab in state.amplitudes}
    if levels != {(1, 1)}:
        raise QStateError(f"atoms not back in the ground state: {levels}")
    keep = [i for i, f in enumerate(state.factors) if not f.startswith("atom_")]
    factors = tuple(state.factors[i] for i in keep)
    return pure_from_amplitudes(
        [(tuple(lab[i] for i in keep), a) for lab, a in state.amplitudes.items()], factors
    )


def atomic_generation_sequence() -> PureState:
    """Biphoton ``(sigma_A pi_A + sigma_B pi_B)/sqrt(2)`` from the atomic cycle."""
    return generation_stages()["photons"]


# ---------------------------------------------------------------------------
# Elements


def filter_channel(spec: FilterSpec) -> Channel:
    factor = spec.target_mode.factor
    p = projector(factor, [spec.target_mode])
    eye = np.eye(p.shape[0])
    kraus = {FILTER_PASSED: eye - p + np.sqrt(spec.t) * p}
    if spec.t < 1:
        kraus[FILTER_ABSORBED] = np.sqrt(1 - spec.t) * p
    return Channel(factor, kraus)


def apply_filter(state: State, spec: FilterSpec) -> list[Branch]:
    """Pass the target mode through a filter of transmittance ``spec.t``.

    Returns the ``"passed"`` branch and, for ``t < 1``, the
    ``absorbed_loss`` branch holding the absorbed weight.
    """
    return filter_channel(spec).apply(state)


def beamsplitter_unitary(spec: BeamsplitterSpec) -> np.ndarray:
    factor = spec.input_mode.factor
    dom = FACTOR_DOMAINS[factor]
    i, j = dom.index(spec.input_mode), dom.index(spec.alternate_mode)
    c, s = np.sqrt(spec.t_bs), np.sqrt(1 - spec.t_bs)
    u = np.eye(len(dom))
    u[i, i], u[j, i] = c, s
    u[i, j], u[j, j] = -s, c
    return u


def _population(state: State, mode: ModeLabel) -> float:
    factor = mode.factor
    if isinstance(state, PureState):
        k = state.factors.index(factor)
        return sum(abs(a) ** 2 for lab, a in state.amplitudes.items() if lab[k] == mode)
    p = projector(factor, [mode])
    return float(np.trace(apply_local(state, factor, p)).real)


def apply_beamsplitter(state: State, spec: BeamsplitterSpec) -> State:
    """Split ``input_mode`` as ``sqrt(t_bs) input + sqrt(1 - t_bs) alternate``."""
    if _population(state, spec.alternate_mode) > EPS_PROB:
        raise QStateError(f"alternate mode {spec.alternate_mode} is already occupied")
    u = beamsplitter_unitary(spec)
    raw = apply_local(state, spec.input_mode.factor, u)
    if isinstance(state, PureState):
        return pure_from_vector(raw, state.factors)
    return DensityOperator(state.factors, (raw + raw.conj().T) / 2)


def _device(device) -> DeviceId:
    return device if isinstance(device, DeviceId) else DeviceId(device)


def _register_isometry(factors: tuple[str, ...], register: str, watched: ModeLabel):
    """Map ``|x> -> |x>|click>`` if ``x`` occupies ``watched``, else ``|x>|no_click>``."""
    out_factors = canonical_factors(factors + (register,))
    k = factors.index(watched.factor)
    in_basis = product_basis(factors)
    out_basis = product_basis(out_factors)
    index = {lab: n for n, lab in enumerate(out_basis)}
    pos = out_factors.index(register)
    v = np.zeros((len(out_basis), len(in_basis)))
    for n, lab in enumerate(in_basis):
        value = RegisterValue.CLICK if lab[k] == watched else RegisterValue.NO_CLICK
        new = list(lab)
        new.insert(pos, value)
        v[index[tuple(new)], n] = 1.0
    return out_factors, v


def couple_detector(state: State, device, watched_mode: ModeLabel) -> State:
    """Entangle a detector register with occupation of ``watched_mode``.

    The result is the coherent pre-measurement state in which the register
    reads ``click`` on the components occupying the watched port and
    ``no_click`` elsewhere.
    """
    register = _device(device).value
    if register in state.factors:
        raise QStateError(f"register {register} is already attached")
    watched_mode = _mode(watched_mode)
    if watched_mode.port is not Port.ALTERNATE:
        raise QStateError("detectors sit on alternate ports only")
    out_factors, v = _register_isometry(state.factors, register, watched_mode)
    if isinstance(state, PureState):
        return pure_from_vector(v @ state.vector(), out_factors)
    return DensityOperator(out_factors, v @ state.matrix @ v.T)


def measure_detector(state: State, device, watched_mode: ModeLabel) -> list[Branch]:
    """Read out a detector on ``watched_mode``: ``[click, no_click]`` branches.

    Branch states keep the register factor with its definite value.
    """
    dev = _device(device)
    coupled = couple_detector(state, dev, watched_mode)
    reg = dev.value
    kraus = {
        DetectorRegister(dev, RegisterValue.CLICK): projector(reg, [RegisterValue.CLICK]),
        DetectorRegister(dev, RegisterValue.NO_CLICK): projector(reg, [RegisterValue.NO_CLICK]),
    }
    return Channel(reg, kraus).apply(coupled)


def dephasing_channel(M: float) -> Channel:
    m = _coherence(M)
    z = np.diag([1.0 if mode.site is Site.A else -1.0 for mode in FACTOR_DOMAINS["sigma"]])
    return Channel("sigma", {"keep": np.sqrt((1 + m) / 2) * np.eye(3), "flip": np.sqrt((1 - m) / 2) * z})


def decohere(state: State, M: Union[float, CoherenceFactor]) -> DensityOperator:
    """Damp coherences between A- and B-emitted components by ``M``.

    Site dephasing of the interfering photon: Kraus pair
    ``sqrt((1+M)/2) I`` and ``sqrt((1-M)/2) Z`` with ``Z = +1`` on A-site
    modes and ``-1`` on B-site modes.
    """
    m = _coherence(M)
    if "sigma" not in state.factors:
        raise QStateError("decoherence acts on the sigma photon")
    rho = density_from_pure(state) if isinstance(state, PureState) else state
    if m == 1.0:
        return rho
    mat = sum(apply_local(rho, "sigma", k) for k in dephasing_channel(m).kraus.values())
    return DensityOperator(rho.factors, (mat + mat.conj().T) / 2)
