"""Pure states, density operators and outcome branches over a labeled basis.

A state lives on a tensor product of named *factors*.  Each factor has a
fixed, ordered domain of basis values:

    sigma   sigma_A, sigma_B, sigma_A2        (interfering photon)
    pi      pi_A, pi_B, pi_B2                 (erasing photon)
    M1, M2  no_click, click, absorbed_loss    (detector registers)
    atom_A, atom_B   1, 2, 3, 4               (transient atomic levels)

Factors always appear in that global order, which fixes the ordering of the
composite basis and therefore of every serialized matrix.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

EPS_PROB = 1e-12
"""Branches with probability below this are flagged degenerate."""

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
NEGATIVITY_TOL = 1e-10


class QStateError(ValueError):
    """Raised for malformed states or invalid state operations."""


class Particle(enum.Enum):
    SIGMA = "sigma"
    PI = "pi"


class Site(enum.Enum):
    A = "A"
    B = "B"


class Port(enum.Enum):
    PRIMARY = "primary"
    ALTERNATE = "alternate"


# Only these two modes have a second output port in the interferometer.
_ALTERNATE_ALLOWED = {(Particle.SIGMA, Site.A), (Particle.PI, Site.B)}


@dataclass(frozen=True)
class ModeLabel:
    """Single-photon mode: polarization, emitting atom and output port."""

    particle: Particle
    site: Site
    port: Port = Port.PRIMARY

    def __post_init__(self):
        if self.port is Port.ALTERNATE and (self.particle, self.site) not in _ALTERNATE_ALLOWED:
            raise QStateError(f"no alternate port for {self.particle.value}_{self.site.value}")

    @property
    def name(self) -> str:
        suffix = "2" if self.port is Port.ALTERNATE else ""
        return f"{self.particle.value}_{self.site.value}{suffix}"

    @property
    def factor(self) -> str:
        return self.particle.value

    def __str__(self):
        return self.name

    def __repr__(self):
        return self.name


SIGMA_A = ModeLabel(Particle.SIGMA, Site.A)
SIGMA_B = ModeLabel(Particle.SIGMA, Site.B)
SIGMA_A2 = ModeLabel(Particle.SIGMA, Site.A, Port.ALTERNATE)
PI_A = ModeLabel(Particle.PI, Site.A)
PI_B = ModeLabel(Particle.PI, Site.B)
PI_B2 = ModeLabel(Particle.PI, Site.B, Port.ALTERNATE)


class RegisterValue(enum.Enum):
    NO_CLICK = "no_click"
    CLICK = "click"
    ABSORBED_LOSS = "absorbed_loss"

    def __str__(self):
        return self.value

    def __repr__(self):
        return self.value


class DeviceId(enum.Enum):
    M1 = "M1"
    M2 = "M2"


@dataclass(frozen=True)
class DetectorRegister:
    device_id: DeviceId
    value: RegisterValue

    def __str__(self):
        return f"{self.device_id.value}={self.value.value}"


_REGISTER_DOMAIN = (RegisterValue.NO_CLICK, RegisterValue.CLICK, RegisterValue.ABSORBED_LOSS)

FACTOR_DOMAINS: dict[str, tuple] = {
    "sigma": (SIGMA_A, SIGMA_B, SIGMA_A2),
    "pi": (PI_A, PI_B, PI_B2),
    "M1": _REGISTER_DOMAIN,
    "M2": _REGISTER_DOMAIN,
    "atom_A": (1, 2, 3, 4),
    "atom_B": (1, 2, 3, 4),
}
FACTOR_ORDER = tuple(FACTOR_DOMAINS)
REGISTER_FACTORS = ("M1", "M2")


def canonical_factors(factors: Iterable[str]) -> tuple[str, ...]:
    factors = list(factors)
    unknown = [f for f in factors if f not in FACTOR_DOMAINS]
    if unknown:
        raise QStateError(f"unknown factor(s) {unknown}")
    if len(set(factors)) != len(factors):
        raise QStateError(f"repeated factor in {factors}")
    return tuple(f for f in FACTOR_ORDER if f in factors)


def dims_of(factors: Sequence[str]) -> tuple[int, ...]:
    return tuple(len(FACTOR_DOMAINS[f]) for f in factors)


def product_basis(factors: Sequence[str]) -> list[tuple]:
    """Composite labels in row-major order of ``factors``."""
    labels: list[tuple] = [()]
    for f in factors:
        labels = [lab + (v,) for lab in labels for v in FACTOR_DOMAINS[f]]
    return labels


def label_str(label: tuple) -> str:
    return ",".join(str(v) for v in label)


def _flat_index(factors: Sequence[str], label: tuple) -> int:
    idx = 0
    for f, v in zip(factors, label):
        dom = FACTOR_DOMAINS[f]
        try:
            idx = idx * len(dom) + dom.index(v)
        except ValueError:
            raise QStateError(f"{v!r} is not in the domain of factor {f!r}") from None
    return idx


# ---------------------------------------------------------------------------
# Pure states


@dataclass(frozen=True)
class PureState:
    """Normalized ket stored as a sparse map ``label -> amplitude``.

    ``label`` is a tuple with one basis value per factor, in ``factors`` order.
    """

    factors: tuple[str, ...]
    amplitudes: Mapping[tuple, complex] = field(hash=False)

    @property
    def dims(self) -> tuple[int, ...]:
        return dims_of(self.factors)

    def vector(self) -> np.ndarray:
        vec = np.zeros(int(np.prod(self.dims)), dtype=complex)
        for lab, amp in self.amplitudes.items():
            vec[_flat_index(self.factors, lab)] = amp
        return vec

    def amplitude(self, *values) -> complex:
        return complex(self.amplitudes.get(tuple(values), 0.0))

    def norm(self) -> float:
        return float(np.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values())))

    def __repr__(self):
        terms = " + ".join(f"({a:.4g})|{label_str(k)}>" for k, a in self.amplitudes.items())
        return f"PureState[{','.join(self.factors)}]({terms})"


def _canonical_entries(factors, entries):
    order = canonical_factors(factors)
    perm = [list(factors).index(f) for f in order]
    out: dict[tuple, complex] = {}
    for lab, amp in entries:
        lab = tuple(lab)
        if len(lab) != len(factors):
            raise QStateError(f"label {lab} does not match factors {tuple(factors)}")
        key = tuple(lab[i] for i in perm)
        _flat_index(order, key)
        out[key] = out.get(key, 0.0) + complex(amp)
    return order, out


def pure_from_amplitudes(
    entries: Union[Mapping[tuple, complex], Iterable[tuple[tuple, complex]]],
    factors: Sequence[str] = ("sigma", "pi"),
) -> PureState:
    """Build a normalized :class:`PureState` from ``(label, amplitude)`` pairs.

    Repeated labels are summed; zero amplitudes are dropped.  Input order is
    irrelevant.

    Examples
    --------
    >>> psi = pure_from_amplitudes({(SIGMA_A, PI_A): 1, (SIGMA_B, PI_B): 1})
    >>> round(abs(psi.amplitude(SIGMA_A, PI_A)), 6)
    0.707107
    """
    if isinstance(entries, Mapping):
        entries = entries.items()
    order, amps = _canonical_entries(factors, entries)
    amps = {k: a for k, a in amps.items() if a != 0}
    norm = np.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    if norm == 0:
        raise QStateError("null state")
    return PureState(order, {k: a / norm for k, a in amps.items()})


def pure_from_vector(vec: np.ndarray, factors: Sequence[str], atol: float = 0.0) -> PureState:
    """Normalized pure state from a dense vector over ``product_basis(factors)``."""
    factors = canonical_factors(factors)
    basis = product_basis(factors)
    vec = np.asarray(vec, dtype=complex).ravel()
    if vec.size != len(basis):
        raise QStateError("vector length does not match the factor dimensions")
    entries = [(lab, a) for lab, a in zip(basis, vec) if abs(a) > atol]
    return pure_from_amplitudes(entries, factors)


# ---------------------------------------------------------------------------
# Density operators


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive, unit-trace matrix over ``product_basis(factors)``."""

    factors: tuple[str, ...]
    matrix: np.ndarray = field(hash=False, repr=False)

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        n = int(np.prod(dims_of(self.factors)))
        if mat.shape != (n, n):
            raise QStateError(f"matrix shape {mat.shape} does not match factors {self.factors}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        check_density(mat)

    @property
    def dims(self) -> tuple[int, ...]:
        return dims_of(self.factors)

    @property
    def basis(self) -> list[tuple]:
        return product_basis(self.factors)

    def element(self, row: tuple, col: tuple) -> complex:
        return complex(self.matrix[_flat_index(self.factors, row), _flat_index(self.factors, col)])

    def to_json(self) -> str:
        """Serialize as ``{"basis": [...], "re": [[...]], "im": [[...]]}``."""
        return json.dumps(
            {
                "basis": [label_str(lab) for lab in self.basis],
                "re": self.matrix.real.tolist(),
                "im": self.matrix.imag.tolist(),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "DensityOperator":
        obj = json.loads(text)
        names = [lab.split(",") for lab in obj["basis"]]
        factors = _factors_from_labels(names)
        if [label_str(lab) for lab in product_basis(factors)] != obj["basis"]:
            raise QStateError("basis is not in canonical order")
        mat = np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)
        return cls(factors, mat)


def _factors_from_labels(names: list[list[str]]) -> tuple[str, ...]:
    if not names:
        raise QStateError("empty basis")
    factors = []
    for pos in range(len(names[0])):
        values = {n[pos] for n in names}
        match = [f for f, dom in FACTOR_DOMAINS.items() if values <= {str(v) for v in dom} and f not in factors]
        if not match:
            raise QStateError(f"cannot identify factor for values {sorted(values)}")
        factors.append(match[0])
    return tuple(factors)


def check_density(mat: np.ndarray) -> None:
    if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise QStateError("density matrix is not Hermitian")
    tr = np.trace(mat)
    if abs(tr - 1) > TRACE_TOL:
        raise QStateError(f"density matrix trace {tr.real:.15g} != 1")
    if np.linalg.eigvalsh(mat).min() < -NEGATIVITY_TOL:
        raise QStateError("density matrix is not positive semidefinite")


def density_from_pure(psi: PureState) -> DensityOperator:
    """``|psi><psi|`` over the full product basis of ``psi.factors``."""
    vec = psi.vector()
    if abs(np.vdot(vec, vec) - 1) > TRACE_TOL:
        raise QStateError("pure state is not normalized")
    return DensityOperator(psi.factors, np.outer(vec, vec.conj()))


def as_density(state: Union[PureState, DensityOperator]) -> DensityOperator:
    if isinstance(state, PureState):
        return density_from_pure(state)
    return state


def mix(components: Sequence[tuple[float, DensityOperator]]) -> DensityOperator:
    """Convex combination ``sum_k w_k rho_k`` of operators on identical factors."""
    if not components:
        raise QStateError("nothing to mix")
    weights = np.array([w for w, _ in components], dtype=float)
    if np.any(weights < 0):
        raise QStateError("negative mixing weight")
    if abs(weights.sum() - 1) > 1e-9:
        raise QStateError(f"mixing weights sum to {weights.sum():.12g}, not 1")
    factors = {rho.factors for _, rho in components}
    if len(factors) != 1:
        raise QStateError("cannot mix operators on different bases")
    mat = sum(w * rho.matrix for w, rho in components)
    # Rescale away the <=1e-9 weight slack so trace stays within 1e-12.
    return DensityOperator(components[0][1].factors, mat / np.trace(mat).real)


def partial_trace(rho: DensityOperator, keep: Union[str, Sequence[str]]) -> DensityOperator:
    """Reduced operator on the factors named in ``keep``."""
    keep = (keep,) if isinstance(keep, str) else tuple(keep)
    if any(k not in rho.factors for k in keep) or len(set(keep)) != len(keep):
        raise QStateError(f"cannot keep {keep} from factors {rho.factors}")
    keep = canonical_factors(keep)
    return DensityOperator(keep, reduce_matrix(rho.matrix, rho.factors, keep))


def reduce_matrix(mat: np.ndarray, factors: Sequence[str], keep: Sequence[str]) -> np.ndarray:
    """Partial trace on a raw (possibly unnormalized) matrix."""
    dims = dims_of(factors)
    n = len(dims)
    t = np.asarray(mat).reshape(dims + dims)
    traced = 0
    for i, f in reversed(list(enumerate(factors))):
        if f in keep:
            continue
        m = n - traced
        t = np.trace(t, axis1=i, axis2=i + m)
        traced += 1
    d = int(np.prod(dims_of(keep)))
    return t.reshape(d, d)


def tensor(a, b):
    """Tensor product of two pure states or two density operators.

    Factors of the result are put in canonical order.
    """
    if set(a.factors) & set(b.factors):
        raise QStateError(f"overlapping factors {set(a.factors) & set(b.factors)}")
    if isinstance(a, PureState) and isinstance(b, PureState):
        entries = [(la + lb, x * y) for la, x in a.amplitudes.items() for lb, y in b.amplitudes.items()]
        order, amps = _canonical_entries(a.factors + b.factors, entries)
        return PureState(order, {k: v for k, v in amps.items() if v != 0})
    ra, rb = as_density(a), as_density(b)
    joint = a.factors + b.factors
    mat = np.kron(ra.matrix, rb.matrix)
    order = canonical_factors(joint)
    return DensityOperator(order, permute_matrix(mat, joint, order))


def permute_matrix(mat: np.ndarray, src: Sequence[str], dst: Sequence[str]) -> np.ndarray:
    dims = dims_of(src)
    n = len(dims)
    perm = [list(src).index(f) for f in dst]
    t = np.asarray(mat).reshape(dims + dims).transpose(perm + [p + n for p in perm])
    d = int(np.prod(dims))
    return t.reshape(d, d)


def sector_matrix(
    rho: Union[DensityOperator, np.ndarray],
    factors: Sequence[str] | None = None,
    keep: Sequence[str] = ("sigma", "pi"),
    primary_only: bool = True,
) -> np.ndarray:
    """Unnormalized block of ``rho`` on ``keep``, optionally primary ports only.

    Registers and any other factors not in ``keep`` are traced out.  With
    ``primary_only`` each photon factor is cut down to its ``A, B`` ports,
    which are the only ones reaching the interference detectors.
    """
    if isinstance(rho, DensityOperator):
        factors, mat = rho.factors, rho.matrix
    else:
        mat = np.asarray(rho)
    keep = canonical_factors(keep)
    red = reduce_matrix(mat, factors, keep)
    if not primary_only:
        return red
    idx = np.array([_flat_index(keep, lab) for lab in product_basis(keep)
                    if all(getattr(v, "port", Port.PRIMARY) is Port.PRIMARY for v in lab)])
    return red[np.ix_(idx, idx)]


# ---------------------------------------------------------------------------
# Branches


@dataclass(frozen=True)
class Branch:
    """One outcome of a channel: label, probability and conditional state.

    ``state`` is ``None`` when the branch is degenerate (probability below
    ``EPS_PROB``), since it cannot be normalized.
    """

    outcome: object
    probability: float
    state: Union[PureState, DensityOperator, None]

    @property
    def degenerate(self) -> bool:
        return self.state is None


def branch_from_vector(outcome, vec: np.ndarray, factors: Sequence[str]) -> Branch:
    p = float(np.vdot(vec, vec).real)
    if p < EPS_PROB:
        return Branch(outcome, p, None)
    return Branch(outcome, p, pure_from_vector(vec / np.sqrt(p), factors))


def branch_from_matrix(outcome, mat: np.ndarray, factors: Sequence[str]) -> Branch:
    p = float(np.trace(mat).real)
    if p < EPS_PROB:
        return Branch(outcome, p, None)
    mat = mat / p
    return Branch(outcome, p, DensityOperator(tuple(factors), (mat + mat.conj().T) / 2))


def find_branch(branches: Sequence[Branch], outcome) -> Branch:
    for b in branches:
        if b.outcome == outcome:
            return b
    raise KeyError(outcome)


# ---------------------------------------------------------------------------
# Local operators and channels


def apply_local(state, factor: str, op: np.ndarray):
    """Apply ``op`` (square, on one factor's domain) to a pure state's vector
    or sandwich a density matrix with it.  Returns a raw array."""
    factors = state.factors
    dims = dims_of(factors)
    k = factors.index(factor)
    n = len(dims)
    if isinstance(state, PureState):
        t = state.vector().reshape(dims)
        t = np.moveaxis(np.tensordot(op, t, axes=([1], [k])), 0, k)
        return t.reshape(-1)
    mat = state.matrix if isinstance(state, DensityOperator) else np.asarray(state)
    t = mat.reshape(dims + dims)
    t = np.moveaxis(np.tensordot(op, t, axes=([1], [k])), 0, k)
    t = np.moveaxis(np.tensordot(op.conj(), t, axes=([1], [n + k])), 0, n + k)
    d = int(np.prod(dims))
    return t.reshape(d, d)


@dataclass(frozen=True)
class Channel:
    """Kraus operators acting on a single factor, keyed by outcome label.

    ``apply`` returns one :class:`Branch` per Kraus operator, in insertion
    order.  Pure inputs yield pure branches.
    """

    factor: str
    kraus: Mapping[object, np.ndarray] = field(hash=False)

    def completeness_error(self) -> float:
        d = len(FACTOR_DOMAINS[self.factor])
        total = sum(k.conj().T @ k for k in self.kraus.values())
        return float(np.max(np.abs(total - np.eye(d))))

    def apply(self, state) -> list[Branch]:
        if self.factor not in state.factors:
            raise QStateError(f"state has no factor {self.factor!r}")
        out = []
        for outcome, k in self.kraus.items():
            raw = apply_local(state, self.factor, k)
            if isinstance(state, PureState):
                out.append(branch_from_vector(outcome, raw, state.factors))
            else:
                out.append(branch_from_matrix(outcome, raw, state.factors))
        return out


def projector(factor: str, values: Iterable) -> np.ndarray:
    dom = FACTOR_DOMAINS[factor]
    p = np.zeros((len(dom), len(dom)))
    for v in values:
        i = dom.index(v)
        p[i, i] = 1.0
    return p
