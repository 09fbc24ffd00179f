"""Complementarity measures, closed form and numerical.

Numerical measures take a :class:`~eraser_sim.qstate.DensityOperator`
(registers and alternate ports are ignored) and are meant to be compared
against the closed forms in :func:`closed_form_suite` and
:func:`double_partial_closed_form`.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from .jacobi import jacobi_eigh
from .qstate import EPS_PROB, NEGATIVITY_TOL, DensityOperator, QStateError, sector_matrix

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(SIGMA_Y, SIGMA_Y)

_ZERO_WEIGHT = 1e-15


@dataclass(frozen=True)
class MeasureRecord:
    """Predictability, visibilities, knowledge and concurrences of one setup.

    Conditional fields are ``None`` when ``degenerate`` is set (the
    post-selected branch has zero probability).
    """

    P: float
    V: float
    K: float
    D: float
    C: float
    V_QE: float
    S: float
    P_cond: Optional[float]
    C_cond: Optional[float]
    V_QE_cond: Optional[float]
    degenerate: bool = False

    KEYS = ("P", "V", "K", "D", "C", "V_QE", "S", "P_cond", "C_cond", "V_QE_cond")

    def to_dict(self) -> dict:
        return asdict(self)


def _check_unit(name, x):
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {x!r}")
    return x


def _sigma_block(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return sector_matrix(rho, keep=("sigma",))
    mat = np.asarray(rho, dtype=complex)
    if mat.shape != (2, 2):
        raise QStateError("expected a 2x2 sigma-path matrix")
    return mat


def _populations(block):
    p_a, p_b = block[0, 0].real, block[1, 1].real
    if p_a + p_b <= _ZERO_WEIGHT:
        raise QStateError("no interfering amplitude")
    return p_a, p_b


def predictability(rho_sigma) -> float:
    """Which-path predictability ``|p_A - p_B| / (p_A + p_B)``.

    ``rho_sigma`` is a reduced sigma-path operator; any other factors of a
    :class:`DensityOperator` are traced out first.
    """
    p_a, p_b = _populations(_sigma_block(rho_sigma))
    return float(abs(p_a - p_b) / (p_a + p_b))


def predictability_complement(rho_sigma) -> float:
    """``sqrt(1 - P^2)`` evaluated as ``2 sqrt(p_A p_B) / (p_A + p_B)``.

    Same value as from :func:`predictability`, without the cancellation in
    ``1 - P^2`` when ``P`` is close to 1.
    """
    p_a, p_b = _populations(_sigma_block(rho_sigma))
    return float(2 * np.sqrt(max(p_a, 0.0)) * np.sqrt(max(p_b, 0.0)) / (p_a + p_b))


def visibility_analytic(rho_sigma) -> float:
    """Single-photon fringe contrast ``2 |rho_AB| / (p_A + p_B)``."""
    block = _sigma_block(rho_sigma)
    p_a, p_b = _populations(block)
    return float(2 * abs(block[0, 1]) / (p_a + p_b))


def knowledge_from_partial_measurement(t1: float) -> float:
    """Which-path knowledge ``(1 - t1)/(1 + t1)`` left by a no-click readout."""
    t1 = _check_unit("t1", t1)
    return (1 - t1) / (1 + t1)


def path_block(rho: DensityOperator) -> np.ndarray:
    """4x4 block on ``{pi_A, pi_B} x {sigma_A, sigma_B}`` (pi factor first)."""
    block = sector_matrix(rho, keep=("sigma", "pi"))
    if np.trace(block).real < np.trace(rho.matrix).real - 1e-12:
        raise QStateError("state has weight outside the primary-port block")
    return block.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)


def concurrence(rho: Union[DensityOperator, np.ndarray]) -> float:
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_i`` are the square roots, in descending order, of the
    eigenvalues of ``rho rho~`` with ``rho~ = (Y x Y) rho* (Y x Y)``.

    With ``rho = X X^H`` (columns of ``X`` are eigenvectors scaled by the
    root of their eigenvalue) the ``l_i`` equal the singular values of the
    symmetric matrix ``X^T (Y x Y) X``.  Those are read off the Hermitian
    dilation ``[[0, tau], [tau^H, 0]]``, which keeps the absolute error at
    round-off level even for pure states, where a square root of ``rho``
    would amplify round-off to ~1e-8.  Unnormalized input is accepted; the
    result then scales linearly with the trace.
    """
    mat = path_block(rho) if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    if mat.shape != (4, 4):
        raise QStateError(f"concurrence needs a 4x4 two-qubit matrix, got {mat.shape}")
    if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
        raise QStateError("concurrence needs a Hermitian matrix")
    w, v = jacobi_eigh(mat)
    if w[0] < -NEGATIVITY_TOL:
        raise QStateError(f"matrix has eigenvalue {w[0]:.3g} below -{NEGATIVITY_TOL:g}")
    x = v * np.sqrt(np.clip(w, 0.0, None))
    tau = x.T @ _YY @ x
    dilation = np.block([[np.zeros((4, 4)), tau], [tau.conj().T, np.zeros((4, 4))]])
    s, _ = jacobi_eigh(dilation)
    lam = s[::-1][:4]
    return max(0.0, float(lam[0] - lam[1] - lam[2] - lam[3]))


def closed_form_suite(t: float, t_bs: float, M: float = 1.0) -> MeasureRecord:
    """All measures of the filtered biphoton with an eraser device.

    ``t`` is the filter transmittance, ``t_bs`` the device beamsplitter
    transmittance (``t_bs = 1`` is the plain eraser) and ``M`` the coherence
    factor.  At ``t = t_bs = 0`` the device never stays silent and the
    conditional fields are reported as ``None`` with ``degenerate=True``; the
    same holds whenever the silent-device probability is below ``EPS_PROB``.
    """
    t, t_bs, M = _check_unit("t", t), _check_unit("t_bs", t_bs), _check_unit("M", M)
    P = (1 - t) / (1 + t)
    C = float(2 * M * np.sqrt(t) / (1 + t))
    S = (t + t_bs) / (1 + t)
    degenerate = S < EPS_PROB
    if degenerate:
        P_cond = C_cond = None
    else:
        P_cond = abs(t - t_bs) / (t + t_bs)
        C_cond = float(2 * M * np.sqrt(t) * np.sqrt(t_bs) / (t + t_bs))
    return MeasureRecord(
        P=P, V=0.0, K=P, D=1.0, C=C, V_QE=C, S=S,
        P_cond=P_cond, C_cond=C_cond, V_QE_cond=C_cond, degenerate=degenerate,
    )


def double_partial_closed_form(t1: float, t2: float) -> dict:
    """Two partial which-way measurements on the unfiltered pure biphoton.

    The first device (transmittance ``t1``) watches the sigma photon from
    atom A, the second (``t2``) the pi photon from atom B.  Returned keys:

    ``knowledge``
        which-path knowledge after a silent first device
    ``stage1_success``
        probability that the first device stays silent
    ``V_QE_stage1``
        plain-eraser visibility after the first stage
    ``intermediate_concurrence``
        concurrence carried by the silent first-stage branch, weighted by
        its probability
    ``joint_success``
        probability that neither device clicks
    ``P_final``, ``C_final``, ``V_final``
        measures of the doubly post-selected state (``None`` when the
        second device, given a silent first one, stays silent with
        probability below ``EPS_PROB``)
    """
    t1, t2 = _check_unit("t1", t1), _check_unit("t2", t2)
    out = {
        "knowledge": (1 - t1) / (1 + t1),
        "stage1_success": (1 + t1) / 2,
        "V_QE_stage1": float(2 * np.sqrt(t1) / (1 + t1)),
        "intermediate_concurrence": float(np.sqrt(t1)),
        "joint_success": (t1 + t2) / 2,
    }
    if (t1 + t2) / (1 + t1) < EPS_PROB:
        out.update(P_final=None, C_final=None, V_final=None)
    else:
        c = float(2 * np.sqrt(t1) * np.sqrt(t2) / (t1 + t2))
        out.update(P_final=abs(t1 - t2) / (t1 + t2), C_final=c, V_final=c)
    return out
