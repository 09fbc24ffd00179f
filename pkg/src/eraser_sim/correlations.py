"""Intensity correlations, fringe visibilities and coincidence sampling.

Detector geometry enters only through the interference phase ``phi`` at the
detector.  A photon emitted by atom A reaches it with amplitude 1, one from
atom B with amplitude ``exp(-1j * phi)``, so a detector at ``phi`` projects
the path state onto ``<A| + exp(-1j phi) <B|``.  Averaged over ``phi`` this
POVM resolves the identity on the primary ports; photons in alternate ports
never reach an interference detector.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence, TextIO

import numpy as np

from .serialize import fmt17
from .qstate import (
    FACTOR_DOMAINS,
    REGISTER_FACTORS,
    DensityOperator,
    QStateError,
    as_density,
    dims_of,
    sector_matrix,
)

GRID_POINTS = 64
BATCH_SIZE = 1 << 16
THREADS_ENV = "ERASER_SIM_THREADS"

_GOLDEN = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class DetectorPosition:
    phase: float
    polarization: str = "sigma"
    envelope_weight: float = 1.0

    def __post_init__(self):
        if self.polarization not in ("sigma", "pi"):
            raise ValueError(f"polarization must be 'sigma' or 'pi', got {self.polarization!r}")
        if not self.envelope_weight > 0:
            raise ValueError("envelope weight must be positive")

    @classmethod
    def with_dipole(cls, phase: float, polarization: str, params: "DipoleParams") -> "DetectorPosition":
        return cls(phase, polarization, dipole_envelope(params))


@dataclass(frozen=True)
class DipoleParams:
    polarization_axis: tuple[float, float, float]
    observation_direction: tuple[float, float, float]
    overall_scale: float = 1.0

    def __post_init__(self):
        for name in ("polarization_axis", "observation_direction"):
            v = np.asarray(getattr(self, name), dtype=float)
            n = np.linalg.norm(v)
            if n == 0:
                raise ValueError(f"{name} is the zero vector")
            if abs(n - 1) > 1e-12:
                raise ValueError(f"{name} must be a unit vector (norm {n:.15g})")


def dipole_envelope(p: DipoleParams) -> float:
    """Dipole intensity factor ``|(e x r) x r|^2 * scale^2`` for unit ``e``, ``r``."""
    e = np.asarray(p.polarization_axis, dtype=float)
    r = np.asarray(p.observation_direction, dtype=float)
    if not np.any(e) or not np.any(r):
        raise ValueError("zero direction vector")
    transverse = np.cross(np.cross(e, r), r)
    return float(np.dot(transverse, transverse) * p.overall_scale**2)


def phase_grid(n: int = GRID_POINTS) -> np.ndarray:
    return 2 * np.pi * np.arange(n) / n


def _detection_rows(phases) -> np.ndarray:
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    return np.stack([np.ones_like(phases, dtype=complex), np.exp(-1j * phases)], axis=-1)


def _pair_block(rho) -> np.ndarray:
    """4x4 primary-port block in sigma x pi order; raw blocks pass through."""
    if isinstance(rho, np.ndarray):
        if rho.shape != (4, 4):
            raise QStateError(f"expected a 4x4 sigma x pi block, got {rho.shape}")
        return rho
    return sector_matrix(as_density(rho), keep=("sigma", "pi"))


def _path_block(rho, polarization: str) -> np.ndarray:
    if isinstance(rho, np.ndarray):
        t = _pair_block(rho).reshape(2, 2, 2, 2)
        return np.einsum("abcb->ac", t) if polarization == "sigma" else np.einsum("abad->bd", t)
    return sector_matrix(as_density(rho), keep=(polarization,))


def g1_grid(rho, polarization: str, phases, weight: float = 1.0) -> np.ndarray:
    block = _path_block(rho, polarization)
    e = _detection_rows(phases)
    return weight * np.einsum("ki,ij,kj->k", e, block, e.conj()).real


def g1(rho, d: DetectorPosition) -> float:
    """Mean intensity ``w [p_A + p_B + 2 Re(rho_AB exp(i phi))]`` at ``d``."""
    return float(g1_grid(rho, d.polarization, [d.phase], d.envelope_weight)[0])


def g2_grid(rho, phases_sigma, phases_pi, weights=(1.0, 1.0)) -> np.ndarray:
    """Joint detection rate on the grid ``phases_sigma x phases_pi``."""
    block = _pair_block(rho).reshape(2, 2, 2, 2)
    es, ep = _detection_rows(phases_sigma), _detection_rows(phases_pi)
    outer_s = es[:, :, None] * es.conj()[:, None, :]
    outer_p = ep[:, :, None] * ep.conj()[:, None, :]
    val = (outer_s.reshape(-1, 4) @ block.transpose(0, 2, 1, 3).reshape(4, 4) @ outer_p.reshape(-1, 4).T).real
    return weights[0] * weights[1] * val


def g2(rho, d_sigma: DetectorPosition, d_pi: DetectorPosition) -> float:
    """Second-order correlation ``<I_sigma I_pi>`` for one detector pair."""
    _check_pair(d_sigma, d_pi)
    w = (d_sigma.envelope_weight, d_pi.envelope_weight)
    return float(g2_grid(rho, [d_sigma.phase], [d_pi.phase], w)[0, 0])


def corrected_g2_grid(rho, phases_sigma, phases_pi, weights=(1.0, 1.0)) -> np.ndarray:
    """``G2 - G1_sigma G1_pi + w_sigma w_pi`` on a phase grid.

    The envelope product is in the same units as ``G1 G1``, so a product
    state gives exactly ``w_sigma w_pi`` everywhere.
    """
    raw = g2_grid(rho, phases_sigma, phases_pi, weights)
    gs = g1_grid(rho, "sigma", phases_sigma, weights[0])
    gp = g1_grid(rho, "pi", phases_pi, weights[1])
    return raw - np.outer(gs, gp) + weights[0] * weights[1]


def corrected_g2(rho, d_sigma: DetectorPosition, d_pi: DetectorPosition) -> float:
    _check_pair(d_sigma, d_pi)
    w = (d_sigma.envelope_weight, d_pi.envelope_weight)
    return float(corrected_g2_grid(rho, [d_sigma.phase], [d_pi.phase], w)[0, 0])


def _check_pair(d_sigma, d_pi):
    if d_sigma.polarization != "sigma" or d_pi.polarization != "pi":
        raise ValueError("expected a sigma detector and a pi detector")


def _golden_max(f, lo: float, hi: float, tol: float = 1e-11) -> tuple[float, float]:
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
    x = (a + b) / 2
    return x, f(x)


def _refine(fun, phases, grid, sign: float) -> float:
    """Grid extremum of ``sign * fun`` refined by one golden pass per axis."""
    i, j = np.unravel_index(np.argmax(sign * grid), grid.shape)
    step = phases[1] - phases[0]
    xs, xp = phases[i], phases[j]
    xs, _ = _golden_max(lambda x: sign * fun(x, xp), xs - step, xs + step)
    xp, best = _golden_max(lambda x: sign * fun(xs, x), xp - step, xp + step)
    return sign * max(best, sign * grid[i, j])


def two_particle_visibility(rho, n_grid: int = GRID_POINTS, weights=(1.0, 1.0)) -> float:
    """Contrast ``(max - min)/(max + min)`` of the corrected correlator.

    Both detector phases are scanned over ``n_grid`` points each; the grid
    extrema are then refined by golden-section search along each phase.
    """
    block = _pair_block(rho)
    phases = phase_grid(n_grid)
    grid = corrected_g2_grid(block, phases, phases, weights)

    def fun(ps, pp):
        return float(corrected_g2_grid(block, [ps], [pp], weights)[0, 0])

    hi = _refine(fun, phases, grid, +1.0)
    lo = _refine(fun, phases, grid, -1.0)
    if hi + lo <= 1e-300:
        raise QStateError("corrected correlator vanishes everywhere")
    return float(np.clip((hi - lo) / (hi + lo), 0.0, 1.0))


def conditioned_sigma_block(rho, pi_phase: float = 0.0) -> np.ndarray:
    """Unnormalized sigma-path operator given a pi click at ``pi_phase``."""
    block = _pair_block(rho).reshape(2, 2, 2, 2)
    e = _detection_rows([pi_phase])[0]
    return np.einsum("b,abcd,d->ac", e, block, e.conj())


def conditioned_fringe(rho, equidistant_pi_detector: Optional[DetectorPosition] = None) -> float:
    """Sigma fringe visibility in coincidence with the erasing pi detector.

    The pi detector defaults to the equidistant point, ``phi_pi = 0``,
    which projects the pi path onto ``(pi_A + pi_B)/sqrt(2)``.
    """
    det = equidistant_pi_detector or DetectorPosition(0.0, "pi")
    if det.polarization != "pi":
        raise ValueError("the conditioning detector must watch the pi photon")
    sig = conditioned_sigma_block(rho, det.phase)
    norm = sig[0, 0].real + sig[1, 1].real
    if norm <= 1e-15:
        raise QStateError("conditioning detector never fires")
    return float(2 * abs(sig[0, 1]) / norm)


# ---------------------------------------------------------------------------
# Monte Carlo


@dataclass(frozen=True)
class CoincidenceCounts:
    """Histogram of sampled events.

    ``bins[k, i, j]`` counts events with register outcome ``outcomes[k]``
    and both photons detected, the sigma photon at ``phases[i]`` and the pi
    photon at ``phases[j]``.  ``lost[k]`` counts events with that outcome in
    which a photon missed the interference detectors (alternate port or
    detector inefficiency).
    """

    phases: np.ndarray = field(repr=False)
    outcomes: tuple[str, ...]
    bins: np.ndarray = field(repr=False)
    lost: np.ndarray
    total: int
    seed: int

    def __post_init__(self):
        if self.bins.sum() + self.lost.sum() != self.total:
            raise ValueError("histogram does not sum to the event total")

    def to_csv(self, fh: Optional[TextIO] = None) -> str:
        """CSV with columns ``phi_sigma, phi_pi, outcome, count``.

        Lost events have empty phase fields.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["phi_sigma", "phi_pi", "outcome", "count"])
        n = len(self.phases)
        for k, out in enumerate(self.outcomes):
            for i in range(n):
                for j in range(n):
                    w.writerow([fmt17(self.phases[i]), fmt17(self.phases[j]), out, int(self.bins[k, i, j])])
            w.writerow(["", "", f"{out}|lost", int(self.lost[k])])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def _outcome_blocks(rho: DensityOperator) -> list[tuple[str, np.ndarray, float]]:
    registers = [f for f in rho.factors if f in REGISTER_FACTORS]
    if not registers:
        return [("none", _pair_block(rho), 1.0)]
    rest = tuple(f for f in rho.factors if f not in registers)
    dims = dims_of(rho.factors)
    n = len(dims)
    t = rho.matrix.reshape(dims + dims)
    out = []
    for values in product(*(FACTOR_DOMAINS[r] for r in registers)):
        index = [slice(None)] * (2 * n)
        for r, v in zip(registers, values):
            k = rho.factors.index(r)
            pos = FACTOR_DOMAINS[r].index(v)
            index[k] = index[n + k] = pos
        sub = t[tuple(index)]
        d = int(np.prod(dims_of(rest)))
        sub = sub.reshape(d, d)
        weight = float(np.trace(sub).real)
        if weight <= 1e-15:
            continue
        label = ",".join(f"{r}={v}" for r, v in zip(registers, values))
        out.append((label, sector_matrix(sub, rest, keep=("sigma", "pi")), weight))
    return out


def event_distribution(rho, n_grid: int = GRID_POINTS, efficiency: float = 1.0):
    """Exact probabilities behind :func:`sample_events`.

    Returns ``(outcomes, p_bins, p_lost)`` with ``p_bins`` of shape
    ``(n_outcomes, n_grid, n_grid)``.  Detectors sit exactly at the grid
    phases; the discrete POVM ``E(phi)^H E(phi) / n_grid`` resolves the
    identity on the primary ports for ``n_grid >= 2``.
    """
    if not 0.0 <= efficiency <= 1.0:
        raise ValueError("efficiency must lie in [0, 1]")
    rho = as_density(rho)
    phases = phase_grid(n_grid)
    labels, p_bins, p_lost = [], [], []
    for label, block, weight in _outcome_blocks(rho):
        screen = g2_grid(block, phases, phases) / n_grid**2
        screen = efficiency * np.clip(screen, 0.0, None)
        labels.append(label)
        p_bins.append(screen)
        p_lost.append(max(weight - screen.sum(), 0.0))
    return tuple(labels), np.array(p_bins), np.array(p_lost)


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def _batch_counts(cdf: np.ndarray, seed: int, batch: int, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(batch,))))
    u = rng.random(size)
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.bincount(np.minimum(idx, cdf.size - 1), minlength=cdf.size)


def sample_events(
    rho,
    n: int,
    seed: int,
    n_grid: int = GRID_POINTS,
    efficiency: float = 1.0,
) -> CoincidenceCounts:
    """Draw ``n`` coincidence events by inverse-CDF sampling.

    Events are generated in fixed batches of ``BATCH_SIZE``; batch ``k``
    uses a PCG64 stream seeded by ``SeedSequence(seed, spawn_key=(k,))``.
    Batches may run on up to ``$ERASER_SIM_THREADS`` worker threads and are
    summed in batch order, so the histogram depends only on
    ``(rho, n, seed, n_grid, efficiency)``.
    """
    if n < 1:
        raise ValueError("need at least one event")
    outcomes, p_bins, p_lost = event_distribution(rho, n_grid, efficiency)
    flat = np.concatenate([p_bins.reshape(-1), p_lost])
    cdf = np.cumsum(flat)
    sizes = [BATCH_SIZE] * (n // BATCH_SIZE)
    if n % BATCH_SIZE:
        sizes.append(n % BATCH_SIZE)
    jobs = list(enumerate(sizes))
    workers = min(_threads(), len(jobs))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _batch_counts(cdf, seed, job[0], job[1]), jobs))
    else:
        parts = [_batch_counts(cdf, seed, k, size) for k, size in jobs]
    counts = np.sum(parts, axis=0)
    n_out = len(outcomes)
    bins = counts[: n_out * n_grid * n_grid].reshape(n_out, n_grid, n_grid)
    lost = counts[n_out * n_grid * n_grid:]
    return CoincidenceCounts(phase_grid(n_grid), outcomes, bins, lost, int(n), int(seed))


def fit_fringe(
    phases: Sequence[float], rates: Sequence[float], counts: bool = False
) -> tuple[float, float]:
    """Least-squares fit of ``a + b cos(phi + delta)``; returns ``(|b|/a, stderr)``.

    By default the standard error comes from the fit covariance
    ``s^2 (X^T X)^-1`` with ``s^2`` the residual variance.  With
    ``counts=True`` the rates are treated as Poisson counts and the
    sandwich covariance ``(X^T X)^-1 X^T diag(mu) X (X^T X)^-1`` is used,
    ``mu`` being the fitted counts; this accounts for bins with different
    count levels having different noise.  Either covariance is propagated
    to ``|b|/a`` to first order.
    """
    phases = np.asarray(phases, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if phases.size < 3 or np.count_nonzero(rates) < 2:
        raise ValueError("fringe fit needs at least 3 phases and 2 occupied bins")
    x = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    coef, *_ = np.linalg.lstsq(x, rates, rcond=None)
    a, c, s = coef
    if a <= 0:
        raise ValueError("degenerate fringe fit (non-positive offset)")
    b = math.hypot(c, s)
    xtx_inv = np.linalg.inv(x.T @ x)
    if counts:
        mu = np.clip(x @ coef, 0.0, None)
        cov = xtx_inv @ (x.T * mu) @ x @ xtx_inv
    else:
        resid = rates - x @ coef
        dof = phases.size - 3
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = s2 * xtx_inv
    if b > 0:
        grad = np.array([-b / a**2, c / (a * b), s / (a * b)])
        var = grad @ cov @ grad
    else:
        var = (cov[1, 1] + cov[2, 2]) / (2 * a**2)
    return b / a, math.sqrt(max(var, 0.0))


def visibility_from_counts(
    c: CoincidenceCounts,
    outcome: Optional[str] = None,
    mode: str = "pair",
    pi_bin: int = 0,
) -> tuple[float, float]:
    """Fitted fringe visibility and its standard error from a histogram.

    ``mode="pair"`` bins events by the summed phase ``phi_sigma + phi_pi``
    (the two-particle fringe); ``mode="sigma"`` keeps only events with the
    pi photon in bin ``pi_bin`` and fits the sigma fringe.  ``outcome``
    selects one register outcome; ``None`` pools all of them.
    """
    if c.total <= 0:
        raise ValueError("empty histogram")
    if outcome is None:
        hist = c.bins.sum(axis=0)
    else:
        if outcome not in c.outcomes:
            raise KeyError(f"no outcome {outcome!r}; have {c.outcomes}")
        hist = c.bins[c.outcomes.index(outcome)]
    n = len(c.phases)
    if mode == "pair":
        rates = np.zeros(n, dtype=float)
        idx = (np.arange(n)[:, None] + np.arange(n)[None, :]) % n
        np.add.at(rates, idx.ravel(), hist.ravel())
    elif mode == "sigma":
        rates = hist[:, pi_bin].astype(float)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return fit_fringe(c.phases, rates, counts=True)
