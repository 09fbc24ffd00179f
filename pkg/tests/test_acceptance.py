"""Acceptance criteria, one test each, at the stated tolerances.

Every test records a one-line verdict; the lines are printed in the pytest
terminal summary and also when this file is run as a script.
"""

import math
import sys

import numpy as np
import pytest

from eraser_sim.correlations import (
    conditioned_fringe, g1_grid, phase_grid, sample_events, two_particle_visibility,
    visibility_from_counts,
)
from eraser_sim.experiments import (
    coherence_dataset, filtered_biphoton, run_conditional, run_conventional, run_double_partial,
)
from eraser_sim.measures import concurrence, predictability, visibility_analytic

T21 = [float(x) for x in np.linspace(0, 1, 21)]
M11 = [float(x) for x in np.linspace(0, 1, 11)]

RESULTS: dict[int, str] = {}


def record(n, ok, text):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n:2d}: {text}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def closed_C(t, M):
    return 2 * M * math.sqrt(t) / (1 + t)


def test_01_erasure_equality_pure():
    worst = 0.0
    for t in T21:
        sim = run_conventional(t, 1.0).simulated
        worst = max(worst, abs(sim.P**2 + sim.C**2 - 1))
    record(1, worst <= 1e-12, f"P^2 + C^2 = 1 over 21 t values, max dev {worst:.2e} (tol 1e-12)")


def test_02_conditional_eraser_headline():
    dv = ds = df = 0.0
    gap = math.inf
    for t in (0.1, 0.25, 0.5, 0.75, 0.9):
        r = run_conditional(t, t, 1.0)
        sim = r.simulated
        dv = max(dv, abs(sim.V_QE_cond - 1))
        ds = max(ds, abs(sim.S - 2 * t / (1 + t)))
        P = (1 - t) / (1 + t)
        df = max(df, abs(r.extras["failure_probability"] - P), abs(r.extras["failure_probability"] - sim.P))
        gap = min(gap, sim.V_QE_cond - math.sqrt(1 - sim.P**2))
    ok = dv <= 1e-10 and gap > 0 and ds <= 1e-12 and df <= 1e-12
    record(2, ok, f"V_cond=1 dev {dv:.2e} (1e-10), min gap over sqrt(1-P^2) {gap:.3g} (>0), "
                  f"S dev {ds:.2e}, failure=P dev {df:.2e} (1e-12)")


def test_03_bound_chain():
    over = eq = 0.0
    strict = math.inf
    for t in T21:
        for tb in T21:
            r = run_conditional(t, tb, 1.0)
            if r.degenerate:
                continue
            sim = r.simulated
            lhs = sim.S * sim.C_cond
            over = max(over, lhs - sim.C)
            if tb == 1.0:
                eq = max(eq, abs(lhs - sim.C))
            elif t > 0:
                strict = min(strict, sim.C - lhs)
    ok = over <= 1e-12 and eq <= 1e-12 and strict > 1e-12
    record(3, ok, f"S C_cond <= C on 21x21: max excess {over:.2e}, equality dev at t_bs=1 {eq:.2e}, "
                  f"min gap at t_bs<1, t>0 {strict:.3g}")


def test_04_wootters_oracle():
    worst = 0.0
    for t in T21:
        for m in M11:
            worst = max(worst, abs(concurrence(filtered_biphoton(t, m)[0]) - closed_C(t, m)))
    record(4, worst <= 1e-9, f"numerical concurrence vs 2M sqrt(t)/(1+t) on 21x11, max dev {worst:.2e} (tol 1e-9)")


def test_05_two_particle_visibility():
    worst = 0.0
    for t in T21:
        for m in M11:
            rho = filtered_biphoton(t, m)[0]
            v12 = two_particle_visibility(rho)
            worst = max(worst, abs(v12 - concurrence(rho)), abs(v12 - closed_C(t, m)))
    record(5, worst <= 1e-9, f"phase-scan V12 vs concurrence on 21x11, max dev {worst:.2e} (tol 1e-9)")


def test_06_mixed_complementarity_and_fig4():
    worst = 0.0
    for t in T21:
        for m in M11:
            rho = filtered_biphoton(t, m)[0]
            P, C = predictability(rho), concurrence(rho)
            worst = max(worst, abs(C**2 + P**2 - (P**2 + m**2 * (1 - P**2))))
    fig = 0.0
    for row in coherence_dataset(T21, M=0.5):
        t = row["t"]
        P = (1 - t) / (1 + t)
        fig = max(fig, abs(row["P_sq"] - P**2), abs(row["C_sq"] - closed_C(t, 0.5) ** 2),
                  abs(row["C_sq_plus_P_sq"] - (P**2 + 0.25 * (1 - P**2))))
    ok = worst <= 1e-12 and fig <= 1e-12
    record(6, ok, f"C^2+P^2 = P^2+M^2(1-P^2) on 21x11 max dev {worst:.2e}; M=1/2 dataset max dev {fig:.2e} (tol 1e-12)")


def test_07_conventional_mixed_bound():
    worst = 0.0
    for t in T21:
        for m in M11:
            sim = run_conventional(t, m).simulated
            worst = max(worst, abs(sim.V_QE - closed_C(t, m)), abs(sim.V_QE - m * math.sqrt(1 - sim.P**2)))
    record(7, worst <= 1e-10, f"V_QE = M 2 sqrt(t)/(1+t) = M sqrt(1-P^2) on 21x11, max dev {worst:.2e} (tol 1e-10)")


def test_08_double_partial():
    worst = 0.0
    for t1 in (0.1, 0.5, 0.9):
        for t2 in (0.1, 0.5, 0.9):
            ex = run_double_partial(t1, t2).extras
            K = (1 - t1) / (1 + t1)
            devs = [
                ex["knowledge"] - K,
                ex["stage1_success"] - (1 + t1) / 2,
                ex["V_QE_stage1"] ** 2 - (1 - K**2),
                ex["intermediate_concurrence"] - math.sqrt(t1),
                ex["joint_success"] - (t1 + t2) / 2,
            ]
            if t1 == t2:
                devs.append(ex["V_final"] - 1.0)
            worst = max(worst, max(abs(d) for d in devs))
    record(8, worst <= 1e-10, f"two-device K, success, V_QE^2=1-K^2, sqrt(t1), (t1+t2)/2, V=1: max dev {worst:.2e} (tol 1e-10)")


def _coverage(t, runs=100, n=100_000):
    rho = filtered_biphoton(t, 1.0)[0]
    truth = closed_C(t, 1.0)
    hits = 0
    for seed in range(runs):
        est, se = visibility_from_counts(sample_events(rho, n, seed))
        hits += abs(est - truth) < 3 * se
    return hits


def test_09_monte_carlo():
    quarter, bell = _coverage(0.25), _coverage(1.0)
    ok = quarter >= 99 and bell >= 99
    record(9, ok, f"n=1e5, seeds 0..99, within 3 stderr: t=1/4 {quarter}/100, Bell {bell}/100 (need 99)")


def test_10_no_coincidence_flatness():
    phases = phase_grid(64)
    worst = 0.0
    for t in T21:
        for m in T21:
            rho = filtered_biphoton(t, m)[0]
            fringe = g1_grid(rho, "sigma", phases)
            worst = max(worst, visibility_analytic(rho), (fringe.max() - fringe.min()) / (fringe.max() + fringe.min()))
    record(10, worst < 1e-12, f"unconditioned sigma contrast on 21x21 (t, M), max {worst:.2e} (< 1e-12)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
