"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test records a one-line PASS/FAIL summary; ``conftest.py`` prints them
at the end of the session. Run this module alone with::

    pytest tests/test_acceptance.py -v
"""
from __future__ import annotations

import io
import time
from dataclasses import replace

import numpy as np
import pytest

from ggpeps import fock
from ggpeps.gaussian import (
    MajoranaCovariance,
    PairingMatrix,
    apply_phase_rotation,
    covariance_from_pairing,
    gaussian_map,
    overlap_weight,
    vacuum_covariance,
)
from ggpeps.lattice import TorusLattice, gauge_transform_config, random_config
from ggpeps.montecarlo import McConfig, exact_enumerate, run_chain
from ggpeps.observables import observables_by_name
from ggpeps.sweep import Grid, RunSpec, detect_spikes, execute
from ggpeps.weight import VertexTensorParams, WeightCache, assemble, log_weight

RESULTS: dict[int, str] = {}
DIAGNOSTICS: list[str] = []


def record(number: int, title: str, passed: bool, detail: str) -> None:
    RESULTS[number] = f"{'PASS' if passed else 'FAIL'} criterion {number} ({title}): {detail}"
    print(RESULTS[number])


def random_pairing(rng, n):
    a = rng.normal(size=(n, n))
    return a - a.T


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = {"covariance": 0.0, "rotation": 0.0, "map": 0.0, "overlap": 0.0}
    for trial in range(200):
        n = 2 + trial % 4
        t = random_pairing(rng, n)
        state = fock.pairing_state(t)
        cov = covariance_from_pairing(PairingMatrix(t))
        worst["covariance"] = max(worst["covariance"], np.abs(cov.gamma - state.covariance()).max())

        modes = list(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
        angles = list(rng.uniform(-np.pi, np.pi, size=len(modes)))
        rotated = apply_phase_rotation(cov, modes, angles).gamma
        worst["rotation"] = max(worst["rotation"],
                                np.abs(rotated - state.phase_rotated(modes, angles).covariance()).max())

        n_keep = int(rng.integers(1, n))
        onto = fock.pairing_state(random_pairing(rng, n - n_keep))
        mapped = gaussian_map(cov, n_keep, MajoranaCovariance(onto.covariance())).gamma
        worst["map"] = max(worst["map"], np.abs(mapped - fock.project(state, n_keep, onto).covariance()).max())

        other_t = random_pairing(rng, n)
        ov = overlap_weight(cov, covariance_from_pairing(PairingMatrix(other_t)))
        worst["overlap"] = max(worst["overlap"], abs(ov - fock.overlap_squared(state, fock.pairing_state(other_t))))
    elapsed = time.perf_counter() - start
    passed = max(worst.values()) < 1e-9 and elapsed < 30
    record(1, "Gaussian engine vs Fock oracle", passed,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f" (tol 1e-9), {elapsed:.1f}s (< 30s)")
    assert passed


def test_criterion_2_overlap_formula():
    rng = np.random.default_rng(202)
    a = covariance_from_pairing(PairingMatrix(random_pairing(rng, 4)))
    identical = abs(overlap_weight(a, a) - 1.0)
    vac = vacuum_covariance(3)
    filled = MajoranaCovariance(-vac.gamma)
    one_flipped = vac.gamma.copy()
    one_flipped[:2, :2] *= -1
    orthogonal = max(overlap_weight(vac, filled), overlap_weight(vac, MajoranaCovariance(one_flipped)))
    worst = 0.0
    for trial in range(100):
        n = 1 + trial % 5
        ta, tb = random_pairing(rng, n), random_pairing(rng, n)
        got = overlap_weight(covariance_from_pairing(PairingMatrix(ta)), covariance_from_pairing(PairingMatrix(tb)))
        worst = max(worst, abs(got - fock.overlap_squared(fock.pairing_state(ta), fock.pairing_state(tb))))
    passed = identical < 1e-12 and orthogonal < 1e-12 and worst < 1e-10
    record(2, "overlap formula", passed,
           f"identical {identical:.1e}, orthogonal {orthogonal:.1e} (tol 1e-12), random pairs {worst:.1e} (tol 1e-10)")
    assert passed


def test_criterion_3_gauge_invariance():
    rng = np.random.default_rng(303)
    lat = TorusLattice(4, 4)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(5):
        y, z = rng.uniform(0, 2, size=2)
        a = assemble(lat, VertexTensorParams(y, z))
        for _ in range(50):
            g = random_config(lat, a.group, rng)
            h = rng.choice(a.group.labels, size=lat.n_vertices)
            moved = gauge_transform_config(lat, g, h, a.group)
            worst = max(worst, abs(np.expm1(log_weight(a, moved) - log_weight(a, g))))
    elapsed = time.perf_counter() - start
    passed = worst < 1e-9 and elapsed < 120
    record(3, "gauge invariance of the weight", passed,
           f"max relative change {worst:.1e} (tol 1e-9), {elapsed:.1f}s (< 120s)")
    assert passed


def test_criterion_4_incremental_determinant():
    rng = np.random.default_rng(404)
    lat = TorusLattice(4, 4)
    a = assemble(lat, VertexTensorParams(0.9, 1.2))
    cache = WeightCache(a, random_config(lat, a.group, rng))
    worst = 0.0
    for _ in range(1000):
        link = int(rng.integers(lat.n_links))
        q_new = int(a.group.wrap(cache.config[link] + rng.integers(1, a.group.order)))
        ratio = cache.ratio(link, q_new)
        trial = cache.config.copy()
        trial[link] = q_new
        exact = np.exp(log_weight(a, trial) - cache.log_weight)
        worst = max(worst, abs(ratio / exact - 1.0))
        if rng.random() < 0.5:
            cache.commit()
        else:
            cache.rollback()

    # cycle: 200 moves out, then undo them in reverse order; the product of ratios must return to 1
    cache = WeightCache(a, random_config(lat, a.group, rng), refresh_interval=10**9)
    start_config = cache.config.copy()
    log_product = 0.0
    undo = []
    for _ in range(200):
        link = int(rng.integers(lat.n_links))
        undo.append((link, int(cache.config[link])))
        log_product += np.log(cache.ratio(link, int(a.group.wrap(cache.config[link] + 1))))
        cache.commit()
    for link, q in reversed(undo):
        log_product += np.log(cache.ratio(link, q))
        cache.commit()
    drift = abs(np.expm1(log_product))
    passed = worst < 1e-8 and drift < 1e-6 and np.array_equal(cache.config, start_config)
    record(4, "incremental vs full determinant", passed,
           f"max relative ratio error {worst:.1e} (tol 1e-8), cycle drift {drift:.1e} (tol 1e-6)")
    assert passed


MC_POINTS = [(0.5, 0.5), (1.5, 0.5), (0.5, 1.5)]
MC_SEEDS = 20
MC_CONFIG = dict(n_burn_sweeps=300, n_measure_sweeps=6000, bin_size=150)


@pytest.mark.slow
def test_criterion_5_mc_vs_enumeration():
    lat = TorusLattice(2, 2)
    obs = observables_by_name(lat, ["W11"])
    start = time.perf_counter()
    summary, passed = [], True
    for y, z in MC_POINTS:
        a = assemble(lat, VertexTensorParams(y, z))
        exact = exact_enumerate(a, obs)[0].real
        hits, worst_err = 0, 0.0
        for seed in range(MC_SEEDS):
            est = run_chain(a, McConfig(seed, **MC_CONFIG), obs)[0]
            hits += abs(est.mean.real - exact) < 3 * est.stderr
            worst_err = max(worst_err, est.stderr)
        resolvable = 3 * worst_err < 0.05
        passed &= hits >= 19 and resolvable
        summary.append(f"({y},{z}) exact {exact:.4f}: {hits}/20 within 3 stderr, max 3*stderr {3 * worst_err:.3f}")
    elapsed = time.perf_counter() - start
    passed &= elapsed < 600
    record(5, "MC vs exact enumeration on 2x2", passed,
           "; ".join(summary) + f" (need >=19/20 and 3*stderr < 0.05), {elapsed:.0f}s (< 600s)")
    assert passed


def test_criterion_6_degenerate_point():
    lat = TorusLattice(2, 2)
    a = assemble(lat, VertexTensorParams(0.0, 0.0))
    obs = observables_by_name(lat, ["W11"])
    exact = abs(exact_enumerate(a, obs)[0])
    rate = run_chain(a, McConfig(6, 50, 500, 50), obs)[0].acceptance_rate
    passed = exact < 1e-12 and rate > 0.99
    record(6, "degenerate point (0,0)", passed,
           f"|exact W11| {exact:.1e} (tol 1e-12), MC acceptance {rate:.4f} (> 0.99)")
    assert passed


SCAN = RunSpec(lattice="4x4", grid=Grid(0.5, 0.5, 1, 0.0, 2.0, 21), seed=7, burn=500, sweeps=8000, bin=200,
               observables=("W11_avg", "WL_avg"))


@pytest.mark.slow
def test_criterion_7_phase_transitions_ci():
    start = time.perf_counter()
    rows = execute(SCAN, io.StringIO())
    elapsed = time.perf_counter() - start
    zs = [r["z"] for r in rows if r["observable"] == "W11_avg"]
    w11 = [r["mean_re"] for r in rows if r["observable"] == "W11_avg"]
    wl = [r["mean_re"] for r in rows if r["observable"] == "WL_avg"]
    spikes = detect_spikes(w11)
    diffs = np.abs(np.diff(w11))
    ratios = diffs / np.median(diffs)
    passed = len(spikes) >= 2 and elapsed < 1800
    steps = ", ".join(f"z {zs[i]:.1f}->{zs[i + 1]:.1f}" for i in spikes) or "none"
    record(7, "plaquette jumps along y=0.5, 4x4 CI mode", passed,
           f"{len(spikes)} abrupt steps ({steps}); largest steps {np.sort(ratios)[-3:][::-1].round(2)} x median "
           f"(need >= 2 above 5x), {elapsed:.0f}s (< 1800s)")

    # diagnostic only: inside the low-z plateau the line should vary smoothly
    plateau = [v for z, v in zip(zs, wl) if z <= 0.6 + 1e-9]
    DIAGNOSTICS.append(f"DIAG criterion 7: W_L spikes inside the z <= 0.6 plateau: {detect_spikes(plateau)}; "
                       f"W_L spikes along the full scan: {detect_spikes(wl)}")
    assert passed


def test_criterion_8_determinism():
    spec = RunSpec(lattice="2x2", grid=Grid(0.5, 1.0, 2, 0.5, 1.0, 2), seed=12345, burn=20, sweeps=200, bin=20,
                   workers=1)
    first, second = io.StringIO(), io.StringIO()
    execute(spec, first)
    execute(spec, second)
    pooled = io.StringIO()
    execute(replace(spec, workers=2), pooled)
    other_seed = io.StringIO()
    execute(replace(spec, seed=12346), other_seed)
    passed = (first.getvalue() == second.getvalue() == pooled.getvalue()
              and first.getvalue() != other_seed.getvalue())
    record(8, "determinism", passed,
           f"same seed byte-identical: {first.getvalue() == second.getvalue()}, "
           f"worker count invariant: {first.getvalue() == pooled.getvalue()}, "
           f"different seed differs: {first.getvalue() != other_seed.getvalue()}")
    assert passed
