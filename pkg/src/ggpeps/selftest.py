"""Invariant suite behind ``ggpeps selftest``.

Each check is small enough to finish in a few seconds. ``fault="unstaggered"``
builds the state without the staggering sign in the gauging phases, which the
gauge-invariance check must catch.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from ggpeps import fock
from ggpeps.gaussian import (
    MajoranaCovariance,
    PairingMatrix,
    apply_phase_rotation,
    covariance_from_pairing,
    gaussian_map,
    overlap_weight,
    rotation_matrix,
)
from ggpeps.lattice import TorusLattice, ZN, gauge_transform_config, random_config
from ggpeps.montecarlo import ChainState, acceptance_probability, chain_rng
from ggpeps.weight import (
    VertexTensorParams,
    WeightCache,
    assemble,
    global_rotation_angles,
    log_weight,
    log_weight_vertex_side,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    error: float
    tolerance: float
    seconds: float = 0.0


def random_pairing(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.normal(size=(n, n))
    return a - a.T


def check_oracle(rng, trials: int = 20) -> float:
    """Largest deviation of the Gaussian engine from the Fock oracle."""
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(2, 6))
        t = random_pairing(rng, n)
        state = fock.pairing_state(t)
        cov = covariance_from_pairing(PairingMatrix(t))
        worst = max(worst, np.abs(cov.gamma - state.covariance()).max())

        modes = list(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False))
        angles = list(rng.uniform(-np.pi, np.pi, size=len(modes)))
        rotated = apply_phase_rotation(cov, modes, angles).gamma
        worst = max(worst, np.abs(rotated - state.phase_rotated(modes, angles).covariance()).max())

        other = fock.pairing_state(random_pairing(rng, n))
        ov = overlap_weight(cov, MajoranaCovariance(other.covariance()))
        worst = max(worst, abs(ov - fock.overlap_squared(state, other)))

        if n >= 3:
            n_phys = int(rng.integers(1, n - 1))
            onto = fock.pairing_state(random_pairing(rng, n - n_phys))
            out = gaussian_map(cov, n_phys, MajoranaCovariance(onto.covariance())).gamma
            worst = max(worst, np.abs(out - fock.project(state, n_phys, onto).covariance()).max())
    return float(worst)


def check_purity(assembly) -> float:
    worst = 0.0
    for g in (assembly.m_d, assembly.gamma_bond):
        worst = max(worst, np.abs(g + g.T).max(), np.abs(g @ g + np.eye(len(g))).max())
    return float(worst)


def check_global_symmetry(assembly) -> float:
    lat, order = assembly.lattice, assembly.group.order
    worst = 0.0
    for q in assembly.group.labels:
        r = rotation_matrix(lat.n_modes, range(lat.n_modes), global_rotation_angles(lat, q, order))
        for g in (assembly.m_d, assembly.gamma_bond):
            worst = max(worst, np.abs(r @ g @ r.T - g).max())
    return float(worst)


def check_gauge_invariance(assembly, rng, trials: int = 5) -> float:
    lat, group = assembly.lattice, assembly.group
    worst = 0.0
    for _ in range(trials):
        g = random_config(lat, group, rng)
        h = rng.choice(group.labels, size=lat.n_vertices)
        diff = log_weight(assembly, gauge_transform_config(lat, g, h, group)) - log_weight(assembly, g)
        worst = max(worst, abs(np.expm1(diff)))
    return float(worst)


def check_charge_conjugation(assembly, rng, trials: int = 5) -> float:
    lat, group = assembly.lattice, assembly.group
    worst = 0.0
    for _ in range(trials):
        g = random_config(lat, group, rng)
        worst = max(worst, abs(np.expm1(log_weight(assembly, group.wrap(-g)) - log_weight(assembly, g))))
    return float(worst)


def check_two_sided(assembly, rng, trials: int = 3) -> float:
    lat, group = assembly.lattice, assembly.group
    worst = 0.0
    for _ in range(trials):
        g = random_config(lat, group, rng)
        worst = max(worst, abs(np.expm1(log_weight_vertex_side(assembly, g) - log_weight(assembly, g))))
    return float(worst)


def check_ratio(assembly, rng, moves: int = 200) -> float:
    lat, group = assembly.lattice, assembly.group
    cache = WeightCache(assembly, random_config(lat, group, rng))
    worst = 0.0
    for _ in range(moves):
        link = int(rng.integers(lat.n_links))
        q_new = int(group.wrap(cache.config[link] + rng.integers(1, group.order)))
        ratio = cache.ratio(link, q_new)
        trial = cache.config.copy()
        trial[link] = q_new
        exact = np.exp(log_weight(assembly, trial) - cache.log_weight)
        worst = max(worst, abs(ratio - exact) / exact)
        if rng.random() < 0.5:
            cache.commit()
        else:
            cache.rollback()
    return float(worst)


def check_detailed_balance(assembly, rng, pairs: int = 20) -> float:
    """``w(G) P(G->G') = w(G') P(G'->G)`` using the sampler's own ratios."""
    lat, group = assembly.lattice, assembly.group
    chain = ChainState(assembly, rng, random_config(lat, group, rng))
    worst = 0.0
    for _ in range(pairs):
        link = int(rng.integers(lat.n_links))
        q_old = int(chain.config[link])
        q_new = int(group.wrap(q_old + rng.integers(1, group.order)))
        forward = chain.cache.ratio(link, q_new)
        w_old = np.exp(chain.cache.log_weight)
        chain.cache.commit()
        backward = chain.cache.ratio(link, q_old)
        w_new = np.exp(chain.cache.log_weight)
        chain.cache.rollback()
        lhs = w_old * acceptance_probability(forward) / (group.order - 1)
        rhs = w_new * acceptance_probability(backward) / (group.order - 1)
        worst = max(worst, abs(lhs - rhs) / max(lhs, rhs))
    return float(worst)


def check_degenerate(rng, trials: int = 20) -> float:
    """At y = z = 0 every configuration has the same weight."""
    lat = TorusLattice(2, 2)
    assembly = assemble(lat, VertexTensorParams(0.0, 0.0))
    ref = log_weight(assembly, np.zeros(lat.n_links, dtype=np.int64))
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, abs(np.expm1(log_weight(assembly, random_config(lat, assembly.group, rng)) - ref)))
    return float(worst)


def run_selftest(seed: int = 0, fault: str | None = None) -> list[CheckResult]:
    rng = chain_rng(seed, 0)
    staggered = fault != "unstaggered"
    lat = TorusLattice(4, 4)
    assembly = assemble(lat, VertexTensorParams(1.0, 1.0), ZN(3), staggered=staggered)
    checks = [
        ("oracle equivalence", lambda: check_oracle(rng), 1e-9),
        ("purity and antisymmetry", lambda: check_purity(assembly), 1e-10),
        ("global Z3 symmetry", lambda: check_global_symmetry(assembly), 1e-12),
        ("gauge invariance", lambda: check_gauge_invariance(assembly, rng), 1e-9),
        ("charge conjugation", lambda: check_charge_conjugation(assembly, rng), 1e-10),
        ("bond- vs vertex-side gauging", lambda: check_two_sided(assembly, rng), 1e-10),
        ("ratio consistency", lambda: check_ratio(assembly, rng), 1e-8),
        ("detailed balance", lambda: check_detailed_balance(assembly, rng), 1e-8),
        ("degenerate point", lambda: check_degenerate(rng), 1e-10),
    ]
    results = []
    for name, fn, tol in checks:
        start = time.perf_counter()
        err = fn()
        results.append(CheckResult(name, bool(err < tol), err, tol, time.perf_counter() - start))
    return results


def print_table(results: list[CheckResult]) -> None:
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  error={r.error:.2e}  tol={r.tolerance:.0e}  ({r.seconds:.2f}s)")
    print(f"{sum(r.passed for r in results)}/{len(results)} checks passed")
