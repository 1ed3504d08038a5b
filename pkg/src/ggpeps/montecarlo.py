"""Metropolis sampling of p(G) ~ w(G), binned estimators, and exact enumeration."""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from ggpeps.gaussian import InvalidCovarianceError
from ggpeps.lattice import TorusLattice, format_config, parse_config
from ggpeps.observables import ObservableSpec
from ggpeps.weight import StateAssembly, VertexTensorParams, WeightCache, log_weight

logger = logging.getLogger(__name__)

MAX_ENUMERATION_STATES = 10**6
STUCK_ACCEPTANCE = 0.01


@dataclass(frozen=True)
class McConfig:
    master_seed: int
    n_burn_sweeps: int = 200
    n_measure_sweeps: int = 2000
    bin_size: int = 50
    measure_every: int = 1

    def __post_init__(self) -> None:
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        for name in ("n_burn_sweeps", "n_measure_sweeps", "bin_size", "measure_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.n_measure_sweeps % self.measure_every:
            raise ValueError("measure_every must divide n_measure_sweeps")
        if self.n_samples % self.bin_size:
            raise ValueError(f"bin_size {self.bin_size} does not divide the {self.n_samples} measurements")

    @property
    def n_samples(self) -> int:
        return self.n_measure_sweeps // self.measure_every


@dataclass(frozen=True)
class Estimate:
    name: str
    mean: complex
    stderr: float  # binning error of the real part
    stderr_im: float
    n_samples: int
    acceptance_rate: float


def chain_rng(master_seed: int, chain_index: int = 0) -> np.random.Generator:
    """Independent stream per chain, hashed from ``(master_seed, chain_index)``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, chain_index])))


def initial_config(assembly: StateAssembly) -> np.ndarray:
    """Heaviest translation-invariant configuration ``G = q`` on every link, ties to ``G = 0``.

    These are flux free and differ only in their holonomy. ``G = 0`` alone can
    carry a vanishing weight on a periodic torus (a fermionic zero mode), which
    would leave the cache without an inverse to start from.
    """
    labels = sorted(assembly.group.labels, key=abs)
    candidates = [np.full(assembly.lattice.n_links, q, dtype=np.int64) for q in labels]
    logw = [log_weight(assembly, g) for g in candidates]
    best = int(np.argmax(logw))
    if not np.isfinite(logw[best]):
        raise InvalidCovarianceError("no translation-invariant configuration has nonzero weight")
    return candidates[best]


class ChainState:
    """One Markov chain: configuration (held by the cache), RNG and counters."""

    def __init__(self, assembly: StateAssembly, rng: np.random.Generator, config=None):
        self.assembly = assembly
        self.rng = rng
        if config is None:
            config = initial_config(assembly)
        self.cache = WeightCache(assembly, config)
        self.sweeps = 0
        self.proposed = 0
        self.accepted = 0

    @property
    def config(self) -> np.ndarray:
        return self.cache.config

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0

    def reset_counters(self) -> None:
        self.proposed = self.accepted = 0


def acceptance_probability(ratio: float) -> float:
    return min(1.0, ratio)


def propose(chain: ChainState, link: int) -> int:
    """Uniform over the N-1 labels different from the current one."""
    group = chain.assembly.group
    shift = int(chain.rng.integers(1, group.order))
    return int(group.wrap(chain.config[link] + shift))


def metropolis_step(chain: ChainState, link: int, q_proposal: int) -> bool:
    ratio = chain.cache.ratio(link, q_proposal)
    chain.proposed += 1
    # one uniform draw per proposal keeps the stream layout independent of the outcome
    u = chain.rng.random()
    if ratio > 0 and u < acceptance_probability(ratio):
        chain.cache.commit()
        chain.accepted += 1
        return True
    chain.cache.rollback()
    return False


def sweep(chain: ChainState) -> None:
    """One proposal per link in fixed raster order."""
    for link in range(chain.assembly.lattice.n_links):
        metropolis_step(chain, link, propose(chain, link))
    chain.sweeps += 1


def binned_stats(samples, bin_size: int) -> tuple[float, float]:
    """Mean and standard error from the spread of bin means."""
    samples = np.asarray(samples, dtype=float)
    bins = samples.reshape(-1, bin_size).mean(axis=1)
    if len(bins) < 2:
        return float(samples.mean()), float("nan")
    return float(samples.mean()), float(bins.std(ddof=1) / np.sqrt(len(bins)))


def run_chain(assembly: StateAssembly, mc: McConfig, observables: list[ObservableSpec],
              chain_index: int = 0, debug: bool = False) -> list[Estimate]:
    """Burn in, then measure every ``measure_every`` sweeps; bit-reproducible per seed."""
    group = assembly.group
    bound = [spec.bind(assembly.lattice) for spec in observables]
    chain = ChainState(assembly, chain_rng(mc.master_seed, chain_index))
    for _ in range(mc.n_burn_sweeps):
        sweep(chain)
    chain.reset_counters()

    values = np.empty((len(bound), mc.n_samples), dtype=complex)
    sample = 0
    for n in range(1, mc.n_measure_sweeps + 1):
        sweep(chain)
        if debug:
            chain.cache.check()
        if n % mc.measure_every == 0:
            for i, obs in enumerate(bound):
                values[i, sample] = obs(chain.config, group)
            sample += 1

    rate = chain.acceptance_rate
    if rate < STUCK_ACCEPTANCE:
        logger.warning("acceptance rate %.4f at %s looks stuck", rate, assembly.params)
    estimates = []
    for obs, series in zip(bound, values):
        mean_re, err_re = binned_stats(series.real, mc.bin_size)
        mean_im, err_im = binned_stats(series.imag, mc.bin_size)
        estimates.append(Estimate(obs.name, complex(mean_re, mean_im), err_re, err_im,
                                  mc.n_samples, rate))
    return estimates


def exact_enumerate(assembly: StateAssembly, observables: list[ObservableSpec],
                    max_states: int = MAX_ENUMERATION_STATES) -> list[complex]:
    """``<F> = sum_G F(G) w(G) / sum_G w(G)`` over every configuration."""
    group, lat = assembly.group, assembly.lattice
    n_states = group.order ** lat.n_links
    if n_states > max_states:
        raise ValueError(f"{n_states} configurations exceed the enumeration limit {max_states}")
    bound = [spec.bind(lat) for spec in observables]
    configs = np.array(list(itertools.product(group.labels, repeat=lat.n_links)), dtype=np.int64)
    logw = np.array([log_weight(assembly, g) for g in configs])
    w = np.exp(logw - logw.max())
    out = []
    for obs in bound:
        if obs.links.shape[1]:
            charges = (configs[:, obs.links] @ obs.orientations) % group.order
        else:
            charges = np.zeros((len(configs), 1), dtype=np.int64)
        out.append(complex(np.dot(w, group.phase(charges).mean(axis=1)) / w.sum()))
    return out


def save_checkpoint(path, chain: ChainState) -> None:
    """Text header (lattice, params, N, sweep counter, PCG64 state) followed by the config line."""
    a = chain.assembly
    state = chain.rng.bit_generator.state
    if state["bit_generator"] != "PCG64":
        raise ValueError("checkpointing supports PCG64 streams only")
    lines = [
        f"lattice {a.lattice}",
        f"params {a.params.y!r} {a.params.z!r}",
        f"group {a.group.order}",
        f"sweeps {chain.sweeps}",
        f"rng {state['state']['state']} {state['state']['inc']} {state['has_uint32']} {state['uinteger']}",
        f"log_weight {chain.cache.log_weight!r}",
        format_config(chain.config),
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path, assembly: StateAssembly) -> ChainState:
    with open(path) as fh:
        lines = fh.read().splitlines()
    header = dict(line.split(" ", 1) for line in lines[:-1])
    lattice = TorusLattice.parse(header["lattice"])
    y, z = (float(v) for v in header["params"].split())
    if lattice != assembly.lattice or VertexTensorParams(y, z) != assembly.params \
            or int(header["group"]) != assembly.group.order:
        raise ValueError("checkpoint does not match the given state assembly")
    state, inc, has_uint32, uinteger = (int(v) for v in header["rng"].split())
    bitgen = np.random.PCG64()
    bitgen.state = {"bit_generator": "PCG64", "state": {"state": state, "inc": inc},
                    "has_uint32": has_uint32, "uinteger": uinteger}
    config = parse_config(lines[-1], lattice, assembly.group)
    chain = ChainState(assembly, np.random.Generator(bitgen), config)
    chain.sweeps = int(header["sweeps"])
    return chain
