"""Periodic 2d torus, Z_N link configurations, loop paths and the virtual-mode layout."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# Per-vertex order of the 8 virtual Dirac modes, as (edge, charge j).
# Edges are +1, +2 (outgoing) and -1, -2 (incoming). The first four are the
# row operators of the vertex pairing matrix, the last four the column ones.
VERTEX_MODES: tuple[tuple[int, int], ...] = (
    (-1, +1), (+1, -1), (+2, -1), (-2, +1),
    (-1, -1), (+1, +1), (+2, +1), (-2, -1),
)
MODES_PER_VERTEX = len(VERTEX_MODES)
_LOCAL_INDEX = {key: i for i, key in enumerate(VERTEX_MODES)}


def local_mode(edge: int, charge: int) -> int:
    """Position of ``c^{charge}(x, edge)`` inside a vertex block."""
    return _LOCAL_INDEX[(edge, charge)]


class ZN:
    """Z_N labels in the symmetric range ``-(N-1)/2 .. (N-1)/2`` (odd N only)."""

    def __init__(self, order: int = 3):
        if order < 3 or order % 2 == 0:
            raise ValueError(f"only odd N >= 3 is supported, got {order}")
        self.order = order
        self.half = (order - 1) // 2

    @property
    def labels(self) -> np.ndarray:
        return np.arange(-self.half, self.half + 1)

    def wrap(self, q):
        return (np.asarray(q) + self.half) % self.order - self.half

    def phase(self, q) -> complex:
        return np.exp(2j * np.pi * np.asarray(q) / self.order)

    def __eq__(self, other):
        return isinstance(other, ZN) and other.order == self.order

    def __hash__(self):
        return hash(("ZN", self.order))

    def __repr__(self):
        return f"ZN({self.order})"


class PathStep(NamedTuple):
    site: tuple[int, int]
    direction: int  # 1 or 2
    orientation: int  # +1 traverses site -> site + e_k, -1 the reverse


@dataclass(frozen=True)
class TorusLattice:
    lx: int
    ly: int

    def __post_init__(self) -> None:
        for extent in (self.lx, self.ly):
            if extent < 2 or extent % 2:
                raise ValueError(f"lattice extents must be even and >= 2, got {self.lx}x{self.ly}")

    @classmethod
    def parse(cls, text: str) -> TorusLattice:
        lx, _, ly = text.lower().partition("x")
        return cls(int(lx), int(ly or lx))

    def __str__(self) -> str:
        return f"{self.lx}x{self.ly}"

    @property
    def n_vertices(self) -> int:
        return self.lx * self.ly

    @property
    def n_links(self) -> int:
        return 2 * self.n_vertices

    @property
    def n_modes(self) -> int:
        return MODES_PER_VERTEX * self.n_vertices

    def vertex_index(self, site) -> int:
        x1, x2 = site
        return (x2 % self.ly) * self.lx + (x1 % self.lx)

    def vertex(self, index: int) -> tuple[int, int]:
        return index % self.lx, index // self.lx

    def vertices(self) -> list[tuple[int, int]]:
        return [self.vertex(v) for v in range(self.n_vertices)]

    def shift(self, site, direction: int, amount: int = 1) -> tuple[int, int]:
        x1, x2 = site
        if direction == 1:
            return (x1 + amount) % self.lx, x2 % self.ly
        return x1 % self.lx, (x2 + amount) % self.ly

    def link_index(self, site, direction: int) -> int:
        if direction not in (1, 2):
            raise ValueError(f"direction must be 1 or 2, got {direction}")
        return 2 * self.vertex_index(site) + direction - 1

    def link(self, index: int) -> tuple[tuple[int, int], int]:
        v, k = divmod(index, 2)
        return self.vertex(v), k + 1

    def parity(self, site) -> int:
        """Staggering sign ``(-1)^{x1+x2}``; vertex (0, 0) is even."""
        return 1 - 2 * ((site[0] + site[1]) % 2)

    def mode_index(self, site, edge: int, charge: int) -> int:
        """Global Dirac index of ``c^{charge}(site, edge)`` (vertex-major, raster order)."""
        return MODES_PER_VERTEX * self.vertex_index(site) + local_mode(edge, charge)

    def link_modes(self, index: int) -> tuple[int, int, int, int]:
        """Dirac modes ``(c+(x,k), c-(x,k), c+(x+e_k,-k), c-(x+e_k,-k))`` of a link."""
        site, k = self.link(index)
        end = self.shift(site, k)
        return (
            self.mode_index(site, k, +1),
            self.mode_index(site, k, -1),
            self.mode_index(end, -k, +1),
            self.mode_index(end, -k, -1),
        )

    def endpoints(self, step: PathStep) -> tuple[tuple[int, int], tuple[int, int]]:
        start = (step.site[0] % self.lx, step.site[1] % self.ly)
        end = self.shift(start, step.direction)
        return (start, end) if step.orientation > 0 else (end, start)


@dataclass(frozen=True)
class LoopPath:
    steps: tuple[PathStep, ...]

    def __iter__(self):
        return iter(self.steps)

    def __len__(self):
        return len(self.steps)

    def link_indices(self, lattice: TorusLattice) -> np.ndarray:
        return np.array([lattice.link_index(s.site, s.direction) for s in self.steps], dtype=int)

    def orientations(self) -> np.ndarray:
        return np.array([s.orientation for s in self.steps], dtype=int)

    def is_closed(self, lattice: TorusLattice) -> bool:
        if not self.steps:
            return True
        ends = [lattice.endpoints(s) for s in self.steps]
        for (_, end), (start, _) in zip(ends, ends[1:] + ends[:1]):
            if end != start:
                return False
        return True


def plaquette_path(lattice: TorusLattice, site) -> LoopPath:
    """Counterclockwise unit square at ``site``: U(x,1) U(x+e1,2) U^dag(x+e2,1) U^dag(x,2)."""
    x = (site[0] % lattice.lx, site[1] % lattice.ly)
    return LoopPath((
        PathStep(x, 1, +1),
        PathStep(lattice.shift(x, 1), 2, +1),
        PathStep(lattice.shift(x, 2), 1, -1),
        PathStep(x, 2, -1),
    ))


def winding_line_path(lattice: TorusLattice, row: int) -> LoopPath:
    """All horizontal links of ``row``, closed by periodicity."""
    return LoopPath(tuple(PathStep((m, row % lattice.ly), 1, +1) for m in range(lattice.lx)))


def identity_config(lattice: TorusLattice) -> np.ndarray:
    return np.zeros(lattice.n_links, dtype=np.int64)


def random_config(lattice: TorusLattice, group: ZN, rng: np.random.Generator) -> np.ndarray:
    return rng.choice(group.labels, size=lattice.n_links).astype(np.int64)


def gauge_transform_config(lattice: TorusLattice, config, h, group: ZN) -> np.ndarray:
    """``q'(x,k) = q(x,k) - h(x) + h(x+e_k)`` (mod N), ``h`` indexed by vertex."""
    config = np.asarray(config, dtype=np.int64)
    h = np.asarray(h, dtype=np.int64)
    if config.shape != (lattice.n_links,) or h.shape != (lattice.n_vertices,):
        raise ValueError("configuration or transformation has the wrong length")
    out = config.copy()
    for index in range(lattice.n_links):
        site, k = lattice.link(index)
        out[index] += -h[lattice.vertex_index(site)] + h[lattice.vertex_index(lattice.shift(site, k))]
    return group.wrap(out).astype(np.int64)


def format_config(config) -> str:
    return ",".join(str(int(q)) for q in config)


def parse_config(line: str, lattice: TorusLattice, group: ZN) -> np.ndarray:
    values = np.array([int(tok) for tok in line.strip().split(",") if tok.strip()], dtype=np.int64)
    if values.shape != (lattice.n_links,):
        raise ValueError(f"expected {lattice.n_links} link values, got {values.size}")
    if np.any(group.wrap(values) != values):
        raise ValueError("link value outside the symmetric Z_N label range")
    return values
