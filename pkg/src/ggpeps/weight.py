"""The Z_N pure-gauge GGPEPS as Gaussian covariance blocks and its Monte-Carlo weight.

The state at fixed link configuration G is the overlap of the vertex product
state (covariance ``M_D``) with the gauged bond state (``Gamma_in(G)``). Only
its modulus squared enters the sampler:

    w(G) = sqrt(det((1 - Gamma_in(G) M_D) / 2))

Gauging puts the phase ``2 pi s(x) j q / N`` on the two beginning-side modes
``c^j(x, +k)`` of every link, ``s(x) = (-1)^{x1+x2}``. Weights are handled as
logarithms everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ggpeps.gaussian import (
    InvalidCovarianceError,
    MajoranaCovariance,
    PairingMatrix,
    covariance_from_pairing,
    direct_sum,
    log_overlap_det,
    majorana_indices,
    rotation_matrix,
)
from ggpeps.lattice import MODES_PER_VERTEX, VERTEX_MODES, TorusLattice, ZN

CACHE_CHECK_RTOL = 1e-8
# full recompute after this many accepted moves per link (measured drift stays near 1e-12)
REFRESH_PER_LINK = 50


@dataclass(frozen=True)
class VertexTensorParams:
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.y) and np.isfinite(self.z)):
            raise ValueError("y and z must be finite")


def vertex_pairing(y: float, z: float) -> PairingMatrix:
    """8x8 pairing matrix of the vertex operator in the per-vertex mode order.

    ``y`` pairs straight-through edges, ``z`` pairs horizontal with vertical
    edges (corners).
    """
    r = z / np.sqrt(2.0)
    k = np.array([
        [0.0, y, r, r],
        [-y, 0.0, -r, r],
        [-r, r, 0.0, y],
        [-r, -r, -y, 0.0],
    ])
    t = np.zeros((8, 8))
    t[:4, 4:] = k
    t[4:, :4] = -k.T
    return PairingMatrix(t)


def link_pairing() -> PairingMatrix:
    """Bond pairing on ``(c+(x,k), c-(x,k), c+(x+e_k,-k), c-(x+e_k,-k))``: sigma_x in charge space."""
    t = np.zeros((4, 4))
    t[0, 3] = t[1, 2] = 1.0
    return PairingMatrix(t - t.T)


def link_bond_covariance() -> MajoranaCovariance:
    return covariance_from_pairing(link_pairing())


def gauging_angle(parity: int, charge: int, q: int, order: int) -> float:
    return 2.0 * np.pi * parity * charge * q / order


def vertex_charges() -> np.ndarray:
    """Effective U(1) charge ``j * sign(edge)`` of each vertex mode.

    The vertex pairing couples only opposite effective charges.
    """
    return np.array([charge * np.sign(edge) for edge, charge in VERTEX_MODES], dtype=int)


def global_rotation_angles(lattice: TorusLattice, q: int, order: int) -> np.ndarray:
    """Angles of the staggered global Z_N rotation, one per global Dirac mode."""
    charges = vertex_charges()
    angles = np.empty(lattice.n_modes)
    for v, site in enumerate(lattice.vertices()):
        block = slice(MODES_PER_VERTEX * v, MODES_PER_VERTEX * (v + 1))
        angles[block] = 2.0 * np.pi * q * lattice.parity(site) * charges / order
    return angles


@dataclass(frozen=True, eq=False)
class StateAssembly:
    """Cached covariance blocks of the ungauged state plus per-link lookup tables.

    ``staggered=False`` drops the ``(-1)^{x1+x2}`` factor from the gauging
    phases; it exists only to demonstrate that gauge invariance catches it.
    """

    lattice: TorusLattice
    params: VertexTensorParams
    group: ZN = field(default_factory=ZN)
    staggered: bool = True
    m_d: np.ndarray = field(init=False, repr=False)
    gamma_bond: np.ndarray = field(init=False, repr=False)
    link_majoranas: np.ndarray = field(init=False, repr=False)
    link_columns: np.ndarray = field(init=False, repr=False)
    link_parity: np.ndarray = field(init=False, repr=False)
    _blocks: dict = field(init=False, repr=False)

    def __post_init__(self) -> None:
        lat = self.lattice
        m0 = covariance_from_pairing(vertex_pairing(self.params.y, self.params.z)).gamma
        m_d = direct_sum([m0] * lat.n_vertices)

        bond = link_bond_covariance().gamma
        gamma_bond = np.zeros_like(m_d)
        link_maj = np.empty((lat.n_links, 8), dtype=int)
        link_cols = np.empty((lat.n_links, 4 * MODES_PER_VERTEX), dtype=int)
        parity = np.empty(lat.n_links, dtype=int)
        for index in range(lat.n_links):
            idx = majorana_indices(lat.link_modes(index))
            gamma_bond[np.ix_(idx, idx)] = bond
            link_maj[index] = idx
            site, k = lat.link(index)
            ends = [lat.vertex_index(site), lat.vertex_index(lat.shift(site, k))]
            link_cols[index] = np.concatenate(
                [np.arange(2 * MODES_PER_VERTEX * v, 2 * MODES_PER_VERTEX * (v + 1)) for v in ends])
            parity[index] = lat.parity(site) if self.staggered else 1

        blocks = {}
        for s in (-1, 1):
            for q in self.group.labels:
                r = rotation_matrix(4, [0, 1], [gauging_angle(s, +1, q, self.group.order),
                                               gauging_angle(s, -1, q, self.group.order)])
                blocks[s, int(q)] = r @ bond @ r.T
        for name, value in [("m_d", m_d), ("gamma_bond", gamma_bond), ("link_majoranas", link_maj),
                            ("link_columns", link_cols), ("link_parity", parity), ("_blocks", blocks)]:
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    def link_block(self, link: int, q: int) -> np.ndarray:
        """Gauged 8x8 Majorana block of one link in its local mode order."""
        return self._blocks[int(self.link_parity[link]), int(q)]

    def check_config(self, config) -> np.ndarray:
        config = np.asarray(config, dtype=np.int64)
        if config.shape != (self.lattice.n_links,):
            raise ValueError(f"configuration must have {self.lattice.n_links} links")
        if np.any(self.group.wrap(config) != config):
            raise ValueError("configuration labels outside the symmetric Z_N range")
        return config


def assemble(lattice: TorusLattice, params: VertexTensorParams, group: ZN | None = None,
             staggered: bool = True) -> StateAssembly:
    return StateAssembly(lattice, params, group or ZN(3), staggered)


def gauged_bond_matrix(assembly: StateAssembly, config) -> np.ndarray:
    config = assembly.check_config(config)
    gamma = np.array(assembly.gamma_bond)
    for link, q in enumerate(config):
        if q:
            idx = assembly.link_majoranas[link]
            gamma[np.ix_(idx, idx)] = assembly.link_block(link, q)
    return gamma


def gauged_bond_covariance(assembly: StateAssembly, config) -> MajoranaCovariance:
    return MajoranaCovariance(gauged_bond_matrix(assembly, config))


def gauged_vertex_matrix(assembly: StateAssembly, config) -> np.ndarray:
    """``M_D`` rotated by the inverse gauging, the alternative to rotating ``Gamma_in``."""
    config = assembly.check_config(config)
    lat, order = assembly.lattice, assembly.group.order
    modes, angles = [], []
    for link, q in enumerate(config):
        if q:
            plus, minus, _, _ = lat.link_modes(link)
            s = int(assembly.link_parity[link])
            modes += [plus, minus]
            angles += [-gauging_angle(s, +1, q, order), -gauging_angle(s, -1, q, order)]
    r = rotation_matrix(lat.n_modes, modes, angles)
    return r @ assembly.m_d @ r.T


def log_weight(assembly: StateAssembly, config) -> float:
    return 0.5 * log_overlap_det(gauged_bond_matrix(assembly, config), assembly.m_d)


def log_weight_vertex_side(assembly: StateAssembly, config) -> float:
    return 0.5 * log_overlap_det(assembly.gamma_bond, gauged_vertex_matrix(assembly, config))


def weight(assembly: StateAssembly, config) -> float:
    return float(np.exp(log_weight(assembly, config)))


class WeightCache:
    """Incremental determinant of ``X(G) = (1 - Gamma_in(G) M_D) / 2`` for one Markov chain.

    A single-link change rewrites the 8 rows of ``X`` belonging to that link,
    so the determinant ratio is an 8x8 determinant against the cached inverse
    and an accepted move is a rank-8 Woodbury update.
    """

    def __init__(self, assembly: StateAssembly, config, refresh_interval: int | None = None):
        self.assembly = assembly
        self.config = assembly.check_config(config).copy()
        self.refresh_interval = refresh_interval or REFRESH_PER_LINK * assembly.lattice.n_links
        self._md_rows = np.stack([
            assembly.m_d[np.ix_(assembly.link_majoranas[l], assembly.link_columns[l])]
            for l in range(assembly.lattice.n_links)
        ])
        self._pending = None
        self.refresh()

    def refresh(self) -> None:
        """Recompute inverse and log-determinant from scratch."""
        self.gamma_in = gauged_bond_matrix(self.assembly, self.config)
        x = 0.5 * (np.eye(len(self.gamma_in)) - self.gamma_in @ self.assembly.m_d)
        sign, logdet = np.linalg.slogdet(x)
        if sign <= 0:
            raise InvalidCovarianceError("configuration has zero or negative weight determinant")
        self.inverse = np.linalg.inv(x)
        self.log_det = float(logdet)
        self._updates = 0
        self._pending = None

    @property
    def log_weight(self) -> float:
        return 0.5 * self.log_det

    def ratio(self, link: int, q_new: int) -> float:
        """``w(G')/w(G)`` for setting ``link`` to ``q_new``; stages the move for :meth:`commit`."""
        a = self.assembly
        q_old = int(self.config[link])
        rows = a.link_majoranas[link]
        cols = a.link_columns[link]
        delta = a.link_block(link, q_new) - a.link_block(link, q_old)
        d = -0.5 * delta @ self._md_rows[link]
        s = np.eye(8) + d @ self.inverse[np.ix_(cols, rows)]
        det_s = float(np.linalg.det(s))
        self._pending = (link, int(q_new), d, s, det_s)
        return float(np.sqrt(det_s)) if det_s > 0 else 0.0

    def commit(self) -> None:
        if self._pending is None:
            raise RuntimeError("no staged move to commit")
        link, q_new, d, s, det_s = self._pending
        if det_s <= 0:
            raise InvalidCovarianceError("cannot commit a move to a zero-weight configuration")
        a = self.assembly
        rows = a.link_majoranas[link]
        cols = a.link_columns[link]
        left = self.inverse[:, rows] @ np.linalg.inv(s)
        right = d @ self.inverse[cols, :]
        self.inverse -= left @ right
        self.gamma_in[np.ix_(rows, rows)] = a.link_block(link, q_new)
        self.config[link] = q_new
        self.log_det += float(np.log(det_s))
        self._pending = None
        self._updates += 1
        if self._updates >= self.refresh_interval:
            self.refresh()

    def rollback(self) -> None:
        self._pending = None

    def check(self, rtol: float = CACHE_CHECK_RTOL) -> float:
        """Compare the cached log-weight with a full recompute; returns the discrepancy."""
        full = log_weight(self.assembly, self.config)
        err = abs(full - self.log_weight)
        if err > rtol * max(1.0, abs(full)):
            raise AssertionError(f"cached log-weight {self.log_weight} drifted from {full}")
        return err
