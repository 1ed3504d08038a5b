"""Fermionic Gaussian states in the Majorana covariance-matrix picture.

Conventions: for Dirac mode ``i`` the Majorana operators are
``gamma_{2i} = a_i + a_i^dag`` and ``gamma_{2i+1} = i (a_i - a_i^dag)``
(interleaved ordering) and ``Gamma_ab = (i/2) <[gamma_a, gamma_b]>``.
The vacuum then has 2x2 blocks ``[[0, 1], [-1, 0]]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ANTISYMMETRY_TOL = 1e-12
PURITY_TOL = 1e-10
NEGATIVE_DET_TOL = 1e-9


class InvalidCovarianceError(ValueError):
    """Raised when a covariance matrix is not a valid (pure) Gaussian state."""


@dataclass(frozen=True)
class MajoranaCovariance:
    gamma: np.ndarray
    pure: bool = True

    def __post_init__(self) -> None:
        g = np.array(self.gamma, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] % 2:
            raise InvalidCovarianceError(f"bad covariance shape {g.shape}")
        if np.max(np.abs(g + g.T), initial=0.0) > ANTISYMMETRY_TOL:
            raise InvalidCovarianceError("covariance matrix is not antisymmetric")
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def n_dirac(self) -> int:
        return self.gamma.shape[0] // 2

    def purity_error(self) -> float:
        g = self.gamma
        return float(np.max(np.abs(g @ g + np.eye(len(g))), initial=0.0))

    def check(self) -> None:
        """Verify purity (if flagged) and the singular-value bound."""
        if self.pure and self.purity_error() > PURITY_TOL:
            raise InvalidCovarianceError("covariance flagged pure but gamma^2 != -1")
        if len(self.gamma) and np.linalg.norm(self.gamma, 2) > 1 + PURITY_TOL:
            raise InvalidCovarianceError("covariance has singular value > 1")

    def permuted(self, order) -> MajoranaCovariance:
        """Reorder Dirac modes: new mode ``k`` is old mode ``order[k]``."""
        idx = majorana_indices(order)
        return MajoranaCovariance(self.gamma[np.ix_(idx, idx)], self.pure)


@dataclass(frozen=True)
class PairingMatrix:
    t: np.ndarray

    def __post_init__(self) -> None:
        t = np.array(self.t, dtype=float)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError(f"pairing matrix must be square, got {t.shape}")
        if np.max(np.abs(t + t.T), initial=0.0) > ANTISYMMETRY_TOL:
            raise ValueError("pairing matrix is not antisymmetric")
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def n(self) -> int:
        return self.t.shape[0]


def majorana_indices(modes) -> np.ndarray:
    """Majorana indices ``(2i, 2i+1, ...)`` of the given Dirac modes."""
    modes = np.asarray(modes, dtype=int)
    return np.stack([2 * modes, 2 * modes + 1], axis=-1).reshape(-1)


def direct_sum(blocks) -> np.ndarray:
    blocks = list(blocks)
    size = sum(len(b) for b in blocks)
    out = np.zeros((size, size))
    pos = 0
    for b in blocks:
        k = len(b)
        out[pos:pos + k, pos:pos + k] = b
        pos += k
    return out


def vacuum_covariance(n: int) -> MajoranaCovariance:
    if n < 1:
        raise ValueError("need at least one mode")
    return MajoranaCovariance(np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]])))


def covariance_from_pairing(pairing: PairingMatrix) -> MajoranaCovariance:
    """Covariance of the normalized state ``exp(1/2 a^dag T a^dag)|0>``.

    The state is the unique one annihilated by ``b_i = a_i - T_ij a_j^dag``.
    Writing ``b = W gamma`` the annihilators span the ``+1`` eigenspace of
    ``i Gamma^T``, hence ``Gamma = i (1 - 2 Q Q^dag)`` with ``Q`` an orthonormal
    basis of the row space of ``W``.
    """
    t = pairing.t
    n = pairing.n
    eye = np.eye(n)
    w = np.empty((n, 2 * n), dtype=complex)
    w[:, 0::2] = eye - t
    w[:, 1::2] = -1j * (eye + t)
    q, _ = np.linalg.qr(w.T)
    gamma = (1j * (np.eye(2 * n) - 2 * q @ q.conj().T)).real
    return MajoranaCovariance(0.5 * (gamma - gamma.T))


def rotation_matrix(n: int, modes, angles) -> np.ndarray:
    """Orthogonal ``R`` with ``[[cos, -sin], [sin, cos]]`` blocks on the listed modes."""
    modes = list(modes)
    angles = list(angles)
    if len(modes) != len(angles):
        raise ValueError("modes and angles differ in length")
    if len(set(modes)) != len(modes):
        raise ValueError("mode indices must be distinct")
    r = np.eye(2 * n)
    for i, phi in zip(modes, angles):
        if not 0 <= i < n:
            raise IndexError(f"mode {i} out of range for {n} modes")
        c, s = np.cos(phi), np.sin(phi)
        r[2 * i:2 * i + 2, 2 * i:2 * i + 2] = [[c, -s], [s, c]]
    return r


def apply_phase_rotation(cov: MajoranaCovariance, modes, angles) -> MajoranaCovariance:
    """Return ``R Gamma R^T``; on the state this is ``exp(-i phi n_i)`` per mode."""
    r = rotation_matrix(cov.n_dirac, modes, angles)
    g = r @ cov.gamma @ r.T
    return MajoranaCovariance(0.5 * (g - g.T), cov.pure)


def log_overlap_det(gamma_a: np.ndarray, gamma_b: np.ndarray) -> float:
    """``log det((1 - Gamma_a Gamma_b) / 2)``, ``-inf`` if it vanishes.

    Raises :class:`InvalidCovarianceError` when the determinant is negative
    beyond ``NEGATIVE_DET_TOL``.
    """
    m = 0.5 * (np.eye(len(gamma_a)) - gamma_a @ gamma_b)
    sign, logabs = np.linalg.slogdet(m)
    if sign > 0:
        return float(logabs)
    if sign == 0 or np.exp(logabs) <= NEGATIVE_DET_TOL:
        return -np.inf
    raise InvalidCovarianceError(f"negative overlap determinant {-np.exp(logabs):.3e}")


def overlap_weight(a: MajoranaCovariance, b: MajoranaCovariance) -> float:
    """``|<b|a>|^2`` of two pure Gaussian states, ``sqrt(det((1 - Gamma_a Gamma_b)/2))``."""
    if a.gamma.shape != b.gamma.shape:
        raise ValueError("covariances act on different mode counts")
    return float(np.exp(0.5 * log_overlap_det(a.gamma, b.gamma)))


def gaussian_map(m: MajoranaCovariance, n_physical: int, gamma_in: MajoranaCovariance) -> MajoranaCovariance:
    """Covariance of the physical modes after projecting the virtual ones onto ``gamma_in``.

    ``m`` holds the first ``n_physical`` Dirac modes as physical and the rest as
    virtual, ordered like ``gamma_in``, which is the covariance of the pure
    state ``|in>`` that the virtual modes are contracted with (``<in|_V |M>``).
    In that convention ``Gamma_out = M_A + M_B (M_D + Gamma_in)^{-1} M_B^T``;
    the often-quoted ``(M_D - Gamma_in)`` form stores ``-Gamma_in`` instead.
    """
    k = 2 * n_physical
    g = m.gamma
    m_a, m_b, m_d = g[:k, :k], g[:k, k:], g[k:, k:]
    if gamma_in.gamma.shape != m_d.shape:
        raise ValueError("input covariance does not match the virtual block")
    if m_d.size == 0:
        return MajoranaCovariance(m_a, m.pure)
    try:
        x = np.linalg.solve(m_d + gamma_in.gamma, m_b.T)
    except np.linalg.LinAlgError as exc:
        raise InvalidCovarianceError("projection has zero norm (M_D + Gamma_in singular)") from exc
    out = m_a + m_b @ x
    return MajoranaCovariance(0.5 * (out - out.T), m.pure)
