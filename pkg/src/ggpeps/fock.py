"""Dense Fock-space reference for small fermionic systems.

Basis states are bit strings ``s``; bit ``i`` set means mode ``i`` is occupied.
``|s> = a_{i1}^dag a_{i2}^dag ... |0>`` with ``i1 < i2 < ...``, so applying
``a_i^dag`` picks up ``(-1)`` per occupied mode ``j < i``.

Everything here is brute force and meant for validating the covariance-matrix
routines in :mod:`ggpeps.gaussian`; it is limited to ``MAX_MODES`` modes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_MODES = 14


def _check_modes(n: int) -> None:
    if not 1 <= n <= MAX_MODES:
        raise ValueError(f"Fock oracle supports 1..{MAX_MODES} modes, got {n}")


def _parity_below(n: int, i: int) -> np.ndarray:
    """Sign ``(-1)^{#occupied j<i}`` for every basis state."""
    s = np.arange(2**n)
    below = s & ((1 << i) - 1)
    counts = np.zeros_like(s)
    for j in range(i):
        counts += (below >> j) & 1
    return 1 - 2 * (counts & 1)


@dataclass(frozen=True)
class FockVector:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        _check_modes(self.n)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n,):
            raise ValueError("amplitude vector has wrong length")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def vacuum(cls, n: int) -> FockVector:
        amps = np.zeros(2**n, dtype=complex)
        amps[0] = 1.0
        return cls(n, amps)

    def create(self, i: int) -> FockVector:
        return FockVector(self.n, create(self.amplitudes, self.n, i))

    def annihilate(self, i: int) -> FockVector:
        return FockVector(self.n, annihilate(self.amplitudes, self.n, i))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> FockVector:
        return FockVector(self.n, self.amplitudes / self.norm())

    def inner(self, other: FockVector) -> complex:
        """``<self|other>``."""
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def phase_rotated(self, modes, angles) -> FockVector:
        """Multiply by ``exp(-i phi n_i)`` per listed mode.

        This is the Fock-space counterpart of
        :func:`ggpeps.gaussian.apply_phase_rotation`.
        """
        s = np.arange(2**self.n)
        phase = np.zeros(2**self.n)
        for i, phi in zip(modes, angles):
            phase -= phi * ((s >> i) & 1)
        return FockVector(self.n, self.amplitudes * np.exp(1j * phase))

    def covariance(self) -> np.ndarray:
        return covariance(self.amplitudes, self.n)


def create(psi: np.ndarray, n: int, i: int) -> np.ndarray:
    s = np.arange(2**n)
    out = np.zeros_like(psi, dtype=complex)
    empty = ((s >> i) & 1) == 0
    src = s[empty]
    out[src | (1 << i)] = psi[src] * _parity_below(n, i)[src]
    return out


def annihilate(psi: np.ndarray, n: int, i: int) -> np.ndarray:
    s = np.arange(2**n)
    out = np.zeros_like(psi, dtype=complex)
    full = ((s >> i) & 1) == 1
    src = s[full]
    out[src ^ (1 << i)] = psi[src] * _parity_below(n, i)[src]
    return out


def majorana(psi: np.ndarray, n: int, a: int) -> np.ndarray:
    """Apply Majorana operator ``a`` in interleaved order.

    ``gamma_{2i} = a_i + a_i^dag`` and ``gamma_{2i+1} = i (a_i - a_i^dag)``.
    """
    i, kind = divmod(a, 2)
    if kind == 0:
        return annihilate(psi, n, i) + create(psi, n, i)
    return 1j * (annihilate(psi, n, i) - create(psi, n, i))


def covariance(psi: np.ndarray, n: int) -> np.ndarray:
    """``Gamma_ab = (i/2) <[gamma_a, gamma_b]>`` for a (not necessarily normalized) state."""
    _check_modes(n)
    psi = np.asarray(psi, dtype=complex)
    phis = np.array([majorana(psi, n, a) for a in range(2 * n)])
    gram = phis.conj() @ phis.T  # gram[a, b] = <psi| gamma_a gamma_b |psi>
    norm2 = np.vdot(psi, psi).real
    gamma = (1j * gram / norm2).real
    np.fill_diagonal(gamma, 0.0)
    return 0.5 * (gamma - gamma.T)


def pairing_state(t: np.ndarray) -> FockVector:
    """Unnormalized ``exp(1/2 sum_ij T_ij a_i^dag a_j^dag) |0>`` by its terminating series."""
    t = np.asarray(t)
    n = t.shape[0]
    _check_modes(n)
    vac = FockVector.vacuum(n).amplitudes

    def apply_pairs(psi):
        out = np.zeros_like(psi)
        for i in range(n):
            for j in range(i + 1, n):
                if t[i, j] != 0:
                    out += t[i, j] * create(create(psi, n, j), n, i)
        return out

    total = vac.copy()
    term = vac
    for k in range(1, n // 2 + 1):
        term = apply_pairs(term) / k
        total = total + term
    return FockVector(n, total)


def overlap_squared(a: FockVector, b: FockVector) -> float:
    """``|<b|a>|^2`` for the normalized states."""
    return abs(b.inner(a)) ** 2 / (a.norm() ** 2 * b.norm() ** 2)


def overlap_squared_by_sum(a: FockVector, b: FockVector) -> float:
    """Same as :func:`overlap_squared` but by an explicit loop over basis states."""
    acc = 0j
    for ca, cb in zip(a.amplitudes, b.amplitudes):
        acc += np.conj(cb) * ca
    return abs(acc) ** 2 / (a.norm() ** 2 * b.norm() ** 2)


def project(state: FockVector, n_keep: int, onto: FockVector) -> FockVector:
    """Contract the trailing ``n - n_keep`` modes of ``state`` with ``<onto|``.

    The kept modes are the low-index ones. ``onto`` must have definite parity
    (pairing states are even), so no reordering sign arises.
    """
    n_drop = state.n - n_keep
    if onto.n != n_drop:
        raise ValueError("projection state has wrong mode count")
    amps = state.amplitudes.reshape(2**n_drop, 2**n_keep)
    return FockVector(n_keep, onto.amplitudes.conj() @ amps)
