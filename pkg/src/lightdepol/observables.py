"""Polarization observables: Stokes vector, degree of polarization, purity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import as_array
from .fock import FockBasis
from .polarization import PolarizationOperators

# below this mean photon number the state counts as vacuum (s = 0)
VACUUM_N_TOL = 1e-12

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class PolarizationVector:
    s_x: float
    s_y: float
    s_z: float
    n_mean: float = 1.0

    def as_array(self) -> np.ndarray:
        return np.array([self.s_x, self.s_y, self.s_z])

    @property
    def degree(self) -> float:
        return float(np.sqrt(self.s_x**2 + self.s_y**2 + self.s_z**2))


def expectation(op, rho) -> complex:
    o, r = as_array(op), as_array(rho)
    if o.shape != r.shape[-2:]:
        raise ValueError(f"shape mismatch: op {o.shape}, rho {r.shape}")
    # Tr(ρ O) without forming the product
    val = np.einsum("...ij,ji->...", r, o)
    return complex(val) if np.ndim(val) == 0 else val


def polarization_vector(rho, ops: PolarizationOperators) -> PolarizationVector:
    """``s = <S>/<N> = 2<J>/<N>``; the vacuum gets ``s = 0``."""
    r = as_array(rho)
    n = expectation(ops.N_total, r).real
    if n < VACUUM_N_TOL:
        return PolarizationVector(0.0, 0.0, 0.0, float(n))
    s = [2 * expectation(J, r).real / n for J in ops.vector()]
    return PolarizationVector(*map(float, s), n_mean=float(n))


def polarization_vectors(rhos: np.ndarray, ops: PolarizationOperators) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized over a stack of states: returns ``(s[..., 3], n_mean[...])``."""
    n = np.real(expectation(ops.N_total, rhos))
    J = np.stack([np.real(expectation(Jk, rhos)) for Jk in ops.vector()], axis=-1)
    n_arr = np.asarray(n)
    safe = np.where(n_arr < VACUUM_N_TOL, 1.0, n_arr)
    s = 2 * J / safe[..., None]
    s = np.where((n_arr < VACUUM_N_TOL)[..., None], 0.0, s)
    return s, n_arr


def degree_of_polarization(rho, ops: PolarizationOperators) -> float:
    """``P = sqrt(<S>^2) / <N>``, computed from the definition."""
    return polarization_vector(rho, ops).degree


def purity(rho) -> float:
    r = as_array(rho)
    return float(np.real(np.einsum("ij,ji->", r, r)))


def one_photon_bloch(rho, basis: FockBasis) -> np.ndarray:
    """Bloch vector ``Tr(ρ σ)`` of the normalized one-photon block (m = 1).

    Pauli matrices act in the ordered basis ``|+> = |1,0>``, ``|-> = |0,1>``.
    """
    if basis.m != 1 or basis.N_max < 1:
        raise ValueError("one-photon Bloch vector needs m = 1 and N_max >= 1")
    sl = basis.block_slice(1)
    blk = as_array(rho)[sl, sl]
    w = np.trace(blk).real
    if w < VACUUM_N_TOL:
        return np.zeros(3)
    return np.array([np.trace(blk @ p).real for p in PAULI]) / w
