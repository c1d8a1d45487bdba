"""Stokes/su(2) polarization operators, block decomposition and unpolarized states."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .density import DensityMatrix, as_array
from .fock import MINUS, PLUS, FockBasis, OperatorMatrix, annihilation_op, number_op

UNPOL_TRACE_TOL = 1e-12


@dataclass(frozen=True)
class ModeOperators:
    J_plus: OperatorMatrix
    J_minus: OperatorMatrix
    J_z: OperatorMatrix
    N: OperatorMatrix


@dataclass(frozen=True)
class PolarizationOperators:
    basis: FockBasis
    J_plus: OperatorMatrix
    J_minus: OperatorMatrix
    J_z: OperatorMatrix
    J_x: OperatorMatrix
    J_y: OperatorMatrix
    N_total: OperatorMatrix
    per_mode: tuple[ModeOperators, ...]

    def casimir(self) -> np.ndarray:
        Jp, Jm, Jz = self.J_plus.data, self.J_minus.data, self.J_z.data
        return Jz @ Jz + 0.5 * (Jp @ Jm + Jm @ Jp)

    def vector(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.J_x.data, self.J_y.data, self.J_z.data


def build_polarization_ops(basis: FockBasis) -> PolarizationOperators:
    """Schwinger construction ``J_+ = sum_j a†_{j+} a_{j-}``, ``J_z = (n_+ - n_-)/2``."""
    per_mode = []
    for j in range(basis.m):
        ap = annihilation_op(basis, j, PLUS).data
        am = annihilation_op(basis, j, MINUS).data
        # number-conserving products are exact on the truncated space
        jp = ap.conj().T @ am
        jz = 0.5 * (ap.conj().T @ ap - am.conj().T @ am)
        per_mode.append(
            ModeOperators(
                OperatorMatrix(basis, f"J_{j}+", jp),
                OperatorMatrix(basis, f"J_{j}-", jp.conj().T.copy()),
                OperatorMatrix(basis, f"J_{j}z", jz),
                number_op(basis, j),
            )
        )
    Jp = sum(mo.J_plus.data for mo in per_mode)
    Jm = Jp.conj().T.copy()
    Jz = sum(mo.J_z.data for mo in per_mode)
    return PolarizationOperators(
        basis=basis,
        J_plus=OperatorMatrix(basis, "J+", Jp),
        J_minus=OperatorMatrix(basis, "J-", Jm),
        J_z=OperatorMatrix(basis, "Jz", Jz),
        J_x=OperatorMatrix(basis, "Jx", 0.5 * (Jp + Jm)),
        J_y=OperatorMatrix(basis, "Jy", (Jp - Jm) / 2j),
        N_total=number_op(basis),
        per_mode=tuple(per_mode),
    )


def block_decompose(rho, basis: FockBasis) -> list[tuple[int, np.ndarray, float]]:
    """Diagonal blocks of ``rho`` by total photon number, with their weights."""
    r = as_array(rho)
    if r.shape != (basis.dim, basis.dim):
        raise ValueError(f"rho shape {r.shape} does not match basis dim {basis.dim}")
    out = []
    for N in range(basis.N_max + 1):
        sl = basis.block_slice(N)
        blk = r[sl, sl].copy()
        out.append((N, blk, float(np.trace(blk).real)))
    return out


def block_weights(rho, basis: FockBasis) -> np.ndarray:
    r = as_array(rho)
    diag = np.real(np.diagonal(r, axis1=-2, axis2=-1))
    return np.stack([diag[..., basis.block_slice(N)].sum(axis=-1) for N in range(basis.N_max + 1)], axis=-1)


def project_block(rho, basis: FockBasis, N: int) -> np.ndarray:
    """Keep only the N-block of ``rho`` (not renormalized)."""
    r = as_array(rho)
    out = np.zeros_like(r)
    sl = basis.block_slice(N)
    out[..., sl, sl] = r[..., sl, sl]
    return out


@dataclass(frozen=True)
class UnpolarizedWeights:
    """Per-block weights r_N of an unpolarized state ``⊕ r_N 1_N``."""

    r: tuple[float, ...]

    def __init__(self, r: Sequence[float]):
        object.__setattr__(self, "r", tuple(float(x) for x in r))
        if any(x < 0 or not np.isfinite(x) for x in self.r):
            raise ValueError(f"unpolarized weights must be finite and nonnegative: {self.r}")

    def trace(self, basis: FockBasis) -> float:
        dims = basis.block_dims()
        return sum(d * rN for d, rN in zip(dims, self.r))


def unpolarized_state(basis: FockBasis, weights: UnpolarizedWeights | Sequence[float]) -> DensityMatrix:
    if not isinstance(weights, UnpolarizedWeights):
        weights = UnpolarizedWeights(weights)
    if len(weights.r) > basis.N_max + 1:
        raise ValueError(f"{len(weights.r)} weights given for N_max={basis.N_max}")
    tr = weights.trace(basis)
    if abs(tr - 1.0) > UNPOL_TRACE_TOL:
        raise ValueError(f"unit-trace condition violated: sum d_N r_N = {tr!r}")
    diag = np.zeros(basis.dim)
    for N, rN in enumerate(weights.r):
        diag[basis.block_slice(N)] = rN
    return DensityMatrix(basis, np.diag(diag).astype(complex))
