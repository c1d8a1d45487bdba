"""Density-matrix container and physical-state validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
MIN_EIG_TOL = -1e-10


class InvalidStateError(ValueError):
    """Raised when a matrix is not a physical density operator."""


def as_array(x) -> np.ndarray:
    return np.asarray(getattr(x, "data", x))


def state_defects(rho) -> dict:
    """Measured violations: Hermiticity drift, trace deficit, minimum eigenvalue."""
    r = as_array(rho)
    herm = float(np.max(np.abs(r - r.conj().T))) if r.size else 0.0
    tr = np.trace(r)
    min_eig = float(np.linalg.eigvalsh(0.5 * (r + r.conj().T)).min())
    return {"hermiticity": herm, "trace": complex(tr), "min_eig": min_eig}


def check_physical(rho, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL, min_eig_tol=MIN_EIG_TOL):
    d = state_defects(rho)
    if d["hermiticity"] > herm_tol:
        raise InvalidStateError(f"matrix is not Hermitian (max |rho - rho^dag| = {d['hermiticity']:.3g})")
    deficit = 1.0 - d["trace"].real
    if abs(deficit) > trace_tol or abs(d["trace"].imag) > trace_tol:
        raise InvalidStateError(f"trace is {d['trace'].real:.15g}, deficit {deficit:.15g}")
    if d["min_eig"] < min_eig_tol:
        raise InvalidStateError(f"negative eigenvalue {d['min_eig']:.3g}")
    return d


@dataclass(frozen=True)
class DensityMatrix:
    basis: object
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        if data.shape != (self.basis.dim, self.basis.dim):
            raise InvalidStateError(
                f"density matrix shape {data.shape} does not match basis dim {self.basis.dim}"
            )
        object.__setattr__(self, "data", data)

    @classmethod
    def validated(cls, basis, data, **tols) -> "DensityMatrix":
        rho = cls(basis, data)
        check_physical(rho.data, **tols)
        return rho

    @classmethod
    def pure(cls, basis, ket) -> "DensityMatrix":
        v = np.asarray(ket, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(basis, np.outer(v, v.conj()))


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random full-rank (or given-rank) density matrix from a Ginibre draw."""
    k = dim if rank is None else rank
    G = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real
