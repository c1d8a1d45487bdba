"""Lindblad dissipators and generators for the field-level master equations.

Dissipator convention throughout: ``L[C] rho = 2 C rho C† - {C† C, rho}``.
Vectorization is column-stacking: ``vec(A rho B) = (B^T ⊗ A) vec(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .density import as_array
from .fock import MINUS, PLUS, FockBasis, annihilation_op
from .polarization import PolarizationOperators, build_polarization_ops

MAX_LIOUVILLIAN_ENTRIES = 4096**2


class ModelKind(str, Enum):
    DAMPING = "damping"
    DEPHASING = "dephasing"
    DEPOLARIZING = "depolarizing"
    MULTIMODE = "multimode"


@dataclass(frozen=True)
class ModelSpec:
    """Which field master equation to integrate and its rates.

    ``gamma_plus``/``gamma_minus`` feed Damping and Dephasing, ``gamma`` the
    single-mode Depolarizing equation, ``gamma_j``/``omega_j`` the per-mode
    Multimode equation. The ``-i[ωN, ρ]`` term is only added when
    ``include_unitary`` is set.
    """

    kind: ModelKind
    gamma_plus: float = 0.0
    gamma_minus: float = 0.0
    gamma: float = 0.0
    gamma_j: tuple[float, ...] = ()
    omega: float = 0.0
    omega_j: tuple[float, ...] = ()
    include_unitary: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "gamma_j", tuple(float(g) for g in self.gamma_j))
        object.__setattr__(self, "omega_j", tuple(float(w) for w in self.omega_j))
        for name in ("gamma_plus", "gamma_minus", "gamma"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if any(not math.isfinite(g) or g < 0 for g in self.gamma_j):
            raise ValueError(f"gamma_j must be finite and >= 0, got {self.gamma_j}")
        if not math.isfinite(self.omega) or any(not math.isfinite(w) for w in self.omega_j):
            raise ValueError("frequencies must be finite")

    @property
    def max_rate(self) -> float:
        rates = [self.gamma_plus, self.gamma_minus, self.gamma, *self.gamma_j]
        return max(rates)


def lindblad_apply(C, rho) -> np.ndarray:
    """``2 C ρ C† - C†C ρ - ρ C†C``; ``rho`` may carry leading batch axes."""
    c = as_array(C)
    r = as_array(rho)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or r.shape[-2:] != c.shape:
        raise ValueError(f"shape mismatch: C {c.shape}, rho {r.shape}")
    cd = c.conj().T
    cdc = cd @ c
    return 2 * (c @ r @ cd) - cdc @ r - r @ cdc


@dataclass(frozen=True)
class LindbladGenerator:
    """``dρ/dt = -i[H, ρ] + Σ_k rate_k L[C_k] ρ`` on a fixed Hilbert space."""

    hamiltonian: np.ndarray = field(repr=False)
    jumps: tuple[tuple[float, np.ndarray], ...] = field(repr=False)

    def __post_init__(self):
        H = np.asarray(self.hamiltonian, dtype=complex)
        d = H.shape[0]
        jumps = tuple((float(r), np.asarray(C, dtype=complex)) for r, C in self.jumps if r != 0.0)
        for _, C in jumps:
            if C.shape != (d, d):
                raise ValueError(f"jump operator shape {C.shape} != ({d}, {d})")
        object.__setattr__(self, "hamiltonian", H)
        object.__setattr__(self, "jumps", jumps)
        # precomputed pieces of the rhs
        if jumps:
            Cs = np.stack([C for _, C in jumps])
            rates = np.array([r for r, _ in jumps])
            K = np.einsum("k,kji,kjl->il", rates, Cs.conj(), Cs)
        else:
            Cs = np.zeros((0, d, d), complex)
            rates = np.zeros(0)
            K = np.zeros((d, d), complex)
        # ρ̇ = -i(Heff ρ - ρ Heff†) + Σ 2 r C ρ C†, with Heff = H - i K
        object.__setattr__(self, "_Heff", H - 1j * K)
        object.__setattr__(self, "_Cs", Cs * np.sqrt(2 * rates)[:, None, None])

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    def rhs(self, rho) -> np.ndarray:
        r = as_array(rho)
        if r.shape[-2:] != (self.dim, self.dim):
            raise ValueError(f"rho shape {r.shape} incompatible with generator dim {self.dim}")
        A = self._Heff
        out = -1j * (A @ r - r @ A.conj().T)
        for C in self._Cs:
            out = out + C @ r @ C.conj().T
        return out

    def liouvillian(self, max_entries: int = MAX_LIOUVILLIAN_ENTRIES) -> np.ndarray:
        d = self.dim
        if (d * d) ** 2 > max_entries:
            raise ValueError(f"Liouvillian of size {d*d}x{d*d} exceeds limit of {max_entries} entries")
        eye = np.eye(d)
        A = self._Heff
        L = -1j * (np.kron(eye, A) - np.kron(A.conj(), eye))
        for C in self._Cs:
            L += np.kron(C.conj(), C)
        return L


def vec(rho) -> np.ndarray:
    r = as_array(rho)
    return np.swapaxes(r, -1, -2).reshape(r.shape[:-2] + (-1,))


def unvec(v, dim: int) -> np.ndarray:
    v = np.asarray(v)
    return np.swapaxes(v.reshape(v.shape[:-1] + (dim, dim)), -1, -2)


def build_generator(model: ModelSpec, basis: FockBasis, ops: PolarizationOperators | None = None) -> LindbladGenerator:
    """Assemble the generator of ``model`` on ``basis``.

    Damping and Dephasing sum over every mode with the shared per-polarization
    rates; Depolarizing uses the collective N, J±; Multimode uses the per-mode
    N_j, J_{j±} with one rate per mode.
    """
    ops = ops if ops is not None else build_polarization_ops(basis)
    d = basis.dim
    H = np.zeros((d, d), complex)
    jumps: list[tuple[float, np.ndarray]] = []
    kind = model.kind

    if kind in (ModelKind.DAMPING, ModelKind.DEPHASING):
        for j in range(basis.m):
            for s, g in ((PLUS, model.gamma_plus), (MINUS, model.gamma_minus)):
                a = annihilation_op(basis, j, s).data
                C = a if kind is ModelKind.DAMPING else a.conj().T @ a
                jumps.append((g / 2, C))
        if model.include_unitary:
            H = model.omega * ops.N_total.data
    elif kind is ModelKind.DEPOLARIZING:
        g = model.gamma / 2
        jumps += [(g, ops.N_total.data), (g, ops.J_plus.data), (g, ops.J_minus.data)]
        if model.include_unitary:
            H = model.omega * ops.N_total.data
    elif kind is ModelKind.MULTIMODE:
        if len(model.gamma_j) != basis.m:
            raise ValueError(f"multimode model has {len(model.gamma_j)} rates for m={basis.m}")
        if model.include_unitary and len(model.omega_j) != basis.m:
            raise ValueError(f"multimode model has {len(model.omega_j)} frequencies for m={basis.m}")
        for j, mo in enumerate(ops.per_mode):
            g = model.gamma_j[j] / 2
            jumps += [(g, mo.N.data), (g, mo.J_plus.data), (g, mo.J_minus.data)]
            if model.include_unitary:
                H = H + model.omega_j[j] * mo.N.data
    else:  # pragma: no cover
        raise ValueError(f"unknown model kind {kind}")
    return LindbladGenerator(H, tuple(jumps))


def rhs(model: ModelSpec, ops: PolarizationOperators, rho) -> np.ndarray:
    return build_generator(model, ops.basis, ops).rhs(rho)


def build_liouvillian(model: ModelSpec, basis: FockBasis, max_entries: int = MAX_LIOUVILLIAN_ENTRIES) -> np.ndarray:
    return build_generator(model, basis).liouvillian(max_entries)


def commutator_superop(H: np.ndarray) -> np.ndarray:
    d = H.shape[0]
    eye = np.eye(d)
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def dissipator_superop(C: np.ndarray) -> np.ndarray:
    """Superoperator of ``L[C]`` by the textbook Kronecker formula."""
    d = C.shape[0]
    eye = np.eye(d)
    cdc = C.conj().T @ C
    return 2 * np.kron(C.conj(), C) - np.kron(eye, cdc) - np.kron(cdc.T, eye)

