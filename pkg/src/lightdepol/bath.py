"""Single-mode field dispersively coupled to thermally damped two-level atoms
with random coupling phases.

The composite space is ``field ⊗ atom_1 ⊗ ... ⊗ atom_n`` with atomic basis
``(|e>, |g>)``. Units have ħ = 1. Field frequency defaults to 0, i.e. the frame
rotating at ω𝒩, which is exact because 𝒩 commutes with the Hamiltonian and
only rephases the atomic jump operators.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla

from .density import DensityMatrix, as_array
from .fock import MINUS, PLUS, FockBasis, OperatorMatrix, annihilation_op
from .lindblad import LindbladGenerator, ModelKind, ModelSpec, unvec, vec
from .observables import polarization_vectors
from .polarization import PolarizationOperators, build_polarization_ops
from .propagate import TimeGrid, Trajectory, evolve_exact

MAX_COMPOSITE_DIM = 64

DISPERSIVE_LIMIT = 0.1  # |g|/|Δ|
HIGH_TEMPERATURE_MIN = 10.0  # n̄
SEPARATION_MIN = 2.0  # γ(2n̄+1)|Δ| / (4|g|² N)

SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)  # |g><e|
SIGMA_PLUS = SIGMA_MINUS.T.copy()
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


class RegimeWarning(UserWarning):
    pass


@dataclass(frozen=True)
class AtomSpec:
    g_abs: float
    delta: float
    gamma_decay: float
    n_bar: float

    def __post_init__(self):
        for name in ("g_abs", "delta", "gamma_decay", "n_bar"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.g_abs < 0 or self.gamma_decay < 0 or self.n_bar < 0:
            raise ValueError("g_abs, gamma_decay and n_bar must be >= 0")

    def couplings(self, phase: float) -> tuple[complex, complex]:
        """``(g_+, g_-) = |g| e^{±iφ/2}``."""
        return self.g_abs * np.exp(0.5j * phase), self.g_abs * np.exp(-0.5j * phase)


@dataclass(frozen=True)
class CompositeBasis:
    field: FockBasis
    n_atoms: int

    def __post_init__(self):
        if self.field.m != 1:
            raise ValueError("the atomic bath model needs a single-mode field (m = 1)")
        if self.n_atoms < 1:
            raise ValueError("need at least one atom")
        if self.dim > MAX_COMPOSITE_DIM:
            raise ValueError(f"composite dimension {self.dim} exceeds limit {MAX_COMPOSITE_DIM}")

    @property
    def atoms_dim(self) -> int:
        return 2**self.n_atoms

    @property
    def dim(self) -> int:
        return self.field.dim * self.atoms_dim

    def embed_field(self, op) -> np.ndarray:
        return np.kron(as_array(op), np.eye(self.atoms_dim))

    def atom_op(self, k: int, op2: np.ndarray) -> np.ndarray:
        if not 0 <= k < self.n_atoms:
            raise ValueError(f"atom index {k} out of range")
        out = np.eye(self.field.dim)
        for j in range(self.n_atoms):
            out = np.kron(out, op2 if j == k else np.eye(2))
        return out

    def index(self, occupation, atom_bits: Sequence[int]) -> int:
        """Composite index of ``|occupation> ⊗ |bits>`` with bit 0 = e, 1 = g."""
        a = 0
        for b in atom_bits:
            a = 2 * a + int(b)
        return self.field.state_index(occupation) * self.atoms_dim + a

    def partial_trace_atoms(self, rho) -> np.ndarray:
        r = as_array(rho)
        df, da = self.field.dim, self.atoms_dim
        r = r.reshape(r.shape[:-2] + (df, da, df, da))
        return np.einsum("...iaja->...ij", r)


@dataclass(frozen=True)
class DerivedFrequencies:
    delta_shift: float
    J_op: OperatorMatrix
    Omega: OperatorMatrix


def derived_frequencies(
    atom: AtomSpec, phase: float, ops: PolarizationOperators, delta_shift: float | None = None
) -> DerivedFrequencies:
    """Shift ``δ = |g|²/Δ``, ``𝒥 = 2|g|²(N + J_+ e^{iφ} + J_- e^{-iφ})`` and the
    operator-valued ``Ω = Δ + δ + 𝒥/Δ`` on the field space."""
    g2 = atom.g_abs**2
    dshift = g2 / atom.delta if delta_shift is None else delta_shift
    e = np.exp(1j * phase)
    J = 2 * g2 * (ops.N_total.data + e * ops.J_plus.data + np.conj(e) * ops.J_minus.data)
    eye = np.eye(ops.basis.dim)
    Om = (atom.delta + dshift) * eye + J / atom.delta
    return DerivedFrequencies(
        dshift, OperatorMatrix(ops.basis, "calJ", J), OperatorMatrix(ops.basis, "Omega", Om)
    )


def _check_phases(atoms, phases) -> np.ndarray:
    ph = np.atleast_1d(np.asarray(phases, dtype=float))
    if ph.shape != (len(atoms),):
        raise ValueError(f"need one phase per atom, got {ph.shape} for {len(atoms)} atoms")
    return ph


def excitation_number(composite: CompositeBasis) -> np.ndarray:
    N = np.diag(composite.field.total_numbers().astype(complex))
    out = composite.embed_field(N)
    for k in range(composite.n_atoms):
        out = out + 0.5 * composite.atom_op(k, SIGMA_Z)
    return out


def build_full_hamiltonian(
    atoms: Sequence[AtomSpec], composite: CompositeBasis, phases, field_omega: float = 0.0
) -> OperatorMatrix:
    """``ω N + Σ ½ ω_λ σ^z_λ + Σ_λs (g_λs σ^-_λ a†_s + h.c.)`` with ``ω_λ = ω + Δ_λ``."""
    phases = _check_phases(atoms, phases)
    fb = composite.field
    a = {s: composite.embed_field(annihilation_op(fb, 0, s).data) for s in (PLUS, MINUS)}
    N = composite.embed_field(np.diag(fb.total_numbers().astype(complex)))
    H = field_omega * N
    for k, (atom, phi) in enumerate(zip(atoms, phases)):
        sm = composite.atom_op(k, SIGMA_MINUS)
        H = H + 0.5 * (field_omega + atom.delta) * composite.atom_op(k, SIGMA_Z)
        for s, g in zip((PLUS, MINUS), atom.couplings(phi)):
            term = g * sm @ a[s].conj().T
            H = H + term + term.conj().T
    return OperatorMatrix(composite, "H_full", H)


def build_effective_hamiltonian(
    atoms: Sequence[AtomSpec],
    composite: CompositeBasis,
    phases,
    field_omega: float = 0.0,
    cross_atom_term: bool = False,
    delta_shift: float | Sequence[float] | None = None,
) -> OperatorMatrix:
    """Dispersive Hamiltonian ``ω𝒩 + Σ ½ Ω_λ σ^z_λ``.

    With ``cross_atom_term`` the atom-atom exchange
    ``Σ_{λ≠λ'} Σ_s ½ g_λs g*_λ's (1/Δ_λ + 1/Δ_λ') σ^+_λ σ^-_λ'`` is added.
    ``delta_shift`` overrides the per-atom constant shift δ_λ.
    """
    phases = _check_phases(atoms, phases)
    ops = build_polarization_ops(composite.field)
    if delta_shift is None or np.ndim(delta_shift) == 0:
        shifts = [delta_shift] * len(atoms)
    else:
        shifts = list(delta_shift)
    H = field_omega * excitation_number(composite)
    for k, (atom, phi, dsh) in enumerate(zip(atoms, phases, shifts)):
        Om = derived_frequencies(atom, phi, ops, dsh).Omega.data
        H = H + 0.5 * composite.embed_field(Om) @ composite.atom_op(k, SIGMA_Z)
    if cross_atom_term:
        for k, (ak, pk) in enumerate(zip(atoms, phases)):
            for l, (al, pl) in enumerate(zip(atoms, phases)):
                if k == l:
                    continue
                coup = sum(gk * np.conj(gl) for gk, gl in zip(ak.couplings(pk), al.couplings(pl)))
                c = 0.5 * coup * (1 / ak.delta + 1 / al.delta)
                H = H + c * composite.atom_op(k, SIGMA_PLUS) @ composite.atom_op(l, SIGMA_MINUS)
    return OperatorMatrix(composite, "H_eff", H)


def bath_generator(
    atoms: Sequence[AtomSpec],
    composite: CompositeBasis,
    phases,
    which_H: str = "full",
    field_omega: float = 0.0,
    cross_atom_term: bool = False,
) -> LindbladGenerator:
    """Generator of the field+atoms equation with thermal atomic damping
    ``(γ_λ/2)[(n̄_λ+1) L[σ^-_λ] + n̄_λ L[σ^+_λ]]``."""
    if which_H == "full":
        H = build_full_hamiltonian(atoms, composite, phases, field_omega).data
    elif which_H == "effective":
        H = build_effective_hamiltonian(atoms, composite, phases, field_omega, cross_atom_term).data
    else:
        raise ValueError(f"which_H must be 'full' or 'effective', got {which_H!r}")
    jumps = []
    for k, atom in enumerate(atoms):
        jumps.append((0.5 * atom.gamma_decay * (atom.n_bar + 1), composite.atom_op(k, SIGMA_MINUS)))
        jumps.append((0.5 * atom.gamma_decay * atom.n_bar, composite.atom_op(k, SIGMA_PLUS)))
    return LindbladGenerator(H, tuple(jumps))


def rhs_full(atoms, composite: CompositeBasis, rho_sys, phases, which_H: str = "full", **kw) -> np.ndarray:
    r = as_array(rho_sys)
    if r.shape[-2:] != (composite.dim, composite.dim):
        raise ValueError(f"rho_sys shape {r.shape} does not match composite dim {composite.dim}")
    return bath_generator(atoms, composite, phases, which_H, **kw).rhs(r)


def gamma_effective(atoms: Sequence[AtomSpec]) -> float:
    """Depolarizing rate ``γ = 4 Σ |g|⁴ / (γ_λ Δ² n̄)``."""
    total = 0.0
    for a in atoms:
        if a.gamma_decay == 0 or a.delta == 0 or a.n_bar == 0:
            raise ValueError(f"gamma_effective needs nonzero gamma_decay, delta and n_bar: {a}")
        total += a.g_abs**4 / (a.gamma_decay * a.delta**2 * a.n_bar)
    return 4.0 * total


def gamma_adiabatic(atoms: Sequence[AtomSpec]) -> float:
    """Rate from eliminating the atomic population difference to second order.

    The difference relaxes at ``γ_λ(2n̄_λ+1)`` and is driven by ``[Ω_λ, ρ]``;
    phase-averaging the resulting ``L[𝒥_λ]`` gives
    ``γ = Σ 2|g|⁴ / (γ_λ Δ² (2n̄+1))``, i.e. ``|g|⁴/(γ_λ Δ² n̄)`` for n̄ ≫ 1.
    """
    total = 0.0
    for a in atoms:
        if a.gamma_decay == 0 or a.delta == 0:
            raise ValueError(f"gamma_adiabatic needs nonzero gamma_decay and delta: {a}")
        total += 2 * a.g_abs**4 / (a.gamma_decay * a.delta**2 * (2 * a.n_bar + 1))
    return total


def regime_check(atoms: Sequence[AtomSpec], n_photons: float = 1.0) -> list[str]:
    out = []
    for k, a in enumerate(atoms):
        if a.delta == 0 or a.g_abs / abs(a.delta) > DISPERSIVE_LIMIT:
            out.append(f"atom {k}: not dispersive, |g|/|Delta| = {a.g_abs / abs(a.delta) if a.delta else math.inf:.3g}")
        if a.n_bar < HIGH_TEMPERATURE_MIN:
            out.append(f"atom {k}: not high-temperature, n_bar = {a.n_bar:.3g}")
        spread = 4 * a.g_abs**2 * max(n_photons, 1.0) / abs(a.delta) if a.delta else math.inf
        sep = a.gamma_decay * (2 * a.n_bar + 1) / spread if spread else math.inf
        if sep < SEPARATION_MIN:
            out.append(f"atom {k}: weak timescale separation, gamma(2n_bar+1)/|calJ/Delta| = {sep:.3g}")
    return out


def pairwise_sum(x: np.ndarray) -> np.ndarray:
    """Sum over axis 0 by a fixed binary tree (independent of how x was produced)."""
    n = x.shape[0]
    if n == 1:
        return x[0].copy()
    h = n // 2
    return pairwise_sum(x[:h]) + pairwise_sum(x[h:])


def sample_phases(seed: int, n_samples: int, n_atoms: int, antithetic: bool = False) -> np.ndarray:
    """Uniform phases on [0, 2π), one substream per sample index.

    With ``antithetic`` every odd sample mirrors the previous one (φ -> -φ).
    """
    out = np.empty((n_samples, n_atoms))
    for i in range(n_samples):
        if antithetic and i % 2 == 1:
            out[i] = np.mod(-out[i - 1], 2 * np.pi)
        else:
            out[i] = np.random.default_rng([seed, i]).uniform(0.0, 2 * np.pi, n_atoms)
    return out


def _propagate_field(gen: LindbladGenerator, composite: CompositeBasis, rho0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    L = gen.liouvillian()
    cache: dict[int, np.ndarray] = {}
    v = vec(rho0)
    out = []
    prev = 0
    for step in grid.sample_steps():
        k = int(step - prev)
        if k > 0:
            if k not in cache:
                cache[k] = sla.expm(L * (k * grid.dt))
            v = cache[k] @ v
        out.append(composite.partial_trace_atoms(unvec(v, gen.dim)))
        prev = step
    return np.stack(out)


@dataclass
class EnsembleResult:
    trajectory: Trajectory
    phases: np.ndarray
    warnings: list[str]
    block_leakage: float
    per_sample_s: np.ndarray = field(repr=False)


def _check_field_state(rho_field0, composite_field: FockBasis) -> np.ndarray:
    r = as_array(rho_field0)
    if r.shape != (composite_field.dim, composite_field.dim):
        raise ValueError(f"field state shape {r.shape} does not match field dim {composite_field.dim}")
    return r


def run_phase_ensemble(
    atoms: Sequence[AtomSpec],
    rho_field0: DensityMatrix,
    grid: TimeGrid,
    n_samples: int = 256,
    seed: int = 0,
    *,
    which_H: str = "full",
    threads: int = 1,
    antithetic: bool = False,
    cross_atom_term: bool = False,
    field_omega: float = 0.0,
    phases: np.ndarray | None = None,
    keep_states: bool = False,
    check: bool = True,
) -> EnsembleResult:
    """Average the reduced field dynamics over random coupling phases.

    Atoms start in ``½·1`` each. Every sample draws its phases, propagates the
    composite equation exactly on the sample grid, and traces out the atoms;
    the reduced states are averaged with a fixed pairwise reduction so the
    result does not depend on ``threads``.
    """
    atoms = list(atoms)
    basis = rho_field0.basis if isinstance(rho_field0, DensityMatrix) else None
    if basis is None:
        raise ValueError("rho_field0 must be a DensityMatrix on a single-mode FockBasis")
    composite = CompositeBasis(basis, len(atoms))
    rf = _check_field_state(rho_field0, basis)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if phases is None:
        phases = sample_phases(seed, n_samples, len(atoms), antithetic)
    else:
        phases = np.asarray(phases, dtype=float).reshape(n_samples, len(atoms))

    ops = build_polarization_ops(basis)
    n0 = float(np.real(np.trace(rf @ ops.N_total.data)))
    notes = regime_check(atoms, n_photons=max(n0, 1.0))
    for msg in notes:
        warnings.warn(msg, RegimeWarning, stacklevel=2)

    rho0 = np.kron(rf, np.eye(composite.atoms_dim) / composite.atoms_dim)
    times = grid.times()

    def one(i: int) -> np.ndarray:
        gen = bath_generator(atoms, composite, phases[i], which_H, field_omega, cross_atom_term)
        return _propagate_field(gen, composite, rho0, grid)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            per_sample = list(ex.map(one, range(n_samples)))
    else:
        per_sample = [one(i) for i in range(n_samples)]
    per_sample = np.stack(per_sample)  # (samples, times, d, d)

    mean = pairwise_sum(per_sample) / n_samples
    traj = Trajectory.from_states(times, mean, ops, keep_states)
    if check:
        traj.check_invariants()

    s_i, _ = polarization_vectors(per_sample, ops)  # (samples, times, 3)
    if n_samples > 1:
        cov = np.einsum("ntk,ntl->tkl", s_i - s_i.mean(0), s_i - s_i.mean(0)) / (n_samples - 1)
        se_s = np.sqrt(np.einsum("tkk->tk", cov) / n_samples)
        P = np.linalg.norm(traj.s, axis=-1)
        grad = np.divide(traj.s, P[:, None], out=np.zeros_like(traj.s), where=P[:, None] > 0)
        se_P = np.sqrt(np.maximum(np.einsum("tk,tkl,tl->t", grad, cov, grad), 0.0) / n_samples)
        traj.stderr = np.column_stack([se_s, se_P])
    else:
        traj.stderr = np.zeros((len(times), 4))

    w = traj.block_weights
    leakage = float(0.5 * np.max(np.abs(w - w[0]).sum(axis=1)))
    return EnsembleResult(traj, phases, notes, leakage, s_i)


@dataclass
class EffectiveComparison:
    gamma: float
    reference: Trajectory
    max_abs_dev: dict
    max_normalized_dev: dict
    fitted_gamma: float
    regime_warnings: list[str]

    @property
    def regime_ok(self) -> bool:
        return not self.regime_warnings


def fit_sz_rate(times, s_z) -> float:
    """Rate γ in ``s_z(t) ∝ e^{-2γt}`` by a log-linear least-squares fit."""
    t = np.asarray(times, float)
    s = np.asarray(s_z, float)
    if s[0] == 0:
        return math.nan
    ratio = s / s[0]
    keep = ratio > 0.02
    if keep.sum() < 2:
        return math.nan
    slope, _ = np.polyfit(t[keep], np.log(ratio[keep]), 1)
    return float(-slope / 2)


def compare_to_effective(
    averaged: EnsembleResult | Trajectory,
    atoms: Sequence[AtomSpec],
    rho_field0: DensityMatrix,
    grid: TimeGrid,
    gamma: float | None = None,
) -> EffectiveComparison:
    """Propagate the single-mode depolarizing equation with rate ``gamma``
    (default :func:`gamma_effective`) and measure the deviation of the
    averaged microscopic trajectory from it."""
    traj = averaged.trajectory if isinstance(averaged, EnsembleResult) else averaged
    times = grid.times()
    if traj.times.shape != times.shape or not np.allclose(traj.times, times, rtol=0, atol=1e-12 * max(1, grid.t1)):
        raise ValueError("averaged trajectory and grid have different sample times")
    if gamma is None:
        gamma = gamma_effective(atoms) if all(a.g_abs > 0 for a in atoms) else 0.0
    ref = evolve_exact(rho_field0, ModelSpec(ModelKind.DEPOLARIZING, gamma=gamma), grid)

    cols = {"s_x": 0, "s_y": 1, "s_z": 2}
    dev, ndev = {}, {}
    for name, k in cols.items():
        d = np.abs(traj.s[:, k] - ref.s[:, k])
        dev[name] = float(d.max())
        ndev[name] = _normalized(d, traj.stderr[:, k] if traj.stderr is not None else None)
    dP = np.abs(traj.P - ref.P)
    dev["P"] = float(dP.max())
    ndev["P"] = _normalized(dP, traj.stderr[:, 3] if traj.stderr is not None else None)
    n0 = float(traj.n_mean[0]) if len(traj.n_mean) else 1.0
    return EffectiveComparison(
        gamma=float(gamma),
        reference=ref,
        max_abs_dev=dev,
        max_normalized_dev=ndev,
        fitted_gamma=fit_sz_rate(traj.times, traj.s[:, 2]),
        regime_warnings=regime_check(atoms, n_photons=max(n0, 1.0)),
    )


def _normalized(dev: np.ndarray, se: np.ndarray | None) -> float:
    if se is None:
        return math.nan
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, dev / se, np.where(dev > 0, np.inf, 0.0))
    return float(z.max())
