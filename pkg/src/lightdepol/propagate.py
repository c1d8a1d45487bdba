"""Time evolution: fixed-step RK4 and an exact matrix-exponential oracle.

Neither path renormalizes the trace or clips eigenvalues. Sampled states that
drift out of the physical set raise :class:`InvariantDriftError`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .density import DensityMatrix, as_array
from .fock import FockBasis
from .lindblad import LindbladGenerator, ModelSpec, build_generator, unvec, vec
from .observables import polarization_vectors
from .polarization import PolarizationOperators, block_weights, build_polarization_ops

TRACE_DRIFT_TOL = 1e-9
HERMITIAN_DRIFT_TOL = 1e-10
MIN_EIG_FLOOR = -1e-8
STEP_WARN = 0.1
EIG_COND_LIMIT = 1e12


class InvariantDriftError(RuntimeError):
    def __init__(self, t: float, quantity: str, value: float):
        super().__init__(f"{quantity} = {value:.3g} out of bounds at t = {t:.17g}")
        self.t = t
        self.quantity = quantity
        self.value = value


class StepSizeWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class TimeGrid:
    t1: float
    n_steps: int
    t0: float = 0.0
    sample_every: int = 1

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise ValueError(f"need t1 > t0, got t0={self.t0}, t1={self.t1}")
        if self.n_steps < 1 or self.sample_every < 1:
            raise ValueError("n_steps and sample_every must be >= 1")

    @property
    def dt(self) -> float:
        return (self.t1 - self.t0) / self.n_steps

    def sample_steps(self) -> np.ndarray:
        steps = list(range(0, self.n_steps + 1, self.sample_every))
        if steps[-1] != self.n_steps:
            steps.append(self.n_steps)
        return np.array(steps)

    def times(self) -> np.ndarray:
        return self.t0 + self.sample_steps() * self.dt


@dataclass
class Trajectory:
    """Sampled observables along one evolution."""

    times: np.ndarray
    s: np.ndarray
    n_mean: np.ndarray
    P: np.ndarray
    purity: np.ndarray
    trace: np.ndarray
    min_eig: np.ndarray
    hermiticity: np.ndarray
    block_weights: np.ndarray
    states: np.ndarray | None = field(default=None, repr=False)
    stderr: np.ndarray | None = field(default=None, repr=False)  # columns s_x, s_y, s_z, P

    def __len__(self) -> int:
        return len(self.times)

    @classmethod
    def from_states(cls, times, states, ops: PolarizationOperators, keep_states: bool = False) -> "Trajectory":
        states = np.asarray(states)
        s, n = polarization_vectors(states, ops)
        herm = np.max(np.abs(states - np.conj(np.swapaxes(states, -1, -2))), axis=(-2, -1))
        hpart = 0.5 * (states + np.conj(np.swapaxes(states, -1, -2)))
        return cls(
            times=np.asarray(times, dtype=float),
            s=s,
            n_mean=n,
            P=np.linalg.norm(s, axis=-1),
            purity=np.real(np.einsum("tij,tji->t", states, states)),
            trace=np.real(np.trace(states, axis1=-2, axis2=-1)),
            min_eig=np.linalg.eigvalsh(hpart)[:, 0],
            hermiticity=herm,
            block_weights=block_weights(states, ops.basis),
            states=states if keep_states else None,
        )

    def check_invariants(
        self,
        trace_tol: float = TRACE_DRIFT_TOL,
        herm_tol: float = HERMITIAN_DRIFT_TOL,
        min_eig: float = MIN_EIG_FLOOR,
    ) -> None:
        for k, t in enumerate(self.times):
            if abs(self.trace[k] - 1.0) > trace_tol:
                raise InvariantDriftError(t, "trace - 1", self.trace[k] - 1.0)
            if self.hermiticity[k] > herm_tol:
                raise InvariantDriftError(t, "hermiticity drift", self.hermiticity[k])
            if self.min_eig[k] < min_eig:
                raise InvariantDriftError(t, "min eigenvalue", self.min_eig[k])


def rk4_sampled(f: Callable[[np.ndarray], np.ndarray], rho0: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Classic fixed-step RK4 of ``dρ/dt = f(ρ)``; returns states at sampled steps."""
    dt = grid.dt
    wanted = set(grid.sample_steps().tolist())
    y = np.array(rho0, dtype=complex)
    out = [y.copy()]
    for step in range(1, grid.n_steps + 1):
        k1 = f(y)
        k2 = f(y + (0.5 * dt) * k1)
        k3 = f(y + (0.5 * dt) * k2)
        k4 = f(y + dt * k3)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step in wanted:
            out.append(y.copy())
    return np.stack(out)


class ExactPropagator:
    """``exp(L t)`` by eigendecomposition, or scaling-and-squaring if the
    eigenvector matrix is ill-conditioned."""

    def __init__(self, L: np.ndarray, cond_limit: float = EIG_COND_LIMIT):
        self.L = np.asarray(L, dtype=complex)
        w, V = np.linalg.eig(self.L)
        cond = np.linalg.cond(V)
        self.cond = float(cond)
        if np.isfinite(cond) and cond < cond_limit:
            self.method = "eig"
            self._w, self._V, self._Vinv = w, V, np.linalg.inv(V)
        else:
            self.method = "expm"

    def matrix(self, t: float) -> np.ndarray:
        if self.method == "eig":
            return (self._V * np.exp(self._w * t)) @ self._Vinv
        return sla.expm(self.L * t)

    def apply(self, v0: np.ndarray, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if self.method == "eig":
            c = self._Vinv @ v0
            return np.stack([self._V @ (np.exp(self._w * t) * c) for t in times])
        return np.stack([sla.expm(self.L * t) @ v0 for t in times])


def _prepare(rho0, model, basis, ops):
    if isinstance(rho0, DensityMatrix):
        basis = rho0.basis
    if basis is None:
        raise ValueError("basis must be given when rho0 is a bare array")
    ops = ops if ops is not None else build_polarization_ops(basis)
    gen = model if isinstance(model, LindbladGenerator) else build_generator(model, basis, ops)
    return as_array(rho0), gen, ops


def evolve_rk4(
    rho0,
    model: ModelSpec | LindbladGenerator,
    grid: TimeGrid,
    *,
    basis: FockBasis | None = None,
    ops: PolarizationOperators | None = None,
    keep_states: bool = False,
    check: bool = True,
) -> Trajectory:
    r0, gen, ops = _prepare(rho0, model, basis, ops)
    if isinstance(model, ModelSpec) and model.max_rate * grid.dt > STEP_WARN:
        warnings.warn(
            f"gamma_max*dt = {model.max_rate * grid.dt:.3g} exceeds {STEP_WARN}", StepSizeWarning, stacklevel=2
        )
    states = rk4_sampled(gen.rhs, r0, grid)
    traj = Trajectory.from_states(grid.times(), states, ops, keep_states)
    if check:
        traj.check_invariants()
    return traj


def evolve_exact(
    rho0,
    model: ModelSpec | LindbladGenerator,
    grid: TimeGrid,
    *,
    basis: FockBasis | None = None,
    ops: PolarizationOperators | None = None,
    keep_states: bool = False,
    check: bool = True,
) -> Trajectory:
    r0, gen, ops = _prepare(rho0, model, basis, ops)
    prop = ExactPropagator(gen.liouvillian())
    times = grid.times()
    states = unvec(prop.apply(vec(r0), times - grid.t0), gen.dim)
    traj = Trajectory.from_states(times, states, ops, keep_states)
    if check:
        traj.check_invariants()
    return traj
