"""Closed-form solutions used as oracles for the numerical propagators.

Two-mode states live in the ordered basis
``|1> = |+>_1|+>_2, |2> = |+>_1|->_2, |3> = |->_1|+>_2, |4> = |->_1|->_2``
(one photon per mode).
"""

from __future__ import annotations

import numpy as np

from .density import DensityMatrix, InvalidStateError, as_array, check_physical
from .fock import FockBasis, enumerate_basis
from .observables import PolarizationVector, degree_of_polarization, expectation
from .polarization import build_polarization_ops

TWO_MODE_TOL = 1e-10

# occupation tuples (n_1+, n_1-, n_2+, n_2-) of |1>..|4>
TWO_MODE_OCCUPATIONS = ((1, 0, 1, 0), (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1))


def _as_vector(s0) -> tuple[np.ndarray, float]:
    if isinstance(s0, PolarizationVector):
        return s0.as_array(), s0.n_mean
    return np.asarray(s0, dtype=float), 1.0


def dephasing_bloch(s0, gamma_plus: float, gamma_minus: float, t: float) -> PolarizationVector:
    """One photon under pure dephasing: transverse components decay, s_z is frozen."""
    if t < 0:
        raise ValueError("t must be >= 0")
    s, n = _as_vector(s0)
    f = np.exp(-(gamma_plus + gamma_minus) * t / 2)
    return PolarizationVector(s[0] * f, s[1] * f, s[2], n)


def depolarizing_bloch(s0, gamma: float, t: float) -> PolarizationVector:
    """One photon under the depolarizing equation: ``e^{-γt}`` transverse, ``e^{-2γt}`` along z."""
    if t < 0:
        raise ValueError("t must be >= 0")
    s, n = _as_vector(s0)
    f = np.exp(-gamma * t)
    return PolarizationVector(s[0] * f, s[1] * f, s[2] * f * f, n)


def depolarizing_degree(s0, gamma: float, t: float) -> float:
    s, _ = _as_vector(s0)
    return float(np.sqrt(s[0] ** 2 + s[1] ** 2 + s[2] ** 2 * np.exp(-2 * gamma * t)) * np.exp(-gamma * t))


def bloch_density(s) -> np.ndarray:
    """``(1 + s.σ)/2`` in the ``(|+>, |->)`` basis."""
    sx, sy, sz = s
    return 0.5 * np.array([[1 + sz, sx - 1j * sy], [sx + 1j * sy, 1 - sz]], dtype=complex)


def _check_two_mode(rho: np.ndarray) -> None:
    if rho.shape != (4, 4):
        raise InvalidStateError(f"two-mode state must be 4x4, got {rho.shape}")
    check_physical(rho, herm_tol=TWO_MODE_TOL, trace_tol=TWO_MODE_TOL, min_eig_tol=-np.inf)


def two_mode_solution(rho0, gamma1: float, gamma2: float, t: float) -> np.ndarray:
    """Closed-form two-mode solution for one photon per mode.

    Lower-triangle coherences follow the listed relations; the upper triangle
    (including ``ρ23``) comes from Hermiticity and ``ρ44`` from the trace.
    """
    r = np.asarray(as_array(rho0), dtype=complex)
    _check_two_mode(r)
    if t < 0:
        raise ValueError("t must be >= 0")
    e1, e2 = np.exp(-gamma1 * t), np.exp(-gamma2 * t)
    E1, E2, E12 = e1 * e1, e2 * e2, (e1 * e2) ** 2
    p = lambda a, b: r[a - 1, b - 1]  # noqa: E731  1-based like the basis labels

    out = np.zeros((4, 4), dtype=complex)
    lower = {
        (2, 1): 0.5 * (p(2, 1) * (1 + E1) + p(4, 3) * (1 - E1)) * e2,
        (3, 1): 0.5 * (p(3, 1) * (1 + E2) + p(4, 2) * (1 - E2)) * e1,
        (4, 1): p(4, 1) * e1 * e2,
        (3, 2): p(3, 2) * e1 * e2,
        (4, 2): 0.5 * (p(4, 2) * (1 + E2) + p(3, 1) * (1 - E2)) * e1,
        (4, 3): 0.5 * (p(4, 3) * (1 + E1) + p(2, 1) * (1 - E1)) * e2,
    }
    for (a, b), v in lower.items():
        out[a - 1, b - 1] = v
        out[b - 1, a - 1] = np.conj(v)

    d = np.real(np.diagonal(r))
    r11, r22, r33, r44 = d
    out[0, 0] = 0.25 * (1 + (2 * (r11 + r22) - 1) * E1 + (2 * (r11 + r33) - 1) * E2 + (2 * (r11 + r44) - 1) * E12)
    out[1, 1] = 0.25 * (1 + (2 * (r22 + r11) - 1) * E1 + (2 * (r22 + r44) - 1) * E2 + (2 * (r22 + r33) - 1) * E12)
    out[2, 2] = 0.25 * (1 + (2 * (r33 + r44) - 1) * E1 + (2 * (r33 + r11) - 1) * E2 + (2 * (r33 + r22) - 1) * E12)
    out[3, 3] = 1 - out[0, 0].real - out[1, 1].real - out[2, 2].real
    return out


def two_mode_indices(basis: FockBasis) -> np.ndarray:
    if basis.m != 2 or basis.N_max < 2:
        raise ValueError("two-mode states need m = 2 and N_max >= 2")
    return np.array([basis.state_index(o) for o in TWO_MODE_OCCUPATIONS])


def embed_two_mode(rho4, basis: FockBasis) -> DensityMatrix:
    idx = two_mode_indices(basis)
    full = np.zeros((basis.dim, basis.dim), dtype=complex)
    full[np.ix_(idx, idx)] = as_array(rho4)
    return DensityMatrix(basis, full)


def restrict_two_mode(rho, basis: FockBasis) -> np.ndarray:
    idx = two_mode_indices(basis)
    return as_array(rho)[np.ix_(idx, idx)]


def two_mode_j_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Explicit J_x, J_y, J_z on the one-photon-per-mode subspace, as tabulated
    for this basis (independent of the Schwinger construction)."""
    Jx = 0.5 * np.array([[0, 1, 1, 0], [1, 0, 0, 1], [1, 0, 0, 1], [0, 1, 1, 0]], dtype=complex)
    Jy = 0.5 * np.array([[0, -1j, -1j, 0], [1j, 0, 0, -1j], [1j, 0, 0, -1j], [0, 1j, 1j, 0]])
    Jz = np.diag([1, 0, 0, -1]).astype(complex)
    return Jx, Jy, Jz


def steady_state_block(N: int, basis: FockBasis) -> DensityMatrix:
    """Maximally mixed state ``1/(N+1)`` on the N-photon block of a single mode."""
    if basis.m != 1:
        raise ValueError("steady_state_block is defined for m = 1")
    if not 0 <= N <= basis.N_max:
        raise ValueError(f"N={N} outside 0..{basis.N_max}")
    data = np.zeros((basis.dim, basis.dim), dtype=complex)
    sl = basis.block_slice(N)
    data[sl, sl] = np.eye(N + 1) / (N + 1)
    return DensityMatrix(basis, data)


# ---------------------------------------------------------------------------
# two-mode polarization table: computed values next to the published claims

TWO_MODE_STATES = {
    "product_pp": np.array([1, 0, 0, 0], dtype=complex),
    "bell_plus": np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2),
    "bell_minus": np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2),
}
SINGLET = TWO_MODE_STATES["bell_minus"]


def _claimed_degree(name: str, g1: float, g2: float, t: float) -> float:
    if name == "product_pp":
        return 0.5 * (np.exp(-2 * g1 * t) + np.exp(-2 * g2 * t))
    return 0.5 * np.exp(-(g1 + g2) * t)


def two_mode_polarization_report(gamma1: float, gamma2: float, times) -> list[dict]:
    """Tabulate P(t) for the two-mode example states.

    For each state and time the row holds the degree of polarization from its
    definition (``P_definition``), the tabulated closed expression without the
    square root (``P_displayed``), the published closed form (``P_claimed``),
    ``<J>``, the singlet-projector weight and ``|ρ23|``.
    """
    basis = enumerate_basis(2, 2)
    ops = build_polarization_ops(basis)
    rows = []
    for name, ket in TWO_MODE_STATES.items():
        rho0 = np.outer(ket, ket.conj())
        for t in times:
            r = two_mode_solution(rho0, gamma1, gamma2, float(t))
            full = embed_two_mode(r, basis)
            J = np.array([expectation(A, full).real for A in ops.vector()])
            P_def = degree_of_polarization(full, ops)
            coh = r[0, 1] + r[0, 2] + r[1, 3] + r[2, 3]
            P_disp = float(abs(coh) ** 2 + abs(r[0, 0] - r[3, 3]) ** 2)
            rows.append(
                {
                    "state": name,
                    "t": float(t),
                    "P_definition": P_def,
                    "P_displayed": P_disp,
                    "P_claimed": float(_claimed_degree(name, gamma1, gamma2, float(t))),
                    "J_x": float(J[0]),
                    "J_y": float(J[1]),
                    "J_z": float(J[2]),
                    "singlet_weight": float(np.real(SINGLET.conj() @ r @ SINGLET)),
                    "abs_rho23": float(abs(r[1, 2])),
                }
            )
    return rows


def format_report(rows: list[dict]) -> str:
    cols = ["state", "t", "P_definition", "P_displayed", "P_claimed", "singlet_weight", "abs_rho23"]
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for row in rows:
        cells = [row["state"]] + [f"{row[c]:.6f}" for c in cols[1:]]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines)
