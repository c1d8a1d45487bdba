"""Truncated two-polarization Fock spaces and elementary mode operators.

States are occupation tuples ``(n_{1+}, n_{1-}, ..., n_{m+}, n_{m-})`` truncated
by *total* photon number, so every fixed-N block is represented exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

MAX_STATES = 10_000

PLUS, MINUS = "+", "-"
_POL_OFFSET = {PLUS: 0, MINUS: 1, +1: 0, -1: 1}


def block_size(N: int, m: int) -> int:
    """Number of occupation states with exactly N photons in 2m slots."""
    return comb(N + 2 * m - 1, 2 * m - 1)


def _compositions(total: int, slots: int):
    """Yield all tuples of ``slots`` nonnegative ints summing to ``total``,
    in descending lexicographic order."""
    if slots == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, slots - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class FockBasis:
    m: int
    N_max: int
    states: tuple[tuple[int, ...], ...]
    index: dict = field(repr=False, compare=False)
    block_offsets: tuple[int, ...]

    @property
    def dim(self) -> int:
        return len(self.states)

    @property
    def n_slots(self) -> int:
        return 2 * self.m

    def block_slice(self, N: int) -> slice:
        if not 0 <= N <= self.N_max:
            raise ValueError(f"block N={N} outside 0..{self.N_max}")
        return slice(self.block_offsets[N], self.block_offsets[N + 1])

    def block_dims(self) -> list[int]:
        return [self.block_offsets[N + 1] - self.block_offsets[N] for N in range(self.N_max + 1)]

    def total_numbers(self) -> np.ndarray:
        return np.array([sum(s) for s in self.states])

    def state_index(self, occupation) -> int:
        return self.index[tuple(occupation)]

    def ket(self, occupation) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.state_index(occupation)] = 1.0
        return v

    def projector(self, occupation) -> np.ndarray:
        v = self.ket(occupation)
        return np.outer(v, v.conj())


def enumerate_basis(m: int, N_max: int, max_states: int = MAX_STATES) -> FockBasis:
    """Enumerate occupation states with total photon number <= ``N_max``.

    Ordering is ascending total N, then descending lexicographic within a
    block (mode-major, ``+`` before ``-``), e.g. for ``m=1, N_max=1``:
    ``(0,0), (1,0), (0,1)``.
    """
    if m < 1:
        raise ValueError(f"mode count must be >= 1, got {m}")
    if N_max < 0:
        raise ValueError(f"N_max must be >= 0, got {N_max}")
    dim = sum(block_size(N, m) for N in range(N_max + 1))
    if dim > max_states:
        raise ValueError(f"basis dimension {dim} exceeds limit {max_states}")

    states: list[tuple[int, ...]] = []
    offsets = [0]
    for N in range(N_max + 1):
        states.extend(_compositions(N, 2 * m))
        offsets.append(len(states))
    index = {s: i for i, s in enumerate(states)}
    return FockBasis(m, N_max, tuple(states), index, tuple(offsets))


@dataclass(frozen=True)
class OperatorMatrix:
    basis: object
    label: str
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        d = self.basis.dim
        if self.data.shape != (d, d):
            raise ValueError(f"{self.label}: matrix shape {self.data.shape} does not match basis dim {d}")

    @property
    def H(self) -> "OperatorMatrix":
        return OperatorMatrix(self.basis, f"({self.label})^dag", self.data.conj().T)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(self.basis, f"{self.label} {other.label}", self.data @ other.data)
        return self.data @ other


def _slot(basis: FockBasis, j: int, s) -> int:
    if not 0 <= j < basis.m:
        raise ValueError(f"mode index {j} out of range for m={basis.m}")
    if s not in _POL_OFFSET:
        raise ValueError(f"polarization must be '+' or '-', got {s!r}")
    return 2 * j + _POL_OFFSET[s]


def _pol_label(s) -> str:
    return PLUS if _POL_OFFSET[s] == 0 else MINUS


def annihilation_op(basis: FockBasis, j: int, s) -> OperatorMatrix:
    """``a_{js}`` with amplitude sqrt(n_{js}); maps the N-block to the (N-1)-block."""
    k = _slot(basis, j, s)
    data = np.zeros((basis.dim, basis.dim), dtype=complex)
    for col, occ in enumerate(basis.states):
        n = occ[k]
        if n == 0:
            continue
        lowered = occ[:k] + (n - 1,) + occ[k + 1:]
        data[basis.index[lowered], col] = np.sqrt(n)
    return OperatorMatrix(basis, f"a_{j}{_pol_label(s)}", data)


def creation_op(basis: FockBasis, j: int, s) -> OperatorMatrix:
    """``a†_{js}``; amplitudes that would leave the cutoff are dropped."""
    a = annihilation_op(basis, j, s)
    return OperatorMatrix(basis, f"a_{j}{_pol_label(s)}^dag", a.data.conj().T.copy())


def number_op(basis: FockBasis, j: int | None = None, s=None) -> OperatorMatrix:
    """Occupation of slot (j, s); a mode total if only ``j``; total N if neither."""
    occ = np.array(basis.states)
    if j is None:
        diag, label = occ.sum(axis=1), "N"
    elif s is None:
        diag, label = occ[:, 2 * j] + occ[:, 2 * j + 1], f"N_{j}"
        _slot(basis, j, PLUS)
    else:
        diag, label = occ[:, _slot(basis, j, s)], f"n_{j}{_pol_label(s)}"
    return OperatorMatrix(basis, label, np.diag(diag.astype(complex)))


def identity(basis: FockBasis) -> OperatorMatrix:
    return OperatorMatrix(basis, "1", np.eye(basis.dim, dtype=complex))
