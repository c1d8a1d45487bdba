"""Scenario configuration: strict JSON, schema-validated, plus semantic checks."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from .bath import AtomSpec
from .density import DensityMatrix, InvalidStateError, state_defects
from .fock import FockBasis, enumerate_basis
from .lindblad import ModelKind, ModelSpec
from .oracles import TWO_MODE_STATES, embed_two_mode
from .propagate import TimeGrid

SCHEMA_VERSION = 1
MATRIX_HERM_TOL = 1e-12
MATRIX_TRACE_TOL = 1e-12
MATRIX_MIN_EIG = -1e-10

PRESETS = {
    "vacuum": "vacuum, any m",
    "plus": "one photon |+> in mode 1",
    "minus": "one photon |-> in mode 1",
    "x_plus": "one photon (|+> + |->)/sqrt2 in mode 1",
    "product_pp": "|+>_1|+>_2 (m = 2)",
    "bell_plus": "(|+>_1|->_2 + |->_1|+>_2)/sqrt2 (m = 2)",
    "bell_minus": "(|+>_1|->_2 - |->_1|+>_2)/sqrt2 (m = 2)",
    "singlet": "alias of bell_minus (m = 2)",
}
TWO_MODE_PRESETS = {"product_pp", "bell_plus", "bell_minus", "singlet"}


class ConfigError(ValueError):
    """Invalid scenario; ``path`` points at the offending key."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def load_schema() -> dict:
    text = resources.files("lightdepol").joinpath("scenario.schema.json").read_text()
    return json.loads(text)


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    model: str
    m: int
    N_max: int
    state: Any
    grid: TimeGrid
    field_model: ModelSpec | None
    integrator: str = "rk4"
    atoms: tuple[AtomSpec, ...] = ()
    n_samples: int = 256
    seed: int = 0
    which_H: str = "full"
    cross_atom_term: bool = False
    antithetic: bool = False
    field_omega: float = 0.0
    out_dir: str | None = None
    final_rho: bool = False
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def microscopic(self) -> bool:
        return self.model == "microscopic"

    def basis(self) -> FockBasis:
        return enumerate_basis(self.m, self.N_max)

    def initial_state(self, basis: FockBasis | None = None) -> DensityMatrix:
        return build_initial_state(self.state, basis or self.basis())


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name} is not valid JSON")


def parse_config(text: str) -> ScenarioConfig:
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except (json.JSONDecodeError, ValueError) as exc:
        raise ConfigError("$", f"not valid JSON: {exc}") from None
    return config_from_dict(raw)


def load_config(path: str | Path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError("$", f"cannot read {p}: {exc.strerror}") from None
    return parse_config(text)


def config_from_dict(raw: dict) -> ScenarioConfig:
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), list(map(str, e.absolute_path))))
    if errors:
        err = errors[0]
        raise ConfigError(_path(err.absolute_path), err.message)

    model = raw["model"]
    m = raw.get("m", 1)
    N_max = raw.get("N_max", 1)
    t0 = float(raw.get("t0", 0.0))
    t1 = float(raw["t1"])
    if not t1 > t0:
        raise ConfigError("$.t1", f"must exceed t0 = {t0}")
    grid = TimeGrid(t1=t1, n_steps=raw["n_steps"], t0=t0, sample_every=raw.get("sample_every", 1))

    field_model = None
    atoms: tuple[AtomSpec, ...] = ()
    if model == "microscopic":
        if "atoms" not in raw:
            raise ConfigError("$.atoms", "required for the microscopic model")
        if m != 1:
            raise ConfigError("$.m", "the microscopic model couples to a single field mode (m = 1)")
        try:
            atoms = tuple(AtomSpec(**a) for a in raw["atoms"])
        except ValueError as exc:
            raise ConfigError("$.atoms", str(exc)) from None
    else:
        for key in ("atoms", "n_samples", "which_H", "cross_atom_term", "antithetic", "field_omega"):
            if key in raw:
                raise ConfigError(f"$.{key}", f"only meaningful for the microscopic model, not {model}")
        if model == "multimode":
            gj = raw.get("gamma_j")
            if gj is None or len(gj) != m:
                raise ConfigError("$.gamma_j", f"multimode needs one rate per mode ({m})")
            wj = raw.get("omega_j", [0.0] * m)
            if len(wj) != m:
                raise ConfigError("$.omega_j", f"expected {m} frequencies, got {len(wj)}")
        elif model == "depolarizing" and "gamma" not in raw:
            raise ConfigError("$.gamma", "required for the depolarizing model")
        field_model = ModelSpec(
            kind=ModelKind(model),
            gamma_plus=raw.get("gamma_plus", 0.0),
            gamma_minus=raw.get("gamma_minus", 0.0),
            gamma=raw.get("gamma", 0.0),
            gamma_j=tuple(raw.get("gamma_j", ())),
            omega=raw.get("omega", 0.0),
            omega_j=tuple(raw.get("omega_j", [0.0] * m if model == "multimode" else ())),
            include_unitary=raw.get("include_unitary", False),
        )

    try:
        basis = enumerate_basis(m, N_max)
    except ValueError as exc:
        raise ConfigError("$.N_max", str(exc)) from None
    build_initial_state(raw["state"], basis)

    return ScenarioConfig(
        model=model,
        m=m,
        N_max=N_max,
        state=raw["state"],
        grid=grid,
        field_model=field_model,
        integrator=raw.get("integrator", "rk4"),
        atoms=atoms,
        n_samples=raw.get("n_samples", 256),
        seed=raw.get("seed", 0),
        which_H=raw.get("which_H", "full"),
        cross_atom_term=raw.get("cross_atom_term", False),
        antithetic=raw.get("antithetic", False),
        field_omega=raw.get("field_omega", 0.0),
        out_dir=raw.get("out_dir"),
        final_rho=raw.get("final_rho", False),
        raw={"schema_version": SCHEMA_VERSION, **raw},
    )


def _one_photon(basis: FockBasis, amp_plus: complex, amp_minus: complex) -> np.ndarray:
    ket = np.zeros(basis.dim, dtype=complex)
    zeros = [0] * (2 * basis.m)
    for slot, amp in ((0, amp_plus), (1, amp_minus)):
        occ = list(zeros)
        occ[slot] = 1
        ket[basis.state_index(tuple(occ))] = amp
    return ket


def _matrix_from_json(rows) -> np.ndarray:
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ConfigError("$.state.matrix", f"must be square, got {n} rows of lengths {[len(r) for r in rows]}")
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            out[i, j] = complex(x[0], x[1]) if isinstance(x, list) else complex(x)
    return out


def build_initial_state(state, basis: FockBasis) -> DensityMatrix:
    """Resolve a preset name or an explicit matrix to a validated state.

    Explicit matrices may span the whole truncated basis, or (for m = 2) the
    4x4 one-photon-per-mode subspace, or (for m = 1) the 2x2 one-photon block.
    """
    if isinstance(state, dict):
        rho = _matrix_from_json(state["matrix"])
        d = state_defects(rho)
        if d["hermiticity"] > MATRIX_HERM_TOL:
            raise ConfigError("$.state.matrix", f"not Hermitian: max |rho - rho^dagger| = {d['hermiticity']:.3g}")
        tr = d["trace"]
        if abs(tr - 1) > MATRIX_TRACE_TOL:
            detail = f"trace = {tr.real:.12g}, deficit {1 - tr.real:.12g}"
            if tr.imag:
                detail += f", imaginary part {tr.imag:.3g}"
            raise ConfigError("$.state.matrix", detail)
        if d["min_eig"] < MATRIX_MIN_EIG:
            raise ConfigError("$.state.matrix", f"negative eigenvalue {d['min_eig']:.3g}")
        n = rho.shape[0]
        if n == basis.dim:
            return DensityMatrix(basis, rho)
        if n == 4 and basis.m == 2 and basis.N_max >= 2:
            return embed_two_mode(rho, basis)
        if n == 2 and basis.m == 1 and basis.N_max >= 1:
            full = np.zeros((basis.dim, basis.dim), dtype=complex)
            sl = basis.block_slice(1)
            full[sl, sl] = rho
            return DensityMatrix(basis, full)
        raise ConfigError("$.state.matrix", f"{n}x{n} does not fit a basis of dimension {basis.dim}")

    name = state
    if name in TWO_MODE_PRESETS:
        if basis.m != 2:
            raise ConfigError("$.state", f"{name!r} needs m = 2, got m = {basis.m}")
        if basis.N_max < 2:
            raise ConfigError("$.state", f"{name!r} needs N_max >= 2, got {basis.N_max}")
        ket = TWO_MODE_STATES["bell_minus" if name == "singlet" else name]
        return embed_two_mode(np.outer(ket, ket.conj()), basis)
    if name == "vacuum":
        return DensityMatrix(basis, basis.projector((0,) * (2 * basis.m)))
    if basis.N_max < 1:
        raise ConfigError("$.state", f"{name!r} needs N_max >= 1")
    amps = {"plus": (1, 0), "minus": (0, 1), "x_plus": (2**-0.5, 2**-0.5)}[name]
    try:
        return DensityMatrix.pure(basis, _one_photon(basis, *amps))
    except InvalidStateError as exc:
        raise ConfigError("$.state", str(exc)) from None
