"""Scenario files: one JSON document describing a run."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kleingordon import CauchyData, GridSpec, MarginError, lambda_grid, read_fields
from .subspace import SubspaceError, direct_sum, from_basis, real_line, two_mode_fixture

MODES = ("subspace-demo", "wave-entropy", "fock-check", "convergence")

DEFAULT_TOLERANCES = {
    "two_path_1d": 1e-6,
    "two_path_2d": 1e-4,
    "oracle": 1e-6,
    "fd_first": 1e-4,
    "fd_second": 1e-3,
    "qnec": 1e-10,
    "monotone": 1e-12,
    "convexity": 1e-8,
    "additivity": 1e-8,
    "conservation": 1e-9,
    "order": 2.0,
    "order_slack": 0.05,
    "rounding_floor": 1e-11,
    "cutting": 1e-9,
    "lemma": 1e-9,
    "entropy_paths": 1e-9,
    "difference_quotient": 1e-5,
    "modular": 1e-9,
    "fock_tail": 1e-10,
    "fock_derivative": 1e-5,
}


class ScenarioParseError(ValueError):
    """The scenario file cannot be read as JSON."""


class ScenarioError(ValueError):
    """The scenario parses but its parameters are invalid."""


@dataclass
class WaveSpec:
    d: int
    mass: float
    L: float
    N: int
    f: dict | None = None
    g: dict | None = None
    fields_in: str | None = None

    def grid(self, N: int | None = None) -> GridSpec:
        return GridSpec(self.d, self.L, N or self.N)

    def cauchy_data(self, N: int | None = None) -> CauchyData:
        if self.fields_in:
            state = read_fields(self.fields_in)
            support = _nonzero_box(state.grid, state.phi, state.phi_dot)
            return CauchyData(state.grid, state.mass, state.phi, state.phi_dot, support, state.t)
        return CauchyData.from_profiles(self.grid(N), self.mass, self.f, self.g)


def _nonzero_box(grid: GridSpec, *arrays):
    mask = np.zeros(grid.shape, dtype=bool)
    for a in arrays:
        mask |= a != 0
    if not mask.any():
        return None
    box = []
    for c in grid.coords:
        vals = c[mask]
        box.append((float(vals.min()), float(vals.max())))
    return box


@dataclass
class Scenario:
    mode: str
    name: str
    raw: dict
    wave: WaveSpec | None = None
    lambda_range: tuple | None = None
    lambda0: float | None = None
    subspace: dict | None = None
    vectors: list = field(default_factory=list)
    random: dict | None = None
    cutoff: int = 25
    fd_step: float = 1e-3
    doublings: int = 2
    workers: int = 1
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    outputs: dict = field(default_factory=dict)

    def lambdas(self, grid: GridSpec) -> np.ndarray:
        start, stop, step = self.lambda_range
        return lambda_grid(grid, start, stop, step)


def load(path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ScenarioParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioParseError(f"{path}: top level must be an object")
    return from_dict(raw)


def _positive(value, name, kind=float):
    try:
        v = kind(value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{name} must be a number") from exc
    if not v > 0:
        raise ScenarioError(f"{name} must be positive, got {value!r}")
    return v


def from_dict(raw: dict) -> Scenario:
    mode = raw.get("mode")
    if mode not in MODES:
        raise ScenarioError(f"mode must be one of {MODES}, got {mode!r}")
    tolerances = dict(DEFAULT_TOLERANCES)
    for key, val in raw.get("tolerances", {}).items():
        if key not in DEFAULT_TOLERANCES:
            raise ScenarioError(f"unknown tolerance {key!r}")
        tolerances[key] = _positive(val, f"tolerances.{key}")
    sc = Scenario(
        mode=mode,
        name=str(raw.get("name", mode)),
        raw=raw,
        tolerances=tolerances,
        outputs=dict(raw.get("outputs", {})),
        doublings=int(raw.get("doublings", 2)),
        workers=int(raw.get("workers", 1)),
    )
    if sc.doublings < 1:
        raise ScenarioError("doublings must be at least 1")

    if mode in ("wave-entropy", "convergence"):
        sc.wave = _wave(raw.get("wave"))
        lam = raw.get("lambda")
        if lam is None:
            raise ScenarioError("a wave scenario needs a 'lambda' range {start, stop, step}")
        try:
            start, stop, step = float(lam["start"]), float(lam["stop"]), float(lam["step"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError("lambda needs numeric start, stop and step") from exc
        if not step > 0:
            raise ScenarioError(f"lambda step must be positive, got {step}")
        if stop < start:
            raise ScenarioError("lambda stop is below start")
        sc.lambda_range = (start, stop, step)
        sc.lambda0 = float(raw.get("lambda0", 0.5 * (start + stop)))
        _validate_wave(sc)
    else:
        sc.subspace = raw.get("subspace")
        sc.vectors = [_vector(v, i) for i, v in enumerate(raw.get("vectors", []))]
        sc.random = raw.get("random")
        if sc.subspace is None and sc.random is None:
            raise ScenarioError("need a 'subspace' definition or a 'random' population")
        if sc.subspace is not None:
            h = build_subspace(sc.subspace)
            for v in sc.vectors:
                if v.size != h.n:
                    raise ScenarioError(f"vector of length {v.size} does not fit C^{h.n}")
        if sc.random is not None:
            _positive(sc.random.get("count", 1), "random.count", int)
            max_n = _positive(sc.random.get("max_n", 4), "random.max_n", int)
            if max_n < 2:
                raise ScenarioError("random.max_n must be at least 2")
        sc.cutoff = int(_positive(raw.get("cutoff", 25), "cutoff", int))
        sc.fd_step = _positive(raw.get("fd_step", 1e-3), "fd_step")
    return sc


def _wave(w) -> WaveSpec:
    if not isinstance(w, dict):
        raise ScenarioError("a wave scenario needs a 'wave' object")
    if "fields_in" in w:
        return WaveSpec(d=0, mass=0.0, L=0.0, N=0, fields_in=str(w["fields_in"]))
    d = int(w.get("d", 1))
    if d not in (1, 2):
        raise ScenarioError(f"wave.d must be 1 or 2, got {d}")
    N = _positive(w.get("N"), "wave.N", int)
    if N & (N - 1):
        raise ScenarioError(f"wave.N must be a power of two, got {N}")
    return WaveSpec(
        d=d,
        mass=_positive(w.get("mass", 1.0), "wave.mass"),
        L=_positive(w.get("L"), "wave.L"),
        N=N,
        f=w.get("f"),
        g=w.get("g"),
    )


def _validate_wave(sc: Scenario) -> None:
    try:
        data = sc.wave.cauchy_data()
        if sc.wave.fields_in:
            w = data.grid
            sc.wave = WaveSpec(w.d, data.mass, w.L, w.N, fields_in=sc.wave.fields_in)
        lams = sc.lambdas(data.grid)
        dx = data.grid.dx
        for lam in (lams[0] - dx, lams[-1] + dx, sc.lambda0 - dx, sc.lambda0 + dx):
            data.check_margin(lam)
    except (MarginError, ValueError, OSError) as exc:
        raise ScenarioError(str(exc)) from exc


def _vector(v, i) -> np.ndarray:
    try:
        arr = np.asarray(v, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"vectors[{i}] must be a list of [re, im] pairs") from exc
    return arr[:, 0] + 1j * arr[:, 1]


def build_subspace(spec: dict):
    """Subspace from {'fixture': 'two-mode', 'mu': ..}, {'fixture': 'real-line'},
    {'basis': [[[re, im], ...], ...]} or {'direct_sum': [spec, spec, ...]}."""
    try:
        if "direct_sum" in spec:
            parts = [build_subspace(p) for p in spec["direct_sum"]]
            out = parts[0]
            for p in parts[1:]:
                out = direct_sum(out, p)
            return out
        if spec.get("fixture") == "two-mode":
            return two_mode_fixture(_positive(spec.get("mu", 4.0), "subspace.mu"))
        if spec.get("fixture") == "real-line":
            return real_line()
        if "basis" in spec:
            return from_basis([_vector(v, i) for i, v in enumerate(spec["basis"])])
    except SubspaceError as exc:
        raise ScenarioError(str(exc)) from exc
    raise ScenarioError(f"cannot build a subspace from {spec!r}")
