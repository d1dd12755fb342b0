"""Experiment configuration: JSON parsing, validation and model assembly.

A config document names the system (preset or explicit matrices), the input
field, the measurement scheme, the time grid, seeds and observables.
Complex numbers are two-element arrays [re, im]; bare numbers are accepted
as reals.  Validation stops at the first problem and reports a JSON-pointer
path to the offending entry; physics invariants (unitarity, Hermiticity,
weight normalization, wavepacket norm) are enforced by the domain objects
and re-raised with their config path attached.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import DEFAULT_BATCH_SIZE, TimeGrid
from .fields import (
    CatField,
    CoherentAmplitudes,
    ConstantSignal,
    GaussianSignal,
    PhotonField,
    TableSignal,
    VacuumField,
    Wavepacket,
    cat_superposition_gamma,
)
from .filters import MeasurementScheme
from .operators import cavity, two_level
from .slh import SlhTriple

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config"]


class ConfigError(ValueError):
    """Invalid configuration; the message starts with a JSON pointer path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _want(obj, path, typ, what):
    if not isinstance(obj, typ):
        raise ConfigError(path, f"expected {what}")
    return obj


def _get(obj: dict, path: str, key: str, default=None, required=False):
    if key not in obj:
        if required:
            raise ConfigError(f"{path}/{key}", "missing required entry")
        return default
    return obj[key]


def _complex(v, path) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ConfigError(path, "expected a number or [re, im] pair")


def _matrix(v, path) -> np.ndarray:
    rows = _want(v, path, list, "a matrix (list of rows)")
    try:
        out = np.array([[_complex(x, f"{path}/{i}/{j}") for j, x in enumerate(row)]
                        for i, row in enumerate(rows)], dtype=complex)
    except TypeError:
        raise ConfigError(path, "malformed matrix") from None
    if out.ndim != 2 or out.shape[0] != out.shape[1] or out.shape[0] == 0:
        raise ConfigError(path, f"expected a square matrix, got shape {out.shape}")
    return out


def _signal(spec, path):
    spec = _want(spec, path, dict, "a signal object")
    preset = _get(spec, path, "preset", required=True)
    if preset == "gaussian":
        omega = _get(spec, path, "omega", required=True)
        t_center = _get(spec, path, "t_center", required=True)
        scale = _complex(_get(spec, path, "scale", 1.0), f"{path}/scale")
        try:
            return GaussianSignal(float(omega), float(t_center), scale)
        except ValueError as e:
            raise ConfigError(path, str(e)) from None
    if preset == "constant":
        value = _complex(_get(spec, path, "value", required=True), f"{path}/value")
        window = _get(spec, path, "window", required=True)
        if (not isinstance(window, list)) or len(window) != 2:
            raise ConfigError(f"{path}/window", "expected [t_on, t_off]")
        try:
            return ConstantSignal(value, (float(window[0]), float(window[1])))
        except ValueError as e:
            raise ConfigError(path, str(e)) from None
    if preset == "table":
        times = _get(spec, path, "times", required=True)
        values = _get(spec, path, "values", required=True)
        vals = [_complex(v, f"{path}/values/{i}") for i, v in enumerate(values)]
        try:
            return TableSignal(np.asarray(times, dtype=float), np.asarray(vals))
        except (ValueError, TypeError) as e:
            raise ConfigError(path, str(e)) from None
    raise ConfigError(f"{path}/preset", f"unknown signal preset {preset!r}")


_TWO_LEVEL_OBS = {
    "excited_population": "proj_e",
    "ground_population": "proj_g",
    "sx": "sx",
    "sy": "sy",
    "sz": "sz",
    "number": "number",
}


@dataclass
class ExperimentConfig:
    """Fully validated experiment description."""

    system: SlhTriple
    rho0: np.ndarray
    field: object
    scheme: Optional[MeasurementScheme]
    grid: TimeGrid
    substeps: int
    seed: int
    n_traj: int
    parallelism: int
    batch_size: int
    save_trajectories: int
    observables: dict            # name -> (d, d) matrix
    oracle_tolerance: float
    oracle_weight_floor: float
    canonical: dict              # normalized document for round-tripping

    @property
    def dim(self) -> int:
        return self.system.dim

    def fine_grid(self) -> TimeGrid:
        return self.grid.refined(self.substeps)

    def to_json(self) -> str:
        return json.dumps(self.canonical, indent=2, sort_keys=True)


def _build_system(spec, path):
    spec = _want(spec, path, dict, "a system object")
    if "preset" in spec:
        preset = spec["preset"]
        kappa = float(_get(spec, path, "kappa", 1.0))
        if kappa <= 0:
            raise ConfigError(f"{path}/kappa", "coupling rate must be positive")
        delta = float(_get(spec, path, "delta", 0.0))
        if preset == "two_level_atom":
            tl = two_level()
            G = SlhTriple(tl["identity"], np.sqrt(kappa) * tl["sigma_minus"],
                          delta * tl["number"])
            catalog = tl
        elif preset == "cavity":
            dim = int(_get(spec, path, "dim", 4))
            if dim < 2:
                raise ConfigError(f"{path}/dim", "cavity needs dim >= 2")
            cv = cavity(dim)
            G = SlhTriple(cv["identity"], np.sqrt(kappa) * cv["annihilation"],
                          delta * cv["number"])
            catalog = cv
        else:
            raise ConfigError(f"{path}/preset", f"unknown system preset {preset!r}")
        return G, catalog
    for key in ("S", "L", "H"):
        if key not in spec:
            raise ConfigError(f"{path}/{key}", "explicit system needs S, L and H")
    S = _matrix(spec["S"], f"{path}/S")
    L = _matrix(spec["L"], f"{path}/L")
    H = _matrix(spec["H"], f"{path}/H")
    try:
        G = SlhTriple(S, L, H)
    except ValueError as e:
        raise ConfigError(path, str(e)) from None
    catalog = two_level() if G.dim == 2 else (cavity(G.dim))
    return G, catalog


def _build_initial_state(spec, path, dim):
    if spec is None or spec == "ground":
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        return rho
    spec = _want(spec, path, dict, "'ground' or an object with 'ket' or 'matrix'")
    if "ket" in spec:
        ket = np.array([_complex(v, f"{path}/ket/{i}") for i, v in enumerate(spec["ket"])])
        if ket.shape != (dim,):
            raise ConfigError(f"{path}/ket", f"expected length {dim}")
        norm = np.linalg.norm(ket)
        if abs(norm - 1.0) > 1e-8:
            raise ConfigError(f"{path}/ket", f"ket norm {norm:.6f} differs from 1")
        return np.outer(ket, ket.conj())
    if "matrix" in spec:
        rho = _matrix(spec["matrix"], f"{path}/matrix")
        if rho.shape != (dim, dim):
            raise ConfigError(f"{path}/matrix", f"expected {dim}x{dim}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-9 or abs(np.trace(rho) - 1) > 1e-9:
            raise ConfigError(f"{path}/matrix", "initial state must be Hermitian with unit trace")
        return rho
    raise ConfigError(path, "expected 'ground' or an object with 'ket' or 'matrix'")


def _build_field(spec, path):
    spec = _want(spec, path, dict, "a field object")
    kind = _get(spec, path, "type", required=True)
    if kind == "vacuum":
        return VacuumField()
    if kind == "photon":
        wp_spec = _get(spec, path, "wavepacket", required=True)
        sig = _signal(wp_spec, f"{path}/wavepacket")
        try:
            wp = Wavepacket(sig)
        except ValueError as e:
            raise ConfigError(f"{path}/wavepacket", str(e)) from None
        if isinstance(sig, GaussianSignal) and sig.t_center < 6.0 / sig.omega:
            lost = float(sig.cumulative_abs2_from(sig.support[0], 0.0))
            print(f"warning: {path}/wavepacket: envelope mass {lost:.2e} lies before t=0; "
                  "the simulation starts at t=0 and does not renormalize", file=sys.stderr)
        gamma = _matrix(_get(spec, path, "gamma", required=True), f"{path}/gamma")
        try:
            return PhotonField(gamma=gamma, wavepacket=wp)
        except ValueError as e:
            raise ConfigError(f"{path}/gamma", str(e)) from None
    if kind == "cat":
        amp_specs = _want(_get(spec, path, "amplitudes", required=True),
                          f"{path}/amplitudes", list, "a list of signal objects")
        signals = [_signal(s, f"{path}/amplitudes/{i}") for i, s in enumerate(amp_specs)]
        try:
            amps = CoherentAmplitudes(tuple(signals))
        except ValueError as e:
            raise ConfigError(f"{path}/amplitudes", str(e)) from None
        if "superposition" in spec:
            weights = [_complex(v, f"{path}/superposition/{i}")
                       for i, v in enumerate(spec["superposition"])]
            try:
                gamma = cat_superposition_gamma(weights, amps)
            except ValueError as e:
                raise ConfigError(f"{path}/superposition", str(e)) from None
        else:
            gamma = _matrix(_get(spec, path, "gamma", required=True), f"{path}/gamma")
        try:
            return CatField(gamma=gamma, amplitudes=amps)
        except ValueError as e:
            raise ConfigError(f"{path}/gamma", str(e)) from None
    raise ConfigError(f"{path}/type", f"unknown field type {kind!r}")


def _build_observables(spec, path, catalog, dim):
    if spec is None:
        spec = [{"name": "P_e", "preset": "excited_population"}] if dim == 2 else \
               [{"name": "n", "preset": "number"}]
    spec = _want(spec, path, list, "a list of observables")
    out = {}
    for i, entry in enumerate(spec):
        p = f"{path}/{i}"
        entry = _want(entry, p, dict, "an observable object")
        name = _get(entry, p, "name", required=True)
        if not isinstance(name, str) or not name:
            raise ConfigError(f"{p}/name", "expected a non-empty string")
        if name in out:
            raise ConfigError(f"{p}/name", f"duplicate observable name {name!r}")
        if "matrix" in entry:
            A = _matrix(entry["matrix"], f"{p}/matrix")
            if A.shape != (dim, dim):
                raise ConfigError(f"{p}/matrix", f"expected {dim}x{dim}")
        else:
            preset = _get(entry, p, "preset", required=True)
            key = _TWO_LEVEL_OBS.get(preset)
            if key is None or key not in catalog:
                raise ConfigError(f"{p}/preset", f"unknown observable preset {preset!r}")
            A = catalog[key]
        if np.max(np.abs(A - A.conj().T)) > 1e-9:
            raise ConfigError(p, "observables must be Hermitian")
        out[name] = A
    return out


def _canonical_complex(z: complex):
    return [float(np.real(z)), float(np.imag(z))]


def _canonical_matrix(M: np.ndarray):
    return [[_canonical_complex(z) for z in row] for row in np.asarray(M, dtype=complex)]


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a JSON config document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("/", f"invalid JSON: {e}") from None
    doc = _want(doc, "/", dict, "a JSON object")

    G, catalog = _build_system(_get(doc, "", "system", required=True), "/system")
    rho0 = _build_initial_state(doc.get("initial_state"), "/initial_state", G.dim)
    field = _build_field(_get(doc, "", "field", required=True), "/field")

    meas = doc.get("measurement")
    scheme = None
    if meas is not None:
        meas = _want(meas, "/measurement", dict, "a measurement object")
        kind = _get(meas, "/measurement", "scheme", required=True)
        floor = float(_get(meas, "/measurement", "intensity_floor", 1e-10))
        try:
            scheme = MeasurementScheme(kind, floor)
        except ValueError as e:
            raise ConfigError("/measurement", str(e)) from None

    gspec = _want(_get(doc, "", "grid", required=True), "/grid", dict, "a grid object")
    try:
        grid = TimeGrid(float(_get(gspec, "/grid", "t0", required=True)),
                        float(_get(gspec, "/grid", "t1", required=True)),
                        float(_get(gspec, "/grid", "dt", required=True)))
    except (ValueError, TypeError) as e:
        raise ConfigError("/grid", str(e)) from None

    substeps = int(_get(doc, "", "sde_substeps", 1))
    if substeps < 1:
        raise ConfigError("/sde_substeps", "must be >= 1")
    seed = int(_get(doc, "", "seed", 0))
    n_traj = int(_get(doc, "", "trajectories", 1))
    if n_traj < 1:
        raise ConfigError("/trajectories", "must be >= 1")
    parallelism = int(_get(doc, "", "parallelism", 1))
    if parallelism < 1:
        raise ConfigError("/parallelism", "must be >= 1")
    batch_size = int(_get(doc, "", "batch_size", DEFAULT_BATCH_SIZE))
    if batch_size < 1:
        raise ConfigError("/batch_size", "must be >= 1")
    save_traj = int(_get(doc, "", "save_trajectories", 0))
    if save_traj < 0:
        raise ConfigError("/save_trajectories", "must be >= 0")

    observables = _build_observables(doc.get("observables"), "/observables", catalog, G.dim)

    ospec = doc.get("oracle", {})
    ospec = _want(ospec, "/oracle", dict, "an oracle object") if ospec else {}
    oracle_tol = float(ospec.get("tolerance", 1e-6))
    oracle_floor = float(ospec.get("weight_floor", 1e-6))

    canonical = {
        "system": {"S": _canonical_matrix(G.S), "L": _canonical_matrix(G.L),
                   "H": _canonical_matrix(G.H)},
        "initial_state": {"matrix": _canonical_matrix(rho0)},
        "field": _canonical_field(field),
        "measurement": None if scheme is None else
            {"scheme": scheme.kind, "intensity_floor": scheme.intensity_floor},
        "grid": {"t0": grid.t0, "t1": grid.t1, "dt": grid.dt},
        "sde_substeps": substeps,
        "seed": seed,
        "trajectories": n_traj,
        "parallelism": parallelism,
        "batch_size": batch_size,
        "save_trajectories": save_traj,
        "observables": [{"name": n, "matrix": _canonical_matrix(A)}
                        for n, A in observables.items()],
        "oracle": {"tolerance": oracle_tol, "weight_floor": oracle_floor},
    }

    return ExperimentConfig(
        system=G, rho0=rho0, field=field, scheme=scheme, grid=grid,
        substeps=substeps, seed=seed, n_traj=n_traj, parallelism=parallelism,
        batch_size=batch_size, save_trajectories=save_traj,
        observables=observables, oracle_tolerance=oracle_tol,
        oracle_weight_floor=oracle_floor, canonical=canonical,
    )


def _canonical_signal(sig):
    if isinstance(sig, GaussianSignal):
        return {"preset": "gaussian", "omega": sig.omega, "t_center": sig.t_center,
                "scale": _canonical_complex(sig.scale)}
    if isinstance(sig, ConstantSignal):
        return {"preset": "constant", "value": _canonical_complex(sig.value),
                "window": [sig.window[0], sig.window[1]]}
    if isinstance(sig, TableSignal):
        return {"preset": "table", "times": [float(t) for t in sig.times],
                "values": [_canonical_complex(v) for v in sig.values]}
    raise TypeError(f"unknown signal {type(sig).__name__}")


def _canonical_field(field):
    if isinstance(field, VacuumField):
        return {"type": "vacuum"}
    if isinstance(field, PhotonField):
        return {"type": "photon", "gamma": _canonical_matrix(field.gamma),
                "wavepacket": _canonical_signal(field.wavepacket.signal)}
    if isinstance(field, CatField):
        return {"type": "cat", "gamma": _canonical_matrix(field.gamma),
                "amplitudes": [_canonical_signal(s) for s in field.amplitudes.signals]}
    raise TypeError(f"unknown field {type(field).__name__}")


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
