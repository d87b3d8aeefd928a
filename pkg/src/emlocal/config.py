"""Scenario files: YAML in, validated dataclasses out.

Validation never stops at the first problem; every violation is collected so
that one run of ``emlocal validate`` shows the full list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .fields import (
    POLARIZATIONS,
    GaussianPacket,
    LocalizedRandom,
    PhysicalConstants,
    PlaneWave,
    RandomTransverse,
)
from .spectral import GridSpec

TASK_TYPES = (
    "observables_sweep",
    "conservation_run",
    "continuity_run",
    "locality_matrix",
    "dirac_schwinger_suite",
    "route_crosscheck",
    "helicity_ratio_probe",
)
PAIR_NAMES = ("photon", "energy", "angular_momentum")
DENSITY_NAMES = (
    "energy",
    "momentum_x",
    "momentum_y",
    "momentum_z",
    "photon",
    "spin_x",
    "spin_y",
    "spin_z",
    "orbital_x",
    "orbital_y",
    "orbital_z",
)

SOURCE_FIELDS = {
    "plane_wave": {"id", "kind", "k", "polarization", "amplitude"},
    "gaussian_packet": {"id", "kind", "center_k", "width_k", "center_r", "polarization", "amplitude"},
    "random_transverse": {"id", "kind", "seed", "exponent", "cutoff", "amplitude"},
    "localized_random": {"id", "kind", "seed", "n_blobs", "width", "spread", "max_carrier", "amplitude"},
}

_COMMON_TASK = {"type", "acceptance", "label"}
TASK_FIELDS = {
    "observables_sweep": {"sources", "tolerance"},
    "conservation_run": {"source", "t_start", "t_final", "n_steps", "tolerance", "am_tolerance"},
    "continuity_run": {"source", "pair", "dt", "order_tolerance"},
    "locality_matrix": {"densities", "smears", "ensemble"},
    "dirac_schwinger_suite": {"smears", "ensemble", "tolerance"},
    "route_crosscheck": {"sources", "tolerance", "split_tolerance", "direct", "direct_tolerance"},
    "helicity_ratio_probe": {"ensemble", "tolerance"},
}
ENSEMBLE_FIELDS = {"size", "exponent", "cutoff"}
SMEAR_FIELDS = {"center", "radius", "sharpness", "id"}


class ConfigError(ValueError):
    """Raised with the complete list of violations."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class EnsembleSpec:
    size: int = 8
    exponent: float = 2.0
    cutoff: float = 4.0


@dataclass(frozen=True)
class SmearSpec:
    center: tuple[float, float, float]
    radius: float
    sharpness: float = 1.0
    id: str = "f"


@dataclass(frozen=True)
class TaskConfig:
    type: str
    params: dict[str, Any]
    acceptance: bool = True
    label: str = ""

    def get(self, key, default=None):
        return self.params.get(key, default)


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSpec
    constants: PhysicalConstants
    sources: dict[str, Any]
    tasks: tuple[TaskConfig, ...]
    seed: int = 0
    output: str | None = None
    source_path: str | None = None
    raw_text: str = field(default="", repr=False)

    def with_seed(self, seed: int) -> ScenarioConfig:
        from dataclasses import replace

        return replace(self, seed=int(seed))


# ---------------------------------------------------------------------------


def _triple(value, name, errors, kind=float):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return (kind(value),) * 3
    if isinstance(value, (list, tuple)) and len(value) == 3 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return tuple(kind(v) for v in value)
    errors.append(f"{name}: expected a number or a list of three numbers, got {value!r}")
    return None


def _number(d, key, where, errors, default=None, positive=False, integer=False):
    if key not in d:
        if default is None:
            errors.append(f"{where}.{key}: required")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errors.append(f"{where}.{key}: expected a number, got {v!r}")
        return default
    if integer and int(v) != v:
        errors.append(f"{where}.{key}: expected an integer, got {v!r}")
        return default
    if not np.isfinite(v):
        errors.append(f"{where}.{key}: must be finite")
        return default
    if positive and v <= 0:
        errors.append(f"{where}.{key}: must be > 0, got {v!r}")
        return default
    return int(v) if integer else float(v)


def _unknown(d, allowed, where, errors):
    for k in d:
        if k not in allowed:
            errors.append(f"{where}: unknown key {k!r} (allowed: {', '.join(sorted(allowed))})")


def _parse_grid(d, errors):
    if not isinstance(d, dict):
        errors.append("grid: required mapping with n and box_length")
        return None
    _unknown(d, {"n", "box_length"}, "grid", errors)
    n = _triple(d.get("n"), "grid.n", errors, kind=float) if "n" in d else None
    if "n" not in d:
        errors.append("grid.n: required")
    box = _triple(d.get("box_length", 1.0), "grid.box_length", errors)
    ok = True
    if n is not None:
        for v in n:
            if v != int(v) or int(v) < 8 or int(v) % 2:
                errors.append(f"grid.n: every entry must be an even integer >= 8, got {v:g}")
                ok = False
                break
    if box is not None and any(v <= 0 for v in box):
        errors.append("grid.box_length: must be > 0")
        ok = False
    if n is None or box is None or not ok:
        return None
    return GridSpec(tuple(int(v) for v in n), box)


def _parse_constants(d, errors):
    if d is None:
        return PhysicalConstants()
    if not isinstance(d, dict):
        errors.append("constants: expected a mapping")
        return PhysicalConstants()
    _unknown(d, {"epsilon", "mu", "hbar", "c"}, "constants", errors)
    eps = _number(d, "epsilon", "constants", errors, 1.0, positive=True)
    mu = _number(d, "mu", "constants", errors, 1.0, positive=True)
    hbar = _number(d, "hbar", "constants", errors, 1.0, positive=True)
    c = d.get("c")
    if c is not None:
        c = _number(d, "c", "constants", errors, None, positive=True)
        if c is not None and abs(c - 1 / np.sqrt(eps * mu)) > 1e-12 * c:
            errors.append(f"constants.c: must equal 1/sqrt(epsilon*mu) = {1 / np.sqrt(eps * mu):.17g}")
    return PhysicalConstants(eps, mu, hbar)


def _on_lattice(vec, where, grid, errors, allow_zero=False):
    if vec is None:
        return None
    m = np.asarray(vec, float)
    if np.any(np.abs(m - np.round(m)) > 1e-9):
        errors.append(f"{where}: wavevector {list(vec)} is off the lattice (mode numbers must be integers)")
        return None
    if not allow_zero and np.all(m == 0):
        errors.append(f"{where}: wavevector must be nonzero")
        return None
    if grid is not None:
        for a in range(3):
            if abs(m[a]) >= grid.n[a] // 2:
                errors.append(f"{where}: mode number {int(m[a])} on axis {a} reaches the Nyquist row (|m| < {grid.n[a] // 2})")
                return None
    return tuple(float(v) for v in m)


def _parse_source(d, i, grid, errors):
    where = f"sources[{i}]"
    if not isinstance(d, dict):
        errors.append(f"{where}: expected a mapping")
        return None, None
    sid = d.get("id")
    if not isinstance(sid, str) or not sid:
        errors.append(f"{where}.id: required non-empty string")
        sid = None
    kind = d.get("kind")
    if kind not in SOURCE_FIELDS:
        errors.append(f"{where}.kind: must be one of {', '.join(SOURCE_FIELDS)}, got {kind!r}")
        return sid, None
    _unknown(d, SOURCE_FIELDS[kind], where, errors)
    amp = _number(d, "amplitude", where, errors, 1.0)
    pol = d.get("polarization", "circular_plus")
    if kind in ("plane_wave", "gaussian_packet") and pol not in POLARIZATIONS:
        errors.append(f"{where}.polarization: must be one of {', '.join(POLARIZATIONS)}, got {pol!r}")
    if kind == "plane_wave":
        k = _triple(d.get("k"), f"{where}.k", errors) if "k" in d else None
        if "k" not in d:
            errors.append(f"{where}.k: required")
        k = _on_lattice(k, f"{where}.k", grid, errors)
        return sid, PlaneWave(k, pol, amp) if k is not None else None
    if kind == "gaussian_packet":
        kc = _triple(d.get("center_k"), f"{where}.center_k", errors) if "center_k" in d else None
        if "center_k" not in d:
            errors.append(f"{where}.center_k: required")
        kc = _on_lattice(kc, f"{where}.center_k", grid, errors)
        w = _number(d, "width_k", where, errors, None, positive=True)
        if w is not None and w < 2:
            errors.append(f"{where}.width_k: must be >= 2 lattice spacings, got {w:g}")
            w = None
        cr = _triple(d.get("center_r", 0.0), f"{where}.center_r", errors)
        if kc is None or w is None or cr is None:
            return sid, None
        return sid, GaussianPacket(kc, w, cr, pol, amp)
    if kind == "random_transverse":
        seed = _number(d, "seed", where, errors, -1, integer=True)
        ex = _number(d, "exponent", where, errors, 1.0)
        cut = _number(d, "cutoff", where, errors, 4.0, positive=True)
        return sid, RandomTransverse(seed, ex, cut, amp)
    seed = _number(d, "seed", where, errors, -1, integer=True)
    nb = _number(d, "n_blobs", where, errors, 3, positive=True, integer=True)
    width = _number(d, "width", where, errors, 1 / 16, positive=True)
    spread = _number(d, "spread", where, errors, 0.04)
    mc = _number(d, "max_carrier", where, errors, 2, integer=True)
    return sid, LocalizedRandom(seed, nb, width, spread, mc, amp)


def _parse_ensemble(d, where, errors):
    if d is None:
        return EnsembleSpec()
    if not isinstance(d, dict):
        errors.append(f"{where}: expected a mapping")
        return EnsembleSpec()
    _unknown(d, ENSEMBLE_FIELDS, where, errors)
    return EnsembleSpec(
        _number(d, "size", where, errors, 8, positive=True, integer=True),
        _number(d, "exponent", where, errors, 2.0),
        _number(d, "cutoff", where, errors, 4.0, positive=True),
    )


def _parse_smears(v, where, errors, count=None):
    if not isinstance(v, list) or not v:
        errors.append(f"{where}: expected a non-empty list of smears")
        return None
    if count is not None and len(v) != count:
        errors.append(f"{where}: expected exactly {count} smears, got {len(v)}")
    out = []
    for j, s in enumerate(v):
        w = f"{where}[{j}]"
        if not isinstance(s, dict):
            errors.append(f"{w}: expected a mapping")
            continue
        _unknown(s, SMEAR_FIELDS, w, errors)
        c = _triple(s.get("center"), f"{w}.center", errors) if "center" in s else None
        if "center" not in s:
            errors.append(f"{w}.center: required")
        r = _number(s, "radius", w, errors, None, positive=True)
        a = _number(s, "sharpness", w, errors, 1.0, positive=True)
        sid = str(s.get("id", f"f{j}"))
        if c is not None and r is not None:
            out.append(SmearSpec(c, r, a, sid))
    return out


def _parse_task(d, i, source_ids, errors):
    where = f"tasks[{i}]"
    if not isinstance(d, dict):
        errors.append(f"{where}: expected a mapping")
        return None
    t = d.get("type")
    if t not in TASK_TYPES:
        errors.append(f"{where}.type: must be one of {', '.join(TASK_TYPES)}, got {t!r}")
        return None
    where = f"{where} ({t})"
    _unknown(d, TASK_FIELDS[t] | _COMMON_TASK, where, errors)
    p: dict[str, Any] = {}

    def refs(key, single):
        v = d.get(key)
        names = [v] if single else v
        if v is None:
            errors.append(f"{where}.{key}: required")
            return None
        if not single and (not isinstance(v, list) or not v):
            errors.append(f"{where}.{key}: expected a non-empty list of source ids")
            return None
        for name in names:
            if name not in source_ids:
                errors.append(f"{where}.{key}: references undefined source {name!r}")
        return v

    if t == "observables_sweep":
        p["sources"] = refs("sources", False)
        p["tolerance"] = _number(d, "tolerance", where, errors, 1e-10, positive=True)
    elif t == "conservation_run":
        p["source"] = refs("source", True)
        p["t_start"] = _number(d, "t_start", where, errors, 0.0)
        p["t_final"] = _number(d, "t_final", where, errors, None)
        if p["t_final"] is not None and p["t_start"] is not None and p["t_final"] <= p["t_start"]:
            errors.append(f"{where}.t_final: must exceed t_start ({p['t_start']:g}), got {p['t_final']:g}")
        p["n_steps"] = _number(d, "n_steps", where, errors, 100, positive=True, integer=True)
        p["tolerance"] = _number(d, "tolerance", where, errors, 1e-11, positive=True)
        p["am_tolerance"] = _number(d, "am_tolerance", where, errors, 1e-6, positive=True)
    elif t == "continuity_run":
        p["source"] = refs("source", True)
        pair = d.get("pair", "photon")
        if pair not in PAIR_NAMES:
            errors.append(f"{where}.pair: must be one of {', '.join(PAIR_NAMES)}, got {pair!r}")
        p["pair"] = pair
        dts = d.get("dt", [1e-3, 5e-4, 2.5e-4])
        if not isinstance(dts, list) or len(dts) < 2 or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) and x > 0 for x in dts
        ):
            errors.append(f"{where}.dt: expected a list of at least two positive steps (units of dx/c)")
        p["dt"] = dts
        p["order_tolerance"] = _number(d, "order_tolerance", where, errors, 0.1, positive=True)
    elif t == "locality_matrix":
        dens = d.get("densities")
        if not isinstance(dens, list) or not dens:
            errors.append(f"{where}.densities: expected a non-empty list")
        else:
            for name in dens:
                if name not in DENSITY_NAMES:
                    errors.append(f"{where}.densities: unknown density {name!r} (allowed: {', '.join(DENSITY_NAMES)})")
        p["densities"] = dens
        p["smears"] = _parse_smears(d.get("smears"), f"{where}.smears", errors, count=2)
        p["ensemble"] = _parse_ensemble(d.get("ensemble"), f"{where}.ensemble", errors)
    elif t == "dirac_schwinger_suite":
        p["smears"] = _parse_smears(d.get("smears"), f"{where}.smears", errors, count=2)
        p["ensemble"] = _parse_ensemble(d.get("ensemble"), f"{where}.ensemble", errors)
        p["tolerance"] = _number(d, "tolerance", where, errors, 1e-8, positive=True)
    elif t == "route_crosscheck":
        p["sources"] = refs("sources", False)
        p["tolerance"] = _number(d, "tolerance", where, errors, 1e-8, positive=True)
        p["split_tolerance"] = _number(d, "split_tolerance", where, errors, p["tolerance"], positive=True)
        direct = d.get("direct", False)
        if not isinstance(direct, bool):
            errors.append(f"{where}.direct: expected true or false")
        p["direct"] = bool(direct)
        p["direct_tolerance"] = _number(d, "direct_tolerance", where, errors, 0.02, positive=True)
    elif t == "helicity_ratio_probe":
        p["ensemble"] = _parse_ensemble(d.get("ensemble"), f"{where}.ensemble", errors)
        p["tolerance"] = _number(d, "tolerance", where, errors, 1e-6, positive=True)

    acc = d.get("acceptance", True)
    if not isinstance(acc, bool):
        errors.append(f"{where}.acceptance: expected true or false")
        acc = True
    return TaskConfig(t, p, acc, str(d.get("label", "")))


TOP_LEVEL = {"grid", "constants", "sources", "tasks", "seed", "output"}


def parse_config(data: Any, source_path: str | None = None, raw_text: str = "") -> ScenarioConfig:
    """Validate a parsed YAML tree; raises ConfigError listing every violation."""
    errors: list[str] = []
    if not isinstance(data, dict):
        raise ConfigError(["top level: expected a mapping"])
    _unknown(data, TOP_LEVEL, "top level", errors)
    grid = _parse_grid(data.get("grid"), errors)
    constants = _parse_constants(data.get("constants"), errors)
    seed = _number(data, "seed", "top level", errors, 0, integer=True)
    if seed is not None and seed < 0:
        errors.append("seed: must be >= 0")
    output = data.get("output")
    if output is not None and not isinstance(output, str):
        errors.append("output: expected a directory path string")

    sources: dict[str, Any] = {}
    raw_sources = data.get("sources", [])
    if not isinstance(raw_sources, list):
        errors.append("sources: expected a list")
        raw_sources = []
    seen: set[str] = set()
    for i, s in enumerate(raw_sources):
        sid, spec = _parse_source(s, i, grid, errors)
        if sid is None:
            continue
        if sid in seen:
            errors.append(f"sources[{i}].id: duplicate source id {sid!r}")
            continue
        seen.add(sid)
        if spec is not None:
            sources[sid] = spec

    raw_tasks = data.get("tasks")
    tasks = []
    if not isinstance(raw_tasks, list) or not raw_tasks:
        errors.append("tasks: expected a non-empty list")
    else:
        for i, t in enumerate(raw_tasks):
            task = _parse_task(t, i, seen, errors)
            if task is not None:
                tasks.append(task)

    if errors:
        raise ConfigError(errors)
    return ScenarioConfig(grid, constants, sources, tuple(tasks), int(seed), output, source_path, raw_text)


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"{path}: no such file"])
    text = path.read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"]) from None
    return parse_config(data, str(path), text)


def validate_config(path: str | Path) -> ScenarioConfig | list[str]:
    """Parsed config, or the complete list of errors."""
    try:
        return load_config(path)
    except ConfigError as exc:
        return exc.errors
