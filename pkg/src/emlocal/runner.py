"""Batch execution of scenario files.

Every task writes plain CSV (and JSON for locality reports) into the output
directory and contributes named tolerance checks to the run manifest.
Numeric files depend only on the config and the seed; wall-clock data lives
in ``manifest.json`` alone.
"""

from __future__ import annotations

import logging
import time
import traceback
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .brackets import (
    DS_RELATIONS,
    bump,
    dirac_schwinger_residual,
    ensemble_states,
    locality_test,
)
from .config import ScenarioConfig, SmearSpec, TaskConfig
from .dynamics import continuity_residual, plan_for, propagate
from .fields import FieldState, LocalizedRandom, RandomTransverse, make_state
from .io import sha256_text, write_csv, write_json
from .observables import (
    PAIRS,
    boundary_leakage,
    helicity,
    helicity_components,
    orbital_J,
    photon_number,
    spin_J,
    total_energy,
    total_J,
    total_momentum,
)

log = logging.getLogger(__name__)

LOCAL_DENSITIES = {"energy", "momentum"}


@dataclass
class Check:
    name: str
    value: float
    tolerance: float
    passed: bool

    def as_dict(self):
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance, "passed": self.passed}


@dataclass
class TaskRecord:
    index: int
    type: str
    label: str
    acceptance: bool
    files: list[str] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0
    error: str | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def check(self, name: str, value: float, tolerance: float, passed: bool | None = None):
        value = float(value)
        if passed is None:
            passed = bool(np.isfinite(value) and value <= tolerance)
        self.checks.append(Check(name, value, float(tolerance), bool(passed)))

    def as_dict(self):
        d = {
            "index": self.index,
            "type": self.type,
            "label": self.label,
            "acceptance": self.acceptance,
            "files": self.files,
            "seconds": self.seconds,
            "checks": [c.as_dict() for c in self.checks],
            "passed": self.passed,
            "error": self.error,
        }
        d.update(self.extra)
        return d


@dataclass
class RunManifest:
    config_hash: str
    version: str
    seed: int
    config_path: str | None
    output_dir: str
    tasks: list[TaskRecord]
    started: str
    finished: str
    seconds: float

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tasks if t.acceptance)

    @property
    def exit_status(self) -> int:
        return 0 if self.passed else 1

    def verdicts(self) -> dict[str, str]:
        return {f"{t.index:02d}_{t.type}": ("pass" if t.passed else "FAIL") for t in self.tasks}

    def as_dict(self):
        return {
            "config_hash": self.config_hash,
            "version": self.version,
            "seed": self.seed,
            "config_path": self.config_path,
            "output_dir": self.output_dir,
            "started": self.started,
            "finished": self.finished,
            "seconds": self.seconds,
            "passed": self.passed,
            "verdicts": self.verdicts(),
            "tasks": [t.as_dict() for t in self.tasks],
        }


# ---------------------------------------------------------------------------
# seeding


def derived_seeds(seed: int, stream: int, size: int) -> list[int]:
    ss = np.random.SeedSequence([int(seed), int(stream)])
    return [int(v) for v in ss.generate_state(size, dtype=np.uint32)]


def resolve_sources(cfg: ScenarioConfig) -> dict[str, Any]:
    """Random sources declared without a seed get one derived from the global seed."""
    out = {}
    for i, (sid, spec) in enumerate(cfg.sources.items()):
        if isinstance(spec, (RandomTransverse, LocalizedRandom)) and spec.seed < 0:
            spec = replace(spec, seed=derived_seeds(cfg.seed, 1_000_000 + i, 1)[0])
        out[sid] = spec
    return out


# ---------------------------------------------------------------------------
# tasks


def _rel(a, b) -> float:
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    d = np.linalg.norm(b)
    return float(np.linalg.norm(a - b) / d) if d > 0 else float(np.linalg.norm(a))


def _smear(grid, s: SmearSpec):
    return bump(grid, s.center, s.radius, s.id, s.sharpness)


def _observables_sweep(task: TaskConfig, rec: TaskRecord, ctx):
    rows = []
    for sid in task.get("sources"):
        st = ctx.state(sid)
        N = photon_number(st)
        Nd = photon_number(st, route="density")
        Np, Nm = helicity_components(st)
        U = total_energy(st)
        P = total_momentum(st)
        J = total_J(st, warn=False)
        JO = orbital_J(st, warn=False)
        JS = spin_J(st, warn=False)
        rows.append(
            [sid, U, *P, N, Nd, Np, Nm, helicity(st), helicity(st, "literal"), *J, *JO, *JS, boundary_leakage(st)]
        )
        if N > 0:
            rec.check(f"photon_routes[{sid}]", abs(Nd - N) / N, task.get("tolerance"))
    header = ["source", "U", "P_x", "P_y", "P_z", "N", "N_density", "N_plus", "N_minus", "Lambda", "Lambda_literal"]
    header += [f"{q}_{a}" for q in ("J", "J_O", "J_S") for a in "xyz"] + ["leakage"]
    rec.files.append(ctx.write_csv(rec, "observables", header, rows))


def _conservation_run(task: TaskConfig, rec: TaskRecord, ctx):
    sid = task.get("source")
    st = ctx.state(sid)
    n = task.get("n_steps")
    t0 = task.get("t_start")
    dt = (task.get("t_final") - t0) / n
    plan = plan_for(st.grid, st.constants)
    if t0:
        st = propagate(st, t0, plan)
    rows = []
    s = st
    for i in range(n + 1):
        if i:
            s = propagate(s, dt, plan)
        rows.append(
            [i, s.time, total_energy(s), *total_momentum(s), photon_number(s), helicity(s)]
            + list(total_J(s, warn=False))
            + list(orbital_J(s, warn=False))
            + list(spin_J(s, warn=False))
        )
    a = np.array([r[1:] for r in rows], float)
    header = ["step", "time", "U", "P_x", "P_y", "P_z", "N", "Lambda"]
    header += [f"{q}_{c}" for q in ("J", "J_O", "J_S") for c in "xyz"]
    rec.files.append(ctx.write_csv(rec, "conservation", header, rows))

    tol, am_tol = task.get("tolerance"), task.get("am_tolerance")

    def drift(cols, ref):
        block = a[:, cols]
        return float(np.max(np.linalg.norm(block - block[0], axis=1)) / ref) if ref > 0 else 0.0

    U0 = a[0, 1]
    rec.check("energy_drift", drift([1], abs(U0)), tol)
    rec.check("momentum_drift", drift([2, 3, 4], np.linalg.norm(a[0, 2:5]) or abs(U0)), tol)
    rec.check("photon_number_drift", drift([5], abs(a[0, 5])), tol)
    rec.check("helicity_drift", drift([6], max(abs(a[0, 6]), abs(a[0, 5]))), tol)
    Jref = np.linalg.norm(a[0, 7:10])
    for name, cols in (("J", [7, 8, 9]), ("J_O", [10, 11, 12]), ("J_S", [13, 14, 15])):
        rec.check(f"{name}_drift", drift(cols, Jref), am_tol)
    rec.extra["leakage"] = boundary_leakage(st)


def _continuity_run(task: TaskConfig, rec: TaskRecord, ctx):
    st = ctx.state(task.get("source"))
    pair = PAIRS[task.get("pair")]
    h = min(st.grid.spacing) / st.constants.c_light
    dts = [float(x) for x in task.get("dt")]
    res = [continuity_residual(pair, st, d * h).relative for d in dts]
    orders = [np.log(res[i] / res[i + 1]) / np.log(dts[i] / dts[i + 1]) for i in range(len(dts) - 1)]
    rows = [[d, d * h, r, orders[i - 1] if i else ""] for i, (d, r) in enumerate(zip(dts, res))]
    rec.files.append(ctx.write_csv(rec, "continuity", ["dt_over_dx_c", "dt", "relative_residual", "order"], rows))
    tol = task.get("order_tolerance")
    for i, p in enumerate(orders):
        rec.check(f"order[{i}]", abs(p - 2.0), tol)
    rec.extra["orders"] = orders


def _locality_matrix(task: TaskConfig, rec: TaskRecord, ctx):
    grid = ctx.cfg.grid
    f, g = (_smear(grid, s) for s in task.get("smears"))
    ens = task.get("ensemble")
    seeds = derived_seeds(ctx.cfg.seed, rec.index, ens.size)
    states = ensemble_states(grid, seeds, ctx.cfg.constants, ens.exponent, ens.cutoff)
    dens = task.get("densities")
    reports = []
    rows = []
    for a in dens:
        for b in dens:
            rep = locality_test(a, b, f, g, states=states)
            reports.append(rep.to_dict())
            rows.append([a, b, rep.max_abs, rep.median_abs, rep.verdict])
            la = a.split("_")[0] in LOCAL_DENSITIES
            lb = b.split("_")[0] in LOCAL_DENSITIES
            if la and lb:
                rec.check(f"LOCAL[{a},{b}]", rep.max_abs, 1e-9)
            elif not la and not lb:
                rec.check(f"NONLOCAL[{a},{b}]", rep.median_abs, 1e-3, passed=rep.verdict == "NONLOCAL")
    rec.files.append(ctx.write_csv(rec, "locality", ["density_a", "density_b", "max_abs", "median_abs", "verdict"], rows))
    rec.files.append(
        ctx.write_json(rec, "locality", {"seeds": seeds, "separation": reports[0]["separation"], "reports": reports})
    )


def _dirac_schwinger_suite(task: TaskConfig, rec: TaskRecord, ctx):
    grid = ctx.cfg.grid
    f, g = (_smear(grid, s) for s in task.get("smears"))
    ens = task.get("ensemble")
    seeds = derived_seeds(ctx.cfg.seed, rec.index, ens.size)
    states = ensemble_states(grid, seeds, ctx.cfg.constants, ens.exponent, ens.cutoff)
    rows = []
    for seed, st in zip(seeds, states):
        rows.append([seed] + [dirac_schwinger_residual(w, f, g, st) for w in DS_RELATIONS])
    rec.files.append(ctx.write_csv(rec, "dirac_schwinger", ["seed"] + [f"residual_{w}" for w in DS_RELATIONS], rows))
    a = np.array([r[1:] for r in rows])
    for j, w in enumerate(DS_RELATIONS):
        rec.check(f"residual_{w}", a[:, j].max(), task.get("tolerance"))


def _route_crosscheck(task: TaskConfig, rec: TaskRecord, ctx):
    tol = task.get("tolerance")
    rows = []
    for sid in task.get("sources"):
        st = ctx.state(sid)
        J = total_J(st, warn=False)
        JO = orbital_J(st, warn=False)
        JS = spin_J(st, warn=False)
        JO2 = orbital_J(st, route="double_integral", warn=False)
        JS2 = spin_J(st, route="double_integral", warn=False)
        scale = np.linalg.norm(JO) + np.linalg.norm(JS)
        split = _rel(JO + JS, J)
        routes = float(max(np.linalg.norm(JO2 - JO), np.linalg.norm(JS2 - JS)) / scale) if scale else 0.0
        N = photon_number(st)
        nroute = abs(photon_number(st, "density") - N) / N if N else 0.0
        row = [sid, split, routes, nroute]
        rec.check(f"J_split[{sid}]", split, task.get("split_tolerance"))
        rec.check(f"J_routes[{sid}]", routes, tol)
        rec.check(f"N_routes[{sid}]", nroute, tol)
        if task.get("direct"):
            JO3 = orbital_J(st, route="direct", warn=False)
            JS3 = spin_J(st, route="direct", warn=False)
            direct = float(max(np.linalg.norm(JO3 - JO), np.linalg.norm(JS3 - JS)) / scale) if scale else 0.0
            rec.check(f"J_direct[{sid}]", direct, task.get("direct_tolerance"))
            row.append(direct)
        else:
            row.append("")
        row.append(boundary_leakage(st))
        rows.append(row)
    header = ["source", "split_residual", "route_difference", "photon_route_difference", "direct_difference", "leakage"]
    rec.files.append(ctx.write_csv(rec, "routes", header, rows))


def _helicity_ratio_probe(task: TaskConfig, rec: TaskRecord, ctx):
    ens = task.get("ensemble")
    seeds = derived_seeds(ctx.cfg.seed, rec.index, ens.size)
    states = ensemble_states(ctx.cfg.grid, seeds, ctx.cfg.constants, ens.exponent, ens.cutoff)
    rows = []
    for seed, st in zip(seeds, states):
        d = helicity(st)
        lit = helicity(st, "literal")
        rows.append([seed, d, lit, lit / d])
    rec.files.append(ctx.write_csv(rec, "helicity_ratio", ["seed", "Lambda_duality", "Lambda_literal", "ratio"], rows))
    r = np.array([row[3] for row in rows])
    mean = float(r.mean())
    spread = float((r.max() - r.min()) / abs(mean))
    rec.check("ratio_spread", spread, task.get("tolerance"))
    rec.extra["literal_over_duality"] = mean
    rec.extra["two_over_pi"] = 2 / np.pi


TASKS = {
    "observables_sweep": _observables_sweep,
    "conservation_run": _conservation_run,
    "continuity_run": _continuity_run,
    "locality_matrix": _locality_matrix,
    "dirac_schwinger_suite": _dirac_schwinger_suite,
    "route_crosscheck": _route_crosscheck,
    "helicity_ratio_probe": _helicity_ratio_probe,
}


# ---------------------------------------------------------------------------


class _Context:
    def __init__(self, cfg: ScenarioConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.sources = resolve_sources(cfg)
        self._states: dict[str, FieldState] = {}

    def state(self, sid: str) -> FieldState:
        if sid not in self._states:
            self._states[sid] = make_state(self.sources[sid], self.cfg.grid, self.cfg.constants)
        return self._states[sid]

    def _name(self, rec: TaskRecord, stem: str, ext: str) -> Path:
        return self.out / f"{rec.index:02d}_{stem}.{ext}"

    def write_csv(self, rec, stem, header, rows) -> str:
        return write_csv(self._name(rec, stem, "csv"), header, rows).name

    def write_json(self, rec, stem, obj) -> str:
        return write_json(self._name(rec, stem, "json"), obj).name


def prepare_output(path: str | Path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    return out


def run_scenario(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> RunManifest:
    out = prepare_output(out_dir or cfg.output or "emlocal_out")
    ctx = _Context(cfg, out)
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    records = []
    for i, task in enumerate(cfg.tasks):
        rec = TaskRecord(i, task.type, task.label, task.acceptance)
        t = time.perf_counter()
        try:
            TASKS[task.type](task, rec, ctx)
        except Exception as exc:  # recorded, run continues
            rec.error = f"{type(exc).__name__}: {exc}"
            log.debug(traceback.format_exc())
        rec.seconds = time.perf_counter() - t
        log.info("task %d %s: %s (%.2fs)", i, task.type, "pass" if rec.passed else "FAIL", rec.seconds)
        records.append(rec)
    manifest = RunManifest(
        config_hash=sha256_text(f"{cfg.raw_text}\n#seed={cfg.seed}"),
        version=__version__,
        seed=cfg.seed,
        config_path=cfg.source_path,
        output_dir=str(out),
        tasks=records,
        started=started.isoformat(),
        finished=datetime.now(timezone.utc).isoformat(),
        seconds=time.perf_counter() - t0,
    )
    write_json(out / "manifest.json", manifest.as_dict())
    return manifest
