"""Monte Carlo orchestration: seeding, iteration, checkpoints and the grid.

Iteration ``k`` of a scenario draws from a stream seeded by
``SeedSequence([master_seed, *sha256(scenario_id)[:4 words], k])``, so its
numbers do not depend on which worker runs it, in what order, or on which
other scenarios share the run.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .baseline import BaselineGenParams, generate_synthetic_baseline, load_baseline
from .defaults import BASELINE_SEED, MASTER_SEED
from .dgp import ScenarioConfig, simulate
from .errors import ConfigError, EstimationError, ResumeMismatch
from .estimators import estimate
from .estimators.records import EstimateRecord
from .metrics import MetricsRow, emit_tables, failed_row, sort_rows, summarize
from .panel import PanelDataset

CHECKPOINT_FORMAT = 1
# share of failed estimates above which a run counts as over budget
FAILURE_BUDGET = 0.02


def scenario_key(scenario_id: str) -> list[int]:
    """Four 32-bit words of the SHA-256 of the scenario id."""
    digest = hashlib.sha256(scenario_id.encode()).digest()
    return [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]


def iteration_rng(master_seed: int, scenario_id: str, k: int) -> np.random.Generator:
    seq = np.random.SeedSequence([int(master_seed), *scenario_key(scenario_id), int(k)])
    return np.random.default_rng(seq)


@dataclass(frozen=True)
class IterationResult:
    k: int
    alpha: float
    sd_y: float
    n_treated: int
    records: dict  # method -> EstimateRecord or None
    errors: dict = field(default_factory=dict)  # method -> exception class name

    def to_dict(self) -> dict:
        est = {}
        for m, r in self.records.items():
            if r is None:
                est[m] = {"error": self.errors.get(m, "error")}
            else:
                est[m] = {"alpha_hat": _num(r.alpha_hat), "model_se": _num(r.model_se)}
        return {"k": self.k, "alpha": self.alpha, "sd_y": self.sd_y, "n_treated": self.n_treated,
                "estimates": est}

    @classmethod
    def from_dict(cls, d: dict) -> "IterationResult":
        records, errors = {}, {}
        for m, e in d["estimates"].items():
            if "error" in e:
                records[m] = None
                errors[m] = e["error"]
            else:
                records[m] = EstimateRecord(m, _unnum(e["alpha_hat"]), _unnum(e["model_se"]))
        return cls(int(d["k"]), float(d["alpha"]), float(d["sd_y"]), int(d["n_treated"]), records, errors)


def _num(v: float):
    return v if math.isfinite(v) else None


def _unnum(v) -> float:
    return math.nan if v is None else float(v)


def run_iteration(baseline: PanelDataset, scenario: ScenarioConfig, master_seed: int, k: int) -> IterationResult:
    rng = iteration_rng(master_seed, scenario.scenario_id, k)
    sim = simulate(baseline, scenario, rng)
    records, errors = {}, {}
    for m in scenario.methods:
        try:
            records[m] = estimate(m, sim)
        except (EstimationError, np.linalg.LinAlgError) as exc:
            records[m] = None
            errors[m] = type(exc).__name__
    return IterationResult(k, float(scenario.alpha), sim.outcome_sd(), sim.schedule.n_treated, records, errors)


# worker-process state, set once by the pool initializer
_WORKER_BASELINE: Optional[PanelDataset] = None


def _init_worker(baseline: PanelDataset) -> None:
    global _WORKER_BASELINE
    _WORKER_BASELINE = baseline


def _worker_iteration(args) -> IterationResult:
    scenario, master_seed, k = args
    return run_iteration(_WORKER_BASELINE, scenario, master_seed, k)


def run_iterations(scenario: ScenarioConfig, baseline: PanelDataset, master_seed: int,
                   workers: int = 1, iters: Optional[int] = None) -> list[IterationResult]:
    """All iterations of one scenario, returned in ``k`` order."""
    n = int(iters if iters is not None else scenario.iters)
    if workers <= 1 or n == 1:
        return [run_iteration(baseline, scenario, master_seed, k) for k in range(n)]
    jobs = [(scenario, master_seed, k) for k in range(n)]
    chunk = max(1, n // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(baseline,)) as pool:
        out = list(pool.map(_worker_iteration, jobs, chunksize=chunk))
    return sorted(out, key=lambda r: r.k)


def summarize_iterations(scenario: ScenarioConfig, results: Sequence[IterationResult]) -> list[MetricsRow]:
    """One :class:`MetricsRow` per requested method; order of ``results`` is irrelevant."""
    results = sorted(results, key=lambda r: r.k)
    truths = [(r.alpha, r.sd_y) for r in results]
    min_iters = min(2, len(results))
    rows = []
    for m in scenario.methods:
        est = [r.records.get(m) for r in results]
        n_ok = sum(e is not None and math.isfinite(e.alpha_hat) for e in est)
        if n_ok < max(min_iters, 1):
            rows.append(failed_row(scenario, m, n_ok, len(est) - n_ok))
        else:
            rows.append(summarize(est, truths, scenario, m, min_iters=min_iters))
    return rows


def run_scenario(scenario: ScenarioConfig, baseline: PanelDataset, master_seed: int | None = None,
                 workers: int = 1, iters: Optional[int] = None) -> list[MetricsRow]:
    seed = scenario.master_seed if master_seed is None else master_seed
    return summarize_iterations(scenario, run_iterations(scenario, baseline, seed, workers, iters))


# -- manifest -------------------------------------------------------------------

@dataclass(frozen=True)
class RunManifest:
    scenarios: tuple[ScenarioConfig, ...]
    master_seed: int = MASTER_SEED
    iters: Optional[int] = None  # overrides every scenario's iters when set
    baseline_path: Optional[str] = None
    baseline_params: BaselineGenParams = field(default_factory=BaselineGenParams)
    baseline_seed: int = BASELINE_SEED
    workers: int = 1
    out_dir: Optional[str] = None
    engine_version: str = __version__

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        if self.iters is not None:
            object.__setattr__(self, "scenarios",
                               tuple(replace(s, iters=int(self.iters)) for s in self.scenarios))
        self.validate()

    def validate(self) -> None:
        if not self.scenarios:
            raise ConfigError("manifest has no scenarios")
        ids = [s.scenario_id for s in self.scenarios]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        if dupes:
            raise ConfigError(f"duplicate scenario ids: {dupes}")
        if self.iters is not None and int(self.iters) < 1:
            raise ConfigError("iters must be >= 1")
        if int(self.workers) < 1:
            raise ConfigError("workers must be >= 1")

    def load_baseline(self) -> PanelDataset:
        if self.baseline_path is not None:
            return load_baseline(self.baseline_path)
        return generate_synthetic_baseline(self.baseline_params, self.baseline_seed)

    def baseline_source(self) -> dict:
        if self.baseline_path is not None:
            digest = hashlib.sha256(Path(self.baseline_path).read_bytes()).hexdigest()
            return {"path": str(self.baseline_path), "sha256": digest}
        return {"generator": self.baseline_params.to_dict(), "seed": self.baseline_seed}

    def config_hash(self) -> str:
        """Hash of everything that determines results (not workers or paths)."""
        payload = {
            "master_seed": self.master_seed,
            "baseline": self.baseline_source(),
            "scenarios": [[s.scenario_id, s.fingerprint(), list(s.methods), s.iters] for s in self.scenarios],
            "engine_version": self.engine_version,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()

    def with_(self, **changes) -> "RunManifest":
        if "iters" not in changes:
            changes["iters"] = None  # scenarios already carry the override
        return replace(self, **changes)


# -- checkpoints -----------------------------------------------------------------

def checkpoint_path(out_dir, scenario: ScenarioConfig) -> Path:
    return Path(out_dir) / "checkpoints" / f"{scenario.scenario_id}.json"


def _scenario_stamp(manifest: RunManifest, scenario: ScenarioConfig, baseline_src: dict) -> str:
    payload = {"master_seed": manifest.master_seed, "baseline": baseline_src,
               "fingerprint": scenario.fingerprint(), "methods": list(scenario.methods),
               "iters": scenario.iters, "engine_version": manifest.engine_version}
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def write_checkpoint(path: Path, scenario: ScenarioConfig, stamp: str, results: Sequence[IterationResult]) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "scenario_id": scenario.scenario_id,
        "stamp": stamp,
        "iters": scenario.iters,
        "iterations": [r.to_dict() for r in sorted(results, key=lambda r: r.k)],
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(doc, allow_nan=False))
    os.replace(tmp, path)


def read_checkpoint(path: Path, scenario: ScenarioConfig, stamp: str) -> list[IterationResult]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ResumeMismatch(f"{path}: checkpoint format {doc.get('format')!r}, expected {CHECKPOINT_FORMAT}")
    if doc.get("stamp") != stamp:
        raise ResumeMismatch(f"{path}: checkpoint was written for a different configuration")
    results = [IterationResult.from_dict(d) for d in doc["iterations"]]
    if len(results) != scenario.iters:
        raise ResumeMismatch(f"{path}: {len(results)} iterations stored, expected {scenario.iters}")
    return results


# -- grid --------------------------------------------------------------------------

@dataclass
class GridResult:
    rows: list[MetricsRow]
    provenance: dict
    loaded: list[str]  # scenario ids restored from checkpoints
    csv_text: str = ""
    json_text: str = ""

    @property
    def failure_rate(self) -> float:
        done = sum(r.n_iters + r.n_failed for r in self.rows)
        return sum(r.n_failed for r in self.rows) / done if done else 0.0

    def over_budget(self, budget: float = FAILURE_BUDGET) -> bool:
        return self.failure_rate > budget


def run_grid(manifest: RunManifest, resume: bool = False, baseline: Optional[PanelDataset] = None,
             on_scenario_done: Optional[Callable[[ScenarioConfig, list[MetricsRow]], None]] = None) -> GridResult:
    """Run every scenario of the manifest, checkpointing each one.

    With ``resume=True`` scenarios whose checkpoint exists are restored
    instead of recomputed; a checkpoint written under a different
    configuration raises :class:`ResumeMismatch`. Without ``resume`` existing
    checkpoints are overwritten.
    """
    manifest.validate()
    if baseline is None:
        baseline = manifest.load_baseline()
    src = manifest.baseline_source()
    rows: list[MetricsRow] = []
    loaded = []
    for sc in manifest.scenarios:
        stamp = _scenario_stamp(manifest, sc, src)
        ckpt = checkpoint_path(manifest.out_dir, sc) if manifest.out_dir is not None else None
        if resume and ckpt is not None and ckpt.exists():
            results = read_checkpoint(ckpt, sc, stamp)
            loaded.append(sc.scenario_id)
        else:
            results = run_iterations(sc, baseline, manifest.master_seed, manifest.workers)
            if ckpt is not None:
                write_checkpoint(ckpt, sc, stamp, results)
        sc_rows = summarize_iterations(sc, results)
        rows.extend(sc_rows)
        if on_scenario_done is not None:
            on_scenario_done(sc, sc_rows)

    provenance = {
        "master_seed": manifest.master_seed,
        "engine_version": manifest.engine_version,
        "config_hash": manifest.config_hash(),
        "baseline": src,
        "n_scenarios": len(manifest.scenarios),
        "sd_pool": "sd of the simulated outcome over all unit-years of each iteration",
        "seeding": "SeedSequence(master_seed, sha256(scenario_id)[:16 bytes], k)",
    }
    rows = sort_rows(rows)
    csv_text, json_text = emit_tables(rows, manifest.out_dir, metadata=provenance)
    return GridResult(rows, provenance, loaded, csv_text, json_text)


__all__ = [
    "CHECKPOINT_FORMAT",
    "FAILURE_BUDGET",
    "GridResult",
    "IterationResult",
    "RunManifest",
    "iteration_rng",
    "run_grid",
    "run_iteration",
    "run_iterations",
    "run_scenario",
    "summarize_iterations",
]
