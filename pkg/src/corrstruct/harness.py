"""Simulation experiment runner.

A plan names a scenario, an optional sweep over one scenario parameter,
the detectors to compare and a repetition count. Every (grid point,
repetition) pair is an independent work unit whose random stream depends
only on the master seed and the two indices, so results do not depend on
the number of workers or on execution order.

Outputs in the plan's directory:

``summary.csv``
    One row per detector and grid point with columns ``detector, param,
    value, reps, status, fdr, power, fdr_cmp, power_cmp, mean_d_hat,
    em_nonconverged``. ``status`` is ``ok`` or ``failed: <reason>``.
``activation/<detector>__<param>=<value>.csv|.svg``
    Mean estimated activation matrix, plus ``truth__...`` for the mean
    true matrix.
``manifest.json``
    The resolved plan, seeding scheme and package versions.
"""

from __future__ import annotations

import csv
import io
import json
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import yaml
from threadpoolctl import threadpool_limits

from . import __version__
from .io import write_heatmap, write_matrix
from .lfdr import ConvergenceWarning
from .metrics import aggregate, score
from .pipeline import lfdr_mult_cost, two_step
from .simgen import SCENARIOS, Contamination, ScenarioConfig, generate

WORKERS_ENV = "CORRSTRUCT_WORKERS"
SWEEP_PARAMS = ("snr", "N", "K", "pi0", "eps")
DETECTOR_KINDS = ("lfdr-mult-cost", "two-step")


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    """``lfdr-mult-cost`` uses (alpha, alpha_cmp); ``two-step`` uses
    (alpha_fa_i, alpha_fa_ii) stored in the same two slots."""

    kind: str
    level: float = 0.1
    level_cmp: float = 0.1

    def __post_init__(self):
        if self.kind not in DETECTOR_KINDS:
            raise PlanError(f"unknown detector {self.kind!r}; choose from {DETECTOR_KINDS}")
        if not 0.0 < self.level < 1.0 or not 0.0 < self.level_cmp <= 1.0:
            raise PlanError(f"detector levels out of range: {self.level}, {self.level_cmp}")

    @property
    def label(self) -> str:
        return f"{self.kind}({self.level:g},{self.level_cmp:g})"

    def to_dict(self) -> dict:
        if self.kind == "two-step":
            return {"name": self.kind, "alpha_fa_i": self.level, "alpha_fa_ii": self.level_cmp}
        return {"name": self.kind, "alpha": self.level, "alpha_cmp": self.level_cmp}

    @classmethod
    def from_dict(cls, d: dict) -> "DetectorConfig":
        d = dict(d)
        kind = d.pop("name", None)
        if kind == "two-step":
            a, b = d.pop("alpha_fa_i", 0.1), d.pop("alpha_fa_ii", 0.1)
        else:
            a, b = d.pop("alpha", 0.1), d.pop("alpha_cmp", 0.1)
        if d:
            raise PlanError(f"unknown detector keys {sorted(d)}")
        return cls(str(kind), float(a), float(b))


DEFAULT_DETECTORS = (
    DetectorConfig("lfdr-mult-cost", 0.1, 0.1),
    DetectorConfig("lfdr-mult-cost", 0.1, 1.0),
    DetectorConfig("two-step", 0.1, 0.1),
)


@dataclass(frozen=True)
class ExperimentPlan:
    scenario: ScenarioConfig
    sweep: str | None = None
    grid: tuple = ()
    reps: int = 100
    detectors: tuple[DetectorConfig, ...] = DEFAULT_DETECTORS
    seed: int = 0
    B: int = 300
    out: str = "results"
    preset: str | None = None

    def __post_init__(self):
        if self.reps < 1:
            raise PlanError("reps must be at least 1")
        if self.sweep is not None:
            if self.sweep not in SWEEP_PARAMS:
                raise PlanError(f"sweep {self.sweep!r} not one of {SWEEP_PARAMS}")
            if len(self.grid) == 0:
                raise PlanError("sweep grid is empty")
        if not self.detectors:
            raise PlanError("no detectors")
        if self.B < 50:
            raise PlanError(f"B={self.B} resamples is too few; need at least 50")
        try:
            self.points()
        except ValueError as exc:
            raise PlanError(f"invalid grid point: {exc}") from exc

    def points(self) -> list[tuple[str, object, ScenarioConfig]]:
        """(param, value, config) per grid point; a single point without a sweep."""
        if self.sweep is None:
            return [("-", "-", self.scenario)]
        return [(self.sweep, v, self.scenario.with_param(self.sweep, v)) for v in self.grid]

    def to_dict(self) -> dict:
        sc = asdict(self.scenario)
        sc.pop("structure")
        d = {"preset": self.preset, "scenario": sc, "reps": self.reps, "seed": self.seed,
             "B": self.B, "out": self.out,
             "detectors": [x.to_dict() for x in self.detectors]}
        if self.sweep is not None:
            d["sweep"] = {"param": self.sweep, "values": list(self.grid)}
        return d


@dataclass(frozen=True)
class PresetInfo:
    scenario: str
    sweep: str
    grid: tuple
    description: str


PRESETS: dict[str, PresetInfo] = {
    "1": PresetInfo("1", "snr", (-5.0, 0.0, 5.0, 10.0, 15.0),
                    "fixed structure, K=15, J=10, N=300, SNR sweep"),
    "2": PresetInfo("2", "N", (125, 175, 250, 350, 500, 750, 1000),
                    "K=20, J=10, pi0=0.7, SNR 5 dB, sample size sweep"),
    "3": PresetInfo("3", "K", (5, 9, 13, 17, 21, 25, 29),
                    "Laplacian components, J=10, N=500, pi0=0.8, number of sets sweep"),
    "3b": PresetInfo("3b", "K", (5, 9, 13, 17, 21, 25, 29),
                     "Laplacian components, J=10, N=500, pi0=0.9, number of sets sweep"),
    "4": PresetInfo("4", "pi0", (0.7, 0.8, 0.9, 0.95, 0.975),
                    "K=25, J=10, N=600, SNR 5 dB, null proportion sweep"),
    "5a": PresetInfo("5a", "eps", (0.0, 0.25, 0.5, 1.0),
                     "K=12, J=6, N=1000, wideband noise contamination sweep"),
    "5b": PresetInfo("5b", "eps", (0.0, 0.25, 0.5, 1.0),
                     "K=12, J=6, N=1000, point-mass contamination of 4 rows in 8 sets"),
}


def preset_plan(name: str, **overrides) -> ExperimentPlan:
    if name not in PRESETS:
        raise PlanError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    info = PRESETS[name]
    plan = ExperimentPlan(scenario=SCENARIOS[info.scenario], sweep=info.sweep,
                          grid=info.grid, preset=name)
    return replace(plan, **overrides) if overrides else plan


_SCENARIO_KEYS = {"K", "J", "N", "I", "snr_db", "snr", "pi0", "distribution", "contamination"}


def _scenario_from_dict(d: dict, base: ScenarioConfig | None) -> ScenarioConfig:
    unknown = set(d) - _SCENARIO_KEYS
    if unknown:
        raise PlanError(f"unknown scenario keys {sorted(unknown)}")
    d = dict(d)
    if "snr" in d:
        d["snr_db"] = d.pop("snr")
    if isinstance(d.get("contamination"), dict):
        c = dict(d["contamination"])
        for key in ("rows", "sets"):
            if c.get(key) is not None:
                c[key] = tuple(int(v) for v in c[key])
        d["contamination"] = Contamination(**c)
    if base is None:
        missing = {"K", "J", "N"} - set(d)
        if missing:
            raise PlanError(f"scenario needs {sorted(missing)} without a preset")
        return ScenarioConfig(**d)
    if any(k in d for k in ("K", "J")) and base.structure is not None:
        base = replace(base, structure=None)
    return replace(base, **d)


def plan_from_dict(d: dict) -> ExperimentPlan:
    """Build a plan from the documented keys: preset, scenario, sweep
    (param, values), reps, detectors, seed, B, out."""
    if not isinstance(d, dict):
        raise PlanError("plan must be a mapping")
    d = dict(d)
    allowed = {"preset", "scenario", "sweep", "reps", "detectors", "seed", "B", "out"}
    unknown = set(d) - allowed
    if unknown:
        raise PlanError(f"unknown plan keys {sorted(unknown)}")
    name = d.get("preset")
    kw: dict = {}
    try:
        if name is not None:
            name = str(name)
            plan = preset_plan(name)
            base = plan.scenario
            kw.update(sweep=plan.sweep, grid=plan.grid, preset=name)
        elif "scenario" not in d:
            raise PlanError("plan needs a preset or a scenario")
        else:
            base = None
        kw["scenario"] = _scenario_from_dict(d.get("scenario") or {}, base)
        if "sweep" in d:
            sw = d["sweep"]
            if sw is None:
                kw.update(sweep=None, grid=())
            else:
                kw.update(sweep=sw.get("param"), grid=tuple(sw.get("values") or ()))
        if "detectors" in d:
            kw["detectors"] = tuple(DetectorConfig.from_dict(x) for x in d["detectors"])
        for key, cast in (("reps", int), ("seed", int), ("B", int), ("out", str)):
            if key in d:
                kw[key] = cast(d[key])
        return ExperimentPlan(**kw)
    except PlanError:
        raise
    except (TypeError, ValueError, AttributeError) as exc:
        raise PlanError(f"malformed plan: {exc}") from exc


def load_plan(path) -> ExperimentPlan:
    """Read a YAML (or JSON) plan file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"plan file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise PlanError(f"cannot parse {path}: {exc}") from exc
    return plan_from_dict(data)


def unit_seeds(seed: int, g: int, r: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """(data, detector) streams of repetition r at grid point g."""
    return (np.random.SeedSequence(seed, spawn_key=(g, r, 0)),
            np.random.SeedSequence(seed, spawn_key=(g, r, 1)))


def run_unit(plan: ExperimentPlan, g: int, r: int) -> dict:
    """Simulate one repetition at one grid point and score every detector."""
    _, _, cfg = plan.points()[g]
    data_seed, det_seed = unit_seeds(plan.seed, g, r)
    with threadpool_limits(1), warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        try:
            X, M = generate(cfg, rng=np.random.default_rng(data_seed))
            results, analysis = [], None
            for det in plan.detectors:
                if det.kind == "lfdr-mult-cost":
                    res, analysis = lfdr_mult_cost(X, det.level, det.level_cmp, B=plan.B,
                                                   seed=det_seed, analysis=analysis)
                    results.append((res.M_hat, np.nan))
                else:
                    M_hat, D_hat, analysis = two_step(X, det.level, det.level_cmp, B=plan.B,
                                                      seed=det_seed, analysis=analysis)
                    results.append((M_hat, float(D_hat)))
        except Exception as exc:  # recorded as a failure row for this grid point
            return {"g": g, "r": r, "error": f"{type(exc).__name__}: {exc}"}
    n_warn = sum(issubclass(w.category, ConvergenceWarning) for w in caught)
    return {"g": g, "r": r, "error": None, "truth": M.entries.copy(), "em_warnings": n_warn,
            "scores": [score(Mh, M) for Mh, _ in results],
            "d_hat": [d for _, d in results]}


def _run_unit_args(args):
    return run_unit(*args)


def default_workers() -> int:
    value = os.environ.get(WORKERS_ENV)
    if value is None:
        return 1
    try:
        n = int(value)
    except ValueError as exc:
        raise PlanError(f"{WORKERS_ENV}={value!r} is not an integer") from exc
    return max(n, 1)


def _fmt(x: float) -> str:
    return "" if x is None or (isinstance(x, float) and np.isnan(x)) else repr(float(x))


def _safe(s: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_.=," else "_" for ch in s)


def run(plan: ExperimentPlan, workers: int | None = None) -> Path:
    """Execute the plan and write its outputs. Returns the summary path."""
    workers = default_workers() if workers is None else max(int(workers), 1)
    points = plan.points()
    units = [(plan, g, r) for g in range(len(points)) for r in range(plan.reps)]
    if workers == 1:
        outcomes = [run_unit(*u) for u in units]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_unit_args, units, chunksize=1))
    outcomes.sort(key=lambda o: (o["g"], o["r"]))

    out = Path(plan.out)
    (out / "activation").mkdir(parents=True, exist_ok=True)
    header = ["detector", "param", "value", "reps", "status", "fdr", "power", "fdr_cmp",
              "power_cmp", "mean_d_hat", "em_nonconverged"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for g, (param, value, _) in enumerate(points):
        mine = [o for o in outcomes if o["g"] == g]
        failed = [o for o in mine if o["error"] is not None]
        vtxt = str(value)
        if failed:
            reason = failed[0]["error"].replace("\n", " ")
            for det in plan.detectors:
                w.writerow([det.label, param, vtxt, len(mine), f"failed: {reason}",
                            "", "", "", "", "", ""])
            continue
        n_warn = sum(o["em_warnings"] for o in mine)
        truth = np.mean([o["truth"] for o in mine], axis=0)
        tag = f"{param}={vtxt}"
        write_matrix(truth, out / "activation" / f"truth__{_safe(tag)}.csv", fmt="%.6g")
        write_heatmap(truth, out / "activation" / f"truth__{_safe(tag)}.svg",
                      f"true activation, {tag}")
        for i, det in enumerate(plan.detectors):
            summ = aggregate(o["scores"][i] for o in mine)
            d_hats = [o["d_hat"][i] for o in mine]
            mean_d = float(np.mean(d_hats)) if det.kind == "two-step" else np.nan
            w.writerow([det.label, param, vtxt, summ.reps, "ok", _fmt(summ.fdr),
                        _fmt(summ.power), _fmt(summ.fdr_cmp), _fmt(summ.power_cmp),
                        _fmt(mean_d), n_warn])
            stem = _safe(f"{det.label}__{tag}")
            write_matrix(summ.mean_activation, out / "activation" / f"{stem}.csv", fmt="%.6g")
            write_heatmap(summ.mean_activation, out / "activation" / f"{stem}.svg",
                          f"{det.label}, {tag}")
    summary = out / "summary.csv"
    summary.write_text(buf.getvalue())
    manifest = {
        "version": __version__,
        "numpy": np.__version__,
        "plan": plan.to_dict(),
        "seeding": "unit (g, r): data SeedSequence(seed, spawn_key=(g, r, 0)), "
                   "detectors SeedSequence(seed, spawn_key=(g, r, 1))",
        "grid": [{"index": g, "param": p, "value": v} for g, (p, v, _) in enumerate(points)],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")
    return summary
