"""Experiment configs, objective sequences and the sweep runner."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..geometry import ConvexBody, body_from_json
from ..objectives import (
    CoverageObjective,
    ObjectiveSpec,
    OracleFactory,
    make_dr_quadratic,
    make_linear,
    objective_from_json,
)
from ..protocol import config_hash, make_oblivious, run_game
from .optimum import grid_optimum
from .pipeline import PipelineFactory, parse_pipeline
from .regret import adaptive_regret, dynamic_regret, fit_regret_slope, static_alpha_regret

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ObjectiveSequence",
    "build_sequence",
    "ExperimentResult",
    "run_experiment",
    "RUN_COLUMNS",
    "SUMMARY_COLUMNS",
]

RUN_COLUMNS = ["pipeline", "setting", "T", "seed", "alpha", "optimum", "static", "adaptive",
               "dynamic", "path_length"]
SUMMARY_COLUMNS = ["pipeline", "setting", "T", "seeds", "alpha", "mean_static", "mean_adaptive",
                   "mean_dynamic", "path_length", "slope", "stderr", "pass"]
REGRET_KINDS = ("static", "adaptive", "dynamic")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    body: dict
    objectives: dict
    pipeline: str
    horizons: List[int] = field(default_factory=lambda: [2 ** k for k in range(10, 15)])
    seeds: List[int] = field(default_factory=lambda: list(range(10)))
    sigma: float = 0.0
    gamma: Optional[float] = None
    regrets: List[str] = field(default_factory=lambda: ["static"])
    slope_on: str = "static"
    alpha: Optional[float] = None
    thresholds: dict = field(default_factory=dict)
    resolution: Optional[int] = None
    output_dir: str = "out"
    save_transcripts: bool = False
    name: str = "experiment"

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("body", "objectives", "pipeline"):
            if key not in raw:
                raise ConfigError(f"config is missing {key!r}")
        data = dict(raw)
        if isinstance(data.get("seeds"), int):
            data["seeds"] = list(range(data["seeds"]))
        cfg = cls(**data)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        node = parse_pipeline(self.pipeline)
        for r in self.regrets:
            if r not in REGRET_KINDS:
                raise ConfigError(f"unknown regret kind {r!r}")
        if self.slope_on not in REGRET_KINDS:
            raise ConfigError(f"cannot fit a slope on {self.slope_on!r}")
        if "dynamic" in self.regrets and any(n.name == "sftt" for n in node.walk()):
            raise ConfigError("blocked agents are only analysed against fixed comparators; "
                              "drop 'dynamic' or 'sftt'")
        if "dynamic" in self.regrets and self.objectives.get("kind") != "piecewise":
            raise ConfigError("dynamic regret needs a piecewise objective sequence")
        if not self.horizons or any(int(T) < 1 for T in self.horizons):
            raise ConfigError("horizons must be positive")
        if self.sigma < 0:
            raise ConfigError("sigma must be non-negative")


# ---------------------------------------------------------------------------
# objective sequences
# ---------------------------------------------------------------------------


@dataclass
class ObjectiveSequence:
    objectives: list
    factories: list
    comparators: Optional[np.ndarray]
    gamma: float
    curvature: float
    monotone: bool

    def adversary(self):
        return make_oblivious(list(zip(self.objectives, self.factories)))


def _pool_member(family: str, dim: int, rng: np.random.Generator, spec: dict) -> ObjectiveSpec:
    if family == "coverage":
        lo, hi = spec.get("a_range", [0.2, 1.0])
        return CoverageObjective(rng.uniform(lo, hi, size=dim))
    if family == "linear":
        return make_linear(rng.uniform(-1.0, 1.0, size=dim))
    if family in ("dr_quadratic", "dr_quadratic_mono"):
        M = -rng.uniform(0.0, 0.5, size=(dim, dim))
        H = (M + M.T) / 2
        h = -H.sum(axis=1) + rng.uniform(0.0, 0.5, size=dim)
        return make_dr_quadratic(H, h)
    if family == "dr_quadratic_nonmono":
        M = -rng.uniform(0.5, 1.5, size=(dim, dim))
        H = (M + M.T) / 2
        h = rng.uniform(0.0, 1.0, size=dim)
        return make_dr_quadratic(H, h, auto_offset=True)
    raise ConfigError(f"unknown objective family {family!r}")


def _class_params(objs) -> tuple:
    gamma = min(o.gamma for o in objs)
    monotone = all(o.monotone for o in objs)
    curvature = max((o.curvature if o.curvature is not None else 1.0) for o in objs)
    return gamma, curvature, monotone


def build_sequence(spec: dict, body: ConvexBody, T: int, seed: int, sigma: float = 0.0,
                   resolution: Optional[int] = None) -> ObjectiveSequence:
    """Materialise an oblivious objective sequence of length ``T``.

    Random choices depend only on ``(seed, T)`` and the pool seed, never on the
    agent, so the sequence is fixed before the game starts.
    """
    kind = spec.get("kind")
    rng = np.random.default_rng([int(seed), int(T), 7])
    d = body.dim
    comparators = None
    if kind == "constant":
        distinct = [objective_from_json(spec["objective"])]
        index = np.zeros(T, dtype=int)
    elif kind == "sign_flip":
        h = np.asarray(spec["h"], dtype=float)
        distinct = [make_linear(h), make_linear(-h)]
        if spec.get("random", False):
            index = rng.integers(0, 2, size=T)
        else:
            index = np.arange(T) % 2
    elif kind == "iid":
        pool_rng = np.random.default_rng(spec.get("pool_seed", 0))
        size = int(spec.get("pool_size", 8))
        distinct = [_pool_member(spec["family"], d, pool_rng, spec) for _ in range(size)]
        index = rng.integers(0, size, size=T)
    elif kind == "piecewise":
        distinct = [objective_from_json(p) for p in spec["phases"]]
        n = len(distinct)
        period = spec.get("period")
        if period:
            index = (np.arange(T) // int(period)) % n
        elif spec.get("switches"):
            seg = np.minimum(np.arange(T) * (int(spec["switches"]) + 1) // T, int(spec["switches"]))
            index = seg % n
        else:
            index = np.minimum(np.arange(T) * n // T, n - 1)
        optima = [grid_optimum(body, f, resolution)[0] for f in distinct]
        comparators = np.array([optima[i] for i in index])
    else:
        raise ConfigError(f"unknown objective sequence kind {kind!r}")
    factories = [OracleFactory(f, sigma) for f in distinct]
    gamma, curvature, monotone = _class_params(distinct)
    return ObjectiveSequence([distinct[i] for i in index], [factories[i] for i in index],
                             comparators, gamma, curvature, monotone)


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    runs: list
    summary: list
    slope: Optional[object]
    passed: bool
    transcripts: dict = field(default_factory=dict)

    def runs_csv(self) -> str:
        return _csv(RUN_COLUMNS, self.runs)

    def summary_csv(self) -> str:
        return _csv(SUMMARY_COLUMNS, self.summary)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def run_one(cfg: ExperimentConfig, body: ConvexBody, T: int, seed: int, keep_transcript=False):
    seq = build_sequence(cfg.objectives, body, T, seed, cfg.sigma, cfg.resolution)
    gamma = seq.gamma if cfg.gamma is None else cfg.gamma
    factory = PipelineFactory(cfg.pipeline, body, gamma=gamma, curvature=seq.curvature,
                              monotone=seq.monotone)
    alpha = factory.alpha if cfg.alpha is None else float(cfg.alpha)
    tr = run_game(factory.build(), seq.adversary(), T, body, seed)
    row = {"pipeline": cfg.pipeline, "setting": factory.setting, "T": T, "seed": seed,
           "alpha": alpha}
    static, row["optimum"] = static_alpha_regret(tr, alpha, body, resolution=cfg.resolution,
                                                 return_optimum=True)
    row["static"] = static
    if "adaptive" in cfg.regrets:
        row["adaptive"], _ = adaptive_regret(tr, alpha, body, resolution=cfg.resolution,
                                             static=static)
    if "dynamic" in cfg.regrets:
        row["dynamic"], row["path_length"] = dynamic_regret(tr, alpha, seq.comparators, body)
    return row, (tr if keep_transcript else None)


def run_experiment(cfg: ExperimentConfig, *, write: bool = True, workers: int = 1) -> ExperimentResult:
    """Run every (T, seed) pair, aggregate per horizon and fit the regret slope."""
    body = body_from_json(cfg.body)
    jobs = [(int(T), int(s)) for T in cfg.horizons for s in cfg.seeds]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            outs = list(pool.map(_run_job, [(cfg.to_dict(), T, s) for T, s in jobs]))
    else:
        outs = [run_one(cfg, body, T, s, cfg.save_transcripts) for T, s in jobs]
    runs = [o[0] for o in outs]
    transcripts = {(T, s): o[1] for (T, s), o in zip(jobs, outs) if o[1] is not None}

    summary = []
    horizons = sorted({int(T) for T in cfg.horizons})
    for T in horizons:
        rows = [r for r in runs if r["T"] == T]
        summary.append({
            "pipeline": cfg.pipeline, "setting": rows[0]["setting"], "T": T, "seeds": len(rows),
            "alpha": rows[0]["alpha"],
            "mean_static": _mean(r.get("static") for r in rows),
            "mean_adaptive": _mean(r.get("adaptive") for r in rows),
            "mean_dynamic": _mean(r.get("dynamic") for r in rows),
            "path_length": _mean(r.get("path_length") for r in rows),
        })
    fit = None
    passed = True
    if len(horizons) >= 4:
        key = f"mean_{cfg.slope_on}"
        fit = fit_regret_slope(horizons, [s[key] for s in summary])
        lo = cfg.thresholds.get("min_slope", -math.inf)
        hi = cfg.thresholds.get("max_slope", math.inf)
        passed = fit.within(lo, hi)
    elif cfg.thresholds:
        passed = False
    ratio_cap = cfg.thresholds.get("max_doubling_ratio")
    if ratio_cap is not None:
        key = f"mean_{cfg.slope_on}"
        for a, b in zip(summary, summary[1:]):
            if b["T"] == 2 * a["T"] and a[key] > 0 and b[key] / a[key] > ratio_cap:
                passed = False
    for s in summary:
        s["slope"] = None if fit is None else fit.slope
        s["stderr"] = None if fit is None else fit.stderr
        s["pass"] = "pass" if passed else "fail"
    result = ExperimentResult(runs, summary, fit, passed, transcripts)
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "runs.csv").write_text(result.runs_csv())
        (out / "summary.csv").write_text(result.summary_csv())
        if cfg.save_transcripts:
            identity = {k: v for k, v in cfg.to_dict().items() if k != "output_dir"}
            h = config_hash(identity)
            for tr in transcripts.values():
                tr.write(out, h)
    return result


def _run_job(args):
    raw, T, s = args
    cfg = ExperimentConfig.from_dict(raw)
    return run_one(cfg, body_from_json(cfg.body), T, s, cfg.save_transcripts)
