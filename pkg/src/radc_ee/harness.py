"""Monte-Carlo sweeps: config files, the trial runner and CSV persistence.

Rates and EE are reported in bits; the solver works in nats.
"""

from __future__ import annotations

import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .baselines import SchemeId, run_scheme
from .metrics import power_consumption, sum_rate
from .pdd import Problem, SolverOptions
from .scenario import PRESETS, SystemConfig, gen_channel, snr_scale_from_db

SWEEP_AXES = ("snr_db", "n_rf_chains", "n_antennas", "avg_bits")
WORKERS_ENV = "RADC_EE_WORKERS"
LOG2E = 1.0 / math.log(2.0)

_EXPERIMENT_KEYS = (
    "sweep_axis", "sweep_values", "schemes", "n_trials", "base_seed",
    "output_path", "record_wall_time",
)


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig = field(default_factory=lambda: PRESETS["desk"])
    sweep_axis: str = "snr_db"
    sweep_values: tuple[float, ...] = (10.0,)
    schemes: tuple[SchemeId, ...] = (SchemeId.JBQA,)
    n_trials: int = 20
    base_seed: int = 0
    output_path: str = "results.csv"
    solver: SolverOptions = field(default_factory=SolverOptions)
    # wall-clock times differ run to run, so they are zeroed unless asked for
    record_wall_time: bool = False

    def __post_init__(self):
        if self.sweep_axis not in SWEEP_AXES:
            raise ValueError(f"sweep_axis must be one of {SWEEP_AXES}, got {self.sweep_axis!r}")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if not self.sweep_values:
            raise ValueError("sweep_values is empty")
        if not self.schemes:
            raise ValueError("schemes is empty")
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        if len(set(self.sweep_values)) != len(self.sweep_values):
            raise ValueError("sweep_values contains duplicates")
        object.__setattr__(self, "schemes", tuple(SchemeId(s) for s in self.schemes))
        for v in self.sweep_values:
            self.point_config(v)  # raises on an out-of-range value

    def point_config(self, value: float) -> SystemConfig:
        """System config at one sweep coordinate."""
        if self.sweep_axis == "snr_db":
            return self.system.with_(snr_scale=snr_scale_from_db(value))
        if self.sweep_axis == "avg_bits":
            return self.system.with_(avg_bits=float(value))
        if float(value) != int(value):
            raise ValueError(f"{self.sweep_axis} must be an integer, got {value}")
        return self.system.with_(**{self.sweep_axis: int(value)})


@dataclass
class TrialRecord:
    seed: int
    sweep_axis: str
    sweep_value: float
    scheme: str
    sum_rate: float  # bits/s/Hz
    power: float  # W
    ee: float  # bits/s/Hz/W
    outer_iters: int
    final_eps: float
    converged: bool
    wall_time: float
    error: str = ""


RECORD_FIELDS = [f.name for f in fields(TrialRecord)]


# ---------------------------------------------------------------- config files

def _coerce(text: str, like):
    if isinstance(like, bool):
        low = text.lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise ValueError(f"not a boolean: {text!r}")
        return low in ("true", "1", "yes")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


def _split_list(text: str) -> list[str]:
    return [x.strip() for x in text.replace(",", " ").split() if x.strip()]


def parse_config_text(text: str) -> ExperimentConfig:
    """Build an experiment from ``key = value`` lines.

    Keys are ExperimentConfig, SystemConfig or SolverOptions field names,
    plus ``preset`` to pick the base system. Lists are comma separated.
    """
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in pairs:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        pairs[key] = value

    preset = pairs.pop("preset", "desk")
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    base = PRESETS[preset]
    defaults = ExperimentConfig.__dataclass_fields__
    sys_over, solver_over, exp = {}, {}, {}
    solver_defaults = asdict(SolverOptions())
    for key, value in pairs.items():
        if key in SystemConfig.field_names():
            sys_over[key] = _coerce(value, getattr(base, key))
        elif key == "sweep_values":
            exp[key] = tuple(float(v) for v in _split_list(value))
        elif key == "schemes":
            exp[key] = tuple(SchemeId(s.upper()) for s in _split_list(value))
        elif key in _EXPERIMENT_KEYS:
            exp[key] = _coerce(value, defaults[key].default)
        elif key in solver_defaults:
            solver_over[key] = _coerce(value, solver_defaults[key])
        else:
            raise ValueError(f"unknown key {key!r}")
    return ExperimentConfig(
        system=base.with_(**sys_over), solver=SolverOptions(**solver_over), **exp
    )


def load_config(path) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- running

def _worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    n = int(raw)
    if n < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1")
    return n


def run_trial(config: SystemConfig, scheme: SchemeId, seed: int, options: SolverOptions,
              axis: str = "", value: float = float("nan"), timed: bool = False) -> TrialRecord:
    """One solve on the channel drawn from ``seed``; failures land in ``error``."""
    start = time.perf_counter()
    try:
        H = gen_channel(config, seed).H
        prob = Problem.build(config, H)
        z, diag = run_scheme(scheme, config, H, options, seed, prob.W)
        rate = sum_rate(z, H, prob.W, config.noise_power) * LOG2E
        power = power_consumption(z, config)
        rec = TrialRecord(
            seed, axis, value, scheme.value, rate, power, rate / power,
            diag.outer_iters, diag.final_eps, bool(diag.converged), 0.0,
        )
    except Exception as exc:  # recorded, the sweep carries on
        nan = float("nan")
        rec = TrialRecord(seed, axis, value, scheme.value, nan, nan, nan, 0, nan, False, 0.0,
                          f"{type(exc).__name__}: {exc}")
    if timed:
        rec.wall_time = time.perf_counter() - start
    return rec


def _run_task(task):
    return run_trial(*task)


def sweep_tasks(cfg: ExperimentConfig) -> list[tuple]:
    """Tasks in canonical order: sweep value, then scheme, then seed."""
    tasks = []
    for value in sorted(cfg.sweep_values):
        point = cfg.point_config(value)
        for scheme in cfg.schemes:
            for t in range(cfg.n_trials):
                tasks.append((point, scheme, cfg.base_seed + t, cfg.solver,
                              cfg.sweep_axis, value, cfg.record_wall_time))
    return tasks


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> list[TrialRecord]:
    tasks = sweep_tasks(cfg)
    workers = _worker_count() if workers is None else workers
    if workers <= 1 or len(tasks) == 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps submission order, which is already canonical
        return list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


# ---------------------------------------------------------------- CSV

def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.12g" % v
    return str(v)


def _write_rows(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())


def write_records(records, path) -> None:
    _write_rows(path, RECORD_FIELDS, ([getattr(r, k) for k in RECORD_FIELDS] for r in records))


def read_records(path) -> list[TrialRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RECORD_FIELDS) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        out = []
        for row in reader:
            out.append(TrialRecord(
                seed=int(row["seed"]),
                sweep_axis=row["sweep_axis"],
                sweep_value=float(row["sweep_value"]),
                scheme=row["scheme"],
                sum_rate=float(row["sum_rate"]),
                power=float(row["power"]),
                ee=float(row["ee"]),
                outer_iters=int(row["outer_iters"]),
                final_eps=float(row["final_eps"]),
                converged=row["converged"] == "true",
                wall_time=float(row["wall_time"]),
                error=row["error"],
            ))
    return out


# ---------------------------------------------------------------- summaries

@dataclass
class SummaryRow:
    sweep_axis: str
    sweep_value: float
    scheme: str
    n: int
    ee_mean: float
    ee_stderr: float
    sum_rate_mean: float
    power_mean: float
    failures: int


SUMMARY_FIELDS = [f.name for f in fields(SummaryRow)]


def summarize(records) -> list[SummaryRow]:
    """Mean and standard error of EE per (sweep value, scheme).

    Failed trials are counted but left out of the statistics; a group
    with no successful trial is an error.
    """
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    groups: dict[tuple, list[TrialRecord]] = {}
    for r in records:
        groups.setdefault((r.sweep_axis, r.sweep_value, r.scheme), []).append(r)
    out = []
    for (axis, value, scheme), rows in groups.items():
        ok = [r for r in rows if not r.error]
        if not ok:
            raise ValueError(f"group ({axis}={value}, {scheme}) has no successful trials")
        ee = np.array([r.ee for r in ok])
        se = float(np.std(ee, ddof=1) / np.sqrt(len(ee))) if len(ee) > 1 else 0.0
        out.append(SummaryRow(
            axis, value, scheme, len(ok), float(ee.mean()), se,
            float(np.mean([r.sum_rate for r in ok])),
            float(np.mean([r.power for r in ok])),
            len(rows) - len(ok),
        ))
    return out


def write_summary(rows, path) -> None:
    _write_rows(path, SUMMARY_FIELDS, ([getattr(r, k) for k in SUMMARY_FIELDS] for r in rows))


def summary_path(records_path) -> Path:
    p = Path(records_path)
    return p.with_name(p.stem + "_summary.csv")


def with_overrides(cfg: ExperimentConfig, *, seed=None, trials=None, out=None) -> ExperimentConfig:
    changes = {}
    if seed is not None:
        changes["base_seed"] = seed
    if trials is not None:
        changes["n_trials"] = trials
    if out is not None:
        changes["output_path"] = str(out)
    return replace(cfg, **changes) if changes else cfg


# ---------------------------------------------------------------- oracle gap

ORACLE_RATIO = 0.90
ORACLE_PASS_SHARE = 0.80


@dataclass
class OracleGap:
    seed: int
    jbqa_ee: float  # bits/s/Hz/W
    oracle_ee: float

    @property
    def ratio(self) -> float:
        return self.jbqa_ee / self.oracle_ee if self.oracle_ee > 0 else 1.0


def oracle_gaps(cfg: ExperimentConfig) -> list[OracleGap]:
    """JBQA against exhaustive search on ``n_trials`` seeded channels of the base system."""
    from .baselines import brute_force_oracle, jbqa_solve

    out = []
    for t in range(cfg.n_trials):
        seed = cfg.base_seed + t
        H = gen_channel(cfg.system, seed).H
        prob = Problem.build(cfg.system, H)
        _, diag = jbqa_solve(cfg.system, H, cfg.solver, prob.W)
        _, best = brute_force_oracle(cfg.system, H, cfg.solver, prob.W)
        out.append(OracleGap(seed, diag.eta * LOG2E, best * LOG2E))
    return out


def write_oracle_gaps(gaps, path) -> None:
    _write_rows(path, ["seed", "jbqa_ee", "oracle_ee", "ratio"],
                ([g.seed, g.jbqa_ee, g.oracle_ee, g.ratio] for g in gaps))
