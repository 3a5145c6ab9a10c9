"""Experiment configs, replicate sweeps and output bundles.

A config is a TOML file::

    name = "sweep"
    replicates = 20
    seed = 0
    out = "results/sweep"
    objectives = ["ackley", "rastrigin"]
    acquisitions = ["ss-ucb", "random"]
    modes = ["sequential"]

    [run]
    n_obs = 200
    batch_size = 5

plus optional ``[domain]``, ``[family]``, ``[acquisition]``, ``[kernel]`` and
``[objective]`` tables. Every (objective, acquisition, mode) triple is a
condition; each condition runs ``replicates`` times with seed
``seed + replicate``.
"""

import copy
import csv
import hashlib
import io
import json
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from pathlib import Path

import numpy as np
import tomli

from . import __version__
from .acquisition import ACQUISITION_KINDS, SS_UCB, AcquisitionSpec, BetaSchedule
from .dist import DEFAULT_RATES, DEFAULT_STD_FRACTIONS, GridNormalFamily, MutagenesisFamily
from .exceptions import (
    ConfigParse,
    ConfigValidation,
    MissingManifest,
    RuntimeFailure,
    SchemaMismatch,
)
from .kernels import DEFAULT_LENGTHSCALE_FRACTION, LINEAR_ONE_HOT, KernelSpec, default_kernel
from .metrics import aggregate, bound_report
from .objectives import OBJECTIVE_KINDS, ObjectiveSpec
from .optimizer import NOISE_FRACTION, Observation, RunConfig, RunTrace, run_batch, run_sequential

SCHEMA_VERSION = 1
SEQUENTIAL = "sequential"
BATCH = "batch"
MODES = (SEQUENTIAL, BATCH)
TRACE_COLUMNS = (
    "replicate",
    "t",
    "round",
    "theta_index",
    "variance_label",
    "x_index",
    "x_coords_or_seq",
    "y",
    "f_true",
    "inst_regret",
    "simple_regret",
)
MANIFEST = "manifest.json"
CONFIG_COPY = "config.json"

DEFAULTS = {
    "name": "experiment",
    "replicates": 50,
    "seed": 0,
    "out": "results",
    "objectives": ["ackley"],
    "acquisitions": [SS_UCB],
    "modes": [SEQUENTIAL],
    "run": {"n_obs": 200, "batch_size": 5, "noise_variance": None},
    "domain": {"cells_per_dim": 64, "length": 5},
    "family": {
        "means_per_dim": 32,
        "std_fractions": list(DEFAULT_STD_FRACTIONS),
        "rates": list(DEFAULT_RATES),
    },
    "acquisition": {"beta": "theorem-discrete", "delta": 0.1, "beta_value": 4.0},
    "kernel": {"lengthscale_fraction": DEFAULT_LENGTHSCALE_FRACTION, "signal_variance": 1.0},
    "objective": {"dim": 2, "michalewicz_m": 10, "seq_seeds": [0]},
}
LIST_KEYS = ("objectives", "acquisitions", "modes")


def _merge(base, update, path=""):
    out = copy.deepcopy(base)
    for key, value in update.items():
        if key not in base:
            raise ConfigValidation(f"unknown config key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigValidation(f"{path + key!r} must be a table")
            out[key] = _merge(base[key], value, f"{path}{key}.")
        else:
            out[key] = value
    return out


@dataclass(frozen=True)
class Condition:
    objective: str
    acquisition: str
    mode: str
    seq_seed: int = 0

    @property
    def name(self):
        obj = self.objective
        if obj == "seq-linear-quadratic":
            obj = f"{obj}-s{self.seq_seed}"
        return f"{obj}__{self.acquisition}__{self.mode}"


@dataclass
class ExperimentConfig:
    """Validated experiment description; ``data`` holds the merged tables."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    @classmethod
    def from_dict(cls, raw):
        config = cls(_merge(DEFAULTS, raw))
        config.validate()
        return config

    @classmethod
    def load(cls, path):
        try:
            with open(path, "rb") as fh:
                raw = tomli.load(fh)
        except OSError as exc:
            raise ConfigParse(f"cannot read {path}: {exc}") from exc
        except tomli.TOMLDecodeError as exc:
            raise ConfigParse(f"{path}: {exc}") from exc
        return cls.from_dict(raw)

    def with_overrides(self, **overrides):
        """Copy with top-level or ``section.key`` fields replaced; ``None`` is ignored."""
        data = copy.deepcopy(self.data)
        for key, value in overrides.items():
            if value is None:
                continue
            if "." in key:
                section, sub = key.split(".", 1)
                data[section][sub] = value
            elif key in LIST_KEYS and isinstance(value, str):
                data[key] = [value]
            else:
                data[key] = value
        out = ExperimentConfig(data)
        out.validate()
        return out

    def validate(self):
        d = self.data
        for key in LIST_KEYS:
            if not isinstance(d[key], list) or not d[key]:
                raise ConfigValidation(f"{key} must be a non-empty list")
        for kind in d["objectives"]:
            if kind not in OBJECTIVE_KINDS:
                raise ConfigValidation(f"unknown objective {kind!r}")
        for kind in d["acquisitions"]:
            if kind not in ACQUISITION_KINDS:
                raise ConfigValidation(f"unknown acquisition {kind!r}")
        for mode in d["modes"]:
            if mode not in MODES:
                raise ConfigValidation(f"unknown mode {mode!r}")
        if not _is_int(d["replicates"]) or d["replicates"] < 1:
            raise ConfigValidation("replicates must be a positive integer")
        if not _is_int(d["seed"]) or d["seed"] < 0:
            raise ConfigValidation("seed must be a non-negative integer")
        run = d["run"]
        if not _is_int(run["n_obs"]) or run["n_obs"] < 0:
            raise ConfigValidation("run.n_obs must be a non-negative integer")
        if not _is_int(run["batch_size"]) or run["batch_size"] < 1:
            raise ConfigValidation("run.batch_size must be a positive integer")
        if run["noise_variance"] is not None and not run["noise_variance"] >= 0:
            raise ConfigValidation("run.noise_variance must be non-negative")
        if not d["objective"]["seq_seeds"]:
            raise ConfigValidation("objective.seq_seeds must be non-empty")
        # Build one of everything so kind and range errors surface before running.
        try:
            for cond in self.conditions():
                _problem(self.frozen(), cond.objective, cond.seq_seed)
                self.acquisition_spec(cond)
        except (ValueError, TypeError) as exc:
            raise ConfigValidation(str(exc)) from exc

    @property
    def name(self):
        return self.data["name"]

    @property
    def replicates(self):
        return int(self.data["replicates"])

    @property
    def seed(self):
        return int(self.data["seed"])

    @property
    def out(self):
        return Path(self.data["out"])

    def conditions(self):
        out = []
        for obj in self.data["objectives"]:
            seeds = self.data["objective"]["seq_seeds"] if obj == "seq-linear-quadratic" else [0]
            for seq_seed in seeds:
                for acq in self.data["acquisitions"]:
                    for mode in self.data["modes"]:
                        out.append(Condition(obj, acq, mode, int(seq_seed)))
        return out

    def acquisition_spec(self, cond):
        a = self.data["acquisition"]
        schedule = BetaSchedule(kind=a["beta"], delta=a["delta"], value=a["beta_value"])
        return AcquisitionSpec(kind=cond.acquisition, beta=schedule)

    def canonical(self):
        return json.dumps(self.data, sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def frozen(self):
        """Hashable form used to cache problem construction."""
        return self.canonical()


def _is_int(value):
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


@lru_cache(maxsize=8)
def _problem(canonical, objective, seq_seed):
    """Domain, family, objective values and kernel for one objective."""
    d = json.loads(canonical)
    obj = d["objective"]
    spec = ObjectiveSpec(
        kind=objective,
        dim=obj["dim"],
        michalewicz_m=obj["michalewicz_m"],
        seq_seed=seq_seed,
    )
    domain = spec.make_domain(cells_per_dim=d["domain"]["cells_per_dim"], length=d["domain"]["length"])
    fam = d["family"]
    if spec.is_sequence:
        family = MutagenesisFamily(domain, fam["rates"])
    else:
        family = GridNormalFamily(domain, fam["means_per_dim"], fam["std_fractions"])
    k = d["kernel"]
    kernel = default_kernel(domain, signal_variance=k["signal_variance"])
    if kernel.kind != LINEAR_ONE_HOT:
        side = float(np.mean(domain.side))
        kernel = KernelSpec(
            input_dim=domain.dim,
            lengthscale=k["lengthscale_fraction"] * side,
            signal_variance=k["signal_variance"],
        )
    f = np.asarray(spec(domain.points), dtype=float)
    return spec, domain, family, f, kernel


def run_config_for(config, cond, replicate):
    _, domain, family, f, kernel = _problem(config.frozen(), cond.objective, cond.seq_seed)
    run = config.data["run"]
    return RunConfig(
        domain=domain,
        family=family,
        objective=f,
        acquisition=config.acquisition_spec(cond),
        kernel=kernel,
        batch_size=run["batch_size"],
        n_obs=run["n_obs"],
        noise_variance=run["noise_variance"],
        seed=config.seed + replicate,
        replicate=replicate,
    )


def run_one(config, cond, replicate):
    rc = run_config_for(config, cond, replicate)
    try:
        if cond.mode == BATCH:
            return run_batch(rc)
        return run_sequential(rc)
    except Exception as exc:
        raise RuntimeFailure(f"{cond.name}/replicate-{replicate}", exc) from exc


def _run_job(args):
    data, cond, replicate = args
    return run_one(ExperimentConfig(data), cond, replicate)


def worker_count():
    env = os.environ.get("SSBO_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigValidation("SSBO_THREADS must be an integer") from exc
        return max(1, n)
    return os.cpu_count() or 1


def run_all(config, workers=None):
    """Run every (condition, replicate); returns ``{condition: [trace, ...]}``."""
    jobs = [(config.data, c, r) for c in config.conditions() for r in range(config.replicates)]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        results = [_run_job(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_job, jobs))
    out = {}
    for (_, cond, _), trace in zip(jobs, results):
        out.setdefault(cond, []).append(trace)
    return out


def _fmt(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def trace_csv(trace, domain):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for o in trace.observations:
        writer.writerow(
            [
                trace.replicate,
                o.t,
                o.round,
                o.theta,
                _fmt(o.variance_label),
                o.x_index,
                domain.label(o.x_index),
                _fmt(o.y),
                _fmt(o.f_true),
                _fmt(o.inst_regret),
                _fmt(o.simple_regret),
            ]
        )
    return buf.getvalue()


def read_trace_csv(path):
    """Trace rebuilt from a CSV file; fields absent from the file keep defaults."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != TRACE_COLUMNS:
            raise SchemaMismatch(f"{path}: unexpected columns {header}")
        trace = RunTrace()
        for row in reader:
            trace.replicate = int(row[0])
            trace.observations.append(
                Observation(
                    t=int(row[1]),
                    round=int(row[2]),
                    theta=int(row[3]),
                    variance_label=float(row[4]),
                    x_index=int(row[5]),
                    y=float(row[7]),
                    f_true=float(row[8]),
                    inst_regret=float(row[9]),
                    simple_regret=float(row[10]),
                )
            )
    return trace


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def trace_path(root, cond, replicate):
    return Path(root) / "traces" / cond.name / f"replicate-{replicate:03d}.csv"


def write_bundle(config, results):
    """Write traces, config copy and manifest, then the summary reports.

    Files go to a scratch directory first and are moved into place only
    once everything has been written.
    """
    out = config.out
    out.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".ssbo-", dir=out.parent))
    try:
        for cond, traces in results.items():
            _, domain, _, _, _ = _problem(config.frozen(), cond.objective, cond.seq_seed)
            for trace in traces:
                _write(trace_path(scratch, cond, trace.replicate), trace_csv(trace, domain))
        for cond in results:
            spec = _problem(config.frozen(), cond.objective, cond.seq_seed)[0]
            if spec.is_sequence:
                _write(scratch / "oracles" / f"seed-{cond.seq_seed}.json", _json(spec.oracle().as_dict()))
        _write(scratch / CONFIG_COPY, _json(config.data))
        manifest = {
            "schema_version": SCHEMA_VERSION,
            "artifact_version": __version__,
            "config_sha256": config.digest(),
            "name": config.name,
            "conditions": [c.name for c in results],
            "replicates": config.replicates,
            "trace_columns": list(TRACE_COLUMNS),
            "created": datetime.now(timezone.utc).isoformat(),
        }
        _write(scratch / MANIFEST, _json(manifest))
        report(scratch)
        for sub in ("traces", "summaries", "bounds", "oracles"):
            if (out / sub).exists():
                shutil.rmtree(out / sub)
        out.mkdir(parents=True, exist_ok=True)
        for item in scratch.iterdir():
            target = out / item.name
            if target.is_file():
                target.unlink()
            shutil.move(str(item), str(target))
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return out


def load_manifest(bundle):
    path = Path(bundle) / MANIFEST
    if not path.is_file():
        raise MissingManifest(f"no {MANIFEST} in {bundle}")
    manifest = json.loads(path.read_text(encoding="utf-8"))
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise SchemaMismatch(
            f"bundle schema {manifest.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    if tuple(manifest.get("trace_columns", ())) != TRACE_COLUMNS:
        raise SchemaMismatch("bundle trace columns differ from this version")
    return manifest


def report(bundle):
    """Write per-condition curve summaries and bound reports from a bundle's traces."""
    bundle = Path(bundle)
    load_manifest(bundle)
    config = ExperimentConfig.from_dict(json.loads((bundle / CONFIG_COPY).read_text("utf-8")))
    written = []
    for cond in config.conditions():
        paths = sorted((bundle / "traces" / cond.name).glob("replicate-*.csv"))
        if not paths:
            continue
        traces = [read_trace_csv(p) for p in paths]
        summary = aggregate(traces)
        target = bundle / "summaries" / f"{cond.name}.json"
        _write(target, _json({"condition": cond.name, **summary.as_dict()}))
        written.append(target)
        if cond.acquisition == SS_UCB:
            target = bundle / "bounds" / f"{cond.name}.json"
            _write(target, _json(_bounds(config, cond, traces)))
            written.append(target)
    return written


def _bounds(config, cond, traces):
    _, domain, family, f, kernel = _problem(config.frozen(), cond.objective, cond.seq_seed)
    scale = float(f.std()) or 1.0
    noise = config.data["run"]["noise_variance"]
    if noise is None:
        noise = NOISE_FRACTION * float(f.max() - f.min()) ** 2
    model_noise = noise / scale**2
    schedule = config.acquisition_spec(cond).beta
    reports = []
    for trace in traces:
        rep = bound_report(trace, family, model_noise, schedule, kernel, f)
        reports.append({"replicate": trace.replicate, **rep.as_dict()})
    return {"condition": cond.name, "model_noise_variance": model_noise, "replicates": reports}


def run_experiment(config, workers=None):
    results = run_all(config, workers)
    return write_bundle(config, results)


__all__ = [
    "Condition",
    "ExperimentConfig",
    "TRACE_COLUMNS",
    "load_manifest",
    "read_trace_csv",
    "report",
    "run_all",
    "run_experiment",
    "run_one",
    "trace_csv",
    "write_bundle",
]
