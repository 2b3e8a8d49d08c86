"""Experiment configuration, reproducible parallel execution and result files.

Every trial draws from ``RngStream(seed, stream)`` where the stream index is
fixed by the experiment's task list, never by scheduling, so outputs do not
depend on the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import multiprocessing as mp
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from .errors import InvalidParams, IoFailure, SchemaMismatch, UnknownExperiment

Row = dict


@dataclass(frozen=True)
class Task:
    key: tuple
    stream: int


@dataclass
class Experiment:
    """A registered experiment.

    ``tasks`` lists the work units, ``run_task`` turns one unit into rows using
    its own stream, ``reduce`` turns all rows (in task order) into result rows
    and a summary, and ``plot`` names the (x, y, yerr) columns of the results.
    """

    name: str
    defaults: dict
    tasks: Callable[[dict], list[Task]]
    run_task: Callable[[dict, Task, int], list[Row]]
    reduce: Callable[[dict, list[Row]], tuple[list[Row], dict]]
    plot: tuple[str, str, str]
    check: Callable[[dict], list[str]] = lambda p: []


REGISTRY: dict[str, Experiment] = {}


def register(exp: Experiment) -> Experiment:
    REGISTRY[exp.name] = exp
    return exp


def get_experiment(name: str) -> Experiment:
    from . import experiments  # noqa: F401  (populates the registry)

    if name not in REGISTRY:
        raise UnknownExperiment(f"unknown experiment {name!r}; known: {sorted(REGISTRY)}")
    return REGISTRY[name]


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    master_seed: int = 0
    workers: int = 1
    out_dir: str = "results"

    def resolved(self) -> dict:
        """Parameters merged with defaults and validated."""
        return validate_params(get_experiment(self.experiment), self.params)

    def config_hash(self) -> str:
        blob = json.dumps({"experiment": self.experiment, "params": self.resolved(),
                           "seed": int(self.master_seed)}, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _coerce(value, proto, key: str, errors: list[str]):
    if isinstance(proto, list):
        items = value if isinstance(value, list) else [value]
        elem = proto[0] if proto else float
        return [_coerce(v, elem, key, errors) for v in items]
    kind = proto if isinstance(proto, type) else type(proto)
    try:
        if kind is bool:
            if isinstance(value, str):
                if value.lower() in ("1", "true", "yes", "on"):
                    return True
                if value.lower() in ("0", "false", "no", "off"):
                    return False
                raise ValueError(value)
            return bool(value)
        if kind is int:
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        errors.append(f"{key}: cannot interpret {value!r} as {kind.__name__}")
        return None


def validate_params(exp: Experiment, params: dict) -> dict:
    errors = []
    out = {}
    for key in params:
        if key not in exp.defaults:
            errors.append(f"{key}: unknown parameter for {exp.name}")
    for key, proto in exp.defaults.items():
        out[key] = _coerce(params[key], proto, key, errors) if key in params else proto
    if not errors:
        if "trials" in out and out["trials"] < 1:
            errors.append("trials must be ≥ 1")
        errors.extend(exp.check(out))
    if errors:
        raise InvalidParams(errors)
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Flat ``key = value`` lines (repeated keys make lists, # starts a comment) or JSON."""
    stripped = text.strip()
    if stripped.startswith("{"):
        data = json.loads(stripped)
        params = dict(data.get("params", {}))
        for k, v in data.items():
            if k not in ("experiment", "params", "seed", "workers", "out"):
                params[k] = v
        return ExperimentConfig(data["experiment"], params, int(data.get("seed", 0)),
                                int(data.get("workers", 1)), str(data.get("out", "results")))
    values: dict[str, list] = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams([f"line {ln}: expected key = value"])
        k, v = (s.strip() for s in line.split("=", 1))
        values.setdefault(k, []).append(v)
    if "experiment" not in values:
        raise InvalidParams(["experiment: missing"])
    meta = {k: values.pop(k)[-1] for k in ("experiment", "seed", "workers", "out") if k in values}
    params = {k: (v if len(v) > 1 else v[0]) for k, v in values.items()}
    exp = get_experiment(meta["experiment"])
    # a single value for a list-valued parameter is a one-element list
    for k, v in params.items():
        if isinstance(exp.defaults.get(k), list) and not isinstance(v, list):
            params[k] = [v]
    return ExperimentConfig(meta["experiment"], params, int(meta.get("seed", 0)),
                            int(meta.get("workers", 1)), meta.get("out", "results"))


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

def _run_chunk(args) -> list[tuple[int, list[Row]]]:
    name, params, seed, chunk = args
    exp = get_experiment(name)
    return [(pos, exp.run_task(params, task, seed)) for pos, task in chunk]


def execute(exp: Experiment, params: dict, seed: int, workers: int) -> list[Row]:
    """All task rows, in task order."""
    tasks = exp.tasks(params)
    indexed = list(enumerate(tasks))
    if workers <= 1 or len(tasks) <= 1:
        out = _run_chunk((exp.name, params, seed, indexed))
    else:
        n_chunks = min(len(tasks), workers * 8)
        size = math.ceil(len(tasks) / n_chunks)
        chunks = [indexed[i:i + size] for i in range(0, len(indexed), size)]
        ctx = mp.get_context("fork")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            parts = pool.map(_run_chunk, [(exp.name, params, seed, c) for c in chunks])
            out = [item for part in parts for item in part]
    out.sort(key=lambda item: item[0])
    return [row for _, rows in out for row in rows]


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, rows: list[Row], config_hash: str, experiment: str) -> None:
    buf = io.StringIO()
    buf.write(f"# config_hash={config_hash}\n# experiment={experiment}\n")
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c, "")) for c in cols])
    path.write_text(buf.getvalue())


def read_csv(path) -> tuple[dict, list[dict]]:
    """(header fields, rows as strings)."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    head = {}
    body = []
    for line in lines:
        if line.startswith("#"):
            k, _, v = line[1:].strip().partition("=")
            head[k.strip()] = v.strip()
        else:
            body.append(line)
    rows = list(csv.DictReader(body))
    return head, rows


def _json_default(o):
    if hasattr(o, "item"):
        return o.item()
    if hasattr(o, "tolist"):
        return o.tolist()
    raise TypeError(type(o))


def _ranges(streams: list[int]) -> list[list[int]]:
    out: list[list[int]] = []
    for s in streams:
        if out and s == out[-1][1]:
            out[-1][1] = s + 1
        else:
            out.append([s, s + 1])
    return out


@dataclass
class RunManifest:
    config_hash: str
    code_version: str
    streams: list
    wall_clock: dict
    outputs: list
    summary: dict = field(default_factory=dict)


def run(config: ExperimentConfig) -> RunManifest:
    """Validate, execute, and write trials.csv, results.csv, summary.json, manifest.json."""
    from . import __version__

    exp = get_experiment(config.experiment)
    params = validate_params(exp, config.params)
    h = config.config_hash()
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise IoFailure(f"cannot write to {out}: {exc}") from exc
    started = time.time()
    rows = execute(exp, params, int(config.master_seed), int(config.workers))
    results, summary = exp.reduce(params, rows)
    summary = {"experiment": exp.name, "config_hash": h, "params": params,
               "seed": int(config.master_seed), **summary}
    finished = time.time()
    files = ["trials.csv", "results.csv", "summary.json", "manifest.json"]
    try:
        write_csv(out / "trials.csv", rows, h, exp.name)
        write_csv(out / "results.csv", results, h, exp.name)
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True,
                                                     default=_json_default) + "\n")
        manifest = RunManifest(
            h, __version__, _ranges([t.stream for t in exp.tasks(params)]),
            {"started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
             "finished": datetime.fromtimestamp(finished, timezone.utc).isoformat(),
             "seconds": finished - started, "workers": int(config.workers)},
            files, summary)
        (out / "manifest.json").write_text(json.dumps(
            {k: v for k, v in manifest.__dict__.items() if k != "summary"}, indent=2) + "\n")
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return manifest


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def plot_data(results_file, kind: str, out_file=None) -> Path:
    """Write (x, y, yerr) columns for a results file; one output row per input row."""
    from . import experiments  # noqa: F401

    if kind not in REGISTRY:
        raise SchemaMismatch(f"unknown plot kind {kind!r}")
    path = Path(results_file)
    head, rows = read_csv(path)
    if head.get("experiment") != kind:
        raise SchemaMismatch(f"results come from {head.get('experiment')!r}, not {kind!r}")
    manifest = path.parent / "manifest.json"
    if manifest.exists():
        recorded = json.loads(manifest.read_text()).get("config_hash")
        if recorded != head.get("config_hash"):
            raise SchemaMismatch("results file hash does not match manifest.json")
    exp = REGISTRY[kind]
    xk, yk, ek = exp.plot
    missing = [c for c in (xk, yk, ek) if c and rows and c not in rows[0]]
    if missing:
        raise SchemaMismatch(f"results lack columns {missing}")
    out_rows = [{xk: r[xk], yk: r[yk], ek: r[ek] if ek else "0"} for r in rows]
    target = Path(out_file) if out_file else path.with_name(path.stem + f".plot.{kind}.csv")
    try:
        buf = io.StringIO()
        buf.write(f"# config_hash={head.get('config_hash')}\n# experiment={kind}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([xk, yk, ek or "yerr"])
        for r in out_rows:
            w.writerow([r[xk], r[yk], r[ek] if ek else "0"])
        target.write_text(buf.getvalue())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return target


def available() -> list[str]:
    from . import experiments  # noqa: F401

    return sorted(REGISTRY)

