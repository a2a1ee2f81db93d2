"""Experiment orchestration: config files, grid execution, persistence and
plot-data emission.

Config files are plain text, one ``key = value`` per line, ``#`` comments,
list values comma-separated. Example::

    # minimal experiment
    problem = P1-overlap
    seeds = 1, 2, 3
    variants = full, WoOP

Outputs under the configured directory:

* ``summary.csv``        one row per completed run (deterministic bytes)
* ``logs/*.jsonl``       per-run convergence logs, one record per generation
* ``fronts/*.csv``       final feasible fronts, one file per run
* ``metadata.json``      config echo, version, timing (excluded from
                         byte-for-byte reproducibility)
"""

from __future__ import annotations

import difflib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .engine import ABLATION_VARIANTS, RunConfig, RunResult, apply_ablation, run
from .problems import DEFAULT_DIMENSION, PROBLEM_IDS, make_problem

DEFAULT_SEED_COUNT = 30


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    problems: list[tuple[str, int]] = field(
        default_factory=lambda: [(pid, DEFAULT_DIMENSION) for pid in PROBLEM_IDS])
    seeds: list[int] = field(default_factory=lambda: list(range(1, DEFAULT_SEED_COUNT + 1)))
    variants: list[str] = field(default_factory=lambda: ["full"])
    outdir: Path = Path("results")
    parallel: int = 1
    run: RunConfig = field(default_factory=RunConfig)

    def validate(self) -> None:
        if not self.problems:
            raise ConfigError("at least one problem is required")
        for pid, dim in self.problems:
            if pid not in PROBLEM_IDS:
                raise ConfigError(f"unknown problem id {pid!r}; expected one of {PROBLEM_IDS}")
            if dim < 2:
                raise ConfigError(f"problem dimension must be >= 2, got {dim}")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        for v in self.variants:
            if v != "full" and v not in ABLATION_VARIANTS:
                raise ConfigError(f"unknown variant {v!r}")
        if self.run.max_fe < 2 * self.run.pop_size:
            raise ConfigError("maxFE must be at least twice the population size")
        if self.parallel < 1:
            raise ConfigError("parallel must be >= 1")

    def echo(self) -> dict:
        return {
            "problems": [list(p) for p in self.problems],
            "seeds": self.seeds,
            "variants": self.variants,
            "outdir": str(self.outdir),
            "parallel": self.parallel,
            "run": self.run.fingerprint_payload(),
        }


def _parse_problem_token(token: str, line_no: int) -> tuple[str, int]:
    token = token.strip()
    if ":" in token:
        pid, _, dim = token.partition(":")
        try:
            return pid.strip(), int(dim)
        except ValueError:
            raise ConfigError(f"line {line_no}: bad dimension in problem spec {token!r}")
    return token, DEFAULT_DIMENSION


def _parse_scalar(key: str, raw: str, kind, line_no: int):
    try:
        if kind is bool:
            if raw.lower() in ("true", "1", "yes"):
                return True
            if raw.lower() in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"line {line_no}: key {key!r} expects {kind.__name__}, got {raw!r}")


_RUN_KEYS = {
    "N": ("pop_size", int),
    "maxFE": ("max_fe", int),
    "eps0": ("eps0", float),
    "curvature": ("curvature", float),
    "phase1_eps": ("phase1_eps", float),
    "phase3_eps": ("phase3_eps", float),
    "opposition_eps": ("opposition_eps", float),
    "delta": ("delta", float),
    "history_gap": ("history_gap", int),
    "history_delta": ("history_delta", float),
    "pbest_fraction": ("pbest_fraction", float),
    "coincident_threshold": ("coincident_threshold", float),
    "fixed_aux_size": ("fixed_aux_size", int),
    "reset_cnt_on_update": ("reset_cnt_on_update", bool),
    "igd_points": ("igd_points", int),
    "hv_offset": ("hv_offset", float),
}
_TOP_KEYS = ("problem", "problems", "seeds", "n_seeds", "variants", "outdir", "parallel")
_ALL_KEYS = tuple(_RUN_KEYS) + _TOP_KEYS


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config file; unknown keys are
    rejected with a closest-match suggestion."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    problems: list[tuple[str, int]] = []
    seeds: list[int] | None = None
    top: dict = {}
    run_kwargs: dict = {}

    for line_no, raw_line in enumerate(path.read_text().splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}, col {len(raw_line) - len(raw_line.lstrip()) + 1}: "
                              f"expected 'key = value', got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _ALL_KEYS:
            hint = difflib.get_close_matches(key, _ALL_KEYS, n=1)
            suffix = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ConfigError(f"line {line_no}: unknown key {key!r}{suffix}")
        if key == "problem":
            problems.append(_parse_problem_token(value, line_no))
        elif key == "problems":
            problems.extend(_parse_problem_token(t, line_no) for t in value.split(","))
        elif key == "seeds":
            seeds = [_parse_scalar("seeds", t.strip(), int, line_no) for t in value.split(",")]
        elif key == "n_seeds":
            count = _parse_scalar(key, value, int, line_no)
            seeds = list(range(1, count + 1))
        elif key == "variants":
            top["variants"] = [t.strip() for t in value.split(",")]
        elif key == "outdir":
            top["outdir"] = Path(value)
        elif key == "parallel":
            top["parallel"] = _parse_scalar(key, value, int, line_no)
        else:
            attr, kind = _RUN_KEYS[key]
            run_kwargs[attr] = _parse_scalar(key, value, kind, line_no)

    config = ExperimentConfig(run=RunConfig(**run_kwargs), **top)
    if problems:
        config.problems = problems
    if seeds is not None:
        config.seeds = seeds
    config.validate()
    return config


def _cell_name(pid: str, variant: str, seed: int) -> str:
    return f"{pid}__{variant}__s{seed}"


def _run_cell(args) -> RunResult:
    pid, dim, variant, seed, run_config = args
    problem = make_problem(pid, dim)
    return run(problem, apply_ablation(run_config, variant), seed)


def _json_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True)


@dataclass
class ExperimentReport:
    outdir: Path
    summary_path: Path
    completed: int
    failed: list[tuple[str, str]]

    @property
    def exit_code(self) -> int:
        return 2 if self.failed else 0


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Execute the (problem x variant x seed) grid and persist artifacts.

    Cell failures are recorded in the metadata and do not abort the grid.
    Summary and log bytes are reproducible for identical configs; wall
    times and timestamps live only in the metadata file.
    """
    config.validate()
    outdir = Path(config.outdir)
    (outdir / "logs").mkdir(parents=True, exist_ok=True)
    (outdir / "fronts").mkdir(parents=True, exist_ok=True)

    cells = [
        (pid, dim, variant, seed)
        for pid, dim in config.problems
        for variant in config.variants
        for seed in config.seeds
    ]
    jobs = [(pid, dim, variant, seed, config.run) for pid, dim, variant, seed in cells]

    started = time.time()
    results: list[RunResult | Exception] = []
    if config.parallel > 1:
        with ProcessPoolExecutor(max_workers=config.parallel) as pool:
            futures = [pool.submit(_run_cell, job) for job in jobs]
            for fut in futures:
                try:
                    results.append(fut.result())
                except Exception as exc:  # recorded, not fatal
                    results.append(exc)
    else:
        for job in jobs:
            try:
                results.append(_run_cell(job))
            except Exception as exc:
                results.append(exc)

    rows = []
    failed: list[tuple[str, str]] = []
    wall_times = {}
    for (pid, dim, variant, seed), outcome in zip(cells, results):
        name = _cell_name(pid, variant, seed)
        if isinstance(outcome, Exception):
            failed.append((name, f"{type(outcome).__name__}: {outcome}"))
            continue
        log_path = outdir / "logs" / f"{name}.jsonl"
        log_path.write_text("".join(_json_line(r) + "\n" for r in outcome.log))
        front_path = outdir / "fronts" / f"{name}.csv"
        header = ",".join(f"f{i + 1}" for i in range(outcome.front_objectives.shape[1] or 2))
        lines = [header] + [",".join(repr(float(v)) for v in row)
                            for row in outcome.front_objectives]
        front_path.write_text("\n".join(lines) + "\n")
        rows.append((pid, variant, seed, outcome.final_hv, outcome.final_igd,
                     outcome.evaluations, len(outcome.log)))
        wall_times[name] = outcome.wall_time

    summary_path = outdir / "summary.csv"
    with summary_path.open("w") as fh:
        fh.write("problem,variant,seed,final_hv,final_igd,evaluations,generations\n")
        for pid, variant, seed, hv, igd_val, fe, gens in rows:
            fh.write(f"{pid},{variant},{seed},{float(hv)!r},{float(igd_val)!r},{fe},{gens}\n")

    metadata = {
        "tool": "dpcmo",
        "version": __version__,
        "generator": "PCG64",
        "config": config.echo(),
        "started_unix": started,
        "elapsed_seconds": time.time() - started,
        "wall_times": wall_times,
        "failures": failed,
    }
    (outdir / "metadata.json").write_text(json.dumps(metadata, indent=2, sort_keys=True) + "\n")

    return ExperimentReport(outdir=outdir, summary_path=summary_path,
                            completed=len(rows), failed=failed)


def read_summary(path) -> list[dict]:
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        row = dict(zip(header, parts))
        row["seed"] = int(row["seed"])
        row["final_hv"] = float(row["final_hv"])
        row["final_igd"] = float(row["final_igd"])
        rows.append(row)
    return rows


def emit_plot_data(results_dir) -> list[Path]:
    """Write per-(problem, variant) plot inputs from stored artifacts.

    Produces a median-IGD-versus-FE series (runs aligned on generation
    index) and a final-front scatter file. Missing logs produce a warning
    and partial output.
    """
    results_dir = Path(results_dir)
    summary_path = results_dir / "summary.csv"
    if not summary_path.exists():
        print(f"warning: no summary.csv under {results_dir}; nothing to emit")
        return []
    rows = read_summary(summary_path)
    plots = results_dir / "plots"
    plots.mkdir(exist_ok=True)

    groups: dict[tuple[str, str], list[int]] = {}
    for row in rows:
        groups.setdefault((row["problem"], row["variant"]), []).append(row["seed"])

    written = []
    for (pid, variant), seeds in sorted(groups.items()):
        series = []
        fronts = []
        for seed in sorted(seeds):
            name = _cell_name(pid, variant, seed)
            log_path = results_dir / "logs" / f"{name}.jsonl"
            if not log_path.exists():
                print(f"warning: missing log {log_path}")
                continue
            records = [json.loads(line) for line in log_path.read_text().splitlines()]
            series.append([(r["fe"], r["igd"]) for r in records])
            front_path = results_dir / "fronts" / f"{name}.csv"
            if front_path.exists():
                body = front_path.read_text().splitlines()[1:]
                fronts.extend((seed, line) for line in body if line)
        if not series:
            continue

        depth = min(len(s) for s in series)
        out = plots / f"igd__{pid}__{variant}.csv"
        with out.open("w") as fh:
            fh.write("generation,fe,median_igd\n")
            for i in range(depth):
                fe = float(np.median([s[i][0] for s in series]))
                med = float(np.median([s[i][1] for s in series]))
                fh.write(f"{i},{fe!r},{med!r}\n")
        written.append(out)

        scatter = plots / f"front__{pid}__{variant}.csv"
        with scatter.open("w") as fh:
            fh.write("seed,f1,f2\n")
            for seed, line in fronts:
                fh.write(f"{seed},{line}\n")
        written.append(scatter)
    return written
