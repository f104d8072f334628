"""Experiment grids: config files, seeded cell execution, CSV/manifest output, reports.

Config file (JSON)::

    {
      "schema_version": 1,
      "dataset": "gaussian4",                 # blob8 | gaussian2 | gaussian4 | gaussian8
      "variants": [                           # at least one
        {"variant": "comma_tournament", "mu": 3, "lambda": 6,
         "tournament_size": 2, "n_e": 10, "budget": null}
      ],
      "runs": 30,
      "master_seed": 0,
      "train": {"learning_rate": 0.0003, "batch_size": 100, "n_t": 5,
                "latent_dim": 32, "generator_loss": "non_saturating"},
      "data": {"n_train": 10000, "n_test": 1000},
      "output_dir": "runs"
    }

Only ``dataset`` and ``variants`` are required.  Each grid cell (variant,
run) gets ``seed = mix(master_seed, CELL, variant_index, run_index)`` and
writes ``<label>_run<NNN>.csv`` plus a ``.gen.json`` snapshot of its best
generator; ``manifest.jsonl`` lists every cell.
"""
from __future__ import annotations

import csv
import itertools
import json
import logging
import os
import threading
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import coevolution as co
from . import datasets, nn, seeding
from .nn import ConfigError
from .stats import SampleSummary, bonferroni, median_iqr, rank_sum_test
from .svg import render_scatter
from .training import TrainConfig

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
MANIFEST = "manifest.jsonl"
WORKERS_ENV = "COEVO_GAN_WORKERS"


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str
    variants: tuple[co.StrategyConfig, ...]
    runs: int = 30
    master_seed: int = 0
    train: TrainConfig = field(default_factory=TrainConfig)
    n_train: int = datasets.N_TRAIN
    n_test: int = datasets.N_TEST
    output_dir: str = "runs"

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "dataset": self.dataset,
            "variants": [_variant_to_dict(v) for v in self.variants],
            "runs": self.runs,
            "master_seed": self.master_seed,
            "train": asdict(self.train),
            "data": {"n_train": self.n_train, "n_test": self.n_test},
            "output_dir": self.output_dir,
        }

    @property
    def data_seed(self) -> int:
        return seeding.mix(self.master_seed, seeding.DATA)

    def split(self) -> datasets.DatasetSplit:
        spec = datasets.get_mixture(self.dataset)
        return datasets.make_split(spec, self.n_train, self.n_test, np.random.default_rng(self.data_seed))

    def cell_seed(self, variant_index: int, run: int) -> int:
        return seeding.mix(self.master_seed, seeding.CELL, variant_index, run)


def _variant_to_dict(v: co.StrategyConfig) -> dict:
    return {"variant": v.variant, "mu": v.mu, "lambda": v.lam, "tournament_size": v.tournament_size,
            "n_e": v.n_e, "budget": v.budget}


_TOP_KEYS = {"schema_version", "dataset", "variants", "runs", "master_seed", "train", "data", "output_dir"}
_VARIANT_KEYS = {"variant", "mu", "lambda", "tournament_size", "n_e", "budget"}
_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
_DATA_KEYS = {"n_train", "n_test"}


def _reject_unknown(d: dict, allowed: set, where: str) -> None:
    extra = sorted(set(d) - allowed)
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(extra)}")


def _int(d: dict, key: str, where: str, default: Any = None, minimum: int | None = None,
         nullable: bool = False):
    if key not in d:
        return default
    v = d[key]
    if v is None and nullable:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where}.{key}: must be >= {minimum}, got {v}")
    return v


def config_from_dict(doc: dict) -> ExperimentConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config: expected a JSON object")
    _reject_unknown(doc, _TOP_KEYS, "config")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"config.schema_version: unsupported version {version!r} (expected {SCHEMA_VERSION})")
    if "dataset" not in doc:
        raise ConfigError("config.dataset: required field missing")
    if doc["dataset"] not in datasets.DATASETS:
        raise ConfigError(f"config.dataset: must be one of {', '.join(datasets.DATASETS)}, got {doc['dataset']!r}")
    raw_variants = doc.get("variants")
    if not isinstance(raw_variants, list) or not raw_variants:
        raise ConfigError("config.variants: required non-empty list")

    variants = []
    for i, v in enumerate(raw_variants):
        where = f"config.variants[{i}]"
        if not isinstance(v, dict):
            raise ConfigError(f"{where}: expected an object")
        _reject_unknown(v, _VARIANT_KEYS, where)
        if "variant" not in v:
            raise ConfigError(f"{where}.variant: required field missing")
        if "mu" not in v:
            raise ConfigError(f"{where}.mu: required field missing")
        try:
            variants.append(co.StrategyConfig(
                variant=v["variant"],
                mu=_int(v, "mu", where, minimum=1),
                lam=_int(v, "lambda", where, nullable=True),
                tournament_size=_int(v, "tournament_size", where, 2, minimum=1),
                n_e=_int(v, "n_e", where, 10, minimum=1),
                budget=_int(v, "budget", where, None, minimum=1, nullable=True),
            ))
        except ConfigError as exc:
            if str(exc).startswith(where):
                raise
            raise ConfigError(f"{where}: {exc}") from None
    labels = [v.label for v in variants]
    if len(set(labels)) != len(labels):
        raise ConfigError("config.variants: duplicate variant entries")

    train_doc = doc.get("train", {})
    if not isinstance(train_doc, dict):
        raise ConfigError("config.train: expected an object")
    _reject_unknown(train_doc, _TRAIN_KEYS, "config.train")
    try:
        train = TrainConfig(**train_doc)
    except (ConfigError, TypeError) as exc:
        raise ConfigError(f"config.train: {exc}") from None
    data_doc = doc.get("data", {})
    if not isinstance(data_doc, dict):
        raise ConfigError("config.data: expected an object")
    _reject_unknown(data_doc, _DATA_KEYS, "config.data")
    n_train = _int(data_doc, "n_train", "config.data", datasets.N_TRAIN, minimum=1)
    n_test = _int(data_doc, "n_test", "config.data", datasets.N_TEST, minimum=1)
    if train.batch_size > n_train:
        raise ConfigError(f"config.train.batch_size: must be <= n_train ({n_train}), got {train.batch_size}")
    output_dir = doc.get("output_dir", "runs")
    if not isinstance(output_dir, str):
        raise ConfigError("config.output_dir: expected a string")
    return ExperimentConfig(
        dataset=doc["dataset"],
        variants=tuple(variants),
        runs=_int(doc, "runs", "config", 30, minimum=1),
        master_seed=_int(doc, "master_seed", "config", 0, minimum=0),
        train=train,
        n_train=n_train,
        n_test=n_test,
        output_dir=output_dir,
    )


def parse_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: config file not found") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    return config_from_dict(doc)


def write_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")


# -- grid execution ------------------------------------------------------------------

@dataclass(frozen=True)
class CellResult:
    variant: str
    run: int
    seed: int
    status: str
    csv_path: str | None
    error: str | None = None

    def to_json(self) -> str:
        d = {"variant": self.variant, "run": self.run, "seed": self.seed, "status": self.status,
             "csv_path": self.csv_path}
        if self.error:
            d["error"] = self.error
        return json.dumps(d)


def cell_stem(variant: co.StrategyConfig, run: int) -> str:
    return f"{variant.label}_run{run:03d}"


def run_cell(cfg: ExperimentConfig, variant_index: int, run: int, out_dir: str | Path) -> CellResult:
    """Run one (variant, run) cell and write its CSV and generator snapshot."""
    variant = cfg.variants[variant_index]
    seed = cfg.cell_seed(variant_index, run)
    out_dir = Path(out_dir)
    stem = cell_stem(variant, run)
    csv_path = out_dir / f"{stem}.csv"
    try:
        result = co.run_strategy(variant, cfg.split(), cfg.train, seed, run_id=run)
        tmp = csv_path.with_suffix(".csv.tmp")
        tmp.write_text(result.record.to_csv())
        nn.save_params(result.best_generator.params, out_dir / f"{stem}.gen.json", metadata={
            "dataset": cfg.dataset, "data_seed": cfg.data_seed, "n_train": cfg.n_train,
            "n_test": cfg.n_test, "seed": seed, "variant": variant.label, "run": run,
        })
        os.replace(tmp, csv_path)
    except Exception as exc:  # a failed cell must not stop the grid
        log.error("cell %s failed: %s", stem, exc)
        return CellResult(variant.label, run, seed, "failed", None,
                          f"{type(exc).__name__}: {exc}\n{traceback.format_exc(limit=3)}")
    return CellResult(variant.label, run, seed, "ok", csv_path.name)


def _cell_task(args) -> CellResult:
    return run_cell(*args)


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return workers


def run_grid(cfg: ExperimentConfig, workers: int | None = None,
             output_dir: str | Path | None = None) -> list[CellResult]:
    """Run every (variant x run) cell; the result does not depend on ``workers``."""
    out_dir = Path(output_dir or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out_dir / "config.json")
    workers = resolve_workers(workers)
    tasks = [(cfg, vi, r, str(out_dir)) for vi in range(len(cfg.variants)) for r in range(cfg.runs)]
    manifest = out_dir / MANIFEST
    manifest.write_text("")
    lock = threading.Lock()
    results: dict[tuple[int, int], CellResult] = {}

    def record(task, res: CellResult) -> None:
        results[(task[1], task[2])] = res
        with lock, manifest.open("a") as fh:
            fh.write(res.to_json() + "\n")
        log.info("cell %s run %d: %s", res.variant, res.run, res.status)

    if workers == 1:
        for task in tasks:
            record(task, _cell_task(task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(_cell_task, t): t for t in tasks}
            for fut in as_completed(futures):
                record(futures[fut], fut.result())

    ordered = [results[(t[1], t[2])] for t in tasks]
    # rewrite in grid order so the manifest is schedule independent
    manifest.write_text("".join(r.to_json() + "\n" for r in ordered))
    return ordered


# -- reporting ----------------------------------------------------------------------

METRICS = ("wd", "entropy", "coverage")


def read_record_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != co.CSV_COLUMNS:
            raise ValueError(f"{path}: not a run record (header mismatch)")
        return list(reader)


@dataclass
class Report:
    # label -> metric -> summary
    summaries: dict[str, dict[str, SampleSummary]]
    # (label_a, label_b, metric, p, p_bonferroni)
    pairwise: list[tuple[str, str, str, float, float]]
    finals: dict[str, dict[str, list[float]]]

    def summary_csv(self) -> str:
        lines = ["variant,n," + ",".join(f"{m}_median,{m}_iqr" for m in METRICS)]
        for label, s in self.summaries.items():
            n = s[METRICS[0]].n
            vals = ",".join(f"{s[m].median!r},{s[m].iqr!r}" for m in METRICS)
            lines.append(f"{label},{n},{vals}")
        return "\n".join(lines) + "\n"

    def pairwise_csv(self) -> str:
        lines = ["variant_a,variant_b,metric,p_value,p_bonferroni"]
        lines += [f"{a},{b},{m},{p!r},{q!r}" for a, b, m, p, q in self.pairwise]
        return "\n".join(lines) + "\n"

    def text(self) -> str:
        labels = list(self.summaries)
        width = max([len("variant")] + [len(l) for l in labels])
        head = f"{'variant':<{width}}  {'n':>3}  " + "  ".join(f"{m:>17}" for m in METRICS)
        out = [head, "-" * len(head)]
        for label in labels:
            s = self.summaries[label]
            out.append(f"{label:<{width}}  {s[METRICS[0]].n:>3}  "
                       + "  ".join(f"{s[m].format():>17}" for m in METRICS))
        if self.pairwise:
            out += ["", "pairwise Wilcoxon rank-sum, Bonferroni-adjusted p:"]
            for a, b, m, p, q in self.pairwise:
                out.append(f"  {a} vs {b} [{m}]: p={p:.4g} adj={q:.4g}")
        return "\n".join(out) + "\n"


def collect_finals(csv_dir: str | Path) -> dict[str, dict[str, list[float]]]:
    """label -> metric -> final values, one per run (runs in file-name order)."""
    finals: dict[str, dict[str, list[float]]] = {}
    for path in sorted(Path(csv_dir).glob("*.csv")):
        try:
            rows = read_record_csv(path)
        except ValueError:
            continue
        for row in rows:
            if row["generation"] != "final":
                continue
            mu, lam = int(row["mu"]), int(row["lambda"])
            label = (f"mg_md_mu{mu}" if row["variant"] == "mg_md"
                     else f"{row['variant']}_mu{mu}_lam{lam}")
            slot = finals.setdefault(label, {m: [] for m in METRICS})
            for m in METRICS:
                slot[m].append(float(row[m]))
    return finals


def build_report(finals: dict[str, dict[str, list[float]]]) -> Report:
    if not finals:
        raise ValueError("no run records found")
    summaries = {label: {m: median_iqr(vals[m]) for m in METRICS} for label, vals in finals.items()}
    pairs = list(itertools.combinations(finals, 2))
    raw = []
    for a, b in pairs:
        for m in METRICS:
            x, y = finals[a][m], finals[b][m]
            p = rank_sum_test(x, y) if len(x) >= 2 and len(y) >= 2 else float("nan")
            raw.append((a, b, m, p))
    adjusted = []
    for m in METRICS:
        ps = [p for a, b, mm, p in raw if mm == m]
        adjusted.append(dict(zip([(a, b) for a, b, mm, _ in raw if mm == m], bonferroni(ps, len(pairs)))))
    pairwise = [(a, b, m, p, adjusted[METRICS.index(m)][(a, b)]) for a, b, m, p in raw]
    return Report(summaries, pairwise, finals)


def report(csv_dir: str | Path, out_dir: str | Path | None = None) -> Report:
    """Aggregate the final rows of every record CSV in ``csv_dir``."""
    csv_dir = Path(csv_dir)
    if not csv_dir.is_dir():
        raise FileNotFoundError(f"{csv_dir}: not a directory")
    rep = build_report(collect_finals(csv_dir))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(rep.summary_csv())
        (out / "pairwise.csv").write_text(rep.pairwise_csv())
        (out / "report.txt").write_text(rep.text())
    return rep


# -- plots ----------------------------------------------------------------------------

def plot_run(csv_path: str | Path, svg_path: str | Path) -> Path:
    """Scatter the final best generator of a run (from its snapshot) over the test split."""
    csv_path = Path(csv_path)
    snap = csv_path.with_suffix(".gen.json")
    if not snap.exists():
        raise FileNotFoundError(f"{snap}: generator snapshot missing")
    gen, meta = nn.load_params(snap)
    spec = datasets.get_mixture(meta["dataset"])
    split = datasets.make_split(spec, meta["n_train"], meta["n_test"], np.random.default_rng(meta["data_seed"]))
    rng = seeding.stream(meta["seed"], seeding.METRICS, co.FINAL)
    samples = nn.forward(gen, rng.standard_normal((meta["n_test"], gen.in_dim)))
    return render_scatter(split.test, samples, svg_path, title=f"{meta['variant']} run {meta['run']}")


def preview_dataset(name: str, out_dir: str | Path, seed: int = 0,
                    n_train: int = datasets.N_TRAIN, n_test: int = datasets.N_TEST) -> tuple[Path, Path]:
    """Write the split as CSV (split,x,y,mode_index) and as an SVG scatter."""
    spec = datasets.get_mixture(name)
    split = datasets.make_split(spec, n_train, n_test, np.random.default_rng(seeding.mix(seed, seeding.DATA)))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{name}.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["split", "x", "y", "mode_index"])
        for tag, pts, modes in (("train", split.train, split.train_modes), ("test", split.test, split.test_modes)):
            for (x, y), m in zip(pts, modes):
                w.writerow([tag, repr(float(x)), repr(float(y)), int(m)])
    svg_path = render_scatter(split.train, split.test, out / f"{name}.svg", title=name)
    return csv_path, svg_path
