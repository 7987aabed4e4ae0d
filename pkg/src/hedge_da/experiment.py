"""Head-to-head experiments: tapes, variant runs, certificates and reports."""

from __future__ import annotations

import csv
import dataclasses
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import engine
from .bounds import BoundReport, certify
from .errors import ConfigError, ParseError
from .simulation import (LossTape, MarketModel, RngSeed, ShiftSchedule, default_perturb_ranges,
                         format_tape_csv, read_tape_csv, sample_losses)
from .variants import VARIANTS, make_schedule

BEST = "best"


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 30
    T: int = 3120
    period: int = 780
    runs: int = 10
    seed: int = 0
    flip_probs: tuple = (0.5, 0.75, 1.0)
    perturb_low: float = 1.0
    perturb_high: float = 1.5
    perturb_step: float = 0.25
    drift: float = 1e-3
    mean_range: float = 0.03
    cov_scale: float = 0.01
    variants: tuple = VARIANTS
    a_star: float = 1.0
    stride: int = 10
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "flip_probs", tuple(float(p) for p in self.flip_probs))
        object.__setattr__(self, "variants", tuple(self.variants))
        if self.T < 1 or self.n < 2 or self.runs < 1 or self.period < 1:
            raise ConfigError("need T >= 1, n >= 2, runs >= 1 and period >= 1")
        if self.stride < 1 or self.workers < 1:
            raise ConfigError("stride and workers must be at least 1")
        if not self.variants:
            raise ConfigError("variant list is empty")
        unknown = [v for v in self.variants if v not in VARIANTS]
        if unknown:
            raise ConfigError(f"unknown variants {unknown}; choose from {', '.join(VARIANTS)}")
        if len(set(self.variants)) != len(self.variants):
            raise ConfigError("variant list has duplicates")
        if not self.a_star > 0:
            raise ConfigError("a_star must be positive")

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def market(self) -> MarketModel:
        return MarketModel.synthetic(self.n, self.seed, self.mean_range, self.cov_scale)

    def shifts(self) -> ShiftSchedule:
        count = max(len(self.flip_probs), 1)
        return ShiftSchedule(
            self.period, self.flip_probs,
            default_perturb_ranges(count, self.perturb_low, self.perturb_high, self.perturb_step),
            (self.drift,))

    def snapshot_steps(self):
        steps = list(range(self.period, self.T + 1, self.period))
        if not steps or steps[-1] != self.T:
            steps.append(self.T)
        return steps

    def sample_steps(self):
        steps = list(range(self.stride, self.T + 1, self.stride))
        if not steps or steps[-1] != self.T:
            steps.append(self.T)
        return steps


# -- config files --------------------------------------------------------------

def _convert(name: str, raw: str):
    kind = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}.get(name)
    if kind is None:
        raise ConfigError(f"unknown config key {name!r}")
    raw = raw.strip()
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if name == "flip_probs":
            return tuple(float(v) for v in raw.split(",") if v.strip())
        if name == "variants":
            return tuple(v.strip() for v in raw.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None
    return raw


def parse_config_text(text: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"expected 'key = value', got {line!r}", line=lineno)
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        try:
            values[key] = _convert(key, raw)
        except ConfigError as exc:
            raise ParseError(str(exc), line=lineno) from None
    return values


def load_config(path=None, **overrides) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text(encoding="utf-8")) if path else {}
    values.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**values)


def format_kv(pairs) -> str:
    return "".join(f"{k} = {v}\n" for k, v in pairs)


def read_kv(path) -> dict:
    out = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


# -- tapes ----------------------------------------------------------------------

def generate_tape(config: ExperimentConfig, replication: int) -> LossTape:
    return sample_losses(config.market(), config.shifts(), config.T, RngSeed(config.seed, replication))


def tape_name(replication: int) -> str:
    return f"tape_{replication:03d}.csv"


def cmd_generate(config: ExperimentConfig, out=None):
    """Write one loss CSV per replication and ``manifest.txt``; returns the paths."""
    out = Path(out or config.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = [("seed", config.seed), ("n", config.n), ("T", config.T), ("period", config.period),
                ("runs", config.runs), ("flip_probs", ",".join(repr(p) for p in config.flip_probs)),
                ("mean_range", repr(config.mean_range)), ("cov_scale", repr(config.cov_scale)),
                ("drift", repr(config.drift)), ("generator", "philox4x64/box-muller")]
    paths = []
    for r in range(config.runs):
        tape = generate_tape(config, r)
        name = tape_name(r)
        (out / name).write_text(format_tape_csv(tape.losses), encoding="utf-8", newline="\n")
        paths.append(out / name)
        manifest += [(f"{name}.stream", r), (f"{name}.mu", repr(tape.mu)), (f"{name}.rho", repr(tape.rho))]
    manifest_path = out / "manifest.txt"
    manifest_path.write_text(format_kv(manifest), encoding="utf-8", newline="\n")
    return paths, manifest_path


# -- runs -----------------------------------------------------------------------

@dataclass
class ReplicationResult:
    index: int
    mu: float
    rho: float
    step_losses: dict                 # variant -> (T,) array of <l_t, x_t>
    product_cumulative: np.ndarray    # (T, n) cumulative losses per product
    certificates: list


def run_tape(tape: LossTape, variants: Sequence[str], a_star: float = 1.0, index: int = 0) -> ReplicationResult:
    """Every variant on one tape, tuned with the tape's realized bounds."""
    bounds = tape.bounds()
    step_losses, certificates = {}, []
    for variant in variants:
        schedule = make_schedule(variant, tape.n, bounds, tape.T, a_star)
        ledger, _ = engine.run(schedule, tape.oracle(), tape.T, bounds.mu, bounds.rho, record_every=1)
        step_losses[variant] = np.array([rec.step_loss for rec in ledger.history])
        certificates.append(certify(ledger, schedule, tape.T, tape.n, bounds))
    return ReplicationResult(index, bounds.mu, bounds.rho, step_losses,
                             np.cumsum(tape.losses, axis=0), certificates)


def _replicate(args):
    config, r = args
    return run_tape(generate_tape(config, r), config.variants, config.a_star, r)


@dataclass
class ComparisonReport:
    """Averaged running losses ``sum_{k<=t} <l_{k-1}, x_{k-1}> / t`` per series."""

    steps: np.ndarray                     # sampled t, 1-based
    series: dict                          # name -> values at ``steps``; includes BEST
    snapshot_steps: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    certificates: list = field(default_factory=list)   # (replication, BoundReport)
    mu: float = math.nan
    rho: float = math.nan
    n: Optional[int] = None
    runs: int = 0

    @property
    def variants(self):
        return [name for name in self.series if name != BEST]

    def final_percent_of_best(self, name: str) -> float:
        best = self.snapshots[BEST][-1]
        return 100.0 * self.snapshots[name][-1] / best if best != 0 else math.nan


def aggregate(results: Sequence[ReplicationResult], variants: Sequence[str], sample_steps, snapshot_steps) -> ComparisonReport:
    """Average replications (folded in index order) and sample the curves.

    The best-product curve is the running minimum over products of the
    cross-replication average of each product's running loss.
    """
    results = sorted(results, key=lambda r: r.index)
    T = results[0].product_cumulative.shape[0]
    t = np.arange(1, T + 1, dtype=float)
    count = len(results)
    full = {}
    for v in variants:
        total = np.zeros(T)
        for res in results:
            total += np.cumsum(res.step_losses[v])
        full[v] = total / count / t
    product_total = np.zeros_like(results[0].product_cumulative)
    for res in results:
        product_total += res.product_cumulative
    full[BEST] = (product_total / count).min(axis=1) / t

    idx = np.asarray(sample_steps) - 1
    snap = np.asarray(snapshot_steps) - 1
    return ComparisonReport(
        steps=np.asarray(sample_steps),
        series={name: values[idx] for name, values in full.items()},
        snapshot_steps=list(snapshot_steps),
        snapshots={name: values[snap].tolist() for name, values in full.items()},
        certificates=[(res.index, rep) for res in results for rep in res.certificates],
        mu=float(np.mean([r.mu for r in results])),
        rho=float(np.mean([r.rho for r in results])),
        n=results[0].product_cumulative.shape[1],
        runs=count,
    )


def run_experiment(config: ExperimentConfig, tapes: Optional[Sequence[LossTape]] = None) -> ComparisonReport:
    """Run every configured variant on each replication and aggregate."""
    if tapes is not None:
        if not tapes or any(tape.T != tapes[0].T for tape in tapes):
            raise ConfigError("need at least one tape, all of the same length")
        config = config.replace(T=tapes[0].T)
        results = [run_tape(tape, config.variants, config.a_star, i) for i, tape in enumerate(tapes)]
    else:
        jobs = [(config, r) for r in range(config.runs)]
        if config.workers > 1:
            with ProcessPoolExecutor(max_workers=config.workers) as pool:
                results = list(pool.map(_replicate, jobs))
        else:
            results = [_replicate(job) for job in jobs]
    return aggregate(results, config.variants, config.sample_steps(), config.snapshot_steps())


# -- report files ----------------------------------------------------------------

def format_trajectories(report: ComparisonReport) -> str:
    names = report.variants + [BEST]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + names)
    for k, t in enumerate(report.steps):
        writer.writerow([int(t)] + [repr(float(report.series[name][k])) for name in names])
    return buf.getvalue()


def read_trajectories(path) -> ComparisonReport:
    rows = list(csv.reader(io.StringIO(Path(path).read_text(encoding="utf-8"))))
    if len(rows) < 2 or rows[0][0] != "t":
        raise ParseError("trajectory file needs a 't,...' header and at least one row", line=1)
    names = rows[0][1:]
    try:
        data = np.array([[float(c) for c in row] for row in rows[1:] if row])
    except ValueError as exc:
        raise ParseError(f"non-numeric cell ({exc})") from None
    return ComparisonReport(steps=data[:, 0].astype(int),
                            series={name: data[:, k + 1] for k, name in enumerate(names)})


LABELS = {
    BEST: "Best investment product",
    "original": "Original Hedge",
    "optimal": "Optimal Hedge",
    "time-independent": "Optimal Time-Independent Hedge",
    "aggressive": "Optimal Aggressive Hedge",
}


def format_summary(report: ComparisonReport) -> str:
    head = ["Method"] + [f"t = {t}" for t in report.snapshot_steps] + ["final w.r.t. best product"]
    lines = [
        "# Averaged losses, cumulative from t = 1",
        "",
        f"{report.n} investment products, {report.runs} replications, "
        f"mean realized mu = {report.mu:.4f}, rho = {report.rho:.4f}",
        "",
        "| " + " | ".join(head) + " |",
        "|" + "---|" + "---:|" * (len(head) - 1),
    ]
    for name in [BEST] + report.variants:
        cells = [LABELS.get(name, name)] + [f"{v:.4f}" for v in report.snapshots[name]]
        cells.append("-" if name == BEST else f"{report.final_percent_of_best(name):.1f}%")
        lines.append("| " + " | ".join(cells) + " |")
    lines += ["", "## Regret certificates", "",
              "| Method | satisfied | worst regret / bound |", "|---|---:|---:|"]
    for name in report.variants:
        reps = [rep for _, rep in report.certificates if rep.variant == name]
        ok = sum(rep.satisfied for rep in reps)
        worst = max(rep.empirical_regret / rep.generic_rhs for rep in reps)
        lines.append(f"| {LABELS.get(name, name)} | {ok}/{len(reps)} | {worst:.3f} |")
    return "\n".join(lines) + "\n"


def format_certificates(report: ComparisonReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["replication", "variant", "empirical_regret", "generic_rhs", "closed_form", "satisfied"])
    for r, rep in report.certificates:
        writer.writerow([r, rep.variant, repr(rep.empirical_regret), repr(rep.generic_rhs),
                         repr(rep.closed_form), str(rep.satisfied).lower()])
    return buf.getvalue()


def write_report(report: ComparisonReport, out) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "trajectories": (out / "trajectories.csv", format_trajectories(report)),
        "summary": (out / "summary.md", format_summary(report)),
        "certificates": (out / "certificates.csv", format_certificates(report)),
    }
    for path, text in files.values():
        path.write_text(text, encoding="utf-8", newline="\n")
    return {key: path for key, (path, _) in files.items()}


PLOT_SCRIPT = '''"""Plot averaged losses from {data}.  Generated by hedge-da emit-plot."""
import csv
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

STYLES = {{
    "best": dict(color="k", lw=2.5, ls="-"),
    "original": dict(color="k", lw=2.5, ls="--"),
    "optimal": dict(color="k", lw=1.2, ls=":"),
    "time-independent": dict(color="k", lw=1.0, ls="--"),
    "aggressive": dict(color="k", lw=1.2, ls="-."),
}}

series = defaultdict(lambda: ([], []))
with open("{data}", newline="") as fh:
    for row in csv.DictReader(fh):
        ts, vs = series[row["series"]]
        ts.append(int(row["t"]))
        vs.append(float(row["value"]))

fig, ax = plt.subplots(figsize=(7, 4.3))
for name, (ts, vs) in series.items():
    ax.plot(ts, vs, label=name, **STYLES.get(name, {{}}))
ax.set_xlabel("t")
ax.set_ylabel("averaged loss")
ax.legend(frameon=False)
fig.tight_layout()
fig.savefig("{figure}", dpi=150)
'''


def emit_plot_data(report: ComparisonReport, out, figure: str = "averaged_losses.png"):
    """Long-format ``t,series,value`` CSV plus a matplotlib script that plots it.

    Nothing is rendered here; run the script to draw the figure.
    """
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "series", "value"])
    for name in report.variants + [BEST]:
        for t, v in zip(report.steps, report.series[name]):
            writer.writerow([int(t), name, repr(float(v))])
    data_path = out / "plot_data.csv"
    script_path = out / "plot_losses.py"
    data_path.write_text(buf.getvalue(), encoding="utf-8", newline="\n")
    script_path.write_text(PLOT_SCRIPT.format(data=data_path.name, figure=figure), encoding="utf-8", newline="\n")
    return data_path, script_path


def load_tapes(paths) -> list:
    return [LossTape(read_tape_csv(p)) for p in paths]
