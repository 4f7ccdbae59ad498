"""Scenario presets, multi-run harness and CSV / plot-data output."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .analysis import ConvergenceMeasure, convergence_time, optimal_allocation
from .env import SimConfig, simulate_batch
from .errors import CoinbarError, ConfigError, OutputError, UsageError
from .state import WorldParams
from .utilities import PhiKind, RewardKind

UNIFORM = (1.0,) * 7
ONE_NIGHT = (0.0, 0.0, 0.0, 7.0, 0.0, 0.0, 0.0)
LATE_WEEKS = 200


@dataclass(frozen=True)
class Scenario:
    name: str
    config: SimConfig = field(default_factory=SimConfig)
    runs: int = 50
    sweep: tuple[int, ...] | None = None

    def __post_init__(self):
        if not self.name or any(c.isspace() or c in "/\\," for c in self.name):
            raise ConfigError(f"scenario name {self.name!r} must be non-empty without spaces, commas or slashes")
        if int(self.runs) != self.runs or self.runs < 1:
            raise ConfigError(f"runs must be a positive integer, got {self.runs}")
        object.__setattr__(self, "runs", int(self.runs))
        if self.sweep is not None:
            sweep = tuple(int(n) for n in self.sweep)
            if not sweep or min(sweep) < 1:
                raise ConfigError(f"sweep must be a non-empty list of positive agent counts, got {self.sweep}")
            object.__setattr__(self, "sweep", sweep)

    @property
    def seeds(self) -> list[int]:
        s = self.config.seed
        if s + self.runs > 2**64:
            raise ConfigError("seed + runs overflows the 64-bit seed range")
        return [s + i for i in range(self.runs)]


@dataclass(eq=False)
class ExperimentRecord:
    scenario: str
    reward_kind: RewardKind
    seeds: tuple[int, ...]
    per_run: np.ndarray               # (R, T) world reward of every run
    final_attendance: np.ndarray      # (R, K)
    convergence: ConvergenceMeasure | None
    wall_time: float
    N: int
    optimum: float | None = None

    @property
    def mean_world_reward(self) -> np.ndarray:
        return self.per_run.mean(axis=0)

    @property
    def weeks(self) -> int:
        return self.per_run.shape[1]

    def late_mean(self, weeks: int = LATE_WEEKS) -> float:
        return float(self.mean_world_reward[-weeks:].mean())

    def normalized_late_mean(self, weeks: int = LATE_WEEKS) -> float:
        if not self.optimum:
            raise UsageError(f"record {self.scenario} has no optimum to normalize by")
        return self.late_mean(weeks) / self.optimum

    def __eq__(self, other):
        if not isinstance(other, ExperimentRecord):
            return NotImplemented
        return (self.scenario == other.scenario and self.reward_kind == other.reward_kind
                and self.seeds == other.seeds and self.N == other.N
                and np.array_equal(self.per_run, other.per_run)
                and np.array_equal(self.final_attendance, other.final_attendance)
                and self.convergence == other.convergence and self.optimum == other.optimum)


class ScenarioAborted(CoinbarError):
    """A run failed; ``partial`` holds the runs that completed, if any."""

    category = "simulation"

    def __init__(self, message, partial: ExperimentRecord | None = None):
        super().__init__(message)
        self.partial = partial


# -- presets -------------------------------------------------------------------

def _preset(name, alpha, kind, weeks, sweep=None) -> Scenario:
    config = SimConfig(world=WorldParams(alpha=alpha), reward_kind=kind, weeks=weeks)
    return Scenario(name, config, runs=50, sweep=sweep)


def _build_presets() -> dict[str, list[Scenario]]:
    groups = {
        "fig1-left": dict(alpha=ONE_NIGHT, weeks=8000),
        "fig1-right": dict(alpha=UNIFORM, weeks=8000),
        "fig2": dict(alpha=UNIFORM, weeks=2000),
        "fig3": dict(alpha=ONE_NIGHT, weeks=2000, sweep=(42, 84, 168, 336)),
    }
    presets = {}
    for group, kw in groups.items():
        members = [_preset(f"{group}-{k.value}", kind=k, **kw) for k in (RewardKind.WL, RewardKind.G, RewardKind.UD)]
        presets[group] = members
        for s in members:
            presets[s.name] = [s]
    return presets


PRESETS = _build_presets()

PRESET_NOTES = {
    "fig1-left": "one-night alpha, 8000 weeks, 50 runs",
    "fig1-right": "uniform alpha, 8000 weeks, 50 runs",
    "fig2": "uniform alpha, 2000 weeks, 50 runs; attendance histograms",
    "fig3": "one-night alpha, 2000 weeks, 50 runs; N in 42, 84, 168, 336",
}


def preset(name: str) -> list[Scenario]:
    try:
        return list(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None


# -- running -------------------------------------------------------------------

def thread_limit() -> int:
    raw = os.environ.get("COINBAR_THREADS", "").strip()
    if not raw:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"COINBAR_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"COINBAR_THREADS must be a positive integer, got {raw!r}")
    return n


def _chunks(seeds: list[int], parts: int) -> list[list[int]]:
    size = math.ceil(len(seeds) / parts)
    return [seeds[i:i + size] for i in range(0, len(seeds), size)]


def _optimum(world: WorldParams, phi_kind: PhiKind) -> float | None:
    if phi_kind is not PhiKind.EXPONENTIAL:
        return None
    return optimal_allocation(world)[1]


def run_scenario(s: Scenario, threads: int | None = None) -> ExperimentRecord:
    """Run seeds ``seed .. seed+runs-1`` and collect their world-reward series.

    Runs are split into chunks that may execute on worker threads.  Results
    are reassembled in seed order, and every run is independent of the
    chunking, so the record does not depend on the thread count.
    """
    start = time.perf_counter()
    seeds = s.seeds
    threads = thread_limit() if threads is None else max(1, int(threads))
    chunks = _chunks(seeds, min(threads, len(seeds)))
    results = [None] * len(chunks)
    failure = None
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        futures = [pool.submit(simulate_batch, s.config, chunk) for chunk in chunks]
        for i, fut in enumerate(futures):
            try:
                results[i] = fut.result()
            except CoinbarError as exc:
                failure = failure or exc
    done = [r for r in results if r is not None]
    record = None
    if done:
        per_run = np.concatenate([r.world_reward for r in done])
        conv = None
        if s.config.weeks >= 200:
            conv = convergence_time(per_run.mean(axis=0))
        record = ExperimentRecord(
            scenario=s.name,
            reward_kind=s.config.reward_kind,
            seeds=tuple(x for r in done for x in r.seeds),
            per_run=per_run,
            final_attendance=np.concatenate([r.final_attendance for r in done]),
            convergence=conv,
            wall_time=time.perf_counter() - start,
            N=s.config.world.N,
            optimum=_optimum(s.config.world, s.config.phi_kind),
        )
    if failure is not None:
        raise ScenarioAborted(f"scenario {s.name} aborted: {failure}", record) from failure
    return record


def run_sweep(s: Scenario, threads: int | None = None) -> list[ExperimentRecord]:
    """One record per agent count in ``s.sweep``, each carrying its DP optimum."""
    if not s.sweep:
        raise UsageError(f"scenario {s.name} has no sweep")
    out = []
    for N in s.sweep:
        config = s.config.evolve(world=s.config.world.with_agents(N))
        out.append(run_scenario(replace(s, name=f"{s.name}-N{N}", config=config, sweep=None), threads))
    return out


# -- output --------------------------------------------------------------------

CSV_HEADER = "scenario,reward_kind,seed,week,mean_world_reward"
ATTENDANCE_HEADER = "scenario,reward_kind,seed,night,count"


def _fmt(x: float) -> str:
    return format(float(x), ".9g")


def _write(path: Path, text: str):
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n", encoding="ascii") as fh:
            fh.write(text)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _csv_text(records) -> tuple[str, str]:
    rows, att = [CSV_HEADER], [ATTENDANCE_HEADER]
    for r in records:
        kind = RewardKind.parse(r.reward_kind).value
        for seed, series, counts in zip(r.seeds, r.per_run, r.final_attendance):
            rows.extend(f"{r.scenario},{kind},{seed},{t},{_fmt(v)}" for t, v in enumerate(series))
            att.extend(f"{r.scenario},{kind},{seed},{k},{int(c)}" for k, c in enumerate(counts))
    return "\n".join(rows) + "\n", "\n".join(att) + "\n"


def emit_csv(records: Sequence[ExperimentRecord], destination) -> list[Path]:
    """Write per-week world rewards and final attendance histograms.

    A destination ending in ``.csv`` receives every record, with the
    histograms in ``<stem>_attendance.csv`` beside it.  Any other
    destination is a directory that gets ``<scenario>.csv`` and
    ``<scenario>_attendance.csv`` per scenario.  Each run has one row per
    week, ordered by seed and then week.
    """
    dest = Path(destination)
    if dest.suffix == ".csv":
        groups = {dest: list(records)}
    else:
        groups = {}
        for r in records:
            groups.setdefault(dest / f"{r.scenario}.csv", []).append(r)
    written = []
    for path, recs in groups.items():
        main, att = _csv_text(recs)
        companion = path.with_name(path.stem + "_attendance.csv")
        _write(path, main)
        _write(companion, att)
        written += [path, companion]
    return written


def emit_plot_data(records: Sequence[ExperimentRecord], destination, svg: bool = False) -> list[Path]:
    """Whitespace-separated curves for external plotting.

    ``<dest>`` (``plot.dat`` inside a directory destination) holds a week
    column followed by one cross-run mean column per record.
    ``<stem>_attendance.dat`` holds one ``night count`` block per record,
    giving the mean final attendance.  With ``svg`` a line chart is also
    rendered to ``<stem>.svg``.
    """
    records = list(records)
    if not records:
        raise UsageError("no records to plot")
    weeks = {r.weeks for r in records}
    if len(weeks) != 1:
        raise UsageError(f"records must share the weeks setting, got {sorted(weeks)}")
    dest = Path(destination)
    if dest.suffix != ".dat":
        dest = dest / "plot.dat"
    labels = [f"{r.scenario}:{RewardKind.parse(r.reward_kind).value}" for r in records]
    means = np.stack([r.mean_world_reward for r in records], axis=1)
    lines = ["# week " + " ".join(labels)]
    lines += [f"{t} " + " ".join(_fmt(v) for v in row) for t, row in enumerate(means)]
    _write(dest, "\n".join(lines) + "\n")

    blocks = []
    for label, r in zip(labels, records):
        counts = r.final_attendance.mean(axis=0)
        blocks.append("\n".join([f"# {label}", "# night count"] + [f"{k} {_fmt(c)}" for k, c in enumerate(counts)]))
    att = dest.with_name(dest.stem + "_attendance.dat")
    _write(att, "\n\n\n".join(blocks) + "\n")
    written = [dest, att]
    if svg:
        written.append(_render_svg(dest.with_suffix(".svg"), labels, means))
    return written


def _render_svg(path: Path, labels, means) -> Path:
    try:
        import matplotlib
        matplotlib.use("svg")
        import matplotlib.pyplot as plt
    except ImportError as exc:
        raise UsageError("SVG output needs matplotlib (pip install 'artifact[plot]')") from exc
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, col in zip(labels, means.T):
        ax.plot(np.arange(len(col)), col, label=label, linewidth=1)
    ax.set_xlabel("week")
    ax.set_ylabel("mean world reward")
    ax.legend(fontsize="small")
    fig.tight_layout()
    # Fixed metadata keeps the file byte-stable across reruns.
    matplotlib.rcParams["svg.hashsalt"] = "coinbar"
    try:
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    finally:
        plt.close(fig)
    return path
