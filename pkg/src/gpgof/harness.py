"""Monte Carlo size and power experiments.

A cell is one ``(alternative, n)`` pair.  For each of its ``N`` replicates a
dataset is drawn from the alternative and bootstrap-tested against the null
family with every requested statistic (the statistics share the dataset and
the bootstrap resamples).  All randomness hangs off ``master_seed`` through
per-(alternative, n, replicate) substreams, so a run is reproducible and
independent of how replicates are spread over worker processes.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .alternatives import AlternativeSpec, sample_alt
from .bootstrap import ALL_STATISTICS, bootstrap_tests, statistic_name
from .families import DomainError, EstimationError, FamilySpec
from .rng import stable_key, substream
from .statistic import WeightDiagnostics, diagnostics

log = logging.getLogger(__name__)

FAILURE_FLAG_FRACTION = 0.10


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class SimConfig:
    null_spec: FamilySpec
    alternatives: tuple[AlternativeSpec, ...]
    n_values: tuple[int, ...]
    statistics: tuple[str, ...] = ALL_STATISTICS
    mc_replicates: int = 1000
    bootstrap_cycles: int = 750
    alpha: float = 0.05
    master_seed: int = 0

    def __post_init__(self):
        if self.mc_replicates < 1:
            raise ConfigError("replicates", "must be >= 1")
        if self.bootstrap_cycles < 1:
            raise ConfigError("bootstrap", "must be >= 1")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha", "must lie in (0, 1)")
        if not self.alternatives:
            raise ConfigError("alternatives", "at least one alternative is required")
        if not self.n_values or any(n < 2 for n in self.n_values):
            raise ConfigError("n", "sample sizes must be >= 2")
        for s in self.statistics:
            try:
                statistic_name(s)
            except ValueError as exc:
                raise ConfigError("statistics", str(exc)) from None

    @classmethod
    def from_ini(cls, text: str) -> "SimConfig":
        """Parse an ``[experiment]`` section; alternatives separated by ``;`` or newlines."""
        parser = configparser.ConfigParser()
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError("file", str(exc).splitlines()[0]) from None
        if not parser.has_section("experiment"):
            raise ConfigError("experiment", "missing [experiment] section")
        sec = parser["experiment"]
        known = {"null", "alternatives", "n", "statistics", "replicates", "bootstrap", "alpha", "seed"}
        for key in sec:
            if key not in known:
                raise ConfigError(key, "unknown key")

        def need(key):
            if key not in sec or not sec[key].strip():
                raise ConfigError(key, "missing")
            return sec[key]

        def number(key, kind, default=None):
            if key not in sec:
                if default is None:
                    raise ConfigError(key, "missing")
                return default
            try:
                return kind(sec[key])
            except ValueError:
                raise ConfigError(key, f"not a valid {kind.__name__}: {sec[key]!r}") from None

        try:
            null = FamilySpec.parse(need("null"))
        except DomainError as exc:
            raise ConfigError("null", str(exc)) from None
        alts = []
        for tok in need("alternatives").replace("\n", ";").split(";"):
            if tok.strip():
                try:
                    alts.append(AlternativeSpec.parse(tok))
                except DomainError as exc:
                    raise ConfigError("alternatives", str(exc)) from None
        n_text = need("n")
        try:
            n_values = tuple(int(t) for t in n_text.split(",") if t.strip())
        except ValueError:
            raise ConfigError("n", f"not a list of integers: {n_text!r}") from None
        stats = ALL_STATISTICS
        if "statistics" in sec and sec["statistics"].strip().lower() != "all":
            stats = tuple(t.strip().lower() for t in sec["statistics"].split(",") if t.strip())
        return cls(
            null_spec=null,
            alternatives=tuple(alts),
            n_values=n_values,
            statistics=stats,
            mc_replicates=number("replicates", int, 1000),
            bootstrap_cycles=number("bootstrap", int, 750),
            alpha=number("alpha", float, 0.05),
            master_seed=number("seed", int, 0),
        )

    def to_ini(self) -> str:
        return (
            "[experiment]\n"
            f"null = {self.null_spec}\n"
            f"alternatives = {'; '.join(a.descriptor for a in self.alternatives)}\n"
            f"n = {', '.join(str(n) for n in self.n_values)}\n"
            f"statistics = {', '.join(self.statistics)}\n"
            f"replicates = {self.mc_replicates}\n"
            f"bootstrap = {self.bootstrap_cycles}\n"
            f"alpha = {self.alpha!r}\n"
            f"seed = {self.master_seed}\n"
        )


@dataclass
class CellResult:
    alternative: str
    n: int
    rejections: dict[str, int]
    valid: int
    failures: int
    degenerate: int
    p_values: dict[str, np.ndarray] = field(repr=False)

    def fraction(self, stat: str) -> float:
        return self.rejections[stat] / self.valid if self.valid else float("nan")

    def pct(self, stat: str) -> float:
        return 100.0 * self.fraction(stat)

    @property
    def flagged(self) -> bool:
        return self.failures > FAILURE_FLAG_FRACTION * (self.valid + self.failures)


@dataclass
class SimResult:
    config: SimConfig
    cells: dict[tuple[str, int], CellResult]
    elapsed: dict[tuple[str, int], float] = field(default_factory=dict)

    def pct(self, alternative, n: int, stat: str) -> float:
        key = alternative.descriptor if isinstance(alternative, AlternativeSpec) else alternative
        return self.cells[(key, n)].pct(stat)

    def rows(self):
        for (alt, n), cell in self.cells.items():
            for stat in self.config.statistics:
                yield alt, n, stat, cell

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["alternative", "n", "statistic", "rejection_pct", "failures"])
        for alt, n, stat, cell in self.rows():
            pct = cell.pct(stat)
            w.writerow([alt, n, stat, "" if np.isnan(pct) else int(round(pct)), cell.failures])
        return buf.getvalue()

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "config": {
                "null": str(cfg.null_spec),
                "alternatives": [a.descriptor for a in cfg.alternatives],
                "n": list(cfg.n_values),
                "statistics": list(cfg.statistics),
                "replicates": cfg.mc_replicates,
                "bootstrap": cfg.bootstrap_cycles,
                "alpha": cfg.alpha,
                "seed": cfg.master_seed,
            },
            "cells": [
                {
                    "alternative": alt,
                    "n": n,
                    "statistic": stat,
                    "rejections": cell.rejections[stat],
                    "valid": cell.valid,
                    "rejection_fraction": cell.fraction(stat) if cell.valid else None,
                    "rejection_pct": int(round(cell.pct(stat))) if cell.valid else None,
                    "failures": cell.failures,
                    "degenerate_bootstrap_fits": cell.degenerate,
                    "flagged": cell.flagged,
                }
                for alt, n, stat, cell in self.rows()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out / "results.csv", out / "results.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(self.to_json())
        return csv_path, json_path


def _bootstrap_seed(master: int, alt_key: int, n: int, rep: int) -> int:
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=(alt_key, n, rep, 1))
    return int(ss.generate_state(2, np.uint64)[0] >> np.uint64(1))


def run_replicate(config: SimConfig, alt: AlternativeSpec, n: int, rep: int):
    """One dataset: ``(p_values by statistic, degenerate fits)`` or ``None`` on failure."""
    alt_key = stable_key(alt.descriptor)
    data = sample_alt(alt, n, substream(config.master_seed, alt_key, n, rep, 0))
    try:
        res = bootstrap_tests(
            data,
            config.null_spec,
            config.statistics,
            b=config.bootstrap_cycles,
            alpha=config.alpha,
            seed=_bootstrap_seed(config.master_seed, alt_key, n, rep),
        )
    except EstimationError:
        return None
    return {k: r.p_value for k, r in res.items()}, next(iter(res.values())).degenerate_replicates


def _run_chunk(args):
    config, alt, n, start, stop = args
    return [run_replicate(config, alt, n, rep) for rep in range(start, stop)]


def run_experiment(config: SimConfig, workers: int = 1, chunk: int = 25) -> SimResult:
    """Run every ``(alternative, n)`` cell of ``config``."""
    cells = {}
    elapsed = {}
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for alt in config.alternatives:
            for n in config.n_values:
                t0 = time.perf_counter()
                N = config.mc_replicates
                jobs = [(config, alt, n, s, min(s + chunk, N)) for s in range(0, N, chunk)]
                parts = pool.map(_run_chunk, jobs) if pool else map(_run_chunk, jobs)
                outcomes = [o for part in parts for o in part]
                ok = [o for o in outcomes if o is not None]
                pvals = {s: np.array([o[0][s] for o in ok]) for s in config.statistics}
                cells[(alt.descriptor, n)] = CellResult(
                    alternative=alt.descriptor,
                    n=n,
                    rejections={s: int(np.count_nonzero(pvals[s] <= config.alpha)) for s in config.statistics},
                    valid=len(ok),
                    failures=len(outcomes) - len(ok),
                    degenerate=sum(o[1] for o in ok),
                    p_values=pvals,
                )
                elapsed[(alt.descriptor, n)] = time.perf_counter() - t0
                cell = cells[(alt.descriptor, n)]
                if cell.flagged:
                    log.warning("%s n=%d: %d of %d replicates failed", alt.label, n, cell.failures, N)
                log.info("%s n=%d done in %.1fs", alt.label, n, elapsed[(alt.descriptor, n)])
    finally:
        if pool:
            pool.shutdown()
    return SimResult(config, cells, elapsed)


def run_diagnostics(null_spec: FamilySpec, alt, n: int = 1000, reps: int = 10000, seed: int = 0,
                    workers: int = 1) -> WeightDiagnostics:
    """Weight-selection diagnostics for one alternative (see :func:`diagnostics`)."""
    if isinstance(alt, str):
        alt = AlternativeSpec.parse(alt)
    return diagnostics(null_spec, alt, n, reps, seed=seed, workers=workers)
