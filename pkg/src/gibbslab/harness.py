"""Canned experiments, their config files, and result emission.

A config file has an ``[experiment]`` section (name, seed, engine, output)
and a ``[grid]`` section of comma-separated value lists; integer ranges may be
written ``a..b``.  See ``docs/config_grammar.md`` for every key.

Every grid cell is an independent computation with its own seed derived from
the experiment seed and the cell index, so the result tables do not depend on
the number of workers.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
import os
import platform
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, _accel
from .analysis import defect_curve, defect_queries, entropy_density_curve, window
from .dynamics import TrajectoryConfig, evolve_exclusion_batch, sample_gibbs_batch
from .engines import ENGINES, CapacityError, check_capacity, default_workers
from .interaction import ising_afm, ising_ferro
from .lattice import PLUS, Volume, box, fill, parse_pattern
from .specification import ConditionalQuery, Empirical, Gibbs, gamma, product_model
from .transforms import Decimation, decimation_recursion, image_model
from .twolayer import TimeEvolved

EXPERIMENTS = ("heating", "heating_biased", "decimation_1d", "kawasaki_probe", "entropy_vp")

DEFECT_COLUMNS = ("experiment", "phi", "t", "eta", "engine", "n", "N", "delta", "err")
ENTROPY_COLUMNS = ("nu", "mu", "n", "h_per_site")


class SpecError(ValueError):
    """Invalid experiment specification (raised before any computation)."""


# ------------------------------------------------------------------ spec


def _split(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _ints(text: str) -> list[int]:
    out: list[int] = []
    for part in _split(text):
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _floats(text: str) -> list[float]:
    return [float(p) for p in _split(text)]


DEFAULTS = {
    "heating": {
        "beta": "0.2, 0.6, 1.0, 1.4", "h": "0", "t": "0.1, 0.25, 0.5, 1, 2, 4", "eta": "alternating",
        "d": "2", "width": "8", "n": "0..8", "N": "9", "boundary": "plus, minus",
        "sigma_boundary": "free", "threshold": "1e-4",
    },
    "heating_biased": {
        "beta": "1.0", "h": "0.2, 0.5", "t": "0.1, 0.25, 0.5, 1, 2, 4", "eta": "alternating",
        "d": "2", "width": "8", "n": "0..6", "N": "7", "boundary": "plus, minus",
        "sigma_boundary": "free", "threshold": "1e-4", "n_fixed": "4",
    },
    "decimation_1d": {"beta": "0.5, 1.0, 1.5", "ell": "2, 3", "margin": "0"},
    "kawasaki_probe": {
        "beta": "0.5, 1.0", "t": "0.1, 0.5, 1.0", "eta": "checkerboard2x2", "d": "1", "L": "512",
        "reps": "400", "sweeps": "50", "n": "0..2", "N": "3", "boundary": "alternating, periodic:-+",
        "min_count": "100",
    },
    "entropy_vp": {"beta": "0, 0.3, 0.7", "n": "1, 2, 4, 8, 16, 32, 64", "d": "1"},
}


@dataclass
class ExperimentSpec:
    name: str
    seed: int
    engine: str = "strip"
    output: str | None = None
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in EXPERIMENTS:
            raise SpecError(f"unknown experiment {self.name!r}; expected one of {EXPERIMENTS}")
        if self.engine not in ENGINES:
            raise SpecError(f"unknown engine {self.engine!r}; expected one of {ENGINES}")
        merged = dict(DEFAULTS[self.name])
        merged.update({k: str(v) for k, v in self.grid.items()})
        unknown = set(merged) - set(DEFAULTS[self.name])
        if unknown:
            raise SpecError(f"unknown grid keys for {self.name}: {sorted(unknown)}")
        self.grid = merged

    @classmethod
    def from_text(cls, text: str) -> "ExperimentSpec":
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise SpecError(f"config syntax: {exc}") from None
        if not cp.has_section("experiment"):
            raise SpecError("config needs an [experiment] section")
        ex = cp["experiment"]
        if "seed" not in ex:
            raise SpecError("seed is mandatory")
        try:
            seed = int(ex["seed"], 0)
        except ValueError:
            raise SpecError(f"seed must be an integer, got {ex['seed']!r}") from None
        grid = dict(cp["grid"]) if cp.has_section("grid") else {}
        return cls(ex.get("name", ""), seed, ex.get("engine", "strip"), ex.get("output"), grid)

    @classmethod
    def from_file(cls, path) -> "ExperimentSpec":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise SpecError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.from_text(text)

    def get(self, key):
        return self.grid[key]

    def as_dict(self) -> dict:
        return {"name": self.name, "seed": self.seed, "engine": self.engine, "output": self.output, "grid": dict(self.grid)}


def cell_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed & (2**64 - 1), index]).generate_state(1, np.uint64)[0])


# ------------------------------------------------------------------ report


@dataclass
class Table:
    columns: tuple
    rows: list

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        if math.isnan(v):
            return "nan"
        return f"{float(v):.12g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return None
        return float(f"{v:.12g}")
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass
class RunReport:
    spec: ExperimentSpec
    tables: dict
    metadata: dict

    def to_json(self) -> str:
        body = {
            "metadata": self.metadata,
            "tables": {
                name: {"columns": list(t.columns), "rows": [[_json_value(v) for v in r] for r in t.rows]}
                for name, t in self.tables.items()
            },
        }
        return json.dumps(body, indent=2, sort_keys=True)


# ------------------------------------------------------------------ experiments


def _heating_cells(spec: ExperimentSpec):
    g = spec.grid
    d = int(g["d"])
    width = int(g["width"]) if d == 2 and g["width"] else None
    cells = []
    for beta in _floats(g["beta"]):
        for h in _floats(g["h"]):
            phi = ising_ferro(beta, h, d)
            for t in _floats(g["t"]):
                cells.append((phi, t))
    ns = _ints(g["n"])
    N = int(g["N"])
    if not cells or not ns:
        raise SpecError("empty parameter grid")
    if N <= max(ns):
        raise SpecError(f"N={N} must exceed every n (max {max(ns)})")
    eta = parse_pattern(g["eta"])
    pair = tuple(parse_pattern(b) for b in _split(g["boundary"]))
    if len(pair) != 2:
        raise SpecError("boundary needs exactly two patterns")
    sb = None if g["sigma_boundary"] == "free" else parse_pattern(g["sigma_boundary"])
    return cells, ns, N, width, eta, pair, sb


def _validate_heating(spec):
    cells, ns, N, width, eta, pair, sb = _heating_cells(spec)
    for phi, t in cells:
        if t < 0:
            raise SpecError(f"negative time {t}")
        model = TimeEvolved(phi, t, sigma_boundary=sb)
        for q in defect_queries(model, eta, max(ns), N, pair, width):
            model.check_query(q, spec.engine)
    return cells, ns, N, width, eta, pair, sb


def _run_heating(spec, pool):
    cells, ns, N, width, eta, pair, sb = _validate_heating(spec)

    def cell(c):
        phi, t = c
        return defect_curve(TimeEvolved(phi, t, sigma_boundary=sb), eta, ns, N, pair, width, spec.engine)

    curves = list(pool.map(cell, cells))
    rows = []
    for (phi, t), curve in zip(cells, curves):
        for r in curve.rows:
            rows.append((spec.name, phi.label, t, str(eta), spec.engine, r.n, r.N, r.delta, r.err))
    tables = {spec.name: Table(DEFECT_COLUMNS, rows)}
    threshold = float(spec.grid["threshold"])
    n_top = max(ns)
    by_phi: dict = {}
    for (phi, t), curve in zip(cells, curves):
        by_phi.setdefault(phi.label, []).append((t, dict(zip(curve.ns, curve.deltas))))
    if spec.name == "heating":
        summ = []
        for label, series in by_phi.items():
            cross = next((t for t, dd in sorted(series) if dd[n_top] > threshold), None)
            summ.append((label, n_top, threshold, cross))
        tables[f"{spec.name}_summary"] = Table(("phi", "n", "threshold", "crossover_t"), summ)
    else:
        n_fix = int(spec.grid["n_fixed"])
        if n_fix not in ns:
            raise SpecError(f"n_fixed={n_fix} is not in the n grid")
        summ = []
        for label, series in by_phi.items():
            series = sorted(series)
            vals = [dd[n_fix] for _, dd in series]
            k = int(np.argmax(vals))
            rises = any(b > a for a, b in zip(vals[:k], vals[1 : k + 1]))
            falls = any(b < a for a, b in zip(vals[k:], vals[k + 1 :]))
            summ.append((label, n_fix, series[k][0], vals[k], bool(rises and falls)))
        tables[f"{spec.name}_summary"] = Table(("phi", "n", "peak_t", "peak_delta", "rise_then_fall"), summ)
    return tables


def _run_decimation(spec, pool):
    _decimation_setup(spec)
    g = spec.grid
    betas, ells, margin = _floats(g["beta"]), _ints(g["ell"]), int(g["margin"])
    cells = [(b, ell) for b in betas for ell in ells]
    target = fill(box(0, 1), PLUS)
    given = fill(Volume([(-1,), (1,)]), PLUS)
    q = ConditionalQuery(target, given)
    for b, ell in cells:
        image_model(Gibbs(ising_ferro(b)), Decimation(ell), margin).check_query(q, spec.engine)

    def cell(c):
        b, ell = c
        img = image_model(Gibbs(ising_ferro(b)), Decimation(ell), margin).conditional(q, spec.engine)
        bp = decimation_recursion(b, ell)
        ref = gamma(ising_ferro(bp), ConditionalQuery(target, None, PLUS), spec.engine)
        return (spec.name, b, ell, spec.engine, img, bp, ref, abs(img - ref))

    cols = ("experiment", "beta", "ell", "engine", "image_conditional", "recursion_beta", "recursion_conditional", "abs_diff")
    return {spec.name: Table(cols, list(pool.map(cell, cells)))}


def _kawasaki_setup(spec):
    g = spec.grid
    d, L, reps, sweeps = int(g["d"]), int(g["L"]), int(g["reps"]), int(g["sweeps"])
    ns, N = _ints(g["n"]), int(g["N"])
    eta = parse_pattern(g["eta"])
    pair = tuple(parse_pattern(b) for b in _split(g["boundary"]))
    cells = [(b, t) for b in _floats(g["beta"]) for t in _floats(g["t"])]
    if not cells or not ns:
        raise SpecError("empty parameter grid")
    if N <= max(ns):
        raise SpecError(f"N={N} must exceed every n (max {max(ns)})")
    if d != 1:
        raise SpecError("kawasaki_probe samples 1D chains; set d = 1")
    if len(pair) != 2:
        raise SpecError("boundary needs exactly two patterns")
    if min(t for _, t in cells) < 0 or reps < 1 or sweeps < 0:
        raise SpecError("times, reps and sweeps must be nonnegative (reps >= 1)")
    if L < 2 * N + 1:
        raise SpecError(f"chain length L={L} is shorter than the window {2 * N + 1}")
    return cells, L, reps, sweeps, ns, N, eta, pair, int(g["min_count"])


def _run_kawasaki(spec, pool):
    cells, L, reps, sweeps, ns, N, eta, pair, min_count = _kawasaki_setup(spec)
    span = 2 * N + 1
    chain = box((L - 1) // 2, 1)
    win = window(N, 1)

    def cell(args):
        k, (b, t) = args
        s = cell_seed(spec.seed, k)
        phi = ising_afm(b)
        init = sample_gibbs_batch(phi, chain, None, sweeps, s, reps)
        cfg = TrajectoryConfig("exclusion", t, seed=s ^ 0x5EED)
        final = evolve_exclusion_batch(init, cfg, volume=chain)
        # disjoint windows whose centres are multiples of 4 (the pattern period)
        stride = 4 * math.ceil((span + 1) / 4)
        centres = [c for c in range(chain.sites[0, 0] + N, chain.sites[-1, 0] - N + 1) if c % stride == 0]
        cols = [[chain.index((c + o,)) for o in range(-N, N + 1)] for c in centres]
        samples = np.concatenate([final[:, c] for c in cols], axis=0)
        model = Empirical(samples, win, min_count=min_count, label=f"ssep({phi.label})@t={t:g}")
        return phi, t, defect_curve(model, eta, ns, N, pair, None, spec.engine)

    rows = []
    for phi, t, curve in pool.map(cell, list(enumerate(cells))):
        for r in curve.rows:
            rows.append(("kawasaki_probe", phi.label, t, str(eta), "empirical", r.n, r.N, r.delta, r.err))
    return {spec.name: Table(DEFECT_COLUMNS, rows)}


def _entropy_setup(spec):
    g = spec.grid
    d = int(g["d"])
    betas, ns = _floats(g["beta"]), _ints(g["n"])
    if not betas or not ns:
        raise SpecError("empty parameter grid")
    nu = product_model(d=d)
    pairs = [(nu, Gibbs(ising_ferro(b, d=d))) for b in betas]
    # the nu = mu control row
    pairs.append((Gibbs(ising_ferro(betas[-1], d=d)), Gibbs(ising_ferro(betas[-1], d=d))))
    for _, mu in pairs:
        check_capacity(mu.factor_graph(window(max(ns), d)), spec.engine)
    return pairs, ns


def _run_entropy(spec, pool):
    pairs, ns = _entropy_setup(spec)

    def cell(p):
        return entropy_density_curve(p[0], p[1], ns, engine=spec.engine)

    rows = []
    for curve in pool.map(cell, pairs):
        rows.extend((curve.nu, curve.mu, n, h) for n, h in curve.rows)
    return {spec.name: Table(ENTROPY_COLUMNS, rows)}


RUNNERS = {
    "heating": _run_heating,
    "heating_biased": _run_heating,
    "decimation_1d": _run_decimation,
    "kawasaki_probe": _run_kawasaki,
    "entropy_vp": _run_entropy,
}


class _Serial:
    def map(self, fn, items):
        return map(fn, items)


def _decimation_setup(spec):
    g = spec.grid
    betas, ells = _floats(g["beta"]), _ints(g["ell"])
    if not betas or not ells:
        raise SpecError("empty parameter grid")
    if any(e not in (1, 2, 3) for e in ells):
        raise SpecError(f"model decimation supports ell in 1..3, got {ells}")


VALIDATORS = {
    "heating": _validate_heating,
    "heating_biased": _validate_heating,
    "decimation_1d": _decimation_setup,
    "kawasaki_probe": _kawasaki_setup,
    "entropy_vp": _entropy_setup,
}


def validate(spec: ExperimentSpec) -> None:
    """Check grids and capacities of every cell before any computation."""
    try:
        VALIDATORS[spec.name](spec)
    except CapacityError as exc:
        raise SpecError(f"capacity: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(str(exc)) from None


def run_experiment(spec: ExperimentSpec, workers: int | None = None) -> RunReport:
    workers = workers or default_workers()
    validate(spec)
    start = time.perf_counter()
    try:
        if workers > 1:
            with ThreadPoolExecutor(workers) as pool:
                tables = RUNNERS[spec.name](spec, pool)
        else:
            tables = RUNNERS[spec.name](spec, _Serial())
    except CapacityError as exc:
        raise SpecError(f"capacity: {exc}") from None
    meta = {
        "spec": spec.as_dict(),
        "seed": spec.seed,
        "engine": spec.engine,
        "workers": workers,
        "backend": _accel.backend_name(),
        "versions": {
            "gibbslab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "wall_time_s": round(time.perf_counter() - start, 3),
    }
    return RunReport(spec, tables, meta)


# ------------------------------------------------------------------ emission


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None


def emit(report: RunReport, out_dir, formats=("csv", "json")) -> list[Path]:
    """Write each table as ``<table>.csv`` and the whole report as ``<experiment>.json``."""
    out = Path(out_dir)
    written = []
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ValueError(f"unknown output format {fmt!r}")
    if "csv" in formats:
        for name, table in report.tables.items():
            p = out / f"{name}.csv"
            _atomic_write(p, table.csv_text())
            written.append(p)
    if "json" in formats:
        p = out / f"{report.spec.name}.json"
        _atomic_write(p, report.to_json())
        written.append(p)
    return written
