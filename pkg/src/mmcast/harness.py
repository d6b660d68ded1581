"""Deterministic Monte-Carlo experiment runner.

An experiment is described by a small YAML file::

    version: 1
    scenario: compare-sdr          # sweep-xpr-xpt | sweep-antennas | compare-sdr | custom
    realizations: 30
    seed: 2024
    grid:                          # every list is swept (Cartesian product)
      n_tx: [20]
      n_rx: [3]
      n_rf: [6]
      k_users: [25]
    methods: [lb-gdm, sdr-c]
    modes: [hybrid, digital]
    gdm: {n_xpr: 40, n_xpt: [10, 40]}   # any GdmHyperParams field; counts may be lists
    sdr: {n_rand: [10, 50]}             # n_rand may be a list
    channel: {n_paths: 5, spacing: 0.5}

Seeds. Channel realization ``r`` of channel-grid point ``g`` (the
``(n_tx, n_rx, k_users)`` combinations, in file order) is drawn from the
64-bit seed ``SeedSequence(seed, spawn_key=(g, r)).generate_state(1,
uint64)``. Every method, mode and ``n_rf`` value runs on that same channel,
so comparisons are paired. Solver randomness comes from
``SeedSequence([channel_seed, crc32(label)])`` with ``label`` naming the
solver variant, mode and ``n_rf``, so a row never depends on which other
rows are requested or on the worker count.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
import csv
import itertools
import logging
import math
import time
import zlib

import numpy as np
import yaml
from threadpoolctl import threadpool_limits

from .channel import ChannelParams, generate_channel
from .gdm import GdmHyperParams, run_lb_gdm
from .records import RunRecord
from .sdr import SdrParams, run_sdr_c
from .system import DIGITAL, HYBRID, MODES, SystemConfig

__all__ = [
    "SCHEMA_VERSION", "SCENARIOS", "METHODS", "CSV_COLUMNS", "SUMMARY_COLUMNS",
    "SpecError", "ExperimentSpec", "load_spec", "parse_spec", "channel_seed",
    "run_experiment", "emit_csv", "aggregate", "emit_summary",
]

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SCENARIOS = ("sweep-xpr-xpt", "sweep-antennas", "compare-sdr", "custom")
LB_GDM = "lb-gdm"
SDR_C = "sdr-c"
METHODS = (LB_GDM, SDR_C)
CSV_COLUMNS = ("scenario", "n_tx", "n_rx", "n_rf", "K", "method", "mode",
               "realization", "seed", "min_snr", "se", "wall_ms")
SUMMARY_COLUMNS = ("scenario", "n_tx", "n_rx", "n_rf", "K", "method", "mode", "count",
                   "min_snr_mean", "min_snr_std", "se_mean", "se_std")

_TOP_KEYS = {"version", "scenario", "realizations", "seed", "grid", "methods", "modes",
             "gdm", "sdr", "channel", "out", "system"}
_GRID_KEYS = ("n_tx", "n_rx", "n_rf", "k_users")
_SYSTEM_KEYS = {"l_tx", "l_rx", "p_tx_max", "p_rx_max", "sigma2"}


class SpecError(ValueError):
    """Malformed experiment file."""


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: str
    grid: dict
    realizations: int = 1
    seed: int = 0
    methods: tuple = (LB_GDM,)
    modes: tuple = (HYBRID,)
    gdm: dict = field(default_factory=dict)
    sdr: dict = field(default_factory=dict)
    channel: dict = field(default_factory=dict)
    system: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise SpecError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        for key in _GRID_KEYS:
            vals = self.grid.get(key)
            if not vals:
                raise SpecError(f"grid.{key} must be a non-empty list")
            if any(not isinstance(v, int) or isinstance(v, bool) or v < 1 for v in vals):
                raise SpecError(f"grid.{key} must hold positive integers")
        if not isinstance(self.realizations, int) or self.realizations < 1:
            raise SpecError("realizations must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise SpecError("seed must be a nonnegative integer")
        if not self.methods or any(m not in METHODS for m in self.methods):
            raise SpecError(f"methods must be a non-empty subset of {METHODS}")
        if not self.modes or any(m not in MODES for m in self.modes):
            raise SpecError(f"modes must be a non-empty subset of {MODES}")
        bad = set(self.system) - _SYSTEM_KEYS
        if bad:
            raise SpecError(f"unknown system keys {sorted(bad)}")
        # fail early on bad solver or system settings
        self.gdm_variants()
        self.sdr_variants()
        try:
            SystemConfig(n_tx=1, n_rx=1, n_rf=1, k_users=1, **self.system)
        except ValueError as exc:
            raise SpecError(f"invalid system settings: {exc}") from exc

    def gdm_variants(self):
        """``GdmHyperParams`` for every combination of list-valued fields."""
        return _variants(GdmHyperParams, self.gdm, "gdm")

    def sdr_variants(self):
        return _variants(SdrParams, self.sdr, "sdr")

    def channel_grid(self):
        return list(itertools.product(self.grid["n_tx"], self.grid["n_rx"], self.grid["k_users"]))


def _variants(cls, section, name):
    known = {f.name for f in fields(cls)}
    bad = set(section) - known
    if bad:
        raise SpecError(f"unknown {name} keys {sorted(bad)}")
    keys = sorted(section)
    lists = [v if isinstance(v, list) else [v] for v in (section[k] for k in keys)]
    if any(not v for v in lists):
        raise SpecError(f"{name} lists must be non-empty")
    out = []
    for combo in itertools.product(*lists):
        try:
            out.append(cls(**dict(zip(keys, combo))))
        except (TypeError, ValueError) as exc:
            raise SpecError(f"invalid {name} settings {dict(zip(keys, combo))}: {exc}") from exc
    return out


def parse_spec(data):
    """Validate a decoded YAML mapping and build an :class:`ExperimentSpec`."""
    if not isinstance(data, dict):
        raise SpecError("experiment file must contain a mapping")
    if data.get("version") != SCHEMA_VERSION:
        raise SpecError(f"unsupported or missing version (expected {SCHEMA_VERSION})")
    bad = set(data) - _TOP_KEYS
    if bad:
        raise SpecError(f"unknown keys {sorted(bad)}")
    grid = data.get("grid")
    if not isinstance(grid, dict):
        raise SpecError("grid must be a mapping")
    bad = set(grid) - set(_GRID_KEYS)
    if bad:
        raise SpecError(f"unknown grid keys {sorted(bad)}")
    grid = {k: (v if isinstance(v, list) else [v]) for k, v in grid.items()}
    for key in ("gdm", "sdr", "channel", "system"):
        if not isinstance(data.get(key, {}), dict):
            raise SpecError(f"{key} must be a mapping")
    channel = data.get("channel", {})
    bad = set(channel) - {"n_paths", "spacing"}
    if bad:
        raise SpecError(f"unknown channel keys {sorted(bad)}")

    def as_tuple(key, default):
        v = data.get(key, default)
        return tuple(v) if isinstance(v, list) else (v,)

    return ExperimentSpec(
        scenario=data.get("scenario", "custom"), grid=grid,
        realizations=data.get("realizations", 1), seed=data.get("seed", 0),
        methods=as_tuple("methods", [LB_GDM]), modes=as_tuple("modes", [HYBRID]),
        gdm=dict(data.get("gdm", {})), sdr=dict(data.get("sdr", {})),
        channel=dict(channel), system=dict(data.get("system", {})), out=data.get("out"),
    )


def load_spec(path):
    with open(path, encoding="utf-8") as fh:
        try:
            data = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise SpecError(f"cannot parse {path}: {exc}") from exc
    return parse_spec(data)


def channel_seed(master, grid_index, realization):
    """64-bit channel seed for one (grid point, realization) pair."""
    ss = np.random.SeedSequence(master, spawn_key=(grid_index, realization))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _solver_rng(seed, label):
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(label.encode())]))


def gdm_label(hp):
    return f"{LB_GDM}[xpr={hp.n_xpr},xpt={hp.n_xpt}]"


def sdr_label(sp):
    return f"{SDR_C}[rand={sp.n_rand}]"


@dataclass(frozen=True)
class _Task:
    spec: ExperimentSpec
    grid_index: int
    n_tx: int
    n_rx: int
    k_users: int
    realization: int


def _jobs(spec, n_tx):
    """(label, mode, n_rf, runner) for one channel, in canonical order."""
    n_rfs = [r for r in spec.grid["n_rf"] if r <= n_tx]
    out = []
    for method in spec.methods:
        variants = spec.gdm_variants() if method == LB_GDM else spec.sdr_variants()
        for params in variants:
            label = gdm_label(params) if method == LB_GDM else sdr_label(params)
            for mode in spec.modes:
                # the fully-digital design does not depend on n_rf
                for n_rf in ([n_tx] if mode == DIGITAL else n_rfs):
                    out.append((method, label, params, mode, n_rf))
    return out


def _run_task(task):
    spec = task.spec
    seed = channel_seed(spec.seed, task.grid_index, task.realization)
    params = ChannelParams(task.n_tx, task.n_rx, **spec.channel)
    channels = generate_channel(params, task.k_users, seed=seed)
    records = []
    for method, label, p, mode, n_rf in _jobs(spec, task.n_tx):
        cfg = SystemConfig(n_tx=task.n_tx, n_rx=task.n_rx, n_rf=n_rf,
                           k_users=task.k_users, **spec.system)
        rng = _solver_rng(seed, f"{label}|{mode}|{n_rf}")
        t0 = time.perf_counter()
        try:
            if method == LB_GDM:
                _, rec = run_lb_gdm(channels, cfg, p, rng, mode=mode)
            else:
                _, rec = run_sdr_c(channels, cfg, p, rng, mode=mode)
        except Exception as exc:  # recorded, not fatal
            log.warning("%s/%s failed on seed %d: %s", label, mode, seed, exc)
            rec = RunRecord(method=label, mode=mode, min_snr=math.nan, se=math.nan,
                            error=f"{type(exc).__name__}: {exc}")
        records.append(replace(
            rec, method=label, mode=mode, n_tx=task.n_tx, n_rx=task.n_rx, n_rf=n_rf,
            k_users=task.k_users, scenario=spec.scenario, realization=task.realization,
            seed=seed, wall_ms=1e3 * (time.perf_counter() - t0),
        ))
    return records


def _run_task_single_thread(task):
    # BLAS reductions may depend on the thread count; pin it for reproducibility
    with threadpool_limits(limits=1):
        return _run_task(task)


def run_experiment(spec, workers=1, realizations=None, seed=None):
    """Run every grid point and realization; return records in canonical order.

    The order is channel-grid point, then realization, then method, variant,
    mode and ``n_rf``, whatever the number of workers.
    """
    if realizations is not None:
        spec = replace(spec, realizations=realizations)
    if seed is not None:
        spec = replace(spec, seed=seed)
    tasks = [
        _Task(spec, g, n_tx, n_rx, k, r)
        for g, (n_tx, n_rx, k) in enumerate(spec.channel_grid())
        for r in range(spec.realizations)
    ]
    log.info("running %d channel realizations on %d worker(s)", len(tasks), workers)
    if workers <= 1:
        chunks = [_run_task_single_thread(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_run_task_single_thread, tasks))
    return [rec for chunk in chunks for rec in chunk]


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def emit_csv(records, path, timing=False):
    """Write one row per record with the fixed column order.

    Floats are written with ``repr`` so they parse back bit-exactly. Wall
    times vary between runs and are left empty unless ``timing`` is set.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow([
                r.scenario, r.n_tx, r.n_rx, r.n_rf, r.k_users, r.method, r.mode,
                r.realization, _fmt(r.seed), _fmt(float(r.min_snr)), _fmt(float(r.se)),
                _fmt(float(r.wall_ms)) if timing and r.wall_ms is not None else "",
            ])


def aggregate(records):
    """Mean and sample standard deviation per scenario point and method.

    Failed runs (NaN metrics) are left out of the statistics.
    """
    groups = {}
    for r in records:
        key = (r.scenario, r.n_tx, r.n_rx, r.n_rf, r.k_users, r.method, r.mode)
        groups.setdefault(key, []).append(r)
    out = []
    for key, rs in groups.items():
        snr = np.array([r.min_snr for r in rs if not math.isnan(r.min_snr)])
        se = np.array([r.se for r in rs if not math.isnan(r.se)])

        def stats(a):
            if a.size == 0:
                return math.nan, math.nan
            return float(a.mean()), float(a.std(ddof=1)) if a.size > 1 else 0.0

        out.append(dict(zip(SUMMARY_COLUMNS, key + (snr.size,) + stats(snr) + stats(se))))
    return out


def emit_summary(records, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for row in aggregate(records):
            w.writerow([_fmt(row[c]) for c in SUMMARY_COLUMNS])

