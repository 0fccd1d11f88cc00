"""Seeded Monte-Carlo experiments, configuration handling and persistence.

Configuration files are JSON objects. All keys are optional; unknown keys
are rejected. Defaults reproduce the strong-LoS benchmark::

    {
      "name": "",
      "geometry": {"carrier_freq": 3.5e9, "num_service_antennas": 512,
                   "num_users": 8, "antennas_per_user": 4,
                   "user_line_distance": 30.0, "user_spread": 10.0,
                   "element_spacing": 0.5},
      "pathloss": {"alpha": null, "beta": 1.0, "normalize_columns": true},
      "channel": "rician",
      "kappa": 8.0,
      "snr_db": 20.0,
      "ridge": 0.0,
      "methods": ["RI", "JI", "GS", "SSOR", "SD", "LBFGS",
                  "P-RI", "P-SD", "P-LBFGS", "I-LBFGS"],
      "solver": {"max_iters": 1000, "tol": 1e-8, "divergence_factor": 1e6,
                 "conjugate_step": false, "classical_bfgs": false},
      "trials": 100,
      "seed": 0,
      "workers": 1,
      "m_grid": [128, 512, 2048],
      "n_grid": [4, 8, 32],
      "output_dir": "results"
    }

Shorthands ``"M"`` and ``"N"`` set ``geometry.num_service_antennas`` and
the user-antenna count (``N`` must be a multiple of
``geometry.antennas_per_user``). ``"channel": "identity"`` replaces the
Rician draw with orthonormal columns so that ``A = I``.

SNR is the per-symbol transmit SNR ``1 / sigma_v^2`` (unit symbol energy).
"""

import csv
import hashlib
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .channel import GeometryConfig, PathlossModel, generate_channel, identity_channel
from .errors import ConfigError
from .linalg import solve_hermitian
from .metrics import (ber, iterations_to_tolerance, macs_to_tolerance, qam16_demodulate,
                      qam16_modulate, random_bits)
from .solvers import ALL_METHODS, Method, SolverConfig, Status, cost_per_iteration, run
from .streams import substream
from .system import asymptotic_gram, detection_system, gram_deviation, split, transmit

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("method", "trial", "iter", "rel_residual", "rel_error", "cum_macs", "status")
BENCHMARKS = ("strong_los", "weak_los", "short_array", "concentration", "flops")


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: GeometryConfig = GeometryConfig()
    pathloss: PathlossModel = PathlossModel()
    kappa: float = 8.0
    snr_db: object = 20.0
    methods: tuple = ALL_METHODS
    solver: SolverConfig = SolverConfig()
    trials: int = 100
    seed: int = 0
    output_dir: str = "results"
    channel: str = "rician"
    ridge: float = 0.0
    workers: int = 1
    m_grid: tuple = (128, 512, 2048)
    n_grid: tuple = (4, 8, 32)
    name: str = ""

    def __post_init__(self):
        if not self.kappa >= 0 or not np.isfinite(self.kappa):
            raise ConfigError("kappa", f"must be a finite non-negative number, got {self.kappa}")
        if self.trials < 1:
            raise ConfigError("trials", f"must be >= 1, got {self.trials}")
        if not self.methods:
            raise ConfigError("methods", "must name at least one method")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be a 64-bit unsigned integer, got {self.seed}")
        if self.channel not in ("rician", "identity"):
            raise ConfigError("channel", f"must be 'rician' or 'identity', got {self.channel!r}")
        if self.ridge < 0:
            raise ConfigError("ridge", f"must be non-negative, got {self.ridge}")
        if self.workers < 1:
            raise ConfigError("workers", f"must be >= 1, got {self.workers}")
        if not self.m_grid or any(m < self.n for m in self.m_grid):
            raise ConfigError("m_grid", f"entries must be >= N={self.n}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid", "entries must be positive")

    @property
    def n(self):
        return self.geometry.num_user_antennas

    @property
    def snr_grid(self):
        return tuple(self.snr_db) if isinstance(self.snr_db, tuple) else (self.snr_db,)

    def to_dict(self):
        d = asdict(self)
        d["methods"] = [m.value for m in self.methods]
        d["solver"].pop("x0")
        d["snr_db"] = list(self.snr_db) if isinstance(self.snr_db, tuple) else self.snr_db
        d["m_grid"] = list(self.m_grid)
        d["n_grid"] = list(self.n_grid)
        return d

    def digest(self):
        """Hash of every field that can change results.

        ``output_dir`` and ``workers`` are left out so relocated or
        parallel runs produce identical summaries.
        """
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("workers")
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


# -- parsing -----------------------------------------------------------------

def _join(path, key):
    return f"{path}.{key}" if path else key


def _int(value, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(path, f"expected an integer, got {value!r}")
    return value


def _num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


def _opt_num(value, path):
    return None if value is None else _num(value, path)


def _bool(value, path):
    if not isinstance(value, bool):
        raise ConfigError(path, f"expected true or false, got {value!r}")
    return value


def _str(value, path):
    if not isinstance(value, str):
        raise ConfigError(path, f"expected a string, got {value!r}")
    return value


def _list_of(conv):
    def parse(value, path):
        if not isinstance(value, list):
            raise ConfigError(path, f"expected a list, got {value!r}")
        return tuple(conv(v, f"{path}[{i}]") for i, v in enumerate(value))
    return parse


def _method(value, path):
    try:
        return Method.parse(_str(value, path))
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None


def _snr(value, path):
    if isinstance(value, list):
        grid = _list_of(_num)(value, path)
        if not grid:
            raise ConfigError(path, "SNR grid is empty")
        return grid
    return _num(value, path)


_GEOMETRY = {
    "carrier_freq": _num, "num_service_antennas": _int, "num_users": _int,
    "antennas_per_user": _int, "user_line_distance": _num, "user_spread": _num,
    "element_spacing": _num,
}
_PATHLOSS = {"alpha": _opt_num, "beta": _num, "normalize_columns": _bool}
_SOLVER = {
    "max_iters": _int, "tol": _num, "divergence_factor": _num,
    "conjugate_step": _bool, "classical_bfgs": _bool,
}


def _section(cls, schema):
    def parse(value, path):
        if not isinstance(value, dict):
            raise ConfigError(path, f"expected an object, got {value!r}")
        kwargs = {}
        for key, raw in value.items():
            if key not in schema:
                raise ConfigError(_join(path, key), "unknown key")
            kwargs[key] = schema[key](raw, _join(path, key))
        try:
            return cls(**kwargs)
        except ValueError as exc:
            raise ConfigError(path, str(exc)) from None
    return parse


_TOP = {
    "name": _str, "kappa": _num, "snr_db": _snr, "methods": _list_of(_method),
    "trials": _int, "seed": _int, "output_dir": _str, "channel": _str, "ridge": _num,
    "workers": _int, "m_grid": _list_of(_int), "n_grid": _list_of(_int),
    "geometry": _section(GeometryConfig, _GEOMETRY),
    "pathloss": _section(PathlossModel, _PATHLOSS),
    "solver": _section(SolverConfig, _SOLVER),
}


def _apply_shorthands(data):
    data = dict(data)
    geometry = dict(data.get("geometry", {}))
    if "M" in data:
        geometry["num_service_antennas"] = _int(data.pop("M"), "M")
    if "N" in data:
        n = _int(data.pop("N"), "N")
        per_user = geometry.get("antennas_per_user", GeometryConfig.antennas_per_user)
        if not isinstance(per_user, int) or per_user < 1 or n % per_user:
            raise ConfigError("N", f"must be a multiple of antennas_per_user={per_user}")
        geometry["num_users"] = n // per_user
    if geometry:
        data["geometry"] = geometry
    return data


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("", "configuration must be a JSON object")
    data = _apply_shorthands(data)
    kwargs = {}
    for key, raw in data.items():
        if key not in _TOP:
            raise ConfigError(key, "unknown key")
        kwargs[key] = _TOP[key](raw, key)
    return ExperimentConfig(**kwargs)


def parse_config(text):
    """Parse and validate configuration text (JSON)."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    return config_from_dict(data)


def apply_overrides(data, overrides):
    """Set dotted ``key=value`` pairs on a raw config dict.

    Values are decoded as JSON when possible and kept as strings otherwise.
    """
    data = json.loads(json.dumps(data))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        parts = key.strip().split(".")
        node = data
        for i, part in enumerate(parts[:-1]):
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(".".join(parts[:i + 1]), "is not an object")
        node[parts[-1]] = value
    return data


def read_config_source(source):
    """Raw dict for a config file path or a shipped benchmark name."""
    path = Path(source)
    if path.is_file():
        text = path.read_text()
    elif source in BENCHMARKS:
        text = resources.files("elaa_detect").joinpath("configs", f"{source}.json").read_text()
    else:
        raise ConfigError("", f"no config file or benchmark named {source!r}")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON in {source}: {exc}") from None


def load_config(source, overrides=()):
    return config_from_dict(apply_overrides(read_config_source(source), overrides))


# -- statistics --------------------------------------------------------------

def _quantile(values, q):
    """Linear-interpolation quantile that treats ``inf`` as a value."""
    v = np.sort(np.asarray(values, dtype=float))
    if v.size == 0:
        return float("nan")
    pos = q * (v.size - 1)
    lo, hi = int(np.floor(pos)), int(np.ceil(pos))
    w = pos - lo
    if w == 0 or v[lo] == v[hi]:
        return float(v[lo])
    return float(v[lo] + w * (v[hi] - v[lo]))


def median_iterations(counts):
    """Median of iterations-to-tolerance with ``None`` (not reached) as ``inf``."""
    return _quantile([np.inf if c is None else c for c in counts], 0.5)


def _json_number(x):
    return None if x is None or not np.isfinite(x) else x


# -- experiments -------------------------------------------------------------

def noise_variance(snr_db):
    return 10.0 ** (-snr_db / 10.0)


def draw_channel(cfg, trial, geometry=None):
    geometry = geometry or cfg.geometry
    if cfg.channel == "identity":
        return identity_channel(geometry.num_service_antennas, geometry.num_user_antennas)
    return generate_channel(geometry, cfg.pathloss, cfg.kappa,
                            substream(cfg.seed, trial, "nlos"))


def input_digest(system, x0):
    h = hashlib.sha256()
    for arr in (system.A, system.b, system.psi, x0):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()


@dataclass
class TrialResult:
    trial: int
    traces: dict = field(default_factory=dict)
    input_hashes: dict = field(default_factory=dict)
    error: Optional[str] = None


def _channel_system(cfg, trial, snr_db):
    realization = draw_channel(cfg, trial)
    n = realization.H.shape[1]
    bits = random_bits(n, substream(cfg.seed, trial, "bits"))
    tx = transmit(realization.H, qam16_modulate(bits), noise_variance(snr_db),
                  substream(cfg.seed, trial, "noise"))
    return detection_system(realization, tx.r, cfg.ridge)


def run_trial(cfg, trial):
    """Run every configured method on one seeded trial from ``x0 = 0``.

    Exceptions are caught and stored on the result instead of raised.
    """
    result = TrialResult(trial)
    try:
        system = _channel_system(cfg, trial, cfg.snr_grid[0])
        x_star = solve_hermitian(system.A, system.b)
        splitting = split(system.A)
        x0 = np.zeros(system.n, dtype=np.complex128)
        solver_cfg = replace(cfg.solver, x0=x0)
        for method in cfg.methods:
            result.input_hashes[method] = input_digest(system, solver_cfg.x0)
            result.traces[method] = run(method, system, splitting, solver_cfg, x_star)
    except Exception as exc:  # recorded; the experiment continues
        log.warning("trial %d failed: %s", trial, exc)
        result.error = f"{type(exc).__name__}: {exc}"
    return result


def _map_trials(fn, cfg, workers):
    workers = workers or cfg.workers
    if workers == 1:
        return [fn(cfg, t) for t in range(cfg.trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        # map() yields in submission order, independent of completion order
        return list(pool.map(lambda t: fn(cfg, t), range(cfg.trials)))


def _fmt(x):
    return repr(float(x))


def trace_rows(method, trial, trace):
    last = len(trace.records) - 1
    for i, rec in enumerate(trace.records):
        status = trace.status.value if i == last else "Running"
        yield (method.value, trial, rec.iter, _fmt(rec.rel_residual), _fmt(rec.rel_error),
               rec.cum_macs, status)


def _write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    Path(path).write_text(buf.getvalue())


def method_stats(traces, tol):
    iters = [iterations_to_tolerance(t, tol) for t in traces]
    macs = [macs_to_tolerance(t, tol) for t in traces]
    statuses = [t.status for t in traces]
    finite = [np.inf if m is None else m for m in macs]
    return {
        "trials": len(traces),
        "converged": statuses.count(Status.CONVERGED),
        "max_iters": statuses.count(Status.MAX_ITERS),
        "diverged": statuses.count(Status.DIVERGED),
        "convergence_rate": statuses.count(Status.CONVERGED) / len(traces) if traces else 0.0,
        "iterations_median": _json_number(median_iterations(iters)),
        "iterations_q1": _json_number(_quantile([np.inf if c is None else c for c in iters], 0.25)),
        "iterations_q3": _json_number(_quantile([np.inf if c is None else c for c in iters], 0.75)),
        "macs_median": _json_number(_quantile(finite, 0.5)),
        "fallback_steps": sum(len(t.fallbacks) for t in traces),
        "iterations": iters,
    }


@dataclass
class ExperimentSummary:
    name: str
    config_hash: str
    seed: int
    version: str
    trials: int
    methods: dict
    trial_inputs: list
    failures: list
    output_files: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d.pop("output_files")
        return d

    def median_iterations(self, method):
        m = self.methods[Method.parse(method).value]["iterations_median"]
        return np.inf if m is None else m


def summarize(cfg, results):
    ok = [r for r in results if r.error is None]
    methods = {m.value: method_stats([r.traces[m] for r in ok], cfg.solver.tol)
               for m in cfg.methods}
    return ExperimentSummary(
        name=cfg.name,
        config_hash=cfg.digest(),
        seed=cfg.seed,
        version=__version__,
        trials=cfg.trials,
        methods=methods,
        trial_inputs=[{"trial": r.trial, "inputs": {m.value: h for m, h in r.input_hashes.items()}}
                      for r in results],
        failures=[{"trial": r.trial, "error": r.error} for r in results if r.error],
    )


def run_experiment(cfg, workers=None, write=True):
    """Run every configured method on ``cfg.trials`` seeded trials.

    Writes ``trace_<METHOD>.csv`` per method and ``summary.json`` into
    ``cfg.output_dir`` unless ``write`` is false. Output bytes depend only on
    the configuration, not on ``workers``.
    """
    if len(cfg.snr_grid) != 1:
        raise ConfigError("snr_db", "run expects a single SNR value; use the ber command for grids")
    results = _map_trials(run_trial, cfg, workers)
    summary = summarize(cfg, results)
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for method in cfg.methods:
            rows = (row for r in results if r.error is None
                    for row in trace_rows(method, r.trial, r.traces[method]))
            path = out / f"trace_{method.value}.csv"
            _write_csv(path, TRACE_COLUMNS, rows)
            summary.output_files.append(str(path))
        path = out / "summary.json"
        path.write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True) + "\n")
        summary.output_files.append(str(path))
    return summary


# -- asymptotic Gram check ---------------------------------------------------

@dataclass
class ConcentrationReport:
    kappa: float
    n: int
    trials: int
    m_grid: tuple
    mean_deviation: tuple
    std_deviation: tuple

    @property
    def violations(self):
        pairs = zip(zip(self.m_grid, self.mean_deviation),
                    zip(self.m_grid[1:], self.mean_deviation[1:]))
        return [(a, b) for a, b in pairs if not b[1] < a[1]]

    @property
    def decreasing(self):
        return not self.violations

    def rows(self):
        return list(zip(self.m_grid, self.mean_deviation, self.std_deviation))


def gram_concentration(cfg):
    """Mean ``||A_M - A_inf||_F / ||A_inf||_F`` over NLoS draws for each ``M``."""
    means, stds = [], []
    for M in cfg.m_grid:
        geometry = replace(cfg.geometry, num_service_antennas=M)
        devs = []
        for trial in range(cfg.trials):
            if cfg.channel == "identity":
                ch = identity_channel(M, geometry.num_user_antennas)
            else:
                ch = generate_channel(geometry, cfg.pathloss, cfg.kappa,
                                      substream(cfg.seed, trial, "nlos", M))
            A = ch.H.conj().T @ ch.H
            devs.append(gram_deviation(A, asymptotic_gram(ch.H_los, cfg.kappa)))
        means.append(float(np.mean(devs)))
        stds.append(float(np.std(devs)))
    return ConcentrationReport(cfg.kappa, cfg.n, cfg.trials, tuple(cfg.m_grid),
                          tuple(means), tuple(stds))


# -- complexity check --------------------------------------------------------

@dataclass(frozen=True)
class FlopCheck:
    method: Method
    n: int
    iterations: int
    expected: int
    measured: int

    @property
    def ok(self):
        return self.expected == self.measured


def flop_instance(n, seed=0, kappa=8.0):
    """Random Rician detection system with ``n`` user antennas and ``M = 8 n``."""
    per_user = 4 if n % 4 == 0 else 1
    geometry = GeometryConfig(num_service_antennas=8 * n, num_users=n // per_user,
                              antennas_per_user=per_user)
    ch = generate_channel(geometry, PathlossModel(), kappa, substream(seed, n, "instance"))
    rng = substream(seed, n, "bits")
    s = qam16_modulate(random_bits(n, rng))
    return detection_system(ch, ch.H @ s)


def verify_flops(n_grid=(4, 8, 32), iterations=3, seed=0, methods=ALL_METHODS):
    """Run each method for a fixed number of iterations and compare MAC counts."""
    cfg = SolverConfig(max_iters=iterations, tol=1e-300, divergence_factor=1e300)
    checks = []
    for n in n_grid:
        system = flop_instance(n, seed)
        x_star = solve_hermitian(system.A, system.b)
        for method in methods:
            trace = run(method, system, cfg=cfg, x_star=x_star)
            checks.append(FlopCheck(method, n, trace.iterations,
                                    iterations * cost_per_iteration(method, n),
                                    trace.records[-1].cum_macs))
    return checks


# -- BER sweep ---------------------------------------------------------------

BER_COLUMNS = ("method", "snr_db", "mean_ber", "median_ber", "trials", "unconverged")
ORACLE = "ZF"


def _ber_trial(cfg, trial):
    try:
        ch = draw_channel(cfg, trial)
        n = ch.H.shape[1]
        bits = random_bits(n, substream(cfg.seed, trial, "bits"))
        s = qam16_modulate(bits)
        # one unit-variance noise draw, rescaled per SNR point
        unit = transmit(ch.H, s, 1.0, substream(cfg.seed, trial, "noise"))
        out = {}
        for snr in cfg.snr_grid:
            r = ch.H @ s + np.sqrt(noise_variance(snr)) * unit.v
            system = detection_system(ch, r, cfg.ridge)
            x_star = solve_hermitian(system.A, system.b)
            out[ORACLE, snr] = (ber(bits, qam16_demodulate(x_star)), True)
            splitting = split(system.A)
            for method in cfg.methods:
                trace = run(method, system, splitting, cfg.solver, x_star)
                out[method.value, snr] = (ber(bits, qam16_demodulate(trace.x)),
                                          trace.status == Status.CONVERGED)
    except Exception as exc:  # recorded; the sweep continues
        log.warning("trial %d failed: %s", trial, exc)
        return TrialResult(trial, error=f"{type(exc).__name__}: {exc}")
    return TrialResult(trial, traces=out)


def ber_sweep(cfg, workers=None, write=True):
    """Mean and median BER per (method, SNR); ``ZF`` is the direct solve.

    Iterative methods contribute their terminal iterate; ``unconverged``
    counts trials where it had not reached tolerance. Returns the table
    rows and the per-trial :class:`TrialResult` list, whose ``traces``
    map ``(method, snr)`` to ``(ber, converged)``. Failed trials carry an
    ``error`` and are left out of the averages.
    """
    per_trial = _map_trials(_ber_trial, cfg, workers)
    ok = [t.traces for t in per_trial if t.error is None]
    rows = []
    for name in (ORACLE, *(m.value for m in cfg.methods)):
        for snr in cfg.snr_grid:
            vals = [t[name, snr][0] for t in ok]
            flags = sum(not t[name, snr][1] for t in ok)
            mean = np.mean(vals) if vals else np.nan
            median = np.median(vals) if vals else np.nan
            rows.append((name, _fmt(snr), _fmt(mean), _fmt(median), len(vals), flags))
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "ber.csv", BER_COLUMNS, rows)
    return rows, per_trial
