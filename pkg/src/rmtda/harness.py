"""Experiment orchestration: synthetic geometry, RMS comparisons, gamma sweeps, tuning and report files."""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .baselines import BaselineConfig, BaselineMethod, bootstrap_error, cv_error, plugin_error
from .classifiers import empirical_error, exact_error_rlda
from .equivalents import lda_deterministic_error, qda_deterministic_error
from .errors import ConfigError, DomainError, RdaError
from .estimators import g_estimate
from .libsvm import load_libsvm
from .model import Classifier, ProblemInstance, TrainingSet, fit_statistics, make_rng, sample_training
from .tuning import minimize_gamma, stage_two_interval, two_stage_optimize, g_objective

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "DatasetSource",
    "ExperimentConfig",
    "RmsResult",
    "RmsSummary",
    "SyntheticGeometry",
    "build_synthetic",
    "load_config",
    "parse_gamma_grid",
    "rms_summary",
    "run_gamma_sweep",
    "run_real_data",
    "run_rms_experiment",
    "run_tuning",
    "write_report",
]

ESTIMATORS = ("g", "plugin", "cv", "b632", "b632plus")

# stream ids for make_rng(seed, stream, trial)
_TRAIN, _TEST, _BASELINE, _SUBSET = 10, 11, 12, 13


@dataclass(frozen=True)
class SyntheticGeometry:
    """Toeplitz class-0 covariance, spiked class-1 covariance, shifted means."""

    p: int = 200
    n0: int = 200
    n1: int = 200
    ratio: float = 0.6
    scale: float = 3.0
    shift: float = 0.8

    def __post_init__(self) -> None:
        if self.p < 2:
            raise DomainError("p must be at least 2")
        if not abs(self.ratio) < 1:
            raise DomainError(f"Toeplitz ratio must satisfy |ratio| < 1, got {self.ratio}")
        if self.n0 < 2 or self.n1 < 2:
            raise DomainError("each class needs at least 2 training samples")


def build_synthetic(geometry: SyntheticGeometry) -> ProblemInstance:
    """``Sigma0[i, j] = ratio^|i-j|``, ``Sigma1 = Sigma0 + scale * S_p``.

    ``S_p`` is diagonal with ones on the first ``ceil(sqrt(p))`` coordinates.
    ``mu0 = e_1`` and ``mu1 = mu0 + shift / sqrt(p)``. Class priors are the
    training fractions.
    """
    p = geometry.p
    sigma0 = toeplitz(geometry.ratio ** np.arange(p))
    spike = np.zeros(p)
    spike[: math.isqrt(p - 1) + 1] = 1.0
    sigma1 = sigma0 + geometry.scale * np.diag(spike)
    mu0 = np.zeros(p)
    mu0[0] = 1.0
    mu1 = mu0 + geometry.shift / math.sqrt(p)
    n = geometry.n0 + geometry.n1
    return ProblemInstance.from_arrays(mu0, sigma0, mu1, sigma1, (geometry.n0 / n, geometry.n1 / n))


@dataclass(frozen=True)
class DatasetSource:
    """Real data: training pool and test file in libsvm format, one label pair."""

    train: str
    test: str | None = None
    labels: tuple[str, str] = ("5", "2")
    n0: int = 100
    n1: int = 100
    n_features: int | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: SyntheticGeometry | DatasetSource = field(default_factory=SyntheticGeometry)
    gamma_grid: tuple[float, ...] = (1.0,)
    trials: int = 10
    test_size: int = 2000
    estimators: tuple[str, ...] = ("g", "plugin")
    classifiers: tuple[str, ...] = ("rlda", "rqda")
    seed: int = 0
    folds: int = 5
    repetitions: int = 5
    bootstrap_samples: int = 100
    tuning_range: tuple[float, float] = (1e-2, 1e2)
    tuning_grid: int = 50
    output: str | None = None
    format: str = "csv"

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if self.test_size < 1:
            raise ConfigError("test_size must be at least 1")
        grid = tuple(float(g) for g in self.gamma_grid)
        if not grid or any(not (g > 0 and math.isfinite(g)) for g in grid):
            raise ConfigError("gamma grid must be nonempty and positive")
        object.__setattr__(self, "gamma_grid", grid)
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad:
            raise ConfigError(f"unknown estimators {sorted(bad)}; choose from {list(ESTIMATORS)}")
        try:
            kinds = tuple(Classifier(c).value for c in self.classifiers)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "classifiers", kinds)
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if isinstance(self.geometry, DatasetSource):
            for path in (self.geometry.train, self.geometry.test):
                if path is not None and not os.path.isfile(path):
                    raise ConfigError(f"dataset file not found: {path}")

    @property
    def synthetic(self) -> bool:
        return isinstance(self.geometry, SyntheticGeometry)

    def baseline(self, method: BaselineMethod) -> BaselineConfig:
        return BaselineConfig(method, self.folds, self.repetitions, self.bootstrap_samples, self.seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["geometry"] = {"kind": "synthetic" if self.synthetic else "dataset", **asdict(self.geometry)}
        return d


def parse_gamma_grid(spec) -> tuple[float, ...]:
    """Accept a number, a list, ``"a,b,c"``, ``"log:lo:hi:count"`` or ``"lin:lo:hi:count"``."""
    if isinstance(spec, (int, float)):
        return (float(spec),)
    if isinstance(spec, (list, tuple)):
        return tuple(float(v) for v in spec)
    text = str(spec).strip()
    try:
        if text.startswith(("log:", "lin:")):
            kind, lo, hi, count = text.split(":")
            lo_f, hi_f, k = float(lo), float(hi), int(count)
            if k < 1 or lo_f <= 0 or hi_f < lo_f:
                raise ValueError
            if k == 1:
                return (lo_f,)
            pts = np.geomspace(lo_f, hi_f, k) if kind == "log" else np.linspace(lo_f, hi_f, k)
            return tuple(float(v) for v in pts)
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"cannot parse gamma grid {spec!r}") from None


_TOP_KEYS = {"seed", "trials", "test_size", "gamma", "estimators", "classifiers", "tuning",
             "synthetic", "dataset", "baselines", "output"}


def load_config(path: str | os.PathLike | None = None, **overrides) -> ExperimentConfig:
    """Read a TOML experiment file; keyword ``overrides`` (non-``None``) win over file values."""
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {os.fspath(path)!r}: {exc.strerror}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {os.fspath(path)!r}: {exc}") from None
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    if "synthetic" in raw and "dataset" in raw:
        raise ConfigError("choose either [synthetic] or [dataset], not both")
    try:
        kw: dict = {}
        if "dataset" in raw:
            ds = dict(raw["dataset"])
            if "labels" in ds:
                ds["labels"] = tuple(str(v) for v in ds["labels"])
            base = os.path.dirname(os.fspath(path)) if path is not None else ""
            for key in ("train", "test"):
                if ds.get(key) is not None:
                    ds[key] = os.path.join(base, ds[key])
            kw["geometry"] = DatasetSource(**ds)
        else:
            kw["geometry"] = SyntheticGeometry(**raw.get("synthetic", {}))
        for key in ("seed", "trials", "test_size"):
            if key in raw:
                kw[key] = int(raw[key])
        if "gamma" in raw:
            kw["gamma_grid"] = parse_gamma_grid(raw["gamma"])
        for key in ("estimators", "classifiers"):
            if key in raw:
                kw[key] = tuple(raw[key])
        b = raw.get("baselines", {})
        for key in ("folds", "repetitions", "bootstrap_samples"):
            if key in b:
                kw[key] = int(b[key])
        t = raw.get("tuning", {})
        if "range" in t:
            kw["tuning_range"] = tuple(float(v) for v in t["range"])
        if "grid" in t:
            kw["tuning_grid"] = int(t["grid"])
        out = raw.get("output", {})
        if "path" in out:
            kw["output"] = str(out["path"])
        if "format" in out:
            kw["format"] = str(out["format"])
    except TypeError as exc:
        raise ConfigError(f"invalid config entry: {exc}") from None
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**kw)


# ---------------------------------------------------------------------------
# RMS experiment


@dataclass(frozen=True)
class RmsSummary:
    estimator: str
    classifier: str
    gamma: float
    bias: float
    variance: float
    rms: float
    trials: int
    skipped: int


def rms_summary(estimator: str, classifier: str, gamma: float, deviations, skipped: int = 0) -> RmsSummary:
    """Bias, variance (population) and ``sqrt(bias^2 + variance)`` of ``estimate - truth``."""
    e = np.asarray(deviations, dtype=float)
    if e.size == 0:
        nan = float("nan")
        return RmsSummary(estimator, classifier, gamma, nan, nan, nan, 0, skipped)
    bias = float(np.mean(e))
    var = float(np.mean((e - bias) ** 2))
    return RmsSummary(estimator, classifier, gamma, bias, var, math.sqrt(bias**2 + var), int(e.size), skipped)


@dataclass(frozen=True)
class RmsResult:
    summary: list[RmsSummary]
    trials: list[dict]


class _DataSource:
    """Draws training sets and defines the reference ("true") error per trial."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        if cfg.synthetic:
            self.truth = build_synthetic(cfg.geometry)
        else:
            geo = cfg.geometry
            pool = load_libsvm(geo.train, geo.labels, geo.n_features).data
            self.test = None
            if geo.test is not None:
                self.test = load_libsvm(geo.test, geo.labels, geo.n_features).data
                p = max(pool.p, self.test.p)
                if pool.p < p:
                    pool = load_libsvm(geo.train, geo.labels, p).data
                if self.test.p < p:
                    self.test = load_libsvm(geo.test, geo.labels, p).data
            self.pool = pool
            if self.pool.n0 < geo.n0 or self.pool.n1 < geo.n1:
                raise ConfigError(
                    f"training pool has {self.pool.n0}/{self.pool.n1} samples, need {geo.n0}/{geo.n1}")

    def draw(self, trial: int) -> tuple[TrainingSet, TrainingSet | None]:
        cfg = self.cfg
        if cfg.synthetic:
            g = cfg.geometry
            train = sample_training(self.truth, g.n0, g.n1, make_rng(cfg.seed, _TRAIN, trial))
            return train, None
        g = cfg.geometry
        rng = make_rng(cfg.seed, _SUBSET, trial)
        picks = [rng.permutation(np.flatnonzero(self.pool.labels == c)) for c in (0, 1)]
        chosen = np.concatenate([picks[0][: g.n0], picks[1][: g.n1]])
        train = self.pool.subset(np.sort(chosen))
        if self.test is not None:
            return train, self.test
        rest = np.setdiff1d(np.arange(self.pool.n), chosen)
        return train, self.pool.subset(rest)

    def test_set(self, trial: int, given: TrainingSet | None) -> TrainingSet:
        if given is not None:
            return given
        m = self.cfg.test_size
        return sample_training(self.truth, m, m, make_rng(self.cfg.seed, _TEST, trial))

    def reference(self, fit, kind: Classifier, trial: int, test: TrainingSet | None) -> float:
        if self.cfg.synthetic and kind is Classifier.RLDA:
            return exact_error_rlda(fit, self.truth).total
        return empirical_error(fit, kind, self.test_set(trial, test)).total


def _estimate_all(cfg: ExperimentConfig, fit, train: TrainingSet, kind: Classifier, trial: int) -> dict:
    """Map estimator tag -> value or the error message that stopped it."""
    out: dict = {}
    seed = (cfg.seed, _BASELINE, trial)
    boot = None
    for tag in cfg.estimators:
        try:
            if tag == "g":
                out[tag] = g_estimate(fit, kind).total
            elif tag == "plugin":
                out[tag] = plugin_error(fit, kind).total
            elif tag == "cv":
                out[tag] = cv_error(train, fit.gamma, kind, cfg.baseline(BaselineMethod.CV), seed=seed).total
            else:
                if boot is None:
                    boot = bootstrap_error(train, fit.gamma, kind, cfg.baseline(BaselineMethod.B632), seed=seed)
                out[tag] = boot.details["b632" if tag == "b632" else "b632plus"]
        except RdaError as exc:
            out[tag] = exc
    return out


def run_rms_experiment(cfg: ExperimentConfig) -> RmsResult:
    """Per trial: draw, fit, reference error, every configured estimator; then bias/variance/RMS."""
    source = _DataSource(cfg)
    rows: list[dict] = []
    for trial in range(cfg.trials):
        train, test = source.draw(trial)
        base = fit_statistics(train, cfg.gamma_grid[0])
        for gamma in cfg.gamma_grid:
            fit = base.with_gamma(gamma)
            for name in cfg.classifiers:
                kind = Classifier(name)
                truth = source.reference(fit, kind, trial, test)
                for tag, value in _estimate_all(cfg, fit, train, kind, trial).items():
                    ok = not isinstance(value, Exception)
                    rows.append({
                        "trial": trial, "classifier": kind.value, "gamma": gamma, "estimator": tag,
                        "estimate": float(value) if ok else None, "truth": truth,
                        "deviation": float(value) - truth if ok else None,
                        "status": "ok" if ok else f"skipped: {type(value).__name__}: {value}",
                    })
    summary = []
    for gamma in cfg.gamma_grid:
        for kind in cfg.classifiers:
            for tag in cfg.estimators:
                sel = [r for r in rows if r["gamma"] == gamma and r["classifier"] == kind and r["estimator"] == tag]
                dev = [r["deviation"] for r in sel if r["status"] == "ok"]
                summary.append(rms_summary(tag, kind, gamma, dev, len(sel) - len(dev)))
    return RmsResult(summary, rows)


def run_real_data(cfg: ExperimentConfig) -> RmsResult:
    if cfg.synthetic:
        raise ConfigError("real-data runs need a [dataset] section or --train")
    return run_rms_experiment(cfg)


# ---------------------------------------------------------------------------
# gamma sweep and tuning


def run_gamma_sweep(cfg: ExperimentConfig) -> list[dict]:
    """Average error per ``(gamma, classifier, method)`` over the trials."""
    source = _DataSource(cfg)
    acc: dict[tuple, list] = {}
    skipped: dict[tuple, int] = {}

    def add(key, value):
        if isinstance(value, Exception):
            skipped[key] = skipped.get(key, 0) + 1
            acc.setdefault(key, [])
        else:
            acc.setdefault(key, []).append(float(value))

    for trial in range(cfg.trials):
        train, test = source.draw(trial)
        base = fit_statistics(train, cfg.gamma_grid[0])
        test = None if cfg.synthetic and Classifier.RQDA.value not in cfg.classifiers else source.test_set(trial, test)
        for gamma in cfg.gamma_grid:
            fit = base.with_gamma(gamma)
            for name in cfg.classifiers:
                kind = Classifier(name)
                if test is not None:
                    add((gamma, kind.value, "empirical"), empirical_error(fit, kind, test).total)
                if cfg.synthetic and kind is Classifier.RLDA:
                    add((gamma, kind.value, "exact"), exact_error_rlda(fit, source.truth).total)
                for tag, value in _estimate_all(cfg, fit, train, kind, trial).items():
                    add((gamma, kind.value, tag), value)
    if cfg.synthetic:
        g = cfg.geometry
        for gamma in cfg.gamma_grid:
            for name in cfg.classifiers:
                solver = lda_deterministic_error if name == Classifier.RLDA.value else qda_deterministic_error
                try:
                    value = solver(source.truth, g.n0, g.n1, gamma).total
                except RdaError as exc:
                    value = exc
                key = (gamma, name, "deterministic")
                if isinstance(value, Exception):
                    skipped[key] = cfg.trials
                    acc.setdefault(key, [])
                else:
                    acc[key] = [value] * cfg.trials
    order = {"empirical": 0, "exact": 1, "deterministic": 2, **{t: 3 + k for k, t in enumerate(ESTIMATORS)}}
    rows = []
    for key in sorted(acc, key=lambda k: (k[0], k[1], order[k[2]])):
        vals = acc[key]
        rows.append({
            "gamma": key[0], "classifier": key[1], "method": key[2],
            "error": float(np.mean(vals)) if vals else None,
            "trials": len(vals), "skipped": skipped.get(key, 0),
        })
    return rows


def run_tuning(cfg: ExperimentConfig) -> list[dict]:
    """Per trial and classifier: the G-estimate minimizer and the two-stage choice."""
    source = _DataSource(cfg)
    lo, hi = cfg.tuning_range
    rows = []
    for trial in range(cfg.trials):
        train, test = source.draw(trial)
        test = source.test_set(trial, test)
        for name in cfg.classifiers:
            kind = Classifier(name)
            row = {"trial": trial, "classifier": kind.value}
            try:
                g_res = minimize_gamma(g_objective(train, kind), lo, hi, cfg.tuning_grid)
                two = two_stage_optimize(train, kind, test, lo, hi, cfg.tuning_grid)
            except RdaError as exc:
                row.update(status=f"skipped: {type(exc).__name__}: {exc}")
                rows.append(row)
                continue
            lo2, hi2 = stage_two_interval(g_res.gamma_star, train.p)
            row.update(
                gamma_g=g_res.gamma_star, g_estimate=g_res.objective_at_star,
                interval_lo=lo2, interval_hi=hi2,
                gamma_two_stage=two.gamma_star, validation_error=two.objective_at_star,
            )
            if cfg.synthetic and kind is Classifier.RLDA:
                base = fit_statistics(train, 1.0)
                row["exact_at_gamma_g"] = exact_error_rlda(base.with_gamma(g_res.gamma_star), source.truth).total
                row["exact_at_two_stage"] = exact_error_rlda(base.with_gamma(two.gamma_star), source.truth).total
            row["status"] = "ok"
            rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# report files


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return repr(v) if math.isfinite(v) else ("nan" if math.isnan(v) else ("inf" if v > 0 else "-inf"))
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def _csv_text(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])
    return buf.getvalue()


def _columns(rows: list[dict], preferred: list[str]) -> list[str]:
    cols = [c for c in preferred if any(c in r for r in rows)]
    extra = sorted({k for r in rows for k in r} - set(cols))
    return cols + extra


TRIAL_COLUMNS = ["trial", "classifier", "gamma", "estimator", "estimate", "truth", "deviation", "status"]
SUMMARY_COLUMNS = ["estimator", "classifier", "gamma", "bias", "variance", "rms", "trials", "skipped"]
SWEEP_COLUMNS = ["gamma", "classifier", "method", "error", "trials", "skipped"]
TUNE_COLUMNS = ["trial", "classifier", "gamma_g", "g_estimate", "interval_lo", "interval_hi",
                "gamma_two_stage", "validation_error", "exact_at_gamma_g", "exact_at_two_stage", "status"]


def _emit(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_report(path: str | os.PathLike, cfg: ExperimentConfig, *, summary: list[dict] | None = None,
                 trials: list[dict] | None = None, fmt: str | None = None, columns: list[str] | None = None) -> list[str]:
    """Write results; the first line of every file is the only one carrying a timestamp.

    CSV puts ``summary`` (or ``trials`` when there is no summary) in ``path``
    and, when both exist, the trial rows next to it as ``<stem>.trials.csv``.
    JSON writes one object with ``generated``, ``config``, ``summary`` and
    ``trials``. ``path == "-"`` writes the main table to stdout. Returns the
    written paths.
    """
    fmt = fmt or cfg.format
    path = os.fspath(path)
    stamp = _timestamp()
    written = []
    if fmt == "json":
        body = json.dumps(
            {"config": _jsonable(cfg.to_dict()), "summary": _jsonable(summary or []), "trials": _jsonable(trials or [])},
            indent=1, allow_nan=False,
        )
        # the stamp sits alone on the second line of the object
        text = "{\n \"generated\": " + json.dumps(stamp) + ",\n" + body[2:] + "\n"
        _emit(path, text)
        return [path]
    if fmt != "csv":
        raise ConfigError(f"unknown format {fmt!r}")
    header = f"# generated {stamp}\n"
    main_rows = summary if summary is not None else (trials or [])
    main_cols = columns or _columns(main_rows, SUMMARY_COLUMNS if summary is not None else TRIAL_COLUMNS)
    _emit(path, header + _csv_text(main_rows, main_cols))
    written.append(path)
    if summary is not None and trials and path != "-":
        stem, _ = os.path.splitext(path)
        tpath = stem + ".trials.csv"
        with open(tpath, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + _csv_text(trials, _columns(trials, TRIAL_COLUMNS)))
        written.append(tpath)
    return written
