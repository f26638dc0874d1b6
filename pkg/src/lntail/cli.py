"""Configuration-driven experiment runner emitting CSV.

Config files are JSON objects::

    {
      "mu": [4, 4, 4, 4],
      "sigma": [[1, 2, 2, 2], [2, 5, 4, 4], [2, 4, 4.5, 4], [2, 4, 4, 4.5]],
      "gamma_grid": {"log_gamma_start": 3, "log_gamma_end": -2, "points": 6},
      "samples": 100000,
      "seed": 2024,
      "estimators": ["naive", "is", "is-cv-beta-star", "is-cv-fixed"],
      "confidence_level": 0.95,
      "workers": 1,
      "output_path": null
    }

``gamma_grid`` may also be an explicit list of positive thresholds. Either
way thresholds must be strictly decreasing. ``workers`` only changes how fast
chunks are produced, never the numbers.
"""

import argparse
import csv
from dataclasses import dataclass, field, replace
import io
import json
import logging
import math
import sys
import time

import numpy as np

from . import __version__
from .errors import AssumptionViolated, ConfigError, DomainError, LnTailError
from .metrics import (
    confidence_interval,
    efficiency_row,
    lemma_diagnostics,
)
from .model import alpha_asymptotic, check_assumption_a, validate_problem
from .montecarlo import (
    ESTIMATORS,
    IS,
    ISCV_FIXED,
    ISCV_STAR,
    NAIVE,
    RNG_FAMILY,
    RngStream,
    control_variate_mean,
    derive_stream_id,
    is_cv,
    is_mean_shift,
    naive_mc,
)
from .numerics import quad_form
from .shift import plan_shift

logger = logging.getLogger(__name__)

CV_ESTIMATORS = (ISCV_STAR, ISCV_FIXED)
PREFIX = {NAIVE: "naive", IS: "is", ISCV_STAR: "iscv_star", ISCV_FIXED: "iscv_fixed"}
ESTIMATE_FIELDS = ("value", "log_value", "variance", "second_moment", "ci_low", "ci_high", "m")
METRIC_FIELDS = ("rho_hat", "beta_hat", "cv2_is", "cv2_iscv_fixed", "cv2_iscv_star",
                 "xi_fixed", "xi_star", "alpha_asymptotic", "error")
SWEEP_COLUMNS = (
    ("gamma", "log_gamma")
    + tuple(f"{PREFIX[t]}_{f}" for t in ESTIMATORS for f in ESTIMATE_FIELDS)
    + METRIC_FIELDS
)
DIAGNOSE_COLUMNS = (
    "gamma", "log_gamma", "m", "p_gamma", "p1_hat", "p1_se", "p1_within_3se",
    "gap_hat", "gap_se", "discrepancies", "low_count",
    "ez2_closed", "ez2_hat", "ez2_se", "el4_closed", "el4_hat", "el4_se", "et2_hat",
    "cauchy_lhs", "cauchy_rhs", "c1_implied", "a_i0", "gap_rate",
    "quad", "quad_closed", "quad_rel_err",
    "alpha_hat_iscv", "alpha_asymptotic", "alpha_ratio", "error",
)

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


@dataclass(frozen=True)
class ExperimentConfig:
    mu: tuple
    sigma: tuple
    gamma_grid: object
    samples: int = 1_000_000
    seed: int = 0
    estimators: tuple = ESTIMATORS
    confidence_level: float = 0.95
    workers: int = 1
    output_path: str | None = None
    thresholds: tuple = field(default=(), compare=False, repr=False)

    @classmethod
    def from_dict(cls, data):
        missing = [k for k in ("mu", "sigma", "gamma_grid") if k not in data]
        if missing:
            raise ConfigError(f"config is missing keys: {', '.join(missing)}")
        unknown = set(data) - {f for f in cls.__dataclass_fields__ if f != "thresholds"}
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg = cls(
            mu=tuple(float(v) for v in data["mu"]),
            sigma=tuple(tuple(float(v) for v in row) for row in data["sigma"]),
            gamma_grid=data["gamma_grid"],
            samples=int(data.get("samples", 1_000_000)),
            seed=int(data.get("seed", 0)),
            estimators=_parse_estimators(data.get("estimators", ESTIMATORS)),
            confidence_level=float(data.get("confidence_level", 0.95)),
            workers=int(data.get("workers", 1)),
            output_path=data.get("output_path"),
        )
        return cfg.validated()

    def validated(self):
        if self.samples < 2:
            raise ConfigError(f"samples must be >= 2, got {self.samples}")
        if not 0 <= self.confidence_level < 1:
            raise ConfigError("confidence_level must lie in [0, 1)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return replace(self, thresholds=_expand_grid(self.gamma_grid))

    def to_dict(self):
        grid = self.gamma_grid
        return {
            "mu": list(self.mu),
            "sigma": [list(r) for r in self.sigma],
            "gamma_grid": list(grid) if isinstance(grid, (list, tuple)) else dict(grid),
            "samples": self.samples,
            "seed": self.seed,
            "estimators": list(self.estimators),
            "confidence_level": self.confidence_level,
            "workers": self.workers,
            "output_path": self.output_path,
        }

    def echo(self):
        """Config as JSON without ``workers``, which never affects results."""
        d = self.to_dict()
        d.pop("workers")
        return json.dumps(d, sort_keys=True)


def _parse_estimators(value):
    if isinstance(value, str):
        value = [v.strip() for v in value.split(",") if v.strip()]
    tags = tuple(value)
    bad = [t for t in tags if t not in ESTIMATORS]
    if bad or not tags:
        raise ConfigError(f"estimators must be a nonempty subset of {ESTIMATORS}, got {tags}")
    return tuple(t for t in ESTIMATORS if t in tags)


def _expand_grid(grid):
    """Return ``((gamma, log_gamma), ...)`` for an explicit or log-spaced grid."""
    if isinstance(grid, dict):
        try:
            start = float(grid["log_gamma_start"])
            end = float(grid["log_gamma_end"])
            points = int(grid["points"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad log-spaced gamma_grid {grid!r}") from exc
        if points < 1:
            raise ConfigError("gamma_grid.points must be >= 1")
        logs = [start] if points == 1 else [float(v) for v in np.linspace(start, end, points)]
        pairs = tuple((math.exp(lg), lg) for lg in logs)
    elif isinstance(grid, (list, tuple)):
        gammas = [float(g) for g in grid]
        if not gammas or any(not g > 0 for g in gammas):
            raise ConfigError("gamma_grid values must be positive")
        pairs = tuple((g, math.log(g)) for g in gammas)
    else:
        raise ConfigError("gamma_grid must be a list or a log-spaced spec")
    logs = [lg for _, lg in pairs]
    if any(b >= a for a, b in zip(logs, logs[1:])):
        raise ConfigError("gamma_grid must be strictly decreasing")
    return pairs


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(data)


def _context(exc, where):
    """Re-raise ``exc`` as the same type with ``where`` prefixed to the message."""
    try:
        new = type(exc)(f"{where}: {exc}")
    except TypeError:  # pragma: no cover
        return exc
    if hasattr(exc, "pivot"):
        new.pivot = exc.pivot
    return new


def _setup(config):
    p = validate_problem(config.mu, config.sigma)
    return p, check_assumption_a(p)


def run_estimate(config, gamma, gamma_index=0, *, problem=None, report=None):
    """Run the configured estimators at one threshold.

    Each estimator draws from its own stream, keyed by
    ``(gamma_index, estimator tag)``. Returns ``{tag: Estimate}``.
    """
    if problem is None:
        problem, report = _setup(config)
    plan = plan_shift(problem, report, gamma)
    out = {}
    for tag in config.estimators:
        stream = RngStream(config.seed, derive_stream_id(gamma_index, tag))
        kw = dict(m=config.samples, stream=stream, workers=config.workers)
        try:
            if tag == NAIVE:
                est = naive_mc(problem, gamma, **kw)
            elif tag == IS:
                est = is_mean_shift(problem, plan, gamma, **kw)
            else:
                mode = "estimated" if tag == ISCV_STAR else "fixed"
                est = is_cv(problem, plan, report, gamma, beta_mode=mode, **kw)
        except LnTailError as exc:
            raise _context(exc, f"gamma={gamma:.17g}, estimator={tag}") from exc
        out[tag] = replace(est, ci95=confidence_interval(est, config.confidence_level))
    return out


@dataclass
class SweepRow:
    gamma: float
    log_gamma: float
    estimates: dict
    efficiency: object = None
    error: str = ""
    wall_time: float = 0.0


@dataclass
class SweepReport:
    rows: list
    config_echo: str
    warnings: list = field(default_factory=list)

    @property
    def failed(self):
        return any(r.error for r in self.rows)

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# lntail {__version__}\n")
        buf.write(f"# rng: {RNG_FAMILY}\n")
        buf.write(f"# config: {self.config_echo}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in self.rows:
            w.writerow(_fmt(v) for v in _sweep_record(row))
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def _sweep_record(row):
    rec = [row.gamma, row.log_gamma]
    for tag in ESTIMATORS:
        e = row.estimates.get(tag)
        if e is None:
            rec.extend([None] * len(ESTIMATE_FIELDS))
        else:
            rec.extend([e.value, e.log_value, e.variance, e.second_moment,
                        e.ci95[0], e.ci95[1], e.m])
    eff = row.efficiency
    if eff is None:
        rec.extend([None] * (len(METRIC_FIELDS) - 1))
    else:
        rec.extend([eff.rho_hat, eff.beta_hat, eff.cv2_is, eff.cv2_iscv, eff.cv2_iscv_star,
                    eff.xi_fixed, eff.xi_estimated, eff.alpha_asymptotic])
    rec.append(row.error or None)
    return [None if isinstance(v, float) and math.isnan(v) else v for v in rec]


def run_sweep(config):
    """Run every estimator at every threshold of the grid.

    Without a dominant component the control-variate estimators are dropped
    (with a warning) and the general tilt is used. A failing row records its
    error and the sweep continues.
    """
    problem, report = _setup(config)
    notes = []
    if not report.holds and any(t in CV_ESTIMATORS for t in config.estimators):
        msg = ("no dominant component (Sigma_ii < Sigma_ij for all j != i fails); "
               "control-variate estimators disabled, using the general mean shift")
        logger.warning(msg)
        notes.append(msg)
        config = replace(config, estimators=tuple(t for t in config.estimators
                                                  if t not in CV_ESTIMATORS) or (IS,))
    rows = []
    for k, (gamma, log_gamma) in enumerate(config.thresholds):
        start = time.perf_counter()
        row = SweepRow(gamma, log_gamma, {})
        try:
            row.estimates = run_estimate(config, gamma, k, problem=problem, report=report)
            row.efficiency = efficiency_row(
                problem, report, gamma,
                row.estimates.get(IS), row.estimates.get(ISCV_FIXED), row.estimates.get(ISCV_STAR),
            )
        except (LnTailError, ArithmeticError, ValueError) as exc:
            row.error = f"{type(exc).__name__}: {exc}"
            logger.error("row %d (gamma=%g) failed: %s", k, gamma, row.error)
        row.wall_time = time.perf_counter() - start
        rows.append(row)
    return SweepReport(rows=rows, config_echo=config.echo(), warnings=notes)


def diagnose(config, gamma, gamma_index=0, *, problem=None, report=None):
    """Closed-form versus empirical moment checks at one threshold.

    Returns a dict keyed by :data:`DIAGNOSE_COLUMNS`.
    """
    if problem is None:
        problem, report = _setup(config)
    if not report.holds:
        raise AssumptionViolated("diagnostics need a dominant component")
    plan = plan_shift(problem, report, gamma)
    i = report.index
    stream = RngStream(config.seed, derive_stream_id(gamma_index, "diagnose"))
    d = lemma_diagnostics(problem, plan, report, gamma, config.samples, stream, config.workers)
    cv = is_cv(problem, plan, report, gamma, config.samples,
               RngStream(config.seed, derive_stream_id(gamma_index, ISCV_FIXED)),
               beta_mode="fixed", workers=config.workers)
    quad_closed = (math.log(gamma) - problem.mu[i]) ** 2 / problem.sigma[i, i]
    quad_direct = quad_form(problem, plan.lam)
    try:
        asym = alpha_asymptotic(problem, report, gamma)
    except DomainError:
        asym = math.nan
    rec = {k: getattr(d, k) for k in DIAGNOSE_COLUMNS if hasattr(d, k)}
    rec.update(
        log_gamma=math.log(gamma),
        p_gamma=control_variate_mean(problem, report, gamma),
        quad=quad_direct,
        quad_closed=quad_closed,
        quad_rel_err=abs(quad_direct - quad_closed) / max(quad_closed, 1e-300),
        alpha_hat_iscv=cv.value,
        alpha_asymptotic=asym,
        alpha_ratio=cv.value / asym if asym > 0 else math.nan,
        error=None,
    )
    return rec


def diagnose_csv(config, records):
    buf = io.StringIO()
    buf.write(f"# lntail {__version__}\n# rng: {RNG_FAMILY}\n# config: {config.echo()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIAGNOSE_COLUMNS)
    for rec in records:
        vals = [rec.get(k) for k in DIAGNOSE_COLUMNS]
        w.writerow(_fmt(None if isinstance(v, float) and math.isnan(v) else v) for v in vals)
    return buf.getvalue()


def read_csv(text):
    """Parse CSV produced here into ``(config_dict, rows)``; numbers come back as floats."""
    config = None
    lines = []
    for line in text.splitlines():
        if line.startswith("# config: "):
            config = json.loads(line[len("# config: "):])
        elif not line.startswith("#"):
            lines.append(line)
    rows = []
    for rec in csv.DictReader(lines):
        out = {}
        for k, v in rec.items():
            if v == "":
                out[k] = None
            elif v in ("true", "false"):
                out[k] = v == "true"
            else:
                try:
                    out[k] = float(v)
                except ValueError:
                    out[k] = v
        rows.append(out)
    return config, rows


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lntail",
        description="Left-tail probabilities of sums of correlated log-normals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("estimate", "run the estimators at one threshold"),
        ("sweep", "run the estimators over the threshold grid"),
        ("diagnose", "closed-form vs empirical moment diagnostics"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="JSON experiment config")
        sp.add_argument("--gamma", type=float, help="single threshold overriding the grid")
        sp.add_argument("--samples", type=int, help="samples per estimator per threshold")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--estimator", help="comma-separated estimator tags")
        sp.add_argument("--output", help="CSV destination (default: stdout)")
        sp.add_argument("--workers", type=int, help="threads producing sample chunks")
    return parser


def _apply_overrides(config, args):
    changes = {}
    if args.gamma is not None:
        changes["gamma_grid"] = [args.gamma]
    if args.samples is not None:
        changes["samples"] = args.samples
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.estimator is not None:
        changes["estimators"] = _parse_estimators(args.estimator)
    if args.workers is not None:
        changes["workers"] = args.workers
    return replace(config, **changes).validated() if changes else config


def _write(text, path):
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = _apply_overrides(load_config(args.config), args)
        problem, report = _setup(config)
        # --output picks a destination only; the echoed config keeps the file's value.
        dest = args.output if args.output is not None else config.output_path
    except LnTailError as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG

    if args.command == "estimate":
        if len(config.thresholds) != 1:
            config = replace(config, gamma_grid=[config.thresholds[0][0]]).validated()
    if args.command in ("estimate", "sweep"):
        report_ = run_sweep(config)
        _write(report_.to_csv(), dest)
        return EXIT_PARTIAL if report_.failed else EXIT_OK

    if not report.holds:
        logger.error("diagnose needs a dominant component (Sigma_ii < Sigma_ij for all j != i)")
        return EXIT_CONFIG
    records, failed = [], False
    for k, (gamma, log_gamma) in enumerate(config.thresholds):
        try:
            records.append(diagnose(config, gamma, k, problem=problem, report=report))
        except (LnTailError, ArithmeticError, ValueError) as exc:
            failed = True
            records.append({"gamma": gamma, "log_gamma": log_gamma,
                            "error": f"{type(exc).__name__}: {exc}"})
    _write(diagnose_csv(config, records), dest)
    return EXIT_PARTIAL if failed else EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
