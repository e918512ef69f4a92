"""Config-driven experiment runner with summary verdicts.

Each experiment measures a growth exponent (group balls, flowed fiber
volumes, reduction pairs, integral pairs) and compares it against the
bound the manifold catalog predicts for it.  The comparison rule is
fixed: PASS when measured >= bound - tolerance, or when the series
classifies as exponential and the bound is infinite; anything else is
FAIL, and propagated errors are recorded as ERROR rows.  Outputs are
CSV files plus an appended summary line per experiment; every artifact
is byte-deterministic for a given config (wall-clock seconds live only
in the summary).
"""

from __future__ import annotations

import argparse
import configparser
import math
import os
import sys
import time
from dataclasses import dataclass, fields, replace

from .errors import (
    BudgetExceeded,
    ConfigError,
    MalformedDescriptor,
    SlowvolError,
)
from . import gamma_catalog
from . import group_growth
from .fitting import cumulative_trapezoid
from .flow_models import FlowConfig, parse_model
from .volume_growth import (
    MeshThresholds,
    VolumeSeries,
    evolve_and_measure,
    initial_fiber_sphere,
    integral_growth_check,
    reduction_series,
    slow_vol_fit,
    write_volume_csv,
)

KINDS = (
    "group_growth",
    "flow_growth",
    "gamma_eval",
    "reduction_check",
    "integral_lemma",
)

# synthetic integrand profiles for the integral-lemma experiment
INTEGRAND_PROFILES = {
    "one": lambda r: 1.0,
    "linear": lambda r: r,
    "cubic": lambda r: r ** 3,
    "sin_log": lambda r: r ** 2 * (2.0 + math.sin(math.log(r))),
}

DEFAULT_TIMES = tuple(float(2 ** k) for k in range(11))


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: what to run and with which numeric parameters."""

    name: str
    kind: str
    model: str | None = None       # flow model expression, parse_model syntax
    group: str | None = None       # builtin generator-set name or file path
    descriptor: str | None = None  # manifold expression for the bound
    base_point: tuple = ()
    m_max: int = 12
    element_budget: int = 2_000_000
    times: tuple = ()
    step: float = 1e-3
    integrator: str = "implicit_midpoint"
    refine_threshold: float = 0.25
    threshold_growth: float = 0.0  # theta_k = refine_threshold * (t_k/t_0)^g
    window_fraction: float = 0.5
    volume_budget: int = 200_000
    resolution: int = 64
    inner_radius: float = 0.05
    tolerance: float = 0.1
    integrand: str = "cubic"
    r_count: int = 64
    r_max: float = 256.0
    out_dir: str = "runs"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(
                f"[{self.name}] unknown kind {self.kind!r}, expected one of {KINDS}"
            )
        for field in ("m_max", "element_budget", "step", "refine_threshold",
                      "window_fraction", "volume_budget", "resolution",
                      "r_count", "r_max"):
            if getattr(self, field) <= 0:
                raise ConfigError(f"[{self.name}] {field} must be positive")
        if self.tolerance < 0 or self.threshold_growth < 0:
            raise ConfigError(f"[{self.name}] tolerances must be non-negative")
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(
            self, "base_point", tuple(float(c) for c in self.base_point)
        )


@dataclass(frozen=True)
class SummaryRow:
    experiment: str
    kind: str
    measured: float            # math.inf for exponential, math.nan on error
    classification: str        # polynomial | exponential | inconclusive | exact | error
    bound: float
    verdict: str               # PASS | FAIL | ERROR
    seconds: float
    message: str = ""

    def line(self) -> str:
        parts = [
            self.experiment,
            self.kind,
            f"measured={_fmt(self.measured, self.classification)}",
            f"bound={_fmt(self.bound)}",
            f"verdict={self.verdict}",
            f"seconds={self.seconds:.1f}",
        ]
        if self.message:
            parts.append(self.message)
        return "  ".join(parts)


def _fmt(value, classification=None):
    if classification == "exponential":
        return "exponential"
    if value != value:  # nan
        return "n/a"
    if math.isinf(value):
        return "inf"
    return format(value, ".6g")


def _verdict(measured, classification, bound, tolerance):
    """The fixed comparison rule; no hidden tolerances."""
    if classification == "error":
        return "ERROR"
    if classification == "exponential":
        return "PASS" if math.isinf(bound) else "FAIL"
    if classification == "inconclusive" or measured != measured:
        return "FAIL"
    return "PASS" if measured >= bound - tolerance else "FAIL"


# ---------------------------------------------------------------------------
# experiment pipelines


def _resolve_generators(config):
    if not config.group:
        raise ConfigError(f"[{config.name}] group_growth needs a group")
    builtin = group_growth.BUILTIN_GENERATORS.get(config.group)
    if builtin is not None:
        return builtin()
    if os.path.exists(config.group):
        return group_growth.load_generator_file(config.group)
    raise ConfigError(
        f"[{config.name}] unknown group {config.group!r}; builtins: "
        f"{sorted(group_growth.BUILTIN_GENERATORS)}"
    )


def _run_group_growth(config, out_dir):
    gens = _resolve_generators(config)
    series = group_growth.ball_counts(gens, config.m_max, config.element_budget)
    group_growth.write_growth_csv(
        os.path.join(out_dir, f"{config.name}_counts.csv"), series
    )
    fit = group_growth.slow_growth_exponent(series, config.window_fraction)
    try:
        ranks = group_growth.malcev_lcs_ranks(gens)
        bound = float(group_growth.bass_guivarch(ranks.ranks))
    except SlowvolError:
        bound = math.inf  # not unitriangular-embeddable: expect exponential
    return fit.exponent, fit.classification, bound


def _default_base(model):
    if model.needs_projection:
        return (1.0,) + (0.0,) * (model.config_dim - 1)
    return (0.0,) * model.config_dim


def _flow_samples(config, model, flow_config, times):
    """Stitched evolve_and_measure calls with a scaled threshold per time.

    Returns (series or None, budget_exhausted).  The threshold schedule
    theta_k = refine_threshold * (t_k / t_0)^threshold_growth keeps the
    mesh resolution proportional to the growing image scale; growth 0 is
    a fixed threshold and a single call.
    """
    if config.threshold_growth == 0.0:
        try:
            series = evolve_and_measure(
                model,
                initial_fiber_sphere(model, _base_point(config, model),
                                     config.resolution),
                times,
                flow_config,
                config.refine_threshold,
                config.volume_budget,
            )
            return series, False
        except BudgetExceeded as err:
            return err.partial, True

    mesh = initial_fiber_sphere(model, _base_point(config, model),
                                config.resolution)
    ts, vols, verts = [], [], []
    exhausted = False
    for t_k in times:
        theta = config.refine_threshold * (t_k / times[0]) ** config.threshold_growth
        try:
            step_series = evolve_and_measure(
                model, mesh, [t_k], flow_config, theta,
                config.volume_budget, certificate=False,
            )
        except BudgetExceeded:
            exhausted = True
            break
        ts.append(step_series.times[0])
        vols.append(step_series.volumes[0])
        verts.append(step_series.vertex_counts[0])
    if not ts:
        return None, exhausted
    series = VolumeSeries(
        times=ts,
        volumes=vols,
        vertex_counts=verts,
        mesh_kind=mesh.kind,
        resolution_certificate=None,
    )
    return series, exhausted


def _base_point(config, model):
    return config.base_point or _default_base(model)


def _run_flow_growth(config, out_dir):
    if not config.model:
        raise ConfigError(f"[{config.name}] flow_growth needs a model")
    if not config.descriptor:
        raise ConfigError(f"[{config.name}] flow_growth needs a descriptor")
    bound = float(gamma_catalog.theorem_bound(gamma_catalog.parse(config.descriptor)))
    model = parse_model(config.model)
    flow_config = FlowConfig(step=config.step, integrator=config.integrator)
    times = list(config.times) or list(DEFAULT_TIMES)

    series, exhausted = _flow_samples(config, model, flow_config, times)
    csv_path = os.path.join(out_dir, f"{config.name}_volumes.csv")
    if series is not None:
        write_volume_csv(csv_path, series)
    else:
        with open(csv_path, "w", newline="") as fh:
            fh.write("t,volume,vertices\n")

    if exhausted:
        # refinement could not keep up within the vertex budget: the
        # exponential signal, never a finite exponent
        return math.inf, "exponential", bound
    fit = slow_vol_fit(series, config.window_fraction)
    return fit.exponent, fit.classification, bound


def _run_gamma_eval(config, out_dir):
    if not config.descriptor:
        raise ConfigError(f"[{config.name}] gamma_eval needs a descriptor")
    result = gamma_catalog.gamma(gamma_catalog.parse(config.descriptor))
    rows = [
        ("descriptor", config.descriptor),
        ("gamma_pi1", _fmt(float(result.gamma_pi1))),
        ("gamma_loop", _fmt(float(result.gamma_loop))),
        ("gamma_total", _fmt(float(result.gamma_total))),
        ("theorem_bound", _fmt(float(result.theorem_bound))),
        ("dimension", str(result.dimension)),
        ("slow", str(result.slow).lower()),
    ]
    path = os.path.join(out_dir, f"{config.name}_gamma.csv")
    with open(path, "w", newline="") as fh:
        fh.write("field,value\n")
        for key, value in rows:
            fh.write(f"{key},{value}\n")
    # every nonempty closed manifold has gamma >= 1
    return float(result.gamma_total), "exact", 1.0


def _run_reduction_check(config, out_dir):
    if not config.model:
        raise ConfigError(f"[{config.name}] reduction_check needs a model")
    model = parse_model(config.model)
    flow_config = FlowConfig(step=config.step, integrator=config.integrator)
    times = list(config.times) or list(DEFAULT_TIMES)
    thresholds = MeshThresholds(
        refine_threshold=config.refine_threshold,
        volume_budget=config.volume_budget,
        resolution=config.resolution,
        inner_radius=config.inner_radius,
        window_fraction=config.window_fraction,
    )
    disc_series, sphere_series = reduction_series(
        model, _base_point(config, model), times, flow_config, thresholds
    )
    write_volume_csv(
        os.path.join(out_dir, f"{config.name}_disc.csv"), disc_series
    )
    write_volume_csv(
        os.path.join(out_dir, f"{config.name}_sphere.csv"), sphere_series
    )
    disc_fit = slow_vol_fit(disc_series, config.window_fraction)
    sphere_fit = slow_vol_fit(sphere_series, config.window_fraction)
    # reduction inequality: disc gains at most the one radial degree
    return sphere_fit.exponent + 1.0, sphere_fit.classification, disc_fit.exponent


def _run_integral_lemma(config, out_dir):
    profile = INTEGRAND_PROFILES.get(config.integrand)
    if profile is None:
        raise ConfigError(
            f"[{config.name}] unknown integrand {config.integrand!r}; "
            f"choices: {sorted(INTEGRAND_PROFILES)}"
        )
    ratio = config.r_max ** (1.0 / (config.r_count - 1))
    rs = [ratio ** k for k in range(config.r_count)]
    samples = [(r, profile(r)) for r in rs]
    F = [rs[0] * samples[0][1] + x
         for x in cumulative_trapezoid(rs, [f for _, f in samples])]
    path = os.path.join(out_dir, f"{config.name}_integral.csv")
    with open(path, "w", newline="") as fh:
        fh.write("r,f,F\n")
        for (r, f), F_r in zip(samples, F):
            fh.write(f"{float(r)!s},{float(f)!s},{float(F_r)!s}\n")
    integral_exponent, integrand_exponent = integral_growth_check(samples)
    # the lemma: integrand degree + 1 covers the integral degree
    return integrand_exponent + 1.0, "polynomial", integral_exponent


_PIPELINES = {
    "group_growth": _run_group_growth,
    "flow_growth": _run_flow_growth,
    "gamma_eval": _run_gamma_eval,
    "reduction_check": _run_reduction_check,
    "integral_lemma": _run_integral_lemma,
}


def run(config: ExperimentConfig) -> SummaryRow:
    """Run one experiment, write its artifacts, append its summary line."""
    os.makedirs(config.out_dir, exist_ok=True)
    start = time.perf_counter()
    message = ""
    try:
        measured, classification, bound = _PIPELINES[config.kind](
            config, config.out_dir
        )
    except SlowvolError as err:
        measured, classification, bound = math.nan, "error", math.nan
        message = f"{type(err).__name__}: {err}"
    seconds = time.perf_counter() - start
    row = SummaryRow(
        experiment=config.name,
        kind=config.kind,
        measured=measured,
        classification=classification,
        bound=bound,
        verdict=_verdict(measured, classification, bound, config.tolerance),
        seconds=seconds,
        message=message,
    )
    with open(os.path.join(config.out_dir, "summary.txt"), "a") as fh:
        fh.write(row.line() + "\n")
    return row


# ---------------------------------------------------------------------------
# config file handling

_INT_KEYS = {"m_max", "element_budget", "volume_budget", "resolution", "r_count"}
_FLOAT_KEYS = {
    "step", "refine_threshold", "threshold_growth", "window_fraction",
    "inner_radius", "tolerance", "r_max",
}
_KNOWN_KEYS = {f.name for f in fields(ExperimentConfig)} - {"name"}


def parse_times(text):
    """Times from "1 2 4 8" or "geom:start:stop:count"."""
    text = text.strip()
    if text.startswith("geom:"):
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"bad times spec {text!r}, want geom:start:stop:count")
        try:
            start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as err:
            raise ConfigError(f"bad times spec {text!r}: {err}") from None
        if start <= 0 or stop <= start or count < 2:
            raise ConfigError(f"bad times spec {text!r}: need 0 < start < stop")
        ratio = (stop / start) ** (1.0 / (count - 1))
        return tuple(start * ratio ** k for k in range(count))
    try:
        times = tuple(float(tok) for tok in text.replace(",", " ").split())
    except ValueError as err:
        raise ConfigError(f"bad times list {text!r}: {err}") from None
    if not times:
        raise ConfigError("times list is empty")
    return times


def _coerce(name, key, raw):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError as err:
        raise ConfigError(f"[{name}] bad value for {key}: {err}") from None
    if key == "times":
        return parse_times(raw)
    if key == "base_point":
        try:
            return tuple(float(tok) for tok in raw.replace(",", " ").split())
        except ValueError as err:
            raise ConfigError(f"[{name}] bad base_point: {err}") from None
    return raw


def _section_config(name, mapping, overrides=None):
    values = {}
    for key, raw in mapping.items():
        if key not in _KNOWN_KEYS and key != "kind":
            raise ConfigError(f"[{name}] unknown key {key!r}")
        values[key] = _coerce(name, key, raw)
    if overrides:
        values.update(overrides)
    if "kind" not in values:
        raise ConfigError(f"[{name}] missing kind")
    return ExperimentConfig(name=name, **values)


def load_config(path, out_dir=None) -> list[ExperimentConfig]:
    """All experiment sections of an INI file, in file order."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path!r} not found")
    overrides = {"out_dir": out_dir} if out_dir else None
    configs = []
    for section in parser.sections():
        configs.append(_section_config(section, parser[section], overrides))
    if not configs:
        raise ConfigError(f"config file {path!r} has no experiment sections")
    return configs


# ---------------------------------------------------------------------------
# command line


def _flag_overrides(args, keys):
    overrides = {}
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return overrides


def _single_config(args, kind, name, extra):
    """Build a one-shot config: file section (if given) under flag precedence."""
    base = {}
    if args.config:
        parser = configparser.ConfigParser(interpolation=None)
        if not parser.read(args.config):
            raise ConfigError(f"config file {args.config!r} not found")
        if parser.has_section(name):
            base = dict(parser[name])
    base["kind"] = kind
    config = _section_config(name, base)
    return replace(config, **extra)


def _print_row(row: SummaryRow):
    print(row.line())
    return 0 if row.verdict == "PASS" else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="slowvol",
        description="growth experiments: measured exponents vs catalog bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run every experiment in a config file")
    run_p.add_argument("config")
    run_p.add_argument("--out", help="output directory (overrides config)")

    gamma_p = sub.add_parser("gamma", help="evaluate a manifold descriptor")
    gamma_p.add_argument("descriptor", help='e.g. "T(2) x S(2)" or "Nil(1)"')
    gamma_p.add_argument("--config", help="INI file with a [gamma] section")
    gamma_p.add_argument("--out", help="also write the CSV breakdown here")

    growth_p = sub.add_parser("growth", help="Cayley ball growth of a group")
    growth_p.add_argument("group", help="builtin name or generator file")
    growth_p.add_argument("--mmax", type=int, dest="m_max")
    growth_p.add_argument("--window-fraction", type=float, dest="window_fraction")
    growth_p.add_argument("--budget", type=int, dest="element_budget")
    growth_p.add_argument("--config", help="INI file with a [growth] section")
    growth_p.add_argument("--out", dest="out_dir")

    flow_p = sub.add_parser("flow", help="fiber-sphere volume growth of a model")
    flow_p.add_argument("model", help='e.g. "Nil3" or "FlatTorus(2)"')
    flow_p.add_argument("--descriptor", help="manifold for the bound")
    flow_p.add_argument("--times", help='"1 2 4" or geom:start:stop:count')
    flow_p.add_argument("--step", type=float)
    flow_p.add_argument("--integrator")
    flow_p.add_argument("--threshold", type=float, dest="refine_threshold")
    flow_p.add_argument("--threshold-growth", type=float, dest="threshold_growth")
    flow_p.add_argument("--budget", type=int, dest="volume_budget")
    flow_p.add_argument("--resolution", type=int)
    flow_p.add_argument("--window-fraction", type=float, dest="window_fraction")
    flow_p.add_argument("--tolerance", type=float)
    flow_p.add_argument("--config", help="INI file with a [flow] section")
    flow_p.add_argument("--out", dest="out_dir")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            rows = [run(config) for config in load_config(args.config, args.out)]
            for row in rows:
                print(row.line())
            return 0 if all(row.verdict == "PASS" for row in rows) else 1

        if args.command == "gamma":
            extra = {"descriptor": args.descriptor}
            if args.out:
                extra["out_dir"] = args.out
            config = _single_config(args, "gamma_eval", "gamma", extra)
            if args.out:
                return _print_row(run(config))
            result = gamma_catalog.gamma(gamma_catalog.parse(args.descriptor))
            print(f"gamma_pi1={_fmt(float(result.gamma_pi1))}")
            print(f"gamma_loop={_fmt(float(result.gamma_loop))}")
            print(f"gamma_total={_fmt(float(result.gamma_total))}")
            print(f"theorem_bound={_fmt(float(result.theorem_bound))}")
            print(f"dimension={result.dimension}")
            print(f"slow={str(result.slow).lower()}")
            return 0

        if args.command == "growth":
            extra = _flag_overrides(
                args, ("m_max", "window_fraction", "element_budget", "out_dir")
            )
            extra["group"] = args.group
            config = _single_config(args, "group_growth", "growth", extra)
            return _print_row(run(config))

        # flow
        extra = _flag_overrides(
            args,
            ("step", "integrator", "refine_threshold", "threshold_growth",
             "volume_budget", "resolution", "window_fraction", "tolerance",
             "out_dir"),
        )
        extra["model"] = args.model
        if args.descriptor:
            extra["descriptor"] = args.descriptor
        if args.times:
            extra["times"] = parse_times(args.times)
        config = _single_config(args, "flow_growth", "flow", extra)
        return _print_row(run(config))
    except (ConfigError, MalformedDescriptor) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
