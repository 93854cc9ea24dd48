"""Command-line sweeps over the closed forms, with Monte-Carlo columns.

Usage::

    wishart-mrc <command> [--config FILE] [--nt K --nr K --spread-rx VAL
        --spread-tx VAL --snr LIST --grid LIST --mod NAME --samples N
        --seed S --out PATH]

Configuration documents use one ``key = value`` per line; ``#`` starts a
comment. Keys match the long option names with ``-`` replaced by ``_``.
Angles accept ``pi`` literals (``pi/64``, ``3*pi/4``). SNR-like values
need an explicit unit: ``10dB`` or ``10lin``. Lists are comma separated;
``start:stop:step`` with a unit suffix expands to an inclusive range.
"""

import argparse
import csv
import io
import math
import re
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .channel import ArrayModelParams, MimoConfig, to_wishart_pair
from .errors import ConditioningError, ConfigError, ModelValidityError, WishartMRCError
from .maxeig import maxeig_cdf, maxeig_cdf_2x2, maxeig_cdf_n2, maxeig_pdf, maxeig_quantile
from .montecarlo import empirical_maxeig, ks_critical_value, ks_distance, ser_from_samples
from .performance import (
    SUPPORTED,
    SnrGrid,
    modulation_constants,
    outage_probability,
    ser_closed_form,
    ser_high_snr,
    ser_quadrature,
    snr_pdf,
)

COMMANDS = ("cdf", "pdf", "outage", "ser", "ser-asymptote", "validate")
EXIT_OK = 0
EXIT_VALIDATION_FAILED = 1
EXIT_USAGE = 2
EXIT_CONDITIONING = 3

DEFAULT_SAMPLES = 100_000
DEFAULT_SEED = 0
DEFAULT_SPACING = 0.5
DEFAULT_ANGLE = math.pi / 2
DEFAULT_GRID_POINTS = 50

_KEYS = {
    "command", "nt", "nr", "spread_rx", "spread_tx", "spacing_rx", "spacing_tx",
    "angle_rx", "angle_tx", "snr", "grid", "mod", "samples", "seed", "out",
}
_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_PI_RE = re.compile(r"^(?:(?P<num>[^*/]+)\*)?pi(?:/(?P<den>[^*/]+))?$")
_UNIT_RE = re.compile(r"^(?P<body>.*?)\s*(?P<unit>db|lin)$", re.IGNORECASE)


@dataclass(frozen=True)
class SweepSpec:
    """Everything a single CLI run needs; produced by :func:`parse_config`."""

    command: str
    transmit: ArrayModelParams
    receive: ArrayModelParams
    snr: SnrGrid
    grid: tuple = None
    modulation: str = "bpsk"
    samples: int = DEFAULT_SAMPLES
    seed: int = DEFAULT_SEED
    output_path: str = None
    sources: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}; expected one of {', '.join(COMMANDS)}")
        if self.grid is not None:
            g = np.asarray(self.grid, dtype=float)
            if g.size == 0 or np.any(g <= 0) or np.any(np.diff(g) <= 0):
                raise ConfigError("grid must be non-empty, positive and ascending")
        if self.samples < 0:
            raise ConfigError("samples must be >= 0")
        if self.command == "validate" and self.samples < 1:
            raise ConfigError("validate needs samples >= 1")
        if self.command in ("cdf", "pdf", "outage") and len(self.snr) != 1:
            raise ConfigError(f"{self.command} takes a single mean SNR, got {len(self.snr)}")

    def mimo_config(self, snr_index=0):
        return MimoConfig.from_models(self.transmit, self.receive, self.snr.points[snr_index])


# -- value parsing -----------------------------------------------------------


def _parse_number(text):
    text = text.strip()
    if _NUMBER_RE.match(text):
        return float(text)
    m = _PI_RE.match(text.replace(" ", "").lower())
    if m:
        num = _parse_number(m.group("num")) if m.group("num") else 1.0
        den = _parse_number(m.group("den")) if m.group("den") else 1.0
        if den == 0:
            raise ValueError("division by zero")
        return num * math.pi / den
    raise ValueError(f"not a number: {text!r}")


def _parse_int(text):
    value = _parse_number(text)
    if value != int(value):
        raise ValueError(f"expected an integer, got {text.strip()!r}")
    return int(value)


def _to_linear(value, unit):
    if unit.lower() == "db":
        return 10.0 ** (value / 10.0)
    if value <= 0:
        raise ValueError("linear SNR values must be positive")
    return value


def _expand(body):
    parts = body.split(":")
    if len(parts) == 1:
        return [_parse_number(body)]
    if len(parts) != 3:
        raise ValueError(f"range must be start:stop:step, got {body!r}")
    start, stop, step = (_parse_number(p) for p in parts)
    if step <= 0 or stop < start:
        raise ValueError(f"empty or descending range {body!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(count)]


def parse_snr_list(text):
    """Parse ``"0:20:5dB"`` or ``"1lin, 3dB"`` into ascending linear values."""
    out = []
    for item in text.split(","):
        item = item.strip()
        m = _UNIT_RE.match(item)
        if not item or not m or not m.group("body"):
            raise ValueError(f"SNR value {item!r} needs a unit suffix (dB or lin)")
        out.extend(_to_linear(v, m.group("unit")) for v in _expand(m.group("body")))
    return tuple(out)


_PARSERS = {
    "command": str.strip,
    "nt": _parse_int,
    "nr": _parse_int,
    "spread_rx": _parse_number,
    "spread_tx": _parse_number,
    "spacing_rx": _parse_number,
    "spacing_tx": _parse_number,
    "angle_rx": _parse_number,
    "angle_tx": _parse_number,
    "snr": parse_snr_list,
    "grid": parse_snr_list,
    "mod": lambda s: s.strip().lower(),
    "samples": _parse_int,
    "seed": _parse_int,
    "out": str.strip,
}


def _parse_document(text):
    """Return ``{key: (parsed value, line, column)}`` from a config document."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ConfigError("expected 'key = value'", lineno, col)
        key_part, value_part = line.split("=", 1)
        key = key_part.strip().replace("-", "_").lower()
        key_col = len(key_part) - len(key_part.lstrip()) + 1
        value_col = len(key_part) + 2 + (len(value_part) - len(value_part.lstrip()))
        if key not in _KEYS:
            raise ConfigError(f"unknown key {key!r}", lineno, key_col)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first set on line {values[key][1]})", lineno, key_col)
        try:
            parsed = _PARSERS[key](value_part)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, value_col) from None
        values[key] = (parsed, lineno, value_col)
    return values


def _build_spec(values, command=None):
    """Assemble a :class:`SweepSpec` from parsed ``{key: (value, line, col)}``."""

    def get(key, default=None):
        return values[key][0] if key in values else default

    def where(key):
        return values[key][1:] if key in values else (None, None)

    command = command or get("command")
    if command is None:
        raise ConfigError("no command given")
    for key in ("nt", "nr", "spread_rx", "spread_tx"):
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    try:
        transmit = ArrayModelParams(get("nt"), get("spread_tx"), get("spacing_tx", DEFAULT_SPACING), get("angle_tx", DEFAULT_ANGLE))
        receive = ArrayModelParams(get("nr"), get("spread_rx"), get("spacing_rx", DEFAULT_SPACING), get("angle_rx", DEFAULT_ANGLE))
    except WishartMRCError as exc:
        raise ConfigError(str(exc)) from None
    try:
        snr = SnrGrid(get("snr", (1.0,)))
    except WishartMRCError as exc:
        raise ConfigError(str(exc), *where("snr")) from None
    mod = get("mod", "bpsk")
    try:
        modulation_constants(mod)
    except KeyError:
        raise ConfigError(f"unknown modulation {mod!r}; supported: {', '.join(SUPPORTED)}", *where("mod")) from None
    return SweepSpec(
        command=command,
        transmit=transmit,
        receive=receive,
        snr=snr,
        grid=get("grid"),
        modulation=mod,
        samples=get("samples", DEFAULT_SAMPLES),
        seed=get("seed", DEFAULT_SEED),
        output_path=get("out"),
    )


def parse_config(text, command=None):
    """Parse a configuration document into a validated :class:`SweepSpec`.

    Unset keys take the defaults ``samples = 100000``, ``seed = 0``,
    ``spacing = 0.5`` wavelengths, ``angle = pi/2`` and ``snr = 0dB``.
    """
    return _build_spec(_parse_document(text), command)


# -- sweeps ------------------------------------------------------------------


def _fmt(value):
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def _header(spec, pair, extra=()):
    lines = [
        f"wishart-mrc {__version__}",
        f"command={spec.command}",
        f"nt={spec.transmit.antenna_count} nr={spec.receive.antenna_count}",
        f"spread_tx={spec.transmit.angle_spread_var!r} spread_rx={spec.receive.angle_spread_var!r}",
        f"spacing_tx={spec.transmit.spacing_wavelengths!r} spacing_rx={spec.receive.spacing_wavelengths!r}",
        f"angle_tx={spec.transmit.mean_angle_rad!r} angle_rx={spec.receive.mean_angle_rad!r}",
        f"mean_snr_db={','.join(repr(d) for d in spec.snr.db_labels)}",
        f"modulation={spec.modulation} samples={spec.samples} seed={spec.seed}",
        f"wishart n={pair.n} m={pair.m} omega={list(pair.omega.values)} sigma={list(pair.sigma.values)}",
    ]
    lines.extend(extra)
    return "".join(f"# {line}\n" for line in lines)


def _default_grid(pair, mean_snr, points=DEFAULT_GRID_POINTS):
    lo = maxeig_quantile(pair, 0.005)
    hi = maxeig_quantile(pair, 0.995)
    return tuple(mean_snr * np.linspace(lo, hi, points))


def _distribution_rows(spec, pair):
    mean_snr = spec.snr.points[0]
    grid = np.asarray(spec.grid if spec.grid is not None else _default_grid(pair, mean_snr))
    if spec.command == "pdf":
        analytic = np.atleast_1d(snr_pdf(pair, mean_snr, grid))
    else:
        analytic = np.atleast_1d(outage_probability(pair, mean_snr, grid))
    label = "threshold" if spec.command == "outage" else "x"
    columns = [label, "analytic_value"]
    if not spec.samples:
        return columns, [[g, a] for g, a in zip(grid, analytic)]
    columns += ["empirical_value", "std_error"]
    gamma = mean_snr * empirical_maxeig(spec.mimo_config(), spec.samples, spec.seed).samples
    n = gamma.size
    if spec.command == "pdf":
        # histogram density over cells bounded by grid midpoints
        mids = 0.5 * (grid[1:] + grid[:-1])
        if grid.size > 1:
            lo = np.concatenate([[grid[0] - (mids[0] - grid[0])], mids])
            hi = np.concatenate([mids, [grid[-1] + (grid[-1] - mids[-1])]])
        else:
            lo, hi = grid * 0.95, grid * 1.05
        lo = np.maximum(lo, 0.0)
        counts = np.searchsorted(gamma, hi, side="right") - np.searchsorted(gamma, lo, side="right")
        frac = counts / n
        width = hi - lo
        emp = frac / width
        err = np.sqrt(frac * (1.0 - frac) / n) / width
    else:
        emp = np.searchsorted(gamma, grid, side="right") / n
        err = np.sqrt(emp * (1.0 - emp) / n)
    return columns, [list(r) for r in zip(grid, analytic, emp, err)]


def _ser_rows(spec, pair):
    mod = modulation_constants(spec.modulation)
    columns = ["mean_snr_db", "closed_form", "quadrature", "high_snr_asymptote"]
    lam = None
    if spec.samples:
        columns += ["mc_estimate", "mc_std_error"]
        lam = empirical_maxeig(spec.mimo_config(), spec.samples, spec.seed).samples
    rows = []
    for db, g in zip(spec.snr.db_labels, spec.snr.points):
        closed = ser_closed_form(pair, g, mod) if pair.n == 2 else math.nan
        high = ser_high_snr(pair, g, mod) if pair.n == 2 else math.nan
        row = [db, closed, ser_quadrature(pair, g, mod), high]
        if lam is not None:
            row += list(ser_from_samples(lam, g, mod))
        rows.append(row)
    return columns, rows


def _asymptote_rows(spec, pair):
    mod = modulation_constants(spec.modulation)
    rows = []
    for db, g in zip(spec.snr.db_labels, spec.snr.points):
        high = float(ser_high_snr(pair, g, mod))
        closed = ser_closed_form(pair, g, mod)
        rows.append([db, high, closed, closed / high])
    return ["mean_snr_db", "high_snr_asymptote", "closed_form", "ratio"], rows


def _csv_text(header, columns, rows):
    buf = io.StringIO()
    buf.write(header)
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


# -- validation report ---------------------------------------------------------


def _suite(name, passed, **stats):
    parts = [f"suite={name}", f"status={'pass' if passed else 'fail'}"]
    parts += [f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in stats.items()]
    return " ".join(parts), passed


def _validate(spec, pair):
    """Run the property suites for this configuration; one report line each."""
    lines = []
    config = spec.mimo_config()
    emp = empirical_maxeig(config, spec.samples, spec.seed)
    n = emp.sample_count

    dist = ks_distance(emp, lambda x: maxeig_cdf(pair, x))
    crit = ks_critical_value(n)
    lines.append(_suite("ks_cdf", dist < crit, statistic=dist, critical=crit, samples=n))

    grid = np.asarray(_default_grid(pair, 1.0, 20))
    f = np.atleast_1d(maxeig_cdf(pair, grid))
    lines.append(_suite("cdf_monotone", bool(np.all(np.diff(f) >= 0)), points=grid.size))

    h = 1e-5 * grid
    fd = (np.atleast_1d(maxeig_cdf(pair, grid + h)) - np.atleast_1d(maxeig_cdf(pair, grid - h))) / (2 * h)
    pdf = np.atleast_1d(maxeig_pdf(pair, grid))
    rel = float(np.max(np.abs(fd - pdf) / np.abs(pdf)))
    lines.append(_suite("pdf_finite_difference", rel < 1e-5, max_rel_error=rel, tolerance=1e-5))

    if pair.n == 2:
        rel = float(np.max(np.abs(np.atleast_1d(maxeig_cdf_n2(pair, grid)) / f - 1.0)))
        lines.append(_suite("n2_vs_general", rel < 1e-9, max_rel_error=rel, tolerance=1e-9))
        if pair.m == 2:
            rel = float(np.max(np.abs(np.atleast_1d(maxeig_cdf_2x2(pair, grid)) / f - 1.0)))
            lines.append(_suite("2x2_vs_general", rel < 1e-9, max_rel_error=rel, tolerance=1e-9))

    mod = modulation_constants(spec.modulation)
    for db, g in zip(spec.snr.db_labels, spec.snr.points):
        est, se = ser_from_samples(emp.samples, g, mod)
        quad = ser_quadrature(pair, g, mod)
        stats = {"mean_snr_db": float(db), "quadrature": quad, "mc_estimate": est, "mc_std_error": se}
        ok = True
        if pair.n == 2:
            closed = ser_closed_form(pair, g, mod)
            rel = abs(closed - quad) / quad
            stats.update(closed_form=closed, closed_vs_quadrature=rel)
            ok = rel < 1e-8
        z = abs(quad - est) / se if se > 0 else (0.0 if quad == est else math.inf)
        stats["mc_z"] = float(z)
        if mod.exact or quad < 0.01:
            ok = ok and z < 3.0
        lines.append(_suite("ser", ok, **stats))
    return lines


# -- entry points --------------------------------------------------------------


def run(spec):
    """Execute a sweep; returns ``(exit_status, text)`` and writes ``output_path`` if set."""
    pair = to_wishart_pair(spec.mimo_config())
    status = EXIT_OK
    if spec.command in ("cdf", "pdf", "outage"):
        columns, rows = _distribution_rows(spec, pair)
        text = _csv_text(_header(spec, pair), columns, rows)
    elif spec.command == "ser":
        extra = () if pair.n == 2 else ("extended=quadrature (general n; no closed form for n > 2)",)
        columns, rows = _ser_rows(spec, pair)
        text = _csv_text(_header(spec, pair, extra), columns, rows)
    elif spec.command == "ser-asymptote":
        columns, rows = _asymptote_rows(spec, pair)
        text = _csv_text(_header(spec, pair), columns, rows)
    else:
        results = _validate(spec, pair)
        text = _header(spec, pair) + "".join(line + "\n" for line, _ in results)
        if not all(ok for _, ok in results):
            status = EXIT_VALIDATION_FAILED
    if spec.output_path:
        with open(spec.output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return status, text


def _arg_parser():
    p = argparse.ArgumentParser(prog="wishart-mrc", description="Largest-eigenvalue statistics of correlated MIMO-MRC links.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--nt", help="transmit antennas")
    p.add_argument("--nr", help="receive antennas")
    p.add_argument("--spread-rx", help="receive angle-spread variance (rad^2), e.g. pi/64")
    p.add_argument("--spread-tx", help="transmit angle-spread variance (rad^2)")
    p.add_argument("--spacing-rx")
    p.add_argument("--spacing-tx")
    p.add_argument("--angle-rx")
    p.add_argument("--angle-tx")
    p.add_argument("--snr", help="mean SNR list with unit, e.g. 0:20:5dB")
    p.add_argument("--grid", help="x / threshold grid with unit, e.g. 0.1lin,1lin")
    p.add_argument("--mod", help="modulation name")
    p.add_argument("--samples", help="Monte-Carlo sample count (0 disables)")
    p.add_argument("--seed")
    p.add_argument("--out", help="output path (default: stdout)")
    return p


def _merge_args(args):
    values = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = _parse_document(fh.read())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    for key in sorted(_KEYS - {"command"}):
        raw = getattr(args, key, None)
        if raw is None:
            continue
        try:
            values[key] = (_PARSERS[key](raw), None, None)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for --{key.replace('_', '-')}: {exc}") from None
    return _build_spec(values, args.command)


def main(argv=None):
    parser = _arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        spec = _merge_args(args)
        status, text = run(spec)
    except ConfigError as exc:
        print(f"wishart-mrc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConditioningError, ModelValidityError) as exc:
        print(f"wishart-mrc: numerical conditioning error: {exc}", file=sys.stderr)
        return EXIT_CONDITIONING
    except WishartMRCError as exc:
        print(f"wishart-mrc: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not spec.output_path:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
