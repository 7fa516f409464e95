"""Command-line front end: censuses, density curves, single-class queries and checks.

Every CSV is written atomically (temporary file, then rename) with a sibling
``<name>.manifest.json`` recording parameters, worker count and the file digest.
Exit status: 0 success, 1 computational error, 2 bad arguments.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import fcntl
import hashlib
import io
import json
import math
import os
import random
import sys
import tempfile
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .asymptotics_lab import (
    DensityCurve,
    HFunctionSpec,
    fit_power_law,
    fit_power_log,
    geodesic_surface_density,
    geometric_grid,
    no_small_field_curve,
    phi_embeddable_curve,
    phi_search_bound,
    short_systole_curve,
)
from .core_arith import map_segments, mertens_split_sum, segment_ranges, sieve_primes, squarefree_mask, trial_factor
from .errors import CensusError, ConfigurationError, DomainError, FitError
from .geodesics_heights import (
    brindza_unit_height_bound,
    class_systole_Q,
    quadratic_minpoly,
    silverman_lower_bound,
    weil_height,
)
from .quadratic_fields import (
    count_quadratic_fields,
    field_from_delta,
    fundamental_discriminants,
    fundamental_unit,
    make_field,
)
from .quaternion_census import (
    CensusOptions,
    CensusRecord,
    QuaternionAlgebraQ,
    admits_embedding_Q,
    base_covolume_3d,
    enumerate_classes_3d,
    record_2d,
)

MANIFEST_SCHEMA = "orbicensus/1"
CENSUS_COLUMNS = (
    "disc_or_ideal_norms",
    "num_factors",
    "phi",
    "covolume",
    "cocompact",
    "systole_trace",
    "systole_length",
    "embeddable_deltas",
)
DENSITY_COLUMNS = ("x", "count", "total", "ratio", "fitted_c", "fitted_a")
SURFACE_COLUMNS = ("volume", "with_surface", "all_classes", "ratio", "surface_exponent", "all_exponent")
# chunk of discriminants per census2d work item
CENSUS_CHUNK = 4096


@dataclass(frozen=True)
class CliConfig:
    threads: int = 1
    out_dir: Path | None = None
    precision: int = 15
    include_split: bool = False
    cocompact_only: bool = False

    def __post_init__(self):
        if self.threads < 1:
            raise ConfigurationError(f"threads must be >= 1, got {self.threads}")
        if not 6 <= self.precision <= 17:
            raise ConfigurationError(f"precision must be in [6, 17], got {self.precision}")


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    sieve_limit: int
    workers: int
    started: str
    finished: str = ""
    digests: dict = field(default_factory=dict)

    def to_json(self) -> str:
        doc = {
            "schema": MANIFEST_SCHEMA,
            "version": __version__,
            "subcommand": self.subcommand,
            "parameters": self.parameters,
            "sieve_limit": self.sieve_limit,
            "workers": self.workers,
            "started": self.started,
            "finished": self.finished,
            "digests": self.digests,
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


class ArgumentError(CensusError):
    """Invalid command-line input detected after parsing."""


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# formatting and atomic output


def format_real(v: float | None, precision: int) -> str:
    """Shortest round-trip decimal of ``v`` rounded to ``precision`` significant digits."""
    if v is None:
        return ""
    if not math.isfinite(v):
        return repr(float(v))
    return repr(float(f"{v:.{precision}g}"))


def _cell(v, precision: int) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return format_real(v, precision)
    return str(v)


def render_csv(rows: Iterable[Sequence], schema: Sequence[str], precision: int) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(schema)
    for row in rows:
        if len(row) != len(schema):
            raise DomainError(f"row {row!r} does not match schema {schema}")
        w.writerow([_cell(v, precision) for v in row])
    return buf.getvalue().encode()


def atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        umask = os.umask(0)
        os.umask(umask)
        os.fchmod(fd, 0o666 & ~umask)
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def emit_csv(rows: Iterable[Sequence], schema: Sequence[str], path: Path, precision: int = 15) -> str:
    """Write rows as CSV atomically; return the sha256 hex digest of the content."""
    data = render_csv(rows, schema, precision)
    try:
        atomic_write(Path(path), data)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return hashlib.sha256(data).hexdigest()


@contextlib.contextmanager
def run_lock(path: Path):
    """Advisory lock: one run per output path at a time."""
    lock = Path(str(path) + ".lock")
    lock.parent.mkdir(parents=True, exist_ok=True)
    with open(lock, "w") as fh:
        try:
            fcntl.flock(fh, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise CensusError(f"another run is writing {path}") from None
        try:
            yield
        finally:
            fcntl.flock(fh, fcntl.LOCK_UN)
    with contextlib.suppress(FileNotFoundError):
        lock.unlink()


def manifest_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.name + ".manifest.json")


# ---------------------------------------------------------------------------
# argument types


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _positive_real(s: str) -> float:
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"expected a positive real, got {s}")
    return v


def _precision(s: str) -> int:
    v = int(s)
    if not 6 <= v <= 17:
        raise argparse.ArgumentTypeError(f"precision must be in [6, 17], got {s}")
    return v


def _default_threads() -> int:
    env = os.environ.get("ORBICENSUS_THREADS")
    if env:
        try:
            v = int(env)
        except ValueError:
            raise ConfigurationError(f"ORBICENSUS_THREADS must be an integer, got {env!r}") from None
        if v < 1:
            raise ConfigurationError(f"ORBICENSUS_THREADS must be >= 1, got {v}")
        return v
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=None, help="worker processes (default: ORBICENSUS_THREADS or CPU count)")
    common.add_argument("--precision", type=_precision, default=15, help="significant digits for reals (6-17)")
    common.add_argument("--out-dir", type=Path, default=None, help="directory for CSV output when --out is not given")

    out = argparse.ArgumentParser(add_help=False)
    out.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout, or <out-dir>/<command>.csv)")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--x-min", type=_positive_real, required=True)
    grid.add_argument("--x-max", type=_positive_real, required=True)
    grid.add_argument("--points", type=_positive_int, required=True)

    p = argparse.ArgumentParser(prog="orbicensus", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    c2 = sub.add_parser("census2d", parents=[common, out], help="classes of arithmetic surfaces over Q")
    c2.add_argument("--disc-max", type=_positive_int, required=True)
    c2.add_argument("--with-systole", action="store_true")
    c2.add_argument("--include-split", action="store_true", help="include the non-cocompact class (disc 1)")

    c3 = sub.add_parser("census3d", parents=[common, out], help="classes over an imaginary quadratic field")
    c3.add_argument("--field-d", type=int, required=True, help="negative squarefree d of Q(sqrt(d))")
    c3.add_argument("--volume-max", type=_positive_real, required=True)
    c3.add_argument("--cocompact-only", action="store_true")

    sy = sub.add_parser("systole", parents=[common], help="class systole of the indefinite algebra of disc D")
    sy.add_argument("--disc", type=_positive_int, required=True)

    em = sub.add_parser("embeds", parents=[common], help="does Q(sqrt(DELTA)) embed in the algebra of disc D")
    em.add_argument("--disc", type=_positive_int, required=True)
    em.add_argument("--delta", type=int, required=True)

    de = sub.add_parser("density", help="density curves")
    dsub = de.add_subparsers(dest="kind", required=True)
    pe = dsub.add_parser("phi-embeddable", parents=[common, out, grid])
    pe.add_argument("--delta", type=int, required=True)
    ns = dsub.add_parser("no-small-field", parents=[common, out, grid])
    ns.add_argument("--include-split", action="store_true")
    hg = ns.add_mutually_exclusive_group(required=True)
    hg.add_argument("--h-exp", type=float)
    hg.add_argument("--h-fixed", type=float)
    ss = dsub.add_parser("short-systole", parents=[common, out, grid])
    ss.add_argument("--x0", type=_positive_real, required=True)
    ss.add_argument("--include-split", action="store_true")

    su = sub.add_parser("surfaces", parents=[common, out], help="classes containing a geodesic surface")
    su.add_argument("--b0", type=_positive_int, required=True)
    su.add_argument("--volume-max", type=_positive_real, required=True)
    su.add_argument("--delta-max", type=_positive_int, required=True)
    su.add_argument("--points", type=_positive_int, default=9)

    ch = sub.add_parser("checks", help="bound and constant checks")
    csub = ch.add_subparsers(dest="check", required=True)
    hb = csub.add_parser("ht-bound", parents=[common], help="unit heights against the unit height bound")
    hb.add_argument("--x", type=_positive_int, default=10**4)
    sv = csub.add_parser("silverman", parents=[common], help="random quadratic heights against the lower bound")
    sv.add_argument("--samples", type=_positive_int, default=10**4)
    sv.add_argument("--delta-max", type=_positive_int, default=10**4)
    sv.add_argument("--seed", type=int, default=0)
    me = csub.add_parser("mertens", parents=[common], help="sum of 1/p over split primes")
    me.add_argument("--delta", type=int, required=True)
    me.add_argument("--y", type=_positive_real, required=True)
    fc = csub.add_parser("fields-count", parents=[common], help="quadratic fields with |disc| <= x")
    fc.add_argument("--x", type=_positive_real, required=True)

    fi = sub.add_parser("fit", parents=[common], help="fit c x (log x)^a to a density CSV")
    fi.add_argument("--input", type=Path, required=True)
    return p


# ---------------------------------------------------------------------------
# census workers (top level so they pickle)


def _census2d_chunk(lo: int, hi: int, with_systole: bool, include_split: bool) -> list[CensusRecord]:
    mask = squarefree_mask(hi - 1)
    opts = CensusOptions(include_split=include_split, with_systole=with_systole)
    out = []
    for D in range(lo, hi):
        if not mask[D] or len(trial_factor(D)) % 2:
            continue
        if D == 1 and not include_split:
            continue
        out.append(record_2d(D, opts))
    return out


def _census_row(r: CensusRecord) -> tuple:
    return (
        r.disc_label,
        r.num_factors,
        r.phi,
        r.covolume,
        r.cocompact,
        r.systole_trace,
        r.systole_length,
        ";".join(str(d) for d in r.small_embeddable_deltas),
    )


def _density_rows(curve: DensityCurve) -> list[tuple]:
    c, a = curve.fit if curve.fit else (None, None)
    return [(x, n, t, (n / t if t else None), c, a) for x, n, t in zip(curve.grid, curve.counts, curve.totals)]


def _try_fit(curve: DensityCurve) -> DensityCurve:
    try:
        return curve.with_fit(fit_power_log(curve))
    except FitError:
        return curve


# ---------------------------------------------------------------------------
# subcommands; each returns (rows, schema, sieve_limit) for CSV commands or prints


def _grid(args) -> tuple[float, ...]:
    if args.x_max < args.x_min:
        raise ArgumentError("--x-max must be >= --x-min")
    if args.points > 1 and args.x_max == args.x_min:
        raise ArgumentError("several points need --x-max > --x-min")
    return geometric_grid(args.x_min, args.x_max, args.points)


def _table_for_phi(x: float):
    return sieve_primes(max(math.isqrt(phi_search_bound(x)) + 100, 100))


def _cmd_census2d(args, cfg: CliConfig):
    ranges = segment_ranges(1, args.disc_max + 1, CENSUS_CHUNK)
    func = _Census2dTask(args.with_systole, args.include_split)
    chunks = map_segments(func, ranges, cfg.threads)
    rows = [_census_row(r) for chunk in chunks for r in chunk]
    return rows, CENSUS_COLUMNS, args.disc_max


@dataclass(frozen=True)
class _Census2dTask:
    with_systole: bool
    include_split: bool

    def __call__(self, lo: int, hi: int) -> list[CensusRecord]:
        return _census2d_chunk(lo, hi, self.with_systole, self.include_split)


def _cmd_census3d(args, cfg: CliConfig):
    d = args.field_d
    if d >= 0:
        raise ArgumentError(f"--field-d must be negative, got {d}")
    try:
        K = make_field(d)
    except DomainError as exc:
        raise ArgumentError(str(exc)) from None
    base = base_covolume_3d(K)
    limit = max(int(args.volume_max / base) + 2, 100)
    table = sieve_primes(limit)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        records = list(enumerate_classes_3d(K, args.volume_max, table))
    for w in caught:
        print(f"notice: {w.message}", file=sys.stderr)
    if args.cocompact_only:
        records = [r for r in records if r.cocompact]
    return [_census_row(r) for r in records], CENSUS_COLUMNS, limit


def _cmd_density(args, cfg: CliConfig):
    g = _grid(args)
    if args.kind == "phi-embeddable":
        try:
            K = field_from_delta(args.delta)
        except DomainError as exc:
            raise ArgumentError(str(exc)) from None
        table = _table_for_phi(g[-1])
        curve = phi_embeddable_curve(K, g, table, cfg.threads)
    elif args.kind == "no-small-field":
        try:
            h = HFunctionSpec(exponent=args.h_exp) if args.h_exp is not None else HFunctionSpec(threshold=args.h_fixed)
        except ConfigurationError as exc:
            raise ArgumentError(str(exc)) from None
        table = sieve_primes(max(math.isqrt(int(g[-1])) + 100, 100))
        curve = no_small_field_curve(g, h, table, args.include_split, cfg.threads)
    else:
        table = _table_for_phi(g[-1])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            curve = short_systole_curve(args.x0, g, table, args.include_split, cfg.threads)
        for w in caught:
            print(f"notice: {w.message}", file=sys.stderr)
    curve = _try_fit(curve)
    return _density_rows(curve), DENSITY_COLUMNS, table.limit


def _cmd_surfaces(args, cfg: CliConfig):
    try:
        B0 = QuaternionAlgebraQ.from_disc(args.b0)
    except DomainError as exc:
        raise ArgumentError(str(exc)) from None
    if B0.disc_f == 1 or not B0.indefinite:
        raise ArgumentError("--b0 must be the discriminant of an indefinite division algebra (even number of primes, > 1)")
    # smallest base covolume (Q(sqrt(-3))) is about 0.0141
    limit = max(int(args.volume_max / 0.014) + 2, 100)
    table = sieve_primes(limit)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ws, al = geodesic_surface_density(B0, args.volume_max, args.delta_max, table, points=args.points)
    for w in caught:
        print(f"notice: {w.message}", file=sys.stderr)
    try:
        e_ws, e_al = fit_power_law(ws)[1], fit_power_law(al)[1]
    except FitError:
        e_ws = e_al = None
    rows = [
        (v, a, b, (a / b if b else None), e_ws, e_al) for v, a, b in zip(ws.grid, ws.counts, al.counts)
    ]
    return rows, SURFACE_COLUMNS, limit


def _cmd_systole(args, cfg: CliConfig) -> str:
    B = _indefinite(args.disc)
    r = class_systole_Q(B)
    return f"trace={r.trace} field_delta={r.field_delta} length={format_real(r.length, cfg.precision)}"


def _indefinite(D: int) -> QuaternionAlgebraQ:
    try:
        B = QuaternionAlgebraQ.from_disc(D)
    except DomainError as exc:
        raise ArgumentError(str(exc)) from None
    if not B.indefinite:
        raise ArgumentError(f"disc {D} has an odd number of prime factors; the algebra is definite")
    return B


def _cmd_embeds(args, cfg: CliConfig) -> str:
    try:
        B = QuaternionAlgebraQ.from_disc(args.disc)
        K = field_from_delta(args.delta)
    except DomainError as exc:
        raise ArgumentError(str(exc)) from None
    return "true" if admits_embedding_Q(B, K) else "false"


def _cmd_checks(args, cfg: CliConfig) -> str:
    p = cfg.precision
    if args.check == "ht-bound":
        violations = checked = 0
        worst = 0.0
        for delta in fundamental_discriminants(args.x, sign=1):
            u = fundamental_unit(field_from_delta(delta))
            h = weil_height(quadratic_minpoly(u.a, u.b, delta))
            bound = brindza_unit_height_bound(2, u.regulator)
            checked += 1
            violations += h > bound
            worst = max(worst, h / bound)
        return f"fields={checked} violations={violations} max_ratio={format_real(worst, p)}"
    if args.check == "silverman":
        res = silverman_sample(args.samples, args.delta_max, args.seed)
        return f"samples={res[0]} violations={res[1]} min_margin={format_real(res[2], p)}"
    if args.check == "mertens":
        if args.y < 3:
            raise ArgumentError("--y must be >= 3")
        try:
            field_from_delta(args.delta)
        except DomainError as exc:
            raise ArgumentError(str(exc)) from None
        rep = mertens_split_sum(args.delta, args.y, sieve_primes(max(int(args.y), 2)))
        return f"sum={format_real(rep.sum, p)} half_loglog={format_real(rep.half_loglog, p)} difference={format_real(rep.difference, p)}"
    n = count_quadratic_fields(args.x)
    return f"count={n} ratio={format_real(n / args.x, p)} six_over_pi2={format_real(6 / math.pi**2, p)}"


def silverman_sample(samples: int, delta_max: int, seed: int) -> tuple[int, int, float]:
    """(samples, violations, min of height - bound) over random primitive quadratic integers."""
    rng = random.Random(seed)
    deltas = fundamental_discriminants(delta_max)
    violations = 0
    margin = math.inf
    for _ in range(samples):
        delta = rng.choice(deltas)
        # log-uniform coefficient sizes so that small, tight cases are well represented
        b = rng.choice([-1, 1]) * int(10 ** rng.uniform(0, 3))
        a = rng.choice([-1, 1]) * int(10 ** rng.uniform(0, 3) - 1)
        if (a - b * delta) % 2:
            a += 1
        h = weil_height(quadratic_minpoly(a, b, delta), assert_irreducible=False)
        m = h - silverman_lower_bound(abs(delta))
        violations += m < 0
        margin = min(margin, m)
    return samples, violations, margin


def _cmd_fit(args, cfg: CliConfig) -> str:
    try:
        with open(args.input, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ArgumentError(f"cannot read {args.input}: {exc}") from None
    if not rows or "x" not in rows[0] or "count" not in rows[0]:
        raise ArgumentError(f"{args.input} lacks x and count columns")
    curve = DensityCurve(
        [float(r["x"]) for r in rows], [int(r["count"]) for r in rows], [int(r.get("total") or r["count"]) for r in rows]
    )
    c, a = fit_power_log(curve)
    return f"fitted_c={format_real(c, cfg.precision)} fitted_a={format_real(a, cfg.precision)}"


CSV_COMMANDS = {"census2d": _cmd_census2d, "census3d": _cmd_census3d, "density": _cmd_density, "surfaces": _cmd_surfaces}
TEXT_COMMANDS = {"systole": _cmd_systole, "embeds": _cmd_embeds, "checks": _cmd_checks, "fit": _cmd_fit}


def _command_name(args) -> str:
    extra = getattr(args, "kind", None) or getattr(args, "check", None)
    return f"{args.command}-{extra}" if extra else args.command


def _parameters(args) -> dict:
    skip = {"threads", "out", "out_dir", "precision"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items()) if k not in skip}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = CliConfig(
            threads=args.threads or _default_threads(),
            out_dir=args.out_dir,
            precision=args.precision,
            include_split=getattr(args, "include_split", False),
            cocompact_only=getattr(args, "cocompact_only", False),
        )
    except ConfigurationError as exc:
        parser.print_usage(sys.stderr)
        print(f"orbicensus: error: {exc}", file=sys.stderr)
        return 2
    name = _command_name(args)
    try:
        if args.command in TEXT_COMMANDS:
            print(TEXT_COMMANDS[args.command](args, cfg))
            return 0
        path = args.out or (cfg.out_dir / f"{name}.csv" if cfg.out_dir else None)
        started = _now()
        if path is None:
            rows, schema, _ = CSV_COMMANDS[args.command](args, cfg)
            sys.stdout.write(render_csv(rows, schema, cfg.precision).decode())
            return 0
        path = Path(path)
        with run_lock(path):
            rows, schema, limit = CSV_COMMANDS[args.command](args, cfg)
            digest = emit_csv(rows, schema, path, cfg.precision)
            man = RunManifest(name, _parameters(args), limit, cfg.threads, started, _now(), {path.name: digest})
            atomic_write(manifest_path(path), man.to_json().encode())
        print(f"wrote {path} ({len(rows)} rows, sha256 {digest[:12]})", file=sys.stderr)
        return 0
    except ArgumentError as exc:
        parser.print_usage(sys.stderr)
        print(f"orbicensus: error: {exc}", file=sys.stderr)
        return 2
    except (CensusError, ArithmeticError, OSError, ValueError) as exc:
        print(f"orbicensus: {name} failed: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
