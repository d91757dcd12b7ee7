"""Command-line interface: ``gapprob <command> [options]``.

Every command writes a table to stdout (or ``--output``) as CSV or JSON.
Columns per command::

    finite    gap, log_p, p
    asympt    x, value, then one column per expansion term (e.g. s^1, s^1/2, log, const, s^-1/2)
    fredholm  endpoint, m, log_det, change           (convergence trace)
              endpoint, sine, bessel_minus_half, bessel_plus_half, residual   (--check-product)
    residual  equation, source, inputs, residual, scale, relative
    verify    check, value, threshold, status

Exit codes: 0 success, 2 invalid input, 3 precision or convergence failure.
The environment variable GAPPROB_PRECISION_BITS replaces the per-command
default precision (256 bits for finite, 128 for fredholm, 53 otherwise);
``--precision-bits`` replaces both.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import mpmath as mp

from . import fredholm, orthopoly, painleve
from .errors import (ConsistencyError, ConvergenceError, DomainError, GapProbError, PrecisionInsufficientError,
                     SingularityError)
from .orthopoly import WeightSpec
from .specfun import PrecisionContext

DEFAULT_BITS = {"finite": 256, "fredholm": 128}
ENV_BITS = "GAPPROB_PRECISION_BITS"

SERIES_FOR = {
    "gue": ("logP_gue", "b"),
    "symjue": ("logP_symjue", "b"),
    "lue": ("logP_lue", "s"),
    "jue": ("logP_jue", "s"),
    "sigma": ("sigma_of_s", "s"),
    "r": ("R_of_s", "s"),
}

# (equation, source) pairs the residual command can assemble
RESIDUAL_SOURCES = {
    "PV_SIGMA": ("finite",),
    "PVI_SIGMA": ("finite",),
    "GUE_ODE": ("finite",),
    "GUE_DIFFERENCE": ("finite",),
    "RN_ODE": ("finite",),
    "JMMS": ("fredholm", "series"),
    "PIII_SIGMA": ("series", "fredholm", "finite"),
    "R_ODE": ("series",),
}


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    precision_bits: int = 53
    tolerance: float | None = None
    output_format: str = "csv"
    output_path: str | None = None
    workers: int = 1

    @property
    def ctx(self) -> PrecisionContext:
        return PrecisionContext(self.precision_bits)

    @property
    def digits(self) -> int:
        # everything the mantissa carries, less a guard digit
        return max(15, int(self.precision_bits * math.log10(2)) - 1)


def fmt(value, digits):
    # inputs given as Python floats keep their shortest repr
    if isinstance(value, mp.mpf):
        return mp.nstr(value, digits, min_fixed=-4, max_fixed=digits)
    return repr(value) if isinstance(value, float) else str(value)


def resolve_bits(command, explicit):
    if explicit is not None:
        return explicit
    env = os.environ.get(ENV_BITS)
    if env:
        try:
            return int(env)
        except ValueError:
            raise DomainError(f"{ENV_BITS} must be an integer, got {env!r}") from None
    return DEFAULT_BITS.get(command, 53)


# ----------------------------------------------------------------- finite

def _finite_weight(ensemble, gap, alpha, beta):
    if ensemble == "lue":
        return WeightSpec.deformed_laguerre(alpha, gap)
    if ensemble == "jue":
        return WeightSpec.deformed_jacobi(alpha, beta, gap)
    if ensemble == "gue":
        return WeightSpec.gap_hermite(gap)
    return WeightSpec.gap_symmetric_jacobi(beta, gap)


def _finite_point(job):
    ensemble, gap, n, alpha, beta, method, bits = job
    ctx = PrecisionContext(bits)
    w = _finite_weight(ensemble, gap, alpha, beta)
    # a PrecisionInsufficientError already names the mantissa it needs
    log_p = orthopoly.finite_probability(w, n, ctx, method=method)
    with ctx.workprec():
        return [gap, log_p, mp.exp(log_p)]


def cmd_finite(cfg: RunConfig):
    p = cfg.params
    ensemble = p["ensemble"]
    grid = p["t"] if ensemble in ("lue", "jue") else p["a"]
    if not grid:
        raise DomainError(f"{ensemble} needs a nonempty --{'t' if ensemble in ('lue', 'jue') else 'a'} grid")
    # validate every point before computing any
    for gap in grid:
        _finite_weight(ensemble, gap, p["alpha"], p["beta"])
    jobs = [(ensemble, gap, p["n"], p["alpha"], p["beta"], p["method"], cfg.precision_bits) for gap in grid]
    return ["gap", "log_p", "p"], _run_jobs(_finite_point, jobs, cfg.workers)


# ----------------------------------------------------------------- asympt

def _shape_label(shape, var):
    if shape[0] == "const":
        return "const"
    if shape[0] == "log":
        return "log"
    return f"{var}^{shape[1]}"


def _shape_order(shape):
    if shape[0] == "pow":
        return (0, -shape[1])
    return (1, 0) if shape[0] == "log" else (2, 0)


def _asympt_point(job):
    kind, x, alpha, beta, order, bits = job
    ctx = PrecisionContext(bits)
    with ctx.workprec():
        ser = painleve.AsymptoticSeries.build(kind, alpha, beta, order, ctx)
        terms = ser.terms(x)
        shapes = sorted(terms, key=_shape_order)
        return shapes, [x, mp.fsum(terms.values())] + [terms[s] for s in shapes]


def cmd_asympt(cfg: RunConfig):
    p = cfg.params
    kind, var = SERIES_FOR[p["kind"]]
    grid = p[var]
    if not grid:
        raise DomainError(f"--kind {p['kind']} needs a nonempty --{var} grid")
    if any(not x > 0 for x in grid):
        raise DomainError(f"--{var} values must be positive")
    # build once up front so bad parameters fail before the sweep
    painleve.AsymptoticSeries.build(kind, p["alpha"], p["beta"], p["order"], cfg.ctx)
    jobs = [(kind, x, p["alpha"], p["beta"], p["order"], cfg.precision_bits) for x in grid]
    out = _run_jobs(_asympt_point, jobs, cfg.workers)
    shapes = out[0][0]
    columns = [var, "value"] + [_shape_label(s, var) for s in shapes]
    return columns, [row for _, row in out]


# ----------------------------------------------------------------- fredholm

def cmd_fredholm(cfg: RunConfig):
    p = cfg.params
    kernel = p["kernel"]
    endpoint = p["b"] if kernel == "sine" else p["s"]
    if endpoint is None:
        raise DomainError(f"the {kernel} kernel needs --{'b' if kernel == 'sine' else 's'}")
    if endpoint < 0:
        raise DomainError("endpoint must be nonnegative")
    if kernel == "bessel" and not p["alpha"] > -1:
        raise DomainError("--alpha must exceed -1")
    ctx, tol = cfg.ctx, cfg.tolerance or 1e-12
    if p["check_product"]:
        if kernel != "sine":
            raise DomainError("--check-product applies to the sine kernel")
        with ctx.workprec():
            b = mp.mpf(endpoint)
            sine = fredholm.log_det_converged("sine", b, None, tol, ctx, method=p["method"])[0]
            minus = fredholm.log_det_converged("bessel", b * b, -0.5, tol, ctx, method=p["method"])[0]
            plus = fredholm.log_det_converged("bessel", b * b, 0.5, tol, ctx, method=p["method"])[0]
            row = [endpoint, sine, minus, plus, abs(sine - minus - plus)]
        return ["endpoint", "sine", "bessel_minus_half", "bessel_plus_half", "residual"], [row]
    alpha = p["alpha"] if kernel == "bessel" else None
    try:
        value, err, m, trace = fredholm.log_det_converged(kernel, endpoint, alpha, tol, ctx, method=p["method"],
                                                          full_output=True)
    except ConvergenceError as exc:
        raise ConvergenceError(f"{exc}; best value {exc.best}", best=exc.best, error=exc.error) from exc
    with ctx.workprec():
        if not trace:
            return ["endpoint", "m", "log_det", "change"], [[endpoint, 0, value, err]]
        rows = []
        prev = None
        for order, val in trace:
            if val is None:  # order too coarse, skipped by the driver
                rows.append([endpoint, order, "", ""])
                continue
            rows.append([endpoint, order, val, "" if prev is None else abs(val - prev)])
            prev = val
        return ["endpoint", "m", "log_det", "change"], rows


# ----------------------------------------------------------------- residual

def _need(p, *names):
    missing = [n for n in names if p.get(n) is None]
    if missing:
        raise DomainError("missing " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _rn_derivatives(t, n, alpha, ctx):
    w = WeightSpec.deformed_laguerre(alpha, t)
    with ctx.workprec():
        t = mp.mpf(t)
        f = lambda x: orthopoly.rn_quantity(w.with_gap(x), n, ctx)  # noqa: E731
        r, d1, d2, _ = orthopoly._five_point(f, t, orthopoly.fd_step(t, ctx))
        return r, d1, d2


def _small_gap_jmms():
    # log det(I - K) = -tau/pi - tau^2/(2 pi^2) + O(tau^3) on (-tau/2, tau/2)
    return mp.mpf(0), -1 / mp.pi, -2 / mp.pi ** 2


def assemble_residual_point(eq, source, p, ctx, order=None):
    """Gather the inputs of ``eq`` from ``source`` and return the equation's input dict."""
    eq = eq.upper()
    if eq not in RESIDUAL_SOURCES:
        raise DomainError(f"unknown equation {eq!r}")
    if source not in RESIDUAL_SOURCES[eq]:
        raise DomainError(f"{eq} can be fed from {RESIDUAL_SOURCES[eq]}, not {source!r}")
    n, alpha, beta = p.get("n"), p.get("alpha"), p.get("beta")
    with ctx.workprec():
        if eq == "PV_SIGMA":
            _need(p, "n", "alpha", "t")
            h = orthopoly.lue_h_derivatives(p["t"], n, alpha, ctx)
            return dict(H=h[0], dH=h[1], d2H=h[2], t=p["t"], n=n, alpha=alpha)
        if eq == "PVI_SIGMA":
            _need(p, "n", "alpha", "beta", "t")
            sg = orthopoly.jue_sigma_n(p["t"], n, alpha, beta, ctx)
            return dict(sigma=sg[0], dsigma=sg[1], d2sigma=sg[2], t=p["t"], n=n, alpha=alpha, beta=beta)
        if eq == "GUE_ODE":
            _need(p, "n", "a")
            sg = orthopoly.gue_sigma_n(p["a"], n, ctx)
            return dict(sigma=sg[0], dsigma=sg[1], d2sigma=sg[2], a=p["a"], n=n)
        if eq == "GUE_DIFFERENCE":
            _need(p, "n", "a")
            if n < 2:
                raise DomainError("GUE_DIFFERENCE needs n >= 2")
            vals = [orthopoly.gue_sigma_n(p["a"], k, ctx)[0] for k in (n - 1, n, n + 1)]
            return dict(sigma_prev=vals[0], sigma=vals[1], sigma_next=vals[2], a=p["a"], n=n)
        if eq == "RN_ODE":
            _need(p, "n", "alpha", "t")
            r = _rn_derivatives(p["t"], n, alpha, ctx)
            return dict(R=r[0], dR=r[1], d2R=r[2], t=p["t"], n=n, alpha=alpha)
        if eq == "JMMS":
            _need(p, "tau")
            tau = mp.mpf(p["tau"])
            if tau < 0:
                raise DomainError("tau must be nonnegative")
            if source == "fredholm":
                if tau == 0:
                    raise DomainError("the Fredholm source needs tau > 0")
                sg = fredholm.scaled_sigma("sine", tau / 2, None, ctx)
            elif tau == 0:
                sg = _small_gap_jmms()
            else:
                ser = painleve.AsymptoticSeries.build("logP_gue", J=order, ctx=ctx)
                b = tau / 2
                # sigma = b L'(b); tau-derivatives halve each b-derivative
                l1, l2 = ser(b, 1), ser(b, 2)
                third = mp.diff(lambda x: ser(x, 2), b)
                sg = (b * l1, (l1 + b * l2) / 2, (2 * l2 + b * third) / 4)
            return dict(sigma=sg[0], dsigma=sg[1], d2sigma=sg[2], tau=tau)
        if eq == "PIII_SIGMA":
            _need(p, "s", "alpha")
            s = mp.mpf(p["s"])
            if source == "series":
                ser = painleve.AsymptoticSeries.build("sigma_of_s", alpha, None, order, ctx)
                sg = (ser(s), ser(s, 1), ser(s, 2))
            elif source == "fredholm":
                sg = fredholm.scaled_sigma("bessel", s, alpha, ctx)
            else:
                _need(p, "n", "beta")
                sg = orthopoly.jue_scaled_sigma(s, n, alpha, beta, ctx)
            return dict(sigma=sg[0], dsigma=sg[1], d2sigma=sg[2], s=s, alpha=alpha)
        # R_ODE from the series
        _need(p, "s", "alpha")
        s = mp.mpf(p["s"])
        ser = painleve.AsymptoticSeries.build("R_of_s", alpha, None, order, ctx)
        return dict(R=ser(s), dR=ser(s, 1), d2R=ser(s, 2), s=s, alpha=alpha)


def cmd_residual(cfg: RunConfig):
    p = cfg.params
    eq = p["eq"].upper()
    ctx = cfg.ctx
    try:
        point = assemble_residual_point(eq, p["source"], p, ctx, p.get("order"))
        rep = painleve.residual(eq, point, ctx)
    except SingularityError as exc:
        raise SingularityError(f"{eq} from {p['source']} source: {exc}") from exc
    with ctx.workprec():
        inputs = ";".join(f"{k}={fmt(v, cfg.digits)}" for k, v in point.items())
        return ["equation", "source", "inputs", "residual", "scale", "relative"], [
            [eq, p["source"], inputs, rep.residual, rep.scale, rep.relative]]


# ----------------------------------------------------------------- verify

def cmd_verify(cfg: RunConfig):
    from .verify import run_suite

    checks = run_suite(cfg.params["suite"])
    rows = [[c.name, c.value, c.threshold, "PASS" if c.passed else "FAIL"] for c in checks]
    return ["check", "value", "threshold", "status"], rows


# ----------------------------------------------------------------- plumbing

def _run_jobs(fn, jobs, workers):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map keeps input order whatever the completion order
        return list(pool.map(fn, jobs))


def render(columns, rows, cfg: RunConfig) -> str:
    with mp.workprec(cfg.precision_bits):
        cells = [[fmt(v, cfg.digits) for v in row] for row in rows]
    if cfg.output_format == "json":
        doc = {"command": cfg.command, "precision_bits": cfg.precision_bits, "columns": columns,
               "rows": [dict(zip(columns, r)) for r in cells]}
        return json.dumps(doc, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(cells)
    return buf.getvalue()


COMMANDS = {
    "finite": cmd_finite,
    "asympt": cmd_asympt,
    "fredholm": cmd_fredholm,
    "residual": cmd_residual,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gapprob", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--precision-bits", type=int, default=None, help="mantissa bits (>= 53)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--output", default=None, help="write here instead of stdout")
    parser.add_argument("--workers", type=int, default=1, help="processes for grid sweeps")
    parser.add_argument("--tol", type=float, default=None, help="convergence tolerance where applicable")
    sub = parser.add_subparsers(dest="command", required=True)

    fin = sub.add_parser("finite", help="exact finite-n probabilities (columns: gap, log_p, p)")
    fin.add_argument("--ensemble", choices=("lue", "jue", "gue", "symjue"), required=True)
    fin.add_argument("--n", type=int, required=True)
    fin.add_argument("--alpha", type=float, default=0.0)
    fin.add_argument("--beta", type=float, default=1.0)
    fin.add_argument("--t", type=float, nargs="+", default=[], help="Laguerre/Jacobi wall position(s)")
    fin.add_argument("--a", type=float, nargs="+", default=[], help="half-width(s) of the symmetric gap")
    fin.add_argument("--method", choices=("auto", "hankel", "recurrence"), default="auto")

    asy = sub.add_parser("asympt", help="large-gap expansions with per-term columns")
    asy.add_argument("--kind", choices=tuple(SERIES_FOR), required=True, type=str.lower)
    asy.add_argument("--alpha", type=float, default=None)
    asy.add_argument("--beta", type=float, default=None)
    asy.add_argument("--s", type=float, nargs="+", default=[])
    asy.add_argument("--b", type=float, nargs="+", default=[])
    asy.add_argument("--order", type=int, default=None, help="tail terms kept (default: all tabulated)")

    fre = sub.add_parser("fredholm", help="Nystrom log det(I - K) with its convergence trace")
    fre.add_argument("--kernel", choices=("sine", "bessel"), required=True)
    fre.add_argument("--b", type=float, default=None, help="sine kernel on (-b, b)")
    fre.add_argument("--s", type=float, default=None, help="Bessel kernel on (0, s)")
    fre.add_argument("--alpha", type=float, default=0.0)
    fre.add_argument("--method", choices=("eigen", "cholesky"), default="eigen")
    fre.add_argument("--check-product", action="store_true",
                     help="compare sine(b) with Bessel(-1/2)(b^2) + Bessel(1/2)(b^2)")

    res = sub.add_parser("residual", help="plug computed data into a Painleve-type equation")
    res.add_argument("--eq", required=True, type=str.upper, choices=tuple(RESIDUAL_SOURCES))
    res.add_argument("--source", required=True, choices=("finite", "fredholm", "series"))
    for name, typ in (("n", int), ("alpha", float), ("beta", float), ("t", float), ("a", float),
                      ("tau", float), ("s", float), ("order", int)):
        res.add_argument(f"--{name}", type=typ, default=None)

    ver = sub.add_parser("verify", help="run a self-check suite; exit 0 iff all pass")
    ver.add_argument("--suite", choices=("identities", "constants", "doubling", "all"), default="all")
    return parser


def config_from_args(args) -> RunConfig:
    params = {k: v for k, v in vars(args).items()
              if k not in ("precision_bits", "format", "output", "workers", "tol", "command")}
    bits = resolve_bits(args.command, args.precision_bits)
    PrecisionContext(bits)  # validates
    if args.workers < 1:
        raise DomainError("--workers must be positive")
    return RunConfig(args.command, params, bits, args.tol, args.format, args.output, args.workers)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        columns, rows = COMMANDS[cfg.command](cfg)
    except (DomainError, ValueError, TypeError) as exc:
        print(f"gapprob: error: {exc}", file=sys.stderr)
        return 2
    except (PrecisionInsufficientError, ConvergenceError, ConsistencyError, GapProbError, ArithmeticError) as exc:
        print(f"gapprob: failure: {exc}", file=sys.stderr)
        return 3
    text = render(columns, rows, cfg)
    if cfg.output_path:
        with open(cfg.output_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.command == "verify":
        return 0 if all(r[3] == "PASS" for r in rows) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
