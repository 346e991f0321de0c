"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error.
"""

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile

from . import bounds, montecarlo
from .ensembles import Ensemble, generate_matrix, generate_signal, measure
from .errors import DomainError, InvalidDimensionError
from .omp import OmpConfig, omp_detect
from .seeding import derive_seed

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SWEEP_HEADER = ["m", "trials", "successes", "error_rate", "ci_low", "ci_high", "ensemble"]
DEFAULT_G_GRID = (2.1, 3.0, 5.0, 10.0)

log = logging.getLogger("rprsd")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- output ---


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temp file and rename."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(out, text)


def _fmt(v):
    return repr(float(v))


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def sweep_csv(results):
    rows = [
        [r.m, r.trials, r.successes, _fmt(r.error_rate), _fmt(r.ci_low), _fmt(r.ci_high), r.ensemble]
        for r in results
    ]
    return _csv_text(SWEEP_HEADER, rows)


def _format(args):
    return "json" if getattr(args, "json", False) else args.format


# ------------------------------------------------------------ validation ---


def _positive_int(name, v):
    if v is None or v < 1:
        raise UsageError(f"{name} must be a positive integer, got {v}")


def _check_eps(eps):
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")


def _check_g(g):
    if g is not None and not g > 2:
        raise UsageError("g must exceed 2")


def _parse_range(text):
    """``start:stop:step`` (inclusive stop) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (int(p) for p in text.split(":"))
            if step < 1 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad m range {text!r}; use start:stop:step or a,b,c") from None


# --------------------------------------------------------------- bounds ---


def bounds_table(N, K, eps, g=None, C=11.0):
    """Rows of required measurement counts; the data behind ``cmd_bounds``."""
    go = bounds.g_opt(N, K, eps)
    rows = []

    def row(name, m_real, gv):
        rows.append(
            {
                "row": name,
                "m_real": m_real,
                "ceil": math.ceil(m_real),
                "round": int(math.floor(m_real + 0.5)),
                "g": gv,
            }
        )

    row("RPR (g=g_opt)", bounds.required_m_rpr(N, K, eps, go).m_real, go)
    if g is not None:
        row("RPR (user g)", bounds.required_m_rpr(N, K, eps, g).m_real, g)
    row(f"Gaussian C={C:g}", bounds.required_m_gaussian(N, K, eps, C).m_real, None)
    if K < N:
        row("RIP", bounds.required_m_rip(N, K), None)
    return {"N": N, "K": K, "eps": eps, "C": C, "g_opt": go, "rows": rows}


def _bounds_text(tab):
    lines = [
        f"N={tab['N']} K={tab['K']} eps={tab['eps']:g} C={tab['C']:g}",
        f"g_opt = {tab['g_opt']:.4f}",
        f"{'row':<18} {'m_real':>10} {'ceil':>6} {'round':>6} {'g':>8}",
    ]
    for r in tab["rows"]:
        gs = "-" if r["g"] is None else f"{r['g']:.4f}"
        lines.append(f"{r['row']:<18} {r['m_real']:>10.4f} {r['ceil']:>6d} {r['round']:>6d} {gs:>8}")
    return "\n".join(lines) + "\n"


def cmd_bounds(args):
    _positive_int("N", args.N)
    _positive_int("K", args.K)
    _check_eps(args.eps)
    _check_g(args.g)
    if not args.C > 0:
        raise UsageError("C must be positive")
    tab = bounds_table(args.N, args.K, args.eps, args.g, args.C)
    fmt = _format(args)
    if fmt == "json":
        text = json.dumps(tab, indent=2) + "\n"
    elif fmt == "csv":
        text = _csv_text(
            ["row", "m_real", "ceil", "round", "g"],
            [[r["row"], _fmt(r["m_real"]), r["ceil"], r["round"], "" if r["g"] is None else _fmt(r["g"])] for r in tab["rows"]],
        )
    else:
        text = _bounds_text(tab)
    _emit(text, args.out)
    return EXIT_OK


# ------------------------------------------------------------- simulate ---


def _sweep_args(args, m_values):
    _positive_int("N", args.N)
    _positive_int("K", args.K)
    if args.trials < 100:
        raise UsageError(f"trials must be at least 100, got {args.trials}")
    if not m_values:
        raise UsageError("empty m range")
    if min(m_values) < args.K:
        raise UsageError(f"every m must be >= K={args.K}")


def cmd_simulate(args):
    m_values = _parse_range(args.m_range) if args.m_range else ([args.M] if args.M else [])
    _sweep_args(args, m_values)
    cfg = montecarlo.SweepConfig(args.N, args.K, m_values, args.trials, args.seed, args.ensemble)
    results = montecarlo.sweep_error_rate(cfg, workers=args.workers)
    if args.trace:
        traces = []
        for m in m_values:
            seed = derive_seed(args.seed, m, 0)
            A = generate_matrix(args.ensemble, m, args.N, seed)
            x = generate_signal(args.N, args.K, seed=derive_seed(seed, 1))
            tr = omp_detect(A, measure(A, x), OmpConfig(args.K), true_support=x.support)
            d = tr.to_dict(one_based=args.one_based)
            d["m"] = m
            d["true_support"] = [i + (1 if args.one_based else 0) for i in x.support]
            traces.append(d)
        write_atomic(args.trace, json.dumps(traces, indent=2, default=_json_default) + "\n")
    if _format(args) == "json":
        text = json.dumps([_result_dict(r) for r in results], indent=2) + "\n"
    else:
        text = sweep_csv(results)
    _emit(text, args.out)
    return EXIT_OK


def _json_default(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    raise TypeError


def _result_dict(r):
    return {k: getattr(r, k) for k in SWEEP_HEADER}


# -------------------------------------------------------------- figure1 ---


def cmd_figure1(args):
    m_values = _parse_range(args.m_range)
    _sweep_args(args, m_values)
    _check_eps(args.eps)
    out_dir = args.out or "."
    if not os.path.isdir(out_dir):
        raise UsageError(f"output directory {out_dir!r} does not exist")

    go = bounds.g_opt(args.N, args.K, args.eps)
    m_rpr = bounds.required_m_rpr(args.N, args.K, args.eps, go)
    m_g = bounds.required_m_gaussian(args.N, args.K, args.eps, args.C)
    outputs = {}
    for name, ens in (("figure1_rpr.csv", Ensemble.RPR), ("figure1_gaussian.csv", Ensemble.GAUSSIAN)):
        cfg = montecarlo.SweepConfig(args.N, args.K, m_values, args.trials, args.seed, ens)
        outputs[name] = sweep_csv(montecarlo.sweep_error_rate(cfg, workers=args.workers))
    lines = {
        "N": args.N,
        "K": args.K,
        "eps": args.eps,
        "C": args.C,
        "g_opt": go,
        "m_min_rpr": m_rpr.m_int,
        "m_min_rpr_real": m_rpr.m_real,
        "m_min_rpr_rounded": m_rpr.rounded,
        "m_min_gaussian": m_g.m_int,
        "m_min_gaussian_real": m_g.m_real,
        "m_rip": bounds.required_m_rip(args.N, args.K) if args.K < args.N else None,
    }
    outputs["figure1_lines.json"] = json.dumps(lines, indent=2, sort_keys=True) + "\n"

    written = []
    try:
        for name, text in outputs.items():
            path = os.path.join(out_dir, name)
            write_atomic(path, text)
            written.append(path)
    except OSError as exc:
        for p in written:
            os.unlink(p)
        print(f"error: cannot write {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_FAIL
    for p in written:
        print(p)
    return EXIT_OK


# ------------------------------------------------------ data dumps/verify ---


def _g_grid(text):
    try:
        gs = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad g grid {text!r}") from None
    for g in gs:
        _check_g(g)
    return gs


def _tail_rows(M, samples, seed, deltas, gs):
    cdf = montecarlo.sample_inner_product(M, samples, seed)
    return [[d, float(cdf.tail(d))] + [float(bounds.tail_bound(d, M, g)) for g in gs] for d in deltas]


def cmd_tail(args):
    _positive_int("M", args.M)
    gs = _g_grid(args.g_grid)
    if args.samples < 1000:
        raise UsageError("samples must be at least 1000")
    deltas = montecarlo.delta_grid(args.points, args.delta_max)
    rows = _tail_rows(args.M, args.samples, args.seed, deltas, gs)
    header = ["delta", "empirical"] + [f"bound_g{g:g}" for g in gs]
    _emit(_table(header, rows, _format(args)), args.out)
    return EXIT_OK


def cmd_coherence(args):
    _positive_int("M", args.M)
    if args.N is None or args.N < 2:
        raise UsageError("N must be at least 2")
    gs = _g_grid(args.g_grid)
    if args.samples < 1000:
        raise UsageError("samples must be at least 1000")
    cdf = montecarlo.empirical_coherence_cdf(args.M, args.N, args.ensemble, args.samples, args.seed)
    deltas = montecarlo.delta_grid(args.points)
    rows = [[d, float(cdf(d))] + [bounds.coherence_cdf_bound(d, args.M, args.N, g) for g in gs] for d in deltas]
    header = ["delta", "empirical"] + [f"bound_g{g:g}" for g in gs]
    _emit(_table(header, rows, _format(args)), args.out)
    return EXIT_OK


def cmd_moments(args):
    _positive_int("M", args.M)
    if args.kmax < 2:
        raise UsageError("kmax must be at least 2")
    if args.samples < 100_000:
        raise UsageError("samples must be at least 100000")
    rows = montecarlo.verify_moment_dominance(args.M, args.kmax, args.samples, args.seed)
    header = ["k", "rpr_estimate", "rpr_se", "bernoulli", "bernoulli_se", "bernoulli_exact", "verdict"]
    data = [[r.k, r.rpr_estimate, r.rpr_se, r.bernoulli_value, r.bernoulli_se, r.bernoulli_exact, r.verdict] for r in rows]
    _emit(_table(header, data, _format(args)), args.out)
    return EXIT_OK


def _table(header, rows, fmt):
    if fmt == "json":
        return json.dumps([dict(zip(header, r)) for r in rows], indent=2) + "\n"
    conv = [[_fmt(v) if isinstance(v, float) else v for v in r] for r in rows]
    if fmt == "csv":
        return _csv_text(header, conv)
    widths = [max(len(str(h)), *(len(str(r[i])) for r in conv)) for i, h in enumerate(header)]
    lines = ["  ".join(str(h).rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(str(v).rjust(w) for v, w in zip(r, widths)) for r in conv]
    return "\n".join(lines) + "\n"


def cmd_verify(args):
    suite = args.suite
    lines = []
    ok = True
    if suite == "tail":
        _positive_int("M", args.M)
        if args.samples < 1000:
            raise UsageError("samples must be at least 1000")
        gs = _g_grid(args.g_grid)
        verdicts = montecarlo.verify_tail([args.M], montecarlo.delta_grid(10, 0.6), gs, args.samples, args.seed)
        for v in verdicts:
            p = v.params
            lines.append(
                f"{'PASS' if v.passed else 'FAIL'} M={p['M']} delta={p['delta']:.3f} g={p['g']:g} "
                f"empirical={v.empirical:.6g} bound={v.bound:.6g} sigma={v.sigma:.3g}"
            )
            ok &= v.passed
    elif suite == "coherence":
        _positive_int("M", args.M)
        if args.N is None or args.N < 2:
            raise UsageError("N must be at least 2")
        if args.samples < 1000:
            raise UsageError("samples must be at least 1000")
        gs = _g_grid(args.g_grid)
        verdicts = montecarlo.verify_coherence_cdf(
            args.M, args.N, args.ensemble, args.samples, args.seed, g_values=gs
        )
        for v in verdicts:
            p = v.params
            lines.append(
                f"{'PASS' if v.passed else 'FAIL'} M={p['M']} N={p['N']} delta={p['delta']:.4f} g={p['g']:g} "
                f"empirical={v.empirical:.6g} bound={v.bound:.6g} sigma={v.sigma:.3g}"
            )
            ok &= v.passed
    else:
        _positive_int("M", args.M)
        if args.kmax < 2:
            raise UsageError("kmax must be at least 2")
        samples = max(args.samples, 100_000)
        for r in montecarlo.verify_moment_dominance(args.M, args.kmax, samples, args.seed):
            lines.append(
                f"{'PASS' if r.passed else 'FAIL'} k={r.k} rpr={r.rpr_estimate:.6g}+-{r.rpr_se:.2g} "
                f"bernoulli={r.bernoulli_value:.6g} verdict={r.verdict}"
            )
            ok &= r.passed
    lines.append(f"overall: {'PASS' if ok else 'FAIL'}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------- parser ---


def build_parser():
    p = _Parser(prog="rprsd", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, fmt_default="csv", formats=("csv", "json", "text")):
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--format", choices=formats, default=fmt_default)
        sp.add_argument("--json", action="store_true", help="shorthand for --format json")
        sp.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bounds", help="required measurement counts")
    b.add_argument("-N", type=int, required=True)
    b.add_argument("-K", type=int, required=True)
    b.add_argument("--eps", type=float, default=0.1)
    b.add_argument("-g", type=float, default=None)
    b.add_argument("-C", type=float, default=11.0, help="Gaussian baseline constant")
    common(b, fmt_default="text")
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("simulate", help="OMP support-detection error rate sweep")
    s.add_argument("-N", type=int, default=200)
    s.add_argument("-K", type=int, default=2)
    s.add_argument("-M", type=int, default=None, help="single measurement count")
    s.add_argument("--m-range", default=None, help="start:stop:step (inclusive) or a,b,c")
    s.add_argument("--trials", type=int, default=10_000)
    s.add_argument("--ensemble", type=Ensemble.parse, default=Ensemble.RPR)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--trace", default=None, help="write OMP traces of trial 0 per m as JSON")
    s.add_argument("--one-based", action="store_true", help="report indices 1-based")
    common(s)
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("figure1", help="error-rate curves and bound lines for plotting")
    f.add_argument("-N", type=int, default=200)
    f.add_argument("-K", type=int, default=2)
    f.add_argument("--eps", type=float, default=0.1)
    f.add_argument("-C", type=float, default=11.0)
    f.add_argument("--m-range", default="10:200:10")
    f.add_argument("--trials", type=int, default=10_000)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--workers", type=int, default=1)
    f.add_argument("--out", default=".", help="output directory")
    f.set_defaults(func=cmd_figure1)

    for name, func, helptext in (
        ("tail", cmd_tail, "empirical |p^H u| tail against the Chernoff bound"),
        ("coherence", cmd_coherence, "empirical coherence CDF against its lower bound"),
        ("moments", cmd_moments, "RPR vs Bernoulli even moments"),
    ):
        sp = sub.add_parser(name, help=helptext)
        _data_args(sp, name)
        common(sp)
        sp.set_defaults(func=func)

    v = sub.add_parser("verify", help="pass/fail bound verification suites")
    v.add_argument("suite", choices=("tail", "coherence", "moments"))
    v.add_argument("-M", type=int, default=64)
    v.add_argument("-N", type=int, default=8)
    v.add_argument("--ensemble", type=Ensemble.parse, default=Ensemble.RPR)
    v.add_argument("--samples", type=int, default=None)
    v.add_argument("--kmax", type=int, default=4)
    v.add_argument("--g-grid", default=",".join(f"{g:g}" for g in DEFAULT_G_GRID))
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)
    return p


def _data_args(sp, name):
    sp.add_argument("-M", type=int, default=64)
    if name == "coherence":
        sp.add_argument("-N", type=int, default=8)
        sp.add_argument("--ensemble", type=Ensemble.parse, default=Ensemble.RPR)
    if name == "moments":
        sp.add_argument("--kmax", type=int, default=4)
    default_samples = {"tail": 100_000, "coherence": 10_000, "moments": 1_000_000}[name]
    sp.add_argument("--samples", type=int, default=default_samples)
    if name != "moments":
        sp.add_argument("--g-grid", default=",".join(f"{g:g}" for g in DEFAULT_G_GRID))
        sp.add_argument("--points", type=int, default=32 if name == "coherence" else 10)
    if name == "tail":
        sp.add_argument("--delta-max", type=float, default=0.6)


_VERIFY_SAMPLES = {"tail": 100_000, "coherence": 10_000, "moments": 1_000_000}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "verify" and args.samples is None:
            args.samples = _VERIFY_SAMPLES[args.suite]
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, InvalidDimensionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
