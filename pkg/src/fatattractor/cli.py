"""``fatattractor`` command line.

Exit codes: 0 ok, 1 usage, 2 numerical failure, 3 scenario mismatch.
Every subcommand accepts ``--config FILE`` with ``key=value`` lines using the
long flag names (``lambda=0.51``, ``period-max=3``); flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .attractor import compare_boundary, iterate_F, upper_boundary
from .potentials import PotentialSpecError, parse_potential
from .quadratic import QuadraticSpec, closed_crossing, explicit_symmetric_subaction, twist_predicate
from .scenarios import get_scenario, run_scenario
from .series import (
    CrossingError,
    EnvelopeError,
    candidates,
    crossing_point,
    envelope,
    s_deriv,
    s_values,
    validate_envelope,
)
from .solver import SolverError, empirical_measure, lambda_sweep, realizer, solve_subaction, turning_points
from .svg import Figure
from .symbolic import SymbolSeq, cycle_point
from .transport import (
    DualEval,
    NotOptimalError,
    admissibility_gap,
    dual_identity_residual,
    dual_potential,
    dual_subaction,
    fundamental_relation_residual,
    plan_orbit,
    realizer_monotonicity,
)

OK, USAGE, NUMERICAL, MISMATCH = 0, 1, 2, 3
DEFAULTS = {"lam": 0.51, "period_max": 3, "preperiod_max": 2}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- output ---------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, SymbolSeq):
        return str(obj)
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


class Output:
    """Collects tables and JSON blobs, then writes them to ``--out`` or stdout."""

    def __init__(self, args):
        self.fmt = args.format
        self.out = Path(args.out) if args.out else None
        self.svg = args.svg
        self.prefix = args.cmd
        self.items: list[tuple[str, list[str] | None, object]] = []
        self.figures: list[tuple[str, Figure]] = []

    def table(self, name, header, rows):
        self.items.append((name, list(header), [tuple(r) for r in rows]))

    def data(self, name, obj):
        self.items.append((name, None, obj))

    def figure(self, name, fig: Figure):
        if self.svg:
            self.figures.append((name, fig))

    @staticmethod
    def _csv(header, rows) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows([[_cell(v) for v in r] for r in rows])
        return buf.getvalue()

    def _render(self, header, payload) -> tuple[str, str]:
        if header is not None and self.fmt == "csv":
            return "csv", self._csv(header, payload)
        if header is not None:
            payload = [dict(zip(header, r)) for r in payload]
        return "json", _dumps(payload)

    def flush(self, stream=None) -> None:
        stream = stream or sys.stdout
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
            for name, header, payload in self.items:
                ext, text = self._render(header, payload)
                (self.out / f"{self.prefix}_{name}.{ext}").write_text(text)
            for name, fig in self.figures:
                fig.save(self.out / f"{self.prefix}_{name}.svg")
            return
        if self.figures:
            print("note: --svg needs --out; no figures written", file=sys.stderr)
        if self.fmt == "json":
            bundle = {}
            for name, header, payload in self.items:
                bundle[name] = [dict(zip(header, r)) for r in payload] if header is not None else payload
            stream.write(_dumps(bundle))
            return
        for name, header, payload in self.items:
            stream.write(f"# {name}\n")
            stream.write(self._csv(header, payload) if header is not None else _dumps(payload))


# --- helpers -----------------------------------------------------------------------


def _lam(args) -> float:
    return DEFAULTS["lam"] if args.lam is None else args.lam


def _family(args):
    pm = DEFAULTS["period_max"] if args.period_max is None else args.period_max
    qm = DEFAULTS["preperiod_max"] if args.preperiod_max is None else args.preperiod_max
    return candidates(args.d, pm, qm)


def _need_binary(args):
    if args.d != 2:
        raise UsageError(f"'{args.cmd}' supports d = 2 only")


def _quadratic(A, lam, d):
    if d != 2 or A.coeffs is None or len(A.coeffs) > 3:
        return None
    return QuadraticSpec.from_potential(A, lam)


def _solve(args, A):
    return solve_subaction(A, _lam(args), args.d, args.grid, args.tol)


def _curve_figure(A, lam, seqs, title, depth=None, n=400):
    xs = np.linspace(0.0, 1.0, n + 1)
    fig = Figure(title=title)
    for s in seqs:
        fig.line(xs, s_values(A, lam, xs, s, depth=depth), label=str(s))
    return fig


# --- subcommands ---------------------------------------------------------------------


def cmd_solve(args, out: Output) -> int:
    A = parse_potential(args.potential)
    rep = _solve(args, A)
    b = rep.b
    out.table("b", ["x", "b"], zip(b.nodes, b.values))
    report = rep.to_dict()
    if args.d == 2:
        lam = _lam(args)
        tp = turning_points(b, A, lam)
        report["turning_points"] = list(tp.points)
        report["orbit"] = empirical_measure(b, A, lam).to_dict()["orbit"]
    out.data("report", report)
    out.figure("b", Figure(title=f"b for {A.name}").line(np.r_[b.nodes, 1.0], np.r_[b.values, b.values[0]], label="b"))
    return OK


def cmd_envelope(args, out: Output) -> int:
    A = parse_potential(args.potential)
    lam = _lam(args)
    env = envelope(A, lam, _family(args), depth=args.depth)
    chk = validate_envelope(env)
    out.table("pieces", ["seq", "l", "r"], [(str(p.seq), p.l, p.r) for p in env.pieces])
    xs = np.linspace(0.0, 1.0, 1025)
    out.table("curve", ["x", "b", "piece_index"], zip(xs, env(xs), env.piece_index(xs)))
    out.data("report", {
        "potential": A.name, "lambda": lam, "switch_points": env.switch_points,
        "calibration_residual": chk.residual, "invariance_residual": chk.invariance_residual, "depth": args.depth,
    })
    fig = _curve_figure(A, lam, env.sequences, f"envelope of {A.name}", args.depth)
    out.figure("envelope", fig.line(xs, env(xs), color="black", label="envelope"))
    return OK


def cmd_attractor(args, out: Output) -> int:
    A = parse_potential(args.potential)
    lam = _lam(args)
    if not args.iters > args.burn_in >= 0:
        raise UsageError("need --iters > --burn-in >= 0")
    cloud = iterate_F(A, lam, args.d, args.x0, 0.0, args.iters, args.burn_in, args.seed)
    bd = upper_boundary(cloud, args.bins)
    b = _solve(args, A).b
    chk = compare_boundary(bd, b)
    out.table("cloud", ["x", "s"], zip(cloud.x, cloud.s))
    out.table("boundary", ["x", "smax", "count"], bd.rows())
    out.data("report", {**cloud.params, "burn_in": args.burn_in, "bins": args.bins, "points": len(cloud),
                        "empty_bins": int(bd.empty.sum()), "max_excess_over_b": chk.max_excess,
                        "max_gap_busy_bins": chk.max_gap, "busy_bins": chk.visited})
    fig = Figure(title=f"F-orbit, {A.name}, lambda={lam:g}").dots(cloud.x, cloud.s)
    out.figure("cloud", fig.line(np.r_[b.nodes, 1.0], np.r_[b.values, b.values[0]], color="#d62728", label="b"))
    return OK


def cmd_twist(args, out: Output) -> int:
    A = parse_potential(args.potential)
    lam = _lam(args)
    if A.deriv1 is None:
        raise UsageError(f"{A.name} has no derivative; twist scan unavailable")
    fam = _family(args)
    xs = (np.arange(64) + 0.5) / 64
    der = {s: np.asarray(s_deriv(A, lam, xs, s)) for s in fam}
    rows = []
    worst = -np.inf
    for i, lo in enumerate(fam):
        for hi in fam[i + 1:]:
            dd = der[hi] - der[lo]  # greater minus smaller sequence
            rows.append((str(hi), str(lo), float(dd.min()), float(dd.max()), bool(dd.max() < 0.0)))
            worst = max(worst, float(dd.max()))
    q = _quadratic(A, lam, args.d)
    out.table("pairs", ["greater", "smaller", "min_dprime", "max_dprime", "negative"], rows)
    out.data("report", {"potential": A.name, "lambda": lam, "pairs": len(rows), "max_dprime": worst,
                        "all_negative": worst < 0.0, "quadratic_twist": None if q is None else twist_predicate(q)})
    return OK


def cmd_crossings(args, out: Output) -> int:
    A = parse_potential(args.potential)
    lam = _lam(args)
    fam = _family(args)
    q = _quadratic(A, lam, args.d)
    xs = np.linspace(0.0, 1.0, 257)
    vals = {s: s_values(A, lam, xs, s) for s in fam}
    rows = []
    for i, a in enumerate(fam):
        for b in fam[i + 1:]:
            sg = np.sign(vals[a] - vals[b])
            brackets = [(xs[j], xs[j + 1]) for j in np.flatnonzero(sg[:-1] * sg[1:] < 0)]
            # a root sitting exactly on a node
            brackets += [(xs[j - 1], xs[j + 1]) for j in range(1, xs.size - 1) if sg[j] == 0 and sg[j - 1] * sg[j + 1] < 0]
            for lo, hi in sorted(brackets):
                x = crossing_point(A, lam, a, b, (lo, hi))
                closed = float("nan")
                if q is not None:
                    try:
                        closed = closed_crossing(q, a, b).x
                    except ValueError:
                        pass
                rows.append((str(a), str(b), x, closed))
    out.table("crossings", ["a", "b", "x", "closed_form"], rows)
    return OK


def cmd_turning(args, out: Output) -> int:
    _need_binary(args)
    A = parse_potential(args.potential)
    lam = _lam(args)
    b = _solve(args, A).b
    tp = turning_points(b, A, lam)
    mono = realizer_monotonicity(b, A, lam, depth=args.depth or 12)
    rows = [("gap_zero", x) for x in tp.points] + [("realizer_switch", x) for x in mono.switches]
    out.table("turning", ["kind", "x"], rows)
    out.data("report", {"potential": A.name, "lambda": lam, "degenerate": tp.degenerate,
                        "orientation": mono.orientation, "monotone": mono.ok, "violations": mono.violations,
                        "skipped": mono.skipped})
    return OK


def cmd_dual(args, out: Output) -> int:
    _need_binary(args)
    A = parse_potential(args.potential)
    lam = _lam(args)
    b = _solve(args, A).b
    de = DualEval(A, lam)
    env = envelope(A, lam, _family(args))
    rows = [(str(s), dual_potential(de, s), dual_subaction(de, s), dual_identity_residual(de, s)) for s in env.sequences]
    out.table("dual", ["seq", "A_star", "b_star", "identity_residual"], rows)
    # p along greedy realizers and the fundamental relation at random pairs
    p_max = 0.0
    for x in (np.arange(64) + 0.5) / 64:
        seq = realizer(b, A, lam, float(x)).seq
        if seq is not None:
            p_max = max(p_max, abs(admissibility_gap(b, de, float(x), seq)))
    rng = np.random.default_rng(0 if args.seed is None else args.seed)
    fr = 0.0
    for _ in range(20):
        a = SymbolSeq(rng.integers(0, 2, rng.integers(0, 3)), rng.integers(0, 2, rng.integers(1, 4)))
        fr = max(fr, fundamental_relation_residual(b, de, float(rng.random()), a))
    plan = None
    for s in env.sequences:
        if s.is_periodic:
            try:
                plan = plan_orbit(de, b, cycle_point(s), s)
                break
            except NotOptimalError:
                continue
    out.data("report", {"potential": A.name, "lambda": lam, "xbar": de.xbar, "p_max_on_realizers": p_max,
                        "fundamental_relation_max": fr, "plan": None if plan is None else plan.to_dict()})
    return OK


def _sweep_one(job):
    spec, lam, n, tol, d = job
    return lambda_sweep(parse_potential(spec), [lam], n, tol, d)[0]


def cmd_sweep(args, out: Output) -> int:
    parse_potential(args.potential)  # fail early on bad grammar
    try:
        lams = [float(v) for v in args.lambdas.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad --lambdas {args.lambdas!r}") from None
    for lam in lams:
        if not 0.0 < lam < 1.0:
            raise UsageError(f"lambda {lam} outside (0, 1)")
    jobs = [(args.potential, lam, args.grid, args.tol, args.d) for lam in lams]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    out.table("sweep", ["lambda", "max_b", "scaled", "iterations"], [(r.lam, r.max_b, r.scaled, r.iterations) for r in rows])
    return OK


def cmd_scenario(args, out: Output) -> int:
    try:
        sc = get_scenario(args.name)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from None
    res = run_scenario(sc, args.lam, args.grid, args.depth, args.period_max, args.preperiod_max)
    out.table("pieces", ["seq", "l", "r"], [(str(p.seq), p.l, p.r) for p in res.env.pieces])
    out.data("report", {**res.to_dict(), "note": sc.note})
    if args.svg:
        A = res.env.A
        cloud = iterate_F(A, res.lam, sc.d, args.x0, 0.0, args.iters, args.burn_in, args.seed)
        fig = _curve_figure(A, res.lam, res.env.sequences, f"{sc.name}, lambda={res.lam:g}", args.depth)
        out.figure("figure", fig.dots(cloud.x, cloud.s))
    for m in res.mismatches:
        print(f"mismatch: {m}", file=sys.stderr)
    return OK if res.ok else MISMATCH


def cmd_report(args, out: Output) -> int:
    A = parse_potential(args.potential)
    lam = _lam(args)
    rep = _solve(args, A)
    env = envelope(A, lam, _family(args), depth=args.depth)
    chk = validate_envelope(env)
    bundle = {
        "solve": rep.to_dict(),
        "envelope": {"pieces": env.to_dicts(), "switch_points": env.switch_points,
                     "calibration_residual": chk.residual,
                     "grid_distance": float(np.max(np.abs(env(rep.b.nodes) - rep.b.values)))},
    }
    if args.d == 2:
        tp = turning_points(rep.b, A, lam)
        bundle["turning_points"] = {"points": tp.points, "degenerate": tp.degenerate}
        de = DualEval(A, lam)
        bundle["dual"] = {str(s): {"A_star": dual_potential(de, s), "b_star": dual_subaction(de, s)} for s in env.sequences}
    q = _quadratic(A, lam, args.d)
    if q is not None:
        quad = {"twist": twist_predicate(q), "crossings": []}
        for p, r in zip(env.pieces, env.pieces[1:]):
            try:
                c = closed_crossing(q, p.seq, r.seq)
                quad["crossings"].append({"a": str(p.seq), "b": str(r.seq), "x": c.x, "inside": c.inside})
            except ValueError:
                pass
        if (q.c0, q.c1, q.c2) == (-0.25, 1.0, -1.0):
            quad["explicit_symmetric"] = explicit_symmetric_subaction(lam).to_dict()
        bundle["quadratic"] = quad
    out.fmt = "json"
    out.data("report", bundle)
    return OK


COMMANDS = {
    "solve": (cmd_solve, "grid solution b of the calibration equation"),
    "envelope": (cmd_envelope, "upper envelope of S(., a) over a candidate family"),
    "attractor": (cmd_attractor, "point cloud of F and its binned upper boundary"),
    "twist": (cmd_twist, "sign scan of Delta' over candidate pairs"),
    "crossings": (cmd_crossings, "crossing points of S(., a) and S(., b)"),
    "turning": (cmd_turning, "turning points and realizer switches"),
    "dual": (cmd_dual, "dual potential, dual subaction, admissibility and plan orbit"),
    "sweep": (cmd_sweep, "(1 - lambda) max b over a list of discounts"),
    "scenario": (cmd_scenario, "run a preset example and diff against its expected structure"),
    "report": (cmd_report, "JSON bundle of the main diagnostics"),
}


def _flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda", dest="lam", type=float, default=None, help="discount in (0, 1) [0.51]")
    p.add_argument("--d", type=int, default=2, help="degree of T(x) = d x mod 1")
    p.add_argument("--potential", default="quad_sym", help="e.g. quad_sym, poly:-0.25,1,-1, quad_eps:0.05,0.2, table:A.csv")
    p.add_argument("--grid", type=int, default=4096, help="grid nodes for the solver")
    p.add_argument("--tol", type=float, default=1e-10, help="solver error bound")
    p.add_argument("--depth", type=int, default=None, help="truncate series after this many terms")
    p.add_argument("--period-max", type=int, default=None)
    p.add_argument("--preperiod-max", type=int, default=None)
    p.add_argument("--iters", type=int, default=4000)
    p.add_argument("--burn-in", type=int, default=50)
    p.add_argument("--bins", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--x0", type=float, default=None, help="start of the base orbit [sqrt(2) - 1]")
    p.add_argument("--out", default=None, help="output directory (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--svg", action="store_true", help="also write SVG figures (needs --out)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--config", default=None, help="key=value file; flags take precedence")


def build_parser() -> _Parser:
    parser = _Parser(prog="fatattractor", description="Upper boundary of the fat attractor of F(x,s) = (dx mod 1, lam s + A(x)).")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="cmd", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        if name == "scenario":
            p.add_argument("name")
        if name == "sweep":
            p.add_argument("--lambdas", default="0.5,0.6,0.7,0.8,0.9", help="comma separated")
        _flags(p)
    return parser


def read_config(path) -> dict[str, str]:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key = key.strip().lstrip("-").replace("-", "_")
        cfg["lam" if key == "lambda" else key] = value.strip()
    return cfg


def _apply_config(parser: _Parser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    cfg = read_config(known.config)
    if "svg" in cfg:
        cfg["svg"] = cfg["svg"].lower() in ("1", "true", "yes", "on")
    subs = parser._subparsers._group_actions[0].choices.values()
    known_dests = set().union(*({a.dest for a in p._actions} for p in subs))
    unknown = set(cfg) - known_dests
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for p in subs:
        dests = {a.dest for a in p._actions}
        # string values go through each action's type when argparse applies defaults
        p.set_defaults(**{k: v for k, v in cfg.items() if k in dests})


def _validate(args) -> None:
    if args.lam is not None and not 0.0 < args.lam < 1.0:
        raise UsageError(f"--lambda must lie in (0, 1), got {args.lam}")
    if args.d < 2:
        raise UsageError("--d must be >= 2")
    if args.grid < 8:
        raise UsageError("--grid must be >= 8")
    if args.bins < 2:
        raise UsageError("--bins must be >= 2")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    for flag in ("period_max", "depth"):
        v = getattr(args, flag)
        if v is not None and v < 1:
            raise UsageError(f"--{flag.replace('_', '-')} must be >= 1")
    if args.preperiod_max is not None and args.preperiod_max < 0:
        raise UsageError("--preperiod-max must be >= 0")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        _validate(args)
        out = Output(args)
        code = COMMANDS[args.cmd][0](args, out)
        out.flush()
        return code
    except (UsageError, PotentialSpecError, OSError) as exc:
        print(f"fatattractor: error: {exc}", file=sys.stderr)
        return USAGE
    except (SolverError, EnvelopeError, CrossingError, NotOptimalError, ArithmeticError, ValueError) as exc:
        print(f"fatattractor: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
