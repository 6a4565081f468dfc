"""Command-line reports: ``matchpoly <command> [options]``.

Output is JSON by default (``--format csv|table`` for other views) and always
carries a run manifest.  Exit codes: 0 success (or "member"), 2 "not a
member" from ``member``, 1 for any usage or input error.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import sys
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import numpy as np

from . import bounds, optimizer
from .core import load_matrix
from .matchings import count_k_matchings
from .polytope import barycenter, is_member


GLOBAL_DEFAULTS = {"format": "json", "regime": "exact", "quiet": False}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "0+unknown"


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    now = (_dt.datetime.fromtimestamp(int(epoch), _dt.timezone.utc) if epoch
           else _dt.datetime.now(_dt.timezone.utc))
    return now.isoformat(timespec="seconds")


def _digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def manifest(args: argparse.Namespace, inputs: list[str], seed=None) -> dict:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    return {
        "command": args.command,
        "parameters": params,
        "seed": seed,
        "version": _version(),
        "timestamp": _timestamp(),
        "inputs": {p: _digest(p) for p in inputs},
    }


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def emit(args, man: dict, result: dict, rows: list[dict] | None = None) -> None:
    """Print ``result`` in the requested format; ``rows`` drives csv/table views."""
    if args.quiet:
        return
    fmt = args.format
    if fmt == "json" or rows is None:
        print(json.dumps({"manifest": man, "result": result}, default=_jsonable, indent=2))
        return
    cols = list(rows[0]) if rows else []
    if fmt == "csv":
        buf = io.StringIO()
        for key, val in man.items():
            buf.write(f"# {key}: {json.dumps(val, default=_jsonable)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_cell(r[c]) for c in cols])
        sys.stdout.write(buf.getvalue())
        return
    cells = [[_cell(r[c]) for c in cols] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(cols)]
    print(f"# {man['command']}  version {man['version']}  seed {man['seed']}  {man['timestamp']}")
    print("  ".join(c.rjust(w) for c, w in zip(cols, widths)))
    for row in cells:
        print("  ".join(v.rjust(w) for v, w in zip(row, widths)))


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _parse_range(text: str | None, n: int) -> list[int]:
    if text is None:
        return list(range(2, n + 1))
    try:
        if ":" in text:
            a, b = (int(t) for t in text.split(":"))
            return list(range(a, b + 1))
        return [int(text)]
    except ValueError as exc:
        raise UsageError(f"bad --k-range {text!r}; use K or A:B") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_formulas(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be >= 2")
    ks = _parse_range(args.k_range, args.n)
    if not ks or min(ks) < 2 or max(ks) > args.n:
        raise UsageError("--k-range must lie within 2..n")
    exact = args.regime == "exact"
    rows = []
    for k in ks:
        rep = bounds.bound_report(args.n, k)
        row = rep.to_json()
        if not exact:
            row["haf_exact"] = float(rep.haf_exact)
            row["perm"] = float(rep.perm)
        rows.append(row)
    chain = bounds.inequality_chain(args.n)
    asym = bounds.asymptotics(args.n)
    result = {
        "n": args.n, "rows": rows,
        "chain": {"lower": chain.lower, "middle": chain.middle if exact else float(chain.middle),
                  "right": chain.right if exact else float(chain.right), "holds": chain.holds},
        "asymptotics": {"approx_haf": asym.approx_haf, "approx_perm": asym.approx_perm,
                        "ratio_haf": asym.ratio_haf, "ratio_perm": asym.ratio_perm},
    }
    emit(args, manifest(args, []), result, rows)
    return 0


def cmd_member(args) -> int:
    b = load_matrix(args.matrix, exact=True if args.regime == "exact" else None)
    verdict = is_member(b, args.tol)
    result = verdict.to_json()
    result["order"] = b.order
    rows = []
    for v in verdict.violations:
        d = v.to_json()
        rows.append({"kind": d.get("kind", "odd_set"), "vertices": d.get("subset", d.get("where")),
                     "amount": d.get("excess", d.get("value"))})
    rows = rows or [{"kind": "none", "vertices": [], "amount": 0.0}]
    emit(args, manifest(args, [args.matrix]), result, rows)
    return 0 if verdict.member else 2


def _config(args) -> tuple[optimizer.OptimizeConfig, list[str]]:
    inputs = []
    payload: dict = {}
    if args.config:
        payload = json.loads(Path(args.config).read_text())
        inputs.append(args.config)
    if getattr(args, "seed", None) is not None:
        payload["seed"] = args.seed
    if "seed" not in payload:
        raise UsageError("a seed is mandatory: set it in --config or pass --seed")
    payload.pop("n", None)
    payload.pop("k", None)
    try:
        _, _, cfg = optimizer.load_run_config(payload)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    return cfg, inputs


def cmd_minimize(args) -> int:
    cfg, inputs = _config(args)
    res = optimizer.minimize_haf_k(args.n, args.k, cfg)
    if args.trajectory:
        Path(args.trajectory).write_text(res.trajectory_csv())
    result = res.to_json(include_trajectory=args.format == "json" and args.with_trajectory)
    result["barycenter_value"] = float(bounds.haf_k_barycenter_formula(args.n, args.k))
    rows = [{"n": res.n, "k": res.k, "label": res.label, "best_value": res.best_value,
             "barycenter_value": result["barycenter_value"], "final_gap": result["final_gap"],
             "iterations": result["iterations"], "converged": res.converged}]
    emit(args, manifest(args, inputs, cfg.seed), result, rows)
    return 0


def cmd_bounds(args) -> int:
    if not 2 <= args.k <= args.n:
        raise UsageError("need 2 <= k <= n")
    rng = np.random.default_rng(args.seed)
    checks = bounds.sampled_bound_check(args.n, args.k, args.samples, rng)
    bound = bounds.hyperbolic_bound(args.n, args.k)
    rows = [{"sample": i, "haf_k": c.value, "bound": c.bound,
             "status": ("holds" if c.satisfied else "VIOLATED") if c.applicable else "bound not applicable"}
            for i, c in enumerate(checks)]
    applicable = [c for c in checks if c.applicable]
    result = {"n": args.n, "k": args.k, "hyperbolic_bound": bound,
              "applicable": len(applicable), "all_hold": all(c.satisfied for c in applicable),
              "min_gated_value": min((c.value for c in applicable), default=None), "samples": rows}
    emit(args, manifest(args, [], args.seed), result, rows)
    return 0


def cmd_capacity(args) -> int:
    inputs = []
    if args.matrix:
        b = load_matrix(args.matrix)
        inputs.append(args.matrix)
    else:
        b = barycenter(2 * args.n)
    est = bounds.capacity_estimate(b, args.k, tol=args.tol)
    half = b.order // 2
    result = {"order": b.order, "k": args.k, "value": est.value, "expected": float((2 * half) ** args.k),
              "iterations": est.iterations, "minimizer": est.minimizer.tolist()}
    rows = [{k: result[k] for k in ("order", "k", "value", "expected", "iterations")}]
    emit(args, manifest(args, inputs), result, rows)
    return 0


def cmd_hessian(args) -> int:
    if not 2 <= args.k <= args.n:
        raise UsageError("need 2 <= k <= n")
    h = optimizer.hessian_on_tangent(args.n, args.k)
    result = {"n": args.n, "k": args.k, "dimension": len(h.eigenvalues),
              "eigenvalues": list(h.eigenvalues), "min_eigenvalue": min(h.eigenvalues),
              "positive_definite": h.positive_definite}
    rows = [{"index": i, "eigenvalue": v} for i, v in enumerate(h.eigenvalues)]
    emit(args, manifest(args, []), result, rows)
    return 0


def cmd_count(args) -> int:
    a = load_matrix(args.matrix, exact=True)
    count = count_k_matchings(a, args.k)
    result = {"order": a.order, "k": args.k, "count": count}
    emit(args, manifest(args, [args.matrix]), result, [result])
    return 0


def cmd_mu_table(args) -> int:
    if args.max_n < 2:
        raise UsageError("--max-n must be >= 2")
    cfg, inputs = _config(args)
    table = optimizer.mu_table(args.max_n, cfg)
    result = table.to_json()
    rows = [dict(r, cps_upper_bound=table.cps_upper_bound) for r in result["rows"]]
    emit(args, manifest(args, inputs, cfg.seed), result, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    # SUPPRESS so a flag given before the subcommand is not reset by the subparser
    common.add_argument("--format", choices=("json", "csv", "table"), default=argparse.SUPPRESS)
    common.add_argument("--regime", choices=("exact", "float"), default=argparse.SUPPRESS)
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = _Parser(prog="matchpoly", description=__doc__.splitlines()[0], parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("formulas", parents=[common], help="closed-form values at the barycenter")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k-range", help="K or A:B (default 2:n)")
    p.set_defaults(func=cmd_formulas)

    p = sub.add_parser("member", parents=[common], help="polytope membership of a matrix file")
    p.add_argument("--matrix", required=True)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_member)

    p = sub.add_parser("minimize", parents=[common], help="Frank-Wolfe estimate of min haf_k")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--trajectory", help="write the best run's trajectory CSV here")
    p.add_argument("--with-trajectory", action="store_true")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("bounds", parents=[common], help="hyperbolic bound vs sampled points")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("capacity", parents=[common], help="capacity of (x^T B x)^k")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--matrix")
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("hessian", parents=[common], help="Hessian of haf_k at the barycenter")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_hessian)

    p = sub.add_parser("count", parents=[common], help="number of k-matchings of a graph")
    p.add_argument("--matrix", required=True)
    p.add_argument("--k", type=int, required=True)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("mu-table", parents=[common], help="k = n estimates for n = 2..max-n")
    p.add_argument("--max-n", type=int, required=True)
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_mu_table)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in GLOBAL_DEFAULTS.items():
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"matchpoly {args.command}: usage error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"matchpoly {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
