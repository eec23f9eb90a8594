"""Command-line front end.

Subcommands: stat, decompose, sigma-kernel, bounds, stein-check, simulate,
novak, verify.  Scalar reports are JSON (infinities as "+inf"/"-inf"),
tabular output is CSV.  Every run writes a manifest (argv, config hash, seed,
version, timestamp, output paths); re-running the recorded argv reproduces
the outputs byte for byte.

Exit codes: 0 success, 1 domain error (the message names the violated
precondition), 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .bounds import BoundParams, MomentSummary, nonuniform_bound_Tn, nonuniform_bound_tstat
from .decomposition import decompose_statistic
from .distributions import law_from_json, novak_distribution, sample
from .engine import studentize
from .kernels import builtin_kernel, center, decompose, kernel_from_json
from .mc import MCConfig, estimate_cdf, novak_experiment, usual_form_term, verify_inequality
from .sigma_kernel import build_sigma_hat_kernel
from .stein import property_report


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isinf(x):
            return "+inf" if x > 0 else "-inf"
        if math.isnan(x):
            return "nan"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _dump_json(obj, out_path: str | None) -> str:
    text = json.dumps(_json_ready(obj), indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def _write_csv(rows, header, out_path: str | None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    text = buf.getvalue()
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_obj(arg: str) -> dict:
    """Inline JSON, or @path / an existing path to a JSON file."""
    if arg.startswith("@"):
        arg = arg[1:]
    if os.path.exists(arg):
        with open(arg) as fh:
            return json.load(fh)
    return json.loads(arg)


def _load_vector(path: str) -> np.ndarray:
    return np.atleast_1d(np.loadtxt(path, delimiter=",", dtype=float)).ravel()


def _write_manifest(args, outputs: list, config_path: str | None):
    config_hash = None
    if config_path and os.path.exists(config_path):
        with open(config_path, "rb") as fh:
            config_hash = hashlib.sha256(fh.read()).hexdigest()
    manifest = {
        "argv": sys.argv[1:],
        "command": args.command,
        "config_hash": config_hash,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "outputs": outputs,
    }
    path = args.manifest
    if path is None:
        base = outputs[0] if outputs else f"ustat-bee-{args.command}"
        path = base + ".manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _kernel_from_args(args):
    if args.kernel.lstrip().startswith("{"):
        return kernel_from_json(json.loads(args.kernel))
    return builtin_kernel(args.kernel, getattr(args, "m", None))


# --- subcommand implementations ---


def _cmd_stat(args) -> list:
    kernel = _kernel_from_args(args)
    data = _load_vector(args.data)
    res = studentize(kernel, data)
    _dump_json(
        {"U_n": res.U_n, "sigma_hat_sq": res.sigma_hat_sq, "T_n": res.T_n,
         "T_n_star": res.T_n_star, "n": res.n, "m": res.m, "exact": res.exact},
        args.out,
    )
    return [args.out] if args.out else []


def _cmd_decompose(args) -> list:
    kernel = _kernel_from_args(args)
    dist = law_from_json(_load_obj(args.dist))
    data = _load_vector(args.data)
    terms = decompose_statistic(kernel, dist, data)
    _dump_json(
        {"xi": terms.xi, "W": terms.W, "V_n_sq": terms.V_n_sq, "Psi": terms.Psi,
         "Lambda_sq": terms.Lambda_sq, "delta1_star": terms.delta1_star,
         "delta1": terms.delta1, "delta2": terms.delta2, "D1": terms.D1,
         "D2": terms.D2, "d_n": terms.d_n, "n": terms.n, "m": terms.m,
         "sigma": terms.sigma, "U_n": terms.U_n, "T_n": terms.T_n},
        args.out,
    )
    return [args.out] if args.out else []


def _cmd_sigma_kernel(args) -> list:
    dist = law_from_json(_load_obj(args.dist))
    kernel = center(builtin_kernel(args.kernel, args.m if args.kernel == "sum_m" else None), dist)
    shk = build_sigma_hat_kernel(kernel, args.n)
    worst = 0.0
    if args.check:
        batch = sample(dist, args.n, args.reps, args.seed)
        for row in batch.values:
            lhs = shk.A * shk.u_statistic(row)
            rhs = studentize(kernel, row).sigma_hat_sq
            worst = max(worst, abs(lhs - rhs))
    _dump_json(
        {"m": args.m, "n": args.n, "A": shk.A, "checked_replicates": args.reps if args.check else 0,
         "max_representation_deviation": worst},
        args.out,
    )
    return [args.out] if args.out else []


def _cmd_bounds(args) -> list:
    params = BoundParams(**_load_obj(args.params)) if args.params else BoundParams()
    grid = _load_vector(args.grid) if args.grid else np.linspace(0, 6, 25)
    if args.theorem == "main":
        dist = law_from_json(_load_obj(args.dist))
        kernel = center(_kernel_from_args(args), dist)
        mom = MomentSummary.from_decomposition(decompose(kernel, dist))
        rows = [
            (float(x),
             nonuniform_bound_Tn(float(x), args.n, kernel.m, mom, params, form="full"),
             nonuniform_bound_Tn(float(x), args.n, kernel.m, mom, params, form="simple"))
            for x in grid
        ]
        _write_csv(rows, ("x", "bound_full", "bound_simple"), args.out)
    elif args.theorem == "tstat":
        dist = law_from_json(_load_obj(args.dist))
        mom = MomentSummary.from_distribution(dist)
        rows = [(float(x), nonuniform_bound_tstat(float(x), args.n, mom, params)) for x in grid]
        _write_csv(rows, ("x", "bound"), args.out)
    else:
        raise ValueError(f"unknown theorem {args.theorem!r}")
    return [args.out] if args.out else []


def _cmd_stein_check(args) -> list:
    report = property_report()
    _dump_json(report, args.out)
    bad = [k for k, v in report.items()
           if k != "residual_max" and v < -1e-10]
    if report["residual_max"] > 1e-10 or bad:
        raise ValueError(f"stein property margins violated: {bad or 'residual'}")
    return [args.out] if args.out else []


def _cmd_simulate(args) -> list:
    spec = _load_obj(args.config)
    kernel = None
    if spec.get("kernel") is not None:
        kernel = kernel_from_json(spec["kernel"])
        if spec.get("center_kernel"):
            kernel = center(kernel, law_from_json(spec["distribution"]))
    cfg = MCConfig(
        statistic=spec["statistic"],
        dist=law_from_json(spec["distribution"]),
        n=int(spec["n"]),
        replicates=int(spec["replicates"]),
        x_grid=np.asarray(spec["x_grid"], dtype=float),
        seed=int(spec.get("seed", args.seed or 0)),
        kernel=kernel,
        workers=int(spec.get("workers", args.workers)),
    )
    res = estimate_cdf(cfg)
    rows = [
        (float(x), float(p), float(s), float(phi), float(d), res.n_inf_pos, res.n_inf_neg)
        for x, p, s, phi, d in zip(res.x_grid, res.p_hat, res.se, res.phi, res.delta)
    ]
    _write_csv(rows, ("x", "p_hat", "se", "phi", "delta", "n_inf_pos", "n_inf_neg"), args.out)
    return [args.out] if args.out else []


def _cmd_novak(args) -> list:
    report = novak_experiment(args.n, args.eps, args.reps, args.seed)
    payload = {
        "n": report.n, "epsilon": report.epsilon, "x_n": report.x_n,
        "p_exceed": report.p_exceed, "se": report.se,
        "phi_bar_x_n": report.phi_bar_x_n, "gap_estimate": report.gap_estimate,
        "closed_form_event_prob": report.closed_form_event_prob,
        "usual_form_term_C1": usual_form_term(args.n, args.eps),
        "replicates": report.replicates, "seed": report.seed,
    }
    if args.series:
        series = []
        for n in (int(s) for s in args.series.split(",")):
            rep = novak_experiment(n, args.eps, args.reps, args.seed)
            series.append({
                "n": n, "gap_estimate": rep.gap_estimate, "se": rep.se,
                "closed_form_event_prob": rep.closed_form_event_prob,
                "usual_form_term_C1": usual_form_term(n, args.eps),
            })
        payload["series"] = series
    _dump_json(payload, args.out)
    return [args.out] if args.out else []


def _cmd_verify(args) -> list:
    cfg = _load_obj(args.cfg)
    if "dist" in cfg:
        cfg["dist"] = law_from_json(cfg["dist"])
    if "kernel" in cfg:
        cfg["kernel"] = kernel_from_json(cfg["kernel"])
    params = BoundParams(**_load_obj(args.params)) if args.params else None
    report = verify_inequality(args.kind, cfg, params)
    _dump_json(
        {"kind": report.kind, "rows": list(report.rows),
         "n_violations": report.n_violations, "metadata": report.metadata,
         "fitted": report.fitted},
        args.out,
    )
    return [args.out] if args.out else []


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ustat-bee",
        description="Studentized U-statistics, their decomposition, bound evaluators, "
                    "and a seeded Monte Carlo verification harness.",
    )
    parser.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        p.add_argument("--out", help="output path (default: stdout)")
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--workers", type=int,
            default=int(os.environ.get("USTAT_BEE_WORKERS", "1")),
        )

    p = sub.add_parser("stat", help="U_n, jackknife variance and Studentized statistics")
    p.add_argument("--kernel", required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--data", required=True)
    common(p)
    p.set_defaults(func=_cmd_stat)

    p = sub.add_parser("decompose", help="all self-normalized decomposition terms")
    p.add_argument("--kernel", required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--dist", required=True)
    p.add_argument("--data", required=True)
    common(p)
    p.set_defaults(func=_cmd_decompose)

    p = sub.add_parser("sigma-kernel", help="jackknife variance as a degree-2m U-statistic")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--kernel", default="sum_m")
    p.add_argument("--dist", default='{"novak": {"p": 0.3}}')
    p.add_argument("--check", action="store_true")
    p.add_argument("--reps", type=int, default=20)
    common(p)
    p.set_defaults(func=_cmd_sigma_kernel)

    p = sub.add_parser("bounds", help="evaluate the nonuniform bound on a grid")
    p.add_argument("--theorem", choices=("main", "tstat"), default="main")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--kernel", default="sum_m")
    p.add_argument("--dist", default='{"novak": {"p": 0.5}}')
    p.add_argument("--params", help="JSON {C, c1, c2}")
    p.add_argument("--grid", help="CSV of x values")
    common(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("stein-check", help="run the Stein-solution property grid")
    common(p, seed=False)
    p.set_defaults(func=_cmd_stein_check)

    p = sub.add_parser("simulate", help="Monte Carlo CDF estimation from a JSON config")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("novak", help="the binary-data counterexample gap experiment")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--series", help="comma-separated n values for the gap series")
    common(p)
    p.set_defaults(func=_cmd_novak)

    p = sub.add_parser("verify", help="empirically check one inequality evaluator")
    p.add_argument("--kind", required=True,
                   choices=("lower_tail", "bennett", "subgaussian_sn",
                            "nonuniform_Tn", "tstat_bound"))
    p.add_argument("--cfg", required=True, help="JSON config for the chosen kind")
    p.add_argument("--params", help="JSON {C, c1, c2}")
    common(p)
    p.set_defaults(func=_cmd_verify)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        outputs = args.func(args)
        _write_manifest(args, outputs, getattr(args, "config", None))
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run())
