"""Command-line front end.

Subcommands reproduce the standard experiment shapes: ``deblur`` runs a
single configured recovery, ``compare`` sweeps a method/rule/constraint
grid into one CSV, ``mdp`` runs the threshold-ladder stopping study, and
``selftest`` exercises the built-in diagnostics.

Exit codes: 0 success, 1 selftest failure, 2 configuration error,
3 numeric failure.
"""

import argparse
import json
import sys
from dataclasses import replace

import numpy as np

from . import selftest as selftest_mod
from .errors import ConfigurationError, NumericError
from .io_formats import (
    CONFIG_KEYS,
    RunConfig,
    append_classical_dp_row,
    merge_overrides,
    parse_config,
    parse_value,
    write_history_csv,
    write_pgm,
)
from .linops import make_gaussian_blur, operator_norm_estimate
from .problems import ImageGrid, NoiseSpec, add_noise, synth_dense_image, synth_sparse_image
from .solvers import (
    BoundConstraint,
    ExactLineSearch,
    FixedStep,
    fista,
    ista,
    nu_descent,
    tg_descent,
)
from .stopping import Discrepancy, MaxIter, MdpConfig, Never
from .threshold import AlphaPercent, FixedLambda, MaxCombo, MinCombo, NoTruncation, TopK

__all__ = ["main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="truncgrad",
        description="Sparse recovery for ill-posed deblurring via truncated-gradient descent.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("deblur", "run one configured deblurring recovery"),
        ("compare", "sweep a method/rule/constraint grid into a CSV"),
        ("mdp", "threshold-ladder stopping study with snapshot capture"),
        ("selftest", "run built-in diagnostics"),
    ]:
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", default=None, metavar="PATH",
                        help="key = value config file; flags override file values")
        for key in CONFIG_KEYS:
            aliases = [f"--{key.replace('_', '-')}"] if "_" in key else []
            sp.add_argument(f"--{key}", *aliases, dest=key, default=None,
                            metavar="V", help=f"override '{key}'")
        sp.add_argument("--json_summary", "--json-summary", dest="json_summary",
                        action="store_true",
                        help="print one JSON summary object per run")
        if name == "selftest":
            sp.add_argument("--inject_fault", choices=["adjoint"], default=None,
                            help="deliberately corrupt a component (diagnostic hook)")
    return parser


def _load_config(args) -> RunConfig:
    if args.config is not None:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = RunConfig()
    overrides = {}
    for key in CONFIG_KEYS:
        raw = getattr(args, key, None)
        if raw is not None:
            overrides[key] = parse_value(key, raw)
    return merge_overrides(cfg, overrides) if overrides else cfg


def _build_problem(cfg: RunConfig):
    op = make_gaussian_blur(cfg.side, cfg.sigma, cfg.band)
    if cfg.image == "sparse":
        truth = synth_sparse_image(cfg.side, cfg.side, cfg.source_count, cfg.seed)
    else:
        truth = synth_dense_image(cfg.side, cfg.side, cfg.seed)
    b = op.apply(truth.pixels)
    b_noisy, delta = add_noise(b, NoiseSpec(cfg.rho, cfg.seed))
    return op, truth, b_noisy, delta


def _auto_k(cfg: RunConfig) -> int:
    return cfg.k if cfg.k > 0 else max(1, (cfg.side * cfg.side) // 10)


def _build_rule(cfg: RunConfig, kind: str, param: str = ""):
    """Truncation rule from a grid token like ``alpha:40`` or a config kind."""
    if kind == "none":
        return NoTruncation(), ""
    if kind == "fixed":
        lam = float(param) if param else cfg.lam
        return FixedLambda(lam), f"lam={lam:g}"
    if kind == "alpha":
        alpha = float(param) if param else cfg.alpha
        return AlphaPercent(alpha), f"alpha={alpha:g}"
    if kind == "topk":
        k = int(param) if param else _auto_k(cfg)
        return TopK(k), f"k={k}"
    if kind in ("min_combo", "max_combo"):
        parts = param.split(":") if param else []
        k = int(parts[0]) if len(parts) > 0 and parts[0] else _auto_k(cfg)
        alpha = float(parts[1]) if len(parts) > 1 else cfg.alpha
        cls = MinCombo if kind == "min_combo" else MaxCombo
        return cls(k, alpha), f"k={k},alpha={alpha:g}"
    raise ConfigurationError(f"unknown truncation rule '{kind}'")


def _build_stopping(cfg: RunConfig, measured_delta: float):
    delta = cfg.delta if cfg.delta > 0 else measured_delta
    if cfg.stop == "dp":
        return Discrepancy(delta, cfg.eta, cfg.max_iters)
    if cfg.stop == "maxiter":
        return MaxIter(cfg.max_iters)
    return Never(cfg.max_iters)


def _run_solver(cfg: RunConfig, op, b_noisy, truth_pixels, rule, stopping,
                constraint, mdp=None):
    if cfg.method in ("ista", "fista"):
        tau = cfg.tau if cfg.tau > 0 else 0.5 / operator_norm_estimate(op) ** 2
        solver = ista if cfg.method == "ista" else fista
        return solver(op, b_noisy, cfg.lam, tau, constraint=constraint,
                      stopping=stopping, truth=truth_pixels, mdp=mdp)
    if cfg.method == "nu":
        return nu_descent(op, b_noisy, cfg.nu, rule=rule, constraint=constraint,
                          stopping=stopping, truth=truth_pixels, mdp=mdp)
    if cfg.step == "fixed":
        tau = cfg.tau if cfg.tau > 0 else 1.0 / operator_norm_estimate(op) ** 2
        step = FixedStep(tau)
    else:
        step = ExactLineSearch()
    return tg_descent(op, b_noisy, rule=rule, step=step, constraint=constraint,
                      stopping=stopping, truth=truth_pixels, mdp=mdp)


def _summarize(report, label: str) -> dict:
    last = report.history[-1]
    return {
        "run": label,
        "stop_reason": report.stop_reason,
        "iterations": last.m,
        "rel_error": last.rel_error,
        "sparsity": last.sparsity,
        "rel_residual_pct": last.rel_residual_pct,
    }


def _print_summary(summary: dict, as_json: bool) -> None:
    if as_json:
        print(json.dumps(summary))
        return
    rel_err = summary["rel_error"]
    rel_err_txt = "n/a" if rel_err is None else f"{rel_err:.6g}"
    print(f"{summary['run']}: stop={summary['stop_reason']} "
          f"iters={summary['iterations']} rel_error={rel_err_txt} "
          f"sparsity={summary['sparsity']} "
          f"residual_pct={summary['rel_residual_pct']:.6g}")


def cmd_deblur(cfg: RunConfig, args) -> int:
    op, truth, b_noisy, delta = _build_problem(cfg)
    rule, _ = _build_rule(cfg, cfg.rule)
    stopping = _build_stopping(cfg, delta)
    constraint = BoundConstraint(cfg.xmin)
    report = _run_solver(cfg, op, b_noisy, truth.pixels, rule, stopping, constraint)
    write_pgm(ImageGrid(cfg.side, cfg.side, report.final_x), cfg.out_image)
    write_history_csv(report, cfg.out_csv)
    _print_summary(_summarize(report, "deblur"), args.json_summary)
    return 0


def cmd_compare(cfg: RunConfig, args) -> int:
    # cells run sequentially in deterministic grid order (methods, then
    # rules, then constraints) against one shared noisy data vector
    op, truth, b_noisy, delta = _build_problem(cfg)
    methods = [m.strip() for m in cfg.methods.split(",") if m.strip()]
    rule_tokens = [r.strip() for r in cfg.rules.split(",") if r.strip()]
    xmins = [parse_value("xmin", c) for c in cfg.constraints.split(",") if c.strip()]
    stopping = _build_stopping(cfg, delta)

    rows = []
    for method in methods:
        for token in rule_tokens:
            kind, _, param = token.partition(":")
            rule, param_txt = _build_rule(cfg, kind, param)
            for xmin in xmins:
                cell_cfg = replace(cfg, method=method)
                constraint = BoundConstraint(xmin)
                report = _run_solver(cell_cfg, op, b_noisy, truth.pixels, rule,
                                     stopping, constraint)
                # baselines do not take a truncation rule; record their own knob
                if method in ("ista", "fista"):
                    param_cell = f"lam={cfg.lam:g}"
                else:
                    param_cell = param_txt
                last = report.history[-1]
                rows.append((method, kind, param_cell, xmin, last.rel_error,
                             last.sparsity, last.m, report.stop_reason))
                if args.json_summary:
                    summary = _summarize(report, f"{method}/{token}/xmin={xmin:g}")
                    print(json.dumps(summary))

    with open(cfg.out_csv, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("method,rule,param,constraint,rel_error,sparsity,iterations,stop_reason\n")
        for method, kind, param_cell, xmin, rel_error, sparsity, iters, reason in rows:
            fh.write(f"{method},{kind},{param_cell},{xmin:g},{rel_error:.6g},"
                     f"{sparsity},{iters},{reason}\n")
    if not args.json_summary:
        print(f"compare: wrote {len(rows)} rows to {cfg.out_csv}")
    return 0


def cmd_mdp(cfg: RunConfig, args) -> int:
    op, truth, b_noisy, delta = _build_problem(cfg)
    rule, _ = _build_rule(cfg, cfg.rule)
    constraint = BoundConstraint(cfg.xmin)
    delta_est = cfg.mdp_delta_est if cfg.mdp_delta_est > 0 else delta
    mdp = MdpConfig(delta_est, cfg.mdp_count, cfg.mdp_spacing, cfg.mdp_eta)
    stopping = Never(cfg.max_iters)
    report = _run_solver(cfg, op, b_noisy, truth.pixels, rule, stopping,
                         constraint, mdp=mdp)
    write_history_csv(report, cfg.out_csv)

    # classical discrepancy-principle reference row (first eta*delta crossing)
    if cfg.eta <= 1:
        raise ConfigurationError(f"key 'eta': classical DP row needs eta > 1, got {cfg.eta}")
    delta_used = cfg.delta if cfg.delta > 0 else delta
    bnorm = float(np.linalg.norm(b_noisy))
    dp_rec = next((rec for rec in report.history
                   if rec.residual_norm <= cfg.eta * delta_used), None)
    if dp_rec is not None:
        append_classical_dp_row(cfg.out_csv, 100.0 * cfg.eta * delta_used / bnorm, dp_rec)

    for snap in report.snapshots:
        write_pgm(ImageGrid(cfg.side, cfg.side, snap.x),
                  f"{cfg.out_prefix}_gamma{snap.gamma:g}.pgm")

    summary = _summarize(report, "mdp")
    summary["snapshots"] = [
        {"gamma": s.gamma, "m": s.m, "rel_residual_pct": s.rel_residual_pct,
         "rel_error_pct": s.rel_error_pct, "sparsity": s.sparsity}
        for s in report.snapshots
    ]
    summary["classical_dp_m"] = None if dp_rec is None else dp_rec.m
    if args.json_summary:
        print(json.dumps(summary))
    else:
        _print_summary({k: summary[k] for k in
                        ("run", "stop_reason", "iterations", "rel_error",
                         "sparsity", "rel_residual_pct")}, False)
        for s in report.snapshots:
            err = "n/a" if s.rel_error_pct is None else f"{s.rel_error_pct:.4f}"
            print(f"  gamma={s.gamma:g}% m={s.m} residual_pct={s.rel_residual_pct:.4f} "
                  f"rel_error_pct={err} sparsity={s.sparsity}")
        if dp_rec is not None:
            print(f"  classical DP: m={dp_rec.m} residual_pct={dp_rec.rel_residual_pct:.4f}")
    return 0


def cmd_selftest(cfg: RunConfig, args) -> int:
    results = selftest_mod.run_all(fault=getattr(args, "inject_fault", None))
    all_ok = True
    for name, passed, detail in results:
        print(f"{'ok  ' if passed else 'FAIL'} {name}: {detail}")
        all_ok = all_ok and passed
    print("selftest passed" if all_ok else "selftest FAILED")
    return 0 if all_ok else 1


_COMMANDS = {
    "deblur": cmd_deblur,
    "compare": cmd_compare,
    "mdp": cmd_mdp,
    "selftest": cmd_selftest,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigurationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
