"""Batch front end: analyze | solve | sweep | model | verify.

Every run consumes one JSON config (see config.py for the schema) and
writes CSV files with stamped schema versions into the output directory.
Outputs are byte-identical for identical config and seed on one platform.
Exit codes: 0 success (all gated checks pass), 1 compute failure or a
failed check, 2 configuration error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import discretize as dz
from . import field_core as fc
from . import geometry
from . import harness as hz
from . import model_problems as mp
from .config import ConfigError, RunConfig, load_config, parse_seed
from .poly import curl

log = logging.getLogger("maglab")

CSV_SCHEMAS = {
    "sweep": ("beta", "lambda", "h", "n_nodes", "iterations", "residual"),
    "fit": ("exponent", "exponent_stderr", "prefactor", "prefactor_stderr",
            "target_exponent", "target_prefactor", "pass"),
    "model": ("y", "branch", "bc", "R", "h", "lambda", "residual",
              "lambda_extrapolated", "error_bar"),
    "profile": None,   # header depends on dimension
}


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def write_csv(path: str, name: str, header, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(f"# schema=maglab.{name}.v1\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _outdir(args) -> str:
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _gamma_defaults(cfg: RunConfig, block: dict):
    lo, hi = geometry.bounding_box(cfg.domain)
    step = block.get("interior_step", float(np.min(hi - lo)) / 24)
    count = block.get("boundary_count", 256)
    return step, count


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_analyze(cfg: RunConfig, args) -> int:
    task = cfg.task.get("analyze", {})
    B = curl(cfg.A)
    step, count = _gamma_defaults(cfg, task)
    kappa_max = task.get("kappa_max", fc.DEFAULT_KAPPA_MAX)
    gamma = geometry.classify_gamma(B, cfg.domain, step, count, kappa_max=kappa_max)
    print(f"kappa_star={gamma.kappa_star} kappa_0={gamma.kappa_0}")
    print(f"gamma1: {len(gamma.gamma1)} samples; gamma2: {len(gamma.gamma2)};"
          f" gamma0: {len(gamma.gamma0)}")
    for label, entries in (("gamma1", gamma.gamma1),):
        for pt, k in entries[:8]:
            md = fc.taylor_model(B, pt, kappa=k)
            line = (f"  {label} y={tuple(round(v, 6) for v in pt)} kappa={k}"
                    f" dimV={md.V_basis.shape[0]}")
            if md.sigma is not None:
                line += f" sigma={md.sigma:.6g}"
            print(line)
    for label, entries in (("gamma2", gamma.gamma2), ("gamma0", gamma.gamma0)):
        for pt, k, n in entries[:8]:
            md = fc.taylor_model(B, pt, kappa=k)
            line = (f"  {label} y={tuple(round(v, 6) for v in pt)} kappa={k}"
                    f" dimV={md.V_basis.shape[0]}"
                    f" tau={fc.tau(md.V_basis, n):.6g}")
            if md.sigma is not None:
                line += f" sigma={md.sigma:.6g}"
            print(line)
    for key, val in gamma.diagnostics.items():
        print(f"  diag {key}={val:.6g}")

    beta = task.get("beta", 1.0)
    pstep = task.get("profile_step", step)
    lo, hi = geometry.bounding_box(cfg.domain)
    axes = [np.arange(lo[i], hi[i] + pstep / 2, pstep) for i in range(cfg.domain.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    pts = pts[geometry.inside_mask(cfg.domain, pts)]
    Bb = B.scale(beta)
    mvals = fc.m_profile(Bb, pts)
    mtvals = fc.m_tilde_profile(Bb, pts)
    header = tuple(f"x{i}" for i in range(cfg.domain.dim)) + ("m", "m_tilde")
    rows = [tuple(p) + (mv, mtv) for p, mv, mtv in zip(pts, mvals, mtvals)]
    path = os.path.join(_outdir(args), "m_profile.csv")
    write_csv(path, "profile", header, rows)
    print(f"wrote {path} ({len(rows)} points, beta={_fmt(float(beta))})")
    return 0


def cmd_solve(cfg: RunConfig, args) -> int:
    task = cfg.task["solve"]
    grid = dz.build_grid(cfg.domain, task["h"])
    fs = dz.assemble(grid, cfg.A, task["beta"], task["bc"])
    tol = task.get("tol", 1e-8)
    if task["bc"] == "dtn":
        res = dz.dtn_ground_state(fs, tol=tol, seed=cfg.seed)
    else:
        res = dz.ground_state(fs, tol=tol, seed=cfg.seed)
    row = (task["beta"], res.lam, res.h, res.n_nodes, res.iterations, res.residual)
    path = os.path.join(_outdir(args), "solve.csv")
    write_csv(path, "sweep", CSV_SCHEMAS["sweep"], [row])
    print(f"bc={task['bc']} beta={_fmt(float(task['beta']))} lambda={_fmt(res.lam)}"
          f" h={_fmt(res.h)} nodes={res.n_nodes} residual={_fmt(res.residual)}")
    print(f"wrote {path}")
    return 0


def _plan_from_task(cfg: RunConfig, task: dict) -> hz.SweepPlan:
    kappa = task.get("kappa")
    if kappa is None:
        B = curl(cfg.A)
        step, count = _gamma_defaults(cfg, {})
        gamma = geometry.classify_gamma(B, cfg.domain, step, count)
        kappa = gamma.kappa_0 if task["bc"] == "dtn" else gamma.kappa_star
        log.info("classified kappa=%d (bc=%s)", kappa, task["bc"])
    return hz.SweepPlan(
        A=cfg.A, domain=cfg.domain, bc=task["bc"],
        beta_list=tuple(task["beta_list"]), kappa=int(kappa),
        nodes_per_scale=task.get("nodes_per_scale", 12.0),
        min_axis_nodes=task.get("min_axis_nodes", 24),
        max_axis_nodes=task.get("max_axis_nodes", 512),
        tol=task.get("tol", 1e-8), seed=cfg.seed,
        richardson=task.get("richardson", False),
    )


def _write_sweep(records, outdir: str) -> str:
    rows = [(r.beta, r.lam, r.h, r.n_nodes, r.iterations, r.residual) for r in records]
    path = os.path.join(outdir, "sweep.csv")
    write_csv(path, "sweep", CSV_SCHEMAS["sweep"], rows)
    return path


def cmd_sweep(cfg: RunConfig, args) -> int:
    plan = _plan_from_task(cfg, cfg.task["sweep"])
    records = hz.run_sweep(plan, threads=cfg.threads)
    path = _write_sweep(records, _outdir(args))
    fit = hz.fit_power_law(records, target_exponent=hz.target_exponent(plan.bc, plan.kappa),
                           use_richardson=plan.richardson)
    tgt = hz.target_exponent(plan.bc, plan.kappa)
    fit_rows = [(fit.exponent, fit.exponent_stderr, fit.prefactor, fit.prefactor_stderr,
                 tgt, float("nan"), True)]
    fpath = os.path.join(args.out, "fit.csv")
    write_csv(fpath, "fit", CSV_SCHEMAS["fit"], fit_rows)
    print(f"fitted exponent {fit.exponent:.4f} +/- {fit.exponent_stderr:.4f}"
          f" (target {tgt:.4f}); prefactor {fit.prefactor:.4f}")
    print(f"wrote {path} and {fpath}")
    return 0


def cmd_model(cfg: RunConfig, args) -> int:
    task = cfg.task["model"]
    default_R = mp.HALF_SPACE_R_LIST if task["setting"] == "half_space" else (4.0, 6.0, 8.0)
    spec = mp.ModelProblemSpec(
        A_hom=cfg.A, kappa=task["kappa"], setting=task["setting"],
        normal=tuple(task["normal"]) if "normal" in task else None,
        bc=task["bc"], R_list=tuple(task.get("R_list", default_R)),
        nodes_across=task.get("nodes_across", 256),
        tol=task.get("tol", 1e-8), seed=cfg.seed,
    )
    runner = mp.lambda_whole_space if spec.setting == "whole_space" else mp.lambda_half_space
    res = runner(spec)
    origin = (0.0,) * cfg.A.dim
    rows = [(";".join(_fmt(v) for v in origin), spec.setting, spec.bc, R, h, lam, resid,
             res.lam_inf, res.error_bar) for (R, h, lam, resid) in res.rows]
    path = os.path.join(_outdir(args), "model.csv")
    write_csv(path, "model", CSV_SCHEMAS["model"], rows)
    print(f"{spec.setting} {spec.bc}: lambda_inf={_fmt(res.lam_inf)}"
          f" error_bar={_fmt(res.error_bar)} truncation_slope={_fmt(res.truncation_rate())}")
    print(f"wrote {path}")
    return 0


def cmd_verify(cfg: RunConfig, args) -> int:
    task = cfg.task["verify"]
    plan = _plan_from_task(cfg, task["sweep"])
    records = hz.run_sweep(plan, threads=cfg.threads)
    outdir = _outdir(args)
    _write_sweep(records, outdir)
    tgt_p = hz.target_exponent(plan.bc, plan.kappa)
    fit = hz.fit_power_law(records, target_exponent=tgt_p,
                           use_richardson=plan.richardson)

    all_pass = True
    fit_rows = []
    for check in task["checks"]:
        kind = check["type"]
        if kind == "exponent":
            tol = check.get("tolerance", 0.07 if plan.bc == "dtn" else 0.05)
            rep = hz.verify_leading_order(fit, plan.kappa, plan.bc, tol)
            ok = rep.passed
            print(f"[{'PASS' if ok else 'FAIL'}] exponent measured={rep.measured:.4f}"
                  f" target={rep.target:.4f} tol={tol:g}")
            fit_rows.append((fit.exponent, fit.exponent_stderr, fit.prefactor,
                             fit.prefactor_stderr, rep.target, float("nan"), ok))
        elif kind == "ratio_at_max":
            tol = check.get("tolerance", 0.10)
            target = check.get("target", 1.0)
            rec = records[-1]
            lam = rec.lam_rich if (check.get("use_richardson", plan.richardson)
                                   and rec.lam_rich is not None) else rec.lam
            ratio = lam / rec.beta ** tgt_p
            ok = abs(ratio - target) <= tol * abs(target)
            print(f"[{'PASS' if ok else 'FAIL'}] ratio_at_max beta={rec.beta:g}"
                  f" measured={ratio:.4f} target={target:g} tol={tol:g}")
            fit_rows.append((fit.exponent, fit.exponent_stderr, ratio, float("nan"),
                             tgt_p, target, ok))
        elif kind == "prefactor":
            tol = check.get("tolerance", 0.15)
            if check.get("source", "value") == "value":
                target = check["value"]
            else:
                B = curl(cfg.A)
                step, count = _gamma_defaults(cfg, task.get("gamma", {}))
                gb = task.get("gamma", {})
                step = gb.get("interior_step", step)
                count = gb.get("boundary_count", count)
                gamma = geometry.classify_gamma(B, cfg.domain, step, count)
                want = ("DN",) if plan.bc == "dtn" else ("D", "N")
                theta = mp.theta_coefficients(B, gamma, want=want)
                target = {"dirichlet": theta.theta_D, "neumann": theta.theta_N,
                          "mixed": theta.theta_N, "dtn": theta.theta_DN}[plan.bc]
            measured = fit.pinned_prefactor
            ok = abs(measured - target) <= tol * abs(target)
            print(f"[{'PASS' if ok else 'FAIL'}] prefactor measured={measured:.4f}"
                  f" target={target:.4f} tol={tol:g}")
            fit_rows.append((fit.exponent, fit.exponent_stderr, measured,
                             fit.prefactor_stderr, tgt_p, target, ok))
        else:
            raise ConfigError(f"unknown check type {kind!r}")
        all_pass &= ok
        if not ok and args.fail_fast:
            break

    write_csv(os.path.join(outdir, "fit.csv"), "fit", CSV_SCHEMAS["fit"], fit_rows)
    return 0 if all_pass else 1


# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maglab",
                                 description="ground states of the magnetic Laplacian")
    ap.add_argument("command", choices=["analyze", "solve", "sweep", "model", "verify"])
    ap.add_argument("--config", required=True, help="JSON run configuration")
    ap.add_argument("--out", default="out", help="output directory for CSV files")
    ap.add_argument("--threads", type=int, default=None, help="parallel map width")
    ap.add_argument("--seed", default=None, help="solver seed (hex like 0x5eed)")
    ap.add_argument("--fail-fast", action="store_true",
                    help="stop verify at the first failing check")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = parse_seed(args.seed)
        if args.threads is not None:
            cfg.threads = args.threads
        if args.command not in cfg.task:
            raise ConfigError(f"config has no {args.command!r} task block")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    handler = {"analyze": cmd_analyze, "solve": cmd_solve, "sweep": cmd_sweep,
               "model": cmd_model, "verify": cmd_verify}[args.command]
    try:
        return handler(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (dz.SolverError, RuntimeError, ValueError) as exc:
        print(f"compute error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
