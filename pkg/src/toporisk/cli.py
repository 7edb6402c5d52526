"""Command line entry points: run, bench, check-grad, sample-scenarios.

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 gradient-check failure. The TOPO_RISK_LOG environment variable
(error | info | debug) sets the log level; logs go to stderr, results to
stdout and the output directory.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import compliance as comp
from . import io as artifacts
from .config import build_mesh, build_model, build_problem, build_schedule, load_config
from .continuation import run_continuation
from .errors import ConfigError, TopoRiskError
from .fea import StiffnessSystem, assemble
from .scenarios import save_scenarios_to_file, thin_svd

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_GRADCHECK = 4

GRAD_CHECK_MAX_ELEMENTS = 200

logger = logging.getLogger("toporisk")


def _setup_logging() -> None:
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    name = os.environ.get("TOPO_RISK_LOG", "error").lower()
    logging.basicConfig(level=levels.get(name, logging.ERROR),
                        format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    if name not in levels:
        logger.error("unknown TOPO_RISK_LOG value %r; using 'error'", name)


def _output_dir(args, cfg) -> Path:
    out = Path(args.out) if args.out else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = _output_dir(args, cfg)
    model = build_model(cfg, method=args.method, seed=args.seed)
    problem = build_problem(cfg, model)
    schedule = build_schedule(cfg)
    logger.info("run: kind=%s mesh=%s L=%d method=%s", cfg.kind, cfg.cells,
                model.scenarios.n_scenarios, model.method)

    start = time.perf_counter()
    result = run_continuation(problem, schedule)
    wall = time.perf_counter() - start

    last = schedule.steps[-1]
    final = model.analyze(result.x, last.penalty, last.beta)
    report = {
        "schema_version": 1,
        "problem": cfg.kind,
        "method": model.method,
        "n_elements": model.mesh.n_elements,
        "n_scenarios": model.scenarios.n_scenarios,
        "mu_C": final.stats.mean,
        "sigma_C": final.stats.std,
        "C_max": float(np.max(final.stats.C)),
        "C_min": float(np.min(final.stats.C)),
        "volume": final.volume,
        "total_solves": result.total_solves,
    }
    if cfg.scenario_source == "sample":
        report["seed"] = cfg.seed if args.seed is None else args.seed
    if cfg.kind == "max_compliance":
        report["C_t"] = "inf" if math.isinf(cfg.C_t) else cfg.C_t
    artifacts.write_report(out / "report.json", report)
    artifacts.write_history(out / "history.csv", result.history)
    artifacts.write_vtk(out / "density.vtk", model.mesh, final.field.physical)
    if model.mesh.dim == 2:
        artifacts.write_pgm(out / "density.pgm", model.mesh, final.field.physical)
    artifacts.write_report(out / "timing.json", {"wall_seconds": wall})

    print(f"problem: {cfg.kind}   method: {model.method}")
    print(f"mu_C = {final.stats.mean:.6g}   sigma_C = {final.stats.std:.6g}   "
          f"C_max = {report['C_max']:.6g}")
    print(f"volume = {final.volume:.6g}   solves = {result.total_solves}   "
          f"wall = {wall:.2f} s")
    print(f"artifacts written to {out}")
    return EXIT_OK


def _bench_one(statistic, method, system, model):
    """Evaluate one statistic and its design gradient; returns a row dict.

    Solves are counted from a fresh counter; the factorization is shared
    and excluded from the timing, matching a factorize-once workflow.
    """
    F = model.scenarios
    system.reset_counter()
    start = time.perf_counter()
    if method == "svd":
        svd = thin_svd(F)
        stats = comp.compliances_svd(system, F, svd)
        kernel = comp.weighted_gradient_svd
    else:
        stats = comp.compliances_naive(system, F)
        kernel = comp.weighted_gradient_naive
    value = stats.mean if statistic == "mu_C" else stats.std
    w = comp.weight_vector(stats, "mean" if statistic == "mu_C" else "std")
    grad = kernel(stats.cache, w, model.ke, model.mesh)
    seconds = time.perf_counter() - start
    return {"statistic": statistic, "method": method, "value": value,
            "seconds": seconds, "solves": system.n_solves, "grad": grad}


def cmd_bench(args) -> int:
    cfg = load_config(args.config)
    out = _output_dir(args, cfg)
    model = build_model(cfg, seed=args.seed)
    # full ground structure: the filter is row-stochastic, so x = 1 maps to
    # physical density 1 regardless of penalty and beta
    field = model.pipeline.apply(np.ones(model.mesh.n_elements), 1.0, 0.0)
    system = StiffnessSystem(assemble(model.mesh, model.ke, field.physical))
    system.factorize()

    rows = []
    for statistic in ("mu_C", "sigma_C"):
        for method in ("naive", "svd"):
            rows.append(_bench_one(statistic, method, system, model))

    for statistic in ("mu_C", "sigma_C"):
        naive, svd = (r for r in rows if r["statistic"] == statistic)
        rel = abs(svd["value"] - naive["value"]) / max(abs(naive["value"]), 1e-300)
        if rel > 1e-9:
            print(f"error: {statistic} disagrees between methods by {rel:.3e} relative",
                  file=sys.stderr)
            return EXIT_SOLVER

    lines = ["statistic,method,value,seconds,solves"]
    print(f"{'statistic':<10} {'method':<7} {'value':>16} {'seconds':>10} {'solves':>7}")
    for r in rows:
        lines.append(f"{r['statistic']},{r['method']},{r['value']!r},"
                     f"{r['seconds']!r},{r['solves']}")
        print(f"{r['statistic']:<10} {r['method']:<7} {r['value']:>16.8e} "
              f"{r['seconds']:>10.4f} {r['solves']:>7}")
    (out / "bench.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"bench table written to {out / 'bench.csv'}")
    return EXIT_OK


def _grad_check_functions(model, x, penalty, beta, rng):
    """The scalar maps checked against finite differences.

    Returns (names, value_fn, analytic_grads): value_fn(x) gives all
    function values from one analysis; analytic_grads holds the closed
    form gradients at the base point.
    """
    L = model.scenarios.n_scenarios
    w_fixed = rng.standard_normal(L)
    lam = rng.uniform(0.5, 1.5, size=L)
    r_pen = 0.5
    # threshold between the two middle compliances: maximal kink clearance
    norm = float(np.max(model.analyze(np.ones(x.size), 1.0, 0.0).stats.C))
    base = model.analyze(x, penalty, beta)
    C_sorted = np.sort(base.stats.C / norm)
    ct = float(C_sorted[(L - 1) // 2] + C_sorted[L // 2]) / 2.0 if L > 1 \
        else float(C_sorted[0]) * 1.1

    def values(xv) -> dict:
        a = model.analyze(xv, penalty, beta)
        Cn = a.stats.C / norm
        M = np.maximum(Cn - ct, 0.0)
        return {
            "mu_C": a.stats.mean,
            "var_C": a.stats.variance,
            "sigma_C": a.stats.std,
            "mu+2sigma": a.stats.mean + 2.0 * a.stats.std,
            "w.C": float(w_fixed @ a.stats.C),
            "auglag": a.volume + float(lam @ (Cn - ct)) + r_pen * float(M @ M),
        }

    Mb = np.maximum(base.stats.C / norm - ct, 0.0)
    analytic = {
        "mu_C": base.objective_gradient_for("mean"),
        "var_C": base.objective_gradient_for("variance"),
        "sigma_C": base.objective_gradient_for("std"),
        "mu+2sigma": base.objective_gradient_for("mean_plus_m_std", m=2.0),
        "w.C": base.weighted_gradient(w_fixed),
        "auglag": base.volume_gradient()
                  + base.weighted_gradient((lam + 2.0 * r_pen * Mb) / norm),
    }
    return values, analytic


def cmd_check_grad(args) -> int:
    cfg = load_config(args.config)
    if args.fd_step <= 0:
        raise ConfigError(f"--fd-step must be > 0, got {args.fd_step}")
    mesh = build_mesh(cfg)
    if mesh.n_elements > GRAD_CHECK_MAX_ELEMENTS:
        raise ConfigError(
            f"check-grad needs a small mesh (<= {GRAD_CHECK_MAX_ELEMENTS} elements); "
            f"this one has {mesh.n_elements}"
        )
    model = build_model(cfg, mesh=mesh, method=args.method, seed=args.seed)
    rng = np.random.default_rng(cfg.seed if args.seed is None else args.seed)
    x = rng.uniform(0.2, 0.8, size=mesh.n_elements)
    h = args.fd_step

    values, analytic = _grad_check_functions(model, x, args.penalty, args.beta, rng)
    names = list(analytic)
    fd = {name: np.zeros(x.size) for name in names}
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        up, um = values(xp), values(xm)
        for name in names:
            fd[name][i] = (up[name] - um[name]) / (2.0 * h)

    worst = 0.0
    print(f"{'function':<10} {'max rel err':>12}")
    for name in names:
        scale = max(float(np.max(np.abs(analytic[name]))), 1e-300)
        err = float(np.max(np.abs(fd[name] - analytic[name]))) / scale
        worst = max(worst, err)
        print(f"{name:<10} {err:>12.3e}")
    print(f"overall max relative error: {worst:.3e} (tolerance {args.tol:g})")
    if worst > args.tol:
        print("gradient check FAILED", file=sys.stderr)
        return EXIT_GRADCHECK
    print("gradient check passed")
    return EXIT_OK


def cmd_sample_scenarios(args) -> int:
    cfg = load_config(args.config)
    if cfg.scenario_source != "sample":
        raise ConfigError("sample-scenarios needs a config with scenarios.source = \"sample\"")
    out = _output_dir(args, cfg)
    mesh = build_mesh(cfg)
    from .scenarios import sample_cantilever_scenarios

    seed = cfg.seed if args.seed is None else args.seed
    F = sample_cantilever_scenarios(mesh, cfg.L, seed)
    path = out / "scenarios.csv"
    save_scenarios_to_file(F, path)
    n_s = thin_svd(F).n_s
    print(f"wrote {F.n_scenarios} scenarios on {F.n_loaded} loaded DOFs "
          f"(rank {n_s}) to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toporisk",
        description="Topology optimization of compliance statistics under "
                    "finitely many loading scenarios.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to a JSON run configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="override the scenario sampler seed")
        p.add_argument("--method", choices=("naive", "svd"),
                       help="override the compliance evaluation method")
        p.add_argument("--threads", type=int,
                       help="cap the number of threads used by linear algebra")

    p_run = sub.add_parser("run", help="solve the configured optimization problem")
    add_common(p_run)
    p_run.set_defaults(handler=cmd_run)

    p_bench = sub.add_parser("bench", help="time naive vs SVD statistics on the full design")
    add_common(p_bench)
    p_bench.set_defaults(handler=cmd_bench)

    p_check = sub.add_parser("check-grad", help="compare gradients against finite differences")
    add_common(p_check)
    p_check.add_argument("--fd-step", type=float, default=1e-6,
                         help="central difference step (default 1e-6)")
    p_check.add_argument("--penalty", type=float, default=3.0)
    p_check.add_argument("--beta", type=float, default=4.0)
    p_check.add_argument("--tol", type=float, default=1e-4,
                         help="failure threshold on the max relative error")
    p_check.set_defaults(handler=cmd_check_grad)

    p_sample = sub.add_parser("sample-scenarios", help="write sampled scenarios as CSV")
    add_common(p_sample)
    p_sample.set_defaults(handler=cmd_sample_scenarios)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and args.seed < 0:
        print("error: --seed must be nonnegative", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads is not None:
        try:
            from threadpoolctl import threadpool_limits
            limits = threadpool_limits(limits=args.threads)
        except ImportError:
            logger.error("threadpoolctl not installed; --threads ignored")
            limits = contextlib.nullcontext()
    else:
        limits = contextlib.nullcontext()
    try:
        with limits:
            return args.handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TopoRiskError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
