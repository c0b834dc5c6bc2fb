"""Command-line entry point: ``fbmlab <command> --config run.yaml``.

Exit codes: 0 success or pass, 1 verdict failure, 2 configuration error,
3 numerical blowup or non-contraction.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .errors import ConfigError, FbmError, NonContractionError, NumericalBlowupError
from .lp_analysis import DyadicPartition, NormParams, critical_s, fbm_report
from .solver import FixedPointConfig, TimeStepConfig, _jsonable, etd_integrate, picard_nodes, picard_solve
from .spectral_core import read_snapshot

log = logging.getLogger("fbmlab")


def run_directory(out: str | None, command: str, cfg=None, tag: str = "") -> Path:
    base = Path(out if out is not None else (cfg.data["output"]["directory"] if cfg else "runs"))
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    name = f"{stamp}-{command}" + (f"-{tag}" if tag else "")
    path = base / name
    k = 1
    while path.exists():
        path = base / f"{name}-{k}"
        k += 1
    try:
        path.mkdir(parents=True)
    except OSError as err:
        raise ConfigError(f"output directory {base} is not writable: {err}") from None
    return path


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True))


def _emit(args, text: str) -> None:
    if not args.quiet:
        print(text)


# ---------------------------------------------------------------------------
# commands; each returns (exit_code, run_directory)


def cmd_simulate(cfg, args):
    rd = run_directory(args.out, "simulate", cfg, Path(cfg.source or "cfg").stem)
    theta0 = cfg.initial_data()
    t = cfg.data["time"]
    ts = TimeStepConfig(t["T"], t["dt"], t["scheme"], t["dealias"], t["record_every"])
    every = t["snapshot_every"]
    outputs = [k * every for k in range(1, int(math.floor(t["T"] / every + 1e-9)) + 1)] if every else []
    params = {"config": cfg.to_dict(), "code_version": __version__}
    try:
        rec = etd_integrate(theta0, cfg.symbol, cfg.gamma, ts, output_times=[0.0] + outputs, norm=cfg.norm,
                            snapshot_dir=rd / "snapshots", params=params)
    except NumericalBlowupError as err:
        _write_json(rd / "run.json", {"params": params, "error": str(err), "blowup_time": err.time,
                                      "last_finite": "snapshots/last_finite.fbm"})
        raise
    if cfg.data["picard"]["enabled"]:
        eps, K = cfg.epsilon_and_K()
        pc = cfg.data["picard"]
        fp = FixedPointConfig(eps, K, pc["max_iter"], pc["rel_tol"] * eps, pc["nodes"], pc["interp"],
                              t["dealias"], pc["theorem_mode"])
        nodes = picard_nodes(t["T"], pc["nodes"], pc["node_kind"])
        path, diag = picard_solve(theta0, cfg.symbol, cfg.gamma, fp, nodes, cfg.norm)
        ref = etd_integrate(theta0, cfg.symbol, cfg.gamma, ts, output_times=nodes)
        diag["etd_difference"] = max(cfg.norm(a - ref.states[float(x)]) for a, x in zip(path, nodes))
        diag["within_2eps"] = diag["sup_norm"] <= 2 * eps
        rec.diagnostics["picard"] = diag
    rec.save(rd, cfg.gamma, cfg.beta)
    final = rec.fn_norm[-1] if rec.fn_norm else float("nan")
    _emit(args, f"simulate: T={t['T']} steps={rec.diagnostics['steps']} final FN norm={final:.6g} -> {rd}")
    return 0, rd


def cmd_norms(cfg, args):
    f, header = read_snapshot(args.snapshot)
    part = DyadicPartition(f.grid)
    gamma = args.gamma if args.gamma is not None else header["gamma"]
    beta = args.beta if args.beta is not None else header["beta"]
    if cfg is not None:
        np_ = cfg.norm_params
        stride = cfg.data["norm"]["stride"]
    else:
        if args.s is None:
            if not (math.isfinite(gamma) and math.isfinite(beta)):
                raise ConfigError("norm.s=auto needs gamma and beta (snapshot header or --gamma/--beta)")
            s = critical_s(f.grid.n, gamma, beta, args.p, args.mu)
        else:
            s = args.s
        np_ = NormParams(args.p, args.mu, args.q, s)
        stride = args.stride
    rows, summary = fbm_report(f, part, np_, stride)
    rd = run_directory(args.out, "norms", cfg, Path(args.snapshot).stem)
    with open(rd / "norms.csv", "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["k", "block_norm", "weight", "weighted"])
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(float(v)) if k != "k" else v for k, v in r.items()})
    summary.update(snapshot=str(args.snapshot), time_tag=f.time_tag, header=header)
    _write_json(rd / "norms.json", summary)
    _emit(args, f"norms: FN norm={summary['norm']:.6g} (p={np_.p}, mu={np_.mu}, q={np_.q}, s={np_.s:.6g}) -> {rd}")
    return 0, rd


def cmd_selfsim(cfg, args):
    from .experiments import selfsimilarity_experiment

    ss = cfg.data["selfsim"]
    theta0 = cfg.initial_data()
    t = cfg.data["time"]
    rep = selfsimilarity_experiment(cfg.symbol, theta0, cfg.gamma, ss["pairs"], tuple(ss["band"]), dt=t["dt"],
                                    scheme=t["scheme"], dealias=t["dealias"],
                                    require_homogeneous=not ss["allow_nonhomogeneous"])
    rep.params["config"] = cfg.to_dict()
    rd = run_directory(args.out, "selfsim", cfg, Path(cfg.source or "cfg").stem)
    rep.save(rd)
    m = rep.metrics
    _emit(args, f"selfsim: max deviation={m['max_deviation']:.4g} linear baseline={m['linear_baseline']:.3g} "
                f"{'PASS' if rep.passed else 'FAIL'} -> {rd}")
    return (0 if rep.passed else 1), rd


def cmd_stability(cfg, args):
    from .config import RunConfig
    from .experiments import proxy_decay_time, stability_experiment

    theta0 = cfg.initial_data()
    if args.other:
        other = RunConfig.load(args.other, args.seed)
        if other.grid != cfg.grid:
            raise ConfigError(f"--other config grid {other.grid} differs from {cfg.grid}")
        phi0 = other.initial_data()
    else:
        phi0 = cfg.perturbed_data()
    st, t = cfg.data["stability"], cfg.data["time"]
    T = st["T"]
    if T == "auto":
        T = proxy_decay_time(theta0 - phi0, cfg.gamma, cfg.norm, st["fraction"])
        if T == 0:
            T = t["T"]
    eps = cfg.epsilon_and_K()[0] if cfg.data["picard"]["theorem_mode"] else None
    rep = stability_experiment(theta0, phi0, cfg.symbol, cfg.gamma, cfg.norm, float(T), st["nodes"], t["dt"],
                               t["scheme"], st["fraction"], st["ratio_bound"], t["dealias"], epsilon=eps)
    rep.params["config"] = cfg.to_dict()
    rd = run_directory(args.out, "stability", cfg, Path(cfg.source or "cfg").stem)
    rep.save(rd)
    m = rep.metrics
    _emit(args, f"stability: T={T:.4g} D(T)/D(0)={m['DT'] / m['D0'] if m['D0'] else 0:.4g} "
                f"{'PASS' if rep.passed else 'FAIL'} -> {rd}")
    return (0 if rep.passed else 1), rd


def cmd_estimate_k(cfg, args):
    trials = args.trials if args.trials is not None else cfg.data["estimate_k"]["trials"]
    res = cfg.estimate_K(trials)
    res = dict(res, symbol=cfg.symbol.name, gamma=cfg.gamma, beta=cfg.beta,
               norm={"p": cfg.norm_params.p, "mu": cfg.norm_params.mu, "q": cfg.norm_params.q,
                     "s": cfg.norm_params.s}, config=cfg.to_dict())
    rd = run_directory(args.out, "estimate-k", cfg, Path(cfg.source or "cfg").stem)
    _write_json(rd / "k.json", res)
    _emit(args, f"estimate-k: K_est={res['K_est']!r} epsilon={res['epsilon']!r} ({trials} trials, seed {res['seed']}) -> {rd}")
    return 0, rd


def cmd_check(cfg, args):
    from .checks import run_suite

    res = run_suite(args.n, args.N, args.seed or 0, quick=not args.full)
    rd = run_directory(args.out, "check", cfg)
    _write_json(rd / "report.json", res)
    ok = all(r["passed"] for r in res.values())
    for name, r in res.items():
        _emit(args, f"{'PASS' if r['passed'] else 'FAIL'} {name} ({r['seconds']:.2f}s)")
    return (0 if ok else 1), rd


COMMANDS = {
    "simulate": cmd_simulate, "norms": cmd_norms, "selfsim": cmd_selfsim,
    "stability": cmd_stability, "estimate-k": cmd_estimate_k, "check": cmd_check,
}
NEEDS_CONFIG = {"simulate", "selfsim", "stability", "estimate-k"}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", action="append", metavar="PATH",
                        help="run configuration (YAML or JSON); repeat for a sweep")
    common.add_argument("--out", metavar="DIR", help="parent directory for run directories")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--jobs", type=int, default=1, help="run several configs concurrently")
    common.add_argument("--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="fbmlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fbmlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "selfsim"):
        sub.add_parser(name, parents=[common])
    st = sub.add_parser("stability", parents=[common])
    st.add_argument("--other", metavar="PATH", help="config whose initial data is the second solution")
    ek = sub.add_parser("estimate-k", parents=[common])
    ek.add_argument("--trials", type=int)
    nm = sub.add_parser("norms", parents=[common])
    nm.add_argument("snapshot")
    nm.add_argument("--p", type=float, default=2.0)
    nm.add_argument("--mu", type=float, default=0.0)
    nm.add_argument("--q", type=float, default=math.inf)
    nm.add_argument("--s", type=float, default=None, help="default: scaling-critical value")
    nm.add_argument("--gamma", type=float)
    nm.add_argument("--beta", type=float)
    nm.add_argument("--stride", type=int, default=4)
    ck = sub.add_parser("check", parents=[common])
    ck.add_argument("--n", type=int, default=1)
    ck.add_argument("--N", type=int, default=64)
    ck.add_argument("--full", action="store_true", help="full trial counts instead of the quick sweep")
    return parser


def run_one(command: str, config_path, argv_ns: dict) -> tuple[int, str]:
    """Execute one job; returns (exit code, run directory or error message)."""
    from .config import RunConfig

    args = argparse.Namespace(**argv_ns)
    try:
        cfg = RunConfig.load(config_path, args.seed) if config_path else None
        if command in NEEDS_CONFIG and cfg is None:
            raise ConfigError(f"{command} needs --config PATH")
        code, rd = COMMANDS[command](cfg, args)
        return code, str(rd)
    except (NumericalBlowupError, NonContractionError) as err:
        log.error("%s", err)
        return err.exit_code, str(err)
    except ConfigError as err:
        log.error("config error: %s", err)
        return 2, str(err)
    except FbmError as err:
        log.error("%s", err)
        return err.exit_code, str(err)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.INFO, format="%(levelname)s: %(message)s",
                        stream=sys.stderr)
    configs = args.config or [None]
    ns = vars(args).copy()
    if len(configs) == 1:
        return run_one(args.command, configs[0], ns)[0]
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    workers = min(args.jobs, len(configs))
    if workers == 1:
        results = [run_one(args.command, c, ns) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, [args.command] * len(configs), configs, [ns] * len(configs)))
    for c, (code, msg) in zip(configs, results):
        _emit(args, f"[{code}] {c}: {msg}")
    return max(code for code, _ in results)


if __name__ == "__main__":
    sys.exit(main())
