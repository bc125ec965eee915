"""Command-line front end.

Every subcommand prints a JSON report to stdout.  Exit codes: 0 pass or
feasible, 1 fail or infeasible, 2 unknown, 3 input error.  With several
input files the worst code wins (3 > 2 > 1 > 0).
"""
import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from importlib import metadata

from . import io as qio
from ._config import DEFAULT_EPS, DEFAULT_MAX_ITERS, DEFAULT_TOL
from .channels import ChannelError
from .correlations import CorrelationError, simulate, star_compose, verify_qns
from .feasibility import SolverConfig
from .hypergraphs import fits
from .homomorphisms import decide_ns, verify_hom

log = logging.getLogger("qhyper")

EXIT = {"pass": 0, "feasible": 0, "fail": 1, "infeasible": 1, "unknown": 2, "witness-required": 2, "error": 3}


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:  # pragma: no cover
        return "0.0.0"


class _Inputs:
    """Loads input files and records their digests."""

    def __init__(self):
        self.digests = {}

    def load(self, path):
        obj, digest = qio.load_json(path)
        self.digests[str(path)] = digest
        return obj


def _settings(args):
    cfg = {"tol": DEFAULT_TOL, "eps": DEFAULT_EPS, "max_iters": DEFAULT_MAX_ITERS, "seed": None}
    if getattr(args, "config", None):
        obj, _ = qio.load_json(args.config)
        if not isinstance(obj, dict):
            raise qio.FormatError(args.config, "config must be a JSON object")
        unknown = set(obj) - {"tol", "eps", "max_iters", "seed", "check_every"}
        if unknown:
            raise qio.FormatError(args.config, f"unknown config keys {sorted(unknown)}")
        cfg.update(obj)
    for key in ("tol", "eps", "max_iters", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


# ---------------------------------------------------------------------------
# single-file commands; each returns (verdict, payload)
# ---------------------------------------------------------------------------


def run_check_channel(path, cfg, inputs):
    obj = inputs.load(path)
    ch = qio.decode_channel(obj, tol=cfg["tol"], check=False)
    try:
        ch.validate(cfg["tol"])
        return "pass", {"tp_residual": ch.tp_residual()}
    except ChannelError as exc:
        return "fail", {"reason": str(exc), "tp_residual": ch.tp_residual()}


def run_check_correlation(path, cfg, inputs):
    obj = inputs.load(path)
    g = qio.decode_correlation(obj, tol=cfg["tol"], check=False)
    rep = verify_qns(g.channel, g.quad, cfg["tol"])
    payload = {"residuals": rep.as_dict()}
    if not rep.is_qns:
        failed = [name for name, r in (("tp", rep.tp_residual), ("b", rep.b_residual), ("c", rep.c_residual)) if r > cfg["tol"]]
        if rep.min_eigenvalue < -cfg["tol"]:
            failed.insert(0, "cp")
        payload["failed_conditions"] = failed
    return ("pass" if rep.is_qns else "fail"), payload


def run_fits(chan_path, hyp_path, cfg, inputs):
    ch = qio.decode_channel(inputs.load(chan_path), "channel", tol=cfg["tol"], check=False)
    K = qio.decode_target(inputs.load(hyp_path), "hypergraph", tol=cfg["tol"])
    ok = fits(ch, K, cfg["tol"])
    return ("pass" if ok else "fail"), {"subspace_rank": K.rank}


def run_hom(inst_path, corr_path, cfg, inputs):
    inst = qio.decode_instance(inputs.load(inst_path), tol=cfg["tol"])
    if corr_path is None:
        if inst.type != "ns":
            return "witness-required", {"reason": "loc/q/qc homomorphisms need a correlation with a type witness"}
        return run_decide_ns_instance(inst, cfg)
    g = qio.decode_correlation(inputs.load(corr_path), "correlation", tol=cfg["tol"], check=False)
    rep = verify_hom(g, inst, cfg["tol"])
    payload = rep.as_dict()
    payload.pop("verdict")
    return rep.verdict, payload


def run_decide_ns_instance(inst, cfg):
    scfg = SolverConfig(eps=cfg["eps"], max_iters=int(cfg["max_iters"]), seed=cfg.get("seed"))
    if "check_every" in cfg:
        scfg.check_every = int(cfg["check_every"])
    d = decide_ns(inst, scfg, tol=cfg["tol"])
    payload = d.as_dict()
    payload.pop("verdict")
    if d.correlation is not None:
        payload["correlation"] = qio.encode_correlation(d.correlation)
    return d.verdict, payload


def run_decide_ns(path, cfg, inputs):
    inst = qio.decode_instance(inputs.load(path), tol=cfg["tol"])
    return run_decide_ns_instance(inst, cfg)


def run_compose(f1, f2, cfg, inputs):
    g1 = qio.decode_correlation(inputs.load(f1), "first", tol=cfg["tol"])
    g2 = qio.decode_correlation(inputs.load(f2), "second", tol=cfg["tol"])
    try:
        g = star_compose(g2, g1, tol=cfg["tol"])
    except ValueError as exc:
        raise qio.FormatError("", str(exc)) from None
    return "pass", {"artifact": qio.encode_correlation(g)}


def run_simulate(corr_path, chan_path, cfg, inputs):
    g = qio.decode_correlation(inputs.load(corr_path), "correlation", tol=cfg["tol"])
    E = qio.decode_channel(inputs.load(chan_path), "channel", tol=cfg["tol"])
    try:
        out = simulate(g, E, tol=max(cfg["tol"], 1e-9))
    except ValueError as exc:
        raise qio.FormatError("", str(exc)) from None
    return "pass", {"artifact": qio.encode_channel(out)}


def run_embed(path, cfg, inputs):
    E = qio.decode_classical(inputs.load(path))
    from .hypergraphs import embed_classical

    return "pass", {"artifact": qio.encode_hypergraph(embed_classical(E))}


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def _guarded(fn, *a):
    """Run a command, mapping input problems to the ``error`` verdict."""
    inputs = _Inputs()
    t0 = time.perf_counter()
    try:
        verdict, payload = fn(*a, inputs)
    except qio.FormatError as exc:
        verdict, payload = "error", {"error": str(exc), "field": exc.path}
    except (ChannelError, CorrelationError, ValueError) as exc:
        verdict, payload = "error", {"error": str(exc)}
    payload["wall_time"] = time.perf_counter() - t0
    payload["inputs"] = inputs.digests
    return verdict, payload


def _batch(fn, paths, cfg, jobs):
    if jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_guarded, [fn] * len(paths), paths, [cfg] * len(paths)))
    return [_guarded(fn, p, cfg) for p in paths]


def build_parser():
    p = argparse.ArgumentParser(prog="qhyper", description="Quantum hypergraph homomorphism toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {_version()}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help=f"relative tolerance (default {DEFAULT_TOL})")
    common.add_argument("--eps", type=float, default=None, help=f"solver residual target (default {DEFAULT_EPS})")
    common.add_argument("--max-iters", dest="max_iters", type=int, default=None, help=f"solver iteration cap (default {DEFAULT_MAX_ITERS})")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers for batches of inputs")
    common.add_argument("--seed", type=int, default=None, help="seed recorded in the solver config")
    common.add_argument("--output", "-o", default=None, help="write the report (or artifact) to this file")
    common.add_argument("--config", default=None, help="JSON file with tol/eps/max_iters/seed")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check-channel", parents=[common], help="validate channel files")
    s.add_argument("files", nargs="+")
    s = sub.add_parser("check-correlation", parents=[common], help="verify no-signalling correlations")
    s.add_argument("files", nargs="+")
    s = sub.add_parser("compose", parents=[common], help="compose two correlations (second * first)")
    s.add_argument("first")
    s.add_argument("second")
    s = sub.add_parser("simulate", parents=[common], help="simulate a channel through a correlation")
    s.add_argument("correlation")
    s.add_argument("channel")
    s = sub.add_parser("fits", parents=[common], help="does a channel fit a 4-leg hypergraph")
    s.add_argument("channel")
    s.add_argument("hypergraph")
    s = sub.add_parser("hom", parents=[common], help="verify a (quasi-)homomorphism")
    s.add_argument("instance")
    s.add_argument("correlation", nargs="?")
    s = sub.add_parser("decide-ns", parents=[common], help="decide ns-(quasi-)homomorphism")
    s.add_argument("files", nargs="+")
    s = sub.add_parser("embed", parents=[common], help="embed a classical hypergraph")
    s.add_argument("file")
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("QHYPER_LOG_LEVEL", "WARNING").upper(), stream=sys.stderr)
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        cfg = _settings(args)
    except qio.FormatError as exc:
        report = {"command": args.command, "verdict": "error", "error": str(exc), "tool_version": _version()}
        print(json.dumps(report, indent=2))
        return EXIT["error"]

    artifact = None
    cmd = args.command
    if cmd in ("check-channel", "check-correlation", "decide-ns"):
        fn = {"check-channel": run_check_channel, "check-correlation": run_check_correlation, "decide-ns": run_decide_ns}[cmd]
        results = _batch(fn, args.files, cfg, max(1, args.jobs))
        items = [dict(file=f, verdict=v, **payload) for f, (v, payload) in zip(args.files, results)]
        verdicts = [v for v, _ in results]
        report = {"command": cmd, "results": items} if len(items) > 1 else {"command": cmd, **items[0]}
    else:
        if cmd == "compose":
            v, payload = _guarded(run_compose, args.first, args.second, cfg)
        elif cmd == "simulate":
            v, payload = _guarded(run_simulate, args.correlation, args.channel, cfg)
        elif cmd == "fits":
            v, payload = _guarded(run_fits, args.channel, args.hypergraph, cfg)
        elif cmd == "hom":
            v, payload = _guarded(run_hom, args.instance, args.correlation, cfg)
        else:
            v, payload = _guarded(run_embed, args.file, cfg)
        artifact = payload.pop("artifact", None)
        verdicts = [v]
        report = {"command": cmd, "verdict": v, **payload}

    report["settings"] = {k: cfg[k] for k in ("tol", "eps", "max_iters", "seed")}
    report["tool_version"] = _version()
    report["total_wall_time"] = time.perf_counter() - t0
    code = max(EXIT[v] for v in verdicts)

    if artifact is not None:
        if args.output:
            qio.dump_json(artifact, args.output)
            report["output"] = args.output
            print(qio.dump_json(report))
        else:
            print(qio.dump_json(artifact))
    else:
        text = qio.dump_json(report)
        if args.output:
            qio.dump_json(report, args.output)
        print(text)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
