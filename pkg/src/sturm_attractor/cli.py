"""Command-line front end.

Exit codes: 0 success, 1 other error, 2 non-hyperbolic equilibrium,
3 inconsistent connection graph, 4 unresolved probes.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, apply_overrides, load_raw, parse_config
from .errors import InconsistencyError, NonHyperbolicError, SturmError
from .pdesim import discrete_equilibrium
from .pipeline import (
    nearest_equilibrium,
    run_attractor,
    run_equilibria,
    run_invariants,
    run_simulation,
    run_verification,
)
from .serialize import write_dot, write_equilibria, write_json, write_trajectory

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NONHYPERBOLIC = 2
EXIT_INCONSISTENT = 3
EXIT_UNRESOLVED = 4


def _out_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _write_sturm(cfg, res, out):
    if cfg.wants("json"):
        write_json(out / "sturm.json", res.data.to_dict())


def cmd_equilibria(cfg: RunConfig) -> int:
    res = run_invariants(cfg)
    out = _out_dir(cfg)
    write_equilibria(out, res.eqs, res.curve, cfg.formats)
    print(res.summary())
    return EXIT_OK


def cmd_permutation(cfg: RunConfig) -> int:
    res = run_invariants(cfg)
    out = _out_dir(cfg)
    _write_sturm(cfg, res, out)
    if cfg.wants("csv"):
        write_equilibria(out, res.eqs, res.curve, ("csv",))
    print(res.summary())
    return EXIT_OK


def cmd_attractor(cfg: RunConfig) -> int:
    res = run_invariants(cfg)
    out = _out_dir(cfg)
    _write_sturm(cfg, res, out)
    from .connectome import build_connection_graph

    try:
        res.graph = build_connection_graph(res.data, res.eqs)
    except InconsistencyError as ex:
        write_json(
            out / "inconsistency.json",
            {
                "message": str(ex),
                "only_direct": sorted(map(list, ex.only_direct)),
                "only_cascade": sorted(map(list, ex.only_cascade)),
                "context": ex.context,
            },
        )
        raise
    if cfg.wants("dot"):
        write_dot(out / "attractor.dot", res.graph.to_dot())
    if cfg.wants("json"):
        write_json(out / "graph.json", res.graph.to_dict())
    print(res.summary())
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    spec = cfg.spec()
    traj = run_simulation(cfg, spec)
    out = _out_dir(cfg)
    if cfg.wants("csv"):
        write_trajectory(out / "trajectory.csv", traj)
    m = traj.x.size
    print(f"simulated {spec.name} on m={m} points to t={traj.times[-1]:g} ({traj.steps} steps)")
    try:
        res = run_equilibria(cfg)
        disc = {e.id: discrete_equilibrium(spec, e, m) for e in res.eqs}
        j, d = nearest_equilibrium(traj.final, disc)
        print(f"final state: nearest e{j} at sup distance {d:.3e}")
    except SturmError as ex:
        print(f"final state: equilibria unavailable ({ex})")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.sim is None or not cfg.spec().simulable:
        print("error: verification requires a simulable spec", file=sys.stderr)
        return EXIT_ERROR
    res = run_attractor(cfg)
    out = _out_dir(cfg)
    rep = run_verification(cfg, res)
    if cfg.wants("json"):
        write_json(out / "verify.json", rep.to_dict())
    dl = rep.dropping
    if dl:
        print(f"dropping lemma: {dl['pairs']} pairs, {len(dl['violations'])} violations")
    for p in rep.probes:
        verdict = "ok" if p["pass"] else "FAIL"
        print(f"probe e{p['source']} mode {p['mode']} sign {p['sign']:+d} -> e{p['target']} at t={p['transit_time']:g} [{verdict}]")
    for u in rep.unresolved:
        print(f"probe e{u['source']} mode {u['mode']} sign {u['sign']:+d} unresolved: {u['message']}")
    if rep.unresolved:
        return EXIT_UNRESOLVED
    return EXIT_OK if rep.ok else EXIT_ERROR


COMMANDS = {
    "equilibria": (cmd_equilibria, "find equilibria; write equilibria.csv/json and curve.csv"),
    "permutation": (cmd_permutation, "Morse indices, permutation and zero numbers; write sturm.json"),
    "attractor": (cmd_attractor, "full pipeline; write sturm.json, attractor.dot and graph.json"),
    "simulate": (cmd_simulate, "evolve the sim.initial cosine data; write trajectory.csv"),
    "verify": (cmd_verify, "dropping-lemma trials and heteroclinic probes; write verify.json"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sturm-attractor", description="Sturm attractors of scalar 1-D parabolic equations.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="YAML or JSON run configuration")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument(
            "--param",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a problem parameter (lambda=2) or any dotted key (sim.m=129)",
        )
    return ap


def load(args) -> RunConfig:
    raw = load_raw(args.config) if args.config else {"problem": {"family": "chafee_infante"}}
    raw = apply_overrides(raw, args.param)
    if args.out:
        out = raw.setdefault("output", {})
        if not isinstance(out, dict):
            raise ConfigError("output: expected a mapping")
        out["directory"] = args.out
    return parse_config(raw, args.config or "<command line>")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load(args)
        return COMMANDS[args.command][0](cfg)
    except NonHyperbolicError as ex:
        print(f"error: non-hyperbolic equilibrium: {ex}", file=sys.stderr)
        return EXIT_NONHYPERBOLIC
    except InconsistencyError as ex:
        print(f"error: {ex}", file=sys.stderr)
        for key, val in ex.context.items():
            print(f"  {key}: {val}", file=sys.stderr)
        return EXIT_INCONSISTENT
    except (ConfigError, SturmError, ValueError, OSError) as ex:
        print(f"error: {ex}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
