"""Orchestration: problem -> shooting -> invariants -> connectome -> simulation checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import RunConfig, SimConfig
from .connectome import ConnectionGraph, build_connection_graph
from .errors import InvalidParameterError, UnresolvedProbeError
from .invariants import SturmData, build_sturm_data
from .pdesim import (
    SimOptions,
    discrete_equilibrium,
    dropping_lemma_trials,
    evolve,
    heteroclinic_probe,
    sim_grid,
)
from .problem import ProblemSpec
from .shooting import ShootingCurve, equilibria


@dataclass
class PipelineResult:
    spec: ProblemSpec
    curve: ShootingCurve
    eqs: list
    data: Optional[SturmData] = None
    graph: Optional[ConnectionGraph] = None

    def summary(self) -> str:
        lines = [f"problem: {self.spec.name}", f"equilibria: {len(self.eqs)}"]
        for e in self.eqs:
            idx = "" if e.morse is None else f"  i={e.morse}"
            lines.append(f"  e{e.id}: a={e.a:.12g}  b={e.b:.12g}{idx}")
        if self.data is not None:
            from .invariants import cycle_notation

            lines.append(f"morse: {list(self.data.morse)}")
            lines.append(f"permutation: {' '.join(map(str, self.data.sigma))}  cycles {cycle_notation(self.data.sigma)}")
        if self.graph is not None:
            n_h = len(self.graph.hasse_edges)
            lines.append(f"edges: {len(self.graph.edges)} ({n_h} hasse, {len(self.graph.edges) - n_h} transitive)")
        return "\n".join(lines)


def run_equilibria(cfg: RunConfig) -> PipelineResult:
    spec = cfg.spec()
    curve, eqs = equilibria(spec, cfg.n_init, cfg.shoot)
    return PipelineResult(spec, curve, eqs)


def run_invariants(cfg: RunConfig) -> PipelineResult:
    res = run_equilibria(cfg)
    m = cfg.sim.m if cfg.sim is not None else 257
    res.data = build_sturm_data(res.spec, res.curve, res.eqs, cfg.shoot, m=m)
    return res


def run_attractor(cfg: RunConfig) -> PipelineResult:
    res = run_invariants(cfg)
    res.graph = build_connection_graph(res.data, res.eqs)
    return res


def default_probes(eqs):
    """Every unstable direction of every equilibrium, both signs."""
    from .config import ProbeSpec

    return tuple(ProbeSpec(e.id, k, s) for e in eqs for k in range(e.morse or 0) for s in (1, -1))


def _compress(series):
    """Keep the first snapshot and every change of z: [(t, z), ...]."""
    out = []
    for t, z in series:
        if not out or out[-1][1] != z:
            out.append((t, z))
    return out


@dataclass
class VerifyReport:
    dropping: dict = field(default_factory=dict)
    probes: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.dropping.get("pass", True) and not self.unresolved and all(p["pass"] for p in self.probes)

    def to_dict(self) -> dict:
        return {"pass": self.ok, "dropping_lemma": self.dropping, "probes": self.probes, "unresolved": self.unresolved}


def run_verification(cfg: RunConfig, res: PipelineResult) -> VerifyReport:
    sim: SimConfig = cfg.sim
    if sim is None or not res.spec.simulable:
        raise InvalidParameterError("verification requires a simulable spec")
    rep = VerifyReport()
    d = sim.dropping
    if d.pairs > 0:
        dl = dropping_lemma_trials(res.spec, d.pairs, d.t_end, sim.m, d.seed, d.pool, sim.snap_dt)
        rep.dropping = {
            "pairs": len(dl.pairs),
            "t_end": d.t_end,
            "m": sim.m,
            "violations": [list(dl.pairs[i]) for i in dl.violations],
            "series": [{"pair": list(p), "changes": _compress(s)} for p, s in zip(dl.pairs, dl.series)],
            "pass": dl.ok,
        }
    probes = sim.probes if sim.probes is not None else default_probes(res.eqs)
    by_id = {e.id: e for e in res.eqs}
    discrete = {e.id: discrete_equilibrium(res.spec, e, sim.m) for e in res.eqs}
    for p in probes:
        if p.source not in by_id:
            raise InvalidParameterError(f"probe source e{p.source} does not exist (n={len(res.eqs)})")
        try:
            r = heteroclinic_probe(
                res.spec,
                by_id[p.source],
                p.mode,
                p.sign,
                sim.eps,
                res.eqs,
                m=sim.m,
                t_max=sim.t_max,
                delta_match=sim.delta_match,
                delta_rest=sim.delta_rest,
                discrete=discrete,
                lower_correction=sim.lower_correction,
            )
        except UnresolvedProbeError as ex:
            rep.unresolved.append(
                {"source": p.source, "mode": p.mode, "sign": p.sign, "nearest": ex.nearest, "distance": ex.distance, "message": str(ex)}
            )
            continue
        doc = r.to_dict()
        doc["successor"] = r.target in res.graph.successors(p.source)
        doc["z_consistent"] = r.target != p.source and r.z_final == res.data.z(p.source, r.target)
        doc["pass"] = doc["successor"] and doc["z_consistent"]
        rep.probes.append(doc)
    return rep


def cosine_initial(coeffs, m: int) -> np.ndarray:
    x = sim_grid(m)
    return np.cos(np.outer(x, np.arange(len(coeffs)))) @ np.asarray(coeffs, dtype=float)


def run_simulation(cfg: RunConfig, spec: Optional[ProblemSpec] = None):
    sim = cfg.sim or SimConfig()
    spec = spec or cfg.spec()
    if not spec.simulable:
        raise InvalidParameterError("simulation requires a simulable spec")
    u0 = cosine_initial(sim.initial, sim.m)
    return evolve(spec, u0, sim.t_end, SimOptions(m=sim.m, snap_dt=sim.snap_dt))


def nearest_equilibrium(u: np.ndarray, discrete: dict):
    if not discrete:
        return None, math.inf
    dists = {i: float(np.max(np.abs(u - v))) for i, v in discrete.items()}
    best = min(dists, key=dists.get)
    return best, dists[best]
