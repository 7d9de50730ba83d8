"""Method-of-lines evolution of u_t = F~(x, u, u_x, u_xx) and its empirical checks.

Space: m uniform points on [0, pi], central second-order differences,
mirrored ghost points for the Neumann ends. Time: classical RK4 with
dt <= C_cfl dx^2 / max dF~/dq, the maximum taken over the current state.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import solve_banded

from . import _backend
from .errors import (
    BlowUpError,
    DomainViolationError,
    InvalidParameterError,
    ResolutionError,
    UnresolvedProbeError,
)
from .invariants import TOL_ZERO_REL, linearization_eigenpairs, zero_number
from .problem import ProblemSpec
from .shooting import Equilibrium, SturmWarning

BIFURCATION_MARGIN = 0.05


@dataclass(frozen=True)
class SimOptions:
    m: int = 257
    c_cfl: float = 0.4
    dt_max: float = math.inf
    snap_dt: float = 0.1


@dataclass
class SimState:
    x: np.ndarray
    u: np.ndarray
    t: float = 0.0
    dt: float = 0.0

    def copy(self) -> "SimState":
        return SimState(self.x, self.u.copy(), self.t, self.dt)


@dataclass
class Trajectory:
    x: np.ndarray
    times: np.ndarray
    states: np.ndarray  # (n_snapshots, m)
    steps: int = 0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def rows(self):
        for t, u in zip(self.times, self.states):
            yield t, u


def sim_grid(m: int) -> np.ndarray:
    if m < 3:
        raise InvalidParameterError(f"grid needs at least 3 points, got {m}")
    return np.linspace(0.0, math.pi, m)


def discrete_derivatives(u: np.ndarray, dx: float):
    """(p, q) by central differences with mirrored ghost points."""
    ext = np.concatenate(([u[1]], u, [u[-2]]))
    q = (ext[:-2] - 2.0 * u + ext[2:]) / dx**2
    p = (ext[2:] - ext[:-2]) / (2.0 * dx)
    return p, q


def _generic_rhs(spec: ProblemSpec, x: np.ndarray, dx: float):
    def rhs(u):
        p, q = discrete_derivatives(u, dx)
        ok = spec.valid(x, u, p, q)
        if not np.all(ok):
            return None, 0.0, int(np.argmin(ok))
        h = spec.h_fd * np.maximum(1.0, np.abs(q))
        fq = (spec.ftilde(x, u, p, q + h) - spec.ftilde(x, u, p, q - h)) / (2.0 * h)
        return np.asarray(spec.ftilde(x, u, p, q), dtype=float), max(float(np.max(fq)), 1e-300), -1

    return rhs


def bifurcation_warning(spec: ProblemSpec) -> Optional[str]:
    if spec.family not in ("chafee_infante", "chafee_infante_semilinear"):
        return None
    lam = spec.params["lambda"]
    n = round(math.sqrt(lam))
    if n >= 1 and abs(lam - n * n) < BIFURCATION_MARGIN:
        return f"lambda={lam:g} is within {BIFURCATION_MARGIN} of the bifurcation value {n * n}"
    return None


def check_initial(spec: ProblemSpec, x: np.ndarray, u: np.ndarray) -> None:
    p, q = discrete_derivatives(u, x[1] - x[0])
    ok = spec.valid(x, u, p, q)
    if not np.all(ok):
        i = int(np.argmin(ok))
        raise DomainViolationError(0.0, i, float(x[i]))


def advance(spec: ProblemSpec, state: SimState, t1: float, opts: SimOptions = SimOptions()) -> SimState:
    """Step ``state`` to time ``t1`` (in place semantics avoided; returns a new state)."""
    x = state.x
    dx = x[1] - x[0]
    if spec.kernel is not None:
        k = spec.kernel
        u, t, nsteps, status, bad, dt = _backend.mol_advance_poly(
            state.u, state.t, t1, dx, k.coeff_array(), k.damping, k.form, opts.c_cfl, opts.dt_max
        )
    else:
        u, t, nsteps, status, bad, dt = _backend.mol_advance(
            state.u, state.t, t1, opts.c_cfl * dx * dx, _generic_rhs(spec, x, dx), opts.dt_max
        )
    if status == _backend.DOMAIN:
        raise DomainViolationError(t, bad, float(x[bad]))
    if status == _backend.NONFINITE:
        raise BlowUpError(t, bad)
    out = SimState(x, np.asarray(u), t, dt)
    out.nsteps = nsteps  # type: ignore[attr-defined]
    return out


def evolve(spec: ProblemSpec, u0, t_end: float, opts: SimOptions = SimOptions()) -> Trajectory:
    """Evolve ``u0`` (values on the m-point grid) to ``t_end``, snapshotting every ``snap_dt``."""
    if spec.ftilde is None:
        raise InvalidParameterError(f"{spec.name}: simulation needs the evolution form F~")
    u0 = np.asarray(u0, dtype=float)
    x = sim_grid(u0.size)
    check_initial(spec, x, u0)
    n_snap = max(1, int(math.ceil(t_end / opts.snap_dt - 1e-9)))
    times = np.linspace(0.0, t_end, n_snap + 1)
    states = np.empty((n_snap + 1, u0.size))
    states[0] = u0
    st = SimState(x, u0.copy(), 0.0)
    steps = 0
    for i in range(1, n_snap + 1):
        st = advance(spec, st, times[i], opts)
        steps += st.nsteps
        states[i] = st.u
    return Trajectory(x, times, states, steps)


def zero_number_series(traj1: Trajectory, traj2: Trajectory, rel_tol: float = TOL_ZERO_REL, abs_floor: float = 1e-9):
    """[(t, z(u1 - u2))] at every snapshot.

    A difference whose sup-norm is at or below ``abs_floor`` is reported as
    -1, the zero number of the zero function.
    """
    if traj1.x.shape != traj2.x.shape or not np.array_equal(traj1.x, traj2.x):
        raise InvalidParameterError("trajectories live on different grids")
    if not np.array_equal(traj1.times, traj2.times):
        raise InvalidParameterError("trajectories have different snapshot times")
    return [(float(t), zero_number(u1 - u2, rel_tol, abs_floor)) for t, u1, u2 in zip(traj1.times, traj1.states, traj2.states)]


def is_nonincreasing(series) -> bool:
    zs = [z for _, z in series]
    return all(b <= a for a, b in zip(zs[:-1], zs[1:]))


# -- equilibria on the simulation grid -----------------------------------------------


def discrete_equilibrium(spec: ProblemSpec, e: Equilibrium, m: int, tol: float = 1e-12, max_iter: int = 30) -> np.ndarray:
    """Newton-polish the shooting profile to a steady state of the m-point scheme."""
    x = sim_grid(m)
    dx = x[1] - x[0]
    u = e.values(x).copy()
    for _ in range(max_iter):
        p, q = discrete_derivatives(u, dx)
        G = q - spec.F0(x, u, p)
        fu = np.asarray(spec.F0_u(x, u, p), dtype=float) * np.ones(m)
        fp = np.asarray(spec.F0_p(x, u, p), dtype=float) * np.ones(m)
        ab = np.zeros((3, m))
        ab[1] = -2.0 / dx**2 - fu
        up = 1.0 / dx**2 - fp / (2 * dx)
        lo = 1.0 / dx**2 + fp / (2 * dx)
        ab[0, 1:] = up[:-1]
        ab[2, :-1] = lo[1:]
        ab[0, 1] = 2.0 / dx**2
        ab[2, m - 2] = 2.0 / dx**2
        du = solve_banded((1, 1), ab, -G)
        u += du
        if np.max(np.abs(du)) < tol:
            return u
    raise ResolutionError(f"Newton polish of e{e.id} on {m} points did not converge")


# -- heteroclinic probes --------------------------------------------------------------


@dataclass
class ProbeReport:
    source: int
    mode: int
    sign: int
    eps: float
    target: Optional[int]
    transit_time: float
    final_distance: float
    min_distance: dict = field(default_factory=dict)
    z_final: Optional[int] = None
    degenerate: bool = False
    m: int = 257
    correction: float = 0.0
    trials: int = 1

    def to_dict(self) -> dict:
        return {
            "source": self.source,
            "mode": self.mode,
            "sign": self.sign,
            "eps": self.eps,
            "target": self.target,
            "transit_time": self.transit_time,
            "final_distance": self.final_distance,
            "min_distance": {f"e{k}": v for k, v in sorted(self.min_distance.items())},
            "z_final": self.z_final,
            "degenerate": self.degenerate,
            "m": self.m,
            "correction": self.correction,
            "trials": self.trials,
        }


def _run_probe(spec, x, u0, discrete, t_max, delta_match, delta_rest, check_every, opts, watch=None):
    """Evolve to rest near a grid equilibrium.

    ``watch = (k, u_src, psi)`` stops early once z(u - u_src) < k, which the
    dropping lemma makes permanent, and returns the side sign(<u - u_src, psi>).
    """
    check_initial(spec, x, u0)
    st = SimState(x, u0, 0.0)
    mind = {i: math.inf for i in discrete}
    nearest, dist = None, math.inf
    while st.t < t_max:
        prev = st.u
        st = advance(spec, st, min(st.t + check_every, t_max), opts)
        if watch is not None:
            k, u_src, psi = watch
            diff = st.u - u_src
            if zero_number(diff) < k:
                return "fell", int(np.sign(np.dot(diff, psi)) or 1)
        rate = float(np.max(np.abs(st.u - prev))) / check_every
        dists = {i: float(np.max(np.abs(st.u - v))) for i, v in discrete.items()}
        for i, d in dists.items():
            mind[i] = min(mind[i], d)
        nearest = min(dists, key=dists.get)
        dist = dists[nearest]
        if dist < delta_match and rate < delta_rest:
            return "land", (nearest, float(st.t), dist, mind, st.u)
    raise UnresolvedProbeError(f"unresolved at t={t_max:g}; nearest e{nearest} at distance {dist:.3e}", nearest, dist)


def heteroclinic_probe(
    spec: ProblemSpec,
    source: Equilibrium,
    k: int,
    sign: int,
    eps: float,
    eqs,
    m: int = 257,
    t_max: float = 500.0,
    delta_match: float = 1e-4,
    delta_rest: float = 1e-3,
    check_every: float = 0.25,
    opts: Optional[SimOptions] = None,
    discrete=None,
    lower_correction: bool = False,
    correction_tol: float = 1e-13,
) -> ProbeReport:
    """Follow the unstable direction psi_k out of ``source`` and name where it lands.

    The start is the grid steady state of ``source`` plus ``sign * eps * psi_k``
    with psi_k the k-th eigenvector (sup-norm 1) of the discretized
    linearization. A target is accepted once the state is within
    ``delta_match`` (sup-norm) of a grid steady state and its discrete time
    derivative is below ``delta_rest``.

    Without a symmetry protecting it, a pure psi_k start picks up lower-mode
    components from the nonlinearity and can fall past the index-(i-1)
    targets. With ``lower_correction`` (k >= 1) the start becomes
    ``sign * eps * (psi_k + s * psi_{k-1})`` and s is bisected between two
    starts that fall to different lower targets, until the orbit keeps k
    zeros relative to ``source`` and comes to rest at its target.
    """
    if source.morse is None:
        raise InvalidParameterError(f"e{source.id} has no Morse index; build SturmData first")
    if not 0 <= k < source.morse:
        raise InvalidParameterError(f"mode k={k} must satisfy 0 <= k < i(e{source.id})={source.morse}")
    if sign not in (1, -1):
        raise InvalidParameterError("sign must be +1 or -1")
    msg = bifurcation_warning(spec)
    if msg:
        warnings.warn(msg, SturmWarning, stacklevel=2)
    opts = opts or SimOptions(m=m)
    if discrete is None:
        discrete = {e.id: discrete_equilibrium(spec, e, m) for e in eqs}
    x, vals, vecs = linearization_eigenpairs(spec, source, m)
    u_src = discrete[source.id]
    zsrc = {i: zero_number(v - u_src) for i, v in discrete.items()}
    trials = 0
    correcting = lower_correction and k >= 1
    watch = (k, u_src, vecs[:, k - 1]) if correcting else None

    def run(s):
        nonlocal trials
        trials += 1
        direction = vecs[:, k] + (s * vecs[:, k - 1] if s else 0.0)
        try:
            return _run_probe(
                spec, x, u_src + sign * eps * direction, discrete, t_max, delta_match, delta_rest, check_every, opts, watch
            )
        except UnresolvedProbeError as ex:
            raise UnresolvedProbeError(
                f"probe from e{source.id} (mode {k}, sign {sign:+d}, correction {s:g}) {ex}", ex.nearest, ex.distance
            ) from None

    s_used = 0.0
    kind, result = run(0.0)
    if kind == "fell":
        # result is the side the orbit fell to; bisect s between opposite sides
        side0, s_a, s_b = result, 0.0, None
        # quadratic terms seed the lower mode at O(eps), so search on that scale
        for s in [f * eps for f in (1, -1, 4, -4, 16, -16, 64, -64)]:
            kind, result = run(s)
            if kind == "land":
                s_used = s
                break
            if result != side0:
                s_b = s
                break
        else:
            raise UnresolvedProbeError(
                f"probe from e{source.id} (mode {k}, sign {sign:+d}): every corrected start lost its {k} zeros",
                source.id,
                math.nan,
            )
        while kind == "fell":
            mid = 0.5 * (s_a + s_b)
            if abs(s_b - s_a) < correction_tol or mid in (s_a, s_b):
                raise UnresolvedProbeError(
                    f"probe from e{source.id} (mode {k}, sign {sign:+d}): correction bisection collapsed "
                    f"at s={mid:.3e} without reaching a target that keeps {k} zeros",
                    source.id,
                    math.nan,
                )
            kind, result = run(mid)
            if kind == "land":
                s_used = mid
            elif result == side0:
                s_a = mid
            else:
                s_b = mid
    target, t_end, dist, mind, u_end = result
    degenerate = target == source.id
    if degenerate:
        warnings.warn(f"probe from e{source.id} returned to its source; eps={eps:g} may be too small", SturmWarning, stacklevel=2)
    return ProbeReport(
        source=source.id,
        mode=k,
        sign=sign,
        eps=eps,
        target=target,
        transit_time=t_end,
        final_distance=dist,
        min_distance=mind,
        z_final=zero_number(u_end - u_src),
        degenerate=degenerate,
        m=m,
        correction=s_used,
        trials=trials,
    )


# -- dropping lemma -------------------------------------------------------------------


def random_initial_condition(spec: ProblemSpec, x: np.ndarray, rng: np.random.Generator, n_modes: int = 6, amplitude: float = 1.2, margin: float = 0.2, max_tries: int = 1000) -> np.ndarray:
    """Smooth random cosine series that satisfies the validity predicate with a margin."""
    dx = x[1] - x[0]
    for _ in range(max_tries):
        c = rng.normal(size=n_modes) / (1.0 + np.arange(n_modes)) ** 2
        u = np.cos(np.outer(x, np.arange(n_modes))) @ c
        u *= amplitude * rng.uniform(0.3, 1.0) / max(np.max(np.abs(u)), 1e-12)
        if spec.ftilde_valid is None:
            return u
        p, q = discrete_derivatives(u, dx)
        if np.all(spec.valid(x, u, p, q - margin - np.abs(q) * margin)):
            return u
    raise InvalidParameterError(f"{spec.name}: no valid random initial condition found")


@dataclass
class DroppingReport:
    pairs: list  # (i, j) indices into the pool
    series: list  # list of [(t, z)]
    violations: list  # pair indices whose series increases

    @property
    def ok(self) -> bool:
        return not self.violations


def dropping_lemma_trials(spec: ProblemSpec, n_pairs: int = 20, t_end: float = 20.0, m: int = 257, seed: int = 0, pool: int = 8, snap_dt: float = 0.1) -> DroppingReport:
    """Zero-number series for ``n_pairs`` distinct pairs drawn from ``pool`` random trajectories."""
    if pool * (pool - 1) // 2 < n_pairs:
        raise InvalidParameterError(f"pool of {pool} trajectories has fewer than {n_pairs} pairs")
    rng = np.random.default_rng(seed)
    x = sim_grid(m)
    opts = SimOptions(m=m, snap_dt=snap_dt)
    trajs = [evolve(spec, random_initial_condition(spec, x, rng), t_end, opts) for _ in range(pool)]
    all_pairs = [(i, j) for i in range(pool) for j in range(i + 1, pool)]
    chosen = rng.choice(len(all_pairs), size=n_pairs, replace=False)
    pairs = [all_pairs[c] for c in sorted(chosen)]
    series = [zero_number_series(trajs[i], trajs[j]) for i, j in pairs]
    bad = [n for n, s in enumerate(series) if not is_nonincreasing(s)]
    return DroppingReport(pairs, series, bad)
