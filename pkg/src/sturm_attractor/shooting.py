"""Shooting flow from the Neumann line, the shooting curve at x = pi, and its roots.

The augmented state (u, p, ua, pa) solves

    u' = p,  p' = F0(x, u, p),  ua' = pa,  pa' = F0_p pa + F0_u ua

from (a, 0, 1, 0). The winding angle ``theta`` is the clockwise rotation of
the tangent (ua, pa) in the (u, p)-plane, unwound continuously from
theta(0) = 0; clockwise rotation makes theta grow.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from . import _backend
from .errors import (
    IntegrationCorruptionError,
    NonHyperbolicError,
    ResolutionError,
    StiffnessError,
    TrajectoryEscapeError,
)
from .problem import ProblemSpec


class SturmWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ShootOptions:
    rtol: float = 1e-9
    atol: float = 1e-10
    h_max: float = math.pi / 16
    escape_factor: float = 1e3
    eps_hyp: float = 1e-6
    tol_root_rel: float = 1e-9
    tol_sep: float = 1e-7
    arc_bound: float = 0.05
    theta_bound: float = 0.3
    max_depth: int = 40
    max_samples: int = 200_000
    gap_tol: float = 1e-10

    def escape_bound(self, spec: ProblemSpec) -> float:
        return self.escape_factor * (1.0 + max(abs(spec.a_bracket[0]), abs(spec.a_bracket[1])))

    def tighter(self, factor: float = 100.0) -> "ShootOptions":
        from dataclasses import replace

        return replace(self, rtol=self.rtol / factor, atol=self.atol / factor, h_max=self.h_max / 2)


DEFAULT_OPTIONS = ShootOptions()


@dataclass
class ShootTrajectory:
    a: float
    xs: np.ndarray
    u: np.ndarray
    p: np.ndarray
    ua: np.ndarray
    pa: np.ndarray
    theta: np.ndarray
    spec: ProblemSpec = field(repr=False)

    @property
    def u_pi(self) -> float:
        return float(self.u[-1])

    @property
    def p_pi(self) -> float:
        return float(self.p[-1])

    @property
    def theta_pi(self) -> float:
        return float(self.theta[-1])

    def dense(self, grid: np.ndarray):
        """Cubic Hermite interpolation of (u, p) onto ``grid``."""
        grid = np.asarray(grid, dtype=np.float64)
        xs = self.xs
        idx = np.clip(np.searchsorted(xs, grid, side="right") - 1, 0, xs.size - 2)
        x0, x1 = xs[idx], xs[idx + 1]
        h = x1 - x0
        s = (grid - x0) / h
        q = np.asarray(self.spec.f0(xs, self.u, self.p), dtype=np.float64) * np.ones_like(xs)
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        u = h00 * self.u[idx] + h10 * h * self.p[idx] + h01 * self.u[idx + 1] + h11 * h * self.p[idx + 1]
        p = h00 * self.p[idx] + h10 * h * q[idx] + h01 * self.p[idx + 1] + h11 * h * q[idx + 1]
        return u, p


def _raw_shoot(spec: ProblemSpec, a: float, opts: ShootOptions):
    escape = opts.escape_bound(spec)
    if spec.kernel is not None:
        k = spec.kernel
        return _backend.shoot_poly(k.coeff_array(), k.damping, float(a), opts.rtol, opts.atol, escape, opts.h_max)

    def deriv(x, u, p, ua, pa):
        f = float(spec.F0(x, u, p))
        fu = float(spec.F0_u(x, u, p))
        fp = float(spec.F0_p(x, u, p))
        return (p, f, pa, fp * pa + fu * ua)

    return _backend.dopri_shoot(deriv, float(a), opts.rtol, opts.atol, escape, opts.h_max)


def integrate_shoot(spec: ProblemSpec, a: float, opts: ShootOptions = DEFAULT_OPTIONS) -> ShootTrajectory:
    """Integrate the shooting and tangent flows from (a, 0, 1, 0) to x = pi."""
    xs, ys, theta, status, x_stop = _raw_shoot(spec, a, opts)
    if status == _backend.ESCAPE:
        raise TrajectoryEscapeError(float(a), float(x_stop))
    if status == _backend.UNDERFLOW:
        raise StiffnessError(float(a), float(x_stop))
    if theta[-1] <= -0.5 * math.pi:
        raise IntegrationCorruptionError(f"theta(pi)={theta[-1]:.6g} <= -pi/2 for a={a!r}")
    return ShootTrajectory(float(a), xs, ys[:, 0], ys[:, 1], ys[:, 2], ys[:, 3], theta, spec)


def integrate_shoot_rk4(spec: ProblemSpec, a: float, n_steps: int = 4096) -> ShootTrajectory:
    """Fixed-step classical RK4 cross-check of :func:`integrate_shoot`."""
    h = math.pi / n_steps
    y = np.array([a, 0.0, 1.0, 0.0])

    def f(x, y):
        u, p, ua, pa = y
        return np.array([p, spec.F0(x, u, p), pa, spec.F0_p(x, u, p) * pa + spec.F0_u(x, u, p) * ua], dtype=float)

    out = np.empty((n_steps + 1, 4))
    out[0] = y
    theta = np.zeros(n_steps + 1)
    for i in range(n_steps):
        x = i * h
        k1 = f(x, y)
        k2 = f(x + h / 2, y + h / 2 * k1)
        k3 = f(x + h / 2, y + h / 2 * k2)
        k4 = f(x + h, y + h * k3)
        yn = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        theta[i + 1] = theta[i] - math.atan2(y[2] * yn[3] - y[3] * yn[2], y[2] * yn[2] + y[3] * yn[3])
        y = yn
        out[i + 1] = y
    xs = np.linspace(0.0, math.pi, n_steps + 1)
    return ShootTrajectory(float(a), xs, out[:, 0], out[:, 1], out[:, 2], out[:, 3], theta, spec)


# -- shooting curve -------------------------------------------------------------------


@dataclass
class ShootingCurve:
    """Samples of the shooting curve M_pi, sorted by a.

    Escaped samples keep NaN state and record the escape position in
    ``x_escape``; everything else has ``x_escape = NaN``.
    """

    a: np.ndarray
    u_pi: np.ndarray
    p_pi: np.ndarray
    theta_pi: np.ndarray
    ua_pi: np.ndarray
    pa_pi: np.ndarray
    x_escape: np.ndarray
    n_init: int
    initial_spacing: float
    depth: int
    unresolved: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def escaped(self) -> np.ndarray:
        return ~np.isnan(self.x_escape)

    def __len__(self) -> int:
        return int(self.a.size)

    def gaps(self):
        """Maximal runs of escaped samples as (a_first, a_last) pairs."""
        out = []
        esc = self.escaped
        i = 0
        while i < esc.size:
            if esc[i]:
                j = i
                while j + 1 < esc.size and esc[j + 1]:
                    j += 1
                out.append((float(self.a[i]), float(self.a[j])))
                i = j + 1
            else:
                i += 1
        return out

    def sign_changes(self) -> int:
        """Transverse crossings of p_pi = 0 along the resolved samples."""
        count = 0
        prev = 0.0
        for e, p in zip(self.escaped, self.p_pi):
            if e:
                prev = 0.0
                continue
            s = float(np.sign(p))
            if s == 0.0:
                count += 1
                prev = 0.0
                continue
            if prev != 0.0 and s != prev:
                count += 1
            prev = s
        return count

    def between(self, a_lo: float, a_hi: float) -> np.ndarray:
        """Indices of resolved samples strictly inside (a_lo, a_hi)."""
        mask = (self.a > a_lo) & (self.a < a_hi) & ~self.escaped
        return np.nonzero(mask)[0]

    def to_rows(self):
        for i in range(self.a.size):
            yield (self.a[i], self.u_pi[i], self.p_pi[i], self.theta_pi[i])


def _sample(spec, a, opts):
    xs, ys, theta, status, x_stop = _raw_shoot(spec, a, opts)
    if status == _backend.OK:
        u, p, ua, pa = ys[-1]
        return (a, u, p, theta[-1], ua, pa, math.nan)
    return (a, math.nan, math.nan, math.nan, math.nan, math.nan, float(x_stop))


def scan_curve(spec: ProblemSpec, n_init: int = 64, opts: ShootOptions = DEFAULT_OPTIONS) -> ShootingCurve:
    """Sample M_pi over ``spec.a_bracket`` and refine until it is resolved.

    Consecutive resolved samples are refined until their relative distance
    in (u_pi, p_pi) is below ``arc_bound`` and their winding angles differ
    by less than ``theta_bound``. Edges of escape gaps are localized by
    bisection to ``gap_tol`` so that roots adjacent to a gap stay bracketed.
    """
    if n_init < 16:
        raise ValueError(f"n_init must be >= 16, got {n_init}")
    lo, hi = spec.a_bracket
    h0 = (hi - lo) / (n_init - 1)
    samples = {float(a): _sample(spec, float(a), opts) for a in np.linspace(lo, hi, n_init)}
    unresolved = []
    max_depth_seen = 0
    pending = True
    while pending:
        pending = False
        keys = sorted(samples)
        new = []
        for a0, a1 in zip(keys[:-1], keys[1:]):
            s0, s1 = samples[a0], samples[a1]
            width = a1 - a0
            depth = int(round(math.log2(h0 / width))) if width > 0 else opts.max_depth
            esc0, esc1 = not math.isnan(s0[6]), not math.isnan(s1[6])
            if esc0 and esc1:
                continue
            if esc0 != esc1:
                if width > opts.gap_tol * (1.0 + abs(a0)):
                    new.append(0.5 * (a0 + a1))
                continue
            du, dp = s1[1] - s0[1], s1[2] - s0[2]
            scale = 1.0 + max(abs(s0[1]) + abs(s0[2]), abs(s1[1]) + abs(s1[2]))
            coarse = math.hypot(du, dp) / scale > opts.arc_bound or abs(s1[3] - s0[3]) > opts.theta_bound
            if coarse:
                if depth >= opts.max_depth or width <= 4e-16 * max(1.0, abs(a0)):
                    unresolved.append((a0, a1))
                    continue
                new.append(0.5 * (a0 + a1))
                max_depth_seen = max(max_depth_seen, depth + 1)
        if new:
            if len(samples) + len(new) > opts.max_samples:
                raise ResolutionError(f"shooting curve needs more than {opts.max_samples} samples")
            for a in new:
                samples[a] = _sample(spec, a, opts)
            pending = True

    keys = sorted(samples)
    arr = np.array([samples[k] for k in keys], dtype=np.float64)
    curve = ShootingCurve(
        a=arr[:, 0],
        u_pi=arr[:, 1],
        p_pi=arr[:, 2],
        theta_pi=arr[:, 3],
        ua_pi=arr[:, 4],
        pa_pi=arr[:, 5],
        x_escape=arr[:, 6],
        n_init=n_init,
        initial_spacing=h0,
        depth=max_depth_seen,
        unresolved=unresolved,
    )
    frac = float(np.mean(curve.escaped))
    if frac > 0.5:
        msg = f"{spec.name}: {frac:.0%} of shooting samples escaped; a_bracket may be too large"
        curve.warnings.append(msg)
        warnings.warn(msg, SturmWarning, stacklevel=2)
    return curve


# -- equilibria -----------------------------------------------------------------------


@dataclass
class Equilibrium:
    id: int
    a: float
    b: float
    profile: ShootTrajectory = field(repr=False)
    theta_pi: float
    transversality: float
    morse: Optional[int] = None

    def values(self, grid: np.ndarray) -> np.ndarray:
        return self.profile.dense(grid)[0]


def _p_pi(spec, a, opts):
    xs, ys, theta, status, x_stop = _raw_shoot(spec, a, opts)
    if status != _backend.OK:
        raise TrajectoryEscapeError(float(a), float(x_stop))
    return float(ys[-1, 1])


def find_equilibria(spec: ProblemSpec, curve: ShootingCurve, opts: ShootOptions = DEFAULT_OPTIONS):
    """All transverse roots of a -> p(pi; a), sorted by a and numbered from 1."""
    roots = []
    n = len(curve)
    esc = curve.escaped
    for i in range(n):
        if esc[i]:
            continue
        if curve.p_pi[i] == 0.0:
            roots.append(float(curve.a[i]))
            continue
        if i + 1 < n and not esc[i + 1] and curve.p_pi[i + 1] != 0.0:
            if np.sign(curve.p_pi[i]) != np.sign(curve.p_pi[i + 1]):
                roots.append(
                    brentq(lambda a: _p_pi(spec, a, opts), curve.a[i], curve.a[i + 1], xtol=1e-16, rtol=8.9e-16, maxiter=200)
                )
    roots.sort()
    for r0, r1 in zip(roots[:-1], roots[1:]):
        if r1 - r0 < opts.tol_sep:
            raise ResolutionError(f"roots at a={r0!r} and a={r1!r} closer than tol_sep={opts.tol_sep:g}")
    eqs = []
    for idx, a in enumerate(roots, start=1):
        traj = integrate_shoot(spec, a, opts)
        b = traj.u_pi
        if abs(traj.p_pi) > opts.tol_root_rel * (1.0 + abs(b)):
            raise ResolutionError(f"root at a={a!r} did not converge: |p(pi)|={abs(traj.p_pi):.3e}")
        margin = abs(float(traj.pa[-1]))
        if margin <= opts.eps_hyp:
            raise NonHyperbolicError(a, margin, opts.eps_hyp)
        if margin <= 100.0 * opts.eps_hyp:
            warnings.warn(
                f"equilibrium at a={a:.12g} is barely hyperbolic (|p_a(pi)|={margin:.2e})",
                SturmWarning,
                stacklevel=2,
            )
        eqs.append(Equilibrium(idx, float(a), b, traj, traj.theta_pi, margin))
    return eqs


def equilibria(spec: ProblemSpec, n_init: int = 64, opts: ShootOptions = DEFAULT_OPTIONS):
    """Convenience: scan the curve and return ``(curve, equilibria)``."""
    curve = scan_curve(spec, n_init, opts)
    return curve, find_equilibria(spec, curve, opts)
