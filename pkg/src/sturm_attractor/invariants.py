"""Morse indices, zero numbers and the Fusco-Rocha permutation of an equilibrium set.

Every quantity is computed two ways:

* Morse index: the winding-angle formula ``1 + floor(theta / pi)`` and the
  positive-eigenvalue count of the discretized linearization;
* zero number: sign changes of the profile difference (authoritative) and
  the signed-intersection count on the shooting curve.

Disagreement between the two routes is an error.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import (
    IndeterminateAngleError,
    IntegrationCorruptionError,
    InvalidParameterError,
    MethodDisagreementError,
    MorseDisagreementError,
    ProfilesTooCloseError,
    ResolutionError,
)
from .problem import ProblemSpec
from .shooting import (
    DEFAULT_OPTIONS,
    Equilibrium,
    ShootingCurve,
    ShootOptions,
    SturmWarning,
    _raw_shoot,
    integrate_shoot,
)

ANGLE_GUARD = 1e-6
TOL_ZERO_REL = 1e-7
UNDEFINED = -1
PROFILE_POINTS = 2049


# -- Morse index ----------------------------------------------------------------------


def morse_from_angle(theta: float, guard: float = ANGLE_GUARD) -> int:
    if not theta > -0.5 * math.pi:
        raise IntegrationCorruptionError(f"winding angle {theta:.9g} <= -pi/2")
    k = round(theta / math.pi)
    if abs(theta - k * math.pi) < guard:
        raise IndeterminateAngleError(f"winding angle {theta:.12g} within {guard:g} of {k}*pi")
    return 1 + math.floor(theta / math.pi)


def morse_index(e: Equilibrium, opts: ShootOptions = DEFAULT_OPTIONS) -> int:
    """Morse index of a hyperbolic equilibrium from its winding angle at x = pi.

    A guard-band hit triggers one re-integration at 100x tighter tolerances
    before the angle is declared indeterminate.
    """
    try:
        return morse_from_angle(e.theta_pi)
    except IndeterminateAngleError:
        traj = integrate_shoot(e.profile.spec, e.a, opts.tighter())
        return morse_from_angle(traj.theta_pi)


def linearized_operator(spec: ProblemSpec, e: Equilibrium, m: int):
    """Tridiagonal FD matrix of v -> F~_q v'' + F~_p v' + F~_u v with Neumann ghosts.

    Returns ``(x, lower, diag, upper)`` with ``lower[i]`` the (i+1, i) entry
    and ``upper[i]`` the (i, i+1) entry.
    """
    x = np.linspace(0.0, math.pi, m)
    dx = x[1] - x[0]
    u, p = e.profile.dense(x)
    q = np.asarray(spec.F0(x, u, p), dtype=float) * np.ones_like(x)
    if spec.ftilde is not None:
        fu, fp, fq = spec.ftilde_partials(x, u, p, q)
    else:
        # u_t = u_xx - F0 shares the equilibria and the unstable dimension
        fq = np.ones_like(x)
        fp = -np.asarray(spec.F0_p(x, u, p), dtype=float) * np.ones_like(x)
        fu = -np.asarray(spec.F0_u(x, u, p), dtype=float) * np.ones_like(x)
    fu, fp, fq = (np.asarray(v, dtype=float) * np.ones_like(x) for v in (fu, fp, fq))
    sub = fq / dx**2 - fp / (2 * dx)  # coefficient of v_{i-1} in row i
    sup = fq / dx**2 + fp / (2 * dx)  # coefficient of v_{i+1} in row i
    diag = -2.0 * fq / dx**2 + fu
    upper = sup[:-1].copy()
    lower = sub[1:].copy()
    upper[0] = 2.0 * fq[0] / dx**2
    lower[-1] = 2.0 * fq[-1] / dx**2
    return x, lower, diag, upper


def linearization_eigenpairs(spec: ProblemSpec, e: Equilibrium, m: int = 257):
    """Eigenvalues (descending) and eigenvectors of the discretized linearization.

    Eigenvectors are columns, scaled to sup-norm 1 with a positive value at
    x = 0; the k-th column has k sign changes.
    """
    if m < 64:
        raise InvalidParameterError(f"grid size m must be >= 64, got {m}")
    x, lower, diag, upper = linearized_operator(spec, e, m)
    prod = lower * upper
    if np.any(prod <= 0):
        raise InvalidParameterError("grid too coarse: off-diagonal products must be positive")
    off = np.sqrt(prod)
    # T = D S D^{-1} with d_{i+1} / d_i = sqrt(lower_i / upper_i)
    logd = np.concatenate(([0.0], np.cumsum(0.5 * (np.log(lower) - np.log(upper)))))
    vals, w = eigh_tridiagonal(diag, off)
    vecs = w * np.exp(logd - logd.max())[:, None]
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    vecs /= np.max(np.abs(vecs), axis=0)
    sgn = np.sign(vecs[0])
    sgn[sgn == 0] = 1.0
    vecs *= sgn
    return x, vals, vecs


def spectral_morse_oracle(spec: ProblemSpec, e: Equilibrium, m: int = 257):
    """``(count of positive eigenvalues, eigenvalue nearest to 0)``."""
    _, vals, _ = linearization_eigenpairs(spec, e, m)
    nearest = float(vals[np.argmin(np.abs(vals))])
    # scale by the top of the spectrum; the bottom grows like 4/dx^2
    scale = max(1.0, abs(float(vals[0])))
    if abs(nearest) < 1e-4 * scale:
        warnings.warn(
            f"e{e.id}: eigenvalue {nearest:.3e} is within 1e-4 of 0 relative to {scale:.3e}",
            SturmWarning,
            stacklevel=2,
        )
    return int(np.count_nonzero(vals > 0.0)), nearest


# -- permutation ----------------------------------------------------------------------


def fusco_rocha_permutation(eqs, tol_sep: float = DEFAULT_OPTIONS.tol_sep) -> tuple:
    """sigma in one-line notation: sigma[k-1] is the curve index of the k-th smallest b."""
    order = sorted(range(len(eqs)), key=lambda i: eqs[i].b)
    for i0, i1 in zip(order[:-1], order[1:]):
        if eqs[i1].b - eqs[i0].b <= tol_sep:
            raise ResolutionError(
                f"terminal values of e{eqs[i0].id} and e{eqs[i1].id} closer than {tol_sep:g}"
            )
    return tuple(eqs[i].id for i in order)


def cycle_notation(sigma) -> str:
    seen = set()
    cycles = []
    for start in range(1, len(sigma) + 1):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        nxt = sigma[start - 1]
        while nxt != start:
            cyc.append(nxt)
            seen.add(nxt)
            nxt = sigma[nxt - 1]
        if len(cyc) > 1:
            cycles.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(cycles) or "id"


# -- zero numbers ---------------------------------------------------------------------


def count_sign_changes(w: np.ndarray, tol: float) -> int:
    """Strict sign changes of ``w`` ignoring entries with ``|w| < tol``.

    Runs of sub-threshold entries between opposite signs count once.
    Returns -1 when no entry clears the threshold.
    """
    w = np.asarray(w, dtype=float)
    s = np.sign(w[np.abs(w) >= tol])
    if s.size == 0:
        return -1
    return int(np.count_nonzero(s[1:] != s[:-1]))


def zero_number(w: np.ndarray, rel_tol: float = TOL_ZERO_REL, abs_floor: float = 0.0) -> int:
    """Zero number with the relative threshold ``rel_tol * max|w|``.

    ``-1`` for w identically zero or for ``max|w| <= abs_floor``.
    """
    w = np.asarray(w, dtype=float)
    amp = float(np.max(np.abs(w))) if w.size else 0.0
    if amp <= abs_floor or amp == 0.0:
        return -1
    return count_sign_changes(w, rel_tol * amp)


def profile_grid(n: int = PROFILE_POINTS) -> np.ndarray:
    return np.linspace(0.0, math.pi, n)


def zero_number_profiles(e_j: Equilibrium, e_k: Equilibrium, n: int = PROFILE_POINTS) -> int:
    """Sign changes of e_j - e_k on a common grid of ``n`` points."""
    if e_j.id == e_k.id:
        raise InvalidParameterError("zero number of an equilibrium with itself is undefined")
    if n < 2048:
        raise InvalidParameterError(f"profile grid needs >= 2048 points, got {n}")
    x = profile_grid(n)
    w = e_j.values(x) - e_k.values(x)
    tol = TOL_ZERO_REL * float(np.max(np.abs(w)))
    small = np.count_nonzero(np.abs(w) < tol)
    if tol == 0.0 or small > 0.01 * n:
        raise ProfilesTooCloseError(f"e{e_j.id} and e{e_k.id} coincide on {small} of {n} grid points")
    return count_sign_changes(w, tol)


def _curve_point(spec, a, opts):
    xs, ys, theta, status, x_stop = _raw_shoot(spec, a, opts)
    if status != 0:
        raise ResolutionError(f"shooting curve escapes at a={a!r} between two equilibria")
    return float(ys[-1, 0]), float(ys[-1, 1])


def _crossing_sign(spec, opts, b_ref, lo, hi, max_iter=60):
    """Side (+1 above / -1 below L_pi) at which M_pi crosses u = b_ref in (lo, hi).

    ``lo``/``hi`` are (a, side of b_ref, p). Bisects until both bracket
    ends agree on the sign of p.
    """
    for _ in range(max_iter):
        if lo[2] != 0.0 and np.sign(lo[2]) == np.sign(hi[2]):
            return int(np.sign(lo[2]))
        am = 0.5 * (lo[0] + hi[0])
        if am in (lo[0], hi[0]):
            break
        um, pm = _curve_point(spec, am, opts)
        if um == b_ref:
            return int(np.sign(pm))
        if np.sign(um - b_ref) == lo[1]:
            lo = (am, lo[1], pm)
        else:
            hi = (am, hi[1], pm)
    p = lo[2] if abs(lo[2]) > abs(hi[2]) else hi[2]
    if p == 0.0:
        raise ResolutionError(f"cannot resolve crossing of u={b_ref!r} near a={lo[0]!r}")
    return int(np.sign(p))


def zero_number_shooting(curve: ShootingCurve, eqs, j: int, k: int, opts: ShootOptions = DEFAULT_OPTIONS):
    """Zero number z(e_j - e_k) from the shooting curve; returns ``(z, r_jk)``.

    ``j < k`` are 1-based curve indices. ``r_jk`` sums the crossings of the
    vertical line u = b_j by M_pi for a in (a_j, a_k): +1 where the curve,
    seen from (b_j, 0), turns clockwise (above L_pi moving right, or below
    moving left), -1 otherwise. The crossing sign follows from requiring that
    the clockwise winding of (e_k - e_j, e_k' - e_j') over [0, pi] be
    z * pi, and was checked against the profile count on the Chafee-Infante
    regimes.
    """
    if not 1 <= j < k <= len(eqs):
        raise InvalidParameterError(f"need 1 <= j < k <= {len(eqs)}, got j={j}, k={k}")
    ej, ek = eqs[j - 1], eqs[k - 1]
    spec = ej.profile.spec
    bj = ej.b
    ua_pi = float(ej.profile.ua[-1])
    if ua_pi == 0.0:
        raise IndeterminateAngleError(f"tangent of M_pi at e{j} is vertical")
    # Just past a_j the curve sits at b_j + (a - a_j) * ua(pi).
    pts = [(ej.a, bj, 0.0, int(np.sign(ua_pi)))]
    for i in curve.between(ej.a, ek.a):
        d = curve.u_pi[i] - bj
        if d == 0.0:
            continue
        pts.append((float(curve.a[i]), float(curve.u_pi[i]), float(curve.p_pi[i]), int(np.sign(d))))
    pts.append((ek.a, ek.b, 0.0, int(np.sign(ek.b - bj))))
    r = 0
    for P, Q in zip(pts[:-1], pts[1:]):
        if P[3] == Q[3]:
            continue
        direction = Q[3]  # moving from side P[3] to side Q[3]
        side = _crossing_sign(spec, opts, bj, (P[0], P[3], P[2]), (Q[0], Q[3], Q[2]))
        r += side * direction
    theta = ej.theta_pi
    i_j = morse_from_angle(theta)
    phase = math.fmod(theta, math.pi)
    if phase < 0:
        phase += math.pi
    if min(abs(phase - 0.5 * math.pi), phase, math.pi - phase) < ANGLE_GUARD:
        raise IndeterminateAngleError(f"theta(e{j})={theta:.12g} on a quadrant boundary")
    z = i_j + r if phase > 0.5 * math.pi else i_j - 1 + r
    return z, r


# -- assembly -------------------------------------------------------------------------


@dataclass(eq=False)
class SturmData:
    n: int
    a: tuple
    b: tuple
    theta_pi: tuple
    sigma: tuple
    morse: tuple
    zmat: np.ndarray
    rcounts: np.ndarray
    method_tags: dict = field(default_factory=dict)
    spectral_counts: tuple = ()

    def z(self, j: int, k: int) -> int:
        return int(self.zmat[j - 1, k - 1])

    def i(self, j: int) -> int:
        return int(self.morse[j - 1])

    def to_dict(self) -> dict:
        zm = [[None if r == c else int(self.zmat[r, c]) for c in range(self.n)] for r in range(self.n)]
        tags = [
            {"pair": [j, k], **{key: val for key, val in tag.items()}}
            for (j, k), tag in sorted(self.method_tags.items())
        ]
        return {
            "n": self.n,
            "sigma": list(self.sigma),
            "sigma_cycles": cycle_notation(self.sigma),
            "morse": list(self.morse),
            "spectral_counts": list(self.spectral_counts),
            "a": [float(v) for v in self.a],
            "b": [float(v) for v in self.b],
            "theta_pi": [float(v) for v in self.theta_pi],
            "zmat": zm,
            "rcounts": self.rcounts.astype(int).tolist(),
            "agreement": tags,
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SturmData":
        n = int(d["n"])
        zmat = np.array([[UNDEFINED if v is None else int(v) for v in row] for row in d["zmat"]], dtype=int).reshape(n, n)
        tags = {}
        for t in d.get("agreement", []):
            j, k = t["pair"]
            tags[(int(j), int(k))] = {key: val for key, val in t.items() if key != "pair"}
        return cls(
            n=n,
            a=tuple(float(v) for v in d["a"]),
            b=tuple(float(v) for v in d["b"]),
            theta_pi=tuple(float(v) for v in d["theta_pi"]),
            sigma=tuple(int(v) for v in d["sigma"]),
            morse=tuple(int(v) for v in d["morse"]),
            zmat=zmat,
            rcounts=np.array(d["rcounts"], dtype=int).reshape(n, n),
            method_tags=tags,
            spectral_counts=tuple(int(v) for v in d.get("spectral_counts", [])),
        )

    @classmethod
    def from_json(cls, text: str) -> "SturmData":
        return cls.from_dict(json.loads(text))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SturmData):
            return NotImplemented
        return (
            self.n == other.n
            and self.a == other.a
            and self.b == other.b
            and self.theta_pi == other.theta_pi
            and self.sigma == other.sigma
            and self.morse == other.morse
            and self.spectral_counts == other.spectral_counts
            and np.array_equal(self.zmat, other.zmat)
            and np.array_equal(self.rcounts, other.rcounts)
            and self.method_tags == other.method_tags
        )

    def check_invariants(self) -> list:
        """Human-readable list of violated structural invariants (empty if none)."""
        problems = []
        if sorted(self.sigma) != list(range(1, self.n + 1)):
            problems.append(f"sigma {self.sigma} is not a permutation")
        if any(i < 0 for i in self.morse):
            problems.append("negative Morse index")
        off = ~np.eye(self.n, dtype=bool)
        if np.any(self.zmat[off] < 0):
            problems.append("negative zero number")
        if not np.array_equal(self.zmat, self.zmat.T):
            problems.append("zero-number matrix not symmetric")
        if not np.array_equal(self.rcounts, -self.rcounts.T):
            problems.append("r-count matrix not antisymmetric")
        for j in range(self.n - 1):
            if abs(self.morse[j + 1] - self.morse[j]) != 1:
                problems.append(f"Morse indices of e{j + 1}, e{j + 2} do not differ by one")
        return problems


def build_sturm_data(
    spec: ProblemSpec,
    curve: ShootingCurve,
    eqs,
    opts: ShootOptions = DEFAULT_OPTIONS,
    m: int = 257,
    n_profile: int = PROFILE_POINTS,
) -> SturmData:
    """Morse vector, permutation, zero-number and r-count matrices, cross-checked."""
    if not eqs:
        raise InvalidParameterError("no equilibria")
    n = len(eqs)
    morse = []
    spectral = []
    for e in eqs:
        i_angle = morse_index(e, opts)
        i_spec, _ = spectral_morse_oracle(spec, e, m)
        if i_angle != i_spec:
            raise MorseDisagreementError(e.id, i_angle, i_spec)
        e.morse = i_angle
        morse.append(i_angle)
        spectral.append(i_spec)
    sigma = fusco_rocha_permutation(eqs, opts.tol_sep)
    zmat = np.full((n, n), UNDEFINED, dtype=int)
    rc = np.zeros((n, n), dtype=int)
    tags = {}
    for j in range(1, n + 1):
        for k in range(j + 1, n + 1):
            zp = zero_number_profiles(eqs[j - 1], eqs[k - 1], n_profile)
            zs, r = zero_number_shooting(curve, eqs, j, k, opts)
            tags[(j, k)] = {"profiles": zp, "shooting": zs, "agree": zp == zs}
            if zp != zs:
                raise MethodDisagreementError(j, k, zs, zp)
            zmat[j - 1, k - 1] = zmat[k - 1, j - 1] = zp
            rc[j - 1, k - 1] = r
            rc[k - 1, j - 1] = -r
    data = SturmData(
        n=n,
        a=tuple(e.a for e in eqs),
        b=tuple(e.b for e in eqs),
        theta_pi=tuple(e.theta_pi for e in eqs),
        sigma=sigma,
        morse=tuple(morse),
        zmat=zmat,
        rcounts=rc,
        method_tags=tags,
        spectral_counts=tuple(spectral),
    )
    for msg in data.check_invariants():
        warnings.warn(msg, SturmWarning, stacklevel=2)
    return data
