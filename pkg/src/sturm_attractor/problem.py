"""Problem definitions for u_t = F~(x, u, u_x, u_xx) on [0, pi] with Neumann ends.

Two splittings of the same equation are carried side by side:

* the equilibrium form ``u_xx = F0(x, u, u_x)`` used by the shooting flow;
* the evolution form ``u_t = F~(x, u, u_x, u_xx)`` used by the simulator
  and the spectral Morse-index oracle.

All evaluators accept numpy arrays as well as scalars.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numpy as np

from .errors import EmptyDomainError, EvaluationError, InvalidParameterError

Evaluator = Callable[..., "np.ndarray | float"]

FORM_SEMILINEAR = 0
FORM_LOG = 1
_FORMS = {"semilinear": FORM_SEMILINEAR, "fully_nonlinear": FORM_LOG, "log": FORM_LOG}


@dataclass(frozen=True)
class PolyKernel:
    """Compiled-kernel descriptor: F0 = sum(coeffs[k] u^k) + damping * p.

    ``form`` selects the evolution splitting: 0 is u_t = u_xx - F0,
    1 is u_t = log(1 + u_xx - F0).
    """

    coeffs: tuple
    damping: float = 0.0
    form: int = FORM_SEMILINEAR

    def coeff_array(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=np.float64)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    params: Mapping[str, float]
    f0: Evaluator
    f0_u: Optional[Evaluator] = None
    f0_p: Optional[Evaluator] = None
    ftilde: Optional[Evaluator] = None
    ftilde_valid: Optional[Evaluator] = None
    a_bracket: tuple = (-2.0, 2.0)
    kernel: Optional[PolyKernel] = None
    family: str = "custom"
    h_fd: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        lo, hi = (float(v) for v in self.a_bracket)
        if not lo < hi:
            raise InvalidParameterError(f"a_bracket must be increasing, got {self.a_bracket}")
        object.__setattr__(self, "a_bracket", (lo, hi))

    @property
    def simulable(self) -> bool:
        return self.ftilde is not None

    def _step(self, v):
        return self.h_fd * np.maximum(1.0, np.abs(v))

    def F0(self, x, u, p):
        val = self.f0(x, u, p)
        if not np.all(np.isfinite(val)):
            raise EvaluationError(f"{self.name}: F0 not finite at u={u!r}, p={p!r}")
        return val

    def F0_u(self, x, u, p):
        if self.f0_u is not None:
            return self.f0_u(x, u, p)
        h = self._step(u)
        return (self.f0(x, u + h, p) - self.f0(x, u - h, p)) / (2.0 * h)

    def F0_p(self, x, u, p):
        if self.f0_p is not None:
            return self.f0_p(x, u, p)
        h = self._step(p)
        return (self.f0(x, u, p + h) - self.f0(x, u, p - h)) / (2.0 * h)

    def valid(self, x, u, p, q):
        if self.ftilde_valid is None:
            return np.ones(np.broadcast(x, u, p, q).shape, dtype=bool)
        return np.asarray(self.ftilde_valid(x, u, p, q), dtype=bool)

    def ftilde_partials(self, x, u, p, q):
        """Central-difference partials (F~_u, F~_p, F~_q)."""
        if self.ftilde is None:
            raise InvalidParameterError(f"{self.name}: no evolution form F~ supplied")
        F = self.ftilde
        hu, hp, hq = self._step(u), self._step(p), self._step(q)
        fu = (F(x, u + hu, p, q) - F(x, u - hu, p, q)) / (2.0 * hu)
        fp = (F(x, u, p + hp, q) - F(x, u, p - hp, q)) / (2.0 * hp)
        fq = (F(x, u, p, q + hq) - F(x, u, p, q - hq)) / (2.0 * hq)
        return fu, fp, fq

    def with_params(self, **overrides) -> "ProblemSpec":
        """Rebuild a builtin family with some parameters replaced."""
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"cannot re-parametrize custom spec {self.name!r}")
        kwargs = dict(self.params)
        kwargs.update(overrides)
        return build_family(self.family, kwargs, self.a_bracket)


def polynomial(
    coeffs,
    damping: float = 0.0,
    form: str = "semilinear",
    a_bracket=(-2.0, 2.0),
    name: str = "polynomial",
    params: Optional[Mapping[str, float]] = None,
    family: str = "polynomial",
) -> ProblemSpec:
    """F0(x, u, p) = sum(coeffs[k] u^k) + damping * p with the chosen evolution form."""
    if form not in _FORMS:
        raise InvalidParameterError(f"unknown form {form!r}; expected one of {sorted(_FORMS)}")
    c = tuple(float(v) for v in coeffs)
    if not c:
        raise InvalidParameterError("polynomial needs at least one coefficient")
    rev = np.asarray(c[::-1])
    drev = np.polyder(rev) if len(c) > 1 else np.zeros(1)
    d = float(damping)
    code = _FORMS[form]

    def f0(x, u, p):
        return np.polyval(rev, u) + d * p

    def f0_u(x, u, p):
        return np.polyval(drev, u) + 0.0 * p

    def f0_p(x, u, p):
        return d + 0.0 * np.asarray(u, dtype=float)

    if code == FORM_SEMILINEAR:
        def ftilde(x, u, p, q):
            return q - f0(x, u, p)

        ftilde_valid = None
    else:
        def ftilde(x, u, p, q):
            with np.errstate(invalid="ignore", divide="ignore"):
                return np.log(1.0 + q - f0(x, u, p))

        def ftilde_valid(x, u, p, q):
            return 1.0 + q - f0(x, u, p) > 0.0

    if params is None:
        params = {f"c{k}": v for k, v in enumerate(c)}
        params["damping"] = d
    return ProblemSpec(
        name=name,
        params=params,
        f0=f0,
        f0_u=f0_u,
        f0_p=f0_p,
        ftilde=ftilde,
        ftilde_valid=ftilde_valid,
        a_bracket=a_bracket,
        kernel=PolyKernel(c, d, code),
        family=family,
    )


def builtin_chafee_infante(lam: float, form: str = "fully_nonlinear", a_bracket=(-2.0, 2.0)) -> ProblemSpec:
    """Chafee-Infante: 0 = 1 - exp(u_t) + u_xx + lam u (1 - u^2).

    The equilibrium splitting is F0 = -lam u (1 - u^2). With
    ``form="fully_nonlinear"`` the evolution is u_t = log(1 + u_xx + lam u (1 - u^2));
    ``form="semilinear"`` gives the classical u_t = u_xx + lam u (1 - u^2).
    """
    lam = float(lam)
    if not lam > 0.0 or not math.isfinite(lam):
        raise InvalidParameterError(f"Chafee-Infante needs lambda > 0, got {lam!r}")
    family = "chafee_infante" if _FORMS.get(form) == FORM_LOG else "chafee_infante_semilinear"
    return polynomial(
        (0.0, -lam, 0.0, lam),
        form=form,
        a_bracket=a_bracket,
        name=f"chafee_infante[{form}](lambda={lam:g})",
        params={"lambda": lam},
        family=family,
    )


def odd_cubic(lam: float, c: float, form: str = "semilinear", a_bracket=None) -> ProblemSpec:
    """F0 = -lam u (1 - c u^2), c > 0; zeros at 0 and +-1/sqrt(c)."""
    lam, c = float(lam), float(c)
    if not lam > 0.0 or not c > 0.0:
        raise InvalidParameterError(f"odd_cubic needs lambda > 0 and c > 0, got {lam!r}, {c!r}")
    if a_bracket is None:
        r = 2.0 / math.sqrt(c)
        a_bracket = (-r, r)
    spec = polynomial(
        (0.0, -lam, 0.0, lam * c),
        form=form,
        a_bracket=a_bracket,
        name=f"odd_cubic(lambda={lam:g}, c={c:g})",
        params={"lambda": lam, "c": c},
        family="odd_cubic",
    )
    return spec


def _family_ci(params, a_bracket):
    return builtin_chafee_infante(params["lambda"], "fully_nonlinear", a_bracket or (-2.0, 2.0))


def _family_ci_semi(params, a_bracket):
    return builtin_chafee_infante(params["lambda"], "semilinear", a_bracket or (-2.0, 2.0))


def _family_odd_cubic(params, a_bracket):
    return odd_cubic(params["lambda"], params.get("c", 1.0), params.get("form", "semilinear"), a_bracket)


def _family_polynomial(params, a_bracket):
    keys = sorted((k for k in params if k[0] == "c" and k[1:].isdigit()), key=lambda k: int(k[1:]))
    if not keys:
        raise InvalidParameterError("polynomial family needs coefficients c0, c1, ...")
    deg = int(keys[-1][1:])
    coeffs = [float(params.get(f"c{k}", 0.0)) for k in range(deg + 1)]
    return polynomial(
        coeffs,
        damping=float(params.get("damping", 0.0)),
        form=str(params.get("form", "semilinear")),
        a_bracket=a_bracket or (-2.0, 2.0),
    )


FAMILIES = {
    "chafee_infante": _family_ci,
    "chafee_infante_semilinear": _family_ci_semi,
    "odd_cubic": _family_odd_cubic,
    "polynomial": _family_polynomial,
}

FAMILY_PARAMS = {
    "chafee_infante": {"lambda"},
    "chafee_infante_semilinear": {"lambda"},
    "odd_cubic": {"lambda", "c", "form"},
    "polynomial": None,  # c0..cN, damping, form
}


def build_family(family: str, params: Mapping, a_bracket=None) -> ProblemSpec:
    if family not in FAMILIES:
        raise InvalidParameterError(f"unknown family {family!r}; known: {sorted(FAMILIES)}")
    allowed = FAMILY_PARAMS[family]
    if allowed is not None:
        unknown = set(params) - allowed
        if unknown:
            raise InvalidParameterError(f"family {family!r} got unknown parameters {sorted(unknown)}")
        if "lambda" not in params:
            raise InvalidParameterError(f"family {family!r} requires parameter 'lambda'")
    else:
        for k in params:
            if not (k in ("damping", "form") or (k[0] == "c" and k[1:].isdigit())):
                raise InvalidParameterError(f"family 'polynomial' got unknown parameter {k!r}")
    return FAMILIES[family](dict(params), tuple(a_bracket) if a_bracket is not None else None)


# -- parabolicity ---------------------------------------------------------------------


@dataclass(frozen=True)
class ParabolicityGrid:
    """Sampling box for the parabolicity check; counts are points per axis."""

    u_range: tuple = (-1.5, 1.5)
    q_range: tuple = (-3.0, 3.0)
    p_range: tuple = (0.0, 0.0)
    x_range: tuple = (0.0, 0.0)
    counts: tuple = (1, 41, 1, 41)  # (x, u, p, q)

    def axes(self):
        out = []
        for rng, n in zip((self.x_range, self.u_range, self.p_range, self.q_range), self.counts):
            if n < 1:
                raise InvalidParameterError("grid counts must be positive")
            out.append(np.linspace(rng[0], rng[1], int(n)))
        return out


@dataclass
class ParabolicityReport:
    min_fq: float
    max_fq: float
    n_sampled: int
    n_outside: int
    violations: list = field(default_factory=list)  # (x, u, p, q, F~_q)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_parabolicity(spec: ProblemSpec, grid: ParabolicityGrid = ParabolicityGrid()) -> ParabolicityReport:
    """Sample dF~/dq by central differences over the valid part of a box.

    A point counts as inside the domain only if the predicate holds at
    q and at both difference nodes q +- h.
    """
    if spec.ftilde is None:
        raise InvalidParameterError(f"{spec.name}: parabolicity needs the evolution form F~")
    X, U, P, Q = np.meshgrid(*grid.axes(), indexing="ij")
    X, U, P, Q = X.ravel(), U.ravel(), P.ravel(), Q.ravel()
    h = spec.h_fd * np.maximum(1.0, np.abs(Q))
    inside = spec.valid(X, U, P, Q) & spec.valid(X, U, P, Q + h) & spec.valid(X, U, P, Q - h)
    n_out = int(np.count_nonzero(~inside))
    if not np.any(inside):
        raise EmptyDomainError(f"{spec.name}: no sampled point lies in the validity domain")
    X, U, P, Q, h = X[inside], U[inside], P[inside], Q[inside], h[inside]
    fq = (spec.ftilde(X, U, P, Q + h) - spec.ftilde(X, U, P, Q - h)) / (2.0 * h)
    bad = ~(fq > 0.0)
    violations = [
        (float(a), float(b), float(c), float(d), float(e))
        for a, b, c, d, e in zip(X[bad], U[bad], P[bad], Q[bad], fq[bad])
    ]
    return ParabolicityReport(float(np.min(fq)), float(np.max(fq)), int(fq.size), n_out, violations)
