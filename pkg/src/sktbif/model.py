"""Model parameters, homogeneous equilibria and the reaction/diffusion linearisation.

The model is a two-species competition system on the interval (0, ell) with
nonlinear self- and cross-diffusion:

    u_t = Lap((d + d11*u + d12*v) u) + (r1 - a1*u - b1*v) u
    v_t = Lap((d + d22*v + d21*u) v) + (r2 - b2*u - a2*v) v

with zero-flux boundary conditions.  Everything downstream (mode analysis,
amplitude equations, continuation) consumes the quantities computed here.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace

import numpy as np

from .errors import SingularDenominatorError

#: Relative tolerance for degenerate-regime and singular-denominator detection.
TAU_REG = 1e-10

_PARAM_FIELDS = ("r1", "r2", "a1", "a2", "b1", "b2", "d",
                 "d11", "d22", "d12", "d21", "ell")


@dataclass(frozen=True)
class ModelParams:
    """All rate and diffusion coefficients plus the domain length.

    Attributes
    ----------
    r1, r2 : float
        Intrinsic growth rates, > 0.
    a1, a2 : float
        Intraspecific competition rates, > 0.
    b1, b2 : float
        Interspecific competition rates, >= 0.
    d : float
        Standard diffusion coefficient (shared by both species), > 0.
    d11, d22 : float
        Self-diffusion coefficients, >= 0.  Carried through the discretised
        operator but required to be zero by every closed-form result.
    d12, d21 : float
        Cross-diffusion coefficients, >= 0.
    ell : float
        Domain length, > 0.
    """

    r1: float
    r2: float
    a1: float
    a2: float
    b1: float
    b2: float
    d: float
    d12: float
    d21: float
    d11: float = 0.0
    d22: float = 0.0
    ell: float = 1.0

    def __post_init__(self):
        for name in ("r1", "r2", "a1", "a2", "d", "ell"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("b1", "b2", "d11", "d22", "d12", "d21"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    def with_(self, **changes) -> "ModelParams":
        """Return a copy with the given fields replaced."""
        return replace(self, **changes)

    def require_no_self_diffusion(self):
        """All closed-form results assume d11 = d22 = 0; enforce that."""
        if self.d11 != 0.0 or self.d22 != 0.0:
            raise ValueError(
                "closed-form analysis requires d11 = d22 = 0 "
                f"(got d11={self.d11}, d22={self.d22})")

    def to_dict(self) -> dict:
        return {name: float(getattr(self, name)) for name in _PARAM_FIELDS}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelParams":
        """Build from a plain dict; unknown keys are rejected."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown ModelParams keys: {unknown}")
        return cls(**{k: float(v) for k, v in data.items()})

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("ModelParams JSON must be an object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class Equilibrium:
    """A spatially homogeneous steady state."""

    kind: str  # extinction | semitrivial-u | semitrivial-v | coexistence
    u: float
    v: float


@dataclass(frozen=True)
class Regime:
    """Competition regime classification."""

    kind: str  # weak | strong | degenerate
    diagnostic: str = ""


@dataclass(frozen=True)
class Linearization:
    """Reaction Jacobian at coexistence plus derived scalars.

    K is the 2x2 Jacobian of the kinetics at (u*, v*).  alpha and beta are
    the combinations multiplying the cross-diffusion coefficients in the
    mode polynomial; their signs decide whether d12 / d21 destabilise.
    """

    K: np.ndarray
    trK: float
    detK: float
    alpha: float
    beta: float


def coexistence_equilibrium(p: ModelParams) -> Equilibrium:
    """Closed-form coexistence state of the kinetics.

    Returns ((r1*a2 - r2*b1)/den, (r2*a1 - r1*b2)/den) with
    den = a1*a2 - b1*b2.  Values may be negative outside the weak/strong
    regimes; callers check the regime.

    Raises
    ------
    SingularDenominatorError
        If a1*a2 - b1*b2 vanishes (relative to its terms).
    """
    den = p.a1 * p.a2 - p.b1 * p.b2
    scale = max(p.a1 * p.a2, p.b1 * p.b2)
    if abs(den) < TAU_REG * scale:
        raise SingularDenominatorError(
            f"a1*a2 - b1*b2 = {den} is singular at relative tolerance {TAU_REG}")
    u = (p.r1 * p.a2 - p.r2 * p.b1) / den
    v = (p.r2 * p.a1 - p.r1 * p.b2) / den
    return Equilibrium("coexistence", u, v)


def homogeneous_equilibria(p: ModelParams) -> list[Equilibrium]:
    """All homogeneous steady states: extinction, the two semitrivial
    states and (when the kinetics allow it) coexistence."""
    eqs = [
        Equilibrium("extinction", 0.0, 0.0),
        Equilibrium("semitrivial-u", p.r1 / p.a1, 0.0),
        Equilibrium("semitrivial-v", 0.0, p.r2 / p.a2),
    ]
    try:
        eqs.append(coexistence_equilibrium(p))
    except SingularDenominatorError:
        pass
    return eqs


def classify_regime(p: ModelParams) -> Regime:
    """Weak iff b1/a2 < r1/r2 < a1/b2 strictly, strong iff both reversed.

    Equalities within TAU_REG (relative) and mixed orderings are reported
    as degenerate with a diagnostic.  Requires r2, a2, b2 > 0 so that the
    ratios are defined.
    """
    if p.b2 <= 0.0:
        raise ValueError("classify_regime requires b2 > 0")
    lo = p.b1 / p.a2
    mid = p.r1 / p.r2
    hi = p.a1 / p.b2
    ref = max(abs(lo), abs(mid), abs(hi))
    if abs(lo - mid) <= TAU_REG * ref or abs(mid - hi) <= TAU_REG * ref:
        return Regime("degenerate", "boundary equality within tolerance")
    if lo < mid < hi:
        return Regime("weak")
    if lo > mid > hi:
        return Regime("strong")
    return Regime("degenerate", f"mixed ordering: b1/a2={lo}, r1/r2={mid}, a1/b2={hi}")


def linearize(p: ModelParams) -> Linearization:
    """Jacobian of the kinetics at the coexistence state, plus alpha/beta.

    K = [[-a1*u*, -b1*u*], [-b2*v*, -a2*v*]],
    alpha = (b2*u* - a2*v*)*v*,  beta = (b1*v* - a1*u*)*u*.

    Requires u*, v* > 0.
    """
    eq = coexistence_equilibrium(p)
    if eq.u <= 0.0 or eq.v <= 0.0:
        raise ValueError(f"coexistence state not positive: ({eq.u}, {eq.v})")
    u, v = eq.u, eq.v
    K = np.array([[-p.a1 * u, -p.b1 * u],
                  [-p.b2 * v, -p.a2 * v]])
    alpha = (p.b2 * u - p.a2 * v) * v
    beta = (p.b1 * v - p.a1 * u) * u
    return Linearization(K=K, trK=float(np.trace(K)), detK=float(np.linalg.det(K)),
                         alpha=alpha, beta=beta)


def diffusion_matrix(p: ModelParams, d: float | None = None) -> np.ndarray:
    """Linearised diffusion matrix at the coexistence state.

    D = [[d + d12*v*, d12*u*], [d21*v*, d + d21*u*]].  The optional `d`
    overrides p.d, which keeps parameter sweeps in the bifurcation
    parameter cheap.
    """
    eq = coexistence_equilibrium(p)
    dd = p.d if d is None else d
    return np.array([[dd + p.d12 * eq.v, p.d12 * eq.u],
                     [p.d21 * eq.v, dd + p.d21 * eq.u]])


def reaction_terms(u: float, v: float, p: ModelParams) -> tuple[float, float]:
    """Kinetic right-hand sides ((r1-a1 u-b1 v)u, (r2-b2 u-a2 v)v)."""
    return ((p.r1 - p.a1 * u - p.b1 * v) * u,
            (p.r2 - p.b2 * u - p.a2 * v) * v)
