"""Mode-by-mode linear stability of the coexistence state.

For each Fourier mode k of the Neumann Laplacian the characteristic matrix
is M_k = K - lambda_k * D.  Its determinant is a quadratic P_k in the
standard diffusion d; the mode destabilises when P_k < 0, so the critical
diffusion is the positive root of P_k.  Neutral stability curves are the
level sets P_k = 0 solved for d12 or d21, and a doubly degenerate point
(DDP) is a crossing of two such curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoCrossingError
from .model import (TAU_REG, ModelParams, coexistence_equilibrium,
                    diffusion_matrix, linearize)

#: Default d-window and sample count for curve sweeps and DDP scans.
DEFAULT_D_WINDOW = (1e-4, 0.1)
DEFAULT_SWEEP_SAMPLES = 2000
DEFAULT_MODES = (1, 2, 3, 4, 5, 6)


@dataclass(frozen=True)
class Mode:
    """A Laplacian eigenmode: index k and eigenvalue lam = (k*pi/ell)^2."""

    k: int
    lam: float


@dataclass(frozen=True)
class ModeQuadratic:
    """Coefficients of P_k(d) = A*d^2 + B*d + C."""

    A: float
    B: float
    C: float

    def __call__(self, d: float) -> float:
        return (self.A * d + self.B) * d + self.C


@dataclass(frozen=True)
class CriticalValue:
    """Positive root of P_k: the diffusion level where mode k turns neutral."""

    mode: Mode
    d_c: float


@dataclass(frozen=True)
class NeutralCurveSample:
    """One sample of a neutral stability curve.

    `value` is the d12 (or d21) coordinate; invalid samples (vertical
    asymptote or negative denominator blow-up) carry value=nan, valid=False.
    """

    d: float
    value: float
    k: int
    plane: str  # "d12" | "d21"
    valid: bool


@dataclass(frozen=True)
class DoublyDegeneratePoint:
    """Crossing of two neutral stability curves: both modes marginal."""

    d_hat: float
    value_hat: float
    modes: tuple[int, int]
    plane: str
    residuals: tuple[float, float]


def laplacian_eigenvalue(k: int, ell: float) -> float:
    """Eigenvalue (k*pi/ell)^2 of -Lap with Neumann conditions on (0, ell)."""
    if k < 0:
        raise ValueError("mode index must be >= 0")
    return (k * math.pi / ell) ** 2


def mode(k: int, ell: float) -> Mode:
    return Mode(k, laplacian_eigenvalue(k, ell))


def char_matrix(p: ModelParams, m: Mode, d: float | None = None) -> np.ndarray:
    """Characteristic matrix M_k = K - lambda_k * D of the k-th mode."""
    lin = linearize(p)
    D = diffusion_matrix(p, d=d)
    return lin.K - m.lam * D


def mode_quadratic(p: ModelParams, m: Mode) -> ModeQuadratic:
    """Coefficients of det M_k as a quadratic in the diffusion d.

    A = lam^2,
    B = (d12*v* + d21*u*)*lam^2 - trK*lam,
    C = -(d12*alpha + d21*beta)*lam + detK.
    """
    p.require_no_self_diffusion()
    eq = coexistence_equilibrium(p)
    lin = linearize(p)
    lam = m.lam
    A = lam * lam
    B = (p.d12 * eq.v + p.d21 * eq.u) * lam * lam - lin.trK * lam
    C = -(p.d12 * lin.alpha + p.d21 * lin.beta) * lam + lin.detK
    return ModeQuadratic(A, B, C)


def critical_d(p: ModelParams, m: Mode) -> CriticalValue | None:
    """Critical diffusion for mode k, or None when the mode never destabilises.

    A bifurcation for mode k >= 1 exists iff C < 0 (A >= 0 and B > 0 in the
    weak regime), in which case P_k has exactly one positive root
    (-B + sqrt(B^2 - 4AC)) / (2A).
    """
    if m.k == 0:
        return None
    q = mode_quadratic(p, m)
    if q.C >= 0.0:
        return None
    disc = q.B * q.B - 4.0 * q.A * q.C
    # C < 0 and A > 0 make the discriminant positive; guard anyway.
    if disc < 0.0:
        return None
    d_c = (-q.B + math.sqrt(disc)) / (2.0 * q.A)
    return CriticalValue(m, d_c)


def _neutral_value(num: float, den: float, den_scale: float) -> float | None:
    if abs(den) < TAU_REG * max(den_scale, 1e-300):
        return None
    return num / den


def neutral_curve_d12(p: ModelParams, d: float, m: Mode) -> float | None:
    """d12 making mode k neutral at diffusion d (level set P_k = 0).

    Returns None at the vertical asymptote alpha*lam = d*v**lam^2.
    """
    p.require_no_self_diffusion()
    eq = coexistence_equilibrium(p)
    lin = linearize(p)
    lam = m.lam
    num = (lam * lam * d * d + p.d21 * d * eq.u * lam * lam
           - d * lam * lin.trK - p.d21 * lin.beta * lam + lin.detK)
    den = lin.alpha * lam - d * eq.v * lam * lam
    return _neutral_value(num, den, max(abs(lin.alpha * lam), abs(d * eq.v * lam * lam)))


def neutral_curve_d21(p: ModelParams, d: float, m: Mode) -> float | None:
    """d21 making mode k neutral at diffusion d; None at the asymptote."""
    p.require_no_self_diffusion()
    eq = coexistence_equilibrium(p)
    lin = linearize(p)
    lam = m.lam
    num = (lam * lam * d * d + p.d12 * eq.v * lam * lam * d
           - d * lin.trK * lam - p.d12 * lin.alpha * lam + lin.detK)
    den = lin.beta * lam - d * eq.u * lam * lam
    return _neutral_value(num, den, max(abs(lin.beta * lam), abs(d * eq.u * lam * lam)))


_CURVES = {"d12": neutral_curve_d12, "d21": neutral_curve_d21}


def _curve_fn(plane: str):
    try:
        return _CURVES[plane]
    except KeyError:
        raise ValueError(f"plane must be 'd12' or 'd21', got {plane!r}") from None


def scaled_residual(p: ModelParams, m: Mode, d: float, value: float, plane: str) -> float:
    """|P_k| at a curve sample, scaled by max(|A d^2|, |C|) of that sample."""
    q = mode_quadratic(p.with_(**{plane: value}), m)
    scale = max(abs(q.A * d * d), abs(q.C), 1e-300)
    return abs(q(d)) / scale


def sweep_neutral_curve(p: ModelParams, m: Mode, plane: str = "d12",
                        d_window: tuple[float, float] = DEFAULT_D_WINDOW,
                        samples: int = DEFAULT_SWEEP_SAMPLES) -> list[NeutralCurveSample]:
    """Sample one neutral curve on a log-spaced d grid; asymptotes become gaps."""
    fn = _curve_fn(plane)
    ds = np.geomspace(d_window[0], d_window[1], samples)
    out = []
    for d in ds:
        val = fn(p, float(d), m)
        if val is None:
            out.append(NeutralCurveSample(float(d), math.nan, m.k, plane, False))
        else:
            out.append(NeutralCurveSample(float(d), float(val), m.k, plane, True))
    return out


def sweep_neutral_curves(p: ModelParams, modes=DEFAULT_MODES, plane: str = "d12",
                         d_window=DEFAULT_D_WINDOW,
                         samples: int = DEFAULT_SWEEP_SAMPLES):
    """Sweep several modes; returns {k: [NeutralCurveSample, ...]}."""
    return {k: sweep_neutral_curve(p, mode(k, p.ell), plane, d_window, samples)
            for k in modes}


def find_ddp(p: ModelParams, modes: tuple[int, int] = (1, 2), plane: str = "d12",
             d_window: tuple[float, float] = DEFAULT_D_WINDOW,
             samples: int = DEFAULT_SWEEP_SAMPLES,
             residual_tol: float = 1e-8) -> DoublyDegeneratePoint:
    """Locate the doubly degenerate point where two neutral curves cross.

    Brackets sign changes of the curve difference on a log grid, refines by
    bisection to 1e-10 in d, and validates both curve residuals; crossings
    that fail validation (asymptote artifacts) are discarded.

    Raises
    ------
    NoCrossingError
        When no validated crossing exists in the window.
    """
    j, k = modes
    if j == k:
        raise NoCrossingError(f"modes {modes} are identical; curves coincide")
    fn = _curve_fn(plane)
    mj, mk = mode(j, p.ell), mode(k, p.ell)

    def diff(d: float) -> float | None:
        a = fn(p, d, mj)
        b = fn(p, d, mk)
        if a is None or b is None:
            return None
        return a - b

    ds = np.geomspace(d_window[0], d_window[1], samples)
    vals = [diff(float(d)) for d in ds]
    for i in range(len(ds) - 1):
        fa, fb = vals[i], vals[i + 1]
        if fa is None or fb is None or fa * fb >= 0.0:
            continue
        lo, hi = float(ds[i]), float(ds[i + 1])
        flo = fa
        while hi - lo > 1e-10:
            mid = 0.5 * (lo + hi)
            fm = diff(mid)
            if fm is None:
                break
            if flo * fm <= 0.0:
                hi = mid
            else:
                lo, flo = mid, fm
        d_hat = 0.5 * (lo + hi)
        value_hat = fn(p, d_hat, mj)
        if value_hat is None:
            continue
        rj = scaled_residual(p, mj, d_hat, value_hat, plane)
        rk = scaled_residual(p, mk, d_hat, value_hat, plane)
        if rj < residual_tol and rk < residual_tol:
            return DoublyDegeneratePoint(d_hat, float(value_hat), (j, k), plane, (rj, rk))
    raise NoCrossingError(
        f"no {plane}-plane crossing of modes {modes} in d window {d_window}")
