"""Stuart-Landau classification of pitchforks on the homogeneous branch.

At a critical mode the amplitude A of the pattern obeys
dA/dT = sigma*A - L*A^3 with sigma = -kc^2 * d2 (d2 the slow deviation of
the diffusion from its critical value).  L > 0 means the pitchfork is
supercritical (stable small-amplitude branch on the unstable side of d_c),
L < 0 subcritical.  L is assembled from the kernel vector rho, the adjoint
kernel psi and two second-order corrections w20, w22.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateKernelError, ResonanceError, SingularDenominatorError
from .model import TAU_REG, ModelParams, diffusion_matrix, linearize
from .stability import Mode, critical_d, mode, neutral_curve_d21

#: |L| below this is classified marginal.
TAU_L = 1e-8
#: Near-resonance guard: |det(K - 4 lam D)| below this multiple of ||K||
#: flags the result unreliable (approaching a doubly degenerate point).
NEAR_RESONANCE_FACTOR = 1e-6


@dataclass(frozen=True)
class CriticalMode:
    """Kernel data of the marginal mode at its critical diffusion.

    rho spans ker(K - lam*D(d_c)); psi spans the kernel of the transpose.
    Both are normalised to first component 1.
    """

    k: int
    kc: float
    lam: float
    d_c: float
    rho: np.ndarray
    psi: np.ndarray


@dataclass(frozen=True)
class SecondOrderCorrections:
    """Solutions w2i of (K - i^2 lam D) w2i = -(1/4) M_i(rho, rho), i = 0, 2."""

    w20: np.ndarray
    w22: np.ndarray


@dataclass(frozen=True)
class LandauResult:
    """Cubic coefficient L, the sigma slope and the pitchfork verdict.

    sigma_slope = -kc^2, so sigma = sigma_slope * d2 is positive below d_c.
    g3 is the third-harmonic forcing projection (diagnostic only; it does
    not enter L).  near_resonant marks results inside the guard band around
    a doubly degenerate point, where L is numerically unreliable.
    """

    sigma_slope: float
    L: float
    pitchfork: str  # supercritical | subcritical | marginal
    near_resonant: bool
    g3: np.ndarray


def reaction_bilinear(x, y, p: ModelParams) -> np.ndarray:
    """Symmetric bilinear form of the quadratic kinetics.

    Component u: -2 a1 x_u y_u - b1 (x_u y_v + x_v y_u); component v by
    symmetry with a2, b2.
    """
    cross = x[0] * y[1] + x[1] * y[0]
    return np.array([-2.0 * p.a1 * x[0] * y[0] - p.b1 * cross,
                     -2.0 * p.a2 * x[1] * y[1] - p.b2 * cross])


def diffusion_bilinear(x, y, p: ModelParams) -> np.ndarray:
    """Symmetric bilinear form of the quadratic cross-diffusion fluxes."""
    cross = x[0] * y[1] + x[1] * y[0]
    return np.array([p.d12 * cross, p.d21 * cross])


def mode_interaction(i: int, x, y, p: ModelParams, kc: float) -> np.ndarray:
    """Harmonic-i interaction: reaction part minus i^2 kc^2 diffusion part."""
    return reaction_bilinear(x, y, p) - (i * i) * kc * kc * diffusion_bilinear(x, y, p)


def _kernel_component(num_a: float, num_b: float, den_a: float, den_b: float,
                      scale: float, what: str) -> float:
    # Prefer the second-row formula; fall back to the first row when its
    # denominator degenerates.
    if abs(den_a) >= TAU_REG * scale:
        return num_a / den_a
    if abs(den_b) >= TAU_REG * scale:
        return num_b / den_b
    raise DegenerateKernelError(f"both rows degenerate computing {what}")


def kernel_vectors(p: ModelParams, m: Mode, d_c: float) -> CriticalMode:
    """Kernel and adjoint-kernel vectors of K - lam*D at the critical diffusion.

    rho = (1, (K21 - lam D21)/(lam D22 - K22)), psi likewise with K12/D12;
    both are validated against the defining residual.
    """
    lin = linearize(p)
    D = diffusion_matrix(p, d=d_c)
    lam = m.lam
    A = lin.K - lam * D
    scale = max(np.abs(A).max(), 1.0)
    # rho from row 2 of A, fallback row 1; psi from row 2 of A^T, fallback row 1.
    M = _kernel_component(A[1, 0], -A[0, 0], -A[1, 1], A[0, 1], scale, "rho")
    Mstar = _kernel_component(A[0, 1], -A[0, 0], -A[1, 1], A[1, 0], scale, "psi")
    rho = np.array([1.0, M])
    psi = np.array([1.0, Mstar])
    kc = m.k * math.pi / p.ell
    return CriticalMode(k=m.k, kc=kc, lam=lam, d_c=d_c, rho=rho, psi=psi)


def second_order(cm: CriticalMode, p: ModelParams) -> SecondOrderCorrections:
    """Second-order corrections w20 (mean shift) and w22 (second harmonic).

    Raises
    ------
    ResonanceError
        When K - 4*lam*D is singular: the doubled mode is itself critical
        (doubly degenerate point), and the cubic truncation is invalid.
    """
    lin = linearize(p)
    D = diffusion_matrix(p, d=cm.d_c)
    rhs0 = -0.25 * mode_interaction(0, cm.rho, cm.rho, p, cm.kc)
    rhs2 = -0.25 * mode_interaction(2, cm.rho, cm.rho, p, cm.kc)
    A2 = lin.K - 4.0 * cm.lam * D
    det2 = float(np.linalg.det(A2))
    if abs(det2) < TAU_REG * max(np.abs(A2).max() ** 2, 1.0):
        raise ResonanceError(
            f"K - 4*lam*D is singular (det={det2}); doubled mode resonant")
    w20 = np.linalg.solve(lin.K, rhs0)
    w22 = np.linalg.solve(A2, rhs2)
    return SecondOrderCorrections(w20=w20, w22=w22)


def is_near_resonant(cm: CriticalMode, p: ModelParams) -> bool:
    """Inside the guard band |det(K - 4 lam D)| < 1e-6 ||K|| around a DDP."""
    lin = linearize(p)
    D = diffusion_matrix(p, d=cm.d_c)
    det2 = float(np.linalg.det(lin.K - 4.0 * cm.lam * D))
    return abs(det2) < NEAR_RESONANCE_FACTOR * float(np.linalg.norm(lin.K))


def landau_coefficients(cm: CriticalMode, p: ModelParams) -> LandauResult:
    """Assemble L from the cubic forcing projection and classify the pitchfork.

    G1_3 = -M_1(rho, w20) - (1/2) M_1(rho, w22) and
    L = <G1_3, psi> / <rho, psi> with the plain 2-vector dot product (the
    common spatial integral cancels in the ratio).
    """
    so = second_order(cm, p)
    g13 = (-mode_interaction(1, cm.rho, so.w20, p, cm.kc)
           - 0.5 * mode_interaction(1, cm.rho, so.w22, p, cm.kc))
    g3 = -0.5 * mode_interaction(3, cm.rho, so.w22, p, cm.kc)
    den = float(np.dot(cm.rho, cm.psi))
    if abs(den) < TAU_REG * max(1.0, float(np.abs(cm.rho).max() * np.abs(cm.psi).max())):
        raise SingularDenominatorError("rho and psi are numerically orthogonal")
    L = float(np.dot(g13, cm.psi)) / den
    if L > TAU_L:
        kind = "supercritical"
    elif L < -TAU_L:
        kind = "subcritical"
    else:
        kind = "marginal"
    return LandauResult(sigma_slope=-cm.kc ** 2, L=L, pitchfork=kind,
                        near_resonant=is_near_resonant(cm, p), g3=g3)


def landau_at(p: ModelParams, k: int) -> LandauResult | None:
    """Convenience: critical diffusion for mode k, then the Landau result.

    Returns None when mode k has no bifurcation point (Cic >= 0).
    """
    cv = critical_d(p, mode(k, p.ell))
    if cv is None:
        return None
    cm = kernel_vectors(p, cv.mode, cv.d_c)
    return landau_coefficients(cm, p)


@dataclass(frozen=True)
class SignMapCell:
    """One cell of a sign map: coordinates, critical data and the verdict flag."""

    coords: tuple[float, float]
    k: int
    d_c: float
    L: float
    sign: int
    flag: str  # ok | absent | near-resonant | error


def _classify_cell(coords, k, p_cell: ModelParams, d_c: float) -> SignMapCell:
    try:
        cm = kernel_vectors(p_cell, mode(k, p_cell.ell), d_c)
        res = landau_coefficients(cm, p_cell)
    except ResonanceError:
        return SignMapCell(coords, k, d_c, math.nan, 0, "near-resonant")
    except Exception:
        return SignMapCell(coords, k, d_c, math.nan, 0, "error")
    flag = "near-resonant" if res.near_resonant else "ok"
    return SignMapCell(coords, k, d_c, res.L, int(np.sign(res.L)), flag)


def sign_map_d_d21(p: ModelParams, k: int, d_values, threads: int = 1) -> list[SignMapCell]:
    """Sign of L along the neutral curve d21 = d21(d) at fixed d12.

    Each admissible d gives a point (d, d21) on the mode-k neutral surface
    with d_c = d; inadmissible points (asymptote or d21 < 0) are absent.
    """
    m = mode(k, p.ell)

    def cell(d):
        d21 = neutral_curve_d21(p, d, m)
        if d21 is None or d21 < 0.0:
            return SignMapCell((d, math.nan), k, math.nan, math.nan, 0, "absent")
        p_cell = p.with_(d21=d21, d=d)
        return _classify_cell((d, d21), k, p_cell, d)

    from .util import indexed_map
    return indexed_map(cell, [float(d) for d in d_values], threads)


def sign_map_d12_d21(p: ModelParams, k: int, d12_values, d21_values,
                     threads: int = 1) -> list[SignMapCell]:
    """Sign of L over a (d12, d21) grid; d_c is recomputed per cell.

    Cells where mode k has no bifurcation point are absent.  Ordering is
    row-major in (d12, d21) regardless of execution order.
    """
    m = mode(k, p.ell)

    def cell(coords):
        d12, d21 = coords
        p_cell = p.with_(d12=d12, d21=d21)
        cv = critical_d(p_cell, m)
        if cv is None:
            return SignMapCell(coords, k, math.nan, math.nan, 0, "absent")
        return _classify_cell(coords, k, p_cell.with_(d=cv.d_c), cv.d_c)

    grid = [(float(x), float(y)) for x in d12_values for y in d21_values]
    from .util import indexed_map
    return indexed_map(cell, grid, threads)
