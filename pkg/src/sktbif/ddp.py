"""Hopf necessity at the doubly degenerate point (DDP).

At the crossing of the mode-1 and mode-2 neutral curves both characteristic
matrices M_1, M_2 are singular.  Transforming the Fourier-mode system with
the matrices T_k whose first column spans ker M_k reduces the dynamics near
the DDP to two center variables (x1, x2); the leading quadratic
coefficients of that reduction are A1 (the x1*x2 coupling in the x1
equation) and B1 (the x1^2 coupling in the x2 equation).  A Hopf
instability of the truncated system requires A1*B1 < 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoCrossingError, SingularDenominatorError
from .model import TAU_REG, ModelParams, diffusion_matrix, linearize
from .stability import (DEFAULT_D_WINDOW, DEFAULT_SWEEP_SAMPLES,
                        DoublyDegeneratePoint, find_ddp, laplacian_eigenvalue)


@dataclass(frozen=True)
class DDPFrame:
    """Characteristic matrices at the DDP and their diagonalising frames.

    T_k has columns (M12, -M11) and (M11, M21) of M_k, so that
    M_k T_k = T_k diag(0, tr M_k) when det M_k = 0.
    """

    ddp: DoublyDegeneratePoint
    M1: np.ndarray
    M2: np.ndarray
    T1: np.ndarray
    T2: np.ndarray
    lam1: float
    lam2: float


@dataclass(frozen=True)
class QuadraticCoeffs:
    """Quadratic couplings of the transformed two-mode system.

    f11/g11 multiply x1*x2 in the (u,v) components of the mode-1 equation;
    f12/g12 multiply x1^2 in the mode-2 equation.
    """

    f11: float
    g11: float
    f12: float
    g12: float


@dataclass(frozen=True)
class HopfNecessity:
    """Center-manifold coefficients A1, B1 and the necessary condition."""

    A1: float
    B1: float
    product: float
    satisfied: bool


def transform_matrix(M: np.ndarray) -> np.ndarray:
    """Frame whose first column spans ker M (valid when det M = 0)."""
    return np.array([[M[0, 1], M[0, 0]],
                     [-M[0, 0], M[1, 0]]])


def ddp_frame(p: ModelParams, d_window=DEFAULT_D_WINDOW,
              samples: int = DEFAULT_SWEEP_SAMPLES) -> DDPFrame:
    """Locate the modes-(1,2) DDP in the d12-plane and build the frames.

    d21 is held at its value in `p`; the returned frame carries M_k and T_k
    evaluated at (d_hat, d12_hat).

    Raises
    ------
    NoCrossingError
        Propagated from the DDP search.
    SingularDenominatorError
        If either T_k is singular.
    """
    ddp = find_ddp(p, (1, 2), "d12", d_window, samples)
    p_hat = p.with_(d=ddp.d_hat, d12=ddp.value_hat)
    lin = linearize(p_hat)
    D = diffusion_matrix(p_hat)
    lam1 = laplacian_eigenvalue(1, p.ell)
    lam2 = laplacian_eigenvalue(2, p.ell)
    M1 = lin.K - lam1 * D
    M2 = lin.K - lam2 * D
    T1 = transform_matrix(M1)
    T2 = transform_matrix(M2)
    for k, T in ((1, T1), (2, T2)):
        det = float(np.linalg.det(T))
        if abs(det) < TAU_REG * max(float(np.abs(T).max()) ** 2, 1e-300):
            raise SingularDenominatorError(f"T{k} singular at the DDP (det={det})")
    return DDPFrame(ddp=ddp, M1=M1, M2=M2, T1=T1, T2=T2, lam1=lam1, lam2=lam2)


def quad_coeffs(frame: DDPFrame, p: ModelParams) -> QuadraticCoeffs:
    """Quadratic couplings from the frame entries.

    d12 is taken at the DDP (the frame's d12_hat); d21 is the value held
    fixed in `p`.
    """
    d12h = frame.ddp.value_hat
    d21h = p.d21
    T1, T2 = frame.T1, frame.T2
    lam1, lam2 = frame.lam1, frame.lam2
    cross12 = T1[0, 0] * T2[1, 0] + T2[0, 0] * T1[1, 0]
    f11 = -2.0 * p.a1 * T1[0, 0] * T2[0, 0] - (d12h * lam1 + p.b1) * cross12
    g11 = -2.0 * p.a2 * T1[1, 0] * T2[1, 0] - (d21h * lam1 + p.b2) * cross12
    f12 = -p.a1 * T1[0, 0] ** 2 - (d12h * lam2 + p.b1) * T1[0, 0] * T1[1, 0]
    g12 = -p.a2 * T1[1, 0] ** 2 - (d21h * lam2 + p.b2) * T1[0, 0] * T1[1, 0]
    return QuadraticCoeffs(f11=f11, g11=g11, f12=f12, g12=g12)


def hopf_necessary(p: ModelParams, d_window=DEFAULT_D_WINDOW,
                   samples: int = DEFAULT_SWEEP_SAMPLES,
                   mixed_frame_b1: bool = False) -> HopfNecessity:
    """Evaluate the Hopf necessary condition A1*B1 < 0 at the DDP.

    A1 = (T1_22 f11 - T1_12 g11) / det T1 projects the mode-1 quadratic
    onto the mode-1 center direction; B1 does the same in the mode-2 frame.
    `mixed_frame_b1` switches B1 to the alternative reading that projects
    with the mode-1 entry T1_12 instead of T2_12 (for comparison only).
    """
    frame = ddp_frame(p, d_window, samples)
    q = quad_coeffs(frame, p)
    T1, T2 = frame.T1, frame.T2
    det1 = float(np.linalg.det(T1))
    det2 = float(np.linalg.det(T2))
    A1 = (T1[1, 1] * q.f11 - T1[0, 1] * q.g11) / det1
    t12 = T1[0, 1] if mixed_frame_b1 else T2[0, 1]
    B1 = (T2[1, 1] * q.f12 - t12 * q.g12) / det2
    product = A1 * B1
    return HopfNecessity(A1=A1, B1=B1, product=product, satisfied=product < 0.0)


@dataclass(frozen=True)
class SweepRow:
    """One entry of a Hopf-necessity sweep over d21."""

    d21: float
    d_hat: float
    d12_hat: float
    A1: float
    B1: float
    product: float
    satisfied: bool
    flag: str  # ok | absent | error


def hopf_necessity_sweep(p: ModelParams, d21_values, d_window=DEFAULT_D_WINDOW,
                         samples: int = DEFAULT_SWEEP_SAMPLES,
                         threads: int = 1) -> list[SweepRow]:
    """Evaluate the necessary condition over a range of d21 values.

    Rows where the DDP leaves the scan window are marked absent; other
    per-cell failures are recorded as errors.  Never aborts the sweep.
    """

    def cell(d21: float) -> SweepRow:
        pp = p.with_(d21=d21)
        try:
            frame = ddp_frame(pp, d_window, samples)
            q = quad_coeffs(frame, pp)
            det1 = float(np.linalg.det(frame.T1))
            det2 = float(np.linalg.det(frame.T2))
            A1 = (frame.T1[1, 1] * q.f11 - frame.T1[0, 1] * q.g11) / det1
            B1 = (frame.T2[1, 1] * q.f12 - frame.T2[0, 1] * q.g12) / det2
            return SweepRow(d21, frame.ddp.d_hat, frame.ddp.value_hat,
                            A1, B1, A1 * B1, A1 * B1 < 0.0, "ok")
        except NoCrossingError:
            return SweepRow(d21, math.nan, math.nan, math.nan, math.nan,
                            math.nan, False, "absent")
        except Exception:
            return SweepRow(d21, math.nan, math.nan, math.nan, math.nan,
                            math.nan, False, "error")

    from .util import indexed_map
    return indexed_map(cell, [float(x) for x in d21_values], threads)


def necessity_threshold(p: ModelParams, lo: float, hi: float,
                        tol: float = 1e-7, d_window=DEFAULT_D_WINDOW) -> float:
    """Bisect the d21 at which the necessary condition changes truth value.

    Requires hopf_necessary to differ between lo and hi.
    """

    def sat(d21: float) -> bool:
        return hopf_necessary(p.with_(d21=d21), d_window).satisfied

    s_lo = sat(lo)
    if s_lo == sat(hi):
        raise ValueError(f"necessary condition does not change over [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if sat(mid) == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
