"""Hot numeric kernels: residual and banded-Jacobian assembly.

These run inside every Newton iteration of the continuation engine and the
implicit time stepper, so they carry numba-compiled versions with a pure
numpy fallback.  Selection: numba is used when importable unless the
environment variable SKTBIF_DISABLE_NUMBA is set to a non-empty value
other than "0".

State layout is interleaved, y[2j] = u_j and y[2j+1] = v_j, which makes the
Jacobian banded with three sub- and super-diagonals.  The Laplacian uses
the standard three-point stencil with reflection (ghost-node) closure, so
constants are exactly stationary.

Band storage follows LAPACK: ab[ku + i - j, j] = A[i, j] with kl = ku = 3.
"""

from __future__ import annotations

import os

import numpy as np

#: Number of sub/super diagonals of the interleaved Jacobian.
BANDWIDTH = 3


def _residual_loops(u, v, h, d, d11, d12, d21, d22, r1, a1, b1, r2, a2, b2):
    n = u.shape[0]
    res = np.empty(2 * n)
    phi_u = np.empty(n)
    phi_v = np.empty(n)
    for j in range(n):
        phi_u[j] = (d + d11 * u[j] + d12 * v[j]) * u[j]
        phi_v[j] = (d + d22 * v[j] + d21 * u[j]) * v[j]
    ih2 = 1.0 / (h * h)
    for j in range(n):
        if j == 0:
            lap_u = 2.0 * (phi_u[1] - phi_u[0]) * ih2
            lap_v = 2.0 * (phi_v[1] - phi_v[0]) * ih2
        elif j == n - 1:
            lap_u = 2.0 * (phi_u[n - 2] - phi_u[n - 1]) * ih2
            lap_v = 2.0 * (phi_v[n - 2] - phi_v[n - 1]) * ih2
        else:
            lap_u = (phi_u[j - 1] - 2.0 * phi_u[j] + phi_u[j + 1]) * ih2
            lap_v = (phi_v[j - 1] - 2.0 * phi_v[j] + phi_v[j + 1]) * ih2
        res[2 * j] = lap_u + (r1 - a1 * u[j] - b1 * v[j]) * u[j]
        res[2 * j + 1] = lap_v + (r2 - b2 * u[j] - a2 * v[j]) * v[j]
    return res


def _residual_numpy(u, v, h, d, d11, d12, d21, d22, r1, a1, b1, r2, a2, b2):
    phi_u = (d + d11 * u + d12 * v) * u
    phi_v = (d + d22 * v + d21 * u) * v
    ih2 = 1.0 / (h * h)
    lap_u = np.empty_like(u)
    lap_v = np.empty_like(v)
    lap_u[1:-1] = (phi_u[:-2] - 2.0 * phi_u[1:-1] + phi_u[2:]) * ih2
    lap_v[1:-1] = (phi_v[:-2] - 2.0 * phi_v[1:-1] + phi_v[2:]) * ih2
    lap_u[0] = 2.0 * (phi_u[1] - phi_u[0]) * ih2
    lap_v[0] = 2.0 * (phi_v[1] - phi_v[0]) * ih2
    lap_u[-1] = 2.0 * (phi_u[-2] - phi_u[-1]) * ih2
    lap_v[-1] = 2.0 * (phi_v[-2] - phi_v[-1]) * ih2
    res = np.empty(2 * u.shape[0])
    res[0::2] = lap_u + (r1 - a1 * u - b1 * v) * u
    res[1::2] = lap_v + (r2 - b2 * u - a2 * v) * v
    return res


def _band_loops(u, v, h, d, d11, d12, d21, d22, r1, a1, b1, r2, a2, b2):
    n = u.shape[0]
    ku = 3
    ab = np.zeros((7, 2 * n))
    ih2 = 1.0 / (h * h)
    # flux derivatives at every node
    pu = np.empty(n)
    qu = np.empty(n)
    pv = np.empty(n)
    qv = np.empty(n)
    for j in range(n):
        pu[j] = d + 2.0 * d11 * u[j] + d12 * v[j]
        qu[j] = d12 * u[j]
        pv[j] = d + 2.0 * d22 * v[j] + d21 * u[j]
        qv[j] = d21 * v[j]
    for j in range(n):
        # Laplacian stencil weights (times 1/h^2) for columns j-1, j, j+1
        for t in range(3):
            m = j - 1 + t
            if m < 0 or m >= n:
                continue
            if j == 0:
                w = -2.0 if m == 0 else 2.0
            elif j == n - 1:
                w = -2.0 if m == n - 1 else 2.0
            else:
                w = -2.0 if m == j else 1.0
            w *= ih2
            ru = 2 * j
            rv = 2 * j + 1
            cu = 2 * m
            cv = 2 * m + 1
            ab[ku + ru - cu, cu] += w * pu[m]
            ab[ku + ru - cv, cv] += w * qu[m]
            ab[ku + rv - cu, cu] += w * qv[m]
            ab[ku + rv - cv, cv] += w * pv[m]
        # reaction derivatives (diagonal blocks)
        ru = 2 * j
        rv = 2 * j + 1
        ab[ku, ru] += r1 - 2.0 * a1 * u[j] - b1 * v[j]
        ab[ku + ru - rv, rv] += -b1 * u[j]
        ab[ku + rv - ru, ru] += -b2 * v[j]
        ab[ku, rv] += r2 - b2 * u[j] - 2.0 * a2 * v[j]
    return ab


def _band_numpy(u, v, h, d, d11, d12, d21, d22, r1, a1, b1, r2, a2, b2):
    n = u.shape[0]
    ku = 3
    ab = np.zeros((7, 2 * n))
    ih2 = 1.0 / (h * h)
    pu = d + 2.0 * d11 * u + d12 * v
    qu = d12 * u
    pv = d + 2.0 * d22 * v + d21 * u
    qv = d21 * v

    # Laplacian column weights: contribution of column node m to row node j.
    # diag (m = j): -2/h^2 everywhere; off-diagonals 1/h^2 except the two
    # boundary rows where the single neighbour carries 2/h^2.
    wdiag = np.full(n, -2.0 * ih2)
    wsub = np.full(n - 1, ih2)   # weight of column m in row m+1
    wsup = np.full(n - 1, ih2)   # weight of column m in row m-1
    wsup[0] = 2.0 * ih2          # row 0 gets weight 2 from column 1
    wsub[-1] = 2.0 * ih2         # row n-1 gets weight 2 from column n-2

    # ab row index = ku + (row - col); rows/cols interleaved (2j, 2j+1).
    # diagonal block at node j (row u=2j, v=2j+1; col u=2j, v=2j+1)
    ab[ku, 0::2] = wdiag * pu + (r1 - 2.0 * a1 * u - b1 * v)
    ab[ku, 1::2] = wdiag * pv + (r2 - b2 * u - 2.0 * a2 * v)
    ab[ku - 1, 1::2] = wdiag * qu - b1 * u          # row 2j, col 2j+1
    ab[ku + 1, 0::2] = wdiag * qv - b2 * v          # row 2j+1, col 2j
    # sub-diagonal block: row node j = m+1, column node m (cols 0..n-2)
    ab[ku + 2, 0:2 * n - 2:2] = wsub * pu[:-1]      # row 2j,   col 2m
    ab[ku + 2, 1:2 * n - 2:2] = wsub * pv[:-1]      # row 2j+1, col 2m+1
    ab[ku + 1, 1:2 * n - 2:2] = wsub * qu[:-1]      # row 2j,   col 2m+1
    ab[ku + 3, 0:2 * n - 2:2] = wsub * qv[:-1]      # row 2j+1, col 2m
    # super-diagonal block: row node j = m-1, column node m (cols 1..n-1)
    ab[ku - 2, 2::2] = wsup * pu[1:]                # row 2j,   col 2m
    ab[ku - 2, 3::2] = wsup * pv[1:]                # row 2j+1, col 2m+1
    ab[ku - 3, 3::2] = wsup * qu[1:]                # row 2j,   col 2m+1
    ab[ku - 1, 2::2] = wsup * qv[1:]                # row 2j+1, col 2m
    return ab


def _use_numba() -> bool:
    flag = os.environ.get("SKTBIF_DISABLE_NUMBA", "0")
    return flag in ("", "0")


NUMBA_ENABLED = False
if _use_numba():
    try:
        from numba import njit

        residual_kernel = njit(cache=True)(_residual_loops)
        band_kernel = njit(cache=True)(_band_loops)
        NUMBA_ENABLED = True
    except ImportError:
        residual_kernel = _residual_numpy
        band_kernel = _band_numpy
else:
    residual_kernel = _residual_numpy
    band_kernel = _band_numpy


def band_to_dense(ab: np.ndarray) -> np.ndarray:
    """Scatter LAPACK band storage (kl = ku = 3) into a dense matrix."""
    ku = 3
    m = ab.shape[1]
    A = np.zeros((m, m))
    for off in range(-3, 4):
        diag = np.arange(max(0, -off), min(m, m - off))
        A[diag + off, diag] = ab[ku + off, diag]
    return A
