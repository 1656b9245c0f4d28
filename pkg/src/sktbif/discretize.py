"""Finite-difference discretisation of the stationary system and a Newton solver.

The stationary problem is discretised on a uniform grid over (0, ell) with
three-point Laplacians applied to the nodal flux arrays and reflection
ghost nodes for the zero-flux boundary, which keeps constants exactly
stationary.  Unknowns are interleaved (u_0, v_0, u_1, v_1, ...) so the
Jacobian is banded with three sub/super-diagonals.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NonconvergenceError, SingularJacobianError
from .kernels import BANDWIDTH, band_kernel, band_to_dense, residual_kernel
from .model import ModelParams

#: Step-norm blowup factor treated as evidence of a singular Jacobian.
SINGULAR_STEP_FACTOR = 1e8


@dataclass(frozen=True)
class Grid:
    """Uniform grid with n nodes on [0, ell]; n odd keeps the midpoint a node."""

    n: int
    ell: float = 1.0

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("grid needs at least 3 nodes")

    @property
    def h(self) -> float:
        return self.ell / (self.n - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(0.0, self.ell, self.n)

    def laplacian_eigenvalue(self, k: int) -> float:
        """Discrete Neumann eigenvalue (2/h^2)(1 - cos(k pi/(n-1)))."""
        return 2.0 / self.h ** 2 * (1.0 - np.cos(k * np.pi / (self.n - 1)))


class StateVector:
    """Nodal (u, v) fields."""

    __slots__ = ("u", "v")

    def __init__(self, u: np.ndarray, v: np.ndarray):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise ValueError("u and v must be 1-d arrays of equal length")
        self.u = u
        self.v = v

    @property
    def n(self) -> int:
        return self.u.shape[0]

    def copy(self) -> "StateVector":
        return StateVector(self.u.copy(), self.v.copy())

    def pack(self) -> np.ndarray:
        y = np.empty(2 * self.n)
        y[0::2] = self.u
        y[1::2] = self.v
        return y

    @classmethod
    def unpack(cls, y: np.ndarray) -> "StateVector":
        return cls(y[0::2].copy(), y[1::2].copy())

    @classmethod
    def constant(cls, u: float, v: float, g: Grid) -> "StateVector":
        return cls(np.full(g.n, float(u)), np.full(g.n, float(v)))

    def mirrored(self) -> "StateVector":
        """Reflection x -> ell - x (node j -> n-1-j)."""
        return StateVector(self.u[::-1].copy(), self.v[::-1].copy())

    def __repr__(self):
        return f"StateVector(n={self.n})"


def _kernel_args(p: ModelParams, g: Grid):
    return (g.h, p.d, p.d11, p.d12, p.d21, p.d22,
            p.r1, p.a1, p.b1, p.r2, p.a2, p.b2)


def residual(s: StateVector, p: ModelParams, g: Grid) -> np.ndarray:
    """Stationary residual, interleaved (u-row, v-row per node)."""
    return residual_kernel(s.u, s.v, *_kernel_args(p, g))


def jacobian_banded(s: StateVector, p: ModelParams, g: Grid) -> np.ndarray:
    """Exact Jacobian of the residual in LAPACK band storage (kl = ku = 3)."""
    return band_kernel(s.u, s.v, *_kernel_args(p, g))


def jacobian_dense(s: StateVector, p: ModelParams, g: Grid) -> np.ndarray:
    """Dense 2n x 2n Jacobian (for eigenvalue computations)."""
    return band_to_dense(jacobian_banded(s, p, g))


def residual_d_derivative(s: StateVector, p: ModelParams, g: Grid) -> np.ndarray:
    """Derivative of the residual with respect to the diffusion d.

    d enters the fluxes linearly with unit coefficient, so the derivative
    is the Laplacian of the raw (u, v) fields.
    """
    n = g.n
    ih2 = 1.0 / g.h ** 2
    out = np.empty(2 * n)
    for arr, off in ((s.u, 0), (s.v, 1)):
        lap = np.empty(n)
        lap[1:-1] = (arr[:-2] - 2.0 * arr[1:-1] + arr[2:]) * ih2
        lap[0] = 2.0 * (arr[1] - arr[0]) * ih2
        lap[-1] = 2.0 * (arr[-2] - arr[-1]) * ih2
        out[off::2] = lap
    return out


def solve_banded(ab: np.ndarray, rhs: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """Banded solve with singularity detection.

    Raises SingularJacobianError when LAPACK reports a zero pivot, the
    solution is non-finite, or the step norm explodes relative to `scale`.
    """
    try:
        step = scipy.linalg.solve_banded((BANDWIDTH, BANDWIDTH), ab, rhs)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise SingularJacobianError(str(exc)) from exc
    if not np.all(np.isfinite(step)) or \
            np.abs(step).max() > SINGULAR_STEP_FACTOR * max(1.0, scale):
        raise SingularJacobianError(
            f"linear solve produced step of norm {np.abs(step).max():.3e}")
    return step


@dataclass
class NewtonSettings:
    tol: float = 1e-10
    max_iter: int = 25


@dataclass
class NewtonInfo:
    iterations: int = 0
    residual_norms: list = field(default_factory=list)


def newton_solve(s0: StateVector, p: ModelParams, g: Grid,
                 settings: NewtonSettings | None = None,
                 info: NewtonInfo | None = None) -> StateVector:
    """Newton iteration for the stationary problem at fixed parameters.

    Converges when ||residual||_inf < settings.tol; raises
    NonconvergenceError with the final residual otherwise.
    """
    settings = settings or NewtonSettings()
    y = s0.pack()
    for it in range(settings.max_iter + 1):
        s = StateVector.unpack(y)
        r = residual(s, p, g)
        rnorm = float(np.abs(r).max())
        if info is not None:
            info.residual_norms.append(rnorm)
            info.iterations = it
        if rnorm < settings.tol:
            return s
        if it == settings.max_iter:
            break
        ab = jacobian_banded(s, p, g)
        step = solve_banded(ab, -r, scale=float(np.abs(y).max()))
        y = y + step
    raise NonconvergenceError(
        f"Newton stalled at ||r||={rnorm:.3e} after {settings.max_iter} iterations",
        residual=rnorm, iterations=settings.max_iter)


def measures(s: StateVector, g: Grid) -> dict:
    """Scalar diagnostics of a state: v(0), L2 norms, min/max of both fields."""
    w = np.full(g.n, g.h)
    w[0] = w[-1] = 0.5 * g.h
    return {
        "v0": float(s.v[0]),
        "u_l2": float(np.sqrt(np.sum(w * s.u ** 2))),
        "v_l2": float(np.sqrt(np.sum(w * s.v ** 2))),
        "u_min": float(s.u.min()),
        "u_max": float(s.u.max()),
        "v_min": float(s.v.min()),
        "v_max": float(s.v.max()),
    }
