"""Pseudo-arclength continuation with pitchfork/fold/Hopf detection.

Branches of stationary solutions are traced in the diffusion d by the
standard predictor-corrector scheme on the extended system (residual plus
an arclength constraint), which traverses folds.  The state part of the
arclength metric is weighted by h/ell so step sizes are grid independent.

At every accepted point the eigenvalues of the linearised evolution
operator (the residual Jacobian; the mass matrix is the identity) are
computed; changes in the number of unstable real eigenvalues or unstable
complex pairs between consecutive points are isolated by bisection along
the secant and classified:

* real crossing, branch tangent turning in d  -> fold
* real crossing, kernel transverse to tangent -> pitchfork
* complex pair crossing                       -> hopf
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (NonconvergenceError, SeedNonconvergenceError,
                     SingularJacobianError, StepCollapseError)
from .discretize import (Grid, StateVector, jacobian_banded, jacobian_dense,
                         measures, newton_solve, NewtonSettings, residual,
                         residual_d_derivative)
from .kernels import band_to_dense
from .model import ModelParams


@dataclass
class ContinuationSettings:
    """Tunables of the path follower; defaults are desk-scale choices."""

    ds0: float = 1e-3
    ds_min: float = 1e-6
    ds_max: float = 5e-3
    tol_newton: float = 1e-10
    max_newton: int = 8
    tol_event: float = 1e-8   # bisection width in d
    tau_eig: float = 1e-7     # |Re| below this is marginal
    tau_neg: float = -1e-8    # tolerated undershoot of u, v
    max_steps: int = 500
    d_min: float = 2e-3
    d_max: float = 0.08
    n_store_eigs: int = 8
    max_event_bisections: int = 60
    switch_delta_rel: float = 1e-2
    # d offset of the switch seed, relative to the pitchfork d.  Small keeps
    # the local pattern amplitude near the seed amplitude, so fixed-d Newton
    # lands on the bifurcating branch instead of falling back to the parent.
    switch_offset_rel: float = 1e-4
    fold_alignment: float = 0.5  # |<kernel, tangent>| above this means fold


@dataclass
class EigenData:
    n_real_pos: int
    n_cplx_pos: int
    unstable_count: int
    n_marginal: int
    leading: np.ndarray


def eigen_data(J: np.ndarray, tau_eig: float, n_store: int = 8) -> EigenData:
    ev = scipy.linalg.eigvals(J)
    re = ev.real
    im = ev.imag
    real_mask = im == 0.0
    n_real_pos = int(np.sum(real_mask & (re > tau_eig)))
    n_cplx_pos = int(np.sum((im > 0.0) & (re > tau_eig)))
    n_marginal = int(np.sum(np.abs(re) <= tau_eig))
    unstable = int(np.sum(re > tau_eig))
    order = np.argsort(-re)
    return EigenData(n_real_pos, n_cplx_pos, unstable, n_marginal,
                     leading=ev[order[:n_store]])


@dataclass
class BranchPoint:
    d: float
    state: StateVector
    measures: dict
    unstable_count: int
    n_real_pos: int
    n_cplx_pos: int
    leading: np.ndarray
    tangent_d: float


@dataclass
class BranchPointEvent:
    kind: str            # pitchfork | fold | hopf
    d_at: float
    eigen_info: complex  # crossing eigenvalue (real) or one of the pair
    kernel_vector: StateVector | None
    state_at: StateVector
    segment: int         # event lies between points[segment] and [segment+1]
    diagnostics: dict = field(default_factory=dict)


@dataclass
class Branch:
    id: str
    parent: str          # "homogeneous" or "<branch_id>#<event_index>"
    points: list
    events: list
    stop_reason: str = ""


def stability_summary(s: StateVector, p: ModelParams, g: Grid,
                      tau_eig: float = 1e-7, n_store: int = 8) -> EigenData:
    """Eigenvalue summary of the linearised evolution operator at a state."""
    return eigen_data(jacobian_dense(s, p, g), tau_eig, n_store)


class _Stepper:
    """Corrector machinery for one branch (fixed p except d, fixed grid)."""

    def __init__(self, p: ModelParams, g: Grid, st: ContinuationSettings):
        self.p = p
        self.g = g
        self.st = st
        self.w = g.h / g.ell  # state weight in the arclength metric

    def params_at(self, d: float) -> ModelParams:
        return self.p.with_(d=d)

    def dot(self, y1, d1, y2, d2) -> float:
        return self.w * float(np.dot(y1, y2)) + d1 * d2

    def norm(self, y, d) -> float:
        return float(np.sqrt(self.dot(y, d, y, d)))

    def bordered(self, y: np.ndarray, d: float, t_y: np.ndarray, t_d: float):
        s = StateVector.unpack(y)
        pd = self.params_at(d)
        J = band_to_dense(jacobian_banded(s, pd, self.g))
        Fd = residual_d_derivative(s, pd, self.g)
        m = J.shape[0]
        M = np.empty((m + 1, m + 1))
        M[:m, :m] = J
        M[:m, m] = Fd
        M[m, :m] = self.w * t_y
        M[m, m] = t_d
        return M

    def correct(self, y, d, y_ref, d_ref, t_y, t_d, ds):
        """Newton on [residual; arclength constraint] = 0."""
        for _ in range(self.st.max_newton):
            if d <= 0.0:
                raise NonconvergenceError("corrector left the parameter domain d > 0")
            s = StateVector.unpack(y)
            r = residual(s, self.params_at(d), self.g)
            arc = self.dot(t_y, t_d, y - y_ref, d - d_ref) - ds
            if np.abs(r).max() < self.st.tol_newton and abs(arc) < self.st.tol_newton:
                return y, d
            rhs = np.empty(y.shape[0] + 1)
            rhs[:-1] = -r
            rhs[-1] = -arc
            M = self.bordered(y, d, t_y, t_d)
            try:
                step = np.linalg.solve(M, rhs)
            except np.linalg.LinAlgError as exc:
                raise SingularJacobianError(str(exc)) from exc
            if not np.all(np.isfinite(step)):
                raise SingularJacobianError("non-finite continuation step")
            y = y + step[:-1]
            d = d + step[-1]
        s = StateVector.unpack(y)
        r = residual(s, self.params_at(d), self.g)
        raise NonconvergenceError("corrector stalled", residual=float(np.abs(r).max()))

    def tangent(self, y, d, t_y, t_d):
        """Unit tangent of the branch, oriented along the previous tangent."""
        M = self.bordered(y, d, t_y, t_d)
        rhs = np.zeros(y.shape[0] + 1)
        rhs[-1] = 1.0
        try:
            t = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(str(exc)) from exc
        ty, td = t[:-1], t[-1]
        nrm = self.norm(ty, td)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise SingularJacobianError("tangent solve degenerate")
        return ty / nrm, td / nrm

    def eigs(self, y, d) -> EigenData:
        s = StateVector.unpack(y)
        J = jacobian_dense(s, self.params_at(d), self.g)
        return eigen_data(J, self.st.tau_eig, self.st.n_store_eigs)

    def point(self, y, d, ed: EigenData, t_d: float) -> BranchPoint:
        s = StateVector.unpack(y)
        return BranchPoint(d=float(d), state=s, measures=measures(s, self.g),
                           unstable_count=ed.unstable_count,
                           n_real_pos=ed.n_real_pos, n_cplx_pos=ed.n_cplx_pos,
                           leading=ed.leading, tangent_d=float(t_d))


def _near_zero_real_vector(J: np.ndarray) -> tuple[float, np.ndarray]:
    """Real eigenvalue closest to zero and its eigenvector.

    The eigenvector sign is anchored (first component positive when
    nonzero) so the two pitchfork lobes are labelled deterministically.
    """
    ev, vec = scipy.linalg.eig(J)
    real_idx = np.where(ev.imag == 0.0)[0]
    if real_idx.size == 0:
        idx = int(np.argmin(np.abs(ev.real)))
    else:
        idx = real_idx[int(np.argmin(np.abs(ev.real[real_idx])))]
    v = vec[:, idx].real
    v = v / np.abs(v).max()
    anchor = v[0] if v[0] != 0.0 else v[int(np.argmax(np.abs(v)))]
    if anchor < 0.0:
        v = -v
    return float(ev[idx].real), v


def _crossing_pair(J: np.ndarray) -> complex:
    """Complex eigenvalue (Im > 0) with real part closest to zero."""
    ev = scipy.linalg.eigvals(J)
    cand = ev[ev.imag > 0.0]
    if cand.size == 0:
        return complex(np.min(np.abs(ev.real)))
    return complex(cand[int(np.argmin(np.abs(cand.real)))])


def continue_branch(start: StateVector, p: ModelParams, g: Grid,
                    settings: ContinuationSettings | None = None,
                    direction: int = -1,
                    initial_tangent: tuple[np.ndarray, float] | None = None,
                    branch_id: str = "branch",
                    parent: str = "homogeneous") -> Branch:
    """Trace one branch from a converged start state.

    `direction` sets the initial motion in d (ignored when an explicit
    initial tangent is given, as after branch switching).  The branch stops
    at the d-window boundary, after max_steps, or when the arclength step
    collapses; the reason is recorded on the branch.
    """
    st = settings or ContinuationSettings()
    stepper = _Stepper(p, g, st)

    start = newton_solve(start, p.with_(d=p.d), g,
                         NewtonSettings(st.tol_newton, 25))
    y = start.pack()
    d = p.d

    if initial_tangent is not None:
        t_y, t_d = initial_tangent
        nrm = stepper.norm(t_y, t_d)
        t_y, t_d = t_y / nrm, t_d / nrm
    else:
        t_y = np.zeros_like(y)
        t_d = float(direction)
    # refine the tangent at the start point
    try:
        t_y, t_d = stepper.tangent(y, d, t_y, t_d)
    except SingularJacobianError:
        pass  # keep the seed tangent; the first corrector will sort it out

    ed = stepper.eigs(y, d)
    branch = Branch(id=branch_id, parent=parent,
                    points=[stepper.point(y, d, ed, t_d)], events=[])

    y0, d0 = y.copy(), d
    t_y0, t_d0 = t_y.copy(), t_d
    ds = st.ds0
    steps = 0
    while steps < st.max_steps:
        accepted = False
        while ds >= st.ds_min:
            ds_eff = ds
            if t_d < 0.0:
                # keep the predictor inside d > 0
                ds_cap = 0.9 * d / (-t_d)
                if ds_cap < st.ds_min:
                    branch.stop_reason = "d-window"
                    return branch
                ds_eff = min(ds_eff, ds_cap)
            y_pred = y + ds_eff * t_y
            d_pred = d + ds_eff * t_d
            try:
                y_new, d_new = stepper.correct(y_pred, d_pred, y, d, t_y, t_d, ds_eff)
                accepted = True
                break
            except (NonconvergenceError, SingularJacobianError):
                ds *= 0.5
        if not accepted:
            if len(branch.points) == 1:
                raise StepCollapseError(
                    f"no step accepted from the start point of {branch_id}")
            branch.stop_reason = "step-collapse"
            return branch

        try:
            t_y_new, t_d_new = stepper.tangent(y_new, d_new, t_y, t_d)
        except SingularJacobianError:
            # secant fallback through a near-singular point
            dy, dd = y_new - y, d_new - d
            nrm = stepper.norm(dy, dd)
            t_y_new, t_d_new = dy / nrm, dd / nrm

        ed_new = stepper.eigs(y_new, d_new)
        prev_point = branch.points[-1]
        new_point = stepper.point(y_new, d_new, ed_new, t_d_new)
        _detect_events(branch, stepper, prev_point, new_point,
                       (y, d, t_y, t_d), (y_new, d_new))

        branch.points.append(new_point)
        y, d, t_y, t_d = y_new, d_new, t_y_new, t_d_new
        steps += 1
        if d < st.d_min or d > st.d_max:
            branch.stop_reason = "d-window"
            return branch
        if steps >= 10:
            # closed-loop detection: back at the start, moving the same way
            dist = stepper.norm(y - y0, d - d0)
            if dist < ds_eff and stepper.dot(t_y, t_d, t_y0, t_d0) > 0.7:
                branch.stop_reason = "closed-loop"
                return branch
        ds = min(ds * 1.4, st.ds_max)

    branch.stop_reason = "max-steps"
    return branch


def _detect_events(branch, stepper: _Stepper, p_a: BranchPoint, p_b: BranchPoint,
                   frame_a, end_b):
    """Isolate and classify unstable-count changes between two points.

    The test function is the total number of eigenvalues with Re > tau_eig:
    real/complex conversions away from the axis leave it invariant and are
    ignored, while every actual axis crossing changes it.  frame_a =
    (y_a, d_a, t_y, t_d) carries the tangent of the accepted step;
    bisection re-corrects on the same constraint with scaled arclength.
    """
    if p_a.unstable_count == p_b.unstable_count:
        return
    y_a, d_a, t_y, t_d = frame_a
    y_b, d_b = end_b
    st = stepper.st
    ds_full = stepper.dot(t_y, t_d, y_b - y_a, d_b - d_a)

    cache: dict[float, tuple] = {}

    def data_at(s: float):
        if s not in cache:
            if s <= 0.0:
                y0, d0 = y_a, d_a
            elif s >= 1.0:
                y0, d0 = y_b, d_b
            else:
                y0 = y_a + s * (y_b - y_a)
                d0 = d_a + s * (d_b - d_a)
                y0, d0 = stepper.correct(y0, d0, y_a, d_a, t_y, t_d, s * ds_full)
            cache[s] = (y0, d0, stepper.eigs(y0, d0))
        return cache[s]

    def isolate(s_lo, s_hi, depth=0):
        _, d_lo, ed_lo = data_at(s_lo)
        _, d_hi, ed_hi = data_at(s_hi)
        dc = ed_hi.unstable_count - ed_lo.unstable_count
        if dc == 0:
            return
        if abs(d_hi - d_lo) < st.tol_event or depth >= st.max_event_bisections:
            _classify(branch, stepper, s_lo, s_hi, cache, frame_a)
            return
        s_mid = 0.5 * (s_lo + s_hi)
        try:
            data_at(s_mid)
        except (NonconvergenceError, SingularJacobianError):
            _classify(branch, stepper, s_lo, s_hi, cache, frame_a)
            return
        isolate(s_lo, s_mid, depth + 1)
        isolate(s_mid, s_hi, depth + 1)

    try:
        isolate(0.0, 1.0)
    except (NonconvergenceError, SingularJacobianError):
        branch.events.append(BranchPointEvent(
            kind="pitchfork", d_at=0.5 * (p_a.d + p_b.d), eigen_info=0.0,
            kernel_vector=None, state_at=p_a.state.copy(),
            segment=len(branch.points) - 1,
            diagnostics={"unresolved": True}))


def _classify(branch, stepper: _Stepper, s_lo, s_hi, cache, frame_a):
    """Classify one isolated unstable-count change bracketed by [s_lo, s_hi]."""
    st = stepper.st
    y_lo, d_lo, ed_lo = cache[s_lo]
    y_hi, d_hi, ed_hi = cache[s_hi]
    d_at = 0.5 * (d_lo + d_hi)
    y_at = 0.5 * (y_lo + y_hi)
    s_at = StateVector.unpack(y_at)
    J = jacobian_dense(s_at, stepper.params_at(d_at), stepper.g)
    dc = ed_hi.unstable_count - ed_lo.unstable_count
    d_cplx = ed_hi.n_cplx_pos - ed_lo.n_cplx_pos
    _, _, t_y, t_d = frame_a

    if d_cplx != 0 and abs(dc) == 2:
        pair = _crossing_pair(J)
        if abs(pair.imag) > 0.0:
            branch.events.append(BranchPointEvent(
                kind="hopf", d_at=d_at, eigen_info=pair, kernel_vector=None,
                state_at=s_at, segment=len(branch.points) - 1,
                diagnostics={"count_change": dc}))
            return

    lam, vec = _near_zero_real_vector(J)
    kernel = StateVector.unpack(vec)

    def tangent_d(y0, d0):
        try:
            _, td = stepper.tangent(y0, d0, t_y, t_d)
            return td
        except SingularJacobianError:
            return np.nan

    td_lo = tangent_d(y_lo, d_lo)
    td_hi = tangent_d(y_hi, d_hi)
    turning = np.isfinite(td_lo) and np.isfinite(td_hi) and td_lo * td_hi < 0.0
    t_norm = np.linalg.norm(t_y)
    if t_norm > 0.0:
        align = abs(float(np.dot(vec, t_y))) / (np.linalg.norm(vec) * t_norm)
    else:
        align = 0.0
    kind = "fold" if (turning or align > st.fold_alignment) else "pitchfork"
    branch.events.append(BranchPointEvent(
        kind=kind, d_at=d_at, eigen_info=complex(lam),
        kernel_vector=kernel, state_at=s_at,
        segment=len(branch.points) - 1,
        diagnostics={"turning": bool(turning), "alignment": float(align),
                     "count_change": dc, "pair_count_change": d_cplx}))


def branch_switch(parent: Branch, event: BranchPointEvent, p: ModelParams,
                  g: Grid, settings: ContinuationSettings | None = None,
                  sign: int = +1, branch_id: str | None = None) -> Branch:
    """Start a new branch from a pitchfork by seeding along its kernel.

    The seed state is event.state_at + sign*delta*kernel at a small d
    offset, Newton-corrected at fixed d.  Seeds that converge back to the
    parent state (collapse) are rejected; delta and the offset side are
    retried before giving up.
    """
    if event.kind != "pitchfork" or event.kernel_vector is None:
        raise ValueError("branch switching needs a pitchfork event with a kernel")
    st = settings or ContinuationSettings()
    base = event.state_at
    kern = event.kernel_vector.pack()
    kern = kern / np.abs(kern).max()
    scale = max(np.abs(base.pack()).max(), 1e-12)
    delta0 = st.switch_delta_rel * scale
    offset = max(st.switch_offset_rel * event.d_at, 2.0 * st.tol_event)

    y_event = base.pack()
    bid = branch_id or f"{parent.id}/pf@{event.d_at:.6g}{'+' if sign > 0 else '-'}"
    parent_ref = f"{parent.id}#{parent.events.index(event)}"

    def launch(sol_y: np.ndarray, d_seed: float) -> Branch:
        t_y = sol_y - y_event
        t_d = d_seed - event.d_at
        if t_d == 0.0:
            t_d = 1e-30  # pure-amplitude tangent; direction refined on step 1
        return continue_branch(StateVector.unpack(sol_y), p.with_(d=d_seed), g, st,
                               initial_tangent=(t_y, t_d), branch_id=bid,
                               parent=parent_ref)

    last_exc = None
    # fixed-d seeding on both sides of the pitchfork
    for side in (-1.0, +1.0):
        d_seed = event.d_at + side * offset
        for delta in (delta0, delta0 / 4.0, delta0 / 16.0):
            y_seed = y_event + sign * delta * kern
            try:
                sol = newton_solve(StateVector.unpack(y_seed), p.with_(d=d_seed), g,
                                   NewtonSettings(st.tol_newton, 25))
            except (NonconvergenceError, SingularJacobianError) as exc:
                last_exc = exc
                continue
            amp = np.abs(sol.pack() - y_event).max()
            if amp < 0.2 * delta:
                continue  # collapsed back to the parent branch
            return launch(sol.pack(), d_seed)
    # amplitude-pinned fallback: keep the kernel amplitude fixed, free d.
    # Robust when the local pattern amplitude differs from every delta above
    # (weakly sub/supercritical pitchforks).
    stepper = _Stepper(p, g, st)
    for delta in (delta0, delta0 / 4.0, delta0 / 16.0):
        try:
            y_sol, d_sol = _pinned_seed(stepper, y_event, event.d_at,
                                        kern, sign * delta)
        except (NonconvergenceError, SingularJacobianError) as exc:
            last_exc = exc
            continue
        if np.abs(y_sol - y_event).max() >= 0.2 * delta:
            return launch(y_sol, d_sol)
    raise SeedNonconvergenceError(
        f"no pitchfork seed converged off the parent branch (last: {last_exc})")


def _pinned_seed(stepper: _Stepper, y_pf: np.ndarray, d_pf: float,
                 kern: np.ndarray, delta: float) -> tuple[np.ndarray, float]:
    """Solve residual = 0 with the kernel amplitude pinned to delta, d free."""
    st = stepper.st
    w = stepper.w
    knorm2 = w * float(np.dot(kern, kern))
    pin = kern / knorm2
    y = y_pf + delta * kern
    d = d_pf
    for _ in range(25):
        if d <= 0.0:
            raise NonconvergenceError("pinned seed left the domain d > 0")
        s = StateVector.unpack(y)
        r = residual(s, stepper.params_at(d), stepper.g)
        c = w * float(np.dot(pin, y - y_pf)) - delta
        if np.abs(r).max() < st.tol_newton and abs(c) < st.tol_newton:
            return y, d
        M = stepper.bordered(y, d, pin, 0.0)
        rhs = np.empty(y.shape[0] + 1)
        rhs[:-1] = -r
        rhs[-1] = -c
        try:
            step = np.linalg.solve(M, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(str(exc)) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobianError("non-finite pinned-seed step")
        y = y + step[:-1]
        d = d + step[-1]
    raise NonconvergenceError("pinned seed stalled")


def homogeneous_branch(p: ModelParams, g: Grid,
                       settings: ContinuationSettings | None = None,
                       d_start: float | None = None,
                       branch_id: str = "hom") -> Branch:
    """Trace the homogeneous branch from d_start downward."""
    from .model import coexistence_equilibrium
    st = settings or ContinuationSettings()
    d0 = st.d_max if d_start is None else d_start
    eq = coexistence_equilibrium(p)
    start = StateVector.constant(eq.u, eq.v, g)
    return continue_branch(start, p.with_(d=d0), g, st, direction=-1,
                           branch_id=branch_id, parent="homogeneous")
