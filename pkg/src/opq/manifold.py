"""Lagrange-manifold evolution, caustic detection, and multipath solving.

The manifold starts as the vertical line {(theta_i, p_i)} in phase space.
Each point is evolved under the extremal-path flow; folds of the projection
onto theta (sign changes of d theta_T / d p_i) mark caustics, and roots of
theta_T(p_i) = theta_f + 2 pi k are the multipath branches.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import classify as _classify
from . import integrate as _integrate
from . import phase, systems
from .errors import (AmbiguousBracket, NoIsland, NoSolution, NotInIsland,
                     RefinementBudgetExceeded)

VVD_CAP = 1e12
DEFAULT_GAP = 0.05        # max final-plane Euclidean gap between neighbors
DEFAULT_TURN = 0.2        # max polyline turning angle (rad) at a vertex
DEFAULT_N_INITIAL = 512
DEFAULT_MAX_POINTS = 40000
DEFAULT_DT = 1e-2
_MIN_DP = 1e-13


# ---------------------------------------------------------------------------
# batch flow integration (fixed-step RK4, vectorized over manifold points)
# ---------------------------------------------------------------------------

def _flow_rhs(spec, theta, p):
    td, pd = systems.hamilton_rhs(spec, theta, p)
    sd = systems.sdot(spec, theta, p)
    return td, pd, sd


def evolve_points(spec, theta0, p0, t, *, dt=DEFAULT_DT):
    """RK4-evolve arrays of phase points for time t; returns (theta, p, S)."""
    theta = np.array(theta0, dtype=float, copy=True)
    p = np.array(p0, dtype=float, copy=True)
    S = np.zeros_like(p)
    if t == 0.0:
        return theta, p, S
    n_steps = max(1, int(np.ceil(t / dt)))
    h = t / n_steps
    for _ in range(n_steps):
        k1 = _flow_rhs(spec, theta, p)
        k2 = _flow_rhs(spec, theta + 0.5 * h * k1[0], p + 0.5 * h * k1[1])
        k3 = _flow_rhs(spec, theta + 0.5 * h * k2[0], p + 0.5 * h * k2[1])
        k4 = _flow_rhs(spec, theta + h * k3[0], p + h * k3[1])
        theta += (h / 6.0) * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        p += (h / 6.0) * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        S += (h / 6.0) * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return theta, p, S


# ---------------------------------------------------------------------------
# snapshots
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManifoldSnapshot:
    """Refined sampling of the evolved manifold at one time."""

    system: object
    theta_i: float
    t: float
    p_i: np.ndarray
    theta: np.ndarray       # unwrapped final angles
    p: np.ndarray
    S: np.ndarray
    fold_markers: tuple = field(default=())

    def jacobian(self, index):
        """Central finite difference d theta_T / d p_i at an interior index."""
        if self.t == 0.0:
            return 0.0
        i = index
        if i <= 0 or i >= self.p_i.size - 1:
            raise IndexError("jacobian needs an interior index")
        return (self.theta[i + 1] - self.theta[i - 1]) / (self.p_i[i + 1] - self.p_i[i - 1])

    def van_vleck(self, index):
        """|d p_i / d theta_T|, capped to +inf above 1e12 (caustic divergence)."""
        J = self.jacobian(index)
        if J == 0.0:
            return np.inf
        V = 1.0 / abs(J)
        return np.inf if V > VVD_CAP else V

    def to_csv(self, path):
        flags = np.zeros(self.p_i.size)
        flags[list(self.fold_markers)] = 1
        data = np.column_stack([self.p_i, self.theta, self.p, self.S, flags])
        np.savetxt(path, data, delimiter=",", header="p_i,theta,p,S,fold_flag",
                   comments="", fmt="%.17g")


def _fold_markers(theta):
    """Vertex indices where the finite-difference slope changes sign."""
    d = np.diff(theta)
    markers = []
    for i in range(d.size - 1):
        if d[i] == 0.0 or d[i] * d[i + 1] < 0.0:
            markers.append(i + 1)
    return tuple(markers)


def evolve_manifold(spec, theta_i, p_range, t, *, n_initial=DEFAULT_N_INITIAL,
                    gap=DEFAULT_GAP, turn=DEFAULT_TURN,
                    max_points=DEFAULT_MAX_POINTS, dt=DEFAULT_DT):
    """Evolve the vertical-line manifold with adaptive p_i refinement.

    Points are inserted wherever neighboring final-plane points are more
    than `gap` apart or the polyline turns by more than `turn`; folds are
    curvature concentrations, so uniform grids would miss them.  The initial
    grid is uniform plus a geometric cluster at each end of the p range,
    since orbits near a separatrix produce a steep boundary layer there.
    """
    p_lo, p_hi = p_range
    p_i = np.linspace(p_lo, p_hi, n_initial)
    span = p_hi - p_lo
    edge = span * np.geomspace(1e-10, 1e-2, 16)
    p_i = np.unique(np.concatenate([p_i, p_lo + edge, p_hi - edge]))
    theta, p, S = evolve_points(spec, np.full_like(p_i, theta_i), p_i, t, dt=dt)

    while True:
        counts = _refine_counts(theta, p, gap, turn)
        counts[np.diff(p_i) <= _MIN_DP] = 0
        total = int(counts.sum())
        if total == 0:
            break
        if p_i.size + total > max_points:
            raise RefinementBudgetExceeded(
                f"{p_i.size + total} points would exceed the "
                f"{max_points}-point budget at t = {t:.6g}")
        new_p = np.concatenate([
            p_i[i] + (p_i[i + 1] - p_i[i]) * np.arange(1, n + 1) / (n + 1.0)
            for i, n in enumerate(counts) if n > 0])
        nt, npp, ns = evolve_points(spec, np.full_like(new_p, theta_i), new_p, t, dt=dt)
        p_i = np.concatenate([p_i, new_p])
        order = np.argsort(p_i)
        p_i = p_i[order]
        theta = np.concatenate([theta, nt])[order]
        p = np.concatenate([p, npp])[order]
        S = np.concatenate([S, ns])[order]

    # the t = 0 vertical line is degenerate (constant theta), not folded
    markers = () if t == 0.0 else _fold_markers(theta)
    return ManifoldSnapshot(system=spec, theta_i=theta_i, t=t, p_i=p_i,
                            theta=theta, p=p, S=S, fold_markers=markers)


def _refine_counts(theta, p, gap, turn, *, cap=16):
    """Per-segment insertion counts, by final-plane gap or turning angle."""
    dth = np.diff(theta)
    dp = np.diff(p)
    seg = np.hypot(dth, dp)
    counts = np.clip(np.ceil(seg / gap).astype(int) - 1, 0, cap)
    # turning angle at interior vertices flags both adjacent segments
    if theta.size >= 3:
        ang = np.arctan2(dp, dth)
        dang = np.abs(np.diff(ang))
        dang = np.minimum(dang, 2.0 * np.pi - dang)
        sharp = (dang > turn).astype(int)
        counts[:-1] = np.maximum(counts[:-1], sharp)
        counts[1:] = np.maximum(counts[1:], sharp)
    return counts


# ---------------------------------------------------------------------------
# caustic onset
# ---------------------------------------------------------------------------

def tangency_energy(spec, theta_i):
    """Lowest E of any orbit meeting the vertical line at theta_i.

    Minimizing H over p at fixed theta gives p = -b/2a and
    E = -a - b^2/(4a), the innermost ellipse tangent to the initial manifold.
    """
    a = systems.coeff_a(spec, theta_i)
    b = systems.coeff_b(spec, theta_i)
    return float(-a - b * b / (4.0 * a))


def caustic_onset(spec, theta_i):
    """Half the fastest island period tangent to the initial manifold.

    Returns +inf when theta_i sits at a hyperbolic angle (the tangent orbit
    is the separatrix itself).
    """
    try:
        isl = phase.island_spec(spec)
    except NoIsland as exc:
        raise NotInIsland(str(exc)) from exc
    E_star = tangency_energy(spec, theta_i)
    if E_star >= isl.E_c - 1e-13:
        return np.inf
    if E_star <= isl.E_m + 1e-13:
        # exactly at the elliptic center: innermost limit is the linearized orbit
        return 0.5 * phase.linearized_period(spec)
    return 0.5 * phase.island_period(spec, E_star)


def first_fold_time(spec, theta_i, p_range, *, t_max=None, rel_tol=1e-4,
                    n_initial=1024, dt=DEFAULT_DT):
    """Onset time measured directly: bisection over t on fold presence."""
    if t_max is None:
        isl = phase.island_spec(spec)
        t_max = 3.0 * phase.island_period(spec, isl.E_m + 1e-4)

    def has_fold(t):
        snap = evolve_manifold(spec, theta_i, p_range, t,
                               n_initial=n_initial, dt=dt)
        return len(snap.fold_markers) > 0

    lo, hi = 0.0, t_max
    if not has_fold(hi):
        raise NoSolution(f"no fold up to t = {t_max:.6g}")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if has_fold(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# multipath boundary-value solving
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    p_i: float
    winding: int
    path: object            # OptimalPath
    S: float
    kind: str
    weight: float
    delta2_sine: float
    delta2_poly: float
    negligible: bool = False


@dataclass(frozen=True)
class MultipathSolution:
    system: object
    theta_i: float
    theta_f: float          # wrapped to [0, 2 pi)
    T: float
    branches: tuple

    def to_json(self):
        return {
            "system": self.system.to_json(),
            "boundary": {"theta_i": self.theta_i, "theta_f": self.theta_f,
                         "T": self.T},
            "branches": [
                {"p_i": b.p_i, "winding": b.winding, "S": b.S, "kind": b.kind,
                 "weight": b.weight, "negligible": b.negligible,
                 "delta2_sine": b.delta2_sine, "delta2_poly": b.delta2_poly}
                for b in self.branches],
        }


def _final_theta(spec, theta_i, p_i, T):
    """Accurately integrated final angle for one initial momentum."""
    path = _integrate.integrate(spec, theta_i, p_i, T, n_samples=2)
    return path.theta[-1]


def softmax_weights(actions):
    """Overflow-safe softmax of a list of actions."""
    s = np.asarray(actions, dtype=float)
    e = np.exp(s - s.max())
    return e / e.sum()


def branch_weights(solution, include_llp=True):
    """Relative trajectory fractions per branch from the branch actions.

    include_llp=False drops LLP branches from the normalization (they get
    weight nan), matching the convention that counts MLP-assigned paths only.
    """
    kinds = [b.kind for b in solution.branches]
    S = np.array([b.S for b in solution.branches])
    if include_llp:
        return softmax_weights(S)
    keep = np.array([k != "LLP" for k in kinds])
    out = np.full(S.size, np.nan)
    out[keep] = softmax_weights(S[keep])
    return out


def find_multipaths(spec, theta_i, theta_f, T, p_search_range, *,
                    max_winding=6, weight_floor=1e-12, root_tol=1e-8,
                    refine_opts=None, path_samples=2000):
    """All extremal paths with wrap(theta(T)) = theta_f from theta_i.

    Roots are bracketed by sign changes on the refined manifold against every
    unwrapped target theta_f + 2 pi k, then polished by bisection in p_i.
    """
    theta_f = float(systems.wrap_angle(theta_f))
    opts = dict(refine_opts or {})
    snap = evolve_manifold(spec, theta_i, p_search_range, T, **opts)

    k_lo = int(np.floor((snap.theta.min() - theta_f) / (2 * np.pi))) - 1
    k_hi = int(np.ceil((snap.theta.max() - theta_f) / (2 * np.pi))) + 1
    k_lo = max(k_lo, -max_winding)
    k_hi = min(k_hi, max_winding)

    roots = []
    for k in range(k_lo, k_hi + 1):
        target = theta_f + 2.0 * np.pi * k
        g = snap.theta - target
        for i in range(g.size - 1):
            jac = abs(g[i + 1] - g[i]) / (snap.p_i[i + 1] - snap.p_i[i])
            if g[i] == 0.0:
                roots.append((snap.p_i[i], k, jac))
            elif g[i] * g[i + 1] < 0.0:
                p_root = brentq(
                    lambda pp: _final_theta(spec, theta_i, pp, T) - target,
                    snap.p_i[i], snap.p_i[i + 1], xtol=1e-15)
                roots.append((p_root, k, jac))
        if g[-1] == 0.0:
            roots.append((snap.p_i[-1], k, 0.0))

    if not roots:
        raise NoSolution(f"no path reaches theta_f = {theta_f:.6g} at T = {T:.6g} "
                         f"for p_i in {p_search_range}")

    # deduplicate near-identical roots (can arise from grid-point hits)
    roots.sort()
    dedup = []
    for p_root, k, jac in roots:
        if dedup and abs(p_root - dedup[-1][0]) < 1e-9:
            continue
        dedup.append((p_root, k, jac))

    branches = []
    for p_root, k, jac in dedup:
        path = _integrate.integrate(spec, theta_i, p_root, T,
                                    n_samples=path_samples)
        resid = abs(systems.wrap_angle(path.theta[-1]) - theta_f)
        resid = min(resid, 2.0 * np.pi - resid)
        # near a fold the Jacobian diverges, so a machine-precision p_i root
        # cannot pin theta(T) below jac * eps(p_i); widen the check accordingly
        tol = max(root_tol, jac * 1e-14 * (1.0 + abs(p_root)))
        if resid > tol:
            raise AmbiguousBracket(
                f"polished root at p_i = {p_root:.9g} misses theta_f by {resid:.3g}; "
                "increase the refinement budget")
        rep = _classify.classify(path)
        branches.append(dict(p_i=p_root, winding=k, path=path,
                             S=float(path.S[-1]), kind=rep.kind,
                             delta2_sine=rep.delta2_sine,
                             delta2_poly=rep.delta2_poly))

    weights = softmax_weights([b["S"] for b in branches])
    out = tuple(Branch(weight=float(w), negligible=bool(w < weight_floor), **b)
                for b, w in zip(branches, weights))
    return MultipathSolution(system=spec, theta_i=theta_i, theta_f=theta_f,
                             T=T, branches=out)


def most_likely_final(spec, theta_i, T, p_search_range, *, refine_opts=None):
    """(theta_T, p_i) of the maximal-S manifold root with p(T) = 0."""
    opts = dict(refine_opts or {})
    snap = evolve_manifold(spec, theta_i, p_search_range, T, **opts)

    def p_final(p0):
        path = _integrate.integrate(spec, theta_i, p0, T, n_samples=2)
        return path.p[-1]

    candidates = []
    g = snap.p
    for i in range(g.size - 1):
        if g[i] == 0.0:
            candidates.append(snap.p_i[i])
        elif g[i] * g[i + 1] < 0.0:
            candidates.append(brentq(p_final, snap.p_i[i], snap.p_i[i + 1],
                                     xtol=1e-12, rtol=1e-15))
    if not candidates:
        raise NoSolution("no p(T) = 0 root on the manifold in the given range")

    best = None
    for p0 in candidates:
        path = _integrate.integrate(spec, theta_i, p0, T, n_samples=2)
        if best is None or path.S[-1] > best[2]:
            best = (float(path.theta[-1]), float(p0), float(path.S[-1]))
    return best[0], best[1]
