"""Closed-form and quadrature-based phase-space structure.

Everything here works off the conserved stochastic energy E.  At fixed
(theta, E) the two momentum branches are

    p_pm = -b/2a +- sqrt(1 + E/a + b^2/4a^2),

and the traversal-speed radicand

    D(theta, E) = 4 a^2 + 4 a E + b^2 = theta_dot^2

controls which angles are reachable: D < 0 is a forbidden region.  For the
two-observable system with unequal strengths, D factors as

    D = 4 [ u (u + E) sin^2(phi) + v (v + E) cos^2(phi) ],

with u = -E_c, v = -E_m and phi measured from the island center, which is
what the turning-point and period formulas below use.
"""

import numpy as np
from scipy.integrate import quad

from . import systems
from .errors import (ForbiddenRegion, NoIsland, NoRealBranch, OutOfIslandRange,
                     QuadratureFailure, SingularCoefficient)

_A_FLOOR = 1e-14


def p_branches(spec, theta, E):
    """Both real momentum roots (p_plus, p_minus) of H(theta, p) = E."""
    a = systems.coeff_a(spec, theta)
    if a <= _A_FLOOR:
        raise SingularCoefficient(f"a(theta) = 0 at theta = {theta:.6g}")
    b = systems.coeff_b(spec, theta)
    radicand = 1.0 + E / a + b * b / (4.0 * a * a)
    if radicand < 0.0:
        raise NoRealBranch(f"forbidden region at theta = {theta:.6g}, E = {E:.6g}")
    root = np.sqrt(radicand)
    return -b / (2.0 * a) + root, -b / (2.0 * a) - root


def p_plus_stable(spec, theta, E):
    """Upper momentum branch in a form regular where a(theta) -> 0.

    Uses p_+ = 2 (E + a) / (b + sqrt(D)); valid whenever b + sqrt(D) > 0,
    which holds throughout the driven system's co-rotating region.
    """
    a = systems.coeff_a(spec, theta)
    b = systems.coeff_b(spec, theta)
    D = speed_squared(spec, theta, E)
    if np.any(D < 0.0):
        raise NoRealBranch("forbidden region inside requested range")
    denom = b + np.sqrt(D)
    if np.any(denom <= 0.0):
        raise SingularCoefficient("upper branch singular: b + sqrt(D) <= 0")
    return 2.0 * (E + a) / denom


def speed_squared(spec, theta, E):
    """D(theta, E) = 4 a^2 + 4 a E + b^2 (the squared traversal speed)."""
    a = systems.coeff_a(spec, theta)
    b = systems.coeff_b(spec, theta)
    return 4.0 * a * a + 4.0 * a * E + b * b


# ---------------------------------------------------------------------------
# fixed points and islands
# ---------------------------------------------------------------------------

def flow_jacobian(spec, theta, p):
    """2x2 Jacobian of (theta_dot, p_dot) from analytic coefficient derivatives."""
    a = systems.coeff_a(spec, theta)
    ap = systems.coeff_a_prime(spec, theta)
    app = systems.coeff_a_pp(spec, theta)
    bp = systems.coeff_b_prime(spec, theta)
    bpp = systems.coeff_b_pp(spec, theta)
    return np.array([[2.0 * p * ap + bp, 2.0 * a],
                     [-(p * p - 1.0) * app - p * bpp, -2.0 * p * ap - bp]])


def driven_fixed_point(spec):
    """(theta_bar, p_bar) where backaction and drive cancel (principal branch)."""
    return np.arctan(spec.tau * spec.delta), -spec.tau * spec.delta


def driven_separatrix_energy(spec):
    return -spec.tau * spec.delta ** 2 / 2.0


class IslandSpec:
    """Separatrix/minimum energies and fixed-point angles of a periodic island.

    center_theta is the elliptic point (eigenstate of the weaker measurement),
    hyperbolic_theta the saddle (stronger measurement); both repeat mod pi.
    """

    def __init__(self, E_c, E_m, center_theta, hyperbolic_theta):
        self.E_c = E_c
        self.E_m = E_m
        self.center_theta = center_theta
        self.hyperbolic_theta = hyperbolic_theta

    def center_near(self, theta):
        """The elliptic-center angle closest to theta (centers repeat mod pi)."""
        k = np.round((theta - self.center_theta) / np.pi)
        return self.center_theta + k * np.pi


def island_spec(spec):
    """Island energies and fixed-point angles for unequal two-observable taus."""
    if spec.kind != "two_observable":
        raise NoIsland("only the two-observable system has periodic islands")
    if spec.tau_x == spec.tau_z:
        raise NoIsland("equal strengths: the whole p = 0 line is fixed")
    if spec.tau_z > spec.tau_x:
        # z weaker: elliptic centers at the z eigenstates theta = 0, pi
        return IslandSpec(E_c=-0.5 / spec.tau_z, E_m=-0.5 / spec.tau_x,
                          center_theta=0.0, hyperbolic_theta=np.pi / 2.0)
    return IslandSpec(E_c=-0.5 / spec.tau_x, E_m=-0.5 / spec.tau_z,
                      center_theta=np.pi / 2.0, hyperbolic_theta=0.0)


def turning_points(spec, E, center_theta=None):
    """Angular turning points (theta_min, theta_max) of an island orbit.

    Manifestly real rewrite of the arctan expression: with u = -E_c and
    v = -E_m the half-width about the island center is

        w = arctan( sqrt( v (v + E) / ( u (-(u + E)) ) ) ).
    """
    isl = island_spec(spec)
    if not (isl.E_m <= E <= isl.E_c):
        raise OutOfIslandRange(f"E = {E:.6g} outside [{isl.E_m:.6g}, {isl.E_c:.6g}]")
    if center_theta is None:
        center_theta = isl.center_theta
    u = -isl.E_c
    v = -isl.E_m
    num = v * (v + E)
    den = u * (-(u + E))
    if den == 0.0:
        w = np.pi / 2.0
    else:
        w = np.arctan(np.sqrt(max(num, 0.0) / den))
    return center_theta - w, center_theta + w


def island_period(spec, E, *, quad_tol=1e-11):
    """Orbit period from 2 * integral of dE-derivative of p_+ between turnings.

    The integrand has inverse-square-root endpoint singularities; the
    substitution theta = center + w sin(u) makes it bounded.
    """
    isl = island_spec(spec)
    if not (isl.E_m < E < isl.E_c):
        raise OutOfIslandRange(f"E = {E:.6g} not strictly inside the island")
    lo, hi = turning_points(spec, E)
    center = 0.5 * (lo + hi)
    w = 0.5 * (hi - lo)

    def integrand(u):
        theta = center + w * np.sin(u)
        D = speed_squared(spec, theta, E)
        if D <= 0.0:
            return 0.0
        return 2.0 * w * np.cos(u) / np.sqrt(D)

    val, err = quad(integrand, -np.pi / 2.0, np.pi / 2.0,
                    epsabs=quad_tol, epsrel=quad_tol, limit=200)
    if not np.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
        raise QuadratureFailure(f"period quadrature error {err:.3g} at E = {E:.6g}")
    return val


def linearized_period(spec):
    """2 pi / omega of the flow linearized at the elliptic island center."""
    isl = island_spec(spec)
    J = flow_jacobian(spec, isl.center_theta, 0.0)
    det = np.linalg.det(J)
    if det <= 0.0:
        raise NoIsland("center is not elliptic")
    return 2.0 * np.pi / np.sqrt(det)


# ---------------------------------------------------------------------------
# traversal times and scans
# ---------------------------------------------------------------------------

def traversal_time(spec, theta_i, theta_f, E, *, quad_tol=1e-11):
    """Time for the constant-E path to move from theta_i to theta_f.

    Positive by convention regardless of direction.  Raises ForbiddenRegion
    if the speed radicand turns negative anywhere on the leg.
    """
    if theta_i == theta_f:
        return 0.0
    grid = np.linspace(theta_i, theta_f, 512)
    if np.any(speed_squared(spec, grid, E) <= 0.0):
        raise ForbiddenRegion("speed radicand non-positive on the requested leg")

    def integrand(theta):
        return 1.0 / np.sqrt(speed_squared(spec, theta, E))

    val, err = quad(integrand, theta_i, theta_f, epsabs=quad_tol,
                    epsrel=quad_tol, limit=200)
    if not np.isfinite(val):
        raise QuadratureFailure("traversal-time quadrature failed")
    return abs(val)


def one_turn_time_and_action(spec, E, *, theta_start=0.0, quad_tol=1e-11):
    """(T_2pi, S) for one co-rotating revolution at stochastic energy E."""
    T = traversal_time(spec, theta_start, theta_start + 2.0 * np.pi, E,
                       quad_tol=quad_tol)

    def p_int(theta):
        return p_plus_stable(spec, theta, E)

    loop, err = quad(p_int, theta_start, theta_start + 2.0 * np.pi,
                     epsabs=quad_tol, epsrel=quad_tol, limit=200)
    return T, E * T - loop


def scan_T2pi_and_S(spec, E_grid, *, theta_start=0.0):
    """Tabulate (E, T_2pi, S) over an energy grid in the co-rotating region."""
    rows = []
    for E in np.asarray(E_grid, dtype=float):
        T, S = one_turn_time_and_action(spec, E, theta_start=theta_start)
        rows.append((E, T, S))
    return np.array(rows)


def sdot_grid(spec, theta_grid, p_grid):
    """S_dot sampled on the outer product of theta_grid and p_grid."""
    TH, P = np.meshgrid(theta_grid, p_grid, indexing="ij")
    return systems.sdot(spec, TH, P)


# re-export for callers that think of sdot as a phase-space field
sdot = systems.sdot
