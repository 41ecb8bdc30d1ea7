"""Monitored-qubit systems and their reduced great-circle dynamics.

Two physical setups are supported:

* TwoObservable -- simultaneous weak monitoring of sigma_x and sigma_z with
  characteristic times tau_x, tau_z; the state lives on the x-z great circle
  parameterized by the polar angle theta (z = cos theta, x = sin theta).
* DrivenZ -- weak monitoring of sigma_z plus a Rabi drive of angular
  frequency delta about the x axis; the state lives on the y-z great circle
  (z = cos theta, y = sin theta).

In both cases the extremal-path dynamics on the circle are generated by a
phase-space Hamiltonian

    H(theta, p) = (p^2 - 1) a(theta) + p b(theta),

with system-specific coefficients a >= 0 and b.  Units are microseconds for
times and MHz (= rad/us) for rates throughout.

All functions accept scalars or numpy arrays for theta / p and are pure.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TwoObservable:
    """Simultaneous x and z monitoring; larger tau means weaker measurement."""

    tau_x: float
    tau_z: float

    kind = "two_observable"

    def __post_init__(self):
        if not (self.tau_x > 0 and self.tau_z > 0):
            raise DomainError("characteristic times must be strictly positive")

    def to_json(self):
        return {"kind": self.kind, "tau_x": self.tau_x, "tau_z": self.tau_z}


@dataclass(frozen=True)
class DrivenZ:
    """z monitoring with Rabi drive delta (MHz) about x."""

    tau: float
    delta: float

    kind = "driven_z"

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError("characteristic time must be strictly positive")
        if self.delta < 0:
            raise DomainError("delta must be non-negative")

    def to_json(self):
        return {"kind": self.kind, "tau": self.tau, "delta": self.delta}


def spec_from_json(obj):
    """Inverse of SystemSpec.to_json; rejects unknown kinds and stray keys."""
    kind = obj.get("kind")
    keys = set(obj) - {"kind"}
    if kind == "two_observable":
        if keys != {"tau_x", "tau_z"}:
            raise DomainError(f"two_observable wants tau_x, tau_z; got {sorted(keys)}")
        return TwoObservable(tau_x=float(obj["tau_x"]), tau_z=float(obj["tau_z"]))
    if kind == "driven_z":
        if keys != {"tau", "delta"}:
            raise DomainError(f"driven_z wants tau, delta; got {sorted(keys)}")
        return DrivenZ(tau=float(obj["tau"]), delta=float(obj["delta"]))
    raise DomainError(f"unknown system kind {kind!r}")


# ---------------------------------------------------------------------------
# coefficient functions a(theta), b(theta) and their derivatives
# ---------------------------------------------------------------------------

def coeff_a(spec, theta):
    """Diffusion-rate coefficient a(theta) >= 0 (MHz)."""
    if spec.kind == "two_observable":
        return 0.5 * (np.sin(theta) ** 2 / spec.tau_z
                      + np.cos(theta) ** 2 / spec.tau_x)
    return 0.5 * np.sin(theta) ** 2 / spec.tau


def coeff_b(spec, theta):
    """Drift coefficient b(theta) (MHz)."""
    if spec.kind == "two_observable":
        return np.sin(theta) * np.cos(theta) * (1.0 / spec.tau_x - 1.0 / spec.tau_z)
    return spec.delta - np.sin(theta) * np.cos(theta) / spec.tau


def coeff_a_prime(spec, theta):
    if spec.kind == "two_observable":
        return 0.5 * np.sin(2 * theta) * (1.0 / spec.tau_z - 1.0 / spec.tau_x)
    return 0.5 * np.sin(2 * theta) / spec.tau


def coeff_b_prime(spec, theta):
    if spec.kind == "two_observable":
        return np.cos(2 * theta) * (1.0 / spec.tau_x - 1.0 / spec.tau_z)
    return -np.cos(2 * theta) / spec.tau


def coeff_a_pp(spec, theta):
    if spec.kind == "two_observable":
        return np.cos(2 * theta) * (1.0 / spec.tau_z - 1.0 / spec.tau_x)
    return np.cos(2 * theta) / spec.tau


def coeff_b_pp(spec, theta):
    if spec.kind == "two_observable":
        return -2.0 * np.sin(2 * theta) * (1.0 / spec.tau_x - 1.0 / spec.tau_z)
    return 2.0 * np.sin(2 * theta) / spec.tau


# ---------------------------------------------------------------------------
# reduced Hamiltonian and flow
# ---------------------------------------------------------------------------

def hamiltonian(spec, theta, p):
    """Stochastic energy H = (p^2 - 1) a + p b; conserved along extremal paths."""
    return (p * p - 1.0) * coeff_a(spec, theta) + p * coeff_b(spec, theta)


def hamilton_rhs(spec, theta, p):
    """(theta_dot, p_dot) from the exact analytic derivatives of H."""
    a = coeff_a(spec, theta)
    b = coeff_b(spec, theta)
    ap = coeff_a_prime(spec, theta)
    bp = coeff_b_prime(spec, theta)
    theta_dot = 2.0 * p * a + b
    p_dot = -(p * p - 1.0) * ap - p * bp
    return theta_dot, p_dot


def sdot(spec, theta, p):
    """Log-probability cost rate along a path: -(1 + p^2) a(theta) <= 0."""
    return -(1.0 + p * p) * coeff_a(spec, theta)


# ---------------------------------------------------------------------------
# readouts and the un-reduced Hamiltonian
# ---------------------------------------------------------------------------

def optimal_readouts(spec, theta, p):
    """Extremizing readouts as a dict keyed by channel ('x' and/or 'z').

    They satisfy dH/dr = 0 on the un-reduced Hamiltonian exactly.
    """
    if spec.kind == "two_observable":
        return {"x": np.sin(theta) + p * np.cos(theta),
                "z": np.cos(theta) - p * np.sin(theta)}
    return {"z": np.cos(theta) - p * np.sin(theta)}


def raw_hamiltonian(spec, theta, p, readouts):
    """Pre-optimization H(theta, p, r), quadratic in the readouts.

    With the optimal readouts substituted this reproduces hamiltonian() --
    that identity is the special structure both systems share.
    """
    if spec.kind == "two_observable":
        rx, rz = readouts["x"], readouts["z"]
        drift = rx * np.cos(theta) / spec.tau_x - rz * np.sin(theta) / spec.tau_z
        cost = (-(rz * rz - 2.0 * rz * np.cos(theta) + 1.0) / (2.0 * spec.tau_z)
                - (rx * rx - 2.0 * rx * np.sin(theta) + 1.0) / (2.0 * spec.tau_x))
        return p * drift + cost
    rz = readouts["z"]
    drift = spec.delta - rz * np.sin(theta) / spec.tau
    cost = -(rz * rz - 2.0 * rz * np.cos(theta) + 1.0) / (2.0 * spec.tau)
    return p * drift + cost


# ---------------------------------------------------------------------------
# full Bloch-coordinate drift (used by the trajectory simulator)
# ---------------------------------------------------------------------------

PURITY_TOL = 1e-9


def bloch_rhs(spec, state, readouts):
    """Stratonovich-form Bloch drift (dx, dy, dz) given supplied readouts.

    state is (x, y, z); components may be arrays.  For the two-observable
    system theta lives in the x-z plane; for the driven system in y-z.
    """
    x, y, z = state
    if spec.kind == "two_observable":
        rx, rz = readouts["x"], readouts["z"]
        dx = (1.0 - x * x) * rx / spec.tau_x - x * z * rz / spec.tau_z
        dy = -y * (z * rz / spec.tau_z + x * rx / spec.tau_x)
        dz = (1.0 - z * z) * rz / spec.tau_z - x * z * rx / spec.tau_x
        return dx, dy, dz
    rz = readouts["z"]
    dx = -x * z * rz / spec.tau
    dy = spec.delta * z - y * z * rz / spec.tau
    dz = -spec.delta * y + (1.0 - z * z) * rz / spec.tau
    return dx, dy, dz


def bloch_from_theta(spec, theta):
    """Great-circle embedding of theta for the system's monitored plane."""
    if spec.kind == "two_observable":
        return np.sin(theta), np.zeros_like(np.asarray(theta, dtype=float)), np.cos(theta)
    return np.zeros_like(np.asarray(theta, dtype=float)), np.sin(theta), np.cos(theta)


def theta_from_bloch(spec, state):
    """Polar angle in the monitored great circle, in [0, 2*pi)."""
    x, y, z = state
    s = x if spec.kind == "two_observable" else y
    return np.mod(np.arctan2(s, z), 2.0 * np.pi)


def wrap_angle(theta):
    """Wrap an unwrapped angle onto [0, 2*pi)."""
    return np.mod(theta, 2.0 * np.pi)
