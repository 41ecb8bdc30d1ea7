"""Second-variation classification of extremal paths (MLP / LLP / SP).

The path cost can be written as a Lagrangian functional S = -int L dt with

    L = a(Q) + (Qdot - b(Q))^2 / (4 a(Q)),

so the second variation around a solution Q(t) for a test function eta
(with eta(0) = eta(T) = 0) is

    -d2S = int dt ( eta^2 L_QQ + 2 eta etadot L_QQd + etadot^2 L_QdQd ).

d2S < 0 for both probe variations means the action is a local maximum (MLP),
d2S > 0 a minimum (LLP), and a zero-band or probe disagreement is flagged SP.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from . import systems
from .errors import SingularLegendre

ETA_KINDS = ("sine", "poly")
_A_FLOOR = 1e-12
ZERO_BAND = 1e-8


@dataclass(frozen=True)
class VariationReport:
    delta2_sine: float
    delta2_poly: float
    kind: str  # "MLP" | "LLP" | "SP"


def _eta(kind, t, T):
    if kind == "sine":
        return np.sin(t * np.pi / T), (np.pi / T) * np.cos(t * np.pi / T)
    if kind == "poly":
        return t * t - t * T, 2.0 * t - T
    raise ValueError(f"unknown eta kind {kind!r}")


def _lagrangian_hessian(spec, theta, p):
    """(L_QQ, L_QQd, L_QdQd) along a path, from analytic coefficients."""
    a = systems.coeff_a(spec, theta)
    if np.any(a <= _A_FLOOR):
        raise SingularLegendre("a(theta) = 0 on the path; Legendre transform singular")
    ap = systems.coeff_a_prime(spec, theta)
    app = systems.coeff_a_pp(spec, theta)
    bp = systems.coeff_b_prime(spec, theta)
    bpp = systems.coeff_b_pp(spec, theta)
    L_qq = (1.0 - p * p) * app - p * bpp + (bp + 2.0 * p * ap) ** 2 / (2.0 * a)
    L_qqd = -bp / (2.0 * a) - p * ap / a
    L_qdqd = 1.0 / (2.0 * a)
    return L_qq, L_qqd, L_qdqd


def second_variation(path, eta_kind):
    """d2S along the stored samples for one probe variation (amplitude-free)."""
    spec = path.system
    eta, etad = _eta(eta_kind, path.t, path.t_final)
    L_qq, L_qqd, L_qdqd = _lagrangian_hessian(spec, path.theta, path.p)
    integrand = eta * eta * L_qq + 2.0 * eta * etad * L_qqd + etad * etad * L_qdqd
    return -float(np.trapezoid(integrand, path.t))


def classify(path):
    """VariationReport from both probe variations; disagreement flags SP."""
    d_sine = second_variation(path, "sine")
    d_poly = second_variation(path, "poly")
    band = ZERO_BAND * (1.0 + abs(float(path.S[-1])))
    near_zero = abs(d_sine) <= band or abs(d_poly) <= band
    if near_zero:
        kind = "SP"
    elif d_sine < 0.0 and d_poly < 0.0:
        kind = "MLP"
    elif d_sine > 0.0 and d_poly > 0.0:
        kind = "LLP"
    else:
        warnings.warn("second-variation probes disagree in sign; flagging SP")
        kind = "SP"
    return VariationReport(delta2_sine=d_sine, delta2_poly=d_poly, kind=kind)


def perturbed_action(path, eta_kind, eps):
    """S of the path displaced by eps * eta, via direct Lagrangian quadrature.

    Used as a literal maximality probe: for an MLP this is below the
    similarly-quadratured action of the unperturbed path.
    """
    spec = path.system
    eta, etad = _eta(eta_kind, path.t, path.t_final)
    Q = path.theta + eps * eta
    a0 = systems.coeff_a(spec, path.theta)
    b0 = systems.coeff_b(spec, path.theta)
    Qd = 2.0 * path.p * a0 + b0 + eps * etad
    a = systems.coeff_a(spec, Q)
    if np.any(a <= _A_FLOOR):
        raise SingularLegendre("perturbed path grazes a(theta) = 0")
    b = systems.coeff_b(spec, Q)
    L = a + (Qd - b) ** 2 / (4.0 * a)
    return -float(np.trapezoid(L, path.t))
