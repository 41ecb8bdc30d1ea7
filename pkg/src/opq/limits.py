"""Closed-form benchmark limits.

Diffusive-Rabi expansions (drive much faster than measurement, delta*tau >> 1)
for the zero-energy traversal time and the co-/counter-rotating actions, plus
the equal-strength wrapped-Gaussian distribution of final angles.
"""

import warnings

import numpy as np

from .errors import PoleDivergence

DEFAULT_WINDINGS = 5
_POLE_TOL = 1e-6
_VALIDITY_WARN = 10.0


def _check_regime(delta, tau):
    if delta * tau < _VALIDITY_WARN:
        warnings.warn(f"delta*tau = {delta * tau:g} < {_VALIDITY_WARN:g}: "
                      "diffusive-Rabi expansion is out of its validity regime")


def rabi_time_approx(delta, tau, theta_i, theta_f):
    """Traversal time of the E = 0 region-A path, to first correction order.

    T ~ (theta_f - theta_i)/delta - (cos 2theta_f - cos 2theta_i)/(4 delta^2 tau)
    """
    if not theta_f > theta_i:
        raise ValueError("expansion assumes theta_f > theta_i")
    _check_regime(delta, tau)
    return ((theta_f - theta_i) / delta
            - (np.cos(2.0 * theta_f) - np.cos(2.0 * theta_i))
            / (4.0 * delta * delta * tau))


def rabi_momentum_A(delta, tau, theta):
    """Leading-order co-rotating momentum p_+ ~ sin^2(theta) / (2 delta tau).

    Exposed as an expansion intermediate only; no sign convention is
    guaranteed where sin changes sign.
    """
    return np.sin(theta) ** 2 / (2.0 * delta * tau)


def rabi_action_A(delta, tau, theta_i, theta_f):
    """Action of the co-rotating (region A) E = 0 path; -> 0 as delta*tau grows.

    S_A ~ -(theta_f - theta_i)/(4 delta tau)
          + (sin 2theta_f - sin 2theta_i)/(8 delta tau)
    """
    _check_regime(delta, tau)
    return (-(theta_f - theta_i) / (4.0 * delta * tau)
            + (np.sin(2.0 * theta_f) - np.sin(2.0 * theta_i))
            / (8.0 * delta * tau))


def rabi_action_C(delta, tau, theta_i, theta_f):
    """Action of the counter-drive (region C) path: S_C = 2 delta tau (cot i - cot f).

    Sign convention: a counter-drive traversal (theta_f < theta_i within one
    lobe) gives S_C <= 0; the action diverges at the poles theta = k pi.
    """
    _check_regime(delta, tau)
    for name, th in (("theta_i", theta_i), ("theta_f", theta_f)):
        if abs(th - np.pi * np.round(th / np.pi)) < _POLE_TOL:
            raise PoleDivergence(f"{name} = {th:.9g} within {_POLE_TOL:g} of a "
                                 "pole of cot(theta)")
    S = 2.0 * delta * tau * (1.0 / np.tan(theta_i) - 1.0 / np.tan(theta_f))
    return -abs(S) if theta_i != theta_f else 0.0


def wrapped_gaussian(theta_i, tau, T, theta_grid, n_windings=DEFAULT_WINDINGS):
    """Equal-strength final-angle density P(theta) on [0, 2 pi), normalized.

    P(theta) ~ sum_n exp[-(theta - theta_i + 2 pi n)^2 tau / (2 T)],
    truncated at |n| <= n_windings (Gaussian tail bound justifies n = 5
    for T/tau <= 10).
    """
    if n_windings < 1:
        raise ValueError("n_windings must be >= 1")
    th = np.asarray(theta_grid, dtype=float)
    ns = np.arange(-n_windings, n_windings + 1)
    dev = th[..., None] - theta_i + 2.0 * np.pi * ns
    P = np.exp(-dev * dev * tau / (2.0 * T)).sum(axis=-1)
    # normalize as a density on [0, 2 pi)
    norm = np.sqrt(2.0 * np.pi * T / tau)
    return P / norm
