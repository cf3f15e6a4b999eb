"""The concave barrier omega(t) = t - kappa*t^(1+theta) and its certificate.

omega drives the doubling argument: its derivative stays pinned in a window
below 1 while its curvature is strictly negative, so the cubic term
a*L^3*omega''*omega'^2 eventually beats the quadratic one and any constant K.
This module evaluates omega, selects admissible (kappa, theta, Lbar), and
verifies the decisive inequality

    a*L^3*omega''(t)*omega'(t)^2 + b*L^2*omega'(t)^2 < -K      (all 0 < t < 1)

by dense sampling.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

__all__ = [
    "BarrierParams",
    "BarrierCertificate",
    "omega_eval",
    "check_window",
    "choose_parameters",
    "verify_keq",
    "keq_lhs",
]

_EPS = sys.float_info.epsilon


@dataclass(frozen=True)
class BarrierParams:
    """Barrier exponent data: omega(t) = t - kappa * t^(1+theta).

    kappa must stay below 1/4 (so the curvature bound has a positive margin)
    and theta is fixed in [1/2, 1].
    """

    kappa: float
    theta: float

    def validate(self) -> None:
        if not (0.0 < self.kappa < 0.25):
            raise ValueError(f"kappa must satisfy 0 < kappa < 1/4, got {self.kappa}")
        if not (0.5 <= self.theta <= 1.0):
            raise ValueError(f"theta must satisfy 1/2 <= theta <= 1, got {self.theta}")

    @property
    def kbar(self) -> float:
        """Curvature margin (4*kappa/3)*(1 - 4*kappa) used in the Lbar rule."""
        return (4.0 * self.kappa / 3.0) * (1.0 - 4.0 * self.kappa)


DEFAULT_PARAMS = BarrierParams(kappa=0.125, theta=0.5)


@dataclass(frozen=True)
class BarrierCertificate:
    """Sampled verification record for the barrier inequality.

    worst_margin is the most negative value of -(a*L^3*w''*w'^2 + b*L^2*w'^2 + K)
    over the samples; the certificate passes iff it stayed positive, i.e. the
    strict inequality held at every sampled t.
    """

    params: BarrierParams
    L: float
    a: float
    b: float
    K: float
    samples: int
    worst_margin: float
    passed: bool


def omega_eval(params: BarrierParams, t):
    """Evaluate (omega, omega', omega'') at t in (0, 1].

    omega   = t - kappa * t^(1+theta)
    omega'  = 1 - kappa * (1+theta) * t^theta
    omega'' = -kappa * theta * (1+theta) * t^(theta-1)

    Accepts scalars or arrays.  For theta < 1 the curvature blows up like
    t^(theta-1) at the origin; t is clamped at 4 machine epsilons there to
    keep the value finite and representable.
    """
    params.validate()
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr <= 0.0) or np.any(t_arr > 1.0):
        raise ValueError(f"t must lie in (0, 1], got {t}")
    k, th = params.kappa, params.theta
    omega = t_arr - k * t_arr ** (1.0 + th)
    omega1 = 1.0 - k * (1.0 + th) * t_arr**th
    t_safe = np.maximum(t_arr, 4.0 * _EPS) if th < 1.0 else t_arr
    omega2 = -k * th * (1.0 + th) * t_safe ** (th - 1.0)
    if np.isscalar(t) or t_arr.ndim == 0:
        return float(omega), float(omega1), float(omega2)
    return omega, omega1, omega2


def omega_value(params: BarrierParams, t):
    """omega alone, defined on the closed interval [0, 1] (omega(0) = 0)."""
    params.validate()
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0.0) or np.any(t_arr > 1.0):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    out = t_arr - params.kappa * t_arr ** (1.0 + params.theta)
    return float(out) if (np.isscalar(t) or t_arr.ndim == 0) else out


def _open_grid(sample_count: int) -> np.ndarray:
    """Uniform open grid of (0,1): sample_count interior points."""
    return np.linspace(0.0, 1.0, sample_count + 2)[1:-1]


def check_window(params: BarrierParams, sample_count: int) -> bool:
    """Sampled check of the derivative window.

    True iff omega > 0, 1/2 <= omega' <= 1 and omega'' < 0 at every point of
    a uniform open grid of (0,1), and the analytic floor 1 - 2*kappa >= 1/2
    holds.  Invalid parameters return False rather than raising.
    """
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    try:
        params.validate()
    except ValueError:
        return False
    if 1.0 - 2.0 * params.kappa < 0.5:
        return False
    t = _open_grid(sample_count)
    omega, omega1, omega2 = omega_eval(params, t)
    return bool(
        np.all(omega > 0.0)
        and np.all(omega1 >= 0.5)
        and np.all(omega1 <= 1.0)
        and np.all(omega2 < 0.0)
    )


def choose_parameters(K: float, a: float, b: float) -> tuple[BarrierParams, float]:
    """Pick (kappa, theta) and a threshold Lbar making the barrier inequality hold.

    Defaults theta = 1/2, kappa = 1/8 sit strictly inside the admissible
    windows.  With kbar = (4*kappa/3)*(1 - 4*kappa),

        Lbar = max( 2*b/(a*kbar), (2*K/(a*kbar))^(1/3), 1 )

    so that L >= 2*b/(a*kbar) absorbs the quadratic term into half the cubic
    one and L^3 >= 2*K/(a*kbar) leaves room for K.
    """
    for name, val in (("K", K), ("a", a), ("b", b)):
        if not (val > 0.0 and np.isfinite(val)):
            raise ValueError(f"{name} must be positive and finite, got {val}")
    params = DEFAULT_PARAMS
    kbar = params.kbar
    Lbar = max(2.0 * b / (a * kbar), (2.0 * K / (a * kbar)) ** (1.0 / 3.0), 1.0)
    if not np.isfinite(Lbar):
        raise OverflowError(f"Lbar overflowed for K={K}, a={a}, b={b}")
    return params, Lbar


def keq_lhs(params: BarrierParams, L: float, a: float, b: float, t):
    """Left side a*L^3*omega''*omega'^2 + b*L^2*omega'^2 of the barrier bound."""
    _, omega1, omega2 = omega_eval(params, t)
    return a * L**3 * omega2 * omega1**2 + b * L**2 * omega1**2


def verify_keq(
    params: BarrierParams,
    L: float,
    a: float,
    b: float,
    K: float,
    sample_count: int = 10_000,
) -> BarrierCertificate:
    """Sampled certificate for a*L^3*w''*w'^2 + b*L^2*w'^2 < -K on (0,1).

    Evaluates the left side on a uniform open grid and records the worst
    margin against -K.  Passes iff the strict inequality held at every
    sample.  The t -> 0 endpoint needs no special care: for theta < 1 the
    cubic term diverges to -infinity there, and for theta = 1 the left side
    is continuous up to 0 and covered by samples arbitrarily close.
    """
    params.validate()
    for name, val in (("L", L), ("a", a), ("b", b), ("K", K)):
        if not (val > 0.0 and np.isfinite(val)):
            raise ValueError(f"{name} must be positive and finite, got {val}")
    if sample_count < 2:
        raise ValueError("sample_count must be >= 2")
    t = _open_grid(sample_count)
    lhs = keq_lhs(params, L, a, b, t)
    margins = -(lhs + K)
    worst = float(np.min(margins))
    return BarrierCertificate(
        params=params,
        L=float(L),
        a=float(a),
        b=float(b),
        K=float(K),
        samples=int(sample_count),
        worst_margin=worst,
        passed=bool(worst > 0.0),
    )
