"""Reduced mass law d M/d tau = -c M^q and its closed-form solution.

The full rescaled flow collapses onto this scalar ODE once the profile has
locked onto the Gaussian shape; comparing the PDE mass record against these
routines quantifies the shape correction.  At the critical exponent
q - 1 = 1/(N+1), so separation of variables gives the closed form below and
the amplitude law tau^(N+1) M(tau) -> ((q-1) c)^(-(N+1)).
"""
from __future__ import annotations

import math

import numpy as np

from .gaussian import critical_exponent

__all__ = ["ode_rhs", "exact_mass", "integrate_mass_ode", "asymptote_deviation"]


def ode_rhs(mass: float, c: float, q: float | None = None, dim: int = 1) -> float:
    """-c mass^q; q defaults to the critical exponent of dim."""
    if q is None:
        q = critical_exponent(dim)
    if not mass >= 0:
        raise ValueError(f"mass must be nonnegative, got {mass}")
    if not c > 0:
        raise ValueError(f"coefficient must be positive, got {c}")
    return -c * mass ** q


def exact_mass(m0: float, c: float, tau, dim: int):
    """Closed form M(tau) = (M0^(-1/(N+1)) + c tau/(N+1))^(-(N+1)).

    Accepts scalar or array tau >= 0.  Positive for all tau when M0 > 0: the
    ODE never reaches zero in finite time.
    """
    if not m0 > 0:
        raise ValueError(f"initial mass must be positive, got {m0}")
    if not c > 0:
        raise ValueError(f"coefficient must be positive, got {c}")
    p = dim + 1
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ValueError("tau must be nonnegative")
    out = (m0 ** (-1.0 / p) + c * tau / p) ** (-p)
    if out.ndim == 0:
        return float(out)
    return out


def integrate_mass_ode(
    m0: float, c: float, tau_end: float, dt: float, dim: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Classical RK4 for d M/d tau = -c M^q from tau = 0 to tau_end.

    Fixed steps of size dt (capped at 1e-2 so the order-4 error stays below
    the 1e-8 oracle tolerance out to tau_end = 50) with one shorter final
    step to land exactly on tau_end.  Returns (taus, masses) including both
    endpoints.  M0 = 0 stays identically zero.
    """
    if m0 < 0:
        raise ValueError(f"initial mass must be nonnegative, got {m0}")
    if not c > 0:
        raise ValueError(f"coefficient must be positive, got {c}")
    if not 0 < dt <= 1e-2:
        raise ValueError(f"dt must lie in (0, 1e-2], got {dt}")
    if not tau_end > 0:
        raise ValueError(f"tau_end must be positive, got {tau_end}")
    q = critical_exponent(dim)

    def f(m: float) -> float:
        return -c * m ** q

    def rk4(m: float, h: float) -> float:
        k1 = f(m)
        k2 = f(m + 0.5 * h * k1)
        k3 = f(m + 0.5 * h * k2)
        k4 = f(m + h * k3)
        return m + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    n_full = int(math.floor(tau_end / dt * (1.0 + 1e-12)))
    taus = [0.0]
    masses = [m0]
    m = m0
    for k in range(1, n_full + 1):
        m = rk4(m, dt)
        taus.append(k * dt)
        masses.append(m)
    rem = tau_end - taus[-1]
    if rem > 1e-12 * max(1.0, tau_end):
        m = rk4(m, rem)
        taus.append(tau_end)
        masses.append(m)
    return np.array(taus), np.array(masses)


def asymptote_deviation(m0: float, c: float, dim: int, tau):
    """tau^(N+1) M(tau) / ((q-1) c)^(-(N+1)) - 1, the relative distance to the amplitude law.

    Equals (1 + (N+1) M0^(-1/(N+1)) / (c tau))^(-(N+1)) - 1 in closed form,
    so it decays like O(1/tau).
    """
    if not m0 > 0:
        raise ValueError(f"initial mass must be positive, got {m0}")
    if not c > 0:
        raise ValueError(f"coefficient must be positive, got {c}")
    p = dim + 1
    tau = np.asarray(tau, dtype=float)
    if np.any(tau <= 0):
        raise ValueError("tau must be positive")
    out = (1.0 + p * m0 ** (-1.0 / p) / (c * tau)) ** (-p) - 1.0
    if out.ndim == 0:
        return float(out)
    return out
