"""The Gaussian profile, its first derivative modes, and the critical constants.

G(xi) = (4 pi)^(-N/2) exp(-|xi|^2 / 4) is the unit-mass kernel of the rescaled
heat flow.  At the critical absorption exponent q = (N+2)/(N+1) the late-time
mass of the full flow is governed by the constant c = |grad G|_{L^q}^q, and the
rescaled mass approaches the amplitude (N+1)^(N+1) |grad G|_{L^q}^{-(N+2)}.

|grad G| = (|xi|/2) G, so |grad G|_{L^q}^q reduces in spherical coordinates to
a Gamma-function expression; an independent adaptive-quadrature route is kept
alongside the closed form and the two must agree to 1e-10.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .fields import Grid, ScalarField

__all__ = [
    "CriticalConstants",
    "critical_exponent",
    "critical_constants",
    "gaussian_profile",
    "hermite_mode",
    "heat_kernel",
    "gaussian_gradient_norm",
    "gaussian_gradient_norm_quadrature",
    "gradient_power_integral",
    "asymptotic_amplitude",
]


def critical_exponent(dim: int) -> float:
    """The absorption exponent (dim + 2) / (dim + 1) separating the mass dichotomy."""
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    return (dim + 2) / (dim + 1)


def heat_kernel(t: float, grid: Grid) -> ScalarField:
    """Self-similar heat kernel (4 pi t)^(-N/2) exp(-|x|^2 / (4t)), unit mass, t > 0."""
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    vals = (4.0 * math.pi * t) ** (-grid.dim / 2) * np.exp(-grid.radius_sq / (4.0 * t))
    return ScalarField(grid, vals)


def gaussian_profile(grid: Grid) -> ScalarField:
    """The profile G on the grid; identical to heat_kernel(1.0, grid)."""
    return heat_kernel(1.0, grid)


def hermite_mode(grid: Grid, k: int) -> ScalarField:
    """k-th derivative of G along the first axis, k in {0, 1, 2}.

    These are the leading eigenmodes of the drift-diffusion generator, with
    eigenvalues 0, -1/2, -1.
    """
    if k not in (0, 1, 2):
        raise ValueError(f"k must be 0, 1, or 2, got {k}")
    g = gaussian_profile(grid).values
    xi1 = grid.coords[0]
    if k == 0:
        vals = g
    elif k == 1:
        vals = -0.5 * xi1 * g
    else:
        vals = (0.25 * xi1 * xi1 - 0.5) * g
    return ScalarField(grid, np.ascontiguousarray(np.broadcast_to(vals, grid.shape)))


def gradient_power_integral(dim: int, q: float) -> float:
    """Closed form of int |grad G|^q over R^dim via the Gamma function.

    With |grad G| = (r/2) G(r) the spherical reduction gives
    surface(dim) * (4 pi)^(-dim q / 2) * 2^(-q) * Gamma((dim+q)/2) / (2 a^((dim+q)/2)),
    a = q/4.
    """
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim!r}")
    if not q > 0:
        raise ValueError(f"q must be positive, got {q}")
    a = q / 4.0
    surface = 2.0 * math.pi ** (dim / 2) / math.gamma(dim / 2)
    radial = math.gamma((dim + q) / 2) / (2.0 * a ** ((dim + q) / 2))
    return (4.0 * math.pi) ** (-dim * q / 2) * 2.0 ** (-q) * surface * radial


def gaussian_gradient_norm(dim: int) -> float:
    """|grad G|_{L^q} at the critical exponent, closed form."""
    q = critical_exponent(dim)
    return gradient_power_integral(dim, q) ** (1.0 / q)


def gaussian_gradient_norm_quadrature(dim: int, amplitude: float = 1.0) -> float:
    """Independent adaptive-quadrature route for |grad(amplitude * G)|_{L^q}.

    Kept separate from the closed form on purpose; the two routes are compared
    at verification time.  Supports dim 1 and 2 (the grid dimensions).
    """
    if dim not in (1, 2):
        raise ValueError(f"quadrature oracle supports dim 1 or 2, got {dim}")
    q = critical_exponent(dim)
    norm0 = (4.0 * math.pi) ** (-dim / 2)

    def radial_density(r: float) -> float:
        g = amplitude * norm0 * math.exp(-r * r / 4.0)
        return (0.5 * r * g) ** q

    if dim == 1:
        integrand = lambda r: 2.0 * radial_density(r)
    else:
        integrand = lambda r: 2.0 * math.pi * r * radial_density(r)
    val, _ = quad(integrand, 0.0, np.inf, epsabs=1e-14, epsrel=1e-14, limit=200)
    return val ** (1.0 / q)


def asymptotic_amplitude(dim: int) -> float:
    """(N+1)^(N+1) |grad G|_{L^q}^{-(N+2)}: the late-time rescaled-mass limit."""
    return (dim + 1) ** (dim + 1) * gaussian_gradient_norm(dim) ** (-(dim + 2))


@dataclass(frozen=True)
class CriticalConstants:
    """Bundle of the critical-exponent constants for one dimension.

    Construction checks the two defining identities:
    amplitude * grad_norm^(dim+2) = (dim+1)^(dim+1)  (to 1e-12) and
    amplitude = ((q - 1) * dissipation_coeff)^(-(dim+1))  (to 1e-10).
    """

    dim: int
    exponent: float
    grad_norm: float
    dissipation_coeff: float
    amplitude: float

    def __post_init__(self):
        lhs = self.amplitude * self.grad_norm ** (self.dim + 2)
        target = (self.dim + 1) ** (self.dim + 1)
        if abs(lhs - target) > 1e-12 * target:
            raise ValueError(f"amplitude identity violated: {lhs} vs {target}")
        alt = ((self.exponent - 1.0) * self.dissipation_coeff) ** (-(self.dim + 1))
        if abs(self.amplitude - alt) > 1e-10 * abs(alt):
            raise ValueError(f"amplitude mismatch: {self.amplitude} vs {alt}")


@functools.lru_cache(maxsize=None)
def critical_constants(dim: int) -> CriticalConstants:
    """Compute (once per dimension) and cache the critical constants."""
    q = critical_exponent(dim)
    power = gradient_power_integral(dim, q)
    return CriticalConstants(
        dim=int(dim),
        exponent=q,
        grad_norm=power ** (1.0 / q),
        dissipation_coeff=power,
        amplitude=asymptotic_amplitude(dim),
    )
