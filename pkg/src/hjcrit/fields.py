"""Uniform tensor grids, nodal scalar fields, and second-order discrete calculus.

Everything downstream (flows, diagnostics, probes) lives on a uniform grid over
the cube [-L, L]^N, N in {1, 2}, with an odd number of samples per axis so the
origin is a node.  Differential stencils use homogeneous Dirichlet closure:
values outside the box are read as zero.  Quadrature is the tensor trapezoid
rule, which is exact on piecewise-linear data and spectrally accurate on fields
that decay below round-off before reaching the boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "WeightParams",
    "build_grid",
    "field_from_function",
    "gradient",
    "laplacian",
    "integrate",
    "lp_norm",
    "weighted_l2_norm",
    "h1m_norm",
    "fokker_planck",
]


class Grid:
    """Uniform tensor grid on [-half_width, half_width]^dim.

    Spacing is h = 2 * half_width / (points_per_axis - 1).  Samples along each
    axis are -half_width + i * h; oddness of points_per_axis puts a sample at
    the origin.  Instances are immutable and hashable on (dim, half_width,
    points_per_axis).
    """

    def __init__(self, dim: int, half_width: float, points_per_axis: int):
        if dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {dim}")
        if not half_width >= 8.0:
            raise ValueError(f"half_width must be >= 8, got {half_width}")
        n = points_per_axis
        if not isinstance(n, (int, np.integer)):
            raise ValueError(f"points_per_axis must be an integer, got {n!r}")
        if n % 2 == 0:
            raise ValueError(f"points_per_axis must be odd, got {n}")
        if n < 3:
            raise ValueError(f"points_per_axis must be >= 3, got {n}")
        self.dim = int(dim)
        self.half_width = float(half_width)
        self.points_per_axis = int(n)
        self.spacing = 2.0 * self.half_width / (n - 1)
        self.axis = np.linspace(-self.half_width, self.half_width, n)
        self.axis.flags.writeable = False
        self.shape = (n,) * self.dim
        # Broadcastable coordinate views, one per axis.
        if self.dim == 1:
            self.coords = (self.axis,)
        else:
            self.coords = (self.axis[:, None], self.axis[None, :])
        self.radius_sq = np.ascontiguousarray(
            np.broadcast_to(sum(c * c for c in self.coords), self.shape)
        )
        self.radius_sq.flags.writeable = False
        # Trapezoid weights along one axis; tensorized on demand.
        w = np.full(n, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        self.axis_weights = w
        self.axis_weights.flags.writeable = False

    def coordinates(self, *index: int) -> tuple[float, ...]:
        """Coordinates of the sample at the given multi-index."""
        if len(index) != self.dim:
            raise ValueError(f"expected {self.dim} indices, got {len(index)}")
        return tuple(float(self.axis[i]) for i in index)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Grid)
            and self.dim == other.dim
            and self.half_width == other.half_width
            and self.points_per_axis == other.points_per_axis
        )

    def __hash__(self) -> int:
        return hash((self.dim, self.half_width, self.points_per_axis))

    def __repr__(self) -> str:
        return f"Grid(dim={self.dim}, half_width={self.half_width}, points_per_axis={self.points_per_axis})"


def build_grid(dim: int, half_width: float, points_per_axis: int) -> Grid:
    """Construct a uniform grid; see Grid for the validated constraints."""
    return Grid(dim, half_width, points_per_axis)


@dataclass(frozen=True)
class ScalarField:
    """Nodal real field on a Grid.

    Values are stored in the grid's tensor shape; the flat (C-order) layout is
    lexicographic in the axis indices.  Construction rejects non-finite values
    and freezes the array, so every public operation yields a finite,
    immutable field.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != self.grid.shape:
            if vals.size == math.prod(self.grid.shape) and vals.ndim == 1:
                vals = vals.reshape(self.grid.shape)
            else:
                raise ValueError(f"values shape {vals.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if vals.flags.writeable:
            vals = vals.copy()
            vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def flat_values(self) -> np.ndarray:
        """Values in lexicographic (C-order) layout, length points_per_axis**dim."""
        return self.values.reshape(-1)


@dataclass(frozen=True)
class WeightParams:
    """Polynomial weight 1 + |xi|^(2m) for the weighted L2 and H1 norms.

    The integrability condition m > dim/2 (which makes the weighted space embed
    into L1) is enforced at construction.
    """

    m: float
    dim: int = 1

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not self.m > self.dim / 2:
            raise ValueError(f"weight exponent m must exceed dim/2 = {self.dim / 2}, got {self.m}")

    def values_on(self, grid: Grid) -> np.ndarray:
        if grid.dim != self.dim:
            raise ValueError(f"weight dim {self.dim} does not match grid dim {grid.dim}")
        return 1.0 + grid.radius_sq ** self.m


def field_from_function(grid: Grid, fn) -> ScalarField:
    """Sample fn(*coords) on the grid; fn must broadcast over coordinate arrays."""
    vals = np.ascontiguousarray(np.broadcast_to(fn(*grid.coords), grid.shape))
    return ScalarField(grid, vals)


# --- array kernels (shared with the time steppers) ---

def _axis_slice(ndim: int, axis: int, sl: slice) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = sl
    return tuple(idx)


def gradient_axis_array(values: np.ndarray, spacing: float, axis: int) -> np.ndarray:
    """Second-order first derivative along one axis.

    Central differences in the interior; one-sided second-order stencils at the
    two faces (these read stored samples only, no ghost values).
    """
    g = np.empty_like(values)
    nd = values.ndim
    mid = _axis_slice(nd, axis, slice(1, -1))
    up = _axis_slice(nd, axis, slice(2, None))
    dn = _axis_slice(nd, axis, slice(None, -2))
    g[mid] = (values[up] - values[dn]) / (2.0 * spacing)
    i0 = _axis_slice(nd, axis, 0)
    i1 = _axis_slice(nd, axis, 1)
    i2 = _axis_slice(nd, axis, 2)
    g[i0] = (-3.0 * values[i0] + 4.0 * values[i1] - values[i2]) / (2.0 * spacing)
    j0 = _axis_slice(nd, axis, -1)
    j1 = _axis_slice(nd, axis, -2)
    j2 = _axis_slice(nd, axis, -3)
    g[j0] = (3.0 * values[j0] - 4.0 * values[j1] + values[j2]) / (2.0 * spacing)
    return g


def gradient_arrays(values: np.ndarray, spacing: float) -> list[np.ndarray]:
    return [gradient_axis_array(values, spacing, a) for a in range(values.ndim)]


def laplacian_array(values: np.ndarray, spacing: float) -> np.ndarray:
    """Standard 3-point (per axis) second difference with Dirichlet-zero closure.

    Stencils reaching past a face read zero there; stored boundary samples are
    used as-is by interior stencils.
    """
    out = np.zeros_like(values)
    h2 = spacing * spacing
    nd = values.ndim
    for axis in range(nd):
        mid = _axis_slice(nd, axis, slice(1, -1))
        up = _axis_slice(nd, axis, slice(2, None))
        dn = _axis_slice(nd, axis, slice(None, -2))
        out[mid] += (values[up] - 2.0 * values[mid] + values[dn]) / h2
        i0 = _axis_slice(nd, axis, 0)
        i1 = _axis_slice(nd, axis, 1)
        out[i0] += (values[i1] - 2.0 * values[i0]) / h2
        j0 = _axis_slice(nd, axis, -1)
        j1 = _axis_slice(nd, axis, -2)
        out[j0] += (values[j1] - 2.0 * values[j0]) / h2
    return out


def fokker_planck_array(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Drift-diffusion generator: laplacian + xi/2 . grad + dim/2."""
    out = laplacian_array(values, grid.spacing)
    for axis in range(grid.dim):
        out += 0.5 * grid.coords[axis] * gradient_axis_array(values, grid.spacing, axis)
    out += 0.5 * grid.dim * values
    return out


def integrate_array(values: np.ndarray, grid: Grid) -> float:
    val = values
    for _ in range(grid.dim):
        val = np.tensordot(grid.axis_weights, val, axes=(0, 0))
    return float(val)


# --- public field operations ---

def gradient(f: ScalarField) -> tuple[ScalarField, ...]:
    """Discrete gradient, one component field per axis."""
    return tuple(
        ScalarField(f.grid, gradient_axis_array(f.values, f.grid.spacing, a))
        for a in range(f.grid.dim)
    )


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField(f.grid, laplacian_array(f.values, f.grid.spacing))


def fokker_planck(f: ScalarField) -> ScalarField:
    """Generator of the rescaled heat flow: laplacian + xi/2 . grad + dim/2.

    The Gaussian profile is its discrete near-kernel; the residual on it decays
    like spacing^2.
    """
    return ScalarField(f.grid, fokker_planck_array(f.values, f.grid))


def integrate(f: ScalarField) -> float:
    """Tensor trapezoid quadrature of the field over the box."""
    return integrate_array(f.values, f.grid)


def lp_norm(f: ScalarField, p: float) -> float:
    """Quadrature-weighted Lp norm; p = inf is the plain max of |values|."""
    if p == np.inf or p == math.inf:
        return float(np.max(np.abs(f.values)))
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    if p == 1.0:
        return integrate_array(np.abs(f.values), f.grid)
    return integrate_array(np.abs(f.values) ** p, f.grid) ** (1.0 / p)


def weighted_l2_norm(f: ScalarField, weight: WeightParams) -> float:
    """L2 norm against the weight 1 + |xi|^(2m)."""
    w = weight.values_on(f.grid)
    return math.sqrt(integrate_array(w * f.values * f.values, f.grid))


def gradient_magnitude_sq_array(values: np.ndarray, spacing: float) -> np.ndarray:
    parts = gradient_arrays(values, spacing)
    out = parts[0] * parts[0]
    for g in parts[1:]:
        out += g * g
    return out


def h1m_norm(f: ScalarField, weight: WeightParams) -> float:
    """Weighted H1 norm: sqrt(|f|_m^2 + |grad f|_m^2) with the discrete gradient."""
    w = weight.values_on(f.grid)
    gsq = gradient_magnitude_sq_array(f.values, f.grid.spacing)
    return math.sqrt(
        integrate_array(w * f.values * f.values, f.grid)
        + integrate_array(w * gsq, f.grid)
    )
