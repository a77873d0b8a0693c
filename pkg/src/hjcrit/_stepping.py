"""Shared time steppers for the method-of-lines flows.

Both flows split as d/dt v = laplacian(v) + rest(t, v).  explicit_rk4 is the
classical four-stage scheme on the full right-hand side, subject to the
diffusion stability bound dt <= h^2 / (4 N).  imex_euler treats the laplacian
with backward Euler (banded solve in 1-D, sparse LU in 2-D) and the rest
explicitly.  Every step pins the boundary samples back to zero, matching the
Dirichlet closure of the spatial stencils.
"""
from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .fields import Grid, laplacian_array

SCHEMES = ("explicit_rk4", "imex_euler")

RestFn = Callable[[float, np.ndarray], np.ndarray]


def zero_boundary(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        values[0] = 0.0
        values[-1] = 0.0
    else:
        values[0, :] = 0.0
        values[-1, :] = 0.0
        values[:, 0] = 0.0
        values[:, -1] = 0.0
    return values


def _dirichlet_laplacian_matrix(grid: Grid) -> scipy.sparse.csc_matrix:
    n = grid.points_per_axis
    h2 = grid.spacing ** 2
    main = np.full(n, -2.0 / h2)
    off = np.full(n - 1, 1.0 / h2)
    lap1 = scipy.sparse.diags([off, main, off], [-1, 0, 1], format="csc")
    if grid.dim == 1:
        return lap1
    eye = scipy.sparse.identity(n, format="csc")
    return (scipy.sparse.kron(lap1, eye) + scipy.sparse.kron(eye, lap1)).tocsc()


def make_stepper(grid: Grid, dt: float, scheme: str, rest: RestFn) -> Callable[[float, np.ndarray], np.ndarray]:
    """Build step(t, values) -> values advancing one dt.

    rest(t, values) is everything except the laplacian.  The returned step
    owns no state besides factorized matrices, so it is safe to reuse.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    h = grid.spacing

    if scheme == "explicit_rk4":
        # Diffusion stability margin for the explicit scheme.
        bound = h * h / (4.0 * grid.dim)
        if dt > bound * (1.0 + 1e-12):
            raise ValueError(
                f"explicit_rk4 requires dt <= h^2/(4*dim) = {bound:.6e}, got {dt:.6e}"
            )

        def full_rhs(t: float, v: np.ndarray) -> np.ndarray:
            return laplacian_array(v, h) + rest(t, v)

        def step(t: float, v: np.ndarray) -> np.ndarray:
            k1 = full_rhs(t, v)
            k2 = full_rhs(t + 0.5 * dt, v + (0.5 * dt) * k1)
            k3 = full_rhs(t + 0.5 * dt, v + (0.5 * dt) * k2)
            k4 = full_rhs(t + dt, v + dt * k3)
            out = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            return zero_boundary(out)

        return step

    # imex_euler: (I - dt L) v_new = v + dt * rest(t, v)
    if grid.dim == 1:
        n = grid.points_per_axis
        h2 = h * h
        ab = np.zeros((3, n))
        ab[0, 1:] = -dt / h2
        ab[1, :] = 1.0 + 2.0 * dt / h2
        ab[2, :-1] = -dt / h2

        def step(t: float, v: np.ndarray) -> np.ndarray:
            rhs = v + dt * rest(t, v)
            out = scipy.linalg.solve_banded((1, 1), ab, rhs)
            return zero_boundary(out)

        return step

    matrix = scipy.sparse.identity(grid.points_per_axis ** 2, format="csc") - dt * _dirichlet_laplacian_matrix(grid)
    solver = scipy.sparse.linalg.splu(matrix)

    def step(t: float, v: np.ndarray) -> np.ndarray:
        rhs = (v + dt * rest(t, v)).reshape(-1)
        out = solver.solve(rhs).reshape(grid.shape)
        return zero_boundary(out)

    return step
