"""Uniform grid with a node on the interface, and the interface closure.

The interface node stores a single value, so density continuity holds by
construction; its value is eliminated from second-order one-sided
differences so that ``u_x(0-) = sigma * u_x(0+)`` holds to the scheme's order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MisalignedInterface


@dataclass(frozen=True)
class InterfaceGrid:
    x_left: float
    x_right: float
    h: float
    n_left: int
    n_right: int

    @property
    def index_zero(self) -> int:
        return self.n_left

    @property
    def size(self) -> int:
        return self.n_left + self.n_right + 1

    @property
    def x(self) -> np.ndarray:
        # integer offsets keep the interface node at exactly 0.0
        return (np.arange(self.size) - self.n_left) * self.h

    def to_dict(self) -> dict:
        return {"x_left": self.x_left, "x_right": self.x_right, "h": self.h,
                "n_left": self.n_left, "n_right": self.n_right}


def _node_count(length: float, h: float) -> int:
    ratio = length / h
    n = round(ratio)
    if abs(ratio - n) > max(1e-12, 4 * np.finfo(float).eps * abs(ratio)):
        raise MisalignedInterface(f"{length:g} is not a multiple of h={h:g}")
    return int(n)


def build_grid(x_left: float, x_right: float, h: float) -> InterfaceGrid:
    if not (x_left < 0 < x_right and h > 0):
        raise ValueError("need x_left < 0 < x_right and h > 0")
    n_left = _node_count(-x_left, h)
    n_right = _node_count(x_right, h)
    if n_left < 2 or n_right < 2:
        raise ValueError("closure needs at least two nodes on each side of the interface")
    return InterfaceGrid(float(x_left), float(x_right), float(h), n_left, n_right)


@dataclass
class Field:
    grid: InterfaceGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.size,):
            raise ValueError("field size does not match grid")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def closure_value(values: np.ndarray, iz: int, sigma: float) -> float:
    return (4.0 * values[iz - 1] - values[iz - 2] + sigma * (4.0 * values[iz + 1] - values[iz + 2])) / (
        3.0 * (1.0 + sigma)
    )


def interface_closure(u: Field, sigma: float) -> float:
    """Interface value making the one-sided fluxes match with ratio sigma."""
    return closure_value(u.values, u.grid.index_zero, sigma)


def one_sided_slopes(u: Field) -> tuple[float, float]:
    v, iz, h = u.values, u.grid.index_zero, u.grid.h
    left = (3.0 * v[iz] - 4.0 * v[iz - 1] + v[iz - 2]) / (2.0 * h)
    right = (-3.0 * v[iz] + 4.0 * v[iz + 1] - v[iz + 2]) / (2.0 * h)
    return left, right


def flux_mismatch(u: Field, sigma: float) -> float:
    left, right = one_sided_slopes(u)
    return left - sigma * right


def laplacian(u: Field) -> np.ndarray:
    """Centred second difference; zero on the interface and boundary nodes."""
    v, iz, h = u.values, u.grid.index_zero, u.grid.h
    out = np.zeros_like(v)
    out[1:-1] = (v[:-2] - 2.0 * v[1:-1] + v[2:]) / (h * h)
    out[iz] = 0.0
    return out


def to_csv_rows(u: Field):
    return zip(u.x, u.values)
