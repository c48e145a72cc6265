"""Periodic finite-difference grids.

A :class:`DomainGrid` is a uniform grid on a flat torus ``R^n / (L_1 Z x ... x
L_n Z)``.  Fields live in numpy arrays whose leading ``n`` axes are the grid
axes; any trailing axes are tensor components.  All stencils wrap periodically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["DomainGrid"]


@dataclass(frozen=True)
class DomainGrid:
    """Uniform periodic grid on an n-torus.

    sizes   : points per axis (each >= 4; >= 5 for fourth-order stencils)
    lengths : period per axis
    order   : finite-difference order of the centered first-derivative
              stencil, 2 (default) or 4
    """

    sizes: tuple
    lengths: tuple
    order: int = 2

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        lengths = tuple(float(l) for l in self.lengths)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "lengths", lengths)
        if len(sizes) != len(lengths):
            raise ValueError("sizes and lengths must have equal length")
        if not 2 <= len(sizes) <= 4:
            raise ValueError("domain dimension must be 2, 3 or 4")
        if self.order not in (2, 4):
            raise ValueError("stencil order must be 2 or 4")
        min_size = 4 if self.order == 2 else 5
        if any(s < min_size for s in sizes):
            raise ValueError(f"every axis needs >= {min_size} points")
        if any(l <= 0 for l in lengths):
            raise ValueError("periods must be positive")

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def spacings(self) -> tuple:
        return tuple(l / s for l, s in zip(self.lengths, self.sizes))

    @property
    def num_points(self) -> int:
        return int(np.prod(self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacings))

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """1-d array of coordinates along one axis (0, h, 2h, ...)."""
        h = self.spacings[axis]
        return h * np.arange(self.sizes[axis])

    def coordinates(self) -> np.ndarray:
        """Coordinate field of shape (*sizes, n)."""
        axes = [self.axis_coordinates(a) for a in range(self.n)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    # -- stencils -----------------------------------------------------------

    def shift(self, values: np.ndarray, axis: int, steps: int) -> np.ndarray:
        """values at x + steps*h*e_axis, wrapping periodically."""
        return np.roll(values, -steps, axis=axis)

    def diff(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Centered first derivative along a grid axis.

        Exact for fields that are linear between the stencil points; second
        or fourth order accurate on smooth periodic data.
        """
        h = self.spacings[axis]
        if self.order == 2:
            return (self.shift(values, axis, 1) - self.shift(values, axis, -1)) / (2.0 * h)
        return (
            -self.shift(values, axis, 2)
            + 8.0 * self.shift(values, axis, 1)
            - 8.0 * self.shift(values, axis, -1)
            + self.shift(values, axis, -2)
        ) / (12.0 * h)

    def gradient(self, scalar: np.ndarray) -> np.ndarray:
        """Stack of centered derivatives, shape (*sizes, n)."""
        return np.stack([self.diff(scalar, a) for a in range(self.n)], axis=-1)

    def second_diff(self, values: np.ndarray, axis_i: int, axis_j: int) -> np.ndarray:
        """Composed centered second derivative d_i d_j.

        The composition is used uniformly (also for i == j) so that scalar
        second derivatives ride on exactly the same stencils as the map
        calculus, where second derivatives are transported differences of
        first differences.
        """
        return self.diff(self.diff(values, axis_j), axis_i)

    def line_integral(self, covector: np.ndarray, axis: int) -> float:
        """Trapezoidal (= uniform, by periodicity) integral of a 1-form
        component along the coordinate cycle of ``axis`` through the origin.

        covector: field of shape (*sizes, n).
        """
        comp = covector[..., axis]
        index = [0] * self.n
        index[axis] = slice(None)
        line = comp[tuple(index)]
        return float(np.sum(line) * self.spacings[axis])

    def integrate(self, scalar: np.ndarray) -> float:
        """Volume integral of a scalar field with uniform cell weights."""
        return float(np.sum(scalar) * self.cell_volume)

    def same_layout(self, other: "DomainGrid") -> bool:
        return self.sizes == other.sizes and np.allclose(self.lengths, other.lengths)

    def refined(self, factor: int = 2) -> "DomainGrid":
        return DomainGrid(tuple(s * factor for s in self.sizes), self.lengths, self.order)
