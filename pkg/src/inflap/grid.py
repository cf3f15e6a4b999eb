"""Uniform grids over [-1, 1]^n and the sampled scalar fields living on them.

The computational domain is the unit ball B_1 realized as the inscribed ball
of the square grid: nodes with |x| < 1 are active, everything else carries
Dirichlet data.  Grids are odd-sized so the center is a node; for
m = 1 (mod 4) the +-1/2 ring is on-grid as well.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

__all__ = ["ScalarField", "GridCoverageError"]


class GridCoverageError(ValueError):
    """A requested region is not contained in the grid."""


def _validate_shape(n: int, m: int) -> None:
    if n not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {n}")
    if m < 5 or m % 2 == 0:
        raise ValueError(f"points per axis must be odd and >= 5, got {m}")


@dataclass
class ScalarField:
    """A scalar function sampled on the uniform grid over [-1, 1]^n.

    values has shape (m,) for n=1 and (m, m) for n=2; entry [i] or [i, j]
    sits at x = (-1 + i*h, -1 + j*h) with h = 2/(m-1).  Axis 0 is x_1.
    """

    n: int
    m: int
    values: np.ndarray
    h: float = field(init=False)

    def __post_init__(self) -> None:
        _validate_shape(self.n, self.m)
        self.h = 2.0 / (self.m - 1)
        self.values = np.asarray(self.values, dtype=float)
        expected = (self.m,) * self.n
        if self.values.shape != expected:
            raise ValueError(
                f"values shape {self.values.shape} != expected {expected}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field contains non-finite values")

    # ---------------------------------------------------------------- geometry

    def axis_coords(self) -> np.ndarray:
        return -1.0 + self.h * np.arange(self.m)

    def coords(self) -> np.ndarray:
        """Node coordinates, shape (m, n) in 1D order or (m, m, n) in 2D."""
        ax = self.axis_coords()
        if self.n == 1:
            return ax[:, None]
        X, Y = np.meshgrid(ax, ax, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def radii(self) -> np.ndarray:
        """Euclidean distance of each node from the origin."""
        c = self.coords()
        return np.sqrt(np.sum(c * c, axis=-1))

    def interior_mask(self) -> np.ndarray:
        """Nodes strictly inside the inscribed ball B_1 (the solve region)."""
        return self.radii() < 1.0 - 1e-12

    def point(self, idx: tuple[int, ...] | int) -> np.ndarray:
        idx = (idx,) if isinstance(idx, (int, np.integer)) else tuple(idx)
        ax = self.axis_coords()
        return np.array([ax[i] for i in idx])

    def index_of(self, x) -> tuple[int, ...]:
        """Nearest grid index to the point x (must be on-grid to 1e-9)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        idx = np.rint((x + 1.0) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= self.m):
            raise GridCoverageError(f"point {x} outside the grid")
        if np.max(np.abs(self.point(tuple(idx)) - x)) > 1e-9:
            raise GridCoverageError(f"point {x} is not a grid node")
        return tuple(int(i) for i in idx)

    # ------------------------------------------------------------- evaluation

    def interpolate(self, x) -> float:
        """Multilinear interpolation at an arbitrary in-domain point."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.n,):
            raise ValueError(f"point must have {self.n} coordinates")
        if np.any(x < -1.0 - 1e-12) or np.any(x > 1.0 + 1e-12):
            raise GridCoverageError(f"point {x} outside [-1,1]^{self.n}")
        s = np.clip((x + 1.0) / self.h, 0.0, self.m - 1.0)
        i0 = np.minimum(s.astype(int), self.m - 2)
        w = s - i0
        if self.n == 1:
            i = int(i0[0])
            return float((1 - w[0]) * self.values[i] + w[0] * self.values[i + 1])
        i, j = int(i0[0]), int(i0[1])
        v = self.values
        return float(
            (1 - w[0]) * (1 - w[1]) * v[i, j]
            + w[0] * (1 - w[1]) * v[i + 1, j]
            + (1 - w[0]) * w[1] * v[i, j + 1]
            + w[0] * w[1] * v[i + 1, j + 1]
        )

    def sup_norm(self, radius: float = 1.0) -> float:
        """Sup of |u| over nodes with |x| <= radius."""
        mask = self.radii() <= radius + 1e-12
        return float(np.max(np.abs(self.values[mask])))

    def ball_indices(self, center, radius: float) -> np.ndarray:
        """Indices (k, n) of nodes with |x - center| <= radius, lexicographic."""
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if np.max(np.abs(center)) + radius > 1.0 + 1e-12:
            raise GridCoverageError(
                f"ball of radius {radius} about {center} leaves the grid"
            )
        c = self.coords().reshape(-1, self.n)
        d2 = np.sum((c - center) ** 2, axis=1)
        flat = np.flatnonzero(d2 <= radius**2 + 1e-12)
        if self.n == 1:
            return flat[:, None]
        return np.stack(np.unravel_index(flat, (self.m, self.m)), axis=1)

    # -------------------------------------------------------------- factories

    @classmethod
    def from_function(cls, fn, m: int, n: int) -> "ScalarField":
        """Sample fn (taking an (..., n) coordinate array) on the grid."""
        probe = cls(n=n, m=m, values=np.zeros((m,) * n))
        vals = np.asarray(fn(probe.coords()), dtype=float)
        return cls(n=n, m=m, values=vals.reshape((m,) * n))

    @classmethod
    def zeros(cls, m: int, n: int) -> "ScalarField":
        return cls(n=n, m=m, values=np.zeros((m,) * n))

    def copy(self) -> "ScalarField":
        return ScalarField(n=self.n, m=self.m, values=self.values.copy())

    # --------------------------------------------------------------- file I/O

    def to_csv(self) -> str:
        """Serialize: first line `m,h,n`, then m^n values row-major, %.17g."""
        buf = io.StringIO()
        buf.write(f"{self.m},{self.h:.17g},{self.n}\n")
        for v in self.values.reshape(-1):
            buf.write(f"{v:.17g}\n")
        return buf.getvalue()

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_csv())

    @classmethod
    def from_csv(cls, text: str) -> "ScalarField":
        lines = text.strip().splitlines()
        head = lines[0].split(",")
        if len(head) != 3:
            raise ValueError("grid CSV header must be 'm,h,n'")
        m, h, n = int(head[0]), float(head[1]), int(head[2])
        _validate_shape(n, m)
        if abs(h - 2.0 / (m - 1)) > 1e-12:
            raise ValueError(f"inconsistent header: h={h} but m={m}")
        vals = np.array([float(s) for s in lines[1:]], dtype=float)
        if vals.size != m**n:
            raise ValueError(f"expected {m**n} values, found {vals.size}")
        return cls(n=n, m=m, values=vals.reshape((m,) * n))

    @classmethod
    def load_csv(cls, path) -> "ScalarField":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_csv(fh.read())
