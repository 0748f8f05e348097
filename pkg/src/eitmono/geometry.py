"""Unit-disk phantoms, pixel partitions, and pixel classification.

The computational domain is the open unit disk.  A phantom is a list of
pairwise disjoint inclusions (disks, axis-aligned rectangles, axis-aligned
ellipses), each carrying a positive conductivity contrast, so that the
conductivity is 1 outside the inclusions and 1 + contrast inside.

Reconstruction lives on a pixel partition: the M x M grid over the bounding
square [-1, 1]^2, with every cell clipped to the disk and cells of negligible
clipped area dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, DomainError

# Cells whose clipped area falls below this fraction of the full cell area
# are dropped from the partition.
AREA_FLOOR_FRACTION = 1e-3

# Default number of sub-cells per axis when clipping a cell to the disk.
CLIP_SUBDIV = 16


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float
    contrast: float

    def contains(self, x, y):
        dx = np.asarray(x) - self.center[0]
        dy = np.asarray(y) - self.center[1]
        return dx * dx + dy * dy < self.radius ** 2

    def support_radius(self) -> float:
        return math.hypot(*self.center) + self.radius

    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        r = self.radius
        return (cx - r, cx + r, cy - r, cy + r)


@dataclass(frozen=True)
class Rectangle:
    lower_left: tuple[float, float]
    upper_right: tuple[float, float]
    contrast: float

    def contains(self, x, y):
        x = np.asarray(x)
        y = np.asarray(y)
        (x0, y0), (x1, y1) = self.lower_left, self.upper_right
        return (x > x0) & (x < x1) & (y > y0) & (y < y1)

    def support_radius(self) -> float:
        (x0, y0), (x1, y1) = self.lower_left, self.upper_right
        return max(math.hypot(x, y) for x in (x0, x1) for y in (y0, y1))

    def bbox(self) -> tuple[float, float, float, float]:
        (x0, y0), (x1, y1) = self.lower_left, self.upper_right
        return (x0, x1, y0, y1)


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    semi_x: float
    semi_y: float
    contrast: float

    def contains(self, x, y):
        u = (np.asarray(x) - self.center[0]) / self.semi_x
        v = (np.asarray(y) - self.center[1]) / self.semi_y
        return u * u + v * v < 1.0

    def support_radius(self) -> float:
        # Conservative: encloses the ellipse in a concentric disk.
        return math.hypot(*self.center) + max(self.semi_x, self.semi_y)

    def bbox(self) -> tuple[float, float, float, float]:
        cx, cy = self.center
        return (cx - self.semi_x, cx + self.semi_x,
                cy - self.semi_y, cy + self.semi_y)


Shape = Disk | Rectangle | Ellipse


def _bbox_overlap(a, b) -> tuple[float, float, float, float] | None:
    x0 = max(a[0], b[0])
    x1 = min(a[1], b[1])
    y0 = max(a[2], b[2])
    y1 = min(a[3], b[3])
    if x0 >= x1 or y0 >= y1:
        return None
    return (x0, x1, y0, y1)


@dataclass(frozen=True)
class Phantom:
    """A collection of disjoint inclusions strictly inside the unit disk."""

    shapes: tuple[Shape, ...] = ()

    def __init__(self, shapes=()):
        object.__setattr__(self, "shapes", tuple(shapes))
        self._validate()

    def _validate(self) -> None:
        for k, s in enumerate(self.shapes):
            if s.contrast <= 0:
                raise ConfigError(f"shape {k}: contrast must be positive, got {s.contrast}")
            if isinstance(s, Disk) and s.radius <= 0:
                raise ConfigError(f"shape {k}: disk radius must be positive")
            if isinstance(s, Rectangle):
                (x0, y0), (x1, y1) = s.lower_left, s.upper_right
                if x0 >= x1 or y0 >= y1:
                    raise ConfigError(f"shape {k}: rectangle corners are not ordered")
            if isinstance(s, Ellipse) and (s.semi_x <= 0 or s.semi_y <= 0):
                raise ConfigError(f"shape {k}: ellipse semi-axes must be positive")
            if s.support_radius() >= 1.0:
                raise ConfigError(f"shape {k}: not strictly inside the unit disk")
        # Disjointness: a sampled check on the overlap of bounding boxes.
        for i in range(len(self.shapes)):
            for j in range(i + 1, len(self.shapes)):
                box = _bbox_overlap(self.shapes[i].bbox(), self.shapes[j].bbox())
                if box is None:
                    continue
                xs = np.linspace(box[0], box[1], 64)
                ys = np.linspace(box[2], box[3], 64)
                gx, gy = np.meshgrid(xs, ys)
                both = self.shapes[i].contains(gx, gy) & self.shapes[j].contains(gx, gy)
                if both.any():
                    raise ConfigError(f"shapes {i} and {j} overlap")

    def min_contrast(self) -> float:
        if not self.shapes:
            raise ConfigError("phantom has no inclusions, minimum contrast undefined")
        return min(s.contrast for s in self.shapes)

    def mask(self, x, y):
        """Boolean membership in the union of inclusions (vectorized)."""
        x = np.asarray(x)
        y = np.asarray(y)
        out = np.zeros(np.broadcast(x, y).shape, dtype=bool)
        for s in self.shapes:
            out |= s.contains(x, y)
        return out


def sigma_at(phantom: Phantom, points):
    """Conductivity 1 + sum of contrasts at points of the closed unit disk.

    Parameters
    ----------
    phantom : Phantom
    points : array_like, shape (2,) or (n, 2)

    Returns
    -------
    float or ndarray
        Conductivity value(s); raises DomainError for points outside the
        closed unit disk.
    """
    p = np.asarray(points, dtype=float)
    scalar = p.ndim == 1
    p = np.atleast_2d(p)
    r2 = p[:, 0] ** 2 + p[:, 1] ** 2
    if np.any(r2 > 1.0 + 1e-12):
        raise DomainError("point outside the closed unit disk")
    sigma = np.ones(len(p))
    for s in phantom.shapes:
        sigma += s.contrast * s.contains(p[:, 0], p[:, 1])
    return float(sigma[0]) if scalar else sigma


def _circle_antiderivative(x: float) -> float:
    # Integral of sqrt(1 - t^2) from 0 to x, extended constantly beyond [-1, 1].
    x = max(-1.0, min(1.0, x))
    return 0.5 * (x * math.sqrt(max(0.0, 1.0 - x * x)) + math.asin(x))


def _corner_area(x: float, y: float) -> float:
    # Area of [0, x] x [0, y] intersected with the unit disk, x, y >= 0.
    x = min(x, 1.0)
    y = min(y, 1.0)
    if x <= 0.0 or y <= 0.0:
        return 0.0
    if x * x + y * y <= 1.0:
        return x * y
    u = math.sqrt(max(0.0, 1.0 - y * y))
    return y * u + _circle_antiderivative(x) - _circle_antiderivative(u)


def disk_cell_area(x0: float, x1: float, y0: float, y1: float) -> float:
    """Exact area of the axis-aligned cell [x0,x1]x[y0,y1] clipped to the unit disk."""

    def signed(x: float, y: float) -> float:
        s = (1.0 if x >= 0 else -1.0) * (1.0 if y >= 0 else -1.0)
        return s * _corner_area(abs(x), abs(y))

    return signed(x1, y1) - signed(x0, y1) - signed(x1, y0) + signed(x0, y0)


def cell_quadrature(x0, x1, y0, y1, subdiv: int = CLIP_SUBDIV, min_points: int | None = None):
    """Midpoint quadrature for a cell clipped to the unit disk.

    The cell is split into subdiv x subdiv sub-cells; sub-cells whose centers
    lie inside the disk are kept with their full area as weight.  When
    min_points is given, the subdivision is doubled until at least that many
    quadrature nodes survive (thin boundary slivers would otherwise be
    sampled by only a handful of points).

    Returns
    -------
    points : ndarray, shape (q, 2)
    weights : ndarray, shape (q,)
    """
    n = subdiv
    while True:
        hx = (x1 - x0) / n
        hy = (y1 - y0) / n
        cx = x0 + hx * (np.arange(n) + 0.5)
        cy = y0 + hy * (np.arange(n) + 0.5)
        gx, gy = np.meshgrid(cx, cy)
        keep = gx ** 2 + gy ** 2 < 1.0
        q = int(keep.sum())
        if min_points is None or q >= min_points or n >= 1024:
            pts = np.column_stack([gx[keep], gy[keep]])
            w = np.full(q, hx * hy)
            return pts, w
        n *= 2


class PixelClass(Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class Pixel:
    """One cell of the reconstruction grid, clipped to the unit disk."""

    index: int
    x0: float
    x1: float
    y0: float
    y1: float
    area: float          # exact clipped area
    row: int
    col: int

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def quadrature(self, subdiv: int = CLIP_SUBDIV, min_points: int | None = None):
        return cell_quadrature(self.x0, self.x1, self.y0, self.y1,
                               subdiv=subdiv, min_points=min_points)


@dataclass(frozen=True)
class PixelPartition:
    resolution: int
    pixels: tuple[Pixel, ...]
    # (row, col) -> pixel index, -1 where the cell was dropped
    grid: np.ndarray = field(repr=False)

    @property
    def cell_size(self) -> float:
        return 2.0 / self.resolution

    def total_area(self) -> float:
        return float(sum(p.area for p in self.pixels))

    def pixel_at(self, x: float, y: float) -> int:
        """Pixel index containing (x, y), or -1 if the point is in no kept cell."""
        if not (-1.0 <= x <= 1.0 and -1.0 <= y <= 1.0):
            return -1
        col = min(int((x + 1.0) / self.cell_size), self.resolution - 1)
        row = min(int((y + 1.0) / self.cell_size), self.resolution - 1)
        return int(self.grid[row, col])


def build_partition(resolution: int,
                    area_floor: float = AREA_FLOOR_FRACTION) -> PixelPartition:
    """Build the M x M pixel partition of the unit disk.

    Cells of the regular grid on [-1, 1]^2 are clipped to the disk; cells
    whose clipped area is below area_floor times the full cell area are
    dropped.  Indices are assigned row-major, bottom row first.
    """
    if resolution < 2:
        raise ConfigError(f"partition resolution must be >= 2, got {resolution}")
    h = 2.0 / resolution
    floor = area_floor * h * h
    pixels = []
    grid = -np.ones((resolution, resolution), dtype=int)
    for row in range(resolution):
        y0 = -1.0 + row * h
        y1 = y0 + h
        for col in range(resolution):
            x0 = -1.0 + col * h
            x1 = x0 + h
            area = disk_cell_area(x0, x1, y0, y1)
            if area < floor:
                continue
            idx = len(pixels)
            pixels.append(Pixel(idx, x0, x1, y0, y1, area, row, col))
            grid[row, col] = idx
    return PixelPartition(resolution=resolution, pixels=tuple(pixels), grid=grid)


def classify_pixel(pixel: Pixel, phantom: Phantom, samples: int = 8) -> PixelClass:
    """Classify a pixel against the phantom by deterministic sub-sampling.

    A samples x samples midpoint grid over the cell is clipped to the disk;
    the pixel is INSIDE when every sample lies in some inclusion, OUTSIDE
    when none does, BOUNDARY otherwise.
    """
    if samples < 4:
        raise ConfigError(f"classification needs >= 4 samples per axis, got {samples}")
    hx = (pixel.x1 - pixel.x0) / samples
    hy = (pixel.y1 - pixel.y0) / samples
    xs = pixel.x0 + hx * (np.arange(samples) + 0.5)
    ys = pixel.y0 + hy * (np.arange(samples) + 0.5)
    gx, gy = np.meshgrid(xs, ys)
    keep = gx ** 2 + gy ** 2 < 1.0
    if not keep.any():
        return PixelClass.OUTSIDE
    hit = phantom.mask(gx[keep], gy[keep])
    if hit.all():
        return PixelClass.INSIDE
    if not hit.any():
        return PixelClass.OUTSIDE
    return PixelClass.BOUNDARY


def classify_partition(partition: PixelPartition, phantom: Phantom,
                       samples: int = 8) -> list[PixelClass]:
    return [classify_pixel(p, phantom, samples) for p in partition.pixels]
