"""Rendering of reconstructions: portable graymap, CSV table, and figures.

The PGM path is byte-deterministic (integer raster, plain P2 text) and is
the artifact compared in reproducibility checks; the matplotlib figures are
for human inspection and carry no determinism guarantee.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .geometry import Phantom, PixelPartition


def coefficient_raster(partition: PixelPartition, coefficients, scale_max: float,
                       canvas_size: int = 256) -> np.ndarray:
    """Integer raster of the pixel coefficients on a canvas of the bounding square.

    Canvas points outside the disk (or in dropped cells) are 0; a pixel with
    coefficient a_k paints round(255 * a_k / scale_max) over its footprint.
    Values are clipped into [0, scale_max] first, so comparison modes that
    overshoot the box still render.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    if len(coefficients) != len(partition.pixels):
        raise ConfigError("coefficient vector does not match the partition")
    if scale_max <= 0:
        raise ConfigError(f"scale_max must be positive, got {scale_max}")
    levels = np.rint(255.0 * np.clip(coefficients, 0.0, scale_max) / scale_max)
    levels = levels.astype(int)

    C = canvas_size
    # canvas row 0 is the top of the image (y = +1)
    xs = -1.0 + 2.0 * (np.arange(C) + 0.5) / C
    ys = 1.0 - 2.0 * (np.arange(C) + 0.5) / C
    gx, gy = np.meshgrid(xs, ys)
    inside = gx ** 2 + gy ** 2 < 1.0

    M = partition.resolution
    col = np.minimum(((gx + 1.0) / partition.cell_size).astype(int), M - 1)
    row = np.minimum(((gy + 1.0) / partition.cell_size).astype(int), M - 1)
    pixel_idx = partition.grid[row, col]

    raster = np.zeros((C, C), dtype=int)
    valid = inside & (pixel_idx >= 0)
    raster[valid] = levels[pixel_idx[valid]]
    return raster


def write_pgm(path, raster: np.ndarray) -> None:
    """Plain-text (P2) portable graymap with maxval 255."""
    raster = np.asarray(raster)
    if raster.ndim != 2:
        raise ConfigError(f"raster must be 2-D, got shape {raster.shape}")
    if raster.min() < 0 or raster.max() > 255:
        raise ConfigError("raster values must lie in [0, 255]")
    h, w = raster.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{w} {h}\n255\n")
        for row in raster:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def read_pgm(path) -> np.ndarray:
    with open(path) as fh:
        tokens = fh.read().split()
    if tokens[0] != "P2":
        raise ConfigError(f"expected a P2 graymap, got magic {tokens[0]!r}")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    data = np.array(tokens[4:4 + w * h], dtype=int).reshape(h, w)
    if maxval != 255:
        raise ConfigError(f"expected maxval 255, got {maxval}")
    return data


def write_coefficient_csv(path, partition: PixelPartition, coefficients) -> None:
    """CSV of pixel centers and coefficients: x_center, y_center, a_hat."""
    coefficients = np.asarray(coefficients, dtype=float)
    if len(coefficients) != len(partition.pixels):
        raise ConfigError("coefficient vector does not match the partition")
    with open(path, "w") as fh:
        fh.write("x_center, y_center, a_hat\n")
        for p, a in zip(partition.pixels, coefficients):
            cx, cy = p.center
            fh.write(f"{cx!r}, {cy!r}, {float(a)!r}\n")


def render_image(partition: PixelPartition, coefficients, scale_max: float,
                 pgm_path, csv_path, canvas_size: int = 256) -> None:
    """Emit the deterministic image pair: P2 graymap plus coefficient CSV."""
    raster = coefficient_raster(partition, coefficients, scale_max, canvas_size)
    write_pgm(pgm_path, raster)
    write_coefficient_csv(csv_path, partition, coefficients)


def save_figures(partition: PixelPartition, coefficients, scale_max: float,
                 phantom: Phantom, recon_png, truth_png, canvas_size: int = 256) -> None:
    """Matplotlib renderings: reconstruction heatmap and the true phantom."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    raster = coefficient_raster(partition, coefficients, scale_max, canvas_size)
    theta = np.linspace(0.0, 2.0 * np.pi, 512)

    fig, ax = plt.subplots(figsize=(5, 5), layout="constrained")
    im = ax.imshow(raster / 255.0 * scale_max, extent=(-1, 1, -1, 1),
                   vmin=0.0, vmax=scale_max, cmap="viridis")
    ax.plot(np.cos(theta), np.sin(theta), color="w", lw=0.8)
    ax.set_title("reconstructed coefficients")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.savefig(recon_png, dpi=150)
    plt.close(fig)

    C = canvas_size
    xs = -1.0 + 2.0 * (np.arange(C) + 0.5) / C
    ys = 1.0 - 2.0 * (np.arange(C) + 0.5) / C
    gx, gy = np.meshgrid(xs, ys)
    truth = np.where(gx ** 2 + gy ** 2 < 1.0, phantom.mask(gx, gy) * 1.0, np.nan)

    fig, ax = plt.subplots(figsize=(5, 5), layout="constrained")
    ax.imshow(truth, extent=(-1, 1, -1, 1), vmin=0.0, vmax=1.0, cmap="gray_r")
    ax.plot(np.cos(theta), np.sin(theta), color="k", lw=0.8)
    ax.set_title("inclusion support")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.savefig(truth_png, dpi=150)
    plt.close(fig)
