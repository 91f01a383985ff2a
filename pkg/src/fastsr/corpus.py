"""Procedural test images in ``[0, 1]`` for desk-scale experiments."""

from __future__ import annotations

import numpy as np

__all__ = ["checkerboard", "blobs", "ramp", "shapes", "mosaic", "scene", "CORPUS", "make_image"]


def _grid(m, n):
    i, j = np.mgrid[:m, :n]
    return i / m, j / n


def checkerboard(m: int, n: int | None = None, cells: int = 8) -> np.ndarray:
    n = m if n is None else n
    u, v = _grid(m, n)
    return 0.2 + 0.6 * ((np.floor(u * cells) + np.floor(v * cells)) % 2)


def blobs(m: int, n: int | None = None, seed: int = 0, count: int = 6) -> np.ndarray:
    """Sum of random isotropic Gaussians over a dim background."""
    n = m if n is None else n
    rng = np.random.default_rng(seed)
    u, v = _grid(m, n)
    out = np.full((m, n), 0.1)
    for _ in range(count):
        cu, cv = rng.uniform(0.1, 0.9, 2)
        width = rng.uniform(0.003, 0.02)
        out += rng.uniform(0.2, 0.6) * np.exp(-((u - cu) ** 2 + (v - cv) ** 2) / width)
    return np.clip(out, 0.0, 1.0)


def ramp(m: int, n: int | None = None) -> np.ndarray:
    n = m if n is None else n
    u, v = _grid(m, n)
    return 0.1 + 0.4 * u + 0.4 * v


def shapes(m: int, n: int | None = None, seed: int = 0, count: int = 8) -> np.ndarray:
    """Piecewise-constant disks and rectangles on a flat background."""
    n = m if n is None else n
    rng = np.random.default_rng(seed)
    u, v = _grid(m, n)
    out = np.full((m, n), 0.3)
    for k in range(count):
        level = rng.uniform(0.05, 0.95)
        cu, cv = rng.uniform(0.15, 0.85, 2)
        size = rng.uniform(0.08, 0.25)
        if k % 2:
            mask = (u - cu) ** 2 + (v - cv) ** 2 < size**2
        else:
            mask = (np.abs(u - cu) < size) & (np.abs(v - cv) < 0.6 * size)
        out[mask] = level
    return out


def mosaic(m: int, n: int | None = None, seed: int = 0, min_block: int = 4) -> np.ndarray:
    """Random quadtree partition into constant tiles aligned to the dyadic grid."""
    n = m if n is None else n
    rng = np.random.default_rng(seed)
    out = np.empty((m, n))

    def fill(r0, c0, h, w, depth):
        if h > min_block and w > min_block and (depth < 2 or rng.random() < 0.5):
            h2, w2 = h // 2, w // 2
            for dr, dc in ((0, 0), (0, w2), (h2, 0), (h2, w2)):
                fill(r0 + dr, c0 + dc, h2, w2, depth + 1)
        else:
            out[r0 : r0 + h, c0 : c0 + w] = rng.uniform(0.05, 0.95)

    fill(0, 0, m, n, 0)
    return out


def scene(m: int, n: int | None = None, seed: int = 0) -> np.ndarray:
    """Shapes plus smooth shading and a fine periodic texture band."""
    n = m if n is None else n
    u, v = _grid(m, n)
    base = 0.6 * shapes(m, n, seed) + 0.25 * blobs(m, n, seed + 1)
    texture = 0.1 * np.sin(2 * np.pi * 24 * u) * np.cos(2 * np.pi * 17 * v) * (v > 0.7)
    return np.clip(base + texture + 0.05, 0.0, 1.0)


CORPUS = {
    "checkerboard": checkerboard,
    "blobs": blobs,
    "ramp": ramp,
    "shapes": shapes,
    "mosaic": mosaic,
    "scene": scene,
}


def make_image(name: str, m: int, n: int | None = None, **kw) -> np.ndarray:
    try:
        fn = CORPUS[name]
    except KeyError:
        raise ValueError(f"unknown corpus image {name!r}; choose from {sorted(CORPUS)}") from None
    return fn(m, n, **kw)
