"""2-D distributions supported on 1-D curves, and distance to those curves."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

TOY_NAMES = ("2sines", "target", "circles", "moons", "checkerboard")

CIRCLE_RADII = (1.0, 2.0)
SINE_AMPLITUDE = 2.5
SINE_GRID = 10_000


def _two_sines(bsz, rng):
    x = (rng.random(bsz) - 0.5) * 2 * np.pi
    u = (rng.binomial(1, 0.5, bsz) - 0.5) * 2
    y = u * np.sin(x) * SINE_AMPLITUDE
    return np.stack((x, y), 1)


def _target(bsz, rng):
    # Mirrors the reference generator term by term, including its zero
    # coefficients and the index-based angle for the circle.
    shapes = rng.integers(7, size=bsz)
    mask = [(shapes == i) * 1.0 for i in range(7)]
    theta = np.linspace(0, 2 * np.pi, bsz, endpoint=False)
    x = ((mask[0] + mask[1] + mask[2]) * (rng.random(bsz) - 0.5) * 4
         + (-mask[3] + 0 * mask[4] + mask[5]) * 2 * np.ones(bsz)
         + mask[6] * np.cos(theta))
    y = ((-mask[0] + 0 * mask[1] + mask[2]) * 2 * np.ones(bsz)
         + (mask[3] + mask[4] + mask[5]) * (rng.random(bsz) - 0.5) * 4
         + mask[6] * np.sin(theta))
    return np.stack((x, y), 1)


def _circles(bsz, rng):
    r = np.where(rng.random(bsz) < 0.5, CIRCLE_RADII[0], CIRCLE_RADII[1])
    th = rng.random(bsz) * 2 * np.pi
    return np.stack((r * np.cos(th), r * np.sin(th)), 1)


# two interleaved half circles of radius 1.5
MOON_R = 1.5
MOON_CENTERS = ((-0.75, -0.375), (0.75, 0.375))


def _moons(bsz, rng):
    which = rng.random(bsz) < 0.5
    th = rng.random(bsz) * np.pi
    upper = np.stack((MOON_CENTERS[0][0] + MOON_R * np.cos(th), MOON_CENTERS[0][1] + MOON_R * np.sin(th)), 1)
    lower = np.stack((MOON_CENTERS[1][0] - MOON_R * np.cos(th), MOON_CENTERS[1][1] - MOON_R * np.sin(th)), 1)
    return np.where(which[:, None], upper, lower)


def _checker_segments():
    """Diagonals of the dark cells of a 4x4 board on [-2, 2]^2."""
    segs = []
    for i in range(4):
        for j in range(4):
            if (i + j) % 2 == 0:
                x0, y0 = -2.0 + i, -2.0 + j
                if (i // 2 + j // 2) % 2 == 0:
                    segs.append(((x0, y0), (x0 + 1, y0 + 1)))
                else:
                    segs.append(((x0, y0 + 1), (x0 + 1, y0)))
    return np.array(segs)


def _checkerboard(bsz, rng):
    segs = _checker_segments()
    k = rng.integers(len(segs), size=bsz)
    u = rng.random(bsz)[:, None]
    return segs[k, 0] + u * (segs[k, 1] - segs[k, 0])


_GENERATORS = {
    "2sines": _two_sines,
    "target": _target,
    "circles": _circles,
    "moons": _moons,
    "checkerboard": _checkerboard,
}


def sample_toy(name, bsz, rng):
    if name not in _GENERATORS:
        raise ValueError(f"unknown toy distribution {name!r}; choose from {TOY_NAMES}")
    if bsz < 1:
        raise ValueError("batch size must be at least 1")
    return _GENERATORS[name](int(bsz), rng)


@dataclass(frozen=True)
class ToyDataset:
    name: str
    seed: int = 0

    def __post_init__(self):
        if self.name not in _GENERATORS:
            raise ValueError(f"unknown toy distribution {self.name!r}")

    def sample(self, bsz, rng=None):
        return sample_toy(self.name, bsz, rng if rng is not None else np.random.default_rng(self.seed))


# -- distance to the support --------------------------------------------------
def _segment_distance(p, a, b):
    """Distances from points ``p`` (N, 2) to each segment, shape (N, S)."""
    a = a[None]
    ab = (b - a[0])[None]
    ap = p[:, None, :] - a
    t = np.clip((ap * ab).sum(-1) / (ab * ab).sum(-1), 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.linalg.norm(p[:, None, :] - proj, axis=-1)


def _target_segments():
    segs = []
    for y in (-2.0, 0.0, 2.0):
        segs.append(((-2.0, y), (2.0, y)))
    for x in (-2.0, 0.0, 2.0):
        segs.append(((x, -2.0), (x, 2.0)))
    return np.array(segs)


_sine_tree = None


def _sine_curve_tree():
    global _sine_tree
    if _sine_tree is None:
        x = np.linspace(-np.pi, np.pi, SINE_GRID)
        y = SINE_AMPLITUDE * np.sin(x)
        pts = np.concatenate([np.stack((x, y), 1), np.stack((x, -y), 1)])
        _sine_tree = cKDTree(pts)
    return _sine_tree


def point_manifold_distance(samples, name):
    """Per-sample Euclidean distance to the support of distribution ``name``."""
    p = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    if name == "2sines":
        return _sine_curve_tree().query(p)[0]
    r = np.linalg.norm(p, axis=1)
    if name == "circles":
        return np.min(np.abs(r[:, None] - np.array(CIRCLE_RADII)[None]), axis=1)
    if name == "target":
        segs = _target_segments()
        d = _segment_distance(p, segs[:, 0], segs[:, 1]).min(axis=1)
        return np.minimum(d, np.abs(r - 1.0))
    if name == "checkerboard":
        segs = _checker_segments()
        return _segment_distance(p, segs[:, 0], segs[:, 1]).min(axis=1)
    if name == "moons":
        out = []
        for (cx, cy), sign in zip(MOON_CENTERS, (1.0, -1.0)):
            q = (p - np.array([cx, cy])) * sign
            # half circle: angles in [0, pi] after the sign flip
            ang = np.arctan2(q[:, 1], q[:, 0])
            on_arc = ang >= 0
            rr = np.linalg.norm(q, axis=1)
            d_arc = np.abs(rr - MOON_R)
            ends = np.array([[MOON_R, 0.0], [-MOON_R, 0.0]])
            d_end = np.linalg.norm(q[:, None, :] - ends[None], axis=-1).min(axis=1)
            out.append(np.where(on_arc, d_arc, d_end))
        return np.minimum(out[0], out[1])
    raise ValueError(f"unknown toy distribution {name!r}")


def manifold_distance(samples, dataset):
    """Mean distance from ``samples`` to the dataset's 1-D support."""
    name = dataset.name if isinstance(dataset, ToyDataset) else dataset
    p = np.asarray(samples, dtype=np.float64)
    if p.size == 0:
        raise ValueError("no samples")
    return float(point_manifold_distance(p, name).mean())
