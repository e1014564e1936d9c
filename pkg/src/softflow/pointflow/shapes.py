"""Point sets, per-shape normalisation and synthetic thin-structure shapes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PointSet:
    points: np.ndarray
    shape_id: str = ""
    normalization: dict = field(default_factory=lambda: {"center": [0.0, 0.0, 0.0], "scale": 1.0})

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2:
            raise ValueError(f"points must be (M, d), got {self.points.shape}")
        if not np.isfinite(self.points).all():
            raise ValueError("point set contains non-finite coordinates")

    def __len__(self):
        return len(self.points)

    @classmethod
    def ingest(cls, points, shape_id=""):
        """Centre on the mean and scale to unit bounding radius, keeping the record."""
        p = np.asarray(points, dtype=np.float64)
        center = p.mean(axis=0)
        radius = float(np.linalg.norm(p - center, axis=1).max())
        if radius == 0:
            raise ValueError("cannot normalise a point set with zero extent")
        return cls((p - center) / radius, shape_id,
                   {"center": center.tolist(), "scale": radius})

    def denormalized(self):
        n = self.normalization
        return self.points * n["scale"] + np.asarray(n["center"])


def _segment(rng, a, b, n):
    u = rng.random((n, 1))
    return np.asarray(a) + u * (np.asarray(b) - np.asarray(a))


def chair(rng, m=128, leg_frac=0.25, seat=0.8, leg_len=1.2, back_height=1.0, jitter=0.0):
    """Seat plate, back plate and four one-dimensional legs.

    Returns ``(points, leg_mask)``; legs get ``round(leg_frac * m)`` points.
    """
    n_leg = int(round(leg_frac * m))
    n_rest = m - n_leg
    n_back = n_rest // 3
    n_seat = n_rest - n_back
    s = seat * (1.0 + jitter * (rng.random() - 0.5))
    seat_pts = np.column_stack([rng.uniform(-s, s, n_seat), rng.uniform(-s, s, n_seat), np.zeros(n_seat)])
    back_pts = np.column_stack([rng.uniform(-s, s, n_back), np.full(n_back, s), rng.uniform(0, back_height, n_back)])
    corners = [(-s, -s), (s, -s), (-s, s), (s, s)]
    which = np.arange(n_leg) % 4
    legs = np.zeros((n_leg, 3))
    for k, (cx, cy) in enumerate(corners):
        idx = which == k
        legs[idx] = _segment(rng, (cx, cy, 0.0), (cx, cy, -leg_len), int(idx.sum()))
    pts = np.concatenate([seat_pts, back_pts, legs])
    mask = np.concatenate([np.zeros(n_rest, bool), np.ones(n_leg, bool)])
    return pts, mask


def thin_cross(rng, m=128, arm=1.0):
    """Three orthogonal line segments through the origin."""
    axis = np.arange(m) % 3
    t = rng.uniform(-arm, arm, m)
    pts = np.zeros((m, 3))
    pts[np.arange(m), axis] = t
    return pts


SHAPES = {"chair": chair, "thin-cross": thin_cross}


def sample_shape(name, rng, m=128, **kw):
    if name == "chair":
        return chair(rng, m, **kw)[0]
    if name == "thin-cross":
        return thin_cross(rng, m, **kw)
    raise ValueError(f"unknown synthetic shape {name!r}; choose from {sorted(SHAPES)}")


def shape_family(name, n_sets, rng, m=128):
    """``n_sets`` normalised point sets from one synthetic family (random size jitter)."""
    out = []
    for i in range(n_sets):
        if name == "chair":
            pts = chair(rng, m, jitter=0.4, leg_len=rng.uniform(0.8, 1.6))[0]
        else:
            pts = thin_cross(rng, m, arm=rng.uniform(0.6, 1.4)) + rng.normal(0, 0.02, (m, 3))
        out.append(PointSet.ingest(pts, f"{name}-{i:04d}"))
    return out


def leg_chamfer(recon, points, leg_mask):
    """Chamfer distance restricted to the legs.

    Coverage term: legs' squared distance to the nearest reconstructed point.
    Precision term: reconstructed points whose nearest input point is a leg
    point, measured against the legs.  Both are means; an empty precision
    set contributes zero.
    """
    from scipy.spatial import cKDTree

    recon = np.asarray(getattr(recon, "points", recon), dtype=np.float64)
    points = np.asarray(getattr(points, "points", points), dtype=np.float64)
    legs = points[leg_mask]
    cover = cKDTree(recon).query(legs)[0] ** 2
    nearest = cKDTree(points).query(recon)[1]
    near_leg = recon[leg_mask[nearest]]
    prec = cKDTree(legs).query(near_leg)[0] ** 2 if len(near_leg) else np.zeros(1)
    return float(cover.mean() + prec.mean())
