"""Geometric and neural similarity rewards plus corpus-level metrics.

Point clouds are drawn area-weighted from the valid UV samples of a
solid's faces, with a seed derived from the solid's content hash so the
same shape always yields the same cloud.  The empty solid contributes a
degenerate single-point anchor cloud at the model-box center so shaping
stays defined at episode start.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .brep import extract_faces
from .errors import EmptyCloud, EmptySet, SizeMismatch
from .geometry.solid import INSIDE

DEFAULT_WEIGHTS = (0.3, 0.2, 0.2, 0.3)  # iou, mmd, nc, nr
CD_CLOUD_SIZE = 1024
EMD_CLOUD_SIZE = 256


@dataclass
class PointCloud:
    points: np.ndarray
    normals: np.ndarray
    source: str = ""

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.normals = np.atleast_2d(np.asarray(self.normals, dtype=float))
        if len(self.points) != len(self.normals):
            raise SizeMismatch("points and normals must have equal counts")

    def __len__(self):
        return len(self.points)


@dataclass
class RewardBreakdown:
    iou: float
    mmd: float
    nc: float
    nr: float
    composite: float
    weights: tuple = DEFAULT_WEIGHTS

    def recompute(self):
        a, b, g, d = self.weights
        return a * self.iou + b * self.mmd + g * self.nc + d * self.nr


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

def _cloud_seed(solid, size):
    return (int(solid.structural_hash()[:15], 16) ^ (size * 0x9E3779B1)) \
        % (2**63 - 1)


def _anchor_cloud(size, source):
    """Degenerate stand-in cloud at the model-box center (shapeless state)."""
    return PointCloud(np.zeros((size, 3)),
                      np.tile([[0.0, 0.0, 1.0]], (size, 1)), source=source)


def sample_point_cloud(solid, size, faces=None):
    """Area-weighted surface samples (with replacement) from valid UV points."""
    if solid.is_empty:
        return _anchor_cloud(size, "empty")
    if faces is None:
        faces = extract_faces(solid)
    pts, nrm, wts = [], [], []
    for f in faces:
        v = f.valid
        if not v.any():
            continue
        pts.append(f.points[v])
        nrm.append(f.normals[v])
        wts.append(np.maximum(f.area_weights[v], 1e-12))
    if not pts:
        return _anchor_cloud(size, "degenerate")
    pts = np.concatenate(pts)
    nrm = np.concatenate(nrm)
    wts = np.concatenate(wts)
    rng = np.random.default_rng(_cloud_seed(solid, size))
    idx = rng.choice(len(pts), size=size, p=wts / wts.sum())
    return PointCloud(pts[idx], nrm[idx], source=solid.structural_hash()[:12])


# ---------------------------------------------------------------------------
# individual terms
# ---------------------------------------------------------------------------

def iou(g, s, resolution=64, target_occupancy=None):
    """Voxel intersection-over-union on the union bounding box."""
    if resolution < 16:
        raise ValueError("resolution must be >= 16")
    if g.is_empty and s.is_empty:
        return 1.0
    if g.is_empty or s.is_empty:
        return 0.0
    lo = np.minimum(g.bbox[0], s.bbox[0])
    hi = np.maximum(g.bbox[1], s.bbox[1])
    occ_g = _occupancy(g, lo, hi, resolution)
    if target_occupancy is not None:
        occ_s = target_occupancy
    else:
        occ_s = _occupancy(s, lo, hi, resolution)
    inter = np.count_nonzero(occ_g & occ_s)
    union = np.count_nonzero(occ_g | occ_s)
    return 0.0 if union == 0 else inter / union


def _occupancy(solid, lo, hi, n):
    span = np.maximum(hi - lo, 1e-12)
    axes = [lo[k] + span[k] * (np.arange(n) + 0.5) / n for k in range(3)]
    gx, gy, gz = np.meshgrid(*axes, indexing="ij")
    centers = np.stack((gx.ravel(), gy.ravel(), gz.ravel()), axis=1)
    # boundary band disabled: occupancy counts strict interior only
    return solid.classify_many(centers, tol=0.0) == INSIDE


def chamfer(x: PointCloud, y: PointCloud):
    """Mean squared nearest-neighbor distance, summed over both directions."""
    if len(x) == 0 or len(y) == 0:
        raise EmptyCloud("chamfer distance needs non-empty clouds")
    d2 = cdist(x.points, y.points, "sqeuclidean")
    return float(d2.min(axis=1).mean() + d2.min(axis=0).mean())


def emd(x: PointCloud, y: PointCloud):
    """Minimum total distance over bijections (exact assignment)."""
    if len(x) == 0 or len(y) == 0:
        raise EmptyCloud("earth mover's distance needs non-empty clouds")
    if len(x) != len(y):
        raise SizeMismatch(f"EMD needs equal cloud sizes, got {len(x)} vs {len(y)}")
    cost = cdist(x.points, y.points)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def mmd_reward(g, s, cd_size=CD_CLOUD_SIZE, emd_size=EMD_CLOUD_SIZE,
               g_faces=None, s_clouds=None):
    """-(CD + EMD)/2 between surface clouds of two solids."""
    xg = sample_point_cloud(g, cd_size, faces=g_faces)
    xs = s_clouds[cd_size] if s_clouds else sample_point_cloud(s, cd_size)
    cd = chamfer(xg, xs)
    eg = sample_point_cloud(g, emd_size, faces=g_faces)
    es = s_clouds[emd_size] if s_clouds else sample_point_cloud(s, emd_size)
    em = emd(eg, es)
    return -(cd + em) / 2.0


def normal_consistency(g_cloud: PointCloud, s_cloud: PointCloud, paired=False):
    """Mean over reference normals of the best cosine against generated ones.

    ``paired=True`` restricts each reference normal to its nearest
    generated point instead of the free maximum.
    """
    if len(g_cloud) == 0 or len(s_cloud) == 0:
        raise EmptyCloud("normal consistency needs non-empty clouds")
    ns = s_cloud.normals
    ng = g_cloud.normals
    if paired:
        nearest = cdist(s_cloud.points, g_cloud.points).argmin(axis=1)
        return float(np.sum(ns * ng[nearest], axis=1).mean())
    dots = ns @ ng.T
    return float(dots.max(axis=1).mean())


def neural_reward(g, s, encoder, g_graph=None, s_graph=None):
    """Cosine similarity of pooled graph embeddings; 0 for an empty side."""
    from .brep import face_graph
    if g.is_empty or s.is_empty:
        return 0.0
    eg = encoder.embed(g_graph if g_graph is not None else face_graph(g))
    es = encoder.embed(s_graph if s_graph is not None else face_graph(s))
    ng, ns = np.linalg.norm(eg), np.linalg.norm(es)
    if ng < 1e-12 or ns < 1e-12:
        return 0.0
    return float(np.dot(eg, es) / (ng * ns))


def composite_reward(g, s, encoder, weights=DEFAULT_WEIGHTS, resolution=64,
                     cd_size=CD_CLOUD_SIZE, emd_size=EMD_CLOUD_SIZE,
                     g_faces=None, g_graph=None, s_graph=None, s_clouds=None,
                     target_occupancy=None, paired_nc=False):
    """All reward terms and their weighted sum."""
    i = iou(g, s, resolution, target_occupancy=target_occupancy)
    m = mmd_reward(g, s, cd_size, emd_size, g_faces=g_faces, s_clouds=s_clouds)
    gc = sample_point_cloud(g, cd_size, faces=g_faces)
    sc = s_clouds[cd_size] if s_clouds else sample_point_cloud(s, cd_size)
    n = normal_consistency(gc, sc, paired=paired_nc)
    r = neural_reward(g, s, encoder, g_graph=g_graph, s_graph=s_graph)
    a, b, gw, d = weights
    total = a * i + b * m + gw * n + d * r
    return RewardBreakdown(iou=i, mmd=m, nc=n, nr=r, composite=total,
                           weights=tuple(weights))


# ---------------------------------------------------------------------------
# corpus-level evaluation metrics
# ---------------------------------------------------------------------------

def jsd(p_counts, q_counts):
    """Jensen-Shannon divergence (natural log) of two voxel distributions."""
    p = np.asarray(p_counts, dtype=float).ravel()
    q = np.asarray(q_counts, dtype=float).ravel()
    if p.sum() <= 0 or q.sum() <= 0:
        raise EmptySet("JSD needs non-empty distributions")
    p = p / p.sum()
    q = q / q.sum()
    m = 0.5 * (p + q)

    def kl(a, b):
        mask = a > 0
        return float(np.sum(a[mask] * np.log(a[mask] / b[mask])))

    return 0.5 * kl(p, m) + 0.5 * kl(q, m)


def eval_metrics(generated, reference, resolution=64, jsd_resolution=32,
                 cloud_size=CD_CLOUD_SIZE):
    """{iou, cov, mmd_cd, jsd, nc} between two lists of solids."""
    if not generated or not reference:
        raise EmptySet("metric sets must be non-empty")
    g_clouds = [sample_point_cloud(g, cloud_size) for g in generated]
    s_clouds = [sample_point_cloud(s, cloud_size) for s in reference]
    cd_matrix = np.array([[chamfer(x, y) for y in s_clouds] for x in g_clouds])

    matched_refs = set(int(j) for j in cd_matrix.argmin(axis=1))
    cov = len(matched_refs) / len(reference)
    mmd_cd = float(cd_matrix.min(axis=0).mean())

    best_gen = cd_matrix.argmin(axis=0)
    nc = float(np.mean([
        normal_consistency(g_clouds[int(best_gen[j])], s_clouds[j])
        for j in range(len(reference))]))

    if len(generated) == len(reference):
        pairs = list(zip(generated, reference))
    else:
        pairs = [(generated[int(best_gen[j])], reference[j])
                 for j in range(len(reference))]
    iou_mean = float(np.mean([iou(g, s, resolution) for g, s in pairs]))

    lo = np.min([np.asarray(s.bbox[0]) for s in generated + reference
                 if not s.is_empty], axis=0)
    hi = np.max([np.asarray(s.bbox[1]) for s in generated + reference
                 if not s.is_empty], axis=0)
    pg = np.zeros(jsd_resolution**3)
    ps = np.zeros(jsd_resolution**3)
    for g in generated:
        if not g.is_empty:
            pg += _occupancy(g, lo, hi, jsd_resolution).astype(float)
    for s in reference:
        if not s.is_empty:
            ps += _occupancy(s, lo, hi, jsd_resolution).astype(float)
    return {
        "iou": iou_mean,
        "cov": cov,
        "mmd_cd": mmd_cd,
        "jsd": jsd(pg, ps),
        "nc": nc,
    }
