"""Self-intersection detection and multiplicity measurement for sampled curves.

All-pairs segment testing with a bounding-box prefilter; no sweep line.  At
desk scale (a few thousand vertices) the quadratic pair loop is cheap, and
keeping it exact matters more than asymptotics.  Contacts within the
tolerance count as crossings even when tangential: for embeddedness
certification a false alarm is acceptable, a missed crossing is not.
"""

import json
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .errors import RejectedInputError
from .geometry import SampledCurve

_ROW_BLOCK = 512   # pair loop walks the candidate matrix in row blocks

_RESOLUTION_CAVEAT = (
    "contacts within eps count as crossings; touching and crossing are "
    "indistinguishable below the sampling resolution"
)


@dataclass(frozen=True)
class Crossing:
    """One near-contact: its location and the two segments that meet there."""

    point: Tuple[float, float]
    segments: Tuple[int, int]


@dataclass(frozen=True)
class CrossingSet:
    """Crossings, their spatial clusters, and the resulting multiplicity.

    ``clusters`` holds index tuples into ``crossings`` (single linkage at
    radius ``eps``).  ``multiplicity`` is the largest number of distinct
    local curve branches running through any one cluster, or 1 when the
    curve has no crossings at all.
    """

    crossings: Tuple[Crossing, ...]
    clusters: Tuple[Tuple[int, ...], ...]
    multiplicity: int
    eps: float

    def __post_init__(self):
        if self.multiplicity < 1:
            raise RejectedInputError("multiplicity must be at least 1")
        if (self.multiplicity == 1) != (len(self.crossings) == 0):
            raise RejectedInputError(
                "multiplicity 1 must coincide with an empty crossing list"
            )
        seen = sorted(i for cluster in self.clusters for i in cluster)
        if seen != list(range(len(self.crossings))):
            raise RejectedInputError("clusters must partition the crossing indices")


def _segment_endpoints(curve: SampledCurve) -> Tuple[np.ndarray, np.ndarray]:
    pts = curve.vertices
    return pts, np.roll(pts, -1, axis=0)


def _candidate_pairs(starts: np.ndarray, ends: np.ndarray, eps: float,
                     excluded_gap: int) -> np.ndarray:
    """Index pairs (i < j, circular gap > excluded_gap) whose inflated boxes overlap."""
    n = starts.shape[0]
    lo = np.minimum(starts, ends) - eps
    hi = np.maximum(starts, ends) + eps
    out: List[np.ndarray] = []
    for row0 in range(0, n, _ROW_BLOCK):
        row1 = min(row0 + _ROW_BLOCK, n)
        rows = np.arange(row0, row1)
        overlap = (
            (lo[rows, None, 0] <= hi[None, :, 0])
            & (lo[None, :, 0] <= hi[rows, None, 0])
            & (lo[rows, None, 1] <= hi[None, :, 1])
            & (lo[None, :, 1] <= hi[rows, None, 1])
        )
        ii, jj = np.nonzero(overlap)
        ii = rows[ii]
        keep = jj > ii
        ii, jj = ii[keep], jj[keep]
        gap = jj - ii
        keep = (gap > excluded_gap) & (gap < n - excluded_gap)
        if keep.any():
            out.append(np.stack([ii[keep], jj[keep]], axis=1))
    if not out:
        return np.zeros((0, 2), dtype=int)
    return np.concatenate(out, axis=0)


def _point_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Distance and foot of each point p[i] on its segment a[i]-b[i]."""
    d = b - a
    len2 = np.einsum("ij,ij->i", d, d)
    t = np.einsum("ij,ij->i", p - a, d) / np.where(len2 > 0.0, len2, 1.0)
    t = np.clip(t, 0.0, 1.0)
    foot = a + t[:, None] * d
    return np.linalg.norm(p - foot, axis=1), foot


def _pair_contacts(starts: np.ndarray, ends: np.ndarray,
                   pairs: np.ndarray, eps: float):
    """Exact segment-pair distances for the candidates; contacts within eps.

    Non-intersecting segments attain their minimum distance at an endpoint
    of one of them, so the distance is the proper-crossing test plus four
    endpoint-to-segment projections; no iterative clamping involved.
    """
    a, b = starts[pairs[:, 0]], ends[pairs[:, 0]]
    c, d = starts[pairs[:, 1]], ends[pairs[:, 1]]

    def cross(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    d1 = cross(d - c, a - c)
    d2 = cross(d - c, b - c)
    d3 = cross(b - a, c - a)
    d4 = cross(b - a, d - a)
    proper = (d1 * d2 < 0.0) & (d3 * d4 < 0.0)

    cand_dist = np.empty((pairs.shape[0], 4))
    cand_foot = np.empty((pairs.shape[0], 4, 2))
    cand_base = np.empty((pairs.shape[0], 4, 2))
    for slot, (p, sa, sb) in enumerate(((a, c, d), (b, c, d), (c, a, b), (d, a, b))):
        dist, foot = _point_segment(p, sa, sb)
        cand_dist[:, slot] = dist
        cand_foot[:, slot] = foot
        cand_base[:, slot] = p
    best = np.argmin(cand_dist, axis=1)
    rows = np.arange(pairs.shape[0])
    dist = cand_dist[rows, best]
    point = 0.5 * (cand_base[rows, best] + cand_foot[rows, best])

    # proper crossings: exact line-line intersection, distance zero.  The
    # signed areas d1, d2 interpolate linearly along ab, vanishing at the hit.
    denom = d1 - d2
    safe = np.where(proper & (denom != 0.0), denom, 1.0)
    s = d1 / safe
    hit = a + (b - a) * s[:, None]
    dist = np.where(proper, 0.0, dist)
    point = np.where(proper[:, None], hit, point)

    keep = dist <= eps
    return pairs[keep], point[keep]


def _single_linkage(points: np.ndarray, eps: float) -> List[List[int]]:
    count = points.shape[0]
    parent = list(range(count))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(count):
        d = np.linalg.norm(points[i + 1:] - points[i], axis=1)
        for off in np.nonzero(d <= eps)[0]:
            ri, rj = find(i), find(i + 1 + int(off))
            if ri != rj:
                parent[rj] = ri
    groups: dict = {}
    for i in range(count):
        groups.setdefault(find(i), []).append(i)
    return sorted(groups.values())


def _branch_count(segment_indices, n: int) -> int:
    """Distinct local branches: maximal runs of circularly consecutive segments."""
    segs = sorted(set(segment_indices))
    if not segs:
        return 0
    runs = 1
    for prev, cur in zip(segs, segs[1:]):
        if cur - prev > 1:
            runs += 1
    # wraparound: last and first segment adjacent on the circle means one run
    if runs > 1 and (segs[0] + n) - segs[-1] <= 1:
        runs -= 1
    return runs


def _cluster_branches(segment_indices, n: int) -> int:
    # A cluster exists only because arc-separated segments touched, so it
    # holds at least two branches even when an eps-thick band of contacts
    # fills in the index range between them and the runs merge.
    return max(2, _branch_count(segment_indices, n))


def find_crossings(curve: SampledCurve, eps: Optional[float] = None) -> CrossingSet:
    """Locate all self-contacts of the polygonal trace and measure multiplicity.

    ``eps`` is the contact tolerance; defaults to 1e-6 of the curve length,
    scale-invariant.  Crossings closer than eps to each other merge into one
    cluster, and the cluster's multiplicity is the number of distinct runs
    of consecutive segments meeting there.

    Segments within arc distance 4 eps of each other are the same local
    branch (the curve cannot leave the contact ball and return that fast),
    so such pairs are never contacts; at the default eps this reduces to
    excluding the vertex-sharing neighbors.
    """
    if eps is None:
        eps = 1e-6 * curve.length()
    if not (math.isfinite(eps) and eps > 0.0):
        raise RejectedInputError("eps must be positive")
    h = curve.length() / curve.n
    excluded_gap = max(1, int(math.ceil(4.0 * eps / h)))
    if excluded_gap >= curve.n // 2:
        raise RejectedInputError(
            "eps is so large that every segment pair counts as one branch; "
            "refine the curve or shrink eps"
        )
    starts, ends = _segment_endpoints(curve)
    pairs = _candidate_pairs(starts, ends, eps, excluded_gap)
    if pairs.shape[0] == 0:
        return CrossingSet(crossings=(), clusters=(), multiplicity=1, eps=eps)
    pairs, points = _pair_contacts(starts, ends, pairs, eps)
    if pairs.shape[0] == 0:
        return CrossingSet(crossings=(), clusters=(), multiplicity=1, eps=eps)

    order = np.lexsort((pairs[:, 1], pairs[:, 0]))
    pairs, points = pairs[order], points[order]
    crossings = tuple(
        Crossing(point=(float(p[0]), float(p[1])),
                 segments=(int(i), int(j)))
        for p, (i, j) in zip(points, pairs)
    )
    clusters = _single_linkage(points, eps)
    n = curve.n
    branches = [
        _cluster_branches([s for idx in members for s in crossings[idx].segments], n)
        for members in clusters
    ]
    return CrossingSet(
        crossings=crossings,
        clusters=tuple(tuple(members) for members in clusters),
        multiplicity=max(branches) if branches else 1,
        eps=eps,
    )


def is_embedded(curve: SampledCurve, eps: Optional[float] = None) -> bool:
    """True iff the trace has no self-contacts at tolerance eps."""
    return len(find_crossings(curve, eps).crossings) == 0


def crossing_set_to_json(cs: CrossingSet) -> str:
    payload = {
        "eps": cs.eps,
        "multiplicity": cs.multiplicity,
        "crossings": [
            {"point": [c.point[0], c.point[1]],
             "segments": [c.segments[0], c.segments[1]]}
            for c in cs.crossings
        ],
        "clusters": [list(members) for members in cs.clusters],
        "caveat": _RESOLUTION_CAVEAT,
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))
