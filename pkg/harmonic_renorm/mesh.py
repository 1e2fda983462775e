from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.spatial import Delaunay

from .topology import HomotopyClass

if TYPE_CHECKING:
    from .targets import Loop

LOGGER = logging.getLogger(__name__)

MIN_HOLE_NODES = 16
MIN_RHO_OVER_H = 3.0
WEIGHT_FLOOR = 1e-12

FREE = -1
OUTER = 0


class SolverError(RuntimeError):
    pass


class InvalidDomain(SolverError):
    pass


class ResolutionTooCoarse(SolverError):
    pass


Point = Tuple[float, float]


@dataclass(frozen=True)
class SingularitySpec:
    center: Point
    charge: HomotopyClass
    loop: Optional["Loop"] = field(default=None, compare=False)


@dataclass(frozen=True)
class DomainSpec:
    """Ω minus closed ρ-disks around the singularities; Ω is the unit disk unless a polygon is given."""

    singularities: Tuple[SingularitySpec, ...]
    rho: float
    h: float
    polygon: Optional[Tuple[Point, ...]] = None

    def __post_init__(self) -> None:
        if self.h <= 0:
            raise InvalidDomain("Grid spacing h must be positive")
        if self.rho <= 0:
            raise InvalidDomain("Excision radius rho must be positive")
        if self.polygon is not None and len(self.polygon) < 3:
            raise InvalidDomain("A polygon needs at least three vertices")
        inside = self.contains(self.centers) if self.singularities else np.array([], dtype=bool)
        if not np.all(inside):
            raise InvalidDomain("Every singularity must lie inside the domain")

    @property
    def centers(self) -> np.ndarray:
        return np.array([s.center for s in self.singularities], dtype=float).reshape(-1, 2)

    @property
    def charges(self) -> Tuple[HomotopyClass, ...]:
        return tuple(s.charge for s in self.singularities)

    @property
    def origin(self) -> np.ndarray:
        """Point about which the outer boundary data are parametrised by angle."""
        if self.polygon is None:
            return np.zeros(2)
        return np.mean(np.asarray(self.polygon, dtype=float), axis=0)

    @property
    def diameter(self) -> float:
        if self.polygon is None:
            return 2.0
        vertices = np.asarray(self.polygon, dtype=float)
        return float(np.max(np.linalg.norm(vertices[:, None, :] - vertices[None, :, :], axis=-1)))

    def with_rho(self, rho: float) -> "DomainSpec":
        return replace(self, rho=float(rho))

    def with_centers(self, centers: Sequence[Point]) -> "DomainSpec":
        moved = tuple(replace(s, center=(float(c[0]), float(c[1]))) for s, c in zip(self.singularities, centers))
        return replace(self, singularities=moved)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.polygon is None:
            return np.einsum("ij,ij->i", points, points) < 1.0
        vertices = np.asarray(self.polygon, dtype=float)
        x, y = points[:, 0][:, None], points[:, 1][:, None]
        x0, y0 = vertices[:, 0][None, :], vertices[:, 1][None, :]
        nxt = np.roll(vertices, -1, axis=0)
        x1, y1 = nxt[:, 0][None, :], nxt[:, 1][None, :]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_hit = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        return np.count_nonzero(crosses & (x < x_hit), axis=1) % 2 == 1

    def boundary_distance(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self.polygon is None:
            return np.abs(1.0 - np.linalg.norm(points, axis=1))
        vertices = np.asarray(self.polygon, dtype=float)
        start = vertices[None, :, :]
        seg = (np.roll(vertices, -1, axis=0) - vertices)[None, :, :]
        rel = points[:, None, :] - start
        t = np.clip(np.sum(rel * seg, axis=-1) / np.sum(seg * seg, axis=-1), 0.0, 1.0)
        nearest = start + t[..., None] * seg
        return np.min(np.linalg.norm(points[:, None, :] - nearest, axis=-1), axis=1)

    def rho_bar(self) -> float:
        centers = self.centers
        if len(centers) == 0:
            return math.inf
        bound = float(np.min(self.boundary_distance(centers)))
        if len(centers) > 1:
            diff = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)
            pairwise = diff[np.triu_indices(len(centers), k=1)]
            bound = min(bound, float(np.min(pairwise)) / 2.0)
        return bound

    def dist_to_boundary(self) -> float:
        """dist(⋃ B̄_ρ(a_i), ∂Ω)."""
        return float(np.min(self.boundary_distance(self.centers))) - self.rho


@dataclass(eq=False)
class Mesh:
    points: np.ndarray
    owner: np.ndarray
    angles: np.ndarray
    edges: np.ndarray
    weights: np.ndarray
    h: float
    diameter: float
    triangles: Optional[np.ndarray] = None
    delaunay: Optional[Delaunay] = None
    kept: Optional[np.ndarray] = None
    rings: Tuple[Optional[np.ndarray], ...] = ()
    colors: Tuple[np.ndarray, ...] = ()
    cache: dict = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(self.owner == FREE)


def _cotangent_weights(points: np.ndarray, triangles: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pairs = []
    values = []
    for corner in range(3):
        k = triangles[:, corner]
        i = triangles[:, (corner + 1) % 3]
        j = triangles[:, (corner + 2) % 3]
        u = points[i] - points[k]
        v = points[j] - points[k]
        dot = np.einsum("ij,ij->i", u, v)
        cross = np.abs(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])
        values.append(0.5 * dot / np.maximum(cross, 1e-300))
        pairs.append(np.sort(np.stack((i, j), axis=1), axis=1))
    all_pairs = np.concatenate(pairs)
    all_values = np.concatenate(values)
    edges, inverse = np.unique(all_pairs, axis=0, return_inverse=True)
    weights = np.bincount(inverse.ravel(), weights=all_values, minlength=len(edges))
    # exact P1 weights; edges next to obtuse cut cells may carry w < 0
    keep = np.abs(weights) > WEIGHT_FLOOR
    return edges[keep], weights[keep]


def greedy_coloring(size: int, edges: np.ndarray, nodes: np.ndarray) -> Tuple[np.ndarray, ...]:
    """Colour `nodes` so no edge joins two nodes of the same colour."""
    mask = np.zeros(size, dtype=bool)
    mask[nodes] = True
    inner = edges[mask[edges[:, 0]] & mask[edges[:, 1]]]
    adjacency = sparse.coo_matrix(
        (np.ones(2 * len(inner)), (np.r_[inner[:, 0], inner[:, 1]], np.r_[inner[:, 1], inner[:, 0]])),
        shape=(size, size),
    ).tocsr()
    color = np.full(size, -1, dtype=np.int64)
    indptr, indices = adjacency.indptr, adjacency.indices
    for node in nodes:
        used = {color[nbr] for nbr in indices[indptr[node]:indptr[node + 1]]}
        c = 0
        while c in used:
            c += 1
        color[node] = c
    n_colors = int(color[nodes].max()) + 1 if len(nodes) else 0
    return tuple(nodes[color[nodes] == c] for c in range(n_colors))


def _outer_boundary(domain: DomainSpec) -> np.ndarray:
    h = domain.h
    if domain.polygon is None:
        count = max(MIN_HOLE_NODES, int(math.ceil(2.0 * math.pi / h)))
        theta = 2.0 * math.pi * np.arange(count) / count
        return np.stack((np.cos(theta), np.sin(theta)), axis=1)
    vertices = np.asarray(domain.polygon, dtype=float)
    chunks = []
    for start, end in zip(vertices, np.roll(vertices, -1, axis=0)):
        steps = max(1, int(math.ceil(np.linalg.norm(end - start) / h)))
        t = np.arange(steps)[:, None] / steps
        chunks.append(start + t * (end - start))
    return np.concatenate(chunks)


def _ring(points: np.ndarray, free: np.ndarray, center: np.ndarray, inner: float, outer: float) -> Optional[np.ndarray]:
    offsets = points[free] - center
    radius = np.linalg.norm(offsets, axis=1)
    selected = free[(radius >= inner) & (radius <= outer)]
    if len(selected) < 8:
        return None
    angle = np.arctan2(points[selected, 1] - center[1], points[selected, 0] - center[0])
    order = np.argsort(angle, kind="stable")
    sorted_angle = angle[order]
    gaps = np.diff(np.r_[sorted_angle, sorted_angle[0] + 2.0 * math.pi])
    if gaps.max() > math.pi / 4:
        return None
    return selected[order]


def build_grid(domain: DomainSpec) -> Mesh:
    h, rho = domain.h, domain.rho
    rho_bar = domain.rho_bar()
    if rho >= rho_bar:
        raise InvalidDomain(f"rho={rho:.6g} must be below rho_bar={rho_bar:.6g}")
    if domain.singularities and rho < MIN_RHO_OVER_H * h:
        raise ResolutionTooCoarse(f"rho={rho:.6g} is below {MIN_RHO_OVER_H:g}h={MIN_RHO_OVER_H * h:.6g}")
    hole_nodes = int(math.ceil(4.0 * math.pi * rho / h))
    if domain.singularities and hole_nodes < MIN_HOLE_NODES:
        raise ResolutionTooCoarse(f"Excised circles get {hole_nodes} < {MIN_HOLE_NODES} nodes")

    outer_nodes = _outer_boundary(domain)
    lo = outer_nodes.min(axis=0)
    hi = outer_nodes.max(axis=0)
    xs = np.arange(math.ceil(lo[0] / h), math.floor(hi[0] / h) + 1) * h
    ys = np.arange(math.ceil(lo[1] / h), math.floor(hi[1] / h) + 1) * h
    grid = np.stack(np.meshgrid(xs, ys, indexing="xy"), axis=-1).reshape(-1, 2)
    keep = domain.contains(grid) & (domain.boundary_distance(grid) > 0.5 * h)
    centers = domain.centers
    for center in centers:
        keep &= np.linalg.norm(grid - center, axis=1) > rho + 0.5 * h
    grid = grid[keep]

    origin = domain.origin
    blocks = [grid, outer_nodes]
    owners = [np.full(len(grid), FREE), np.full(len(outer_nodes), OUTER)]
    angles = [
        np.full(len(grid), np.nan),
        np.arctan2(outer_nodes[:, 1] - origin[1], outer_nodes[:, 0] - origin[0]),
    ]
    theta = 2.0 * math.pi * np.arange(hole_nodes) / max(hole_nodes, 1)
    for idx, center in enumerate(centers):
        blocks.append(center + rho * np.stack((np.cos(theta), np.sin(theta)), axis=1))
        owners.append(np.full(hole_nodes, idx + 1))
        angles.append(theta.copy())
    points = np.concatenate(blocks)
    owner = np.concatenate(owners).astype(np.int64)
    angle = np.concatenate(angles)

    delaunay = Delaunay(points)
    simplices = delaunay.simplices
    centroids = points[simplices].mean(axis=1)
    kept = domain.contains(centroids)
    for center in centers:
        kept &= np.linalg.norm(centroids - center, axis=1) >= rho
    triangles = simplices[kept]
    edges, weights = _cotangent_weights(points, triangles)

    free = np.flatnonzero(owner == FREE)
    colors = greedy_coloring(len(points), edges, free)
    band = (rho + h, rho + 2.5 * h)
    rings: List[Optional[np.ndarray]] = []
    for idx, center in enumerate(centers):
        ring = None
        if band[1] < rho_bar:
            ring = _ring(points, free, center, *band)
        if ring is None:
            LOGGER.warning("No holonomy ring around singularity %s at rho=%.4g", idx, rho)
        rings.append(ring)
    LOGGER.debug(
        "Mesh: %s nodes (%s free), %s triangles, %s edges, %s colours",
        len(points), len(free), len(triangles), len(edges), len(colors),
    )
    return Mesh(
        points=points,
        owner=owner,
        angles=angle,
        edges=edges,
        weights=weights,
        h=h,
        diameter=domain.diameter,
        triangles=triangles,
        delaunay=delaunay,
        kept=kept,
        rings=tuple(rings),
        colors=colors,
    )


@lru_cache(maxsize=16)
def cached_grid(polygon: Optional[Tuple[Point, ...]], centers: Tuple[Point, ...], rho: float, h: float) -> Mesh:
    """Meshes depend on geometry only; charges and loops are irrelevant here."""
    from .topology import ManifoldDescriptor, ManifoldKind, homotopy_class

    placeholder = homotopy_class(ManifoldDescriptor(ManifoldKind.CIRCLE), 1)
    singularities = tuple(SingularitySpec(center, placeholder) for center in centers)
    return build_grid(DomainSpec(singularities, rho, h, polygon))


def grid_for(domain: DomainSpec) -> Mesh:
    centers = tuple((float(x), float(y)) for x, y in domain.centers)
    return cached_grid(domain.polygon, centers, float(domain.rho), float(domain.h))


def build_cylinder(n_theta: int, length: float) -> Mesh:
    """Periodic grid on 𝕊¹×[0, length]; owner 0 marks t = 0, owner 1 marks t = length."""
    if n_theta < 8 or n_theta % 2:
        raise InvalidDomain("n_theta must be an even number >= 8")
    if length <= 0:
        raise InvalidDomain("Cylinder length must be positive")
    d_theta = 2.0 * math.pi / n_theta
    layers = max(1, int(round(length / d_theta)))
    d_t = length / layers
    theta = d_theta * np.arange(n_theta)
    t = d_t * np.arange(layers + 1)
    tt, th = np.meshgrid(t, theta, indexing="ij")
    points = np.stack((th.ravel(), tt.ravel()), axis=1)
    index = np.arange((layers + 1) * n_theta).reshape(layers + 1, n_theta)

    around = np.stack((index.ravel(), np.roll(index, -1, axis=1).ravel()), axis=1)
    layer_weight = np.full((layers + 1, n_theta), d_t / d_theta)
    layer_weight[0] *= 0.5
    layer_weight[-1] *= 0.5
    along = np.stack((index[:-1].ravel(), index[1:].ravel()), axis=1)
    edges = np.concatenate((around, along))
    weights = np.concatenate((layer_weight.ravel(), np.full(len(along), d_theta / d_t)))

    owner = np.full(len(points), FREE, dtype=np.int64)
    owner[index[0]] = 0
    owner[index[-1]] = 1
    free = np.flatnonzero(owner == FREE)
    parity = (np.arange(layers + 1)[:, None] + np.arange(n_theta)[None, :]).ravel() % 2
    colors = tuple(c for c in (free[parity[free] == 0], free[parity[free] == 1]) if len(c))
    return Mesh(
        points=points,
        owner=owner,
        angles=points[:, 0].copy(),
        edges=edges,
        weights=weights,
        h=min(d_theta, d_t),
        diameter=length,
        colors=colors,
        cache={"shape": (layers + 1, n_theta), "d_theta": d_theta, "d_t": d_t},
    )


def owner_groups(mesh: Mesh) -> List[Tuple[int, np.ndarray]]:
    """Boundary nodes grouped by owner, excluding free nodes."""
    owners = np.unique(mesh.owner[mesh.owner != FREE])
    return [(int(o), np.flatnonzero(mesh.owner == o)) for o in owners]
