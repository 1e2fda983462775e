from __future__ import annotations

import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import FiniteGroup, catalog_group, quat_conj, quat_mul
from .mesh import SolverError
from .topology import (
    ClassId,
    FiniteClassModel,
    HomotopyClass,
    ManifoldDescriptor,
    ManifoldKind,
    homotopy_class,
)

LOGGER = logging.getLogger(__name__)

UNIT_EPS = 1e-14


class UnsupportedTarget(SolverError):
    pass


def normalize_rows(values: np.ndarray, fallback: Optional[np.ndarray] = None) -> np.ndarray:
    norms = np.linalg.norm(values, axis=-1, keepdims=True)
    out = values / np.maximum(norms, UNIT_EPS)
    if fallback is not None:
        small = norms[..., 0] < UNIT_EPS
        out[small] = fallback[small]
    return out


def slerp(old: np.ndarray, goal: np.ndarray, omega: float) -> np.ndarray:
    """Move from `old` towards `goal` along the great circle, by ω times the angle.

    ω in (1, 2) overshoots; the distance to `goal` shrinks by |1 − ω| either way.
    """
    cos = np.clip(np.einsum("ij,ij->i", old, goal), -1.0, 1.0)
    angle = np.arccos(cos)
    sin = np.sin(angle)
    out = goal.copy()
    ok = (sin > 1e-9) & (angle < math.pi - 1e-9)
    if np.any(ok):
        a, s = angle[ok], sin[ok]
        out[ok] = (
            (np.sin((1.0 - omega) * a) / s)[:, None] * old[ok]
            + (np.sin(omega * a) / s)[:, None] * goal[ok]
        )
    return normalize_rows(out)


@dataclass(frozen=True)
class Loop:
    """A closed curve 𝕊¹ → N, sampled by angle; defaults to a minimising geodesic of its class."""

    target: "TargetModel"
    homotopy_class: HomotopyClass
    phase: float = 0.0
    conjugator: int = 0
    function: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, angles: np.ndarray) -> np.ndarray:
        shifted = np.asarray(angles, dtype=float) + self.phase
        if self.function is not None:
            return self.target.project(np.asarray(self.function(shifted), dtype=float))
        return self.target.evaluate(self.homotopy_class.class_id, self.conjugator, shifted)

    def rotated(self, tau: float) -> "Loop":
        return replace(self, phase=self.phase + tau)

    def sample(self, count: int) -> np.ndarray:
        return self(2.0 * math.pi * np.arange(count) / count)


class TargetModel(ABC):
    """Target manifold N ⊂ ℝ^ν as seen by the solver.

    Vertex values are stored as unit-vector representatives; `edge_distance2`
    returns the squared distance in N's metric (scale and deck orbit included).
    """

    manifold: ManifoldDescriptor
    rep_dim: int
    embedding_dim: int
    density_scale: float = 1.0
    has_gauge: bool = False

    def project(self, values: np.ndarray) -> np.ndarray:
        fallback = np.zeros_like(values)
        fallback[..., 0] = 1.0
        return normalize_rows(np.asarray(values, dtype=float), fallback)

    def manifold_error(self, values: np.ndarray) -> float:
        return float(np.max(np.abs(np.linalg.norm(values, axis=-1) - 1.0), initial=0.0))

    @abstractmethod
    def edge_distance2(self, up: np.ndarray, uq: np.ndarray, gauges: Optional[np.ndarray] = None) -> np.ndarray: ...

    def refresh_gauges(self, up: np.ndarray, uq: np.ndarray) -> Optional[np.ndarray]:
        return None

    def inverse_gauges(self, gauges: np.ndarray) -> np.ndarray:
        return gauges

    def features(self, neighbours: np.ndarray, gauges: Optional[np.ndarray] = None) -> np.ndarray:
        return neighbours

    @abstractmethod
    def local_update(self, aggregate: np.ndarray, old: np.ndarray, omega: float) -> np.ndarray: ...

    def align(self, values: np.ndarray, reference: np.ndarray) -> np.ndarray:
        return values

    @abstractmethod
    def evaluate(self, class_id: ClassId, conjugator: int, angles: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def loop_class(self, samples: np.ndarray) -> ClassId: ...

    def conjugators(self, class_id: ClassId) -> List[int]:
        return [0]

    def geodesic(self, charge: HomotopyClass, phase: float = 0.0, conjugator: int = 0) -> Loop:
        if charge.manifold != self.manifold:
            raise UnsupportedTarget(f"Class {charge.name} does not live on {self.manifold.label}")
        return Loop(self, charge, phase, conjugator)

    def class_of(self, class_id: ClassId) -> HomotopyClass:
        return homotopy_class(self.manifold, class_id)

    def loop_energy(self, samples: np.ndarray) -> float:
        """½ Σ d²(u_k, u_{k+1}) around the closed sampled loop."""
        nxt = np.roll(samples, -1, axis=0)
        gauges = self.refresh_gauges(samples, nxt)
        return 0.5 * float(np.sum(self.edge_distance2(samples, nxt, gauges)))

    def blend(self, stacks: Sequence[np.ndarray], weights: np.ndarray) -> np.ndarray:
        reference = stacks[0]
        total = np.zeros_like(reference)
        for idx, values in enumerate(stacks):
            total += weights[:, idx : idx + 1] * self.align(values, reference)
        return self.project(total)


def _windings(angles: np.ndarray) -> int:
    steps = np.diff(np.r_[angles, angles[:1]])
    steps = (steps + math.pi) % (2.0 * math.pi) - math.pi
    return int(round(float(np.sum(steps)) / (2.0 * math.pi)))


class CircleTarget(TargetModel):
    rep_dim = 2
    embedding_dim = 2

    def __init__(self) -> None:
        self.manifold = ManifoldDescriptor(ManifoldKind.CIRCLE)

    def edge_distance2(self, up, uq, gauges=None):
        diff = up - uq
        return np.einsum("ij,ij->i", diff, diff)

    def local_update(self, aggregate, old, omega):
        goal = normalize_rows(aggregate, old)
        return slerp(old, goal, omega)

    def evaluate(self, class_id, conjugator, angles):
        (degree,) = class_id
        return np.stack((np.cos(degree * angles), np.sin(degree * angles)), axis=-1)

    def loop_class(self, samples):
        return (_windings(np.arctan2(samples[:, 1], samples[:, 0])),)


class FlatTorusTarget(TargetModel):
    """𝕊¹ × 𝕊¹ with the product metric, stored as two unit 2-vectors."""

    rep_dim = 4
    embedding_dim = 4

    def __init__(self) -> None:
        self.manifold = ManifoldDescriptor(ManifoldKind.FLAT_TORUS)

    def project(self, values):
        values = np.asarray(values, dtype=float)
        return np.concatenate((_circle_project(values[:, :2]), _circle_project(values[:, 2:])), axis=1)

    def manifold_error(self, values):
        first = np.abs(np.linalg.norm(values[:, :2], axis=1) - 1.0)
        second = np.abs(np.linalg.norm(values[:, 2:], axis=1) - 1.0)
        return float(max(first.max(initial=0.0), second.max(initial=0.0)))

    def edge_distance2(self, up, uq, gauges=None):
        diff = up - uq
        return np.einsum("ij,ij->i", diff, diff)

    def local_update(self, aggregate, old, omega):
        parts = []
        for sl in (slice(0, 2), slice(2, 4)):
            goal = normalize_rows(aggregate[:, sl], old[:, sl])
            parts.append(slerp(old[:, sl], goal, omega))
        return np.concatenate(parts, axis=1)

    def evaluate(self, class_id, conjugator, angles):
        n, m = class_id
        return np.stack(
            (np.cos(n * angles), np.sin(n * angles), np.cos(m * angles), np.sin(m * angles)), axis=-1
        )

    def loop_class(self, samples):
        return (
            _windings(np.arctan2(samples[:, 1], samples[:, 0])),
            _windings(np.arctan2(samples[:, 3], samples[:, 2])),
        )


def _circle_project(values: np.ndarray) -> np.ndarray:
    fallback = np.zeros_like(values)
    fallback[:, 0] = 1.0
    return normalize_rows(values, fallback)


class ProjectivePlaneTarget(TargetModel):
    """ℝP² as rank-one projectors n nᵀ; a unit vector n represents its projector.

    The projector metric is scaled by ½ so that ℝP² carries the round metric
    of the sphere quotient and the antipodal geodesic has length π.
    """

    rep_dim = 3
    embedding_dim = 9

    def __init__(self) -> None:
        self.manifold = ManifoldDescriptor(ManifoldKind.PROJECTIVE_SPACE, 2)

    def edge_distance2(self, up, uq, gauges=None):
        # ½|P − Q|² = 1 − (n·m)²
        dots = np.einsum("ij,ij->i", up, uq)
        return np.clip(1.0 - dots * dots, 0.0, None)

    def features(self, neighbours, gauges=None):
        return np.einsum("ni,nj->nij", neighbours, neighbours).reshape(len(neighbours), 9)

    def local_update(self, aggregate, old, omega):
        matrices = aggregate.reshape(-1, 3, 3)
        eigenvalues, eigenvectors = np.linalg.eigh(matrices)
        top = eigenvectors[:, :, 2]
        gap = eigenvalues[:, 2] - eigenvalues[:, 1]
        scale = np.maximum(np.abs(eigenvalues[:, 2]), 1e-300)
        tied = gap <= 1e-12 * scale
        if np.any(tied):
            span = eigenvectors[tied][:, :, 1:]
            coords = np.einsum("nij,ni->nj", span, old[tied])
            projected = np.einsum("nij,nj->ni", span, coords)
            top[tied] = normalize_rows(projected, top[tied])
        signs = np.where(np.einsum("ij,ij->i", top, old) < 0.0, -1.0, 1.0)
        goal = top * signs[:, None]
        idle = eigenvalues[:, 2] <= UNIT_EPS
        goal[idle] = old[idle]
        return slerp(old, goal, omega)

    def align(self, values, reference):
        signs = np.where(np.einsum("ij,ij->i", values, reference) < 0.0, -1.0, 1.0)
        return values * signs[:, None]

    def evaluate(self, class_id, conjugator, angles):
        angles = np.asarray(angles, dtype=float)
        if class_id == 0:
            return np.tile([1.0, 0.0, 0.0], (len(angles), 1))
        half = 0.5 * angles
        return np.stack((np.cos(half), np.sin(half), np.zeros_like(half)), axis=-1)

    def loop_class(self, samples):
        sign = 1.0
        for current, nxt in zip(samples, np.roll(samples, -1, axis=0)):
            if float(np.dot(current, nxt)) < 0.0:
                sign = -sign
        return 0 if sign > 0 else 1


class QuaternionQuotientTarget(TargetModel):
    """S³/Γ for a finite Γ ⊂ SU(2) acting on the right, with per-edge deck gauges.

    `metric_scale` multiplies squared S³ chord distances: 4 for the SU(2)
    metric (twice the sphere distance), 1 for the round ℝP³.
    """

    rep_dim = 4
    embedding_dim = 4
    has_gauge = True

    def __init__(
        self,
        manifold: ManifoldDescriptor,
        group: FiniteGroup,
        class_elements: Dict[ClassId, int],
        class_of_element: Callable[[int], ClassId],
        metric_scale: float,
    ) -> None:
        self.manifold = manifold
        self.group = group
        self.class_elements = dict(class_elements)
        self.class_of_element = class_of_element
        self.density_scale = float(metric_scale)
        self._elements = group.as_array
        self._table = group.table_array
        self._inverse = group.inverse_array

    def refresh_gauges(self, up, uq):
        relative = quat_mul(quat_conj(uq), up)
        return np.argmax(relative @ self._elements.T, axis=1)

    def inverse_gauges(self, gauges):
        return self._inverse[gauges]

    def edge_distance2(self, up, uq, gauges=None):
        if gauges is None:
            gauges = self.refresh_gauges(up, uq)
        moved = quat_mul(uq, self._elements[gauges])
        cos = np.einsum("ij,ij->i", up, moved)
        return self.density_scale * np.clip(2.0 - 2.0 * cos, 0.0, None)

    def features(self, neighbours, gauges=None):
        if gauges is None:
            return neighbours
        return quat_mul(neighbours, self._elements[gauges])

    def local_update(self, aggregate, old, omega):
        goal = normalize_rows(aggregate, old)
        return slerp(old, goal, omega)

    def align(self, values, reference):
        gauges = self.refresh_gauges(reference, values)
        return quat_mul(values, self._elements[gauges])

    def _axis(self, element: int, conjugator: int) -> Tuple[float, np.ndarray]:
        c = self._elements[conjugator]
        h = quat_mul(quat_mul(c, self._elements[element]), quat_conj(c))
        angle = math.acos(max(-1.0, min(1.0, float(h[0]))))
        if math.sin(angle) > 1e-12:
            return angle, h[1:] / math.sin(angle)
        # ±1: the axis is free, take i moved by the conjugator
        moved = quat_mul(quat_mul(c, np.array([0.0, 1.0, 0.0, 0.0])), quat_conj(c))
        return angle, moved[1:]

    def evaluate(self, class_id, conjugator, angles):
        angles = np.asarray(angles, dtype=float)
        angle, axis = self._axis(self.class_elements[class_id], conjugator)
        t = angles * angle / (2.0 * math.pi)
        return np.concatenate((np.cos(t)[:, None], np.sin(t)[:, None] * axis[None, :]), axis=1)

    def conjugators(self, class_id):
        element = self.class_elements[class_id]
        seen = set()
        result = []
        for c in range(self.group.order):
            angle, axis = self._axis(element, c)
            key = tuple(np.round(axis, 9)) if angle > 1e-12 else ()
            if key not in seen:
                seen.add(key)
                result.append(c)
        return result

    def loop_class(self, samples):
        holonomy = 0
        nxt = np.roll(samples, -1, axis=0)
        # u_k ≈ u_{k+1}·γ_k, so the lifted loop closes up to γ_{n−1}⋯γ_0
        gauges = self.refresh_gauges(samples, nxt)
        for gauge in gauges:
            holonomy = int(self._table[gauge, holonomy])
        return self.class_of_element(holonomy)


_GROUP_NAMES = {
    ManifoldKind.ORTHORHOMBIC: "Q8",
    ManifoldKind.TETRAHEDRAL: "2T",
    ManifoldKind.OCTAHEDRAL: "2O",
    ManifoldKind.ICOSAHEDRAL: "2I",
}


@lru_cache(maxsize=None)
def target_for(manifold: ManifoldDescriptor) -> TargetModel:
    kind = manifold.kind
    if kind is ManifoldKind.CIRCLE:
        return CircleTarget()
    if kind is ManifoldKind.FLAT_TORUS:
        return FlatTorusTarget()
    if kind is ManifoldKind.PROJECTIVE_SPACE and manifold.dimension == 2:
        return ProjectivePlaneTarget()
    if kind is ManifoldKind.PROJECTIVE_SPACE and manifold.dimension == 3:
        group = catalog_group("pm1")
        return QuaternionQuotientTarget(
            manifold,
            group,
            {0: 0, 1: group.index_of(-group.elements[0])},
            lambda element: 0 if element == 0 else 1,
            metric_scale=1.0,
        )
    if kind in _GROUP_NAMES:
        model = manifold.class_model
        assert isinstance(model, FiniteClassModel)
        LOGGER.debug("Building quotient target %s from a group of order %s", manifold.label, model.polygroup.group.order)
        elements = {row: element for row, element in enumerate(model.row_elements)}
        return QuaternionQuotientTarget(
            manifold,
            model.polygroup.group,
            elements,
            model.class_id_of_element,
            metric_scale=4.0,
        )
    raise UnsupportedTarget(f"No solver target for {manifold.label}")
