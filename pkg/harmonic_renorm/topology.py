from __future__ import annotations

import csv
import heapq
import io
import json
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import (
    Any,
    Dict,
    FrozenSet,
    Hashable,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

import numpy as np

from .algebra import (
    FACE_GENERATOR,
    ICOSAHEDRAL_VERTEX_GENERATOR,
    OCTAHEDRAL_VERTEX_GENERATOR,
    QUATERNION_I,
    QUATERNION_J,
    QUATERNION_K,
    ClassPolygroup,
    FieldScalar,
    Quaternion,
    catalog_polygroup,
    component_distance_helium3,
    rational_pi_multiple,
)

LOGGER = logging.getLogger(__name__)

ENERGY_TOLERANCE = 1e-9
DEFAULT_LATTICE_BOUND = 3.0
FOUR_PI = 4.0 * math.pi

ClassId = Hashable


class TopologyError(ValueError):
    pass


class MixedManifolds(TopologyError):
    pass


class NormBoundTooSmall(TopologyError):
    pass


class TrivialClass(TopologyError):
    pass


class UnknownClass(TopologyError):
    pass


class ManifoldKind(str, Enum):
    CIRCLE = "circle"
    FLAT_TORUS = "flat_torus"
    EQUILATERAL_TORUS = "equilateral_torus"
    PROJECTIVE_SPACE = "projective_space"
    ORTHORHOMBIC = "orthorhombic"
    TETRAHEDRAL = "tetrahedral"
    OCTAHEDRAL = "octahedral"
    ICOSAHEDRAL = "icosahedral"
    HELIUM3 = "helium3"


@dataclass(frozen=True, slots=True)
class ManifoldDescriptor:
    kind: ManifoldKind
    dimension: int = 0

    def __post_init__(self) -> None:
        if self.kind is ManifoldKind.PROJECTIVE_SPACE and self.dimension < 2:
            raise TopologyError("Projective spaces need dimension n >= 2")

    @classmethod
    def parse(cls, text: str) -> "ManifoldDescriptor":
        """Accepts kind names plus the shorthands rp<n> and the group names."""
        lowered = text.strip().lower().replace("-", "_")
        aliases = {
            "torus": ManifoldKind.FLAT_TORUS,
            "hexagonal_torus": ManifoldKind.EQUILATERAL_TORUS,
            "q8": ManifoldKind.ORTHORHOMBIC,
            "2t": ManifoldKind.TETRAHEDRAL,
            "2o": ManifoldKind.OCTAHEDRAL,
            "2i": ManifoldKind.ICOSAHEDRAL,
            "he3": ManifoldKind.HELIUM3,
        }
        if lowered.startswith("rp") and lowered[2:].isdigit():
            return cls(ManifoldKind.PROJECTIVE_SPACE, int(lowered[2:]))
        if lowered in ("projective_space", "projective"):
            return cls(ManifoldKind.PROJECTIVE_SPACE, 2)
        if lowered in aliases:
            return cls(aliases[lowered])
        try:
            return cls(ManifoldKind(lowered))
        except ValueError as exc:
            raise TopologyError(f"Unknown manifold {text!r}") from exc

    @property
    def label(self) -> str:
        if self.kind is ManifoldKind.PROJECTIVE_SPACE:
            return f"RP{self.dimension}"
        return self.kind.value

    @property
    def class_model(self) -> "ClassModel":
        return _model_for(self)


@dataclass(frozen=True)
class HomotopyClass:
    manifold: ManifoldDescriptor
    class_id: ClassId
    name: str = field(compare=False)
    description: str = field(default="", compare=False)
    length: float = field(default=0.0, compare=False)
    conjugates: Optional[int] = field(default=None, compare=False)

    @property
    def is_trivial(self) -> bool:
        return self.class_id == self.manifold.class_model.trivial

    @property
    def energy(self) -> float:
        return self.length**2 / FOUR_PI

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class BoundaryTopology:
    outer: HomotopyClass
    inner: Tuple[HomotopyClass, ...] = ()


@dataclass(frozen=True, slots=True)
class Decomposition:
    parts: Tuple[HomotopyClass, ...]

    @property
    def energy(self) -> float:
        return math.fsum(part.energy for part in self.parts)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(part.name for part in self.parts)

    def __len__(self) -> int:
        return len(self.parts)


class ClassModel(ABC):
    """Free homotopy classes of loops with the multi-valued class product."""

    @property
    @abstractmethod
    def trivial(self) -> ClassId: ...

    @abstractmethod
    def length(self, cid: ClassId) -> float: ...

    @abstractmethod
    def product(self, first: ClassId, second: ClassId) -> FrozenSet[ClassId]: ...

    @abstractmethod
    def inverse(self, cid: ClassId) -> ClassId: ...

    @abstractmethod
    def normalize(self, cid: Any) -> ClassId: ...

    @abstractmethod
    def catalog_ids(self, bound: Optional[float] = None) -> List[ClassId]: ...

    @abstractmethod
    def name(self, cid: ClassId) -> str: ...

    def description(self, cid: ClassId) -> str:
        return ""

    def conjugates(self, cid: ClassId) -> Optional[int]:
        return 1

    def sort_key(self, cid: ClassId) -> Tuple[Any, ...]:
        return (cid,)

    @property
    def systole(self) -> float:
        return min(self.length(cid) for cid in self.catalog_ids() if cid != self.trivial)

    def lookup_name(self, token: str) -> ClassId:
        wanted = token.strip()
        for cid in self.catalog_ids():
            name = self.name(cid)
            if wanted in (name, name.removeprefix("γ_")):
                return cid
        raise UnknownClass(f"No class named {token!r}")


@dataclass(frozen=True, slots=True)
class CatalogRow:
    name: str
    description: str
    element: Quaternion


class FiniteClassModel(ClassModel):
    """Conjugacy classes of a binary polyhedral group, indexed in table row order."""

    def __init__(self, polygroup: ClassPolygroup, rows: Sequence[CatalogRow]) -> None:
        self.polygroup = polygroup
        self.rows = tuple(rows)
        group = polygroup.group
        self.row_elements = tuple(group.index_of(row.element) for row in self.rows)
        self._row_to_class = tuple(polygroup.class_of(idx) for idx in self.row_elements)
        if sorted(self._row_to_class) != list(range(len(polygroup))):
            raise TopologyError("Catalog rows do not match the conjugacy classes one to one")
        self._class_to_row = {cls_idx: row for row, cls_idx in enumerate(self._row_to_class)}

    @property
    def trivial(self) -> int:
        return self._class_to_row[self.polygroup.identity_class]

    def conjugacy_class(self, row: int) -> Any:
        return self.polygroup.classes[self._row_to_class[row]]

    def length(self, cid: ClassId) -> float:
        return self.conjugacy_class(self.normalize(cid)).length

    def product(self, first: ClassId, second: ClassId) -> FrozenSet[int]:
        classes = self.polygroup.product(self._row_to_class[first], self._row_to_class[second])
        return frozenset(self._class_to_row[c] for c in classes)

    def inverse(self, cid: ClassId) -> int:
        return self._class_to_row[self.polygroup.inverse_class(self._row_to_class[cid])]

    def normalize(self, cid: Any) -> int:
        if isinstance(cid, str):
            return self.lookup_name(cid)
        if isinstance(cid, (int, np.integer)) and 0 <= int(cid) < len(self.rows):
            return int(cid)
        raise UnknownClass(f"Class index {cid!r} out of range")

    def catalog_ids(self, bound: Optional[float] = None) -> List[int]:
        return list(range(len(self.rows)))

    def name(self, cid: ClassId) -> str:
        return self.rows[cid].name

    def description(self, cid: ClassId) -> str:
        return self.rows[cid].description

    def conjugates(self, cid: ClassId) -> int:
        return self.conjugacy_class(cid).size

    def class_id_of_element(self, element: int) -> int:
        return self._class_to_row[self.polygroup.class_of(element)]


class CyclicClassModel(ClassModel):
    """ℤ_n fundamental group with per-class lengths given externally."""

    def __init__(
        self,
        lengths: Sequence[float],
        names: Sequence[str],
        descriptions: Sequence[str],
    ) -> None:
        self.order = len(lengths)
        self._lengths = tuple(float(x) for x in lengths)
        self._names = tuple(names)
        self._descriptions = tuple(descriptions)

    @property
    def trivial(self) -> int:
        return 0

    def length(self, cid: ClassId) -> float:
        return self._lengths[cid]

    def product(self, first: ClassId, second: ClassId) -> FrozenSet[int]:
        return frozenset({(first + second) % self.order})

    def inverse(self, cid: ClassId) -> int:
        return (-cid) % self.order

    def normalize(self, cid: Any) -> int:
        if isinstance(cid, str):
            token = cid.strip()
            if token.lstrip("+-").isdigit():
                return int(token) % self.order
            return self.lookup_name(token)
        if isinstance(cid, (int, np.integer)):
            return int(cid) % self.order
        raise UnknownClass(f"Invalid class {cid!r}")

    def catalog_ids(self, bound: Optional[float] = None) -> List[int]:
        return list(range(self.order))

    def name(self, cid: ClassId) -> str:
        return self._names[cid]

    def description(self, cid: ClassId) -> str:
        return self._descriptions[cid]


class LatticeClassModel(ClassModel):
    """Abelian fundamental group ℤ^r with λ the Euclidean norm of B·v."""

    def __init__(self, basis: Sequence[Sequence[float]], descriptor_label: str) -> None:
        self.basis = np.asarray(basis, dtype=float)
        self.rank = self.basis.shape[0]
        self._label = descriptor_label

    @property
    def trivial(self) -> Tuple[int, ...]:
        return (0,) * self.rank

    def length(self, cid: ClassId) -> float:
        vector = np.asarray(cid, dtype=float) @ self.basis
        return float(np.linalg.norm(vector))

    def product(self, first: ClassId, second: ClassId) -> FrozenSet[Tuple[int, ...]]:
        return frozenset({tuple(a + b for a, b in zip(first, second))})

    def inverse(self, cid: ClassId) -> Tuple[int, ...]:
        return tuple(-a for a in cid)

    def normalize(self, cid: Any) -> Tuple[int, ...]:
        if isinstance(cid, str):
            token = cid.strip().removeprefix("γ_").strip("()")
            pieces = [piece for piece in token.replace(":", ",").split(",") if piece.strip()]
            try:
                cid = tuple(int(piece) for piece in pieces)
            except ValueError as exc:
                raise UnknownClass(f"Invalid lattice class {token!r}") from exc
        if isinstance(cid, (int, np.integer)):
            cid = (int(cid),)
        result = tuple(int(a) for a in cid)
        if len(result) != self.rank:
            raise UnknownClass(f"Lattice class must have {self.rank} coordinates, got {result}")
        return result

    @property
    def systole(self) -> float:
        span = range(-2, 3)
        if self.rank == 1:
            return self.length((1,))
        return min(
            self.length((n, m)) for n in span for m in span if (n, m) != (0, 0)
        )

    def norm(self, cid: ClassId) -> float:
        return self.length(cid) / self.systole

    def catalog_ids(self, bound: Optional[float] = None) -> List[Tuple[int, ...]]:
        limit = DEFAULT_LATTICE_BOUND if bound is None else float(bound)
        reach = int(math.ceil(2.0 * limit)) + 1
        ranges = [range(-reach, reach + 1)] * self.rank
        ids = [
            cid
            for cid in _product_ranges(ranges)
            if self.norm(cid) <= limit + ENERGY_TOLERANCE
        ]
        ids.sort(key=lambda cid: (round(self.length(cid), 12), cid))
        return ids

    def name(self, cid: ClassId) -> str:
        if self.rank == 1:
            return f"γ_{cid[0]}"
        return "γ_(" + ",".join(str(a) for a in cid) + ")"

    def description(self, cid: ClassId) -> str:
        if self.rank == 1:
            return f"degree {cid[0]}"
        return "class (" + ", ".join(str(a) for a in cid) + ")"


def _product_ranges(ranges: Sequence[range]) -> Iterable[Tuple[int, ...]]:
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _product_ranges(ranges[1:]):
            yield (head,) + tail


_ONE = Quaternion.one()
_MINUS_ONE = -_ONE


def _power(q: Quaternion, n: int) -> Quaternion:
    result = _ONE
    base = q if n >= 0 else q.inverse()
    for _ in range(abs(n)):
        result = result * base
    return result


def _finite_rows(kind: ManifoldKind) -> Tuple[str, List[CatalogRow]]:
    face = FACE_GENERATOR
    if kind is ManifoldKind.ORTHORHOMBIC:
        return "Q8", [
            CatalogRow("γ_c", "constant", _ONE),
            CatalogRow("γ_x", "180° rotation around the x-axis", QUATERNION_I),
            CatalogRow("γ_y", "180° rotation around the y-axis", QUATERNION_J),
            CatalogRow("γ_z", "180° rotation around the z-axis", QUATERNION_K),
            CatalogRow("γ_w", "360° rotation", _MINUS_ONE),
        ]
    if kind is ManifoldKind.TETRAHEDRAL:
        return "2T", [
            CatalogRow("γ_c", "constant", _ONE),
            CatalogRow("γ_+", "120° rotation of a face", face),
            CatalogRow("γ_-", "-120° rotation of a face", _power(face, -1)),
            CatalogRow("γ_+^2", "240° rotation of a face", _power(face, 2)),
            CatalogRow("γ_-^2", "-240° rotation of a face", _power(face, -2)),
            CatalogRow("γ_e", "180° rotation of an edge", QUATERNION_I),
            CatalogRow("γ_w", "360° rotation", _MINUS_ONE),
        ]
    if kind is ManifoldKind.OCTAHEDRAL:
        vertex = OCTAHEDRAL_VERTEX_GENERATOR
        half_root2 = FieldScalar(0, Fraction(1, 2))
        edge = Quaternion(FieldScalar(), half_root2, half_root2, FieldScalar())
        return "2O", [
            CatalogRow("γ_c", "constant", _ONE),
            CatalogRow("γ_v", "90° rotation of a vertex", vertex),
            CatalogRow("γ_f", "120° rotation of a face", face),
            CatalogRow("γ_v^2", "180° rotation of a vertex", _power(vertex, 2)),
            CatalogRow("γ_e", "180° rotation of an edge", edge),
            CatalogRow("γ_v^3", "270° rotation of a vertex", _power(vertex, 3)),
            CatalogRow("γ_f^2", "240° rotation of a face", _power(face, 2)),
            CatalogRow("γ_w", "360° rotation", _MINUS_ONE),
        ]
    if kind is ManifoldKind.ICOSAHEDRAL:
        vertex = ICOSAHEDRAL_VERTEX_GENERATOR
        return "2I", [
            CatalogRow("γ_c", "constant", _ONE),
            CatalogRow("γ_v", "72° rotation of a vertex", vertex),
            CatalogRow("γ_f", "120° rotation of a face", face),
            CatalogRow("γ_v^2", "144° rotation of a vertex", _power(vertex, 2)),
            CatalogRow("γ_e", "180° rotation of an edge", QUATERNION_I),
            CatalogRow("γ_v^3", "216° rotation of a vertex", _power(vertex, 3)),
            CatalogRow("γ_f^2", "240° rotation of a face", _power(face, 2)),
            CatalogRow("γ_v^4", "288° rotation of a vertex", _power(vertex, 4)),
            CatalogRow("γ_w", "360° rotation", _MINUS_ONE),
        ]
    raise TopologyError(f"{kind.value} is not a finite quotient of S³")


@lru_cache(maxsize=None)
def _model_for(descriptor: ManifoldDescriptor) -> ClassModel:
    kind = descriptor.kind
    if kind is ManifoldKind.CIRCLE:
        return LatticeClassModel([[2.0 * math.pi]], descriptor.label)
    if kind is ManifoldKind.FLAT_TORUS:
        return LatticeClassModel([[2.0 * math.pi, 0.0], [0.0, 2.0 * math.pi]], descriptor.label)
    if kind is ManifoldKind.EQUILATERAL_TORUS:
        return LatticeClassModel([[1.0, 0.0], [-0.5, math.sqrt(3.0) / 2.0]], descriptor.label)
    if kind is ManifoldKind.PROJECTIVE_SPACE:
        return CyclicClassModel(
            [0.0, math.pi],
            ["γ_c", "γ_a"],
            ["constant", "geodesic between antipodal points"],
        )
    if kind is ManifoldKind.HELIUM3:
        return CyclicClassModel(
            [component_distance_helium3(m) for m in range(4)],
            ["γ_0", "γ_+1", "γ_2", "γ_-1"],
            ["constant", "180° rotation", "360° rotation", "-180° rotation"],
        )
    group_name, rows = _finite_rows(kind)
    return FiniteClassModel(catalog_polygroup(group_name), rows)


def homotopy_class(manifold: ManifoldDescriptor, cid: Any) -> HomotopyClass:
    model = manifold.class_model
    normalized = model.normalize(cid)
    return HomotopyClass(
        manifold=manifold,
        class_id=normalized,
        name=model.name(normalized),
        description=model.description(normalized),
        length=model.length(normalized),
        conjugates=model.conjugates(normalized),
    )


def class_catalog(manifold: ManifoldDescriptor, bound: Optional[float] = None) -> List[HomotopyClass]:
    model = manifold.class_model
    return [homotopy_class(manifold, cid) for cid in model.catalog_ids(bound)]


def systole(manifold: ManifoldDescriptor) -> float:
    return manifold.class_model.systole


def inverse_class(c: HomotopyClass) -> HomotopyClass:
    return homotopy_class(c.manifold, c.manifold.class_model.inverse(c.class_id))


def _check_same_manifold(manifold: ManifoldDescriptor, classes: Iterable[HomotopyClass]) -> None:
    for c in classes:
        if c.manifold != manifold:
            raise MixedManifolds(
                f"Class {c.name} lives on {c.manifold.label}, expected {manifold.label}"
            )


def _reachable(model: ClassModel, classes: Iterable[HomotopyClass]) -> FrozenSet[ClassId]:
    reachable: FrozenSet[ClassId] = frozenset({model.trivial})
    for c in classes:
        step: Set[ClassId] = set()
        for current in reachable:
            step |= model.product(current, c.class_id)
        reachable = frozenset(step)
    return reachable


def is_topological_resolution(b: BoundaryTopology, singularities: Sequence[HomotopyClass]) -> bool:
    manifold = b.outer.manifold
    _check_same_manifold(manifold, singularities)
    _check_same_manifold(manifold, b.inner)
    model = manifold.class_model
    return b.outer.class_id in _reachable(model, list(singularities) + list(b.inner))


class _SingularEnergyGraph:
    """Shortest singular energies from the trivial class.

    A class c is reached from d through an atom a when c ∈ d ∗ a, at cost
    λ(a)²/4π. Minimal decompositions are the multisets of atoms along tight
    paths, which is the fixpoint of E(c) = min(λ(c)²/4π, E(c′) + E(c″)).
    """

    def __init__(self, model: ClassModel, nodes: Sequence[ClassId], atoms: Sequence[ClassId]) -> None:
        self.model = model
        self.nodes = frozenset(nodes)
        self.atoms = tuple(atoms)
        self.costs = {atom: model.length(atom) ** 2 / FOUR_PI for atom in self.atoms}
        self.energy: Dict[ClassId, float] = {}
        self._decompositions: Dict[ClassId, List[Tuple[ClassId, ...]]] = {}
        self._run()

    def _run(self) -> None:
        model = self.model
        trivial = model.trivial
        best: Dict[ClassId, float] = {trivial: 0.0}
        heap: List[Tuple[float, Tuple[Any, ...], ClassId]] = [(0.0, model.sort_key(trivial), trivial)]
        while heap:
            energy, _, node = heapq.heappop(heap)
            if node in self.energy:
                continue
            self.energy[node] = energy
            for atom in self.atoms:
                candidate = energy + self.costs[atom]
                for nxt in model.product(node, atom):
                    if nxt not in self.nodes or nxt in self.energy:
                        continue
                    if candidate < best.get(nxt, math.inf):
                        best[nxt] = candidate
                        heapq.heappush(heap, (candidate, model.sort_key(nxt), nxt))

    def _predecessors(self, target: ClassId) -> List[Tuple[ClassId, ClassId]]:
        model = self.model
        goal = self.energy[target]
        edges = []
        for atom in self.atoms:
            budget = goal - self.costs[atom]
            if budget < -ENERGY_TOLERANCE:
                continue
            if isinstance(model, LatticeClassModel):
                sources: Iterable[ClassId] = [next(iter(model.product(target, model.inverse(atom))))]
            else:
                sources = [
                    node
                    for node, energy in self.energy.items()
                    if abs(energy - budget) <= ENERGY_TOLERANCE and target in model.product(node, atom)
                ]
            for source in sources:
                energy = self.energy.get(source)
                if energy is not None and abs(energy - budget) <= ENERGY_TOLERANCE:
                    edges.append((source, atom))
        return edges

    def _part_key(self, cid: ClassId) -> Tuple[Any, ...]:
        return (round(self.model.length(cid), 12),) + self.model.sort_key(cid)

    def decompositions(self, target: ClassId) -> List[Tuple[ClassId, ...]]:
        cached = self._decompositions.get(target)
        if cached is not None:
            return cached
        if target == self.model.trivial:
            result: List[Tuple[ClassId, ...]] = [()]
        else:
            found: Set[Tuple[ClassId, ...]] = set()
            for source, atom in self._predecessors(target):
                for partial in self.decompositions(source):
                    found.add(tuple(sorted(partial + (atom,), key=self._part_key)))
            result = sorted(found, key=lambda parts: (len(parts), [self._part_key(p) for p in parts]))
        self._decompositions[target] = result
        return result


@lru_cache(maxsize=None)
def _finite_graph(manifold: ManifoldDescriptor) -> _SingularEnergyGraph:
    model = manifold.class_model
    ids = model.catalog_ids()
    atoms = [cid for cid in ids if cid != model.trivial]
    return _SingularEnergyGraph(model, ids, atoms)


@lru_cache(maxsize=64)
def _lattice_graph(manifold: ManifoldDescriptor, bound: float, atom_norm: float) -> _SingularEnergyGraph:
    model = manifold.class_model
    nodes = model.catalog_ids(bound)
    atoms = [cid for cid in model.catalog_ids(atom_norm) if cid != model.trivial]
    return _SingularEnergyGraph(model, nodes, atoms)


def _graph_for(c: HomotopyClass, bound: Optional[float]) -> _SingularEnergyGraph:
    model = c.manifold.class_model
    if not isinstance(model, LatticeClassModel):
        return _finite_graph(c.manifold)
    norm = model.norm(c.class_id)
    if bound is None:
        bound = max(4.0 * norm, 1.0)
    elif bound + ENERGY_TOLERANCE < 2.0 * norm:
        raise NormBoundTooSmall(f"Norm bound {bound} is below 2·|c| = {2.0 * norm:.6g}")
    # parts of a minimal decomposition satisfy λ(part) ≤ λ(c)
    return _lattice_graph(c.manifold, round(bound, 9), round(norm, 9))


def singular_energy(c: HomotopyClass, bound: Optional[float] = None) -> Tuple[float, List[Decomposition]]:
    graph = _graph_for(c, bound)
    if c.class_id not in graph.energy:  # pragma: no cover - every class is reachable by itself
        raise TopologyError(f"Class {c.name} unreachable within the enumeration bound")
    decompositions = [
        Decomposition(tuple(homotopy_class(c.manifold, cid) for cid in parts))
        for parts in graph.decompositions(c.class_id)
    ]
    return graph.energy[c.class_id], decompositions


def minimal_decompositions(c: HomotopyClass) -> List[Decomposition]:
    return singular_energy(c)[1]


def singular_energy_of_boundary(b: BoundaryTopology) -> float:
    manifold = b.outer.manifold
    _check_same_manifold(manifold, b.inner)
    model = manifold.class_model
    inner = _reachable(model, b.inner)
    if isinstance(model, LatticeClassModel):
        candidates = [next(iter(model.product(b.outer.class_id, model.inverse(s)))) for s in inner]
    else:
        candidates = [
            cid
            for cid in model.catalog_ids()
            if any(b.outer.class_id in model.product(cid, s) for s in inner)
        ]
    return min(singular_energy(homotopy_class(manifold, cid))[0] for cid in candidates)


def is_atomic(c: HomotopyClass) -> bool:
    if c.is_trivial:
        raise TrivialClass("The trivial class has no atomic decomposition")
    energy, decompositions = singular_energy(c)
    if abs(energy - c.energy) > 1e-12 * max(1.0, c.energy):
        return False
    return any(len(d) == 1 and d.parts[0] == c for d in decompositions)


def brute_force_singular_energies(manifold: ManifoldDescriptor) -> Dict[ClassId, float]:
    """Exhaustive multiset enumeration for finite class models."""
    model = manifold.class_model
    if isinstance(model, LatticeClassModel):
        raise TopologyError("Exhaustive enumeration needs a finite class model")
    ids = model.catalog_ids()
    atoms = sorted(
        (cid for cid in ids if cid != model.trivial),
        key=lambda cid: model.length(cid),
    )
    costs = [model.length(cid) ** 2 / FOUR_PI for cid in atoms]
    ceiling = max(model.length(cid) ** 2 / FOUR_PI for cid in ids) + ENERGY_TOLERANCE
    best: Dict[ClassId, float] = {model.trivial: 0.0}

    def explore(start: int, reachable: FrozenSet[ClassId], energy: float) -> None:
        for idx in range(start, len(atoms)):
            total = energy + costs[idx]
            if total > ceiling:
                break
            step: Set[ClassId] = set()
            for current in reachable:
                step |= model.product(current, atoms[idx])
            for cid in step:
                if total < best.get(cid, math.inf):
                    best[cid] = total
            explore(idx, frozenset(step), total)

    explore(0, frozenset({model.trivial}), 0.0)
    return best


@dataclass(frozen=True, slots=True)
class TableRow:
    name: str
    description: str
    conjugates: Optional[int]
    length: float
    decompositions: Tuple[Tuple[str, ...], ...]
    energy: float

    @property
    def lambda_over_pi(self) -> float:
        return self.length / math.pi

    @property
    def esg_over_pi(self) -> float:
        return self.energy / math.pi


TABLE_COLUMNS = ("name", "description", "conjugates", "lambda_over_pi", "decompositions", "esg_over_pi")


def _pi_text(value: float) -> str:
    fraction = rational_pi_multiple(value * math.pi, max_denominator=144)
    if fraction is None:
        return f"{value:.7g}π"
    if fraction == 0:
        return "0"
    numerator = "" if fraction.numerator == 1 else str(fraction.numerator)
    if fraction.denominator == 1:
        return f"{numerator}π"
    return f"{numerator}π/{fraction.denominator}"


@dataclass(frozen=True)
class ClassTable:
    manifold: ManifoldDescriptor
    rows: Tuple[TableRow, ...]

    def _cells(self, row: TableRow) -> List[str]:
        return [
            row.name,
            row.description,
            "" if row.conjugates is None else str(row.conjugates),
            f"{row.lambda_over_pi:.12g}",
            " / ".join(" ".join(parts) for parts in row.decompositions),
            f"{row.esg_over_pi:.12g}",
        ]

    def to_text(self) -> str:
        header = ["Name", "Description", "Conjugates", "λ(γ)", "Decompositions", "E^sg"]
        body = []
        for row in self.rows:
            cells = self._cells(row)
            cells[3] = _pi_text(row.lambda_over_pi)
            cells[5] = _pi_text(row.esg_over_pi)
            body.append(cells)
        widths = [max(len(line[i]) for line in [header] + body) for i in range(len(header))]
        lines = [
            "  ".join(cell.ljust(width) for cell, width in zip(line, widths)).rstrip()
            for line in [header] + body
        ]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for row in self.rows:
            writer.writerow(self._cells(row))
        return buffer.getvalue()

    def to_json(self) -> str:
        payload = {
            "manifold": self.manifold.label,
            "rows": [
                {
                    "name": row.name,
                    "description": row.description,
                    "conjugates": row.conjugates,
                    "lambda_over_pi": row.lambda_over_pi,
                    "decompositions": [list(parts) for parts in row.decompositions],
                    "esg_over_pi": row.esg_over_pi,
                }
                for row in self.rows
            ],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def parse_table_csv(text: str) -> List[Dict[str, Any]]:
    rows = []
    for record in csv.DictReader(io.StringIO(text)):
        decompositions = [
            tuple(chunk.split()) for chunk in record["decompositions"].split(" / ") if chunk.strip()
        ]
        rows.append(
            {
                "name": record["name"],
                "description": record["description"],
                "conjugates": int(record["conjugates"]) if record["conjugates"] else None,
                "lambda_over_pi": float(record["lambda_over_pi"]),
                "decompositions": decompositions,
                "esg_over_pi": float(record["esg_over_pi"]),
            }
        )
    return rows


def table_report(manifold: ManifoldDescriptor, bound: Optional[float] = None) -> ClassTable:
    rows = []
    for c in class_catalog(manifold, bound):
        energy, decompositions = singular_energy(c)
        rows.append(
            TableRow(
                name=c.name,
                description=c.description,
                conjugates=c.conjugates,
                length=c.length,
                decompositions=tuple(d.names for d in decompositions if len(d)),
                energy=energy,
            )
        )
    LOGGER.info("Class table for %s: %s rows", manifold.label, len(rows))
    return ClassTable(manifold=manifold, rows=tuple(rows))
