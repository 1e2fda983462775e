from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache, total_ordering
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize_scalar

LOGGER = logging.getLogger(__name__)

DEFAULT_CLOSURE_CAP = 1024
PI_MULTIPLE_MAX_DENOMINATOR = 12
PI_MULTIPLE_TOLERANCE = 1e-12

_SQRT2 = math.sqrt(2.0)
_SQRT5 = math.sqrt(5.0)
_SQRT10 = math.sqrt(10.0)

Rational = Union[int, Fraction]


class AlgebraError(ValueError):
    pass


class ClosureExceedsCap(AlgebraError):
    pass


class InvalidClassIndex(AlgebraError):
    pass


def _sign_q2(alpha: int, beta: int) -> int:
    """Exact sign of alpha + beta*sqrt(2) for integers."""
    if alpha >= 0 and beta >= 0:
        return 0 if alpha == 0 and beta == 0 else 1
    if alpha <= 0 and beta <= 0:
        return -1
    diff = alpha * alpha - 2 * beta * beta
    if alpha > 0:
        return (diff > 0) - (diff < 0)
    return (diff < 0) - (diff > 0)


@total_ordering
class FieldScalar:
    """Element a + b√2 + c√5 + d√10 of ℚ(√2, √5).

    Stored as four integer numerators over one positive common denominator,
    reduced so equality and hashing are exact.
    """

    __slots__ = ("_nums", "_den")

    def __init__(self, a: Rational = 0, b: Rational = 0, c: Rational = 0, d: Rational = 0) -> None:
        parts = [Fraction(value) for value in (a, b, c, d)]
        den = 1
        for part in parts:
            den = den * part.denominator // math.gcd(den, part.denominator)
        nums = tuple(int(part * den) for part in parts)
        self._nums, self._den = self._reduce(nums, den)

    @staticmethod
    def _reduce(nums: Tuple[int, int, int, int], den: int) -> Tuple[Tuple[int, int, int, int], int]:
        if den < 0:
            nums = tuple(-n for n in nums)
            den = -den
        common = math.gcd(den, *nums)
        if common > 1:
            nums = tuple(n // common for n in nums)
            den //= common
        return nums, den  # type: ignore[return-value]

    @classmethod
    def _raw(cls, nums: Tuple[int, int, int, int], den: int) -> "FieldScalar":
        obj = cls.__new__(cls)
        obj._nums, obj._den = cls._reduce(nums, den)
        return obj

    @classmethod
    def sqrt2(cls) -> "FieldScalar":
        return cls._raw((0, 1, 0, 0), 1)

    @classmethod
    def sqrt5(cls) -> "FieldScalar":
        return cls._raw((0, 0, 1, 0), 1)

    @property
    def coefficients(self) -> Tuple[Fraction, Fraction, Fraction, Fraction]:
        return tuple(Fraction(n, self._den) for n in self._nums)  # type: ignore[return-value]

    @property
    def key(self) -> Tuple[Fraction, Fraction, Fraction, Fraction]:
        return self.coefficients

    def is_zero(self) -> bool:
        return not any(self._nums)

    def is_rational(self) -> bool:
        return not any(self._nums[1:])

    @staticmethod
    def _coerce(other: object) -> Optional["FieldScalar"]:
        if isinstance(other, FieldScalar):
            return other
        if isinstance(other, (int, Fraction)):
            return FieldScalar(other)
        return None

    def __add__(self, other: object) -> "FieldScalar":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        den = self._den * rhs._den // math.gcd(self._den, rhs._den)
        left = den // self._den
        right = den // rhs._den
        nums = tuple(x * left + y * right for x, y in zip(self._nums, rhs._nums))
        return FieldScalar._raw(nums, den)  # type: ignore[arg-type]

    __radd__ = __add__

    def __neg__(self) -> "FieldScalar":
        return FieldScalar._raw(tuple(-n for n in self._nums), self._den)  # type: ignore[arg-type]

    def __sub__(self, other: object) -> "FieldScalar":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self + (-rhs)

    def __rsub__(self, other: object) -> "FieldScalar":
        lhs = self._coerce(other)
        if lhs is None:
            return NotImplemented
        return lhs - self

    def __mul__(self, other: object) -> "FieldScalar":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        a, b, c, d = self._nums
        e, f, g, h = rhs._nums
        # √2·√5 = √10, √2·√10 = 2√5, √5·√10 = 5√2
        r0 = a * e + 2 * b * f + 5 * c * g + 10 * d * h
        r1 = a * f + b * e + 5 * (c * h + d * g)
        r2 = a * g + c * e + 2 * (b * h + d * f)
        r3 = a * h + d * e + b * g + c * f
        return FieldScalar._raw((r0, r1, r2, r3), self._den * rhs._den)

    __rmul__ = __mul__

    def _conjugate(self, flip2: bool, flip5: bool) -> "FieldScalar":
        a, b, c, d = self._nums
        b = -b if flip2 else b
        c = -c if flip5 else c
        d = -d if flip2 != flip5 else d
        return FieldScalar._raw((a, b, c, d), self._den)

    def inverse(self) -> "FieldScalar":
        if self.is_zero():
            raise ZeroDivisionError("FieldScalar division by zero")
        partner = self._conjugate(True, False) * self._conjugate(False, True) * self._conjugate(True, True)
        norm = self * partner
        if not norm.is_rational():  # pragma: no cover - field identity
            raise AlgebraError("Norm computation left the rationals")
        scale = Fraction(norm._den, norm._nums[0])
        return partner * scale

    def __truediv__(self, other: object) -> "FieldScalar":
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self * rhs.inverse()

    def sign(self) -> int:
        a, b, c, d = self._nums
        # self·den = P + Q√5 with P = a + b√2, Q = c + d√2
        sp = _sign_q2(a, b)
        sq = _sign_q2(c, d)
        if sp == 0:
            return sq
        if sq == 0 or sp == sq:
            return sp
        # P² − 5Q² = (a² + 2b² − 5c² − 10d²) + (2ab − 10cd)√2
        s = _sign_q2(a * a + 2 * b * b - 5 * c * c - 10 * d * d, 2 * a * b - 10 * c * d)
        return s if sp > 0 else -s

    def __eq__(self, other: object) -> bool:
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return self._nums == rhs._nums and self._den == rhs._den

    def __lt__(self, other: object) -> bool:
        rhs = self._coerce(other)
        if rhs is None:
            return NotImplemented
        return (self - rhs).sign() < 0

    def __hash__(self) -> int:
        return hash((self._nums, self._den))

    def __float__(self) -> float:
        a, b, c, d = self._nums
        return math.fsum((a, b * _SQRT2, c * _SQRT5, d * _SQRT10)) / self._den

    def __repr__(self) -> str:
        a, b, c, d = self.coefficients
        return f"FieldScalar({a}, {b}, {c}, {d})"

    def __str__(self) -> str:
        terms = []
        for coeff, unit in zip(self.coefficients, ("", "√2", "√5", "√10")):
            if coeff == 0:
                continue
            if unit and abs(coeff) == 1:
                text = unit
            else:
                text = f"{abs(coeff)}{unit}"
            terms.append(("-" if coeff < 0 else "+", text))
        if not terms:
            return "0"
        first_sign, first = terms[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, text in terms[1:]:
            out += f" {sign} {text}"
        return out


_ZERO = FieldScalar()
_ONE = FieldScalar(1)


@dataclass(frozen=True, slots=True)
class Quaternion:
    x0: FieldScalar
    x1: FieldScalar
    x2: FieldScalar
    x3: FieldScalar

    @classmethod
    def of(cls, *coefficients: Union[Rational, FieldScalar]) -> "Quaternion":
        values = [c if isinstance(c, FieldScalar) else FieldScalar(c) for c in coefficients]
        if len(values) != 4:
            raise AlgebraError("A quaternion needs four coefficients")
        return cls(*values)

    @classmethod
    def one(cls) -> "Quaternion":
        return cls(_ONE, _ZERO, _ZERO, _ZERO)

    @property
    def parts(self) -> Tuple[FieldScalar, FieldScalar, FieldScalar, FieldScalar]:
        return (self.x0, self.x1, self.x2, self.x3)

    @property
    def key(self) -> Tuple[Fraction, ...]:
        return tuple(c for part in self.parts for c in part.key)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        a1, b1, c1, d1 = self.parts
        a2, b2, c2, d2 = other.parts
        return Quaternion(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )

    def __neg__(self) -> "Quaternion":
        return Quaternion(-self.x0, -self.x1, -self.x2, -self.x3)

    def conjugate(self) -> "Quaternion":
        return Quaternion(self.x0, -self.x1, -self.x2, -self.x3)

    def norm_squared(self) -> FieldScalar:
        return self.x0 * self.x0 + self.x1 * self.x1 + self.x2 * self.x2 + self.x3 * self.x3

    def is_unit(self) -> bool:
        return self.norm_squared() == _ONE

    def inverse(self) -> "Quaternion":
        norm = self.norm_squared()
        if norm == _ONE:
            return self.conjugate()
        scale = norm.inverse()
        conj = self.conjugate()
        return Quaternion(*(part * scale for part in conj.parts))

    def real_part(self) -> float:
        return float(self.x0)

    def to_array(self) -> np.ndarray:
        return np.array([float(part) for part in self.parts], dtype=float)

    def __str__(self) -> str:
        return "(" + ", ".join(str(part) for part in self.parts) + ")"


QUATERNION_I = Quaternion.of(0, 1, 0, 0)
QUATERNION_J = Quaternion.of(0, 0, 1, 0)
QUATERNION_K = Quaternion.of(0, 0, 0, 1)
_HALF = Fraction(1, 2)
_QUARTER = Fraction(1, 4)
# ½(1 + i + j + k), rotation by 120° about a face normal
FACE_GENERATOR = Quaternion.of(_HALF, _HALF, _HALF, _HALF)
# (1 + i)/√2, rotation by 90° about a vertex
OCTAHEDRAL_VERTEX_GENERATOR = Quaternion.of(FieldScalar(0, _HALF), FieldScalar(0, _HALF), 0, 0)
# ½(φ + φ⁻¹ i + j) with φ = (√5 + 1)/2, rotation by 72° about a vertex
ICOSAHEDRAL_VERTEX_GENERATOR = Quaternion.of(
    FieldScalar(_QUARTER, 0, _QUARTER), FieldScalar(-_QUARTER, 0, _QUARTER), _HALF, 0
)


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    """Finite group of unit quaternions with its multiplication table."""

    elements: Tuple[Quaternion, ...]
    table: Tuple[Tuple[int, ...], ...]
    inverses: Tuple[int, ...]
    name: str = ""

    @property
    def order(self) -> int:
        return len(self.elements)

    @cached_property
    def _index(self) -> Dict[Quaternion, int]:
        return {element: idx for idx, element in enumerate(self.elements)}

    def index_of(self, element: Quaternion) -> int:
        try:
            return self._index[element]
        except KeyError as exc:
            raise AlgebraError(f"{element} is not an element of {self.name or 'the group'}") from exc

    def multiply(self, left: int, right: int) -> int:
        return self.table[left][right]

    def conjugate_by(self, element: int, by: int) -> int:
        return self.table[self.table[by][element]][self.inverses[by]]

    @cached_property
    def as_array(self) -> np.ndarray:
        """Float coordinates, shape (order, 4)."""
        return np.vstack([element.to_array() for element in self.elements])

    @cached_property
    def table_array(self) -> np.ndarray:
        return np.asarray(self.table, dtype=np.int64)

    @cached_property
    def inverse_array(self) -> np.ndarray:
        return np.asarray(self.inverses, dtype=np.int64)


def generate_group(
    generators: Sequence[Quaternion],
    cap: int = DEFAULT_CLOSURE_CAP,
    *,
    name: str = "",
) -> FiniteGroup:
    for generator in generators:
        if not generator.is_unit():
            raise AlgebraError(f"Generator {generator} is not a unit quaternion")
    identity = Quaternion.one()
    elements: List[Quaternion] = [identity]
    seen = {identity}
    frontier = [identity]
    while frontier:
        layer = set()
        for element in frontier:
            for generator in generators:
                product = element * generator
                if product not in seen and product not in layer:
                    layer.add(product)
        if len(seen) + len(layer) > cap:
            raise ClosureExceedsCap(
                f"Closure exceeds cap {cap}; generators may not span a finite group"
            )
        ordered = sorted(layer, key=lambda q: q.key)
        elements.extend(ordered)
        seen.update(ordered)
        frontier = ordered

    index = {element: idx for idx, element in enumerate(elements)}
    table = tuple(
        tuple(index[left * right] for right in elements) for left in elements
    )
    inverses = tuple(row.index(0) for row in table)
    LOGGER.debug("Generated group %s of order %s", name or "<anonymous>", len(elements))
    return FiniteGroup(elements=tuple(elements), table=table, inverses=inverses, name=name)


def geodesic_length(q: Quaternion) -> float:
    """Length of the minimising geodesic from 1 to q in SU(2), twice the S³ angle."""
    real = max(-1.0, min(1.0, q.real_part()))
    return 2.0 * math.acos(real)


def rational_pi_multiple(
    length: float,
    *,
    max_denominator: int = PI_MULTIPLE_MAX_DENOMINATOR,
    tolerance: float = PI_MULTIPLE_TOLERANCE,
) -> Optional[Fraction]:
    ratio = length / math.pi
    candidate = Fraction(ratio).limit_denominator(max_denominator)
    if abs(float(candidate) - ratio) <= tolerance:
        return candidate
    return None


@dataclass(frozen=True, slots=True)
class ConjugacyClass:
    members: Tuple[int, ...]
    representative: int
    length: float
    pi_multiple: Optional[Fraction] = None

    @property
    def size(self) -> int:
        return len(self.members)


def conjugacy_classes(group: FiniteGroup) -> List[ConjugacyClass]:
    assigned = [False] * group.order
    classes: List[ConjugacyClass] = []
    for element in range(group.order):
        if assigned[element]:
            continue
        orbit = sorted({group.conjugate_by(element, g) for g in range(group.order)})
        for member in orbit:
            assigned[member] = True
        representative = orbit[0]
        length = geodesic_length(group.elements[representative])
        classes.append(
            ConjugacyClass(
                members=tuple(orbit),
                representative=representative,
                length=length,
                pi_multiple=rational_pi_multiple(length),
            )
        )
    classes.sort(key=lambda c: (c.length, c.size, c.representative))
    return classes


class ClassPolygroup:
    """Conjugacy classes of a finite group with the multi-valued class product."""

    def __init__(self, group: FiniteGroup) -> None:
        self.group = group
        self.classes: Tuple[ConjugacyClass, ...] = tuple(conjugacy_classes(group))
        lookup = [0] * group.order
        for idx, cls in enumerate(self.classes):
            for member in cls.members:
                lookup[member] = idx
        self._class_of: Tuple[int, ...] = tuple(lookup)
        self._products: Dict[Tuple[int, int], FrozenSet[int]] = {}

    def __len__(self) -> int:
        return len(self.classes)

    def class_of(self, element: int) -> int:
        return self._class_of[element]

    @property
    def identity_class(self) -> int:
        return self._class_of[0]

    def inverse_class(self, idx: int) -> int:
        self._check(idx)
        rep = self.classes[idx].representative
        return self._class_of[self.group.inverses[rep]]

    def product(self, first: int, second: int) -> FrozenSet[int]:
        self._check(first)
        self._check(second)
        cached = self._products.get((first, second))
        if cached is not None:
            return cached
        rep = self.classes[first].representative
        row = self.group.table[rep]
        result = frozenset(self._class_of[row[member]] for member in self.classes[second].members)
        self._products[(first, second)] = result
        return result

    def _check(self, idx: int) -> None:
        if not 0 <= idx < len(self.classes):
            raise InvalidClassIndex(f"Class index {idx} out of range 0..{len(self.classes) - 1}")


def class_product(
    polygroup: ClassPolygroup, first: ConjugacyClass, second: ConjugacyClass
) -> List[ConjugacyClass]:
    i = polygroup.classes.index(first)
    j = polygroup.classes.index(second)
    return [polygroup.classes[idx] for idx in sorted(polygroup.product(i, j))]


@lru_cache(maxsize=None)
def catalog_group(name: str, cap: int = DEFAULT_CLOSURE_CAP) -> FiniteGroup:
    """Binary polyhedral groups of the catalog: Q8, 2T, 2O, 2I, and {±1}."""
    generators = {
        "pm1": [-Quaternion.one()],
        "Q8": [QUATERNION_I, QUATERNION_J],
        "2T": [FACE_GENERATOR, Quaternion.of(_HALF, _HALF, _HALF, -_HALF)],
        "2O": [FACE_GENERATOR, OCTAHEDRAL_VERTEX_GENERATOR],
        "2I": [FACE_GENERATOR, ICOSAHEDRAL_VERTEX_GENERATOR],
    }
    if name not in generators:
        raise AlgebraError(f"Unknown catalog group {name!r}")
    return generate_group(generators[name], cap, name=name)


@lru_cache(maxsize=None)
def catalog_polygroup(name: str) -> ClassPolygroup:
    return ClassPolygroup(catalog_group(name))


# float helpers shared with the solver; quaternions as (..., 4) arrays


def quat_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    a1, b1, c1, d1 = np.moveaxis(np.asarray(p, dtype=float), -1, 0)
    a2, b2, c2, d2 = np.moveaxis(np.asarray(q, dtype=float), -1, 0)
    return np.stack(
        (
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ),
        axis=-1,
    )


def quat_conj(q: np.ndarray) -> np.ndarray:
    out = np.array(q, dtype=float, copy=True)
    out[..., 1:] *= -1.0
    return out


def su2_distance(q: np.ndarray) -> np.ndarray:
    """SU(2) distance from 1, i.e. twice the angle on the unit sphere."""
    real = np.clip(np.asarray(q, dtype=float)[..., 0], -1.0, 1.0)
    return 2.0 * np.arccos(real)


def _helium3_components(m: int, theta: np.ndarray) -> Tuple[np.ndarray, float]:
    k_power = np.array([1.0, 0.0, 0.0, 0.0])
    i_power = np.array([1.0, 0.0, 0.0, 0.0])
    k = np.array([0.0, 0.0, 0.0, 1.0])
    i = np.array([0.0, 1.0, 0.0, 0.0])
    for _ in range(m):
        k_power = quat_mul(k_power, k)
        i_power = quat_mul(i_power, i)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    circle = np.stack(
        (np.cos(theta), np.sin(theta), np.zeros_like(theta), np.zeros_like(theta)), axis=-1
    )
    first = quat_mul(np.broadcast_to(k_power, circle.shape), circle)
    return su2_distance(first), float(su2_distance(i_power))


def component_distance_helium3(m: int, theta_samples: int = 64) -> float:
    """Minimal length of the ℤ₄ class m in (SU(2)×SU(2))/H.

    The class m is the component (k, i)^m·H₀ with H₀ = {(cos θ + i sin θ, 1)};
    its length is the smallest product-metric distance from the identity.
    """
    if m not in (0, 1, 2, 3):
        raise InvalidClassIndex(f"Helium-3 class index must be 0..3, got {m}")
    if theta_samples < 16:
        raise AlgebraError("theta_samples must be at least 16")

    def distance(theta: float) -> float:
        first, second = _helium3_components(m, np.array([theta]))
        return float(math.hypot(first[0], second))

    grid = np.linspace(0.0, 2.0 * math.pi, theta_samples, endpoint=False)
    first, second = _helium3_components(m, grid)
    values = np.hypot(first, second)
    best = int(np.argmin(values))
    best_value = float(values[best])
    step = 2.0 * math.pi / theta_samples
    refined = minimize_scalar(
        distance,
        bounds=(grid[best] - step, grid[best] + step),
        method="bounded",
        options={"xatol": 1e-12},
    )
    if refined.success and refined.fun < best_value:
        best_value = float(refined.fun)
    return best_value
