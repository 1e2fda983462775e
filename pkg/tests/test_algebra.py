from __future__ import annotations

import math
import unittest
from fractions import Fraction

from harmonic_renorm.algebra import (
    FACE_GENERATOR,
    OCTAHEDRAL_VERTEX_GENERATOR,
    QUATERNION_I,
    QUATERNION_J,
    QUATERNION_K,
    ClassPolygroup,
    ClosureExceedsCap,
    FieldScalar,
    InvalidClassIndex,
    Quaternion,
    catalog_group,
    class_product,
    component_distance_helium3,
    conjugacy_classes,
    generate_group,
    geodesic_length,
    rational_pi_multiple,
)


class FieldScalarTests(unittest.TestCase):
    def test_square_roots_multiply(self) -> None:
        root2 = FieldScalar.sqrt2()
        root5 = FieldScalar.sqrt5()
        self.assertEqual(root2 * root2, FieldScalar(2))
        self.assertEqual(root5 * root5, FieldScalar(5))
        self.assertEqual(root2 * root5, FieldScalar(0, 0, 0, 1))

    def test_conjugate_product(self) -> None:
        value = FieldScalar(1, 1)
        self.assertEqual(value * FieldScalar(1, -1), FieldScalar(-1))

    def test_inverse(self) -> None:
        value = FieldScalar(Fraction(1, 3), 2, -1, Fraction(1, 2))
        self.assertEqual(value * value.inverse(), FieldScalar(1))
        self.assertEqual(value / value, FieldScalar(1))

    def test_exact_sign(self) -> None:
        # √10 − 3 > 0, 3 − √10 < 0, √5 − √2 − 4/5 > 0
        self.assertEqual(FieldScalar(-3, 0, 0, 1).sign(), 1)
        self.assertEqual(FieldScalar(3, 0, 0, -1).sign(), -1)
        self.assertEqual(FieldScalar(Fraction(-4, 5), -1, 1, 0).sign(), 1)
        self.assertEqual(FieldScalar().sign(), 0)

    def test_sign_matches_float(self) -> None:
        samples = [
            FieldScalar(a, b, c, d)
            for a in (-2, Fraction(1, 2), 3)
            for b in (-1, 0, Fraction(2, 3))
            for c in (-1, 1)
            for d in (0, Fraction(-1, 4))
        ]
        for value in samples:
            expected = (float(value) > 0) - (float(value) < 0)
            self.assertEqual(value.sign(), expected, value)

    def test_ordering_and_hash(self) -> None:
        self.assertLess(FieldScalar(1), FieldScalar.sqrt2())
        self.assertEqual(hash(FieldScalar(Fraction(2, 4))), hash(FieldScalar(Fraction(1, 2))))


class QuaternionTests(unittest.TestCase):
    def test_hamilton_relations(self) -> None:
        minus_one = -Quaternion.one()
        self.assertEqual(QUATERNION_I * QUATERNION_I, minus_one)
        self.assertEqual(QUATERNION_J * QUATERNION_J, minus_one)
        self.assertEqual(QUATERNION_K * QUATERNION_K, minus_one)
        self.assertEqual(QUATERNION_I * QUATERNION_J * QUATERNION_K, minus_one)
        self.assertEqual(QUATERNION_I * QUATERNION_J, QUATERNION_K)

    def test_generators_are_units(self) -> None:
        self.assertTrue(FACE_GENERATOR.is_unit())
        self.assertTrue(OCTAHEDRAL_VERTEX_GENERATOR.is_unit())
        self.assertEqual(FACE_GENERATOR * FACE_GENERATOR.inverse(), Quaternion.one())


class GroupTests(unittest.TestCase):
    """Tests for closing generators into finite quaternion groups."""

    def test_catalog_orders(self) -> None:
        for name, order in (("pm1", 2), ("Q8", 8), ("2T", 24), ("2O", 48), ("2I", 120)):
            with self.subTest(name=name):
                group = catalog_group(name)
                self.assertEqual(group.order, order)
                self.assertEqual(group.elements[0], Quaternion.one())
                self.assertEqual(len(set(group.elements)), order)

    def test_table_is_a_group(self) -> None:
        group = catalog_group("2T")
        for a in range(group.order):
            self.assertEqual(group.multiply(a, group.inverses[a]), 0)
        for a, b, c in ((1, 5, 7), (3, 11, 20), (23, 2, 9)):
            left = group.multiply(group.multiply(a, b), c)
            right = group.multiply(a, group.multiply(b, c))
            self.assertEqual(left, right)

    def test_elements_are_exact_units(self) -> None:
        for name in ("pm1", "Q8", "2T", "2O", "2I"):
            group = catalog_group(name)
            with self.subTest(name=name):
                for element in group.elements:
                    self.assertEqual(element.norm_squared(), FieldScalar(1))

    def test_regenerating_from_elements_is_idempotent(self) -> None:
        """Test that closing a finite group over its own elements returns the same group."""
        for name in ("Q8", "2T", "2O"):
            group = catalog_group(name)
            again = generate_group(group.elements)
            with self.subTest(name=name):
                self.assertEqual(again.order, group.order)
                self.assertEqual(set(again.elements), set(group.elements))

    def test_deterministic_order(self) -> None:
        first = generate_group([QUATERNION_I, QUATERNION_J])
        second = generate_group([QUATERNION_I, QUATERNION_J])
        self.assertEqual(first.elements, second.elements)

    def test_closure_cap(self) -> None:
        # cos θ = 3/5 is not a root of unity, so the closure is infinite
        rotation = Quaternion.of(Fraction(3, 5), Fraction(4, 5), 0, 0)
        with self.assertRaises(ClosureExceedsCap):
            generate_group([rotation], cap=50)

    def test_trivial_group(self) -> None:
        group = generate_group([Quaternion.one()])
        classes = conjugacy_classes(group)
        self.assertEqual(len(classes), 1)
        self.assertEqual(classes[0].members, (0,))


class ConjugacyTests(unittest.TestCase):
    def test_quaternion_group(self) -> None:
        classes = conjugacy_classes(catalog_group("Q8"))
        self.assertEqual([c.size for c in classes], [1, 2, 2, 2, 1])
        self.assertEqual(sorted(c.size for c in classes), [1, 1, 2, 2, 2])

    def test_octahedral_counts(self) -> None:
        classes = conjugacy_classes(catalog_group("2O"))
        self.assertEqual(len(classes), 8)
        self.assertEqual(sorted(c.size for c in classes), sorted([1, 6, 8, 6, 12, 6, 8, 1]))

    def test_icosahedral_counts(self) -> None:
        classes = conjugacy_classes(catalog_group("2I"))
        self.assertEqual(sorted(c.size for c in classes), sorted([1, 12, 20, 12, 30, 12, 20, 12, 1]))

    def test_members_share_real_part(self) -> None:
        group = catalog_group("2O")
        for cls in conjugacy_classes(group):
            parts = {group.elements[m].x0 for m in cls.members}
            self.assertEqual(len(parts), 1)
            for member in cls.members:
                for g in range(group.order):
                    self.assertIn(group.conjugate_by(member, g), cls.members)

    def test_ascending_lengths(self) -> None:
        lengths = [c.length for c in conjugacy_classes(catalog_group("2I"))]
        self.assertEqual(lengths, sorted(lengths))
        self.assertAlmostEqual(lengths[0], 0.0)
        self.assertAlmostEqual(lengths[-1], 2.0 * math.pi)

    def test_geodesic_lengths(self) -> None:
        self.assertAlmostEqual(geodesic_length(-Quaternion.one()), 2.0 * math.pi)
        self.assertAlmostEqual(geodesic_length(QUATERNION_I), math.pi)
        self.assertAlmostEqual(geodesic_length(FACE_GENERATOR), 2.0 * math.pi / 3.0)
        self.assertAlmostEqual(geodesic_length(OCTAHEDRAL_VERTEX_GENERATOR), math.pi / 2.0)

    def test_pi_multiples(self) -> None:
        self.assertEqual(rational_pi_multiple(2.0 * math.pi / 3.0), Fraction(2, 3))
        self.assertEqual(rational_pi_multiple(0.0), Fraction(0))
        self.assertIsNone(rational_pi_multiple(math.sqrt(2.0) * math.pi))


class PolygroupTests(unittest.TestCase):
    """Tests for the class polygroup product."""

    def setUp(self) -> None:
        self.polygroup = ClassPolygroup(catalog_group("Q8"))
        group = self.polygroup.group
        self.i_class = self.polygroup.class_of(group.index_of(QUATERNION_I))
        self.minus_class = self.polygroup.class_of(group.index_of(-Quaternion.one()))

    def test_square_of_rotation_class(self) -> None:
        product = self.polygroup.product(self.i_class, self.i_class)
        self.assertEqual(product, frozenset({self.polygroup.identity_class, self.minus_class}))

    def test_class_product_objects(self) -> None:
        classes = self.polygroup.classes
        result = class_product(self.polygroup, classes[self.i_class], classes[self.minus_class])
        self.assertEqual(result, [classes[self.i_class]])

    def test_associative_over_catalog(self) -> None:
        """Test that (a∘b)∘c equals a∘(b∘c) for every triple of classes in every catalog group."""
        for name in ("pm1", "Q8", "2T", "2O", "2I"):
            polygroup = ClassPolygroup(catalog_group(name))
            indices = range(len(polygroup))
            with self.subTest(name=name):
                for a in indices:
                    for b in indices:
                        ab = polygroup.product(a, b)
                        for c in indices:
                            left = frozenset().union(*(polygroup.product(d, c) for d in ab))
                            right = frozenset().union(*(polygroup.product(a, d) for d in polygroup.product(b, c)))
                            self.assertEqual(left, right, (a, b, c))

    def test_commutative(self) -> None:
        polygroup = ClassPolygroup(catalog_group("2T"))
        for a in range(len(polygroup)):
            for b in range(len(polygroup)):
                self.assertEqual(polygroup.product(a, b), polygroup.product(b, a))

    def test_inverse_class(self) -> None:
        self.assertEqual(self.polygroup.inverse_class(self.i_class), self.i_class)

    def test_invalid_index(self) -> None:
        with self.assertRaises(InvalidClassIndex):
            self.polygroup.product(0, 99)


class HeliumThreeTests(unittest.TestCase):
    def test_component_distances(self) -> None:
        expected = [0.0, math.sqrt(2.0) * math.pi, 2.0 * math.pi, math.sqrt(2.0) * math.pi]
        for m, value in enumerate(expected):
            self.assertAlmostEqual(component_distance_helium3(m), value, places=6)

    def test_invalid_component(self) -> None:
        with self.assertRaises(InvalidClassIndex):
            component_distance_helium3(4)


if __name__ == "__main__":
    unittest.main()
