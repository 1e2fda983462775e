from __future__ import annotations

import math
import random
import unittest

from harmonic_renorm.topology import (
    BoundaryTopology,
    ManifoldDescriptor,
    ManifoldKind,
    MixedManifolds,
    NormBoundTooSmall,
    TopologyError,
    TrivialClass,
    UnknownClass,
    brute_force_singular_energies,
    homotopy_class,
    inverse_class,
    is_atomic,
    is_topological_resolution,
    minimal_decompositions,
    parse_table_csv,
    singular_energy,
    singular_energy_of_boundary,
    systole,
    table_report,
)

# name, conjugates, λ/π, E^sg/π, minimal decompositions
PROJECTIVE_ROWS = [
    ("γ_c", 1, 0.0, 0.0, []),
    ("γ_a", 1, 1.0, 1 / 4, [("γ_a",)]),
]

HELIUM3_ROWS = [
    ("γ_0", 1, 0.0, 0.0, []),
    ("γ_+1", 1, math.sqrt(2.0), 1 / 2, [("γ_+1",)]),
    ("γ_2", 1, 2.0, 1.0, [("γ_2",), ("γ_+1", "γ_+1"), ("γ_-1", "γ_-1")]),
    ("γ_-1", 1, math.sqrt(2.0), 1 / 2, [("γ_-1",)]),
]

ORTHORHOMBIC_ROWS = [
    ("γ_c", 1, 0.0, 0.0, []),
    ("γ_x", 2, 1.0, 1 / 4, [("γ_x",)]),
    ("γ_y", 2, 1.0, 1 / 4, [("γ_y",)]),
    ("γ_z", 2, 1.0, 1 / 4, [("γ_z",)]),
    ("γ_w", 1, 2.0, 1 / 2, [("γ_x", "γ_x"), ("γ_y", "γ_y"), ("γ_z", "γ_z")]),
]

TETRAHEDRAL_ROWS = [
    ("γ_c", 1, 0.0, 0.0, []),
    ("γ_+", 4, 2 / 3, 1 / 9, [("γ_+",)]),
    ("γ_-", 4, 2 / 3, 1 / 9, [("γ_-",)]),
    ("γ_+^2", 4, 4 / 3, 2 / 9, [("γ_+", "γ_+")]),
    ("γ_-^2", 4, 4 / 3, 2 / 9, [("γ_-", "γ_-")]),
    ("γ_e", 6, 1.0, 2 / 9, [("γ_+", "γ_-")]),
    ("γ_w", 1, 2.0, 1 / 3, [("γ_+", "γ_+", "γ_+"), ("γ_-", "γ_-", "γ_-")]),
]

OCTAHEDRAL_ROWS = [
    ("γ_c", 1, 0.0, 0.0, []),
    ("γ_v", 6, 1 / 2, 1 / 16, [("γ_v",)]),
    ("γ_f", 8, 2 / 3, 1 / 9, [("γ_f",)]),
    ("γ_v^2", 6, 1.0, 1 / 8, [("γ_v", "γ_v")]),
    ("γ_e", 12, 1.0, 25 / 144, [("γ_f", "γ_v")]),
    ("γ_v^3", 6, 3 / 2, 3 / 16, [("γ_v", "γ_v", "γ_v")]),
    ("γ_f^2", 8, 4 / 3, 2 / 9, [("γ_f", "γ_f")]),
    ("γ_w", 1, 2.0, 1 / 4, [("γ_v", "γ_v", "γ_v", "γ_v")]),
]

ICOSAHEDRAL_ROWS = [
    ("γ_c", 1, 0.0, 0.0, []),
    ("γ_v", 12, 2 / 5, 1 / 25, [("γ_v",)]),
    ("γ_f", 20, 2 / 3, 2 / 25, [("γ_v", "γ_v")]),
    ("γ_v^2", 12, 4 / 5, 2 / 25, [("γ_v", "γ_v")]),
    ("γ_e", 30, 1.0, 3 / 25, [("γ_v",) * 3]),
    ("γ_v^3", 12, 6 / 5, 3 / 25, [("γ_v",) * 3]),
    ("γ_f^2", 20, 4 / 3, 4 / 25, [("γ_v",) * 4]),
    ("γ_v^4", 12, 8 / 5, 4 / 25, [("γ_v",) * 4]),
    ("γ_w", 1, 2.0, 1 / 5, [("γ_v",) * 5]),
]

TABLES = {
    "rp2": PROJECTIVE_ROWS,
    "helium3": HELIUM3_ROWS,
    "q8": ORTHORHOMBIC_ROWS,
    "2t": TETRAHEDRAL_ROWS,
    "2o": OCTAHEDRAL_ROWS,
    "2i": ICOSAHEDRAL_ROWS,
}


def _as_multisets(decompositions) -> set:
    return {tuple(sorted(parts)) for parts in decompositions}


class DescriptorTests(unittest.TestCase):
    """Tests for manifold descriptors and class lookup."""

    def test_parse_aliases(self) -> None:
        self.assertEqual(ManifoldDescriptor.parse("RP3"), ManifoldDescriptor(ManifoldKind.PROJECTIVE_SPACE, 3))
        self.assertEqual(ManifoldDescriptor.parse("2O").kind, ManifoldKind.OCTAHEDRAL)
        self.assertEqual(ManifoldDescriptor.parse("flat-torus").kind, ManifoldKind.FLAT_TORUS)
        self.assertEqual(ManifoldDescriptor.parse("he3").kind, ManifoldKind.HELIUM3)

    def test_unknown_manifold(self) -> None:
        with self.assertRaises(TopologyError):
            ManifoldDescriptor.parse("klein_bottle")

    def test_projective_dimension(self) -> None:
        with self.assertRaises(TopologyError):
            ManifoldDescriptor(ManifoldKind.PROJECTIVE_SPACE, 1)

    def test_class_lookup(self) -> None:
        q8 = ManifoldDescriptor.parse("q8")
        self.assertEqual(homotopy_class(q8, "x"), homotopy_class(q8, "γ_x"))
        helium = ManifoldDescriptor.parse("helium3")
        self.assertEqual(homotopy_class(helium, "-1").name, "γ_-1")
        circle = ManifoldDescriptor.parse("circle")
        self.assertEqual(homotopy_class(circle, "-2").class_id, (-2,))
        torus = ManifoldDescriptor.parse("flat_torus")
        self.assertEqual(homotopy_class(torus, "1:-1").class_id, (1, -1))
        with self.assertRaises(UnknownClass):
            homotopy_class(q8, "γ_q")
        with self.assertRaises(UnknownClass):
            homotopy_class(torus, "1")

    def test_systoles(self) -> None:
        self.assertAlmostEqual(systole(ManifoldDescriptor.parse("circle")), 2.0 * math.pi)
        self.assertAlmostEqual(systole(ManifoldDescriptor.parse("q8")), math.pi)
        self.assertAlmostEqual(systole(ManifoldDescriptor.parse("2i")), 2.0 * math.pi / 5.0)
        self.assertAlmostEqual(systole(ManifoldDescriptor.parse("equilateral_torus")), 1.0)

    def test_inverse_class(self) -> None:
        tetra = ManifoldDescriptor.parse("2t")
        self.assertEqual(inverse_class(homotopy_class(tetra, "+")).name, "γ_-")
        self.assertEqual(inverse_class(homotopy_class(tetra, "e")).name, "γ_e")


class ClassTableTests(unittest.TestCase):
    """The six finite tables against their known values."""

    def test_tables(self) -> None:
        for label, expected in TABLES.items():
            table = table_report(ManifoldDescriptor.parse(label))
            with self.subTest(manifold=label):
                self.assertEqual([row.name for row in table.rows], [row[0] for row in expected])
                for row, (name, conjugates, lam, esg, decompositions) in zip(table.rows, expected):
                    self.assertEqual(row.conjugates, conjugates, name)
                    self.assertAlmostEqual(row.lambda_over_pi, lam, places=6, msg=name)
                    self.assertAlmostEqual(row.esg_over_pi, esg, places=6, msg=name)
                    self.assertEqual(
                        _as_multisets(row.decompositions), _as_multisets(decompositions), name
                    )

    def test_brute_force_agrees(self) -> None:
        for label in TABLES:
            manifold = ManifoldDescriptor.parse(label)
            oracle = brute_force_singular_energies(manifold)
            model = manifold.class_model
            with self.subTest(manifold=label):
                for cid in model.catalog_ids():
                    energy, _ = singular_energy(homotopy_class(manifold, cid))
                    self.assertAlmostEqual(energy, oracle[cid], places=9)

    def test_energy_never_exceeds_atom(self) -> None:
        manifold = ManifoldDescriptor.parse("2i")
        for cid in manifold.class_model.catalog_ids():
            c = homotopy_class(manifold, cid)
            energy, decompositions = singular_energy(c)
            self.assertLessEqual(energy, c.energy + 1e-12)
            for decomposition in decompositions:
                self.assertAlmostEqual(decomposition.energy, energy, places=9)

    def test_inverse_classes_share_energy(self) -> None:
        """Test that a class and its inverse have the same singular energy and mirrored decompositions."""
        for label in TABLES:
            manifold = ManifoldDescriptor.parse(label)
            for cid in manifold.class_model.catalog_ids():
                c = homotopy_class(manifold, cid)
                inverse = inverse_class(c)
                energy, decompositions = singular_energy(c)
                inverse_energy, inverse_decompositions = singular_energy(inverse)
                with self.subTest(manifold=label, cls=c.name):
                    self.assertAlmostEqual(energy, inverse_energy, places=12)
                    mirrored = [[inverse_class(part).name for part in d.parts] for d in decompositions]
                    self.assertEqual(_as_multisets(mirrored), _as_multisets(d.names for d in inverse_decompositions))

    def test_part_count_bounded_by_systole(self) -> None:
        for label in TABLES:
            manifold = ManifoldDescriptor.parse(label)
            shortest = systole(manifold)
            for cid in manifold.class_model.catalog_ids():
                c = homotopy_class(manifold, cid)
                if c.is_trivial:
                    continue
                limit = math.floor(c.length**2 / shortest**2 + 1e-9)
                with self.subTest(manifold=label, cls=c.name):
                    for decomposition in minimal_decompositions(c):
                        self.assertLessEqual(len(decomposition), limit)

    def test_text_uses_pi_fractions(self) -> None:
        text = table_report(ManifoldDescriptor.parse("2o")).to_text()
        self.assertIn("25π/144", text)
        self.assertIn("π/16", text)
        self.assertTrue(text.splitlines()[0].startswith("Name"))

    def test_csv_parses_back(self) -> None:
        table = table_report(ManifoldDescriptor.parse("q8"))
        parsed = parse_table_csv(table.to_csv())
        self.assertEqual(len(parsed), len(table.rows))
        for record, row in zip(parsed, table.rows):
            self.assertEqual(record["name"], row.name)
            self.assertEqual(record["conjugates"], row.conjugates)
            self.assertAlmostEqual(record["lambda_over_pi"], row.lambda_over_pi, places=10)
            self.assertAlmostEqual(record["esg_over_pi"], row.esg_over_pi, places=10)
            self.assertEqual(_as_multisets(record["decompositions"]), _as_multisets(row.decompositions))

    def test_json_payload(self) -> None:
        text = table_report(ManifoldDescriptor.parse("rp2")).to_json()
        self.assertIn('"manifold": "RP2"', text)
        self.assertIn("γ_a", text)

    def test_higher_projective_space(self) -> None:
        rows = table_report(ManifoldDescriptor.parse("rp3")).rows
        self.assertEqual([row.name for row in rows], ["γ_c", "γ_a"])
        self.assertAlmostEqual(rows[1].esg_over_pi, 0.25)


class LatticeTests(unittest.TestCase):
    def test_circle_energy_is_linear(self) -> None:
        circle = ManifoldDescriptor.parse("circle")
        for degree in range(-6, 7):
            energy, decompositions = singular_energy(homotopy_class(circle, degree))
            self.assertAlmostEqual(energy, math.pi * abs(degree), places=9)
            if degree:
                unit = "γ_1" if degree > 0 else "γ_-1"
                self.assertIn((unit,) * abs(degree), {d.names for d in decompositions})

    def test_flat_torus_energy(self) -> None:
        torus = ManifoldDescriptor.parse("flat_torus")
        for n in range(-3, 4):
            for m in range(-3, 4):
                energy, _ = singular_energy(homotopy_class(torus, (n, m)))
                self.assertAlmostEqual(energy, math.pi * (abs(n) + abs(m)), places=9)

    def test_diagonal_torus_class_has_two_decompositions(self) -> None:
        torus = ManifoldDescriptor.parse("flat_torus")
        _, decompositions = singular_energy(homotopy_class(torus, (1, 1)))
        self.assertEqual(
            _as_multisets(d.names for d in decompositions),
            {("γ_(1,1)",), ("γ_(0,1)", "γ_(1,0)")},
        )
        self.assertEqual(minimal_decompositions(homotopy_class(torus, (1, 1))), decompositions)
        self.assertFalse(is_atomic(homotopy_class(torus, (2, 0))))

    def test_norm_bound_too_small(self) -> None:
        circle = ManifoldDescriptor.parse("circle")
        with self.assertRaises(NormBoundTooSmall):
            singular_energy(homotopy_class(circle, 3), bound=1.0)

    def test_circle_table_rows(self) -> None:
        rows = table_report(ManifoldDescriptor.parse("circle"), bound=2.0).rows
        self.assertEqual({row.name for row in rows}, {"γ_0", "γ_1", "γ_-1", "γ_2", "γ_-2"})
        for row in rows:
            self.assertEqual(row.conjugates, 1)


class ResolutionTests(unittest.TestCase):
    """Tests for topological resolutions and boundary energies."""

    def setUp(self) -> None:
        self.circle = ManifoldDescriptor.parse("circle")
        self.q8 = ManifoldDescriptor.parse("q8")

    def test_order_of_singularities_is_irrelevant(self) -> None:
        """Test that shuffling the singular charges never changes the verdict."""
        rng = random.Random(11)
        for label in ("q8", "2t", "2o"):
            manifold = ManifoldDescriptor.parse(label)
            classes = [homotopy_class(manifold, cid) for cid in manifold.class_model.catalog_ids()]
            for _ in range(40):
                charges = rng.choices(classes, k=rng.randint(1, 4))
                boundary = BoundaryTopology(rng.choice(classes))
                expected = is_topological_resolution(boundary, charges)
                for _ in range(3):
                    shuffled = list(charges)
                    rng.shuffle(shuffled)
                    with self.subTest(manifold=label, charges=[c.name for c in shuffled]):
                        self.assertEqual(is_topological_resolution(boundary, shuffled), expected)

    def test_annulus_boundary_energy(self) -> None:
        two = homotopy_class(self.circle, 2)
        one = homotopy_class(self.circle, 1)
        boundary = BoundaryTopology(two, inner=(one,))
        self.assertAlmostEqual(singular_energy_of_boundary(boundary), math.pi)

    def test_circle_degrees_add(self) -> None:
        one = homotopy_class(self.circle, 1)
        two = homotopy_class(self.circle, 2)
        self.assertTrue(is_topological_resolution(BoundaryTopology(two), [one, one]))
        self.assertFalse(is_topological_resolution(BoundaryTopology(one), [two]))

    def test_non_abelian_products(self) -> None:
        x = homotopy_class(self.q8, "x")
        y = homotopy_class(self.q8, "y")
        w = homotopy_class(self.q8, "w")
        self.assertTrue(is_topological_resolution(BoundaryTopology(w), [x, x]))
        self.assertFalse(is_topological_resolution(BoundaryTopology(x), [y]))
        z = homotopy_class(self.q8, "z")
        self.assertTrue(is_topological_resolution(BoundaryTopology(z), [x, y]))

    def test_inner_boundaries_count(self) -> None:
        x = homotopy_class(self.q8, "x")
        c = homotopy_class(self.q8, "c")
        boundary = BoundaryTopology(c, inner=(x,))
        self.assertTrue(is_topological_resolution(boundary, [x]))

    def test_mixed_manifolds(self) -> None:
        with self.assertRaises(MixedManifolds):
            is_topological_resolution(
                BoundaryTopology(homotopy_class(self.circle, 1)), [homotopy_class(self.q8, "x")]
            )

    def test_boundary_energy(self) -> None:
        boundary = BoundaryTopology(homotopy_class(self.circle, 3))
        self.assertAlmostEqual(singular_energy_of_boundary(boundary), 3.0 * math.pi)
        w = BoundaryTopology(homotopy_class(self.q8, "w"))
        self.assertAlmostEqual(singular_energy_of_boundary(w), math.pi / 2.0)

    def test_atomic_classes(self) -> None:
        self.assertTrue(is_atomic(homotopy_class(self.q8, "x")))
        self.assertFalse(is_atomic(homotopy_class(self.q8, "w")))
        self.assertFalse(is_atomic(homotopy_class(ManifoldDescriptor.parse("2o"), "e")))
        self.assertTrue(is_atomic(homotopy_class(ManifoldDescriptor.parse("helium3"), 2)))
        with self.assertRaises(TrivialClass):
            is_atomic(homotopy_class(self.q8, "c"))


if __name__ == "__main__":
    unittest.main()
