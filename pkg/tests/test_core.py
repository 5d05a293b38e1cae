import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pairspace.core import (
    CollisionError,
    MassVector,
    PairConfiguration,
    RealizabilityError,
    SystemState,
    pair_angular_momentum,
    pair_energy,
    pair_kinetic_energy,
    pairs_from_particles,
    particle_angular_momentum,
    particle_energy,
    particle_kinetic_energy,
    reduced_pair_mass,
    reduced_triplet_mass,
    state_from_dict,
    total_pair_angular_momentum,
    total_pair_energy,
    verify_triangle,
)
from pairspace.configs import equilateral, lagrange_state

from conftest import random_system

coords = arrays(np.float64, (4, 3), elements=st.floats(-10, 10, allow_nan=False))


class TestMassVector:
    def test_total_and_validation(self):
        mv = MassVector([1, 2, 3])
        assert mv.total == 6.0
        with pytest.raises(ValueError):
            MassVector([1.0])
        with pytest.raises(ValueError):
            MassVector([1.0, -2.0])
        with pytest.raises(ValueError):
            MassVector([1.0, 0.0, 1.0])

    def test_reduced_masses(self):
        mv = MassVector([1, 2, 3])
        assert reduced_pair_mass(mv, 0, 1) == pytest.approx(1 / 3, rel=1e-15)
        assert reduced_triplet_mass(mv, 0, 1, 2) == pytest.approx(1 / 6, rel=1e-15)
        eq = MassVector([2.0] * 5)
        assert reduced_pair_mass(eq, 1, 3) == pytest.approx(2.0 / 5)
        with pytest.raises(ValueError):
            reduced_pair_mass(mv, 1, 1)
        with pytest.raises(ValueError):
            reduced_triplet_mass(mv, 0, 2, 0)


class TestPairs:
    def test_two_body_subtraction(self):
        mv = MassVector([1, 1])
        s = SystemState.create(mv, [[0, 0, 0], [1, 0, 0]], barycentric=False)
        ps = pairs_from_particles(s)
        np.testing.assert_array_equal(ps.configuration[0, 1], [-1, 0, 0])

    def test_coincident_positions_give_zero_pairs(self):
        s = SystemState(np.ones((3, 3)), np.zeros((3, 3)))
        ps = pairs_from_particles(s)
        assert not ps.configuration.vectors.any()
        with pytest.raises(CollisionError):
            ps.configuration.check_collisions()

    def test_antisymmetric_access(self, rng):
        _, s = random_system(rng, 5)
        pc = pairs_from_particles(s).configuration
        for i, j in pc.pairs():
            np.testing.assert_array_equal(pc[j, i], -pc[i, j])
        full = pc.full()
        np.testing.assert_array_equal(full, -full.transpose(1, 0, 2))

    def test_from_mapping_accepts_either_orientation(self):
        pc = PairConfiguration.from_mapping({(0, 1): [1, 0, 0], (2, 1): [0, 1, 0], (0, 2): [1, -1, 0]}, 3)
        np.testing.assert_array_equal(pc[1, 2], [0, -1, 0])
        assert verify_triangle(pc) == 0.0
        with pytest.raises(ValueError):
            PairConfiguration.from_mapping({(0, 1): [1, 0, 0]}, 3)

    def test_random_states_are_realizable(self, rng):
        for _ in range(100):
            _, s = random_system(rng, 4)
            assert verify_triangle(pairs_from_particles(s).configuration) <= 1e-13

    @settings(max_examples=200, deadline=None)
    @given(coords)
    def test_round_trip_triangle_property(self, pos):
        pc = PairConfiguration.from_positions(pos)
        if np.linalg.norm(pc.vectors, axis=1).min() == 0:
            return
        assert verify_triangle(pc) <= 1e-13

    def test_negated_leg_is_violation(self):
        pc = PairConfiguration.from_positions(equilateral())
        bad = pc.vectors.copy()
        bad[1] = -bad[1]  # flips q_02, i.e. q_20 in the cycle
        v = verify_triangle(PairConfiguration(bad, 3))
        assert v > 0.5
        with pytest.raises(RealizabilityError):
            PairConfiguration(bad, 3).check_realizable()

    def test_equal_pair_vectors_not_realizable(self):
        # four bodies with every q_ij the same vector
        pc = PairConfiguration(np.tile([1.0, 0.0, 0.0], (6, 1)), 4)
        # q_ij + q_jk + q_ki = q + q - q = q
        assert verify_triangle(pc) == pytest.approx(1 / 3)

    def test_all_zero_triplet_is_infinite(self):
        assert verify_triangle(PairConfiguration(np.zeros((3, 3)), 3)) == math.inf

    def test_barycentric_option(self, rng):
        mv = MassVector([1.0, 2.0, 3.0])
        s = SystemState.create(mv, rng.normal(size=(3, 3)) + 5, rng.normal(size=(3, 3)))
        assert s.is_barycentric(mv)
        np.testing.assert_allclose((mv.masses[:, None] * s.velocities).sum(0), 0, atol=1e-14)


class TestEnergy:
    def test_kinetic_matches_particles(self, rng):
        for n in (3, 4, 5, 6):
            for _ in range(20):
                mv, s = random_system(rng, n)
                ps = pairs_from_particles(s)
                expected = particle_kinetic_energy(mv, s)
                assert pair_kinetic_energy(mv, ps) == pytest.approx(expected, rel=1e-12)

    def test_zero_velocity_kinetic(self):
        mv = MassVector([1, 2, 3])
        s = SystemState.create(mv, equilateral())
        assert pair_kinetic_energy(mv, pairs_from_particles(s)) == 0.0

    def test_two_body_reduced_mass(self):
        mv = MassVector([2.0, 2.0])
        s = SystemState([[0, 0, 0], [1, 0, 0]], [[0, 0, 0], [0, 3.0, 0]])
        assert pair_kinetic_energy(mv, pairs_from_particles(s)) == pytest.approx(0.5 * 1.0 * 9.0)

    def test_triplet_term_negligible(self, rng):
        mv, s = random_system(rng, 5)
        ps = pairs_from_particles(s)
        pair_term = 0.5 * sum(
            reduced_pair_mass(mv, i, j) * float(ps.velocities()[i, j] @ ps.velocities()[i, j])
            for i, j in ps.configuration.pairs()
        )
        assert abs(pair_kinetic_energy(mv, ps) - pair_term) <= 1e-13 * pair_term

    def test_static_pair_energy(self):
        mv = MassVector([1, 2, 3])
        s = SystemState.create(mv, equilateral(2.0), G=0.5)
        ps = pairs_from_particles(s)
        assert pair_energy(mv, ps, 0, 2, 0.5) == pytest.approx(-0.5 * 6 * (3 / 6) / 2.0)

    def test_total_energy_matches_particles(self, rng):
        for n in (3, 4, 5, 6):
            for _ in range(20):
                mv, s = random_system(rng, n)
                e = total_pair_energy(mv, pairs_from_particles(s), s.G)
                assert e == pytest.approx(particle_energy(mv, s), rel=1e-12)

    def test_collision_raises(self):
        mv = MassVector([1, 1, 1])
        s = SystemState([[0, 0, 0], [1, 0, 0], [1, 0, 0]], np.zeros((3, 3)))
        with pytest.raises(CollisionError):
            total_pair_energy(mv, pairs_from_particles(s))
        with pytest.raises(CollisionError):
            pair_energy(mv, pairs_from_particles(s), 1, 2)


class TestAngularMomentum:
    def test_total_matches_particles(self, rng):
        for _ in range(100):
            mv, s = random_system(rng, 3)
            L = total_pair_angular_momentum(mv, pairs_from_particles(s))
            ref = particle_angular_momentum(mv, s)
            np.testing.assert_allclose(L, ref, rtol=0, atol=1e-12 * np.linalg.norm(ref))

    def test_parallel_velocity_has_no_momentum(self):
        mv = MassVector([1, 1])
        s = SystemState([[0, 0, 0], [1, 0, 0]], [[0, 0, 0], [2.0, 0, 0]])
        np.testing.assert_array_equal(pair_angular_momentum(mv, pairs_from_particles(s), 0, 1), 0)

    def test_rotating_triangle(self):
        mv, s, omega = lagrange_state()
        assert omega == pytest.approx(math.sqrt(3), rel=1e-14)
        ps = pairs_from_particles(s)
        for i, j in ps.configuration.pairs():
            L = pair_angular_momentum(mv, ps, i, j)
            assert np.linalg.norm(L) == pytest.approx(math.sqrt(3) / 3, rel=1e-13)


class TestStateFiles:
    def test_round_trip(self, tmp_path):
        mv, s, _ = lagrange_state((1, 2, 3))
        from pairspace.core import load_state, state_to_dict
        import json
        path = tmp_path / "s.json"
        path.write_text(json.dumps(state_to_dict(mv, s)))
        mv2, s2 = load_state(path)
        np.testing.assert_array_equal(mv2.masses, mv.masses)
        np.testing.assert_array_equal(s2.positions, s.positions)
        np.testing.assert_array_equal(s2.velocities, s.velocities)

    def test_missing_and_mismatched_fields(self):
        with pytest.raises(ValueError, match="masses"):
            state_from_dict({"positions": [[0, 0, 0]]})
        with pytest.raises(ValueError, match="positions"):
            state_from_dict({"masses": [1, 1], "positions": [[0, 0, 0]]})
