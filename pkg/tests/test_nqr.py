import math

import numpy as np
import pytest
from scipy.linalg import expm

from wzlab.errors import DomainError, GaugeError
from wzlab.nqr import (
    FieldDirection,
    connection_closed_form,
    connection_numeric,
    connection_numeric_matrices,
    eigenframe,
    gauge_transform,
    hamiltonian,
    spin_operators,
)


class TestSpinOperators:
    def test_commutation_relations(self):
        ops = spin_operators()
        jx, jy, jz = ops.as_tuple
        for a, b, c in ((jx, jy, jz), (jy, jz, jx), (jz, jx, jy)):
            assert np.abs(a @ b - b @ a - 1j * c).max() < 1e-12

    def test_casimir(self):
        jx, jy, jz = spin_operators().as_tuple
        assert np.abs(jx @ jx + jy @ jy + jz @ jz - 3.75 * np.eye(4)).max() < 1e-12


class TestHamiltonian:
    def test_north_pole_is_diagonal(self):
        h = hamiltonian(FieldDirection(0.0, 0.0))
        assert np.abs(h - np.diag([2.25, 0.25, 0.25, 2.25])).max() < 1e-14

    def test_spectrum_direction_independent(self, rng):
        for _ in range(40):
            d = FieldDirection(rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi))
            evals = np.sort(np.linalg.eigvalsh(hamiltonian(d)))
            assert np.abs(evals - [0.25, 0.25, 2.25, 2.25]).max() < 1e-12

    def test_equator_equals_jx_squared(self):
        jx = spin_operators().jx
        h = hamiltonian(FieldDirection(math.pi / 2, 0.0))
        assert np.abs(h - jx @ jx).max() < 1e-13


class TestEigenframe:
    def test_north_pole_doublet_components(self):
        f = eigenframe(FieldDirection(0.0, 1.3), "north")
        assert np.abs(f.doublet[:, 0] - [0, 1, 0, 0]).max() < 1e-14
        assert np.abs(f.doublet[:, 1] - [0, 0, 1, 0]).max() < 1e-14

    def test_eigenvector_property(self):
        d = FieldDirection(math.pi / 3, math.pi / 5)
        f = eigenframe(d, "north")
        h = hamiltonian(d)
        assert np.abs(h @ f.doublet - 0.25 * f.doublet).max() < 1e-10
        assert np.abs(h @ f.outer_doublet - 2.25 * f.outer_doublet).max() < 1e-10
        assert np.abs(f.states.conj().T @ f.states - np.eye(4)).max() < 1e-12

    def test_rotation_construction_reproduces_closed_form(self, rng):
        # oracle: exp(-i Theta n.J) applied to the Jz eigenvectors
        jx, jy, jz = spin_operators().as_tuple
        for _ in range(100):
            th = rng.uniform(1e-3, math.pi - 1e-3)
            ph = rng.uniform(0.0, 2.0 * math.pi)
            rot = expm(-1j * th * (-math.sin(ph) * jx + math.cos(ph) * jy))
            f = eigenframe(FieldDirection(th, ph), "north")
            assert np.abs(rot - f.states).max() < 1e-12

    def test_random_directions_all_gauges(self, rng):
        for _ in range(1000):
            th = rng.uniform(1e-2, math.pi - 1e-2)
            ph = rng.uniform(0.0, 2.0 * math.pi)
            d = FieldDirection(th, ph)
            h = hamiltonian(d)
            for gauge in ("north", "south", "equator"):
                f = eigenframe(d, gauge)
                assert np.abs(f.states.conj().T @ f.states - np.eye(4)).max() < 1e-10
                assert np.abs(h @ f.doublet - 0.25 * f.doublet).max() < 1e-10

    def test_pole_exclusions(self):
        with pytest.raises(GaugeError):
            eigenframe(FieldDirection(math.pi, 0.0), "north")
        with pytest.raises(GaugeError):
            eigenframe(FieldDirection(0.0, 0.0), "south")
        with pytest.raises(GaugeError):
            eigenframe(FieldDirection(0.0, 0.0), "equator")


class TestConnectionClosedForm:
    def test_north_coefficients_vanish_at_pole_like_theta(self):
        for th in (1e-3, 1e-4, 1e-5):
            c = connection_closed_form(FieldDirection(th, 0.7), "north")
            assert c.a_phi.norm < 1.2 * th

    def test_north_near_south_pole_approaches_minus_sigma3(self):
        c = connection_closed_form(FieldDirection(math.pi - 1e-6, 0.3), "north")
        assert np.abs(c.a_phi.v - [0.0, 0.0, -1.0]).max() < 1e-5

    def test_equator_gauge_form(self, rng):
        for _ in range(20):
            th = rng.uniform(0.05, math.pi - 0.05)
            ph = rng.uniform(0.0, 2.0 * math.pi)
            c = connection_closed_form(FieldDirection(th, ph), "equator")
            assert np.abs(c.a_theta.v - [0.0, 1.0, 0.0]).max() < 1e-15
            expected = [-math.sin(th), 0.0, 0.5 * math.cos(th)]
            assert np.abs(c.a_phi.v - expected).max() < 1e-15


class TestConnectionNumeric:
    def test_matches_closed_form(self):
        d = FieldDirection(math.pi / 3, math.pi / 7)
        for gauge in ("north", "south", "equator"):
            num = connection_numeric(d, gauge, h=1e-5)
            ref = connection_closed_form(d, gauge)
            assert np.abs(num.a_theta.v - ref.a_theta.v).max() < 1e-8
            assert np.abs(num.a_phi.v - ref.a_phi.v).max() < 1e-8

    def test_hermiticity(self):
        d = FieldDirection(1.1, 0.4)
        a_th, a_ph = connection_numeric_matrices(d, "north", h=1e-5)
        for a in (a_th, a_ph):
            assert np.abs(a - a.conj().T).max() < 1e-9

    def test_outer_doublet_connection_diagonal(self, rng):
        for _ in range(10):
            d = FieldDirection(rng.uniform(0.1, math.pi - 0.1), rng.uniform(0, 6.0))
            a_th, a_ph = connection_numeric_matrices(d, "north", h=1e-5, block="threehalf")
            for a in (a_th, a_ph):
                assert abs(a[0, 1]) < 1e-9 and abs(a[1, 0]) < 1e-9

    def test_h_squared_convergence_rate(self):
        # plain central differences (no Richardson) must converge at h^2
        d = FieldDirection(0.9, 2.1)
        ref = connection_closed_form(d, "north")

        def error(h):
            num = connection_numeric(d, "north", h=h, richardson=False)
            return max(
                np.abs(num.a_theta.v - ref.a_theta.v).max(),
                np.abs(num.a_phi.v - ref.a_phi.v).max(),
            )

        hs = np.array([1e-3, 1e-4, 1e-5])
        errs = np.array([error(h) for h in hs])
        slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
        assert abs(slope - 2.0) < 0.1

    def test_step_validation(self):
        with pytest.raises(DomainError):
            connection_numeric(FieldDirection(1.0, 0.0), "north", h=1e-2)


class TestGaugeTransform:
    def test_rho1_north_to_south(self, rng):
        for _ in range(100):
            d = FieldDirection(rng.uniform(0.05, math.pi - 0.05), rng.uniform(0, 6.3))
            got = gauge_transform(connection_closed_form(d, "north"), "rho1")
            ref = connection_closed_form(d, "south")
            assert np.abs(got.a_theta.v - ref.a_theta.v).max() < 1e-10
            assert np.abs(got.a_phi.v - ref.a_phi.v).max() < 1e-10
            assert got.gauge == "south"

    def test_rho2_north_to_equator(self, rng):
        for _ in range(100):
            d = FieldDirection(rng.uniform(0.05, math.pi - 0.05), rng.uniform(0, 6.3))
            got = gauge_transform(connection_closed_form(d, "north"), "rho2")
            ref = connection_closed_form(d, "equator")
            assert np.abs(got.a_theta.v - ref.a_theta.v).max() < 1e-10
            assert np.abs(got.a_phi.v - ref.a_phi.v).max() < 1e-10

    def test_rho2_inverse_round_trip(self):
        d = FieldDirection(0.8, 1.9)
        a_n = connection_closed_form(d, "north")
        back = gauge_transform(gauge_transform(a_n, "rho2"), "rho2", inverse=True)
        assert np.abs(back.a_theta.v - a_n.a_theta.v).max() < 1e-12
        assert np.abs(back.a_phi.v - a_n.a_phi.v).max() < 1e-12
        assert back.gauge == "north"

    def test_mismatched_pairing_rejected(self):
        d = FieldDirection(0.8, 1.9)
        a_e = connection_closed_form(d, "equator")
        with pytest.raises(GaugeError):
            gauge_transform(a_e, "rho1")
