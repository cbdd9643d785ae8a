import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bsmimo import errors, network
from bsmimo.network import (
    ImpedanceMatrix3,
    LoadTermination,
    ScatteringMatrix3,
    amend_with_losses,
    input_reflection,
    s_to_z,
    z_to_s,
)

from conftest import random_passive_s


class TestConversions:
    def test_matched_gives_z0_identity(self):
        z = s_to_z(ScatteringMatrix3(np.zeros((3, 3))))
        np.testing.assert_allclose(z.entries, 50 * np.eye(3))

    def test_near_open_circuit(self):
        eps = 1e-4
        z = s_to_z(ScatteringMatrix3(np.diag([1 - eps, 0.0, 0.0])))
        # (1 + s)/(1 - s) = (2 - eps)/eps
        assert z.entries[0, 0].real == pytest.approx(50 * (2 - eps) / eps, rel=1e-9)
        assert z.entries[1, 1] == pytest.approx(50)

    def test_printed_matrix_against_column_solve(self, printed_s):
        s = printed_s.entries
        eye = np.eye(3)
        x = np.column_stack([np.linalg.solve(eye - s, (eye + s)[:, k]) for k in range(3)])
        # (I+S)(I-S)^-1 == (I-S)^-1(I+S) since both are functions of S
        np.testing.assert_allclose(s_to_z(printed_s).entries, 50 * x, rtol=1e-12)

    def test_z0_identity_gives_matched(self):
        s = z_to_s(ImpedanceMatrix3(50 * np.eye(3)))
        np.testing.assert_allclose(s.entries, 0, atol=1e-15)

    def test_short_circuit(self):
        s = z_to_s(ImpedanceMatrix3(np.zeros((3, 3))))
        np.testing.assert_allclose(s.entries, -np.eye(3), atol=1e-15)

    def test_singular_conversion(self):
        with pytest.raises(errors.SingularConversion):
            s_to_z(ScatteringMatrix3(np.eye(3)))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        s = ScatteringMatrix3(random_passive_s(np.random.default_rng(seed)))
        back = z_to_s(s_to_z(s))
        assert np.linalg.norm(back.entries - s.entries) <= 1e-10 * max(1.0, np.linalg.norm(s.entries))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_round_trip_from_impedance(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((3, 3))
        z = ImpedanceMatrix3(a @ a.T * 30 + 20 * np.eye(3) + 1j * (a + a.T) * 40)
        back = s_to_z(z_to_s(z))
        np.testing.assert_allclose(back.entries, z.entries, rtol=1e-10, atol=1e-9)


class TestLosses:
    def test_zero_loss_is_identity(self, printed_s):
        np.testing.assert_allclose(amend_with_losses(printed_s, 0, 0).entries, printed_s.entries, atol=1e-14)

    def test_open_circuit_limit(self, printed_s):
        s = amend_with_losses(printed_s, 1e6, 1e6).entries
        assert abs(s[1, 1] - 1) < 1e-3 and abs(s[2, 2] - 1) < 1e-3

    def test_amendment_equals_lossy_termination(self, printed_s):
        # S' loaded with jX behaves as S loaded with r + jX
        sp = amend_with_losses(printed_s, 2.0, 2.0)
        g1 = input_reflection(sp, LoadTermination(-200.0, -66.0))
        g2 = input_reflection(printed_s, LoadTermination(-200.0, -66.0, 2.0, 2.0))
        assert abs(g1 - g2) < 1e-12

    def test_negative_loss_rejected(self, printed_s):
        with pytest.raises(ValueError):
            amend_with_losses(printed_s, -1, 0)


class TestInputReflection:
    @pytest.mark.parametrize("x1,x2", [(-200, -66), (10, 300), (0, 0)])
    def test_isolated_ports(self, x1, x2):
        assert input_reflection(ScatteringMatrix3(np.zeros((3, 3))), LoadTermination(x1, x2)) == 0

    def test_decoupled_active_port(self, rng):
        s = random_passive_s(rng)
        s[0, 1:] = 0
        s[1:, 0] = 0
        g = input_reflection(ScatteringMatrix3(s), LoadTermination(-30.0, 70.0))
        assert g == pytest.approx(s[0, 0])

    def test_printed_state1_return_loss(self, printed_s):
        g = input_reflection(printed_s, LoadTermination(-200.0, -66.0))
        assert abs(20 * np.log10(abs(g)) - (-19.6)) <= 1.5

    def test_singular_reduction(self):
        # S_pp = I and open loads make I - S_pp Gamma_L vanish
        s = np.zeros((3, 3), dtype=complex)
        s[1, 1] = s[2, 2] = 1.0
        with pytest.raises(errors.SingularReduction):
            input_reflection(ScatteringMatrix3(s), LoadTermination(1e20, 1e20))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-500, 500), st.floats(-500, 500))
    def test_passivity(self, seed, x1, x2):
        s = ScatteringMatrix3(random_passive_s(np.random.default_rng(seed), scale=0.95))
        assert abs(input_reflection(s, LoadTermination(x1, x2))) <= 1 + 1e-12


class TestTypesAndFiles:
    def test_symmetry_predicate(self, printed_s):
        assert printed_s.is_symmetric_radiator(1e-12)
        s = printed_s.entries.copy()
        s[0, 1] += 0.1
        assert not ScatteringMatrix3(s).is_symmetric_radiator()

    @pytest.mark.parametrize("bad", [np.zeros((2, 2)), np.full((3, 3), np.nan)])
    def test_bad_entries(self, bad):
        with pytest.raises(ValueError):
            ScatteringMatrix3(bad)

    def test_bad_z0(self):
        with pytest.raises(ValueError):
            ScatteringMatrix3(np.zeros((3, 3)), z0=0)

    def test_bad_load(self):
        with pytest.raises(ValueError):
            LoadTermination(1.0, 2.0, r1=-1.0)

    def test_printed_values(self, printed_s):
        assert printed_s[0, 0] == -0.23 - 0.32j
        assert printed_s[1, 2] == -0.19 - 0.11j
        assert printed_s.z0 == 50

    def test_file_round_trip(self, tmp_path, printed_s):
        p = tmp_path / "s.json"
        network.save_smatrix(printed_s, p)
        back = network.load_smatrix(p)
        assert np.array_equal(back.entries, printed_s.entries) and back.z0 == printed_s.z0

    @pytest.mark.parametrize("doc", ["", "{}", json.dumps({"s": [[1, 2]]})])
    def test_bad_file(self, tmp_path, doc):
        p = tmp_path / "bad.json"
        p.write_text(doc)
        with pytest.raises(errors.FileFormatError):
            network.load_smatrix(p)
