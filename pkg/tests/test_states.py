"""State families, tensor algebra, partial trace/transpose, validation, JSON I/O."""

import json

import numpy as np
import pytest

import distilkit as dk
from distilkit import linalg
from distilkit.errors import CapacityError, ParameterError, SamplingError

from conftest import partial_trace_reference, pt_reference, random_state


def spec(family, d=2, **params):
    return dk.StateFamilySpec(dk.Family(family), d=d, params=params)


class TestFamilies:
    def test_max_entangled_overlap(self):
        phi = dk.construct_state(spec("max_entangled", d=2))
        assert abs(np.trace(phi.data @ dk.phi_projector(2)).real - 1.0) < 1e-12

    def test_werner_p1_is_singlet_projector(self):
        w = dk.construct_state(spec("werner", d=2, p=1.0))
        psi = np.zeros(4, dtype=complex)
        psi[1], psi[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        assert np.max(np.abs(w.data - np.outer(psi, psi.conj()))) < 1e-12
        assert abs(np.trace(w.data @ w.data).real - 1.0) < 1e-12  # pure
        assert np.linalg.eigvalsh(pt_reference(w.data, 2, 2))[0] < -0.4  # entangled

    def test_werner_075_is_npt(self):
        # oracle: eigendecomposition of the explicitly-built 4x4 partial transpose
        w = dk.construct_state(spec("werner", d=2, p=0.75))
        lo = np.linalg.eigvalsh(pt_reference(w.data, 2, 2))[0]
        assert lo < -1e-6
        assert abs(lo - (1 - 2 * 0.75) / 2) < 1e-12

    def test_isotropic_endpoints(self):
        iso = dk.isotropic_state(3, 1.0)
        assert np.max(np.abs(iso.data - dk.phi_projector(3))) < 1e-12
        iso0 = dk.isotropic_state(3, 0.0)
        assert np.max(np.abs(iso0.data - np.eye(9) / 9)) < 1e-12

    def test_product_pure_default_is_00(self):
        s = dk.construct_state(spec("product_pure", d=2))
        expect = np.zeros((4, 4))
        expect[0, 0] = 1.0
        assert np.max(np.abs(s.data - expect)) < 1e-15

    def test_random_families_require_seed(self):
        with pytest.raises(ParameterError):
            dk.construct_state(spec("random_mixed", d=2))
        with pytest.raises(ParameterError):
            dk.construct_state(spec("random_ppt", d=2))

    def test_random_mixed_is_valid(self):
        s = dk.construct_state(spec("random_mixed", d=3), seed=5)
        assert dk.validate_state(s.data, 3, 3).ok

    @pytest.mark.parametrize("d", [2, 3])
    def test_random_ppt_passes_is_ppt(self, d):
        for seed in range(3):
            s = dk.construct_state(spec("random_ppt", d=d), seed=seed)
            flag, lo = dk.is_ppt(s)
            assert flag and lo >= -1e-9

    def test_random_ppt_attempt_cap(self):
        with pytest.raises(SamplingError):
            dk.construct_state(spec("random_ppt", d=3, attempt_cap=1), seed=0)

    def test_bad_parameters(self):
        with pytest.raises(ParameterError):
            dk.construct_state(spec("werner", d=2, p=1.5))
        with pytest.raises(ParameterError):
            dk.construct_state(spec("isotropic", d=2, p=-0.1))


class TestTensor:
    def test_trace_one(self, rng):
        rho = random_state(rng, 2, 2)
        out = dk.tensor(rho, rho)
        assert out.dim == 16 and out.pairs == 2
        assert abs(np.trace(out.data).real - 1.0) < 1e-12

    def test_product_of_ground_states(self):
        s = dk.construct_state(spec("product_pure", d=2))
        out = dk.tensor(s, s)
        expect = np.zeros((16, 16))
        expect[0, 0] = 1.0
        assert np.max(np.abs(out.data - expect)) < 1e-15

    def test_spectrum_product_law(self):
        # oracle: eigenvalues of a tensor product are all pairwise products
        w = dk.werner_state(2, 0.5)
        out = dk.tensor(w, w)
        single = np.linalg.eigvalsh(w.data)
        expect = np.sort(np.outer(single, single).reshape(-1))
        got = np.sort(np.linalg.eigvalsh(out.data))
        assert np.max(np.abs(expect - got)) < 1e-12

    def test_capacity_error(self):
        w = dk.werner_state(2, 0.5)
        with pytest.raises(CapacityError):
            dk.tensor_power(w, 7)  # 4^7 > 4096


class TestPartialTrace:
    def test_iid_marginal(self, rng):
        rho = random_state(rng, 2, 2)
        out = dk.partial_trace(dk.tensor(rho, rho), {1})
        assert np.max(np.abs(out.data - rho.data)) < 1e-12

    def test_identity_case(self):
        phi = dk.construct_state(spec("max_entangled", d=2))
        out = dk.partial_trace(phi, {1})
        assert np.max(np.abs(out.data - phi.data)) < 1e-15

    def test_symmetric_state_marginals_match_reference(self, rng):
        two = dk.symmetrize(dk.tensor(random_state(rng, 2, 2), random_state(rng, 2, 2)))
        m1 = dk.partial_trace(two, {1}).data
        m2 = dk.partial_trace(two, {2}).data
        ref1 = partial_trace_reference(two.data, 4, 0)
        ref2 = partial_trace_reference(two.data, 4, 1)
        assert np.max(np.abs(m1 - ref1)) < 1e-12
        assert np.max(np.abs(m2 - ref2)) < 1e-12
        assert np.max(np.abs(m1 - m2)) < 1e-12

    def test_trace_one_and_errors(self, rng):
        three = dk.tensor_power(random_state(rng, 2, 2), 3)
        for keep in ({1}, {2}, {3}, {1, 3}):
            out = dk.partial_trace(three, keep)
            assert abs(np.trace(out.data).real - 1.0) < 1e-12
        with pytest.raises(ParameterError):
            dk.partial_trace(three, set())
        with pytest.raises(ParameterError):
            dk.partial_trace(three, {4})


class TestPartialTranspose:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_phi_d_gives_swap_over_d(self, d):
        phi = dk.construct_state(spec("max_entangled", d=d))
        pt = dk.partial_transpose(phi)
        assert np.max(np.abs(pt - dk.swap_operator(d) / d)) < 1e-12

    def test_product_state_stays_positive(self, rng):
        a = linalg.random_density(rng, 2)
        b = linalg.random_density(rng, 3)
        s = dk.BipartiteState(np.kron(a, b), 2, 3)
        assert np.linalg.eigvalsh(dk.partial_transpose(s))[0] > -1e-12

    def test_werner_sign_change_at_half(self):
        # oracle: PT spectrum in closed form; a = bulk eigenvalue (multiplicity
        # d^2 - 1), a + b d on the maximally entangled direction, a + b d = (1-2p)/d
        for d in (2, 3):
            for p in np.linspace(0, 1, 11):
                w = dk.werner_state(d, float(p))
                lo = np.linalg.eigvalsh(dk.partial_transpose(w))[0]
                a = p / (d * d - d) + (1 - p) / (d * d + d)
                expect = min(a, (1 - 2 * p) / d)
                assert abs(lo - expect) < 1e-12
                assert (lo < -1e-12) == (p > 0.5)

    def test_involution_is_exact(self, rng):
        s = random_state(rng, 2, 3, pairs=1)
        pt = dk.partial_transpose(s)
        back = dk.partial_transpose(dk.BipartiteState(pt, 2, 3))
        assert np.array_equal(back, s.data)

    def test_matches_reference_on_multi_pair(self, rng):
        s = random_state(rng, 2, 2, pairs=2)
        pt = dk.partial_transpose(s)
        # reference: transpose B of each pair = iterate single-pair reference on indices
        full = s.data.reshape(2, 2, 2, 2, 2, 2, 2, 2)
        ref = full.transpose(0, 5, 2, 7, 4, 1, 6, 3).reshape(16, 16)
        assert np.max(np.abs(pt - ref)) < 1e-15


class TestTraceDistance:
    def test_zero_for_equal(self, rng):
        s = random_state(rng, 2, 2)
        assert dk.trace_distance(s, s) == 0

    def test_orthogonal_pure_states(self):
        a = dk.construct_state(spec("product_pure", d=2, i=0, j=0))
        b = dk.construct_state(spec("product_pure", d=2, i=1, j=1))
        assert abs(dk.trace_distance(a, b) - 1.0) < 1e-12

    def test_werner_closed_form(self):
        # difference is (p1-p2)(anti - sym): trace distance equals |p1 - p2|
        a, b = dk.werner_state(2, 0.3), dk.werner_state(2, 0.7)
        assert abs(dk.trace_distance(a, b) - 0.4) < 1e-12

    def test_triangle_inequality(self, rng):
        for _ in range(10):
            x, y, z = (random_state(rng, 2, 2) for _ in range(3))
            assert dk.trace_distance(x, z) <= dk.trace_distance(x, y) + dk.trace_distance(y, z) + 1e-9

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ParameterError):
            dk.trace_distance(random_state(rng, 2, 2), random_state(rng, 3, 3))


class TestValidation:
    def test_accepts_werner(self):
        w = dk.werner_state(2, 0.4)
        report = dk.validate_state(w.data, 2, 2)
        assert report.ok and report.state is not None

    def test_flags_negativity(self):
        bad = np.diag([0.6, 0.5, -0.1, 0.0]).astype(complex)
        report = dk.validate_state(bad, 2, 2)
        assert not report.ok
        assert any(v.invariant == "positivity" for v in report.violations)

    def test_tolerance_boundary(self):
        w = dk.werner_state(2, 0.4)
        report = dk.validate_state(w.data * (1 + 5e-10), 2, 2)
        assert report.ok

    def test_flags_hermiticity(self, rng):
        w = dk.werner_state(2, 0.4).data.copy()
        w[0, 1] += 1e-3
        report = dk.validate_state(w, 2, 2)
        assert not report.ok
        assert any(v.invariant == "hermiticity" for v in report.violations)


class TestJson:
    def test_roundtrip(self, tmp_path, rng):
        s = random_state(rng, 2, 3)
        path = tmp_path / "s.json"
        dk.save_state(s, path)
        back = dk.load_state(path)
        assert back.dimA == 2 and back.dimB == 3 and back.pairs == 1
        assert np.max(np.abs(back.data - s.data)) < 1e-15

    def test_loader_verifies_invariants(self, tmp_path):
        payload = dk.states.state_to_dict(dk.werner_state(2, 0.5))
        payload["matrix"][0] = [5.0, 0.0]  # breaks trace and positivity
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ParameterError):
            dk.load_state(path)
