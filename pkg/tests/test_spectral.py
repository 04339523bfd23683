import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liouville_lab.spectral import (
    Field,
    OperatorKind,
    apply_semigroup,
    basis_field,
    build_model,
    field_from_json,
    field_to_json,
    model_hash,
    path_distance,
    project,
    sobolev_norm,
    weak_star_norm,
)


def random_field(model, seed=0, scale=1.0):
    rng = np.random.default_rng(seed)
    c = scale * (rng.standard_normal(model.size) + 1j * rng.standard_normal(model.size))
    return Field(model, c)


class TestBuildModel:
    def test_eigenvalue_plus_one_d2(self):
        m = build_model(2, 1, 0.2, "laplacian_plus_one")
        j = m.mode_index((1, 0))
        assert m.eigenvalues[j] == 2.0

    def test_eigenvalue_plus_one_d1(self):
        m = build_model(1, 4, 0.0, "laplacian_plus_one")
        assert m.eigenvalues[m.mode_index((3,))] == 10.0

    def test_mean_zero_mode_count(self):
        m = build_model(2, 1, 0.5, "laplacian_mean_zero")
        assert m.size == 8

    def test_counts(self):
        assert build_model(1, 4, 0.0, "laplacian_plus_one").size == 9
        assert build_model(2, 3, 0.1, "laplacian_plus_one").size == 49

    def test_rejects_bad_dimension(self):
        with pytest.raises(ValueError):
            build_model(3, 2, 1.0, "laplacian_plus_one")

    def test_rejects_subcritical_s(self):
        with pytest.raises(ValueError, match="Gaussian measure undefined"):
            build_model(2, 4, 0.0, "laplacian_plus_one")

    def test_deterministic_enumeration(self):
        a = build_model(2, 3, 0.5, "laplacian_plus_one")
        b = build_model(2, 3, 0.5, "laplacian_plus_one")
        assert np.array_equal(a.modes, b.modes)
        assert a.eigenvalues[0] == 1.0  # k = 0 first

    def test_all_eigenvalues_at_least_one(self):
        for kind in OperatorKind:
            m = build_model(2, 2, 0.5, kind)
            assert np.all(m.eigenvalues >= 1.0)

    def test_eigenvalue_sum_converges_for_valid_s(self):
        # partial sums of lam^{-(s+1)} at N and 2N nearly agree when s > d/2 - 1
        for d, s in ((1, 0.0), (2, 0.4)):
            sN = build_model(d, 8, s, "laplacian_plus_one")
            s2N = build_model(d, 16, s, "laplacian_plus_one")
            t1 = np.sum(sN.eigenvalues ** -(s + 1))
            t2 = np.sum(s2N.eigenvalues ** -(s + 1))
            assert t2 - t1 < 0.25 * t1


class TestNorms:
    def test_single_mode_negative_exponent(self):
        m = build_model(1, 4, 0.0, "laplacian_plus_one")
        c = np.zeros(m.size, dtype=complex)
        c[m.mode_index((1,))] = 1.0  # lam = 2
        assert sobolev_norm(Field(m, c), -1.0) == pytest.approx(2**-0.5, rel=1e-12)

    def test_zero_field(self):
        m = build_model(1, 3, 0.0, "laplacian_plus_one")
        z = Field(m, np.zeros(m.size))
        for r in (-1.0, 0.0, 2.0):
            assert sobolev_norm(z, r) == 0.0

    def test_r_zero_is_euclidean(self):
        m = build_model(1, 5, 0.0, "laplacian_plus_one")
        u = random_field(m, 3)
        assert sobolev_norm(u, 0.0) == pytest.approx(np.linalg.norm(u.coeffs), rel=1e-12)

    def test_parseval_independent_summation(self):
        m = build_model(2, 2, 0.7, "laplacian_plus_one")
        u = random_field(m, 11)
        for r in (-m.sobolev_s, 0.0, 1.3):
            acc = 0.0
            for lam, c in zip(m.eigenvalues, u.coeffs):
                acc += lam**r * abs(c) ** 2
            assert sobolev_norm(u, r) ** 2 == pytest.approx(acc, rel=1e-12)

    def test_weak_star_on_dual_basis(self):
        m = build_model(1, 4, 1.0, "laplacian_plus_one")
        assert weak_star_norm(basis_field(m, 1)) == pytest.approx(0.5, abs=1e-15)
        two = Field(m, basis_field(m, 1).coeffs + basis_field(m, 2).coeffs)
        assert weak_star_norm(two) == pytest.approx(0.75, abs=1e-15)
        assert weak_star_norm(Field(m, np.zeros(m.size))) == 0.0


class TestSemigroup:
    def test_identity_at_zero(self):
        m = build_model(1, 4, 0.0, "laplacian_plus_one")
        u = random_field(m, 5)
        assert np.array_equal(apply_semigroup(u, 0.0).coeffs, u.coeffs)

    def test_group_law(self):
        m = build_model(2, 2, 0.2, "laplacian_plus_one")
        u = random_field(m, 6)
        back = apply_semigroup(apply_semigroup(u, 0.37), -0.37)
        np.testing.assert_allclose(back.coeffs, u.coeffs, rtol=0, atol=1e-14)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(-5, 5, allow_nan=False))
    def test_unitary_in_every_h_r(self, seed, t):
        m = build_model(1, 6, 0.5, "laplacian_plus_one")
        u = random_field(m, seed)
        v = apply_semigroup(u, t)
        for r in (0.0, -m.sobolev_s):
            assert abs(sobolev_norm(v, r) - sobolev_norm(u, r)) <= 1e-10


class TestProjection:
    def test_full_rank_is_identity(self):
        m = build_model(1, 4, 0.3, "laplacian_plus_one")
        u = random_field(m, 7)
        assert np.array_equal(project(u, m.size).coeffs, u.coeffs)

    def test_idempotent(self):
        m = build_model(1, 4, 0.3, "laplacian_plus_one")
        u = random_field(m, 8)
        p = project(u, 3)
        assert np.array_equal(project(p, 3).coeffs, p.coeffs)

    def test_out_of_range(self):
        m = build_model(1, 2, 0.0, "laplacian_plus_one")
        u = random_field(m, 1)
        for bad in (0, m.size + 1):
            with pytest.raises(ValueError):
                project(u, bad)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_weak_star_contraction_exact(self, seed):
        m = build_model(1, 6, 0.8, "laplacian_plus_one")
        u = random_field(m, seed)
        full = weak_star_norm(u)
        for n in range(1, m.size + 1):
            assert weak_star_norm(project(u, n)) <= full

    def test_monotone_decrease_oracle(self):
        # direct evaluation over n = M..1: norms of projections never increase
        m = build_model(1, 8, 0.5, "laplacian_plus_one")
        u = random_field(m, 9)
        vals = [weak_star_norm(project(u, n)) for n in range(m.size, 0, -1)]
        assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))

    def test_projection_converges_weak_star(self):
        m = build_model(1, 8, 0.5, "laplacian_plus_one")
        u = random_field(m, 10)
        errs = [
            weak_star_norm(Field(m, project(u, n).coeffs - u.coeffs))
            for n in range(1, m.size + 1)
        ]
        assert errs[-1] == 0.0
        assert all(a >= b - 1e-15 for a, b in zip(errs, errs[1:]))


class TestPathDistance:
    def _traj(self, m, seed, const=None):
        times = np.linspace(0.0, 3.0, 31)
        if const is not None:
            states = np.tile(const, (len(times), 1))
        else:
            rng = np.random.default_rng(seed)
            states = rng.standard_normal((len(times), m.size)) + 1j * rng.standard_normal(
                (len(times), m.size)
            )
        return times, states

    def test_identical_is_zero(self):
        m = build_model(1, 3, 0.0, "laplacian_plus_one")
        t, a = self._traj(m, 0)
        assert path_distance(t, a, a, m) == 0.0

    def test_constant_offset_geometric_sum(self):
        m = build_model(1, 3, 0.0, "laplacian_plus_one")
        t, zero = self._traj(m, 0, const=np.zeros(m.size))
        c_field = np.zeros(m.size, dtype=complex)
        c_field[0] = 2.0  # lam = 1, H^{-s} norm = 2 at s = 0
        _, const = self._traj(m, 0, const=c_field)
        c = 2.0
        expect = c / (1 + c) * (1 - 2.0 ** -math.ceil(3.0))
        assert path_distance(t, zero, const, m) == pytest.approx(expect, rel=1e-12)

    def test_metric_axioms_on_random_triples(self):
        m = build_model(1, 3, 0.4, "laplacian_plus_one")
        t, a = self._traj(m, 1)
        _, b = self._traj(m, 2)
        _, c = self._traj(m, 3)
        for metric in ("strong_d0", "weak_d0star"):
            dab = path_distance(t, a, b, m, metric)
            dba = path_distance(t, b, a, m, metric)
            assert dab == pytest.approx(dba, rel=1e-14)
            dac = path_distance(t, a, c, m, metric)
            dcb = path_distance(t, c, b, m, metric)
            assert dab <= dac + dcb + 1e-14

    def test_rejects_mismatched_grids(self):
        m = build_model(1, 3, 0.0, "laplacian_plus_one")
        t, a = self._traj(m, 1)
        with pytest.raises(ValueError):
            path_distance(t[:-1], a[:-1], a, m)


class TestSerialization:
    def test_json_roundtrip(self):
        m = build_model(2, 2, 0.5, "laplacian_plus_one")
        u = random_field(m, 12)
        v = field_from_json(field_to_json(u), m)
        np.testing.assert_array_equal(u.coeffs, v.coeffs)

    def test_hash_distinguishes_models(self):
        a = build_model(1, 4, 0.0, "laplacian_plus_one")
        b = build_model(1, 4, 0.5, "laplacian_plus_one")
        c = build_model(1, 4, 0.0, "laplacian_mean_zero")
        assert len({model_hash(a), model_hash(b), model_hash(c)}) == 3

    def test_model_mismatch_rejected(self):
        a = build_model(1, 4, 0.0, "laplacian_plus_one")
        b = build_model(1, 4, 0.5, "laplacian_plus_one")
        u = random_field(a, 1)
        with pytest.raises(ValueError):
            field_from_json(field_to_json(u), b)
