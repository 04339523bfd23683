import numpy as np
import pytest

from liouville_lab.liouville import (
    CylTestFunction,
    GibbsInteractionFamily,
    construct_theta,
)
from liouville_lab.measures import Nonlinearity, gibbs_reweight, sample_gaussian
from liouville_lab.projection import (
    check_mollify_bound,
    mollify,
    project_vector_field,
    projected_liouville_residual,
    spectral_projection_coords,
)
from liouville_lab.spectral import build_model, weak_star_norm

D1 = build_model(1, 8, 0.0, "laplacian_plus_one")


def planar_gaussian(n, seed):
    rng = np.random.Generator(np.random.Philox(key=seed))
    return rng.standard_normal((n, 2))


def rotation_field(x):
    return np.stack([x[:, 1], -x[:, 0]], axis=1)


class TestNadarayaWatson:
    def test_rotation_field_conditional_mean_vanishes(self):
        x = planar_gaussian(40_000, 1)
        v = rotation_field(x)
        queries = np.array([[-1.0], [0.0], [0.7], [1.5]])
        res = project_vector_field(x[:, :1], v[:, :1], np.ones(len(x)), queries, bandwidth=0.25)
        # v^1(q) = E[y | x=q] = 0; kernel SE ~ 1/sqrt(ess)
        for val, ess in zip(res.values[:, 0], res.ess_per_query):
            assert abs(val) <= 3.0 / np.sqrt(ess)

    def test_cylindrical_field_recovered(self):
        x = planar_gaussian(40_000, 2)
        v = np.stack([np.sin(x[:, 0]), np.zeros(len(x))], axis=1)  # depends on x only
        h = 0.15
        queries = np.array([[q, 0.0] for q in (-1.0, -0.3, 0.5, 1.2)])
        res = project_vector_field(x, v, np.ones(len(x)), queries, bandwidth=h)
        for q, val, ess in zip(queries[:, 0], res.values[:, 0], res.ess_per_query):
            # kernel bias h^2 (f''/2 + f' * Gaussian score) plus local noise
            tol = h * h * (0.5 + abs(q)) + 4.0 * h / np.sqrt(ess)
            assert val == pytest.approx(np.sin(q), abs=tol)

    def test_consistency_under_refinement(self):
        errs = []
        for n, h in ((10_000, 0.3), (40_000, 0.15)):
            x = planar_gaussian(n, 3)
            v = np.stack([x[:, 0] ** 2, x[:, 1]], axis=1)
            queries = np.array([[0.0, 0.0], [0.5, -0.5]])
            res = project_vector_field(x, v, np.ones(n), queries, bandwidth=h)
            want = np.array([[q[0] ** 2, q[1]] for q in queries])
            errs.append(np.max(np.abs(res.values - want)))
        assert errs[1] < errs[0]

    def test_unsupported_query_flagged(self):
        x = planar_gaussian(1000, 4)
        v = rotation_field(x)
        res = project_vector_field(x, v, np.ones(len(x)), np.array([[40.0, 40.0]]), 0.2)
        assert res.unsupported[0]

    def test_contraction_bound_weak_star(self):
        n_modes = 4
        nl = Nonlinearity(D1, "hartree")
        base, _ = gibbs_reweight(sample_gaussian(D1, 20_000, seed=5), nl)
        fam = GibbsInteractionFamily(base, nl)
        e0 = fam.ensemble(0.3)
        w = e0.normalized_weights
        y = spectral_projection_coords(D1, e0.coeffs, n_modes)
        vfull = fam.vfield(0.3, e0.coeffs)
        v = spectral_projection_coords(D1, vfull, n_modes)
        res = project_vector_field(y, v, w, y[::37], bandwidth=0.3)
        pow2 = np.ldexp(1.0, -np.arange(1, n_modes + 1))
        lhs_vals = np.sum(pow2 * np.abs(res.values), axis=1)
        qw = w[::37] / w[::37].sum()
        lhs = np.sum(qw * lhs_vals)
        ws_norms = np.array([weak_star_norm(vc, D1) for vc in vfull[:4000]])
        rhs = float(np.mean(ws_norms))
        se = 3.0 * (np.std(lhs_vals) / np.sqrt(len(lhs_vals)) + np.std(ws_norms) / 63.0)
        assert lhs <= rhs + se


class TestProjectedResidual:
    def _family(self, kind, count, seed):
        nl = Nonlinearity(D1, kind)
        base, _ = gibbs_reweight(sample_gaussian(D1, count, seed), nl)
        return GibbsInteractionFamily(base, nl)

    def test_stationary_linear_flow(self):
        fam = self._family("none", 20_000, seed=11)
        F = CylTestFunction(D1, [1, 2], "gauss_bump", a=[0.8, 0.9], c=[0.3, -0.2])
        r = projected_liouville_residual(fam, 4, F, 0.5, 1e-2, bandwidth=0.3)
        assert abs(r["z"]) <= 3.0

    def test_gibbs_hartree_with_bandwidth_sweep(self):
        fam = self._family("hartree", 40_000, seed=12)
        F = CylTestFunction(D1, [1, 3], "gauss_bump", a=[0.7, 1.0], c=[0.2, 0.4])
        zs, biases = [], []
        for h in (0.6, 0.3, 0.15):
            r = projected_liouville_residual(fam, 4, F, 0.5, 1e-2, bandwidth=h)
            zs.append(abs(r["z"]))
            biases.append(abs(r["residual"]))
        assert zs[-1] <= 3.0
        assert biases[-1] <= biases[0] + 1e-3  # kernel bias shrinks with h

    def test_corrupted_regression_detected(self):
        # the moving free-transport family has an O(1) projected RHS, so a
        # sign-flipped regression stands out
        from liouville_lab.liouville import FreeTransportFamily
        from liouville_lab.measures import Ensemble

        ens = sample_gaussian(D1, 30_000, seed=13)
        tilt = CylTestFunction(D1, [1, 2], "sine", a=[1.2, 1.2], components=["re", "im"])
        w = np.exp(-tilt(ens.coeffs))
        fam = FreeTransportFamily(Ensemble(D1, ens.coeffs, w, 13))
        F = CylTestFunction(D1, [1, 2], "sine", a=[1.0, 0.8])
        r_true = projected_liouville_residual(fam, 4, F, 0.4, 1e-2, bandwidth=0.25)
        r_bad = projected_liouville_residual(fam, 4, F, 0.4, 1e-2, bandwidth=0.25, corrupt=True)
        assert abs(r_bad["z"]) > 5.0
        assert abs(r_bad["z"]) > 3 * abs(r_true["z"])

    def test_rejects_f_beyond_rank(self):
        fam = self._family("none", 1000, seed=14)
        F = CylTestFunction(D1, [5], "sine", a=[1.0])
        with pytest.raises(ValueError):
            projected_liouville_residual(fam, 4, F, 0.0, 1e-2, bandwidth=0.3)


class TestMollify:
    def test_constant_field_exact(self):
        x = planar_gaussian(2000, 21)
        v = np.tile([1.3, -0.7], (len(x), 1))
        out = mollify(x, v, np.ones(len(x)), 0.4, np.array([[0.0, 0.0], [1.0, -1.0]]))
        np.testing.assert_allclose(out["field"], [[1.3, -0.7], [1.3, -0.7]], rtol=1e-12)

    def test_point_mass(self):
        x = np.array([[0.0, 0.0]])
        v = np.array([[2.0, 5.0]])
        eps = 0.3
        q = np.array([[0.2, -0.1], [1.0, 1.0]])
        out = mollify(x, v, np.ones(1), eps, q)
        rho = (2 * np.pi * eps**2) ** -1 * np.exp(-0.5 * np.sum(q**2, axis=1) / eps**2)
        np.testing.assert_allclose(out["density"], rho, rtol=1e-12)
        np.testing.assert_allclose(out["field"], [[2.0, 5.0], [2.0, 5.0]], rtol=1e-12)

    def test_lipschitz_gain_for_sign_field(self):
        rng = np.random.Generator(np.random.Philox(key=22))
        x = rng.standard_normal((20_000, 1))
        v = np.sign(x)
        slopes = []
        for eps in (0.5, 0.25, 0.125):
            q = np.array([[-0.01], [0.01]])
            out = mollify(x, v, np.ones(len(x)), eps, q)
            slopes.append((out["field"][1, 0] - out["field"][0, 0]) / 0.02)
        # mollified field is smooth with slope at 0 growing like C/eps
        for eps, s in zip((0.5, 0.25, 0.125), slopes):
            assert 0 < s <= 1.2 / eps
        assert slopes[2] > slopes[0]

    def test_mass_and_bound_rotation_example(self):
        x = planar_gaussian(4000, 23)
        v = rotation_field(x)
        res = check_mollify_bound(x, v, np.ones(len(x)), eps=0.3)
        assert res["slack"] >= -1e-3
        assert res["mass"] == pytest.approx(1.0, abs=1e-3)

    def test_equality_for_constant_speed(self):
        x = planar_gaussian(3000, 24)
        v = np.tile([0.6, 0.8], (len(x), 1))  # speed 1 everywhere
        res = check_mollify_bound(x, v, np.ones(len(x)), eps=0.4)
        assert res["lhs"] == pytest.approx(res["rhs"], abs=2e-3)

    def test_eps_sweep_approaches_from_below(self):
        x = planar_gaussian(4000, 25)
        v = rotation_field(x)
        gaps = []
        for eps in (0.6, 0.3, 0.15):
            res = check_mollify_bound(x, v, np.ones(len(x)), eps=eps)
            assert res["slack"] >= -1e-3
            gaps.append(res["slack"])
        assert gaps[2] < gaps[0]

    def test_jensen_contraction_with_theta(self):
        x = planar_gaussian(3000, 26)
        v = rotation_field(x)
        speeds = np.linalg.norm(v, axis=1)
        th = construct_theta(speeds, np.full(len(x), 1.0 / len(x)))
        res = check_mollify_bound(x, v, np.ones(len(x)), eps=0.3, theta=th)
        assert res["theta_slack"] >= -1e-3
