import numpy as np
import pytest

from qbd2d import kernels
from qbd2d.errors import ConvergenceError, DomainError, PreconditionError
from qbd2d.qbd_core import (
    factorization_residual,
    qbd_stationary,
    solve_axis1,
    solve_axis2,
    stationary_vector,
)
from qbd2d.spectral import branch_roots_1, branch_roots_2, extreme_points, perron_root

from conftest import ASYMMETRIC, limited

IDENTITIES = ("G_equation", "R_equation", "G_from_N", "R_from_N", "N_inverse")


def z_grid(model, n=11):
    ep = extreme_points(model)
    return ep, np.linspace(ep.z1_min, ep.z1_max, n)


class TestAxisKernels:
    @pytest.mark.parametrize("K", [1, 3])
    def test_g_stochastic_at_one(self, K):
        G = solve_axis1(limited(K), 1.0).G
        assert np.max(np.abs(G.sum(axis=1) - 1)) <= 1e-10

    @pytest.mark.parametrize("K", [1, 3])
    def test_nonnegative(self, K):
        m = limited(K)
        _, zs = z_grid(m)
        for z in zs:
            k = solve_axis1(m, z)
            assert (k.G >= 0).all() and (k.R >= -1e-15).all()

    @pytest.mark.parametrize("K", [1, 3])
    def test_identities_on_grid(self, K):
        m = limited(K)
        _, zs = z_grid(m)
        for n, z in enumerate(zs):
            k = solve_axis1(m, z)
            bound = 1e-8 if n in (0, len(zs) - 1) else 1e-11
            for name in IDENTITIES:
                assert k.residuals[name] <= bound, (z, name, k.residuals[name])

    @pytest.mark.parametrize("K", [1, 3])
    def test_spectral_radii_match_branches(self, K):
        m = limited(K)
        _, zs = z_grid(m)
        for z in zs[1:-1]:
            k = solve_axis1(m, z)
            r = branch_roots_2(m, z)
            assert perron_root(k.G) == pytest.approx(r.lower, abs=1e-8)
            assert 1 / perron_root(k.R) == pytest.approx(r.upper, abs=1e-8)

    def test_axis2_radii(self, k3):
        for w in (1.0, 1.5, 2.5):
            k = solve_axis2(k3, w)
            r = branch_roots_1(k3, w)
            assert perron_root(k.G) == pytest.approx(r.lower, abs=1e-8)
            assert k.axis == 2

    @pytest.mark.parametrize("K", [1, 2, 4, 6])
    def test_axis2_g_has_one_nonzero_column(self, K):
        m = limited(K)
        ep = extreme_points(m)
        for t in (0.1, 0.5, 0.9):
            w = ep.z2_min + t * (ep.z2_max - ep.z2_min)
            G = solve_axis2(m, w).G
            assert np.max(np.abs(G[:, :-1])) <= 1e-12
            assert G[:, -1].max() > 0

    def test_cyclic_reduction_matches_natural(self, k3):
        for z in (0.8, 1.0, 1.4):
            cr = solve_axis1(k3, z)
            nat = solve_axis1(k3, z, method="natural")
            assert np.max(np.abs(cr.G - nat.G)) <= 1e-10
            assert nat.method == "natural"

    def test_natural_iterates_monotone_and_bounded(self, k3):
        z = 1.3
        limit = solve_axis1(k3, z).G
        down, local, up = k3.a_col_z(-1, z), k3.a_col_z(0, z), k3.a_col_z(1, z)
        prev = np.zeros_like(limit)
        for n in (1, 2, 5, 20, 100, 400):
            X, its, status = kernels.natural_iteration(down, local, up, 0.0, n)
            assert status == 1 and its == n
            assert (X >= prev - 1e-15).all()
            assert (X <= limit + 1e-12).all()
            prev = X

    def test_tangent_point(self, k3):
        ep = extreme_points(k3)
        k = solve_axis1(k3, ep.z1_max)
        assert k.max_residual <= 1e-8
        lower = branch_roots_2(k3, ep.z1_max).lower
        assert perron_root(k.G) == pytest.approx(lower, abs=1e-6)

    def test_outside_interval(self, k1):
        z = extreme_points(k1).z1_max * 1.05
        with pytest.raises(DomainError, match="outside the admissible interval"):
            solve_axis1(k1, z)
        with pytest.raises(DomainError, match="outside the admissible interval"):
            solve_axis1(k1, z, method="natural")

    def test_iteration_cap(self, k3):
        with pytest.raises(ConvergenceError) as exc:
            solve_axis1(k3, 1.0, method="natural", max_iter=3)
        assert exc.value.diagnostics["iterations"] == 3

    def test_env_cap(self, k3, monkeypatch):
        monkeypatch.setenv("QBD_MAX_ITER", "4")
        with pytest.raises(ConvergenceError, match="4 iterations"):
            solve_axis1(k3, 1.0, method="natural")

    def test_rejects_bad_method(self, k1):
        with pytest.raises(ValueError):
            solve_axis1(k1, 1.0, method="newton")


class TestFactorization:
    @pytest.mark.parametrize("w", [0.5, 1.0, 2.0])
    def test_at_one(self, k1, w):
        assert factorization_residual(k1, solve_axis1(k1, 1.0), w) <= 1e-9

    def test_origin_is_exact(self, k3):
        assert factorization_residual(k3, solve_axis1(k3, 1.0), 1.0) <= 1e-14

    @pytest.mark.parametrize("K", [1, 3])
    def test_nine_pairs(self, K):
        m = limited(K)
        ep, _ = z_grid(m)
        for t in (0.2, 0.5, 0.8):
            z = ep.z1_min + t * (ep.z1_max - ep.z1_min)
            k = solve_axis1(m, z)
            for w in (0.3, 1.0, 3.0):
                assert factorization_residual(m, k, w) <= 1e-8

    def test_axis2(self, k3):
        k = solve_axis2(k3, 1.2)
        for z in (0.5, 1.0, 2.0):
            assert factorization_residual(k3, k, z) <= 1e-9

    def test_grows_with_perturbation(self, k3):
        k = solve_axis1(k3, 1.1)
        bump = np.ones_like(k.G)
        values = []
        for eps in (1e-8, 1e-6, 1e-4, 1e-2):
            bad = type(k)(**{**k.__dict__, "G": k.G + eps * bump})
            values.append(factorization_residual(k3, bad, 1.7))
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_rejects_nonpositive_w(self, k1):
        with pytest.raises(DomainError):
            factorization_residual(k1, solve_axis1(k1, 1.0), 0.0)


def _face_blocks(model):
    return (model.a1_col_z(0, 1.0), model.a1_col_z(1, 1.0),
            model.a_col(-1), model.a_col(0), model.a_col(1))


def _truncated_face_chain(model, levels):
    """Dense stationary vector of the face-1 level chain cut at ``levels``."""
    b_loc, b_up, dn, loc, up = _face_blocks(model)
    s0 = model.s0
    n = (levels + 1) * s0
    P = np.zeros((n, n))
    P[:s0, :s0] = b_loc
    P[:s0, s0:2 * s0] = b_up
    for k in range(1, levels + 1):
        r = slice(k * s0, (k + 1) * s0)
        P[r, (k - 1) * s0:k * s0] = dn
        P[r, r] = loc
        if k < levels:
            P[r, (k + 1) * s0:(k + 2) * s0] = up
        else:
            P[r, r] += up
    return stationary_vector(P).reshape(levels + 1, s0)


class TestOneDimensionalStationary:
    @pytest.mark.parametrize("K", [1, 3, 6])
    def test_mass_and_radius(self, K):
        st = qbd_stationary(1, limited(K))
        total = st.pi0.sum() + st.tail_sum().sum()
        assert total == pytest.approx(1, abs=1e-10)
        assert st.normalization == pytest.approx(1, abs=1e-10)
        assert perron_root(st.R_star) < 1
        assert (st.pi0 >= 0).all() and (st.pi1 >= -1e-16).all()

    def test_balance_levels(self, k3):
        st = qbd_stationary(1, k3)
        b_loc, b_up, dn, loc, up = _face_blocks(k3)
        pi = [st.level(k) for k in range(5)]
        res = [
            pi[0] @ b_loc + pi[1] @ dn - pi[0],
            pi[0] @ b_up + pi[1] @ loc + pi[2] @ dn - pi[1],
            pi[1] @ up + pi[2] @ loc + pi[3] @ dn - pi[2],
            pi[2] @ up + pi[3] @ loc + pi[4] @ dn - pi[3],
        ]
        assert max(np.max(np.abs(r)) for r in res) <= 1e-9

    def test_against_truncated_chain(self, k3):
        st = qbd_stationary(1, k3)
        dense = _truncated_face_chain(k3, 300)
        for k in range(6):
            assert np.allclose(st.level(k), dense[k], rtol=1e-9, atol=1e-14)

    def test_face_two(self, k1):
        st = qbd_stationary(2, k1)
        assert st.pi0.sum() + st.tail_sum().sum() == pytest.approx(1, abs=1e-10)

    def test_precondition(self):
        # the asymmetric K=1 model has a2 > 0, so its x1-face chain is not recurrent
        with pytest.raises(PreconditionError):
            qbd_stationary(1, limited(1, ASYMMETRIC))

    def test_bad_face(self, k1):
        with pytest.raises(ValueError):
            qbd_stationary(3, k1)
