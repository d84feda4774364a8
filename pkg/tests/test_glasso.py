import numpy as np
import pytest

from conftest import rand_spd
from netsurv.glasso import (GlassoConfig, PrecisionMatrix, glasso_fit, kkt_residual,
                            objective, write_precision)


def fit(S, rho, **kw):
    return glasso_fit(S, GlassoConfig(rho=rho, **kw))


class TestObjective:
    def test_identity(self):
        # theta = I: log det = 0, tr(S I) = tr(S), penalty = rho * p (diagonal ones)
        S = np.array([[2.0, 0.3], [0.3, 1.0]])
        F, R = objective(np.eye(2), S, rho=0.5)
        assert F == pytest.approx(-3.0, abs=1e-14)
        assert R == pytest.approx(1.0, abs=1e-14)

    def test_unpenalized_diagonal_excluded(self):
        theta = np.array([[2.0, -0.5], [-0.5, 3.0]])
        _, R = objective(theta, np.eye(2), rho=0.1, penalize_diagonal=False)
        assert R == pytest.approx(0.1 * 1.0, abs=1e-14)

    def test_non_pd_rejected(self):
        with pytest.raises(ValueError, match="not positive definite"):
            objective(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2), 0.1)


class TestClosedForms:
    def test_p1_penalized(self):
        # scalar problem: d/dtheta (log theta - s theta - rho theta) = 0 -> 1/(s+rho)
        S = np.array([[2.0]])
        prec = fit(S, 0.3)
        assert prec.converged
        assert prec.theta[0, 0] == pytest.approx(1.0 / 2.3, rel=1e-5)

    def test_p1_unpenalized_diagonal(self):
        S = np.array([[2.0]])
        prec = fit(S, 0.3, penalize_diagonal=False)
        assert prec.theta[0, 0] == pytest.approx(0.5, rel=1e-5)

    def test_rho_zero_is_inverse(self, rng):
        S = rand_spd(6, rng)
        prec = fit(S, 0.0)
        np.testing.assert_allclose(prec.theta, np.linalg.inv(S), rtol=1e-10, atol=1e-12)
        assert prec.converged

    def test_rho_zero_singular_rejected(self):
        S = np.ones((3, 3))
        with pytest.raises(ValueError, match="singular"):
            fit(S, 0.0)

    def test_large_rho_diagonal_solution(self, rng):
        # when rho >= max |S_ij| off-diagonal, theta = diag(1/(s_ii+rho)) satisfies KKT
        for _ in range(5):
            S = rand_spd(8, rng)
            rho = float(np.max(np.abs(S - np.diag(np.diag(S))))) + 0.01
            prec = fit(S, rho)
            expected = np.diag(1.0 / (np.diag(S) + rho))
            np.testing.assert_allclose(prec.theta, expected, atol=1e-7)

    def test_2x2_weak_coupling_diagonal(self):
        S = np.array([[1.0, 0.09], [0.09, 1.0]])
        prec = fit(S, 0.1)
        assert prec.theta[0, 1] == 0.0
        assert prec.theta[0, 0] == pytest.approx(1.0 / 1.1, rel=1e-7)


class TestSolverProperties:
    def test_monotone_trace(self, rng):
        S = rand_spd(12, rng)
        prec = fit(S, 0.1)
        trace = np.array(prec.objective_trace)
        assert np.all(np.diff(trace) >= -1e-12)

    def test_output_symmetric_pd(self, rng):
        S = rand_spd(10, rng)
        prec = fit(S, 0.05)
        assert np.array_equal(prec.theta, prec.theta.T)
        assert np.all(np.linalg.eigvalsh(prec.theta) > 0)

    def test_kkt_small_at_solution(self, rng):
        for _ in range(3):
            S = rand_spd(15, rng)
            prec = fit(S, 0.08)
            assert prec.converged
            assert kkt_residual(prec.theta, S, 0.08) <= 1e-5

    def test_sparsity_monotone_in_rho(self, rng):
        S = rand_spd(20, rng)
        nnz = []
        for rho in (0.02, 0.1, 0.4):
            prec = fit(S, rho)
            off = prec.theta[~np.eye(20, dtype=bool)]
            nnz.append(int(np.sum(np.abs(off) >= 1e-8)))
        assert nnz[0] >= nnz[1] >= nnz[2]

    def test_exact_zeros(self, rng):
        S = rand_spd(10, rng)
        prec = fit(S, 0.3)
        off = prec.theta[~np.eye(10, dtype=bool)]
        small = off[np.abs(off) < 1e-8]
        assert small.size > 0 and np.all(small == 0.0)

    def test_unpenalized_diagonal_matches_kkt(self, rng):
        S = rand_spd(8, rng)
        prec = fit(S, 0.1, penalize_diagonal=False)
        W = np.linalg.inv(prec.theta)
        np.testing.assert_allclose(np.diag(W), np.diag(S), atol=1e-5)

    def test_objective_beats_perturbations(self, rng):
        # local optimality: nudging any entry of the solution cannot improve
        S = rand_spd(5, rng)
        rho = 0.1
        prec = fit(S, rho)
        F, R = objective(prec.theta, S, rho)
        best = F - R
        for _ in range(50):
            d = rng.standard_normal((5, 5)) * 1e-3
            d = (d + d.T) / 2.0
            try:
                F2, R2 = objective(prec.theta + d, S, rho)
            except ValueError:
                continue
            assert F2 - R2 <= best + 1e-9


class TestValidationAndIO:
    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError, match="symmetric"):
            fit(np.array([[1.0, 0.5], [0.2, 1.0]]), 0.1)

    def test_negative_rho_rejected(self):
        with pytest.raises(ValueError, match="nonnegative"):
            GlassoConfig(rho=-0.1)

    def test_gene_ids_length_checked(self):
        with pytest.raises(ValueError, match="gene_ids"):
            glasso_fit(np.eye(2), GlassoConfig(rho=0.1), gene_ids=("a",))

    def test_write_precision_triplets(self, tmp_path, rng):
        S = rand_spd(4, rng)
        prec = fit(S, 0.05)
        path = tmp_path / "prec.tsv"
        write_precision(prec, path)
        lines = path.read_text().strip().split("\n")
        assert lines[0].startswith("# genes=4 rho=0.05")
        seen = {}
        for line in lines[1:]:
            gi, gj, v = line.split("\t")
            seen[(gi, gj)] = float(v)
        for (gi, gj), v in seen.items():
            i, j = int(gi[1:]), int(gj[1:])
            assert i <= j
            assert v == pytest.approx(prec.theta[i, j], rel=0, abs=0)
        # everything above the zero threshold is present
        n_expected = int(np.sum(np.abs(prec.theta[np.triu_indices(4)]) >= 1e-8))
        assert len(seen) == n_expected
