"""Operator assembly, restricted Green functions, u-field, and identities."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import integrate

from vrjp import (
    DomainError,
    EnumerationError,
    FactorizationError,
    RestrictionError,
    WeightedGraph,
    assemble_H,
    build_lattice_box,
    check_identities,
    green_bundle,
    marginal_params,
    q_density,
    sample_batch,
    sample_sequential,
    spectrum_bottom,
    stream,
    truncated_green_pathsum,
    u_field,
)

from _oracles import SE_RULE, se, zscore


def pair():
    return WeightedGraph(n=2, edges=((0, 1, 1.0),))


def wired_beta_envs(g, subset, n, rng):
    """Field samples on the retained set plus independent couplings."""
    params = marginal_params(g, subset)
    beta = sample_batch(params, n, rng)
    gamma = rng.gamma(0.5, 1.0, size=n)
    return beta, gamma


class TestAssembleH:
    def test_single_vertex(self):
        op = assemble_H(WeightedGraph(n=1, edges=()), [0.7])
        assert np.array_equal(op.dense(), [[1.4]])

    def test_pair(self):
        op = assemble_H(pair(), [1.0, 1.0])
        assert np.array_equal(op.dense(), [[2.0, -1.0], [-1.0, 2.0]])

    def test_row_sums_vanish_at_half_degree(self):
        g = build_lattice_box(2, 1, w=1.5)
        beta = g.total_weights() / 2.0
        h = assemble_H(g, beta).dense()
        assert np.abs(h @ np.ones(g.n)).max() < 1e-12

    def test_symmetry_and_sign_pattern(self):
        g = build_lattice_box(2, 1)
        h = assemble_H(g, np.full(g.n, 2.0)).dense()
        assert np.array_equal(h, h.T)
        off = h[~np.eye(g.n, dtype=bool)]
        assert (off <= 0).all()

    def test_sparse_above_cutoff(self):
        small = assemble_H(build_lattice_box(2, 1), np.full(9, 1.0))
        assert not small.is_sparse
        big_g = build_lattice_box(2, 16)  # 33^2 = 1089 vertices
        big = assemble_H(big_g, np.full(big_g.n, 3.0))
        assert big.is_sparse

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            assemble_H(pair(), [1.0])


class TestGreenBundle:
    def test_single_retained_vertex_closed_form(self):
        g = pair()
        beta = np.array([0.8])
        bundle = green_bundle(g, beta, [0], gamma=0.3)
        assert bundle.hat_g[0, 0] == pytest.approx(1.0 / 1.6, rel=1e-12)
        assert bundle.psi[0] == pytest.approx(1.0 / 1.6, rel=1e-12)
        assert bundle.full_g[1, 1] == pytest.approx(1.0 / 0.6, rel=1e-12)
        assert bundle.beta_delta == pytest.approx(0.5 * bundle.psi[0] + 0.3, rel=1e-12)

    def test_decomposition_identity_random_box(self):
        g = build_lattice_box(2, 2)
        subset = [v for v in range(g.n) if v not in (0, 24)]
        rng = stream(51, "decomp")
        beta, gamma = wired_beta_envs(g, subset, 1, rng)
        bundle = green_bundle(g, beta[0], subset, gamma[0])
        m = bundle.m
        recon = bundle.hat_g + np.outer(bundle.psi, bundle.psi) / (2.0 * gamma[0])
        rel = np.abs(bundle.full_g[:m, :m] - recon) / np.abs(recon)
        assert rel.max() <= 1e-9

    def test_boundary_green_entry_is_half_inverse_gamma(self):
        g = pair()
        rng = stream(51, "gdd")
        n = 100_000
        gamma = rng.gamma(0.5, 1.0, size=n)
        sub = rng.integers(0, n, size=200)
        for k in sub[:5]:
            bundle = green_bundle(g, np.array([1.0]), [0], gamma=float(gamma[k]))
            assert bundle.full_g[1, 1] == pytest.approx(1.0 / (2.0 * gamma[k]), rel=1e-12)
        # the implied mean: 1/(2 G(delta,delta)) = gamma averages to 1/2
        assert zscore(gamma, 0.5) <= SE_RULE

    def test_psi_positive_and_extensions(self):
        g = build_lattice_box(1, 2)
        subset = [1, 2, 3]
        rng = stream(51, "ext")
        beta, gamma = wired_beta_envs(g, subset, 1, rng)
        bundle = green_bundle(g, beta[0], subset, gamma[0], i0=2)
        assert (bundle.psi > 0).all()
        assert bundle.psi_ext()[bundle.delta_index] == 1.0
        assert bundle.u[bundle.i0_index] == 0.0
        assert bundle.position(2) == 1 and bundle.position(None) == bundle.delta_index
        with pytest.raises(DomainError):
            bundle.position(0)

    def test_errors(self):
        g = pair()
        with pytest.raises(DomainError):
            green_bundle(g, np.array([1.0]), [0], gamma=0.0)
        with pytest.raises(DomainError):
            green_bundle(g, np.array([1.0, 1.0]), [0, 0], gamma=1.0)
        with pytest.raises(RestrictionError):
            green_bundle(g, np.array([1.0, 1.0]), [0, 1], gamma=1.0)
        with pytest.raises(FactorizationError):
            green_bundle(
                WeightedGraph(n=3, edges=((0, 1, 1.0), (1, 2, 1.0))),
                np.array([0.4, 0.4]),
                [0, 1],
                gamma=1.0,
            )


class TestTruncatedPathsum:
    def test_zero_length_diagonal(self):
        g = pair()
        assert truncated_green_pathsum(g, [0.8, 1.0], 0, 0, 0) == pytest.approx(1.0 / 1.6)

    def test_zero_length_off_diagonal(self):
        assert truncated_green_pathsum(pair(), [1.0, 1.0], 0, 1, 0) == 0.0

    def test_converges_to_inverse_entry(self):
        # walks alternate between the two vertices, so the truncated sums are
        # geometric series with ratio 1/4; K=8 lands within 1e-3 of the
        # inverse (the off-diagonal entry gains its last term at odd K)
        g = pair()
        target = np.linalg.inv(np.array([[2.0, -1.0], [-1.0, 2.0]]))
        for k in range(0, 10):
            diag = truncated_green_pathsum(g, [1.0, 1.0], 0, 0, k)
            off = truncated_green_pathsum(g, [1.0, 1.0], 0, 1, k)
            assert diag == pytest.approx(
                (2.0 / 3.0) * (1.0 - 0.25 ** (k // 2 + 1)), rel=1e-12
            )
            assert off == pytest.approx(
                (1.0 / 3.0) * (1.0 - 0.25 ** ((k + 1) // 2)), rel=1e-12
            )
        assert abs(truncated_green_pathsum(g, [1.0, 1.0], 0, 0, 8) - target[0, 0]) < 1e-3
        assert abs(truncated_green_pathsum(g, [1.0, 1.0], 0, 1, 9) - target[0, 1]) < 1e-3

    def test_monotone_and_below_solver(self):
        g = WeightedGraph(
            n=4, edges=((0, 1, 1.0), (1, 2, 0.5), (2, 3, 1.0), (0, 3, 2.0))
        )
        beta = np.array([2.5, 1.6, 1.8, 3.0])
        solver = np.linalg.inv(assemble_H(g, beta).dense())
        for i, j in ((0, 2), (1, 3), (0, 0)):
            prev = -1.0
            for k in range(0, 11):
                val = truncated_green_pathsum(g, beta, i, j, k)
                assert val >= prev
                prev = val
            assert prev <= solver[i, j] + 1e-12

    def test_cap_exceeded(self):
        with pytest.raises(EnumerationError):
            truncated_green_pathsum(pair(), [1.0, 1.0], 0, 1, 13)


class TestQDensity:
    def test_zero_field_value(self):
        g = pair()
        val = q_density(g, np.zeros(2), 0)
        assert val == pytest.approx(1.0 / np.sqrt(2.0 * np.pi), rel=1e-12)

    def test_total_mass_by_quadrature(self):
        g = pair()
        # the integrand decays like exp(-cosh t); |t| > 15 is far below 1e-16
        mass, err = integrate.quad(
            lambda t: q_density(g, np.array([0.0, t]), 0), -15.0, 15.0, limit=200
        )
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_root_constraint_enforced(self):
        with pytest.raises(DomainError):
            q_density(pair(), np.array([0.5, 0.0]), 0)
        with pytest.raises(DomainError):
            q_density(pair(), np.array([0.0, np.inf]), 0)

    def test_wired_rooted_field_has_unit_exponential_mean(self):
        g = build_lattice_box(1, 2)
        subset = [1, 2, 3]
        rng = stream(61, "eu")
        n = 10_000
        beta, gamma = wired_beta_envs(g, subset, n, rng)
        eu = np.empty((n, 2))
        for k in range(n):
            bundle = green_bundle(g, beta[k], subset, gamma[k], i0=2)
            vals = np.exp(bundle.u)
            eu[k] = vals[[0, 2]]  # non-root retained sites
        for col in eu.T:
            assert zscore(col, 1.0) <= SE_RULE


class TestSpectrumBottom:
    def test_single_vertex(self):
        op = assemble_H(WeightedGraph(n=1, edges=()), [0.7])
        assert spectrum_bottom(op) == pytest.approx(1.4, abs=1e-8)

    def test_pair_zero_mode(self):
        op = assemble_H(pair(), [0.5, 0.5])
        assert spectrum_bottom(op) == pytest.approx(0.0, abs=1e-8)

    def test_sampled_field_gives_positive_operator(self):
        g = WeightedGraph(n=3, edges=((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))
        from vrjp import NuParams

        params = NuParams.from_graph(g, eta=1.0)
        rng = stream(71, "spec")
        for _ in range(50):
            sample = sample_sequential(params, rng=rng)
            assert spectrum_bottom(assemble_H(g, sample.beta)) > 0.0

    def test_sparse_branch_matches_shifted_laplacian(self):
        g = build_lattice_box(2, 16)  # sparse route: 1089 vertices
        c = 0.35
        beta = g.total_weights() / 2.0 + c
        op = assemble_H(g, beta)
        assert op.is_sparse
        assert spectrum_bottom(op) == pytest.approx(2.0 * c, abs=1e-6)

    def test_dense_branch_same_construction(self):
        g = build_lattice_box(2, 2)
        c = 0.35
        beta = g.total_weights() / 2.0 + c
        assert spectrum_bottom(assemble_H(g, beta)) == pytest.approx(2.0 * c, abs=1e-10)


class TestCheckIdentities:
    def test_residuals_small_over_environments(self):
        g = build_lattice_box(2, 2)
        subset = [v for v in range(g.n) if v != 12]
        rng = stream(81, "ids")
        beta, gamma = wired_beta_envs(g, subset, 25, rng)
        for k in range(25):
            bundle = green_bundle(g, beta[k], subset, gamma[k])
            report = check_identities(bundle, g, beta[k])
            assert report.max_residual() <= 1e-9

    def test_root_atom_negative_control(self):
        # removing the 1/(2 G(root,root)) atom must surface as a residual of
        # exactly that size in the beta reconstruction
        g = build_lattice_box(1, 2)
        subset = [1, 2, 3]
        rng = stream(81, "atom")
        beta, gamma = wired_beta_envs(g, subset, 1, rng)
        bundle = green_bundle(g, beta[0], subset, gamma[0], i0=2)
        report = check_identities(bundle, g, beta[0], i0=2)
        assert report.max_residual() <= 1e-9

        root = bundle.i0_index
        grow = bundle.full_g[root]
        atom = 1.0 / (2.0 * grow[root])
        w = bundle.w_wired
        recon_no_atom = 0.5 * (w[root] @ grow) / grow[root]
        assert abs(beta[0][root] - recon_no_atom) == pytest.approx(atom, rel=1e-9)

    def test_harmonicity_of_solved_field(self):
        g = build_lattice_box(2, 2)
        subset = [v for v in range(g.n) if v not in (0, 4, 20, 24)]
        rng = stream(81, "harm")
        beta, gamma = wired_beta_envs(g, subset, 1, rng)
        bundle = green_bundle(g, beta[0], subset, gamma[0])
        report = check_identities(bundle, g, beta[0])
        assert report.harmonic <= 1e-10


class TestNestedVolumes:
    def test_hat_green_monotone_in_volume(self):
        g = build_lattice_box(1, 4)  # vertices 0..8, center 4
        rng = stream(91, "mono")
        for _ in range(3):
            beta_full, gamma = wired_beta_envs(g, list(range(1, 8)), 1, rng)
            prev = None
            for r in (1, 2, 3):
                subset = list(range(4 - r, 4 + r + 1))
                beta = beta_full[0][[v - 1 for v in subset]]
                bundle = green_bundle(g, beta, subset, gamma[0])
                core = slice(bundle.position(3), bundle.position(5) + 1)
                block = bundle.hat_g[core, core]
                if prev is not None:
                    assert (block >= prev - 1e-12).all()
                prev = block

    def test_martingale_functional_across_levels(self):
        # E exp(-<lam, psi> - lam' Ghat lam / 2) agrees between nested volumes
        # for lam supported on the smaller one
        g = build_lattice_box(1, 4)
        keep_big = [1, 2, 3, 4, 5, 6, 7]
        keep_small = [2, 3, 4, 5, 6]
        rng = stream(91, "mart")
        n = 20_000
        beta, _ = wired_beta_envs(g, keep_big, n, rng)
        lam_small = np.array([0.0, 0.4, 0.9, 0.2, 0.0])
        lam_big = np.array([0.0] + list(lam_small) + [0.0])

        def functional(keep, lam, beta_cols):
            w = g.weight_matrix()[np.ix_(keep, keep)]
            comp = [v for v in range(g.n) if v not in keep]
            eta = g.weight_matrix()[np.ix_(keep, comp)].sum(axis=1)
            m = len(keep)
            h = np.broadcast_to(-w, (n, m, m)).copy()
            idx = np.arange(m)
            h[:, idx, idx] += 2.0 * beta_cols
            hat = np.linalg.inv(h)
            psi = hat @ eta
            quad = np.einsum("i,nij,j->n", lam, hat, lam)
            return np.exp(-(psi @ lam) - 0.5 * quad)

        big = functional(keep_big, lam_big, beta)
        small = functional(keep_small, lam_small, beta[:, 1:6])
        gap = abs(big.mean() - small.mean())
        assert gap <= SE_RULE * np.hypot(se(big), se(small))

    def test_psi_covariance_matches_mean_hat_green(self):
        g = build_lattice_box(1, 2)
        keep = [1, 2, 3]
        rng = stream(91, "qv")
        n = 20_000
        beta, _ = wired_beta_envs(g, keep, n, rng)
        w = g.weight_matrix()[np.ix_(keep, keep)]
        eta = np.array([1.0, 0.0, 1.0])
        h = np.broadcast_to(-w, (n, 3, 3)).copy()
        idx = np.arange(3)
        h[:, idx, idx] += 2.0 * beta
        hat = np.linalg.inv(h)
        psi = hat @ eta
        for i, j in ((0, 0), (0, 1), (1, 2)):
            prod = (psi[:, i] - psi[:, i].mean()) * (psi[:, j] - psi[:, j].mean())
            gap = abs(prod.mean() - hat[:, i, j].mean())
            assert gap <= SE_RULE * np.hypot(se(prod), se(hat[:, i, j]))


class TestUFieldFullGraph:
    def test_root_zero_and_green_ratio(self):
        g = WeightedGraph(n=3, edges=((0, 1, 1.0), (1, 2, 2.0)))
        beta = np.array([1.2, 2.0, 2.4])
        u = u_field(g, beta, 1)
        assert u[1] == 0.0
        green = np.linalg.inv(assemble_H(g, beta).dense())
        assert np.allclose(u, np.log(green[1] / green[1, 1]), atol=1e-12)
