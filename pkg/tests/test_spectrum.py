import numpy as np
import pytest

from sovchain.chain import multi_indices
from sovchain.errors import CountMismatch
from sovchain.numerics import frob
from sovchain.spectrum import (TransferPolynomial, brute_force_spectrum,
                               closed_form_solutions, discrete_matrix,
                               discrete_residuals, eigenvector_from_sov,
                               fused_eigenvalues, jacobian_smallest_sv, leading_minor,
                               match_to_oracle, site_q_values, solve_discrete_system,
                               trailing_minors, wavefunction_action_report,
                               wavefunction_sov1, wavefunction_sov2)
from sovchain.sov_bases import sov_basis_1, sov_basis_2
from sovchain.transfer import TransferEvaluator


def test_hand_case_oracle(chain1):
    records = brute_force_spectrum(chain1)
    assert len(records) == 2
    # eigenvalues 3 lam + 2 and 3 lam + 1; node values t(0) are 2 and 1
    xs = sorted(rec.t.x[0].real for rec in records)
    assert np.allclose(xs, [1.0, 2.0], atol=1e-12)
    for rec in records:
        lam = 0.77 - 0.31j
        want = 3 * lam + rec.t.x[0]
        assert abs(rec.t(lam) - want) < 1e-12


def test_oracle_x_tuples_distinct(chain12):
    records = brute_force_spectrum(chain12)
    assert len(records) == chain12.dim
    for i in range(len(records)):
        for j in range(i):
            assert np.max(np.abs(records[i].t.x - records[j].t.x)) > 1e-6


def test_hand_case_discrete_determinant(chain1):
    # det = t(0) t(-1) + k1 k2 vanishes exactly on both eigenvalues
    for x in (1.0, 2.0):
        t = TransferPolynomial(chain1, np.array([x]))
        mat = discrete_matrix(t, 0)
        assert mat.shape == (2, 2)
        assert abs(mat[0, 1] - (-2.0)) < 1e-14  # -k1 a(0) = -2
        assert abs(mat[1, 0] - 1.0) < 1e-14     # -k2 d(-1) = 1
        assert abs(np.linalg.det(mat)) < 1e-12
        assert np.max(np.abs(discrete_residuals(t))) < 1e-12


def test_oracle_satisfies_discrete_system(chain12, chain112):
    for chain in (chain12, chain112):
        for rec in brute_force_spectrum(chain):
            assert np.max(np.abs(discrete_residuals(rec.t))) < 1e-8


def test_perturbed_candidate_fails(chain12):
    rec = brute_force_spectrum(chain12)[0]
    x = rec.t.x.copy()
    x[0] += 1e-3
    residuals = np.abs(discrete_residuals(TransferPolynomial(chain12, x)))
    assert residuals.max() > 1e-6


def test_newton_refines_perturbed_seeds(chain12):
    records = brute_force_spectrum(chain12)
    rng = np.random.default_rng(55)
    seeds = [rec.t.x + 0.01 * (rng.standard_normal(2) + 1j * rng.standard_normal(2))
             for rec in records]
    solutions, diag = solve_discrete_system(chain12, seeds=seeds)
    assert len(solutions) == chain12.dim
    assert diag["newton_iterations"] > 0
    _, dists, bijection = match_to_oracle(solutions, records)
    assert bijection
    assert max(dists) < 1e-8


def test_hand_case_solve(chain1):
    solutions, _ = solve_discrete_system(chain1)
    assert len(solutions) == 2
    xs = sorted(sol.x[0].real for sol in solutions)
    assert np.allclose(xs, [1.0, 2.0], atol=1e-10)


def test_completeness_default_seeds(chain12, chain112):
    for chain in (chain12, chain112):
        solutions, _ = solve_discrete_system(chain)
        assert len(solutions) == chain.dim
        records = brute_force_spectrum(chain)
        _, dists, bijection = match_to_oracle(solutions, records)
        assert bijection and max(dists) < 1e-8


def test_duplicate_seeds_raise_count_mismatch(chain12):
    records = brute_force_spectrum(chain12)
    seeds = [records[0].t.x] * chain12.dim
    with pytest.raises(CountMismatch):
        solve_discrete_system(chain12, seeds=seeds)


def test_jacobian_regular_at_solutions(chain12):
    solutions, _ = solve_discrete_system(chain12)
    for sol in solutions:
        assert jacobian_smallest_sv(sol) > 1e-8


def test_degenerate_twist_closed_form(chain12_k2zero):
    solutions, diag = solve_discrete_system(chain12_k2zero)
    assert diag["branch"] == "closed-form"
    assert len(solutions) == chain12_k2zero.dim
    lam0 = 0.83 + 0.4j
    ev = TransferEvaluator(chain12_k2zero)
    got = np.sort_complex(np.linalg.eigvals(ev.transfer(lam0)))
    want = np.sort_complex(np.array([t(lam0) for t in solutions]))
    assert np.max(np.abs(got - want)) < 1e-10 * max(1.0, np.max(np.abs(want)))


def test_fused_values_low_levels(chain12):
    rec = brute_force_spectrum(chain12)[0]
    fused = fused_eigenvalues(rec.t)
    for n, site in enumerate(chain12.sites):
        bottom = chain12.node(n, site.two_s)
        assert fused[(n, 0)] == 1.0
        assert abs(fused[(n, 1)] - rec.t(bottom)) < 1e-12


def test_fused_values_equal_trailing_minors(chain12):
    # recursion values against determinants computed from the other corner
    for rec in brute_force_spectrum(chain12):
        fused = fused_eigenvalues(rec.t)
        for n, site in enumerate(chain12.sites):
            minors = trailing_minors(rec.t, n)
            for level in range(site.two_s + 2):
                scale = max(1.0, abs(minors[level]))
                assert abs(fused[(n, level)] - minors[level]) / scale < 1e-10


def test_minor_identity_single_site_spin1():
    # N = 1, two_s = 2: the 2x2 leading minor equals the level-2 fused value
    from conftest import TWIST_FULL
    from sovchain.chain import make_chain

    chain = make_chain(1.0, [(2, 0.2 - 0.4j)], TWIST_FULL, seed=9)
    for rec in brute_force_spectrum(chain):
        got = rec.t.fused_value(2, chain.node(0, 1))
        want = leading_minor(rec.t, 0)
        assert abs(got - want) < 1e-10 * max(1.0, abs(want))


def test_on_shell_top_fused_value_vanishes(chain12):
    for rec in brute_force_spectrum(chain12):
        fused = fused_eigenvalues(rec.t)
        for n, site in enumerate(chain12.sites):
            top = abs(fused[(n, site.two_s + 1)])
            scale = max(1.0, max(abs(fused[(n, l)]) for l in range(site.two_s + 1)))
            assert top / scale < 1e-10


def test_wavefunction_normalization_and_hand_value(chain1):
    records = brute_force_spectrum(chain1)
    by_x = {round(rec.t.x[0].real): rec for rec in records}
    psi = wavefunction_sov2(by_x[1].t)  # t = 3 lam + 1
    assert psi[(1,)] == 1.0
    assert abs(psi[(0,)] - 2.0) < 1e-12


def test_wavefunction_sov2_separate_action(chain12, chain112):
    for chain in (chain12, chain112):
        for rec in brute_force_spectrum(chain):
            assert wavefunction_action_report(rec.t) < 1e-8


def test_site_q_values_match_wavefunction(chain12):
    rec = brute_force_spectrum(chain12)[2]
    psi = wavefunction_sov2(rec.t)
    vals = [site_q_values(rec.t, n) for n in range(chain12.n_sites)]
    for h in multi_indices(chain12):
        prod = np.prod([vals[n][hn] for n, hn in enumerate(h)])
        assert abs(psi[h] - prod) < 1e-12 * max(1.0, abs(prod))


def test_eigenvector_reconstruction(chain12, ev12):
    basis = sov_basis_2(chain12, evaluator=ev12)
    for rec in brute_force_spectrum(chain12, evaluator=ev12):
        v, residual = eigenvector_from_sov(rec.t, basis, evaluator=ev12)
        assert residual < 1e-7
        cosine = abs(np.vdot(rec.vector, v)) / (np.linalg.norm(rec.vector) * np.linalg.norm(v))
        assert cosine > 1 - 1e-8
        # normalization from the top row: <S|v> = 1
        top = tuple(site.two_s for site in chain12.sites)
        assert abs(basis.row(top) @ v - 1.0) < 1e-9


def test_eigenvector_via_first_basis(chain12, ev12):
    # the first-basis wavefunction characterizes the same eigenvectors
    basis = sov_basis_1(chain12, evaluator=ev12)
    order = multi_indices(chain12)
    for rec in brute_force_spectrum(chain12, evaluator=ev12)[:3]:
        psi = wavefunction_sov1(rec.t)
        rhs = np.array([psi[h] for h in order])
        v = np.linalg.solve(basis.rows, rhs)
        mu = 0.61 - 0.29j
        lhs = ev12.transfer(mu) @ v
        assert frob(lhs - rec.t(mu) * v) / max(1.0, frob(lhs)) < 1e-7


def test_closed_form_solutions_leading(chain12_k2zero):
    # leading coefficient is tr K for every closed-form solution
    for t in closed_form_solutions(chain12_k2zero)[:4]:
        lam = 1e7 + 1e6j
        lead = t(lam) / np.prod([lam - chain12_k2zero.node(a, 0)
                                 for a in range(chain12_k2zero.n_sites)])
        assert abs(lead - chain12_k2zero.twist.trace) < 1e-6
