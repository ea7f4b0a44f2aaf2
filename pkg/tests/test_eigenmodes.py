import numpy as np
import pytest

from holowdm.eigenmodes import (default_grid_size, kernel, kernel_diagonal, kernel_trace,
                                mercer_errors, optimal_channel, optimal_se, psi_norms,
                                receive_functions, refinement_drift, solve)
from holowdm.scenario import Scenario
from holowdm.transceiver import evaluate_schemes
from holowdm.channel import wdm_coupling
from holowdm.emi import noise_model, wdm_covariance


@pytest.fixture(scope="module")
def link():
    return Scenario(Lr=1.0, d=5.0)


@pytest.fixture(scope="module")
def dec(link):
    return solve(link)


def test_kernel_diagonal_closed_form(link):
    s = np.array([-0.1, -0.03, 0.0, 0.07])
    np.testing.assert_allclose(kernel(s, s, link).real, kernel_diagonal(s, link), rtol=1e-10)


def test_kernel_is_hermitian(link):
    a = kernel(0.02, -0.05, link)
    b = kernel(-0.05, 0.02, link)
    assert a == pytest.approx(np.conj(b), rel=1e-12)


def test_eigen_equation_holds_off_grid(link, dec):
    # int K(s, s') phi(s') ds' = gamma phi(s) at points not on the Nystrom grid
    s = np.array([-0.0731, 0.0123, 0.0911])
    Kmat = kernel(s[:, None], dec.s_nodes[None, :], link)
    for n in range(3):
        lhs = Kmat @ (dec.s_weights * dec.phi[:, n])
        rhs = dec.gamma[n] * dec.eigenfunction(n, s)
        assert np.max(np.abs(lhs - rhs)) <= 1e-8 * np.max(np.abs(rhs))


def test_spectrum_properties(link, dec):
    assert dec.M == default_grid_size(link) == 328
    assert np.all(dec.gamma >= -1e-10 * dec.gamma.sum())
    assert np.all(np.diff(dec.gamma) <= 0)
    assert dec.gamma.sum() == pytest.approx(kernel_trace(link), rel=1e-4)
    V = dec.phi[:, :10] * np.sqrt(dec.s_weights)[:, None]
    np.testing.assert_allclose(V.conj().T @ V, np.eye(10), atol=1e-12)


def test_receive_functions_norms(dec):
    g = dec.gamma[:5]
    np.testing.assert_allclose(psi_norms(dec, 5), g, rtol=1e-6)
    r = dec.r_grid.nodes[:50]
    np.testing.assert_allclose(receive_functions(dec, r, 3), dec.psi[:50, :3], atol=1e-12 * abs(dec.psi).max())


def test_mercer_truncation_shrinks(dec):
    errs = mercer_errors(dec, [1, 3, 5, 9, 21])
    assert np.all(np.diff(errs) < 0)
    assert errs[-1] < 1e-3


def test_refinement_is_stable(link):
    assert refinement_drift(link, n_modes=11) < 1e-3


def test_grid_too_small(link):
    with pytest.raises(ValueError, match="grid size"):
        solve(link, M=100)


def test_optimal_beats_wdm(link, dec):
    H = wdm_coupling(link).H
    nm = noise_model(wdm_covariance(link), link.noise_emi, 0.0)
    wdm = evaluate_schemes(H, nm.C, link.power_budget, ("svd",))["svd"].se
    assert optimal_se(dec).se >= wdm


def test_white_noise_variant(link, dec):
    H, R = optimal_channel(dec, 5, noise="white")
    np.testing.assert_allclose(np.diag(R), np.diag(H) * link.lam / 2)
    assert optimal_se(dec, noise="white").scheme == "optimal-white"
