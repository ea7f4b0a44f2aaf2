import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holowdm.fields import (WavenumberSpectrum, bandwidth_3db, beam_direction, decay_length,
                            farfield_green, green_wavenumber, green_wavenumber_direct,
                            radiation_pattern, scalar_green)
from holowdm.scenario import Scenario

KAPPA = 2 * math.pi / 0.01

# Adaptive quadrature of the truncated real-line transform at d = 5 m (frozen).
DIRECT_D5 = {
    0.0: 0.002517361058316818 + 0.002515558727018967j,
    0.5: 0.0018602440947426376 + 0.0021830594119922595j,
    0.9: 0.0009264232675402224 + 0.00043664458544076073j,
}


def test_on_axis_equals_far_field():
    for d in (0.5, 5.0, 100.0):
        assert scalar_green(0.0, d, KAPPA) == farfield_green(d, KAPPA)


def test_far_field_limit():
    errs = [abs(scalar_green(0.3, d, KAPPA) - farfield_green(d, KAPPA)) / abs(farfield_green(d, KAPPA))
            for d in (1e2, 1e3, 1e4, 1e5)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-3


def test_green_rejects_bad_distance():
    with pytest.raises(ValueError):
        scalar_green(0.0, 0.0, KAPPA)
    with pytest.raises(ValueError):
        green_wavenumber(0.0, -1.0, KAPPA)


@given(st.floats(-50, 50), st.floats(0.5, 50))
def test_green_magnitude(z, d):
    g = scalar_green(z, d, KAPPA)
    assert abs(g) == pytest.approx(d * d / (4 * math.pi * (z * z + d * d) ** 1.5), rel=1e-12)


def test_decay_length_hits_ratio():
    d = 5.0
    z = decay_length(d, 1e-6)
    assert abs(scalar_green(z, d, KAPPA)) / abs(scalar_green(0, d, KAPPA)) == pytest.approx(1e-6)


@pytest.mark.parametrize("ratio", sorted(DIRECT_D5))
def test_contour_matches_frozen_direct(ratio):
    G = green_wavenumber(ratio * KAPPA, 5.0, KAPPA)
    assert abs(G - DIRECT_D5[ratio]) <= 1e-6 * abs(DIRECT_D5[0.0])


def test_contour_matches_live_direct():
    kz = 0.3 * KAPPA
    ref = green_wavenumber_direct(kz, 10.0, KAPPA)
    assert abs(green_wavenumber(kz, 10.0, KAPPA) - ref) <= 1e-6 * abs(ref)


def test_stationary_phase_magnitude():
    # |G(0)| -> sqrt(2 pi / (kappa d)) / (4 pi) for kappa d >> 1
    for d in (5.0, 25.0):
        asym = math.sqrt(2 * math.pi / (KAPPA * d)) / (4 * math.pi)
        assert abs(green_wavenumber(0.0, d, KAPPA)) == pytest.approx(asym, rel=1e-3)


def test_transform_is_even_and_evanescent_small():
    kz = np.linspace(0, 2 * KAPPA, 57)
    np.testing.assert_allclose(green_wavenumber(kz, 5.0, KAPPA), green_wavenumber(-kz, 5.0, KAPPA))
    assert np.all(np.abs(green_wavenumber(kz[kz > 1.1 * KAPPA], 0.01, KAPPA))
                  < 0.1 * abs(green_wavenumber(0.0, 0.01, KAPPA)))


@given(st.floats(0.0, 3.0))
def test_node_convergence(t):
    kz = t * KAPPA
    a = green_wavenumber(kz, 2.0, KAPPA)
    b = green_wavenumber(kz, 2.0, KAPPA, n_nodes=192)
    assert abs(a - b) <= 1e-12 * abs(green_wavenumber(0.0, 2.0, KAPPA))


@pytest.mark.parametrize("d", [5.0, 10.0, 25.0])
def test_three_db_band_near_sixty_percent(d):
    assert bandwidth_3db(d, KAPPA) / KAPPA == pytest.approx(0.6, rel=0.1)


def test_spectrum_interpolation():
    spec = WavenumberSpectrum.for_receiver(5.0, KAPPA, 5.0, kz_max=1.2 * KAPPA)
    kz = np.array([0.123, 0.456, 0.789]) * KAPPA
    np.testing.assert_allclose(spec(kz), green_wavenumber(kz, 5.0, KAPPA),
                               atol=1e-6 * abs(spec.values).max())


def test_beam_directions():
    assert beam_direction(0, 0.2, 0.01) == pytest.approx(math.pi / 2)
    assert beam_direction(20, 0.2, 0.01) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError, match="visible"):
        beam_direction(21, 0.2, 0.01)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_pattern_peaks_at_beam(m):
    sc = Scenario(N=5)
    off = m - 3
    theta = np.linspace(0.01, math.pi - 0.01, 20001)
    pat = radiation_pattern(theta, m, sc)
    assert np.all((pat >= 0) & (pat <= 1))
    peak = theta[np.argmax(pat)]
    assert peak == pytest.approx(beam_direction(off, sc.Ls, sc.lam), abs=0.02)


def test_pattern_rejects_endfire_angle():
    with pytest.raises(ValueError):
        radiation_pattern(0.0, 1, Scenario(N=5))
