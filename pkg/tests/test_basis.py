import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holowdm.basis import (ExpRect, basis_cross_correlation, correlation_pieces, dipole_basis,
                           dipole_count, dipole_family, evaluate_pieces, fourier_receive,
                           fourier_receive_family, fourier_receive_transform, fourier_source,
                           fourier_source_family, fourier_source_transform)
from holowdm.quadrature import composite_gauss_legendre
from holowdm.scenario import Scenario


def test_source_modes_are_orthonormal(base):
    x, w = composite_gauss_legendre(-base.Ls / 2, base.Ls / 2, base.lam / 4)
    F = fourier_source_family(base).sample(x)
    np.testing.assert_allclose((F.conj() * w) @ F.T, np.eye(base.N), atol=1e-12)


def test_receive_modes_have_unit_amplitude(base):
    r = np.linspace(-0.5, 0.5, 7)
    assert np.allclose(np.abs(fourier_receive(5, r, base)), 1.0)
    assert fourier_receive(5, np.array([0.6]), base)[0] == 0


def test_index_checks(base):
    with pytest.raises(ValueError):
        fourier_source(0, 0.0, base)
    with pytest.raises(ValueError):
        fourier_receive_transform(base.N + 1, 0.0, base)


@given(st.integers(1, 41), st.floats(-1500, 1500))
def test_transforms_match_quadrature(m, kz):
    sc = Scenario()
    x, w = composite_gauss_legendre(-sc.Ls / 2, sc.Ls / 2, sc.lam / 4)
    direct = w @ (fourier_source(m, x, sc) * np.exp(-1j * kz * x))
    assert abs(fourier_source_transform(m, kz, sc) - direct) < 1e-10
    x, w = composite_gauss_legendre(-sc.Lr / 2, sc.Lr / 2, sc.lam / 4)
    direct = w @ (fourier_receive(m, x, sc) * np.exp(-1j * kz * x))
    assert abs(fourier_receive_transform(m, kz, sc) - direct) < 1e-9


def test_transform_peaks_on_mode_wavenumber(base):
    for m in (1, 21, 41):
        a = 2 * math.pi * (m - 21) / base.Ls
        assert fourier_source_transform(m, a, base) == pytest.approx(math.sqrt(base.Ls))
        assert fourier_receive_transform(m, a, base) == pytest.approx(base.Lr)


def test_dipole_layout(base):
    fam = dipole_family(base, "source")
    assert len(fam) == dipole_count(base.Ls, base.delta_s) == 41
    assert fam[0].c == pytest.approx(-base.Ls / 2)
    assert fam[-1].c == pytest.approx(base.Ls / 2)
    assert dipole_basis(1, -base.Ls / 2, "source", base) == pytest.approx(1 / math.sqrt(base.delta))
    sc = base.replace(Lr=5.0)
    assert len(dipole_family(sc, "receive")) == 41
    assert len(dipole_family(sc, "receive", spacing=sc.lam / 2)) == 1001
    with pytest.raises(ValueError, match="overlap"):
        dipole_family(base, "source", delta=0.01, spacing=0.005)
    with pytest.raises(ValueError):
        dipole_basis(42, 0.0, "source", base)


def _brute(psi, phi, u):
    # Gauss-Legendre over the exact overlap of the two supports.
    out = []
    for ui in u:
        lo, hi = max(psi.lo, phi.lo + ui), min(psi.hi, phi.hi + ui)
        if hi <= lo:
            out.append(0.0)
            continue
        x, w = composite_gauss_legendre(lo, hi, (hi - lo) / 8, 20)
        out.append(w @ (np.conj(psi.amp * np.exp(1j * psi.k * x))
                        * phi.amp * np.exp(1j * phi.k * (x - ui))))
    return np.array(out)


elements = st.builds(
    ExpRect,
    st.complex_numbers(min_magnitude=0.1, max_magnitude=3, allow_nan=False, allow_infinity=False),
    st.floats(-80, 80), st.floats(-0.5, 0.5), st.floats(0.05, 0.6))


@given(elements, elements)
def test_correlation_pieces_match_brute_force(psi, phi):
    u = np.linspace(psi.lo - phi.hi - 0.1, psi.hi - phi.lo + 0.1, 31)
    closed = evaluate_pieces(correlation_pieces(psi, phi), u)
    ref = _brute(psi, phi, u)
    scale = abs(psi.amp * phi.amp) * 2 * min(psi.h, phi.h)
    np.testing.assert_allclose(closed, ref, atol=1e-9 * scale)


def test_equal_wavenumber_gives_triangle():
    a = ExpRect(1.0, 0.0, 0.0, 0.5)
    u = np.array([-1.5, -0.5, 0.0, 0.25, 1.0])
    np.testing.assert_allclose(evaluate_pieces(correlation_pieces(a, a), u),
                               [0, 0.5, 1.0, 0.75, 0.0], atol=1e-15)


def test_family_cross_correlation(base):
    rx, tx = fourier_receive_family(base), fourier_source_family(base)
    u = np.linspace(-0.6, 0.6, 9)
    np.testing.assert_allclose(basis_cross_correlation(rx, 3, tx, 7, u), _brute(rx[2], tx[6], u),
                               atol=1e-10)
