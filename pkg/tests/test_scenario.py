import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holowdm.scenario import (Scenario, ValidationError, load_config, max_modes, parse_config,
                              serialize, system_snr, validate)


def test_defaults_use_every_mode(base):
    assert base.N == base.N_max == 41
    assert base.mode_offsets[0] == -20 and base.mode_offsets[-1] == 20


@pytest.mark.parametrize("Ls, lam, expected", [(0.2, 0.01, 41), (0.5, 0.01, 101),
                                               (0.2, 0.001, 401), (0.5, 0.001, 1001),
                                               (0.004, 0.01, 1)])
def test_max_modes(Ls, lam, expected):
    assert max_modes(Ls, lam) == expected


@pytest.mark.parametrize("kwargs, message", [
    ({"Ls": -0.2}, "non-positive"),
    ({"d": 0.0}, "non-positive"),
    ({"Lr": 0.1}, "receiver shorter"),
    ({"N": 10}, "even mode count"),
    ({"N": 43}, "exceeds N_max"),
    ({"emi": "directional"}, "unknown emi"),
])
def test_invalid_scenarios(kwargs, message):
    with pytest.raises(ValidationError, match=message):
        Scenario(**kwargs)


def test_noise_level_from_snr(base):
    assert base.P == pytest.approx((base.kappa * base.constants.Z0) ** 2 * 1e-7)
    assert base.sigma2 == pytest.approx(5.6e-6, rel=0.02)
    assert base.noise_emi == base.sigma2


def test_receive_spacing_matches_chain_count(base):
    sc = base.replace(Lr=5.0)
    assert sc.delta_r == pytest.approx(sc.delta_s * 25)


def test_validate_aliases_and_ratio():
    sc = validate({"Ls": "0.2", "Lr": "2", "d": "10", "lambda": "0.01", "hdw_ratio": "10"})
    assert sc.lam == 0.01
    assert sc.sigma2_hdw == pytest.approx(10 * sc.noise_emi)
    with pytest.raises(ValidationError, match="unknown configuration key"):
        validate({"Ls": 1, "Lr": 1, "d": 1, "lambda": 1, "colour": 3})
    with pytest.raises(ValidationError, match="missing required"):
        validate({"Ls": 1, "Lr": 1, "d": 1})
    with pytest.raises(ValidationError, match="integer"):
        validate({"Ls": 0.2, "Lr": 1, "d": 1, "lambda": 0.01, "N": "4.5"})


def test_config_roundtrip(tmp_path, base):
    path = tmp_path / "link.cfg"
    path.write_text("# comment\n" + serialize(base.replace(Lr=3.0, sigma2_hdw=1e-5)))
    assert load_config(path) == base.replace(Lr=3.0, sigma2_hdw=1e-5)
    assert load_config(path, {"d": "7"}).d == 7.0


def test_parse_config_rejects_garbage():
    with pytest.raises(ValidationError, match="line 2"):
        parse_config("Ls = 1\nthis is not a pair\n")


@given(st.lists(st.floats(0, 1e3), min_size=1, max_size=20))
def test_system_snr_is_linear(p):
    sc = Scenario()
    p = np.array(p)
    assert system_snr(sc, 2 * p) == pytest.approx(2 * system_snr(sc, p))


def test_budget_meets_target_snr(base):
    p = np.full(base.N, base.power_budget / base.N)
    assert system_snr(base, p) == pytest.approx(base.snr)
    with pytest.raises(ValueError):
        system_snr(base, [-1.0])


@given(st.floats(0.05, 2.0), st.floats(1.0, 4.0), st.floats(1e-3, 0.05))
def test_mode_count_is_odd_and_bounded(Ls, ell, lam):
    n = max_modes(Ls, lam)
    assert n % 2 == 1
    assert (n - 1) / 2 <= Ls / lam + 1e-9
    sc = Scenario(Ls=Ls, Lr=ell * Ls, lam=lam)
    assert sc.N == n and math.isclose(sc.kappa * sc.lam, 2 * math.pi)
