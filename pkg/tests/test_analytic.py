import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from boolperc.analytic import (HallSaturationWarning, coverage_prob, geometry, n_max, phi, pi_delta,
                               truncation_intensity)
from boolperc.radius_laws import Dirac, ExpTail, PowerLawC1, StretchedExpC2, TruncatedAt
from boolperc.sampler import ModelSpec, sample_config

from conftest import pi_event

# (law, lam, d, r, delta) -> value from an independent mpmath quadrature (30 digits), frozen
ORACLE = [
    (PowerLawC1(1.0, 2), 0.3, 2, 20.0, 0.05, 0.29311281105286077),
    (PowerLawC1(0.5, 2), 0.2, 2, 6.0, 0.1, 0.94193496179108904),
    (StretchedExpC2(1.0, 0.5), 0.02, 2, 8.0, 0.1, 0.82952078699371754),
    (StretchedExpC2(2.0, 0.5), 0.05, 3, 5.0, 0.05, 0.93093712602302715),
    (ExpTail(2.0), 0.3, 3, 3.0, 0.1, 0.82704955646083214),
    (ExpTail(1.0), 0.4, 2, 4.0, 0.0, 0.75501808373953306),
    (PowerLawC1(1.0, 3), 0.2, 3, 4.0, 0.0, 0.76917064668065136),
    (Dirac(1.0), 0.5, 2, 1.5, 0.0, 0.692136028671501),
]


def test_geometry_constants():
    g2, g3 = geometry(2), geometry(3)
    assert g2.c_d == pytest.approx(2 * math.pi) and g2.v_d == pytest.approx(math.pi)
    assert g3.c_d == pytest.approx(4 * math.pi) and g3.v_d == pytest.approx(4 * math.pi / 3)
    for d in range(1, 7):
        assert geometry(d).c_d == pytest.approx(d * geometry(d).v_d)


@pytest.mark.parametrize("law,lam,d,r,delta,expected", ORACLE)
def test_pi_delta_matches_high_precision_oracle(law, lam, d, r, delta, expected):
    assert pi_delta(law, lam, d, r, delta) == pytest.approx(expected, rel=1e-7)


def test_pi_delta_trivial_cases():
    assert pi_delta(PowerLawC1(1, 2), 0.0, 2, 10, 0.1) == 0.0
    assert pi_delta(Dirac(1), 3.0, 2, 10, 0.1) == 0.0
    assert phi(Dirac(1), 2.0, 2, 3.0) == 0.0
    assert phi(ExpTail(1), 0.0, 2, 3.0) == 0.0


def test_phi_at_zero_radius():
    assert phi(Dirac(1), 1.0, 2, 0.0) == pytest.approx(1 - math.exp(-math.pi), rel=1e-10)
    assert phi(Dirac(1), 1.0, 2, 0.0) == pytest.approx(0.956786, abs=1e-6)


def test_coverage_prob():
    assert coverage_prob(Dirac(1), 0.0, 2) == 0.0
    assert coverage_prob(Dirac(1), 1.0, 2) == pytest.approx(1 - math.exp(-math.pi))
    assert coverage_prob(PowerLawC1(0.5, 2), 0.1, 2) == pytest.approx(1 - math.exp(-0.5 * math.pi), rel=1e-9)


@pytest.mark.parametrize("law,lam,d", [(Dirac(1), 0.7, 2), (ExpTail(1), 0.3, 3), (PowerLawC1(1, 2), 0.2, 2),
                                       (StretchedExpC2(2, 0.5), 0.1, 2)])
def test_coverage_is_phi_at_zero(law, lam, d):
    assert coverage_prob(law, lam, d) == pytest.approx(phi(law, lam, d, 0.0), rel=1e-8)


def test_truncation_intensity():
    assert truncation_intensity(Dirac(1), 2.0, 2, 5.0, 2.0) == 0.0
    assert truncation_intensity(ExpTail(1), 0.0, 2, 5.0, 2.0) == 0.0
    # mpmath oracle: 0.3 pi int_80^inf (10 + rho)^2 5 rho^-6 drho
    assert truncation_intensity(PowerLawC1(3, 2), 0.3, 2, 10.0, 80.0) == pytest.approx(3.6719665110012536e-6,
                                                                                       rel=1e-6)


def test_n_max_honours_budget():
    for law, lam, d, r in [(PowerLawC1(1, 2), 0.2, 2, 10.0), (ExpTail(1), 1.0, 3, 5.0), (Dirac(2.5), 1.0, 2, 3.0)]:
        N = n_max(law, lam, d, r, 1e-6)
        assert truncation_intensity(law, lam, d, r, N) <= 1e-6
        if N > 1:
            assert truncation_intensity(law, lam, d, r, N - 1) > 1e-6


def test_hall_saturation():
    law = PowerLawC1(0.5, 2)  # tail exponent 2.5 < 3
    with pytest.warns(HallSaturationWarning):
        assert coverage_prob(law, 0.1, 3) == 1.0
    with pytest.warns(HallSaturationWarning):
        assert pi_delta(law, 0.1, 3, 5.0, 0.1) == 1.0
    with pytest.warns(HallSaturationWarning):
        assert truncation_intensity(law, 0.1, 3, 5.0, 10.0) == math.inf


def test_invalid_arguments():
    with pytest.raises(ValueError):
        pi_delta(Dirac(1), -1.0, 2, 5, 0.1)
    with pytest.raises(ValueError):
        pi_delta(Dirac(1), 1.0, 2, 5, 0.25)
    with pytest.raises(ValueError):
        truncation_intensity(Dirac(1), 1.0, 2, 5, -1)


LAWS = [Dirac(1.0), Dirac(2.0), ExpTail(1.0), PowerLawC1(1.0, 2), StretchedExpC2(1.0, 0.5),
        TruncatedAt(PowerLawC1(1.0, 2), 6.0)]


@given(st.sampled_from(LAWS), st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(1.0, 20.0),
       st.floats(0.0, 0.24))
def test_pi_delta_monotone_in_lambda(law, a, b, r, delta):
    lo, hi = min(a, b), max(a, b)
    assert pi_delta(law, lo, 2, r, delta) <= pi_delta(law, hi, 2, r, delta) + 1e-12


@given(st.sampled_from(LAWS), st.floats(0.05, 1.0), st.floats(1.0, 20.0), st.floats(0.0, 0.24),
       st.floats(0.0, 0.24))
def test_pi_delta_monotone_in_delta(law, lam, r, a, b):
    lo, hi = min(a, b), max(a, b)
    assert pi_delta(law, lam, 2, r, lo) <= pi_delta(law, lam, 2, r, hi) * (1 + 1e-7) + 1e-12


@given(st.sampled_from([Dirac(1.0), Dirac(2.0)]), st.floats(0.05, 2.0), st.floats(0.5, 20.0),
       st.floats(0.5, 20.0), st.floats(0.0, 0.24))
def test_pi_delta_nonincreasing_in_r_for_dirac(law, lam, a, b, delta):
    # the admissible centres form the annulus q - R <= |z| <= p + R, of area
    # proportional to r (2R - (1 - 4 delta) r) once q >= R: decreasing only past R / (1 - 4 delta)
    lo, hi = min(a, b), max(a, b)
    assume(lo >= law.r0 / (1 - 4 * delta) and (1 - 2 * delta) * lo >= law.r0)
    assert pi_delta(law, lam, 2, hi, delta) <= pi_delta(law, lam, 2, lo, delta) * (1 + 1e-7) + 1e-12


@given(st.sampled_from(LAWS), st.floats(0.0, 2.0), st.floats(0.0, 30.0))
def test_phi_is_pi_delta_at_zero(law, lam, r):
    assert phi(law, lam, 2, r) == pi_delta(law, lam, 2, r, 0.0)


def _mc_pi(law, lam, d, r, delta, n, seed):
    model = ModelSpec(d, lam, law)
    hits = 0
    for k in range(n):
        cfg = sample_config(model, r, seed + k)
        hits += pi_event(cfg.centers, cfg.radii, r, delta)
    return hits / n


def test_pi_delta_against_simulation():
    law, lam, r, delta = PowerLawC1(1.0, 2), 0.3, 20.0, 0.05
    n = 3000
    p = pi_delta(law, lam, 2, r, delta)
    f = _mc_pi(law, lam, 2, r, delta, n, 100)
    assert abs(f - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_pi_delta_mc_in_three_dimensions():
    law, lam, r, delta = ExpTail(1.0), 0.2, 3.0, 0.1
    n = 2000
    p = pi_delta(law, lam, 3, r, delta)
    f = _mc_pi(law, lam, 3, r, delta, n, 7)
    assert abs(f - p) <= 4 * math.sqrt(p * (1 - p) / n)


def test_no_warning_for_finite_moment():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        coverage_prob(PowerLawC1(0.5, 2), 0.1, 2)
        np.testing.assert_allclose(pi_delta(PowerLawC1(1.0, 2), 0.3, 2, 20.0, 0.05), 0.29311281105286077)
