"""Equilibrium-measure solver tests against closed-form oracles.

The Gaussian family V = x^2/2 is fully explicit (support [-2 sqrt(t),
2 sqrt(t)], unit density prefactor, Robin-type constant log(t) - 1), the
quartic V = x^4/4 has textbook endpoints (16t/3)^(1/4), and the spectral
curve of the Gaussian has an explicit value at x = 5.  Critical-point
synthesis is checked by full round trips through the solver and
detector.
"""

import random

import mpmath
import pytest
from mpmath import mp, mpf

from newband.chebyshev import cauchy_integral_u_weight
from newband.equilibrium import (
    AmbiguousOrderError,
    NoCriticalPointError,
    Potential,
    arcsine_log_potential,
    br_derivative_check,
    detect_critical_point,
    effective_potential,
    phi,
    q_identity_check,
    solve_one_cut,
    synthesize_birth_potential,
)
from newband.numerics import Interval, Polynomial, PrecisionContext, integrate

CTX = PrecisionContext()
TIGHT = mpf("1e-30")


def setup_module(_):
    mp.prec = CTX.bits


def gaussian():
    return Potential(Polynomial([0, 0, mpf(1) / 2]), note="gaussian")


def quartic():
    return Potential(Polynomial([0, 0, 0, 0, mpf(1) / 4]), note="pure quartic")


# ---------------------------------------------------------------------------
# Potential type
# ---------------------------------------------------------------------------

def test_potential_rejects_bad_polynomials():
    with pytest.raises(ValueError):
        Potential(Polynomial([0, 1]))  # odd degree
    with pytest.raises(ValueError):
        Potential(Polynomial([0, 0, -1]))  # negative leading coefficient
    with pytest.raises(ValueError):
        Potential(Polynomial([1]))  # degree zero


def test_potential_text_round_trip():
    V = Potential(Polynomial([mpf("0.125"), 0, mpf("-1.5"), 0, mpf("0.0625")]),
                  note="round trip fixture")
    text = V.to_text()
    back = Potential.from_text(text)
    assert back.note == "round trip fixture"
    assert len(back.poly.coeffs) == len(V.poly.coeffs)
    for c1, c2 in zip(back.poly.coeffs, V.poly.coeffs):
        assert abs(c1 - c2) <= mpf("1e-35")


def test_potential_derivative_is_cached_polynomial():
    V = quartic()
    rng = random.Random(11)
    for _ in range(20):
        x = mpf(rng.uniform(-3, 3))
        assert abs(V.derivative(x) - x ** 3) <= TIGHT * max(1, abs(x) ** 3)


# ---------------------------------------------------------------------------
# solve_one_cut: Gaussian and quartic oracles
# ---------------------------------------------------------------------------

def test_gaussian_endpoints_prefactor_and_constant():
    V = gaussian()
    for t in (mpf(1), mpf(1) / 4, mpf("1.44"), mpf("0.37")):
        m = solve_one_cut(V, t, CTX)
        edge = 2 * mp.sqrt(t)
        assert abs(m.a + edge) <= mpf("1e-10")
        assert abs(m.b - edge) <= mpf("1e-10")
        assert len(m.hpoly.coeffs) == 1
        assert abs(m.hpoly.coeffs[0] - 1) <= TIGHT
        # explicit constant: scale the [-2,2] semicircle log potential
        assert abs(m.l_t - (mp.log(t) - 1)) <= mpf("1e-25")


def test_gaussian_density_sup_error():
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    sup = mpf(0)
    for k in range(1, 50):
        x = mpf(-2) + 4 * mpf(k) / 50
        ref = mp.sqrt(4 - x * x) / (2 * mp.pi)
        sup = max(sup, abs(m.density(x) - ref))
    assert sup <= mpf("1e-10")


def test_gaussian_mass_via_quadrature():
    m = solve_one_cut(gaussian(), mpf("0.81"), CTX)
    # the rule supplies the sqrt factor, so integrate the prefactor only
    mass = integrate(
        lambda x: m.hpoly(x) / (2 * mp.pi * m.t), m.support, CTX, "sqrt-endpoints"
    )
    assert abs(mass - 1) <= TIGHT


def test_quartic_endpoints_and_prefactor():
    V = quartic()
    for t in (mpf(1), mpf("0.5")):
        m = solve_one_cut(V, t, CTX)
        r = (16 * t / 3) ** (mpf(1) / 4)
        assert abs(m.b - r) <= mpf("1e-25")
        assert abs(m.a + r) <= mpf("1e-25")
        # prefactor x^2 + r^2/2
        assert len(m.hpoly.coeffs) == 3
        assert abs(m.hpoly.coeffs[0] - r * r / 2) <= mpf("1e-25")
        assert abs(m.hpoly.coeffs[1]) <= TIGHT
        assert abs(m.hpoly.coeffs[2] - 1) <= TIGHT


def test_asymmetric_potential_balances_moment_conditions():
    # V with a cubic tilt: no closed form, check the defining conditions
    V = Potential(Polynomial([0, mpf("0.3"), mpf("0.5"), mpf("0.1"), mpf("0.05")]))
    m = solve_one_cut(V, mpf(1), CTX)
    assert m.a < m.b
    f = integrate(
        lambda s: V.derivative(s), m.support, CTX, "chebyshev-first-kind"
    )
    g = integrate(
        lambda s: s * V.derivative(s), m.support, CTX, "chebyshev-first-kind"
    )
    assert abs(f) <= mpf("1e-28")
    assert abs(g - 2 * mp.pi) <= mpf("1e-28")
    mass = integrate(
        lambda x: m.hpoly(x) / (2 * mp.pi), m.support, CTX, "sqrt-endpoints"
    )
    assert abs(mass - 1) <= mpf("1e-28")


def test_too_cold_quartic_with_well_split_is_not_one_cut():
    # double-well potential at small t concentrates on two islands
    V = Potential(Polynomial([0, 0, -1, 0, mpf(1) / 4]), note="double well")
    with pytest.raises(Exception) as info:
        solve_one_cut(V, mpf("0.05"), CTX)
    assert "one-cut" in str(info.value) or "converge" in str(info.value)


# ---------------------------------------------------------------------------
# effective potential
# ---------------------------------------------------------------------------

def test_effective_potential_vanishes_on_support():
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    rng = random.Random(23)
    for _ in range(12):
        x = mpf(rng.uniform(-1.99, 1.99))
        assert abs(effective_potential(m, V, x, CTX)) <= mpf("1e-8")
    assert abs(effective_potential(m, V, m.b, CTX)) <= mpf("1e-20")


def test_effective_potential_negative_off_support():
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    for x in ("2.05", "2.5", "4", "-2.2", "-7"):
        assert effective_potential(m, V, mpf(x), CTX) < -mpf("1e-8")


def test_effective_potential_matches_direct_quadrature():
    # independent route: raw tanh-sinh of the log integral
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    x = mpf("2.5")
    direct = 2 * integrate(
        lambda s: mp.log(x - s) * m.hpoly(s) / (2 * mp.pi),
        m.support, CTX, "sqrt-endpoints",
    ) - V(x) - m.l_t
    assert abs(effective_potential(m, V, x, CTX) - direct) <= mpf("1e-28")


def test_gaussian_effective_potential_closed_form():
    # for x > 2 the semicircle log potential integrates explicitly and
    # E(x) collapses to 2 log((x + sqrt(x^2-4))/2) - x sqrt(x^2-4)/2
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    for x in (mpf("2.5"), mpf(3), mpf(6)):
        s = mp.sqrt(x * x - 4)
        ref = 2 * mp.log((x + s) / 2) - x * s / 2
        val = effective_potential(m, V, x, CTX)
        assert abs(val - ref) <= mpf("1e-25")


# ---------------------------------------------------------------------------
# critical point detection and synthesis round trips
# ---------------------------------------------------------------------------

def test_gaussian_has_no_critical_point():
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    with pytest.raises(NoCriticalPointError):
        detect_critical_point(m, V, Interval(mpf("2.1"), mpf(5)), CTX)


def test_subcritical_measure_detection_is_ambiguous_with_loose_tol():
    V, _ = synthesize_birth_potential(mpf(3), 1, CTX)
    m = solve_one_cut(V, mpf("0.995"), CTX)
    with pytest.raises(AmbiguousOrderError):
        detect_critical_point(m, V, Interval(mpf("2.2"), mpf(5)), CTX, tol=mpf(1))


def test_synthesis_round_trip_order_one():
    V, report = synthesize_birth_potential(mpf(3), 1, CTX)
    assert report.nu == 1
    assert abs(report.x_star - 3) <= mpf("1e-6")
    assert report.q_at_xstar > 0
    assert report.c_star >= -mpf("1e-12")
    assert report.strictness_margin > mpf("1e-6")
    assert abs(report.phi_at_xstar - mp.log((3 + mp.sqrt(5)) / 2)) <= mpf("1e-20")
    m = solve_one_cut(V, mpf(1), CTX)
    assert abs(m.a + 2) <= mpf("1e-10")
    assert abs(m.b - 2) <= mpf("1e-10")
    assert abs(effective_potential(m, V, mpf(3), CTX)) <= mpf("1e-10")
    # hand-derived coefficients: Q = q1 (x - c) with c = A1/A0 from the
    # vanishing of the effective potential, q1 = 1/(1 + 3c) from unit mass
    a0 = integrate(lambda s: (s - 3) * mp.sqrt(s * s - 4), Interval(mpf(2), mpf(3)), CTX)
    a1 = integrate(lambda s: s * (s - 3) * mp.sqrt(s * s - 4), Interval(mpf(2), mpf(3)), CTX)
    c = a1 / a0
    assert 2 < c < 3
    q1 = 1 / (1 + 3 * c)
    assert abs(report.q_at_xstar - q1 * (3 - c)) <= mpf("1e-20")


def test_synthesis_round_trip_order_two():
    V, report = synthesize_birth_potential(mpf(3), 2, CTX)
    assert report.nu == 2
    assert abs(report.x_star - 3) <= mpf("1e-6")
    assert report.q_at_xstar > 0
    assert report.strictness_margin > 0
    assert V.degree == 6
    # the density prefactor must carry a cubic zero at the synthesis
    # point: deflate thrice at the exact input value
    m = solve_one_cut(V, mpf(1), CTX)
    quot = m.hpoly
    for _ in range(3):
        quot, rem = quot.deflate(mpf(3))
        assert abs(rem) <= mpf("1e-25")
    assert abs(quot(mpf(3)) - report.q_at_xstar) <= mpf("1e-12")


def test_synthesis_rejects_bad_arguments():
    with pytest.raises(ValueError):
        synthesize_birth_potential(mpf("1.5"), 1, CTX)
    with pytest.raises(ValueError):
        synthesize_birth_potential(mpf(3), 0, CTX)


def test_synthesized_density_positive_inside_band():
    V, _ = synthesize_birth_potential(mpf(5), 1, CTX)
    m = solve_one_cut(V, mpf(1), CTX)
    rng = random.Random(5)
    for _ in range(40):
        x = mpf(rng.uniform(-1.999, 1.999))
        assert m.density(x) > 0


# ---------------------------------------------------------------------------
# arcsine potential and growth rate
# ---------------------------------------------------------------------------

def test_arcsine_log_potential_zero_on_band():
    rng = random.Random(41)
    for _ in range(10):
        x = mpf(rng.uniform(-2, 2))
        assert arcsine_log_potential(x) == 0


def test_arcsine_log_potential_off_band_values():
    for x in (mpf("2.5"), mpf(3), mpf(10), mpf("-2.5"), mpf("-6")):
        ref = mp.log((abs(x) + mp.sqrt(x * x - 4)) / 2)
        assert abs(arcsine_log_potential(x) - ref) <= TIGHT
    # quadrature oracle at one point
    x = mpf(3)
    direct = integrate(
        lambda s: mp.log(x - s) / mp.pi, Interval(mpf(-2), mpf(2)), CTX,
        "chebyshev-first-kind",
    )
    assert abs(arcsine_log_potential(x) - direct) <= mpf("1e-28")


def test_growth_rate_phi():
    assert abs(phi(mpf(3)) - mp.log((3 + mp.sqrt(5)) / 2)) <= TIGHT
    big = mpf("1e8")
    assert abs(phi(big) - mp.log(big)) <= mpf("1e-15")
    with pytest.raises(ValueError):
        phi(mpf(2))
    with pytest.raises(ValueError):
        phi(mpf(0))


# ---------------------------------------------------------------------------
# derivative of the deformation toward the arcsine law
# ---------------------------------------------------------------------------

def test_deformation_derivative_first_order_table():
    V = gaussian()
    ts = [1 - mpf(10) ** -2, 1 - mpf(10) ** -3, 1 - mpf(10) ** -4]
    rows = br_derivative_check(V, ts, CTX)
    residuals = [r for _, r in rows]
    assert residuals[0] > residuals[1] > residuals[2]
    for early, late in zip(residuals, residuals[1:]):
        ratio = early / late
        assert 5 <= ratio <= 20


def test_deformation_derivative_rejects_t_equal_one():
    with pytest.raises(ValueError):
        br_derivative_check(gaussian(), [mpf("0.9"), mpf(1)], CTX)


# ---------------------------------------------------------------------------
# spectral curve identity
# ---------------------------------------------------------------------------

def test_q_identity_gaussian_off_support():
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    assert q_identity_check(m, V, mpf(3), CTX) <= mpf("1e-10")
    assert q_identity_check(m, V, mpf(5), CTX) <= mpf("1e-10")
    assert q_identity_check(m, V, mpf("-2.7"), CTX) <= mpf("1e-10")


def test_q_identity_gaussian_closed_form_at_five():
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    series = m.density_series(CTX)
    g5 = mpmath.re(cauchy_integral_u_weight(series, mpf(5)))
    q5 = (V.derivative(mpf(5)) / 2 - g5) ** 2
    ref = (mpf(5) / 2 - (5 - mp.sqrt(21)) / 2) ** 2
    assert abs(q5 - ref) <= mpf("1e-28")


def test_q_vanishes_at_band_edge():
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    series = m.density_series(CTX)
    for eps in (mpf("1e-4"), mpf("1e-6")):
        x = m.b + eps
        g = mpmath.re(cauchy_integral_u_weight(series, x))
        q = (V.derivative(x) / 2 - g) ** 2
        assert q <= 10 * eps


def test_q_identity_rejects_interior_points():
    V = gaussian()
    m = solve_one_cut(V, mpf(1), CTX)
    with pytest.raises(ValueError):
        q_identity_check(m, V, mpf("0.5"), CTX)


def test_quartic_q_identity_random_points():
    V = quartic()
    m = solve_one_cut(V, mpf(1), CTX)
    rng = random.Random(17)
    for _ in range(8):
        x = mpf(rng.uniform(1.8, 6.0))
        if x <= m.b + mpf("0.01"):
            continue
        assert q_identity_check(m, V, x, CTX) <= mpf("1e-20")
