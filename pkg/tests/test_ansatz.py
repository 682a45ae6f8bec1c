"""Two-band deformation tests against closed-form and rate oracles.

The deformed measure for coupling t = 1 + delta_t is built from a
synthesized exactly-critical potential, so every parameter has an
independent route: band edges from the raw prefactor values at -2 and 2,
the correction polynomial from its scaled profile, the nascent-band
count from the filling identity, and the residual rates from brute-force
tanh-sinh quadrature of the density itself.  Rate checks measure the
constants across decades of delta_t rather than trusting a single run.
"""

import functools
import random

import pytest
from mpmath import mp, mpf

from newband.ansatz import (
    AnsatzParams,
    band_series,
    build_params,
    check_thineq,
    critical_gap_residual,
    eta,
    filling_identity,
    h_tilde,
    log_potential_deformation_residual,
    profile_polynomial,
    rho_tilde,
    sqrt_q_critical,
    sqrt_q_deformation_residual,
    sqrt_q_tilde,
)
from newband.chebyshev import mass_u_weight
from newband.equilibrium import (
    CriticalReport,
    effective_potential,
    phi,
    solve_one_cut,
    synthesize_birth_potential,
)
from newband.numerics import Interval, Polynomial, PrecisionContext, integrate

CTX = PrecisionContext()


def setup_module(_):
    mp.prec = CTX.bits


@functools.lru_cache(maxsize=None)
def critical(nu):
    """Synthesized exactly-critical potential at x* = 3 with its report."""
    return synthesize_birth_potential(mpf(3), nu, CTX)


@functools.lru_cache(maxsize=None)
def deformed(nu, delta_t, n=32):
    _, report = critical(nu)
    return build_params(report, mpf(delta_t), n, CTX)


def lam_of(delta_t):
    delta_t = mpf(delta_t)
    return -delta_t / mp.log(delta_t)


def fake_report(q_coeffs, nu):
    """Hand-built critical data for parameter-identity tests."""
    q = Polynomial([mpf(c) for c in q_coeffs])
    return CriticalReport(
        x_star=mpf(3),
        nu=nu,
        q_at_xstar=q(mpf(3)),
        phi_at_xstar=phi(mpf(3)),
        c_star=mpf(0),
        strictness_margin=mpf(1),
        q_poly=q,
    )


# ---------------------------------------------------------------------------
# parameter assembly
# ---------------------------------------------------------------------------

def test_correction_polynomial_is_trivial_for_order_one():
    params = deformed(1, "1e-3")
    assert params.H_coeffs.degree == 0
    assert params.H_coeffs.coeffs == (mpf(1),)


def test_correction_polynomial_order_two_closed_form():
    params = deformed(2, "1e-4")
    lam = lam_of("1e-4")
    assert params.H_coeffs.degree == 2
    assert params.H_coeffs.coeffs[2] == 1
    assert params.H_coeffs.coeffs[1] == 0
    expect = 2 * params.y ** 2 * mp.sqrt(lam)
    assert abs(params.H_coeffs.coeffs[0] - expect) <= mpf("1e-30") * expect


def test_correction_polynomial_matches_scaled_profile():
    # same coefficients as the blow-up profile rescaled by the band width
    reports = [critical(1)[1], critical(2)[1], fake_report(["-0.3", "0.12"], 3)]
    lam = lam_of("1e-4")
    for report in reports:
        params = build_params(report, mpf("1e-4"), 32, CTX)
        nu = report.nu
        scaled = profile_polynomial(nu, params.y).compose_affine(
            mpf(0), lam ** (-mpf(1) / (2 * nu))
        ) * lam ** (1 - mpf(1) / nu)
        assert len(scaled.coeffs) == len(params.H_coeffs.coeffs)
        for got, want in zip(params.H_coeffs.coeffs, scaled.coeffs):
            assert abs(got - want) <= mpf(2) ** (28 - CTX.bits) * (1 + abs(want))


def test_band_edges_displaced_outward():
    for nu, delta_t in ((1, mpf("1e-3")), (2, mpf("1e-4"))):
        _, report = critical(nu)
        params = build_params(report, delta_t, 32, CTX)
        assert params.xi_minus2 > 0 and params.xi_plus2 > 0
        assert params.alpha_t < -2 and params.beta_t > 2
        # independent route straight from the prefactor values
        power = 2 * nu - 1
        q = report.q_poly
        alpha_direct = -2 + delta_t / ((2 + report.x_star) ** power * q(mpf(-2)))
        beta_direct = 2 - delta_t / ((report.x_star - 2) ** power * q(mpf(2)))
        assert abs(params.alpha_t - alpha_direct) <= mpf("1e-30")
        assert abs(params.beta_t - beta_direct) <= mpf("1e-30")
        # half-width of the nascent band
        expect = 2 * params.y * lam_of(delta_t) ** (mpf(1) / (2 * nu))
        assert abs(params.sigma_t - expect) <= mpf("1e-30") * expect
        assert params.beta_t < report.x_star - params.sigma_t
        assert params.ubar_t == int(mp.floor(params.u_t + mpf(1) / 2))


def test_build_params_domain_guards():
    _, report = critical(1)
    with pytest.raises(ValueError):
        build_params(report, mpf("0.4"), 32, CTX)  # beyond 1/e
    with pytest.raises(ValueError):
        build_params(report, mpf(0), 32, CTX)
    with pytest.raises(ValueError):
        build_params(report, mpf("-1e-3"), 32, CTX)
    with pytest.raises(ValueError):
        build_params(report, mpf("1e-3"), 0, CTX)
    with pytest.raises(ValueError):
        # wide nascent band collides with the displaced main band
        build_params(report, mpf("0.05"), 32, CTX)
    bare = CriticalReport(
        x_star=report.x_star, nu=1, q_at_xstar=report.q_at_xstar,
        phi_at_xstar=report.phi_at_xstar, c_star=report.c_star,
        strictness_margin=report.strictness_margin,
    )
    with pytest.raises(ValueError):
        build_params(bare, mpf("1e-3"), 32, CTX)
    with pytest.raises(ValueError):
        # prefactor positive at the band edges: no outward displacement
        build_params(fake_report(["0.3", "0.12"], 1), mpf("1e-3"), 32, CTX)


def test_params_validation_rejects_inconsistent_fields():
    params = deformed(1, "1e-3")
    fields = {
        "delta_t": params.delta_t, "alpha_t": params.alpha_t,
        "beta_t": params.beta_t, "y": params.y, "sigma_t": params.sigma_t,
        "H_coeffs": params.H_coeffs, "iota_t": params.iota_t,
        "u_t": params.u_t, "ubar_t": params.ubar_t,
        "xi_minus2": params.xi_minus2, "xi_plus2": params.xi_plus2,
    }
    AnsatzParams(**fields)  # faithful copy passes
    with pytest.raises(ValueError):
        AnsatzParams(**{**fields, "alpha_t": mpf(-2.5)})
    with pytest.raises(ValueError):
        AnsatzParams(**{**fields, "ubar_t": -1})
    with pytest.raises(ValueError):
        AnsatzParams(**{**fields, "H_coeffs": Polynomial([1, 0, 2])})


# ---------------------------------------------------------------------------
# the polynomial remainder
# ---------------------------------------------------------------------------

def eta_three_term(x, report):
    """The defining expression, evaluated literally (x away from -2, 2)."""
    q = report.q_poly
    x_star = report.x_star
    power = 2 * report.nu - 1
    band = q(x) * (x - x_star) ** power
    return (
        band / (2 * q(mpf(2)) * (mpf(2) - x_star) ** power * (x - 2))
        + band / (2 * q(mpf(-2)) * (mpf(2) + x_star) ** power * (x + 2))
        - 2 / (x * x - 4)
    )


def test_remainder_value_frozen_and_two_routes():
    _, report = critical(1)
    value = eta(mpf(0), report)
    assert abs(value - mpf("-3.7829723580062308582")) <= mpf("1e-18")
    with mp.workprec(256):
        for x in (mpf(0), mpf("1.25"), mpf("-3.7")):
            assert abs(eta(x, report) - eta_three_term(x, report)) <= mpf("1e-35")


def test_remainder_regular_at_band_edges():
    _, report = critical(2)
    for edge in (mpf(2), mpf(-2)):
        for h in (mpf("1e-2"), mpf("1e-4")):
            # the literal expression continues to the polynomial's value
            assert abs(eta(edge + h, report) - eta_three_term(edge + h, report)) <= mpf("1e-25")
            gap = abs(eta(edge + h, report) - eta(edge - h, report))
            assert gap <= h * 10 * (1 + abs(eta(edge, report)))


def test_remainder_bounded_on_window():
    _, report = critical(1)
    values = [abs(eta(mpf(-10) + mpf(20) * k / 80, report)) for k in range(81)]
    assert all(mp.isfinite(v) for v in values)
    assert max(values) < mpf(1000)


# ---------------------------------------------------------------------------
# spectral factor
# ---------------------------------------------------------------------------

def test_spectral_factor_positive_beyond_nascent_band():
    _, report = critical(1)
    params = deformed(1, "1e-3")
    for x in (report.x_star + params.sigma_t + mpf("0.05"), mpf(4), mpf(7)):
        value = sqrt_q_tilde(x, params, report)
        assert mp.im(value) == 0
        assert mp.re(value) > 0


def test_spectral_factor_recovers_critical_limit():
    _, report = critical(1)
    x = mpf("3.5")
    gaps = []
    for delta_t in ("1e-3", "1e-4", "1e-5"):
        params = deformed(1, delta_t)
        gaps.append(abs(sqrt_q_tilde(x, params, report) - sqrt_q_critical(x, report)))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < mpf("2e-5")
    for prev, curr in zip(gaps, gaps[1:]):
        assert 5 < prev / curr < 20


def test_spectral_factor_first_order_rate_stable():
    _, report = critical(1)
    x = mpf("3.5")
    constants = []
    for delta_t in ("1e-3", "1e-4", "1e-5"):
        params = deformed(1, delta_t)
        constants.append(sqrt_q_deformation_residual(x, params, report) / lam_of(delta_t))
    assert max(constants) / min(constants) < 3
    assert max(constants) < 20


def test_difference_quotient_carries_log_scale_term():
    # (sqrt_q_tilde - sqrt_q)/delta_t misses -1/sqrt(x^2-4) by a term of
    # size 1/|log delta_t| whose constant is y^2 Q(x) sqrt(x^2-4)/(x-x*)
    # for a simple critical point; pin both the size and the constant.
    _, report = critical(1)
    x = mpf("3.5")
    quotient_res = {}
    for delta_t in ("1e-3", "1e-5"):
        params = deformed(1, delta_t)
        dt = mpf(delta_t)
        quotient_res[delta_t] = abs(
            (sqrt_q_tilde(x, params, report) - sqrt_q_critical(x, report)) / dt
            + 1 / mp.sqrt(x * x - 4)
        )
    # decays far slower than -delta_t/log delta_t: the scaled constant grows
    scaled = {k: quotient_res[k] / lam_of(k) for k in quotient_res}
    assert scaled["1e-5"] / scaled["1e-3"] > 50
    params = deformed(1, "1e-5")
    predicted = params.y ** 2 * report.q_poly(x) * mp.sqrt(x * x - 4) / (x - report.x_star)
    measured = quotient_res["1e-5"] * abs(mp.log(mpf("1e-5")))
    assert abs(measured - predicted) <= mpf("0.01") * predicted


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

def test_boundary_density_matches_spectral_factor():
    _, report = critical(1)
    params = deformed(1, "1e-3")
    t = 1 + params.delta_t
    rng = random.Random(11)
    for _ in range(5):
        x = params.alpha_t + (params.beta_t - params.alpha_t) * mpf(rng.random())
        top = mp.im(sqrt_q_tilde(x, params, report)) / (t * mp.pi)
        assert abs(top - rho_tilde(x, params, report)) <= mpf("1e-30") * (1 + abs(top))
        x = report.x_star - params.sigma_t + 2 * params.sigma_t * mpf(rng.random())
        top = mp.im(sqrt_q_tilde(x, params, report)) / (t * mp.pi)
        assert abs(top - rho_tilde(x, params, report)) <= mpf("1e-30") * (1 + abs(top))


def test_density_nonnegative_and_supported():
    _, report = critical(1)
    rng = random.Random(29)
    for delta_t in ("1e-2", "1e-3"):
        params = deformed(1, delta_t)
        for _ in range(80):
            x = params.alpha_t + (params.beta_t - params.alpha_t) * mpf(rng.random())
            assert rho_tilde(x, params, report) >= 0
            x = report.x_star - params.sigma_t + 2 * params.sigma_t * mpf(rng.random())
            assert rho_tilde(x, params, report) >= 0
        mid_gap = (params.beta_t + report.x_star - params.sigma_t) / 2
        assert rho_tilde(mid_gap, params, report) == 0
        assert rho_tilde(params.alpha_t - mpf(1), params, report) == 0
        assert rho_tilde(report.x_star + params.sigma_t + mpf(1), params, report) == 0


def test_nascent_band_mass_bookkeeping():
    _, report = critical(1)
    params = deformed(1, "1e-3")
    _, nascent = band_series(params, report, CTX)
    assert abs(params.u_t - 32 * mass_u_weight(nascent)) <= mpf("1e-35")
    # brute-force route straight through the pointwise density
    window = Interval(report.x_star - params.sigma_t, report.x_star + params.sigma_t)
    direct = integrate(lambda s: rho_tilde(s, params, report), window, CTX)
    assert abs(direct - params.u_t / 32) <= mpf("1e-20") * params.u_t / 32


def test_mass_excess_matches_scaled_constant():
    _, report = critical(1)
    for delta_t in ("1e-2", "1e-4"):
        params = deformed(1, delta_t)
        main, nascent = band_series(params, report, CTX)
        excess = mass_u_weight(main) + mass_u_weight(nascent) - 1
        expect = params.iota_t * params.delta_t / mp.log(params.delta_t)
        assert abs(excess - expect) <= mpf("1e-30") * (1 + abs(excess))


def test_expected_count_matches_width_asymptotics():
    for nu, delta_t in ((1, "1e-3"), (1, "1e-4"), (2, "1e-4")):
        _, report = critical(nu)
        params = deformed(nu, delta_t)
        lam = lam_of(delta_t)
        limit = 32 * lam * 2 * nu * report.phi_at_xstar
        rel_gap = abs(params.u_t - limit) / limit
        assert rel_gap <= mpf("1.5") * lam ** (mpf(1) / (2 * nu))


def test_expected_count_approaches_coupling_limit():
    _, report = critical(1)
    limit = 2 * report.nu * report.phi_at_xstar  # coupling constant 1
    gaps, widths = [], []
    for exponent in (10, 20, 40):
        n = 2 ** exponent
        delta_t = mp.log(n) / n
        params = build_params(report, delta_t, n, CTX)
        gaps.append(abs(params.u_t - limit))
        widths.append(params.sigma_t)
    assert gaps[0] > gaps[1] > gaps[2]
    assert widths[0] > widths[1] > widths[2]
    assert widths[2] < mpf("1e-5")


def test_count_rounding_tracks_dimension():
    _, report = critical(1)
    base = deformed(1, "1e-3")
    per_row = base.u_t / 32
    for n in (1000, 2000, 9000):
        params = build_params(report, mpf("1e-3"), n, CTX)
        assert abs(params.u_t - n * per_row) <= mpf("1e-25") * params.u_t
        assert params.ubar_t == int(mp.floor(params.u_t + mpf(1) / 2))


# ---------------------------------------------------------------------------
# log-potential and balance relations
# ---------------------------------------------------------------------------

def test_log_potential_matches_direct_quadrature():
    _, report = critical(1)
    params = deformed(1, "1e-3")
    x = mpf(5)
    value = h_tilde(x, params, report, CTX)
    direct = mpf(0)
    for lo, hi in (
        (params.alpha_t, params.beta_t),
        (report.x_star - params.sigma_t, report.x_star + params.sigma_t),
    ):
        direct += integrate(
            lambda s: rho_tilde(s, params, report) * mp.log(x - s),
            Interval(lo, hi), CTX,
        )
    assert abs(value - direct) <= mpf("1e-18") * abs(direct)


def test_log_potential_deformation_rate():
    V, report = critical(1)
    crit_measure = solve_one_cut(V, mpf(1), CTX)
    x = mpf(5)
    constants = []
    for delta_t in ("1e-3", "1e-4", "1e-5"):
        params = deformed(1, delta_t)
        residual = log_potential_deformation_residual(x, params, report, crit_measure, CTX)
        constants.append(residual / (lam_of(delta_t) * mp.log(x + 2)))
    assert max(constants) / min(constants) < 3
    assert max(constants) < 10


def test_gap_balance_rate_at_critical_point():
    V, report = critical(1)
    constants, drift_ratios = [], []
    for delta_t in ("1e-3", "1e-4", "1e-5"):
        params = deformed(1, delta_t)
        residual = critical_gap_residual(params, report, V, CTX)
        constants.append(residual / lam_of(delta_t))
        # against the predicted drift delta_t * phi(x*); were the drift's
        # sign wrong the ratio would sit near 2 instead of shrinking
        drift_ratios.append(residual / (mpf(delta_t) * report.phi_at_xstar))
    assert max(constants) / min(constants) < 3
    assert drift_ratios[0] > drift_ratios[1] > drift_ratios[2]
    assert drift_ratios[2] < mpf("0.25")


def test_band_balance_scaled_residual_bounded():
    V, report = critical(1)
    grid = [mpf("-1.5"), mpf("-0.5"), mpf("0.3"), mpf("1.2"), mpf("1.8")]
    sups = []
    for delta_t in ("4e-4", "2e-4", "1e-4"):
        params = deformed(1, delta_t)
        rows = check_thineq(params, report, V, grid, CTX)
        assert [x for x, _ in rows] == grid
        sups.append(max(abs(v) for _, v in rows))
    assert max(sups) / min(sups) < 3
    assert max(sups) < 50


def test_band_balance_rejects_points_off_band():
    V, report = critical(1)
    params = deformed(1, "1e-3")
    with pytest.raises(ValueError):
        check_thineq(params, report, V, [mpf("2.5")], CTX)


def test_no_deformation_below_critical_coupling():
    # at or below the critical coupling the true one-cut measure balances
    # exactly, so the scaled residual of the previous checks is zero there;
    # the band is strongly asymmetric (the density nearly degenerates at
    # the right edge), so sample at fractions of the computed support
    V, _ = critical(1)
    measure = solve_one_cut(V, mpf("0.9"), CTX)
    lo, hi = measure.support.lo, measure.support.hi
    assert hi < mpf(2)  # right edge retreats quickly below the coupling
    for frac in (mpf("0.2"), mpf("0.5"), mpf("0.8")):
        x = lo + frac * (hi - lo)
        assert abs(effective_potential(measure, V, x, CTX)) <= mpf("1e-25")
    # just beyond the right edge the balance tips strictly negative
    assert effective_potential(measure, V, hi + mpf("0.05"), CTX) < 0


# ---------------------------------------------------------------------------
# filling identity
# ---------------------------------------------------------------------------

def test_filling_identity_families():
    for nu in (1, 2, 3, 4):
        for y in (mpf(1) / 4, mpf(1), mpf(2)):
            lhs, rhs = filling_identity(nu, y, CTX)
            assert abs(lhs - rhs) <= mpf("1e-10") * abs(rhs)
            # closed form of the edge value against the polynomial itself
            edge = y ** (2 * nu - 2) * mp.factorial(2 * nu) / (
                2 * mp.factorial(nu - 1) * mp.factorial(nu)
            )
            poly_edge = profile_polynomial(nu, y)(2 * y)
            assert abs(poly_edge - edge) <= mpf("1e-12") * edge


def test_filling_identity_simple_cases():
    lhs, rhs = filling_identity(1, mpf("0.75"), CTX)
    semicircle = 2 * mp.pi * mpf("0.75") ** 2
    assert abs(lhs - semicircle) <= mpf("1e-30") * semicircle
    assert abs(rhs - semicircle) <= mpf("1e-30") * semicircle
    lhs, rhs = filling_identity(2, mpf(1), CTX)
    assert abs(lhs - 6 * mp.pi) <= mpf("1e-30") * lhs
    assert abs(rhs - 6 * mp.pi) <= mpf("1e-30") * rhs


def test_filling_identity_rejects_bad_arguments():
    with pytest.raises(ValueError):
        filling_identity(0, mpf(1), CTX)
    with pytest.raises(ValueError):
        filling_identity(2, mpf(0), CTX)
