r"""Two-band deformation of a critical one-cut measure.

Once the coupling t = 1 + delta_t passes the value at which the one-cut
effective potential touches zero at an exterior point x*, a second tiny
support interval opens around x*.  This module builds an explicit
closed-form approximation of the deformed equilibrium data from the
critical one-cut report alone:

* displaced main-band endpoints ``alpha_t = -2 - Xi(-2) delta_t`` and
  ``beta_t = 2 + Xi(2) delta_t``, where ``Xi(x) = 1/((x-x*)^(2nu-1) Q(x))``
  and Q is the recovered critical prefactor;
* a nascent band ``[x* - sigma_t, x* + sigma_t]`` whose half-width
  ``sigma_t = 2 y lam^(1/2nu)`` shrinks with ``lam = -delta_t/log delta_t``;
* a monic even correction polynomial ``H`` of degree 2 nu - 2 that fixes
  the density profile inside the nascent band;
* a polynomial remainder ``eta`` absorbing the first-order motion of the
  main-band edges.

The resulting density, square-root spectral factor, and log-potential
agree with the true deformed quantities up to O(delta_t/log delta_t)
corrections, and the module exposes the residuals of those comparisons
so the decay rates can be measured directly.

Pointwise evaluators (:func:`eta`, :func:`sqrt_q_tilde`,
:func:`rho_tilde`) run at the ambient mpmath precision; everything
backed by quadrature or series expansion takes a
:class:`~newband.numerics.PrecisionContext`.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from mpmath import mp, mpf, mpc

from .chebyshev import (
    ChebSeries,
    log_integral_u_weight,
    log_integral_u_weight_onband,
    mass_u_weight,
)
from .equilibrium import arcsine_log_potential, solve_one_cut
from .numerics import Interval, Polynomial


@dataclass(frozen=True)
class AnsatzParams:
    """Closed-form parameters of the deformed two-band measure.

    Attributes
    ----------
    delta_t : mpf
        Distance of the coupling above its critical value, in (0, 1/e).
    alpha_t, beta_t : mpf
        Deformed main-band endpoints; both are displaced outward from
        -2 and 2 by ``xi_minus2 * delta_t`` and ``xi_plus2 * delta_t``.
    y : mpf
        Width constant of the nascent band (positive).
    sigma_t : mpf
        Nascent-band half-width ``2 y (-delta_t/log delta_t)^(1/2nu)``.
    H_coeffs : Polynomial
        Monic correction polynomial of degree 2 nu - 2, stored in powers
        of (x - x*); evaluate as ``H_coeffs(x - x_star)``.
    iota_t : mpf
        Scaled mass excess: (total mass - 1) * log(delta_t)/delta_t.
    u_t : mpf
        Expected eigenvalue count in the nascent band, n times its mass.
    ubar_t : int
        Nearest nonnegative integer to ``u_t`` (ties round up).
    xi_minus2, xi_plus2 : mpf
        Edge-displacement coefficients ``1/((x-x*)^(2nu-1) Q(x))`` at
        x = -2 and x = 2; positive for admissible critical data.
    """

    delta_t: object
    alpha_t: object
    beta_t: object
    y: object
    sigma_t: object
    H_coeffs: Polynomial
    iota_t: object
    u_t: object
    ubar_t: int
    xi_minus2: object
    xi_plus2: object

    def __post_init__(self):
        if not (0 < self.delta_t < mp.exp(-1)):
            raise ValueError("delta_t must lie in (0, 1/e)")
        if not (self.y > 0 and self.sigma_t > 0):
            raise ValueError("band-width parameters must be positive")
        if self.H_coeffs.coeffs[-1] != 1:
            raise ValueError("the correction polynomial must be monic")
        if not (isinstance(self.ubar_t, int) and self.ubar_t >= 0):
            raise ValueError("ubar_t must be a nonnegative integer")
        for edge, off, xi in (
            (self.alpha_t, mpf(-2), -self.xi_minus2),
            (self.beta_t, mpf(2), self.xi_plus2),
        ):
            if abs(edge - (off + xi * self.delta_t)) > mpf("1e-9") * (1 + abs(edge)):
                raise ValueError("band edges inconsistent with displacement coefficients")


def build_params(report, delta_t, n, ctx):
    """Assemble the deformed-measure parameters from critical data.

    Parameters
    ----------
    report : CriticalReport
        Output of the critical-point detector; must carry the recovered
        prefactor polynomial ``q_poly``.
    delta_t : real
        Coupling excess t - 1, required to lie in (0, 1/e) so that
        ``-delta_t/log delta_t`` is positive and increasing.
    n : int
        Matrix dimension used to convert the nascent-band mass into the
        expected eigenvalue count ``u_t``.
    ctx : PrecisionContext

    The count ``u_t`` is obtained by direct quadrature of the nascent
    band's density (its limiting form ``-2 nu phi(x*) n delta_t/log
    delta_t`` is exposed only through tests), and ``iota_t`` is the mass
    excess of the full two-band density rescaled by log(delta_t)/delta_t.

    Raises
    ------
    ValueError
        If delta_t falls outside (0, 1/e), the report carries no
        prefactor polynomial, or the nascent band would touch the
        deformed main band at this delta_t.
    """
    delta_t = mpf(delta_t)
    if not (0 < delta_t < mp.exp(-1)):
        raise ValueError("delta_t must lie in (0, 1/e)")
    if report.q_poly is None:
        raise ValueError("report carries no prefactor polynomial")
    if not (isinstance(n, int) and n >= 1):
        raise ValueError("n must be a positive integer")
    nu = report.nu
    x_star = report.x_star
    q = report.q_poly
    power = 2 * nu - 1
    with ctx.guarded():
        lam = -delta_t / mp.log(delta_t)
        xi_minus2 = 1 / ((mpf(-2) - x_star) ** power * q(mpf(-2)))
        xi_plus2 = 1 / ((mpf(2) - x_star) ** power * q(mpf(2)))
        if not (xi_minus2 > 0 and xi_plus2 > 0):
            raise ValueError("critical data does not displace the band edges outward")
        alpha_t = -2 - xi_minus2 * delta_t
        beta_t = 2 + xi_plus2 * delta_t
        y = (
            4 * nu ** 2 * report.phi_at_xstar * mp.factorial(nu - 1) * mp.factorial(nu)
            / (q(x_star) * mp.sqrt(x_star ** 2 - 4) * mp.factorial(2 * nu))
        ) ** (mpf(1) / (2 * nu))
        sigma_t = 2 * y * lam ** (mpf(1) / (2 * nu))
        if not beta_t < x_star - sigma_t:
            raise ValueError("nascent band touches the main band at this delta_t")
        coeffs = [mpf(0)] * (2 * nu - 1)
        for k in range(nu):
            coeffs[2 * nu - 2 - 2 * k] = comb(2 * k, k) * y ** (2 * k) * lam ** (mpf(k) / nu)
        h_corr = Polynomial(coeffs)
        main, nascent = _band_series_raw(
            q, x_star, alpha_t, beta_t, sigma_t, 1 + delta_t, delta_t,
            h_corr, _eta_polynomial(report), ctx,
        )
        mass_main = mass_u_weight(main)
        mass_nascent = mass_u_weight(nascent)
        u_t = n * mass_nascent
        ubar_t = int(mp.floor(u_t + mpf(1) / 2)) if u_t >= 0 else 0
        iota_t = (mass_main + mass_nascent - 1) * mp.log(delta_t) / delta_t
    return AnsatzParams(
        delta_t=delta_t,
        alpha_t=alpha_t,
        beta_t=beta_t,
        y=y,
        sigma_t=sigma_t,
        H_coeffs=h_corr,
        iota_t=iota_t,
        u_t=u_t,
        ubar_t=ubar_t,
        xi_minus2=xi_minus2,
        xi_plus2=xi_plus2,
    )


def _as_point(x):
    """Coerce to mpf when the imaginary part is exactly zero, else mpc."""
    if isinstance(x, (complex, mpc)):
        if mp.im(x) == 0:
            return mpf(mp.re(x))
        return mpc(x)
    return mpf(x)


def _eta_polynomial(report):
    """The polynomial remainder absorbing first-order edge motion.

    Partial fractions turn the defining three-term expression

        h(x)/(2 Q(2) (2-x*)^(2nu-1) (x-2))
          + h(x)/(2 Q(-2) (2+x*)^(2nu-1) (x+2)) - 2/(x^2-4),

    with h(x) = Q(x)(x-x*)^(2nu-1), into (A(x) - 1/2)/(x - 2) +
    (B(x) + 1/2)/(x + 2) where the numerators vanish at the respective
    poles, so both divisions are exact and the result is a polynomial.
    """
    q = report.q_poly
    x_star = report.x_star
    power = 2 * report.nu - 1
    band = q
    shift = Polynomial([-x_star, mpf(1)])
    for _ in range(power):
        band = band * shift
    right = band * (1 / (2 * q(mpf(2)) * (mpf(2) - x_star) ** power))
    left = band * (1 / (2 * q(mpf(-2)) * (mpf(2) + x_star) ** power))
    quot_right, _ = (right - mpf(1) / 2).deflate(mpf(2))
    quot_left, _ = (left + mpf(1) / 2).deflate(mpf(-2))
    return quot_right + quot_left


def eta(x, report):
    """Polynomial remainder of the deformed spectral factor at real x.

    The value is the analytic continuation of the defining expression
    across its removable singularities at x = -2 and x = 2.
    """
    return _eta_polynomial(report)(_as_point(x))


def sqrt_q_tilde(x, params, report):
    """Square-root factor of the deformed spectral curve.

    Principal branches throughout: the main-band factor
    sqrt(x-alpha_t) sqrt(x-beta_t) is positive on (beta_t, oo) and the
    nascent-band factor sqrt(x-x*-sigma_t) sqrt(x-x*+sigma_t) is
    positive on (x*+sigma_t, oo).  Real x inside a band yields the
    boundary value from the upper half plane.
    """
    z = _as_point(x)
    x_star = report.x_star
    outer = mp.sqrt(z - params.alpha_t) * mp.sqrt(z - params.beta_t) / 2
    inner = mp.sqrt(z - x_star - params.sigma_t) * mp.sqrt(z - x_star + params.sigma_t)
    regular = (
        report.q_poly(z) * params.H_coeffs(z - x_star) * inner
        + _eta_polynomial(report)(z) * params.delta_t
    )
    return outer * regular


def sqrt_q_critical(x, report):
    """Square-root factor of the critical (t = 1) spectral curve.

    Equals Q(x) (x-x*)^(2nu-1) sqrt(x-2) sqrt(x+2) / 2 with principal
    square roots; the delta_t -> 0 limit of :func:`sqrt_q_tilde`.
    """
    z = _as_point(x)
    return (
        report.q_poly(z)
        * (z - report.x_star) ** (2 * report.nu - 1)
        * mp.sqrt(z - 2) * mp.sqrt(z + 2) / 2
    )


def rho_tilde(x, params, report):
    """Deformed two-band density at a real point (zero off the bands).

    On the main band [alpha_t, beta_t] the density is the boundary value
    of the deformed spectral factor; on the nascent band it is the pure
    product form without the eta remainder, which keeps it nonnegative.
    """
    x = mpf(x)
    x_star = report.x_star
    t = 1 + params.delta_t
    q = report.q_poly
    if params.alpha_t <= x <= params.beta_t:
        band = mp.sqrt((x - params.alpha_t) * (params.beta_t - x))
        gap = -mp.sqrt((x - x_star) ** 2 - params.sigma_t ** 2)
        regular = (
            q(x) * params.H_coeffs(x - x_star) * gap
            + _eta_polynomial(report)(x) * params.delta_t
        )
        return band * regular / (2 * t * mp.pi)
    if x_star - params.sigma_t <= x <= x_star + params.sigma_t:
        band = mp.sqrt((x - params.alpha_t) * (x - params.beta_t))
        bump = mp.sqrt(params.sigma_t ** 2 - (x - x_star) ** 2)
        return band * q(x) * params.H_coeffs(x - x_star) * bump / (2 * t * mp.pi)
    return mpf(0)


def _band_series_raw(q, x_star, alpha_t, beta_t, sigma_t, t, delta_t, h_corr,
                     eta_poly, ctx):
    """Chebyshev expansions of the density's smooth factors on each band."""
    scale = 2 * t * mp.pi

    def main_factor(s):
        gap = -mp.sqrt((s - x_star) ** 2 - sigma_t ** 2)
        return (q(s) * h_corr(s - x_star) * gap + eta_poly(s) * delta_t) / scale

    def nascent_factor(s):
        return mp.sqrt((s - alpha_t) * (s - beta_t)) * q(s) * h_corr(s - x_star) / scale

    with ctx.guarded():
        main = ChebSeries.from_function(main_factor, Interval(alpha_t, beta_t), ctx)
        nascent = ChebSeries.from_function(
            nascent_factor, Interval(x_star - sigma_t, x_star + sigma_t), ctx
        )
    return main, nascent


def band_series(params, report, ctx):
    """Smooth density factors on (main band, nascent band).

    Each returned ChebSeries satisfies density(x) = series(x) *
    sqrt((hi-x)(x-lo)) on its own band, so the standard weighted
    transforms apply directly.
    """
    return _band_series_raw(
        report.q_poly, report.x_star, params.alpha_t, params.beta_t,
        params.sigma_t, 1 + params.delta_t, params.delta_t,
        params.H_coeffs, _eta_polynomial(report), ctx,
    )


def h_tilde(x, params, report, ctx):
    """Log-potential of the deformed density over both bands.

    For x off the real bands this is int rho~(s) log(x-s) ds with the
    principal branch (boundary values from the upper half plane on the
    real axis); for real x inside a band the real symmetric value
    int rho~(s) log|x-s| ds is returned, which is the average of the two
    boundary values.
    """
    z = _as_point(x)
    main, nascent = band_series(params, report, ctx)
    with ctx.guarded():
        total = mpf(0)
        on_band = isinstance(z, mpf) and any(
            series.interval.contains(z) for series in (main, nascent)
        )
        for series in (main, nascent):
            if isinstance(z, mpf) and series.interval.contains(z):
                total += log_integral_u_weight_onband(series, z)
            elif on_band:
                total += mp.re(log_integral_u_weight(series, z))
            else:
                total += log_integral_u_weight(series, z)
    return total


def filling_identity(nu, y, ctx):
    """Both sides of the nascent-band area identity.

    lhs integrates the profile polynomial against the semicircle factor,
    ``int_{-2y}^{2y} P(s) sqrt(4 y^2 - s^2) ds`` by exact Chebyshev
    moments; rhs is the closed form ``2 pi y^2 P(2y)/nu`` with ``P(2y) =
    y^(2nu-2) (2nu)!/(2 (nu-1)! nu!)``.  Returns (lhs, rhs).
    """
    if int(nu) != nu or nu < 1:
        raise ValueError("the order parameter must be a positive integer")
    nu = int(nu)
    y = mpf(y)
    if not y > 0:
        raise ValueError("the width constant must be positive")
    with ctx.guarded():
        series = ChebSeries.from_polynomial(
            profile_polynomial(nu, y), Interval(-2 * y, 2 * y), ctx
        )
        lhs = mass_u_weight(series)
        edge = y ** (2 * nu - 2) * mp.factorial(2 * nu) / (
            2 * mp.factorial(nu - 1) * mp.factorial(nu)
        )
        rhs = 2 * mp.pi * y ** 2 * edge / nu
    return ctx.round(lhs), ctx.round(rhs)


def profile_polynomial(nu, y):
    """Blow-up profile of the correction polynomial at the nascent band.

    P(s) = sum_{j=0}^{nu-1} C(2j, j) y^(2j) s^(2(nu-1-j)); rescaling the
    correction polynomial by the nascent half-width recovers it:
    H(x - x*) = lam^(1-1/nu) P((x - x*) lam^(-1/2nu)).
    """
    y = mpf(y)
    coeffs = [mpf(0)] * (2 * nu - 1)
    for j in range(nu):
        coeffs[2 * (nu - 1 - j)] = comb(2 * j, j) * y ** (2 * j)
    return Polynomial(coeffs)


def check_thineq(params, report, V, grid, ctx):
    """Scaled on-band balance residuals of the deformed log-potential.

    The true equilibrium measure satisfies 2 h(x) = V(x)/t + l/t exactly
    on its support; the deformed approximation misses by
    O(delta_t/log delta_t).  For each grid point x in the deformed main
    band this returns (x, upsilon(x)) with

        upsilon(x) = (2 h~(x) - V(x)/t - l/t) * log(delta_t)/delta_t,

    where l is the critical one-cut constant of V, so a bounded upsilon
    across shrinking delta_t certifies the decay rate.

    Raises
    ------
    ValueError
        If a grid point lies outside [alpha_t, beta_t].
    """
    t = 1 + params.delta_t
    crit = solve_one_cut(V, mpf(1), ctx)
    main, nascent = band_series(params, report, ctx)
    scale = mp.log(params.delta_t) / params.delta_t
    rows = []
    with ctx.guarded():
        for point in grid:
            x = mpf(point)
            if not params.alpha_t <= x <= params.beta_t:
                raise ValueError("grid point %s lies outside the deformed main band" % x)
            two_h = 2 * (
                log_integral_u_weight_onband(main, x)
                + mp.re(log_integral_u_weight(nascent, x))
            )
            rows.append((x, (two_h - V(x) / t - crit.l_t / t) * scale))
    return rows


def sqrt_q_deformation_residual(x, params, report):
    """First-order deformation residual of the spectral factor.

    |sqrt_q_tilde(x) - sqrt_q(x) + delta_t/sqrt(x^2-4)|: the deformed
    factor minus its first-order prediction, which decays like
    -delta_t/log delta_t at fixed x off the bands and away from x*.
    The difference quotient (sqrt_q_tilde - sqrt_q)/delta_t approaches
    -1/sqrt(x^2-4) only at the slower 1/log delta_t rate, because the
    nascent-band half-width enters the factor at order
    (-delta_t/log delta_t)^(1/nu) through its square.
    """
    z = _as_point(x)
    drift = mp.sqrt(z - 2) * mp.sqrt(z + 2)
    return abs(
        sqrt_q_tilde(z, params, report) - sqrt_q_critical(z, report)
        + params.delta_t / drift
    )


def log_potential_deformation_residual(x, params, report, crit_measure, ctx):
    """First-order deformation residual of the log-potential.

    |h~(x) - h(x)/t - (delta_t/t) * arcsine log-potential(x)| for x off
    both bands, where h is the critical log-potential of crit_measure;
    decays like (-delta_t/log delta_t) * log|x+2|.
    """
    z = _as_point(x)
    t = 1 + params.delta_t
    approx = h_tilde(z, params, report, ctx)
    with ctx.guarded():
        series = crit_measure.density_series(ctx)
        exact = log_integral_u_weight(series, z)
        resid = approx - exact / t - params.delta_t / t * arcsine_log_potential(z)
    return abs(resid)


def critical_gap_residual(params, report, V, ctx):
    """Half-balance residual of the main-band potential at x*.

    |int_main rho~(s) log(x*-s) ds - V(x*)/2t - l/2t - delta_t phi(x*)|,
    with l the critical one-cut constant of V; the bracketed combination
    equals delta_t phi(x*) up to O(delta_t/log delta_t).
    """
    t = 1 + params.delta_t
    crit = solve_one_cut(V, mpf(1), ctx)
    main, _ = band_series(params, report, ctx)
    x_star = report.x_star
    with ctx.guarded():
        value = mp.re(log_integral_u_weight(main, x_star))
        resid = (
            value - V(x_star) / (2 * t) - crit.l_t / (2 * t)
            - params.delta_t * report.phi_at_xstar
        )
    return abs(resid)
