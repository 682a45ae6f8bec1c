"""Scalar Riemann-Hilbert pieces for the nascent-band analysis.

Everything between the deformed density ansatz and the limiting-kernel
comparison lives here: the two-regime exterior log-potential ("g-function")
with its jump structure, the charge-splitting exterior map F, the additive
Szego-type solution K on the main band, the quarter-power band rotation and
the global parametrix assembled from them, the conformal coordinate centered
at the nascent-band location, the paired shift/slope constants (Z, tau) of
the local change of variables, and the rank-one Cauchy-integral matrix used
by the subcritical local model.

All boundary values are exact Chebyshev closed forms rather than
quadratures, so evaluation at x +/- i*eps is cheap and well conditioned
down to eps = 1e-6 and every jump relation can be certified by Richardson
extrapolation in eps.  The harness at the bottom runs that certification
across every contour piece and serializes the residual table.
"""

import random
from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf

from .ansatz import AnsatzParams, band_series
from .chebyshev import (
    ChebSeries,
    exterior_root,
    log_integral_u_weight,
    log_integral_u_weight_onband,
    mass_u_weight,
)
from .equilibrium import CriticalReport, OneCutMeasure, Potential
from .numerics import Interval, PrecisionContext, integrate
from .orthopoly import WeightSpec

__all__ = [
    "GFunction",
    "ParametrixFrame",
    "JumpResidual",
    "VariationalRow",
    "build_g_function",
    "g_eval",
    "gineq_residuals",
    "band_mismatch_series",
    "F_map",
    "szego_K",
    "pi_matrix",
    "build_frame",
    "global_parametrix",
    "conformal_zeta",
    "tau_Z",
    "cauchy_parametrix",
    "run_jump_suite",
    "jump_residuals_to_csv",
]


def _as_point(x):
    """Coerce to mpf when the imaginary part is exactly zero, else mpc."""
    if isinstance(x, (complex, mpc)):
        if mp.im(x) == 0:
            return mpf(mp.re(x))
        return mpc(x)
    return mpf(x)


def _require_side(side):
    if side not in (1, -1):
        raise ValueError(
            "boundary value on the jump contour: pass side=+1 (upper) or "
            "side=-1 (lower)"
        )
    return side


# ---------------------------------------------------------------------------
# g-function
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GFunction:
    """Exterior log-potential of the measure driving one deformation.

    ``main_series`` is the Chebyshev prefactor of the band density after
    the unit-mass correction, so the carried measure -- the band component
    plus, supercritically, a point charge of mass ``u_t / n`` at the
    nascent-band location -- has total mass exactly one.  ``l_tilde`` is
    the regime's multiplier stored so that ``l_tilde / t`` is the constant
    entering the variational residual; for t <= 1 it equals t times the
    equilibrium multiplier, above the transition it is the critical one.
    """

    regime: str
    n: int
    t: object
    u_t: object
    iota_t: object
    l_tilde: object
    main_series: ChebSeries
    report: CriticalReport
    critical_measure: OneCutMeasure
    params: AnsatzParams
    measure: OneCutMeasure
    ctx: PrecisionContext

    @property
    def alpha(self):
        return self.main_series.interval.lo

    @property
    def beta(self):
        return self.main_series.interval.hi

    @property
    def x_star(self):
        return self.report.x_star


def build_g_function(n, ctx, params=None, report=None, critical_measure=None,
                     measure=None):
    """Assemble the regime-appropriate g-function data.

    Supercritical calls pass the deformed ``params`` together with the
    critical ``report`` and the t = 1 ``critical_measure``; the band
    component is the deformed main-band density minus the scaled-mass-
    excess multiple of the unit semicircle, which restores total mass one
    once the nascent band is replaced by its point charge.  Subcritical
    calls pass the equilibrium ``measure`` for t <= 1 instead (the report
    and critical measure still ride along for the conformal frame).
    """
    if not (isinstance(n, int) and n >= 1):
        raise ValueError("n must be a positive integer")
    if report is None or critical_measure is None:
        raise ValueError("critical report and critical measure are required")
    if critical_measure.t != 1:
        raise ValueError("the critical measure must be solved at t = 1")
    if (params is None) == (measure is None):
        raise ValueError("pass exactly one of params (t > 1) or measure (t <= 1)")

    with ctx.guarded():
        if params is not None:
            main, nascent = band_series(params, report, ctx)
            delta_t = params.delta_t
            width = params.beta_t - params.alpha_t
            excess = params.iota_t * delta_t / mp.log(delta_t)
            coeffs = list(main.coeffs)
            coeffs[0] -= excess * 8 / (mp.pi * width * width)
            return GFunction(
                regime="supercritical",
                n=n,
                t=1 + delta_t,
                u_t=n * mass_u_weight(nascent),
                iota_t=params.iota_t,
                l_tilde=critical_measure.l_t,
                main_series=ChebSeries(main.interval, coeffs),
                report=report,
                critical_measure=critical_measure,
                params=params,
                measure=None,
                ctx=ctx,
            )
        if measure.t > 1:
            raise ValueError("the equilibrium route applies only for t <= 1")
        return GFunction(
            regime="subcritical",
            n=n,
            t=measure.t,
            u_t=mpf(0),
            iota_t=mpf(0),
            l_tilde=measure.t * measure.l_t,
            main_series=measure.density_series(ctx),
            report=report,
            critical_measure=critical_measure,
            params=None,
            measure=measure,
            ctx=ctx,
        )


def g_eval(gf, x, side=None):
    """Evaluate the g-function at a point.

    Complex x is evaluated directly (pass ``side=None``).  Real x left of
    the nascent-band location sits on the jump contour, where every log
    branch is two-sided, so those points require ``side``; the value for
    side = -1 is the conjugate of the upper one.  Real x at the charge
    location itself is a logarithmic singularity.
    """
    z = _as_point(x)
    with gf.ctx.guarded():
        if isinstance(z, mpc):
            if side is not None:
                raise ValueError("side applies only to real evaluation points")
            value = log_integral_u_weight(gf.main_series, z)
            if gf.u_t != 0:
                value += gf.u_t / gf.n * mp.log(z - gf.x_star)
            return value
        if z == gf.x_star and gf.u_t != 0:
            raise ValueError("logarithmic singularity at the charge location")
        if z < gf.beta or (gf.u_t != 0 and z < gf.x_star):
            _require_side(side)
        value = log_integral_u_weight(gf.main_series, z)
        if gf.u_t != 0:
            value += gf.u_t / gf.n * mp.log(mpc(z - gf.x_star))
        if side == -1:
            value = mp.conj(value)
        if mp.im(value) == 0:
            return mp.re(value)
        return value


def _g_two_sided_sum(gf, x):
    """g+ + g- at real x: closed form on the band, 2 Re g elsewhere."""
    z = mpf(x)
    if gf.alpha < z < gf.beta:
        total = 2 * log_integral_u_weight_onband(gf.main_series, z)
    else:
        total = 2 * mp.re(log_integral_u_weight(gf.main_series, z))
    if gf.u_t != 0:
        total += 2 * gf.u_t / gf.n * mp.log(abs(z - gf.x_star))
    return total


@dataclass(frozen=True)
class VariationalRow:
    """One grid point of the variational check.

    ``residual`` is g+ + g- - V/t - l_tilde/t.  On the open main band the
    ``rescaled`` entry divides out the supercritical smallness scale
    delta_t / log(delta_t) (None for t <= 1, where the residual vanishes
    to solver tolerance).  Off the support the residual itself is the
    strict-negativity margin; near the charge location it diverges to
    -infinity, so grids should keep a small collar there.
    """

    x: object
    location: str
    residual: object
    rescaled: object


def gineq_residuals(gf, V, grid, ctx):
    """Variational residuals of the g-function over a grid of real points.

    Points on the open main band report the equality residual (and its
    rescaling above the transition); all other points report the
    inequality margin, which certifies strict negativity off the support.
    """
    rows = []
    with ctx.guarded():
        for pt in grid:
            z = mpf(pt)
            if z == gf.x_star and gf.u_t != 0:
                raise ValueError("grid points must avoid the charge location")
            value = _g_two_sided_sum(gf, z) - V(z) / gf.t - gf.l_tilde / gf.t
            if gf.alpha < z < gf.beta:
                scaled = None
                if gf.regime == "supercritical":
                    delta_t = gf.params.delta_t
                    scaled = value * mp.log(delta_t) / delta_t
                rows.append(VariationalRow(z, "band", value, scaled))
            else:
                rows.append(VariationalRow(z, "off-support", value, None))
    return tuple(rows)


def band_mismatch_series(gf, V, ctx):
    """Chebyshev expansion on the main band of D = (n/2)(g+ + g- - V/t - l/t).

    Above the transition this is the small analytic mismatch left on the
    main band once the nascent band is traded for its point charge; for
    t <= 1 the equilibrium relation holds exactly on the support and the
    zero series is returned.
    """
    if gf.regime == "subcritical":
        return ChebSeries(gf.main_series.interval, [mpf(0)])
    with ctx.guarded():
        n, t, l_tilde = gf.n, gf.t, gf.l_tilde

        def mismatch(s):
            return n * (_g_two_sided_sum(gf, s) - V(s) / t - l_tilde / t) / 2

        return ChebSeries.from_function(mismatch, gf.main_series.interval, ctx)


# ---------------------------------------------------------------------------
# scalar solutions on the main band
# ---------------------------------------------------------------------------

def F_map(x, alpha, beta, x_star, side=None):
    """Exterior logarithm splitting the point-charge jump.

    F = log Phi with Phi = (r* - r(x)) / (r* + r(x)), where r(x) =
    sqrt(x - alpha) / sqrt(x - beta) (principal roots) and r* = r(x_star).
    F is analytic off [alpha, x_star], odd across the main band
    (F+ = -F-), jumps by 2 pi i across (beta, x_star), is continuous on
    (-inf, alpha) and (x_star, +inf), and behaves like log(x - x_star)
    at the charge location.  Returns (F(x), F0) with F0 = F(infinity) =
    log((r* - 1)/(r* + 1)) < 0.  Real x strictly between alpha and
    x_star needs a side flag; side = -1 conjugates the upper value.
    """
    alpha, beta, x_star = mpf(alpha), mpf(beta), mpf(x_star)
    if not alpha < beta < x_star:
        raise ValueError("need alpha < beta < x_star")
    rstar = mp.sqrt((x_star - alpha) / (x_star - beta))
    f0 = mp.log((rstar - 1) / (rstar + 1))
    z = _as_point(x)
    conjugate = False
    if isinstance(z, mpc):
        if side is not None:
            raise ValueError("side applies only to real evaluation points")
    else:
        if z == x_star:
            raise ValueError("logarithmic singularity at the charge location")
        if alpha < z < x_star:
            conjugate = _require_side(side) == -1
        z = mpc(z)
    r = mp.sqrt(z - alpha) / mp.sqrt(z - beta)
    value = mp.log((rstar - r) / (rstar + r))
    if conjugate:
        value = mp.conj(value)
    if mp.im(value) == 0:
        value = mp.re(value)
    return value, f0


def szego_K(x, d_n, alpha, beta, ctx, side=None):
    """Additive scalar solution of K+ + K- = 2 D on (alpha, beta).

    ``d_n`` is the Chebyshev series of the band mismatch D on
    [alpha, beta] (any callable is expanded on the fly).  In the exterior
    coordinate w the bounded solution is K = sum_k c_k w^{-k} with c_k the
    T-coefficients of D, so K is a finite closed form everywhere off the
    band and K(infinity) = c_0.  Returns (K(x), K0).  Real x strictly
    inside the band needs a side flag.
    """
    interval = Interval(mpf(alpha), mpf(beta))
    if isinstance(d_n, ChebSeries):
        series = d_n
        if (abs(series.interval.lo - interval.lo)
                + abs(series.interval.hi - interval.hi)) > mpf("1e-25"):
            raise ValueError("mismatch series lives on a different band")
    else:
        series = ChebSeries.from_function(d_n, interval, ctx)
    with ctx.guarded():
        k0 = series.coeffs[0]
        z = _as_point(x)
        if not isinstance(z, mpc) and interval.lo < z < interval.hi:
            phi = mp.acos((z - interval.mid) / interval.halfwidth)
            winv = mp.expj(-_require_side(side) * phi)
        else:
            winv = 1 / exterior_root((z - interval.mid) / interval.halfwidth)
        acc = mpf(0)
        for c in reversed(series.coeffs):
            acc = acc * winv + c
        if mp.im(acc) == 0:
            acc = mp.re(acc)
        return acc, k0


def pi_matrix(x, alpha, beta, side=None):
    """Main-band rotation built from the quarter power of (x-beta)/(x-alpha).

    The matrix has determinant one algebraically, tends to the identity at
    infinity, and flips by [[0, 1], [-1, 0]] across (alpha, beta).  The
    quarter-power blowup makes the band edges themselves invalid inputs;
    real x strictly inside the band needs a side flag.
    """
    alpha, beta = mpf(alpha), mpf(beta)
    z = _as_point(x)
    if z == alpha or z == beta:
        raise ValueError("quarter-power singularity at a band edge")
    ratio = (z - beta) / (z - alpha)
    if not isinstance(z, mpc) and alpha < z < beta:
        quarter = mp.exp(
            (mp.log(-ratio) + _require_side(side) * mp.pi * mpc(0, 1)) / 4
        )
    else:
        if side is not None and isinstance(z, mpc):
            raise ValueError("side applies only to real evaluation points")
        quarter = mp.exp(mp.log(ratio) / 4)
    avg = (quarter + 1 / quarter) / 2
    diff = (quarter - 1 / quarter) / (2 * mpc(0, 1))
    return ((avg, diff), (-diff, avg))


# ---------------------------------------------------------------------------
# parametrix frame
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParametrixFrame:
    """Scalar data bundle for the global parametrix of one deformation.

    Carries the exterior-map constants F0 and K0, the shift constant Z_t,
    the conformal slope at the charge location, the band-mismatch series,
    and the critical-measure handles the conformal map needs.  ``radius``
    is the validated radius of the conformal disk around x_star.
    """

    regime: str
    n: int
    t: object
    alpha: object
    beta: object
    x_star: object
    nu: int
    u_t: object
    ubar_t: int
    F0: object
    K0: object
    Z_t: object
    varphi_at_xstar: object
    d_series: ChebSeries
    crit_series: ChebSeries
    l_crit: object
    potential: Potential
    radius: object
    ctx: PrecisionContext


def _varphi_limit(report, critical_measure):
    """Closed-form conformal slope at the charge location."""
    support = critical_measure.support
    x_star, nu = report.x_star, report.nu
    gap = mp.sqrt((x_star - support.lo) * (x_star - support.hi))
    return (report.q_at_xstar * gap / (2 * nu)) ** (mpf(1) / (2 * nu))


def _zeta_raw(z, crit_series, l_crit, V, x_star, nu, n, ctx):
    """Conformal coordinate and local slope, no disk validation."""
    g_crit = log_integral_u_weight(crit_series, z)
    big = -(2 * g_crit - V(z) - l_crit)
    psi = big / (z - x_star) ** (2 * nu)
    varphi = psi ** (mpf(1) / (2 * nu))
    return mpf(n) ** (mpf(1) / (2 * nu)) * (z - x_star) * varphi, varphi


def _validate_disk(crit_series, l_crit, V, x_star, nu, n, radius, bound, ctx):
    """Reject radii whose disk reaches the band or admits a second zero.

    The de-singularized map must stay in the right half plane on the disk
    boundary; by the harmonic minimum principle its real part is then
    positive throughout, so the principal 2 nu-th root of it is analytic
    on the whole disk.
    """
    radius = mpf(radius)
    if not 0 < radius < mpf("0.95") * bound:
        raise ValueError(
            "conformal disk touches the main band; shrink the radius"
        )
    for j in range(16):
        ring = x_star + radius * mp.expj(mp.pi * (2 * j + 1) / 16)
        varphi = _zeta_raw(
            ring, crit_series, l_crit, V, x_star, nu, n, ctx
        )[1]
        if mp.re(varphi ** (2 * nu)) <= 0:
            raise ValueError(
                "second zero of the conformal map inside the disk; "
                "shrink the radius"
            )
    return radius


def build_frame(gf, V, ctx, radius=None):
    """Assemble the parametrix frame for one g-function.

    Validates the conformal disk: the default radius is half the distance
    from the charge location to the nearest band edge, and a ring of
    sample points must keep the de-singularized map in the right half
    plane -- otherwise a second zero has entered and the caller must
    shrink the radius.
    """
    with ctx.guarded():
        report = gf.report
        crit = gf.critical_measure
        bound = gf.x_star - gf.beta
        if radius is None:
            radius = bound / 2
        crit_series = crit.density_series(ctx)
        nu = report.nu
        radius = _validate_disk(
            crit_series, crit.l_t, V, gf.x_star, nu, gf.n, radius, bound, ctx
        )
        d_series = band_mismatch_series(gf, V, ctx)
        if gf.regime == "supercritical":
            f0 = F_map(gf.x_star + 4 * bound, gf.alpha, gf.beta, gf.x_star)[1]
            ubar = gf.params.ubar_t
        else:
            f0 = mpf(0)
            ubar = 0
        z_t, _ = tau_Z(gf.regime, gf.n, gf.t, report, gf, V, ctx, radius=radius)
        return ParametrixFrame(
            regime=gf.regime,
            n=gf.n,
            t=gf.t,
            alpha=gf.alpha,
            beta=gf.beta,
            x_star=gf.x_star,
            nu=nu,
            u_t=gf.u_t,
            ubar_t=ubar,
            F0=f0,
            K0=d_series.coeffs[0],
            Z_t=z_t,
            varphi_at_xstar=_varphi_limit(report, crit),
            d_series=d_series,
            crit_series=crit_series,
            l_crit=crit.l_t,
            potential=V,
            radius=radius,
            ctx=ctx,
        )


def global_parametrix(x, frame, side=None):
    """Outer matrix approximation away from the edge and charge disks.

    Supercritically the band rotation is conjugated by the exponentials
    of K plus the fractional-filling multiple of F; subcritically it is
    the band rotation alone.  Returns a 2x2 tuple of tuples.  Real x on
    the open main band (or, supercritically, anywhere on the open jump
    contour (alpha, x_star)) needs a side flag.
    """
    with frame.ctx.guarded():
        z = _as_point(x)
        real = not isinstance(z, mpc)
        on_band = real and frame.alpha < z < frame.beta
        rotation = pi_matrix(
            z, frame.alpha, frame.beta, side=side if on_band else None
        )
        if frame.regime == "subcritical":
            return rotation
        f_side = side if (real and frame.alpha < z < frame.x_star) else None
        f_val, f0 = F_map(z, frame.alpha, frame.beta, frame.x_star, side=f_side)
        k_val, k0 = szego_K(
            z, frame.d_series, frame.alpha, frame.beta, frame.ctx,
            side=side if on_band else None,
        )
        frac = frame.u_t - frame.ubar_t
        outer = mp.exp(k0 + frac * f0)
        inner = mp.exp(-(k_val + frac * f_val))
        return (
            (outer * rotation[0][0] * inner, outer * rotation[0][1] / inner),
            (rotation[1][0] * inner / outer, rotation[1][1] / (inner * outer)),
        )


# ---------------------------------------------------------------------------
# conformal coordinate and the shift/slope constants
# ---------------------------------------------------------------------------

def conformal_zeta(x, frame, n=None):
    """Conformal coordinate centered at the charge location.

    zeta = n^(1/2 nu) (x - x_star) varphi(x), where varphi^(2 nu) is the
    critical variational margin divided by (x - x_star)^(2 nu); the left
    real neighborhood of x_star maps onto the negative reals and the right
    one onto the positive reals.  Returns (zeta, varphi(x)).  Points
    outside the frame's validated disk are rejected.
    """
    if n is None:
        n = frame.n
    with frame.ctx.guarded():
        z = _as_point(x)
        if abs(z - frame.x_star) > frame.radius:
            raise ValueError("point outside the conformal disk")
        if z == frame.x_star:
            slope = frame.varphi_at_xstar
            return mpf(0), slope
        return _zeta_raw(
            z, frame.crit_series, frame.l_crit, frame.potential,
            frame.x_star, frame.nu, n, frame.ctx,
        )


def tau_Z(regime, n, t, report, gf, V, ctx, radius=None):
    """Shift constant Z_t and slope correction tau of the local variable.

    Z_t is fixed so that the analytic numerator
    N(x) = n (2 g1 - V/t - l_tilde/t) - 2 Z + zeta^(2 nu) - 2 u L(x)
    vanishes at the charge location (g1 is the band part of g alone and
    L = log zeta - log(x - x_star) is the branch-robust logarithm of the
    rescaled slope); tau = N / zeta then extends analytically across the
    removable singularity, which the returned callable fills by a Cauchy
    circle average near the center.  Subcritically u = 0 and the same
    formulas apply with the equilibrium data.  Returns (Z_t, tau).
    """
    if regime != gf.regime:
        raise ValueError("regime label disagrees with the g-function data")
    if n != gf.n or t != gf.t:
        raise ValueError("n, t disagree with the g-function data")
    with ctx.guarded():
        crit = gf.critical_measure
        crit_series = crit.density_series(ctx)
        nu = report.nu
        x_star = report.x_star
        bound = gf.x_star - gf.beta
        if radius is None:
            radius = bound / 2
        radius = _validate_disk(
            crit_series, crit.l_t, V, x_star, nu, gf.n, radius, bound, ctx
        )
        u = gf.u_t
        series = gf.main_series
        l_tilde = gf.l_tilde

        def g_band(z):
            return log_integral_u_weight(series, z)

        z_t = n * (g_band(x_star) - V(x_star) / (2 * t) - l_tilde / (2 * t))
        if u != 0:
            varphi_star = _varphi_limit(report, crit)
            z_t -= u * (mp.log(varphi_star) + mp.log(n) / (2 * nu))

        def direct(z):
            zeta, varphi = _zeta_raw(
                z, crit_series, crit.l_t, V, x_star, nu, n, ctx
            )
            numerator = (
                n * (2 * g_band(z) - V(z) / t - l_tilde / t)
                - 2 * z_t + zeta ** (2 * nu)
            )
            if u != 0:
                # log(zeta) - log(x - x*) computed through varphi, which the
                # ring validation keeps in the right half plane; the naive
                # difference of principal logs can slip by 2 pi i near the
                # leftward ray.
                numerator -= 2 * u * (mp.log(n) / (2 * nu) + mp.log(varphi))
            return numerator / zeta

        inner = radius / 64
        ring = radius / 4

        def tau(x):
            with ctx.guarded():
                z = _as_point(x)
                if abs(z - x_star) > radius:
                    raise ValueError("point outside the conformal disk")
                if abs(z - x_star) >= inner:
                    value = direct(z)
                else:
                    nodes = 48
                    acc = mpc(0)
                    for j in range(nodes):
                        w = ring * mp.expj(2 * mp.pi * j / nodes)
                        acc += direct(x_star + w) * w / (x_star + w - z)
                    value = acc / nodes
                if mp.im(value) == 0 or (
                    not isinstance(z, mpc) and abs(mp.im(value)) <
                    mp.ldexp(1, -(ctx.bits // 2)) * (1 + abs(value))
                ):
                    value = mp.re(value)
                return value

        return z_t, tau


# ---------------------------------------------------------------------------
# local Cauchy-integral parametrix
# ---------------------------------------------------------------------------

def cauchy_parametrix(zeta, tau, nu, ctx):
    """Rank-one Cauchy matrix of the weight exp(-s^(2 nu) + tau s).

    Returns ((1, C(zeta)), (0, 1)) with C the Cauchy transform of the
    weight over its numerically supported interval, so the matrix is
    unimodular, tends to the identity as zeta grows, and jumps by the
    weight across the real axis.  The transform splits the contour at
    Re(zeta) when the pole sits close to the axis, which keeps the
    evaluation sound down to a precision-scaled floor on |Im(zeta)|.
    """
    z = _as_point(zeta)
    tau = _as_point(tau)
    with ctx.guarded():
        spec = WeightSpec.model(nu, mp.re(tau), ctx)
        trunc = spec.truncation_for(0, ctx)
        floor = trunc.width * mp.ldexp(1, -(ctx.bits // 2))
        inside = trunc.lo < mp.re(z) < trunc.hi
        if abs(mp.im(z)) < floor and inside:
            raise ValueError(
                "zeta too close to the real axis for the Cauchy transform; "
                "use the boundary-value jump relation instead"
            )

        def f(s):
            return mp.exp(-(s ** (2 * nu)) + tau * s) / (s - z)

        if inside and abs(mp.im(z)) < trunc.width / 32:
            split = mp.re(z)
            total = integrate(f, Interval(trunc.lo, split), ctx, kind="plain")
            total += integrate(f, Interval(split, trunc.hi), ctx, kind="plain")
        else:
            total = integrate(f, trunc, ctx, kind="plain")
        c = total / (2 * mp.pi * mpc(0, 1))
        return ((mpf(1), c), (mpf(0), mpf(1)))


# ---------------------------------------------------------------------------
# jump certification harness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpResidual:
    """Extrapolated boundary-value residual of one contract at one point."""

    object_name: str
    piece: str
    point: object
    epsilons: tuple
    residual: object


def _extrapolate(values, epsilons):
    """Neville extrapolation of f(eps) to eps = 0."""
    vals = list(values)
    eps = [mpf(e) for e in epsilons]
    for m in range(1, len(vals)):
        for i in range(len(vals) - m):
            vals[i] = vals[i + 1] + (vals[i + 1] - vals[i]) * eps[i + m] / (
                eps[i] - eps[i + m]
            )
    return vals[0]


def _mat_combo(plus, minus, jump):
    """Entrywise plus - minus . jump for 2x2 tuples."""
    prod = tuple(
        tuple(
            minus[i][0] * jump[0][j] + minus[i][1] * jump[1][j]
            for j in range(2)
        )
        for i in range(2)
    )
    return tuple(
        tuple(plus[i][j] - prod[i][j] for j in range(2)) for i in range(2)
    )


def _extrapolated_matrix_norm(samples, epsilons):
    """Max over entries of the extrapolated 2x2 residual samples."""
    worst = mpf(0)
    for i in range(2):
        for j in range(2):
            entry = _extrapolate([s[i][j] for s in samples], epsilons)
            worst = max(worst, abs(entry))
    return worst


def _band_mass_above(gf, x, ctx):
    """Band-component mass of the carried measure on (x, beta)."""
    series = gf.main_series
    lo, hi = series.interval.lo, series.interval.hi

    def density(s):
        return series(s) * mp.sqrt((s - lo) * (hi - s))

    return integrate(density, Interval(mpf(x), hi), ctx, kind="plain")


def run_jump_suite(gf, frame, V, ctx, points_per_piece=5, seed=20,
                   epsilons=("1e-4", "1e-5", "1e-6")):
    """Certify every jump contract by Richardson extrapolation in eps.

    Each contour piece of each object is sampled at ``points_per_piece``
    seeded-random points; boundary values at x +/- i eps are combined into
    the contracted jump relation and extrapolated to eps = 0.  Returns a
    tuple of JumpResidual rows (all residuals should sit below 1e-8 for
    healthy data).
    """
    rng = random.Random(seed)
    eps = tuple(mpf(e) for e in epsilons)
    alpha, beta, x_star = frame.alpha, frame.beta, frame.x_star
    u_frac = gf.u_t / gf.n
    two_pi_i = 2 * mp.pi * mpc(0, 1)
    rows = []

    def draw(lo, hi):
        return mpf(lo) + mpf(rng.random()) * (mpf(hi) - mpf(lo))

    def add_scalar(name, piece, fn):
        for _ in range(points_per_piece):
            x = fn()
            samples, x0 = x
            value = _extrapolate(samples, eps)
            rows.append(JumpResidual(name, piece, x0, epsilons, abs(value)))

    with ctx.guarded():
        width = beta - alpha
        gap = x_star - beta

        # --- g-function ----------------------------------------------------
        def g_pair(x0):
            return [
                (
                    g_eval(gf, mpc(x0, e)),
                    g_eval(gf, mpc(x0, -e)),
                )
                for e in eps
            ]

        def g_left():
            x0 = draw(alpha - 2, alpha - mpf("0.05") * width)
            samples = [p - m - two_pi_i for p, m in g_pair(x0)]
            return samples, x0

        def g_band_difference():
            x0 = draw(alpha + mpf("0.1") * width, beta - mpf("0.1") * width)
            partial = _band_mass_above(gf, x0, ctx) + u_frac
            samples = [p - m - two_pi_i * partial for p, m in g_pair(x0)]
            return samples, x0

        def g_band_sum():
            x0 = draw(alpha + mpf("0.1") * width, beta - mpf("0.1") * width)
            direct = _g_two_sided_sum(gf, x0)
            samples = [p + m - direct for p, m in g_pair(x0)]
            return samples, x0

        add_scalar("g", "(-inf,alpha)", g_left)
        add_scalar("g", "band-difference", g_band_difference)
        add_scalar("g", "band-sum", g_band_sum)

        if gf.regime == "supercritical":
            def g_gap():
                x0 = draw(beta + mpf("0.1") * gap, x_star - mpf("0.1") * gap)
                samples = [
                    p - m - two_pi_i * u_frac for p, m in g_pair(x0)
                ]
                return samples, x0

            add_scalar("g", "(beta,xstar)", g_gap)

        # --- F ---------------------------------------------------------------
        def f_at(z):
            return F_map(z, alpha, beta, x_star)[0]

        def f_band():
            x0 = draw(alpha + mpf("0.1") * width, beta - mpf("0.1") * width)
            samples = [
                f_at(mpc(x0, e)) + f_at(mpc(x0, -e)) for e in eps
            ]
            return samples, x0

        def f_gap():
            x0 = draw(beta + mpf("0.1") * gap, x_star - mpf("0.1") * gap)
            samples = [
                f_at(mpc(x0, e)) - f_at(mpc(x0, -e)) - two_pi_i for e in eps
            ]
            return samples, x0

        def f_continuity():
            if rng.random() < mpf("0.5"):
                x0 = draw(alpha - 2, alpha - mpf("0.05") * width)
            else:
                x0 = draw(x_star + mpf("0.05") * gap, x_star + 2)
            samples = [f_at(mpc(x0, e)) - f_at(mpc(x0, -e)) for e in eps]
            return samples, x0

        add_scalar("F", "(alpha,beta)", f_band)
        add_scalar("F", "(beta,xstar)", f_gap)
        add_scalar("F", "continuity", f_continuity)

        # --- K ---------------------------------------------------------------
        def k_band():
            x0 = draw(alpha + mpf("0.1") * width, beta - mpf("0.1") * width)
            target = 2 * frame.d_series(x0)
            samples = []
            for e in eps:
                above = szego_K(mpc(x0, e), frame.d_series, alpha, beta, ctx)[0]
                below = szego_K(mpc(x0, -e), frame.d_series, alpha, beta, ctx)[0]
                samples.append(above + below - target)
            return samples, x0

        add_scalar("K", "(alpha,beta)", k_band)

        # --- Pi and the global parametrix -------------------------------------
        def matrix_rows(name, piece, point_fn, jump_fn, value_fn):
            for _ in range(points_per_piece):
                x0 = point_fn()
                jump = jump_fn(x0)
                samples = [
                    _mat_combo(
                        value_fn(mpc(x0, e)), value_fn(mpc(x0, -e)), jump
                    )
                    for e in eps
                ]
                rows.append(JumpResidual(
                    name, piece, x0, epsilons,
                    _extrapolated_matrix_norm(samples, eps),
                ))

        flip = ((mpf(0), mpf(1)), (mpf(-1), mpf(0)))
        band_point = lambda: draw(
            alpha + mpf("0.1") * width, beta - mpf("0.1") * width
        )
        matrix_rows(
            "Pi", "(alpha,beta)", band_point, lambda x0: flip,
            lambda z: pi_matrix(z, alpha, beta),
        )

        def s_band_jump(x0):
            d_val = frame.d_series(x0)
            return (
                (mpf(0), mp.exp(2 * d_val)),
                (-mp.exp(-2 * d_val), mpf(0)),
            )

        matrix_rows(
            "S_infinity", "(alpha,beta)", band_point, s_band_jump,
            lambda z: global_parametrix(z, frame),
        )

        if gf.regime == "supercritical":
            phase = mp.exp(-two_pi_i * gf.u_t)
            gap_jump = (
                (phase, mpf(0)), (mpf(0), 1 / phase),
            )
            matrix_rows(
                "S_infinity", "(beta,xstar)",
                lambda: draw(beta + mpf("0.1") * gap, x_star - mpf("0.1") * gap),
                lambda x0: gap_jump,
                lambda z: global_parametrix(z, frame),
            )

        # --- local Cauchy parametrix ------------------------------------------
        _, tau_fn = tau_Z(gf.regime, gf.n, gf.t, gf.report, gf, V, ctx,
                          radius=frame.radius)
        tau0 = mp.re(tau_fn(x_star))
        nu = frame.nu
        spec = WeightSpec.model(nu, tau0, ctx)
        trunc = spec.truncation_for(0, ctx)

        def psi_axis():
            s0 = draw(mpf("0.2"), mpf("0.8") * min(2, trunc.hi))
            if rng.random() < mpf("0.5"):
                s0 = -s0
            weight = mp.exp(-(s0 ** (2 * nu)) + tau0 * s0)
            samples = []
            for e in eps:
                above = cauchy_parametrix(mpc(s0, e), tau0, nu, ctx)[0][1]
                below = cauchy_parametrix(mpc(s0, -e), tau0, nu, ctx)[0][1]
                samples.append(above - below - weight)
            return samples, s0

        add_scalar("Psi_cauchy", "real-axis", psi_axis)

    return tuple(rows)


def jump_residuals_to_csv(rows):
    """Serialize jump residuals to CSV (object, piece, point, residual)."""
    lines = ["object,piece,point,residual"]
    for row in rows:
        lines.append("%s,%s,%s,%s" % (
            row.object_name,
            row.piece,
            mpmath.nstr(row.point, 17),
            mpmath.nstr(row.residual, 8),
        ))
    return "\n".join(lines) + "\n"
