r"""One-cut equilibrium measures and critical-point machinery.

Given a polynomial confining potential V and a temperature-like parameter
t > 0, the minimizing unit measure of

    I(mu) = -iint log|x-y| dmu(x) dmu(y) + (1/t) int V dmu

is supported on a single interval [a_t, b_t] (in the regime this module
handles) with density

    rho_t(x) = (1/(2 pi t)) * hpoly(x) * sqrt((b_t - x)(x - a_t)),

where hpoly is a polynomial.  The module solves for the endpoints and
hpoly, evaluates the effective potential whose sign structure certifies
the minimizer, locates points where the off-support inequality saturates
(where a new support interval is about to open), and synthesizes
potentials that are exactly critical at a prescribed point with a
prescribed even order of vanishing.

Everything is computed through exact Chebyshev moments of polynomial
data, so endpoint equations and densities carry no quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpf, mpc

from .chebyshev import (
    ChebSeries,
    cauchy_integral_u_weight,
    cauchy_integral_u_weight_pv,
    exterior_root,
    log_integral_u_weight,
    log_integral_u_weight_onband,
    mass_t_weight,
    mass_u_weight,
)
from .numerics import Interval, Polynomial, PrecisionContext, integrate


class EquilibriumError(Exception):
    """Base class for equilibrium-solver failures."""


class NotOneCutError(EquilibriumError):
    """The density prefactor changes sign: not one-cut for this (V, t)."""


class EndpointSolveError(EquilibriumError):
    """Newton iteration on the endpoint conditions failed to converge."""


class NoCriticalPointError(EquilibriumError):
    """The effective potential stays strictly negative on the search window."""


class AmbiguousOrderError(EquilibriumError):
    """The vanishing order estimate is not close to an even integer."""


class SynthesisError(EquilibriumError):
    """No admissible potential found; widen the prefactor degree."""


class Potential:
    """A polynomial confining potential.

    Must have even degree >= 2 and positive leading coefficient, which
    guarantees faster-than-logarithmic growth on both ends of the real
    axis.  ``note`` records where the potential came from (synthesis
    parameters or "user-supplied").
    """

    def __init__(self, poly, note="user-supplied"):
        if not isinstance(poly, Polynomial):
            poly = Polynomial([mpf(c) for c in poly])
        degree = len(poly.coeffs) - 1
        if degree < 2 or degree % 2 != 0:
            raise ValueError("potential degree must be even and at least 2")
        if not poly.coeffs[-1] > 0:
            raise ValueError("potential leading coefficient must be positive")
        if any(isinstance(c, mpc) for c in poly.coeffs):
            raise ValueError("potential coefficients must be real")
        self.poly = poly
        self.note = str(note)
        self.derivative = poly.derivative()

    def __call__(self, x):
        return self.poly(x)

    @property
    def degree(self):
        return self.poly.degree

    def to_text(self):
        """Serialize as ascending coefficients, one per line, '#' header."""
        lines = ["# potential: %s" % self.note]
        lines += ["# coefficients in ascending degree, one per line"]
        lines += [mpmath.nstr(c, 40) for c in self.poly.coeffs]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        note = "user-supplied"
        coeffs = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("potential:"):
                    note = body[len("potential:"):].strip()
                continue
            coeffs.append(mpf(line))
        return cls(Polynomial(coeffs), note=note)


@dataclass(frozen=True)
class OneCutMeasure:
    """Equilibrium measure data: rho = hpoly * sqrt((b-x)(x-a)) / (2 pi t)."""

    t: mpf
    a: mpf
    b: mpf
    hpoly: Polynomial
    l_t: mpf

    @property
    def support(self):
        return Interval(self.a, self.b)

    def density_series(self, ctx):
        """Chebyshev expansion of the density prefactor hpoly/(2 pi t)."""
        with ctx.guarded():
            scaled = (1 / (2 * mp.pi * self.t)) * self.hpoly
        return ChebSeries.from_polynomial(scaled, self.support, ctx)

    def density(self, x):
        x = mpf(x)
        if not (self.a <= x <= self.b):
            return mpf(0)
        return (
            self.hpoly(x)
            * mp.sqrt((self.b - x) * (x - self.a))
            / (2 * mp.pi * self.t)
        )


@dataclass(frozen=True)
class CriticalReport:
    """Where and how the off-support equality saturates.

    ``c_star`` is the per-degree deficiency -E(x*)/2 (multiply by n for
    the exponential rate at matrix size n); ``strictness_margin`` is the
    smallest value of -E over off-support samples away from x*;
    ``q_poly`` is the recovered analytic prefactor as a polynomial (its
    value at x* is the reported scalar).
    """

    x_star: mpf
    nu: int
    q_at_xstar: mpf
    phi_at_xstar: mpf
    c_star: mpf
    strictness_margin: mpf
    q_poly: Polynomial = None

    def __post_init__(self):
        if self.nu < 1:
            raise ValueError("vanishing order parameter must be >= 1")


def _tmoment_series(poly, interval, ctx):
    """ChebSeries of a Polynomial for inverse-sqrt-weight moments."""
    return ChebSeries.from_polynomial(poly, interval, ctx)


def _endpoint_conditions(vprime, m_, r_, t, ctx):
    """The two exact moment conditions for support endpoints.

    F1 = int V'(s) / sqrt((b-s)(s-a)) ds          (must vanish)
    F2 = int s V'(s) / sqrt((b-s)(s-a)) ds - 2 pi t   (must vanish)
    """
    iv = Interval(m_ - r_, m_ + r_)
    s1 = _tmoment_series(vprime, iv, ctx)
    x_vp = Polynomial([mpf(0), mpf(1)]) * vprime
    s2 = _tmoment_series(x_vp, iv, ctx)
    return mass_t_weight(s1), mass_t_weight(s2) - 2 * mp.pi * t


def _newton_endpoints(vp, vpp, t, ctx, m0, r0, max_iter):
    """Damped Newton on the two moment conditions, exact Jacobian.

    All Jacobian entries are inverse-sqrt-weight moments of V', V'' and
    their first two power multiples, so each step is quadrature-free.
    """
    m_, r_ = mpf(m0), mpf(r0)
    x_poly = Polynomial([mpf(0), mpf(1)])
    tol = ctx.abs_tol * (1 + 2 * mp.pi * t)
    f1, f2 = _endpoint_conditions(vp, m_, r_, t, ctx)
    for _ in range(max_iter):
        if abs(f1) <= tol and abs(f2) <= tol:
            return m_, r_
        iv = Interval(m_ - r_, m_ + r_)
        svpp = _tmoment_series(vpp, iv, ctx)
        s_xvpp = _tmoment_series(x_poly * vpp, iv, ctx)
        s_vp = _tmoment_series(vp, iv, ctx)
        s_xvp = _tmoment_series(x_poly * vp, iv, ctx)
        # centered variable u = (s-m)/r: dF/dm needs moments of V'',
        # dF/dr needs the u-weighted ones, i.e. ((s-m)/r)-moments
        m0_vpp = mass_t_weight(svpp)
        m1_vpp = mass_t_weight(s_xvpp)
        u_vpp = (m1_vpp - m_ * m0_vpp) / r_
        m0_vp = mass_t_weight(s_vp)
        m1_vp = mass_t_weight(s_xvp)
        s_x2vpp = _tmoment_series(x_poly * (x_poly * vpp), iv, ctx)
        m2_vpp = mass_t_weight(s_x2vpp)
        u_xvpp = (m2_vpp - m_ * m1_vpp) / r_
        j11, j12 = m0_vpp, u_vpp
        j21 = m0_vp + m1_vpp
        j22 = (m1_vp - m_ * m0_vp) / r_ + u_xvpp
        det = j11 * j22 - j12 * j21
        if det == 0:
            raise EndpointSolveError("singular Jacobian in endpoint solve")
        dm = -(f1 * j22 - f2 * j12) / det
        dr = -(j11 * f2 - j21 * f1) / det
        # backtrack until the residual shrinks, keeping the halfwidth
        # positive; roundoff-floor steps pass through the tol branch
        lam, accepted = mpf(1), False
        while lam > mpf(2) ** -40:
            m_new, r_new = m_ + lam * dm, r_ + lam * dr
            if r_new > 0:
                g1, g2 = _endpoint_conditions(vp, m_new, r_new, t, ctx)
                if abs(g1) + abs(g2) < abs(f1) + abs(f2) or (
                    abs(g1) <= tol and abs(g2) <= tol
                ):
                    accepted = True
                    break
            lam /= 2
        if not accepted:
            raise EndpointSolveError(
                "endpoint iteration failed to converge (step collapsed)"
            )
        m_, r_, f1, f2 = m_new, r_new, g1, g2
    raise EndpointSolveError("endpoint iteration failed to converge")


def solve_one_cut(V, t, ctx, initial=None, max_iter=80):
    """Solve the endpoint equations and recover the full measure.

    Newton iteration in midpoint/halfwidth coordinates; on failure from
    the scaled default start, retries from a short ladder of wider
    initial supports before giving up.  Raises NotOneCutError if the
    recovered density prefactor changes sign on the support,
    EndpointSolveError if no iteration converges.
    """
    t = mpf(t)
    if not t > 0:
        raise ValueError("t must be positive")
    vp = V.derivative
    vpp = vp.derivative()
    with ctx.guarded():
        if initial is not None:
            starts = [(mpf(initial[0]), mpf(initial[1]))]
        else:
            heur = 2 * mp.sqrt(t) / mp.sqrt(max(mpf(1), V.poly.coeffs[-1]))
            starts = [(mpf(0), heur), (mpf(0), mpf(2)), (mpf(0), mpf(4))]
        last_error = None
        for m0, r0 in starts:
            try:
                m_, r_ = _newton_endpoints(vp, vpp, t, ctx, m0, r0, max_iter)
                break
            except EndpointSolveError as err:
                last_error = err
        else:
            raise last_error

        a, b = m_ - r_, m_ + r_
        hpoly = _divided_difference_prefactor(vp, Interval(a, b), ctx)
        # positivity of the prefactor on the support
        for k in range(401):
            xk = a + (b - a) * mpf(k) / 400
            if hpoly(xk) < -mpf(10) * ctx.abs_tol:
                raise NotOneCutError("not one-cut for this (V, t)")
        measure = OneCutMeasure(t=t, a=ctx.round(a), b=ctx.round(b),
                                hpoly=hpoly, l_t=mpf(0))
        series = measure.density_series(ctx)
        mass = mass_u_weight(series)
        if abs(mass - 1) > mpf(10) ** 6 * ctx.abs_tol:
            raise EquilibriumError(
                "solved measure has mass %s, not 1" % mpmath.nstr(mass, 10)
            )
        l_t = 2 * log_integral_u_weight_onband(series, b) - V(b) / t
    return OneCutMeasure(t=measure.t, a=measure.a, b=measure.b,
                         hpoly=hpoly, l_t=ctx.round(l_t))


def _divided_difference_prefactor(vprime, support, ctx):
    """hpoly(x) = (1/pi) int (V'(x)-V'(s)) / ((x-s) sqrt((b-s)(s-a))) ds.

    The divided difference is a polynomial in x and s, so the integral
    reduces to pure power moments against the inverse-sqrt weight; the
    result is exact.
    """
    with ctx.guarded():
        coeffs = list(vprime.coeffs)
        deg = len(coeffs) - 1
        # moments M_k = int s^k / sqrt((b-s)(s-a)) ds, exact for all k used
        moments = []
        for k in range(max(deg, 1)):
            sk = ChebSeries.from_polynomial(
                Polynomial([mpf(0)] * k + [mpf(1)]), support, ctx
            )
            moments.append(mass_t_weight(sk))
        out = [mpf(0)] * max(deg, 1)
        for j in range(1, deg + 1):
            cj = coeffs[j]
            if cj == 0:
                continue
            for i in range(j):
                out[i] += cj * moments[j - 1 - i]
        return Polynomial([c / mp.pi for c in out])


def effective_potential(measure, V, x, ctx):
    """E_t(x) = 2 int log|x-s| rho_t(s) ds - V(x)/t - l_t.

    Zero on the support, strictly negative off it for a regular
    equilibrium measure; a zero off support marks an incipient band.
    """
    x = mpf(x)
    series = measure.density_series(ctx)
    with ctx.guarded():
        if measure.a <= x <= measure.b:
            u = log_integral_u_weight_onband(series, x)
        else:
            u = mpmath.re(log_integral_u_weight(series, x))
        value = 2 * u - V(x) / measure.t - measure.l_t
    return ctx.round(value)


def _effective_potential_slope(measure, series, V, x):
    """E_t'(x) off support: 2 int rho/(x-s) ds - V'(x)/t."""
    return 2 * mpmath.re(cauchy_integral_u_weight(series, x)) - V.derivative(x) / measure.t


def detect_critical_point(measure, V, search, ctx, tol=None, collar=mpf("0.1")):
    """Find where the off-support inequality saturates, and classify it.

    Scans ``search`` (an Interval disjoint from the support) for the
    maximizer of the effective potential, accepts it when |E| <= tol,
    estimates the (even) order of vanishing from a log-log slope over
    dyadic offsets, and recovers the analytic prefactor value at the
    point.

    Raises
    ------
    NoCriticalPointError
        If the maximum of E over the window is negative beyond tolerance.
    AmbiguousOrderError
        If the slope is farther than 0.2 from an even integer.
    """
    if tol is None:
        tol = mpf(10) ** -8
    lo, hi = mpf(search.lo), mpf(search.hi)
    if not (hi <= measure.a or lo >= measure.b):
        raise ValueError("search window must be disjoint from the support")
    series = measure.density_series(ctx)
    with ctx.guarded():
        # bracket sign changes of E' on a scan grid
        npts = 256
        grid = [lo + (hi - lo) * mpf(k) / npts for k in range(npts + 1)]
        slopes = [_effective_potential_slope(measure, series, V, g) for g in grid]
        candidates = []
        for k in range(npts):
            if slopes[k] == 0:
                candidates.append(grid[k])
            elif slopes[k] * slopes[k + 1] < 0:
                a_, b_ = grid[k], grid[k + 1]
                for _ in range(ctx.bits + 40):
                    mid = (a_ + b_) / 2
                    sm = _effective_potential_slope(measure, series, V, mid)
                    if sm == 0 or (b_ - a_) <= abs(mid) * ctx.rel_tol:
                        break
                    if sm * slopes[k] > 0:
                        a_ = mid
                    else:
                        b_ = mid
                candidates.append((a_ + b_) / 2)
        if not candidates:
            raise NoCriticalPointError("no critical point")
        best = max(candidates, key=lambda c: effective_potential(measure, V, c, ctx))
        e_best = effective_potential(measure, V, best, ctx)
        if abs(e_best) > tol:
            raise NoCriticalPointError(
                "no critical point: max E = %s" % mpmath.nstr(e_best, 8)
            )
        x_star = best

        # order of vanishing: log-log least squares over dyadic offsets
        hs = [mpf(10) ** (-1 - 2 * mpf(j) / 7) for j in range(8)]
        pts = []
        for h_ in hs:
            val = effective_potential(measure, V, x_star + h_, ctx)
            if val == 0:
                continue
            pts.append((mp.log(h_), mp.log(abs(val))))
        n_ = len(pts)
        sx = mpmath.fsum(p[0] for p in pts)
        sy = mpmath.fsum(p[1] for p in pts)
        sxx = mpmath.fsum(p[0] ** 2 for p in pts)
        sxy = mpmath.fsum(p[0] * p[1] for p in pts)
        slope = (n_ * sxy - sx * sy) / (n_ * sxx - sx * sx)
        nearest_even = max(2, 2 * int(mp.nint(slope / 2)))
        if abs(slope - nearest_even) > mpf("0.2"):
            raise AmbiguousOrderError(
                "vanishing order ambiguous: slope %s" % mpmath.nstr(slope, 6)
            )
        nu = nearest_even // 2

        # prefactor at x*: hpoly/(t (x-x*)^(2nu-1)) sampled inside the
        # support and fitted by a polynomial of the residual degree
        q_at, q_poly = _prefactor_at_xstar(measure, x_star, nu, ctx)

        m_, r_ = measure.support.mid, measure.support.halfwidth
        phi_at = mp.log(abs(exterior_root((x_star - m_) / r_)))
        c_star = -e_best / 2

        margin = _strictness_margin(measure, V, x_star, collar, ctx)
    return CriticalReport(
        x_star=ctx.round(x_star),
        nu=nu,
        q_at_xstar=ctx.round(q_at),
        phi_at_xstar=ctx.round(phi_at),
        c_star=ctx.round(c_star),
        strictness_margin=ctx.round(margin),
        q_poly=q_poly,
    )


def _prefactor_at_xstar(measure, x_star, nu, ctx):
    """Fit hpoly(x)/(t (x-x*)^(2nu-1)) through interior samples.

    The ratio is a polynomial whenever the measure is exactly critical;
    a least-squares fit through interior samples extrapolates it to x*
    stably in the near-critical case too.  Returns (value at x*, fitted
    Polynomial in x).
    """
    deg = max(len(measure.hpoly.coeffs) - 1 - (2 * nu - 1), 0)
    m_, r_ = measure.support.mid, measure.support.halfwidth
    npts = 2 * (deg + 1) + 7
    xs = [m_ + mpf("0.9") * r_ * mp.cos(mp.pi * (2 * j + 1) / (2 * npts)) for j in range(npts)]
    ys = [measure.hpoly(xk) / (measure.t * (xk - x_star) ** (2 * nu - 1)) for xk in xs]
    # normal equations in the monomial basis of (x - m)/r
    cols = deg + 1
    ata = [[mpf(0)] * cols for _ in range(cols)]
    atb = [mpf(0)] * cols
    for xk, yk in zip(xs, ys):
        u = (xk - m_) / r_
        row = [u ** i for i in range(cols)]
        for i in range(cols):
            atb[i] += row[i] * yk
            for j in range(cols):
                ata[i][j] += row[i] * row[j]
    sol = _solve_dense(ata, atb)
    fitted = Polynomial(sol).compose_affine(-m_ / r_, 1 / r_)
    return fitted(x_star), fitted


def _solve_dense(a, b):
    """Gaussian elimination with partial pivoting on small systems."""
    n = len(b)
    m_ = [row[:] + [b[i]] for i, row in enumerate(a)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(m_[r][col]))
        if m_[piv][col] == 0:
            raise ValueError("singular linear system")
        m_[col], m_[piv] = m_[piv], m_[col]
        for r in range(col + 1, n):
            f = m_[r][col] / m_[col][col]
            for c in range(col, n + 1):
                m_[r][c] -= f * m_[col][c]
    out = [mpf(0)] * n
    for r in range(n - 1, -1, -1):
        acc = m_[r][n] - mpmath.fsum(m_[r][c] * out[c] for c in range(r + 1, n))
        out[r] = acc / m_[r][r]
    return out


def _strictness_margin(measure, V, x_star, collar, ctx):
    """min of -E over off-support samples, skipping endpoint and x* collars."""
    samples = []
    a, b = measure.a, measure.b
    width = b - a
    edge = mpf("0.05")
    for k in range(1, 26):
        xr = b + edge + (x_star - b + width) * mpf(k) / 25
        if abs(xr - x_star) >= collar:
            samples.append(xr)
        xl = a - edge - width * mpf(k) / 25
        if abs(xl - x_star) >= collar:
            samples.append(xl)
    vals = [-effective_potential(measure, V, xk, ctx) for xk in samples]
    return min(vals)


def arcsine_log_potential(x):
    """int over [-2,2] of log(x-s)/(pi sqrt(4-s^2)) ds.

    Vanishes identically on [-2, 2] (the interval has logarithmic
    capacity one); equals log of the exterior conformal radius off it.
    Accepts complex x, principal branch.
    """
    if isinstance(x, mpc) or isinstance(x, complex):
        return mp.log(exterior_root(mpc(x) / 2))
    x = mpf(x)
    if -2 <= x <= 2:
        return mpf(0)
    return mp.log(abs(exterior_root(x / 2)))


def phi(x):
    """Green's-function rate log((x + sqrt(x^2-4))/2) for x > 2."""
    x = mpf(x)
    if not x > 2:
        raise ValueError("phi requires x > 2")
    return mp.log((x + mp.sqrt(x * x - 4)) / 2)


def br_derivative_check(V, t_list, ctx, grid_points=40):
    """Convergence table for the derivative of t -> t*rho_t toward the
    arcsine density of the limiting support.

    For each t < 1 the row records sup over an interior grid of
    |(t rho_t(x) - rho_1(x))/(t-1) - w(x)| where w(x) = 1/(pi sqrt(4-x^2));
    first-order convergence in 1-t is expected.
    """
    ts = [mpf(t) for t in t_list]
    if any(t >= 1 for t in ts):
        raise ValueError("all t values must be < 1")
    base = solve_one_cut(V, mpf(1), ctx)
    smallest = solve_one_cut(V, min(ts), ctx)
    m_, r_ = smallest.support.mid, smallest.support.halfwidth
    grid = [
        m_ + mpf("0.95") * r_ * mp.cos(mp.pi * (2 * j + 1) / (2 * grid_points))
        for j in range(grid_points)
    ]
    rows = []
    for t in ts:
        mt = solve_one_cut(V, t, ctx)
        sup = mpf(0)
        for x in grid:
            quotient = (t * mt.density(x) - base.density(x)) / (t - 1)
            w = 1 / (mp.pi * mp.sqrt((base.b - x) * (x - base.a)))
            sup = max(sup, abs(quotient - w))
        rows.append((t, sup))
    return rows


_SQRT_LAURENT_TERMS = 40


def _polynomial_part_h_times_sqrt(h):
    """Polynomial part of h(z) sqrt(z^2-4) from the exact Laurent tail.

    sqrt(z^2-4) = z - sum_{k>=1} 2 Cat(k-1) z^(1-2k) with integer Catalan
    numbers, so the polynomial part of z^i sqrt(z^2-4) keeps the terms
    with nonnegative exponent.
    """
    catalan = [mpf(1)]
    for k in range(1, _SQRT_LAURENT_TERMS):
        catalan.append(catalan[-1] * 2 * (2 * k - 1) / (k + 1))
    deg = len(h.coeffs) - 1
    out = [mpf(0)] * (deg + 2)
    for i, hi in enumerate(h.coeffs):
        if hi == 0:
            continue
        out[i + 1] += hi
        for k in range(1, (i + 1) // 2 + 1):
            out[i + 1 - 2 * k] -= hi * 2 * catalan[k - 1]
    return Polynomial(out)


def synthesize_birth_potential(x_star, nu, ctx):
    """Construct a potential exactly critical at x_star with order 2 nu.

    The density prefactor is taken as Q(z)(z-x_star)^(2nu-1) with Q of
    degree one; the unit-mass condition and the vanishing of the
    effective potential at x_star determine Q by two-dimensional root
    finding (the system happens to be linear in the coefficients, so the
    Newton step is exact).  The potential follows by integrating the
    polynomial part of prefactor * sqrt(z^2-4).

    Returns the potential together with the detection report of its own
    critical point (a full round trip through the solver).
    """
    x_star = mpf(x_star)
    if not x_star > 2:
        raise ValueError("the critical point must lie to the right of 2")
    if int(nu) != nu or nu < 1:
        raise ValueError("the order parameter must be a positive integer")
    nu = int(nu)
    with ctx.guarded():
        sol = _solve_q_coefficients(x_star, nu, ctx, degree=1)
        V, report = _assemble_and_verify(sol, x_star, nu, ctx)
        if V is None:
            sol = _solve_q_coefficients(x_star, nu, ctx, degree=2)
            V, report = _assemble_and_verify(sol, x_star, nu, ctx)
            if V is None:
                raise SynthesisError("synthesis failed; widen Q degree")
    return V, report


def _band_factor_poly(x_star, nu, qcoeffs):
    """h(z) = Q(z) (z - x_star)^(2nu-1) as an explicit Polynomial."""
    q = Polynomial(list(qcoeffs))
    shift = Polynomial([-x_star, mpf(1)])
    h = q
    for _ in range(2 * nu - 1):
        h = h * shift
    return h


def _synthesis_residuals(qcoeffs, x_star, nu, ctx):
    """(mass - 1, E(x_star)) for the candidate prefactor coefficients."""
    h = _band_factor_poly(x_star, nu, qcoeffs)
    band = Interval(mpf(-2), mpf(2))
    series = ChebSeries.from_polynomial((1 / (2 * mp.pi)) * h, band, ctx)
    mass = mass_u_weight(series)
    # E(x*) = -int_2^{x*} h(s) sqrt(s^2-4) ds; substitute s = 2 + u^2 to
    # put the square-root vanishing at an endpoint of a smooth integrand
    umax = mp.sqrt(x_star - 2)
    e_val = -integrate(
        lambda u: h(2 + u * u) * mp.sqrt((u * u + 4) * u * u) * 2 * u,
        Interval(mpf(0), umax),
        ctx,
    )
    return mass - 1, e_val


def _solve_q_coefficients(x_star, nu, ctx, degree):
    """Root-find the prefactor coefficients for the two (or three)
    synthesis constraints."""
    ncoef = degree + 1
    coef = [mpf(0)] * ncoef
    coef[-1] = mpf(1)

    def residual_vector(c):
        r1, r2 = _synthesis_residuals(c, x_star, nu, ctx)
        if ncoef == 2:
            return [r1, r2]
        # third constraint for the widened prefactor: unit value at x*
        q = Polynomial(list(c))
        return [r1, r2, q(x_star) - 1]

    # Newton with forward-difference Jacobian; the constraints are
    # linear in the coefficients so one step lands on the solution,
    # further steps polish roundoff
    step = mpf(2) ** (-ctx.bits // 2)
    for _ in range(6):
        r0 = residual_vector(coef)
        if max(abs(v) for v in r0) <= ctx.abs_tol * 100:
            break
        jac = []
        for j in range(ncoef):
            bumped = list(coef)
            bumped[j] += step
            rj = residual_vector(bumped)
            jac.append([(rj[i] - r0[i]) / step for i in range(ncoef)])
        a = [[jac[j][i] for j in range(ncoef)] for i in range(ncoef)]
        delta = _solve_dense(a, [-v for v in r0])
        coef = [coef[j] + delta[j] for j in range(ncoef)]
    return coef


def _assemble_and_verify(qcoeffs, x_star, nu, ctx):
    """Build V from the prefactor and run the admissibility gauntlet."""
    q = Polynomial(list(qcoeffs))
    h = _band_factor_poly(x_star, nu, qcoeffs)
    vprime = _polynomial_part_h_times_sqrt(h)
    if not vprime.coeffs[-1] > 0:
        return None, None
    v_poly = vprime.antiderivative()
    # positivity of the density prefactor h on (-2, 2)
    for k in range(1, 400):
        xk = -2 + 4 * mpf(k) / 400
        if h(xk) < 0:
            return None, None
    if not q(x_star) > 0:
        return None, None
    note = "synthesized: critical point %s, order %d" % (
        mpmath.nstr(x_star, 12), 2 * nu,
    )
    V = Potential(v_poly, note=note)
    measure = solve_one_cut(V, mpf(1), ctx, initial=(mpf(0), mpf(2)))
    search = Interval(measure.b + mpf("0.05"), x_star + 2)
    report = detect_critical_point(measure, V, search, ctx)
    # a second saturation point off support would disqualify the potential
    if report.strictness_margin <= 0:
        return None, None
    return V, report


def q_identity_check(measure, V, x, ctx):
    """Residual between the two analytic expressions for the spectral
    curve at a point off the support.

    Route one subtracts the divided-difference moment of the density
    from (V'/2t)^2; route two squares the shifted Stieltjes transform.
    Both are evaluated through independent transform paths and must
    agree wherever the measure is a true equilibrium measure.
    """
    x = mpf(x)
    if measure.a < x < measure.b:
        raise ValueError("the identity check point must be off the support")
    series = measure.density_series(ctx)
    t = measure.t
    with ctx.guarded():
        # divided difference (V'(x) - V'(s))/(x - s) as a polynomial in s
        quot, _ = V.derivative.deflate(x)
        dd_series = ChebSeries.from_polynomial(
            quot * ((1 / (2 * mp.pi * t)) * measure.hpoly), measure.support, ctx
        )
        route_one = (V.derivative(x) / (2 * t)) ** 2 - mass_u_weight(dd_series) / t
        stieltjes = -mpmath.re(cauchy_integral_u_weight(series, x))
        route_two = (stieltjes + V.derivative(x) / (2 * t)) ** 2
    return ctx.round(abs(route_one - route_two))
