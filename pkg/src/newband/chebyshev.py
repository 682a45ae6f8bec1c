r"""Chebyshev expansions with closed-form log and Cauchy transforms.

Densities in this package are supported on a single interval [A, B] and
factor as a smooth prefactor times sqrt((s-A)(B-s)) or its reciprocal.
Expanding the prefactor in Chebyshev polynomials reduces every logarithmic
potential and Cauchy transform we need to classical closed-form moments:
with s = m + r*u, x = m + r*v, and w = v + sqrt(v-1)sqrt(v+1) (|w| >= 1,
the exterior root of the Joukowski map),

    int T_k(u)/sqrt(1-u^2) * log(v-u) du   = pi*log(w/2)        (k = 0)
                                           = -(pi/k) w^-k       (k >= 1)
    int T_k(u)/(sqrt(1-u^2)(v-u)) du       = pi w^-k / S(v),    S = sqrt(v-1)sqrt(v+1)
    int U_k(u) sqrt(1-u^2) log(v-u) du     = (pi/2)log(w/2) + (pi/4)w^-2          (k = 0)
                                           = -(pi/2)(w^-k/k - w^-(k+2)/(k+2))     (k >= 1)
    int U_k(u) sqrt(1-u^2)/(v-u) du        = pi w^-(k+1)

together with their boundary versions on the interval itself (w = e^{i phi},
phi = arccos v; principal values replace w^-k by cos(k phi) resp. Chebyshev
polynomials).  For polynomial prefactors the expansions are finite and the
results are exact at working precision; for analytic prefactors the
coefficients decay geometrically.

The identities follow from the Fourier series
log|v - cos(theta)| = log(|w|/2) - sum 2 w^-m cos(m theta)/m and the residue
evaluation of the Chebyshev Cauchy transforms; see Mason & Handscomb,
"Chebyshev Polynomials", chapter 9.
"""

from __future__ import annotations

import mpmath
from mpmath import mp, mpf, mpc

from .numerics import Interval, Polynomial


def exterior_root(v):
    """w = v + sqrt(v-1)*sqrt(v+1), the |w|>=1 branch of v = (w+1/w)/2.

    Real for real v with |v| >= 1 (negative if v <= -1); on (-1, 1) the
    upper-half-plane boundary value e^{i arccos v} is returned.
    """
    if isinstance(v, (int, float, mpf)):
        v = mpf(v)
        if -1 <= v <= 1:
            return mpc(v, mp.sqrt(1 - v * v))
        s = mp.sqrt(v * v - 1)
        return v + s if v > 0 else v - s
    return v + mp.sqrt(v - 1) * mp.sqrt(v + 1)


def _monomial_to_cheb_t(mono):
    """Monomial coefficients on [-1,1] -> Chebyshev T coefficients (exact)."""
    # rep[k] holds the T-coefficients of u^k; built from u*T_j = (T_{j+1}+T_{j-1})/2
    out = [mpf(0)] * max(len(mono), 1)
    rep = [mpf(1)]
    for k, c in enumerate(mono):
        if k:
            new = [mpf(0)] * (len(rep) + 1)
            for j, a in enumerate(rep):
                if a == 0:
                    continue
                if j == 0:
                    new[1] += a
                else:
                    new[j + 1] += a / 2
                    new[j - 1] += a / 2
            rep = new
        if c != 0:
            for j, a in enumerate(rep):
                out[j] = out[j] + c * a if j < len(out) else c * a
            if len(rep) > len(out):
                out.extend(c * a for a in rep[len(out):])
    return out


class ChebSeries:
    """Chebyshev T expansion of a smooth function on an interval.

    ``coeffs[k]`` multiplies T_k((s-m)/r); no halving convention on the
    k = 0 term.  Instances are immutable in practice and cache the derived
    U-basis coefficients.
    """

    def __init__(self, interval, coeffs):
        self.interval = interval
        cs = list(coeffs) if coeffs else [mpf(0)]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)
        self._u_coeffs = None

    @classmethod
    def from_polynomial(cls, poly, interval, ctx):
        """Exact expansion of a Polynomial on the interval."""
        with ctx.guarded():
            shifted = poly.compose_affine(interval.mid, interval.halfwidth)
            return cls(interval, _monomial_to_cheb_t(list(shifted.coeffs)))

    @classmethod
    def from_function(cls, f, interval, ctx, initial=16, max_doublings=9):
        """Adaptive expansion of an analytic function on the interval.

        Samples at Chebyshev-Gauss points, doubling the count until the
        trailing quarter of the coefficient tail falls below the precision
        floor relative to the largest coefficient.
        """
        with ctx.guarded():
            m, r = interval.mid, interval.halfwidth
            floor = mpf(2) ** (-(ctx.bits + 8))
            n = initial
            for _ in range(max_doublings + 1):
                thetas = [mp.pi * (2 * j + 1) / (2 * n) for j in range(n)]
                vals = [f(m + r * mp.cos(t)) for t in thetas]
                coeffs = []
                for k in range(n):
                    s = mpmath.fsum(
                        vals[j] * mp.cos(k * thetas[j]) for j in range(n)
                    )
                    coeffs.append(s * (1 if k == 0 else 2) / n)
                scale = max(abs(c) for c in coeffs) or mpf(1)
                tail = max(abs(c) for c in coeffs[-max(2, n // 4):])
                if tail <= scale * floor:
                    while len(coeffs) > 1 and abs(coeffs[-1]) <= scale * floor:
                        coeffs.pop()
                    return cls(interval, coeffs)
                n *= 2
            raise ValueError(
                "Chebyshev expansion did not resolve the function; "
                "tail/scale = %s" % (tail / scale)
            )

    def u_coeffs(self):
        """Coefficients of the same function in the U basis."""
        if self._u_coeffs is None:
            a = list(self.coeffs) + [mpf(0), mpf(0)]
            cs = [a[0] - a[2] / 2]
            cs.extend((a[k] - a[k + 2]) / 2 for k in range(1, len(self.coeffs)))
            while len(cs) > 1 and cs[-1] == 0:
                cs.pop()
            self._u_coeffs = tuple(cs)
        return self._u_coeffs

    def __call__(self, x):
        """Evaluate by the Clenshaw recurrence; accepts complex x."""
        v = (x - self.interval.mid) / self.interval.halfwidth
        b1 = b2 = mpf(0)
        for c in reversed(self.coeffs[1:]):
            b1, b2 = 2 * v * b1 - b2 + c, b1
        return v * b1 - b2 + self.coeffs[0]

    def _v(self, x):
        return (x - self.interval.mid) / self.interval.halfwidth


# ---------------------------------------------------------------------------
# transforms of f(s) * sqrt((s-A)(B-s))   (U weight)
# ---------------------------------------------------------------------------

def mass_u_weight(series):
    """int f(s) sqrt((s-A)(B-s)) ds."""
    r = series.interval.halfwidth
    return r * r * mp.pi / 2 * series.u_coeffs()[0]


def moment1_u_weight(series):
    """int s f(s) sqrt((s-A)(B-s)) ds."""
    c = series.u_coeffs()
    r, m = series.interval.halfwidth, series.interval.mid
    # s = m + r u; int u U_k sqrt = (pi/2) delta_{k,1} / ... : u = U_1/2
    first = c[1] if len(c) > 1 else mpf(0)
    return r * r * mp.pi / 2 * (m * c[0] + r * first / 2)


def log_integral_u_weight(series, x):
    """int f(s) sqrt((s-A)(B-s)) log(x-s) ds for x off the interval.

    Principal branch of the logarithm; for x on (-inf, A) the value is the
    boundary value from the upper half plane.
    """
    c = series.u_coeffs()
    r = series.interval.halfwidth
    v = series._v(x)
    w = exterior_root(v)
    wi = 1 / w
    total = c[0] * ((mp.pi / 2) * mp.log(r * w / 2) + (mp.pi / 4) * wi ** 2)
    wk = wi
    for k in range(1, len(c)):
        total += c[k] * (-(mp.pi / 2)) * (wk / k - wk * wi * wi / (k + 2))
        wk *= wi
    return r * r * total


def log_integral_u_weight_onband(series, x):
    """int f(s) sqrt((s-A)(B-s)) log|x-s| ds for real x in [A, B]."""
    c = series.u_coeffs()
    r = series.interval.halfwidth
    v = series._v(x)
    phi = mp.acos(max(mpf(-1), min(mpf(1), v)))
    total = c[0] * ((mp.pi / 2) * mp.log(r / 2) + (mp.pi / 4) * mp.cos(2 * phi))
    for k in range(1, len(c)):
        total += c[k] * (-(mp.pi / 2)) * (
            mp.cos(k * phi) / k - mp.cos((k + 2) * phi) / (k + 2)
        )
    return r * r * total


def cauchy_integral_u_weight(series, x):
    """int f(s) sqrt((s-A)(B-s)) / (x-s) ds for x off the interval."""
    c = series.u_coeffs()
    r = series.interval.halfwidth
    w = exterior_root(series._v(x))
    wi = 1 / w
    total = mpf(0)
    wk = wi
    for ck in c:
        total += ck * wk
        wk *= wi
    return r * mp.pi * total


def cauchy_integral_u_weight_pv(series, x):
    """PV int f(s) sqrt((s-A)(B-s)) / (x-s) ds for real x in (A, B)."""
    c = series.u_coeffs()
    r = series.interval.halfwidth
    v = series._v(x)
    phi = mp.acos(max(mpf(-1), min(mpf(1), v)))
    total = mpmath.fsum(c[k] * mp.cos((k + 1) * phi) for k in range(len(c)))
    return r * mp.pi * total


# ---------------------------------------------------------------------------
# transforms of f(s) / sqrt((s-A)(B-s))   (T weight)
# ---------------------------------------------------------------------------

def mass_t_weight(series):
    """int f(s) / sqrt((s-A)(B-s)) ds."""
    return mp.pi * series.coeffs[0]


def log_integral_t_weight(series, x):
    """int f(s)/sqrt((s-A)(B-s)) log(x-s) ds for x off the interval."""
    a = series.coeffs
    r = series.interval.halfwidth
    w = exterior_root(series._v(x))
    wi = 1 / w
    total = a[0] * mp.log(r * w / 2)
    wk = wi
    for k in range(1, len(a)):
        total -= a[k] * wk / k
        wk *= wi
    return mp.pi * total


def log_integral_t_weight_onband(series, x):
    """int f(s)/sqrt((s-A)(B-s)) log|x-s| ds for real x in [A, B]."""
    a = series.coeffs
    r = series.interval.halfwidth
    v = series._v(x)
    phi = mp.acos(max(mpf(-1), min(mpf(1), v)))
    total = a[0] * mp.log(r / 2)
    for k in range(1, len(a)):
        total -= a[k] * mp.cos(k * phi) / k
    return mp.pi * total


def cauchy_integral_t_weight(series, x):
    """int f(s)/(sqrt((s-A)(B-s)) (x-s)) ds for x off the interval."""
    a = series.coeffs
    r = series.interval.halfwidth
    v = series._v(x)
    w = exterior_root(v)
    s = mp.sqrt(v - 1) * mp.sqrt(v + 1)
    wi = 1 / w
    total = mpf(0)
    wk = mpf(1)
    for ak in a:
        total += ak * wk
        wk *= wi
    return mp.pi * total / (r * s)


def cauchy_integral_t_weight_pv(series, x):
    """PV int f(s)/(sqrt((s-A)(B-s)) (x-s)) ds for real x in (A, B)."""
    a = series.coeffs
    r = series.interval.halfwidth
    v = series._v(x)
    # the k = 0 moment vanishes; a_k pairs with U_{k-1}(v) for k >= 1
    total = mpf(0)
    u_prev, u_curr = mpf(1), 2 * v
    for k in range(1, len(a)):
        total += a[k] * u_prev
        u_prev, u_curr = u_curr, 2 * v * u_curr - u_prev
    return -mp.pi * total / r
