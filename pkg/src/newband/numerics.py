r"""Extended-precision quadrature, root finding and polynomial utilities.

Everything in this package ultimately reduces to a handful of numerical
primitives on mpmath numbers:

* adaptive integration of smooth integrands (``integrate`` with a ``plain``
  rule, a double-exponential ladder whose node count doubles per level),
* Gauss-type rules for densities carrying an explicit square-root factor
  ``sqrt((b-x)(x-a))`` or its reciprocal (second/first kind Chebyshev rules,
  which are exact for polynomial prefactors),
* Cauchy principal values (symmetric excision about the pole; the excised
  window is restored by integrating the symmetrized, regular combination
  ``f(p+u) + f(p-u)``),
* bracketed scalar root finding (bisection with secant acceleration).

All routines take a :class:`PrecisionContext` fixing the working precision in
bits and the absolute/relative tolerances used for convergence decisions.
Intermediate arithmetic runs with guard bits on top of ``ctx.bits``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import mpmath
from mpmath import mp, mpf, mpc


class NumericsError(Exception):
    """Base class for numerical failures in this package."""


class QuadratureError(NumericsError):
    """Adaptive quadrature failed to converge.

    Carries the last two estimates so the caller can judge how far apart
    they are.
    """

    def __init__(self, message, last=None, previous=None):
        super().__init__(message)
        self.last = last
        self.previous = previous


class PoleLocationError(NumericsError):
    """Principal-value pole is not strictly inside the interval."""


class BracketError(NumericsError):
    """Root bracket does not have a sign change."""


class ConvergenceError(NumericsError):
    """An iteration failed to reach the requested tolerance."""


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision and tolerances for one computation.

    Parameters
    ----------
    bits : int
        Mantissa bits for mpmath arithmetic; at least 53.  128 bits is
        enough for all identity checks; kernel experiments with degrees
        beyond ~24 want 256 or more.
    abs_tol, rel_tol : mpf, optional
        Convergence targets.  The defaults leave roughly 24 bits of
        headroom below the working precision.
    """

    bits: int = 128
    abs_tol: object = None
    rel_tol: object = None

    def __post_init__(self):
        if self.bits < 53:
            raise ValueError("PrecisionContext.bits must be >= 53")
        with mp.workprec(self.bits + 16):
            if self.abs_tol is None:
                object.__setattr__(self, "abs_tol", mpf(2) ** (24 - self.bits))
            else:
                object.__setattr__(self, "abs_tol", mpf(self.abs_tol))
            if self.rel_tol is None:
                object.__setattr__(self, "rel_tol", mpf(2) ** (24 - self.bits))
            else:
                object.__setattr__(self, "rel_tol", mpf(self.rel_tol))
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")

    @property
    def dps(self):
        """Decimal digits matching ``bits``."""
        return int(self.bits / 3.3219280948873626) - 1

    def guarded(self, extra=None):
        """Context manager raising the working precision with guard bits."""
        if extra is None:
            extra = max(16, self.bits // 4)
        return mp.workprec(self.bits + extra)

    def round(self, x):
        """Round ``x`` to the context's nominal precision."""
        with mp.workprec(self.bits):
            return +x

    def with_bits(self, bits):
        return PrecisionContext(bits=bits)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with lo < hi."""

    lo: object
    hi: object

    def __post_init__(self):
        object.__setattr__(self, "lo", mpf(self.lo))
        object.__setattr__(self, "hi", mpf(self.hi))
        if not self.lo < self.hi:
            raise ValueError("Interval requires lo < hi")

    @property
    def mid(self):
        return (self.lo + self.hi) / 2

    @property
    def halfwidth(self):
        return (self.hi - self.lo) / 2

    @property
    def width(self):
        return self.hi - self.lo

    def contains(self, x, strict=False):
        if strict:
            return self.lo < x < self.hi
        return self.lo <= x <= self.hi


class Polynomial:
    """Dense polynomial with coefficients in ascending degree order.

    Coefficients are mpmath reals (or complex); evaluation uses Horner's
    scheme and accepts real or complex arguments.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        cs = [x if isinstance(x, (mpf, mpc)) else mpf(x) for x in coeffs]
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        if not cs:
            cs = [mpf(0)]
        self.coeffs = tuple(cs)

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, x):
        acc = self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * x + c
        return acc

    def derivative(self):
        if self.degree == 0:
            return Polynomial([0])
        return Polynomial([k * c for k, c in enumerate(self.coeffs)][1:])

    def antiderivative(self, constant=0):
        out = [mpf(constant)]
        out.extend(c / (k + 1) for k, c in enumerate(self.coeffs))
        return Polynomial(out)

    def __add__(self, other):
        other = other if isinstance(other, Polynomial) else Polynomial([other])
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [mpf(0)] * (n - len(self.coeffs))
        b = list(other.coeffs) + [mpf(0)] * (n - len(other.coeffs))
        return Polynomial([x + y for x, y in zip(a, b)])

    def __sub__(self, other):
        other = other if isinstance(other, Polynomial) else Polynomial([other])
        return self + (other * -1)

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            out = [mpf(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
            for i, a in enumerate(self.coeffs):
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
            return Polynomial(out)
        return Polynomial([c * other for c in self.coeffs])

    __rmul__ = __mul__

    def compose_affine(self, shift, scale):
        """Return p(shift + scale*x) as a Polynomial in x."""
        acc = Polynomial([self.coeffs[-1]])
        lin = Polynomial([shift, scale])
        for c in reversed(self.coeffs[:-1]):
            acc = acc * lin + Polynomial([c])
        return acc

    def deflate(self, root):
        """Synthetic division by (x - root): returns (quotient, remainder)."""
        q = []
        acc = mpf(0)
        for c in reversed(self.coeffs):
            acc = acc * root + c
            q.append(acc)
        rem = q.pop()
        q = [x for x in reversed(q)]
        if not q:
            q = [mpf(0)]
        return Polynomial(q), rem

    def __repr__(self):
        return "Polynomial(%s)" % (list(self.coeffs),)


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and positive weights for one of the supported rule kinds.

    ``plain`` integrates dx, ``sqrt-endpoints`` integrates against
    sqrt((hi-x)(x-lo)) dx, ``chebyshev-first-kind`` against
    dx/sqrt((hi-x)(x-lo)); in the weighted kinds the weight factor is part
    of the rule, so the integrand passed to :func:`integrate` must *not*
    include it.
    """

    kind: str
    interval: Interval
    nodes: tuple
    weights: tuple

    def __post_init__(self):
        if self.kind not in ("plain", "sqrt-endpoints", "chebyshev-first-kind"):
            raise ValueError("unknown rule kind %r" % (self.kind,))
        if len(self.nodes) != len(self.weights) or not self.nodes:
            raise ValueError("nodes and weights must be nonempty, same length")
        if any(not (w > 0) for w in self.weights):
            raise ValueError("weights must be positive")
        if any(not self.interval.contains(x, strict=True) for x in self.nodes):
            raise ValueError("nodes must lie strictly inside the interval")

    def apply(self, f):
        return mpmath.fsum(w * f(x) for x, w in zip(self.nodes, self.weights))


def _tanh_sinh_points(level, prec):
    """Abscissas/weights of the double-exponential rule on (-1, 1).

    Returns the full node list for step h = 2**-level, truncated where the
    weights drop below the precision floor.  The floor sits at the *square*
    of the target accuracy: for an integrand with an inverse-square-root
    endpoint singularity the terms w*f decay only like sqrt(w), so cutting
    at w ~ eps would discard genuine tail mass ~ sqrt(eps).  Weights are
    positive; nodes are strictly inside the interval.
    """
    h = mpf(2) ** (-level)
    floor = mpf(2) ** (-(2 * prec + 40))
    pi2 = mp.pi / 2
    pts = [(mpf(0), pi2 * h)]
    j = 1
    while True:
        t = j * h
        st = mp.sinh(t)
        ch = mp.cosh(pi2 * st)
        w = h * pi2 * mp.cosh(t) / (ch * ch)
        x = mp.tanh(pi2 * st)
        if w < floor or 1 - abs(x) == 0:
            break
        pts.append((x, w))
        pts.append((-x, w))
        j += 1
    return pts


def build_rule(kind, interval, n, ctx):
    """Build an n-point QuadratureRule of the given kind on the interval.

    For the Chebyshev kinds the rule is the classical Gauss rule (exact for
    polynomial prefactors of degree <= 2n-1); ``plain`` uses the
    double-exponential construction with roughly n nodes.
    """
    m, r = interval.mid, interval.halfwidth
    with ctx.guarded():
        if kind == "sqrt-endpoints":
            nodes, weights = [], []
            for i in range(1, n + 1):
                th = mp.pi * i / (n + 1)
                nodes.append(m + r * mp.cos(th))
                weights.append(r * r * (mp.pi / (n + 1)) * mp.sin(th) ** 2)
            return QuadratureRule(kind, interval, tuple(nodes), tuple(weights))
        if kind == "chebyshev-first-kind":
            nodes, weights = [], []
            for i in range(1, n + 1):
                th = mp.pi * (2 * i - 1) / (2 * n)
                nodes.append(m + r * mp.cos(th))
                weights.append(mp.pi / n)
            return QuadratureRule(kind, interval, tuple(nodes), tuple(weights))
        if kind == "plain":
            level = max(2, int(math.ceil(math.log2(max(n, 4)) - 2)))
            pts = _tanh_sinh_points(level, ctx.bits)
            nodes = tuple(m + r * x for x, _ in pts)
            weights = tuple(r * w for _, w in pts)
            return QuadratureRule(kind, interval, nodes, weights)
    raise ValueError("unknown rule kind %r" % (kind,))


def _converged(curr, prev, ctx):
    err = abs(curr - prev)
    return err <= ctx.abs_tol or err <= ctx.rel_tol * abs(curr)


def integrate(f, interval, ctx, kind="plain", max_doublings=14, min_points=8):
    """Integrate ``f`` over ``interval`` with the requested rule kind.

    The node count doubles until two successive estimates agree within
    ``ctx.abs_tol`` (or relatively within ``ctx.rel_tol``, whichever is the
    weaker demand for the magnitude at hand).  For the weighted kinds the
    square-root weight factor is supplied by the rule itself.

    Raises
    ------
    QuadratureError
        If the doubling ladder is exhausted; the exception carries the last
        two estimates.
    """
    if kind == "plain":
        # Nodes cluster doubly-exponentially at the endpoints, where the
        # stored value of 1 -/+ x keeps only (working - requested) bits of
        # the true offset.  Running the ladder at roughly doubled precision
        # keeps endpoint-singular integrands accurate down to the node
        # floor; results are rounded back to ctx.bits on return.  The
        # interval midpoint must be formed at working precision too, or
        # endpoint singularities land measurably inside the mapped nodes.
        with ctx.guarded(ctx.bits + 48):
            m, r = interval.mid, interval.halfwidth
            level = 3
            pts = _tanh_sinh_points(level, ctx.bits)
            prev = r * mpmath.fsum(w * f(m + r * x) for x, w in pts)
            pair = (prev, prev)
            for _ in range(max_doublings):
                level += 1
                h = mpf(2) ** (-level)
                pi2 = mp.pi / 2
                floor = mpf(2) ** (-(2 * ctx.bits + 40))
                acc = mpf(0)
                j = 1
                while True:
                    t = j * h
                    st = mp.sinh(t)
                    ch = mp.cosh(pi2 * st)
                    w = h * pi2 * mp.cosh(t) / (ch * ch)
                    x = mp.tanh(pi2 * st)
                    if w < floor or 1 - abs(x) == 0:
                        break
                    acc += w * (f(m + r * x) + f(m - r * x))
                    j += 2
                curr = prev / 2 + r * acc
                if _converged(curr, prev, ctx):
                    return ctx.round(curr)
                pair = (curr, prev)
                prev = curr
            raise QuadratureError(
                "plain quadrature did not converge", last=pair[0], previous=pair[1]
            )
    with ctx.guarded():
        n = min_points
        rule = build_rule(kind, interval, n, ctx)
        prev = rule.apply(f)
        pair = (prev, prev)
        for _ in range(max_doublings):
            n *= 2
            rule = build_rule(kind, interval, n, ctx)
            curr = rule.apply(f)
            if _converged(curr, prev, ctx):
                return ctx.round(curr)
            pair = (curr, prev)
            prev = curr
        raise QuadratureError(
            "%s quadrature did not converge" % kind, last=pair[0], previous=pair[1]
        )


def integrate_pv(f, pole, interval, ctx, max_doublings=14):
    """Cauchy principal value of ``f`` over ``interval``.

    ``f`` is the full integrand with a simple pole at ``pole`` (i.e.
    (x-pole)*f(x) extends smoothly across the pole).  The pole must lie
    strictly inside the interval.  A window of radius d = distance to the
    nearer endpoint is excised symmetrically; on it the odd singular parts
    cancel and the principal value equals the ordinary integral of
    f(p+u)+f(p-u) over (0, d), which is evaluated with the plain rule.
    """
    lo, hi = interval.lo, interval.hi
    p = mpf(pole)
    if not (lo < p < hi):
        raise PoleLocationError("pole must lie strictly inside the interval")
    with ctx.guarded():
        d = min(p - lo, hi - p)
        total = mpf(0)
        if p - d > lo:
            total += integrate(f, Interval(lo, p - d), ctx, "plain", max_doublings)
        if p + d < hi:
            total += integrate(f, Interval(p + d, hi), ctx, "plain", max_doublings)
        two_p = 2 * p

        def mirrored(u):
            # Evaluate at points that are *exactly* symmetric about the
            # pole.  p+u may round, so reflect the rounded point instead of
            # offsetting twice: 2p - xp is exact near p and guarantees the
            # singular odd parts cancel to the last bit.
            xp = p + u
            xm = two_p - xp
            return f(xp) + f(xm)

        sym = integrate(mirrored, Interval(mpf(0), d), ctx, "plain", max_doublings)
        return ctx.round(total + sym)


def find_root(f, bracket, ctx, max_iter=None):
    """Locate a root of ``f`` inside ``bracket`` (an Interval or pair).

    Bisection with secant acceleration (Illinois weighting); requires a
    sign change across the bracket and stops once |f(x)| <= ctx.abs_tol.

    Raises
    ------
    BracketError
        If f has the same sign at both ends.
    ConvergenceError
        If the iteration budget is exhausted before |f| meets the target.
    """
    if isinstance(bracket, Interval):
        a, b = bracket.lo, bracket.hi
    else:
        a, b = mpf(bracket[0]), mpf(bracket[1])
    if max_iter is None:
        max_iter = 8 * ctx.bits
    with ctx.guarded():
        fa, fb = f(a), f(b)
        if abs(fa) <= ctx.abs_tol:
            return ctx.round(a)
        if abs(fb) <= ctx.abs_tol:
            return ctx.round(b)
        if mpmath.sign(fa) == mpmath.sign(fb):
            raise BracketError("no sign change over the bracket")
        side = 0
        for _ in range(max_iter):
            x = (a * fb - b * fa) / (fb - fa)
            # keep the candidate safely interior; otherwise bisect
            if not (a < x < b):
                x = (a + b) / 2
            fx = f(x)
            if abs(fx) <= ctx.abs_tol or (b - a) <= abs(x) * mpf(2) ** (-ctx.bits):
                if abs(fx) <= ctx.abs_tol:
                    return ctx.round(x)
                raise ConvergenceError(
                    "bracket collapsed before |f| reached abs_tol; |f|=%s" % fx
                )
            if mpmath.sign(fx) == mpmath.sign(fa):
                a, fa = x, fx
                if side == -1:
                    fb /= 2
                side = -1
            else:
                b, fb = x, fx
                if side == 1:
                    fa /= 2
                side = 1
        raise ConvergenceError("find_root: iteration budget exhausted")


def richardson_zero(samples):
    """Neville extrapolation of (eps, value) samples to eps = 0.

    Used to extrapolate boundary values measured at a ladder of offsets;
    the values may be complex.
    """
    pts = sorted(((mpf(e), v) for e, v in samples), key=lambda ev: ev[0], reverse=True)
    es = [e for e, _ in pts]
    vs = [v for _, v in pts]
    n = len(vs)
    for j in range(1, n):
        for i in range(n - j):
            vs[i] = vs[i + 1] + (vs[i + 1] - vs[i]) * es[i + j] / (es[i] - es[i + j])
    return vs[0]
