"""Monic orthogonal polynomials and kernels for exponentially decaying weights.

Recurrence coefficients come from a discretized Stieltjes procedure: the
line is truncated where the weight (times the worst polynomial factor the
caller will integrate) drops below the precision floor, inner products are
taken with Gauss-Legendre rules whose node count doubles until the
coefficients stop moving, and the accepted table carries an orthogonality
residual certified against the finer rule of the final doubling.  On top of
the tables sit Christoffel-Darboux kernels (with an analytic confluent
diagonal), correlation determinants, and weighted Cauchy transforms with a
principal-value boundary mode.

Pointwise evaluators (polynomial values, kernels) run at the ambient mpmath
precision; everything quadrature-backed takes a PrecisionContext.
"""

from dataclasses import dataclass

import mpmath
from mpmath import mp, mpc, mpf
from mpmath.calculus.quadrature import GaussLegendre

from .equilibrium import Potential
from .numerics import Interval, Polynomial, PrecisionContext, find_root, integrate, integrate_pv


class OrthopolyError(Exception):
    """Base class for orthogonal-polynomial construction failures."""


class PrecisionExhaustedError(OrthopolyError):
    """Raised when the working precision cannot certify the table."""


_GL_CACHE = {}


def _weight_truncation(log_weight, even, poly_degree, ctx):
    """Interval where log_weight(x) + poly_degree*log(1+|x|) stays above
    the precision floor -(digits+10)*log 10; symmetric for even weights."""
    target = (ctx.dps + 10) * mp.log(10)
    loose = PrecisionContext(bits=64, abs_tol=mpf("1e-3"), rel_tol=mpf("1e-3"))

    def edge(side):
        def excess(r):
            return -log_weight(side * r) - poly_degree * mp.log(1 + r) - target

        lo = mpf(1) / 256
        if excess(lo) > 0:
            raise OrthopolyError("weight already negligible at |x|=1/256")
        hi = mpf(1)
        while excess(hi) <= 0:
            hi *= 2
            if hi > mpf(2) ** 64:
                raise OrthopolyError("weight does not decay; not integrable")
        return find_root(excess, (lo, hi), loose)

    with ctx.guarded():
        right = edge(mpf(1))
        left = right if even else edge(mpf(-1))
    return Interval(-left, right)


def _gauss_legendre_pairs(degree, prec):
    """Gauss-Legendre (node, weight) pairs on [-1, 1] with 3*2^degree nodes.

    Nodes are generated at one of a few precision buckets and cached, so
    ladders at nearby working precisions share the expensive root solves;
    arithmetic at lower precision rounds them on use.
    """
    if prec <= 240:
        bucket = 256
    elif prec <= 560:
        bucket = 576
    else:
        bucket = prec + 16
    key = (degree, bucket)
    if key not in _GL_CACHE:
        with mp.workprec(bucket):
            _GL_CACHE[key] = tuple(GaussLegendre(mp).calc_nodes(degree, bucket))
    return _GL_CACHE[key]


@dataclass(frozen=True)
class WeightSpec:
    """A positive integrable weight on the line.

    Two variants: ``ensemble`` is e^{-big_n * V(x)} for a confining
    polynomial potential, ``model`` is the reference family
    e^{-x^(2 nu) + tau x}.  ``truncation`` is the derived interval outside
    which the bare weight is below the precision floor; quadratures against
    polynomials of known degree should use :meth:`truncation_for`, which
    widens the cut by the polynomial's worst-case growth.
    """

    kind: str
    potential: object = None
    big_n: int = None
    nu: int = None
    tau: object = None
    truncation: Interval = None

    def __post_init__(self):
        if self.kind not in ("ensemble", "model"):
            raise ValueError("WeightSpec.kind must be 'ensemble' or 'model'")
        if self.kind == "ensemble":
            if not isinstance(self.potential, Potential):
                raise ValueError("ensemble weight needs a Potential")
            if not (isinstance(self.big_n, int) and self.big_n >= 1):
                raise ValueError("ensemble weight needs an integer big_n >= 1")
        else:
            if not (isinstance(self.nu, int) and self.nu >= 1):
                raise ValueError("model weight needs an integer nu >= 1")
            object.__setattr__(self, "tau", mpf(self.tau if self.tau is not None else 0))
            if not mp.isfinite(self.tau):
                raise ValueError("tau must be finite")
        if self.truncation is None:
            raise ValueError("truncation interval missing; use the factories")

    @classmethod
    def ensemble(cls, potential, big_n, ctx):
        if not isinstance(potential, Potential):
            raise ValueError("ensemble weight needs a Potential")
        if not (isinstance(big_n, int) and big_n >= 1):
            raise ValueError("ensemble weight needs an integer big_n >= 1")
        even = all(c == 0 for c in potential.poly.coeffs[1::2])
        trunc = _weight_truncation(lambda x: -big_n * potential(x), even, 0, ctx)
        return cls("ensemble", potential, big_n, None, None, trunc)

    @classmethod
    def model(cls, nu, tau, ctx):
        if not (isinstance(nu, int) and nu >= 1):
            raise ValueError("model weight needs an integer nu >= 1")
        tau = mpf(tau)
        trunc = _weight_truncation(
            lambda x: -(x ** (2 * nu)) + tau * x, tau == 0, 0, ctx
        )
        return cls("model", None, None, nu, tau, trunc)

    def log_weight(self, x):
        """log of the weight; accepts real or complex arguments."""
        if self.kind == "ensemble":
            return -self.big_n * self.potential(x)
        return -(x ** (2 * self.nu)) + self.tau * x

    def weight(self, x):
        return mp.exp(self.log_weight(x))

    @property
    def is_even(self):
        if self.kind == "model":
            return self.tau == 0
        return all(c == 0 for c in self.potential.poly.coeffs[1::2])

    def truncation_for(self, poly_degree, ctx):
        """Interval outside which weight * |x|^poly_degree is negligible.

        Solves -log w(x) - poly_degree*log(1+|x|) = (digits+10)*log 10 on
        each side.  The polynomial allowance matters: cutting on the bare
        weight alone leaves tails that pollute high-degree norms.
        """
        return _weight_truncation(self.log_weight, self.is_even, poly_degree, ctx)

    def label(self):
        """One-line description used in CSV headers."""
        if self.kind == "model":
            return "model nu=%d tau=%s" % (self.nu, mpmath.nstr(self.tau, 20))
        coeffs = " ".join(mpmath.nstr(c, 40) for c in self.potential.poly.coeffs)
        return "ensemble big_n=%d coeffs=%s" % (self.big_n, coeffs)


def coupling_consistency_residual(b, h):
    """Worst relative gap between h_k and h_0 * prod_{j<=k} b_j."""
    worst = mpf(0)
    running = mpf(h[0])
    for k in range(1, len(h)):
        running = running * b[k - 1]
        worst = max(worst, abs(h[k] - running) / abs(h[k]))
    return worst


@dataclass(frozen=True)
class RecurrenceTable:
    """Three-term recurrence data for monic orthogonal polynomials.

    ``a[k]`` is the offset a_k (k = 0..max_degree-1) and ``b[j]`` the
    positive coupling b_{j+1} (j = 0..max_degree-1), so the recurrence
    reads pi_{k+1} = (x - a[k]) pi_k - b[k-1] pi_{k-1} with pi_{-1} = 0.
    ``h[k]`` is the squared norm of pi_k, k = 0..max_degree.
    """

    a: tuple
    b: tuple
    h: tuple
    bits: int
    max_degree: int
    weight: WeightSpec = None
    ortho_residual: object = None

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(mpf(v) for v in self.a))
        object.__setattr__(self, "b", tuple(mpf(v) for v in self.b))
        object.__setattr__(self, "h", tuple(mpf(v) for v in self.h))
        m = self.max_degree
        if not (isinstance(m, int) and m >= 1):
            raise ValueError("max_degree must be an integer >= 1")
        if len(self.a) != m or len(self.b) != m or len(self.h) != m + 1:
            raise ValueError("expected %d offsets, %d couplings, %d norms" % (m, m, m + 1))
        if any(not (v > 0) for v in self.b):
            raise ValueError("couplings must be positive")
        if any(not (v > 0) for v in self.h):
            raise ValueError("norms must be positive")
        with mp.workprec(self.bits + 16):
            worst = coupling_consistency_residual(self.b, self.h)
        if not worst <= mpf("1e-10"):
            raise ValueError("norms inconsistent with couplings: rel %s" % mpmath.nstr(worst, 5))

    def values(self, x, up_to=None):
        """Values (pi_0(x), ..., pi_up_to(x)) by the recurrence."""
        if up_to is None:
            up_to = self.max_degree
        if up_to > self.max_degree:
            raise ValueError("table only reaches degree %d" % self.max_degree)
        out = [x * 0 + 1]
        prev, curr = x * 0, out[0]
        for k in range(up_to):
            coupling = self.b[k - 1] if k >= 1 else mpf(0)
            prev, curr = curr, (x - self.a[k]) * curr - coupling * prev
            out.append(curr)
        return tuple(out)

    def values_and_derivatives(self, x, up_to=None):
        """Values and first derivatives up to the requested degree."""
        if up_to is None:
            up_to = self.max_degree
        if up_to > self.max_degree:
            raise ValueError("table only reaches degree %d" % self.max_degree)
        vals = [x * 0 + 1]
        ders = [x * 0]
        vp, vc = x * 0, vals[0]
        dp, dc = x * 0, ders[0]
        for k in range(up_to):
            coupling = self.b[k - 1] if k >= 1 else mpf(0)
            vp, vc, dp, dc = (
                vc,
                (x - self.a[k]) * vc - coupling * vp,
                dc,
                vc + (x - self.a[k]) * dc - coupling * dp,
            )
            vals.append(vc)
            ders.append(dc)
        return tuple(vals), tuple(ders)

    def to_csv_text(self):
        """Serialize as CSV: columns k, a_k, b_k, h_k with '#' headers."""
        digits = int(self.bits * 0.30103) + 5
        lines = [
            "# weight: %s" % self.weight.label(),
            "# bits: %d" % self.bits,
            "# max_degree: %d" % self.max_degree,
            "# ortho_residual: %s" % mpmath.nstr(self.ortho_residual, 8),
            "k,a_k,b_k,h_k",
        ]
        for k in range(self.max_degree + 1):
            a_txt = mpmath.nstr(self.a[k], digits) if k < self.max_degree else ""
            b_txt = mpmath.nstr(self.b[k - 1], digits) if k >= 1 else ""
            lines.append("%d,%s,%s,%s" % (k, a_txt, b_txt, mpmath.nstr(self.h[k], digits)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv_text(cls, text, ctx):
        """Rebuild a table (and its weight) from :meth:`to_csv_text` output."""
        meta = {}
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            if line.startswith("k,"):
                continue
            rows.append(line.split(","))
        bits = int(meta["bits"])
        m = int(meta["max_degree"])
        label = meta["weight"]
        if label.startswith("model"):
            fields = dict(part.split("=") for part in label.split()[1:])
            weight = WeightSpec.model(int(fields["nu"]), mpf(fields["tau"]), ctx)
        else:
            head, _, coeff_txt = label.partition("coeffs=")
            big_n = int(dict(part.split("=") for part in head.split()[1:])["big_n"])
            poly = Polynomial([mpf(tok) for tok in coeff_txt.split()])
            weight = WeightSpec.ensemble(Potential(poly), big_n, ctx)
        a = [mpf(r[1]) for r in rows if r[1]]
        b = [mpf(r[2]) for r in rows if r[2]]
        h = [mpf(r[3]) for r in rows]
        return cls(a, b, h, bits, m, weight, mpf(meta["ortho_residual"]))


def _eval_vectors(a, b, xs, up_to):
    """Node-value rows for pi_0..pi_up_to given recurrence coefficients."""
    rows = [[mpf(1)] * len(xs)]
    prev = [mpf(0)] * len(xs)
    curr = rows[0]
    for k in range(up_to):
        coupling = b[k - 1] if k >= 1 else mpf(0)
        nxt = [(x - a[k]) * c - coupling * p for x, c, p in zip(xs, curr, prev)]
        prev, curr = curr, nxt
        rows.append(curr)
    return rows


def _gram_offdiag_max(a, b, h, xs, omegas, up_to):
    """max_{j<k} |<pi_j, pi_k>| / sqrt(h_j h_k) on the given rule."""
    rows = _eval_vectors(a, b, xs, up_to)
    weighted = [[om * v for om, v in zip(omegas, row)] for row in rows]
    worst = mpf(0)
    for j in range(up_to + 1):
        for k in range(j + 1, up_to + 1):
            g = mpmath.fsum(u * v for u, v in zip(weighted[j], rows[k]))
            worst = max(worst, abs(g) / mp.sqrt(h[j] * h[k]))
    return worst


def _discrete_stieltjes(w, trunc, gl_degree, max_degree, even):
    """One Stieltjes pass on a fixed Gauss-Legendre rule.

    Returns (a, b, h, xs, omegas); raises PrecisionExhaustedError when a
    squared norm fails to stay positive.
    """
    mid, halfwidth = trunc.mid, trunc.halfwidth
    pairs = _gauss_legendre_pairs(gl_degree, mp.prec)
    xs = [mid + halfwidth * x for x, _ in pairs]
    omegas = [halfwidth * wq * w.weight(x) for (_, wq), x in zip(pairs, xs)]
    a, b, h = [], [], []
    prev = [mpf(0)] * len(xs)
    curr = [mpf(1)] * len(xs)
    for k in range(max_degree + 1):
        hk = mpmath.fsum(om * v * v for om, v in zip(omegas, curr))
        if not hk > 0:
            raise PrecisionExhaustedError(
                "norm of degree %d not positive: precision exhausted; raise bits" % k
            )
        h.append(hk)
        if k >= 1:
            b.append(h[k] / h[k - 1])
        if k == max_degree:
            break
        if even:
            ak = mpf(0)
        else:
            ak = mpmath.fsum(om * x * v * v for om, x, v in zip(omegas, xs, curr)) / hk
        a.append(ak)
        coupling = b[k - 1] if k >= 1 else mpf(0)
        prev, curr = curr, [
            (x - ak) * c - coupling * p for x, c, p in zip(xs, curr, prev)
        ]
    return a, b, h, xs, omegas


def _tables_agree(first, second, tol):
    for u, v in zip(first, second):
        for p, q in zip(u, v):
            if abs(p - q) > tol * (1 + abs(q)):
                return False
    return True


def stieltjes_recurrence(w, max_degree, ctx):
    """Recurrence table for the weight up to the requested degree.

    Node-doubled discretization: Gauss-Legendre ladders on the widened
    truncation interval, accepted once the coefficients stop moving, with
    the orthogonality residual of the coarser rule measured on the finer
    one as the certificate.
    """
    if not (isinstance(max_degree, int) and max_degree >= 1):
        raise ValueError("max_degree must be an integer >= 1")
    if w.kind == "ensemble" and ctx.bits < 64 + 8 * max_degree:
        raise ValueError(
            "ensemble weights need ctx.bits >= 64 + 8*max_degree = %d"
            % (64 + 8 * max_degree)
        )
    target = mpf(10) ** (-mpf(ctx.dps) / 2)
    with ctx.guarded():
        trunc = w.truncation_for(2 * max_degree + 1, ctx)
        stable_tol = mpf(2) ** (16 - ctx.bits)
        needed = max(2 * max_degree + 32, 48)
        first = 4
        while 3 * 2 ** first < needed:
            first += 1
        prev = _discrete_stieltjes(w, trunc, first, max_degree, w.is_even)
        for degree in range(first + 1, first + 9):
            curr = _discrete_stieltjes(w, trunc, degree, max_degree, w.is_even)
            if _tables_agree(prev[:3], curr[:3], stable_tol):
                residual = _gram_offdiag_max(
                    prev[0], prev[1], curr[2], curr[3], curr[4], max_degree
                )
                if residual <= target:
                    return RecurrenceTable(
                        [ctx.round(v) for v in curr[0]],
                        [ctx.round(v) for v in curr[1]],
                        [ctx.round(v) for v in curr[2]],
                        ctx.bits,
                        max_degree,
                        w,
                        ctx.round(residual),
                    )
                raise PrecisionExhaustedError(
                    "orthogonality residual %s above target %s: "
                    "precision exhausted; raise bits"
                    % (mpmath.nstr(residual, 5), mpmath.nstr(target, 5))
                )
            prev = curr
    raise PrecisionExhaustedError(
        "coefficients did not stabilize on the node ladder: "
        "precision exhausted; raise bits"
    )


def cd_kernel(table, w, n, x, xp):
    """Christoffel-Darboux kernel with the weight absorbed symmetrically.

    sqrt(w(x) w(x')) (pi_n(x) pi_{n-1}(x') - pi_n(x') pi_{n-1}(x)) /
    (h_{n-1} (x - x')); the diagonal uses the derivative (confluent) form.
    n = 0 gives the empty ensemble's kernel, identically zero.
    """
    if not (isinstance(n, int) and n >= 0):
        raise ValueError("n must be a nonnegative integer")
    if n == 0:
        return mpf(0)
    if n > table.max_degree:
        raise ValueError("kernel degree %d exceeds the table's %d" % (n, table.max_degree))
    prefactor = mp.exp((w.log_weight(x) + w.log_weight(xp)) / 2)
    if x == xp:
        vals, ders = table.values_and_derivatives(x, n)
        numerator = ders[n] * vals[n - 1] - vals[n] * ders[n - 1]
    else:
        vx = table.values(x, n)
        vy = table.values(xp, n)
        numerator = (vx[n] * vy[n - 1] - vy[n] * vx[n - 1]) / (x - xp)
    return prefactor * numerator / table.h[n - 1]


_MODEL_TABLES = {}


def _model_table(nu, bits, min_degree):
    key = (nu, bits)
    cached = _MODEL_TABLES.get(key)
    if cached is None or cached.max_degree < min_degree:
        ctx = PrecisionContext(bits=bits)
        spec = WeightSpec.model(nu, 0, ctx)
        _MODEL_TABLES[key] = stieltjes_recurrence(spec, max(min_degree, 8), ctx)
    return _MODEL_TABLES[key]


def model_kernel(nu, m, z, zp, ctx):
    """Kernel of the m-point reference ensemble with weight e^{-x^(2 nu)}.

    Tables are cached per (nu, bits) and grown on demand; m = 0 returns 0.
    """
    if not (isinstance(m, int) and m >= 0):
        raise ValueError("m must be a nonnegative integer")
    if m == 0:
        return mpf(0)
    table = _model_table(nu, ctx.bits, m)
    return cd_kernel(table, table.weight, m, z, zp)


@dataclass(frozen=True)
class KernelGrid:
    """Kernel samples over a rectangular grid of evaluation points.

    When the two grids coincide the matrix must be symmetric to relative
    1e-10 with a nonnegative diagonal.  Metadata fields are optional and
    describe how the samples were produced.
    """

    z_grid: tuple
    zprime_grid: tuple
    values: tuple
    n: int = None
    big_n: int = None
    t: object = None
    x_star: object = None
    phi_at_xstar: object = None
    prefactor: str = None

    def __post_init__(self):
        object.__setattr__(self, "z_grid", tuple(mpf(z) for z in self.z_grid))
        object.__setattr__(self, "zprime_grid", tuple(mpf(z) for z in self.zprime_grid))
        object.__setattr__(self, "values", tuple(tuple(mpf(v) for v in row) for row in self.values))
        if len(self.values) != len(self.z_grid):
            raise ValueError("one row of values per z point required")
        if any(len(row) != len(self.zprime_grid) for row in self.values):
            raise ValueError("one column of values per z' point required")
        if self.z_grid == self.zprime_grid:
            for i in range(len(self.z_grid)):
                if self.values[i][i] < 0:
                    raise ValueError("diagonal kernel values must be nonnegative")
                for j in range(i + 1, len(self.z_grid)):
                    u, v = self.values[i][j], self.values[j][i]
                    if abs(u - v) > mpf("1e-10") * (abs(u) + abs(v)):
                        raise ValueError("kernel matrix not symmetric at (%d, %d)" % (i, j))

    def value_at(self, z, zp):
        try:
            i = self.z_grid.index(mpf(z))
            j = self.zprime_grid.index(mpf(zp))
        except ValueError:
            raise ValueError("point not on the grid") from None
        return self.values[i][j]


def _det_by_minors(matrix):
    size = len(matrix)
    if size == 1:
        return matrix[0][0]
    total = mpf(0)
    sign = 1
    for col in range(size):
        minor = [row[:col] + row[col + 1 :] for row in matrix[1:]]
        total += sign * matrix[0][col] * _det_by_minors(minor)
        sign = -sign
    return total


def correlation_det(kernel, points):
    """Determinant of the kernel matrix over the given points.

    ``kernel`` is either a callable (x, x') -> value or a KernelGrid whose
    grids contain the points.  At most six distinct points.
    """
    pts = list(points)
    if not 1 <= len(pts) <= 6:
        raise ValueError("between one and six points required")
    if len(set(map(mpf, pts))) != len(pts):
        raise ValueError("points must be distinct")
    if isinstance(kernel, KernelGrid):
        evaluate = kernel.value_at
    else:
        evaluate = kernel
    matrix = [[evaluate(x, y) for y in pts] for x in pts]
    return _det_by_minors(matrix)


def weighted_cauchy_transform(table, w, k, z, ctx=None):
    """(1/2 pi i) * integral of pi_k(s) w(s) / (s - z) ds, Im z != 0.

    The contour is the weight's truncated line; for |Im z| under the
    resolvable floor (a 2^-12 fraction of the truncation width) the pole
    sits between quadrature nodes, so the call is rejected in favour of the
    boundary-value mode.
    """
    if ctx is None:
        ctx = PrecisionContext(bits=table.bits)
    if not (isinstance(k, int) and 0 <= k <= table.max_degree):
        raise ValueError("degree k must lie within the table")
    z = mpc(z)
    trunc = w.truncation_for(k, ctx)
    if abs(z.imag) < trunc.width * mpf(2) ** -12:
        raise ValueError("z too close to the real axis; use the boundary-value mode")

    def integrand(s):
        return table.values(s, k)[k] * w.weight(s) / (s - z)

    return ctx.round(integrate(integrand, trunc, ctx) / (2 * mp.pi * mp.mpc(0, 1)))


def weighted_cauchy_boundary(table, w, k, x, side, ctx=None):
    """Boundary values of the weighted Cauchy transform on the line.

    side = +1 gives the limit from above, -1 from below: half the density
    plus the principal-value integral.
    """
    if ctx is None:
        ctx = PrecisionContext(bits=table.bits)
    if side not in (1, -1):
        raise ValueError("side must be +1 (above) or -1 (below)")
    if not (isinstance(k, int) and 0 <= k <= table.max_degree):
        raise ValueError("degree k must lie within the table")
    x = mpf(x)
    trunc = w.truncation_for(k, ctx)
    if not trunc.contains(x, strict=True):
        raise ValueError("boundary point must lie inside the truncated support")

    def integrand(s):
        return table.values(s, k)[k] * w.weight(s) / (s - x)

    density = table.values(x, k)[k] * w.weight(x)
    pv = integrate_pv(integrand, x, trunc, ctx)
    return ctx.round(side * density / 2 + pv / (2 * mp.pi * mp.mpc(0, 1)))
