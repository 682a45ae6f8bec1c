"""Recurrence, kernel, and Cauchy-transform tests against classical oracles.

The Gaussian family gives every quantity in closed form (couplings k/2,
norms sqrt(pi) k!/2^k, the one-point kernel, the Faddeeva-type transform at
z = i), the quartic family pins the even-weight machinery, and a scaled
Gaussian ensemble weight checks the e^{-N V} route end to end.  Quadrature
oracles are recomputed independently via the plain adaptive integrator.
"""

import functools
import random

import pytest
from mpmath import mp, mpc, mpf

from newband.equilibrium import Potential
from newband.numerics import Polynomial, PrecisionContext, integrate
from newband.orthopoly import (
    KernelGrid,
    OrthopolyError,
    PrecisionExhaustedError,
    RecurrenceTable,
    WeightSpec,
    cd_kernel,
    correlation_det,
    coupling_consistency_residual,
    model_kernel,
    stieltjes_recurrence,
    weighted_cauchy_boundary,
    weighted_cauchy_transform,
)

CTX = PrecisionContext()


def setup_module(_):
    mp.prec = CTX.bits


@functools.lru_cache(maxsize=None)
def gaussian_weight(bits=CTX.bits):
    return WeightSpec.model(1, 0, PrecisionContext(bits=bits))


@functools.lru_cache(maxsize=None)
def gaussian_table(max_degree, bits=CTX.bits):
    ctx = PrecisionContext(bits=bits)
    return stieltjes_recurrence(gaussian_weight(bits), max_degree, ctx)


@functools.lru_cache(maxsize=None)
def quartic_table(max_degree=12):
    return stieltjes_recurrence(WeightSpec.model(2, 0, CTX), max_degree, CTX)


# ---------------------------------------------------------------------------
# recurrence construction
# ---------------------------------------------------------------------------

def test_gaussian_couplings_match_closed_form():
    table = gaussian_table(40)
    for k in range(1, 41):
        expect = mpf(k) / 2
        assert abs(table.b[k - 1] - expect) <= mpf("1e-20") * expect
    assert all(v == 0 for v in table.a)
    assert abs(table.h[0] - mp.sqrt(mp.pi)) <= mpf("1e-25") * table.h[0]


def test_gaussian_norms_follow_factorial_chain():
    table = gaussian_table(40)
    for k in (5, 17, 40):
        expect = mp.sqrt(mp.pi) * mp.factorial(k) / mpf(2) ** k
        assert abs(table.h[k] - expect) <= mpf("1e-20") * expect


def test_quartic_weight_norm_is_quarter_gamma():
    table = quartic_table()
    expect = 2 * mp.gamma(mpf(5) / 4)
    assert abs(table.h[0] - expect) <= mpf("1e-25") * expect
    assert all(v == 0 for v in table.a)


def test_scaled_gaussian_ensemble_couplings():
    ctx = PrecisionContext(bits=192)
    potential = Potential(Polynomial([mpf(0), mpf(0), mpf(1) / 2]), note="gaussian")
    weight = WeightSpec.ensemble(potential, 20, ctx)
    table = stieltjes_recurrence(weight, 12, ctx)
    for k in range(1, 13):
        expect = mpf(k) / 20
        assert abs(table.b[k - 1] - expect) <= mpf("1e-20") * expect
    expect = mp.sqrt(2 * mp.pi / 20)
    assert abs(table.h[0] - expect) <= mpf("1e-25") * expect


def test_ensemble_precision_schedule_enforced():
    potential = Potential(Polynomial([mpf(0), mpf(0), mpf(1) / 2]))
    weight = WeightSpec.ensemble(potential, 20, CTX)
    with pytest.raises(ValueError):
        stieltjes_recurrence(weight, 12, CTX)  # needs 64 + 8*12 = 160 bits


def test_parity_exact_for_even_weights():
    table = quartic_table()
    rng = random.Random(17)
    for _ in range(6):
        x = mpf(rng.uniform(-3, 3))
        vals_pos = table.values(x, 9)
        vals_neg = table.values(-x, 9)
        for k in range(10):
            assert vals_neg[k] == (-1) ** k * vals_pos[k]


def test_couplings_positive_and_consistent():
    table = gaussian_table(40)
    assert all(v > 0 for v in table.b)
    assert all(v > 0 for v in table.h)
    assert coupling_consistency_residual(table.b, table.h) <= mpf("1e-30")


def test_orthogonality_certificate_and_brute_force():
    table = gaussian_table(40)
    digits = CTX.dps
    assert table.ortho_residual <= mpf(10) ** (-mpf(digits) / 2)
    # independent quadrature of two cross inner products
    weight = gaussian_weight()
    trunc = weight.truncation_for(16, CTX)
    for j, k in ((5, 9), (0, 7)):
        inner = integrate(
            lambda s: table.values(s, k)[j] * table.values(s, k)[k] * weight.weight(s),
            trunc, CTX,
        )
        assert abs(inner) / mp.sqrt(table.h[j] * table.h[k]) <= mpf("1e-25")


def test_residual_improves_with_precision():
    residuals = {}
    for bits in (96, 128, 160):
        ctx = PrecisionContext(bits=bits)
        table = stieltjes_recurrence(gaussian_weight(bits), 8, ctx)
        residuals[bits] = table.ortho_residual
        assert table.ortho_residual <= mpf(10) ** (-mpf(ctx.dps) / 2)
    assert residuals[96] / residuals[128] >= mpf(2) ** 24
    assert residuals[128] / residuals[160] >= mpf(2) ** 24


def test_truncation_widens_with_polynomial_degree():
    weight = gaussian_weight()
    bare = weight.truncation_for(0, CTX)
    wide = weight.truncation_for(81, CTX)
    assert bare.hi < wide.hi < mpf(25)
    assert abs(bare.hi - weight.truncation.hi) <= mpf("1e-6")
    assert bare.lo == -bare.hi  # even weight cuts symmetrically


def test_weight_spec_validation():
    with pytest.raises(ValueError):
        WeightSpec.model(0, 0, CTX)
    with pytest.raises(ValueError):
        WeightSpec.ensemble("not a potential", 8, CTX)
    potential = Potential(Polynomial([mpf(0), mpf(0), mpf(1) / 2]))
    with pytest.raises(ValueError):
        WeightSpec.ensemble(potential, 0, CTX)
    skew = WeightSpec.model(1, mpf("0.7"), CTX)
    assert not skew.is_even
    assert skew.truncation.hi > -skew.truncation.lo  # drift tilts the cut


def test_recurrence_table_validation():
    good = RecurrenceTable(
        (mpf(0),), (mpf("0.5"),), (mpf(2), mpf(1)), 128, 1, gaussian_weight()
    )
    assert good.b[0] == mpf("0.5")
    with pytest.raises(ValueError):
        RecurrenceTable((mpf(0),), (mpf("-0.5"),), (mpf(2), mpf(1)), 128, 1)
    with pytest.raises(ValueError):
        RecurrenceTable((mpf(0),), (mpf("0.5"),), (mpf(2), mpf("1.01")), 128, 1)
    with pytest.raises(ValueError):
        RecurrenceTable((mpf(0),), (mpf("0.5"),), (mpf(2),), 128, 1)
    with pytest.raises(ValueError):
        good.values(mpf(1), up_to=5)


def test_recurrence_csv_round_trip():
    table = quartic_table(6)
    text = table.to_csv_text()
    assert "# weight: model nu=2" in text
    assert "# bits: %d" % CTX.bits in text
    back = RecurrenceTable.from_csv_text(text, CTX)
    assert back.max_degree == table.max_degree
    for u, v in zip(back.b + back.h + back.a, table.b + table.h + table.a):
        assert abs(u - v) <= mpf("1e-35") * (1 + abs(v))
    corrupted = text.replace(
        text.splitlines()[7].split(",")[2], "1.0", 1
    )
    with pytest.raises(ValueError):
        RecurrenceTable.from_csv_text(corrupted, CTX)


def test_ensemble_csv_round_trip():
    ctx = PrecisionContext(bits=192)
    potential = Potential(Polynomial([mpf(0), mpf(0), mpf(1) / 2]))
    table = stieltjes_recurrence(WeightSpec.ensemble(potential, 20, ctx), 4, ctx)
    back = RecurrenceTable.from_csv_text(table.to_csv_text(), ctx)
    assert back.weight.kind == "ensemble"
    assert back.weight.big_n == 20
    for u, v in zip(back.b, table.b):
        assert abs(u - v) <= mpf("1e-35") * v


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

def test_kernel_symmetry_and_one_point_closed_form():
    table = gaussian_table(8)
    weight = gaussian_weight()
    rng = random.Random(3)
    for _ in range(5):
        x, y = mpf(rng.uniform(-2, 2)), mpf(rng.uniform(-2, 2))
        left = cd_kernel(table, weight, 5, x, y)
        right = cd_kernel(table, weight, 5, y, x)
        assert abs(left - right) <= mpf("1e-30") * (1 + abs(left))
    z, zp = mpf("0.3"), mpf("-1.1")
    expect = mp.exp(-(z * z + zp * zp) / 2) / mp.sqrt(mp.pi)
    assert abs(cd_kernel(table, weight, 1, z, zp) - expect) <= mpf("1e-25") * expect


def test_kernel_trace_counts_states():
    table = gaussian_table(8)
    weight = gaussian_weight()
    ctx96 = PrecisionContext(bits=96)
    trunc = weight.truncation_for(16, CTX)
    trace = integrate(lambda s: cd_kernel(table, weight, 6, s, s), trunc, ctx96)
    assert abs(trace - 6) <= mpf("1e-12")
    assert cd_kernel(table, weight, 0, mpf(1), mpf(2)) == 0


def test_kernel_reproduces_itself_under_integration():
    table = gaussian_table(8)
    weight = gaussian_weight()
    ctx96 = PrecisionContext(bits=96)
    trunc = weight.truncation_for(16, CTX)
    rng = random.Random(41)
    for _ in range(3):
        xa, xb = mpf(rng.uniform(-2, 2)), mpf(rng.uniform(-2, 2))
        folded = integrate(
            lambda s: cd_kernel(table, weight, 8, xa, s) * cd_kernel(table, weight, 8, s, xb),
            trunc, ctx96,
        )
        direct = cd_kernel(table, weight, 8, xa, xb)
        assert abs(folded - direct) <= mpf("1e-8") * (1 + abs(direct))


def test_kernel_confluent_diagonal():
    table = gaussian_table(8)
    weight = gaussian_weight()
    x = mpf("0.9")
    diag = cd_kernel(table, weight, 5, x, x)
    assert diag > 0
    oracle = weight.weight(x) * sum(
        table.values(x, 4)[j] ** 2 / table.h[j] for j in range(5)
    )
    assert abs(diag - oracle) <= mpf("1e-25") * diag
    near = cd_kernel(table, weight, 5, x, x + mpf("1e-9"))
    assert abs(diag - near) <= mpf("1e-8") * diag


def test_kernel_degree_guard():
    table = gaussian_table(8)
    with pytest.raises(ValueError):
        cd_kernel(table, gaussian_weight(), 9, mpf(0), mpf(1))


def test_model_kernel_contract_values():
    assert model_kernel(1, 0, mpf(1), mpf(2), CTX) == 0
    expect = 1 / mp.sqrt(mp.pi)
    assert abs(model_kernel(1, 1, mpf(0), mpf(0), CTX) - expect) <= mpf("1e-25") * expect
    expect = 1 / (2 * mp.gamma(mpf(5) / 4))
    assert abs(model_kernel(2, 2, mpf(0), mpf(0), CTX) - expect) <= mpf("1e-25") * expect
    # two-term closed form away from the origin
    z, zp = mpf("0.4"), mpf("-0.6")
    table = quartic_table()
    direct = mp.exp(-(z ** 4 + zp ** 4) / 2) * (
        1 / table.h[0] + z * zp / table.h[1]
    )
    assert abs(model_kernel(2, 2, z, zp, CTX) - direct) <= mpf("1e-25") * abs(direct)


def test_correlation_det_contracts():
    table = gaussian_table(8)
    weight = gaussian_weight()

    def kernel(x, y):
        return cd_kernel(table, weight, 4, x, y)

    x = mpf("0.4")
    assert correlation_det(kernel, [x]) == kernel(x, x)
    pts = [mpf("-0.9"), mpf("0.4")]
    brute = kernel(pts[0], pts[0]) * kernel(pts[1], pts[1]) - kernel(
        pts[0], pts[1]
    ) * kernel(pts[1], pts[0])
    assert correlation_det(kernel, pts) == brute
    # eigenvalue repulsion: the determinant collapses as points merge
    near = correlation_det(kernel, [x, x + mpf("1e-7")])
    assert abs(near) <= mpf("1e-10") * kernel(x, x) ** 2
    with pytest.raises(ValueError):
        correlation_det(kernel, [x, x])
    with pytest.raises(ValueError):
        correlation_det(kernel, [mpf(j) for j in range(7)])


def test_kernel_grid_validation_and_lookup():
    table = gaussian_table(8)
    weight = gaussian_weight()
    grid = (mpf(-1), mpf(0), mpf(1))
    values = tuple(
        tuple(cd_kernel(table, weight, 4, a, b) for b in grid) for a in grid
    )
    kgrid = KernelGrid(grid, grid, values, n=4)
    assert kgrid.value_at(mpf(0), mpf(1)) == values[1][2]
    det_grid = correlation_det(kgrid, [mpf(-1), mpf(1)])
    det_call = correlation_det(
        lambda x, y: cd_kernel(table, weight, 4, x, y), [mpf(-1), mpf(1)]
    )
    assert det_grid == det_call
    with pytest.raises(ValueError):
        kgrid.value_at(mpf("0.5"), mpf(0))
    with pytest.raises(ValueError):
        KernelGrid(grid, grid, ((mpf(1), mpf(2), mpf(0)),) * 3)
    with pytest.raises(ValueError):
        KernelGrid(
            grid, grid,
            ((mpf(-1), mpf(0), mpf(0)), (mpf(0), mpf(1), mpf(0)), (mpf(0), mpf(0), mpf(1))),
        )
    with pytest.raises(ValueError):
        KernelGrid(grid, grid, (values[0], values[1]))


# ---------------------------------------------------------------------------
# weighted Cauchy transforms
# ---------------------------------------------------------------------------

def test_cauchy_transform_decay_matches_norms():
    table = gaussian_table(8)
    weight = gaussian_weight()
    z = mpc(0, 100)
    for k in (0, 1, 2):
        value = weighted_cauchy_transform(table, weight, k, z, CTX)
        ratio = value * (-2 * mp.pi * mpc(0, 1)) * z ** (k + 1) / table.h[k]
        assert abs(ratio - 1) <= mpf("1e-3")


def test_cauchy_transform_gaussian_series_oracle():
    # (1/2 pi i) int e^{-s^2}/(s-i) ds = e * erfc(1) / 2 with erfc summed
    # directly from the alternating entire series
    table = gaussian_table(8)
    weight = gaussian_weight()
    value = weighted_cauchy_transform(table, weight, 0, mpc(0, 1), CTX)
    series = mpf(0)
    term_sign = 1
    for k in range(80):
        series += term_sign / (mp.factorial(k) * (2 * k + 1))
        term_sign = -term_sign
    erfc_one = 1 - 2 * series / mp.sqrt(mp.pi)
    oracle = mp.e * erfc_one / 2
    assert abs(value - oracle) <= mpf("1e-30") * oracle
    assert abs(value.imag) <= mpf("1e-30")


def test_cauchy_boundary_values_and_jump():
    table = gaussian_table(8)
    weight = gaussian_weight()
    x = mpf("0.7")
    above = weighted_cauchy_boundary(table, weight, 3, x, 1, CTX)
    below = weighted_cauchy_boundary(table, weight, 3, x, -1, CTX)
    density = table.values(x, 3)[3] * weight.weight(x)
    assert abs((above - below) - density) <= mpf("1e-30") * (1 + abs(density))
    gaps = [
        abs(weighted_cauchy_transform(table, weight, 3, mpc(x, mpf(eps)), CTX) - above)
        for eps in ("1e-1", "1e-2")
    ]
    assert gaps[1] < gaps[0]
    assert gaps[1] <= mpf("0.02")


def test_cauchy_transform_guards():
    table = gaussian_table(8)
    weight = gaussian_weight()
    with pytest.raises(ValueError, match="boundary-value mode"):
        weighted_cauchy_transform(table, weight, 0, mpc(0, mpf("1e-9")), CTX)
    with pytest.raises(ValueError):
        weighted_cauchy_transform(table, weight, 9, mpc(0, 1), CTX)
    with pytest.raises(ValueError):
        weighted_cauchy_boundary(table, weight, 3, mpf("0.7"), 0, CTX)
    with pytest.raises(ValueError):
        weighted_cauchy_boundary(table, weight, 3, mpf(50), 1, CTX)
    assert issubclass(PrecisionExhaustedError, OrthopolyError)