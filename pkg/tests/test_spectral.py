import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kolmoreg.fields import FieldSpec, OperatorSpec, SupportError, dilate_spec, gaussian, laplacian, symbolic_apply
from kolmoreg.spectral import (
    BudgetError,
    GridSpec,
    SpectralField,
    apply_L,
    apply_Y,
    derivative,
    export_field,
    frac_derivative,
    l2_norm,
    load_field,
    multiplier_norm,
    parseval_norm,
    sample,
)
from kolmoreg.structure import StructureMatrix, dilation_law
from kolmoreg.verify import weighted_grid

M11 = StructureMatrix((1, 1), [[[1]]])
GRID = GridSpec.for_structure(M11, 8, 8, 64)
ROUNDOFF = 1e-13


def rel(a, b):
    return l2_norm(a - b) / l2_norm(b)


def gauss_norm(widths):
    # int exp(-2 ((z - c) / w)^2) dz = w sqrt(pi / 2)
    return math.prod(math.sqrt(float(w) * math.sqrt(math.pi / 2)) for w in widths)


@st.composite
def fieldspecs(draw, n_vars=3):
    """Sums of polynomial-times-Gaussian terms that respect the support margin at L=8."""
    q = st.integers(-4, 4).map(lambda k: F(k, 8))
    terms = []
    for _ in range(draw(st.integers(1, 3))):
        widths = [F(draw(st.integers(12, 20)), 16) for _ in range(n_vars)]
        center = [draw(q) for _ in range(n_vars)]
        poly = {}
        for _ in range(draw(st.integers(1, 3))):
            powers = tuple(draw(st.integers(0, 2)) for _ in range(n_vars))
            poly[powers] = F(draw(st.integers(-8, 8)), 4)
        terms.append((poly, center, widths))
    return FieldSpec.from_terms(n_vars, terms)


# -- grid -------------------------------------------------------------------------

def test_grid_checks():
    with pytest.raises(ValueError):
        GridSpec((1, 1), (8, 8), 8, 6)
    with pytest.raises(ValueError):
        GridSpec((1, 1), (8, 8), 8, 33)
    with pytest.raises(BudgetError):
        GridSpec((1, 1), (8, 8), 8, 512)
    g = GridSpec((1, 1), (8, 16), 4, (16, 32, 8))
    assert g.shape == (16, 32, 8)
    assert g.spacing == (1.0, 1.0, 1.0)
    assert GridSpec.from_dict(g.to_dict()) == g


def test_origin_is_a_node():
    for ax in GRID.axes():
        assert ax[len(ax) // 2] == 0.0


# -- sample ------------------------------------------------------------------------

def test_sample_zero():
    u = sample(FieldSpec.zero(3), GRID)
    assert not np.any(u.values)
    assert l2_norm(u) == 0.0


def test_sample_unit_gaussian_peak():
    u = sample(gaussian(3), GRID)
    assert u.max_abs() == 1.0
    assert u.values[32, 32, 32] == 1.0


def test_gaussian_integral_oracle():
    cases = [([1, 1, 1], [0, 0, 0]), ([F(3, 4), F(5, 4), 1], [F(1, 2), 0, F(-1, 4)])]
    for widths, center in cases:
        u = sample(gaussian(3, widths, center), GRID)
        assert l2_norm(u) == pytest.approx(gauss_norm(widths), rel=1e-8)
    assert gauss_norm([1, 1, 1]) == pytest.approx((math.pi / 2) ** 0.75)


def test_sample_support_error():
    f = gaussian(3, center=[0, 3, 0])
    with pytest.raises(SupportError, match="term 0, axis 1"):
        sample(f, GRID)


@settings(max_examples=50, deadline=None)
@given(fieldspecs())
def test_parseval_and_reality(f):
    u = sample(f, GridSpec.for_structure(M11, 8, 8, 32))
    a, b = l2_norm(u), parseval_norm(u)
    assert abs(a - b) <= 1e-10 * a
    back = SpectralField(u.grid, coeffs=u.coeffs)
    assert back.max_imag() <= 1e-10 * u.max_abs()


# -- multipliers ------------------------------------------------------------------------

def _sine_field(k=2, L=0.5, n=16):
    g = GridSpec((1, 1), (1.0, L), 1.0, n)
    x1 = g.axes()[1]
    vals = np.broadcast_to(np.sin(2 * np.pi * k * x1 / (2 * L))[None, :, None], g.shape)
    return SpectralField(g, vals)


def test_order_zero_is_identity():
    u = sample(gaussian(3), GRID)
    v = frac_derivative(u, 1, 0)
    assert np.array_equal(v.coeffs, u.coeffs)


def test_negative_order_rejected():
    u = sample(gaussian(3), GRID)
    with pytest.raises(ValueError):
        frac_derivative(u, 0, -0.5)
    with pytest.raises(ValueError):
        multiplier_norm(u, 0, -1)


def test_single_mode_multiplier():
    u = _sine_field()
    v = frac_derivative(u, 1, 0.5)
    np.testing.assert_allclose(v.values, (4 * np.pi) ** 0.5 * u.values, atol=1e-12)
    assert l2_norm(u) == pytest.approx(math.sqrt(u.grid.volume / 2), rel=1e-14)


def test_order_two_is_minus_laplacian():
    f = gaussian(3, [F(3, 4), 1, 1], [F(1, 4), 0, 0])
    u = sample(f, GRID)
    lap = sample(laplacian(f, M11.group_axes(0)), GRID)
    assert rel(frac_derivative(u, 0, 2), -1 * lap) <= 1e-6


def test_multiplier_norm_matches_field_norm():
    u = sample(gaussian(3, [1, F(3, 4), 1]), GRID)
    for group in (0, 1):
        for order in (0, 0.5, 2 / 3, 1, 2):
            expect = l2_norm(frac_derivative(u, group, order))
            assert multiplier_norm(u, group, order) == pytest.approx(expect, rel=1e-12)


def test_semigroup_on_band_limited_field():
    g = GridSpec((1, 2), (1.0, 1.0), 1.0, 16)
    rng = np.random.default_rng(0)
    c = np.zeros(g.shape, dtype=complex)
    # a few low modes, away from Nyquist
    for _ in range(10):
        idx = tuple(rng.integers(-3, 4, size=4))
        c[idx] += rng.normal() + 1j * rng.normal()
    u = SpectralField(g, coeffs=c)
    for group in (0, 1):
        for a, b in [(0.5, 0.5), (1 / 3, 2 / 3), (1.5, 0.25)]:
            ab = frac_derivative(frac_derivative(u, group, a), group, b)
            direct = frac_derivative(u, group, a + b)
            scale = np.max(np.abs(direct.coeffs))
            assert np.max(np.abs(ab.coeffs - direct.coeffs)) <= 1e-12 * scale


# -- Y and L -------------------------------------------------------------------------

def test_apply_Y_vanishes_on_x0_bump():
    f = FieldSpec.from_terms(3, [({(0, 0, 0): 1}, [0, 0, 0], [1, None, None])])
    u = sample(f, GRID)
    assert apply_Y(u, M11).max_abs() <= 1e-8 * u.max_abs()


def test_apply_Y_gaussian_oracle():
    f = gaussian(3)
    expect = sample(FieldSpec.from_terms(3, [({(1, 1, 0): -2, (0, 0, 1): 2}, [0] * 3, [1] * 3)]), GRID)
    assert rel(apply_Y(sample(f, GRID), M11), expect) <= 1e-6


def test_apply_L_gaussian_oracle():
    op = OperatorSpec(M11, 1)
    poly = {(1, 1, 0): -2, (0, 0, 1): 2, (2, 0, 0): -4, (0, 0, 0): 2}
    expect = sample(FieldSpec.from_terms(3, [(poly, [0] * 3, [1] * 3)]), GRID)
    assert rel(apply_L(sample(gaussian(3), GRID), op), expect) <= 1e-6
    u = sample(gaussian(3), GRID)
    assert np.array_equal(apply_L(u, OperatorSpec(M11)).values, apply_Y(u, M11).values)


def test_linearity():
    u = sample(gaussian(3, [1, F(3, 4), 1]), GRID)
    v = sample(gaussian(3, [F(5, 4), 1, F(3, 4)], [F(1, 4), 0, 0]), GRID)
    a, b = 2.5, -0.75
    for op in (OperatorSpec(M11), OperatorSpec(M11, F(1, 2))):
        left = apply_L(a * u + b * v, op)
        right = a * apply_L(u, op) + b * apply_L(v, op)
        assert np.max(np.abs(left.values - right.values)) <= 1e-12 * left.max_abs()


def test_apply_Y_oracle_converges():
    g = GridSpec.for_structure(M11, 8, 8, 64)
    rng_fields = [
        gaussian(3, [F(3, 4), F(5, 4), 1], [F(1, 4), F(-1, 8), 0]),
        FieldSpec.from_terms(3, [({(1, 0, 0): 1, (0, 2, 1): F(1, 2)}, [0, F(1, 8), 0], [1, F(7, 8), F(9, 8)])]),
    ]
    for f in rng_fields:
        y = symbolic_apply(f, OperatorSpec(M11))
        errs = [rel(apply_Y(sample(f, g.with_n(n)), M11), sample(y, g.with_n(n))) for n in (32, 64, 128)]
        assert errs[1] <= 1e-6
        # halving is only observable above the round-off floor
        for coarse, fine in zip(errs, errs[1:]):
            assert fine <= max(coarse / 2, ROUNDOFF)


def _commutator_defect(M, counts, i):
    g = GridSpec.for_structure(M, 8, 8, counts)
    u = sample(gaussian(M.N + 1), g)
    lhs = apply_Y(derivative(u, i - 1), M) - derivative(apply_Y(u, M), i - 1)
    m0 = M.dims[0]
    rhs = 0 * u
    for j, row in enumerate(M.blocks[0]):
        if row[i - 1]:
            rhs = rhs - float(row[i - 1]) * derivative(u, m0 + j)
    return rel(lhs, rhs)


def test_discrete_commutator_identity():
    assert _commutator_defect(M11, 64, 1) <= 1e-6
    M = StructureMatrix((2, 2), [[[2, 0], [0, 4]]])
    assert _commutator_defect(M, (64, 64, 8, 8, 8), 2) <= 1e-6


# -- dilation -----------------------------------------------------------------------

def test_dilation_norm_scaling():
    law = dilation_law(M11)
    f = gaussian(3)
    g = weighted_grid(M11, 8, 8, 64, r_max=2)
    base = l2_norm(sample(f, g))
    for r in (F(3, 2), F(2)):
        got = l2_norm(sample(dilate_spec(f, r, law, grid=g), g))
        assert got == pytest.approx(float(r) ** (-law.Q / 2) * base, rel=1e-6)


def test_sampled_homogeneity():
    law = dilation_law(M11)
    op = OperatorSpec(M11)
    f = gaussian(3, [1, F(5, 4), 1], [F(1, 4), 0, 0])
    g = weighted_grid(M11, 8, 8, 32, r_max=2)
    r = F(3, 2)
    lhs = sample(symbolic_apply(dilate_spec(f, r, law), op), g)
    rhs = float(r) ** 2 * sample(dilate_spec(symbolic_apply(f, op), r, law), g)
    assert l2_norm(lhs - rhs) <= 1e-8 * l2_norm(rhs)


# -- export ---------------------------------------------------------------------------

def test_export_round_trip(tmp_path):
    u = sample(gaussian(3), GridSpec.for_structure(M11, 8, 8, 16))
    bin_path, meta_path = export_field(u, tmp_path / "u")
    assert bin_path.stat().st_size == u.grid.size * 8
    v = load_field(tmp_path / "u")
    assert v.grid == u.grid
    assert np.array_equal(v.values, u.values)

    w = u * (1 + 2j)
    bin_path, _ = export_field(w, tmp_path / "w")
    assert bin_path.stat().st_size == u.grid.size * 16
    assert np.array_equal(load_field(tmp_path / "w").values, w.values)
