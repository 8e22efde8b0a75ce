import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heavenly.errors import (
    DegenerateMetric,
    FieldEquationViolated,
    FrameMismatch,
    IllConditioned,
    NonPositiveLeadingEntry,
    ResidualImaginaryPart,
)
from heavenly.expsum import (
    HCMA_LEGENDRE,
    HEAVEN_LEGENDRE,
    HEAVEN_ORIGINAL,
    KAHLER_ORIGINAL,
    ExpSumPotential,
    PolynomialPotential,
    conjugate_point,
)
from heavenly.families import FamilyId, build_solution, random_params, random_real_heaven_params
from heavenly.geometry import (
    CONJUGATE_CHART,
    ConstantMetric,
    MetricField,
    MetricSample,
    RealChart,
    SignatureClass,
    classify,
    curvature,
    euler_field,
    lie_derivative_metric,
    metric_hcma_legendre,
    metric_heaven_legendre,
    metric_kahler,
    phase_annihilating_directions,
    realify,
    sym,
    tetrad_check,
    translation_field,
    well_conditioned_points,
)
from heavenly.polynomial import Polynomial

V = [Polynomial.variable(4, k) for k in range(4)]
PT = conjugate_point(0.3 - 0.1j, 0.2 + 0.5j)


def flat_kahler(eps):
    return PolynomialPotential(KAHLER_ORIGINAL, V[0] * V[1] + eps * V[2] * V[3])


def family_potential(family, rng, n=4):
    if family in (FamilyId.HEAVEN_EQUAL, FamilyId.HEAVEN_ZERO):
        return build_solution(family, random_real_heaven_params(family, n, rng))
    return build_solution(family, random_params(family, n, rng))


def test_sym_is_symmetric(rng):
    a, b = rng.normal(size=4), rng.normal(size=4)
    s = sym(a, b)
    np.testing.assert_array_equal(s, s.T)
    assert s[0, 1] == pytest.approx((a[0] * b[1] + a[1] * b[0]) / 2)


@pytest.mark.parametrize("eps", [1, -1])
def test_flat_kahler_metric(eps):
    s = metric_kahler(flat_kahler(eps).jet(PT, 2))
    expected = np.zeros((4, 4))
    expected[0, 1] = expected[1, 0] = 0.5
    expected[2, 3] = expected[3, 2] = 0.5 * eps
    np.testing.assert_array_equal(s.matrix, expected)
    assert tetrad_check(flat_kahler(eps).jet(PT, 2), eps) < 1e-12


def test_flat_kahler_signatures():
    g, rep = realify(metric_kahler(flat_kahler(1).jet(PT, 2)))
    np.testing.assert_allclose(g, np.eye(4), atol=1e-15)
    assert rep.signature == (4, 0) and rep.classification is SignatureClass.EUCLIDEAN
    g, rep = realify(metric_kahler(flat_kahler(-1).jet(PT, 2)))
    np.testing.assert_allclose(g, np.diag([1.0, 1.0, -1.0, -1.0]), atol=1e-15)
    assert rep.signature == (2, 2) and rep.classification is SignatureClass.ULTRA_HYPERBOLIC
    assert rep.to_dict()["class"] == "UltraHyperbolic"


@settings(max_examples=50, deadline=None)
@given(
    st.floats(0.1, 10),
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
    st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
    st.sampled_from([1, -1]),
)
def test_tetrad_identity(a, b, h, eps):
    # any Hermitian quadratic with determinant eps solves the Monge-Ampere equation
    c = (eps + abs(b) ** 2) / a
    u = a * V[0] * V[1] + b * V[0] * V[3] + np.conj(b) * V[2] * V[1] + c * V[2] * V[3] + h * V[0] * V[2]
    assert tetrad_check(PolynomialPotential(KAHLER_ORIGINAL, u).jet(PT, 2), eps) < 1e-10


def test_tetrad_errors():
    u = PolynomialPotential(KAHLER_ORIGINAL, V[0] * V[3] + V[2] * V[1])
    with pytest.raises(NonPositiveLeadingEntry):
        tetrad_check(u.jet(PT, 2), -1)
    with pytest.warns(FieldEquationViolated):
        tetrad_check(flat_kahler(1).jet(PT, 2), -1)


def test_kahler_frame_required():
    with pytest.raises(FrameMismatch):
        metric_kahler(PolynomialPotential(HEAVEN_ORIGINAL, V[0] * V[1]).jet(PT, 2))


def test_heaven_legendre_flat():
    u = PolynomialPotential(HEAVEN_LEGENDRE, 0.5 * V[0] * V[0] + 0.5 * V[1] * V[1])
    s = metric_heaven_legendre(u.jet(np.array([0.2, -0.7, 1.1, 0.4]), 2))
    expected = np.zeros((4, 4))
    expected[0, 0] = 1
    expected[0, 2] = expected[2, 0] = -0.5
    expected[1, 3] = expected[3, 1] = -0.5
    np.testing.assert_allclose(s.matrix, expected, atol=1e-15)
    g, rep = realify(s)
    assert rep.signature == (2, 2)


def test_heaven_legendre_degenerate():
    with pytest.raises(DegenerateMetric, match="u_tt"):
        metric_heaven_legendre(PolynomialPotential(HEAVEN_LEGENDRE, V[1] * V[1]).jet(np.zeros(4), 2))
    with pytest.raises(DegenerateMetric, match="delta"):
        u = PolynomialPotential(HEAVEN_LEGENDRE, 0.5 * (V[0] + V[1]) * (V[0] + V[1]))
        metric_heaven_legendre(u.jet(np.zeros(4), 2))


def test_hcma_legendre_degenerate():
    with pytest.raises(DegenerateMetric, match="v_ppbar"):
        metric_hcma_legendre(PolynomialPotential(HCMA_LEGENDRE, V[0] * V[0] + V[1] * V[1]).jet(PT, 2))
    with pytest.raises(DegenerateMetric, match="legendre_det"):
        metric_hcma_legendre(PolynomialPotential(HCMA_LEGENDRE, (V[0] + V[1]) * (V[0] + V[1])).jet(PT, 2))


@pytest.mark.parametrize("family", list(FamilyId))
def test_family_metrics_symmetric_real_and_split(family, rng):
    pot = family_potential(family, rng)
    field = MetricField(pot)
    for x in well_conditioned_points(pot, 10, rng):
        s = field.sample(x)
        np.testing.assert_array_equal(s.matrix, s.matrix.T)
        assert set(s.quantities) == set(s.degenerate) and not any(s.degenerate.values())
        g, rep = realify(s)
        assert rep.signature == (2, 2)


def test_metric_field_batches(rng):
    pot = family_potential(FamilyId.HCMA_DILAT, rng)
    field = MetricField(pot)
    x = well_conditioned_points(pot, 6, rng)
    batch = field(x)
    assert batch.shape == (6, 4, 4)
    for k in range(6):
        single = realify(field.sample(x[k]))[0]
        np.testing.assert_allclose(batch[k], single, rtol=1e-12, atol=1e-12 * np.max(np.abs(single)))


def test_residual_imaginary_part():
    g = np.zeros((4, 4), dtype=complex)
    g[0, 1] = g[1, 0] = 1j
    with pytest.raises(ResidualImaginaryPart):
        realify(MetricSample(KAHLER_ORIGINAL.frame_id, g, PT))



def test_realify_needs_single_point():
    s = MetricSample(KAHLER_ORIGINAL.frame_id, np.zeros((2, 4, 4)), np.zeros((2, 4)))
    with pytest.raises(ValueError):
        realify(s)


def test_chart_must_be_invertible():
    with pytest.raises(ValueError):
        RealChart("bad", np.zeros((4, 4)))
    x = np.array([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(CONJUGATE_CHART.to_frame(x), [1 + 2j, 1 - 2j, 3 + 4j, 3 - 4j])


def test_classify_degenerate_and_lorentzian():
    assert classify(np.diag([1.0, 1, 1, 0])).classification is SignatureClass.DEGENERATE
    assert classify(np.zeros((4, 4))).classification is SignatureClass.DEGENERATE
    rep = classify(np.diag([-1.0, 1, 1, 1]))
    assert rep.signature == (3, 1) and rep.classification is SignatureClass.LORENTZIAN


def test_flat_curvature():
    g = np.zeros((4, 4))
    g[0, 0] = 1
    g[0, 2] = g[2, 0] = g[1, 3] = g[3, 1] = -0.5
    c = curvature(ConstantMetric(g), np.array([0.1, 0.2, 0.3, 0.4]))
    assert c.ricci_norm < 1e-10 and c.riemann_norm < 1e-10
    assert np.allclose(c.christoffel, np.swapaxes(c.christoffel, 1, 2))


class _Sphere2x2:
    # product of two round 2-spheres in stereographic charts: R = 2 per factor, Ricci = g
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape[:-1] + (4, 4))
        for a in (0, 2):
            f = 4 / (1 + x[..., a] ** 2 + x[..., a + 1] ** 2) ** 2
            g[..., a, a] = g[..., a + 1, a + 1] = f
        return g


def test_curvature_detects_non_flat():
    x = np.array([0.3, -0.2, 0.1, 0.5])
    c = curvature(_Sphere2x2(), x)
    np.testing.assert_allclose(c.ricci, _Sphere2x2()(x), rtol=1e-5, atol=1e-8)
    assert c.ricci_ratio > 0.1
    assert c.to_dict()["fd_step"] == pytest.approx(1e-3)


def test_curvature_ill_conditioned():
    # evaluation noise with no smooth part: no step size gives a consistent estimate
    class Noisy:
        def __call__(self, x):
            x = np.asarray(x, dtype=float)
            g = np.broadcast_to(np.eye(4), x.shape[:-1] + (4, 4)).copy()
            g[..., 0, 0] += 1e-3 * np.sin(1e13 * (x[..., 1] + 2 * x[..., 2]))
            return g

    with pytest.raises(IllConditioned):
        curvature(Noisy(), np.array([0.1, 0.2, 0.3, 0.4]))


def test_curvature_step_search():
    # a coarse start is truncation-limited, so the search refines the step
    c = curvature(_Sphere2x2(), np.array([0.3, -0.2, 0.1, 0.5]), fd_step=0.2)
    assert c.fd_step < 0.2 and c.ricci_error / (1 + c.riemann_norm) < 1e-6


@pytest.mark.parametrize("family", list(FamilyId))
def test_family_ricci_flat(family, rng):
    pot = family_potential(family, rng)
    field = MetricField(pot)
    for x in well_conditioned_points(pot, 3, rng):
        c = curvature(field, x)
        assert c.ricci_ratio < 1e-4
        assert c.riemann_error < max(c.riemann_norm, 1e-8)


def test_lie_derivative_flat():
    g = ConstantMetric(np.eye(4))
    x = np.array([0.3, 0.1, -0.2, 0.7])
    assert np.max(np.abs(lie_derivative_metric(g, translation_field([1, 2, 0, -1]), x))) < 1e-10
    np.testing.assert_allclose(lie_derivative_metric(g, euler_field, x), 2 * np.eye(4), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=10, max_size=10))
def test_homothety_identity(entries):
    iu = np.triu_indices(4)
    m = np.zeros((4, 4))
    m[iu] = entries
    m = m + np.triu(m, 1).T
    lie = lie_derivative_metric(ConstantMetric(m), euler_field, np.array([0.5, -0.5, 1.0, 2.0]))
    np.testing.assert_allclose(lie, 2 * m, atol=1e-10)


def test_phase_directions_are_killing(rng):
    # two terms leave a 2-plane of translations along which the metric does not change
    params = random_params(FamilyId.HCMA_DILAT, 2, rng)
    pot = build_solution(FamilyId.HCMA_DILAT, params)
    dirs = phase_annihilating_directions(pot)
    assert dirs.shape == (2, 4)
    field = MetricField(pot)
    for x in well_conditioned_points(pot, 3, rng):
        scale = np.max(np.abs(field(x)))
        for d in dirs:
            assert np.max(np.abs(lie_derivative_metric(field, translation_field(d), x))) < 1e-8 * max(scale, 1)


def test_phase_directions_generic_four_terms(rng):
    pot = build_solution(FamilyId.HCMA_DILAT, random_params(FamilyId.HCMA_DILAT, 4, rng))
    assert phase_annihilating_directions(pot).shape == (0, 4)


def test_well_conditioned_points_give_up(rng):
    pot = ExpSumPotential.from_arrays(HCMA_LEGENDRE, np.array([1.0]), np.array([[1.0, 1.0, 0.5, 0.5]]))
    with pytest.raises(DegenerateMetric, match="legendre_det"):
        well_conditioned_points(pot, 2, rng, max_tries=100)
