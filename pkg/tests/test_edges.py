import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ldcapture.edges import (BOTH, compose_edges, detect_edges, extract_separatrices,
                             normalize_field, roberts_gradient, suggest_sigma)
from ldcapture.model import EdgeMap, GridMismatchError, GridSpec, ParameterError, ScalarField


def as_field(values):
    values = np.asarray(values, float)
    return ScalarField(GridSpec(1e-3, values.shape[0]), values, 0.0, 0.0, 1.0)


def brute_roberts(I):
    n, m = I.shape
    g = np.empty((n - 1, m - 1))
    for i in range(n - 1):
        for j in range(m - 1):
            a = float(I[i][j]) - float(I[i + 1][j + 1])
            b = float(I[i + 1][j]) - float(I[i][j + 1])
            g[i, j] = a * a + b * b
    return g


finite_fields = arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(2, 12)),
                       elements=st.floats(-1e3, 1e3))


def test_normalize_examples():
    f = normalize_field(as_field([[2, 4], [6, 4]]))
    np.testing.assert_array_equal(f.values, [[0, 0.5], [1, 0.5]])
    unit = as_field([[0, 0.25], [1, 0.5]])
    np.testing.assert_array_equal(normalize_field(unit).values, unit.values)
    f = normalize_field(as_field([[2, np.nan], [6, 4]]))
    np.testing.assert_array_equal(f.values, [[0, 0], [1, 0.5]])
    with pytest.raises(ParameterError):
        normalize_field(as_field(np.full((3, 3), 7.0)))


def test_roberts_examples():
    assert roberts_gradient(np.full((5, 5), 3.0)).tolist() == np.zeros((4, 4)).tolist()
    assert roberts_gradient(np.array([[0.0, 0.0], [1.0, 1.0]])).tolist() == [[2.0]]
    with pytest.raises(ParameterError):
        roberts_gradient(np.zeros((1, 4)))


def test_roberts_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(100):
        I = rng.normal(size=(8, 8))
        assert np.array_equal(roberts_gradient(I), brute_roberts(I))


def test_detect_examples():
    f = as_field([[0, 0], [1, 1]])
    assert not detect_edges(f, 3.0).mask.any()
    m = detect_edges(f, 1.0)
    assert m.mask.tolist() == [[True, False], [False, False]]
    assert m.sigma == 1.0
    with pytest.raises(ParameterError):
        detect_edges(f, 0.0)


square_fields = st.integers(2, 12).flatmap(
    lambda n: arrays(np.float64, (n, n), elements=st.floats(-1e3, 1e3)))


@settings(max_examples=50)
@given(square_fields, st.floats(1e-6, 1e2), st.floats(1e-6, 1e2))
def test_sigma_monotone(values, s1, s2):
    lo, hi = sorted((s1, s2))
    f = as_field(values)
    a, b = detect_edges(f, lo).mask, detect_edges(f, hi).mask
    assert np.all(~b | a)


@settings(max_examples=50)
@given(finite_fields, st.integers(1, 3), st.integers(1, 3))
def test_translation_equivariance(values, di, dj):
    g = roberts_gradient(values)
    big = np.zeros((values.shape[0] + di, values.shape[1] + dj))
    big[di:, dj:] = values
    np.testing.assert_array_equal(roberts_gradient(big)[di:, dj:], g)


@settings(max_examples=50)
@given(finite_fields, st.floats(0.1, 10))
def test_scaling(values, c):
    np.testing.assert_allclose(roberts_gradient(c * values), c * c * roberts_gradient(values),
                               rtol=1e-12, atol=1e-9)


@settings(max_examples=50)
@given(arrays(np.float64, (6, 6), elements=st.integers(0, 8).map(float)),
       st.sampled_from([0.5, 2.0, 4.0]), st.sampled_from([-3.0, 0.0, 16.0]))
def test_affine_invariance_after_normalization(values, a, b):
    # Dyadic values keep the affine maps exact in floating point.
    if values.max() == values.min():
        return
    s = 0.05
    m1 = extract_separatrices(as_field(values), s).mask
    m2 = extract_separatrices(as_field(a * values + b), s).mask
    np.testing.assert_array_equal(m1, m2)


def test_compose_edges():
    spec = GridSpec(1e-3, 3)
    a = np.zeros((3, 3), bool)
    a[0] = True
    b = np.zeros((3, 3), bool)
    b[2] = True
    ov = compose_edges(EdgeMap(spec, a), EdgeMap(spec, b))
    assert not ov.both.any()
    np.testing.assert_array_equal(ov.forward, a)
    np.testing.assert_array_equal(ov.backward, b)
    same = compose_edges(EdgeMap(spec, a), EdgeMap(spec, a))
    assert np.all(same.codes[a] == BOTH) and not same.codes[~a].any()
    with pytest.raises(GridMismatchError):
        compose_edges(EdgeMap(spec, a), EdgeMap(GridSpec(1e-3, 4), np.zeros((4, 4), bool)))


def test_suggested_sigma_grows_with_extent():
    assert suggest_sigma(np.pi) == pytest.approx(4e-3)
    assert suggest_sigma(-2 * np.pi) == pytest.approx(2e-2)
    vals = [suggest_sigma(x) for x in np.linspace(np.pi, 3 * np.pi, 9)]
    assert np.all(np.diff(vals) > 0)
