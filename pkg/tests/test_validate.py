import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import ndimage

from ldcapture.edges import extract_separatrices
from ldcapture.model import EdgeMap, GridMismatchError, GridSpec, Label, LabelField
from ldcapture.validate import (agreement, chebyshev_distance, class_boundaries,
                                disk_boundary, validate)


def labels_of(arr):
    arr = np.asarray(arr, np.uint8)
    n = arr.shape[0]
    return LabelField(GridSpec(1e-3, n), arr, np.full(arr.shape, np.nan), 0.0, 1.0)


def test_uniform_labels_have_no_boundary():
    assert not class_boundaries(labels_of(np.ones((6, 6)))).any()


def test_half_plane_boundary():
    lab = np.zeros((6, 6))
    lab[:, 3:] = Label.UNSTABLE
    b = class_boundaries(labels_of(lab))
    expect = np.zeros((6, 6), bool)
    expect[:, 2:4] = True
    np.testing.assert_array_equal(b, expect)


def test_error_pixels_are_ignored():
    lab = np.zeros((5, 5))
    lab[2, 2] = Label.ERROR
    assert not class_boundaries(labels_of(lab)).any()


def test_disk_boundary_is_closed(survey_fwd_2pi_100):
    _, res = survey_fwd_2pi_100
    lf = res.labels_forward
    disk = lf.mask(Label.INSIDE_BODY)
    ring = disk_boundary(lf) & ~disk
    assert ring.any()
    # The ring alone separates the disk from the rest of the grid.
    enclosed = ndimage.binary_fill_holes(ring)
    assert np.all(enclosed[disk])


def test_chebyshev_distance():
    m = np.zeros((5, 5), bool)
    m[2, 2] = True
    d = chebyshev_distance(m)
    assert d[0, 0] == 2 and d[2, 4] == 2 and d[1, 3] == 1 and d[2, 2] == 0
    assert np.all(np.isinf(chebyshev_distance(np.zeros((3, 3), bool))))


def test_agreement_examples():
    b = np.zeros((8, 8), bool)
    b[:, 3] = True
    a = agreement(b, b, d=0)
    assert (a.precision, a.recall, a.median_distance) == (1.0, 1.0, 0.0)
    shifted = np.roll(b, 1, axis=1)
    a = agreement(shifted, b, d=1)
    assert (a.precision, a.recall) == (1.0, 1.0)
    assert agreement(shifted, b, d=0).precision == 0.0
    empty = agreement(np.zeros((8, 8), bool), b, d=2)
    assert (empty.precision, empty.recall) == (0.0, 0.0) and math.isnan(empty.median_distance)
    assert empty.as_dict()["median_distance"] is None
    with pytest.raises(GridMismatchError):
        agreement(b, np.zeros((7, 7), bool))


masks = arrays(bool, (10, 10), elements=st.booleans())


@settings(max_examples=50)
@given(masks, masks, st.integers(0, 5))
def test_agreement_symmetric(e, b, d):
    if not e.any() or not b.any():
        return
    ab, ba = agreement(e, b, d), agreement(b, e, d)
    assert ab.precision == ba.recall and ab.recall == ba.precision


@settings(max_examples=50)
@given(masks, masks, st.integers(0, 4))
def test_agreement_monotone_in_d(e, b, d):
    if not e.any() or not b.any():
        return
    lo, hi = agreement(e, b, d), agreement(e, b, d + 1)
    assert hi.precision >= lo.precision and hi.recall >= lo.recall


def test_validate_report_on_survey(survey_fwd_2pi_100):
    _, res = survey_fwd_2pi_100
    edges = extract_separatrices(res.forward, 2e-2)
    rep = validate(edges, res.labels_forward, d=2)
    assert rep["sigma"] == 2e-2 and rep["n_error"] == 0
    assert rep["overall"]["precision"] >= 0.8
    assert rep["disk_recall"] >= 0.9
    with pytest.raises(GridMismatchError):
        validate(EdgeMap(GridSpec(1e-3, 3), np.zeros((3, 3), bool)), res.labels_forward)
