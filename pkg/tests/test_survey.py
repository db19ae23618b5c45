import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import ndimage

from ldcapture.dynamics import kepler_energy, to_mars_relative
from ldcapture.model import EdgeMap, GridSpec, Label, LabelField, ParameterError
from ldcapture.reference import SAMPLE_ORBITS
from ldcapture.survey import (SurveyRequest, capture_set, classify_point, compute_label_field,
                              generate_ic, run_survey, sample_region)

PI = math.pi


def ic(name, params):
    return generate_ic(SAMPLE_ORBITS[name].offset, 0.0, 0.9, params)


@pytest.mark.parametrize("name", ["a", "b"])
def test_tabulated_velocities(name, params):
    s = ic(name, params)
    np.testing.assert_allclose((s.xp, s.yp), SAMPLE_ORBITS[name].velocity, rtol=0, atol=1e-6)
    assert s.x == 1 - params.mu + SAMPLE_ORBITS[name].offset[0]


def test_zero_offset_rejected(params):
    with pytest.raises(ParameterError):
        generate_ic((0.0, 0.0), 0.0, 0.9, params)


@settings(max_examples=50)
@given(st.floats(0, 2 * PI), st.floats(2e-5, 2e-3), st.sampled_from([0.0, PI, -PI]),
       st.floats(0.0, 0.95))
def test_ic_is_prograde_periapsis(angle, radius, f0, e0):
    # Away from the apsides of the primaries' orbit the frame's pulsation adds
    # a radial velocity, so the relative state is a true periapsis only here.
    from ldcapture.model import SUN_MARS as p
    off = radius * math.cos(angle), radius * math.sin(angle)
    rel = to_mars_relative(generate_ic(off, f0, e0, p), f0, p)
    r = math.hypot(rel.X, rel.Y)
    v = math.hypot(rel.VX, rel.VY)
    assert abs(rel.X * rel.VX + rel.Y * rel.VY) <= 1e-10 * r * v
    assert rel.X * rel.VY - rel.Y * rel.VX > 0
    assert kepler_energy(rel, p) == pytest.approx(-p.mu * (1 - e0) / (2 * r), rel=1e-9)


def test_classify_samples(params):
    assert classify_point(ic("g", params), 2 * PI)[0] is Label.WEAKLY_STABLE
    label, fe = classify_point(ic("e", params), 2 * PI)
    assert label is Label.CRASH and 0 < fe < 2 * PI
    label, fe = classify_point(ic("d", params), -PI)
    assert label is Label.UNSTABLE and -PI < fe < 0
    inner = generate_ic((1e-6, 0.0), 0.0, 0.9, params)
    assert classify_point(inner, PI)[0] is Label.INSIDE_BODY
    with pytest.raises(ParameterError):
        classify_point(inner, 0.0)


def test_tiny_grid_inside_body(params):
    req = SurveyRequest(GridSpec(1e-6, 3), 0.0, 0.0, PI)
    lf = compute_label_field(req, "forward")
    assert np.all(lf.labels == Label.INSIDE_BODY)
    assert np.all(np.isnan(lf.event_anomaly))
    with pytest.raises(ParameterError):
        compute_label_field(req, "backward")


def test_labels_partition_grid(survey_fwd_2pi_100):
    _, res = survey_fwd_2pi_100
    counts = np.bincount(res.labels_forward.labels.ravel(), minlength=5)
    assert counts.sum() == 100 * 100
    assert counts[Label.ERROR] == 0
    assert all(counts[:4] > 0)
    assert res.labels_backward is None


def test_event_anomalies_consistent(survey_fwd_2pi_100):
    _, res = survey_fwd_2pi_100
    lf = res.labels_forward
    ev = lf.event_anomaly
    moved = lf.mask(Label.UNSTABLE) | lf.mask(Label.CRASH)
    assert np.all((ev[moved] > 0) & (ev[moved] <= 2 * PI))
    assert np.all(np.isnan(ev[~moved]))


def test_crash_region_attached_to_body(survey_back_pi_100):
    # Pixels that never escape form a connected region around the body, and
    # it holds the crash orbits.
    _, res = survey_back_pi_100
    lab = res.labels_backward.labels
    comp, _ = ndimage.label(lab != Label.UNSTABLE)
    ids = np.unique(comp[lab == Label.INSIDE_BODY])
    assert ids.size == 1 and ids[0] > 0
    region = comp == ids[0]
    assert np.any(lab[region] == Label.CRASH)
    assert np.any(lab[region] == Label.WEAKLY_STABLE)


def test_zero_extent_survey():
    res = run_survey(SurveyRequest(GridSpec(6e-4, 4)))
    assert np.all(res.total.values == 0)
    assert res.labels_backward is None and res.labels_forward is None


def test_total_is_sum_of_legs():
    res = run_survey(SurveyRequest(GridSpec(6e-4, 12), 0.0, -0.5, 0.5))
    assert np.array_equal(res.total.values, res.backward.values + res.forward.values)
    assert np.all(res.backward.values[~res.labels_backward.mask(Label.INSIDE_BODY)] > 0)


def test_mirror_symmetry_between_legs():
    # (f, x, y, x', y') -> (-f, x, -y, -x', y') maps solutions to solutions, and
    # periapsis conditions at (X, Y) and (X, -Y) are mirror images.
    n = 15
    res = run_survey(SurveyRequest(GridSpec(6e-4, n), 0.0, -1.0, 1.0))
    np.testing.assert_allclose(res.backward.values, res.forward.values[::-1], rtol=1e-12)
    np.testing.assert_array_equal(res.labels_backward.labels, res.labels_forward.labels[::-1])


def test_weakly_stable_set_shrinks():
    req = SurveyRequest(GridSpec(6e-4, 20), 0.0, 0.0, PI)
    short = compute_label_field(req, "forward")
    long = compute_label_field(SurveyRequest(req.grid, 0.0, 0.0, 2 * PI), "forward")
    w_short, w_long = short.mask(Label.WEAKLY_STABLE), long.mask(Label.WEAKLY_STABLE)
    assert np.all(~w_long | w_short)
    assert w_long.sum() < w_short.sum()


def _point_field(labels_by_pixel, f0, ff):
    spec = GridSpec(1e-3, 2)
    lab = np.array(labels_by_pixel, np.uint8).reshape(2, 2)
    return LabelField(spec, lab, np.full((2, 2), np.nan), f0, ff)


@pytest.mark.parametrize("name,ff", [("i", 1.5 * PI), ("j", 1.5 * PI), ("k", 3 * PI)])
def test_capture_samples(name, ff, params):
    s = ic(name, params)
    back = classify_point(s, -PI)[0]
    fwd = classify_point(s, ff)[0]
    lb = _point_field([back, Label.UNSTABLE, Label.WEAKLY_STABLE, Label.CRASH], 0.0, -PI)
    lf = _point_field([fwd, Label.UNSTABLE, Label.WEAKLY_STABLE, Label.WEAKLY_STABLE], 0.0, ff)
    cap = capture_set(lb, lf)
    assert cap[0, 0] and SAMPLE_ORBITS[name].is_capture
    assert cap.tolist() == [[True, False], [False, False]]


def test_capture_empty_without_backward_escape():
    lb = _point_field([Label.WEAKLY_STABLE] * 4, 0.0, -PI)
    lf = _point_field([Label.WEAKLY_STABLE] * 4, 0.0, PI)
    assert not capture_set(lb, lf).any()


def test_sample_region_counts():
    spec = GridSpec(1e-3, 9)
    lab = np.zeros((9, 9), np.uint8)
    lab[:, 5:] = Label.UNSTABLE
    lf = LabelField(spec, lab, np.full((9, 9), np.nan), 0.0, PI)
    regions = sample_region(lf, EdgeMap(spec, np.zeros((9, 9), bool)))
    assert len(regions) == 1 and regions[0].size == 81
    wall = np.zeros((9, 9), bool)
    wall[:, 4] = True
    regions = sample_region(lf, EdgeMap(spec, wall))
    assert sorted(r.size for r in regions) == [36, 36]
    assert {r.label for r in regions} == {Label.WEAKLY_STABLE, Label.UNSTABLE}
    for r in regions:
        assert not wall[r.index]
        assert spec.offset(*r.index) == r.offset
