import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from drlseg.errors import UndefinedMetricError
from drlseg.metrics import EvalReport, boundary, dice, hausdorff95, read_report, sensitivity, specificity

pairs = st.integers(1, 10).flatmap(
    lambda n: st.tuples(arrays(bool, (n, n)), arrays(bool, (n, n)))
)


def brute_hausdorff95(p, t):
    bp, bt = np.argwhere(boundary(p)), np.argwhere(boundary(t))
    d = np.hypot(*(bp[:, None, :] - bt[None, :, :]).transpose(2, 0, 1))
    return float(np.percentile(np.concatenate([d.min(axis=1), d.min(axis=0)]), 95))


def disk(r, n=41):
    ys, xs = np.mgrid[0:n, 0:n]
    return np.hypot(xs - n // 2, ys - n // 2) <= r


def test_dice_examples():
    a = np.zeros((4, 4), bool)
    a[0, :] = True
    b = np.zeros((4, 4), bool)
    b[0, :2] = b[1, :2] = True
    assert dice(a, a) == 1.0
    assert dice(a, ~a) == 0.0
    assert dice(a, b) == 0.5
    with pytest.raises(UndefinedMetricError):
        dice(np.zeros((3, 3)), np.zeros((3, 3)))


def test_sensitivity_examples():
    t = np.zeros((5, 5), bool)
    t.flat[:10] = True
    p = np.zeros((5, 5), bool)
    p.flat[3:10] = True
    assert sensitivity(p, t) == pytest.approx(0.7)
    assert sensitivity(np.ones((5, 5)), t) == 1.0
    assert sensitivity(~t, t) == 0.0
    with pytest.raises(UndefinedMetricError):
        sensitivity(p, np.zeros((5, 5)))


def test_specificity_examples():
    t = np.zeros((4, 4), bool)
    t[0] = True
    p = t.copy()
    p[1, :3] = True
    assert specificity(t, t) == 1.0
    assert specificity(np.ones((4, 4)), t) == 0.0
    assert specificity(p, t) == 0.75
    with pytest.raises(UndefinedMetricError):
        specificity(p, np.ones((4, 4)))


def test_shape_mismatch():
    with pytest.raises(ValueError):
        dice(np.ones((2, 2)), np.ones((3, 3)))


def test_dice_precision_recall_identity_1000_pairs():
    rng = np.random.default_rng(0)
    done = 0
    while done < 1000:
        p = rng.uniform(size=(16, 16)) < rng.uniform(0.05, 0.95)
        t = rng.uniform(size=(16, 16)) < rng.uniform(0.05, 0.95)
        tp = (p & t).sum()
        if tp == 0:
            continue
        prec, rec = tp / p.sum(), sensitivity(p, t)
        assert abs(dice(p, t) - 2 * prec * rec / (prec + rec)) <= 1e-12
        assert dice(p, t) == dice(t, p)
        done += 1


@given(pairs)
def test_dice_symmetric_and_bounded(pt):
    p, t = pt
    if not (p.any() or t.any()):
        return
    d = dice(p, t)
    assert d == dice(t, p) and 0 <= d <= 1
    assert (d == 1) == np.array_equal(p, t)


@given(pairs)
def test_sensitivity_specificity_duality(pt):
    p, t = pt
    if not t.any() or t.all():
        return
    assert sensitivity(p, t) == specificity(~p, ~t)
    assert 0 <= specificity(p, t) <= 1


# -- hausdorff ----------------------------------------------------------------


def test_hausdorff_examples():
    a = np.zeros((10, 10), bool)
    b = a.copy()
    a[2, 2] = True
    b[2, 7] = True
    assert hausdorff95(a, b) == 5.0
    assert hausdorff95(disk(8), disk(8)) == 0.0
    with pytest.raises(UndefinedMetricError):
        hausdorff95(a, np.zeros((10, 10)))


def test_hausdorff_dilated_disk():
    h = hausdorff95(disk(8), disk(10))
    assert h == pytest.approx(brute_hausdorff95(disk(8), disk(10)))
    assert abs(h - 2) <= 1


@given(pairs)
def test_hausdorff_matches_brute_force(pt):
    p, t = pt
    if not p.any() or not t.any():
        return
    assert hausdorff95(p, t) == pytest.approx(brute_hausdorff95(p, t), abs=1e-9)


def test_boundary_of_filled_square():
    m = np.zeros((6, 6), bool)
    m[1:5, 1:5] = True
    assert boundary(m).sum() == 12
    assert boundary(np.ones((3, 3), bool)).sum() == 8


# -- reports ------------------------------------------------------------------


def test_report_csv(tmp_path):
    t = np.zeros((4, 4), bool)
    t[0] = True
    report = EvalReport()
    report.add("b", t, t)
    report.add("a", np.zeros((4, 4)), np.zeros((4, 4)))
    report.sort()
    lines = report.to_csv().splitlines()
    assert lines[0] == "case,dice,sensitivity,specificity"
    assert lines[1] == "a,,,1.000000"
    assert lines[2] == "b,1.000000,1.000000,1.000000"
    assert lines[3] == "MEAN,1.000000,1.000000,1.000000"
    assert lines[4] == "STD,0.000000,0.000000,0.000000"
    assert set(report.cases[0].skipped) == {"dice", "sensitivity"}
    report.write_csv(tmp_path / "r.csv")
    parsed = read_report(tmp_path / "r.csv")
    assert parsed["a"]["dice"] is None and parsed["MEAN"]["specificity"] == 1.0


def test_report_aggregates():
    rng = np.random.default_rng(1)
    report = EvalReport(with_hausdorff=True)
    for i in range(6):
        report.add(f"c{i}", rng.uniform(size=(8, 8)) < 0.5, rng.uniform(size=(8, 8)) < 0.5)
    col = report.column("dice")
    assert report.mean("dice") == pytest.approx(np.mean(col))
    assert report.std("dice") == pytest.approx(np.std(col))
    assert report.to_csv().splitlines()[0].endswith(",hausdorff95")
    assert math.isnan(EvalReport().mean("dice"))
