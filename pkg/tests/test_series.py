import math
import warnings

import numpy as np
import pytest

from fraccurv.image import BinaryImage, distance_transform
from fraccurv.minkowski import config_histogram, edgecount_from_histogram, threshold_histogram
from fraccurv.series import (
    DEFAULT_SCHEDULE,
    BorderContactWarning,
    CurvatureSeries,
    EqualArea,
    Explicit,
    LogArithmetic,
    Power,
    RegressionData,
    SeriesFormatError,
    build_schedule,
    measure_series,
    parse_schedule,
    read_series_csv,
    to_regression,
    validate_signs,
    write_series_csv,
)
from oracles import lattice_disk_count


def point_image(size=101):
    pix = np.zeros((size, size), dtype=bool)
    pix[size // 2, size // 2] = True
    return BinaryImage(pix)


def test_default_schedule():
    sched = build_schedule()
    assert len(sched) == 176
    assert sched.radii[0] == pytest.approx(90.017, abs=1e-3)
    assert sched.radii[-1] == pytest.approx(math.e, abs=1e-12)
    assert np.all(np.diff(sched.radii) < 0)
    assert np.allclose(np.diff(sched.x), 0.02)
    assert sched.x[0] == pytest.approx(-4.5) and sched.x[-1] == pytest.approx(-1.0)


def test_power_schedule():
    sched = build_schedule(Power(1.0, 0.4, 10), min_radius=None)
    j = np.arange(1, 11)
    assert np.allclose(sched.radii, np.exp(-(j**0.4)), rtol=1e-14)


def test_power_schedule_below_min_radius():
    with pytest.raises(ValueError):
        build_schedule(Power(1.0, 0.4, 10))


def test_equal_area_fixed_points():
    sched = build_schedule(EqualArea(4), min_radius=None)
    counts = np.round(np.pi * sched.radii[::-1] ** 2).astype(int)
    # each radius is a fixed point of the lattice count
    for c in counts:
        assert lattice_disk_count(c / math.pi) == c
    assert list(counts[:3]) == [1, 5, 9]
    oracle = [N for N in range(1, 60) if lattice_disk_count(N / math.pi) == N]
    assert list(build_schedule(EqualArea(len(oracle)), None).radii[::-1]) == pytest.approx(
        [math.sqrt(N / math.pi) for N in oracle], rel=1e-14
    )
    assert 37 in oracle


def test_explicit_schedule_sorted_and_checked():
    sched = build_schedule(Explicit((3.0, 5.0, 10.0)))
    assert list(sched.radii) == [10.0, 5.0, 3.0]
    with pytest.raises(ValueError):
        build_schedule(Explicit((3.0, 10.0, 5.0)))
    with pytest.raises(ValueError):
        build_schedule(Explicit(()))


def test_parse_schedule():
    assert parse_schedule("log") == DEFAULT_SCHEDULE
    assert parse_schedule("log:-3:0.01:10") == LogArithmetic(-3.0, 0.01, 10)
    assert parse_schedule("power:1:0.4:20") == Power(1.0, 0.4, 20)
    assert parse_schedule("equal-area:6") == EqualArea(6)
    assert parse_schedule("explicit:10,20,40") == Explicit((10.0, 20.0, 40.0))
    for bad in ("spiral:1", "power:1", "log:a:b:c"):
        with pytest.raises(ValueError):
            parse_schedule(bad)


def test_single_point_lattice_disks():
    series = measure_series(point_image(), build_schedule(Explicit((10.0, 20.0, 40.0))))
    assert list(series.c2) == [5025, 1257, 317]
    assert [lattice_disk_count(r * r) for r in (40, 20, 10)] == [5025, 1257, 317]
    assert np.all(series.c0 == 1)
    ratios = series.c2[:-1] / series.c2[1:]
    assert np.all(np.abs(ratios - 4) < 0.05)


def test_all_black_series():
    w, h = 40, 30
    img = BinaryImage(np.ones((h, w), dtype=bool))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BorderContactWarning)
        series = measure_series(img, build_schedule(Explicit((2.0, 5.0, 9.0))))
    assert np.all(series.c0 == 1) and np.all(series.c2 == w * h)
    # dilation leaves the full canvas unchanged; the edge count gives w + h
    hist = threshold_histogram(distance_transform(img).sq, 81)
    assert edgecount_from_histogram(hist) / 2 == w + h
    assert np.allclose(series.c1, series.c1[0])
    data = to_regression(series)
    assert np.array_equal(data.y[2], np.log(series.eps ** -2.0 * w * h))


def test_border_contact_warns():
    with pytest.warns(BorderContactWarning):
        measure_series(point_image(21), build_schedule(Explicit((12.0, 3.0))))


def test_all_white_rejected():
    with pytest.raises(ValueError):
        measure_series(BinaryImage(np.zeros((10, 10), bool)), build_schedule(Explicit((3.0,))))


def test_area_monotone_in_eps(rng):
    pix = rng.random((120, 120)) < 0.002
    pix[60, 60] = True
    sched = build_schedule(LogArithmetic(-3.0, 0.05, 40))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BorderContactWarning)
        s = measure_series(BinaryImage(pix), sched)
    assert np.all(np.diff(s.c2) <= 0)


def test_matches_per_radius_dilation(rng):
    pix = rng.random((80, 80)) < 0.005
    pix[40, 40] = True
    img = BinaryImage(pix)
    sched = build_schedule(Explicit((2.0, 3.5, 6.0)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BorderContactWarning)
        s = measure_series(img, sched)
    dm = distance_transform(img)
    for j, eps in enumerate(sched.radii):
        dil = BinaryImage(np.sqrt(dm.sq) <= eps)
        assert s.c2[j] == dil.count()
        assert np.array_equal(threshold_histogram(dm.sq, int(eps * eps)).counts, config_histogram(dil).counts)


def synthetic(c0, c1=None, c2=None, eps=None):
    n = len(c0)
    eps = np.linspace(20, 3, n) if eps is None else eps
    c1 = np.full(n, 10.0) if c1 is None else c1
    c2 = np.full(n, 100.0) if c2 is None else c2
    return CurvatureSeries(eps, c0, c1, c2)


def test_signs_negative_index():
    s = validate_signs(synthetic([-3] * 10))
    assert s.signs == (-1, 1, 1) and s.retained() == (0, 1, 2)


def test_alternating_sign_excluded():
    s = validate_signs(synthetic([1, -1] * 5))
    assert s.signs[0] == 0 and s.retained() == (1, 2)
    assert to_regression(s).J == (1, 2)
    with pytest.raises(ValueError):
        to_regression(s, J=(0,))


def test_majority_mode():
    s = validate_signs(synthetic([1, 1, 1, -1, 1, 1, 1, 1, 1, 1]), majority=True)
    assert s.signs[0] == 1 and (0, 3) in s.dropped and 0 in s.retained()


def test_zero_samples_dropped_and_limit():
    s = validate_signs(synthetic([2] * 19 + [0]))
    assert (0, 19) in s.dropped and 0 in s.retained()
    s = validate_signs(synthetic([2] * 8 + [0, 0]))
    assert 0 not in s.retained()


def test_constant_euler_gives_zero_slope():
    from fraccurv.estimators import per_index_slopes

    s = synthetic([1] * 12)
    slopes = per_index_slopes(to_regression(s))
    assert abs(slopes[0]) < 1e-12


def test_to_regression_examples():
    s = CurvatureSeries([math.e, 1.0], [-5, -5], [1.0, 1.0], [math.e**2, 3.0])
    d = to_regression(validate_signs(s), min_samples=1)
    assert d.x[0] == pytest.approx(-1.0, abs=1e-15)
    assert d.y[2, 0] == pytest.approx(0.0, abs=1e-15)
    assert d.y[0, 1] == pytest.approx(math.log(5), rel=1e-15)
    assert d.signs[0] == -1


def test_to_regression_idempotent():
    s = synthetic([-3, -2, -4, -3, -5, -6])
    a = to_regression(validate_signs(s))
    b = to_regression(validate_signs(validate_signs(s)))
    assert np.array_equal(a.y, b.y, equal_nan=True) and a.J == b.J and np.array_equal(a.mask, b.mask)


def test_too_few_samples():
    with pytest.raises(ValueError):
        to_regression(synthetic([1, 1]), min_samples=3)


def test_regression_data_validation():
    with pytest.raises(ValueError):
        RegressionData(np.arange(3.0), np.zeros((3, 3)), ())
    with pytest.raises(ValueError):
        RegressionData(np.arange(3.0), np.zeros((3, 4)), (0,))
    d = RegressionData.from_arrays([1, 2, 3], {2: [1.0, 2.0, 3.0]})
    assert d.J == (2,) and d.complete()


def test_csv_round_trip_exact(tmp_path):
    img = point_image()
    series = validate_signs(measure_series(img, build_schedule(LogArithmetic(-3.5, 0.1, 12))))
    write_series_csv(series, tmp_path / "s.csv")
    back = validate_signs(read_series_csv(tmp_path / "s.csv"))
    for name in ("eps", "c0", "c1", "c2"):
        assert np.array_equal(getattr(series, name), getattr(back, name))
    a, b = to_regression(series), to_regression(back)
    assert np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y, equal_nan=True)
    header = (tmp_path / "s.csv").read_text().splitlines()[0]
    assert header == "eps,x,c0,c1,c2,y0,y1,y2"


@pytest.mark.parametrize(
    "text",
    ["", "a,b,c\n1,2,3\n", "eps,x,c0,c1,c2\n5,1,zz,1,1\n", "eps,x,c0,c1,c2\n5,1,1,1\n"],
)
def test_csv_errors(tmp_path, text):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(SeriesFormatError):
        read_series_csv(p)
