import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fraccurv.image import (
    BinaryImage,
    ImageFormatError,
    dilate,
    distance_transform,
    pad_image,
    read_image,
    squared_threshold,
    write_image,
)
from oracles import brute_force_sq_edt, lattice_disk_count


def test_binary_image_is_read_only():
    img = BinaryImage.from_array([[1, 0], [0, 1]])
    with pytest.raises(ValueError):
        img.pixels[0, 0] = False
    assert img.count() == 2 and img.shape == (2, 2)


def test_binary_image_copies_input():
    a = np.zeros((3, 3), dtype=bool)
    img = BinaryImage(a)
    a[0, 0] = True
    assert img.count() == 0


@pytest.mark.parametrize("plain", [False, True])
def test_round_trip_small(tmp_path, plain):
    img = BinaryImage.from_array([[1, 0], [0, 1]])
    path = tmp_path / "a.pbm"
    write_image(img, path, plain=plain)
    assert read_image(path) == img


def test_p1_and_p4_agree(tmp_path, rng):
    img = BinaryImage(rng.random((37, 91)) < 0.4)
    write_image(img, tmp_path / "a.pbm", plain=True)
    write_image(img, tmp_path / "b.pbm")
    a, b = read_image(tmp_path / "a.pbm"), read_image(tmp_path / "b.pbm")
    assert a == b == img


def test_plain_with_comments(tmp_path):
    (tmp_path / "c.pbm").write_bytes(b"P1\n# made by hand\n3 2\n1 0 1\n# row two\n0 1 0\n")
    img = read_image(tmp_path / "c.pbm")
    assert img.pixels.tolist() == [[True, False, True], [False, True, False]]


def test_raw_with_header_comment(tmp_path):
    (tmp_path / "r.pbm").write_bytes(b"P4\n# c\n10 1\n" + bytes([0b10000000, 0b01000000]))
    img = read_image(tmp_path / "r.pbm")
    assert np.flatnonzero(img.pixels[0]).tolist() == [0, 9]


@pytest.mark.parametrize(
    "payload",
    [b"P2\n2 2\n0 0 0 0\n", b"P1\n2\n", b"P1\n2 2\n1 0 1\n", b"P1\n2 2\n1 0 1 2\n", b"P4\n16 2\n\x00", b"P1\n0 3\n"],
)
def test_malformed_files(tmp_path, payload):
    (tmp_path / "bad.pbm").write_bytes(payload)
    with pytest.raises(ImageFormatError):
        read_image(tmp_path / "bad.pbm")


def test_size_limit(tmp_path):
    write_image(BinaryImage(np.ones((4, 40), dtype=bool)), tmp_path / "w.pbm")
    with pytest.raises(ImageFormatError, match="size limit"):
        read_image(tmp_path / "w.pbm", max_side=32)


def test_large_round_trip_preserves_count(tmp_path):
    from fraccurv.ifs import preset, rasterize

    img = rasterize(preset("gasket"), 3000)
    write_image(img, tmp_path / "g.pbm")
    back = read_image(tmp_path / "g.pbm")
    assert back.count() == img.count() and back == img


def test_edt_single_corner_pixel():
    img = np.zeros((4, 4), dtype=bool)
    img[0, 0] = True
    dm = distance_transform(BinaryImage(img))
    assert dm.sq[3, 3] == 18
    assert dm.dist[3, 3] == pytest.approx(math.sqrt(18), abs=0)


def test_edt_all_black_is_zero():
    dm = distance_transform(BinaryImage(np.ones((7, 5), dtype=bool)))
    assert not dm.sq.any()


def test_edt_all_white_raises():
    with pytest.raises(ValueError):
        distance_transform(BinaryImage(np.zeros((4, 4), dtype=bool)))


def test_edt_random_64_against_brute_force():
    rng = np.random.default_rng(0)
    pix = rng.random((64, 64)) < 0.1
    assert np.array_equal(distance_transform(BinaryImage(pix)).sq, brute_force_sq_edt(pix))


@settings(max_examples=60, deadline=None)
@given(arrays(bool, st.tuples(st.integers(1, 24), st.integers(1, 24))))
def test_edt_property_brute_force(pix):
    if not pix.any():
        pix = pix.copy()
        pix[0, 0] = True
    assert np.array_equal(distance_transform(BinaryImage(pix)).sq, brute_force_sq_edt(pix))


def test_edt_sparse_and_elongated():
    rng = np.random.default_rng(3)
    for shape in [(1, 300), (300, 1), (5, 200), (129, 3)]:
        pix = rng.random(shape) < 0.02
        pix.flat[rng.integers(pix.size)] = True
        assert np.array_equal(distance_transform(BinaryImage(pix)).sq, brute_force_sq_edt(pix))


def test_edt_thread_count_independent():
    import numba

    rng = np.random.default_rng(5)
    img = BinaryImage(rng.random((300, 257)) < 0.01)
    full = distance_transform(img).sq
    prev = numba.get_num_threads()
    try:
        numba.set_num_threads(1)
        single = distance_transform(img).sq
    finally:
        numba.set_num_threads(prev)
    assert np.array_equal(full, single)


def test_dilate_zero_is_identity(rng):
    img = BinaryImage(rng.random((40, 40)) < 0.05)
    assert dilate(distance_transform(img), 0.0) == img


# frozen from the lattice enumeration oracle
DISK_COUNTS = {10: 317, 20: 1257, 40: 5025, 50: 7845}


def test_disk_count_oracle_frozen():
    for r, n in DISK_COUNTS.items():
        assert lattice_disk_count(r * r) == n


def test_dilate_single_point_disk():
    pix = np.zeros((121, 121), dtype=bool)
    pix[60, 60] = True
    d = dilate(distance_transform(BinaryImage(pix)), 50)
    assert d.count() == DISK_COUNTS[50]
    assert abs(d.count() - math.pi * 2500) / (math.pi * 2500) < 0.01


def test_dilate_beyond_diagonal_is_full(rng):
    img = BinaryImage(rng.random((20, 30)) < 0.01 + np.eye(20, 30, dtype=bool))
    assert dilate(distance_transform(img), math.hypot(20, 30)).count() == 600


def test_dilate_monotone(rng):
    img = BinaryImage(rng.random((50, 60)) < 0.02)
    dm = distance_transform(img)
    prev = dilate(dm, 0).pixels
    for eps in np.linspace(0.5, 20, 25):
        cur = dilate(dm, eps).pixels
        assert np.all(cur >= prev)
        prev = cur


def test_dilate_idempotent_under_retransform(rng):
    img = BinaryImage(rng.random((50, 50)) < 0.03)
    d = dilate(distance_transform(img), 4.2)
    assert dilate(distance_transform(d), 0) == d


def test_squared_threshold_exact_at_integers():
    assert squared_threshold(5.0) == 25
    assert squared_threshold(math.sqrt(2)) == 2
    with pytest.raises(ValueError):
        squared_threshold(-1)


def test_pad_image():
    img = pad_image(BinaryImage(np.ones((2, 3), dtype=bool)), 2)
    assert img.shape == (6, 7) and img.count() == 6
    assert not img.pixels[:2].any()


@pytest.mark.parametrize("k", [2, 3, 5, 7, 8, 13, 9999, 123457])
def test_squared_threshold_matches_float_distance(k):
    eps = math.sqrt(k)
    assert squared_threshold(eps) == k
    assert squared_threshold(np.nextafter(eps, 0)) == k - 1
