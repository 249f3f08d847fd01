import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoscaffold.errors import (
    BadMagic,
    DimensionMismatch,
    NonFiniteValue,
    TruncatedFile,
)
from geoscaffold.pointmap import (
    HEADER_SIZE,
    PointMap,
    load_pointmap,
    save_pointmap,
    threshold_cloud,
)


def make_pointmap(rng, w=4, h=4, with_mask=True):
    return PointMap(
        width=w,
        height=h,
        positions=rng.uniform(-10, 10, size=(h, w, 3)).astype(np.float32),
        confidence=rng.uniform(0, 1, size=(h, w)).astype(np.float32),
        rgb=rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8),
        static_mask=rng.integers(0, 2, size=(h, w)).astype(bool) if with_mask else None,
    )


def test_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    pm = make_pointmap(rng)
    path = tmp_path / "pm.gpm1"
    save_pointmap(pm, path)
    back = load_pointmap(path)
    assert back.width == 4 and back.height == 4
    assert np.array_equal(back.positions, pm.positions)
    assert np.array_equal(back.confidence, pm.confidence)
    assert np.array_equal(back.rgb, pm.rgb)
    assert np.array_equal(back.static_mask, pm.static_mask)


def test_round_trip_without_mask(tmp_path):
    rng = np.random.default_rng(1)
    pm = make_pointmap(rng, with_mask=False)
    path = tmp_path / "pm.gpm1"
    save_pointmap(pm, path)
    assert load_pointmap(path).static_mask is None


def test_file_size_arithmetic(tmp_path):
    rng = np.random.default_rng(2)
    pm = make_pointmap(rng, w=720, h=480, with_mask=False)
    path = tmp_path / "pm.gpm1"
    save_pointmap(pm, path)
    assert path.stat().st_size == HEADER_SIZE + 480 * 720 * (12 + 4 + 3)
    pm_mask = make_pointmap(rng, w=720, h=480, with_mask=True)
    save_pointmap(pm_mask, path)
    assert path.stat().st_size == HEADER_SIZE + 480 * 720 * (12 + 4 + 3 + 1)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.gpm1"
    path.write_bytes(b"XXXX" + b"\x00" * 64)
    with pytest.raises(BadMagic):
        load_pointmap(path)


def test_truncated(tmp_path):
    rng = np.random.default_rng(3)
    pm = make_pointmap(rng)
    path = tmp_path / "pm.gpm1"
    save_pointmap(pm, path)
    data = path.read_bytes()
    path.write_bytes(data[:-7])
    with pytest.raises(TruncatedFile):
        load_pointmap(path)


def test_trailing_garbage_rejected(tmp_path):
    rng = np.random.default_rng(4)
    pm = make_pointmap(rng)
    path = tmp_path / "pm.gpm1"
    save_pointmap(pm, path)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(DimensionMismatch):
        load_pointmap(path)


def test_out_of_range_confidence_rejected(tmp_path):
    rng = np.random.default_rng(5)
    pm = make_pointmap(rng)
    bad = PointMap(
        width=pm.width,
        height=pm.height,
        positions=pm.positions,
        confidence=pm.confidence.copy(),
        rgb=pm.rgb,
    )
    bad.confidence[0, 0] = 1.5
    with pytest.raises(NonFiniteValue):
        save_pointmap(bad, tmp_path / "x.gpm1")
    good = make_pointmap(rng)
    path = tmp_path / "pm.gpm1"
    save_pointmap(good, path)
    # corrupt a confidence float in place: header + positions + first conf
    data = bytearray(path.read_bytes())
    off = HEADER_SIZE + 4 * 4 * 12
    data[off : off + 4] = np.float32(1.5).tobytes()
    path.write_bytes(bytes(data))
    with pytest.raises(NonFiniteValue):
        load_pointmap(path)


def test_nonfinite_position_rejected(tmp_path):
    rng = np.random.default_rng(6)
    pm = make_pointmap(rng)
    pm.positions[1, 1, 2] = np.nan
    with pytest.raises(NonFiniteValue):
        save_pointmap(pm, tmp_path / "x.gpm1")


def test_dimension_mismatch():
    rng = np.random.default_rng(7)
    pm = make_pointmap(rng)
    with pytest.raises(DimensionMismatch):
        PointMap(
            width=5,
            height=4,
            positions=pm.positions,
            confidence=pm.confidence,
            rgb=pm.rgb,
        ).validate()


def test_threshold_all_pass():
    rng = np.random.default_rng(8)
    pm = make_pointmap(rng, w=6, h=5)
    pm.confidence[:] = 1.0
    cloud = threshold_cloud(pm, 0.65)
    assert len(cloud) == 30


def test_threshold_strict_at_equality():
    rng = np.random.default_rng(9)
    pm = make_pointmap(rng, w=3, h=3)
    pm.confidence[:] = 0.65
    assert len(threshold_cloud(pm, 0.65)) == 0


def test_threshold_matches_per_pixel_scan():
    rng = np.random.default_rng(10)
    pm = make_pointmap(rng, w=17, h=13)
    tau = 0.4
    cloud = threshold_cloud(pm, tau)
    expected = sum(
        1
        for i in range(13)
        for j in range(17)
        if pm.confidence[i, j] > tau
    )
    assert len(cloud) == expected
    for k in range(len(cloud)):
        i, j = cloud.source_pixels[k]
        assert pm.confidence[i, j] > tau
        assert np.array_equal(cloud.colors[k], pm.rgb[i, j])


@settings(max_examples=30, deadline=None)
@given(
    tau1=st.floats(0.0, 1.0),
    tau2=st.floats(0.0, 1.0),
    seed=st.integers(0, 1000),
)
def test_threshold_monotone(tau1, tau2, seed):
    if tau1 > tau2:
        tau1, tau2 = tau2, tau1
    rng = np.random.default_rng(seed)
    pm = make_pointmap(rng, w=8, h=6)
    hi = {tuple(p) for p in threshold_cloud(pm, tau2).source_pixels}
    lo = {tuple(p) for p in threshold_cloud(pm, tau1).source_pixels}
    assert hi <= lo


def test_unique_source_pixels():
    rng = np.random.default_rng(11)
    pm = make_pointmap(rng, w=10, h=10)
    cloud = threshold_cloud(pm, 0.3)
    pix = [tuple(p) for p in cloud.source_pixels]
    assert len(pix) == len(set(pix))
