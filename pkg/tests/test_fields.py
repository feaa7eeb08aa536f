import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from flowdesc.errors import DataError, FormatError, InputError
from flowdesc.fields import (CHANNELS, FlowField, SampleRecord, ScatteredSamples, crop_window, decode_field,
                             interpolate_grid, normalize_channel, read_field, read_manifest, write_field,
                             write_manifest)


def _field(h=4, w=6, seed=0):
    rng = np.random.default_rng(seed)
    return FlowField(CHANNELS, rng.standard_normal((5, h, w)).astype(np.float32))


def test_round_trip_bit_identical(tmp_path):
    f = _field()
    write_field(f, tmp_path / "a.ffb")
    g = read_field(tmp_path / "a.ffb")
    assert g == f
    assert g.data.tobytes() == f.data.tobytes()
    # byte layout: magic, three u32, then names
    raw = (tmp_path / "a.ffb").read_bytes()
    assert raw[:4] == b"FFB1"
    assert np.frombuffer(raw[4:16], "<u4").tolist() == [4, 6, 5]
    assert raw[16:19] == b"\x01\x00u"


def test_one_pixel_zero_field(tmp_path):
    f = FlowField(CHANNELS, np.zeros((5, 1, 1), np.float32))
    write_field(f, tmp_path / "z.ffb")
    g = read_field(tmp_path / "z.ffb")
    assert g.names == CHANNELS and g.height == g.width == 1
    assert not g.data.any()


def test_bad_magic_is_format_error(tmp_path):
    p = tmp_path / "bad.ffb"
    write_field(_field(), p)
    raw = bytearray(p.read_bytes())
    raw[:4] = b"XXXX"
    p.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        read_field(p)


def test_nan_payload_and_size_mismatch_are_data_errors(tmp_path):
    p = tmp_path / "a.ffb"
    write_field(_field(), p)
    raw = bytearray(p.read_bytes())
    nan = np.array([np.nan], "<f4").tobytes()
    raw[-4:] = nan
    with pytest.raises(DataError):
        decode_field(bytes(raw))
    with pytest.raises(DataError):
        decode_field(bytes(raw[:-8]))


def test_field_invariants():
    with pytest.raises(DataError):
        FlowField(("u", "u"), np.zeros((2, 3, 3)))
    with pytest.raises(DataError):
        FlowField.from_channels({"u": np.zeros((2, 2)), "v": np.zeros((3, 2))})
    with pytest.raises(DataError):
        FlowField(("u",), np.full((1, 2, 2), np.inf))
    f = _field()
    with pytest.raises(ValueError):
        f.data[0, 0, 0] = 1.0


def test_canonical_reorders_channels():
    f = _field()
    shuffled = FlowField(tuple(reversed(f.names)), f.data[::-1])
    assert shuffled.canonical() == f
    assert not FlowField(("u",), np.zeros((1, 2, 2))).has_canonical_channels()
    with pytest.raises(DataError):
        FlowField(("u",), np.zeros((1, 2, 2))).canonical()


def test_manifest_round_trip(tmp_path):
    recs = [SampleRecord("a", None, 0.1, -2.5, 3.0, "s1", "fields/a.ffb"),
            SampleRecord("b", None, 0.2, 1.0, None, None, str(tmp_path / "b.ffb"))]
    write_manifest(recs, tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "id,path,drag,lift,angle_of_attack,shape_id"
    back = read_manifest(tmp_path / "m.csv")
    assert [r.id for r in back] == ["a", "b"]
    assert back[0].path == str(tmp_path / "fields/a.ffb")
    assert back[0].angle_of_attack == 3.0 and back[1].angle_of_attack is None
    assert back[0].lift == -2.5


def test_manifest_duplicate_ids_and_bad_targets(tmp_path):
    p = tmp_path / "m.csv"
    p.write_text("id,path,drag,lift,angle_of_attack,shape_id\na,x,1,2,,\na,y,1,2,,\n")
    with pytest.raises(DataError):
        read_manifest(p)
    p.write_text("id,path,drag,lift,angle_of_attack,shape_id\na,x,nan,2,,\n")
    with pytest.raises(DataError):
        read_manifest(p)
    p.write_text("id,path,drag\n")
    with pytest.raises(FormatError):
        read_manifest(p)


def test_interpolate_constant_and_single_point():
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 1, (30, 2))
    f = interpolate_grid(ScatteredSamples(pts, {"u": np.full(30, 5.0)}), 7, 5, (0, 1, 0, 1))
    assert np.all(f.data == 5.0)
    g = interpolate_grid(ScatteredSamples([[0.3, 0.4]], {"u": [3.2]}), 4, 3, (0, 1, 0, 1))
    assert np.allclose(g.data, np.float32(3.2), rtol=0, atol=0)


def test_interpolate_linear_plane():
    rng = np.random.default_rng(2)
    gx, gy = np.meshgrid(np.linspace(0, 1, 50), np.linspace(0, 1, 50))
    pts = np.column_stack([gx.ravel(), gy.ravel()]) + rng.uniform(-0.005, 0.005, (2500, 2))
    f = interpolate_grid(ScatteredSamples(pts, {"u": pts[:, 0]}), 16, 16, (0, 1, 0, 1))
    xs = np.linspace(0, 1, 16)
    assert np.abs(f.data[0] - xs[None, :]).max() <= 0.05 * (pts[:, 0].max() - pts[:, 0].min())


def test_interpolate_exact_coincidence():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.2, 0.7]])
    f = interpolate_grid(ScatteredSamples(pts, {"u": [1.0, 2.0, 9.0]}), 2, 2, (0, 1, 0, 1))
    assert f.data[0, 0, 0] == 1.0 and f.data[0, 1, 1] == 2.0


def test_interpolate_errors():
    with pytest.raises(InputError):
        ScatteredSamples(np.zeros((0, 2)), {})
    with pytest.raises(InputError):
        interpolate_grid(ScatteredSamples([[0, 0]], {"u": [1]}), 0, 3, (0, 1, 0, 1))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 40), seed=st.integers(0, 10_000))
def test_interpolation_stays_within_sample_range(n, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (n, 2))
    vals = rng.normal(size=n)
    f = interpolate_grid(ScatteredSamples(pts, {"u": vals}), 9, 6, (-1, 1, -1, 1))
    assert f.data.min() >= np.float32(vals.min()) and f.data.max() <= np.float32(vals.max())


def test_crop_examples():
    w, h = 4, 3
    ys, xs = np.mgrid[0:h, 0:w]
    f = FlowField(("u",), (10 * xs + ys)[None].astype(np.float32))
    assert crop_window(f, (0, 0, w, h)) == f
    c = crop_window(f, (0, 0, 2, 2))
    assert c.data[0, 0, 0] == 0 and c.data[0, 0, 1] == 10 and c.data[0, 1, 0] == 1 and c.data[0, 1, 1] == 11
    with pytest.raises(InputError):
        crop_window(f, (1, 0, 4, 1))


@settings(max_examples=30, deadline=None)
@given(x0=st.integers(0, 5), y0=st.integers(0, 3), w=st.integers(1, 6), h=st.integers(1, 4))
def test_crop_idempotent_and_commutes_with_normalization(x0, y0, w, h):
    f = _field(8, 12, seed=x0 + 7 * y0)
    rect = (x0, y0, w, h)
    c = crop_window(f, rect)
    assert crop_window(c, (0, 0, w, h)) == c
    # cropping commutes with the per-channel affine map fixed by the full field's range
    for ch in range(5):
        scaled, lo, hi, _ = normalize_channel(f.data[ch])
        cropped_first = (c.data[ch].astype(np.float64) - lo) / (hi - lo)
        assert np.array_equal(scaled[y0:y0 + h, x0:x0 + w], cropped_first)


def test_normalize_examples():
    out, lo, hi, deg = normalize_channel(np.array([0.0, 5.0, 10.0]))
    assert out.tolist() == [0.0, 0.5, 1.0] and (lo, hi, deg) == (0.0, 10.0, False)
    out, *_, deg = normalize_channel(np.full((3, 3), 7.0))
    assert deg and not out.any()


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (5, 5), elements=st.floats(0, 1)))
def test_normalize_idempotent_on_unit_range(g):
    g = g.copy()
    g[0, 0], g[-1, -1] = 0.0, 1.0
    assert np.allclose(normalize_channel(g)[0], g, atol=1e-15)
