import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowdesc.dictionary import Dictionary, kmeans_approx
from flowdesc.encoding import (FAILED, STRATEGIES, TABLE_I, check_combination, encode_de, encode_local, encode_md,
                               encode_sd, extract_local, load_encoded, loads_encoded, dumps_encoded, raw_histogram,
                               save_encoded, write_encoded_csv)
from flowdesc.errors import ConfigError, FormatError
from flowdesc.fields import CHANNELS, FlowField
from flowdesc.synth import SynthParams, synth_field


def _synth(w=192, h=128, gamma=4.0, seed=3):
    return synth_field(SynthParams(9.0, 1.0, gamma, 0.3, 0.5, 2, seed=seed), w, h)[0]


def _dicts_for(local, k, seed=0):
    return [kmeans_approx(b, min(k, len(np.unique(b, axis=0))), seed) for b in local.blocks]


# ---------------------------------------------------------------------------
# combination table

def test_table_cells():
    allowed = {(d, s, m) for (d, s), modes in TABLE_I.items() for m in modes}
    for det in ("dog", "hessian", "orb", "fast"):
        for desc in ("sift", "surf", "orb", "brisk"):
            for mode in ("sd", "md"):
                if (det, desc, mode) in allowed:
                    check_combination(mode, det, desc)
                else:
                    with pytest.raises(ConfigError) as e:
                        check_combination(mode, det, desc)
                    tag = "'x'" if (det, desc, mode) in FAILED else "'-'"
                    assert tag in str(e.value)
    check_combination("de-md", "dense", "sift")
    check_combination("de-sd", None, "orb")
    with pytest.raises(ConfigError):
        check_combination("de-md", "dense", "surf")
    with pytest.raises(ConfigError):
        check_combination("dm", "fast", "sift")
    assert set(STRATEGIES) == {"sd", "md", "de-sd", "de-md"}


def test_sift_detector_with_orb_descriptor_is_config_error():
    with pytest.raises(ConfigError):
        extract_local(_synth(48, 32), "md", "dog", "orb")


# ---------------------------------------------------------------------------
# histograms

def test_single_keypoint_histogram():
    d = Dictionary("real", np.eye(4, 128))
    block = np.zeros((1, 128), np.float32)
    block[0, 2] = 1.0
    from flowdesc.encoding import LocalFeatures

    g = encode_local(LocalFeatures((block,), "sd", (1,)), [d])
    assert g.values.tolist() == [0.0, 0.0, 1.0, 0.0] and not g.empty


def test_zero_keypoints_give_flagged_zero_vector():
    flat = FlowField(CHANNELS, np.ones((5, 48, 48), np.float32))
    d = Dictionary("real", np.eye(3, 640))
    g = encode_sd(flat, "fast", "sift", d)
    assert g.empty and not g.values.any() and len(g.values) == 3


def test_md_zero_block_leaves_others_untouched():
    f = _synth(64, 48)
    data = f.data.copy()
    data[3] = 0.25  # constant nut: FAST finds nothing there
    f2 = FlowField(CHANNELS, data)
    local = extract_local(f2, "md", "fast", "sift")
    assert local.n_keypoints[3] == 0 and sum(local.n_keypoints) > 0
    dicts = [kmeans_approx(b, 2, 0) if len(b) >= 2 else Dictionary("real", np.zeros((2, 128))) for b in local.blocks]
    g = encode_local(local, dicts)
    blocks = g.values.reshape(5, 2)
    assert not blocks[3].any()
    for m in range(5):
        if local.n_keypoints[m]:
            assert blocks[m].sum() == pytest.approx(1.0, abs=1e-6)
    assert g.empty_blocks[3] and not g.empty


def test_md_lengths():
    f = _synth()
    local = extract_local(f, "de-md", None, "sift")
    sizes = [32, 32, 64, 512, 512]
    # real centers need not come from training for a length check
    rng = np.random.default_rng(0)
    dicts = [Dictionary("real", rng.random((k, 128))) for k in sizes]
    g = encode_local(local, dicts)
    assert len(g.values) == 1152 and g.layout == tuple(sizes)
    g = encode_de(f, "sift", [Dictionary("real", rng.random((256, 128)))] * 5)
    assert len(g.values) == 1280 and g.layout == (256,) * 5


def test_de_counts_and_mass():
    f = _synth()
    md = extract_local(f, "de-md", None, "sift")
    assert md.n_keypoints == (320,) * 5
    sd = extract_local(f, "de-sd", None, "sift")
    assert sd.n_keypoints == (320,) and sd.blocks[0].shape == (320, 640)
    d = kmeans_approx(sd.blocks[0], 8, 0)
    assert raw_histogram(sd, [d]).sum() == 320
    g = encode_local(sd, [d])
    assert g.values.sum() == pytest.approx(1.0, abs=1e-6) and (g.values >= 0).all()


def test_sd_histogram_mass_equals_kept_keypoints():
    f = _synth(96, 64)
    local = extract_local(f, "sd", "fast", "sift")
    d = kmeans_approx(local.blocks[0], 4, 0)
    assert raw_histogram(local, [d]).sum() == local.n_keypoints[0] == len(local.blocks[0])


def test_dictionary_mismatch_is_config_error():
    f = _synth(64, 48)
    local = extract_local(f, "de-md", None, "sift")
    with pytest.raises(ConfigError):
        encode_local(local, [Dictionary("real", np.zeros((2, 64)))] * 5)
    with pytest.raises(ConfigError):
        encode_local(local, [Dictionary("real", np.zeros((2, 128)))] * 4)
    with pytest.raises(ConfigError):
        encode_md(f, "fast", "sift", {"u": Dictionary("real", np.zeros((2, 128)))})


def test_md_accepts_named_dictionaries():
    f = _synth(64, 48)
    local = extract_local(f, "de-md", None, "sift")
    dicts = _dicts_for(local, 4)
    a = encode_de(f, "sift", dicts)
    b = encode_de(f, "sift", dict(zip(CHANNELS, dicts)))
    assert np.array_equal(a.values, b.values)


@settings(max_examples=5, deadline=None)
@given(g1=st.floats(-10, 10), g2=st.floats(-10, 10))
def test_permuting_batch_permutes_encodings(g1, g2):
    fa, fb = _synth(64, 48, g1), _synth(64, 48, g2)
    la = extract_local(fa, "de-md", None, "sift")
    lb = extract_local(fb, "de-md", None, "sift")
    dicts = _dicts_for(la, 3)
    ea, eb = encode_local(la, dicts), encode_local(lb, dicts)
    again = [encode_local(x, dicts) for x in (lb, la)]
    assert np.array_equal(again[0].values, eb.values) and np.array_equal(again[1].values, ea.values)


# ---------------------------------------------------------------------------
# FGE1

def test_fge_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.random((4, 7))
    ids = ["a", "bé", "c", ""]
    save_encoded(ids, X, tmp_path / "x.fge")
    back_ids, back = load_encoded(tmp_path / "x.fge")
    assert back_ids == ids and back.tobytes() == X.tobytes()
    raw = (tmp_path / "x.fge").read_bytes()
    assert raw[:4] == b"FGE1" and np.frombuffer(raw[4:12], "<u4").tolist() == [4, 7]
    write_encoded_csv(ids, X, tmp_path / "x.csv")
    lines = (tmp_path / "x.csv").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 5 and lines[1].startswith("a,")


def test_fge_corrupt():
    raw = dumps_encoded(["a"], np.zeros((1, 2)))
    for bad in (b"NOPE" + raw[4:], raw[:-1], raw + b"\0"):
        with pytest.raises(FormatError):
            loads_encoded(bad)
    with pytest.raises(FormatError):
        dumps_encoded(["a", "b"], np.zeros((1, 2)))
