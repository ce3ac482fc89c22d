import math

import numpy as np
import pytest

import itmcodec as itm


@pytest.fixture(scope="module")
def scenes():
    return [itm.synthetic_scene(seed, 64, 64) for seed in range(2)]


@pytest.fixture(scope="module")
def codec(scenes):
    return itm.train(scenes, styles=["reinhard", "durand"], epochs=2, batch_size=2, base_channels=8, seed=3)


def test_hdr_round_trip(tmp_path, scenes):
    path = tmp_path / "a.hdr"
    itm.write_hdr(scenes[0], path)
    back = itm.read_hdr(path)
    assert back.shape == (64, 64, 3)
    peak = scenes[0].max(axis=2, keepdims=True)
    assert np.all(np.abs(back - scenes[0]) <= 0.005 * peak + 1e-30)


def test_ldr_round_trip(tmp_path):
    img = np.random.default_rng(0).integers(0, 256, (40, 50, 3), dtype=np.uint8)
    itm.write_ldr(img, tmp_path / "a.png")
    assert np.array_equal(itm.read_ldr(tmp_path / "a.png"), img)
    itm.write_ldr(img, tmp_path / "a.jpg", jpeg_quality=90)
    assert itm.read_ldr(tmp_path / "a.jpg").shape == img.shape


def test_tone_mapping_and_metrics(scenes):
    ldr = itm.reinhard(scenes[0])
    assert ldr.dtype == np.uint8 and ldr.shape == (64, 64, 3)
    assert itm.durand(scenes[0]).shape == (64, 64, 3)
    x = ldr.astype(np.float32) / 255
    assert itm.ssim(x, x) == pytest.approx(1.0, abs=1e-9)
    assert math.isinf(itm.pu_psnr(scenes[0], scenes[0]))


def test_codec_encode_decode(tmp_path, codec, scenes):
    assert codec.styles == ["durand", "reinhard"]
    for style in codec.styles:
        ldr = codec.encode(scenes[1], style)
        assert ldr.dtype == np.uint8 and ldr.shape == (64, 64, 3)
        hdr = codec.decode(ldr)
        assert hdr.shape == (64, 64, 3) and np.all(np.isfinite(hdr))
        row = itm.evaluate(hdr, scenes[1], ldr, itm.reinhard(scenes[1]))
        assert set(row) == {"ldr_psnr", "ldr_ssim", "pu_psnr", "pu_ssim", "pu_msssim"}

    codec.save(tmp_path / "m.pt", tmp_path / "m.profile")
    again = itm.Codec.load(tmp_path / "m.pt", tmp_path / "m.profile")
    ldr = codec.encode(scenes[0], "reinhard")
    assert np.array_equal(again.encode(scenes[0], "reinhard"), ldr)
    assert np.array_equal(again.decode(ldr), codec.decode(ldr))


def test_rd_curve(codec, scenes):
    points = codec.rd_curve(scenes, [50, 90])
    assert [q for q, _, _ in points] == [50, 90]
    assert points[0][1] < points[1][1]


def test_errors_carry_their_kind(codec, scenes):
    with pytest.raises(itm.ItmError, match="Style|style"):
        codec.encode(scenes[0], "aubry")
    with pytest.raises(itm.ItmError):
        itm.read_hdr("/nonexistent.hdr")
