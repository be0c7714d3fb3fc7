import json

import numpy as np
import pytest

import dceformer


def small_config(steps):
    return {
        "preset": "desk_overfit",
        "max_steps": steps,
        "seed": 1,
        "generator": {"lewin_depths": [1, 1, 1, 1], "bottleneck_depth": 1},
        "critic": {"base_width": 8},
    }


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "train.dcef"
    dceformer.write_phantom_dataset(str(path), studies=1, base_seed=2)
    return path


def test_phantom_volumes():
    p = dceformer.generate_phantom(3)
    assert set(p["volumes"]) == {"T2W", "ADC", "T1PRE", "DCE_EARLY", "DCE_LATE"}
    t2 = p["volumes"]["T2W"]
    assert t2.ndim == 3
    assert 0.0 <= t2.min() and t2.max() <= 1.0
    assert p["lesion_mask"].shape == t2.shape
    again = dceformer.generate_phantom(3)
    np.testing.assert_array_equal(again["volumes"]["ADC"], p["volumes"]["ADC"])


def test_dataset_round_trip(dataset):
    studies = dceformer.load_dataset(str(dataset))
    assert len(studies) == 1
    assert studies[0]["volumes"]["DCE_LATE"].shape == (8, 64, 64)


def test_losses_and_metrics():
    rng = np.random.default_rng(0)
    x = rng.random((64, 64), dtype=np.float32)
    low, high = dceformer.frequency_split(x)
    assert np.abs(x - (low + high)).max() < 1e-6
    assert abs(dceformer.gaussian_kernel(13, 2.0).sum() - 1.0) < 1e-7
    assert dceformer.freq_pixel_loss(x, x) == 0.0
    assert dceformer.freq_fft_loss(x, x) == 0.0
    assert dceformer.psnr(x, x) == 100.0
    assert abs(dceformer.psnr(x + np.float32(0.1), x) - 20.0) < 1e-3
    assert abs(dceformer.ssim(x, x) - 1.0) < 1e-9
    assert abs(dceformer.mae(x + np.float32(0.1), x) - 0.1) < 1e-6
    q = ((rng.integers(0, 64, (16, 16)) + 0.5) / 64).astype(np.float32)
    assert dceformer.nmi(q, q, bandwidth=1 / 320) >= 0.999
    assert 0.0 < dceformer.nmi(q, q) <= 1.0 + 1e-3
    assert dceformer.fid(np.array([[-1.0], [1.0]]), np.array([[0.0], [2.0]])) == pytest.approx(1.0)


def test_errors_raise():
    with pytest.raises(dceformer.Error):
        dceformer.load_dataset("/nonexistent/file.dcef")
    with pytest.raises(RuntimeError):
        dceformer.psnr(np.zeros((4, 4), np.float32), np.zeros((4, 5), np.float32))


def test_generator_forward():
    g = dceformer.Generator(json.dumps(small_config(1)))
    y = g(np.random.default_rng(1).random((1, 3, 64, 64), dtype=np.float32))
    assert y.shape == (1, 2, 64, 64)
    assert 0.0 < y.min() and y.max() < 1.0
    assert g.parameter_count > 0


def test_train_and_evaluate(dataset, tmp_path):
    history = dceformer.train(small_config(3), dataset, tmp_path)
    assert [h["step"] for h in history] == [1, 2, 3]
    assert set(history[0]["terms"]) == {"adv", "L1", "MI", "freq_pix", "freq_fft", "gp"}
    again = dceformer.train(small_config(3), dataset)
    assert [h["total"] for h in again] == [h["total"] for h in history]
    report = json.loads(dceformer.evaluate(str(tmp_path / "final.ckpt"), str(dataset)))
    assert report["sample_count"] == 8
    assert set(report["phases"]) == {"early", "late"}
    g = dceformer.Generator.load(str(tmp_path / "final.ckpt"))
    assert g(np.zeros((1, 3, 64, 64), np.float32)).shape == (1, 2, 64, 64)
