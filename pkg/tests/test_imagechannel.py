import numpy as np
import pytest

from rolecast.errors import ConfigError, DataFormatError
from rolecast.imagechannel import (
    IMAGE_STAT_DIM,
    build_fallback_source,
    channel_probs,
    external_source,
    image_stat_vector,
    load_external_probs,
    uniform_source,
)
from rolecast.learners import ForestParams

from conftest import make_user


def solid(r, g, b, shape=(4, 4)):
    arr = np.zeros((*shape, 3), dtype=np.uint8)
    arr[..., 0], arr[..., 1], arr[..., 2] = r, g, b
    return arr


class TestImageStats:
    def test_all_white(self):
        assert image_stat_vector(solid(255, 255, 255)).tolist() == [1, 1, 0, 1, 0, 1, 0]

    def test_all_black(self):
        assert image_stat_vector(solid(0, 0, 0)).tolist() == [0] * IMAGE_STAT_DIM

    def test_uniform_gray(self):
        stats = image_stat_vector(solid(128, 128, 128))
        assert stats[0] == pytest.approx(0.502, abs=1e-3)
        assert stats[1] == stats[3] == stats[5] == pytest.approx(128 / 255)
        assert stats[2] == stats[4] == stats[6] == 0.0

    def test_zero_pixels_rejected(self):
        with pytest.raises(DataFormatError):
            image_stat_vector(np.zeros((0, 2, 3), dtype=np.uint8))


class TestLoadExternalProbs:
    def test_simple_line(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("u1 0.2 0.3 0.5\n", encoding="utf-8")
        assert load_external_probs(path) == {"u1": (0.2, 0.3, 0.5)}

    def test_renormalized_within_tolerance(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("u1 0.2 0.3 0.504\n", encoding="utf-8")
        probs = load_external_probs(path)["u1"]
        assert sum(probs) == pytest.approx(1.0, abs=1e-12)
        assert probs[0] == pytest.approx(0.2 / 1.004)

    @pytest.mark.parametrize(
        "line,message",
        [
            ("u1 -0.1 0.6 0.5", "negative"),
            ("u1 0.2 0.3", "expected user_id"),
            ("u1 0.5 0.5 0.5", "outside"),
            ("u1 a b c", "non-numeric"),
        ],
    )
    def test_rejections(self, tmp_path, line, message):
        path = tmp_path / "p.txt"
        path.write_text(line + "\n", encoding="utf-8")
        with pytest.raises(DataFormatError, match=message):
            load_external_probs(path)

    def test_duplicate_user(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("u1 1 0 0\nu1 0 1 0\n", encoding="utf-8")
        with pytest.raises(DataFormatError, match="duplicate"):
            load_external_probs(path)

    def test_two_class_file(self, tmp_path):
        path = tmp_path / "p.txt"
        path.write_text("u1 0.7 0.3\n", encoding="utf-8")
        assert load_external_probs(path, n_classes=2) == {"u1": (0.7, 0.3)}


class TestChannelProbs:
    def test_uniform(self):
        probs, flagged = channel_probs(make_user(0), uniform_source(3))
        assert probs.tolist() == [1 / 3, 1 / 3, 1 / 3]
        assert not flagged

    def test_external_present(self):
        source = external_source({"user0": (0.2, 0.3, 0.5)}, 3)
        probs, flagged = channel_probs(make_user(0), source)
        assert probs.tolist() == [0.2, 0.3, 0.5]
        assert not flagged

    def test_external_missing_falls_back_uniform_flagged(self):
        source = external_source({"someone_else": (1.0, 0.0, 0.0)}, 3)
        probs, flagged = channel_probs(make_user(0), source)
        assert probs.tolist() == [1 / 3, 1 / 3, 1 / 3]
        assert flagged

    def test_external_wrong_width_rejected(self):
        with pytest.raises(DataFormatError):
            external_source({"u": (0.5, 0.5)}, 3)


class TestFallbackSource:
    def make_stats(self):
        rng = np.random.default_rng(0)
        bright = rng.uniform(0.7, 0.9, size=(10, IMAGE_STAT_DIM))
        dark = rng.uniform(0.1, 0.3, size=(10, IMAGE_STAT_DIM))
        stats = [row for row in np.concatenate([bright, dark])]
        y = np.array([0] * 10 + [1] * 10)
        return stats, y

    def test_trains_and_predicts(self):
        stats, y = self.make_stats()
        source = build_fallback_source(stats, y, 2, ForestParams(n_trees=10), seed=0)
        probs, flagged = channel_probs(make_user(0), source, stats=stats[0])
        assert not flagged
        assert probs.argmax() == 0

    def test_missing_stats_imputed_and_flagged(self):
        stats, y = self.make_stats()
        source = build_fallback_source(stats, y, 2, ForestParams(n_trees=10), seed=0)
        probs, flagged = channel_probs(make_user(0), source)  # no image on record
        assert flagged
        assert probs.sum() == pytest.approx(1.0)

    def test_no_images_at_all_rejected(self):
        with pytest.raises(ConfigError):
            build_fallback_source([None, None], np.array([0, 1]), 2, ForestParams(n_trees=2), 0)

    def test_imputation_uses_mean_of_present(self):
        stats, y = self.make_stats()
        with_gap = list(stats)
        with_gap[5] = None
        source = build_fallback_source(with_gap, y, 2, ForestParams(n_trees=5), seed=0)
        present = np.stack([s for s in with_gap if s is not None])
        assert np.allclose(source.impute_stats, present.mean(axis=0))
