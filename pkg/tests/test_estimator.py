from __future__ import annotations

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from roomtagger.estimator import RoomTagger
from roomtagger.labels import CANONICAL_LABELS, ClassLabel
from synthdata import class_image, encode_image


@pytest.fixture(scope="module")
def fitted(quick_corpus):
    tagger = RoomTagger(
        backbone="tiny_test",
        pretrained=False,
        input_size=64,
        batch_size=8,
        epochs_stage1=2,
        epochs_stage2=2,
        seed=23,
    )
    return tagger.fit(quick_corpus)


class TestSklearnProtocol:
    def test_get_params_round_trips_through_clone(self):
        tagger = RoomTagger(backbone="tiny_test", pretrained=False, seed=9)
        duplicate = clone(tagger)
        assert duplicate.get_params() == tagger.get_params()

    def test_set_params_chains(self):
        tagger = RoomTagger().set_params(seed=4, epochs_stage1=1)
        assert tagger.seed == 4 and tagger.epochs_stage1 == 1

    def test_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            RoomTagger().predict(["whatever.png"])

    def test_classes_in_canonical_order(self, fitted):
        assert list(fitted.classes_) == [l.value for l in CANONICAL_LABELS]


class TestFitPredict:
    def test_predict_proba_shape_and_simplex(self, fitted):
        rng = np.random.default_rng(5)
        images = [encode_image(class_image(l, rng, 64)) for l in CANONICAL_LABELS]
        probs = fitted.predict_proba(images)
        assert probs.shape == (6, 6)
        assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-5)

    def test_predict_accepts_paths_and_arrays(self, fitted, tmp_path):
        rng = np.random.default_rng(6)
        array = class_image(ClassLabel.BEDROOM, rng, 64)
        path = tmp_path / "one.png"
        path.write_bytes(encode_image(array))
        from_path = fitted.predict([path])
        from_array = fitted.predict([array])
        assert from_path[0] == from_array[0]

    def test_score_on_separable_data(self, fitted, tmp_path):
        rng = np.random.default_rng(7)
        paths, labels = [], []
        for label in CANONICAL_LABELS:
            for i in range(2):
                p = tmp_path / f"{label.value}_{i}.png"
                p.write_bytes(encode_image(class_image(label, rng, 64)))
                paths.append(p)
                labels.append(label.value)
        assert fitted.score(paths, labels) >= 0.5

    def test_fit_with_paths_and_labels(self, tmp_path):
        rng = np.random.default_rng(8)
        paths, labels = [], []
        for label in CANONICAL_LABELS:
            for i in range(4):
                p = tmp_path / f"{label.value}_{i}.png"
                p.write_bytes(encode_image(class_image(label, rng, 64)))
                paths.append(p)
                labels.append(label.value)
        tagger = RoomTagger(
            backbone="tiny_test", pretrained=False, input_size=64,
            batch_size=8, epochs_stage1=1, epochs_stage2=0,
            validation_fraction=0.25, seed=3,
        )
        tagger.fit(paths, labels)
        assert tagger.report_ is not None
        assert len(tagger.report_.records) == 1

    def test_fit_manifest_with_y_rejected(self, quick_corpus):
        tagger = RoomTagger(backbone="tiny_test", pretrained=False)
        with pytest.raises(ValueError, match="y must be None"):
            tagger.fit(quick_corpus, y=["bedroom"])


class TestBundleInterop:
    def test_export_then_rehydrate_matches(self, fitted, tmp_path):
        rng = np.random.default_rng(9)
        image = encode_image(class_image(ClassLabel.BALCONY, rng, 64))
        bundle = fitted.export_bundle(tmp_path / "bundle")
        reloaded = RoomTagger.from_bundle(bundle.path)
        original = fitted.predict_proba([image])
        restored = reloaded.predict_proba([image])
        assert np.max(np.abs(original - restored)) <= 1e-6
