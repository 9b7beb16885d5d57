import numpy as np
import pytest

from phida.datasets import BlobSpec, generate_blobs
from phida.learner import VARIANT_FLAGS, ModelState
from phida.snapshot import load_model, model_from_dict, model_to_dict, save_model


def trained_model(seed=0, finalize=True, variant="full"):
    ds = generate_blobs(
        BlobSpec(centers=[[0.0, 0.0], [10.0, 10.0]], stds=[0.6, 0.6], counts=[50, 50], seed=seed)
    )
    model = ModelState(VARIANT_FLAGS[variant])
    for row in ds.features:
        model.process_sample(row)
    if finalize:
        model.finalize()
    return model, ds


class TestSnapshotRoundTrip:
    def test_predictions_survive_round_trip(self, tmp_path):
        model, ds = trained_model()
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert np.array_equal(back.predict_batch(ds.features), model.predict_batch(ds.features))
        assert back.vigilance.tau == model.vigilance.tau
        assert back.vigilance.lam == model.vigilance.lam
        assert back.node_count == model.node_count

    def test_resumed_training_matches_uninterrupted(self, tmp_path):
        ds = generate_blobs(
            BlobSpec(centers=[[0.0, 0.0], [10.0, 10.0]], stds=[0.6, 0.6], counts=[40, 40], seed=3)
        )
        half = ds.n_samples // 2

        continuous = ModelState()
        for row in ds.features:
            continuous.process_sample(row)
        continuous.finalize()

        first = ModelState()
        for row in ds.features[:half]:
            first.process_sample(row)
        path = tmp_path / "checkpoint.json"
        save_model(first, path)
        resumed = load_model(path)
        for row in ds.features[half:]:
            resumed.process_sample(row)
        resumed.finalize()

        assert np.array_equal(continuous.representatives(), resumed.representatives())
        assert np.array_equal(continuous.supports(), resumed.supports())
        assert continuous.ph_view.mapping == resumed.ph_view.mapping

    def test_flags_preserved(self, tmp_path):
        model, _ = trained_model(variant="noPH")
        path = tmp_path / "m.json"
        save_model(model, path)
        back = load_model(path)
        assert back.flags == VARIANT_FLAGS["noPH"]

    def test_header_validation(self):
        model, _ = trained_model()
        doc = model_to_dict(model)
        doc["format"] = "something-else"
        with pytest.raises(ValueError, match="snapshot"):
            model_from_dict(doc)
        doc = model_to_dict(model)
        doc["version"] = 99
        with pytest.raises(ValueError, match="version"):
            model_from_dict(doc)

    def test_empty_model_rejected(self):
        with pytest.raises(ValueError):
            model_to_dict(ModelState())

    def test_unfinalized_model_round_trips(self, tmp_path):
        model, _ = trained_model(finalize=False, variant="noRefresh")
        assert model.ph_view is None
        path = tmp_path / "raw.json"
        save_model(model, path)
        back = load_model(path)
        assert back.ph_view is None
        assert back.samples_seen == model.samples_seen
