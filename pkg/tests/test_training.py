import copy
import json

import numpy as np
import pytest
import torch

from app.services.encoders.factories import load_backend
from app.services.encoders.recognition import encode_categories
from app.services.events.synthetic import synthetic_image_pool
from app.services.objectives.losses import batch_consistency_loss
from app.services.prototypes.builder import build_prototypes, save_bank
from app.services.reconstruction.network import init_network
from app.services.representation.crop import crop_batch
from app.services.training.checkpoint import load_checkpoint, save_checkpoint
from app.services.training.config import TrainConfig
from app.services.training.dataset import UnlabeledEventDataset, resolve_categories
from app.services.training.interfaces import DatasetError, IncompatibleCheckpointError, TrainingConfigError, TrainingDivergedError, TrainingError
from app.services.training.schema import load_train_config
from app.services.training.step import StepResources, TrainingState, train_step
from app.services.training.trainer import Trainer, build_optimizer
from app.utils.artifacts import ArtifactIntegrityError
from app.utils.jsonl import read_json_lines


def _step_setup(config: TrainConfig, backend):
    categories = resolve_categories(config)
    net = init_network(config.net_config(), config.seed)
    state = TrainingState(net=net, optimizer=build_optimizer(net, config))
    resources = StepResources(backend=backend, text_features=encode_categories(backend, categories, config.template), categories=categories)
    dataset = UnlabeledEventDataset.from_manifest(config.manifest, config)
    return state, resources, dataset.load_many(dataset.batch_indices(config.seed, 0, config.batch_size))


def _state_dict(path):
    return load_checkpoint(path).state_dict


class TestTrainConfig:
    def test_defaults_follow_documented_hyperparameters(self):
        config = TrainConfig()

        assert (config.lambda_att, config.lambda_rep, config.lambda_con, config.k) == (1.0, 0.01, 1.0, 6)
        assert (config.batch_size, config.t_bins, config.resize, config.crop) == (32, 9, 224, 128)
        assert (config.optimizer, config.learning_rate, config.weight_decay) == ("lamb", 6e-3, 1e-4)

    @pytest.mark.parametrize(
        "changes",
        [{"k": 40}, {"crop": 256}, {"mode": "labels"}, {"mode": "visual_prototype"}, {"template": "image"}, {"template": "[CLASS] or [CLASS]"}, {"lambda_rep": -1.0}, {"prediction_temperature": 0.0}, {"resize": 222}],
    )
    def test_invalid_values(self, changes):
        with pytest.raises(TrainingConfigError):
            TrainConfig(**changes)

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(TrainingConfigError, match="labels"):
            TrainConfig.from_dict({"labels": "yes"})

    def test_schema_applies_defaults(self):
        config = load_train_config({"manifest": "m.csv", "k": 4})

        assert config.manifest == "m.csv"
        assert config.k == 4
        assert config.lambda_rep == 0.01

    @pytest.mark.parametrize("data", [{"k": 64}, {"crop": 300}, {"batch_size": 0}, {"unknown_field": 1}, {"optimizer": "sgd"}])
    def test_schema_errors(self, data):
        with pytest.raises(TrainingConfigError):
            load_train_config(data)

    def test_fingerprint_tracks_changes(self):
        config = TrainConfig()

        assert config.fingerprint() == TrainConfig().fingerprint()
        assert config.replace(k=4).fingerprint() != config.fingerprint()


class TestDataset:
    def test_batch_order_depends_only_on_seed_and_step(self, tiny_train_config):
        dataset = UnlabeledEventDataset.from_manifest(tiny_train_config.manifest, tiny_train_config)

        assert dataset.batch_indices(0, 5, 8) == dataset.batch_indices(0, 5, 8)
        assert dataset.batch_indices(0, 0, 8) != dataset.batch_indices(1, 0, 8)
        epoch = [index for step in range(dataset.batches_per_epoch(8)) for index in dataset.batch_indices(0, step, 8)]
        assert len(set(epoch)) == len(epoch) == 24

    def test_training_split_has_no_test_files(self, tiny_train_config):
        dataset = UnlabeledEventDataset.from_manifest(tiny_train_config.manifest, tiny_train_config)

        assert len(dataset) == 27

    def test_zero_shot_restriction(self, tiny_train_config):
        dataset = UnlabeledEventDataset.from_manifest(tiny_train_config.manifest, tiny_train_config, categories=["anchor"])

        assert len(dataset) == 9
        assert all(path.parent.name == "anchor" for path in dataset.paths)

    def test_parallel_loading_keeps_order(self, tiny_train_config):
        serial = UnlabeledEventDataset.from_manifest(tiny_train_config.manifest, tiny_train_config)
        parallel = UnlabeledEventDataset.from_manifest(tiny_train_config.manifest, tiny_train_config.replace(workers=3))

        for a, b in zip(serial.load_many([4, 1, 7]), parallel.load_many([4, 1, 7])):
            assert np.array_equal(a.t, b.t)

    def test_unreadable_file_names_path(self, tmp_path):
        broken = tmp_path / "broken.bin"
        broken.write_bytes(bytes(7))
        dataset = UnlabeledEventDataset([broken], 16, 16)

        with pytest.raises(DatasetError, match="broken.bin"):
            dataset.load(0)

    def test_categories_file_takes_precedence(self, tiny_train_config, tmp_path):
        categories_file = tmp_path / "cats.txt"
        categories_file.write_text("camera\nanchor\n")

        assert resolve_categories(tiny_train_config.replace(categories_file=str(categories_file))) == ["camera", "anchor"]
        assert resolve_categories(tiny_train_config) == ["anchor", "butterfly", "camera"]


class TestTrainStep:
    def test_batch_state_contents(self, tiny_train_config, stub_backend):
        state, resources, batch = _step_setup(tiny_train_config, stub_backend)

        batch_state = train_step(state, batch, tiny_train_config, np.random.default_rng(0), resources)

        assert state.step == 1
        assert batch_state.global_recon.shape == (8, 1, 16, 16)
        assert batch_state.local_recon.shape == (8, 1, 8, 8)
        assert len(batch_state.sets.s_ppi) == 3
        assert set(batch_state.sets.s_rds) <= set(batch_state.sets.s_ppi)
        assert set(batch_state.losses) == {"attraction", "repulsion", "consistency", "total"}
        assert all(np.isfinite(value) for value in batch_state.losses.values())
        assert sum(batch_state.pseudo_histogram(3)) == 8
        assert not batch_state.reversed_features.requires_grad

    def test_reversed_branch_adds_no_gradient(self, tiny_train_config, stub_backend):
        config = tiny_train_config.replace(lambda_att=0.0, lambda_rep=0.0, use_trci=True)
        state, resources, batch = _step_setup(config, stub_backend)
        reference = copy.deepcopy(state.net)
        calls = []
        state.net.register_forward_hook(lambda module, args, output: calls.append((args[0].detach().clone(), torch.is_grad_enabled())))

        batch_state = train_step(state, batch, config, np.random.default_rng(0), resources)

        assert [grad_enabled for _, grad_enabled in calls] == [True, False, True]
        inputs = calls[0][0]
        global_recon = reference(inputs)
        local_recon = reference(crop_batch(inputs, batch_state.rects))
        (config.lambda_con * batch_consistency_loss(local_recon, global_recon, batch_state.rects)).backward()
        for (name, expected), actual in zip(reference.named_parameters(), state.net.parameters()):
            torch.testing.assert_close(actual.grad, expected.grad, atol=1e-6, rtol=1e-5, msg=name)

    def test_reversed_branch_does_not_change_gradients(self, tiny_train_config, stub_backend):
        config = tiny_train_config.replace(lambda_att=0.0, lambda_rep=0.0)
        grads = []
        for use_trci in (True, False):
            state, resources, batch = _step_setup(config.replace(use_trci=use_trci), stub_backend)
            train_step(state, batch, config.replace(use_trci=use_trci), np.random.default_rng(0), resources)
            grads.append([parameter.grad.clone() for parameter in state.net.parameters()])

        for with_reversal, without_reversal in zip(*grads):
            torch.testing.assert_close(with_reversal, without_reversal)

    def test_backend_stays_frozen(self, tiny_train_config, stub_backend):
        before = stub_backend.checksum()
        state, resources, batch = _step_setup(tiny_train_config, stub_backend)

        train_step(state, batch, tiny_train_config, np.random.default_rng(0), resources)

        assert stub_backend.checksum() == before

    def test_no_gradient_signal_leaves_network_unchanged(self, tiny_train_config, stub_backend):
        config = tiny_train_config.replace(k=1, lambda_rep=0.0, lambda_con=0.0)
        state, resources, batch = _step_setup(config, stub_backend)
        before = {name: tensor.clone() for name, tensor in state.net.state_dict().items()}

        batch_state = train_step(state, batch, config, np.random.default_rng(0), resources)

        assert batch_state.attraction_skipped
        assert not batch_state.updated
        assert all(torch.equal(before[name], tensor) for name, tensor in state.net.state_dict().items())

    def test_step_updates_network(self, tiny_train_config, stub_backend):
        state, resources, batch = _step_setup(tiny_train_config, stub_backend)
        before = {name: tensor.clone() for name, tensor in state.net.state_dict().items()}

        batch_state = train_step(state, batch, tiny_train_config, np.random.default_rng(0), resources)

        assert batch_state.updated
        assert any(not torch.equal(before[name], tensor) for name, tensor in state.net.state_dict().items())

    def test_without_trci_every_sample_is_consistent(self, tiny_train_config, stub_backend):
        config = tiny_train_config.replace(use_trci=False)
        state, resources, batch = _step_setup(config, stub_backend)

        batch_state = train_step(state, batch, config, np.random.default_rng(0), resources)

        assert batch_state.sets.s_trci == tuple(range(8))
        assert batch_state.sets.s_rds == tuple(sorted(batch_state.sets.s_ppi))

    def test_invalid_probabilities_stop_training(self, tiny_train_config, stub_backend, monkeypatch):
        monkeypatch.setattr("app.services.training.step.class_probabilities", lambda features, text, temperature: torch.full((len(features), len(text)), float("nan")))
        state, resources, batch = _step_setup(tiny_train_config, stub_backend)

        with pytest.raises(TrainingDivergedError) as error:
            train_step(state, batch, tiny_train_config, np.random.default_rng(0), resources)

        assert error.value.term == "probabilities"
        assert state.step == 0

    def test_non_finite_loss_dumps_diagnostic(self, tiny_train_config, stub_backend, tmp_path, monkeypatch):
        monkeypatch.setattr("app.services.training.step.repulsion_loss", lambda features, *args: features.sum() * float("nan"))
        state, resources, batch = _step_setup(tiny_train_config, stub_backend)
        resources.diagnostics_dir = tmp_path

        with pytest.raises(TrainingDivergedError) as error:
            train_step(state, batch, tiny_train_config, np.random.default_rng(0), resources)

        assert error.value.term == "repulsion"
        dump = json.loads((tmp_path / "diverged_step_000000.json").read_text())
        assert dump["term"] == "repulsion"
        assert len(dump["pseudo"]) == 8

    def test_prototype_mode(self, tiny_train_config, stub_backend, tmp_path):
        pool = synthetic_image_pool(["anchor", "butterfly", "camera"], per_category=4, size=16)
        bank_path = save_bank(build_prototypes(stub_backend, pool, clusters=2), tmp_path / "bank.pt")
        config = tiny_train_config.replace(mode="visual_prototype", prototype_bank=str(bank_path), steps=2)

        final = Trainer(backend=stub_backend).train(config)

        metrics = read_json_lines(final.parent / "metrics.jsonl")
        assert [record["step"] for record in metrics] == [0, 1]


class TestTrainer:
    def test_run_directory_layout(self, tiny_train_config, stub_backend):
        final = Trainer(backend=stub_backend).train(tiny_train_config)

        run_dir = final.parent
        manifest = json.loads((run_dir / "manifest.json").read_text())
        assert manifest["files"] == sorted(
            ["checkpoints/step_000000.pt", "checkpoints/step_000002.pt", "config.json", "final.pt", "metrics.jsonl", "reliability.jsonl"]
        )
        metrics = read_json_lines(run_dir / "metrics.jsonl")
        assert [record["step"] for record in metrics] == [0, 1, 2]
        assert {"total", "rds_size", "pseudo_entropy", "max_category_fraction"} <= set(metrics[0])
        reliability = read_json_lines(run_dir / "reliability.jsonl")
        assert all(record["ppi_size"] == 3 for record in reliability)
        assert load_checkpoint(final).step == 3

    def test_zero_steps_saves_initial_network(self, tiny_train_config, stub_backend):
        config = tiny_train_config.replace(steps=0)

        final = Trainer(backend=stub_backend).train(config)

        initial = init_network(config.net_config(), config.seed).state_dict()
        saved = _state_dict(final)
        assert all(torch.equal(initial[name], saved[name]) for name in initial)
        assert read_json_lines(final.parent / "metrics.jsonl") == []

    def test_same_seed_same_result(self, tiny_train_config, stub_backend, tmp_path):
        first = Trainer(backend=stub_backend).train(tiny_train_config.replace(run_dir=str(tmp_path / "a")))
        second = Trainer(backend=stub_backend).train(tiny_train_config.replace(run_dir=str(tmp_path / "b")))

        a, b = _state_dict(first), _state_dict(second)
        assert all(torch.equal(a[name], b[name]) for name in a)
        assert read_json_lines(first.parent / "metrics.jsonl") == read_json_lines(second.parent / "metrics.jsonl")

    def test_resume_follows_uninterrupted_trajectory(self, tiny_train_config, stub_backend, tmp_path):
        config = tiny_train_config.replace(steps=4, run_dir=str(tmp_path / "full"))
        full = Trainer(backend=stub_backend).train(config)

        resumed_config = config.replace(run_dir=str(tmp_path / "resumed"))
        resumed = Trainer(backend=stub_backend).train(resumed_config, resume=full.parent / "checkpoints" / "step_000002.pt")

        a, b = _state_dict(full), _state_dict(resumed)
        for name in a:
            torch.testing.assert_close(a[name], b[name])
        full_metrics = read_json_lines(full.parent / "metrics.jsonl")[2:]
        resumed_metrics = read_json_lines(resumed.parent / "metrics.jsonl")
        assert [record["step"] for record in resumed_metrics] == [2, 3]
        for expected, actual in zip(full_metrics, resumed_metrics):
            assert actual["total"] == pytest.approx(expected["total"], rel=1e-5)
            assert actual["rds_indices"] == expected["rds_indices"]

    def test_training_does_not_touch_backend(self, tiny_train_config):
        backend = load_backend(tiny_train_config.backend)
        before = backend.checksum()

        Trainer(backend=backend).train(tiny_train_config)

        assert backend.checksum() == before

    def test_progress_callback(self, tiny_train_config, stub_backend):
        calls = []

        Trainer(backend=stub_backend, progress=lambda step, total, record: calls.append((step, total))).train(tiny_train_config)

        assert calls == [(1, 3), (2, 3), (3, 3)]

    def test_missing_manifest(self, tiny_train_config, stub_backend):
        with pytest.raises(TrainingError):
            Trainer(backend=stub_backend).train(tiny_train_config.replace(manifest=""))


class TestCheckpoint:
    def test_round_trip_is_exact(self, tiny_train_config, tmp_path):
        net = init_network(tiny_train_config.net_config(), seed=5)

        checkpoint = load_checkpoint(save_checkpoint(tmp_path / "ckpt.pt", net, tiny_train_config, 7))

        assert checkpoint.step == 7
        assert checkpoint.train_config == tiny_train_config
        rebuilt = checkpoint.build_network().state_dict()
        assert all(torch.equal(tensor, rebuilt[name]) for name, tensor in net.state_dict().items())

    def test_t_bins_mismatch(self, tiny_train_config, tmp_path):
        path = save_checkpoint(tmp_path / "ckpt.pt", init_network(tiny_train_config.net_config(), 0), tiny_train_config, 0)

        with pytest.raises(IncompatibleCheckpointError, match="T_bins"):
            load_checkpoint(path, expected=tiny_train_config.replace(t_bins=5))

    def test_architecture_mismatch(self, tiny_train_config, tmp_path):
        path = save_checkpoint(tmp_path / "ckpt.pt", init_network(tiny_train_config.net_config(), 0), tiny_train_config, 0)

        with pytest.raises(IncompatibleCheckpointError):
            load_checkpoint(path, expected=tiny_train_config.replace(net_base_channels=8))

    def test_corrupted_checkpoint(self, tiny_train_config, tmp_path):
        path = save_checkpoint(tmp_path / "ckpt.pt", init_network(tiny_train_config.net_config(), 0), tiny_train_config, 0)
        raw = bytearray(path.read_bytes())
        raw[len(raw) // 2] ^= 0x01
        path.write_bytes(bytes(raw))

        with pytest.raises(ArtifactIntegrityError):
            load_checkpoint(path)

    def test_truncated_checkpoint(self, tiny_train_config, tmp_path):
        path = save_checkpoint(tmp_path / "ckpt.pt", init_network(tiny_train_config.net_config(), 0), tiny_train_config, 0)
        path.write_bytes(path.read_bytes()[:20])

        with pytest.raises(ArtifactIntegrityError):
            load_checkpoint(path)
