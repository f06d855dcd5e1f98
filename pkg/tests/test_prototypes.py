import itertools

import numpy as np
import pytest
import torch
from PIL import Image

from app.services.events.synthetic import synthetic_image_pool
from app.services.prototypes.builder import build_prototypes, cluster_labels, encode_pool, load_bank, load_image_folder, save_bank
from app.services.prototypes.interfaces import InsufficientImagesError, PrototypeError, UnknownCategoryError
from app.services.prototypes.models import PrototypeBank, assign_cluster
from app.utils.artifacts import ArtifactIntegrityError


def _cosine_cost(features: np.ndarray, labels) -> float:
    normalized = features / np.linalg.norm(features, axis=1, keepdims=True)
    cost = 0.0
    for cluster in set(labels):
        members = normalized[[i for i, label in enumerate(labels) if label == cluster]]
        cost += float((1 - members @ members.T).sum())
    return cost


def _canonical(labels):
    remap = {}
    return [remap.setdefault(label, len(remap)) for label in labels]


def _best_partition(features: np.ndarray, clusters: int):
    best, best_cost = None, float("inf")
    for labels in itertools.product(range(clusters), repeat=features.shape[0]):
        if len(set(labels)) != clusters:
            continue
        cost = _cosine_cost(features, labels)
        if cost < best_cost:
            best, best_cost = _canonical(labels), cost
    return best


class TestClusterLabels:
    def test_well_separated_groups_match_exhaustive_search(self):
        generator = np.random.default_rng(0)
        centers = np.eye(6)[:3] * 10
        features = np.concatenate([center + generator.normal(0, 0.3, size=(3, 6)) for center in centers])[generator.permutation(9)]

        labels = cluster_labels(features, 3)

        assert labels.tolist() == _best_partition(features, 3)

    def test_single_cluster(self):
        assert cluster_labels(np.random.default_rng(0).random((5, 4)), 1).tolist() == [0] * 5

    def test_one_cluster_per_sample(self):
        assert cluster_labels(np.random.default_rng(0).random((4, 4)), 4).tolist() == [0, 1, 2, 3]


class TestBuildPrototypes:
    def test_single_cluster_is_normalized_mean(self, stub_backend):
        pool = synthetic_image_pool(["anchor", "camera"], per_category=4, size=16)

        bank = build_prototypes(stub_backend, pool, clusters=1)

        expected = torch.nn.functional.normalize(encode_pool(stub_backend, pool["anchor"]).mean(dim=0), dim=0)
        torch.testing.assert_close(bank.matrix("anchor")[0], expected)
        assert bank.categories == ["anchor", "camera"]
        assert bank.sizes["camera"] == [4]
        assert bank.dim == stub_backend.embed_dim

    def test_cluster_count_and_unit_norm(self, stub_backend):
        bank = build_prototypes(stub_backend, synthetic_image_pool(["anchor", "butterfly"], per_category=6, size=16), clusters=2)

        for name in bank.categories:
            assert bank.matrix(name).shape == (2, stub_backend.embed_dim)
            torch.testing.assert_close(bank.matrix(name).norm(dim=-1), torch.ones(2))
            assert sum(bank.sizes[name]) == 6

    def test_insufficient_images_names_category(self, stub_backend):
        pool = {"anchor": [np.zeros((16, 16))] * 3, "camera": [np.zeros((16, 16))]}

        with pytest.raises(InsufficientImagesError) as error:
            build_prototypes(stub_backend, pool, clusters=2)

        assert error.value.category == "camera"

    def test_invalid_cluster_count(self, stub_backend):
        with pytest.raises(PrototypeError):
            build_prototypes(stub_backend, {"anchor": [np.zeros((16, 16))]}, clusters=0)

    def test_does_not_change_backend(self, stub_backend):
        before = stub_backend.checksum()

        build_prototypes(stub_backend, synthetic_image_pool(["anchor"], per_category=3, size=16), clusters=1)

        assert stub_backend.checksum() == before


class TestAssignCluster:
    def test_matches_brute_force_argmax(self):
        generator = torch.Generator().manual_seed(0)
        prototypes = torch.nn.functional.normalize(torch.randn(5, 8, generator=generator), dim=-1)
        bank = PrototypeBank(categories=["a"], prototypes={"a": prototypes}, clusters=5)

        for _ in range(1000):
            v = torch.nn.functional.normalize(torch.randn(8, generator=generator), dim=0)
            scores = [float(bank.matrix("a")[j] @ v) for j in range(5)]
            assert assign_cluster(v, "a", bank) == scores.index(max(scores))

    def test_ties_take_lowest_index(self):
        bank = PrototypeBank(categories=["a"], prototypes={"a": torch.eye(2)}, clusters=2)

        assert assign_cluster(torch.tensor([1.0, 1.0]), "a", bank) == 0

    def test_unknown_category(self):
        bank = PrototypeBank(categories=["a"], prototypes={"a": torch.eye(2)}, clusters=2)

        with pytest.raises(UnknownCategoryError):
            assign_cluster(torch.ones(2), "b", bank)

    def test_restricted_bank_follows_given_order(self):
        bank = PrototypeBank(categories=["a", "b"], prototypes={"a": torch.eye(2)[:1], "b": torch.eye(2)[1:]}, clusters=1)

        restricted = bank.restricted_to(["b", "a"])

        assert torch.equal(restricted.prototype(0, 0), bank.prototype(1, 0))


class TestPersistence:
    def test_save_and_load(self, tmp_path, stub_backend):
        bank = build_prototypes(stub_backend, synthetic_image_pool(["anchor", "camera"], per_category=4, size=16), clusters=2)

        loaded = load_bank(save_bank(bank, tmp_path / "bank.pt"))

        assert loaded.categories == bank.categories
        assert loaded.sizes == bank.sizes
        for name in bank.categories:
            assert torch.equal(loaded.matrix(name), bank.matrix(name))

    def test_corrupted_bank(self, tmp_path):
        bank = PrototypeBank(categories=["a"], prototypes={"a": torch.eye(2)}, clusters=2)
        path = save_bank(bank, tmp_path / "bank.pt")
        raw = bytearray(path.read_bytes())
        raw[-1] ^= 0xFF
        path.write_bytes(bytes(raw))

        with pytest.raises(ArtifactIntegrityError):
            load_bank(path)

    def test_image_folder(self, tmp_path):
        for name in ("anchor", "camera"):
            (tmp_path / name).mkdir()
            Image.fromarray(np.full((10, 12), 255, dtype=np.uint8)).save(tmp_path / name / "0.png")
        (tmp_path / "anchor" / "notes.txt").write_text("ignorar")

        pool = load_image_folder(tmp_path, size=16)

        assert sorted(pool) == ["anchor", "camera"]
        assert len(pool["anchor"]) == 1
        assert pool["anchor"][0].shape == (16, 16)
        assert float(pool["anchor"][0].max()) == pytest.approx(1.0)

    def test_missing_image_folder(self, tmp_path):
        with pytest.raises(PrototypeError):
            load_image_folder(tmp_path / "nope")
