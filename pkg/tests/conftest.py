"""
Configuração global para testes.

Este arquivo contém fixtures e configurações compartilhadas
entre todos os testes do projeto.
"""

import numpy as np
import pytest
import torch

from app.services.encoders.config import StubBackendConfig
from app.services.encoders.stub_backend import StubBackend
from app.services.events.models import EventStream
from app.services.events.synthetic import write_synthetic_dataset
from app.services.reconstruction.models import ReconNetConfig
from app.services.training.config import TrainConfig

SYNTHETIC_CATEGORIES = ["anchor", "butterfly", "camera"]


@pytest.fixture(autouse=True)
def _test_env(monkeypatch):
    """Garante variáveis de ambiente previsíveis durante os testes."""
    monkeypatch.setenv("TESTING", "true")
    monkeypatch.setenv("EVREC_BACKEND", "stub:seed=7")
    monkeypatch.setenv("CELERY_ALWAYS_EAGER", "true")
    torch.set_num_threads(1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def stub_backend():
    """Backend stub pequeno (dim 32, entrada 16x16)."""
    return StubBackend(StubBackendConfig(seed=7, dim=32, size=16))


@pytest.fixture
def tiny_net_config():
    return ReconNetConfig(t_bins=3, levels=2, base_channels=4, residual_blocks=1, min_input_size=8)


@pytest.fixture
def make_stream():
    """Factory de fluxos aleatórios válidos."""

    def _make(n_events: int = 100, width: int = 16, height: int = 16, seed: int = 0, duration: int = 10_000) -> EventStream:
        generator = np.random.default_rng(seed)
        return EventStream.from_arrays(
            generator.integers(0, width, n_events),
            generator.integers(0, height, n_events),
            generator.integers(0, duration, n_events),
            generator.integers(0, 2, n_events),
            width,
            height,
        )

    return _make


@pytest.fixture(scope="session")
def synthetic_manifest(tmp_path_factory):
    """Dataset sintético de 3 categorias em sensor 16x16 (9 treino + 3 teste por categoria)."""
    root = tmp_path_factory.mktemp("synthetic")
    return write_synthetic_dataset(root, SYNTHETIC_CATEGORIES, per_category=12, test_fraction=0.25, sensor_size=16, events_per_sample=(300, 500), seed=0)


@pytest.fixture
def tiny_train_config(synthetic_manifest, tmp_path):
    """Configuração de treino rápida sobre o dataset sintético."""
    return TrainConfig(
        manifest=str(synthetic_manifest),
        backend="stub:seed=7,dim=32,size=16",
        sensor_width=16,
        sensor_height=16,
        batch_size=8,
        k=3,
        t_bins=3,
        resize=16,
        crop=8,
        optimizer="adam",
        learning_rate=1e-3,
        steps=3,
        checkpoint_every=2,
        net_levels=2,
        net_base_channels=4,
        net_residual_blocks=1,
        run_dir=str(tmp_path / "run"),
    )
