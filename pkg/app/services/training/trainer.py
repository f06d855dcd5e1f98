"""
Laço de treino: carga de recursos, lotes determinísticos, checkpoints e logs.

Estrutura do diretório de execução:
    config.json, metrics.jsonl, reliability.jsonl,
    checkpoints/step_XXXXXX.pt, final.pt, manifest.json
"""

import json
import logging
import time
from pathlib import Path
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
import torch

from app.services.encoders.factories import load_backend
from app.services.encoders.interfaces import EncoderBackend
from app.services.encoders.recognition import encode_categories
from app.services.prototypes.builder import load_bank
from app.services.reconstruction.network import ReconstructionNet, init_network
from app.services.training.checkpoint import load_checkpoint, restore_rng, save_checkpoint
from app.services.training.config import TrainConfig
from app.services.training.dataset import UnlabeledEventDataset, resolve_categories
from app.services.training.interfaces import TrainingError
from app.services.training.step import StepResources, TrainingState, train_step
from app.utils.jsonl import JsonLinesWriter, truncate_after_step
from app.utils.runs import prepare_run_dir, write_run_manifest

try:
    import torch_optimizer
except ImportError:  # pragma: no cover
    torch_optimizer = None

logger = logging.getLogger(__name__)

ProgressCallback = Callable[[int, int, dict], None]


def build_optimizer(net: ReconstructionNet, config: TrainConfig) -> torch.optim.Optimizer:
    """LAMB (torch_optimizer) ou AdamW, com lr e weight decay da configuração."""
    if config.optimizer == "lamb":
        if torch_optimizer is not None:
            return torch_optimizer.Lamb(net.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)
        logger.warning("torch_optimizer indisponível; usando AdamW no lugar de LAMB")
    return torch.optim.AdamW(net.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay)


class Trainer:
    """Executa o treino descrito por um TrainConfig."""

    def __init__(self, backend: Optional[EncoderBackend] = None, progress: Optional[ProgressCallback] = None):
        self.backend = backend
        self.progress = progress
        self.logger = logging.getLogger(self.__class__.__name__)

    def _resources(self, config: TrainConfig, run_dir: Path) -> Tuple[StepResources, List[str]]:
        backend = self.backend or load_backend(config.backend, config.device)
        categories = resolve_categories(config)
        text_features = encode_categories(backend, categories, config.template)
        bank = None
        if config.mode == "visual_prototype":
            bank = load_bank(config.prototype_bank).restricted_to(categories)
        return StepResources(backend=backend, text_features=text_features, categories=categories, bank=bank, diagnostics_dir=run_dir), categories

    def total_steps(self, config: TrainConfig, dataset: UnlabeledEventDataset) -> int:
        if config.epochs is not None:
            return config.epochs * dataset.batches_per_epoch(config.batch_size)
        return config.steps

    def train(self, config: TrainConfig, resume: Optional[Union[str, Path]] = None) -> Path:
        """
        Treina G e devolve o caminho do checkpoint final.

        Args:
            config: Configuração do treino
            resume: Checkpoint de onde continuar (mesma trajetória da execução sem interrupção)

        Raises:
            DatasetError: Manifesto ou arquivo de eventos ilegível
            TrainingDivergedError: Perda não finita
        """
        if not config.manifest:
            raise TrainingError("manifest é obrigatório para treinar")

        run_dir = prepare_run_dir(config.run_dir)
        started = time.time()
        resources, categories = self._resources(config, run_dir)
        dataset = UnlabeledEventDataset.from_manifest(config.manifest, config, categories=categories if config.categories_file else None)

        device = torch.device(config.device)
        net = init_network(config.net_config(), config.seed).to(device)
        optimizer = build_optimizer(net, config)
        state = TrainingState(net=net, optimizer=optimizer, step=0)
        rng = np.random.default_rng(config.seed)

        if resume is not None:
            checkpoint = load_checkpoint(resume, expected=config)
            net.load_state_dict(checkpoint.state_dict)
            if checkpoint.optimizer_state is not None:
                optimizer.load_state_dict(checkpoint.optimizer_state)
            state.step = checkpoint.step
            rng = restore_rng(checkpoint, config.seed)
            self.logger.info(f"Retomando de {resume} no passo {state.step}")

        total = self.total_steps(config, dataset)
        (run_dir / "config.json").write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
        metrics_path = run_dir / "metrics.jsonl"
        reliability_path = run_dir / "reliability.jsonl"
        for path in (metrics_path, reliability_path):
            if resume is not None:
                truncate_after_step(path, state.step - 1)
            else:
                path.unlink(missing_ok=True)

        self.logger.info(
            f"Treino: {len(dataset)} amostras, {len(categories)} categorias, B={config.batch_size}, K={config.k}, passos {state.step}->{total}, modo {config.mode}, backend {resources.backend.identifier}"
        )

        produced = [run_dir / "config.json", metrics_path, reliability_path]
        if state.step == 0:
            produced.append(save_checkpoint(run_dir / "checkpoints" / "step_000000.pt", net, config, 0, optimizer, rng, resources.backend, categories))

        with JsonLinesWriter(metrics_path, append=True) as metrics, JsonLinesWriter(reliability_path, append=True) as reliability:
            for batch in dataset.iter_batches(config.seed, config.batch_size, state.step, total):
                step = state.step
                batch_state = train_step(state, batch, config, rng, resources)
                record = batch_state.to_log(step, len(categories))
                metrics.write({key: value for key, value in record.items() if key not in ("ppi_size", "trci_size", "rds_indices")})
                reliability.write({"step": step, **batch_state.sets.to_log(), "ppi_indices": list(batch_state.sets.s_ppi), "trci_indices": list(batch_state.sets.s_trci)})

                if self.progress is not None:
                    self.progress(state.step, total, record)
                if step % 50 == 0:
                    self.logger.info(f"Passo {step}/{total}: total={record['total']:.4f} |S_RDS|={record['rds_size']} entropia={record['pseudo_entropy']:.3f}")
                if config.checkpoint_every and state.step % config.checkpoint_every == 0 and state.step < total:
                    produced.append(save_checkpoint(run_dir / "checkpoints" / f"step_{state.step:06d}.pt", net, config, state.step, optimizer, rng, resources.backend, categories))

        final = save_checkpoint(run_dir / "final.pt", net, config, state.step, optimizer, rng, resources.backend, categories)
        produced.append(final)
        produced.extend(sorted((run_dir / "checkpoints").glob("*.pt")))
        write_run_manifest(run_dir, produced, "train", {"steps": state.step, "seconds": round(time.time() - started, 3), "fingerprint": config.fingerprint()})
        self.logger.info(f"Treino concluído em {state.step} passos: {final}")
        return final


def train(config: TrainConfig, resume: Optional[Union[str, Path]] = None, backend: Optional[EncoderBackend] = None, progress: Optional[ProgressCallback] = None) -> Path:
    return Trainer(backend=backend, progress=progress).train(config, resume)
