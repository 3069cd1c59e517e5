"""Training loop: squared error against soft labels."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from .dataset import Dataset
from .models import LogisticModel, TransformerModel


class TrainingError(RuntimeError):
    """Training diverged or could not proceed."""


@dataclass
class TrainerConfig:
    model: str = "transformer"      # "transformer" or "logistic"
    epochs: int = 1
    lora: bool = False
    threshold: int = 64
    scale: float = 2.298
    seed: int = 1
    lr: float = 1e-3
    batch_size: int = 64

    def validate(self):
        if self.model not in ("transformer", "logistic"):
            raise TrainingError(f"unknown model {self.model!r}")
        if self.epochs < 1:
            raise TrainingError("epochs must be >= 1")


@dataclass
class TrainResult:
    model: torch.nn.Module
    initial_loss: float
    final_loss: float
    train_accuracy: float           # binarized predictions vs binarized targets


def _batches(n: int, batch_size: int, generator: torch.Generator):
    order = torch.randperm(n, generator=generator)
    for start in range(0, n, batch_size):
        yield order[start : start + batch_size].tolist()


def train(cfg: TrainerConfig, dataset: Dataset) -> TrainResult:
    cfg.validate()
    if not dataset.examples:
        raise TrainingError("dataset is empty")
    torch.manual_seed(cfg.seed)
    gen = torch.Generator().manual_seed(cfg.seed)

    if cfg.model == "logistic":
        model = LogisticModel()
        lr = cfg.lr if cfg.lr != 1e-3 else 5e-2  # bag features train well hot
    else:
        model = TransformerModel(lora=cfg.lora)
        if cfg.lora:
            for block in model.blocks:
                block.q.freeze_base()
                block.v.freeze_base()
        lr = cfg.lr

    tokens = [ex.tokens for ex in dataset.examples]
    targets = torch.tensor([ex.target for ex in dataset.examples], dtype=torch.float32)

    def forward(idx: list[int]) -> torch.Tensor:
        batch = [tokens[i] for i in idx]
        if cfg.model == "logistic":
            return model(model.encode(batch))
        ids, mask = model.encode(batch)
        return model(ids, mask)

    params = [p for p in model.parameters() if p.requires_grad]
    opt = torch.optim.Adam(params, lr=lr)
    loss_fn = torch.nn.MSELoss()

    with torch.no_grad():
        sample = list(range(min(len(tokens), 512)))
        initial_loss = float(loss_fn(forward(sample), targets[sample]))

    model.train()
    final_loss = initial_loss
    for _ in range(cfg.epochs):
        for idx in _batches(len(tokens), cfg.batch_size, gen):
            opt.zero_grad()
            loss = loss_fn(forward(idx), targets[idx])
            loss_value = float(loss.detach())
            if math.isnan(loss_value):
                raise TrainingError("loss went NaN; lower the learning rate")
            loss.backward()
            opt.step()
            final_loss = loss_value

    model.eval()
    with torch.no_grad():
        correct = total = 0
        for start in range(0, len(tokens), 512):
            idx = list(range(start, min(start + 512, len(tokens))))
            preds = forward(idx)
            correct += int((( preds >= 0.5) == (targets[idx] >= 0.5)).sum())
            total += len(idx)
    return TrainResult(model, initial_loss, final_loss, correct / total)
