"""Classifier models: a hashed-bag logistic baseline and a small transformer
encoder, both regressing the soft label with a sigmoid head."""

from __future__ import annotations

import math

import torch
import torch.nn as nn

VOCAB = 1 << 16
BAG_DIM = 256
MAX_LEN = 64


def hashed_bag(tokens: tuple[int, ...]) -> torch.Tensor:
    """Fixed-size bag of tokens via a multiplicative hash; cheap, linearly
    separable whenever a single discriminative token value exists."""
    x = torch.zeros(BAG_DIM)
    for t in tokens:
        x[((t * 2654435761) >> 8) & (BAG_DIM - 1)] += 1.0
    return x


class LogisticModel(nn.Module):
    kind = "logistic"

    def __init__(self):
        super().__init__()
        self.linear = nn.Linear(BAG_DIM, 1)

    def forward(self, bags: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.linear(bags)).squeeze(-1)

    def encode(self, token_batch: list[tuple[int, ...]]) -> torch.Tensor:
        return torch.stack([hashed_bag(t) for t in token_batch])


class LoraLinear(nn.Module):
    """Linear layer with an optional frozen base and low-rank update."""

    def __init__(self, dim: int, rank: int = 4):
        super().__init__()
        self.base = nn.Linear(dim, dim)
        self.rank = rank
        self.down = nn.Linear(dim, rank, bias=False)
        self.up = nn.Linear(rank, dim, bias=False)
        nn.init.zeros_(self.up.weight)

    def freeze_base(self):
        for p in self.base.parameters():
            p.requires_grad_(False)

    def forward(self, x):
        return self.base(x) + self.up(self.down(x))


class EncoderBlock(nn.Module):
    def __init__(self, dim: int, heads: int, lora: bool):
        super().__init__()
        self.heads = heads
        self.dim = dim
        make = (lambda: LoraLinear(dim)) if lora else (lambda: nn.Linear(dim, dim))
        self.q = make()
        self.k = nn.Linear(dim, dim)
        self.v = make()
        self.out = nn.Linear(dim, dim)
        self.norm1 = nn.LayerNorm(dim)
        self.norm2 = nn.LayerNorm(dim)
        self.ffn = nn.Sequential(nn.Linear(dim, 2 * dim), nn.GELU(), nn.Linear(2 * dim, dim))

    def forward(self, x, mask):
        # x: (B, L, D); mask: (B, L) True on real tokens
        b, length, dim = x.shape
        hd = dim // self.heads
        q = self.q(x).view(b, length, self.heads, hd).transpose(1, 2)
        k = self.k(x).view(b, length, self.heads, hd).transpose(1, 2)
        v = self.v(x).view(b, length, self.heads, hd).transpose(1, 2)
        scores = q @ k.transpose(-2, -1) / math.sqrt(hd)
        scores = scores.masked_fill(~mask[:, None, None, :], float("-inf"))
        attn = torch.softmax(scores, dim=-1)
        mixed = (attn @ v).transpose(1, 2).reshape(b, length, dim)
        x = self.norm1(x + self.out(mixed))
        return self.norm2(x + self.ffn(x))


class TransformerModel(nn.Module):
    """2-layer, 4-head, 64-dim encoder with mean pooling and a sigmoid head."""

    kind = "transformer"

    def __init__(self, dim: int = 64, heads: int = 4, layers: int = 2, lora: bool = False):
        super().__init__()
        self.dim, self.heads, self.layers_n, self.lora = dim, heads, layers, lora
        self.embed = nn.Embedding(VOCAB, dim)
        self.pos = nn.Embedding(MAX_LEN, dim)
        self.blocks = nn.ModuleList(EncoderBlock(dim, heads, lora) for _ in range(layers))
        self.head = nn.Linear(dim, 1)

    def forward(self, token_ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        pos = torch.arange(token_ids.shape[1], device=token_ids.device)
        x = self.embed(token_ids) + self.pos(pos)[None, :, :]
        for block in self.blocks:
            x = block(x, mask)
        denom = mask.sum(dim=1, keepdim=True).clamp(min=1)
        pooled = (x * mask[:, :, None]).sum(dim=1) / denom
        return torch.sigmoid(self.head(pooled)).squeeze(-1)

    def encode(self, token_batch: list[tuple[int, ...]]) -> tuple[torch.Tensor, torch.Tensor]:
        length = min(MAX_LEN, max(len(t) for t in token_batch))
        ids = torch.zeros(len(token_batch), length, dtype=torch.long)
        mask = torch.zeros(len(token_batch), length, dtype=torch.bool)
        for i, tokens in enumerate(token_batch):
            tokens = tokens[:length]
            ids[i, : len(tokens)] = torch.tensor(tokens, dtype=torch.long)
            mask[i, : len(tokens)] = True
        return ids, mask


def score_batch(model: nn.Module, token_batch: list[tuple[int, ...]]) -> torch.Tensor:
    model.eval()
    with torch.no_grad():
        if model.kind == "logistic":
            return model(model.encode(token_batch))
        ids, mask = model.encode(token_batch)
        return model(ids, mask)


def save_model(model: nn.Module, path: str) -> None:
    blob = {"kind": model.kind, "state": model.state_dict()}
    if model.kind == "transformer":
        blob["config"] = {"dim": model.dim, "heads": model.heads,
                          "layers": model.layers_n, "lora": model.lora}
    torch.save(blob, path)


def load_model(path: str) -> nn.Module:
    blob = torch.load(path, map_location="cpu", weights_only=False)
    if blob["kind"] == "logistic":
        model = LogisticModel()
    else:
        model = TransformerModel(**blob["config"])
    model.load_state_dict(blob["state"])
    model.eval()
    return model
