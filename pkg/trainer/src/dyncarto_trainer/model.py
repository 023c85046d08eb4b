"""A compact transformer encoder classifier trainable from scratch on CPU."""

from __future__ import annotations

import torch
from torch import nn


class TinyPairEncoder(nn.Module):
    def __init__(
        self,
        vocab_size: int,
        n_classes: int,
        embed_dim: int = 64,
        n_heads: int = 4,
        n_layers: int = 1,
        max_len: int = 48,
        dropout: float = 0.1,
    ):
        super().__init__()
        self.max_len = max_len
        self.token_embedding = nn.Embedding(vocab_size, embed_dim, padding_idx=0)
        self.position_embedding = nn.Embedding(max_len, embed_dim)
        layer = nn.TransformerEncoderLayer(
            d_model=embed_dim,
            nhead=n_heads,
            dim_feedforward=2 * embed_dim,
            dropout=dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=n_layers, enable_nested_tensor=False)
        self.head = nn.Linear(embed_dim, n_classes)

    def forward(self, token_ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        """token_ids, mask: (B, L); mask is 1 for real tokens. Returns (B, C) logits."""
        positions = torch.arange(token_ids.shape[1], device=token_ids.device)
        x = self.token_embedding(token_ids) + self.position_embedding(positions)[None, :, :]
        x = self.encoder(x, src_key_padding_mask=~mask.bool())
        denom = mask.sum(dim=1, keepdim=True).clamp(min=1)
        pooled = (x * mask.unsqueeze(-1)).sum(dim=1) / denom
        return self.head(pooled)
