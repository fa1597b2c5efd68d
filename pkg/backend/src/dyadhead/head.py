"""Trainable downstream head: learnable hidden-layer mix followed by a
small 1D convolutional classifier over time."""

from __future__ import annotations

import torch
import torch.nn as nn

N_CLASSES = 4


class LayerMix(nn.Module):
    """Weighted average of encoder hidden layers with learnable weights,
    normalized to sum to one before mixing."""

    def __init__(self, n_layers: int):
        super().__init__()
        self.raw_weights = nn.Parameter(torch.zeros(n_layers))  # uniform init

    def normalized_weights(self) -> torch.Tensor:
        return torch.softmax(self.raw_weights, dim=0)

    def forward(self, layers: torch.Tensor) -> torch.Tensor:
        # layers: (n_layers, batch, T, dim)
        w = self.normalized_weights()
        return torch.einsum("l,lbtd->btd", w, layers)


class DiarizationHead(nn.Module):
    """Three 256-channel 1D conv layers with ReLU and dropout 0.2, then a
    width-4 conv for the frame prediction."""

    def __init__(self, n_layers: int, feat_dim: int, channels: int = 256,
                 dropout_p: float = 0.2):
        super().__init__()
        self.mix = LayerMix(n_layers)
        self.convs = nn.ModuleList([
            nn.Conv1d(feat_dim, channels, kernel_size=3, padding=1),
            nn.Conv1d(channels, channels, kernel_size=3, padding=1),
            nn.Conv1d(channels, channels, kernel_size=3, padding=1),
        ])
        self.dropout = nn.Dropout(dropout_p)
        self.out = nn.Conv1d(channels, N_CLASSES, kernel_size=1)

    def forward(self, layers: torch.Tensor) -> torch.Tensor:
        """layers: (n_layers, batch, T, dim) -> logits (batch, T, 4)."""
        x = self.mix(layers)                  # (B, T, D)
        x = x.transpose(1, 2)                 # (B, D, T)
        for conv in self.convs:
            x = self.dropout(torch.relu(conv(x)))
        return self.out(x).transpose(1, 2)    # (B, T, 4)
