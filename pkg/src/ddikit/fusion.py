"""Transformer over joint motif sequences with a visual attention bias.

Attention logits per head are shifted by a learnable projection of the
pair's 1024-d visual embedding before softmax: the projector maps the
visual vector to one bias value per (head, key position), broadcast
across query rows, so image content modulates how much every motif
attends to each key motif. The same bias feeds all layers. With the
projector zeroed (or no visual input) the stack reduces exactly to a
plain transformer encoder, which is the image-free ablation path.

Layer arithmetic, in order: Z = LayerNorm(X + MultiHead(X)),
X' = LayerNorm(Z + FFN(Z)) with FFN(x) = relu(x W1 + b1) W2 + b2 and
square weight matrices (hidden width d throughout).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
from torch import nn

from ddikit.errors import AllMasked, IndexOutOfRange, ShapeMismatch
from ddikit.tokenizer import PairSequence

VISUAL_DIM = 1024


@dataclass
class FusionConfig:
    num_layers: int = 6
    num_heads: int = 8
    hidden: int = 512
    per_drug_len: int = 16
    vocab_size: int = 2
    num_classes: int = 2
    dropout: float = 0.0
    visual_dim: int = VISUAL_DIM

    @property
    def head_dim(self) -> int:
        return self.hidden // self.num_heads

    @property
    def joint_len(self) -> int:
        return 2 * self.per_drug_len

    def __post_init__(self):
        if self.hidden % self.num_heads != 0:
            raise ValueError(
                f"hidden {self.hidden} not divisible by heads {self.num_heads}"
            )


class EmbeddingTables(nn.Module):
    """Token + learned position + segment embeddings for the joint sequence."""

    def __init__(self, config: FusionConfig):
        super().__init__()
        self.vocab_size = config.vocab_size
        self.token = nn.Embedding(config.vocab_size, config.hidden, padding_idx=0)
        self.position = nn.Embedding(config.joint_len, config.hidden)
        self.segment = nn.Embedding(2, config.hidden)

    def forward(self, token_ids: torch.Tensor, segment_ids: torch.Tensor) -> torch.Tensor:
        if int(token_ids.max()) >= self.vocab_size or int(token_ids.min()) < 0:
            raise IndexOutOfRange(
                f"token id outside vocabulary of size {self.vocab_size}"
            )
        positions = torch.arange(token_ids.shape[-1], device=token_ids.device)
        return self.token(token_ids) + self.position(positions) + self.segment(segment_ids)


class BiasProjector(nn.Module):
    """Visual embedding -> per-(head, key) attention logit bias."""

    def __init__(self, config: FusionConfig):
        super().__init__()
        self.num_heads = config.num_heads
        self.joint_len = config.joint_len
        self.proj = nn.Linear(config.visual_dim, config.num_heads * config.joint_len)

    def forward(self, visual: torch.Tensor) -> torch.Tensor:
        if visual.shape[-1] != self.proj.in_features:
            raise ShapeMismatch(
                f"visual dim {visual.shape[-1]}, expected {self.proj.in_features}"
            )
        out = self.proj(visual)
        return out.view(-1, self.num_heads, 1, self.joint_len)

    def zero_(self) -> None:
        with torch.no_grad():
            self.proj.weight.zero_()
            self.proj.bias.zero_()


def biased_attention(
    x: torch.Tensor,
    key_mask: torch.Tensor,
    wq: nn.Linear,
    wk: nn.Linear,
    wv: nn.Linear,
    wo: nn.Linear,
    num_heads: int,
    bias: torch.Tensor | None = None,
    return_weights: bool = False,
):
    """Multi-head attention with an additive per-(head, key) logit bias.

    x: (B, T, d); key_mask: (B, T) bool, True at real tokens;
    bias: (B, heads, 1, T) or None. Masked keys get -inf before softmax.
    """
    if x.dim() != 3:
        raise ShapeMismatch(f"expected (B, T, d), got {tuple(x.shape)}")
    b, t, d = x.shape
    if d % num_heads != 0:
        raise ShapeMismatch(f"hidden {d} not divisible by {num_heads} heads")
    if not bool(key_mask.any(dim=-1).all()):
        raise AllMasked("a sequence in the batch has no unmasked positions")
    dk = d // num_heads

    q = wq(x).view(b, t, num_heads, dk).transpose(1, 2)
    k = wk(x).view(b, t, num_heads, dk).transpose(1, 2)
    v = wv(x).view(b, t, num_heads, dk).transpose(1, 2)

    logits = q @ k.transpose(-2, -1) / math.sqrt(dk)
    if bias is not None:
        logits = logits + bias
    logits = logits.masked_fill(~key_mask[:, None, None, :], float("-inf"))
    weights = torch.softmax(logits, dim=-1)
    out = (weights @ v).transpose(1, 2).reshape(b, t, d)
    out = wo(out)
    if return_weights:
        return out, weights
    return out


class FusionLayer(nn.Module):
    def __init__(self, config: FusionConfig):
        super().__init__()
        d = config.hidden
        self.num_heads = config.num_heads
        self.wq = nn.Linear(d, d, bias=False)
        self.wk = nn.Linear(d, d, bias=False)
        self.wv = nn.Linear(d, d, bias=False)
        self.wo = nn.Linear(d, d)
        self.norm1 = nn.LayerNorm(d)
        self.norm2 = nn.LayerNorm(d)
        self.ffn = nn.Sequential(nn.Linear(d, d), nn.ReLU(), nn.Linear(d, d))
        self.drop = nn.Dropout(config.dropout)

    def forward(
        self,
        x: torch.Tensor,
        key_mask: torch.Tensor,
        bias: torch.Tensor | None = None,
        return_weights: bool = False,
    ):
        attn = biased_attention(
            x, key_mask, self.wq, self.wk, self.wv, self.wo,
            self.num_heads, bias=bias, return_weights=return_weights,
        )
        weights = None
        if return_weights:
            attn, weights = attn
        z = self.norm1(x + self.drop(attn))
        out = self.norm2(z + self.drop(self.ffn(z)))
        if return_weights:
            return out, weights
        return out


class PairFusionEncoder(nn.Module):
    """Embeds a joint pair sequence and applies T bias-fused layers."""

    def __init__(self, config: FusionConfig):
        super().__init__()
        self.config = config
        self.tables = EmbeddingTables(config)
        self.layers = nn.ModuleList(FusionLayer(config) for _ in range(config.num_layers))
        self.projector = BiasProjector(config)

    def forward(
        self,
        token_ids: torch.Tensor,
        segment_ids: torch.Tensor,
        key_mask: torch.Tensor,
        visual: torch.Tensor | None = None,
        return_attention: bool = False,
    ):
        """-> pooled (B, d) pair representation; optionally attention stacks."""
        x = self.tables(token_ids, segment_ids)
        bias = self.projector(visual) if visual is not None else None
        attn_maps = []
        for layer in self.layers:
            if return_attention:
                x, w = layer(x, key_mask, bias, return_weights=True)
                attn_maps.append(w)
            else:
                x = layer(x, key_mask, bias)
        pooled = masked_mean(x, key_mask)
        if return_attention:
            return pooled, attn_maps
        return pooled

    def encode_pair(
        self, pair: PairSequence, visual: torch.Tensor | None = None
    ) -> torch.Tensor:
        """Single pair -> (d,) representation."""
        device = next(self.parameters()).device
        dtype = next(self.parameters()).dtype
        tokens = torch.tensor([pair.token_ids], dtype=torch.long, device=device)
        segments = torch.tensor([pair.segment_ids], dtype=torch.long, device=device)
        mask = torch.tensor([pair.key_mask], dtype=torch.bool, device=device)
        if visual is not None:
            visual = visual.to(device=device, dtype=dtype).view(1, -1)
        return self.forward(tokens, segments, mask, visual)[0]


def masked_mean(x: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean over unmasked positions; raises if a row is fully masked."""
    if not bool(mask.any(dim=-1).all()):
        raise AllMasked("cannot pool a fully padded sequence")
    weights = mask.to(x.dtype)
    return (x * weights[..., None]).sum(dim=-2) / weights.sum(dim=-1, keepdim=True)


def pairs_to_tensors(
    pairs: list[PairSequence], device=None
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    tokens = torch.tensor([p.token_ids for p in pairs], dtype=torch.long, device=device)
    segments = torch.tensor([p.segment_ids for p in pairs], dtype=torch.long, device=device)
    mask = torch.tensor([p.key_mask for p in pairs], dtype=torch.bool, device=device)
    return tokens, segments, mask
