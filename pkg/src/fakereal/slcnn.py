"""Sentence-level CNN over article tensors.

Each sentence row is pushed through a stack of horizontal convolutional
blocks (HCB): two 1x2 convolutions with ReLU, then max pooling over
adjacent pairs.  One block maps row width w to (w-2)//2, so a stack sized
by required_hcbs() reduces every row to a single k-vector.  Rows share
weights, so the latent matrix is row-permutation-equivariant.

The first convolution of the first block is the only full-depth one (it
consumes the embedding axis and fans out to k channels); every other
convolution is per-channel with an independent 1x2 kernel.
"""

from dataclasses import dataclass, field

import numpy as np

from . import nncore
from .nncore import Tensor

CONV_BIAS_INIT = 0.01


def required_hcbs(width: int) -> int:
    """Number of blocks needed to reduce a row of this width to exactly 1.

    Applies w <- (w-2)//2 until hitting 1; widths that stall above 1
    (anything reaching 2 or 3) are rejected.
    """
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    n = 0
    w = width
    while w > 1:
        if w < 4:
            raise ValueError(f"width {width} cannot reduce to 1: recurrence stalls at {w}")
        w = (w - 2) // 2
        n += 1
    return n


def width_trace(width: int) -> list:
    """Every intermediate width (after each conv and pool) from `width` to 1."""
    n = required_hcbs(width)
    trace = [width]
    w = width
    for _ in range(n):
        trace.extend([w - 1, w - 2, (w - 2) // 2])
        w = (w - 2) // 2
    return trace


@dataclass(frozen=True)
class HcbConfig:
    filters_k: int = 8
    conv_height: int = 1
    conv_width: int = 2

    def __post_init__(self):
        if self.filters_k < 1:
            raise ValueError(f"filters_k must be >= 1, got {self.filters_k}")
        if (self.conv_height, self.conv_width) != (1, 2):
            raise ValueError("only 1x2 convolutions are supported")


@dataclass
class HcbBlock:
    """Parameters of one block: conv1 may be full-depth, conv2 is always
    per-channel.  full_depth convs hold weights (k, 2, d); per-channel
    convs hold (k, 2)."""
    conv1_w: Tensor
    conv1_b: Tensor
    conv2_w: Tensor
    conv2_b: Tensor
    full_depth: bool

    def tensors(self):
        return [self.conv1_w, self.conv1_b, self.conv2_w, self.conv2_b]


def _he_uniform(rng, shape, fan_in):
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, shape)


def _depthwise_init(rng, k):
    # positive, roughly sum-1 kernels: a zero-mean draw leaves ~25% of
    # channel-layers with two negative taps, and with no cross-channel
    # mixing those channels stay silent forever
    return rng.uniform(0.25, 0.75, (k, 2))


def init_hcb_stack(width: int, in_depth: int, k: int, rng) -> list:
    """Build the parameter blocks for one reduction stack.

    Block 1's first conv is full-depth over `in_depth` and fans out to k
    channels; everything after is per-channel with positive init (see
    _depthwise_init).  The full-depth conv gets a small positive bias so
    no output channel starts all-negative.
    """
    blocks = []
    for b in range(required_hcbs(width)):
        if b == 0:
            w1 = Tensor(_he_uniform(rng, (k, 2, in_depth), 2 * in_depth), requires_grad=True)
        else:
            w1 = Tensor(_depthwise_init(rng, k), requires_grad=True)
        w2 = Tensor(_depthwise_init(rng, k), requires_grad=True)
        blocks.append(HcbBlock(
            conv1_w=w1,
            conv1_b=Tensor(np.full(k, CONV_BIAS_INIT), requires_grad=True),
            conv2_w=w2,
            conv2_b=Tensor(np.zeros(k), requires_grad=True),
            full_depth=(b == 0),
        ))
    return blocks


def hcb_apply(block: HcbBlock, x: Tensor) -> Tensor:
    """One block on a batched graph tensor.

    Full-depth blocks take (B, R, W, E) and emit (B, k, R, (W-2)//2);
    per-channel blocks map (B, k, R, W) to (B, k, R, (W-2)//2).
    """
    width = x.data.shape[2] if block.full_depth else x.data.shape[3]
    if width < 4:
        raise ValueError(f"block cannot reduce input of width {width}")
    if block.full_depth:
        h = nncore.conv1x2_full(x, block.conv1_w, block.conv1_b)
    else:
        h = nncore.conv1x2_depthwise(x, block.conv1_w, block.conv1_b)
    h = nncore.conv1x2_depthwise(h, block.conv2_w, block.conv2_b)
    return nncore.maxpool_pairs(h)


def stack_apply(blocks: list, x: Tensor) -> Tensor:
    """Run a full stack; input (B, R, W, E), output (B, R, k) at width 1."""
    h = x
    for block in blocks:
        h = hcb_apply(block, h)
    if h.data.shape[3] != 1:
        raise ValueError(f"stack left width {h.data.shape[3]}, expected 1")
    h = nncore.reshape(h, h.data.shape[:3])
    return nncore.transpose(h, (0, 2, 1))


def hcb_forward(input, block: HcbBlock):
    """Plain-array form of one block: (rows, width, channels) in,
    (rows, (width-2)//2, k) out."""
    x = np.asarray(input, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"input must be (rows, width, channels), got shape {x.shape}")
    if block.full_depth:
        t = Tensor(x[None, :, :, :])
    else:
        t = Tensor(np.transpose(x, (2, 0, 1))[None, :, :, :])
    out = hcb_apply(block, t)
    return np.transpose(out.data[0], (1, 2, 0))


@dataclass
class SlcnnModel:
    """The text half of the classifier: an HCB stack sized for t_s."""
    blocks: list
    t_s: int
    embed_dim: int
    config: HcbConfig = field(default_factory=HcbConfig)

    def tensors(self):
        return [t for blk in self.blocks for t in blk.tensors()]


def init_slcnn(t_s: int, embed_dim: int, k: int, rng) -> SlcnnModel:
    blocks = init_hcb_stack(t_s, embed_dim, k, rng)
    return SlcnnModel(blocks=blocks, t_s=t_s, embed_dim=embed_dim, config=HcbConfig(filters_k=k))


def slcnn_apply(model: SlcnnModel, x: Tensor) -> Tensor:
    """Graph forward: batch (B, rows, t_s, E) -> latent (B, rows, k)."""
    if x.data.shape[2] != model.t_s or x.data.shape[3] != model.embed_dim:
        raise ValueError(f"input shape {x.data.shape} does not match model "
                         f"(t_s={model.t_s}, E={model.embed_dim})")
    if required_hcbs(model.t_s) != len(model.blocks):
        raise ValueError("model block count does not match its t_s")
    return stack_apply(model.blocks, x)


def slcnn_forward(model: SlcnnModel, article_tensor) -> np.ndarray:
    """One article (t_d+1, t_s, E) -> latent matrix (t_d+1, k)."""
    data = getattr(article_tensor, "data", article_tensor)
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"article tensor must be 3D, got shape {x.shape}")
    out = slcnn_apply(model, Tensor(x[None, :, :, :]))
    return out.data[0]
