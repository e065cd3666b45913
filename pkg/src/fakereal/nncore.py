"""Minimal dense-tensor numeric core.

Exactly the operations the classifier needs: 1x2 convolutions (full-depth
and per-channel), pairwise max pooling, dense layers, inverted dropout,
softmax cross-entropy, and Adam, with reverse-mode gradients and a
finite-difference checker.  float64 throughout, row-major numpy storage.

Graph ops (conv1x2_full, conv1x2_depthwise, maxpool_pairs, linear, relu,
reshape, transpose, concat, dropout_t, softmax_xent_batch) build a tape of
`Tensor` nodes over batched arrays.  The module-level conv_1x2 / maxpool2 /
dense / softmax_xent / dropout functions are their plain single-instance
forms, handy for spot checks.
"""

import json

import numpy as np


class Tensor:
    """A value in the computation graph.

    Holds a float64 ndarray, an optional gradient of the same shape, the
    parent nodes it was computed from, and a backprop closure that routes
    this node's gradient to the parents.  Leaves with requires_grad=True
    are the trainable parameters.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, parents=(), requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self._parents = tuple(parents)
        self._backward = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in parents)

    @property
    def shape(self):
        return self.data.shape

    def backward(self):
        """Reverse-mode gradient of this scalar wrt all reachable leaves."""
        if self.data.shape != ():
            raise ValueError("backward requires a scalar root")
        # iterative topo sort; the graph is shallow but recursion is fragile
        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward()

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _accum(t, g):
    # never in-place: g may be a view of a finalized upstream gradient
    if t.requires_grad:
        t.grad = g if t.grad is None else t.grad + g


def zero_grads(tensors):
    for t in tensors:
        t.grad = None


# ---------------------------------------------------------------------------
# graph ops


def relu(x: Tensor) -> Tensor:
    out = Tensor(np.maximum(x.data, 0.0), (x,))
    if out.requires_grad:
        def bp():
            _accum(x, out.grad * (out.data > 0.0))
        out._backward = bp
    return out


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """(B, n) @ (n, m) + (m,) affine map, no activation."""
    xb, wb, bb = x.data, w.data, b.data
    if xb.ndim != 2 or wb.ndim != 2 or xb.shape[1] != wb.shape[0] or bb.shape != (wb.shape[1],):
        raise ValueError(f"linear shape mismatch: x{xb.shape} w{wb.shape} b{bb.shape}")
    out = Tensor(xb @ wb + bb, (x, w, b))
    if out.requires_grad:
        def bp():
            g = out.grad
            _accum(x, g @ wb.T)
            _accum(w, xb.T @ g)
            _accum(b, g.sum(axis=0))
        out._backward = bp
    return out


def reshape(x: Tensor, shape) -> Tensor:
    old = x.data.shape
    out = Tensor(x.data.reshape(shape), (x,))
    if out.requires_grad:
        def bp():
            _accum(x, out.grad.reshape(old))
        out._backward = bp
    return out


def transpose(x: Tensor, axes) -> Tensor:
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    out = Tensor(np.transpose(x.data, axes), (x,))
    if out.requires_grad:
        def bp():
            _accum(x, np.transpose(out.grad, inv))
        out._backward = bp
    return out


def concat(a: Tensor, b: Tensor, axis: int) -> Tensor:
    out = Tensor(np.concatenate([a.data, b.data], axis=axis), (a, b))
    split = a.data.shape[axis]
    if out.requires_grad:
        def bp():
            ga, gb = np.split(out.grad, [split], axis=axis)
            _accum(a, ga)
            _accum(b, gb)
        out._backward = bp
    return out


def conv1x2_full(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Full-depth 1x2 convolution with fused ReLU.

    x: (B, R, W, E) input rows; w: (k, 2, E) stacked filters; b: (k,).
    Returns (B, k, R, W-1).  Each filter spans two adjacent width slots
    across the whole depth axis; rows share weights.
    """
    xb, wb, bb = x.data, w.data, b.data
    if xb.ndim != 4 or wb.ndim != 3 or wb.shape[1] != 2 or xb.shape[3] != wb.shape[2]:
        raise ValueError(f"conv1x2_full shape mismatch: x{xb.shape} w{wb.shape}")
    if xb.shape[2] < 2:
        raise ValueError("window larger than input")
    x0 = xb[:, :, :-1, :]
    x1 = xb[:, :, 1:, :]
    pre = (np.einsum("brte,fe->bfrt", x0, wb[:, 0, :])
           + np.einsum("brte,fe->bfrt", x1, wb[:, 1, :])
           + bb[None, :, None, None])
    out = Tensor(np.maximum(pre, 0.0), (x, w, b))
    assert out.data.shape[3] == xb.shape[2] - 1
    if out.requires_grad:
        def bp():
            gm = out.grad * (out.data > 0.0)
            _accum(b, gm.sum(axis=(0, 2, 3)))
            gw = np.stack([np.einsum("bfrt,brte->fe", gm, x0),
                           np.einsum("bfrt,brte->fe", gm, x1)], axis=1)
            _accum(w, gw)
            if x.requires_grad:
                gx = np.zeros_like(xb)
                gx[:, :, :-1, :] += np.einsum("bfrt,fe->brte", gm, wb[:, 0, :])
                gx[:, :, 1:, :] += np.einsum("bfrt,fe->brte", gm, wb[:, 1, :])
                _accum(x, gx)
        out._backward = bp
    return out


def conv1x2_depthwise(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """Per-channel 1x2 convolution with fused ReLU.

    x: (B, C, R, W); w: (C, 2) one independent kernel per channel; b: (C,).
    Returns (B, C, R, W-1); channels never mix.
    """
    xb, wb, bb = x.data, w.data, b.data
    if xb.ndim != 4 or wb.shape != (xb.shape[1], 2) or bb.shape != (xb.shape[1],):
        raise ValueError(f"conv1x2_depthwise shape mismatch: x{xb.shape} w{wb.shape}")
    if xb.shape[3] < 2:
        raise ValueError("window larger than input")
    x0 = xb[:, :, :, :-1]
    x1 = xb[:, :, :, 1:]
    w0 = wb[:, 0].reshape(1, -1, 1, 1)
    w1 = wb[:, 1].reshape(1, -1, 1, 1)
    pre = x0 * w0 + x1 * w1 + bb.reshape(1, -1, 1, 1)
    out = Tensor(np.maximum(pre, 0.0), (x, w, b))
    assert out.data.shape[3] == xb.shape[3] - 1
    if out.requires_grad:
        def bp():
            gm = out.grad * (out.data > 0.0)
            _accum(b, gm.sum(axis=(0, 2, 3)))
            gw = np.stack([np.einsum("bcrt,bcrt->c", gm, x0),
                           np.einsum("bcrt,bcrt->c", gm, x1)], axis=1)
            _accum(w, gw)
            if x.requires_grad:
                gx = np.zeros_like(xb)
                gx[:, :, :, :-1] += gm * w0
                gx[:, :, :, 1:] += gm * w1
                _accum(x, gx)
        out._backward = bp
    return out


def maxpool_pairs(x: Tensor) -> Tensor:
    """Stride-2 max over adjacent width slots; x (B, C, R, W) -> (B, C, R, W//2).

    A trailing slot at odd width is dropped.  Ties route the gradient to
    the left element only.
    """
    xb = x.data
    width = xb.shape[3]
    if width < 2:
        raise ValueError("window larger than input")
    half = width // 2
    a = xb[:, :, :, 0:2 * half:2]
    c = xb[:, :, :, 1:2 * half:2]
    out = Tensor(np.maximum(a, c), (x,))
    assert out.data.shape[3] == width // 2
    if out.requires_grad:
        left = a >= c
        def bp():
            gx = np.zeros_like(xb)
            gx[:, :, :, 0:2 * half:2] += out.grad * left
            gx[:, :, :, 1:2 * half:2] += out.grad * ~left
            _accum(x, gx)
        out._backward = bp
    return out


def dropout_t(x: Tensor, rate: float, mode: str, rng=None) -> Tensor:
    """Inverted dropout: train mode zeroes each element with probability
    `rate` and scales survivors by 1/(1-rate); eval mode is the identity."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "eval" or rate == 0.0:
        return x
    if mode != "train":
        raise ValueError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    keep = (rng.random(x.data.shape) >= rate) / (1.0 - rate)
    out = Tensor(x.data * keep, (x,))
    if out.requires_grad:
        def bp():
            _accum(x, out.grad * keep)
        out._backward = bp
    return out


def softmax_xent_batch(logits: Tensor, labels):
    """Softmax + mean cross-entropy over a batch.

    logits (B, n), labels (B,) int class indices.  Returns (probs ndarray,
    scalar loss Tensor).  Log-sum-exp is max-stabilized so the loss stays
    finite for any finite logits.
    """
    z = logits.data
    labels = np.asarray(labels)
    if z.ndim != 2 or labels.shape != (z.shape[0],):
        raise ValueError(f"softmax_xent shape mismatch: logits{z.shape} labels{labels.shape}")
    zs = z - z.max(axis=1, keepdims=True)
    ez = np.exp(zs)
    denom = ez.sum(axis=1, keepdims=True)
    probs = ez / denom
    idx = np.arange(z.shape[0])
    losses = np.log(denom[:, 0]) - zs[idx, labels]
    out = Tensor(losses.mean(), (logits,))
    if out.requires_grad:
        def bp():
            g = probs.copy()
            g[idx, labels] -= 1.0
            _accum(logits, g * (float(out.grad) / z.shape[0]))
        out._backward = bp
    return probs, out


# ---------------------------------------------------------------------------
# plain single-instance forms


class ConvFilter:
    """One 1x2xd convolution filter: weights (1, 2, d), scalar bias."""

    def __init__(self, weights, bias=0.0):
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.ndim != 3 or self.weights.shape[:2] != (1, 2):
            raise ValueError(f"filter weights must be (1, 2, d), got {self.weights.shape}")
        self.bias = float(bias)

    @property
    def depth(self):
        return self.weights.shape[2]


def conv_1x2(input, filt: ConvFilter):
    """ReLU(w . window + b) over every 1x2 window of (rows, width, depth)."""
    x = np.asarray(input, dtype=np.float64)
    if x.ndim != 3:
        raise ValueError(f"input must be (rows, width, depth), got shape {x.shape}")
    if x.shape[1] < 2:
        raise ValueError("window larger than input")
    if x.shape[2] != filt.depth:
        raise ValueError(f"filter depth {filt.depth} does not match input depth {x.shape[2]}")
    w = filt.weights[0]
    pre = x[:, :-1, :] @ w[0] + x[:, 1:, :] @ w[1] + filt.bias
    assert pre.shape == (x.shape[0], x.shape[1] - 1)
    return np.maximum(pre, 0.0)


def maxpool2(input):
    """Max over adjacent pairs along width; (rows, width) -> (rows, width//2)."""
    x = np.asarray(input, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"input must be (rows, width), got shape {x.shape}")
    width = x.shape[1]
    if width < 2:
        raise ValueError("window larger than input")
    half = width // 2
    out = np.maximum(x[:, 0:2 * half:2], x[:, 1:2 * half:2])
    assert out.shape == (x.shape[0], width // 2)
    return out


def dense(input, weights, bias):
    """ReLU(x @ W + b) for one vector; the hidden-layer form."""
    x = np.asarray(input, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    if x.ndim != 1 or w.ndim != 2 or x.shape[0] != w.shape[0] or b.shape != (w.shape[1],):
        raise ValueError(f"dense shape mismatch: x{x.shape} w{w.shape} b{b.shape}")
    return np.maximum(x @ w + b, 0.0)


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    zs = z - z.max(axis=-1, keepdims=True)
    ez = np.exp(zs)
    return ez / ez.sum(axis=-1, keepdims=True)


def softmax_xent(logits, label: int):
    """Probabilities and -log p[label] for one logit vector."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError(f"logits must be a vector, got shape {z.shape}")
    zs = z - z.max()
    ez = np.exp(zs)
    denom = ez.sum()
    probs = ez / denom
    loss = float(np.log(denom) - zs[label])
    return probs, loss


def dropout(input, rate: float, mode: str, rng=None):
    """Plain-array inverted dropout; see dropout_t for the semantics."""
    x = np.asarray(input, dtype=np.float64)
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must be in [0, 1), got {rate}")
    if mode == "eval" or rate == 0.0:
        return x.copy()
    if mode != "train":
        raise ValueError(f"dropout mode must be 'train' or 'eval', got {mode!r}")
    if rng is None:
        raise ValueError("train-mode dropout needs an rng")
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * keep


# ---------------------------------------------------------------------------
# optimization


class AdamState:
    """Adam accumulators for an ordered parameter list."""

    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.step = 0
        self.m = [np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params]
        self.v = [np.zeros_like(np.asarray(p, dtype=np.float64)) for p in params]


def adam_step(params, grads, state: AdamState):
    """One in-place Adam update with bias correction.

    params are ndarrays updated through `[...]` so any Tensor holding the
    same buffer sees the new values.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads, and state must align")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise ValueError(f"grad shape {g.shape} does not match param shape {p.shape}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        mhat = state.m[i] / c1
        vhat = state.v[i] / c2
        p[...] = p - state.lr * mhat / (np.sqrt(vhat) + state.eps)


# ---------------------------------------------------------------------------
# verification


def grad_check(loss_fn, params, n_coords=200, h=1e-4, seed=0):
    """Max relative error between backprop and central finite differences.

    loss_fn() must rebuild the graph from the current parameter values and
    return a scalar Tensor; params is the list of leaf Tensors to probe.
    Up to n_coords coordinates are sampled without replacement.  Relative
    error is |g_an - g_fd| / max(1e-8, |g_an| + |g_fd|).
    """
    zero_grads(params)
    loss = loss_fn()
    if not np.isfinite(loss.data):
        raise ValueError("non-finite loss")
    loss.backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]

    coords = [(i, j) for i, p in enumerate(params) for j in range(p.data.size)]
    if not coords:
        return 0.0
    if len(coords) > n_coords:
        rng = np.random.default_rng(seed)
        picked = rng.choice(len(coords), size=n_coords, replace=False)
        coords = [coords[int(i)] for i in picked]

    worst = 0.0
    for i, j in coords:
        flat = params[i].data.flat
        orig = flat[j]
        flat[j] = orig + h
        up = float(loss_fn().data)
        flat[j] = orig - h
        down = float(loss_fn().data)
        flat[j] = orig
        fd = (up - down) / (2.0 * h)
        an = analytic[i].flat[j]
        rel = abs(an - fd) / max(1e-8, abs(an) + abs(fd))
        worst = max(worst, rel)
    return worst


# ---------------------------------------------------------------------------
# checkpointing


_META_KEY = "__meta__"


def save_checkpoint(path, arrays: dict, meta: dict):
    """Write named parameter arrays plus a JSON metadata blob.

    Bit-exact: float64 arrays round-trip unchanged.  Written through an
    open handle so the target name is used verbatim.
    """
    if _META_KEY in arrays:
        raise ValueError(f"array name {_META_KEY!r} is reserved")
    blob = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
    with open(path, "wb") as fh:
        np.savez(fh, **{_META_KEY: blob, **arrays})


def load_checkpoint(path):
    """Inverse of save_checkpoint: (arrays dict, meta dict)."""
    with np.load(path, allow_pickle=False) as z:
        meta = json.loads(bytes(z[_META_KEY].tobytes()).decode("utf-8"))
        arrays = {k: z[k] for k in z.files if k != _META_KEY}
    return arrays, meta
