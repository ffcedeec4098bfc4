"""Minimal dense-tensor reverse-mode autodiff with the layer set the world
model needs (conv1d / linear / relu / squared-error) plus Adam.

All tensors are float64. A Tape records nodes in creation order, which is a
valid topological order; backward() walks it in reverse. Operations called
without an active tape run in inference mode and record nothing. Gradient
work is skipped for subgraphs that no parameter feeds (requires_grad=False),
which keeps constant inputs like the raw curves off the backward path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class Tensor:
    """A named, dense float64 array node in the compute graph."""

    __slots__ = ("data", "grad", "parents", "_backward", "name", "requires_grad")

    def __init__(self, data, parents=(), backward=None, name=None, requires_grad=False):
        data = np.asarray(data)
        if data.dtype != np.float32:  # float64 unless explicitly single precision
            data = np.asarray(data, dtype=np.float64)
        self.data = data
        self.grad = None
        self.parents = tuple(parents)
        self._backward = backward
        self.name = name
        self.requires_grad = requires_grad

    @property
    def shape(self):
        return self.data.shape

    def accumulate(self, g, owned=False):
        """Add g to the gradient buffer; owned=True means g is a freshly
        allocated array this tensor may take over without copying."""
        if self.grad is None:
            self.grad = g if owned else g.copy()
        else:
            self.grad += g

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, name={self.name!r})"


def parameter(data, name=None) -> Tensor:
    return Tensor(data, name=name, requires_grad=True)


class Tape:
    """Append-only record of operation outputs, in topological order."""

    def __init__(self):
        self.nodes: list[Tensor] = []

    def __enter__(self):
        _tape_stack.append(self)
        return self

    def __exit__(self, *exc):
        _tape_stack.pop()
        return False


_tape_stack: list[Tape] = []


def _record(out: Tensor) -> Tensor:
    if _tape_stack and out.requires_grad:
        _tape_stack[-1].nodes.append(out)
    else:
        # inference mode / constant subgraph: drop the graph
        out.parents = ()
        out._backward = None
    return out


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _needs(*tensors) -> bool:
    return any(t.requires_grad for t in tensors if t is not None)


# ---------------------------------------------------------------------------
# primitives


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.shape != b.data.shape:
        raise ValueError(f"add: shape mismatch {a.shape} vs {b.shape}")
    out = Tensor(a.data + b.data, (a, b), requires_grad=_needs(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g)
        if b.requires_grad:
            b.accumulate(g)

    out._backward = backward
    return _record(out)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.shape != b.data.shape:
        raise ValueError(f"sub: shape mismatch {a.shape} vs {b.shape}")
    out = Tensor(a.data - b.data, (a, b), requires_grad=_needs(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(g)
        if b.requires_grad:
            b.accumulate(-g, owned=True)

    out._backward = backward
    return _record(out)


def scale(a: Tensor, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)
    out = Tensor(a.data * c, (a,), requires_grad=a.requires_grad)

    def backward(g):
        a.accumulate(g * c, owned=True)

    out._backward = backward
    return _record(out)


def relu(a: Tensor) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0.0  # subgradient 0 at the kink
    out = Tensor(np.where(mask, a.data, 0.0), (a,), requires_grad=a.requires_grad)

    def backward(g):
        a.accumulate(g * mask, owned=True)

    out._backward = backward
    return _record(out)


def reshape(a: Tensor, shape) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data.reshape(shape), (a,), requires_grad=a.requires_grad)

    def backward(g):
        a.accumulate(g.reshape(a.data.shape))

    out._backward = backward
    return _record(out)


def concat(tensors, axis=-1) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors),
                 requires_grad=_needs(*tensors))
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def backward(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            if t.requires_grad:
                t.accumulate(piece)

    out._backward = backward
    return _record(out)


def split_rows(a: Tensor, n: int) -> tuple[Tensor, Tensor]:
    """Split a 2D tensor into its first n rows and the rest."""
    a = _as_tensor(a)
    top = Tensor(a.data[:n], (a,), requires_grad=a.requires_grad)
    bot = Tensor(a.data[n:], (a,), requires_grad=a.requires_grad)

    def backward_top(g):
        full = np.zeros_like(a.data)
        full[:n] = g
        a.accumulate(full, owned=True)

    def backward_bot(g):
        full = np.zeros_like(a.data)
        full[n:] = g
        a.accumulate(full, owned=True)

    top._backward = backward_top
    bot._backward = backward_bot
    return _record(top), _record(bot)


def gather_rows(a: Tensor, indices) -> Tensor:
    """Select rows of a 2D tensor; backward scatter-adds into the source."""
    a = _as_tensor(a)
    indices = np.asarray(indices, dtype=np.intp)
    out = Tensor(a.data[indices], (a,), requires_grad=a.requires_grad)

    def backward(g):
        full = np.zeros_like(a.data)
        np.add.at(full, indices, g)
        a.accumulate(full, owned=True)

    out._backward = backward
    return _record(out)


def linear(x: Tensor, w: Tensor, b: Tensor | None = None) -> Tensor:
    """x @ w.T (+ b). x may be (N,) or (B, N); w is (M, N); b is (M,)."""
    x, w = _as_tensor(x), _as_tensor(w)
    single = x.data.ndim == 1
    x2 = x.data[None, :] if single else x.data
    if x2.shape[1] != w.data.shape[1]:
        raise ValueError(f"linear: shape mismatch {x.shape} vs {w.shape}")
    y = x2 @ w.data.T
    if b is not None:
        b = _as_tensor(b)
        if b.data.shape != (w.data.shape[0],):
            raise ValueError(f"linear: bias shape {b.shape} != ({w.shape[0]},)")
        y = y + b.data
    parents = (x, w) if b is None else (x, w, b)
    out = Tensor(y[0] if single else y, parents, requires_grad=_needs(x, w, b))

    def backward(g):
        g2 = g[None, :] if single else g
        if x.requires_grad:
            gx = g2 @ w.data
            x.accumulate(gx[0] if single else gx, owned=True)
        if w.requires_grad:
            w.accumulate(g2.T @ x2, owned=True)
        if b is not None and b.requires_grad:
            b.accumulate(g2.sum(axis=0), owned=True)

    out._backward = backward
    return _record(out)


def conv1d(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1,
           padding: int = 0) -> Tensor:
    """1D cross-correlation with zero padding.

    x: (C_in, L) or (B, C_in, L); w: (C_out, C_in, K); b: (C_out,).
    """
    x, w = _as_tensor(x), _as_tensor(w)
    single = x.data.ndim == 2
    xb = x.data[None] if single else x.data
    B, c_in, L = xb.shape
    c_out, c_in_w, K = w.data.shape
    if c_in != c_in_w:
        raise ValueError(f"conv1d: input channels {c_in} != weight channels {c_in_w}")
    l_out = (L + 2 * padding - K) // stride + 1
    if l_out < 1:
        raise ValueError(f"conv1d: empty output (L={L}, K={K}, stride={stride}, padding={padding})")

    if padding:
        xp = np.zeros((B, c_in, L + 2 * padding))
        xp[:, :, padding:padding + L] = xb
    else:
        xp = xb
    win = np.lib.stride_tricks.sliding_window_view(xp, K, axis=2)[:, :, ::stride][:, :, :l_out]
    # im2col + one dgemm: (B*L_out, C_in*K) @ (C_in*K, C_out)
    cols = np.ascontiguousarray(win.transpose(0, 2, 1, 3)).reshape(B * l_out, c_in * K)
    w2 = w.data.reshape(c_out, c_in * K)
    y = cols @ w2.T
    if b is not None:
        b = _as_tensor(b)
        if b.data.shape != (c_out,):
            raise ValueError(f"conv1d: bias shape {b.shape} != ({c_out},)")
        y += b.data
    y = np.ascontiguousarray(y.reshape(B, l_out, c_out).transpose(0, 2, 1))
    parents = (x, w) if b is None else (x, w, b)
    out = Tensor(y[0] if single else y, parents, requires_grad=_needs(x, w, b))

    def backward(g):
        gb = g[None] if single else g
        gt = np.ascontiguousarray(gb.transpose(0, 2, 1)).reshape(B * l_out, c_out)
        if w.requires_grad:
            w.accumulate((gt.T @ cols).reshape(c_out, c_in, K), owned=True)
        if b is not None and b.requires_grad:
            b.accumulate(gt.sum(axis=0), owned=True)
        if x.requires_grad:
            gcols = (gt @ w2).reshape(B, l_out, c_in, K).transpose(0, 2, 1, 3)
            gxp = np.zeros((B, c_in, L + 2 * padding))
            for k in range(K):  # col2im scatter
                gxp[:, :, k:k + stride * l_out:stride] += gcols[:, :, :, k]
            gx = gxp[:, :, padding:padding + L] if padding else gxp
            x.accumulate(gx[0] if single else gx, owned=True)  # gxp is local

    out._backward = backward
    return _record(out)


def conv1d_nlc(x: Tensor, w: Tensor, b: Tensor | None = None, stride: int = 1,
               padding: int = 0) -> Tensor:
    """conv1d on channels-last activations: x is (B, L, C_in), output is
    (B, L_out, C_out). Same math as conv1d; this layout keeps the im2col
    buffers contiguous, which is what the training loop runs on."""
    x, w = _as_tensor(x), _as_tensor(w)
    B, L, c_in = x.data.shape
    c_out, c_in_w, K = w.data.shape
    if c_in != c_in_w:
        raise ValueError(f"conv1d_nlc: input channels {c_in} != weight channels {c_in_w}")
    l_out = (L + 2 * padding - K) // stride + 1
    if l_out < 1:
        raise ValueError("conv1d_nlc: empty output")
    dtype = x.data.dtype
    xp = np.zeros((B, L + 2 * padding, c_in), dtype=dtype)
    xp[:, padding:padding + L, :] = x.data
    s = xp.strides
    win = np.lib.stride_tricks.as_strided(xp, (B, l_out, K * c_in),
                                          (s[0], stride * s[1], s[2]))
    cols = np.ascontiguousarray(win).reshape(B * l_out, K * c_in)
    w2 = np.ascontiguousarray(w.data.transpose(2, 1, 0).reshape(K * c_in, c_out), dtype=dtype)
    y = (cols @ w2).reshape(B, l_out, c_out)
    if b is not None:
        b = _as_tensor(b)
        y += b.data
    parents = (x, w) if b is None else (x, w, b)
    out = Tensor(y, parents, requires_grad=_needs(x, w, b))

    def backward(g):
        gt = g.reshape(B * l_out, c_out)
        if w.requires_grad:
            gw2 = cols.T @ gt
            w.accumulate(gw2.reshape(K, c_in, c_out).transpose(2, 1, 0).astype(w.data.dtype, copy=False),
                         owned=True)
        if b is not None and b.requires_grad:
            b.accumulate(gt.sum(axis=0), owned=True)
        if x.requires_grad:
            gcols = (gt @ w2.T).reshape(B, l_out, K, c_in)
            gxp = np.zeros_like(xp)
            for k in range(K):
                gxp[:, k:k + stride * l_out:stride, :] += gcols[:, :, k, :]
            x.accumulate(np.ascontiguousarray(gxp[:, padding:padding + L, :]), owned=True)

    out._backward = backward
    return _record(out)


def mse(a: Tensor, b: Tensor) -> Tensor:
    """Sum of squared differences (unnormalized squared L2 norm)."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.shape != b.data.shape:
        raise ValueError(f"mse: shape mismatch {a.shape} vs {b.shape}")
    diff = a.data - b.data
    out = Tensor(np.sum(diff * diff), (a, b), requires_grad=_needs(a, b))

    def backward(g):
        if a.requires_grad:
            a.accumulate(2.0 * g * diff, owned=True)
        if b.requires_grad:
            b.accumulate(-2.0 * g * diff, owned=True)

    out._backward = backward
    return _record(out)


def backward(tape: Tape, root: Tensor) -> dict[Tensor, np.ndarray]:
    """Reverse sweep over the tape from a scalar root.

    Returns the gradient map for leaf tensors (parameters). Gradients are
    also left on each tensor's .grad; callers must clear parameter grads
    between optimization steps.
    """
    if root.data.size != 1:
        raise ValueError("backward: root must be a scalar")
    root.grad = np.ones_like(root.data)
    for node in reversed(tape.nodes):
        if node.grad is not None and node._backward is not None:
            node._backward(node.grad)
    grads: dict[Tensor, np.ndarray] = {}
    seen = set()
    for node in tape.nodes:
        for p in node.parents:
            if id(p) not in seen and p._backward is None:
                seen.add(id(p))
                if p.grad is not None:
                    grads[p] = p.grad
    return grads


def zero_grads(params) -> None:
    for p in (params.values() if isinstance(params, dict) else params):
        p.grad = None


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """Per-parameter-set Adam moments; defaults follow the standard settings."""

    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray],
              state: AdamState) -> AdamState:
    """One bias-corrected Adam update, in place on params. Rejects non-finite
    gradients without touching any parameter."""
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if g.shape != p.data.shape:
            raise ValueError(f"adam_step: grad shape {g.shape} != param shape {p.data.shape} for {name}")
        if not np.all(np.isfinite(g)):
            raise ValueError(f"adam_step: non-finite gradient for {name}")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
        v = state.v.get(name)
        if v is None:
            v = state.v[name] = np.zeros_like(p.data)
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return state
