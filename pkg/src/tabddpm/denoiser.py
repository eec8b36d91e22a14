"""MLP denoiser with hand-written backward pass and an Adam optimizer.

Network, for a batch of noisy rows ``x``, timesteps ``t`` and optional
labels ``y``::

    temb = W_t2 @ silu(W_t1 @ sinemb(t) + b_t1) + b_t2   (+ class_emb[y])
    h    = W_in @ x + b_in + temb
    h    = silu(W_k @ h + b_k)              for each hidden layer
    out  = W_out @ h + b_out  ->  [eps_hat | logits_1 | ... | logits_C]

Everything is float64 and batched over rows.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .schedule import sin_time_embed


def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def silu(a):
    return a * _sigmoid(a)


def silu_grad(a):
    s = _sigmoid(a)
    return s * (1.0 + a * (1.0 - s))


@dataclass
class DenoiserOutput:
    eps_hat: np.ndarray
    cat_logits: list


class Denoiser:
    """Parameter container plus forward/backward.

    ``params`` is an ordered dict of float64 arrays; weights are stored as
    ``(fan_in, fan_out)`` so a layer is ``h @ W + b``.
    """

    def __init__(self, n_cont: int, cat_sizes, n_classes: int = 0, hidden_dims=(256, 256),
                 embed_dim: int = 128, params: dict | None = None):
        if not hidden_dims:
            raise ValueError("hidden_dims must be nonempty")
        if embed_dim % 2:
            raise ValueError("embed_dim must be even")
        self.n_cont = int(n_cont)
        self.cat_sizes = [int(k) for k in cat_sizes]
        self.n_classes = int(n_classes)
        self.hidden_dims = tuple(int(h) for h in hidden_dims)
        self.embed_dim = int(embed_dim)
        self.width = self.n_cont + sum(self.cat_sizes)
        if self.width == 0:
            raise ValueError("denoiser needs at least one feature")
        self.params = params if params is not None else {}

    @property
    def conditional(self) -> bool:
        return self.n_classes > 0

    def shapes(self) -> dict:
        E = self.embed_dim
        s = {
            "t1.W": (E, E), "t1.b": (E,),
            "t2.W": (E, E), "t2.b": (E,),
        }
        if self.conditional:
            s["class_emb"] = (self.n_classes, E)
        s["in.W"] = (self.width, E)
        s["in.b"] = (E,)
        prev = E
        for k, h in enumerate(self.hidden_dims):
            s[f"h{k}.W"] = (prev, h)
            s[f"h{k}.b"] = (h,)
            prev = h
        s["out.W"] = (prev, self.width)
        s["out.b"] = (self.width,)
        return s

    def init_params(self, seed: int = 0) -> "Denoiser":
        # U(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases
        rng = np.random.default_rng(seed)
        params = {}
        for name, shape in self.shapes().items():
            if name.endswith(".b"):
                params[name] = np.zeros(shape)
            elif name == "class_emb":
                params[name] = rng.uniform(-1.0, 1.0, size=shape)
            else:
                bound = 1.0 / np.sqrt(shape[0])
                params[name] = rng.uniform(-bound, bound, size=shape)
        self.params = params
        return self

    def forward(self, x, t, y=None):
        """Return ``(DenoiserOutput, cache)`` for a batch."""
        p = self.params
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        n = x.shape[0]
        if x.shape[1] != self.width:
            raise ValueError(f"input width {x.shape[1]} != {self.width}")
        t = np.broadcast_to(np.asarray(t), (n,))
        if self.conditional:
            if y is None:
                raise ValueError("conditional denoiser needs labels")
            y = np.broadcast_to(np.asarray(y, dtype=np.int64), (n,))
            if y.min() < 0 or y.max() >= self.n_classes:
                raise ValueError("label out of range")
        elif y is not None:
            raise ValueError("unconditional denoiser takes no labels")

        s = sin_time_embed(t, self.embed_dim)
        a_t = s @ p["t1.W"] + p["t1.b"]
        temb = silu(a_t) @ p["t2.W"] + p["t2.b"]
        if self.conditional:
            temb = temb + p["class_emb"][y]
        h = x @ p["in.W"] + p["in.b"] + temb
        inputs, pre = [h], []
        for k in range(len(self.hidden_dims)):
            a = h @ p[f"h{k}.W"] + p[f"h{k}.b"]
            pre.append(a)
            h = silu(a)
            inputs.append(h)
        out = h @ p["out.W"] + p["out.b"]

        logits, offset = [], self.n_cont
        for k in self.cat_sizes:
            logits.append(out[:, offset:offset + k])
            offset += k
        cache = {"x": x, "y": y, "s": s, "a_t": a_t, "inputs": inputs, "pre": pre, "n": n}
        return DenoiserOutput(out[:, :self.n_cont], logits), cache

    def backward(self, cache, d_eps, d_logits) -> dict:
        """Gradients of ``sum(d_eps * eps_hat) + sum_i sum(d_logits[i] * logits_i)``."""
        p = self.params
        n = cache["n"]
        d_out = np.empty((n, self.width))
        d_out[:, :self.n_cont] = np.reshape(d_eps, (n, self.n_cont)) if self.n_cont else 0.0
        if len(d_logits) != len(self.cat_sizes):
            raise ValueError("wrong number of logit gradients")
        offset = self.n_cont
        for k, g in zip(self.cat_sizes, d_logits):
            g = np.asarray(g)
            if g.shape != (n, k):
                raise ValueError("logit gradient shape does not match the cached forward pass")
            d_out[:, offset:offset + k] = g
            offset += k

        grads = {}
        inputs, pre = cache["inputs"], cache["pre"]
        grads["out.W"] = inputs[-1].T @ d_out
        grads["out.b"] = d_out.sum(axis=0)
        dh = d_out @ p["out.W"].T
        for k in reversed(range(len(self.hidden_dims))):
            da = dh * silu_grad(pre[k])
            grads[f"h{k}.W"] = inputs[k].T @ da
            grads[f"h{k}.b"] = da.sum(axis=0)
            dh = da @ p[f"h{k}.W"].T

        # dh is now the gradient w.r.t. the injected sum x @ W_in + b_in + temb
        grads["in.W"] = cache["x"].T @ dh
        grads["in.b"] = dh.sum(axis=0)
        if self.conditional:
            g = np.zeros_like(p["class_emb"])
            np.add.at(g, cache["y"], dh)
            grads["class_emb"] = g
        a_t = cache["a_t"]
        grads["t2.W"] = silu(a_t).T @ dh
        grads["t2.b"] = dh.sum(axis=0)
        da_t = (dh @ p["t2.W"].T) * silu_grad(a_t)
        grads["t1.W"] = cache["s"].T @ da_t
        grads["t1.b"] = da_t.sum(axis=0)
        return {name: grads[name] for name in p}

    def to_dict(self) -> dict:
        return {
            "n_cont": self.n_cont,
            "cat_sizes": self.cat_sizes,
            "n_classes": self.n_classes,
            "hidden_dims": list(self.hidden_dims),
            "embed_dim": self.embed_dim,
            "params": {k: v.tolist() for k, v in self.params.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Denoiser":
        net = cls(d["n_cont"], d["cat_sizes"], d["n_classes"], d["hidden_dims"], d["embed_dim"])
        shapes = net.shapes()
        params = {}
        for name, shape in shapes.items():
            arr = np.array(d["params"][name], dtype=np.float64).reshape(shape)
            params[name] = arr
        net.params = params
        return net


@dataclass
class Adam:
    lr: float = 1e-3
    b1: float = 0.9
    b2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict, grads: dict) -> None:
        """Bias-corrected Adam update, in place on ``params``."""
        self.step_count += 1
        c1 = 1.0 - self.b1 ** self.step_count
        c2 = 1.0 - self.b2 ** self.step_count
        for name, g in grads.items():
            if name not in self.m:
                self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            m = self.m[name]
            v = self.v[name]
            m *= self.b1
            m += (1.0 - self.b1) * g
            v *= self.b2
            v += (1.0 - self.b2) * g * g
            params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)
