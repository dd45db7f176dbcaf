"""Small dense networks with hand-written backprop, Adam and checkpoints."""
from __future__ import annotations

import json
import math
import zipfile
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = "rosb.mlp"
CHECKPOINT_VERSION = 1
OUTPUTS = ("linear", "tanh")


class CheckpointError(ValueError):
    pass


class Mlp:
    """Fully connected network, ReLU hidden layers, ``tanh`` or linear output.

    Weights are stored as (fan_in, fan_out) so a batch ``x`` of shape
    (B, fan_in) maps through ``x @ W + b``.
    """

    def __init__(self, layer_sizes, output: str = "linear",
                 rng: np.random.Generator | None = None, final_scale: float = 3e-3):
        if output not in OUTPUTS:
            raise ValueError(f"output must be one of {OUTPUTS}")
        if len(layer_sizes) < 2:
            raise ValueError("need at least input and output sizes")
        self.layer_sizes = tuple(int(n) for n in layer_sizes)
        self.output = output
        rng = rng if rng is not None else np.random.default_rng(0)
        self._bind(np.zeros(self.n_params))
        n_layers = len(self.layer_sizes) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            bound = final_scale if i == n_layers - 1 else 1.0 / math.sqrt(W.shape[0])
            W[...] = rng.uniform(-bound, bound, size=W.shape)
            b[...] = rng.uniform(-bound, bound, size=b.shape)

    @property
    def n_params(self) -> int:
        return sum((a + 1) * b for a, b in zip(self.layer_sizes[:-1], self.layer_sizes[1:]))

    def _bind(self, flat: np.ndarray):
        # weights and biases are views into one flat vector so optimizers and
        # target updates act on a single array
        self.flat = flat
        self.weights, self.biases = [], []
        i = 0
        for n_in, n_out in zip(self.layer_sizes[:-1], self.layer_sizes[1:]):
            self.weights.append(flat[i:i + n_in * n_out].reshape(n_in, n_out))
            i += n_in * n_out
            self.biases.append(flat[i:i + n_out])
            i += n_out

    @property
    def params(self) -> list[np.ndarray]:
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def flatten(self, grads) -> np.ndarray:
        """Pack a ``backward`` gradient list into the layout of ``flat``."""
        return np.concatenate([g.ravel() for g in grads])

    def copy(self) -> "Mlp":
        new = Mlp.__new__(Mlp)
        new.layer_sizes = self.layer_sizes
        new.output = self.output
        new._bind(self.flat.copy())
        return new

    def same_architecture(self, other: "Mlp") -> bool:
        return self.layer_sizes == other.layer_sizes and self.output == other.output

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.layer_sizes[0]:
            raise ValueError(f"input size {x.shape[-1]} != {self.layer_sizes[0]}")
        return x

    def forward(self, x) -> np.ndarray:
        x = self._check(x)
        h = x
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = np.maximum(z, 0.0) if i < last else z
        return np.tanh(h) if self.output == "tanh" else h

    __call__ = forward

    def forward_cache(self, x):
        """Forward pass that also returns what ``backward`` needs."""
        x = self._check(x)
        if x.ndim == 1:
            x = x[None, :]
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = np.maximum(z, 0.0) if i < last else z
            acts.append(h)
        y = np.tanh(h) if self.output == "tanh" else h
        return y, (acts, y)

    def backward(self, cache, grad_y):
        """Reverse pass for a scalar loss L given dL/dy.

        Returns (param_grads, grad_x); ``param_grads`` is ordered like ``params``.
        """
        acts, y = cache
        g = np.asarray(grad_y, dtype=float).reshape(y.shape)
        if self.output == "tanh":
            g = g * (1.0 - y * y)
        grads = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = acts[i]
            grads[2 * i] = h_in.T @ g
            grads[2 * i + 1] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (acts[i] > 0)
        return grads, g

    def state(self) -> dict:
        return {"layer_sizes": list(self.layer_sizes), "output": self.output}


class Adam:
    """Bias-corrected Adam acting in place on a list of arrays."""

    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def step(self, grads):
        if len(grads) != len(self.params):
            raise ValueError("gradient list does not match parameters")
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        c1 = 1.0 - b1**self.t
        c2 = 1.0 - b2**self.t
        lr_t = self.lr * math.sqrt(c2) / c1
        eps_t = self.eps * math.sqrt(c2)
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * (g * g)
            # same as lr * m_hat / (sqrt(v_hat) + eps), folded into one pass
            p -= lr_t * m / (np.sqrt(v) + eps_t)


def adam_step(params, grads, state: Adam):
    if [id(p) for p in params] != [id(p) for p in state.params]:
        raise ValueError("optimizer state belongs to different parameters")
    state.step(grads)


def soft_update(target: Mlp, online: Mlp, tau: float):
    """theta_target <- tau * theta_online + (1 - tau) * theta_target."""
    if not target.same_architecture(online):
        raise ValueError("soft_update needs identical architectures")
    target.flat *= 1.0 - tau
    target.flat += tau * online.flat


def save_checkpoint(path, net: Mlp, optimizer: Adam | None = None, meta: dict | None = None):
    header = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION,
              **net.state(), "meta": meta or {}}
    arrays = {}
    for i, p in enumerate(net.params):
        arrays[f"param_{i}"] = p
    if optimizer is not None:
        flat = len(optimizer.params) == 1 and optimizer.params[0] is net.flat
        header["adam"] = {"flat": flat, "lr": optimizer.lr, "beta1": optimizer.beta1,
                          "beta2": optimizer.beta2, "eps": optimizer.eps, "t": optimizer.t}
        for i, (m, v) in enumerate(zip(optimizer.m, optimizer.v)):
            arrays[f"adam_m_{i}"] = m
            arrays[f"adam_v_{i}"] = v
    arrays["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    path = Path(path)
    with path.open("wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path):
    """Return (net, optimizer_or_None, meta). Raises CheckpointError on bad files."""
    try:
        with np.load(Path(path), allow_pickle=False) as data:
            header = json.loads(bytes(data["header"]).decode())
            if header.get("format") != CHECKPOINT_FORMAT:
                raise CheckpointError(f"{path}: not a {CHECKPOINT_FORMAT} file")
            if header.get("version") != CHECKPOINT_VERSION:
                raise CheckpointError(f"{path}: unsupported version {header.get('version')}")
            net = Mlp(header["layer_sizes"], header["output"])
            for i, p in enumerate(net.params):
                stored = data[f"param_{i}"]
                if stored.shape != p.shape:
                    raise CheckpointError(f"{path}: parameter {i} has shape {stored.shape}")
                p[...] = stored
            opt = None
            if "adam" in header:
                a = header["adam"]
                opt = Adam([net.flat] if a.get("flat") else net.params, a["lr"], a["beta1"], a["beta2"], a["eps"])
                opt.t = a["t"]
                for i in range(len(opt.m)):
                    opt.m[i][...] = data[f"adam_m_{i}"]
                    opt.v[i][...] = data[f"adam_v_{i}"]
    except CheckpointError:
        raise
    except (OSError, KeyError, ValueError, EOFError, zipfile.BadZipFile) as exc:
        raise CheckpointError(f"{path}: unreadable checkpoint ({exc})") from exc
    return net, opt, header.get("meta", {})
