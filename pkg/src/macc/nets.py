"""Fully connected networks with manual backprop, plus SGD and Adam.

Everything the trainer needs and nothing more: four dense layers (three
hidden ReLU layers of 64 units by default), sigmoid or linear output,
uniform initialization in [-1/sqrt(fan_in), +1/sqrt(fan_in)], and exact
analytic gradients (checked against finite differences in the tests).
"""

import numpy as np


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Mlp:
    """Dense network: len(hidden) ReLU layers plus one output layer.

    out_act is "sigmoid" or "linear".  Parameters live in self.weights and
    self.biases (index 0 nearest the input).
    """

    def __init__(self, in_dim, hidden, out_dim, out_act, rng):
        if out_act not in ("sigmoid", "linear"):
            raise ValueError(f"unknown output activation '{out_act}'")
        dims = [int(in_dim), *[int(h) for h in hidden], int(out_dim)]
        if any(d < 1 for d in dims):
            raise ValueError(f"layer dimensions must be positive, got {dims}")
        self.dims = dims
        self.out_act = out_act
        self.weights = []
        self.biases = []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.gen.uniform(-bound, bound, (fan_in, fan_out)))
            self.biases.append(rng.gen.uniform(-bound, bound, fan_out))

    @property
    def in_dim(self):
        return self.dims[0]

    @property
    def out_dim(self):
        return self.dims[-1]

    def params(self):
        """Flat list of parameter arrays, weights and biases interleaved."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def set_params(self, params):
        for i in range(len(self.weights)):
            self.weights[i] = params[2 * i].copy()
            self.biases[i] = params[2 * i + 1].copy()

    def _check_input(self, x):
        x = np.asarray(x, dtype=np.float64)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ValueError(f"expected input of width {self.in_dim}, got shape {x.shape}")
        return x, squeeze

    def forward(self, x):
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x):
        """Forward pass keeping activations for backward().

        Returns (output, cache); a 1-d input yields a 1-d output.
        """
        x, squeeze = self._check_input(x)
        acts = [x]
        h = x
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w + b
            if i < last:
                h = np.maximum(z, 0.0)
            elif self.out_act == "sigmoid":
                h = _sigmoid(z)
            else:
                h = z
            acts.append(h)
        out = acts[-1][0] if squeeze else acts[-1]
        return out, (acts, squeeze)

    def backward(self, cache, grad_out):
        """Backprop grad_out (d loss / d output) through the cached pass.

        Returns (param_grads, grad_input) with param_grads matching
        params() order.
        """
        acts, squeeze = cache
        g = np.asarray(grad_out, dtype=np.float64)
        if squeeze:
            g = g[None, :] if g.ndim == 1 else g.reshape(1, -1)
        if g.shape != acts[-1].shape:
            raise ValueError(f"gradient shape {g.shape} does not match output {acts[-1].shape}")

        if self.out_act == "sigmoid":
            y = acts[-1]
            g = g * y * (1.0 - y)
        w_grads = [None] * len(self.weights)
        b_grads = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = acts[i]
            w_grads[i] = h_in.T @ g
            b_grads[i] = g.sum(axis=0)
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (acts[i] > 0.0)
        grads = []
        for wg, bg in zip(w_grads, b_grads):
            grads.append(wg)
            grads.append(bg)
        grad_in = g[0] if squeeze else g
        return grads, grad_in

    def clone(self):
        """Deep copy with identical parameters (used for target networks)."""
        twin = object.__new__(Mlp)
        twin.dims = list(self.dims)
        twin.out_act = self.out_act
        twin.weights = [w.copy() for w in self.weights]
        twin.biases = [b.copy() for b in self.biases]
        return twin


class Sgd:
    """Plain gradient descent on a params() list."""

    def __init__(self, params, lr):
        self.lr = lr
        self._n = len(params)

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    """Adaptive moment estimation with the standard coefficients."""

    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1.0e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads):
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def make_optimizer(kind, params, lr):
    if kind == "adam":
        return Adam(params, lr)
    if kind == "sgd":
        return Sgd(params, lr)
    raise ValueError(f"unknown optimizer '{kind}'")
