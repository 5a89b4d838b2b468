"""Tiny dense networks with hand-written backprop, float64 throughout.

The policy/value networks here are small enough (tens of units) that a
framework would be overkill; explicit forward/backward keeps the gradients
auditable against finite differences.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Mlp", "Adam", "soft_update"]


class Mlp:
    """Fully connected net: ReLU hidden layers, linear or scaled-tanh output.

    Weights have shape (fan_out, fan_in); inputs are (batch, fan_in). A
    ``tanh`` output multiplies elementwise by ``output_scale``, which bounds
    each output component to ``(-scale, scale)``.
    """

    def __init__(self, weights, biases, output="linear", output_scale=None):
        if output not in ("linear", "tanh"):
            raise ValueError(f"unknown output activation {output!r}")
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        if len(self.weights) != len(self.biases):
            raise ValueError("weights/biases length mismatch")
        for w, b in zip(self.weights, self.biases):
            if w.shape[0] != b.shape[0]:
                raise ValueError(f"bias shape {b.shape} does not match weight {w.shape}")
        self.output = output
        if output == "tanh":
            if output_scale is None:
                raise ValueError("tanh output needs an output_scale")
            self.output_scale = np.asarray(output_scale, dtype=float)
        else:
            self.output_scale = None

    # -- construction ---------------------------------------------------------

    @classmethod
    def initialize(
        cls,
        dims,
        output: str,
        rng: np.random.Generator,
        output_scale=None,
        final_range: float = 3e-3,
    ) -> "Mlp":
        """Uniform fan-in init for hidden layers; the output layer starts in
        ``(-final_range, final_range)`` so initial outputs are near zero."""
        weights, biases = [], []
        last = len(dims) - 2
        for i in range(len(dims) - 1):
            fan_in, fan_out = dims[i], dims[i + 1]
            bound = final_range if i == last else 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases, output=output, output_scale=output_scale)

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self) -> "Mlp":
        return Mlp(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            output=self.output,
            output_scale=None if self.output_scale is None else self.output_scale.copy(),
        )

    def parameters(self) -> list[np.ndarray]:
        """Flat parameter list (weights then biases per layer), by reference."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    # -- forward / backward -----------------------------------------------------

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x: np.ndarray):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        h = x
        pre = []
        acts = [h]
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ w.T + b
            pre.append(z)
            if i < n_layers - 1:
                h = np.maximum(z, 0.0)
            elif self.output == "tanh":
                h = self.output_scale * np.tanh(z)
            else:
                h = z
            acts.append(h)
        return h, (pre, acts)

    def backward(self, cache, grad_out: np.ndarray):
        """Backpropagate ``dL/dy`` through the cached forward pass.

        Returns ``(grad_weights, grad_biases, grad_input)``. No batch
        averaging is applied; put any 1/N factor into ``grad_out``.
        """
        pre, acts = cache
        grad = np.atleast_2d(np.asarray(grad_out, dtype=float))
        if self.output == "tanh":
            t = np.tanh(pre[-1])
            grad = grad * self.output_scale * (1.0 - t * t)
        grad_w = [None] * len(self.weights)
        grad_b = [None] * len(self.biases)
        for i in range(len(self.weights) - 1, -1, -1):
            grad_w[i] = grad.T @ acts[i]
            grad_b[i] = grad.sum(axis=0)
            grad = grad @ self.weights[i]
            if i > 0:
                grad = grad * (pre[i - 1] > 0.0)
        return grad_w, grad_b, grad

    def gradients(self, cache, grad_out: np.ndarray) -> list[np.ndarray]:
        """Parameter gradients in the order of ``parameters()``."""
        grad_w, grad_b, _ = self.backward(cache, grad_out)
        out = []
        for gw, gb in zip(grad_w, grad_b):
            out.extend((gw, gb))
        return out

    # -- persistence --------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dims": self.dims,
            "output": self.output,
            "output_scale": None if self.output_scale is None else self.output_scale.tolist(),
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        return cls(
            [np.array(w) for w in d["weights"]],
            [np.array(b) for b in d["biases"]],
            output=d["output"],
            output_scale=None if d.get("output_scale") is None else np.array(d["output_scale"]),
        )


class Adam:
    """Adaptive moment estimation over a fixed parameter list.

    ``weight_decay`` is decoupled (applied directly to the parameters each
    step, not mixed into the gradient), so callers' gradient computations
    stay exactly the loss gradient.
    """

    def __init__(
        self,
        params: list[np.ndarray],
        lr: float,
        beta1=0.9,
        beta2=0.999,
        eps=1e-8,
        weight_decay: float = 0.0,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads: list[np.ndarray]):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            m_hat = m / (1 - b1**self.t)
            v_hat = v / (1 - b2**self.t)
            if self.weight_decay:
                p -= self.lr * self.weight_decay * p
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


def soft_update(target: Mlp, online: Mlp, tau: float) -> Mlp:
    """Move every target parameter toward its online twin: t <- tau*o + (1-tau)*t."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    for tp, op in zip(target.parameters(), online.parameters()):
        if tp.shape != op.shape:
            raise ValueError(f"shape mismatch {tp.shape} vs {op.shape}")
        tp *= 1.0 - tau
        tp += tau * op
    return target
