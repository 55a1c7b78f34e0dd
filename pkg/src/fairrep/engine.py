"""Small dense-network core in float64 numpy.

Everything here is explicit: a forward pass records a :class:`Tape`, a
backward pass consumes it and returns parameter gradients plus the gradient
with respect to the network input. A tape can carry a gradient-reversal
scale, in which case the input gradient handed back upstream is multiplied
by ``-scale``. That is the only place reversal happens, so placing it on an
adversary's forward pass puts the cut exactly at the encoder/adversary
boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DenseNet",
    "Tape",
    "AdaDeltaState",
    "init_dense",
    "forward",
    "backward",
    "weighted_bce",
    "sigmoid",
    "adadelta_step",
    "NonFiniteError",
    "TapeConsumedError",
]


class NonFiniteError(FloatingPointError):
    """Raised when a NaN or inf shows up in inputs, gradients or parameters."""


class TapeConsumedError(RuntimeError):
    pass


@dataclass
class DenseNet:
    """Stack of affine maps with ReLU between them.

    ``weights[i]`` has shape ``(out, in)`` and ``biases[i]`` shape ``(out,)``.
    Hidden layers are rectified. The last layer is left linear (a raw logit)
    unless ``relu_output`` is set, which is how the encoder is built.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    relu_output: bool = False

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix and at least one layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} do not match")
            if i > 0 and self.weights[i - 1].shape[0] != w.shape[1]:
                raise ValueError(
                    f"layer {i} expects {w.shape[1]} inputs but layer {i - 1} "
                    f"produces {self.weights[i - 1].shape[0]}"
                )

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def sizes(self) -> list[int]:
        return [self.in_dim] + [w.shape[0] for w in self.weights]

    def parameters(self) -> list[np.ndarray]:
        """Parameters in ``[W0, b0, W1, b1, ...]`` order (live references)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "DenseNet":
        return DenseNet(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.relu_output,
        )


def init_dense(sizes, rng: np.random.Generator, relu_output: bool = False) -> DenseNet:
    """Glorot-uniform weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        if fan_in <= 0 or fan_out <= 0:
            raise ValueError(f"layer widths must be positive, got {sizes}")
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseNet(weights, biases, relu_output)


@dataclass
class Tape:
    net: DenseNet
    inputs: list[np.ndarray]  # input to each layer
    preacts: list[np.ndarray]  # affine output of each layer
    squeezed: bool
    reversal: float | None = None
    consumed: bool = field(default=False, repr=False)


def _check_finite(name, arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"non-finite values in {name}")


def forward(net: DenseNet, batch, reversal: float | None = None):
    """Run ``batch`` (n x in_dim) through ``net``.

    Returns ``(out, tape)``. ``out`` is a length-n vector when the net ends in
    a single unit and an (n x out_dim) matrix otherwise. ``reversal`` attaches
    a gradient-reversal scale to the tape (see module docstring).
    """
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != net.in_dim:
        raise ValueError(f"batch shape {x.shape} does not fit input width {net.in_dim}")
    _check_finite("forward input", x)
    if reversal is not None and reversal < 0:
        raise ValueError("reversal scale must be >= 0")

    inputs, preacts = [], []
    h = x
    last = len(net.weights) - 1
    # overflow is reported by the finiteness check below, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            inputs.append(h)
            pre = h @ w.T + b
            preacts.append(pre)
            h = np.maximum(pre, 0.0) if (i < last or net.relu_output) else pre
    squeezed = net.out_dim == 1 and not net.relu_output
    out = h[:, 0] if squeezed else h
    _check_finite("forward output", out)
    return out, Tape(net, inputs, preacts, squeezed, reversal)


def backward(tape: Tape, loss_grad):
    """Backpropagate ``loss_grad`` (d loss / d output) through a recorded pass.

    Returns ``(param_grads, input_grad)`` with ``param_grads`` ordered like
    :meth:`DenseNet.parameters`. When the tape carries a reversal scale the
    returned input gradient is multiplied by ``-scale``; parameter gradients
    of the net itself are never reversed.
    """
    if tape.consumed:
        raise TapeConsumedError("tape was already used for a backward pass")
    tape.consumed = True
    net = tape.net
    g = np.asarray(loss_grad, dtype=np.float64)
    n = tape.inputs[0].shape[0]
    if tape.squeezed:
        if g.shape != (n,):
            raise ValueError(f"loss_grad shape {g.shape} does not match batch size {n}")
        g = g[:, None]
    elif g.shape != (n, net.out_dim):
        raise ValueError(f"loss_grad shape {g.shape} does not match output ({n}, {net.out_dim})")
    _check_finite("loss gradient", g)

    last = len(net.weights) - 1
    grads: list[np.ndarray] = [None] * (2 * len(net.weights))
    for i in range(last, -1, -1):
        if i < last or net.relu_output:
            g = g * (tape.preacts[i] > 0)
        grads[2 * i] = g.T @ tape.inputs[i]
        grads[2 * i + 1] = g.sum(axis=0)
        g = g @ net.weights[i]
    if tape.reversal is not None:
        g = -tape.reversal * g
    return grads, g


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    # exp(-|z|) never overflows
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def weighted_bce(logits, labels, class_weights=(1.0, 1.0)):
    """Class-weighted binary cross-entropy on raw logits (natural log).

    ``loss = mean_i w[y_i] * CE(sigmoid(logit_i), y_i)``; the mean is over the
    batch, not over the weights. Returns ``(loss, d loss / d logits)``.
    """
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels)
    if z.ndim != 1 or y.shape != z.shape:
        raise ValueError(f"logits {z.shape} and labels {y.shape} must be equal-length vectors")
    if z.size == 0:
        raise ValueError("empty batch")
    w0, w1 = (float(c) for c in class_weights)
    if not (w0 > 0 and w1 > 0):
        raise ValueError(f"class weights must be positive, got {class_weights}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    y = y.astype(np.float64)
    w = np.where(y == 1, w1, w0)
    # softplus(z) - y*z == -[y log s + (1-y) log(1-s)]
    per_sample = np.logaddexp(0.0, z) - y * z
    n = z.size
    return float(np.sum(w * per_sample) / n), w * (sigmoid(z) - y) / n


@dataclass
class AdaDeltaState:
    """Running averages for AdaDelta, one pair of arrays per parameter."""

    sq_grad: list[np.ndarray]
    sq_delta: list[np.ndarray]
    rho: float = 0.95
    eps: float = 1e-6
    lr: float = 1.0

    @classmethod
    def zeros_like(cls, params, rho=0.95, eps=1e-6, lr=1.0) -> "AdaDeltaState":
        if not 0.0 < rho < 1.0 or eps <= 0 or lr <= 0:
            raise ValueError(f"bad AdaDelta settings rho={rho} eps={eps} lr={lr}")
        return cls(
            [np.zeros_like(p, dtype=np.float64) for p in params],
            [np.zeros_like(p, dtype=np.float64) for p in params],
            rho,
            eps,
            lr,
        )


def adadelta_step(params, grads, state: AdaDeltaState) -> None:
    """One AdaDelta update, in place on ``params`` and ``state``.

    E[g^2] <- rho E[g^2] + (1-rho) g^2
    delta  <- -lr * sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
    E[dx^2] <- rho E[dx^2] + (1-rho) delta^2
    """
    if not (len(params) == len(grads) == len(state.sq_grad)):
        raise ValueError("params, grads and optimizer state disagree in length")
    rho, eps = state.rho, state.eps
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape or p.shape != state.sq_grad[i].shape:
            raise ValueError(f"shape mismatch at parameter {i}: {p.shape} vs {g.shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"non-finite gradient for parameter {i}")
        sg = state.sq_grad[i]
        sd = state.sq_delta[i]
        with np.errstate(over="ignore", invalid="ignore"):
            sg *= rho
            sg += (1.0 - rho) * g * g
            delta = -state.lr * np.sqrt(sd + eps) / np.sqrt(sg + eps) * g
            sd *= rho
            sd += (1.0 - rho) * delta * delta
            p += delta
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(sd))):
            raise NonFiniteError(f"parameter {i} became non-finite")
