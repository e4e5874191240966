"""Dense float64 numerics: linear/MLP layers with hand-written backward
passes, elementwise losses, an Adam optimizer over named parameter dicts,
and a central finite-difference gradient oracle.

Everything is plain numpy, double precision, row-major. A weight matrix
has shape (out, in) and maps ``y[i] = dot(W[i], x)``. Layer entry points
accept either a single vector ``(in,)`` or a stack of rows ``(batch, in)``
and mirror that shape on output. Forward passes are pure functions of
(parameters, input), so identical calls produce bit-identical results.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ConfigError, InternalError, OracleError, TrainingError

Array = np.ndarray


def _relu(x: Array) -> Array:
    return np.maximum(x, 0.0)


def _relu_grad(pre: Array) -> Array:
    return (pre > 0.0).astype(np.float64)


def _tanh_grad(pre: Array) -> Array:
    t = np.tanh(pre)
    return 1.0 - t * t


# name -> (activation, derivative as a function of the pre-activation)
ACTIVATIONS: dict[str, tuple[Callable[[Array], Array], Callable[[Array], Array]]] = {
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, _tanh_grad),
    "identity": (lambda x: x, np.ones_like),
}


def as_matrix(values, name: str = "matrix") -> Array:
    """Coerce to a finite 2-D float64 array, validating shape and content."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ConfigError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name} contains non-finite entries")
    return arr


@dataclass
class MlpParams:
    """A stack of fully connected layers.

    Hidden layers apply ``activation``; the output layer is linear unless
    ``activate_output`` is set. ``weights[i]`` has shape (out_i, in_i) and
    ``biases[i]`` shape (out_i,).
    """

    weights: list[Array]
    biases: list[Array]
    activation: str = "relu"
    activate_output: bool = False

    def __post_init__(self) -> None:
        if self.activation not in ACTIVATIONS:
            raise ConfigError(
                f"unknown activation '{self.activation}'; choose from {sorted(ACTIVATIONS)}"
            )
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigError("weights and biases must be nonempty lists of equal length")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ConfigError(f"layer {i}: weight {w.shape} and bias {b.shape} disagree")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ConfigError(
                    f"layer {i} expects input width {w.shape[1]}, "
                    f"previous layer emits {self.weights[i - 1].shape[0]}"
                )

    @classmethod
    def init(
        cls,
        sizes: Sequence[int],
        rng: np.random.Generator,
        activation: str = "relu",
        activate_output: bool = False,
    ) -> "MlpParams":
        """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)] for weights and biases."""
        if len(sizes) < 2 or any(s < 1 for s in sizes):
            raise ConfigError(f"need at least input and output sizes >= 1, got {sizes}")
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            bound = 1.0 / math.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        return cls(weights, biases, activation, activate_output)

    @property
    def in_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def sizes(self) -> list[int]:
        return [self.in_dim] + [w.shape[0] for w in self.weights]

    def copy(self) -> "MlpParams":
        return MlpParams(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
            self.activate_output,
        )

    def named_arrays(self, prefix: str) -> Iterator[tuple[str, Array]]:
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            yield f"{prefix}.w{i}", w
            yield f"{prefix}.b{i}", b

    def _shape_key(self) -> tuple:
        return tuple(w.shape for w in self.weights) + (self.activation, self.activate_output)


@dataclass
class MlpCache:
    """Activations recorded by mlp_forward, consumed by mlp_backward."""

    inputs: list[Array]  # input to each layer, shape (batch, fan_in)
    preacts: list[Array]  # pre-activation output of each layer
    squeezed: bool  # original input was a single vector
    shape_key: tuple  # guards against pairing the cache with other params


@dataclass
class MlpGrads:
    """Parameter gradients with exactly the shapes of their parameters."""

    weights: list[Array]
    biases: list[Array]


def linear_forward(weights: Array, x) -> Array:
    """Plain matrix-vector (or matrix-batch) product, no bias."""
    w = np.asarray(weights, dtype=np.float64)
    v = np.asarray(x, dtype=np.float64)
    if w.ndim != 2:
        raise ConfigError(f"weights must be 2-D, got shape {w.shape}")
    if v.shape[-1] != w.shape[1]:
        raise ConfigError(
            f"linear layer expects input width {w.shape[1]}, got {v.shape[-1]}"
        )
    return v @ w.T


def mlp_forward(params: MlpParams, x) -> tuple[Array, MlpCache]:
    """Run the stack forward, returning the output and the backward cache."""
    act, _ = ACTIVATIONS[params.activation]
    v = np.asarray(x, dtype=np.float64)
    squeezed = v.ndim == 1
    h = v.reshape(1, -1) if squeezed else v
    inputs: list[Array] = []
    preacts: list[Array] = []
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = linear_forward(w, h) + b
        preacts.append(z)
        h = act(z) if (i < last or params.activate_output) else z
    out = h[0] if squeezed else h
    return out, MlpCache(inputs, preacts, squeezed, params._shape_key())


def mlp_backward(params: MlpParams, cache: MlpCache, grad_out) -> tuple[MlpGrads, Array]:
    """Backpropagate an output gradient through a cached forward pass."""
    if cache.shape_key != params._shape_key():
        raise InternalError("activation cache does not belong to these parameters")
    _, dact = ACTIVATIONS[params.activation]
    g = np.asarray(grad_out, dtype=np.float64)
    if cache.squeezed:
        g = g.reshape(1, -1)
    last = params.n_layers - 1
    d_weights: list[Array] = [np.empty(0)] * params.n_layers
    d_biases: list[Array] = [np.empty(0)] * params.n_layers
    for i in range(last, -1, -1):
        if i < last or params.activate_output:
            g = g * dact(cache.preacts[i])
        d_weights[i] = g.T @ cache.inputs[i]
        d_biases[i] = g.sum(axis=0)
        g = g @ params.weights[i]
    grad_in = g[0] if cache.squeezed else g
    return MlpGrads(d_weights, d_biases), grad_in


def mean_absolute_error(pred, target) -> float:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    return float(np.mean(np.abs(p - t)))


def error_signs(pred, target) -> Array:
    """Subgradient of |pred - target| w.r.t. pred; 0 at the kink."""
    return np.sign(np.asarray(pred, dtype=np.float64) - np.asarray(target, dtype=np.float64))


def mean_squared_error(pred, target) -> float:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    return float(np.mean((p - t) ** 2))


@dataclass
class AdamState:
    """Optimizer state paired with a named parameter dict.

    Moment buffers are keyed and shaped exactly like the parameters they
    track; ``step`` counts completed updates.
    """

    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    step: int = 0
    first_moment: dict[str, Array] = field(default_factory=dict)
    second_moment: dict[str, Array] = field(default_factory=dict)

    @classmethod
    def for_params(
        cls,
        params: dict[str, Array],
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ) -> "AdamState":
        if learning_rate <= 0:
            raise ConfigError(f"learning rate must be positive, got {learning_rate}")
        state = cls(learning_rate, beta1, beta2, epsilon)
        for name, p in params.items():
            state.first_moment[name] = np.zeros_like(p)
            state.second_moment[name] = np.zeros_like(p)
        return state


def adam_step(params: dict[str, Array], grads: dict[str, Array], state: AdamState) -> None:
    """One in-place Adam update on every named parameter.

    Raises TrainingError naming the offending parameter on non-finite
    gradients. A zero gradient leaves the parameter value untouched.
    """
    state.step += 1
    t = state.step
    bias1 = 1.0 - state.beta1**t
    bias2 = 1.0 - state.beta2**t
    for name, p in params.items():
        if name not in grads:
            raise InternalError(f"no gradient supplied for parameter '{name}'")
        g = grads[name]
        if g.shape != p.shape:
            raise ConfigError(
                f"gradient shape {g.shape} does not match parameter '{name}' {p.shape}"
            )
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for parameter '{name}'")
        m = state.first_moment[name]
        v = state.second_moment[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + state.epsilon)


def finite_diff_grad(fn: Callable[[Array], float], point, epsilon: float = 1e-5) -> Array:
    """Central-difference gradient estimate of a scalar function.

    The loop is deliberately naive: this is the independent oracle that
    analytic backward passes are checked against.
    """
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    x = np.asarray(point, dtype=np.float64).copy()
    grad = np.empty_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + epsilon
        hi = float(fn(x))
        flat[i] = orig - epsilon
        lo = float(fn(x))
        flat[i] = orig
        if not (math.isfinite(hi) and math.isfinite(lo)):
            raise OracleError(f"non-finite evaluation while perturbing coordinate {i}")
        out[i] = (hi - lo) / (2.0 * epsilon)
    return grad


def max_relative_error(a, b, floor: float = 1e-3) -> float:
    """Worst-case elementwise relative error between two gradient arrays.

    Entries smaller than ``floor`` in both arrays are compared on an
    absolute scale (divided by ``floor``) so that near-zero gradients do
    not dominate the metric.
    """
    av = np.asarray(a, dtype=np.float64).reshape(-1)
    bv = np.asarray(b, dtype=np.float64).reshape(-1)
    if av.shape != bv.shape:
        raise ConfigError(f"cannot compare shapes {av.shape} and {bv.shape}")
    denom = np.maximum(np.maximum(np.abs(av), np.abs(bv)), floor)
    return float(np.max(np.abs(av - bv) / denom)) if av.size else 0.0


def pack_params(params: dict[str, Array]) -> tuple[Array, list[tuple[str, tuple, int]]]:
    """Flatten a named parameter dict into one vector plus a layout spec."""
    layout = [(name, p.shape, p.size) for name, p in params.items()]
    if not layout:
        return np.zeros(0), layout
    flat = np.concatenate([params[name].reshape(-1) for name, _, _ in layout])
    return flat, layout


def unpack_params(flat: Array, layout: list[tuple[str, tuple, int]]) -> dict[str, Array]:
    """Inverse of pack_params."""
    out: dict[str, Array] = {}
    offset = 0
    for name, shape, size in layout:
        out[name] = flat[offset : offset + size].reshape(shape).copy()
        offset += size
    if offset != flat.size:
        raise InternalError(f"layout covers {offset} values, vector has {flat.size}")
    return out


def deep_copy_params(params: dict[str, Array]) -> dict[str, Array]:
    return {name: p.copy() for name, p in params.items()}


__all__ = [
    "ACTIVATIONS",
    "AdamState",
    "MlpCache",
    "MlpGrads",
    "MlpParams",
    "adam_step",
    "as_matrix",
    "deep_copy_params",
    "error_signs",
    "finite_diff_grad",
    "linear_forward",
    "max_relative_error",
    "mean_absolute_error",
    "mean_squared_error",
    "mlp_backward",
    "mlp_forward",
    "pack_params",
    "unpack_params",
]
