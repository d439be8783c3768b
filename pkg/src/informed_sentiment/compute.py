"""Dense numeric core: linear layers, activations, losses, and exact
reverse-mode differentiation over 1-D tensors.

Everything is double precision. Gradients accumulate additively across
paths and batches; the optimizer is responsible for zeroing them between
steps. Ops take an optional :class:`Tape`; with ``tape=None`` they run
value-only (inference), with a tape they record backward closures. The
arithmetic is identical either way, so forward values are bit-identical
across modes.
"""

from __future__ import annotations

import enum
import math
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, ShapeError

PROB_FLOOR = 1e-12  # probabilities are floored here before any log
_POS_FLOOR = 1e-300  # keeps softmax outputs strictly positive under underflow


class Tensor1:
    """A 1-D value vector with a matching gradient accumulator."""

    __slots__ = ("values", "grad")

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ShapeError(f"Tensor1 expects a 1-D vector, got shape {self.values.shape}")
        self.grad = np.zeros_like(self.values)

    def __len__(self) -> int:
        return self.values.shape[0]

    def item(self) -> float:
        if self.values.shape[0] != 1:
            raise ShapeError("item() requires a scalar tensor")
        return float(self.values[0])


class Tape:
    """Records backward closures during a forward pass and replays them in
    reverse to propagate gradients."""

    __slots__ = ("_ops",)

    def __init__(self):
        self._ops: list[Callable[[], None]] = []

    def record(self, fn: Callable[[], None]) -> None:
        self._ops.append(fn)

    def backward(self, loss: Tensor1) -> None:
        """Seed d(loss)/d(loss) = 1 and run all recorded closures in reverse."""
        if loss.values.shape[0] != 1:
            raise ShapeError("backward() expects a scalar loss tensor")
        loss.grad[...] = 1.0
        for fn in reversed(self._ops):
            fn()


class LinearLayer:
    """y = W x + b with gradient accumulators beside each parameter."""

    __slots__ = ("weights", "bias", "weight_grad", "bias_grad")

    def __init__(self, weights: np.ndarray, bias: np.ndarray):
        self.weights = np.asarray(weights, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.weights.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError("weights must be 2-D and bias 1-D")
        if self.weights.shape[0] != self.bias.shape[0]:
            raise ShapeError(
                f"bias length {self.bias.shape[0]} != output rows {self.weights.shape[0]}"
            )
        self.weight_grad = np.zeros_like(self.weights)
        self.bias_grad = np.zeros_like(self.bias)

    @property
    def out_features(self) -> int:
        return self.weights.shape[0]

    @property
    def in_features(self) -> int:
        return self.weights.shape[1]

    def zero_grad(self) -> None:
        self.weight_grad[...] = 0.0
        self.bias_grad[...] = 0.0

    def param_slots(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(self.weights, self.weight_grad), (self.bias, self.bias_grad)]


class GateMode(enum.Enum):
    """Backward behaviour of an informed edge. Forward is always identity."""

    PASS = "pass"
    STOP = "stop"
    STOP_PARAMS_ONLY = "stop-params-only"


class GradientGate:
    __slots__ = ("mode",)

    def __init__(self, mode: GateMode):
        self.mode = mode


def linear_forward(
    layer: LinearLayer,
    x: Tensor1,
    tape: Tape | None = None,
    accumulate_params: bool = True,
) -> Tensor1:
    """Affine map. With ``accumulate_params=False`` the backward pass treats
    W and b as constants: the input still receives W^T g, the parameter
    accumulators receive nothing (the stop-params-only gate semantics)."""
    if len(x) != layer.in_features:
        raise ShapeError(f"input length {len(x)} != layer in_features {layer.in_features}")
    out = Tensor1(layer.weights @ x.values + layer.bias)
    if tape is not None:

        def _back():
            g = out.grad
            if accumulate_params:
                layer.weight_grad += np.outer(g, x.values)
                layer.bias_grad += g
            x.grad += layer.weights.T @ g

        tape.record(_back)
    return out


def tanh_forward(x: Tensor1, tape: Tape | None = None) -> Tensor1:
    out = Tensor1(np.tanh(x.values))
    if tape is not None:

        def _back():
            x.grad += (1.0 - out.values * out.values) * out.grad

        tape.record(_back)
    return out


def softmax(z: Tensor1, tape: Tape | None = None) -> Tensor1:
    """Max-subtracted softmax. Outputs are strictly positive and sum to 1."""
    if len(z) == 0:
        raise ShapeError("softmax of an empty vector")
    shifted = z.values - z.values.max()
    e = np.exp(shifted)
    p = np.maximum(e / e.sum(), _POS_FLOOR)
    out = Tensor1(p)
    if tape is not None:

        def _back():
            g = out.grad
            dot = float(out.values @ g)
            z.grad += out.values * (g - dot)

        tape.record(_back)
    return out


def concat(parts: Sequence[Tensor1], tape: Tape | None = None) -> Tensor1:
    out = Tensor1(np.concatenate([p.values for p in parts]))
    if tape is not None:
        offsets = np.cumsum([0] + [len(p) for p in parts])

        def _back():
            for part, start, end in zip(parts, offsets[:-1], offsets[1:]):
                part.grad += out.grad[start:end]

        tape.record(_back)
    return out


def cross_entropy(probs: Tensor1, target: int, tape: Tape | None = None) -> Tensor1:
    """-ln p[target] with the probability floored at PROB_FLOOR.

    Chained after :func:`softmax` the combined gradient at the logits is
    exactly softmax(z) - onehot(target).
    """
    if not 0 <= target < len(probs):
        raise IndexError(f"target {target} out of range for {len(probs)} classes")
    p_t = float(probs.values[target])
    out = Tensor1(np.array([-math.log(max(p_t, PROB_FLOOR))]))
    if tape is not None:

        def _back():
            # In the floored region the loss is locally constant in p.
            if p_t >= PROB_FLOOR:
                probs.grad[target] += -out.grad[0] / p_t

        tape.record(_back)
    return out


def cross_entropy_value(probs: np.ndarray, target: int) -> float:
    """Value-only convenience used for reporting and oracles."""
    if not 0 <= target < probs.shape[0]:
        raise IndexError(f"target {target} out of range for {probs.shape[0]} classes")
    return -math.log(max(float(probs[target]), PROB_FLOOR))


def binary_cross_entropy(p_sarcastic: float, target: int) -> float:
    """-[t ln p + (1-t) ln(1-p)], both probabilities floored at PROB_FLOOR."""
    p = float(p_sarcastic)
    t = int(target)
    if t == 1:
        return -math.log(max(p, PROB_FLOOR))
    return -math.log(max(1.0 - p, PROB_FLOOR))


def weighted_sum(
    terms: Sequence[Tensor1],
    weights: Sequence[float],
    tape: Tape | None = None,
) -> Tensor1:
    """Weighted sum of scalar tensors (used to combine per-task losses)."""
    if len(terms) != len(weights):
        raise ShapeError("terms and weights length mismatch")
    total = 0.0
    for term, w in zip(terms, weights):
        total += w * term.item()
    out = Tensor1(np.array([total]))
    if tape is not None:

        def _back():
            g = out.grad[0]
            for term, w in zip(terms, weights):
                term.grad[0] += w * g

        tape.record(_back)
    return out


def gate_backward(
    gate: GradientGate,
    upstream_grad: np.ndarray,
    layer: LinearLayer | None = None,
) -> np.ndarray:
    """Backward rule of a gradient gate, stated on a single edge.

    ``pass`` returns the upstream gradient unchanged; ``stop`` kills it;
    ``stop-params-only`` is defined on a layer boundary only: it returns the
    gradient the layer's *input* would receive with W held constant, and by
    construction contributes nothing to the layer's parameter accumulators.
    """
    g = np.asarray(upstream_grad, dtype=np.float64)
    if gate.mode is GateMode.PASS:
        return g.copy()
    if gate.mode is GateMode.STOP:
        return np.zeros_like(g)
    if layer is None:
        raise ConfigurationError("stop-params-only gate requires a layer boundary")
    if g.shape[0] != layer.out_features:
        raise ShapeError(f"upstream length {g.shape[0]} != layer out_features {layer.out_features}")
    return layer.weights.T @ g
