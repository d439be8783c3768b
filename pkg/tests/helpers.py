"""Shared test utilities: finite-difference oracles and tiny fixtures."""

from __future__ import annotations

import numpy as np

from informed_sentiment.compute import Tape, cross_entropy, weighted_sum
from informed_sentiment.dataset import LabeledTweet
from informed_sentiment.model import MultiTaskModel, forward, forward_graph
from informed_sentiment.training import TASKS, combined_loss


def model_loss_value(model: MultiTaskModel, e_values, ex, active, weights=(1.0, 1.0, 1.0)) -> float:
    """Value-only combined loss, used as the function under finite differencing."""
    return combined_loss(forward(model, e_values), ex, active, weights)


def _np_softmax(z):
    e = np.exp(z - z.max())
    return np.maximum(e / e.sum(), 1e-300)


def _np_stack(layers, x):
    h = x
    hiddens = []
    for w, b in layers[:-1]:
        h = np.tanh(w @ h + b)
        hiddens.append(h)
    w, b = layers[-1]
    return w @ h + b, hiddens


def gated_loss_oracle(model: MultiTaskModel, e_values: np.ndarray, ex, active, weights=(1.0, 1.0, 1.0)):
    """Independent numpy recomputation of the combined loss with the gate
    semantics written out explicitly, for finite-differencing gated models.

    A gradient gate deliberately drops the informed-edge contribution from
    the backward pass, so the function a gated gradient differentiates is
    the loss with that path frozen at the linearization point. The closure
    reads the model's (possibly perturbed) parameter arrays everywhere
    gradient is supposed to flow and pre-copied frozen values where the
    gate blocks it: under full-limit the entire exposed computation is
    frozen (including its view of the embedding); under partial-limit only
    the informed heads' output layers are frozen; under unlimited nothing
    is.
    """
    cfg = model.config
    live = {
        name: [(layer.weights, layer.bias) for layer in head.layers]
        for name, head in model.heads()
    }
    frozen = {
        name: [(layer.weights.copy(), layer.bias.copy()) for layer in head.layers]
        for name, head in model.heads()
    }
    e_frozen = np.asarray(e_values, dtype=np.float64).copy()

    def exposed_for(task):
        if cfg.backprop == "full-limit":
            layers, x = frozen[task], e_frozen
        elif cfg.backprop == "partial-limit":
            layers = live[task][:-1] + [frozen[task][-1]]
            x = e_values
        else:
            layers, x = live[task], e_values
        logits, hiddens = _np_stack(layers, x)
        parts = []
        if cfg.exposure in ("hidden", "hidden-plus-output"):
            parts.append(hiddens[-1])
        if cfg.exposure in ("output", "hidden-plus-output"):
            parts.append(_np_softmax(logits) if cfg.softmax_outputs else logits)
        return np.concatenate(parts) if len(parts) > 1 else parts[0]

    def value() -> float:
        total = 0.0
        probs = {}
        for task in ("sarcasm", "dialect"):
            if model.head(task) is None:
                continue
            logits, _ = _np_stack(live[task], e_values)
            probs[task] = _np_softmax(logits)
        x_parts = [e_values] + [exposed_for(task) for task in cfg.informed]
        x = np.concatenate(x_parts) if len(x_parts) > 1 else e_values
        sent_logits, _ = _np_stack(live["sentiment"], x)
        probs["sentiment"] = _np_softmax(sent_logits)

        targets = {
            "sentiment": ex.sentiment_index(),
            "sarcasm": ex.sarcasm_index(),
            "dialect": ex.dialect_index(),
        }
        for task, w in zip(TASKS, weights):
            if task in active:
                p = max(float(probs[task][targets[task]]), 1e-12)
                total += w * -np.log(p)
        return total

    return value


def analytic_gradients(model: MultiTaskModel, e_values, ex, active, weights=(1.0, 1.0, 1.0)):
    """Backward pass through the tape; returns d loss/d embedding."""
    model.zero_grad()
    tape = Tape()
    graph = forward_graph(model, np.asarray(e_values, dtype=np.float64), tape)
    terms = []
    ws = []
    for task, w in zip(TASKS, weights):
        if task not in active:
            continue
        if task == "sentiment":
            terms.append(cross_entropy(graph.sentiment_probs, ex.sentiment_index(), tape))
        elif task == "sarcasm":
            terms.append(cross_entropy(graph.sarcasm_probs, ex.sarcasm_index(), tape))
        else:
            terms.append(cross_entropy(graph.dialect_probs, ex.dialect_index(), tape))
        ws.append(w)
    total = weighted_sum(terms, ws, tape)
    tape.backward(total)
    return graph.embedding.grad


def fd_param_gradient(loss_fn, array: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central finite differences of loss_fn() with respect to every entry
    of ``array`` (perturbed in place and restored)."""
    grad = np.zeros_like(array)
    flat = array.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        original = flat[i]
        step = h * max(1.0, abs(original))
        flat[i] = original + step
        upper = loss_fn()
        flat[i] = original - step
        lower = loss_fn()
        flat[i] = original
        gflat[i] = (upper - lower) / (2.0 * step)
    return grad


def assert_grads_close(analytic: np.ndarray, fd: np.ndarray, rtol: float = 1e-4, atol: float = 1e-7):
    """|a - f| <= atol + rtol * max(|a|, |f|); the absolute term covers the
    finite-difference noise floor where the true gradient is zero."""
    diff = np.abs(analytic - fd)
    bound = atol + rtol * np.maximum(np.abs(analytic), np.abs(fd))
    worst = (diff - bound).max()
    assert worst <= 0.0, f"gradient mismatch: worst excess {worst:.3e}"


def make_example(sentiment="POS", sarcasm="sarcastic", dialect="MSA", ex_id="0", text="t"):
    return LabeledTweet(ex_id, text, sentiment, sarcasm, dialect)


# Brute-force metric recomputation from raw (gold, predicted) pair lists;
# intentionally naive and independent of the confusion-matrix bookkeeping.
def brute_f1(pairs, cls):
    tp = sum(1 for g, p in pairs if g == cls and p == cls)
    fp = sum(1 for g, p in pairs if g != cls and p == cls)
    fn = sum(1 for g, p in pairs if g == cls and p != cls)
    prec = tp / (tp + fp) if tp + fp else 0.0
    rec = tp / (tp + fn) if tp + fn else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec else 0.0


def brute_fpn(pairs):
    return (brute_f1(pairs, 0) + brute_f1(pairs, 2)) / 2


def brute_fsar(pairs):
    return brute_f1(pairs, 0)


def brute_wfs(pairs):
    total = len(pairs)
    acc = 0.0
    for cls in range(5):
        support = sum(1 for g, _ in pairs if g == cls)
        acc += support * brute_f1(pairs, cls)
    return acc / total
