"""Multi-task optimization: epoch schedules, loss combination, Adam, and
the training loop.

Schedules are epoch-granular. Within an epoch the examples are shuffled
seed-deterministically and processed in batches; each batch builds one
tape over all its examples, the batch-mean combined loss is propagated,
and one Adam step is taken. (seed, config, data) fully determines the
trained parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .compute import Tape, binary_cross_entropy, cross_entropy, cross_entropy_value, weighted_sum
from .dataset import Dataset, LabeledTweet
from .errors import ConfigurationError, NumericError, ShapeError
from .metrics import EvalReport, evaluate
from .model import ForwardGraph, MultiTaskModel, forward_graph

TASKS = ("sentiment", "sarcasm", "dialect")
SCHEDULES = ("all-tasks", "seq1", "seq2", "seq3")


@dataclass(frozen=True)
class TrainConfig:
    schedule: str = "seq1"
    epochs: int = 5
    learning_rate: float = 1e-5
    batch_size: int = 32
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    loss_weights: tuple[float, float, float] = (1.0, 1.0, 1.0)  # sentiment, sarcasm, dialect

    def validate(self) -> None:
        if self.schedule not in SCHEDULES:
            raise ConfigurationError(f"unknown schedule '{self.schedule}'")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0.0:
            raise ConfigurationError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class EpochPlan:
    active: list[frozenset[str]]


def plan_schedule(schedule: str, epochs: int) -> EpochPlan:
    """Which task losses are active in each epoch (1-based epoch numbers)."""
    if epochs < 1:
        raise ConfigurationError(f"epochs must be >= 1, got {epochs}")
    aux = frozenset({"sarcasm", "dialect"})
    everything = frozenset(TASKS)
    sentiment_only = frozenset({"sentiment"})
    if schedule == "all-tasks":
        active = [everything] * epochs
    elif schedule == "seq1":
        active = [aux] + [everything] * (epochs - 1)
    elif schedule == "seq2":
        active = [aux if epoch % 2 == 1 else everything for epoch in range(1, epochs + 1)]
    elif schedule == "seq3":
        active = [aux if epoch <= 2 else sentiment_only for epoch in range(1, epochs + 1)]
    else:
        raise ConfigurationError(f"unknown schedule '{schedule}'")
    return EpochPlan(active=active)


def combined_loss(
    outputs,
    labels: LabeledTweet,
    active: frozenset[str] | set[str],
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0),
) -> float:
    """Weighted (default unweighted) sum of the active per-task losses,
    computed from a ForwardOutput's probability vectors."""
    if not active:
        raise ConfigurationError("active loss set must not be empty")
    total = 0.0
    if "sentiment" in active:
        total += weights[0] * cross_entropy_value(outputs.sentiment_probs, labels.sentiment_index())
    if "sarcasm" in active:
        p_sarcastic = float(outputs.sarcasm_probs[0])
        total += weights[1] * binary_cross_entropy(p_sarcastic, 1 if labels.sarcasm == "sarcastic" else 0)
    if "dialect" in active:
        total += weights[2] * cross_entropy_value(outputs.dialect_probs, labels.dialect_index())
    return total


class AdamState:
    """First/second moment accumulators plus the shared step counter."""

    def __init__(self):
        self.m: list[np.ndarray] | None = None
        self.v: list[np.ndarray] | None = None
        self.t = 0


def adam_step(
    state: AdamState,
    params: list[np.ndarray],
    grads: list[np.ndarray],
    config: TrainConfig,
) -> None:
    """Bias-corrected Adam update; gradients are zeroed afterward.

    Parameter slots whose gradient is identically zero are left untouched
    (no moment decay either), so heads outside every active gradient path
    stay bit-identical across epochs that never reach them.
    """
    if len(params) != len(grads):
        raise ShapeError("params and grads length mismatch")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ShapeError(f"param shape {p.shape} != grad shape {g.shape}")
    if state.m is None:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.t += 1
    b1, b2 = config.adam_beta1, config.adam_beta2
    bc1 = 1.0 - b1**state.t
    bc2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if not np.any(g):
            continue
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= config.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + config.adam_epsilon)
    for g in grads:
        g[...] = 0.0


@dataclass
class TraceRow:
    epoch: int
    active: frozenset[str]
    loss_sent: float | None
    loss_sarc: float | None
    loss_dial: float | None
    fpn: float | None
    fsar: float | None
    wfs: float | None


TRACE_HEADER = "epoch,active,loss_sent,loss_sarc,loss_dial,fpn,fsar,wfs"


def format_trace(rows: list[TraceRow]) -> str:
    def cell(v: float | None) -> str:
        return "" if v is None else f"{v:.6f}"

    lines = [TRACE_HEADER]
    for row in rows:
        active = "+".join(t for t in TASKS if t in row.active)
        lines.append(
            ",".join(
                [
                    str(row.epoch),
                    active,
                    cell(row.loss_sent),
                    cell(row.loss_sarc),
                    cell(row.loss_dial),
                    cell(row.fpn),
                    cell(row.fsar),
                    cell(row.wfs),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _task_term(graph: ForwardGraph, ex: LabeledTweet, task: str, tape: Tape):
    if task == "sentiment":
        return cross_entropy(graph.sentiment_probs, ex.sentiment_index(), tape)
    if task == "sarcasm":
        # 2-way cross-entropy on the softmax pair == binary cross-entropy
        # on the sarcastic-class probability.
        return cross_entropy(graph.sarcasm_probs, ex.sarcasm_index(), tape)
    return cross_entropy(graph.dialect_probs, ex.dialect_index(), tape)


def train(
    model: MultiTaskModel,
    provider,
    data: Dataset,
    tcfg: TrainConfig,
    validation: Dataset | None = None,
    on_epoch_end: Callable[[int, MultiTaskModel], None] | None = None,
) -> list[TraceRow]:
    """Run the configured schedule and return the per-epoch trace."""
    tcfg.validate()
    plan = plan_schedule(tcfg.schedule, tcfg.epochs)
    present = frozenset(name for name, _ in model.heads())
    for i, active in enumerate(plan.active, start=1):
        if not active & present:
            raise ConfigurationError(
                f"epoch {i} of schedule '{tcfg.schedule}' activates {sorted(active)} "
                f"but the model only has heads {sorted(present)}"
            )

    slots = model.param_slots() + provider.param_slots()
    params = [p for p, _ in slots]
    grads = [g for _, g in slots]
    state = AdamState()
    weight_of = dict(zip(TASKS, tcfg.loss_weights))

    rng = np.random.default_rng(tcfg.seed)
    n = len(data.examples)
    rows: list[TraceRow] = []

    for epoch, planned in enumerate(plan.active, start=1):
        active = planned & present
        order = rng.permutation(n)
        sums = {t: 0.0 for t in TASKS}
        for batch_index, start in enumerate(range(0, n, tcfg.batch_size)):
            batch = order[start : start + tcfg.batch_size]
            tape = Tape()
            terms = []
            term_weights = []
            touched = []
            for idx in batch:
                ex = data.examples[idx]
                graph = forward_graph(model, provider.vector(ex), tape)
                touched.append((ex, graph.embedding))
                for task in TASKS:
                    if task not in active:
                        continue
                    term = _task_term(graph, ex, task, tape)
                    sums[task] += term.item()
                    terms.append(term)
                    term_weights.append(weight_of[task] / len(batch))
            total = weighted_sum(terms, term_weights, tape)
            if not np.isfinite(total.item()):
                raise NumericError(
                    f"non-finite loss in epoch {epoch}, batch {batch_index}",
                    batch_index=batch_index,
                )
            tape.backward(total)
            if provider.trainable:
                for ex, emb in touched:
                    provider.accumulate_grad(ex, emb.grad)
            adam_step(state, params, grads, tcfg)

        report: EvalReport | None = None
        if validation is not None:
            report = evaluate(model, provider, validation)
        rows.append(
            TraceRow(
                epoch=epoch,
                active=frozenset(active),
                loss_sent=sums["sentiment"] / n if "sentiment" in active else None,
                loss_sarc=sums["sarcasm"] / n if "sarcasm" in active else None,
                loss_dial=sums["dialect"] / n if "dialect" in active else None,
                fpn=report.fpn if report else None,
                fsar=report.fsar if report else None,
                wfs=report.wfs if report else None,
            )
        )
        if on_epoch_end is not None:
            on_epoch_end(epoch, model)
    return rows
