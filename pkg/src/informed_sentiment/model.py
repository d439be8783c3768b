"""The informed multi-task network: sarcasm and dialect heads over the
sentence embedding, and a sentiment head over the concatenation of the
embedding with the exposed vectors of the informed heads.

Gradient gating on the informed edges is realized by running each
informed head twice per pass: once feeding its own loss (always normal
backprop) and once feeding the sentiment input, where the gate mode
decides what the replayed run records - nothing (full-limit), everything
but the output layer's parameters (partial-limit), or everything
(unlimited). Both runs share the same parameters, so forward values are
bit-identical across modes and gradients from the two paths accumulate
additively.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .compute import (
    GateMode,
    GradientGate,
    LinearLayer,
    Tape,
    Tensor1,
    concat,
    linear_forward,
    softmax,
    tanh_forward,
)
from .embeddings import ToyEncoderParams
from .errors import ConfigurationError, FormatError, ShapeError

N_SENTIMENT = 3
N_SARCASM = 2
N_DIALECT = 5

EXPOSURES = ("output", "hidden", "hidden-plus-output")
BACKPROP_MODES = ("full-limit", "partial-limit", "unlimited")
INFORMABLE = ("sarcasm", "dialect")

GATE_FOR_BACKPROP = {
    "full-limit": GateMode.STOP,
    "partial-limit": GateMode.STOP_PARAMS_ONLY,
    "unlimited": GateMode.PASS,
}


def normalize_informed(informed) -> tuple[str, ...]:
    items = set(informed)
    unknown = items - set(INFORMABLE)
    if unknown:
        raise ConfigurationError(f"informed contains unknown task(s) {sorted(unknown)}")
    return tuple(t for t in INFORMABLE if t in items)


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 768
    hidden_layers: int = 0
    hidden_size: int = 16
    exposure: str = "output"
    informed: tuple[str, ...] = ("sarcasm", "dialect")
    softmax_outputs: bool = True
    backprop: str = "full-limit"

    def validate(self) -> None:
        if self.dim < 1:
            raise ConfigurationError(f"dim must be positive, got {self.dim}")
        if self.hidden_layers not in (0, 1, 2):
            raise ConfigurationError(f"hidden_layers must be 0, 1 or 2, got {self.hidden_layers}")
        if self.hidden_layers > 0 and self.hidden_size < 1:
            raise ConfigurationError(f"hidden_size must be positive, got {self.hidden_size}")
        if self.exposure not in EXPOSURES:
            raise ConfigurationError(f"unknown exposure '{self.exposure}'")
        if self.backprop not in BACKPROP_MODES:
            raise ConfigurationError(f"unknown backprop mode '{self.backprop}'")
        normalize_informed(self.informed)
        if self.backprop == "partial-limit" and self.hidden_layers < 1:
            raise ConfigurationError(
                "backprop='partial-limit' requires hidden_layers >= 1, got hidden_layers=0"
            )
        if self.exposure != "output" and self.hidden_layers < 1:
            raise ConfigurationError(
                f"exposure='{self.exposure}' requires hidden_layers >= 1, got hidden_layers=0"
            )

    def exposed_length(self, n_classes: int) -> int:
        if self.exposure == "output":
            return n_classes
        if self.exposure == "hidden":
            return self.hidden_size
        return self.hidden_size + n_classes

    def sentiment_input_length(self) -> int:
        extra = 0
        if "sarcasm" in self.informed:
            extra += self.exposed_length(N_SARCASM)
        if "dialect" in self.informed:
            extra += self.exposed_length(N_DIALECT)
        return self.dim + extra


@dataclass
class Head:
    layers: list[LinearLayer]
    n_classes: int


@dataclass
class ForwardOutput:
    sentiment_probs: np.ndarray
    sarcasm_probs: np.ndarray | None
    dialect_probs: np.ndarray | None
    exposed_sarcasm: np.ndarray | None
    exposed_dialect: np.ndarray | None


@dataclass
class ForwardGraph:
    """Tape-connected handles from one forward pass (training internals)."""

    embedding: Tensor1
    sentiment_probs: Tensor1
    sarcasm_probs: Tensor1 | None
    dialect_probs: Tensor1 | None
    exposed_sarcasm: Tensor1 | None
    exposed_dialect: Tensor1 | None


class MultiTaskModel:
    def __init__(
        self,
        config: ModelConfig,
        sarcasm_head: Head | None,
        dialect_head: Head | None,
        sentiment_head: Head,
    ):
        self.config = config
        self.sarcasm_head = sarcasm_head
        self.dialect_head = dialect_head
        self.sentiment_head = sentiment_head
        self.gates = {
            task: GradientGate(GATE_FOR_BACKPROP[config.backprop])
            for task in config.informed
        }

    def heads(self) -> list[tuple[str, Head]]:
        out = []
        if self.sarcasm_head is not None:
            out.append(("sarcasm", self.sarcasm_head))
        if self.dialect_head is not None:
            out.append(("dialect", self.dialect_head))
        out.append(("sentiment", self.sentiment_head))
        return out

    def head(self, task: str) -> Head | None:
        return {"sarcasm": self.sarcasm_head, "dialect": self.dialect_head,
                "sentiment": self.sentiment_head}[task]

    def param_slots(self) -> list[tuple[np.ndarray, np.ndarray]]:
        slots = []
        for _, head in self.heads():
            for layer in head.layers:
                slots.extend(layer.param_slots())
        return slots

    def zero_grad(self) -> None:
        for _, head in self.heads():
            for layer in head.layers:
                layer.zero_grad()


def _init_layer(rng: np.random.Generator, out_features: int, in_features: int) -> LinearLayer:
    bound = np.sqrt(6.0 / (in_features + out_features))
    weights = rng.uniform(-bound, bound, size=(out_features, in_features))
    return LinearLayer(weights, np.zeros(out_features))


def _init_stack(rng, in_dim: int, hidden_layers: int, hidden_size: int, n_classes: int) -> list[LinearLayer]:
    layers = []
    current = in_dim
    for _ in range(hidden_layers):
        layers.append(_init_layer(rng, hidden_size, current))
        current = hidden_size
    layers.append(_init_layer(rng, n_classes, current))
    return layers


def build_model(config: ModelConfig, seed: int) -> MultiTaskModel:
    """Seed-deterministic construction; weights uniform in (-a, a) with
    a = sqrt(6 / (fan_in + fan_out)), biases zero."""
    config.validate()
    rng = np.random.default_rng(seed)
    sarcasm = Head(
        _init_stack(rng, config.dim, config.hidden_layers, config.hidden_size, N_SARCASM),
        N_SARCASM,
    )
    dialect = Head(
        _init_stack(rng, config.dim, config.hidden_layers, config.hidden_size, N_DIALECT),
        N_DIALECT,
    )
    sentiment = Head(
        _init_stack(
            rng,
            config.sentiment_input_length(),
            config.hidden_layers,
            config.hidden_size,
            N_SENTIMENT,
        ),
        N_SENTIMENT,
    )
    return MultiTaskModel(config, sarcasm, dialect, sentiment)


def _run_stack(
    head: Head,
    x: Tensor1,
    tape: Tape | None,
    accumulate_hidden: bool = True,
    accumulate_output: bool = True,
    through_output: bool = True,
) -> tuple[Tensor1 | None, list[Tensor1]]:
    h = x
    hiddens: list[Tensor1] = []
    for layer in head.layers[:-1]:
        h = tanh_forward(linear_forward(layer, h, tape, accumulate_hidden), tape)
        hiddens.append(h)
    if not through_output:
        return None, hiddens
    return linear_forward(head.layers[-1], h, tape, accumulate_output), hiddens


def _exposed_replay(model: MultiTaskModel, head: Head, e: Tensor1, tape: Tape | None) -> Tensor1:
    """Recompute the head along the informed edge with gate semantics.

    full-limit records nothing (the exposed vector is a constant to the
    backward pass); partial-limit records everything except the output
    layer's parameter accumulation; unlimited records everything.
    """
    cfg = model.config
    mode = cfg.backprop
    if tape is None or mode == "full-limit":
        replay_tape, acc_hidden, acc_output = None, False, False
    elif mode == "partial-limit":
        replay_tape, acc_hidden, acc_output = tape, True, False
    else:
        replay_tape, acc_hidden, acc_output = tape, True, True

    need_output = cfg.exposure in ("output", "hidden-plus-output")
    logits, hiddens = _run_stack(
        head, e, replay_tape, acc_hidden, acc_output, through_output=need_output
    )
    parts: list[Tensor1] = []
    if cfg.exposure in ("hidden", "hidden-plus-output"):
        parts.append(hiddens[-1])
    if need_output:
        assert logits is not None
        parts.append(softmax(logits, replay_tape) if cfg.softmax_outputs else logits)
    if len(parts) == 1:
        return parts[0]
    return concat(parts, replay_tape)


def forward_graph(model: MultiTaskModel, e_values: np.ndarray, tape: Tape | None) -> ForwardGraph:
    cfg = model.config
    if e_values.shape != (cfg.dim,):
        raise ShapeError(f"embedding shape {e_values.shape} != ({cfg.dim},)")
    e = Tensor1(e_values)

    probs: dict[str, Tensor1 | None] = {"sarcasm": None, "dialect": None}
    for task in ("sarcasm", "dialect"):
        head = model.head(task)
        if head is None:
            continue
        logits, _ = _run_stack(head, e, tape)
        probs[task] = softmax(logits, tape)

    exposed: dict[str, Tensor1 | None] = {"sarcasm": None, "dialect": None}
    sentiment_parts = [e]
    for task in cfg.informed:
        head = model.head(task)
        if head is None:
            raise ConfigurationError(f"informed of '{task}' but the model has no such head")
        exposed[task] = _exposed_replay(model, head, e, tape)
        sentiment_parts.append(exposed[task])

    x = sentiment_parts[0] if len(sentiment_parts) == 1 else concat(sentiment_parts, tape)
    sent_logits, _ = _run_stack(model.sentiment_head, x, tape)
    sent_probs = softmax(sent_logits, tape)

    return ForwardGraph(
        embedding=e,
        sentiment_probs=sent_probs,
        sarcasm_probs=probs["sarcasm"],
        dialect_probs=probs["dialect"],
        exposed_sarcasm=exposed["sarcasm"],
        exposed_dialect=exposed["dialect"],
    )


def forward(model: MultiTaskModel, e_values: np.ndarray) -> ForwardOutput:
    g = forward_graph(model, np.asarray(e_values, dtype=np.float64), tape=None)
    take = lambda t: None if t is None else t.values
    return ForwardOutput(
        sentiment_probs=g.sentiment_probs.values,
        sarcasm_probs=take(g.sarcasm_probs),
        dialect_probs=take(g.dialect_probs),
        exposed_sarcasm=take(g.exposed_sarcasm),
        exposed_dialect=take(g.exposed_dialect),
    )


def param_count(model: MultiTaskModel) -> int:
    total = 0
    for _, head in model.heads():
        for layer in head.layers:
            total += layer.weights.size + layer.bias.size
    return total


def _two_hidden_params(dim: int, h: int, n_out: int = N_SENTIMENT) -> int:
    return (dim * h + h) + (h * h + h) + (h * n_out + n_out)


def build_baseline(
    kind: str,
    dim: int,
    hidden_size: int = 16,
    reference_params: int = 0,
    seed: int = 0,
) -> MultiTaskModel:
    """Sentiment-only comparison models: B1 is a single output layer, B2
    adds two hidden layers of ``hidden_size``, B3 sizes two hidden layers
    to come closest to ``reference_params`` total parameters."""
    rng = np.random.default_rng(seed)
    if kind == "B1":
        config = ModelConfig(dim=dim, hidden_layers=0, informed=())
        stack = _init_stack(rng, dim, 0, 0, N_SENTIMENT)
    elif kind == "B2":
        config = ModelConfig(dim=dim, hidden_layers=2, hidden_size=hidden_size, informed=())
        stack = _init_stack(rng, dim, 2, hidden_size, N_SENTIMENT)
    elif kind == "B3":
        if reference_params <= 0:
            raise ConfigurationError("B3 requires reference_params > 0")
        if reference_params < _two_hidden_params(dim, 1):
            raise ConfigurationError(
                f"reference_params {reference_params} below the minimum "
                f"two-hidden-layer model ({_two_hidden_params(dim, 1)})"
            )
        h = 1
        while _two_hidden_params(dim, h) < reference_params:
            h += 1
        candidates = [h] if h == 1 else [h - 1, h]
        best = min(
            candidates,
            key=lambda c: (abs(_two_hidden_params(dim, c) - reference_params), c),
        )
        config = ModelConfig(dim=dim, hidden_layers=2, hidden_size=best, informed=())
        stack = _init_stack(rng, dim, 2, best, N_SENTIMENT)
    else:
        raise ConfigurationError(f"unknown baseline kind '{kind}'")
    return MultiTaskModel(config, None, None, Head(stack, N_SENTIMENT))


# --- SMC1 checkpoint container --------------------------------------------

SMC1_MAGIC = b"SMC1"


def save_checkpoint(
    model: MultiTaskModel, path: str | Path, encoder: ToyEncoderParams | None = None
) -> None:
    cfg = model.config
    out = bytearray()
    out += SMC1_MAGIC
    out += struct.pack("<I", cfg.dim)
    out += struct.pack("<B", cfg.hidden_layers)
    out += struct.pack("<I", cfg.hidden_size)
    out += struct.pack("<B", EXPOSURES.index(cfg.exposure))
    informed_mask = (1 if "sarcasm" in cfg.informed else 0) | (2 if "dialect" in cfg.informed else 0)
    out += struct.pack("<B", informed_mask)
    out += struct.pack("<B", 1 if cfg.softmax_outputs else 0)
    out += struct.pack("<B", BACKPROP_MODES.index(cfg.backprop))
    presence = (
        (1 if model.sarcasm_head is not None else 0)
        | (2 if model.dialect_head is not None else 0)
        | 4
    )
    out += struct.pack("<B", presence)
    for head in (model.sarcasm_head, model.dialect_head, model.sentiment_head):
        if head is None:
            continue
        out += struct.pack("<I", len(head.layers))
        for layer in head.layers:
            out += struct.pack("<II", layer.out_features, layer.in_features)
            out += layer.weights.astype("<f8").tobytes()
            out += layer.bias.astype("<f8").tobytes()
    if encoder is None:
        out += struct.pack("<B", 0)
    else:
        out += struct.pack("<B", 1)
        out += struct.pack("<B", 1 if encoder.trainable else 0)
        out += struct.pack("<II", encoder.vocab_size, encoder.dim)
        out += encoder.projection.astype("<f8").tobytes()
    Path(path).write_bytes(bytes(out))


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.offset = 0
        self.path = path

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.offset + size > len(self.data):
            raise FormatError(f"{self.path}: truncated at byte offset {self.offset}")
        vals = struct.unpack_from(fmt, self.data, self.offset)
        self.offset += size
        return vals if len(vals) > 1 else vals[0]

    def take_f64(self, count: int) -> np.ndarray:
        size = 8 * count
        if self.offset + size > len(self.data):
            raise FormatError(f"{self.path}: truncated at byte offset {self.offset}")
        arr = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.offset).copy()
        self.offset += size
        return arr


def load_checkpoint(path: str | Path) -> tuple[MultiTaskModel, ToyEncoderParams | None]:
    data = Path(path).read_bytes()
    if data[:4] != SMC1_MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}, expected {SMC1_MAGIC!r}")
    r = _Reader(data, path)
    r.offset = 4
    dim = r.take("<I")
    hidden_layers = r.take("<B")
    hidden_size = r.take("<I")
    exposure = EXPOSURES[r.take("<B")]
    informed_mask = r.take("<B")
    informed = tuple(
        t for bit, t in ((1, "sarcasm"), (2, "dialect")) if informed_mask & bit
    )
    softmax_outputs = bool(r.take("<B"))
    backprop = BACKPROP_MODES[r.take("<B")]
    presence = r.take("<B")

    config = ModelConfig(
        dim=dim,
        hidden_layers=hidden_layers,
        hidden_size=hidden_size,
        exposure=exposure,
        informed=informed,
        softmax_outputs=softmax_outputs,
        backprop=backprop,
    )

    def read_head(n_classes: int) -> Head:
        n_layers = r.take("<I")
        layers = []
        for _ in range(n_layers):
            out_f, in_f = r.take("<II")
            weights = r.take_f64(out_f * in_f).reshape(out_f, in_f)
            bias = r.take_f64(out_f)
            layers.append(LinearLayer(weights, bias))
        return Head(layers, n_classes)

    sarcasm = read_head(N_SARCASM) if presence & 1 else None
    dialect = read_head(N_DIALECT) if presence & 2 else None
    sentiment = read_head(N_SENTIMENT)

    encoder = None
    if r.take("<B"):
        trainable = bool(r.take("<B"))
        vocab_size, enc_dim = r.take("<II")
        projection = r.take_f64(vocab_size * enc_dim).reshape(vocab_size, enc_dim)
        encoder = ToyEncoderParams(vocab_size=vocab_size, projection=projection, trainable=trainable)
    if r.offset != len(data):
        raise FormatError(f"{path}: {len(data) - r.offset} trailing bytes at offset {r.offset}")
    return MultiTaskModel(config, sarcasm, dialect, sentiment), encoder
