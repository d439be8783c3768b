"""Command-line surface: ``stats``, ``train``, ``eval``, ``gen-synth``.

Options come from a flat ``key = value`` config file (``#`` comments, no
sections) merged with flag overrides; flags win. Every training run
echoes its effective configuration into the output directory, sufficient
to reproduce the run exactly. Exit codes: 0 success, 1 configuration
errors, 2 data errors, 3 numeric errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .dataset import compute_stats, gen_synthetic, load_dataset, split_train_validation, write_dataset_csv
from .embeddings import (
    TableProvider,
    ToyEncoderProvider,
    init_toy_encoder,
    load_embedding_table,
    save_embedding_table,
)
from .errors import ConfigurationError, DataError, NumericError
from .metrics import evaluate
from .model import ModelConfig, build_model, load_checkpoint, save_checkpoint
from .training import TrainConfig, format_trace, train

_INFORMED_CHOICES = {
    "none": (),
    "sarcasm": ("sarcasm",),
    "dialect": ("dialect",),
    "both": ("sarcasm", "dialect"),
}
_BACKPROP_CHOICES = {"full": "full-limit", "partial": "partial-limit", "unlimited": "unlimited"}
_SCHEDULE_CHOICES = {"all": "all-tasks", "seq1": "seq1", "seq2": "seq2", "seq3": "seq3"}

# Defaults follow the final reported setup: no hidden layers, informed of
# both tasks, softmax on the exposed outputs, fully limited backprop, and
# the warm-up-then-everything schedule.
_DEFAULTS = {
    "data": None,
    "embeddings": None,
    "toy_encoder": False,
    "out": "out",
    "seed": 0,
    "dim": 768,
    "hidden_layers": 0,
    "hidden_size": 16,
    "exposure": "output",
    "informed": "both",
    "softmax": True,
    "backprop": "full",
    "schedule": "seq1",
    "lr": 1e-5,
    "epochs": 5,
    "batch_size": 32,
    "val_fraction": 0.1,
    "toy_vocab": 4096,
}

_KEY_TYPES = {
    "data": str, "embeddings": str, "toy_encoder": bool, "out": str,
    "seed": int, "dim": int, "hidden_layers": int, "hidden_size": int,
    "exposure": str, "informed": str, "softmax": bool, "backprop": str,
    "schedule": str, "lr": float, "epochs": int, "batch_size": int,
    "val_fraction": float, "toy_vocab": int,
}


def parse_config_file(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got '{raw.strip()}'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KEY_TYPES:
            raise ConfigurationError(f"{path}:{lineno}: unknown config key '{key}'")
        values[key] = _coerce(key, value, f"{path}:{lineno}")
    return values


def _coerce(key: str, value: str, where: str):
    kind = _KEY_TYPES[key]
    if kind is bool:
        lowered = value.lower()
        if lowered in ("true", "1", "yes", "on"):
            return True
        if lowered in ("false", "0", "no", "off"):
            return False
        raise ConfigurationError(f"{where}: '{key}' expects a boolean, got '{value}'")
    try:
        return kind(value)
    except ValueError as exc:
        raise ConfigurationError(f"{where}: '{key}' expects {kind.__name__}, got '{value}'") from exc


def render_config(cfg: dict) -> str:
    lines = []
    for key in _DEFAULTS:
        value = cfg.get(key)
        if value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _merge_config(args: argparse.Namespace) -> tuple[dict, set[str]]:
    """defaults <- config file <- explicit flags; returns the merged view
    and the set of keys the user pinned explicitly."""
    merged = dict(_DEFAULTS)
    explicit: set[str] = set()
    if getattr(args, "config", None):
        from_file = parse_config_file(args.config)
        merged.update(from_file)
        explicit.update(from_file)
    for key in _DEFAULTS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
            explicit.add(key)
    return merged, explicit


def _validate_choice(cfg: dict, key: str, choices) -> None:
    if cfg[key] not in choices:
        raise ConfigurationError(
            f"'{key}' must be one of {sorted(choices)}, got '{cfg[key]}'"
        )


def _build_provider(cfg: dict, explicit: set[str]):
    """Exactly one embedding source: a SEB1 table or the toy encoder."""
    if cfg["embeddings"] and cfg["toy_encoder"]:
        raise ConfigurationError("select one embedding source: --embeddings or --toy-encoder")
    if cfg["embeddings"]:
        table = load_embedding_table(cfg["embeddings"])
        if "dim" in explicit and cfg["dim"] != table.dim:
            raise ConfigurationError(
                f"dim {cfg['dim']} does not match embedding table dim {table.dim}"
            )
        cfg["dim"] = table.dim
        return TableProvider(table)
    if cfg["toy_encoder"]:
        params = init_toy_encoder(cfg["toy_vocab"], cfg["dim"], cfg["seed"], trainable=True)
        return ToyEncoderProvider(params)
    raise ConfigurationError("no embedding source: pass --embeddings PATH or --toy-encoder")


def _model_config(cfg: dict) -> ModelConfig:
    _validate_choice(cfg, "informed", _INFORMED_CHOICES)
    _validate_choice(cfg, "backprop", _BACKPROP_CHOICES)
    return ModelConfig(
        dim=cfg["dim"],
        hidden_layers=cfg["hidden_layers"],
        hidden_size=cfg["hidden_size"],
        exposure=cfg["exposure"],
        informed=_INFORMED_CHOICES[cfg["informed"]],
        softmax_outputs=cfg["softmax"],
        backprop=_BACKPROP_CHOICES[cfg["backprop"]],
    )


def _train_config(cfg: dict) -> TrainConfig:
    _validate_choice(cfg, "schedule", _SCHEDULE_CHOICES)
    return TrainConfig(
        schedule=_SCHEDULE_CHOICES[cfg["schedule"]],
        epochs=cfg["epochs"],
        learning_rate=cfg["lr"],
        batch_size=cfg["batch_size"],
        seed=cfg["seed"],
    )


def cmd_stats(args) -> int:
    if not args.data:
        raise ConfigurationError("stats requires --data PATH")
    report = compute_stats(load_dataset(args.data))
    print(report.render())
    return 0


def cmd_train(args) -> int:
    cfg, explicit = _merge_config(args)
    if not cfg["data"]:
        raise ConfigurationError("train requires --data PATH (or a 'data' config entry)")
    provider = _build_provider(cfg, explicit)
    data = load_dataset(cfg["data"])
    if not 0.0 < cfg["val_fraction"] < 1.0:
        raise ConfigurationError(f"val_fraction must be in (0,1), got {cfg['val_fraction']}")
    train_ds, val_ds = split_train_validation(data, cfg["val_fraction"], cfg["seed"])

    model = build_model(_model_config(cfg), cfg["seed"])
    rows = train(model, provider, train_ds, _train_config(cfg), validation=val_ds)

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    encoder = provider.params if isinstance(provider, ToyEncoderProvider) else None
    save_checkpoint(model, out_dir / "model.smc1", encoder=encoder)
    (out_dir / "trace.csv").write_text(format_trace(rows), encoding="utf-8")
    report = evaluate(model, provider, val_ds)
    (out_dir / "eval.txt").write_text(report.to_text(), encoding="utf-8")
    (out_dir / "effective.cfg").write_text(render_config(cfg), encoding="utf-8")
    print(f"wrote {out_dir / 'model.smc1'}")
    print(report.to_text(), end="")
    return 0


def cmd_eval(args) -> int:
    if not args.checkpoint:
        raise ConfigurationError("eval requires --checkpoint PATH")
    if not args.data:
        raise ConfigurationError("eval requires --data PATH")
    model, encoder = load_checkpoint(args.checkpoint)
    if args.embeddings:
        table = load_embedding_table(args.embeddings)
        provider = TableProvider(table)
    elif encoder is not None:
        provider = ToyEncoderProvider(encoder)
    else:
        raise ConfigurationError(
            "checkpoint has no embedded encoder; pass --embeddings PATH"
        )
    if provider.dim != model.config.dim:
        raise ConfigurationError(
            f"embedding dim {provider.dim} does not match model dim {model.config.dim}"
        )
    data = load_dataset(args.data)
    report = evaluate(model, provider, data)
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "eval.txt").write_text(report.to_text(), encoding="utf-8")
    print(report.to_text(), end="")
    return 0


def cmd_gen_synth(args) -> int:
    out_dir = Path(args.out or "out")
    out_dir.mkdir(parents=True, exist_ok=True)
    data, table = gen_synthetic(args.n, args.dim or 32, args.seed or 0, args.coupling)
    write_dataset_csv(data, out_dir / "synthetic.csv")
    save_embedding_table(table, out_dir / "synthetic.seb1")
    print(f"wrote {out_dir / 'synthetic.csv'} and {out_dir / 'synthetic.seb1'}")
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="informed-sentiment")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--data", help="dataset CSV")
        p.add_argument("--embeddings", help="SEB1 embedding file")
        p.add_argument("--toy-encoder", dest="toy_encoder", action="store_const", const=True,
                       help="use the trainable hashing encoder instead of a table")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--dim", type=int)
        p.add_argument("--hidden-layers", dest="hidden_layers", type=int, choices=(0, 1, 2))
        p.add_argument("--hidden-size", dest="hidden_size", type=int)
        p.add_argument("--exposure", choices=("output", "hidden", "hidden-plus-output"))
        p.add_argument("--informed", choices=tuple(_INFORMED_CHOICES))
        p.add_argument("--no-softmax", dest="softmax", action="store_const", const=False,
                       help="expose raw head outputs instead of probabilities")
        p.add_argument("--backprop", choices=tuple(_BACKPROP_CHOICES))
        p.add_argument("--schedule", choices=tuple(_SCHEDULE_CHOICES))
        p.add_argument("--lr", type=float)
        p.add_argument("--epochs", type=int)
        p.add_argument("--batch-size", dest="batch_size", type=int)
        p.add_argument("--val-fraction", dest="val_fraction", type=float)
        p.add_argument("--toy-vocab", dest="toy_vocab", type=int)

    p_stats = sub.add_parser("stats", help="print dataset statistics tables")
    p_stats.add_argument("--data", required=True)
    p_stats.set_defaults(func=cmd_stats)

    p_train = sub.add_parser("train", help="train a model and write its artifacts")
    common(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--embeddings")
    p_eval.add_argument("--out")
    p_eval.set_defaults(func=cmd_eval)

    p_gen = sub.add_parser("gen-synth", help="generate a synthetic CSV + SEB1 pair")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--dim", type=int)
    p_gen.add_argument("--coupling", type=float, required=True)
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("--out")
    p_gen.set_defaults(func=cmd_gen_synth)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
