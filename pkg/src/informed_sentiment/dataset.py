"""Dataset ingestion, statistics, splitting, and synthetic data generation.

Input files are UTF-8 CSV (RFC 4180, header row) with at least the columns
``tweet``, ``sarcasm``, ``sentiment``, ``dialect`` in any order, plus an
optional ``id`` column. Label cells are NFC-normalized and ASCII
case-folded before mapping; both the short label names (POS/NEU/NEG,
MSA/EGY/LEV/NOR/Gulf, True/False) and the lowercase long forms found in
the distributed files (positive/neutral/negative, msa/egypt/levant/magreb/
gulf, true/false) are accepted. Anything else is a row-level error.
"""

from __future__ import annotations

import csv
import string
import unicodedata
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .embeddings import EmbeddingTable
from .errors import RowError, SchemaError

SENTIMENT_CLASSES = ("POS", "NEU", "NEG")
SARCASM_CLASSES = ("sarcastic", "non-sarcastic")
DIALECT_CLASSES = ("MSA", "EGY", "LEV", "NOR", "Gulf")

REQUIRED_COLUMNS = ("tweet", "sarcasm", "sentiment", "dialect")

_SENTIMENT_MAP = {
    "pos": "POS", "positive": "POS",
    "neu": "NEU", "neutral": "NEU",
    "neg": "NEG", "negative": "NEG",
}
_SARCASM_MAP = {
    "true": "sarcastic", "sarcastic": "sarcastic",
    "false": "non-sarcastic", "non-sarcastic": "non-sarcastic",
}
_DIALECT_MAP = {
    "msa": "MSA",
    "egy": "EGY", "egypt": "EGY",
    "lev": "LEV", "levant": "LEV",
    "nor": "NOR", "magreb": "NOR",
    "gulf": "Gulf",
}

_ASCII_FOLD = str.maketrans(string.ascii_uppercase, string.ascii_lowercase)


def _canon_label(cell: str) -> str:
    return unicodedata.normalize("NFC", cell).translate(_ASCII_FOLD)


@dataclass(frozen=True)
class LabeledTweet:
    id: str
    text: str
    sentiment: str
    sarcasm: str
    dialect: str

    def sentiment_index(self) -> int:
        return SENTIMENT_CLASSES.index(self.sentiment)

    def sarcasm_index(self) -> int:
        return SARCASM_CLASSES.index(self.sarcasm)

    def dialect_index(self) -> int:
        return DIALECT_CLASSES.index(self.dialect)


@dataclass
class Dataset:
    examples: list[LabeledTweet]
    role: str = "train"

    def __len__(self) -> int:
        return len(self.examples)


@dataclass
class StatsReport:
    size: int
    label_counts: dict[str, dict[str, int]]
    sentiment_by_sarcasm: dict[tuple[str, str], int]
    sentiment_by_dialect: dict[tuple[str, str], int]
    sarcasm_rate_by_dialect: dict[str, float] = field(default_factory=dict)

    def render(self) -> str:
        """Aligned plain-text tables, counts with thousands separators and
        rates rounded half-up to two decimals."""
        lines = [f"{'Task':<11}{'Label':<15}{'Count':>8}"]
        for task, order in (
            ("Sentiment", SENTIMENT_CLASSES),
            ("Sarcasm", SARCASM_CLASSES),
            ("Dialect", DIALECT_CLASSES),
        ):
            for label in order:
                count = self.label_counts[task.lower()].get(label, 0)
                lines.append(f"{task:<11}{label:<15}{count:>8,}")
        lines.append(f"{'Total':<26}{self.size:>8,}")

        lines.append("")
        lines.append(f"{'':<15}" + "".join(f"{c:>8}" for c in SENTIMENT_CLASSES))
        for sarc in SARCASM_CLASSES:
            row = [f"{sarc:<15}"]
            for sent in SENTIMENT_CLASSES:
                row.append(f"{self.sentiment_by_sarcasm.get((sent, sarc), 0):>8,}")
            lines.append("".join(row))
        for dial in DIALECT_CLASSES:
            row = [f"{dial:<15}"]
            for sent in SENTIMENT_CLASSES:
                row.append(f"{self.sentiment_by_dialect.get((sent, dial), 0):>8,}")
            lines.append("".join(row))

        lines.append("")
        lines.append(f"{'Dialect':<11}{'Sarcasm percentage':>20}")
        for dial in DIALECT_CLASSES:
            if dial not in self.sarcasm_rate_by_dialect:
                continue
            rate = Decimal(repr(self.sarcasm_rate_by_dialect[dial]))
            shown = rate.quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
            lines.append(f"{dial:<11}{str(shown) + ' %':>20}")
        return "\n".join(lines)


def load_dataset(path: str | Path, role: str = "train") -> Dataset:
    """Load a labeled CSV. Row order is the canonical example order; when
    there is no ``id`` column the 0-based row index becomes the id."""
    path = Path(path)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file (no header row)")
        missing = [c for c in REQUIRED_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing required column '{missing[0]}'")
        has_id = "id" in reader.fieldnames

        examples: list[LabeledTweet] = []
        seen_ids: set[str] = set()
        for i, row in enumerate(reader):
            sentiment = _map_label(_SENTIMENT_MAP, row["sentiment"], "sentiment", i)
            sarcasm = _map_label(_SARCASM_MAP, row["sarcasm"], "sarcasm", i)
            dialect = _map_label(_DIALECT_MAP, row["dialect"], "dialect", i)
            ex_id = row["id"] if has_id else str(i)
            if ex_id in seen_ids:
                raise RowError(i, f"duplicate id '{ex_id}'")
            seen_ids.add(ex_id)
            examples.append(LabeledTweet(ex_id, row["tweet"], sentiment, sarcasm, dialect))
    if not examples:
        raise SchemaError(f"{path}: no data rows")
    return Dataset(examples, role=role)


def _map_label(mapping: dict[str, str], cell: str | None, column: str, row: int) -> str:
    if cell is None:
        raise RowError(row, f"missing value in column '{column}'")
    canonical = mapping.get(_canon_label(cell))
    if canonical is None:
        raise RowError(row, f"unmappable {column} value '{cell}'")
    return canonical


def split_train_validation(
    data: Dataset, fraction: float, seed: int
) -> tuple[Dataset, Dataset]:
    """Deterministic stratified split on the joint (sentiment, sarcasm) label.

    ``fraction`` is the validation share. The validation size is
    round-half-up of n*fraction, allocated across strata by largest
    remainder; original example order is preserved in both parts.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must be in (0,1), got {fraction}")
    n = len(data.examples)
    n_val = int(np.floor(n * fraction + 0.5))
    if n_val < 1 or n - n_val < 1:
        raise ValueError(f"fraction {fraction} leaves an empty side for {n} examples")

    groups: dict[tuple[int, int], list[int]] = {}
    for idx, ex in enumerate(data.examples):
        groups.setdefault((ex.sentiment_index(), ex.sarcasm_index()), []).append(idx)

    # Largest-remainder allocation of n_val across strata.
    keys = sorted(groups)
    quotas = {k: len(groups[k]) * fraction for k in keys}
    take = {k: int(np.floor(quotas[k])) for k in keys}
    leftover = n_val - sum(take.values())
    by_remainder = sorted(
        keys, key=lambda k: (-(quotas[k] - take[k]), -len(groups[k]), k)
    )
    for k in by_remainder:
        if leftover <= 0:
            break
        if take[k] < len(groups[k]):
            take[k] += 1
            leftover -= 1
    if leftover > 0:  # all fractional slots exhausted; spill anywhere legal
        for k in by_remainder:
            while leftover > 0 and take[k] < len(groups[k]):
                take[k] += 1
                leftover -= 1

    rng = np.random.default_rng(seed)
    val_idx: set[int] = set()
    for k in keys:
        members = groups[k]
        chosen = rng.permutation(len(members))[: take[k]]
        val_idx.update(members[c] for c in chosen)

    train = [ex for i, ex in enumerate(data.examples) if i not in val_idx]
    val = [ex for i, ex in enumerate(data.examples) if i in val_idx]
    return Dataset(train, role=data.role), Dataset(val, role="validation")


def compute_stats(data: Dataset) -> StatsReport:
    if not data.examples:
        raise ValueError("compute_stats requires a non-empty dataset")
    counts = {
        "sentiment": {c: 0 for c in SENTIMENT_CLASSES},
        "sarcasm": {c: 0 for c in SARCASM_CLASSES},
        "dialect": {c: 0 for c in DIALECT_CLASSES},
    }
    by_sarcasm = {(s, c): 0 for s in SENTIMENT_CLASSES for c in SARCASM_CLASSES}
    by_dialect = {(s, d): 0 for s in SENTIMENT_CLASSES for d in DIALECT_CLASSES}
    for ex in data.examples:
        counts["sentiment"][ex.sentiment] += 1
        counts["sarcasm"][ex.sarcasm] += 1
        counts["dialect"][ex.dialect] += 1
        by_sarcasm[(ex.sentiment, ex.sarcasm)] += 1
        by_dialect[(ex.sentiment, ex.dialect)] += 1

    rates = {}
    for dial in DIALECT_CLASSES:
        total = counts["dialect"][dial]
        if total == 0:
            continue
        sarcastic = sum(
            1 for ex in data.examples if ex.dialect == dial and ex.sarcasm == "sarcastic"
        )
        rates[dial] = 100.0 * sarcastic / total

    return StatsReport(
        size=len(data.examples),
        label_counts=counts,
        sentiment_by_sarcasm=by_sarcasm,
        sentiment_by_dialect=by_dialect,
        sarcasm_rate_by_dialect=rates,
    )


# --- synthetic planted-dependency data -----------------------------------

# Dialect prior and per-dialect sarcasm rates shaped like the real training
# split (rare dialects upweighted so small samples populate every class).
_SYNTH_DIALECT_PRIOR = ((0.40, "MSA"), (0.20, "EGY"), (0.15, "LEV"), (0.05, "NOR"), (0.20, "Gulf"))
_SYNTH_SARCASM_RATE = {"MSA": 0.11, "EGY": 0.35, "LEV": 0.22, "NOR": 0.35, "Gulf": 0.24}

# Sentiment drawn conditionally on (sarcasm, dialect). Two cells mirror the
# real cross-tab (sarcastic text is negative with probability 0.9,
# non-sarcastic MSA is neutral with probability 0.5); the remaining cells
# are planted so that every sentiment class, positive included, is
# routable from the (sarcasm, dialect) pair.
_SYNTH_SENTIMENT_GIVEN = {
    "sarcastic": (0.03, 0.07, 0.90),
    ("non-sarcastic", "MSA"): (0.25, 0.50, 0.25),
    ("non-sarcastic", "EGY"): (0.10, 0.20, 0.70),
    ("non-sarcastic", "LEV"): (0.65, 0.20, 0.15),
    ("non-sarcastic", "NOR"): (0.10, 0.25, 0.65),
    ("non-sarcastic", "Gulf"): (0.70, 0.18, 0.12),
}

_DIALECT_TOKENS = {d: [f"dia_{d.lower()}_{j}" for j in range(4)] for d in DIALECT_CLASSES}
_SARCASM_TOKENS = {s: [f"tone_{s.split('-')[0]}_{j}" for j in range(4)] for s in SARCASM_CLASSES}
_SENTIMENT_TOKENS = {c: [f"mood_{c.lower()}_{j}" for j in range(4)] for c in SENTIMENT_CLASSES}
_FILLER_TOKENS = [f"noise_{j}" for j in range(512)]
_MARKERS_PER_TASK = 3
_FILLERS_PER_EXAMPLE = 4


def sentiment_table(sarcasm: str, dialect: str) -> tuple[float, float, float]:
    """The planted conditional P(sentiment | sarcasm, dialect)."""
    if sarcasm == "sarcastic":
        return _SYNTH_SENTIMENT_GIVEN["sarcastic"]
    return _SYNTH_SENTIMENT_GIVEN[(sarcasm, dialect)]


def _unit_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def gen_synthetic(
    n: int, dim: int, seed: int, coupling: float
) -> tuple[Dataset, EmbeddingTable]:
    """Generate a planted-dependency dataset plus matching embeddings.

    Dialect and sarcasm are strongly encoded in both the text (marker
    tokens) and the embedding (well-separated cluster centers); the direct
    sentiment signal appears only at strength (1 - coupling). At high
    coupling, sentiment is predictable mainly through the planted
    conditional on (sarcasm, dialect) - the structure the informed
    architecture is built to exploit.
    """
    if n < 10:
        raise ValueError(f"n must be >= 10, got {n}")
    if dim < 4:
        raise ValueError(f"dim must be >= 4, got {dim}")
    if not 0.0 <= coupling <= 1.0:
        raise ValueError(f"coupling must be in [0,1], got {coupling}")

    rng = np.random.default_rng(seed)
    dial_probs = np.array([p for p, _ in _SYNTH_DIALECT_PRIOR])
    dial_names = [d for _, d in _SYNTH_DIALECT_PRIOR]

    centers_dial = {d: 2.0 * _unit_vector(rng, dim) for d in DIALECT_CLASSES}
    centers_sarc = {s: 2.0 * _unit_vector(rng, dim) for s in SARCASM_CLASSES}
    centers_sent = {c: 1.5 * _unit_vector(rng, dim) for c in SENTIMENT_CLASSES}

    examples: list[LabeledTweet] = []
    entries: dict[str, np.ndarray] = {}
    for i in range(n):
        dialect = dial_names[rng.choice(len(dial_names), p=dial_probs)]
        sarcasm = "sarcastic" if rng.random() < _SYNTH_SARCASM_RATE[dialect] else "non-sarcastic"
        p_sent = np.array(sentiment_table(sarcasm, dialect))
        sentiment = SENTIMENT_CLASSES[rng.choice(3, p=p_sent)]

        tokens = [
            *(rng.choice(_DIALECT_TOKENS[dialect]) for _ in range(_MARKERS_PER_TASK)),
            *(rng.choice(_SARCASM_TOKENS[sarcasm]) for _ in range(_MARKERS_PER_TASK)),
        ]
        if rng.random() < 1.0 - coupling:
            tokens.extend(rng.choice(_SENTIMENT_TOKENS[sentiment]) for _ in range(_MARKERS_PER_TASK))
        tokens.extend(rng.choice(_FILLER_TOKENS) for _ in range(_FILLERS_PER_EXAMPLE))
        order = rng.permutation(len(tokens))
        text = " ".join(tokens[k] for k in order)

        vec = (
            centers_dial[dialect]
            + centers_sarc[sarcasm]
            + (1.0 - coupling) * centers_sent[sentiment]
            + rng.normal(0.0, 0.3, dim)
        )
        # Quantize through float32 so the in-memory table matches its SEB1
        # serialization bit-for-bit.
        entries[str(i)] = vec.astype(np.float32).astype(np.float64)
        examples.append(LabeledTweet(str(i), text, sentiment, sarcasm, dialect))

    return Dataset(examples, role="train"), EmbeddingTable(dim=dim, entries=entries)


def write_dataset_csv(data: Dataset, path: str | Path) -> None:
    """Write a dataset back out in the canonical column layout."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "tweet", "sarcasm", "sentiment", "dialect"])
        for ex in data.examples:
            writer.writerow([ex.id, ex.text, ex.sarcasm, ex.sentiment, ex.dialect])
