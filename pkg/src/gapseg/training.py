"""Training loop, loss, early stopping and checkpoint persistence.

Each batch processes its sentences independently on one tape (no padding),
averages the per-sentence losses, runs one backward pass, clips the global
gradient norm and applies an Adam step. After every epoch the model is
evaluated on the development split; the best-scoring parameters are kept
and training stops when the dev score has not improved for `patience`
epochs.
"""

from __future__ import annotations

import dataclasses
import io
import json
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Adam, Tape
from .corpus import Vocabulary, dev_split, to_gap_labels
from .errors import CheckpointError, ConfigError, ContractError, TrainingError
from .evaluation import f1
from .model import Segmenter, SegmenterConfig

DEFAULT_LEARNING_RATE = {"01": 0.001, "BE": 0.0012, "BEMS": 0.002}
DEFAULT_DROPOUT = {"01": 0.6, "BE": 0.39, "BEMS": 0.45}

GRAD_CLIP_NORM = 5.0

CHECKPOINT_MAGIC = b"GAPSEGCK"
CHECKPOINT_VERSION = 1


@dataclass
class TrainConfig:
    tagset: str = "01"
    learning_rate: float | None = None
    dropout_p: float | None = None
    batch_size: int = 32
    max_epochs: int = 50
    seed: int = 0
    patience: int = 10

    def resolved(self):
        """Fill unset fields with the per-tag-set defaults."""
        name = {"01": "01", "be": "BE", "bems": "BEMS"}.get(str(self.tagset).lower())
        if name is None:
            raise ConfigError(f"unknown tag set '{self.tagset}'")
        lr = self.learning_rate if self.learning_rate is not None else DEFAULT_LEARNING_RATE[name]
        dp = self.dropout_p if self.dropout_p is not None else DEFAULT_DROPOUT[name]
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("batch size, max epochs and patience must be positive")
        return dataclasses.replace(
            self, tagset=name, learning_rate=lr, dropout_p=dp
        )


def gap_loss(tape, scores, gold_indices):
    """Mean softmax cross-entropy of gap scores against gold label indices."""
    if scores.data.shape[0] != len(gold_indices):
        raise ContractError(
            f"{scores.data.shape[0]} score rows but {len(gold_indices)} gold labels"
        )
    return ad.softmax_cross_entropy(tape, scores, gold_indices)


def clip_global_norm(params, max_norm):
    """Scale all gradients down if their joint L2 norm exceeds max_norm."""
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad * p.grad).sum())
    norm = total**0.5
    if norm > max_norm > 0:
        factor = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= factor
    return norm


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    dev_f1: float


@dataclass
class TrainResult:
    checkpoint: "Checkpoint"
    history: list[EpochStats]


def _evaluate(model, sentences):
    if not sentences:
        return 0.0
    predictions = [model.segment_sentence(s.chars) for s in sentences]
    return f1(sentences, predictions).f1


def train(corpus, config, *, model_config=None, embedding=None, progress=None):
    """Train a segmenter and return the best-on-dev checkpoint plus history.

    `model_config` overrides the architecture (sizes); its tag set and
    dropout are forced to match the resolved training config. `progress`
    is called with an EpochStats after every epoch.
    """
    cfg = config.resolved()
    if len(corpus) < 2:
        raise ContractError("training needs at least two sentences")
    train_sents, dev_sents = dev_split(corpus)
    vocab = Vocabulary.from_corpus(train_sents)
    if model_config is None:
        model_config = SegmenterConfig()
    model_config = dataclasses.replace(
        model_config, tagset=cfg.tagset, dropout_p=cfg.dropout_p
    )
    rng = np.random.default_rng(cfg.seed)
    model = Segmenter.create(model_config, vocab, rng, embedding=embedding)
    tagset = model.tagset
    gold = [
        np.array([tagset.label_index[lab] for lab in to_gap_labels(s, tagset)], dtype=np.intp)
        for s in train_sents
    ]
    encoded = [vocab.encode(s.chars) for s in train_sents]

    optimizer = Adam(model.parameters(), cfg.learning_rate)
    history = []
    best_f1 = -1.0
    best_epoch = 0
    best_tensors = None
    since_best = 0

    for epoch in range(1, cfg.max_epochs + 1):
        order = rng.permutation(len(train_sents))
        loss_sum = 0.0
        batches = 0
        for start in range(0, len(order), cfg.batch_size):
            chosen = [
                int(i) for i in order[start : start + cfg.batch_size] if len(gold[i]) > 0
            ]
            if not chosen:
                continue
            tape = Tape()
            losses = [
                gap_loss(
                    tape,
                    model.forward(tape, encoded[i], train=True, rng=rng),
                    gold[i],
                )
                for i in chosen
            ]
            total = losses[0]
            for piece in losses[1:]:
                total = ad.add(tape, total, piece)
            loss = ad.scale(tape, total, 1.0 / len(losses))
            value = float(loss.data)
            if not np.isfinite(value):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {batches + 1}"
                )
            optimizer.zero_grads()
            ad.backward(tape, loss)
            clip_global_norm(model.parameters(), GRAD_CLIP_NORM)
            optimizer.step()
            loss_sum += value
            batches += 1
        train_loss = loss_sum / batches if batches else 0.0
        dev_f1 = _evaluate(model, dev_sents)
        stats = EpochStats(epoch=epoch, train_loss=train_loss, dev_f1=dev_f1)
        history.append(stats)
        if progress is not None:
            progress(stats)
        if dev_f1 > best_f1:
            best_f1 = dev_f1
            best_epoch = epoch
            best_tensors = {
                name: t.data.copy() for name, t in model.named_tensors().items()
            }
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.patience:
                break

    named = model.named_tensors()
    for name, data in best_tensors.items():
        named[name].data[...] = data
    checkpoint = Checkpoint.from_model(
        model, cfg, epoch=best_epoch, dev_f1=best_f1, seed=cfg.seed
    )
    return TrainResult(checkpoint=checkpoint, history=history)


# ---------------------------------------------------------------------------
# checkpoints
#
# Layout: 8-byte magic, uint32 version, uint64 header length, UTF-8 JSON
# header, then the concatenated little-endian float64 tensor payloads.
# The header's manifest lists (name, shape, offset) per tensor in model
# parameter order; offsets are element offsets into the payload.


@dataclass
class Checkpoint:
    config: SegmenterConfig
    train_config: TrainConfig
    vocab_chars: list[str]
    tensors: dict[str, np.ndarray]
    epoch: int
    dev_f1: float
    seed: int

    @classmethod
    def from_model(cls, model, train_config, epoch, dev_f1, seed):
        tensors = {
            name: t.data.copy() for name, t in model.named_tensors().items()
        }
        return cls(
            config=dataclasses.replace(model.config),
            train_config=train_config,
            vocab_chars=model.vocab.chars_in_order(),
            tensors=tensors,
            epoch=epoch,
            dev_f1=dev_f1,
            seed=seed,
        )

    def to_model(self):
        """Rebuild a Segmenter; every tensor must match its expected shape."""
        vocab = Vocabulary.from_chars(self.vocab_chars)
        model = Segmenter.create(self.config, vocab, np.random.default_rng(0))
        expected = model.named_tensors()
        if set(expected) != set(self.tensors):
            missing = sorted(set(expected) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(expected))
            raise CheckpointError(
                f"tensor set mismatch: missing {missing}, unexpected {extra}"
            )
        for name, tensor in expected.items():
            stored = self.tensors[name]
            if stored.shape != tensor.data.shape:
                raise CheckpointError(
                    f"tensor '{name}' has shape {stored.shape}, "
                    f"config expects {tensor.data.shape}"
                )
            tensor.data[...] = stored
        return model

    def dumps(self):
        manifest = []
        offset = 0
        payload = io.BytesIO()
        for name, arr in self.tensors.items():
            manifest.append({"name": name, "shape": list(arr.shape), "offset": offset})
            data = np.ascontiguousarray(arr, dtype="<f8")
            payload.write(data.tobytes())
            offset += arr.size
        header = {
            "format_version": CHECKPOINT_VERSION,
            "config": dataclasses.asdict(self.config),
            "train_config": dataclasses.asdict(self.train_config),
            "vocabulary": self.vocab_chars,
            "metadata": {"epoch": self.epoch, "dev_f1": self.dev_f1, "seed": self.seed},
            "manifest": manifest,
            "payload_elements": offset,
        }
        head = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        out = io.BytesIO()
        out.write(CHECKPOINT_MAGIC)
        out.write(struct.pack("<I", CHECKPOINT_VERSION))
        out.write(struct.pack("<Q", len(head)))
        out.write(head)
        out.write(payload.getvalue())
        return out.getvalue()

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.dumps())

    @classmethod
    def loads(cls, blob):
        view = memoryview(blob)
        if len(view) < 20 or bytes(view[:8]) != CHECKPOINT_MAGIC:
            raise CheckpointError("not a checkpoint stream (bad magic)")
        (version,) = struct.unpack("<I", view[8:12])
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"unsupported checkpoint version {version}, expected {CHECKPOINT_VERSION}"
            )
        (head_len,) = struct.unpack("<Q", view[12:20])
        if len(view) < 20 + head_len:
            raise CheckpointError("truncated stream: header is incomplete")
        try:
            header = json.loads(bytes(view[20 : 20 + head_len]).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"unreadable header: {exc}") from exc
        payload = view[20 + head_len :]
        for key in ("config", "train_config", "vocabulary", "metadata", "manifest", "payload_elements"):
            if key not in header:
                raise CheckpointError(f"header is missing field '{key}'")
        if len(payload) != header["payload_elements"] * 8:
            raise CheckpointError(
                f"truncated stream: payload has {len(payload)} bytes, "
                f"manifest expects {header['payload_elements'] * 8}"
            )
        tensors = {}
        for entry in header["manifest"]:
            name, shape, offset = entry["name"], tuple(entry["shape"]), entry["offset"]
            size = int(np.prod(shape)) if shape else 1
            start = offset * 8
            stop = start + size * 8
            if stop > len(payload):
                raise CheckpointError(f"truncated stream: tensor '{name}' is incomplete")
            arr = np.frombuffer(payload[start:stop], dtype="<f8").astype(np.float64)
            tensors[name] = arr.reshape(shape)
        meta = header["metadata"]
        return cls(
            config=SegmenterConfig(**header["config"]),
            train_config=TrainConfig(**header["train_config"]),
            vocab_chars=list(header["vocabulary"]),
            tensors=tensors,
            epoch=int(meta["epoch"]),
            dev_f1=float(meta["dev_f1"]),
            seed=int(meta["seed"]),
        )

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return cls.loads(fh.read())


def save_checkpoint(checkpoint, path):
    checkpoint.save(path)


def load_checkpoint(path):
    return Checkpoint.load(path)
