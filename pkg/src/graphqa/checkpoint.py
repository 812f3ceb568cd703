"""Versioned binary checkpoint files for model parameters.

Layout: 4-byte magic, uint32 format version, uint64 header length, a JSON
header (config, vocabulary tokens, tensor manifest with shapes), then every
tensor's raw bytes as little-endian float64 in manifest order. Round trips
are bit-exact and the byte stream is deterministic for identical inputs.
"""

from __future__ import annotations

import dataclasses
import json
import struct

import numpy as np

from .autodiff import Tensor
from .gnn import GnnConfig, GnnParameters, Vocabulary

MAGIC = b"GQNN"
VERSION = 1


class CheckpointError(ValueError):
    """Raised for unreadable, truncated, or incompatible checkpoint files."""


def _expected_shapes(config: GnnConfig, vocab_size: int) -> dict[str, tuple]:
    d = config.dimension
    shapes = {"embedding": (vocab_size, d)}

    def linear(name: str):
        shapes[name + ".weight"] = (d, d)
        shapes[name + ".bias"] = (d,)

    for layer in range(1, config.layers + 1):
        linear(f"layer{layer}.alpha_evidence")
        linear(f"layer{layer}.message_evidence")
        linear(f"layer{layer}.alpha_entity")
        linear(f"layer{layer}.message_entity")
    linear("alpha_init")
    linear("score_entity")
    linear("score_evidence")
    return shapes


def save_checkpoint(params: GnnParameters, config: GnnConfig | None = None,
                    path: str = "model.ckpt"):
    config = config or params.config
    manifest = [{"name": name, "shape": list(tensor.data.shape)}
                for name, tensor in params.tensors.items()]
    header = json.dumps(
        {"config": dataclasses.asdict(config),
         "vocabulary": params.vocab.tokens,
         "tensors": manifest},
        ensure_ascii=False, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(MAGIC)
        handle.write(struct.pack("<I", VERSION))
        handle.write(struct.pack("<Q", len(header)))
        handle.write(header)
        for tensor in params.tensors.values():
            handle.write(np.ascontiguousarray(
                tensor.data, dtype="<f8").tobytes())


def _read_exactly(handle, n: int, what: str) -> bytes:
    data = handle.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint: expected {n} bytes of {what}, "
                              f"got {len(data)}")
    return data


def load_checkpoint(path: str) -> tuple[GnnParameters, GnnConfig]:
    with open(path, "rb") as handle:
        if _read_exactly(handle, 4, "magic") != MAGIC:
            raise CheckpointError("not a checkpoint file (bad magic)")
        version = struct.unpack("<I", _read_exactly(handle, 4, "version"))[0]
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}, "
                                  f"expected {VERSION}")
        header_len = struct.unpack("<Q", _read_exactly(handle, 8, "header length"))[0]
        try:
            header = json.loads(_read_exactly(handle, header_len, "header"))
            config = GnnConfig(**header["config"])
            tokens = header["vocabulary"]
            manifest = header["tensors"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CheckpointError(f"bad checkpoint header: {exc}") from exc

        vocab = Vocabulary.restore(tokens)
        expected = _expected_shapes(config, len(vocab))
        if [entry["name"] for entry in manifest] != list(expected):
            raise CheckpointError("checkpoint tensor manifest does not match "
                                  "the layout implied by its config")
        tensors: dict[str, Tensor] = {}
        for entry in manifest:
            shape = tuple(entry["shape"])
            if shape != expected[entry["name"]]:
                raise CheckpointError(
                    f"shape mismatch for {entry['name']!r}: file has {shape}, "
                    f"config implies {expected[entry['name']]}")
            count = int(np.prod(shape, dtype=np.int64)) if shape else 1
            raw = _read_exactly(handle, count * 8, entry["name"])
            tensors[entry["name"]] = Tensor(
                np.frombuffer(raw, dtype="<f8").reshape(shape).copy())
    return GnnParameters(config, vocab, tensors), config
