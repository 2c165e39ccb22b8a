"""Fully connected tanh MLP with layer freezing and a binary checkpoint format.

The default architecture is 5 hidden layers of 30 tanh units.  Weights and
biases are drawn uniformly from ``[-1/sqrt(fan_in), +1/sqrt(fan_in)]``.

Checkpoint file layout (all integers little-endian):

    magic   8 bytes  b"PINNCKPT"
    version u32
    hlen    u32      length of the JSON metadata header
    header  hlen bytes of UTF-8 JSON: problem, epoch, seed, layer_sizes,
            task_count, load_count, task_names, freeze_mask, scales
    payload float64, in declared order: every weight matrix row-major,
            then every bias vector, then the task-weight vector, then the
            load vector

The payload is written with ``ndarray.tobytes`` so a save/load round trip is
bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from .tape import Tape, Var

__all__ = [
    "MlpParams",
    "Checkpoint",
    "CheckpointError",
    "init_mlp",
    "forward",
    "freeze",
    "save_checkpoint",
    "load_checkpoint",
]

_MAGIC = b"PINNCKPT"
_VERSION = 1


class CheckpointError(IOError):
    """Corrupt file, unsupported version, or shape mismatch."""


@dataclass
class MlpParams:
    """Layered weights/biases plus a per-layer freeze mask."""

    layer_sizes: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    frozen: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.frozen:
            self.frozen = [False] * self.n_layers
        self.validate()

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]

    def validate(self) -> None:
        if len(self.layer_sizes) < 2:
            raise ValueError("need at least an input and an output layer")
        if any(s <= 0 for s in self.layer_sizes):
            raise ValueError(f"zero-sized layer in {self.layer_sizes}")
        if len(self.weights) != self.n_layers or len(self.biases) != self.n_layers:
            raise ValueError("weight/bias count does not match layer sizes")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            expect = (self.layer_sizes[l + 1], self.layer_sizes[l])
            if w.shape != expect:
                raise ValueError(f"layer {l}: weight shape {w.shape}, expected {expect}")
            if b.shape != (self.layer_sizes[l + 1],):
                raise ValueError(f"layer {l}: bias shape {b.shape}")
        if len(self.frozen) != self.n_layers:
            raise ValueError("freeze mask length does not match layer count")

    def copy(self) -> "MlpParams":
        return MlpParams(
            self.layer_sizes,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            list(self.frozen),
        )

    def lift(self, tape: Tape) -> list[tuple[Var, Var]]:
        """Create leaf variables for every layer (frozen ones included)."""
        return [
            (tape.leaf(w), tape.leaf(b))
            for w, b in zip(self.weights, self.biases)
        ]

    def trainable_arrays(self) -> list[np.ndarray]:
        out = []
        for l in range(self.n_layers):
            if not self.frozen[l]:
                out.extend((self.weights[l], self.biases[l]))
        return out


def init_mlp(layer_sizes, seed: int) -> MlpParams:
    """Uniform +-1/sqrt(fan_in) initialization, deterministic per seed."""
    layer_sizes = tuple(int(s) for s in layer_sizes)
    if any(s <= 0 for s in layer_sizes):
        raise ValueError(f"zero-sized layer in {layer_sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpParams(layer_sizes, weights, biases)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Plain numpy forward pass (affine + tanh, final layer affine)."""
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.shape[1] != params.in_dim:
        raise ValueError(f"input dim {x.shape[1]}, network expects {params.in_dim}")
    h = x
    last = params.n_layers - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        h = h @ w.T + b
        if l != last:
            h = np.tanh(h)
    return h[0] if squeeze else h


def freeze(params: MlpParams, k: int) -> MlpParams:
    """Return a copy with the first ``k`` weight layers frozen."""
    if not 0 <= k <= params.n_layers:
        raise ValueError(f"freeze depth {k} out of range 0..{params.n_layers}")
    out = params.copy()
    out.frozen = [l < k for l in range(params.n_layers)]
    return out


@dataclass
class Checkpoint:
    """Serializable training state: parameters, task weights, loads, metadata."""

    params: MlpParams
    alphas: np.ndarray
    loads: np.ndarray
    problem: str = ""
    epoch: int = 0
    seed: int = 0
    task_names: tuple[str, ...] = ()
    scales: dict = field(default_factory=dict)

    @property
    def task_count(self) -> int:
        return len(self.alphas)

    @property
    def load_count(self) -> int:
        return len(self.loads)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    header = {
        "problem": ckpt.problem,
        "epoch": int(ckpt.epoch),
        "seed": int(ckpt.seed),
        "layer_sizes": list(ckpt.params.layer_sizes),
        "task_count": int(ckpt.task_count),
        "load_count": int(ckpt.load_count),
        "task_names": list(ckpt.task_names),
        "freeze_mask": [bool(f) for f in ckpt.params.frozen],
        "scales": ckpt.scales,
    }
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    chunks = [w.astype("<f8", copy=False).tobytes(order="C") for w in ckpt.params.weights]
    chunks += [b.astype("<f8", copy=False).tobytes() for b in ckpt.params.biases]
    chunks.append(np.asarray(ckpt.alphas, dtype="<f8").tobytes())
    chunks.append(np.asarray(ckpt.loads, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(hdr)))
        fh.write(hdr)
        for c in chunks:
            fh.write(c)


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(_MAGIC) + 8 or raw[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint file (bad magic)")
    version, hlen = struct.unpack_from("<II", raw, len(_MAGIC))
    if version != _VERSION:
        raise CheckpointError(
            f"{path}: unsupported checkpoint version {version} (expected {_VERSION})"
        )
    off = len(_MAGIC) + 8
    if len(raw) < off + hlen:
        raise CheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(raw[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from exc
    off += hlen

    layer_sizes = tuple(int(s) for s in header["layer_sizes"])
    n_layers = len(layer_sizes) - 1
    counts = [layer_sizes[l + 1] * layer_sizes[l] for l in range(n_layers)]
    counts += [layer_sizes[l + 1] for l in range(n_layers)]
    counts += [int(header["task_count"]), int(header["load_count"])]
    expected = off + 8 * sum(counts)
    if len(raw) != expected:
        raise CheckpointError(
            f"{path}: payload has {len(raw) - off} bytes, expected {expected - off}"
        )

    def take(n, shape):
        nonlocal off
        arr = np.frombuffer(raw, dtype="<f8", count=n, offset=off).astype(np.float64)
        off += 8 * n
        return arr.reshape(shape)

    weights = [
        take(layer_sizes[l + 1] * layer_sizes[l], (layer_sizes[l + 1], layer_sizes[l]))
        for l in range(n_layers)
    ]
    biases = [take(layer_sizes[l + 1], (layer_sizes[l + 1],)) for l in range(n_layers)]
    alphas = take(int(header["task_count"]), (-1,))
    loads = take(int(header["load_count"]), (-1,))
    params = MlpParams(
        layer_sizes, weights, biases, [bool(f) for f in header["freeze_mask"]]
    )
    return Checkpoint(
        params=params,
        alphas=alphas,
        loads=loads,
        problem=header.get("problem", ""),
        epoch=int(header.get("epoch", 0)),
        seed=int(header.get("seed", 0)),
        task_names=tuple(header.get("task_names", ())),
        scales=dict(header.get("scales", {})),
    )
