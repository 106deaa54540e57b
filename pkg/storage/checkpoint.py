"""
storage/checkpoint.py: model checkpoint file

    "AVCK" | version u16 | config length u32 | ModelConfig JSON (utf-8)
    | tensor count u32 | per tensor: name length u16, name, rows u64, cols u64, rows·cols <f8

Trainable tensors, the class centers (`centers`) and any extras (`norm.*`) are stored
alike; reading back is bit-exact.
"""

from __future__ import annotations
import struct
from pathlib import Path
from typing import Optional

import numpy as np

from core.network import ModelParams, layer_shapes
from core.tensor import Tensor
from models.config import ModelConfig
from utils.errors import ContractError, FormatError

MAGIC = b"AVCK"
VERSION = 1


def save_checkpoint(params: ModelParams, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    blocks: list[tuple[str, np.ndarray]] = [(name, t.data) for name, t in params.items()]
    blocks.append(("centers", params.centers))
    blocks.extend(sorted(params.extras.items()))

    config = params.config.model_dump_json().encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sHI", MAGIC, VERSION, len(config)))
        fh.write(config)
        fh.write(struct.pack("<I", len(blocks)))
        for name, arr in blocks:
            arr = np.ascontiguousarray(np.atleast_2d(arr), dtype="<f8")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<QQ", *arr.shape))
            fh.write(arr.tobytes(order="C"))
    return path


def load_checkpoint(path: Path, expected: Optional[ModelConfig] = None) -> ModelParams:
    path = Path(path)
    blob = path.read_bytes()
    try:
        magic, version, cfg_len = struct.unpack_from("<4sHI", blob, 0)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {version}")
        offset = struct.calcsize("<4sHI")
        config = ModelConfig.model_validate_json(blob[offset:offset + cfg_len].decode("utf-8"))
        offset += cfg_len
        (count,) = struct.unpack_from("<I", blob, offset)
        offset += 4

        arrays: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", blob, offset)
            offset += 2
            name = blob[offset:offset + name_len].decode("utf-8")
            offset += name_len
            rows, cols = struct.unpack_from("<QQ", blob, offset)
            offset += 16
            nbytes = rows * cols * 8
            if offset + nbytes > len(blob):
                raise FormatError(f"{path}: tensor '{name}' is truncated")
            arrays[name] = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=offset) \
                .reshape(rows, cols).astype(np.float64)
            offset += nbytes
    except struct.error as e:
        raise FormatError(f"{path}: truncated checkpoint ({e})") from None

    if expected is not None and expected != config:
        raise ContractError(f"{path}: checkpoint config {config.model_dump()} differs from {expected.model_dump()}")

    shapes = layer_shapes(config)
    tensors: dict[str, Tensor] = {}
    for name, shape in shapes.items():
        if name not in arrays:
            raise FormatError(f"{path}: missing tensor '{name}'")
        if arrays[name].shape != shape:
            raise ContractError(f"{path}: tensor '{name}' has shape {arrays[name].shape}, config implies {shape}")
        tensors[name] = Tensor(arrays[name], requires_grad=True)

    params = ModelParams(config, tensors, arrays.get("centers", np.zeros((config.classes, config.latent))))
    params.extras = {k: v for k, v in arrays.items() if k.startswith("norm.")}
    return params
