"""Self-describing binary checkpoints for policy parameters.

Layout:

    bytes 0..7    magic  b"CNAVCKPT"
    bytes 8..11   header length H, little-endian uint32
    bytes 12..12+H  JSON header, utf-8:
        {"format_version": 1,
         "arch": "st_graph",
         "dims": {"d_rnn": ..., "d_embed": ..., "d_k": ...},
         "tensors": [{"name": ..., "shape": [...]}, ...],
         "extra": {...}}
    then one payload per tensor, in table order: row-major (C-order)
    little-endian float64 bytes.

float64 payloads make save -> load bitwise lossless.  Loading validates
magic, version, header syntax, and that the payload length matches the
tensor table exactly, raising CheckpointError with a specific message on
any mismatch.
"""

from __future__ import annotations

import json
import struct
from typing import Any

import numpy as np

from ..config import NetworkConfig
from .params import param_shapes

MAGIC = b"CNAVCKPT"
FORMAT_VERSION = 1


class CheckpointError(RuntimeError):
    """A checkpoint file is missing, truncated, or inconsistent."""


def save_checkpoint(
    path: str,
    params: dict[str, np.ndarray],
    network: NetworkConfig,
    extra: dict[str, Any] | None = None,
) -> None:
    names = sorted(params)
    header = {
        "format_version": FORMAT_VERSION,
        "arch": network.arch,
        "dims": {"d_rnn": network.d_rnn, "d_embed": network.d_embed, "d_k": network.d_k},
        "tensors": [{"name": n, "shape": list(params[n].shape)} for n in names],
        "extra": extra or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(header_bytes)))
        fh.write(header_bytes)
        for n in names:
            arr = np.ascontiguousarray(params[n], dtype="<f8")
            fh.write(arr.tobytes())


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], NetworkConfig, dict[str, Any]]:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc

    if len(blob) < len(MAGIC) + 4:
        raise CheckpointError(f"{path}: too short to be a checkpoint ({len(blob)} bytes)")
    if blob[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {blob[:8]!r}, not a checkpoint file")
    (header_len,) = struct.unpack_from("<I", blob, len(MAGIC))
    header_start = len(MAGIC) + 4
    header_end = header_start + header_len
    if header_end > len(blob):
        raise CheckpointError(f"{path}: truncated header ({header_len} bytes declared)")
    try:
        header = json.loads(blob[header_start:header_end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: header is not valid JSON: {exc}") from exc

    version = header.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format_version {version!r}")
    dims = header.get("dims", {})
    try:
        network = NetworkConfig(
            arch=header["arch"],
            d_rnn=int(dims["d_rnn"]),
            d_embed=int(dims["d_embed"]),
            d_k=int(dims["d_k"]),
        )
        network.validate("checkpoint.dims")
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"{path}: malformed dims/arch in header: {exc}") from exc

    params: dict[str, np.ndarray] = {}
    offset = header_end
    for entry in header.get("tensors", []):
        name = entry.get("name")
        shape = tuple(int(s) for s in entry.get("shape", []))
        count = 1
        for s in shape:
            count *= s
        nbytes = count * 8
        if offset + nbytes > len(blob):
            raise CheckpointError(
                f"{path}: payload truncated at tensor {name!r} "
                f"(need {nbytes} bytes at offset {offset}, have {len(blob) - offset})"
            )
        arr = np.frombuffer(blob, dtype="<f8", count=count, offset=offset)
        params[name] = arr.reshape(shape).astype(np.float64, copy=True)
        offset += nbytes
    if offset != len(blob):
        raise CheckpointError(f"{path}: {len(blob) - offset} trailing bytes after payload")
    return params, network, header.get("extra", {})


def validate_params(params: dict[str, np.ndarray], network: NetworkConfig, where: str = "checkpoint") -> None:
    """Check a loaded parameter dict against an architecture's shape table."""
    expected = param_shapes(network)
    missing = sorted(set(expected) - set(params))
    extra = sorted(set(params) - set(expected))
    if missing or extra:
        raise CheckpointError(
            f"{where}: parameter names do not match arch {network.arch!r} "
            f"(missing {missing[:3]}, unexpected {extra[:3]})"
        )
    for name, shape in expected.items():
        if params[name].shape != shape:
            raise CheckpointError(
                f"{where}: tensor {name} has shape {params[name].shape}, expected {shape}"
            )
