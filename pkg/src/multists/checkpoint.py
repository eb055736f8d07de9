"""Checkpoint persistence: manifest.json + params.bin.

Parameters are stored as little-endian float32 in row-major order, in the
order listed by the manifest. Saving is deterministic; save -> load ->
save reproduces the files byte for byte. Loading into a model verifies
names and shapes; vocabulary fingerprints guard against scoring with the
wrong tokenizer artifacts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .autodiff import Tensor
from .errors import DataError

FORMAT_VERSION = 1
STAGE_MT = "mt"
STAGE_STS = "sts"

MANIFEST_NAME = "manifest.json"
PARAMS_NAME = "params.bin"


@dataclass
class Checkpoint:
    stage: str
    config: dict
    fingerprints: dict[str, str]
    arrays: dict[str, np.ndarray]


def save_checkpoint(directory: Path, stage: str, params: list[tuple[str, Tensor]],
                    config: dict, fingerprints: dict[str, str]):
    if stage not in (STAGE_MT, STAGE_STS):
        raise DataError(f"unknown checkpoint stage {stage!r}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = []
    blobs = []
    offset = 0
    for name, tensor in params:
        flat = np.ascontiguousarray(tensor.data, dtype="<f4")
        records.append({
            "name": name,
            "shape": list(tensor.data.shape),
            "offset": offset,
            "count": int(flat.size),
        })
        blobs.append(flat.tobytes())
        offset += int(flat.size)
    manifest = {
        "format_version": FORMAT_VERSION,
        "stage": stage,
        "config": config,
        "fingerprints": fingerprints,
        "parameters": records,
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    (directory / PARAMS_NAME).write_bytes(b"".join(blobs))


def load_checkpoint(directory: Path) -> Checkpoint:
    directory = Path(directory)
    try:
        manifest = json.loads((directory / MANIFEST_NAME).read_text(encoding="utf-8"))
        raw = (directory / PARAMS_NAME).read_bytes()
    except FileNotFoundError as exc:
        raise DataError(f"checkpoint incomplete: missing {exc.filename}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"checkpoint manifest is not valid JSON: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported checkpoint format: {manifest.get('format_version')}")
    arrays: dict[str, np.ndarray] = {}
    for record in manifest["parameters"]:
        start = record["offset"] * 4
        stop = start + record["count"] * 4
        if stop > len(raw):
            raise DataError(f"checkpoint truncated at parameter {record['name']!r}")
        values = np.frombuffer(raw[start:stop], dtype="<f4").astype(np.float64)
        arrays[record["name"]] = values.reshape(record["shape"])
    return Checkpoint(
        stage=manifest["stage"],
        config=manifest["config"],
        fingerprints=manifest["fingerprints"],
        arrays=arrays,
    )


def apply_parameters(params: list[tuple[str, Tensor]], checkpoint: Checkpoint,
                     prefix: str = ""):
    """Copy checkpoint arrays into matching model tensors.

    Every selected checkpoint entry must be consumed and every selected
    model parameter must be covered, with matching shapes.
    """
    available = {n: a for n, a in checkpoint.arrays.items() if n.startswith(prefix)}
    for name, tensor in params:
        if not name.startswith(prefix):
            continue
        if name not in available:
            raise DataError(f"checkpoint is missing parameter {name!r}")
        loaded = available.pop(name)
        if loaded.shape != tensor.data.shape:
            raise DataError(
                f"parameter {name!r} has shape {loaded.shape}, expected {tensor.data.shape}")
        tensor.data[...] = loaded
    if available:
        raise DataError(f"checkpoint has unused parameters: {sorted(available)[:4]}")


def verify_fingerprints(checkpoint: Checkpoint, fingerprints: dict[str, str]):
    """Hard failure when tokenizer artifacts differ from training time."""
    if checkpoint.fingerprints != fingerprints:
        changed = sorted(
            k for k in set(checkpoint.fingerprints) | set(fingerprints)
            if checkpoint.fingerprints.get(k) != fingerprints.get(k))
        raise DataError(f"vocabulary fingerprint mismatch: {changed}")


def require_stage(checkpoint: Checkpoint, stage: str):
    if checkpoint.stage != stage:
        raise DataError(
            f"checkpoint stage {checkpoint.stage!r} unusable here; expected {stage!r}")
