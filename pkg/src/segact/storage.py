"""On-disk formats: trained weights, generated datasets, run records.

Weights ("ACTS", little endian)
    magic 4s | version u32 | n_layers u32
    per layer: in_size u32 | out_size u32 | weights f64 row-major
    (out_size x in_size) | bias f64 (out_size)

Dataset ("ACTD", little endian)
    magic 4s | version u32 | n_images u32 | image_side u32 | n_features u32
    per image: features f64 row-major (side^2 x n_features) | mask u8 (side^2)

Records are a plain CSV with a fixed column order; floats are written
with full round-trip precision.
"""
from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .datagen import Sample, TaskConfig

WEIGHTS_MAGIC = b"ACTS"
DATASET_MAGIC = b"ACTD"
FORMAT_VERSION = 1

RECORD_COLUMNS = ("activation", "loss", "fold", "nll", "dice", "threshold",
                  "gap_even", "gap_adaptive", "epochs", "converged")


def save_weights(path, layers) -> None:
    with open(path, "wb") as fh:
        fh.write(WEIGHTS_MAGIC)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(layers)))
        for w, b in layers:
            out_size, in_size = w.shape
            fh.write(struct.pack("<II", in_size, out_size))
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_weights(path):
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != WEIGHTS_MAGIC:
            raise ValueError(f"bad weights file magic {magic!r}")
        version, n_layers = struct.unpack("<II", fh.read(8))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported weights version {version}")
        layers = []
        for _ in range(n_layers):
            in_size, out_size = struct.unpack("<II", fh.read(8))
            w = np.frombuffer(fh.read(8 * in_size * out_size),
                              dtype="<f8").reshape(out_size, in_size)
            b = np.frombuffer(fh.read(8 * out_size), dtype="<f8")
            layers.append((w.astype(float), b.astype(float)))
    return layers


def save_dataset(out_dir, samples, cfg: TaskConfig) -> Path:
    """Write samples plus a manifest with the config echo and checksum."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = out_dir / "data.actd"
    side = cfg.image_side
    with open(data_path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<IIII", FORMAT_VERSION, len(samples), side,
                             samples[0].features.shape[1]))
        for s in samples:
            fh.write(np.ascontiguousarray(s.features, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(s.mask, dtype=np.uint8).tobytes())
    digest = hashlib.sha256(data_path.read_bytes()).hexdigest()
    manifest = {
        "format": f"ACTD v{FORMAT_VERSION}",
        "n_images": len(samples),
        "image_side": side,
        "n_features": int(samples[0].features.shape[1]),
        "config": {
            "n_images": cfg.n_images,
            "image_side": cfg.image_side,
            "shape": cfg.shape,
            "noise_sigma": cfg.noise_sigma,
            "seed": cfg.seed,
        },
        "sha256": digest,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return data_path


def load_dataset(path):
    """Read an ACTD file back into samples; verifies the magic bytes."""
    path = Path(path)
    if path.is_dir():
        path = path / "data.actd"
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != DATASET_MAGIC:
            raise ValueError(f"bad dataset file magic {magic!r}")
        version, n_images, side, n_features = struct.unpack("<IIII",
                                                            fh.read(16))
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported dataset version {version}")
        n_pixels = side * side
        samples = []
        for _ in range(n_images):
            features = np.frombuffer(fh.read(8 * n_pixels * n_features),
                                     dtype="<f8").reshape(n_pixels,
                                                          n_features)
            mask = np.frombuffer(fh.read(n_pixels), dtype=np.uint8)
            samples.append(Sample(features=features.astype(float),
                                  mask=mask.copy(),
                                  foreground_fraction=float(mask.mean())))
    return samples


def write_records(path, records) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RECORD_COLUMNS)
        for r in records:
            writer.writerow([
                r.activation, r.loss, r.fold, repr(r.nll), repr(r.dice),
                repr(r.threshold), repr(r.gap_even), repr(r.gap_adaptive),
                r.epochs, "true" if r.converged else "false",
            ])


def read_records(path):
    from .harness import RunRecord

    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != RECORD_COLUMNS:
            raise ValueError(f"unexpected records header {header}")
        records = []
        for row in reader:
            records.append(RunRecord(
                activation=row[0], loss=row[1], fold=int(row[2]),
                nll=float(row[3]), dice=float(row[4]),
                threshold=float(row[5]), gap_even=float(row[6]),
                gap_adaptive=float(row[7]), epochs=int(row[8]),
                converged=row[9] == "true",
            ))
    return records
