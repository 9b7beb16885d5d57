"""Dataset ingestion and seeded synthetic generators.

CSV loading produces a dense feature matrix plus integer class codes.  The
synthetic generators run on a self-contained 64-bit linear congruential
generator (constants documented on ``Lcg``) so that generated fixtures are
reproducible independently of any library RNG.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np


@dataclass
class Dataset:
    features: np.ndarray  # (n, d) float
    labels: np.ndarray  # (n,) int codes 0..C-1
    name: str = ""

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0


def _is_float(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def load_dataset(path, label_column) -> Dataset:
    """Load a delimited text file into features plus dense label codes.

    ``label_column`` selects the label field by header name or by integer
    index (negative indices count from the end).  Row order is preserved and
    labels are coded by first appearance.
    """
    with open(path, "r", newline="") as handle:
        text = handle.read()
    if not text.strip():
        raise ValueError(f"{path}: empty file")
    sample = text[:4096]
    try:
        dialect = csv.Sniffer().sniff(sample, delimiters=",;\t")
        delimiter = dialect.delimiter
    except csv.Error:
        delimiter = ","
    rows = [row for row in csv.reader(io.StringIO(text), delimiter=delimiter) if row]
    if not rows:
        raise ValueError(f"{path}: no rows")

    by_name = isinstance(label_column, str) and not _is_float(label_column)
    width = len(rows[0])
    if by_name:
        header = rows[0]
        if label_column not in header:
            raise ValueError(f"{path}: label column {label_column!r} not found in header")
        label_idx = header.index(label_column)
        data_rows = rows[1:]
    else:
        label_idx = int(label_column)
        if label_idx < 0:
            label_idx += width
        if not 0 <= label_idx < width:
            raise ValueError(f"{path}: label column index {label_column} out of range for {width} columns")
        # Header detection: a first row whose feature cells are not all
        # numeric is a header (the label cell may legitimately be text).
        feature_numeric = all(_is_float(c) for j, c in enumerate(rows[0]) if j != label_idx)
        header = rows[0] if not feature_numeric else None
        data_rows = rows[1:] if header else rows
    if not data_rows:
        raise ValueError(f"{path}: no data rows")

    feature_cols = [j for j in range(width) if j != label_idx]
    features = np.empty((len(data_rows), len(feature_cols)))
    raw_labels = []
    for r, row in enumerate(data_rows):
        line_no = r + (2 if header is not None else 1)
        if len(row) != width:
            raise ValueError(f"{path}: line {line_no} has {len(row)} fields, expected {width}")
        for out_j, j in enumerate(feature_cols):
            cell = row[j].strip()
            try:
                features[r, out_j] = float(cell)
            except ValueError:
                col = header[j] if header else str(j)
                raise ValueError(f"{path}: line {line_no}, column {col!r}: non-numeric value {cell!r}") from None
        raw_labels.append(row[label_idx].strip())
    if not np.all(np.isfinite(features)):
        raise ValueError(f"{path}: features contain nonfinite values")

    codes: dict[str, int] = {}
    labels = np.empty(len(raw_labels), dtype=int)
    for r, lab in enumerate(raw_labels):
        if lab not in codes:
            codes[lab] = len(codes)
        labels[r] = codes[lab]
    return Dataset(features=features, labels=labels, name=os.path.basename(str(path)))


def save_dataset(dataset: Dataset, path):
    """Write a dataset as CSV with a header and trailing label column."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"f{j}" for j in range(dataset.n_features)] + ["label"])
        for x, y in zip(dataset.features, dataset.labels):
            writer.writerow([repr(float(v)) for v in x] + [int(y)])


class Lcg:
    """64-bit linear congruential generator.

    state <- (6364136223846793005 * state + 1442695040888963407) mod 2^64,
    uniforms from the top 53 bits.  Normals use the Box-Muller transform with
    a fresh pair of uniforms per draw.
    """

    MULTIPLIER = 6364136223846793005
    INCREMENT = 1442695040888963407
    MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self.state = (int(seed) * 0x9E3779B97F4A7C15 + 0x2545F4914F6CDD1D) & self.MASK
        for _ in range(4):
            self._step()

    def _step(self) -> int:
        self.state = (self.MULTIPLIER * self.state + self.INCREMENT) & self.MASK
        return self.state

    def uniform(self) -> float:
        return (self._step() >> 11) / float(1 << 53)

    def normal(self) -> float:
        u1 = self.uniform()
        while u1 <= 0.0:
            u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def shuffle(self, items: list):
        for i in range(len(items) - 1, 0, -1):
            j = self._step() % (i + 1)
            items[i], items[j] = items[j], items[i]


@dataclass
class BlobSpec:
    centers: list
    stds: list
    counts: list
    seed: int = 0


def generate_blobs(spec: BlobSpec) -> Dataset:
    """Seeded isotropic Gaussian blobs with generative labels."""
    if len(spec.centers) != len(spec.stds) or len(spec.centers) != len(spec.counts):
        raise ValueError("centers, stds, and counts must align")
    if any(c <= 0 for c in spec.counts) or any(s <= 0 for s in spec.stds):
        raise ValueError("counts and stds must be positive")
    rng = Lcg(spec.seed)
    dim = len(np.atleast_1d(spec.centers[0]))
    rows, labels = [], []
    for label, (center, std, count) in enumerate(zip(spec.centers, spec.stds, spec.counts)):
        c = np.atleast_1d(np.asarray(center, dtype=float))
        for _ in range(count):
            rows.append(c + std * np.array([rng.normal() for _ in range(dim)]))
            labels.append(label)
    order = list(range(len(rows)))
    rng.shuffle(order)
    features = np.asarray([rows[i] for i in order])
    y = np.asarray([labels[i] for i in order], dtype=int)
    return Dataset(features=features, labels=y, name=f"blobs-seed{spec.seed}")


def generate_bridged_modes(gap_support: int, mode_support: int, seed: int = 0) -> Dataset:
    """Two dense 1-D modes joined by a sparse bridge of low-count points.

    The canonical configuration where connected components over learned nodes
    give one group while the density-persistence partition keeps two: each
    mode is an evenly spaced jittered comb, the spatial gap is comparable to
    the intra-mode spacing (so the learned-node graph stays connected), and
    only the support density dips across it.  Bridge samples are emitted
    early in the stream so the bridge prototype earns its activation while
    support medians are still low; without bridge points the gap is widened
    so the two modes stay trivially disconnected.  Bridge points are labeled
    by their nearest mode.
    """
    if gap_support < 0 or mode_support <= 0:
        raise ValueError("supports must be nonnegative, modes positive")
    if gap_support and mode_support <= gap_support:
        raise ValueError("modes must outweigh the bridge")
    rng = Lcg(seed)
    width = 4.0
    jitter = 0.2
    half_gap = 0.5 if gap_support else 1.5
    mode_rows: list[tuple[list[float], int]] = []
    for i in range(mode_support):
        x = -half_gap - width * (i + 0.5) / mode_support + jitter * rng.normal()
        mode_rows.append(([x], 0))
    for i in range(mode_support):
        x = half_gap + width * (i + 0.5) / mode_support + jitter * rng.normal()
        mode_rows.append(([x], 1))
    bridge_rows: list[tuple[list[float], int]] = []
    for j in range(gap_support):
        frac = (j + 1) / (gap_support + 1)
        x = -half_gap + 2 * half_gap * frac + 0.15 * half_gap * rng.normal()
        bridge_rows.append(([x], 0 if x < 0 else 1))
    order = list(range(len(mode_rows)))
    rng.shuffle(order)
    stream = [mode_rows[i] for i in order]
    for j, row in enumerate(bridge_rows):
        stream.insert(min(3 * (j + 1), len(stream)), row)
    features = np.asarray([row for row, _ in stream])
    y = np.asarray([label for _, label in stream], dtype=int)
    return Dataset(features=features, labels=y, name=f"bridged-seed{seed}")
