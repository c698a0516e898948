"""Portable on-disk dataset format and a synthetic SBM generator.

Directory layout (bit-exact contract):

* ``meta.json``     {"name", "num_nodes", "num_features", "num_classes",
  "feature_dtype": "f64le"}
* ``edges.tsv``     one ``i<TAB>j`` pair per line, 0-based, undirected
  (either orientation accepted, duplicates collapsed)
* ``features.bin``  num_nodes x num_features float64 little-endian,
  row-major, no header
* ``labels.tsv``    one integer per line, -1 for unlabeled
* ``splits.json``   {"train": [...], "val": [...], "test": [...]}
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetError, ValidationError
from .tensor import CSRMatrix

FEATURE_DTYPE = "f64le"
_REQUIRED_FILES = ("meta.json", "edges.tsv", "features.bin", "labels.tsv", "splits.json")


def _read_text(path, encoding):
    try:
        return Path(path).read_text(encoding=encoding)
    except UnicodeDecodeError as exc:
        raise DatasetError(f"{path}: not valid {encoding} text ({exc})")


@dataclass(frozen=True)
class GraphDataset:
    name: str
    features: np.ndarray      # (num_nodes, num_features) float64
    adjacency: CSRMatrix      # symmetric, zero diagonal
    labels: np.ndarray        # int64, -1 marks unlabeled
    num_classes: int
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray

    def __post_init__(self):
        n = self.features.shape[0]
        if self.adjacency.shape != (n, n):
            raise ValidationError(
                f"adjacency {self.adjacency.shape} does not match {n} nodes"
            )
        if self.labels.shape != (n,):
            raise ValidationError("labels length does not match node count")
        if self.labels.max(initial=-1) >= self.num_classes:
            raise ValidationError("label value exceeds num_classes")
        if self.labels.min(initial=0) < -1:
            raise ValidationError("labels must be >= -1")
        splits = {"train": self.train_idx, "val": self.val_idx, "test": self.test_idx}
        seen = set()
        for split_name, idx in splits.items():
            if idx.size and (idx.min() < 0 or idx.max() >= n):
                raise ValidationError(f"{split_name} split index out of range")
            as_set = set(idx.tolist())
            if len(as_set) != idx.size:
                raise ValidationError(f"{split_name} split has duplicate indices")
            if seen & as_set:
                raise ValidationError("splits are not pairwise disjoint")
            seen |= as_set
            if idx.size and np.any(self.labels[idx] < 0):
                raise ValidationError(f"{split_name} split contains unlabeled nodes")

    @property
    def num_nodes(self):
        return self.features.shape[0]

    @property
    def num_features(self):
        return self.features.shape[1]


def datasets_equal(a: GraphDataset, b: GraphDataset) -> bool:
    """Bit-exact equality, including split order."""
    return (
        a.name == b.name
        and a.num_classes == b.num_classes
        and np.array_equal(a.features, b.features)
        and a.adjacency.equals(b.adjacency)
        and np.array_equal(a.labels, b.labels)
        and np.array_equal(a.train_idx, b.train_idx)
        and np.array_equal(a.val_idx, b.val_idx)
        and np.array_equal(a.test_idx, b.test_idx)
    )


def _read_edges(path, n):
    firsts = []
    seconds = []
    seen = set()
    for lineno, line in enumerate(_read_text(path, "ascii").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetError(f"{path}:{lineno}: expected 'i<TAB>j', got {line!r}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise DatasetError(f"{path}:{lineno}: non-integer node id in {line!r}")
        if not (0 <= i < n and 0 <= j < n):
            raise DatasetError(
                f"{path}:{lineno}: node id out of range [0, {n}) in {line!r}"
            )
        if i == j:
            raise DatasetError(f"{path}:{lineno}: self-loop on node {i} is not allowed")
        key = (i, j) if i < j else (j, i)
        if key in seen:
            continue
        seen.add(key)
        firsts.append(key[0])
        seconds.append(key[1])
    return np.asarray(firsts, dtype=np.int64), np.asarray(seconds, dtype=np.int64)


def load_dataset(path) -> GraphDataset:
    """Read and fully validate a dataset directory."""
    root = Path(path)
    if not root.is_dir():
        raise DatasetError(f"dataset directory not found: {root}")
    for fname in _REQUIRED_FILES:
        if not (root / fname).is_file():
            raise DatasetError(f"missing required file: {root / fname}")

    meta_path = root / "meta.json"
    try:
        meta = json.loads(_read_text(meta_path, "utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{meta_path}: invalid JSON ({exc})")
    if not isinstance(meta, dict):
        raise DatasetError(f"{meta_path}: expected a JSON object")
    for key in ("name", "num_nodes", "num_features", "num_classes", "feature_dtype"):
        if key not in meta:
            raise DatasetError(f"{meta_path}: missing key {key!r}")
    if meta["feature_dtype"] != FEATURE_DTYPE:
        raise DatasetError(
            f"{meta_path}: unsupported feature_dtype {meta['feature_dtype']!r}"
        )
    try:
        n = int(meta["num_nodes"])
        f = int(meta["num_features"])
        c = int(meta["num_classes"])
    except (TypeError, ValueError):
        raise DatasetError(f"{meta_path}: node/feature/class counts must be integers")
    if n < 1 or f < 1 or c < 1:
        raise DatasetError(f"{meta_path}: counts must be positive")

    feat_path = root / "features.bin"
    expected = n * f * 8
    actual = feat_path.stat().st_size
    if actual != expected:
        raise DatasetError(
            f"{feat_path}: expected {expected} bytes for {n}x{f} float64, found {actual}"
        )
    features = np.fromfile(feat_path, dtype="<f8").reshape(n, f)
    if not np.all(np.isfinite(features)):
        raise DatasetError(f"{feat_path}: non-finite feature value")

    labels_path = root / "labels.tsv"
    raw_labels = []
    for lineno, line in enumerate(_read_text(labels_path, "ascii").splitlines(),
                                  start=1):
        line = line.strip()
        if not line:
            continue
        try:
            raw_labels.append(int(line))
        except ValueError:
            raise DatasetError(f"{labels_path}:{lineno}: non-integer label {line!r}")
    if len(raw_labels) != n:
        raise DatasetError(
            f"{labels_path}: expected {n} labels, found {len(raw_labels)}"
        )
    labels = np.asarray(raw_labels, dtype=np.int64)

    i_arr, j_arr = _read_edges(root / "edges.tsv", n)
    rows = np.concatenate([i_arr, j_arr])
    cols = np.concatenate([j_arr, i_arr])
    adjacency = CSRMatrix.from_coo(n, n, rows, cols, np.ones(rows.size))

    splits_path = root / "splits.json"
    try:
        splits = json.loads(_read_text(splits_path, "utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{splits_path}: invalid JSON ({exc})")
    if not isinstance(splits, dict):
        raise DatasetError(f"{splits_path}: expected a JSON object")
    idx = {}
    for split_name in ("train", "val", "test"):
        if split_name not in splits:
            raise DatasetError(f"{splits_path}: missing split {split_name!r}")
        try:
            idx[split_name] = np.asarray(splits[split_name], dtype=np.int64)
        except (TypeError, ValueError):
            raise DatasetError(
                f"{splits_path}: split {split_name!r} must be a flat integer list"
            )
        if idx[split_name].ndim != 1:
            raise DatasetError(
                f"{splits_path}: split {split_name!r} must be a flat integer list"
            )

    try:
        return GraphDataset(
            name=str(meta["name"]),
            features=features,
            adjacency=adjacency,
            labels=labels,
            num_classes=c,
            train_idx=idx["train"],
            val_idx=idx["val"],
            test_idx=idx["test"],
        )
    except ValidationError as exc:
        raise DatasetError(f"{root}: {exc}")


def save_dataset(dataset: GraphDataset, path):
    """Write the directory format; ``load_dataset`` round-trips bit-exactly."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": dataset.name,
        "num_nodes": dataset.num_nodes,
        "num_features": dataset.num_features,
        "num_classes": dataset.num_classes,
        "feature_dtype": FEATURE_DTYPE,
    }
    (root / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    adj = dataset.adjacency
    rows = adj.row_of_entry()
    upper = rows < adj.indices
    lines = [f"{i}\t{j}" for i, j in zip(rows[upper], adj.indices[upper])]
    (root / "edges.tsv").write_text("\n".join(lines) + ("\n" if lines else ""),
                                    encoding="ascii")

    np.ascontiguousarray(dataset.features, dtype="<f8").tofile(root / "features.bin")
    (root / "labels.tsv").write_text(
        "\n".join(str(int(v)) for v in dataset.labels) + "\n", encoding="ascii"
    )
    splits = {
        "train": [int(v) for v in dataset.train_idx],
        "val": [int(v) for v in dataset.val_idx],
        "test": [int(v) for v in dataset.test_idx],
    }
    (root / "splits.json").write_text(json.dumps(splits) + "\n", encoding="utf-8")


def generate_sbm(nodes_per_block, blocks, p_in, p_out, feature_noise, seed) -> GraphDataset:
    """Stochastic block model with one-hot block features plus noise.

    Labels are block ids; the per-block split is 10% train / 20% val / 70%
    test (at least one train and one val node per block).
    """
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ValidationError("edge probabilities must be in [0, 1]")
    if nodes_per_block < 1 or blocks < 1:
        raise ValidationError("need at least one node per block and one block")
    if feature_noise < 0:
        raise ValidationError("feature_noise must be >= 0")
    rng = np.random.default_rng(seed)
    n = nodes_per_block * blocks
    block_id = np.repeat(np.arange(blocks), nodes_per_block)

    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(block_id[iu] == block_id[ju], p_in, p_out)
    pick = rng.random(iu.size) < prob
    i_arr, j_arr = iu[pick], ju[pick]
    rows = np.concatenate([i_arr, j_arr])
    cols = np.concatenate([j_arr, i_arr])
    adjacency = CSRMatrix.from_coo(n, n, rows, cols, np.ones(rows.size, dtype=np.float64))

    features = np.zeros((n, blocks), dtype=np.float64)
    features[np.arange(n), block_id] = 1.0
    if feature_noise > 0:
        features = features + feature_noise * rng.standard_normal((n, blocks))

    train, val, test = [], [], []
    for b in range(blocks):
        members = np.flatnonzero(block_id == b)
        members = rng.permutation(members)
        n_train = max(1, int(0.1 * members.size))
        n_val = max(1, int(0.2 * members.size))
        train.extend(members[:n_train].tolist())
        val.extend(members[n_train : n_train + n_val].tolist())
        test.extend(members[n_train + n_val :].tolist())
    return GraphDataset(
        name="sbm",
        features=features,
        adjacency=adjacency,
        labels=block_id.astype(np.int64),
        num_classes=blocks,
        train_idx=np.asarray(sorted(train), dtype=np.int64),
        val_idx=np.asarray(sorted(val), dtype=np.int64),
        test_idx=np.asarray(sorted(test), dtype=np.int64),
    )


def row_normalize_features(features):
    """Scale each feature row to sum to 1; all-zero rows are left unchanged."""
    features = np.asarray(features, dtype=np.float64)
    sums = features.sum(axis=1, keepdims=True)
    safe = np.where(sums == 0.0, 1.0, sums)
    return features / safe
