"""Decision-tree ensemble containers, evaluation, and the portable format.

Trees are stored as flat parallel arrays (index 0 = root, children always at
higher indices). Leaf values carry the shrinkage already applied during
training. Every node keeps its cover -- the number of training rows routed
through it -- which the explainer needs for conditional expectations.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from ..domain import FeatureVector
from ..errors import FormatError, SchemaMismatch

FORMAT_VERSION = 1

_COVER_TOL = 1e-9  # covers are row counts; any real mismatch is >= 1


@dataclass
class Tree:
    """One additive tree as parallel node arrays; -1 marks 'no child'."""

    feature: np.ndarray  # int32; -1 on leaves
    threshold: np.ndarray  # float64; NaN on leaves
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    missing_left: np.ndarray  # uint8; 1 = missing routed left
    value: np.ndarray  # float64; leaf margin contribution, 0.0 on splits
    cover: np.ndarray  # float64; training rows routed through the node

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def leaf_value(self, x: np.ndarray) -> float:
        """Route one dense row (NaN = missing) to its leaf value."""
        node = 0
        while self.left[node] >= 0:
            v = x[self.feature[node]]
            if math.isnan(v):
                node = self.left[node] if self.missing_left[node] else self.right[node]
            elif v < self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return float(self.value[node])

    def leaf_values_rows(self, values: np.ndarray) -> np.ndarray:
        """Vectorized routing of (n, d) rows with NaN missing."""
        n = values.shape[0]
        node = np.zeros(n, dtype=np.int32)
        active = self.left[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            feat = self.feature[cur]
            col = values[idx, feat]
            missing = np.isnan(col)
            go_left = np.where(missing, self.missing_left[cur] == 1, col < self.threshold[cur])
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.left[node] >= 0
        return self.value[node]

    def max_depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.left[i] >= 0:
                depth[self.left[i]] = depth[i] + 1
                depth[self.right[i]] = depth[i] + 1
        return int(depth.max()) if self.n_nodes else 0


@dataclass
class TreeEnsemble:
    """Additive model: margin(x) = base_margin + sum of tree leaf values."""

    schema: tuple[str, ...]
    base_margin: float
    learning_rate: float
    trees: list[Tree] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.schema)

    def check_schema(self, x: FeatureVector) -> None:
        if tuple(x.schema) != self.schema:
            raise SchemaMismatch(f"expected schema {self.schema}, got {tuple(x.schema)}")

    def margin_array(self, x: np.ndarray) -> float:
        m = self.base_margin
        for tree in self.trees:
            m += tree.leaf_value(x)
        return float(m)

    def margin_rows(self, values: np.ndarray) -> np.ndarray:
        m = np.full(values.shape[0], self.base_margin, dtype=np.float64)
        for tree in self.trees:
            m += tree.leaf_values_rows(values)
        return m

    def proba_rows(self, values: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.margin_rows(values)))


def predict_margin(model: TreeEnsemble, x: FeatureVector) -> float:
    """Margin (log-odds) for one case; missing features follow missing_goes."""
    model.check_schema(x)
    return model.margin_array(x.to_array())


def predict_proba(model: TreeEnsemble, x: FeatureVector) -> float:
    return 1.0 / (1.0 + math.exp(-predict_margin(model, x)))


# ---------------------------------------------------------------------------
# Portable model documents
# ---------------------------------------------------------------------------

def _tree_to_doc(tree: Tree) -> dict:
    nodes = []
    for i in range(tree.n_nodes):
        if tree.is_leaf(i):
            nodes.append(
                {
                    "id": i,
                    "kind": "leaf",
                    "value": float(tree.value[i]),
                    "cover": float(tree.cover[i]),
                }
            )
        else:
            nodes.append(
                {
                    "id": i,
                    "kind": "split",
                    "feature": int(tree.feature[i]),
                    "threshold": float(tree.threshold[i]),
                    "left": int(tree.left[i]),
                    "right": int(tree.right[i]),
                    "missing_goes": "left" if tree.missing_left[i] else "right",
                    "cover": float(tree.cover[i]),
                }
            )
    return {"nodes": nodes}


def _tree_from_doc(doc: dict, n_features: int, tree_index: int) -> Tree:
    where = f"trees[{tree_index}]"
    nodes = doc.get("nodes")
    if not isinstance(nodes, list) or not nodes:
        raise FormatError(f"{where}: missing or empty nodes array")
    n = len(nodes)
    feature = np.full(n, -1, dtype=np.int32)
    threshold = np.full(n, np.nan, dtype=np.float64)
    left = np.full(n, -1, dtype=np.int32)
    right = np.full(n, -1, dtype=np.int32)
    missing_left = np.zeros(n, dtype=np.uint8)
    value = np.zeros(n, dtype=np.float64)
    cover = np.zeros(n, dtype=np.float64)

    for pos, node in enumerate(nodes):
        nid = node.get("id")
        if nid != pos:
            raise FormatError(f"{where}.nodes[{pos}]: id must equal array index, got {nid}")
        kind = node.get("kind")
        if "cover" not in node:
            raise FormatError(f"{where}.nodes[{pos}]: cover is required")
        cover[pos] = float(node["cover"])
        if cover[pos] < 0:
            raise FormatError(f"{where}.nodes[{pos}]: negative cover")
        if kind == "leaf":
            value[pos] = float(node["value"])
            if not math.isfinite(value[pos]):
                raise FormatError(f"{where}.nodes[{pos}]: non-finite leaf value")
        elif kind == "split":
            feature[pos] = int(node["feature"])
            if not 0 <= feature[pos] < n_features:
                raise FormatError(f"{where}.nodes[{pos}]: feature index out of schema")
            threshold[pos] = float(node["threshold"])
            if not math.isfinite(threshold[pos]):
                raise FormatError(f"{where}.nodes[{pos}]: non-finite threshold")
            left[pos] = int(node["left"])
            right[pos] = int(node["right"])
            goes = node.get("missing_goes")
            if goes not in ("left", "right"):
                raise FormatError(f"{where}.nodes[{pos}]: missing_goes must be left/right")
            missing_left[pos] = 1 if goes == "left" else 0
        else:
            raise FormatError(f"{where}.nodes[{pos}]: unknown kind {kind!r}")

    # Structural validation: children in range, each non-root node has exactly
    # one parent, covers add up.
    referenced = np.zeros(n, dtype=np.int64)
    for pos in range(n):
        if left[pos] < 0:
            continue
        for child in (left[pos], right[pos]):
            if not 0 <= child < n:
                raise FormatError(f"{where}.nodes[{pos}]: dangling child index {child}")
            if child <= pos:
                raise FormatError(f"{where}.nodes[{pos}]: child {child} does not follow its parent")
            referenced[child] += 1
        if abs(cover[pos] - (cover[left[pos]] + cover[right[pos]])) > _COVER_TOL:
            raise FormatError(
                f"{where}.nodes[{pos}]: cover {cover[pos]} != children sum "
                f"{cover[left[pos]] + cover[right[pos]]}"
            )
    if referenced[0] != 0:
        raise FormatError(f"{where}: root must not be referenced as a child")
    bad = np.nonzero(referenced[1:] != 1)[0]
    if bad.size:
        raise FormatError(f"{where}.nodes[{bad[0] + 1}]: node must have exactly one parent")

    return Tree(feature, threshold, left, right, missing_left, value, cover)


def model_to_doc(model: TreeEnsemble) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "schema": list(model.schema),
        "base_margin": float(model.base_margin),
        "learning_rate": float(model.learning_rate),
        "trees": [_tree_to_doc(t) for t in model.trees],
        "metadata": model.metadata,
    }


def model_from_doc(doc: dict) -> TreeEnsemble:
    if not isinstance(doc, dict):
        raise FormatError("model document must be an object")
    if doc.get("format_version") != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version: {doc.get('format_version')!r}")
    schema = doc.get("schema")
    if not isinstance(schema, list) or not all(isinstance(s, str) for s in schema):
        raise FormatError("schema must be a list of feature names")
    base_margin = float(doc.get("base_margin", math.nan))
    if not math.isfinite(base_margin):
        raise FormatError("base_margin must be finite")
    trees = [
        _tree_from_doc(tdoc, len(schema), i) for i, tdoc in enumerate(doc.get("trees", []))
    ]
    return TreeEnsemble(
        schema=tuple(schema),
        base_margin=base_margin,
        learning_rate=float(doc.get("learning_rate", 0.0)),
        trees=trees,
        metadata=doc.get("metadata", {}),
    )


def save_model(model: TreeEnsemble, destination: str | Path | IO[str]) -> None:
    """Serialize with full round-trip float precision.

    json emits shortest round-trip reprs, so load(save(m)) reproduces margins
    bit-exactly.
    """
    doc = model_to_doc(model)
    if hasattr(destination, "write"):
        json.dump(doc, destination, indent=1)
    else:
        with Path(destination).open("w") as fh:
            json.dump(doc, fh, indent=1)


def load_model(source: str | Path | IO[str]) -> TreeEnsemble:
    try:
        if hasattr(source, "read"):
            doc = json.load(source)
        else:
            with Path(source).open() as fh:
                doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid model document: {exc}") from None
    return model_from_doc(doc)


def dataset_digest(schema: Iterable[str], values: np.ndarray, labels: np.ndarray) -> str:
    h = hashlib.sha256()
    h.update(",".join(schema).encode())
    h.update(np.ascontiguousarray(values).tobytes())
    h.update(np.ascontiguousarray(labels).tobytes())
    return h.hexdigest()[:16]
