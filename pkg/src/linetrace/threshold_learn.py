"""Per-color HSV threshold learning with a depth-capped CART decision tree.

A tree is fit on labeled (h, s, v) pixels (line vs. non-line), then compiled
into an `HsvThreshold`: a disjunction of axis-comparison conjunctions (the
root-to-leaf paths that predict "line"). Thresholds are stored as small JSON
files, one per track color.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

AXES = ("h", "s", "v")
LINE, NON_LINE = 1, 0


class ThresholdParseError(ValueError):
    """Raised when a threshold file is malformed; message names the bad field."""


@dataclass
class LabeledPixelSet:
    """Pixels (n, 3) in [0,1]^3 with labels (n,) in {0: non-line, 1: line}."""

    pixels: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.pixels.ndim != 2 or self.pixels.shape[1] != 3:
            raise ValueError(f"pixels must be (n, 3), got {self.pixels.shape}")
        if self.labels.shape != (self.pixels.shape[0],):
            raise ValueError("pixels and labels must have equal length")

    def __len__(self) -> int:
        return len(self.labels)


@dataclass
class Leaf:
    label: int
    counts: tuple[int, int]  # (non-line, line)


@dataclass
class Split:
    axis: int  # 0=h, 1=s, 2=v
    threshold: float
    left: "Leaf | Split"  # pixels with value < threshold
    right: "Leaf | Split"  # pixels with value >= threshold


@dataclass
class DecisionTree:
    """Binary CART tree of depth <= max_depth over the three HSV axes."""

    root: Leaf | Split
    max_depth: int = 2

    def classify(self, pixel) -> int:
        node = self.root
        while isinstance(node, Split):
            node = node.left if pixel[node.axis] < node.threshold else node.right
        return node.label

    def depth(self) -> int:
        def d(node):
            if isinstance(node, Leaf):
                return 0
            return 1 + max(d(node.left), d(node.right))

        return d(self.root)


def gini(counts) -> float:
    """Gini impurity 1 - sum(p_i^2) of a (count_a, count_b) pair."""
    a, b = counts
    if a < 0 or b < 0:
        raise ValueError("counts must be non-negative")
    n = a + b
    if n == 0:
        raise ValueError("gini of an empty node is undefined")
    pa, pb = a / n, b / n
    return 1.0 - (pa * pa + pb * pb)


def _weighted_child_gini(nl_line, nl_non, nr_line, nr_non, n):
    nl = nl_line + nl_non
    nr = nr_line + nr_non
    gl = 1.0 - ((nl_line / nl) ** 2 + (nl_non / nl) ** 2)
    gr = 1.0 - ((nr_line / nr) ** 2 + (nr_non / nr) ** 2)
    return (nl / n) * gl + (nr / n) * gr


def best_split(data: LabeledPixelSet):
    """Exhaustive best CART split.

    Candidates are midpoints between consecutive distinct sorted values on
    each axis; the split minimizing weighted child Gini wins. Ties break by
    axis order (h, s, v), then by smaller threshold. Returns
    (axis, threshold, weighted_impurity), or None if the input is
    single-class or no axis has two distinct values.
    """
    pixels, labels = data.pixels, data.labels
    n = len(labels)
    if n == 0 or labels.min() == labels.max():
        return None

    best = None
    for axis in range(3):
        vals = pixels[:, axis]
        order = np.argsort(vals, kind="stable")
        sv = vals[order]
        sl = labels[order]
        distinct = np.nonzero(sv[:-1] != sv[1:])[0]  # split after these positions
        if len(distinct) == 0:
            continue
        cum_line = np.cumsum(sl == LINE)
        total_line = cum_line[-1]
        nl_line = cum_line[distinct].astype(np.float64)
        nl = (distinct + 1).astype(np.float64)
        nl_non = nl - nl_line
        nr_line = total_line - nl_line
        nr = n - nl
        nr_non = nr - nr_line
        imp = _weighted_child_gini(nl_line, nl_non, nr_line, nr_non, float(n))
        k = int(np.argmin(imp))  # first minimum = smallest threshold
        thr = (sv[distinct[k]] + sv[distinct[k] + 1]) / 2.0
        if best is None or imp[k] < best[2]:
            best = (axis, float(thr), float(imp[k]))
    return best


def fit_tree(data: LabeledPixelSet, max_depth: int = 2) -> DecisionTree:
    """Recursive CART fit; stops at max_depth, purity, or no impurity reduction.

    Leaf labels are the majority class; an exact tie labels the leaf
    non-line.
    """
    if len(data) == 0:
        raise ValueError("cannot fit a tree on an empty pixel set")
    if not (np.any(data.labels == LINE) and np.any(data.labels == NON_LINE)):
        raise ValueError("training data must contain both classes")

    def leaf_of(labels):
        n_line = int(np.sum(labels == LINE))
        n_non = len(labels) - n_line
        return Leaf(label=LINE if n_line > n_non else NON_LINE, counts=(n_non, n_line))

    def build(pixels, labels, depth):
        n_line = int(np.sum(labels == LINE))
        n_non = len(labels) - n_line
        if depth >= max_depth or n_line == 0 or n_non == 0:
            return leaf_of(labels)
        found = best_split(LabeledPixelSet(pixels, labels))
        if found is None:
            return leaf_of(labels)
        axis, thr, imp = found
        if imp >= gini((n_non, n_line)):  # no impurity reduction
            return leaf_of(labels)
        go_left = pixels[:, axis] < thr
        return Split(
            axis=axis,
            threshold=thr,
            left=build(pixels[go_left], labels[go_left], depth + 1),
            right=build(pixels[~go_left], labels[~go_left], depth + 1),
        )

    return DecisionTree(root=build(data.pixels, data.labels, 0), max_depth=max_depth)


def evaluate(tree: DecisionTree, data: LabeledPixelSet) -> float:
    """Fraction of correctly classified pixels."""
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty pixel set")
    pred = np.array([tree.classify(p) for p in data.pixels])
    return float(np.mean(pred == data.labels))


@dataclass(frozen=True)
class Conjunct:
    axis: str  # "h" | "s" | "v"
    cmp: str  # "lt" | "ge"
    value: float


@dataclass
class HsvThreshold:
    """Disjunction of conjunctions over HSV axes; the compiled form of a tree.

    A pixel matches iff it satisfies every conjunct of at least one clause.
    An empty clause list never matches.
    """

    name: str
    clauses: list[list[Conjunct]] = field(default_factory=list)

    def evaluate(self, h: float, s: float, v: float) -> bool:
        return bool(self.evaluate_array(np.float64(h), np.float64(s), np.float64(v)))

    def evaluate_array(self, h, s, v):
        """Vectorized predicate over equally-shaped h, s, v arrays."""
        comp = {"h": h, "s": s, "v": v}
        out = np.zeros(np.broadcast(h, s, v).shape, dtype=bool)
        for clause in self.clauses:
            hit = np.ones_like(out)
            for c in clause:
                x = comp[c.axis]
                hit &= (x < c.value) if c.cmp == "lt" else (x >= c.value)
            out |= hit
        return out


def to_threshold(tree: DecisionTree, name: str) -> HsvThreshold:
    """Compile the tree's line-predicting root-to-leaf paths into clauses.

    Evaluating the result on any pixel equals walking the tree. Warns and
    returns an always-false predicate when the tree has no line leaf.
    """
    clauses: list[list[Conjunct]] = []

    def walk(node, path):
        if isinstance(node, Leaf):
            if node.label == LINE:
                clauses.append(list(path))
            return
        walk(node.left, path + [Conjunct(AXES[node.axis], "lt", node.threshold)])
        walk(node.right, path + [Conjunct(AXES[node.axis], "ge", node.threshold)])

    walk(tree.root, [])
    if not clauses:
        warnings.warn(f"tree for {name!r} has no line leaf; predicate is always false")
    return HsvThreshold(name=name, clauses=clauses)


def save_threshold(thr: HsvThreshold, path) -> None:
    doc = {
        "name": thr.name,
        "clauses": [
            [{"axis": c.axis, "cmp": c.cmp, "value": c.value} for c in clause]
            for clause in thr.clauses
        ],
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_threshold(path) -> HsvThreshold:
    with open(path, encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise ThresholdParseError(f"{path}: invalid JSON at line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict) or "name" not in doc or "clauses" not in doc:
        raise ThresholdParseError(f"{path}: expected object with 'name' and 'clauses'")
    clauses = []
    for i, clause in enumerate(doc["clauses"]):
        conj = []
        for j, c in enumerate(clause):
            where = f"{path}: clause {i}, conjunct {j}"
            if not isinstance(c, dict):
                raise ThresholdParseError(f"{where}: expected object")
            axis, cmp_, value = c.get("axis"), c.get("cmp"), c.get("value")
            if axis not in AXES:
                raise ThresholdParseError(f"{where}: axis must be one of {AXES}, got {axis!r}")
            if cmp_ not in ("lt", "ge"):
                raise ThresholdParseError(f"{where}: cmp must be 'lt' or 'ge', got {cmp_!r}")
            if not isinstance(value, (int, float)):
                raise ThresholdParseError(f"{where}: value must be a number, got {value!r}")
            conj.append(Conjunct(axis, cmp_, float(value)))
        clauses.append(conj)
    return HsvThreshold(name=str(doc["name"]), clauses=clauses)
