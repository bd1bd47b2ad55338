"""Random forest of Gini decision trees, seeded for exact reproducibility.

Trees grow to purity (a node splits while it holds >= 2 samples of mixed
class and some candidate feature still separates them), choose thresholds at
midpoints between consecutive distinct values, and examine floor(sqrt(d))
randomly drawn candidate features per split. Each tree gets its own RNG
derived from (seed, tree index), so results do not depend on fit order or
thread count.
"""

from dataclasses import dataclass

import numpy as np


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode" = None
    right: "TreeNode" = None
    # leaf payload: counts of (negative, positive) training rows
    n_neg: int = 0
    n_pos: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini(n_neg: int, n_pos: int) -> float:
    n = n_neg + n_pos
    if n == 0:
        return 0.0
    p = n_pos / n
    return 2.0 * p * (1.0 - p)


def _best_split(x, y, feature_ids):
    """Best (feature, threshold, weighted_gini) over the candidate features."""
    n = len(y)
    parent = _gini(int(np.sum(y < 0)), int(np.sum(y > 0)))
    best = (None, 0.0, parent)
    for f in feature_ids:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        ys = y[order]
        cuts = np.nonzero(xs[1:] != xs[:-1])[0] + 1  # split before these ranks
        if len(cuts) == 0:
            continue
        pos_prefix = np.cumsum(ys > 0)
        total_pos = pos_prefix[-1]
        left_n = cuts.astype(float)
        left_pos = pos_prefix[cuts - 1].astype(float)
        right_n = n - left_n
        right_pos = total_pos - left_pos
        p_left = left_pos / left_n
        p_right = right_pos / right_n
        g = (left_n * 2.0 * p_left * (1.0 - p_left) + right_n * 2.0 * p_right * (1.0 - p_right)) / n
        at = int(np.argmin(g))
        if g[at] < best[2] - 1e-15:
            best = (f, (xs[cuts[at] - 1] + xs[cuts[at]]) / 2.0, float(g[at]))
    return best


def _grow(x, y, rng, n_candidates):
    node = TreeNode(n_neg=int(np.sum(y < 0)), n_pos=int(np.sum(y > 0)))
    if node.n_neg == 0 or node.n_pos == 0 or len(y) < 2:
        return node
    d = x.shape[1]
    feature_ids = np.sort(rng.choice(d, size=min(n_candidates, d), replace=False))
    feature, threshold, _ = _best_split(x, y, feature_ids)
    if feature is None:
        return node
    mask = x[:, feature] <= threshold
    if not mask.any() or mask.all():
        return node
    node.feature = int(feature)
    node.threshold = float(threshold)
    node.left = _grow(x[mask], y[mask], rng, n_candidates)
    node.right = _grow(x[~mask], y[~mask], rng, n_candidates)
    return node


def _tree_vote(node: TreeNode, row) -> int:
    while not node.is_leaf:
        node = node.left if row[node.feature] <= node.threshold else node.right
    # conservative tie rule: a split-vote leaf counts as the negative class
    return 1 if node.n_pos > node.n_neg else -1


class RandomForest:
    """Bagged Gini trees for +1/-1 labels; vote fraction doubles as score."""

    def __init__(self, n_estimators: int, seed: int):
        self.n_estimators = int(n_estimators)
        self.seed = int(seed)
        self.trees: list[TreeNode] = []

    def fit(self, x: np.ndarray, y: np.ndarray):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=int)
        if len(set(y.tolist())) < 2:
            raise ValueError("random forest requires both classes in training data")
        n, d = x.shape
        n_candidates = max(1, int(np.sqrt(d)))
        self.trees = []
        for t in range(self.n_estimators):
            rng = np.random.default_rng([self.seed, t])
            idx = rng.integers(0, n, size=n)
            self.trees.append(_grow(x[idx], y[idx], rng, n_candidates))
        return self

    def vote_fraction(self, x: np.ndarray) -> np.ndarray:
        """Fraction of trees voting the positive class, per row."""
        x = np.asarray(x, dtype=float)
        votes = np.zeros(len(x))
        for tree in self.trees:
            votes += [1.0 if _tree_vote(tree, row) > 0 else 0.0 for row in x]
        return votes / len(self.trees)

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Majority vote; exact ties resolve to the negative class."""
        frac = self.vote_fraction(x)
        return np.where(frac > 0.5, 1, -1)


def tree_to_dict(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"n_neg": node.n_neg, "n_pos": node.n_pos}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "n_neg": node.n_neg,
        "n_pos": node.n_pos,
        "left": tree_to_dict(node.left),
        "right": tree_to_dict(node.right),
    }


def tree_from_dict(payload: dict) -> TreeNode:
    node = TreeNode(n_neg=int(payload["n_neg"]), n_pos=int(payload["n_pos"]))
    if "feature" in payload:
        node.feature = int(payload["feature"])
        node.threshold = float(payload["threshold"])
        node.left = tree_from_dict(payload["left"])
        node.right = tree_from_dict(payload["right"])
    return node
