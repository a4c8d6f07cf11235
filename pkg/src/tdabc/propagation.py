"""Label propagation through vertex links.

Label vectors are plain float arrays of length N (one slot per label id).
Training labels are an int array over all vertices with -1 for unlabelled
(test) vertices; a dict vertex -> label is accepted too.
"""
from dataclasses import dataclass

import numpy as np

FALLBACKS = ("none", "escalated_level", "nearest_neighbor")


@dataclass
class LabelAssignment:
    label: int
    scores: np.ndarray
    probabilities: np.ndarray
    was_tie: bool = False
    fallback_used: str = "none"
    link_size: int = 0
    epsilon: float = float("nan")
    coincident: bool = False     # scores count zero-distance neighbours only

    def to_dict(self, vertex=None):
        d = {"chosen_label": int(self.label),
             "scores": [float(s) for s in self.scores],
             "link_size": int(self.link_size),
             "fallback_used": self.fallback_used}
        if vertex is not None:
            d = {"vertex": int(vertex), **d}
        return d


def as_label_array(train_labels, n_vertices=None):
    if isinstance(train_labels, dict):
        n = n_vertices if n_vertices is not None else max(train_labels, default=-1) + 1
        a = np.full(n, -1, dtype=np.int64)
        for v, l in train_labels.items():
            a[v] = l
        return a
    return np.asarray(train_labels, dtype=np.int64)


def _lab(labels, v):
    return labels[v] if v < len(labels) else -1


def association(sigma, train_labels, n_labels: int) -> np.ndarray:
    """Sum of label indicator vectors over the labelled vertices of sigma."""
    labels = as_label_array(train_labels)
    out = np.zeros(n_labels)
    for v in sigma:
        l = _lab(labels, v)
        if l >= 0:
            out[l] += 1.0
    return out


def _link_votes(v, K, labels, n_labels):
    """(weighted votes, coincident votes, link size) over Lk([v]) in K.

    Each link simplex tau votes association(tau) / w(tau), w the filtration
    value of the coface [v] + tau. Cofaces at value 0 (duplicate points) would
    get an infinite weight, so they are tallied separately."""
    lk = K.link((v,))
    w = np.zeros(n_labels)
    z = np.zeros(n_labels)
    for tau, x in lk.items():
        a = None
        for u in tau:
            l = labels[u] if u < len(labels) else -1
            if l >= 0:
                if a is None:
                    a = np.zeros(n_labels)
                a[l] += 1.0
        if a is None:
            continue
        if x > 0:
            w += a / x
        else:
            z += a
    return w, z, len(lk)


def extension(v, K, train_labels, n_labels: int) -> np.ndarray:
    """Weighted label votes of the link of [v] in K (a complex or a view).

    When some labelled vertex coincides with v (coface value 0) those votes
    dominate and the returned vector holds only their counts."""
    if (v,) not in K:
        raise KeyError(f"vertex {v} not in complex")
    labels = as_label_array(train_labels)
    w, z, _ = _link_votes(v, K, labels, n_labels)
    return z if z.any() else w


def _pick(scores, rng):
    m = scores.max()
    cand = np.flatnonzero(scores == m)
    if len(cand) == 1:
        return int(cand[0]), False
    if rng is None:
        return int(cand[0]), True
    return int(cand[rng.integers(len(cand))]), True


def _assignment(scores, rng, **kw):
    lab, tie = _pick(scores, rng)
    tot = scores.sum()
    prob = scores / tot if tot > 0 else np.zeros_like(scores)
    return LabelAssignment(lab, scores, prob, was_tie=tie, **kw)


def label(v, K, train_labels, n_labels: int, rng=None, escalate=True, points=None):
    """Label vertex v from its link in K (a restricted view or a full complex).

    Exact ties are broken uniformly with rng. If no labelled vertex is in the
    link: with escalate, move up to the smallest filtration level at which a
    labelled neighbour of v joins the link (within the parent complex); if v
    has no labelled neighbour at all, use the nearest labelled point in
    `points` (Euclidean)."""
    if (v,) not in K:
        raise KeyError(f"vertex {v} not in complex")
    labels = as_label_array(train_labels)
    eps = getattr(K, "eps", None)
    if eps is None:
        eps = K.max_value()
    w, z, size = _link_votes(v, K, labels, n_labels)
    if z.any():
        return _assignment(z, rng, link_size=size, epsilon=eps, coincident=True)
    if w.any():
        return _assignment(w, rng, link_size=size, epsilon=eps)

    parent = getattr(K, "parent", K)
    if escalate:
        best = np.inf
        for s, x in parent.star((v,)).items():
            if len(s) == 2:
                u = s[0] if s[1] == v else s[1]
                if _lab(labels, u) >= 0 and x < best:
                    best = x
        if best < np.inf:
            K2 = parent.restrict(best)
            w, z, size = _link_votes(v, K2, labels, n_labels)
            sc, co = (z, True) if z.any() else (w, False)
            return _assignment(sc, rng, link_size=size, epsilon=best, coincident=co,
                               fallback_used="escalated_level")
    if points is None:
        raise ValueError(f"vertex {v}: empty link and no points for the nearest-neighbour fallback")
    P = np.asarray(points, dtype=float)
    lab_idx = np.flatnonzero(labels[: len(P)] >= 0)
    if len(lab_idx) == 0:
        raise ValueError("no labelled vertex available")
    d = np.linalg.norm(P[lab_idx] - P[v], axis=1)
    j = lab_idx[int(np.argmin(d))]
    sc = np.zeros(n_labels)
    sc[labels[j]] = 1.0
    return LabelAssignment(int(labels[j]), sc, sc.copy(), False, "nearest_neighbor", size, eps)


def is_useful(sigma, train_set, test_set) -> bool:
    """More training than test vertices in sigma."""
    s = set(sigma)
    return len(s & set(train_set)) > len(s & set(test_set))


def count_useful(K, train_set, test_set):
    """Number of useful simplices per dimension (diagnostic)."""
    tr, te = set(train_set), set(test_set)
    out = {}
    for s in K.simplices:
        if is_useful(s, tr, te):
            out[len(s) - 1] = out.get(len(s) - 1, 0) + 1
    return out
