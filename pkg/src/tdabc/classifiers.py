"""TDABC variants and the k-NN / weighted k-NN baselines."""
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from . import complex as cx
from .persistence import (compute_persistence, get_persistence_interval_set, select_interval,
                          sublevel_value)
from .propagation import LabelAssignment, label

KINDS = ("TDABC-R", "TDABC-M", "TDABC-A", "kNN", "wkNN")
STRATEGY_OF = {"TDABC-R": "RandInt", "TDABC-M": "MaxInt", "TDABC-A": "AvgInt"}
SUBLEVELS = ("birth", "middle", "death")


@dataclass
class ClassifierConfig:
    kind: str = "TDABC-A"
    q: int = 3
    sublevel_choice: str = "death"
    k: int = 15
    seed: int = 0
    use_edge_collapse: bool = True
    max_filtration: object = "auto"
    collapse_rounds: object = None      # None -> ceil(q/3)
    collapse_fixpoint: bool = False
    include_zero_length: bool = False
    knn_tie: str = "smallest"           # or "random"
    label_complex: str = "collapsed"    # "rips": label on the uncollapsed complex

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind: unknown classifier {self.kind!r} (choose from {KINDS})")
        if self.is_tdabc:
            if int(self.q) < 1:
                raise ValueError("q: must be >= 1")
            if self.sublevel_choice not in SUBLEVELS:
                raise ValueError(f"sublevel_choice: must be one of {SUBLEVELS}")
            mf = self.max_filtration
            if not (mf == "auto" or (isinstance(mf, (int, float)) and mf > 0)):
                raise ValueError("max_filtration: must be 'auto' or > 0")
            if self.label_complex not in ("collapsed", "rips"):
                raise ValueError("label_complex: must be 'collapsed' or 'rips'")
        else:
            if int(self.k) < 1:
                raise ValueError("k: must be >= 1")
            if self.knn_tie not in ("smallest", "random"):
                raise ValueError("knn_tie: must be 'smallest' or 'random'")
        if int(self.seed) < 0:
            raise ValueError("seed: must be >= 0")

    @property
    def is_tdabc(self):
        return self.kind in STRATEGY_OF

    @property
    def strategy(self):
        return STRATEGY_OF.get(self.kind)

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        bad = set(d) - known
        if bad:
            raise ValueError(f"{sorted(bad)[0]}: unknown classifier setting")
        return cls(**d)

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


@dataclass
class PredictionResult:
    predicted: np.ndarray
    assignments: list = field(default_factory=list)
    chosen_interval: object = None
    chosen_epsilon: float = None
    info: dict = field(default_factory=dict)

    def sidecar(self):
        d = {"chosen_interval": None, "chosen_epsilon": self.chosen_epsilon}
        if self.chosen_interval is not None:
            c = self.chosen_interval
            d["chosen_interval"] = {"dim": c.dim, "birth": c.birth, "death": c.death}
        d.update(self.info)
        return d


def _split(train, test):
    if hasattr(train, "points"):
        Xtr, ytr, n_labels = train.points, train.labels, train.n_labels
    else:
        Xtr, ytr = train
        ytr = np.asarray(ytr, dtype=np.int64)
        n_labels = int(ytr.max()) + 1 if len(ytr) else 0
    Xtr = np.asarray(Xtr, dtype=float)
    Xte = np.asarray(test, dtype=float)
    if Xtr.ndim == 1:
        Xtr = Xtr[:, None]
    if Xte.ndim == 1:
        Xte = Xte[:, None]
    if len(Xtr) == 0:
        raise ValueError("empty training set")
    if len(Xte) == 0:
        raise ValueError("empty test set")
    return Xtr, np.asarray(ytr, dtype=np.int64), Xte, n_labels


@dataclass
class TdaModel:
    """Complex + diagrams over a fixed point set, reusable for any split of
    those points into labelled and unlabelled vertices."""
    points: np.ndarray
    complex: object
    diagrams: object
    label_complex: object


def build_model(X, cfg: ClassifierConfig) -> TdaModel:
    X = np.asarray(X, dtype=float)
    q = int(cfg.q)
    if q >= len(X):
        raise ValueError(f"q={q} must be smaller than the number of points ({len(X)})")
    if cfg.use_edge_collapse:
        K = cx.build_collapsed_rips(X, q, cfg.max_filtration, rounds=cfg.collapse_rounds,
                                    fixpoint=cfg.collapse_fixpoint)
    else:
        K = cx.build_rips(X, q, cfg.max_filtration)
    dg = compute_persistence(K)
    KL = K
    if cfg.use_edge_collapse and cfg.label_complex == "rips":
        # same diagrams, hence the same eps; only the voting complex changes
        KL = cx.build_rips(X, q, cfg.max_filtration)
    return TdaModel(X, K, dg, KL)


def tdabc_label(model: TdaModel, labels, test_vertices, cfg: ClassifierConfig, n_labels,
                stream=()) -> PredictionResult:
    """Pick the sub-level from the diagrams and label test_vertices.
    labels: label per vertex, -1 for unlabelled."""
    dg = model.diagrams
    D = get_persistence_interval_set(dg, include_zero_length=cfg.include_zero_length)
    base = [int(cfg.seed), *map(int, stream)]
    # 1 << 20 keeps the interval stream apart from the per-vertex streams
    d = select_interval(D, cfg.strategy, dg.max_eps, np.random.default_rng(base + [1 << 20]))
    eps = sublevel_value(d, cfg.sublevel_choice)
    Ki = model.label_complex.restrict(eps)
    labels = np.asarray(labels, dtype=np.int64)
    assigns = [label(int(v), Ki, labels, n_labels, rng=np.random.default_rng(base + [int(v)]),
                     points=model.points)
               for v in test_vertices]
    pred = np.array([a.label for a in assigns], dtype=np.int64)
    fb = {f: sum(a.fallback_used == f for a in assigns) for f in ("escalated_level", "nearest_neighbor")}
    info = {"n_simplices": len(model.complex), "max_eps": dg.max_eps, "interval_dim": d.dim,
            "ties": int(sum(a.was_tie for a in assigns)), "fallbacks": fb}
    return PredictionResult(pred, assigns, d, float(eps), info)


def tdabc_predict(train, test, cfg: ClassifierConfig, n_labels=None, stream=()):
    """Transductive TDABC: one complex over train + test, one sub-level chosen
    from the persistence diagrams, then link voting for every test vertex.

    train is a LabeledDataset or (points, labels); vertices 0..m-1 are the
    training points, m.. the test points. `stream` extends the seed for the
    random streams (e.g. (repeat, fold))."""
    if not cfg.is_tdabc:
        raise ValueError(f"{cfg.kind} is not a TDABC variant")
    Xtr, ytr, Xte, nl = _split(train, test)
    n_labels = n_labels or nl
    m, t = len(Xtr), len(Xte)
    model = build_model(np.vstack([Xtr, Xte]), cfg)
    labels = np.r_[ytr, np.full(t, -1, dtype=np.int64)]
    return tdabc_label(model, labels, range(m, m + t), cfg, n_labels, stream)


def _neighbours(Xtr, Xte, k):
    if not 1 <= k <= len(Xtr):
        raise ValueError(f"k={k} must be in [1, {len(Xtr)}]")
    D = cdist(Xte, Xtr)
    # stable sort: equal distances resolved by training index
    idx = np.argsort(D, axis=1, kind="stable")[:, :k]
    return idx, np.take_along_axis(D, idx, axis=1)


def _vote(scores, tie, rng):
    m = scores.max()
    cand = np.flatnonzero(scores == m)
    if len(cand) > 1 and tie == "random":
        return int(cand[rng.integers(len(cand))]), True
    return int(cand[0]), len(cand) > 1


def knn_predict(train, test, k: int, n_labels=None, tie="smallest", seed=0, stream=()):
    """Majority vote of the k nearest training points (Euclidean)."""
    Xtr, ytr, Xte, nl = _split(train, test)
    n_labels = n_labels or nl
    idx, _ = _neighbours(Xtr, Xte, k)
    rng = np.random.default_rng([int(seed), *map(int, stream)])
    pred, assigns = [], []
    for row in idx:
        sc = np.bincount(ytr[row], minlength=n_labels).astype(float)
        lab, was_tie = _vote(sc, tie, rng)
        pred.append(lab)
        assigns.append(LabelAssignment(lab, sc, sc / sc.sum(), was_tie, "none", k))
    return PredictionResult(np.array(pred, dtype=np.int64), assigns)


def wknn_predict(train, test, k: int, n_labels=None, tie="smallest", seed=0, stream=()):
    """k nearest neighbours voting with weight 1/distance; neighbours at
    distance 0 outvote everything else."""
    Xtr, ytr, Xte, nl = _split(train, test)
    n_labels = n_labels or nl
    idx, dist = _neighbours(Xtr, Xte, k)
    rng = np.random.default_rng([int(seed), *map(int, stream)])
    pred, assigns = [], []
    for row, dr in zip(idx, dist):
        sc = np.zeros(n_labels)
        zero = dr == 0
        if zero.any():
            np.add.at(sc, ytr[row[zero]], 1.0)
        else:
            np.add.at(sc, ytr[row], 1.0 / dr)
        lab, was_tie = _vote(sc, tie, rng)
        pred.append(lab)
        assigns.append(LabelAssignment(lab, sc, sc / sc.sum(), was_tie, "none", k,
                                       coincident=bool(zero.any())))
    return PredictionResult(np.array(pred, dtype=np.int64), assigns)


def predict(cfg: ClassifierConfig, train, test, n_labels=None, stream=()):
    if cfg.is_tdabc:
        return tdabc_predict(train, test, cfg, n_labels, stream)
    f = knn_predict if cfg.kind == "kNN" else wknn_predict
    return f(train, test, int(cfg.k), n_labels, cfg.knn_tie, cfg.seed, stream)
