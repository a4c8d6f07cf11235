"""Repeated cross-validation, per-label counts, macro metrics, confusion matrices."""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classifiers import ClassifierConfig, build_model, predict, tdabc_label

log = logging.getLogger(__name__)

METRICS = ("Acc", "Pr", "Re", "TNR", "FPR", "F1", "MCC", "GMean", "CErr")
COUNT_MODES = ("paper", "standard")


@dataclass
class CvPlan:
    fold_fraction: float = 0.10
    repeats: int = 5
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.fold_fraction <= 0.5:
            raise ValueError("fold_fraction: must be in (0, 0.5]")
        if int(self.repeats) < 1:
            raise ValueError("repeats: must be >= 1")
        if int(self.seed) < 0:
            raise ValueError("seed: must be >= 0")

    def n_folds(self, n):
        r = max(1, int(round(self.fold_fraction * n)))
        return math.ceil(n / r)


def make_folds(labels, plan: CvPlan):
    """folds[r][f] = sorted test indices of fold f in repeat r.

    Each repeat shuffles with its own seed. Stratified: classes are shuffled
    separately and laid out one after another, then dealt round-robin, so every
    fold holds each class's share to within one sample."""
    y = np.asarray(labels)
    n = len(y)
    F = plan.n_folds(n)
    if F < 2:
        raise ValueError("need at least two folds")
    out = []
    for r in range(plan.repeats):
        rng = np.random.default_rng([int(plan.seed), r])
        if plan.stratified:
            order = np.concatenate([rng.permutation(np.flatnonzero(y == c)) for c in np.unique(y)])
        else:
            order = rng.permutation(n)
        fold_of = np.empty(n, dtype=np.int64)
        fold_of[order] = np.arange(n) % F
        out.append([np.flatnonzero(fold_of == f) for f in range(F)])
    return out


@dataclass
class CvResult:
    Y: np.ndarray
    Yhat: np.ndarray
    index: np.ndarray             # dataset row of each entry
    folds: list = field(default_factory=list)   # per execution: repeat, fold, sidecar


def _run_fold(args):
    X, y, n_labels, cfg_d, r, f, test_idx = args
    cfg = ClassifierConfig.from_dict(cfg_d)
    mask = np.ones(len(y), bool)
    mask[test_idx] = False
    train = (X[mask], y[mask])
    res = predict(cfg, train, X[test_idx], n_labels=n_labels, stream=(r, f))
    side = {"repeat": r, "fold": f, "n_test": int(len(test_idx))}
    side.update(res.sidecar())
    missing = sorted(set(range(n_labels)) - set(np.unique(y[mask]).tolist()))
    if missing:
        side["missing_train_labels"] = missing
    return res.predicted, side


def _run_shared(model, y, n_labels, cfg, r, f, test_idx):
    labels = np.array(y, dtype=np.int64)
    labels[test_idx] = -1
    res = tdabc_label(model, labels, test_idx, cfg, n_labels, stream=(r, f))
    side = {"repeat": r, "fold": f, "n_test": int(len(test_idx))}
    side.update(res.sidecar())
    missing = sorted(set(range(n_labels)) - set(np.unique(labels[labels >= 0]).tolist()))
    if missing:
        side["missing_train_labels"] = missing
    return res.predicted, side


def repeated_cv(dataset, cfg: ClassifierConfig, plan: CvPlan, jobs=1, share_complex=True,
                model=None) -> CvResult:
    """Run cfg on every fold of every repeat and concatenate (Y, Yhat) in
    (repeat, fold, position) order.

    TDABC builds its complex on train + test, which is the whole dataset for
    every fold; with share_complex the complex and its diagrams are built once
    and only the labelled/unlabelled split changes per fold. Without it each
    fold rebuilds from its own vertex order (same diagrams, collapse may keep
    different but equivalent edges)."""
    y = np.asarray(dataset.labels)
    if len(np.unique(y)) < 2:
        raise ValueError("dataset needs at least two classes")
    folds = make_folds(y, plan)
    X = np.asarray(dataset.points)
    tasks = [(X, y, dataset.n_labels, cfg.to_dict(), r, f, idx)
             for r, fl in enumerate(folds) for f, idx in enumerate(fl)]
    if cfg.is_tdabc and share_complex:
        if model is None:
            model = build_model(X, cfg)
        results = [_run_shared(model, y, dataset.n_labels, cfg, t[4], t[5], t[6]) for t in tasks]
    elif jobs and jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            results = list(ex.map(_run_fold, tasks))
    else:
        results = [_run_fold(t) for t in tasks]
    Y, Yh, I, sides = [], [], [], []
    for t, (pred, side) in zip(tasks, results):
        idx = t[-1]
        if "missing_train_labels" in side:
            log.info("repeat %d fold %d: no training points for labels %s",
                     side["repeat"], side["fold"], side["missing_train_labels"])
        Y.append(y[idx])
        Yh.append(pred)
        I.append(idx)
        sides.append(side)
    return CvResult(np.concatenate(Y), np.concatenate(Yh), np.concatenate(I), sides)


@dataclass
class Counts:
    TP: np.ndarray
    FP: np.ndarray
    TN: np.ndarray
    FN: np.ndarray
    mode: str = "paper"

    @property
    def n_labels(self):
        return len(self.TP)


def per_label_counts(Y, Yhat, labels, mode="paper") -> Counts:
    """Per-label TP/FP/TN/FN.

    paper mode: TN_l counts correct predictions of other labels and FN_l counts
    wrong predictions of other labels, so TP+FP+TN+FN = n for every l.
    standard mode: the usual one-vs-rest counts."""
    Y = np.asarray(Y)
    Yh = np.asarray(Yhat)
    if len(Y) != len(Yh) or len(Y) == 0:
        raise ValueError("Y and Yhat must be non-empty and of equal length")
    if mode not in COUNT_MODES:
        raise ValueError(f"count mode must be one of {COUNT_MODES}")
    labels = list(labels)
    known = set(labels)
    for v in np.unique(np.r_[Y, Yh]):
        if v not in known:
            raise ValueError(f"label {v} not in label set")
    ok = Y == Yh
    tp, fp, tn, fn = [], [], [], []
    for l in labels:
        p = Yh == l
        tp.append(np.sum(p & ok))
        fp.append(np.sum(p & ~ok))
        if mode == "paper":
            tn.append(np.sum(~p & ok))
            fn.append(np.sum(~p & ~ok))
        else:
            t = Y == l
            tn.append(np.sum(~t & ~p))
            fn.append(np.sum(t & ~p))
    a = lambda v: np.array(v, dtype=np.int64)
    return Counts(a(tp), a(fp), a(tn), a(fn), mode)


def _div(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros_like(num)
    nz = den != 0
    out[nz] = num[nz] / den[nz]
    return out


def per_label_metrics(c: Counts) -> dict:
    TP, FP, TN, FN = (x.astype(float) for x in (c.TP, c.FP, c.TN, c.FN))
    re = _div(TP, TP + FN)
    tnr = _div(TN, TN + FP)
    mcc_den = np.sqrt((TP + FP) * (TP + FN) * (TN + FP) * (TN + FN))
    return {
        "Acc": _div(TP + TN, TP + TN + FP + FN),
        "Pr": _div(TP, TP + FP),
        "Re": re,
        "TNR": tnr,
        "FPR": _div(FP, TN + FP),
        "F1": _div(2 * TP, 2 * TP + FP + FN),
        "MCC": _div(TP * TN - FP * FN, mcc_den),
        "GMean": np.sqrt(re * tnr),
    }


@dataclass
class MetricReport:
    counts: Counts
    per_label: dict
    metrics: dict
    count_mode: str

    def to_dict(self):
        return {"count_mode": self.count_mode,
                "metrics": {k: float(v) for k, v in self.metrics.items()},
                "per_label": {k: [float(x) for x in v] for k, v in self.per_label.items()},
                "counts": {k: getattr(self.counts, k).tolist() for k in ("TP", "FP", "TN", "FN")}}


def compute_metrics(counts: Counts, Y, Yhat) -> MetricReport:
    """Macro averages of the per-label metrics (a label whose denominator is
    zero contributes 0) plus CErr, the plain error rate of (Y, Yhat)."""
    pl = per_label_metrics(counts)
    m = {k: float(np.mean(v)) for k, v in pl.items()}
    Y = np.asarray(Y)
    m["CErr"] = float(np.mean(Y != np.asarray(Yhat)))
    return MetricReport(counts, pl, {k: m[k] for k in METRICS}, counts.mode)


def evaluate(Y, Yhat, labels, mode="paper") -> MetricReport:
    return compute_metrics(per_label_counts(Y, Yhat, labels, mode), Y, Yhat)


def confusion_matrix(Y, Yhat, labels) -> np.ndarray:
    labels = list(labels)
    pos = {l: i for i, l in enumerate(labels)}
    M = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for a, b in zip(np.asarray(Y).tolist(), np.asarray(Yhat).tolist()):
        M[pos[a], pos[b]] += 1
    return M


def counts_from_confusion(M) -> Counts:
    """Standard-mode counts read off a confusion matrix."""
    M = np.asarray(M, dtype=np.int64)
    tp = np.diag(M)
    fp = M.sum(0) - tp
    fn = M.sum(1) - tp
    tn = M.sum() - tp - fp - fn
    return Counts(tp, fp, tn, fn, "standard")
