"""Labelled point sets: synthetic generators, CSV I/O and JSON manifests."""
import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np


@dataclass
class LabeledDataset:
    points: np.ndarray          # (m, n) float
    labels: np.ndarray          # (m,) int, dense ids 0..N-1
    label_names: list = None
    name: str = "dataset"
    meta: dict = field(default_factory=dict)   # generator name, params, seed, extras

    def __post_init__(self):
        P = np.asarray(self.points, dtype=float)
        if P.ndim == 1:
            P = P[:, None]
        y = np.asarray(self.labels, dtype=np.int64)
        if len(P) == 0 or P.shape[1] < 1:
            raise ValueError("dataset needs at least one point of dimension >= 1")
        if len(P) != len(y):
            raise ValueError(f"{len(P)} points but {len(y)} labels")
        if not np.isfinite(P).all():
            raise ValueError("points must be finite")
        if self.label_names is None:
            self.label_names = [str(i) for i in range(int(y.max()) + 1)]
        self.label_names = [str(s) for s in self.label_names]
        if y.min() < 0 or y.max() >= len(self.label_names):
            raise ValueError("label id out of range")
        P.setflags(write=False)
        y.setflags(write=False)
        self.points, self.labels = P, y

    def __len__(self):
        return len(self.labels)

    @property
    def dims(self):
        return self.points.shape[1]

    @property
    def n_labels(self):
        return len(self.label_names)

    def class_sizes(self):
        return np.bincount(self.labels, minlength=self.n_labels).tolist()

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.points[idx], self.labels[idx], list(self.label_names),
                              self.name, {})

    def manifest(self):
        return {
            "name": self.name,
            "dims": int(self.dims),
            "classes": self.n_labels,
            "sizes": self.class_sizes(),
            "seed": self.meta.get("seed"),
            "generator": self.meta.get("generator", "csv"),
            "params": self.meta.get("params", {}),
        }


@dataclass
class NormalMixtureSpec:
    dims: int
    sizes: list
    means: list
    stdevs: object      # scalar or per-class list

    def validate(self):
        if not self.sizes:
            raise ValueError("sizes: must not be empty")
        if len(self.sizes) != len(self.means):
            raise ValueError("means: need one mean per class")
        if any(int(s) < 1 for s in self.sizes):
            raise ValueError("sizes: every class needs at least one sample")
        if int(self.dims) < 1:
            raise ValueError("dims: must be >= 1")
        sd = self.stdev_list()
        if len(sd) != len(self.sizes):
            raise ValueError("stdevs: need a scalar or one value per class")
        if any(not s >= 0 for s in sd):
            raise ValueError("stdevs: must be >= 0")

    def stdev_list(self):
        if np.ndim(self.stdevs) == 0:
            return [float(self.stdevs)] * len(self.sizes)
        return [float(s) for s in self.stdevs]

    def to_dict(self):
        return {"dims": int(self.dims), "sizes": [int(s) for s in self.sizes],
                "means": [float(m) for m in self.means],
                "stdevs": self.stdevs if np.ndim(self.stdevs) == 0 else list(self.stdevs)}


def _noise_sd(noise, base_scale, stdev):
    if stdev is not None:
        if stdev < 0:
            raise ValueError("stdev must be >= 0")
        return float(stdev)
    if noise < 0:
        raise ValueError("noise must be >= 0")
    return noise / 100.0 * base_scale


def gen_circles(n_samples: int, noise: float, seed: int, factor=0.5, stdev=None):
    """Outer circle radius 1 (label 0), inner circle radius `factor` (label 1).
    Gaussian noise sd = noise/100 unless `stdev` is given."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    if not 0 < factor < 1:
        raise ValueError("factor must be in (0, 1)")
    sd = _noise_sd(noise, 1.0, stdev)
    rng = np.random.default_rng(seed)
    n_out = n_samples // 2
    n_in = n_samples - n_out
    a_out = 2 * np.pi * np.arange(n_out) / n_out
    a_in = 2 * np.pi * np.arange(n_in) / n_in
    P = np.vstack([np.c_[np.cos(a_out), np.sin(a_out)],
                   factor * np.c_[np.cos(a_in), np.sin(a_in)]])
    y = np.r_[np.zeros(n_out, int), np.ones(n_in, int)]
    if sd > 0:
        P = P + rng.normal(0.0, sd, P.shape)
    return LabeledDataset(P, y, ["0", "1"], "circles",
                          {"generator": "circles", "seed": seed,
                           "params": {"n_samples": n_samples, "noise": noise, "factor": factor,
                                      "stdev": sd}})


def gen_moons(n_samples: int, noise: float, seed: int, stdev=None):
    """Upper unit half circle (label 0) and the lower one shifted by (1, 0.5)
    (label 1). Arc parameter t = pi (i + 1/2) / m."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    sd = _noise_sd(noise, 1.0, stdev)
    rng = np.random.default_rng(seed)
    n_out = n_samples // 2
    n_in = n_samples - n_out
    t0 = np.pi * (np.arange(n_out) + 0.5) / n_out
    t1 = np.pi * (np.arange(n_in) + 0.5) / n_in
    P = np.vstack([np.c_[np.cos(t0), np.sin(t0)],
                   np.c_[1 - np.cos(t1), 0.5 - np.sin(t1)]])
    y = np.r_[np.zeros(n_out, int), np.ones(n_in, int)]
    if sd > 0:
        P = P + rng.normal(0.0, sd, P.shape)
    return LabeledDataset(P, y, ["0", "1"], "moon",
                          {"generator": "moons", "seed": seed,
                           "params": {"n_samples": n_samples, "noise": noise, "stdev": sd}})


SWISSROLL_T = (1.5 * np.pi, 4.5 * np.pi)


def gen_swissroll(n_samples: int, n_classes: int, noise: float, seed: int, stdev=None,
                  height=21.0):
    """Roll x = t cos t, z = t sin t, y uniform in [0, height). Class c holds the
    c-th of n_classes equal bands of t. Noise sd = noise/100 * 10."""
    if n_classes < 1 or n_samples < n_classes or n_samples % n_classes:
        raise ValueError("n_samples must be a positive multiple of n_classes")
    sd = _noise_sd(noise, 10.0, stdev)
    rng = np.random.default_rng(seed)
    per = n_samples // n_classes
    lo, hi = SWISSROLL_T
    w = (hi - lo) / n_classes
    t = np.concatenate([np.sort(lo + w * (c + rng.random(per))) for c in range(n_classes)])
    h = height * rng.random(n_samples)
    P = np.c_[t * np.cos(t), h, t * np.sin(t)]
    y = np.repeat(np.arange(n_classes), per)
    if sd > 0:
        P = P + rng.normal(0.0, sd, P.shape)
    return LabeledDataset(P, y, [str(i) for i in range(n_classes)], "swissroll",
                          {"generator": "swissroll", "seed": seed, "t": t.tolist(),
                           "params": {"n_samples": n_samples, "n_classes": n_classes,
                                      "noise": noise, "stdev": sd, "height": height}})


def gen_normal_mixture(spec: NormalMixtureSpec, seed: int, name="normdist"):
    """Class c: sizes[c] points with coordinates iid Normal(means[c], sd[c])."""
    spec.validate()
    rng = np.random.default_rng(seed)
    sd = spec.stdev_list()
    blocks = [rng.normal(float(m), s, (int(k), int(spec.dims)))
              for k, m, s in zip(spec.sizes, spec.means, sd)]
    y = np.repeat(np.arange(len(spec.sizes)), [int(k) for k in spec.sizes])
    return LabeledDataset(np.vstack(blocks), y, [str(i) for i in range(len(spec.sizes))], name,
                          {"generator": "normal_mixture", "seed": seed, "params": spec.to_dict()})


def fibonacci_sphere(k: int) -> np.ndarray:
    """k roughly evenly spread unit vectors."""
    i = np.arange(k) + 0.5
    z = 1 - 2 * i / k
    r = np.sqrt(np.clip(1 - z * z, 0, None))
    phi = np.pi * (3 - math.sqrt(5)) * np.arange(k)
    return np.c_[r * np.cos(phi), r * np.sin(phi), z]


def sphere_centers(spec: NormalMixtureSpec) -> np.ndarray:
    """Class c is centred at means[c] * u_c, u_c the c-th Fibonacci direction,
    so equal means put every centre on one sphere of that radius."""
    return np.asarray(spec.means, dtype=float)[:, None] * fibonacci_sphere(len(spec.sizes))


def gen_sphere(spec: NormalMixtureSpec, seed: int, name="sphere"):
    """3-D Gaussian blobs (sd per class) around the sphere_centers."""
    spec.validate()
    if int(spec.dims) != 3:
        raise ValueError("dims: sphere datasets are 3-dimensional")
    rng = np.random.default_rng(seed)
    C = sphere_centers(spec)
    sd = spec.stdev_list()
    blocks = [C[c] + rng.normal(0.0, sd[c], (int(k), 3)) for c, k in enumerate(spec.sizes)]
    y = np.repeat(np.arange(len(spec.sizes)), [int(k) for k in spec.sizes])
    return LabeledDataset(np.vstack(blocks), y, [str(i) for i in range(len(spec.sizes))], name,
                          {"generator": "sphere", "seed": seed, "params": spec.to_dict()})


# settings of the five synthetic benchmark sets
PRESETS = {
    "circles": {"generator": "circles", "n_samples": 50, "noise": 3.0, "factor": 0.8},
    "moon": {"generator": "moons", "n_samples": 200, "noise": 10.0},
    "swissroll": {"generator": "swissroll", "n_samples": 300, "n_classes": 6, "noise": 10.0},
    "normdist": {"generator": "normal_mixture", "dims": 350, "sizes": [60, 10, 50, 100, 80],
                 "means": [0, 0.3, 0.18, 0.67, 0], "stdevs": 0.486},
    "sphere": {"generator": "sphere", "dims": 3, "sizes": [500, 100, 25, 16, 12],
               "means": [0.3] * 5, "stdevs": 0.147},
}

# q used for each benchmark set in the reference experiments
DEFAULT_Q = {"circles": 8, "moon": 3, "swissroll": 6, "normdist": 7, "sphere": 8,
             "iris": 8, "wine": 6, "breast_cancer": 4}

_GEN_KEYS = {
    "circles": {"n_samples", "noise", "factor", "stdev"},
    "moons": {"n_samples", "noise", "stdev"},
    "swissroll": {"n_samples", "n_classes", "noise", "stdev", "height"},
    "normal_mixture": {"dims", "sizes", "means", "stdevs"},
    "sphere": {"dims", "sizes", "means", "stdevs"},
}


def generate(spec: dict, seed: int) -> LabeledDataset:
    """Build a dataset from a dict {"generator": ..., **params} or {"preset": name, **overrides}."""
    spec = dict(spec)
    name = spec.pop("name", None)
    if "preset" in spec:
        p = spec.pop("preset")
        if p not in PRESETS:
            raise ValueError(f"preset: unknown preset {p!r} (choose from {sorted(PRESETS)})")
        base = dict(PRESETS[p])
        base.update(spec)
        spec = base
        name = name or p
    gen = spec.pop("generator", None)
    if gen not in _GEN_KEYS:
        raise ValueError(f"generator: unknown generator {gen!r}")
    extra = set(spec) - _GEN_KEYS[gen]
    if extra:
        raise ValueError(f"{sorted(extra)[0]}: unknown parameter for generator {gen!r}")
    try:
        if gen == "circles":
            ds = gen_circles(seed=seed, **spec)
        elif gen == "moons":
            ds = gen_moons(seed=seed, **spec)
        elif gen == "swissroll":
            ds = gen_swissroll(seed=seed, **spec)
        else:
            ms = NormalMixtureSpec(spec.get("dims", 3), spec.get("sizes", []),
                                   spec.get("means", []), spec.get("stdevs", 1.0))
            ds = gen_normal_mixture(ms, seed) if gen == "normal_mixture" else gen_sphere(ms, seed)
    except TypeError as e:
        raise ValueError(f"bad parameters for generator {gen!r}: {e}") from None
    if name:
        ds.name = name
    return ds


def load_csv(path, label_column=-1, delimiter=",", header="auto", name=None) -> LabeledDataset:
    """Numeric features plus one label column; labels re-encoded to 0..N-1 in
    order of first appearance. header="auto" treats a first row with a
    non-numeric feature cell as a header."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: empty file")
    width = len(rows[0])
    names = None
    skipped = 0
    if isinstance(label_column, str) and not _is_int(label_column):
        names = rows[0]
        if label_column not in names:
            raise ValueError(f"{path}: no column named {label_column!r}")
        lc = names.index(label_column)
        rows = rows[1:]
        skipped = 1
    else:
        lc = int(label_column) % width
        if header is True or (header == "auto" and not _numeric_row(rows[0], lc)):
            names = rows[0]
            rows = rows[1:]
            skipped = 1
    if not rows:
        raise ValueError(f"{path}: no data rows")
    cols = [c for c in range(width) if c != lc]
    if names is None:
        names = [f"col{c}" for c in range(width)]
    X = np.empty((len(rows), len(cols)))
    raw = []
    first_row = 1 + skipped
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(f"{path}: row {i + first_row} has {len(r)} fields, expected {width}")
        for j, c in enumerate(cols):
            try:
                X[i, j] = float(r[c])
            except ValueError:
                raise ValueError(f"{path}: non-numeric value {r[c]!r} in column "
                                 f"{names[c]!r} (row {i + first_row})") from None
        raw.append(r[lc].strip())
    if not np.isfinite(X).all():
        raise ValueError(f"{path}: non-finite feature value")
    label_names = list(dict.fromkeys(raw))
    ids = {s: i for i, s in enumerate(label_names)}
    y = np.array([ids[s] for s in raw])
    return LabeledDataset(X, y, label_names, name or os.path.splitext(os.path.basename(path))[0],
                          {"generator": "csv", "params": {"path": str(path)}})


def save_csv(ds: LabeledDataset, path, delimiter=","):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        w.writerow([f"x{j}" for j in range(ds.dims)] + ["label"])
        for x, y in zip(ds.points, ds.labels):
            w.writerow([repr(float(v)) for v in x] + [ds.label_names[y]])


def save_manifest(ds: LabeledDataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ds.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _is_int(s):
    try:
        int(s)
        return True
    except (TypeError, ValueError):
        return False


def _numeric_row(row, lc):
    for c, v in enumerate(row):
        if c == lc:
            continue
        try:
            float(v)
        except ValueError:
            return False
    return True
