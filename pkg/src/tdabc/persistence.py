"""Persistent homology over Z/2 and the interval selection strategies.

H0 comes from union-find over the edges; higher dimensions from column
reduction of the boundary matrix (columns stored as python int bitsets) with
the clearing optimisation, processed from the top dimension down.
"""
import math
from dataclasses import dataclass

import numpy as np

INF = math.inf


@dataclass(frozen=True, order=True)
class PersistenceInterval:
    dim: int
    birth: float
    death: float

    def __post_init__(self):
        if self.death < self.birth:
            raise ValueError(f"death {self.death} < birth {self.birth}")

    @property
    def life(self) -> float:
        return self.death - self.birth

    @property
    def is_infinite(self) -> bool:
        return self.death == INF

    @property
    def zero_length(self) -> bool:
        return self.death == self.birth


@dataclass
class DiagramSet:
    diagrams: list       # diagrams[i] = list of intervals of dimension i
    max_eps: float

    def __getitem__(self, i):
        return self.diagrams[i]

    def __len__(self):
        return len(self.diagrams)

    def all_intervals(self):
        return [d for D in self.diagrams for d in D]

    def betti_at(self, eps):
        return [sum(1 for d in D if d.birth <= eps < d.death) for D in self.diagrams]

    def to_csv(self, fh):
        fh.write("dim,birth,death\n")
        for d in self.all_intervals():
            fh.write(f"{d.dim},{_fmt(d.birth)},{_fmt(d.death)}\n")

    @classmethod
    def from_csv(cls, fh, max_eps=None):
        rows = []
        next(fh)
        for line in fh:
            if line.strip():
                a, b, c = line.strip().split(",")
                rows.append(PersistenceInterval(int(a), float(b), float(c)))
        q = max((r.dim for r in rows), default=0)
        D = [[] for _ in range(q + 1)]
        for r in rows:
            D[r.dim].append(r)
        if max_eps is None:
            max_eps = max([r.death for r in rows if r.death != INF] + [r.birth for r in rows] + [0.0])
        return cls(D, max_eps)


def _fmt(x):
    return "inf" if x == INF else repr(float(x))


def compute_persistence(K, top_dimension=False) -> DiagramSet:
    """Diagrams D^0..D^q of a filtered complex (canonical filtration order).

    By default the top dimension q of the complex is left empty: a complex
    truncated at dimension q cannot kill q-cycles, so every q-simplex would
    show up as an infinite class. Pass top_dimension=True to report them anyway.
    Zero-length intervals are kept (see PersistenceInterval.zero_length).
    """
    order = K.sorted_simplices()
    q = max(K.max_dim, K.dimension())
    hmax = q if top_dimension else q - 1
    hmax = max(hmax, 0)
    by_dim = [[] for _ in range(q + 2)]
    for s, x in order:
        by_dim[len(s) - 1].append((s, x))
    index = [{s: i for i, (s, _) in enumerate(L)} for L in by_dim]
    diagrams = [[] for _ in range(q + 1)]

    # H0 by union-find; the component with the later-born root dies
    verts = by_dim[0]
    parent = list(range(len(verts)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    positive_edges = []
    for j, (s, x) in enumerate(by_dim[1]):
        a, b = find(index[0][(s[0],)]), find(index[0][(s[1],)])
        if a == b:
            positive_edges.append(j)
            continue
        if a > b:
            a, b = b, a
        parent[b] = a
        diagrams[0].append(PersistenceInterval(0, verts[b][1], x))
    for i in range(len(verts)):
        if find(i) == i:
            diagrams[0].append(PersistenceInterval(0, verts[i][1], INF))

    # killed[d]: (d-1)-simplex indices that are pivots of reduced d-columns
    killed = {}
    positive = {1: set(positive_edges)}
    for d in range(hmax + 1, 1, -1):
        cols = by_dim[d]
        if not cols:
            killed[d] = set()
            positive[d] = set()
            continue
        face_idx = index[d - 1]
        clear = killed.get(d + 1, set())
        reduced = {}
        pos = set()
        for j, (s, x) in enumerate(cols):
            if j in clear:
                continue
            col = 0
            for i in range(len(s)):
                col ^= 1 << face_idx[s[:i] + s[i + 1:]]
            while col:
                low = col.bit_length() - 1
                other = reduced.get(low)
                if other is None:
                    break
                col ^= other
            if col:
                reduced[low] = col
                b = by_dim[d - 1][low][1]
                diagrams[d - 1].append(PersistenceInterval(d - 1, b, x))
            else:
                pos.add(j)
        killed[d] = set(reduced)
        positive[d] = pos

    # essential classes: positive simplices never killed from above
    for d in range(1, hmax + 1):
        k = killed.get(d + 1, set())
        for j in sorted(positive.get(d, ())):
            if j not in k:
                diagrams[d].append(PersistenceInterval(d, by_dim[d][j][1], INF))
    for D in diagrams:
        D.sort(key=lambda p: (p.birth, p.death))
    return DiagramSet(diagrams, getattr(K, "e_max", None) or K.max_value())


def theta_transform(d: PersistenceInterval, max_eps: float) -> PersistenceInterval:
    if d.death == INF:
        if max_eps < d.birth:
            raise ValueError("max_eps below birth")
        return PersistenceInterval(d.dim, d.birth, float(max_eps))
    return d


def interval_int(d: PersistenceInterval, max_eps: float) -> float:
    return theta_transform(d, max_eps).life


def get_persistence_interval_set(D: DiagramSet, include_zero_length=False):
    """Highest-dimensional non-empty diagram among D^1..D^q, else D^0."""
    def usable(Di):
        return [d for d in Di if include_zero_length or not d.zero_length]

    for i in range(len(D) - 1, 0, -1):
        u = usable(D[i])
        if u:
            return u
    if len(D) and usable(D[0]):
        return usable(D[0])
    raise ValueError("empty diagram set")


STRATEGIES = ("MaxInt", "RandInt", "AvgInt")


def select_interval(D, strategy: str, max_eps: float, rng=None) -> PersistenceInterval:
    """Pick an interval and return it theta-transformed."""
    if not D:
        raise ValueError("empty interval set")
    D = sorted(D, key=lambda p: (p.birth, p.death))
    lives = np.array([interval_int(d, max_eps) for d in D])
    if strategy == "MaxInt":
        i = int(np.flatnonzero(lives == lives.max())[0])
    elif strategy == "AvgInt":
        dev = np.abs(lives - lives.mean())
        i = int(np.flatnonzero(dev == dev.min())[0])
    elif strategy == "RandInt":
        if rng is None:
            raise ValueError("RandInt needs an rng")
        i = int(rng.integers(len(D)))
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    return theta_transform(D[i], max_eps)


def sublevel_value(d: PersistenceInterval, choice: str) -> float:
    if choice == "birth":
        return d.birth
    if choice == "death":
        return d.death
    if choice == "middle":
        return 0.5 * (d.birth + d.death)
    raise ValueError(f"unknown sublevel choice {choice!r}")
