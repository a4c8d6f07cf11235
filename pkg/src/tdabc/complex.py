"""Filtered simplicial complexes: Vietoris-Rips construction, star/link/closure
queries, sub-level restriction, strong edge collapse and flag expansion.

Simplices are plain sorted tuples of vertex ids. The filtration value xi of a
Rips simplex is its diameter (vertices sit at 0).
"""
import math
from itertools import combinations

import numpy as np
from numba import njit
from scipy.spatial.distance import pdist, squareform

Simplex = tuple


def as_simplex(s) -> Simplex:
    t = tuple(sorted(int(v) for v in s))
    if not t:
        raise ValueError("empty simplex")
    if len(set(t)) != len(t):
        raise ValueError(f"repeated vertex in simplex {s!r}")
    if t[0] < 0:
        raise ValueError(f"negative vertex id in simplex {s!r}")
    return t


def canonical_key(item):
    s, xi = item
    return (xi, len(s), s)


def faces(s: Simplex):
    """Codimension-one faces, in the order obtained by dropping vertex i."""
    if len(s) == 1:
        return []
    return [s[:i] + s[i + 1:] for i in range(len(s))]


def all_faces(s: Simplex):
    """Every non-empty face of s, including s."""
    out = []
    for r in range(1, len(s) + 1):
        out.extend(combinations(s, r))
    return out


class _QueryMixin:
    """star / link / closure on anything exposing `_xi` (dict) and `_cofaces`."""

    def __contains__(self, s):
        return tuple(s) in self._xi

    def __len__(self):
        return len(self._xi)

    def __iter__(self):
        return iter(self.sorted_simplices())

    def filtration(self, s) -> float:
        s = tuple(s)
        if s not in self._xi:
            raise KeyError(f"simplex {s} not in complex")
        return self._xi[s]

    @property
    def simplices(self) -> dict:
        return dict(self._xi)

    def vertices(self):
        return sorted(s[0] for s in self._xi if len(s) == 1)

    def dimension(self) -> int:
        return max((len(s) - 1 for s in self._xi), default=-1)

    def sorted_simplices(self):
        """(simplex, xi) pairs in canonical filtration order."""
        return sorted(self._xi.items(), key=canonical_key)

    def filtration_values(self):
        """E_K: sorted distinct filtration values."""
        return sorted(set(self._xi.values()))

    def max_value(self) -> float:
        return max(self._xi.values()) if self._xi else 0.0

    def n_simplices_by_dim(self):
        out = {}
        for s in self._xi:
            out[len(s) - 1] = out.get(len(s) - 1, 0) + 1
        return [out.get(d, 0) for d in range(self.dimension() + 1)]

    def _check(self, s):
        s = tuple(s)
        if s not in self._xi:
            raise KeyError(f"simplex {s} not in complex")
        return s

    def star(self, s) -> dict:
        """All cofaces of s (s included) with their filtration values."""
        s = self._check(s)
        ss = set(s)
        return {t: self._xi[t] for t in self._cofaces(s[0]) if ss.issubset(t)}

    def link(self, s) -> dict:
        """Link simplices tau = mu \\ s for proper cofaces mu of s, each mapped to
        the smallest xi(mu) producing it."""
        s = self._check(s)
        ss = set(s)
        out = {}
        for mu in self._cofaces(s[0]):
            if len(mu) == len(s) or not ss.issubset(mu):
                continue
            tau = tuple(v for v in mu if v not in ss)
            x = self._xi[mu]
            if tau not in out or x < out[tau]:
                out[tau] = x
        return out

    def closure(self, S) -> set:
        out = set()
        for s in S:
            s = self._check(s)
            out.update(all_faces(s))
        return out

    def dump(self, fh):
        """One line per simplex: 'v0 v1 ... vq xi', canonical order."""
        for s, xi in self.sorted_simplices():
            fh.write(" ".join(str(v) for v in s) + " " + repr(float(xi)) + "\n")


class FilteredComplex(_QueryMixin):
    """Face-closed set of simplices with monotone filtration values."""

    def __init__(self, xi: dict, max_dim=None, max_filtration=None, validate=True, e_max=None):
        self._xi = {tuple(k): float(v) for k, v in xi.items()}
        self.max_dim = self.dimension() if max_dim is None else int(max_dim)
        self.max_filtration = self.max_value() if max_filtration is None else max_filtration
        # largest filtration value of the uncollapsed complex (collapse may drop it)
        self.e_max = self.max_value() if e_max is None else float(e_max)
        self._index = None
        self._sorted = None
        if validate:
            self.validate()

    @classmethod
    def from_simplices(cls, items, max_dim=None, max_filtration=None):
        """items: iterable of (simplex, xi) or bare simplices (xi=0). Faces are
        added with the smallest xi of any coface listed."""
        xi = {}
        for it in items:
            if isinstance(it, tuple) and len(it) == 2 and not isinstance(it[0], (int, np.integer)):
                s, x = as_simplex(it[0]), float(it[1])
            else:
                s, x = as_simplex(it), 0.0
            for f in all_faces(s):
                if f not in xi or x < xi[f]:
                    xi[f] = 0.0 if len(f) == 1 else x
        return cls(xi, max_dim=max_dim, max_filtration=max_filtration)

    def validate(self):
        for s, x in self._xi.items():
            if list(s) != sorted(set(s)):
                raise ValueError(f"simplex {s} is not strictly increasing")
            if not x >= 0 or math.isnan(x):
                raise ValueError(f"bad filtration value {x} on {s}")
            for f in faces(s):
                if f not in self._xi:
                    raise ValueError(f"face {f} of {s} missing")
                if self._xi[f] > x:
                    raise ValueError(f"filtration not monotone at {f} < {s}")

    def sorted_simplices(self):
        if self._sorted is None:
            self._sorted = sorted(self._xi.items(), key=canonical_key)
        return list(self._sorted)

    def _cofaces(self, v):
        if self._index is None:
            idx = {}
            for s in self._xi:
                for u in s:
                    idx.setdefault(u, []).append(s)
            self._index = idx
        return self._index.get(v, ())

    def restrict(self, eps: float) -> "ComplexView":
        return ComplexView(self, eps)

    def skeleton(self, d: int) -> "FilteredComplex":
        return FilteredComplex({s: x for s, x in self._xi.items() if len(s) <= d + 1},
                               max_dim=min(d, self.max_dim), max_filtration=self.max_filtration,
                               validate=False)

    def edges(self):
        """(a, b, xi) for every edge, canonical order."""
        return [(s[0], s[1], x) for s, x in self.sorted_simplices() if len(s) == 2]


class ComplexView(_QueryMixin):
    """Sub-level set {s : xi(s) <= eps} of a parent complex, without copying."""

    def __init__(self, parent: FilteredComplex, eps: float):
        if eps < 0:
            raise ValueError("eps must be >= 0")
        self.parent = parent
        self.eps = float(eps)
        self._cache = None

    @property
    def _xi(self):
        if self._cache is None:
            e = self.eps
            self._cache = {s: x for s, x in self.parent._xi.items() if x <= e}
        return self._cache

    def _cofaces(self, v):
        e = self.eps
        xi = self.parent._xi
        return [s for s in self.parent._cofaces(v) if xi[s] <= e]

    def _check(self, s):
        s = tuple(s)
        x = self.parent._xi.get(s)
        if x is None or x > self.eps:
            raise KeyError(f"simplex {s} not in sub-complex at eps={self.eps}")
        return s

    def __contains__(self, s):
        x = self.parent._xi.get(tuple(s))
        return x is not None and x <= self.eps

    def restrict(self, eps):
        return ComplexView(self.parent, min(eps, self.eps))

    def to_complex(self) -> FilteredComplex:
        return FilteredComplex(self._xi, max_dim=self.parent.max_dim, max_filtration=self.eps,
                               validate=False)


# --- construction -----------------------------------------------------------

def distance_matrix(points) -> np.ndarray:
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if len(P) == 1:
        return np.zeros((1, 1))
    return squareform(pdist(P))


def enclosing_radius(D: np.ndarray) -> float:
    """min_i max_j D[i, j]: above it the Rips complex is a cone on some vertex."""
    if len(D) <= 1:
        return 0.0
    return float(D.max(axis=1).min())


def snap_to_grid(x, step):
    """Round filtration values up to the next multiple of step."""
    return np.ceil(np.asarray(x) / step - 1e-12) * step


def rips_graph(D: np.ndarray, max_filtration: float, grid_step=None) -> FilteredComplex:
    """1-skeleton of the Rips complex from a distance matrix."""
    n = len(D)
    xi = {(i,): 0.0 for i in range(n)}
    iu, ju = np.triu_indices(n, 1)
    w = D[iu, ju]
    if grid_step is not None:
        w = snap_to_grid(w, grid_step)
    keep = w <= max_filtration
    for a, b, x in zip(iu[keep].tolist(), ju[keep].tolist(), w[keep].tolist()):
        xi[(a, b)] = x
    return FilteredComplex(xi, max_dim=1, max_filtration=max_filtration, validate=False)


def build_rips(points, max_dim: int, max_filtration="auto", grid_step=None) -> FilteredComplex:
    """Vietoris-Rips complex up to dimension max_dim and diameter max_filtration.

    max_filtration="auto" uses the enclosing radius. grid_step snaps every
    diameter up to a multiple of the step (coarse epsilon grid); default exact.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    n = len(P)
    if n < 1:
        raise ValueError("need at least one point")
    if max_dim < 1:
        raise ValueError("max_dim must be >= 1")
    if n > 1 and max_dim >= n:
        raise ValueError(f"max_dim={max_dim} must be smaller than the number of points ({n})")
    D = distance_matrix(P)
    if isinstance(max_filtration, str):
        if max_filtration != "auto":
            raise ValueError(f"bad max_filtration {max_filtration!r}")
        max_filtration = enclosing_radius(D)
        if grid_step is not None:
            max_filtration = float(snap_to_grid(max_filtration, grid_step))
    elif not max_filtration > 0:
        raise ValueError("max_filtration must be > 0")
    g = rips_graph(D, max_filtration, grid_step)
    return expansion(g, max_dim)


def expansion(K: FilteredComplex, max_dim: int) -> FilteredComplex:
    """Flag (clique) complex of a 1-skeleton up to dimension max_dim; each
    clique gets the largest xi among its edges."""
    if K.dimension() > 1:
        raise ValueError("expansion expects a complex of dimension <= 1")
    adj = {v: {} for v in K.vertices()}
    for s, x in K._xi.items():
        if len(s) == 2:
            a, b = s
            adj[a][b] = x
            adj[b][a] = x
    xi = dict(K._xi)

    def grow(clique, x, cands):
        # cands: (u, running max edge value from u into clique), u increasing
        for i, (u, wu) in enumerate(cands):
            s = clique + (u,)
            xs = wu if wu > x else x
            xi[s] = xs
            if len(s) <= max_dim:
                nu = adj[u]
                nxt = []
                for w, ww in cands[i + 1:]:
                    e = nu.get(w)
                    if e is not None:
                        nxt.append((w, e if e > ww else ww))
                if nxt:
                    grow(s, xs, nxt)

    if max_dim >= 2:
        for v in sorted(adj):
            cands = sorted((u, w) for u, w in adj[v].items() if u > v)
            for i, (u, wu) in enumerate(cands):
                nu = adj[u]
                nxt = []
                for w, ww in cands[i + 1:]:
                    e = nu.get(w)
                    if e is not None:
                        nxt.append((w, e if e > ww else ww))
                if nxt:
                    grow((v, u), max(xi[(v,)], xi[(u,)], wu), nxt)
    return FilteredComplex(xi, max_dim=max_dim, max_filtration=K.max_filtration, validate=False,
                           e_max=getattr(K, "e_max", None))


# --- strong edge collapse -----------------------------------------------------

@njit(cache=True)
def _dominates(T, w, cur, m, s):
    for i in range(m):
        x = cur[i]
        if x != w and T[w, x] > s:
            return False
    return True


@njit(cache=True)
def _collapse_pass(T, ea, eb):
    """One backward sweep over edges (given in increasing filtration order).

    T is the symmetric time matrix of the current flag filtration (inf = absent,
    0 on the diagonal). Each edge is pushed to the first time at which no
    vertex dominates it, or removed if that never happens. Returns the number
    of edges whose time changed.
    """
    n = T.shape[0]
    tau = np.empty(n)
    nb = np.empty(n, dtype=np.int64)
    cur = np.empty(n, dtype=np.int64)
    changed = 0
    last = -1
    for k in range(len(ea) - 1, -1, -1):
        a = ea[k]
        b = eb[k]
        t = T[a, b]
        # common neighbours of a and b, and the time each joins both
        cnt = 0
        for x in range(n):
            ta = T[a, x]
            tb = T[b, x]
            tx = ta if ta > tb else tb
            tau[x] = tx
            if tx < np.inf and x != a and x != b:
                nb[cnt] = x
                cnt += 1
        s = t
        while True:
            m = 0
            for i in range(cnt):
                if tau[nb[i]] <= s:
                    cur[m] = nb[i]
                    m += 1
            dom = -1
            if last >= 0 and last != a and last != b and tau[last] <= s \
                    and _dominates(T, last, cur, m, s):
                dom = last
            else:
                for i in range(m):
                    w = cur[i]
                    if _dominates(T, w, cur, m, s):
                        dom = w
                        break
            if dom < 0:
                break
            last = dom
            # dom keeps dominating until a common neighbour appears that it misses
            f = np.inf
            for i in range(cnt):
                x = nb[i]
                tx = tau[x]
                if x != dom and tx > s and T[dom, x] > tx and tx < f:
                    f = tx
            s = f
            if s == np.inf:
                break
        if s != t:
            changed += 1
            T[a, b] = s
            T[b, a] = s
    return changed


def collapse_time_matrix(T: np.ndarray, rounds=1, fixpoint=False) -> int:
    """Collapse in place on a symmetric time matrix (inf = no edge).
    Returns the number of sweeps done."""
    r = 0
    while True:
        iu, ju = np.nonzero(np.triu(T < np.inf, 1))
        order = np.lexsort((ju, iu, T[iu, ju]))
        changed = _collapse_pass(T, iu[order].astype(np.int64), ju[order].astype(np.int64))
        r += 1
        if changed == 0 or (not fixpoint and r >= rounds):
            return r


def _graph_from_matrix(T, verts, vxi, max_filtration, e_max):
    xi = {(v,): x for v, x in zip(verts, vxi)}
    iu, ju = np.nonzero(np.triu(T < np.inf, 1))
    for i, j, x in zip(iu.tolist(), ju.tolist(), T[iu, ju].tolist()):
        xi[(verts[i], verts[j])] = x
    return FilteredComplex(xi, max_dim=1, max_filtration=max_filtration, validate=False,
                           e_max=e_max)


def collapse_edges(K: FilteredComplex, rounds=1, fixpoint=False) -> FilteredComplex:
    """Strong edge collapse of a filtered 1-skeleton.

    Edges dominated by a vertex are delayed to the first filtration value at
    which they stop being dominated, or removed. The flag filtration of the
    result has the same persistence diagrams as the input's in every dimension.
    """
    if K.dimension() > 1:
        raise ValueError("collapse_edges expects a complex of dimension <= 1")
    verts = K.vertices()
    pos = {v: i for i, v in enumerate(verts)}
    n = len(verts)
    T = np.full((n, n), np.inf)
    np.fill_diagonal(T, 0.0)
    for s, x in K._xi.items():
        if len(s) == 2:
            i, j = pos[s[0]], pos[s[1]]
            T[i, j] = T[j, i] = x
    collapse_time_matrix(T, rounds, fixpoint)
    return _graph_from_matrix(T, verts, [K._xi[(v,)] for v in verts], K.max_filtration, K.e_max)


def default_collapse_rounds(q: int) -> int:
    return max(1, math.ceil(q / 3))


def build_collapsed_rips(points, max_dim: int, max_filtration="auto", rounds=None,
                         fixpoint=False) -> FilteredComplex:
    """Rips 1-skeleton -> edge collapse -> expansion to max_dim. Same diagrams
    as build_rips, far fewer simplices."""
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    n = len(P)
    if n > 1 and max_dim >= n:
        raise ValueError(f"max_dim={max_dim} must be smaller than the number of points ({n})")
    if max_dim < 1:
        raise ValueError("max_dim must be >= 1")
    D = distance_matrix(P)
    if isinstance(max_filtration, str):
        max_filtration = enclosing_radius(D)
    T = np.where(D <= max_filtration, D, np.inf)
    np.fill_diagonal(T, 0.0)
    e_max = float(T[T < np.inf].max())
    if rounds is None:
        rounds = default_collapse_rounds(max_dim)
    collapse_time_matrix(T, rounds, fixpoint)
    g = _graph_from_matrix(T, list(range(n)), [0.0] * n, max_filtration, e_max)
    return expansion(g, max_dim)


def read_dump(fh) -> FilteredComplex:
    xi = {}
    for line in fh:
        parts = line.split()
        if not parts:
            continue
        xi[tuple(int(v) for v in parts[:-1])] = float(parts[-1])
    return FilteredComplex(xi)
