"""Finite graph geometry: d-dimensional discrete tori and centered boxes.

Sites carry two representations.  Canonical sites are what callers see:
integers in {0..n-1} for the torus in d=1, tuples of such integers for
higher d, and Z^d coordinates for boxes (an n-box in dimension 1 is the
integer interval {-floor((n-1)/2), ..., floor(n/2)}).  Internally every
site is a flat index in {0..n^d-1}, row-major over coordinates, and the
engine works exclusively with indices.

The exterior of a box is a single absorbing sink; it shows up as the
constant EXTERIOR in neighbor lists and as index -1 in neighbor tables.
"""

from dataclasses import dataclass, field
import itertools

import numpy as np

EXTERIOR = "exterior"


def box_range(k: int):
    """Coordinate range of the centered k-box in one dimension."""
    if k < 0:
        raise ValueError("box side must be non-negative")
    lo = -((k - 1) // 2) if k > 0 else 0
    return lo, lo + k - 1


def box_lambda(k: int, d: int):
    """All sites of the centered box with side k in dimension d, as a set."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    if k <= 0:
        return set()
    lo, hi = box_range(k)
    rng = range(lo, hi + 1)
    if d == 1:
        return set(rng)
    return set(itertools.product(rng, repeat=d))


def box_boundaries(k: int, d: int):
    """Internal and external boundary of the centered k-box.

    Internal boundary is the k-box minus the (k-2)-box (the whole box when
    k <= 2).  External boundary is every outside site adjacent to the box.
    """
    inner = box_lambda(k, d)
    core = box_lambda(k - 2, d)
    internal = inner - core
    external = set()
    lo, hi = box_range(k)
    for site in internal:
        c = (site,) if d == 1 else site
        for axis in range(d):
            for step in (1, -1):
                w = list(c)
                w[axis] += step
                if not (lo <= w[axis] <= hi):
                    external.add(w[0] if d == 1 else tuple(w))
    return internal, external


class Topology:
    """A discrete torus (Z/nZ)^d or centered box of side n in Z^d.

    Parameters
    ----------
    kind : "torus" or "box"
    n : side length, n >= 1
    d : dimension, d >= 1

    Neighbor order is fixed: +e1, -e1, +e2, -e2, ..., +ed, -ed.  On a box,
    steps leaving the box yield EXTERIOR (index -1 in `neighbor_table`).
    """

    def __init__(self, kind: str, n: int, d: int):
        if kind not in ("torus", "box"):
            raise ValueError(f"unknown topology kind {kind!r}")
        if n < 1 or d < 1:
            raise ValueError("need n >= 1 and d >= 1")
        self.kind = kind
        self.n = int(n)
        self.d = int(d)
        self.n_sites = self.n**self.d
        self._shape = (self.n,) * self.d
        self._lo = 0 if kind == "torus" else box_range(n)[0]
        self._nbr_table = None
        self._coord_cache = None

    # -- constructors / serialization

    @classmethod
    def torus(cls, n, d):
        return cls("torus", n, d)

    @classmethod
    def box(cls, n, d):
        return cls("box", n, d)

    @classmethod
    def from_config(cls, cfg: dict):
        return cls(cfg["kind"], int(cfg["n"]), int(cfg["d"]))

    def to_config(self) -> dict:
        return {"kind": self.kind, "n": self.n, "d": self.d}

    def __repr__(self):
        return f"Topology({self.kind!r}, n={self.n}, d={self.d})"

    def __eq__(self, other):
        return (
            isinstance(other, Topology)
            and (self.kind, self.n, self.d) == (other.kind, other.n, other.d)
        )

    def __hash__(self):
        return hash((self.kind, self.n, self.d))

    # -- site representation

    def _grid_coords(self, site):
        """Canonical site -> coordinates in {0..n-1}^d, validating range."""
        if self.d == 1 and not isinstance(site, tuple):
            site = (site,)
        if not isinstance(site, tuple) or len(site) != self.d:
            raise ValueError(f"site {site!r} does not have dimension {self.d}")
        out = []
        for c in site:
            c = int(c) - self._lo
            if not 0 <= c < self.n:
                raise ValueError(f"site {site!r} outside the lattice")
            out.append(c)
        return tuple(out)

    def index(self, site) -> int:
        """Flat row-major index of a canonical site (accepts an index too)."""
        if isinstance(site, (int, np.integer)) and self.d > 1:
            i = int(site)
            if not 0 <= i < self.n_sites:
                raise ValueError(f"site index {i} out of range")
            return i
        g = self._grid_coords(site)
        i = 0
        for c in g:
            i = i * self.n + c
        return i

    def site(self, i: int):
        """Canonical site for a flat index."""
        i = int(i)
        if not 0 <= i < self.n_sites:
            raise ValueError(f"site index {i} out of range")
        coords = []
        for _ in range(self.d):
            coords.append(i % self.n + self._lo)
            i //= self.n
        coords.reverse()
        return coords[0] if self.d == 1 else tuple(coords)

    def sites(self):
        return [self.site(i) for i in range(self.n_sites)]

    def indices(self, sites) -> np.ndarray:
        return np.asarray(sorted(self.index(s) for s in sites), dtype=np.int64)

    # -- structure

    @property
    def coords_array(self) -> np.ndarray:
        """(n_sites, d) array of grid coordinates in {0..n-1}."""
        if self._coord_cache is None:
            idx = np.arange(self.n_sites)
            cols = []
            for axis in range(self.d - 1, -1, -1):
                cols.append(idx % self.n)
                idx = idx // self.n
            self._coord_cache = np.stack(cols[::-1], axis=1).astype(np.int64)
        return self._coord_cache

    @property
    def neighbor_table(self) -> np.ndarray:
        """(n_sites, 2d) index table, -1 marking the box exterior."""
        if self._nbr_table is None:
            g = self.coords_array
            n = self.n
            tbl = np.empty((self.n_sites, 2 * self.d), dtype=np.int64)
            strides = np.array(
                [n ** (self.d - 1 - a) for a in range(self.d)], dtype=np.int64
            )
            base = g @ strides
            for axis in range(self.d):
                for j, step in enumerate((1, -1)):
                    c = g[:, axis] + step
                    if self.kind == "torus":
                        cm = c % n
                        tbl[:, 2 * axis + j] = base + (cm - g[:, axis]) * strides[axis]
                    else:
                        inside = (0 <= c) & (c < n)
                        col = base + step * strides[axis]
                        col[~inside] = -1
                        tbl[:, 2 * axis + j] = col
            self._nbr_table = tbl
        return self._nbr_table

    def neighbors(self, site):
        """Neighbor list of a canonical site in the fixed direction order."""
        i = self.index(site)
        out = []
        for j in self.neighbor_table[i]:
            out.append(EXTERIOR if j < 0 else self.site(j))
        return out

    def degree(self) -> int:
        return 2 * self.d

    def distance(self, x, y) -> int:
        """Graph distance between two in-lattice sites.

        Sum over axes of the per-axis distance: min(|delta|, n - |delta|)
        on the torus, |delta| on a box.
        """
        gx = self._grid_coords(x if not isinstance(x, (int, np.integer)) or self.d == 1 else self.site(x))
        gy = self._grid_coords(y if not isinstance(y, (int, np.integer)) or self.d == 1 else self.site(y))
        total = 0
        for a, b in zip(gx, gy):
            delta = abs(a - b)
            if self.kind == "torus":
                delta = min(delta, self.n - delta)
            total += delta
        return total

    def distance_from(self, i: int) -> np.ndarray:
        """Vector of distances from flat index i to every site."""
        g = self.coords_array
        delta = np.abs(g - g[i])
        if self.kind == "torus":
            delta = np.minimum(delta, self.n - delta)
        return delta.sum(axis=1)

    def project(self, zsite):
        """Project a Z^d site onto the torus (coordinates mod n)."""
        if self.kind != "torus":
            raise ValueError("projection targets a torus")
        if self.d == 1 and not isinstance(zsite, tuple):
            zsite = (zsite,)
        c = tuple(int(v) % self.n for v in zsite)
        return c[0] if self.d == 1 else c


@dataclass(frozen=True)
class BoxFamily:
    """Four nested boxes projected onto a torus, with their boundary rings.

    boxes[j] holds the torus indices of the projected box with side
    n - j*step, j = 0 (whole torus) through 3 (tiny box).  internal[j] and
    external[j] are the projected internal/external boundaries of box j.
    """

    topology: Topology
    a: float
    step: int
    sides: tuple
    boxes: tuple
    internal: tuple
    external: tuple

    def summary(self) -> dict:
        return {
            "n": self.topology.n,
            "d": self.topology.d,
            "a": self.a,
            "step": self.step,
            "sides": list(self.sides),
            "sizes": [len(b) for b in self.boxes],
        }


def nested_boxes(n: int, d: int, a: float) -> BoxFamily:
    """Build the four-level nested box family on the n-torus.

    Requires 0 < a < 1/3 so the boxes nest with room to spare; the tiny
    box side n - 3*floor(a*n) must stay positive.
    """
    if not 0 < a < 1 / 3:
        raise ValueError("need 0 < a < 1/3")
    t = Topology.torus(n, d)
    step = int(np.floor(a * n))
    sides = tuple(n - j * step for j in range(4))
    if sides[3] < 1:
        raise ValueError(f"tiny box side {sides[3]} < 1; shrink a or grow n")
    boxes, internal, external = [], [], []
    for k in sides:
        box = frozenset(t.index(t.project(s)) for s in box_lambda(k, d))
        bi, be = box_boundaries(k, d)
        internal.append(frozenset(t.index(t.project(s)) for s in bi))
        external.append(frozenset(t.index(t.project(s)) for s in be))
        boxes.append(box)
    return BoxFamily(
        topology=t,
        a=float(a),
        step=step,
        sides=sides,
        boxes=tuple(boxes),
        internal=tuple(internal),
        external=tuple(external),
    )
