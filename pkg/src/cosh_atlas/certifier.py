"""Separating loops of certified grid points.

A grid of cell centres is classified; around an uncertified basepoint we take
its 4-connected component of uncertified cells. If that component stays away
from the grid edge, the certified cells hugging its outer boundary form a
closed 8-connected cycle that winds once around the basepoint. Every vertex of
that cycle carries its own fast-escape certificate.

Cell ``(i, j)`` of a :class:`GridSpec` has centre
``center + (-S + (j + 0.5) * step) + 1j * (S - (i + 0.5) * step)``: rows run
top to bottom, columns left to right, row-major flattening.
"""

from __future__ import annotations

import hashlib
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import dynamics as dyn
from .classifier import ClassifyParams, Mode, Status, classify_many
from .jsonio import canonical_bytes


MIN_CYCLE_RESOLUTION = 16


class BasepointCertifiedError(ValueError):
    """The basepoint cell is itself certified, so it cannot be separated."""


@dataclass(frozen=True)
class GridSpec:
    center: complex = 0j
    half_width: float = 4 * math.pi
    resolution: int = 1024

    def __post_init__(self):
        object.__setattr__(self, "center", complex(self.center))
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "resolution", int(self.resolution))
        if self.resolution < 1:
            raise ValueError("resolution must be positive")
        if not math.isfinite(self.half_width):
            raise ValueError("half_width must be finite")
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")

    @property
    def step(self) -> float:
        return 2 * self.half_width / self.resolution

    def axis(self) -> tuple[np.ndarray, np.ndarray]:
        """Real parts of columns and imaginary parts of rows."""
        k = np.arange(self.resolution) + 0.5
        re = self.center.real - self.half_width + k * self.step
        im = self.center.imag + self.half_width - k * self.step
        return re, im

    def centers(self) -> np.ndarray:
        re, im = self.axis()
        return re[None, :] + 1j * im[:, None]

    def cell_center(self, i: int, j: int) -> complex:
        s = self.step
        return self.center + complex(-self.half_width + (j + 0.5) * s, self.half_width - (i + 0.5) * s)

    def locate(self, z: complex) -> tuple[int, int]:
        """Cell containing ``z``; raises if ``z`` is outside the grid."""
        z = complex(z) - self.center
        j = math.floor((z.real + self.half_width) / self.step)
        i = math.floor((self.half_width - z.imag) / self.step)
        if not (0 <= i < self.resolution and 0 <= j < self.resolution):
            raise ValueError(f"point {z + self.center} lies outside the grid")
        return i, j

    def to_json(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "half_width": self.half_width,
            "resolution": self.resolution,
        }

    @classmethod
    def from_json(cls, d: dict) -> "GridSpec":
        return cls(complex(*d["center"]), d["half_width"], d["resolution"])


@dataclass
class MarkedField:
    grid: GridSpec
    params: ClassifyParams
    function: dyn.FunctionSpec
    status: np.ndarray  # (res, res) int8, Status codes
    delay: np.ndarray
    depth: np.ndarray
    steps: np.ndarray

    @property
    def certified(self) -> np.ndarray:
        return self.status == Status.FAST

    def field_hash(self) -> str:
        h = hashlib.sha256()
        h.update(canonical_bytes({"grid": self.grid.to_json(), "params": self.params.to_json(),
                                  "function": self.function.describe()}))
        for arr in (self.status, self.delay, self.depth, self.steps):
            h.update(np.ascontiguousarray(arr, dtype="<i8").tobytes())
        return h.hexdigest()


def _threads(threads: int | None) -> int:
    if threads:
        return max(1, int(threads))
    env = os.environ.get("ATLAS_THREADS")
    return max(1, int(env)) if env else 1


def mark_grid(
    f: dyn.FunctionSpec, grid: GridSpec, params: ClassifyParams, threads: int | None = None, tile_rows: int = 32
) -> MarkedField:
    """Classify every cell centre. Tiles of rows go to a worker pool; results
    are placed by tile index, so the field does not depend on scheduling."""
    Z = grid.centers()
    res = grid.resolution
    tiles = [(a, min(a + tile_rows, res)) for a in range(0, res, tile_rows)]

    def work(t):
        a, b = t
        return classify_many(f, Z[a:b], params)

    n = _threads(threads)
    if n == 1:
        parts = [work(t) for t in tiles]
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            parts = list(ex.map(work, tiles))
    cat = lambda name: np.concatenate([getattr(p, name) for p in parts]).reshape(res, res)
    return MarkedField(grid, params, f, cat("status"), cat("delay"), cat("depth"), cat("steps"))


# ---------------------------------------------------------------- winding


def winding_number(polyline, point: complex) -> int:
    """Turns of the closed polyline around ``point``.

    Sums the signed angle of each segment as seen from ``point``; the total
    must be within 0.1 of a multiple of ``2*pi``.
    """
    pts = [complex(p) for p in polyline]
    if len(pts) < 2:
        raise ValueError("polyline needs at least two vertices")
    if pts[0] != pts[-1]:
        pts.append(pts[0])
    point = complex(point)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        u, v = a - point, b - point
        seg = b - a
        # reject a point on the segment
        if abs(seg) > 0:
            t = ((point - a) * seg.conjugate()).real / abs(seg) ** 2
            if 0 <= t <= 1 and abs(a + t * seg - point) <= 1e-12 * max(1.0, abs(seg)):
                raise ValueError("point lies on the polyline")
        elif u == 0:
            raise ValueError("point lies on the polyline")
        total += math.atan2((u.conjugate() * v).imag, (u.conjugate() * v).real)
    w = total / (2 * math.pi)
    n = round(w)
    if abs(w - n) >= 0.1:
        raise ValueError(f"winding residual too large: {w}")
    return int(n)


# ---------------------------------------------------------------- cycles


@dataclass(frozen=True)
class LoopCertificate:
    function: dyn.FunctionSpec
    params: ClassifyParams
    grid: GridSpec
    basepoint: complex
    vertices: tuple[complex, ...]
    winding: int
    inner_radius: float
    per_vertex: tuple[tuple[int, int, str], ...]
    field_hash: str

    def to_json(self) -> dict:
        return {
            "function": self.function.describe(),
            "params": self.params.to_json(),
            "grid": self.grid.to_json(),
            "basepoint": [self.basepoint.real, self.basepoint.imag],
            "vertices": [[v.real, v.imag] for v in self.vertices],
            "winding": self.winding,
            "inner_radius": self.inner_radius,
            "per_vertex": [{"delay": d, "depth": n, "mode": m} for d, n, m in self.per_vertex],
            "field_hash": self.field_hash,
        }

    @classmethod
    def from_json(cls, d: dict) -> "LoopCertificate":
        fn = d["function"]
        p = d["params"]
        return cls(
            function=dyn.FunctionSpec(complex(*fn["lambda"]), fn["q"]),
            params=ClassifyParams(p["R"], p["N_depth"], p["K_delay"], p["maxiter"], p["eps_attract"], p["mode"]),
            grid=GridSpec.from_json(d["grid"]),
            basepoint=complex(*d["basepoint"]),
            vertices=tuple(complex(*v) for v in d["vertices"]),
            winding=d["winding"],
            inner_radius=d["inner_radius"],
            per_vertex=tuple((v["delay"], v["depth"], v["mode"]) for v in d["per_vertex"]),
            field_hash=d["field_hash"],
        )

    def digest(self) -> str:
        return hashlib.sha256(canonical_bytes(self.to_json())).hexdigest()


@dataclass(frozen=True)
class NotFound:
    reason: str
    candidate: LoopCertificate | None = field(default=None, compare=False)


_FOUR = ((-1, 0), (1, 0), (0, -1), (0, 1))


def basepoint_component(certified: np.ndarray, cell: tuple[int, int]) -> np.ndarray:
    """Mask of the 4-connected uncertified component containing ``cell``."""
    labels, _ = ndimage.label(~certified, structure=ndimage.generate_binary_structure(2, 1))
    lab = labels[cell]
    return labels == lab


def _filled(comp: np.ndarray) -> np.ndarray:
    """Component plus everything it encloses: the complement of the
    8-connected outside region."""
    padded = np.pad(~comp, 1, constant_values=True)
    labels, _ = ndimage.label(padded, structure=np.ones((3, 3), dtype=int))
    outside = labels == labels[0, 0]
    return ~outside[1:-1, 1:-1]


def _trace_outer(F: np.ndarray, certified: np.ndarray) -> list[tuple[int, int]]:
    """Certified cells around the 4-connected hole-free region ``F``, in walking
    order (closed: the first cell is repeated at the end).

    Boundary edges of ``F`` are walked with ``F`` on one fixed side. The cell
    across each edge joins the cycle; at a convex corner the diagonal cell
    joins too when it is certified, so a single cell gets its full 8-ring.
    Where two ``F`` cells touch only at a corner the walk turns around the
    cell it is following, consistent with 4-connectivity of ``F``.
    """
    rows, cols = F.shape
    inside = lambda i, j: 0 <= i < rows and 0 <= j < cols and bool(F[i, j])
    # vertex (a, b) is the top-left corner of cell (a, b); each edge stores its outer cell
    edges: dict[tuple[int, int], list[tuple[tuple[int, int], tuple[int, int]]]] = {}

    def add(start, end, outer):
        edges.setdefault(start, []).append((end, outer))

    for i, j in zip(*np.nonzero(F)):
        i, j = int(i), int(j)
        if not inside(i - 1, j):
            add((i, j + 1), (i, j), (i - 1, j))
        if not inside(i + 1, j):
            add((i + 1, j), (i + 1, j + 1), (i + 1, j))
        if not inside(i, j - 1):
            add((i, j), (i + 1, j), (i, j - 1))
        if not inside(i, j + 1):
            add((i + 1, j + 1), (i, j + 1), (i, j + 1))
    if not edges:
        return []
    total = sum(len(v) for v in edges.values())
    start = min(edges)
    end, outer = edges[start][0]
    used = {(start, end)}
    walk = [outer]
    prev_dir = (end[0] - start[0], end[1] - start[1])
    while True:
        nxt = edges[end]
        if len(nxt) == 1:
            choice = nxt[0]
        else:
            turn = (-prev_dir[1], prev_dir[0])
            choice = next(e for e in nxt if (e[0][0] - end[0], e[0][1] - end[1]) == turn)
        new_end, outer = choice
        d = (new_end[0] - end[0], new_end[1] - end[1])
        if d != prev_dir and outer != walk[-1]:
            # convex corner: the block around this vertex has one cell left over
            a, b = end
            block = {(a - 1, b - 1), (a - 1, b), (a, b - 1), (a, b)}
            rest = [c for c in block - {walk[-1], outer} if not inside(*c)]
            if len(rest) == 1 and certified[rest[0]]:
                walk.append(rest[0])
        if (end, new_end) in used:
            break
        used.add((end, new_end))
        walk.append(outer)
        prev_dir = d
        end = new_end
    if len(used) != total:
        raise RuntimeError("boundary of a filled 4-connected region must be a single loop")
    seq = [walk[0]]
    for c in walk[1:]:
        if c != seq[-1]:
            seq.append(c)
    while len(seq) > 1 and seq[-1] == seq[0]:
        seq.pop()
    seq.append(seq[0])
    return seq


def find_separating_cycle(field: MarkedField, basepoint: complex, min_radius: float = 0.0):
    """Closed cycle of certified cells around ``basepoint`` or :class:`NotFound`."""
    grid = field.grid
    if grid.resolution < MIN_CYCLE_RESOLUTION:
        raise ValueError(f"cycle search needs resolution >= {MIN_CYCLE_RESOLUTION}")
    if not 0 <= min_radius < grid.half_width / 2:
        raise ValueError("min_radius must lie in [0, S/2)")
    cell = grid.locate(basepoint)
    cert = field.certified
    if cert[cell]:
        raise BasepointCertifiedError(
            f"basepoint {basepoint} sits in a certified cell; pick an uncertified basepoint"
        )
    comp = basepoint_component(cert, cell)
    if comp[0, :].any() or comp[-1, :].any() or comp[:, 0].any() or comp[:, -1].any():
        return NotFound("component reaches the grid boundary")
    F = _filled(comp)
    cycle = _trace_outer(F, cert)
    if not all(cert[c] for c in cycle):
        raise RuntimeError("outer boundary contains an uncertified cell")
    verts = [grid.cell_center(i, j) for i, j in cycle]
    basepoint = complex(basepoint)
    w = winding_number(verts, basepoint)
    if w == -1:
        verts.reverse()
        cycle.reverse()
        w = 1
    if w != 1:
        raise RuntimeError(f"traced boundary has winding {w}")
    inner = min(abs(v - basepoint) for v in verts)
    per_vertex = tuple(
        (int(field.delay[c]), int(field.depth[c]), field.params.mode.value) for c in cycle
    )
    cert_ = LoopCertificate(
        function=field.function,
        params=field.params,
        grid=grid,
        basepoint=basepoint,
        vertices=tuple(verts),
        winding=w,
        inner_radius=inner,
        per_vertex=per_vertex,
        field_hash=field.field_hash(),
    )
    if inner < min_radius:
        return NotFound(f"loop inner radius {inner:.6g} below required {min_radius:.6g}", cert_)
    return cert_


def verify_certificate(f: dyn.FunctionSpec, cert: LoopCertificate, stricter: ClassifyParams) -> bool:
    """Independent audit: closure, adjacency, winding and a fresh
    classification of every vertex at ``stricter`` parameters."""
    v = list(cert.vertices)
    if len(v) < 4 or v[0] != v[-1]:
        return False
    if stricter.N_depth < cert.params.N_depth:
        raise ValueError("stricter params must not reduce the depth")
    step = cert.grid.step
    tol = 1e-9 * step
    for a, b in zip(v[:-1], v[1:]):
        d = b - a
        if abs(d) == 0:
            return False
        if abs(d.real) > step + tol or abs(d.imag) > step + tol:
            return False
        for comp in (d.real, d.imag):
            if not (abs(comp) <= tol or abs(abs(comp) - step) <= tol):
                return False
    try:
        if winding_number(v, cert.basepoint) != 1:
            return False
    except ValueError:
        return False
    if min(abs(x - cert.basepoint) for x in v) + 1e-12 < cert.inner_radius:
        return False
    bv = classify_many(f, np.array(v[:-1]), stricter)
    return bool(np.all(bv.status == Status.FAST))
