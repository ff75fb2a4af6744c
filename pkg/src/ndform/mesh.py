"""Structured triangulations of axis-aligned rectangles with edge topology."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class MeshError(ValueError):
    """Raised for invalid mesh construction input."""


@dataclass(frozen=True)
class EdgeRecord:
    vertices: tuple[int, int]
    plus_triangle: int
    minus_triangle: int | None
    normal: tuple[float, float]
    length: float

    @property
    def is_boundary(self) -> bool:
        return self.minus_triangle is None


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation stored as flat numpy arrays.

    Edge arrays are indexed by edge number. ``edge_minus`` holds -1 on
    boundary edges. ``edge_normal`` is the unit normal pointing out of the
    plus triangle. ``tri_edges[t, l]`` is the edge opposite local vertex l.
    """

    vertices: np.ndarray          # (V, 2)
    triangles: np.ndarray         # (T, 3), counterclockwise
    edge_vertices: np.ndarray     # (E, 2), sorted ascending
    edge_plus: np.ndarray         # (E,)
    edge_minus: np.ndarray        # (E,)
    edge_normal: np.ndarray       # (E, 2)
    edge_length: np.ndarray       # (E,)
    tri_edges: np.ndarray         # (T, 3)
    domain: tuple[float, float, float, float]
    n: int | None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vertices)

    @property
    def is_boundary_edge(self) -> np.ndarray:
        return self.edge_minus < 0

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_minus >= 0)

    @property
    def boundary_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_minus < 0)

    @property
    def h_max(self) -> float:
        return float(self.edge_length.max())

    @property
    def h_min(self) -> float:
        return float(self.edge_length.min())

    @property
    def area(self) -> float:
        x0, x1, y0, y1 = self.domain
        return (x1 - x0) * (y1 - y0)

    def edge(self, e: int) -> EdgeRecord:
        minus = int(self.edge_minus[e])
        return EdgeRecord(
            vertices=(int(self.edge_vertices[e, 0]), int(self.edge_vertices[e, 1])),
            plus_triangle=int(self.edge_plus[e]),
            minus_triangle=None if minus < 0 else minus,
            normal=(float(self.edge_normal[e, 0]), float(self.edge_normal[e, 1])),
            length=float(self.edge_length[e]),
        )

    @property
    def edges(self) -> list[EdgeRecord]:
        return [self.edge(e) for e in range(self.n_edges)]

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def locate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Find containing triangles and reference coordinates of points.

        Uses the structured grid layout, so it is O(1) per point. Points on
        shared edges are assigned to one of the adjacent triangles.
        """
        if self.n is None:
            raise NotImplementedError("point location needs a structured mesh")
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        x0, x1, y0, y1 = self.domain
        n = self.n
        sx = (pts[:, 0] - x0) / (x1 - x0) * n
        sy = (pts[:, 1] - y0) / (y1 - y0) * n
        i = np.clip(np.floor(sx).astype(int), 0, n - 1)
        j = np.clip(np.floor(sy).astype(int), 0, n - 1)
        fx = sx - i
        fy = sy - j
        upper = fy > fx
        tri = 2 * (j * n + i) + upper.astype(int)
        ref = np.empty_like(pts)
        # lower triangle (v00, v10, v11): x = fx - fy, y = fy
        # upper triangle (v00, v11, v01): x = fx, y = fy - fx
        ref[:, 0] = np.where(upper, fx, fx - fy)
        ref[:, 1] = np.where(upper, fy - fx, fy)
        return tri, ref

    def export_text(self, path: str | Path) -> None:
        lines = [f"vertices {self.n_vertices} triangles {self.n_triangles}"]
        lines += [f"{x!r} {y!r}" for x, y in self.vertices.tolist()]
        lines += [f"{a} {b} {c}" for a, b, c in self.triangles.tolist()]
        Path(path).write_text("\n".join(lines) + "\n")


def _edge_topology(triangles: np.ndarray, vertices: np.ndarray):
    nt = len(triangles)
    # local edge l is opposite local vertex l
    local = np.array([[1, 2], [2, 0], [0, 1]])
    pairs = triangles[:, local].reshape(-1, 2)
    keys = np.sort(pairs, axis=1)
    edge_vertices, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    tri_edges = inverse.reshape(nt, 3)

    ne = len(edge_vertices)
    owner = np.repeat(np.arange(nt), 3)
    # stable sort by edge keeps owners ascending within each edge
    order = np.argsort(inverse, kind="stable")
    counts = np.bincount(inverse, minlength=ne)
    if counts.max() > 2:
        raise MeshError("non-manifold triangulation: edge shared by > 2 triangles")
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    plus = owner[order[starts]]
    minus = np.where(counts == 2, owner[order[np.minimum(starts + 1, len(order) - 1)]], -1)

    p0 = vertices[edge_vertices[:, 0]]
    p1 = vertices[edge_vertices[:, 1]]
    d = p1 - p0
    length = np.hypot(d[:, 0], d[:, 1])
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / length[:, None]
    # orient outward from the plus triangle
    centroid = vertices[triangles[plus]].mean(axis=1)
    flip = np.einsum("ij,ij->i", normal, centroid - p0) > 0
    normal[flip] *= -1.0
    return edge_vertices, plus, minus, normal, length, tri_edges


def build_rect_mesh(domain, n: int) -> Mesh:
    """Uniform n-by-n grid on ``domain = (xmin, xmax, ymin, ymax)``.

    Each square is split along its SW-NE diagonal. Vertices are numbered
    row-major; each cell contributes the triangle below the diagonal first.
    """
    x0, x1, y0, y1 = (float(v) for v in domain)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate domain {domain!r}")
    if int(n) != n or n < 1:
        raise MeshError(f"need n >= 1 subdivisions, got {n!r}")
    n = int(n)

    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys)
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    v00 = (j * (n + 1) + i).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    ev, plus, minus, normal, length, tri_edges = _edge_topology(triangles, vertices)
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        edge_vertices=ev,
        edge_plus=plus,
        edge_minus=minus,
        edge_normal=normal,
        edge_length=length,
        tri_edges=tri_edges,
        domain=(x0, x1, y0, y1),
        n=n,
    )


def mesh_from_arrays(vertices, triangles) -> Mesh:
    """Wrap an arbitrary conforming triangulation (triangles made counterclockwise)."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.array(triangles, dtype=np.int64)
    p = vertices[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    cw = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0] < 0
    triangles[cw] = triangles[cw][:, [0, 2, 1]]
    ev, plus, minus, normal, length, tri_edges = _edge_topology(triangles, vertices)
    lo = vertices.min(axis=0)
    hi = vertices.max(axis=0)
    return Mesh(vertices, triangles, ev, plus, minus, normal, length, tri_edges,
                (lo[0], hi[0], lo[1], hi[1]), None)


def mesh_stats(mesh: Mesh) -> dict:
    nb = int(mesh.is_boundary_edge.sum())
    return {
        "h_max": mesh.h_max,
        "h_min": mesh.h_min,
        "n_triangles": mesh.n_triangles,
        "n_interior_edges": mesh.n_edges - nb,
        "n_boundary_edges": nb,
    }
