"""Closed triangle meshes: OBJ I/O, validation, mass properties and generators."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from oceansim.errors import MeshError

_COVARIANCE_CANON = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 120.0


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Triangle mesh in the body frame, counter-clockwise seen from outside."""

    vertices: np.ndarray
    triangles: np.ndarray
    name: str = "mesh"

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        t = np.asarray(self.triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"{self.name}: vertices must be (V, 3)")
        if t.ndim != 2 or t.shape[1] != 3:
            raise MeshError(f"{self.name}: triangles must be (T, 3)")
        if t.size and (t.min() < 0 or t.max() >= len(v)):
            raise MeshError(f"{self.name}: triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @cached_property
    def corners(self) -> np.ndarray:
        """``(T, 3, 3)`` triangle corner positions."""
        return self.vertices[self.triangles]

    @cached_property
    def cross(self) -> np.ndarray:
        c = self.corners
        return np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.cross, axis=1)

    @cached_property
    def normals(self) -> np.ndarray:
        n = np.linalg.norm(self.cross, axis=1, keepdims=True)
        return np.divide(self.cross, n, out=np.zeros_like(self.cross), where=n > 0)

    @cached_property
    def volume(self) -> float:
        """Signed volume by the divergence theorem (positive when outward)."""
        c = self.corners
        return float(np.einsum("ij,ij->", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0)

    @property
    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def extent(self) -> np.ndarray:
        lo, hi = self.bbox
        return hi - lo

    @property
    def height(self) -> float:
        return float(self.extent[1])

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    @property
    def n_degenerate(self) -> int:
        return int(np.count_nonzero(self.areas <= 1e-14))

    def validate(self) -> "TriMesh":
        """Check closedness, consistent winding and positive volume."""
        if len(self.triangles) == 0:
            raise MeshError(f"{self.name}: empty mesh")
        t = self.triangles
        edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        keys, counts = np.unique(edges, axis=0, return_counts=True)
        if np.any(counts > 1):
            raise MeshError(f"{self.name}: a directed edge is used twice (inconsistent winding or non-manifold)")
        rev = np.unique(edges[:, ::-1], axis=0)
        if len(rev) != len(keys) or np.any(rev != keys):
            raise MeshError(f"{self.name}: mesh is not closed (boundary edges present)")
        if not self.volume > 0:
            raise MeshError(f"{self.name}: non-positive volume {self.volume:.6g}; normals point inward")
        return self

    def mass_properties(self, density: float = 1.0):
        """Mass, centre of mass and inertia tensor about the centre of mass.

        Integrates over signed tetrahedra formed with the origin.
        """
        c = self.corners
        det = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2]))
        vol = det.sum() / 6.0
        if not vol > 0:
            raise MeshError(f"{self.name}: non-positive volume")
        com = (det[:, None] * c.sum(axis=1)).sum(axis=0) / (24.0 * vol)
        cov = np.einsum("t,tai,ab,tbj->ij", det, c, _COVARIANCE_CANON, c)
        mass = density * vol
        cov = density * cov - mass * np.outer(com, com)
        inertia = np.trace(cov) * np.eye(3) - cov
        return mass, com, inertia

    def translated(self, offset) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(offset, dtype=float), self.triangles, self.name)

    def scaled(self, factors) -> "TriMesh":
        return TriMesh(self.vertices * np.asarray(factors, dtype=float), self.triangles, self.name)

    def centered(self) -> "TriMesh":
        """Copy translated so the solid's centre of mass is at the origin."""
        _, com, _ = self.mass_properties()
        return self.translated(-com)


def load_obj(path, validate: bool = True) -> TriMesh:
    """Read ``v`` and triangular ``f`` records from an ASCII OBJ file."""
    path = Path(path)
    verts, faces = [], []
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshError(f"{path}:{lineno}: only triangular faces are supported")
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
        except ValueError as exc:
            raise MeshError(f"{path}:{lineno}: {exc}") from exc
    mesh = TriMesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3), path.stem)
    return mesh.validate() if validate else mesh


def save_obj(path, mesh: TriMesh) -> None:
    lines = [f"# {mesh.name}: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles"]
    lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0), name: str = "box") -> TriMesh:
    """Axis-aligned box with two triangles per face."""
    sx, sy, sz = (0.5 * np.asarray(size, dtype=float))
    v = np.array([[x, y, z] for x in (-sx, sx) for y in (-sy, sy) for z in (-sz, sz)])
    # vertex index = 4*ix + 2*iy + iz
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, c, d in quads:
        tris += [(a, b, c), (a, c, d)]
    return TriMesh(v + np.asarray(center, dtype=float), np.array(tris), name)


def icosphere(subdivisions: int = 4, radius: float = 1.0) -> TriMesh:
    """Geodesic sphere; 4 subdivisions give 2562 vertices."""
    p = (1.0 + 5**0.5) / 2.0
    v = [[-1, p, 0], [1, p, 0], [-1, -p, 0], [1, -p, 0], [0, -1, p], [0, 1, p],
         [0, -1, -p], [0, 1, -p], [p, 0, -1], [p, 0, 1], [-p, 0, -1], [-p, 0, 1]]
    f = [[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [1, 5, 9], [5, 11, 4],
         [11, 10, 2], [10, 7, 6], [7, 1, 8], [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8],
         [3, 8, 9], [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]]
    verts = [np.array(x, dtype=float) / np.linalg.norm(x) for x in v]
    faces = f
    for _ in range(subdivisions):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        faces = new
    return TriMesh(np.array(verts) * radius, np.array(faces), "icosphere")


def hull(length: float, beam: float, depth: float, freeboard: float, ring: int, segments: int,
         fan_caps: bool = False, name: str = "hull") -> TriMesh:
    """Lofted boat-like hull with the bow toward +z.

    ``ring`` vertices per cross-section and ``segments`` spans between
    ``segments + 1`` sections. Triangle count is ``2 ring (segments + 1)``
    with fan caps and ``2 ring (segments + 1) - 4`` otherwise.
    """
    if ring < 3 or segments < 1:
        raise MeshError("hull needs ring >= 3 and segments >= 1")
    u = np.linspace(0.0, 1.0, segments + 1)
    half_w = 0.5 * beam * np.maximum(np.sqrt(np.clip(1.0 - u**3, 0.0, 1.0)), 0.12)
    keel = depth * (1.0 - 0.6 * u**2)
    phi = 2.0 * np.pi * (np.arange(ring) + 0.5) / ring
    s, c = np.sin(phi), np.cos(phi)
    verts = []
    for i, zi in enumerate((u - 0.5) * length):
        x = half_w[i] * np.sign(c) * np.abs(c) ** 0.7
        y = np.where(s >= 0, freeboard * s, keel[i] * s)
        for j in range(ring):
            verts.append((x[j], y[j], zi))
    tris = []
    for i in range(segments):
        for j in range(ring):
            a = i * ring + j
            b = i * ring + (j + 1) % ring
            a2, b2 = a + ring, b + ring
            tris += [(a, b, b2), (a, b2, a2)]
    last = segments * ring
    if fan_caps:
        verts.append(tuple(np.mean(verts[:ring], axis=0)))
        cs = len(verts) - 1
        verts.append(tuple(np.mean(verts[last : last + ring], axis=0)))
        cb = len(verts) - 1
        for j in range(ring):
            tris.append((cs, (j + 1) % ring, j))
            tris.append((cb, last + j, last + (j + 1) % ring))
    else:
        for j in range(1, ring - 1):
            tris.append((0, j + 1, j))
            tris.append((last, last + j, last + j + 1))
    mesh = TriMesh(np.array(verts), np.array(tris), name)
    if mesh.volume < 0:
        mesh = TriMesh(mesh.vertices, mesh.triangles[:, ::-1], name)
    return mesh


# Bundled hull presets: (length, beam, depth, freeboard, ring, segments, fan_caps).
HULL_PRESETS = {
    "motorboat": (6.0, 2.2, 0.6, 0.8, 6, 13, False),
    "sailboat": (10.0, 3.0, 1.2, 1.0, 9, 14, True),
    "yacht": (15.0, 4.2, 1.0, 1.6, 5, 14, False),
    "zodiac": (4.0, 1.8, 0.35, 0.45, 11, 25, False),
}


def preset_hull(name: str) -> TriMesh:
    try:
        args = HULL_PRESETS[name]
    except KeyError:
        raise MeshError(f"unknown hull preset {name!r}") from None
    return hull(*args, name=name)
