"""Isoradial planar embeddings: construction, verification and simple geometry scans.

An embedding is isoradial when every face is inscribed in a circle of radius
one.  Each interior edge ``xy`` together with the circumcenters ``c1, c2`` of
its two faces forms a rhombus with unit sides; the half-angle ``theta_x`` is
the angle at ``x`` between ``y - x`` and ``c1 - x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, MalformedInputError
from .graphs import Graph, as_vertex

DEFAULT_TAU = 1e-9
CONVENTIONAL_UPPER = math.pi / 2
LITERAL_UPPER = math.pi / 4


@dataclass
class EmbeddedPlanarGraph:
    coords: dict  # id -> (x, y)
    faces: list  # ccw tuples of vertex ids
    tau: float = DEFAULT_TAU
    name: str = "embedded"

    def __post_init__(self):
        if not self.tau > 0:
            raise MalformedInputError("tolerance must be positive")
        for vid, (x, y) in self.coords.items():
            if not (math.isfinite(x) and math.isfinite(y)):
                raise MalformedInputError(f"vertex {vid} has non-finite coordinates")
        for k, f in enumerate(self.faces):
            if len(f) < 3:
                raise MalformedInputError(f"face {k} has fewer than 3 vertices")
            if len(set(f)) != len(f):
                raise MalformedInputError(f"face {k} is not a simple cycle")
            missing = [v for v in f if v not in self.coords]
            if missing:
                raise MalformedInputError(f"face {k} uses unknown vertices {missing}")
        for e, fs in self.edge_faces.items():
            if len(fs) > 2:
                raise MalformedInputError(f"edge {e} borders {len(fs)} faces")

    @property
    def edge_faces(self) -> dict:
        out: dict = {}
        for k, f in enumerate(self.faces):
            for a, b in zip(f, f[1:] + f[:1]):
                out.setdefault((min(a, b), max(a, b)), []).append(k)
        return out

    @property
    def edges(self) -> list:
        return sorted(self.edge_faces)

    def xy(self, vid) -> np.ndarray:
        return np.asarray(self.coords[vid], dtype=np.float64)


@dataclass
class IsoradialCertificate:
    centers: np.ndarray
    radii: np.ndarray
    deviation: np.ndarray
    theta: dict = field(default_factory=dict)  # (edge, endpoint) -> angle
    window: tuple = (0.0, CONVENTIONAL_UPPER)
    c_angle: float = 0.0
    edge_lengths: dict = field(default_factory=dict)
    dual_lengths: dict = field(default_factory=dict)
    boundary_edges: int = 0
    rhombus_side_dev: float = 0.0
    bad_faces: list = field(default_factory=list)
    circles_ok: bool = False
    angles_ok: bool = False
    tau: float = DEFAULT_TAU

    @property
    def passed(self) -> bool:
        return self.circles_ok and self.angles_ok

    @property
    def theta_range(self) -> tuple[float, float]:
        vals = list(self.theta.values())
        return (min(vals), max(vals)) if vals else (float("nan"), float("nan"))

    def summary(self) -> dict:
        lo, hi = self.theta_range
        return {
            "passed": self.passed,
            "max_radius_error": float(np.abs(self.radii - 1).max()),
            "max_deviation": float(self.deviation.max()),
            "theta_min": lo,
            "theta_max": hi,
            "window_upper": self.window[1],
            "angle_bound": self.c_angle,
            "bad_faces": list(self.bad_faces),
            "boundary_edges": self.boundary_edges,
            "rhombus_side_dev": self.rhombus_side_dev,
        }


def _circle_fit(pts: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Algebraic least-squares circle: ``x^2 + y^2 + D x + E y + F = 0``."""
    A = np.column_stack([pts, np.ones(len(pts))])
    b = -(pts ** 2).sum(axis=1)
    (D, E, F), *_ = np.linalg.lstsq(A, b, rcond=None)
    c = np.array([-D / 2, -E / 2])
    r = math.sqrt(max(c @ c - F, 0.0))
    dev = float(np.abs(np.linalg.norm(pts - c, axis=1) - 1.0).max())
    return c, r, dev


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    return math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))


def verify_isoradial(g: EmbeddedPlanarGraph, tau: float | None = None, window_upper: float = CONVENTIONAL_UPPER,
                     c_min: float | None = None) -> IsoradialCertificate:
    """Check unit circumradii and the bounded-angles window.

    Passing requires every face radius and every vertex-to-center distance to
    be within ``tau`` of 1, and every half-angle to satisfy
    ``c <= theta <= window_upper - c`` with ``c >= c_min`` (default ``tau``).
    """
    tau = g.tau if tau is None else tau
    c_min = tau if c_min is None else c_min
    centers, radii, devs, bad = [], [], [], []
    for k, f in enumerate(g.faces):
        pts = np.array([g.coords[v] for v in f], dtype=np.float64)
        c, r, dev = _circle_fit(pts)
        centers.append(c)
        radii.append(r)
        devs.append(dev)
        if abs(r - 1.0) > tau or dev > tau:
            bad.append(k)
    centers = np.array(centers)
    cert = IsoradialCertificate(centers, np.array(radii), np.array(devs), window=(0.0, window_upper), tau=tau)
    cert.bad_faces = bad
    cert.circles_ok = not bad
    side_dev = 0.0
    for e, fs in g.edge_faces.items():
        x, y = g.xy(e[0]), g.xy(e[1])
        cert.edge_lengths[e] = float(np.linalg.norm(y - x))
        if len(fs) < 2:
            cert.boundary_edges += 1
            continue
        c1, c2 = centers[fs[0]], centers[fs[1]]
        cert.dual_lengths[e] = float(np.linalg.norm(c1 - c2))
        for p in (x, y):
            for c in (c1, c2):
                side_dev = max(side_dev, abs(float(np.linalg.norm(c - p)) - 1.0))
        cert.theta[(e, e[0])] = _angle(y - x, c1 - x)
        cert.theta[(e, e[1])] = _angle(x - y, c1 - y)
    cert.rhombus_side_dev = side_dev
    lo, hi = cert.theta_range
    if cert.theta:
        cert.c_angle = min(lo, window_upper - hi)
        cert.angles_ok = cert.c_angle >= c_min - tau
    return cert


def edge_and_dual_bounds(cert: IsoradialCertificate) -> tuple[float, float, float, float]:
    """Realized ``(c1, c2, c1*, c2*)``: primal and dual edge length ranges."""
    if not cert.passed:
        raise DomainError("edge bounds need a passing certificate")
    prim = list(cert.edge_lengths.values())
    dual = list(cert.dual_lengths.values())
    if not dual:
        raise DomainError("no interior edges")
    return min(prim), max(prim), min(dual), max(dual)


# -- generators --------------------------------------------------------------------

def generate_isoradial(kind: str, extent: int, tau: float = DEFAULT_TAU) -> EmbeddedPlanarGraph:
    """Finite patch of a periodic tiling with unit-circumradius faces."""
    if extent < 1:
        raise DomainError("extent must be at least 1")
    if kind == "square":
        s = math.sqrt(2.0)
        coords = {(i, j): (i * s, j * s) for i in range(-extent, extent + 1) for j in range(-extent, extent + 1)}
        faces = [((i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1))
                 for i in range(-extent, extent) for j in range(-extent, extent)]
        return _relabel(coords, faces, tau, f"square-{extent}")
    if kind == "triangular":
        a = np.array([math.sqrt(3.0), 0.0])
        b = np.array([math.sqrt(3.0) / 2, 1.5])
        rng = range(-extent, extent + 1)
        coords = {(i, j): tuple(float(t) for t in i * a + j * b) for i in rng for j in rng}
        faces = []
        for i in range(-extent, extent):
            for j in range(-extent, extent):
                faces.append(((i, j), (i + 1, j), (i, j + 1)))
                faces.append(((i + 1, j), (i + 1, j + 1), (i, j + 1)))
        return _relabel(coords, faces, tau, f"triangular-{extent}")
    if kind == "hexagonal":
        A = np.array([math.sqrt(3.0), 0.0])
        B = np.array([math.sqrt(3.0) / 2, 1.5])
        corners = [np.array([math.cos(math.pi / 6 + k * math.pi / 3), math.sin(math.pi / 6 + k * math.pi / 3)])
                   for k in range(6)]
        coords, key_of, faces = {}, {}, []
        for i in range(-extent, extent + 1):
            for j in range(-extent, extent + 1):
                c = i * A + j * B
                face = []
                for d in corners:
                    p = c + d
                    key = (round(p[0] * 1e6), round(p[1] * 1e6))
                    if key not in key_of:
                        key_of[key] = key
                        coords[key] = (float(p[0]), float(p[1]))
                    face.append(key)
                faces.append(tuple(face))
        return _relabel(coords, faces, tau, f"hexagonal-{extent}")
    raise DomainError(f"unknown tiling {kind!r}")


def _relabel(coords: dict, faces: list, tau: float, name: str) -> EmbeddedPlanarGraph:
    ids = {k: n for n, k in enumerate(sorted(coords))}
    return EmbeddedPlanarGraph({ids[k]: coords[k] for k in coords}, [tuple(ids[v] for v in f) for f in faces], tau, name)


def displace(g: EmbeddedPlanarGraph, vid, delta: Sequence[float]) -> EmbeddedPlanarGraph:
    x, y = g.coords[vid]
    coords = dict(g.coords)
    coords[vid] = (x + delta[0], y + delta[1])
    return EmbeddedPlanarGraph(coords, list(g.faces), g.tau, g.name + "-displaced")


# -- isoperimetry ------------------------------------------------------------------

def isoperimetric_scan(g, samples: Iterable[Iterable]) -> dict:
    """``|dOmega| / |Omega|^(1/2)`` per sample, with ``dOmega`` the edges leaving ``Omega``."""
    rows = []
    if isinstance(g, EmbeddedPlanarGraph):
        adj: dict = {}
        for a, b in g.edges:
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)

        def nbrs(v):
            return adj.get(v, ())
        norm = lambda v: v
    elif isinstance(g, Graph):
        nbrs = g.neighbors
        norm = as_vertex
    else:
        raise TypeError("expected an embedded graph or a graph spec")
    for omega in samples:
        omega = {norm(v) for v in omega}
        if not omega:
            raise DomainError("empty vertex set")
        boundary = sum(1 for v in omega for w in nbrs(v) if w not in omega)
        rows.append((len(omega), boundary, boundary / math.sqrt(len(omega))))
    return {"rows": rows, "min_ratio": min(r[2] for r in rows)}


def square_blocks(kmax: int) -> list[list]:
    return [[(i, j) for i in range(k) for j in range(k)] for k in range(1, kmax + 1)]


# -- text format ---------------------------------------------------------------------

def format_embedded(g: EmbeddedPlanarGraph) -> str:
    lines = [f"# {g.name}", f"# tau {g.tau!r}"]
    for vid in sorted(g.coords):
        x, y = g.coords[vid]
        lines.append(f"V {vid} {float(x)!r} {float(y)!r}")
    for k, f in enumerate(g.faces):
        lines.append(f"F {k} " + " ".join(str(v) for v in f))
    return "\n".join(lines) + "\n"


def parse_embedded(text: str, tau: float = DEFAULT_TAU) -> EmbeddedPlanarGraph:
    coords, faces, name = {}, [], "embedded"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "tau":
                tau = float(parts[1])
            elif lineno == 1 and parts:
                name = parts[0]
            continue
        parts = line.split()
        try:
            if parts[0] == "V" and len(parts) == 4:
                vid = int(parts[1])
                if vid in coords:
                    raise MalformedInputError(f"line {lineno}: duplicate vertex {vid}")
                coords[vid] = (float(parts[2]), float(parts[3]))
            elif parts[0] == "F" and len(parts) >= 2:
                faces.append(tuple(int(p) for p in parts[2:]))
            else:
                raise MalformedInputError(f"line {lineno}: expected 'V id x y' or 'F id v1 .. vk'")
        except ValueError as exc:
            raise MalformedInputError(f"line {lineno}: {exc}") from None
    return EmbeddedPlanarGraph(coords, faces, tau, name)
