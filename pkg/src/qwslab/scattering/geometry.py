"""Scenario description and rasterization of the refractive-index landscape.

Coordinates follow the waveguide convention: the guide runs along ``x``, has
Dirichlet walls at ``y = 0`` and ``y = W``, and the scattering region is the
strip ``0 <= x <= L``.  Nodes sit at ``x_i = i h`` (``i = 0..nx``) and
``y_j = j h`` (``j = 1..ny``) with ``h = W / grid_resolution``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from ..errors import CutoffError, GeometryError

ThetaKind = Literal["x", "y", "omega"]

#: Fraction of a grid spacing used as the default position step for dS/dtheta.
DEFAULT_POSITION_STEP_FRACTION = 1e-3
#: Relative default step for theta = omega.
DEFAULT_FREQUENCY_STEP = 1e-4


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle given by its center and side lengths."""

    center: tuple[float, float]
    size: tuple[float, float]

    def contains(self, x, y):
        cx, cy = self.center
        return (np.abs(x - cx) <= 0.5 * self.size[0]) & (np.abs(y - cy) <= 0.5 * self.size[1])

    def bounds(self):
        cx, cy = self.center
        wx, wy = self.size
        return cx - 0.5 * wx, cx + 0.5 * wx, cy - 0.5 * wy, cy + 0.5 * wy

    @property
    def area(self):
        return self.size[0] * self.size[1]

    def shifted(self, dx, dy):
        return replace(self, center=(self.center[0] + dx, self.center[1] + dy))

    def crossing(self, p, q):
        """Fraction ``t`` in (0, 1] of the segment p -> q where the boundary is hit.

        ``p`` lies outside and ``q`` inside (or on) the shape; segments are
        grid links, hence axis-aligned.
        """
        x0, x1, y0, y1 = self.bounds()
        (px, py), (qx, qy) = p, q
        if py == qy:
            edge = x0 if qx > px else x1
            return (edge - px) / (qx - px)
        edge = y0 if qy > py else y1
        return (edge - py) / (qy - py)

    def to_json(self):
        return {"shape": "rectangle", "center": list(self.center), "size": list(self.size)}


@dataclass(frozen=True)
class Circle:
    center: tuple[float, float]
    radius: float

    def contains(self, x, y):
        cx, cy = self.center
        return (x - cx) ** 2 + (y - cy) ** 2 <= self.radius ** 2

    def bounds(self):
        cx, cy = self.center
        r = self.radius
        return cx - r, cx + r, cy - r, cy + r

    @property
    def area(self):
        return math.pi * self.radius ** 2

    def shifted(self, dx, dy):
        return replace(self, center=(self.center[0] + dx, self.center[1] + dy))

    def crossing(self, p, q):
        px, py = p[0] - self.center[0], p[1] - self.center[1]
        dx, dy = q[0] - p[0], q[1] - p[1]
        a = dx * dx + dy * dy
        b = 2.0 * (px * dx + py * dy)
        c = px * px + py * py - self.radius ** 2
        disc = max(b * b - 4.0 * a * c, 0.0)
        # smaller root is the entry point; p is outside so c > 0
        t = (-b - math.sqrt(disc)) / (2.0 * a)
        return min(max(t, 0.0), 1.0)

    def to_json(self):
        return {"shape": "circle", "center": list(self.center), "radius": self.radius}


Shape = Rectangle | Circle


@dataclass(frozen=True)
class ScattererSpec:
    """A scatterer: a shape plus its material.

    ``material`` is ``"dielectric"`` (real index ``n >= 1``) or ``"metal"``
    (homogeneous Dirichlet condition on its border).  ``target`` marks the
    object displaced when theta is a position.
    """

    shape: Shape
    material: Literal["dielectric", "metal"] = "dielectric"
    n: float = 1.0
    target: bool = False

    def __post_init__(self):
        if self.material not in ("dielectric", "metal"):
            raise GeometryError(f"unknown material {self.material!r}")
        if self.material == "dielectric" and not (np.isreal(self.n) and self.n >= 1.0):
            raise GeometryError(f"dielectric index must be real and >= 1, got {self.n}")

    def shifted(self, dx, dy):
        return replace(self, shape=self.shape.shifted(dx, dy))

    def to_json(self):
        d = self.shape.to_json()
        d["material"] = self.material
        if self.material == "dielectric":
            d["n"] = self.n
        if self.target:
            d["target"] = True
        return d

    @classmethod
    def from_json(cls, d):
        kind = d.get("shape")
        if kind == "circle":
            shape = Circle(tuple(d["center"]), float(d["radius"]))
        elif kind == "rectangle":
            shape = Rectangle(tuple(d["center"]), tuple(d["size"]))
        else:
            raise GeometryError(f"unknown shape {kind!r}")
        return cls(shape, d.get("material", "dielectric"), float(d.get("n", 1.0)),
                   bool(d.get("target", False)))


@dataclass(frozen=True)
class ThetaSpec:
    """Which parameter theta varies and the finite-difference step.

    ``step=None`` picks the default: ``DEFAULT_POSITION_STEP_FRACTION`` grid
    spacings for positions and ``DEFAULT_FREQUENCY_STEP * k`` for frequency.
    ``richardson=None`` enables Richardson extrapolation for omega only.
    """

    kind: ThetaKind = "x"
    step: float | None = None
    richardson: bool | None = None

    @property
    def use_richardson(self):
        return self.kind == "omega" if self.richardson is None else self.richardson

    def __post_init__(self):
        if self.kind not in ("x", "y", "omega"):
            raise GeometryError(f"theta kind must be x, y or omega, got {self.kind!r}")


@dataclass(frozen=True)
class Grid:
    h: float
    nx: int  # columns i = 0..nx
    ny: int  # interior rows j = 1..ny

    @property
    def x(self):
        return self.h * np.arange(self.nx + 1)

    @property
    def y(self):
        return self.h * np.arange(1, self.ny + 1)

    @property
    def width(self):
        return self.h * (self.ny + 1)

    @property
    def length(self):
        return self.h * self.nx

    @property
    def shape(self):
        return (self.nx + 1, self.ny)

    def max_validated_k(self, points_per_wavelength=10.0):
        """Largest k resolved with the given number of nodes per free wavelength."""
        return 2.0 * math.pi / (points_per_wavelength * self.h)


@dataclass(frozen=True)
class Scenario:
    """Full description of one waveguide experiment.

    Parameters
    ----------
    W, L : float
        Waveguide width and length of the scattering region.
    k : float
        Free-space wavenumber (``omega / c`` with ``c = 1``).
    scatterers : sequence of ScattererSpec
    theta : ThetaSpec
    grid_resolution : int
        Number of grid spacings across the width ``W``.
    seed : int or None
        Seed that generated the disorder, recorded for reproducibility.
    """

    W: float
    L: float
    k: float
    scatterers: tuple[ScattererSpec, ...] = ()
    theta: ThetaSpec = field(default_factory=ThetaSpec)
    grid_resolution: int = 110
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "scatterers", tuple(self.scatterers))
        if not (self.W > 0 and self.L > 0 and self.k > 0):
            raise GeometryError("W, L and k must be positive")
        if self.grid_resolution < 3:
            raise GeometryError("grid_resolution must give at least 2 interior rows")
        if self.open_modes < 1:
            raise CutoffError(f"no open mode: kW/pi = {self.k * self.W / math.pi:.4g} < 1")
        for s in self.scatterers:
            x0, x1, y0, y1 = s.shape.bounds()
            tol = 1e-12 * max(self.W, self.L)
            if x0 < -tol or x1 > self.L + tol or y0 < -tol or y1 > self.W + tol:
                raise GeometryError(f"scatterer {s.to_json()} leaves the region [0, L] x [0, W]")

    @property
    def open_modes(self):
        """Continuum count of open modes per lead, floor(kW/pi)."""
        return int(math.floor(self.k * self.W / math.pi))

    @property
    def grid(self):
        h = self.W / self.grid_resolution
        nx = int(round(self.L / h))
        if abs(nx * h - self.L) > 1e-9 * self.L:
            raise GeometryError(f"L = {self.L} is not a multiple of the grid spacing {h}")
        return Grid(h=h, nx=nx, ny=self.grid_resolution - 1)

    @property
    def target(self):
        for s in self.scatterers:
            if s.target:
                return s
        return None

    @property
    def theta_step(self):
        if self.theta.step is not None:
            return float(self.theta.step)
        if self.theta.kind == "omega":
            return DEFAULT_FREQUENCY_STEP * self.k
        return DEFAULT_POSITION_STEP_FRACTION * self.W / self.grid_resolution

    def with_k(self, k):
        return replace(self, k=k)

    def with_theta(self, kind=None, step=None, richardson=None):
        t = self.theta
        return replace(self, theta=ThetaSpec(
            kind=t.kind if kind is None else kind,
            step=t.step if step is None else step,
            richardson=t.richardson if richardson is None else richardson))

    def displaced(self, dtheta):
        """Scenario with theta moved by ``dtheta`` (target shift or k shift)."""
        if self.theta.kind == "omega":
            return replace(self, k=self.k + dtheta)
        dx, dy = (dtheta, 0.0) if self.theta.kind == "x" else (0.0, dtheta)
        return replace(self, scatterers=tuple(
            s.shifted(dx, dy) if s.target else s for s in self.scatterers))

    def mirrored(self, axis="x"):
        """Mirror image about ``x = L/2`` (axis="x") or ``y = W/2`` (axis="y")."""
        out = []
        for s in self.scatterers:
            cx, cy = s.shape.center
            c = (self.L - cx, cy) if axis == "x" else (cx, self.W - cy)
            out.append(replace(s, shape=replace(s.shape, center=c)))
        return replace(self, scatterers=tuple(out))

    def to_json(self):
        return {
            "W": self.W,
            "L": self.L,
            "k_over_piW": self.k * self.W / math.pi,
            "grid_resolution": self.grid_resolution,
            "seed": self.seed,
            "scatterers": [s.to_json() for s in self.scatterers],
            "theta": {"kind": self.theta.kind, "step": self.theta.step,
                      "richardson": self.theta.richardson},
        }

    @classmethod
    def from_json(cls, d):
        W = float(d["W"])
        L = float(d["L"])
        k = float(d["k_over_piW"]) * math.pi / W
        scat = [ScattererSpec.from_json(s) for s in d.get("scatterers", [])]
        seed = d.get("seed")
        dis = d.get("disorder")
        if dis:
            if seed is None:
                raise GeometryError("disorder block requires a seed")
            scat += random_disorder(W, L, seed, count=int(dis.get("count", 20)),
                                    radius=float(dis.get("radius", W / 20)),
                                    n=float(dis.get("n", 1.44)), avoid=scat)
        th = d.get("theta") or {}
        theta = ThetaSpec(th.get("kind", "x"), th.get("step"), th.get("richardson"))
        return cls(W, L, k, tuple(scat), theta, int(d.get("grid_resolution", 110)), seed)


def load_scenario(path):
    with open(path) as f:
        return Scenario.from_json(json.load(f))


def save_scenario(scenario, path):
    path = Path(path)
    path.write_text(json.dumps(scenario.to_json(), indent=2) + "\n")
    return path


def _overlaps(circle, spec, gap):
    shape = spec.shape
    cx, cy = circle.center
    if isinstance(shape, Circle):
        d = math.hypot(cx - shape.center[0], cy - shape.center[1])
        return d < circle.radius + shape.radius + gap
    x0, x1, y0, y1 = shape.bounds()
    nx, ny = min(max(cx, x0), x1), min(max(cy, y0), y1)
    return math.hypot(cx - nx, cy - ny) < circle.radius + gap


def random_disorder(W, L, seed, count=20, radius=None, n=1.44, avoid=(), gap=None,
                    max_tries=100_000):
    """Place ``count`` non-overlapping dielectric disks uniformly at random.

    Disks are rejected when they overlap each other or anything in ``avoid``
    (typically the target), keeping a clearance ``gap``.
    """
    radius = W / 20 if radius is None else radius
    gap = 0.02 * W if gap is None else gap
    rng = np.random.default_rng(seed)
    placed = list(avoid)
    disks = []
    tries = 0
    while len(disks) < count:
        tries += 1
        if tries > max_tries:
            raise GeometryError(f"could not place {count} disks without overlap")
        cx = rng.uniform(radius + gap, L - radius - gap)
        cy = rng.uniform(radius + gap, W - radius - gap)
        c = Circle((float(cx), float(cy)), radius)
        if any(_overlaps(c, s, gap) for s in placed):
            continue
        spec = ScattererSpec(c, "dielectric", n)
        placed.append(spec)
        disks.append(spec)
    return disks


def fig3_scenario(seed=7, grid_resolution=110, theta="x", step=None, W=1.0, L=None,
                  k_over_piW=20.5):
    """The reference disordered waveguide: metallic square target in a random medium.

    Target: square of side W/10 at the center.  Disorder: 20 disks of radius
    W/20 and index 1.44.  The default resolution of 110 puts the target edges
    half-way between grid nodes.
    """
    L = W if L is None else L
    target = ScattererSpec(Rectangle((L / 2, W / 2), (W / 10, W / 10)), "metal", target=True)
    disks = random_disorder(W, L, seed, 20, W / 20, 1.44, avoid=[target])
    return Scenario(W, L, k_over_piW * math.pi / W, (target, *disks),
                    ThetaSpec(theta, step), grid_resolution, seed)


def empty_scenario(W=1.0, L=1.0, k_over_piW=20.5, grid_resolution=110, theta="x"):
    return Scenario(W, L, k_over_piW * math.pi / W, (), ThetaSpec(theta), grid_resolution)


@dataclass(frozen=True)
class IndexLandscape:
    """Rasterized medium on the interior grid.

    ``n2`` holds n^2 per node, ``metal`` marks removed (Dirichlet) nodes and
    ``boundary_shift`` stores, per fluid node, ``sum(1/delta - 1)`` over links
    that cross a metallic boundary at fraction ``delta`` of a grid spacing.
    """

    grid: Grid
    n2: np.ndarray
    metal: np.ndarray
    boundary_shift: np.ndarray
    k: float


def build_landscape(scenario: Scenario) -> IndexLandscape:
    """Rasterize the scenario onto its grid.

    A node is metallic iff it lies inside (or on) a metallic scatterer.  n^2
    is taken from the innermost (smallest-area) dielectric scatterer that
    contains the node, else 1.
    """
    grid = scenario.grid
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    n2 = np.ones(grid.shape)
    best_area = np.full(grid.shape, np.inf)
    metal = np.zeros(grid.shape, dtype=bool)
    metals = []
    for s in scenario.scatterers:
        inside = s.shape.contains(X, Y)
        if s.material == "metal":
            metal |= inside
            metals.append(s.shape)
        else:
            win = inside & (s.shape.area < best_area)
            n2[win] = s.n ** 2
            best_area[win] = s.shape.area
    if metal[:2].any() or metal[-2:].any():
        raise GeometryError("metallic scatterers must stay clear of the first and last two columns")

    shift = np.zeros(grid.shape)
    if metals:
        h = grid.h
        for i, j in zip(*np.nonzero(metal)):
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ip, jp = i + di, j + dj
                if not (0 <= jp < grid.ny) or metal[ip, jp]:
                    continue
                p = (ip * h, (jp + 1) * h)
                q = (i * h, (j + 1) * h)
                owners = [m for m in metals if m.contains(q[0], q[1])]
                delta = min(m.crossing(p, q) for m in owners)
                delta = max(delta, 1e-9)
                shift[ip, jp] += 1.0 / delta - 1.0
    return IndexLandscape(grid, n2, metal, shift, scenario.k)
