r"""Mass measures, the functionals built from them, and inequality checkers.

A mass measure is a finite positive measure on phases: the masses of the
Harder-Narasimhan factors of an object, placed at their phases.  From it

.. math::

    m^t = \sum_\theta e^{t\theta} w_\theta, \qquad
    \phi^t = \tfrac1t \log(m^t / m^0), \qquad
    \ell^t = \log m^0 + i\pi\phi^t,

with :math:`\phi^0` the weighted mean phase and :math:`\phi^{\pm\infty}` the
extreme phases.  For a nonzero complex number :math:`g_t(z) = |z|e^{t\phi(z)}`
with :math:`\phi(z)\in(-1,1]`.

The checkers in this module evaluate both sides of each inequality on
concrete data.  Triangle-type checkers take the three measures as given;
whether they come from an exact triangle is the caller's business, and the
generators below only produce families that do: split triangles and the
triangles of a semisimple category (see :class:`SemisimpleTriangle`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from shapely.geometry import MultiPoint, Polygon
from shapely.geometry.base import BaseGeometry

from .multiscale_line import phase

__all__ = [
    "MassMeasure",
    "EmptyMeasureError",
    "m_t",
    "phi_t",
    "ell_t",
    "c_t",
    "truncate",
    "g_t",
    "PhaseSequence",
    "HNPolygon",
    "GtReport",
    "check_gt_inequality",
    "in_ray_zonotope",
    "TriangleReport",
    "check_triangle",
    "SemisimpleTriangle",
    "check_mass_additivity",
    "check_pre_triangle",
    "max_gt_on_polygon",
    "hn_region",
    "ImageBoundReport",
    "check_image_bound",
    "r_eps",
    "check_truncated_triangle",
    "filtration_constant",
    "filtration_constant_loop",
    "check_filtration_inequality",
    "semisimple_filtration",
    "cosh_threshold",
    "check_cosh_mass_bound",
]


class EmptyMeasureError(ValueError):
    """Raised when a functional needs a nonempty measure."""


@dataclass(frozen=True)
class MassMeasure:
    """Atoms ``(phase, weight)`` sorted by phase with distinct phases and positive weights."""

    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        merged: dict[float, float] = {}
        for theta, w in self.atoms:
            theta, w = float(theta), float(w)
            if not (math.isfinite(theta) and math.isfinite(w)):
                raise ValueError("phases and weights must be finite")
            if w <= 0:
                raise ValueError(f"weight {w} at phase {theta} is not positive")
            merged[theta] = merged.get(theta, 0.0) + w
        object.__setattr__(self, "atoms", tuple(sorted(merged.items())))

    @classmethod
    def of(cls, pairs: Iterable[tuple[float, float]]) -> "MassMeasure":
        return cls(tuple(pairs))

    @classmethod
    def from_charges(cls, charges: Iterable[complex], shift: int = 0) -> "MassMeasure":
        """Semistable factors with central charges ``charges`` (phases in ``(-1, 1]``)."""
        return cls(tuple((phase(z) + shift, abs(z)) for z in charges))

    def __bool__(self) -> bool:
        return bool(self.atoms)

    def __add__(self, other: "MassMeasure") -> "MassMeasure":
        return MassMeasure(self.atoms + other.atoms)

    @property
    def phases(self) -> np.ndarray:
        return np.array([a for a, _ in self.atoms], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for _, w in self.atoms], dtype=float)

    @property
    def total(self) -> float:
        return float(sum(w for _, w in self.atoms))

    def shift(self, z: complex) -> "MassMeasure":
        """Action of ``z`` in ``C``: phases move by ``Im z / pi``, masses scale by ``e^{Re z}``."""
        return MassMeasure(tuple((th + z.imag / math.pi, w * math.exp(z.real)) for th, w in self.atoms))

    def phase_shift(self, k: float) -> "MassMeasure":
        return MassMeasure(tuple((th + k, w) for th, w in self.atoms))

    def scale(self, c: float) -> "MassMeasure":
        return MassMeasure(tuple((th, w * c) for th, w in self.atoms))

    def charge(self) -> complex:
        """Total central charge ``sum w e^{i pi theta}``."""
        return complex(sum(w * complex(math.cos(math.pi * th), math.sin(math.pi * th)) for th, w in self.atoms))


def _require(mu: MassMeasure) -> None:
    if not mu.atoms:
        raise EmptyMeasureError("the measure is empty")


def _log_mt(mu: MassMeasure, t: float) -> float:
    x = t * mu.phases + np.log(mu.weights)
    top = float(np.max(x))
    return top + math.log(float(np.sum(np.exp(x - top))))


def m_t(mu: MassMeasure, t: float, *, allow_empty: bool = False) -> float:
    """Polynomial mass ``sum e^{t theta} w``; ``allow_empty`` returns 0 for the empty measure."""
    if not mu.atoms:
        if allow_empty:
            return 0.0
        raise EmptyMeasureError("the measure is empty")
    return math.exp(_log_mt(mu, t))


def _mt(mu: MassMeasure, t: float) -> float:
    return m_t(mu, t, allow_empty=True)


def phi_t(mu: MassMeasure, t: float) -> float:
    """Smoothed phase; ``t = ±inf`` gives the extreme phases."""
    _require(mu)
    if t == math.inf:
        return float(mu.phases[-1])
    if t == -math.inf:
        return float(mu.phases[0])
    mean = float(np.dot(mu.phases, mu.weights) / mu.total)
    if t == 0:
        return mean
    # expand around the mean phase so that small |t| loses no digits
    x = t * (mu.phases - mean)
    p = mu.weights / mu.total
    if float(np.max(np.abs(x))) < 1.0:
        return mean + math.log1p(float(np.dot(p, np.expm1(x)))) / t
    y = x + np.log(p)
    top = float(np.max(y))
    return mean + (top + math.log(float(np.sum(np.exp(y - top))))) / t


def ell_t(mu: MassMeasure, t: float) -> complex:
    """Log central charge ``log m + i pi phi^t``."""
    _require(mu)
    return complex(math.log(mu.total), math.pi * phi_t(mu, t))


def relative_m_t(mu: MassMeasure, ref: MassMeasure, t: float) -> float:
    """``m^t(E/F) = m^t(E) / (m(F) e^{t phi(F)})``."""
    return m_t(mu, t) / (ref.total * math.exp(t * phi_t(ref, 0.0)))


def relative_ell_t(mu: MassMeasure, ref: MassMeasure, t: float) -> complex:
    """``ell^t(E/F) = ell^t(E) - ell(F)``; invariant under the C-action."""
    return ell_t(mu, t) - ell_t(ref, 0.0)


def c_t(mu: MassMeasure, t: float) -> float:
    """Normalized concentration ``sum (w/m) cosh(t (theta - mean phase))``."""
    _require(mu)
    mean = phi_t(mu, 0.0)
    return float(np.dot(mu.weights, np.cosh(t * (mu.phases - mean))) / mu.total)


def truncate(mu: MassMeasure, a: float, side: str = "<=", b: float | None = None) -> MassMeasure:
    """Restrict to ``theta <= a``, ``theta > a``, ``theta >= a``, ``theta < a``, or ``a < theta <= b``."""
    if side == "<=":
        keep = [x for x in mu.atoms if x[0] <= a]
    elif side == ">":
        keep = [x for x in mu.atoms if x[0] > a]
    elif side == ">=":
        keep = [x for x in mu.atoms if x[0] >= a]
    elif side == "<":
        keep = [x for x in mu.atoms if x[0] < a]
    elif side == "(]":
        if b is None:
            raise ValueError("interval truncation needs an upper end")
        keep = [x for x in mu.atoms if a < x[0] <= b]
    else:
        raise ValueError(f"unknown side {side!r}")
    return MassMeasure(tuple(keep))


# ----------------------------------------------------------------------
# g_t and phase sequences
# ----------------------------------------------------------------------
def g_t(z: complex, t: float) -> float:
    """``|z| e^{t phi(z)}`` with ``phi(z)`` in ``(-1, 1]``."""
    if z == 0:
        raise ValueError("g_t is undefined at 0")
    return abs(z) * math.exp(t * phase(z))


@dataclass(frozen=True)
class PhaseSequence:
    """Nonzero complex numbers with non-increasing phases."""

    entries: tuple[complex, ...]

    def __post_init__(self) -> None:
        ent = tuple(complex(z) for z in self.entries)
        object.__setattr__(self, "entries", ent)
        for z in ent:
            if z == 0:
                raise ValueError("phase sequences cannot contain 0")
        ph = [phase(z) for z in ent]
        for a, b in zip(ph, ph[1:]):
            if b > a:
                raise ValueError("phases must be non-increasing")

    @classmethod
    def sorted_from(cls, values: Iterable[complex]) -> "PhaseSequence":
        return cls(tuple(sorted((complex(v) for v in values), key=lambda z: -phase(z))))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def phases(self) -> list[float]:
        return [phase(z) for z in self.entries]

    def total(self) -> complex:
        return complex(sum(self.entries))

    def partial_sums(self) -> list[complex]:
        out = [0j]
        for z in self.entries:
            out.append(out[-1] + z)
        return out

    def g_t(self, t: float) -> float:
        return float(sum(g_t(z, t) for z in self.entries))

    def subdivide(self, i: int, lam: float) -> "PhaseSequence":
        if not 0 < lam < 1:
            raise ValueError("lambda must lie strictly between 0 and 1")
        z = self.entries[i]
        return PhaseSequence(self.entries[:i] + (lam * z, (1 - lam) * z) + self.entries[i + 1:])

    def concat(self, other: "PhaseSequence") -> "PhaseSequence":
        return PhaseSequence(self.entries + other.entries)

    def truncate(self, a: float, side: str = "<=") -> "PhaseSequence":
        if side == "<=":
            return PhaseSequence(tuple(z for z in self.entries if phase(z) <= a))
        if side == ">":
            return PhaseSequence(tuple(z for z in self.entries if phase(z) > a))
        raise ValueError(f"unknown side {side!r}")

    def measure(self) -> MassMeasure:
        return MassMeasure.from_charges(self.entries)


@dataclass(frozen=True)
class HNPolygon:
    """Partial sums of a phase sequence with phases in ``(0, 1]``."""

    vertices: tuple[complex, ...]

    @classmethod
    def of(cls, seq: PhaseSequence) -> "HNPolygon":
        for p in seq.phases:
            if not 0 < p <= 1:
                raise ValueError("HN polygons need phases in (0, 1]")
        return cls(tuple(seq.partial_sums()))

    def is_convex(self, tol: float = 1e-12) -> bool:
        v = self.vertices
        for a, b, c in zip(v, v[1:], v[2:]):
            cross = ((b - a).conjugate() * (c - b)).imag
            if cross > tol * max(1.0, abs(b - a) * abs(c - b)):
                return False
        return all((b - a).imag >= -tol for a, b in zip(v, v[1:]))

    def region(self) -> BaseGeometry:
        return MultiPoint([(z.real, z.imag) for z in self.vertices]).convex_hull


# ----------------------------------------------------------------------
# the g_t lemma
# ----------------------------------------------------------------------
def _zonotope_chains(gens: Sequence[complex]) -> tuple[complex, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Left and right boundary chains of ``sum [0,1] g`` as functions of height.

    Returns the lowest point and arrays ``(yl, xl)``, ``(yr, xr)`` with
    strictly increasing heights (horizontal edges at the bottom of the right
    chain and the top of the left chain are folded into their extreme
    endpoint).
    """
    base = 0j
    up = []
    for g in gens:
        if g.imag < 0 or (g.imag == 0 and g.real < 0):
            base += g
            g = -g
        up.append(g)
    up.sort(key=lambda g: math.atan2(g.imag, g.real))
    right = [base]
    for g in up:
        right.append(right[-1] + g)
    left = [base]
    for g in reversed(up):
        left.append(left[-1] + g)

    def fold(chain: list[complex], keep: str) -> tuple[np.ndarray, np.ndarray]:
        ys: list[float] = []
        xs: list[float] = []
        for z in chain:
            if ys and z.imag <= ys[-1]:
                xs[-1] = min(xs[-1], z.real) if keep == "min" else max(xs[-1], z.real)
                continue
            ys.append(z.imag)
            xs.append(z.real)
        return np.asarray(ys), np.asarray(xs)

    yl, xl = fold(left, "min")
    yr, xr = fold(right, "max")
    return base, yl, xl, yr, xr


def in_ray_zonotope(points: Sequence[complex], gens: Sequence[complex], *, offset: complex = 0j,
                    direction: int = 1, eps: float = 1e-9) -> np.ndarray:
    """Membership of ``points`` in ``offset + direction * R_{>=0} + sum [0,1] g``.

    ``direction=+1`` is the region to the right of the zonotope,
    ``direction=-1`` the region to its left.  Boundaries are inflated by
    ``eps * (1 + |p|)`` to avoid false negatives from rounding.
    """
    pts = np.asarray(points, dtype=complex) - offset
    _, yl, xl, yr, xr = _zonotope_chains(list(gens))
    slack = eps * (1 + np.abs(pts))
    y = pts.imag
    ylo, yhi = yl[0], yl[-1]
    inside_y = (y >= ylo - slack) & (y <= yhi + slack)
    yc = np.clip(y, ylo, yhi)
    if direction > 0:
        xmin = np.interp(yc, yl, xl) if len(yl) > 1 else np.full_like(yc, xl[0])
        return inside_y & (pts.real >= xmin - slack)
    xmax = np.interp(yc, yr, xr) if len(yr) > 1 else np.full_like(yc, xr[0])
    return inside_y & (pts.real <= xmax + slack)


@dataclass
class GtReport:
    conditions_hold: bool
    margin: float
    g_z: float
    g_w: float
    r: int
    s: int
    detail: str = ""


def check_gt_inequality(z: PhaseSequence, w: PhaseSequence, t: float, *, eps: float = 1e-9) -> GtReport:
    """Test the Minkowski-sum hypotheses and evaluate ``g_t(z) - g_t(w)``."""
    sz, sw = z.total(), w.total()
    if abs(sz - sw) > 1e-9 * (1 + abs(sz)):
        raise ValueError(f"endpoint mismatch: {sz} vs {sw}")
    zp = z.phases
    wp = w.phases
    r = max((j + 1 for j, p in enumerate(zp) if p > 0), default=0)
    s = max((j + 1 for j, p in enumerate(wp) if p > 0), default=0)
    partial = w.partial_sums()
    ze = z.entries
    plus = in_ray_zonotope(partial[1:s + 1], ze[:r], direction=1, eps=eps) if s else np.array([], bool)
    corner = complex(sum(ze[:r]))
    minus = in_ray_zonotope(partial[s:], ze[r:], offset=corner, direction=-1, eps=eps)
    ok = bool(np.all(plus) and np.all(minus))
    detail = ""
    if not ok:
        bad1 = [i + 1 for i, v in enumerate(plus) if not v]
        bad2 = [s + i for i, v in enumerate(minus) if not v]
        detail = f"P+ fails at {bad1}, P- fails at {bad2}"
    gz, gw = z.g_t(t), w.g_t(t)
    return GtReport(ok, gz - gw, gz, gw, r, s, detail)


def random_gt_candidate(rng, n_max: int = 6, m_max: int = 6, t_range: float = 3.0,
                        cut: float = 1e-6) -> tuple[PhaseSequence, PhaseSequence, float]:
    """A candidate ``(z, w, t)`` with ``sum z = sum w``.

    ``z`` has random phases away from the branch cut; each ``w_j`` is a
    random convex recombination ``sum_k A_jk z_k`` with Dirichlet columns.
    """
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    ph = rng.uniform(-1 + cut, 1 - cut, size=n)
    mod = np.exp(rng.normal(size=n))
    zs = mod * np.exp(1j * np.pi * ph)
    A = rng.dirichlet(np.ones(m), size=n).T  # columns sum to 1
    ws = A @ zs
    ws = [w for w in ws if abs(w) > 1e-12]
    z = PhaseSequence.sorted_from(zs)
    w = PhaseSequence.sorted_from(ws)
    t = float(rng.uniform(-t_range, t_range))
    return z, w, t


# ----------------------------------------------------------------------
# triangles
# ----------------------------------------------------------------------
@dataclass
class TriangleReport:
    left: float
    bound: float
    left_holds: bool
    right_holds: bool
    hypothesis: str

    @property
    def right_margin(self) -> float:
        return self.bound - self.left


def check_triangle(muE: MassMeasure, muF: MassMeasure, muG: MassMeasure, t: float, a: float, *,
                   tol: float = 1e-10, hypothesis: str = "unverified-hypothesis") -> TriangleReport:
    """Both sides of ``0 <= m(E)+m(G)-m(F) <= (1+e^|t|)(m(G^{>a}) + m(E^{<=a}))``."""
    left = _mt(muE, t) + _mt(muG, t) - _mt(muF, t)
    bound = (1 + math.exp(abs(t))) * (_mt(truncate(muG, a, ">"), t) + _mt(truncate(muE, a, "<="), t))
    scale = 1 + _mt(muE, t) + _mt(muF, t) + _mt(muG, t)
    return TriangleReport(left, bound, left >= -tol * scale, left <= bound + tol * scale, hypothesis)


@dataclass(frozen=True)
class SemisimpleTriangle:
    """An exact triangle ``E -> F -> G`` in a semisimple category.

    Every such triangle is a sum of ``I -> I -> 0``, ``0 -> Q -> Q`` and
    ``K -> 0 -> K[1]``, so ``E = K + I``, ``F = I + Q`` and ``G = Q + K[1]``.
    """

    K: MassMeasure
    I: MassMeasure
    Q: MassMeasure

    @property
    def E(self) -> MassMeasure:
        return self.K + self.I

    @property
    def F(self) -> MassMeasure:
        return self.I + self.Q

    @property
    def G(self) -> MassMeasure:
        return self.Q + self.K.phase_shift(1)

    def cofib_of_truncation(self, a: float) -> MassMeasure:
        """``cofib(E^{>a} -> F^{>a})`` = ``Q^{>a} + (K^{>a})[1]``."""
        return truncate(self.Q, a, ">") + truncate(self.K, a, ">").phase_shift(1)

    def fib_of_truncation(self, a: float) -> MassMeasure:
        """``fib(F^{<=a} -> G^{<=a})`` = ``I^{<=a} + K^{<=a-1}``."""
        return truncate(self.I, a, "<=") + truncate(self.K, a - 1, "<=")

    def image_charge(self) -> complex:
        """Central charge of the image of ``G^{(0,1]} -> E^{(-1,0]}[1]``."""
        return truncate(self.K, -1, "(]", 0).phase_shift(1).charge()


def random_measure(rng, k_max: int = 4, spread: float = 1.5, empty_ok: bool = True) -> MassMeasure:
    lo = 0 if empty_ok else 1
    k = int(rng.integers(lo, k_max + 1))
    return MassMeasure(tuple(zip(rng.uniform(-spread, spread, size=k), np.exp(rng.normal(size=k)))))


def random_semisimple_triangle(rng, k_max: int = 4, spread: float = 1.5) -> SemisimpleTriangle:
    return SemisimpleTriangle(random_measure(rng, k_max, spread), random_measure(rng, k_max, spread),
                              random_measure(rng, k_max, spread))


def check_mass_additivity(tri: SemisimpleTriangle, t: float, a: float) -> float:
    """``m(E^{<=a}) + m(G^{>a}) - m(cofib) - m(fib)``; nonnegative by the additivity lemma."""
    lhs = _mt(tri.cofib_of_truncation(a), t) + _mt(tri.fib_of_truncation(a), t)
    rhs = _mt(truncate(tri.E, a, "<="), t) + _mt(truncate(tri.G, a, ">"), t)
    return rhs - lhs


def check_pre_triangle(tri: SemisimpleTriangle, t: float) -> tuple[float, float]:
    """Slacks of the two truncation bounds at ``a = 0`` involving ``g_t(Z(I))``."""
    zi = tri.image_charge()
    gi = g_t(zi, t) if zi != 0 else 0.0
    E, F, G = tri.E, tri.F, tri.G
    s1 = _mt(truncate(G, 0, ">"), t) + _mt(truncate(E, 0, ">"), t) + math.exp(-t) * gi - _mt(truncate(F, 0, ">"), t)
    s2 = _mt(truncate(G, 0, "<="), t) + _mt(truncate(E, 0, "<="), t) + gi - _mt(truncate(F, 0, "<="), t)
    return s1, s2


# ----------------------------------------------------------------------
# polygons and the image bound
# ----------------------------------------------------------------------
def _segments(geom: BaseGeometry) -> list[tuple[complex, complex]]:
    if geom.is_empty:
        return []
    kind = geom.geom_type
    if kind == "Point":
        z = complex(geom.x, geom.y)
        return [(z, z)]
    if kind in ("LineString", "LinearRing"):
        c = [complex(x, y) for x, y in geom.coords]
        return list(zip(c, c[1:])) or [(c[0], c[0])]
    if kind == "Polygon":
        return _segments(geom.exterior)
    out = []
    for part in getattr(geom, "geoms", []):
        out.extend(_segments(part))
    return out


def max_gt_on_polygon(P: BaseGeometry | Sequence[complex], t: float, *, samples: int = 64,
                      flag: list | None = None) -> float:
    """Maximum of ``g_t`` over a convex polygon, segment or point.

    ``g_t`` is the modulus of the holomorphic function ``z^{1 - it/pi}`` on the
    slit plane, so the maximum sits on the boundary; each edge is sampled
    densely and the best sample refined by bounded scalar minimization.
    Polygons touching ``R_{<=0}`` are evaluated with the ``(-1, 1]`` branch
    and reported through ``flag``.
    """
    if not isinstance(P, BaseGeometry):
        pts = [complex(z) for z in P]
        P = Polygon([(z.real, z.imag) for z in pts]) if len(pts) >= 3 else MultiPoint(
            [(z.real, z.imag) for z in pts]).convex_hull
    best = -math.inf

    def g(z: complex) -> float:
        return 0.0 if z == 0 else g_t(z, t)

    for a, b in _segments(P):
        if flag is not None and min(a.imag, b.imag) <= 0 and min(a.real, b.real) < 0:
            flag.append((a, b))
        if a == b:
            best = max(best, g(a))
            continue
        lam = np.linspace(0.0, 1.0, samples + 1)
        zs = a + lam * (b - a)
        vals = np.abs(zs) * np.exp(t * np.where(zs == 0, 0.0, _phase_vec(zs)))
        vals = np.where(zs == 0, 0.0, vals)
        k = int(np.argmax(vals))
        best = max(best, float(vals[k]))
        lo, hi = lam[max(k - 1, 0)], lam[min(k + 1, samples)]
        res = minimize_scalar(lambda x: -g(a + x * (b - a)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13})
        best = max(best, -float(res.fun))
    return best


def _phase_vec(zs: np.ndarray) -> np.ndarray:
    p = np.arctan2(zs.imag, zs.real) / np.pi
    return np.where(p <= -1.0, 1.0, p)


def hn_region(seq: PhaseSequence) -> BaseGeometry:
    """Convex hull of the partial sums, the HN polygon of a heart object."""
    return HNPolygon.of(seq).region() if len(seq) else MultiPoint([(0.0, 0.0)]).convex_hull


@dataclass
class ImageBoundReport:
    brute_max: float
    bound: float
    holds: bool
    empty: bool = False
    branch_flag: bool = False

    @property
    def relative_excess(self) -> float:
        return (self.brute_max - self.bound) / max(1.0, abs(self.bound))


def image_bound(G: PhaseSequence, E: PhaseSequence, a: float, b: float, t: float) -> float:
    """The two-branch upper bound for ``g_t(Z(im delta))``."""
    if not (0 < a < 1 and 0 < b < 1):
        raise ValueError("a and b must lie in (0, 1)")
    Ga_lo, Ga_hi = G.truncate(a, "<="), G.truncate(a, ">")
    Eb_lo, Eb_hi = E.truncate(b, "<="), E.truncate(b, ">")
    top = Ga_lo.g_t(t) + math.exp(t * a) / math.sin(math.pi * a) * min(Ga_hi.total().imag, E.total().imag)
    bottom = Eb_hi.g_t(t) + math.exp(t * b) / math.sin(math.pi * b) * min(Eb_lo.total().imag, G.total().imag)
    return max(top, bottom)


def check_image_bound(G: PhaseSequence, E: PhaseSequence, a: float, b: float, t: float, *,
                      rel_tol: float = 1e-8) -> ImageBoundReport:
    """Brute-force ``max g_t`` on ``HN(E) ∩ (Z(G) - HN(G))`` against the bound."""
    for seq in (G, E):
        for p in seq.phases:
            if not 0 < p <= 1:
                raise ValueError("sequences must have phases in (0, 1]")
    zg = G.total()
    hn_e = hn_region(E)
    flipped = MultiPoint([(zg.real - z.real, zg.imag - z.imag) for z in G.partial_sums()]).convex_hull
    P = hn_e.intersection(flipped)
    bound = image_bound(G, E, a, b, t)
    if P.is_empty:
        return ImageBoundReport(0.0, bound, True, empty=True)
    flag: list = []
    brute = max_gt_on_polygon(P, t, flag=flag)
    holds = brute <= bound + rel_tol * max(1.0, abs(bound))
    return ImageBoundReport(brute, bound, holds, branch_flag=bool(flag))


def random_heart_sequence(rng, k_max: int = 4, lo: float = 0.02, hi: float = 0.98) -> PhaseSequence:
    k = int(rng.integers(1, k_max + 1))
    ph = rng.uniform(lo, hi, size=k)
    mod = np.exp(rng.normal(size=k))
    return PhaseSequence.sorted_from(mod * np.exp(1j * np.pi * ph))


# ----------------------------------------------------------------------
# truncated triangles and filtrations
# ----------------------------------------------------------------------
def r_eps(eps: float, t: float) -> float:
    """``r_eps(t) = e^{eps t} / sin(pi eps) * max(e^t, 1)``."""
    if not 0 < eps < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    return math.exp(eps * t) / math.sin(math.pi * eps) * max(math.exp(t), 1.0)


@dataclass
class TruncationReport:
    upper_slack: float
    lower_slack: float
    holds: bool


def check_truncated_triangle(muE: MassMeasure, muF: MassMeasure, muG: MassMeasure, t: float, a: float,
                             eps: float, *, tol: float = 1e-10) -> TruncationReport:
    """Slacks of the two truncated triangle inequalities (nonnegative when they hold)."""
    re_m, re_p = r_eps(eps, -t), r_eps(eps, t)
    upper = (_mt(truncate(muE, a - eps, ">"), t) + _mt(truncate(muG, a, ">"), t)
             + re_m * _mt(truncate(muG, a, "(]", a + 1), t) - _mt(truncate(muF, a, ">"), t))
    lower = (_mt(truncate(muE, a, "<="), t) + _mt(truncate(muG, a + eps, "<="), t)
             + re_p * _mt(truncate(muE, a - 1, "(]", a), t) - _mt(truncate(muF, a, "<="), t))
    scale = 1 + _mt(muE, t) + _mt(muF, t) + _mt(muG, t)
    return TruncationReport(upper, lower, upper >= -tol * scale and lower >= -tol * scale)


def filtration_constant(n: int, eps: float, t: float) -> float:
    """``C_{n,eps,t}`` in closed form."""
    rm, rp = r_eps(eps, -t), r_eps(eps, t)
    geo = ((1 + rm) ** (n - 1) - 1) / rm
    return (1 + math.exp(t)) * max((1 + math.exp(-t)) * geo, rp)


def filtration_constant_loop(n: int, eps: float, t: float) -> float:
    """``C_{n,eps,t}`` with the geometric factor summed term by term."""
    rm = math.exp(-eps * t) / math.sin(math.pi * eps) * max(math.exp(-t), 1.0)
    rp = math.exp(eps * t) / math.sin(math.pi * eps) * max(math.exp(t), 1.0)
    geo = 0.0
    power = 1.0
    for _ in range(n - 1):
        geo += power
        power *= 1 + rm
    a = (1 + math.exp(-t)) * geo
    return (1 + math.exp(t)) * (a if a > rp else rp)


@dataclass
class FiltrationReport:
    constant: float
    total: float
    mass_e: float
    correction: float
    left_holds: bool
    right_holds: bool


def check_filtration_inequality(F_list: Sequence[MassMeasure], muE: MassMeasure, a_list: Sequence[float],
                                eps: float, t: float, *, tol: float = 1e-10) -> FiltrationReport:
    """Both sides of ``m(E) <= sum m(F_i) <= m(E) + C * sum(...)``."""
    n = len(F_list)
    if len(a_list) != max(n - 1, 0):
        raise ValueError("need n - 1 cut points")
    if any(b <= a for a, b in zip(a_list, a_list[1:])):
        raise ValueError("cut points must be strictly increasing")
    C = filtration_constant(n, eps, t)
    total = sum(_mt(F, t) for F in F_list)
    me = _mt(muE, t)
    corr = sum(_mt(truncate(F_list[j + 1], a_list[j], "<="), t) + _mt(truncate(F_list[j], a_list[j] - eps, ">"), t)
               for j in range(n - 1))
    scale = 1 + total + me
    return FiltrationReport(C, total, me, corr, me <= total + tol * scale,
                            total <= me + C * corr + tol * scale)


def semisimple_filtration(rng, n: int, k_max: int = 3, spread: float = 1.5,
                          split: bool = False) -> tuple[list[MassMeasure], MassMeasure]:
    """A filtration ``E = E_n -> ... -> E_0 = 0`` in a semisimple category.

    Step ``i`` writes ``E_{i-1} = Q_i + K_i[1]``, picks a fresh ``I_i`` and
    sets ``E_i = I_i + Q_i`` and ``F_i = K_i + I_i``.  With ``split=True`` all
    ``K_i`` vanish, giving ``E = sum F_i``.
    """
    prev = MassMeasure()
    F_list = []
    for _ in range(n):
        I = random_measure(rng, k_max, spread, empty_ok=False)
        K_atoms, Q_atoms = [], []
        for th, w in prev.atoms:
            if split:
                Q_atoms.append((th, w))
                continue
            u = rng.random()
            if u < 0.3:
                K_atoms.append((th - 1, w))
            elif u < 0.6:
                Q_atoms.append((th, w))
            else:
                lam = rng.uniform(0.1, 0.9)
                K_atoms.append((th - 1, lam * w))
                Q_atoms.append((th, (1 - lam) * w))
        K, Q = MassMeasure(tuple(K_atoms)), MassMeasure(tuple(Q_atoms))
        F_list.append(K + I)
        prev = I + Q
    return F_list, prev


# ----------------------------------------------------------------------
# concentration bound
# ----------------------------------------------------------------------
def cosh_threshold(eps: float, t: float, s: float, delta: float) -> float:
    """``K = 1/2 + sqrt(1/4 + eps cosh(t delta)/cosh(s delta) - eps)``."""
    return 0.5 + math.sqrt(0.25 + eps * math.cosh(t * delta) / math.cosh(s * delta) - eps)


@dataclass
class CoshReport:
    K: float
    c: float
    hypothesis_holds: bool
    tails: float
    bound: float
    conclusion_holds: bool

    @property
    def ok(self) -> bool:
        return (not self.hypothesis_holds) or self.conclusion_holds


def check_cosh_mass_bound(mu: MassMeasure, t: float, s: float, delta: float, eps: float) -> CoshReport:
    """If ``c_t < K`` then the ``delta``-tails carry ``m^s`` below ``eps m e^{s mean}``."""
    if not t > abs(s) > 0:
        raise ValueError("need t > |s| > 0")
    if delta <= 0 or eps <= 0:
        raise ValueError("need delta > 0 and eps > 0")
    K = cosh_threshold(eps, t, s, delta)
    c = c_t(mu, t)
    mean = phi_t(mu, 0.0)
    tails = _mt(truncate(mu, mean - delta, "<="), s) + _mt(truncate(mu, mean + delta, ">="), s)
    bound = eps * mu.total * math.exp(s * mean)
    return CoshReport(K, c, c < K, tails, bound, tails < bound)
