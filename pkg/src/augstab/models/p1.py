r"""The augmented stability manifold of the projective line.

Points of the extended plane ``C_+ = (-inf, inf] + iR`` are stored as
``x + i pi (k + theta)`` with an integer strip index ``k`` and
``theta in [0, 1)``.  The generator of the ``Z``-action, tensoring with
``O(1)``, is ``tau -> tau + i pi``; on the stored form it is ``k -> k + 1``,
so equivariance holds exactly.  The map ``F`` sends

* a finite point of strip ``k`` to ``O(k)`` tensored with the stability
  condition ``B_1(x + i pi theta)``, recorded through its coordinate
  ``l(O(k+1)) - l(O(k))`` (given by the Bessel coordinate), and
* a point ``inf + i pi (k + theta)`` to the two-terminal augmented point with
  ``C_{<=v1} = <O(k+1)>`` and normalized period ``e^{i pi theta}``;
  at ``theta = 0`` the second category is the whole category.

Paths escaping to ``x -> -inf`` approach the non-admissible point
``sigma_0`` whose first category is spanned by the torsion complexes.
"""
from __future__ import annotations

import cmath
import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..moduli import LimitOptions, classify_trend
from .bessel import U_MAX, p1_bessel_coordinate

__all__ = [
    "P1Point",
    "parse_tau",
    "F_map",
    "p1_F_map",
    "SIGMA0",
    "P1Limit",
    "p1_boundary_limit",
    "okada_curve",
    "okada_above",
    "strip_csv",
    "diagnostics",
]

X_MAX = math.log(U_MAX)


def parse_tau(text: str) -> complex:
    """Parse ``"3.0+0.9416i"``, ``"inf+0.5i"`` or any Python complex literal."""
    s = text.strip().replace(" ", "").replace("I", "j").replace("i", "j")
    s = s.replace("jnf", "inf")
    try:
        return complex(s)
    except ValueError as exc:
        raise ValueError(f"cannot parse tau {text!r}") from exc


@dataclass(frozen=True)
class P1Point:
    """``x + i pi (k + theta)`` with ``x in (-inf, inf]`` and ``theta in [0, 1)``."""

    x: float
    k: int
    theta: float

    def __post_init__(self) -> None:
        if math.isnan(self.x) or self.x == -math.inf:
            raise ValueError("x must lie in (-inf, inf]")
        if not 0 <= self.theta < 1:
            raise ValueError("theta must lie in [0, 1)")

    @classmethod
    def from_tau(cls, tau: complex) -> "P1Point":
        tau = complex(tau)
        y = tau.imag / math.pi
        k = math.floor(y)
        theta = y - k
        if theta >= 1:
            k, theta = k + 1, 0.0
        return cls(tau.real, int(k), theta)

    @property
    def is_boundary(self) -> bool:
        return self.x == math.inf

    @property
    def tau(self) -> complex:
        return complex(self.x, math.pi * (self.k + self.theta))

    @property
    def reduced_tau(self) -> complex:
        """The representative in the fundamental strip ``R + i pi [0, 1)``."""
        return complex(self.x, math.pi * self.theta)

    def act(self, n: int) -> "P1Point":
        """Tensor with ``O(n)``."""
        return P1Point(self.x, self.k + int(n), self.theta)


SIGMA0 = {
    "kind": "nonadmissible",
    "name": "sigma_0",
    "C_le_v1": "torsion complexes",
    "C_le_v2": "DCoh(P1)",
}


def F_map(p: P1Point, *, with_value: bool = True) -> dict:
    """Descriptor of ``F(p)``; equivariant: ``F_map(p.act(n))`` shifts every index by ``n``."""
    if p.is_boundary:
        out = {
            "kind": "boundary",
            "tree": "two terminals v1, v2",
            "C_le_v1": f"<O({p.k + 1})>",
            "C_le_v2": "DCoh(P1)" if p.theta == 0 else f"<O({p.k + 2})>",
            "p_v1_v2": [math.cos(math.pi * p.theta), math.sin(math.pi * p.theta)],
            "theta": p.theta,
            "corner": p.theta == 0,
        }
        return out
    out = {
        "kind": "interior",
        "twist": p.k,
        "stable": [f"O({p.k})", f"O({p.k + 1})"],
        "tau1": [p.x, math.pi * p.theta],
    }
    if with_value:
        v = p1_bessel_coordinate(p.reduced_tau)
        out["coordinate"] = [v.real, v.imag]
        out["coordinate_of"] = f"l(O({p.k + 1})) - l(O({p.k}))"
    return out


p1_F_map = F_map


# ----------------------------------------------------------------------
# limits of paths
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class P1Limit:
    """``verdict`` is ``boundary``, ``interior``, ``nonadmissible`` or ``undecided``."""

    verdict: str
    reason: str = ""
    point: P1Point | None = None
    angle: complex | None = None
    coordinate_angle: complex | None = None
    value: complex | None = None

    def to_json(self) -> dict:
        def enc(z):
            return None if z is None else [z.real, z.imag]

        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "point": None if self.point is None else {"x": self.point.x, "k": self.point.k, "theta": self.point.theta},
            "angle": enc(self.angle),
            "coordinate_angle": enc(self.coordinate_angle),
            "value": enc(self.value),
        }


def _escapes(x: np.ndarray, sign: int, x_escape: float, opts: LimitOptions) -> bool:
    """Non-decreasing (in ``sign * x``) tail beyond ``x_escape`` that does not settle."""
    big = np.finfo(float).max
    xs = np.clip(sign * x, -big, big)
    if not (np.all(np.diff(xs) >= 0) and xs[-1] > x_escape):
        return False
    if np.isinf(sign * x[-1]) and sign * x[-1] > 0:
        return True
    return classify_trend(xs, opts).kind != "convergent"


def p1_boundary_limit(tau_seq: Sequence[complex], options: LimitOptions | None = None,
                      x_escape: float = 8.0) -> P1Limit:
    """Limit of a path in ``(-inf, inf] + i pi [0, 1]``.

    ``x_n -> inf`` with ``y_n -> y`` gives the boundary point with angle
    ``e^{i pi y}``; the returned ``coordinate_angle`` is ``v/(1+|v|)`` for
    the Bessel coordinate ``v`` of the last sample that can be evaluated.
    Convergent ``tau_n`` give an interior limit and ``x_n -> -inf`` the
    point ``sigma_0``.
    """
    opts = options or LimitOptions()
    tau = [complex(t) for t in tau_seq]
    if len(tau) < opts.tail:
        raise ValueError(f"need at least {opts.tail} samples")
    tail = tau[-opts.tail:]
    for t in tail:
        y = t.imag / math.pi
        if not -1e-12 <= y <= 1 + 1e-12:
            raise ValueError("samples must lie in the strip Im in [0, pi]")
    x = np.array([t.real for t in tail])
    ytr = classify_trend([t.imag / math.pi for t in tail], opts)
    if _escapes(x, +1, x_escape, opts):
        if ytr.kind != "convergent":
            return P1Limit("undecided", "Im tau does not settle")
        y = float(ytr.limit.real)
        if abs(y - round(y)) <= opts.tol:
            y = float(round(y))
        angle = cmath.exp(1j * math.pi * y)
        coord = None
        for t in reversed(tail):
            if t.real <= X_MAX:
                v = p1_bessel_coordinate(t)
                coord = v / (1 + abs(v))
                break
        return P1Limit("boundary", "", P1Point.from_tau(complex(math.inf, math.pi * y)), angle, coord)
    if _escapes(x, -1, x_escape, opts):
        return P1Limit("nonadmissible", "x tends to -inf; the limit is sigma_0")
    xtr = classify_trend(x, opts)
    if xtr.kind == "convergent" and ytr.kind == "convergent":
        lim = complex(xtr.limit.real, math.pi * ytr.limit.real)
        return P1Limit("interior", "", P1Point.from_tau(lim), value=p1_bessel_coordinate(lim))
    return P1Limit("undecided", "the path neither settles nor escapes monotonically")


# ----------------------------------------------------------------------
# plot data
# ----------------------------------------------------------------------
def okada_curve(x: float) -> float:
    """``y`` with ``e^{|x|} cos y = 1``, the lower edge of the fundamental domain in coordinates."""
    return math.acos(math.exp(-abs(x)))


def okada_above(w: complex) -> bool:
    """Whether ``w`` lies in the upper half plane above the curve ``e^{|x|} cos y = 1`` (plotting aid)."""
    return 0 < w.imag < math.pi and (w.imag >= math.pi / 2 or math.exp(abs(w.real)) * math.cos(w.imag) < 1)


def strip_csv(xs: Iterable[float], thetas: Iterable[float]) -> str:
    """Grid of the fundamental strip and its Bessel coordinates as CSV."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "theta", "re_v", "im_v", "re_angle", "im_angle", "okada_above"])
    thetas = list(thetas)
    for x in xs:
        for th in thetas:
            v = p1_bessel_coordinate(complex(x, math.pi * th))
            a = v / (1 + abs(v))
            w.writerow([repr(float(x)), repr(float(th)), repr(v.real), repr(v.imag),
                        repr(a.real), repr(a.imag), int(okada_above(v))])
    return buf.getvalue()


def diagnostics(tau: complex) -> dict:
    """Coordinate value and the nearest boundary point ``inf + i pi y`` for a finite ``tau``."""
    p = P1Point.from_tau(tau)
    if p.is_boundary:
        return {"tau": [tau.real, tau.imag], "descriptor": F_map(p)}
    v = p1_bessel_coordinate(p.reduced_tau)
    a = v / (1 + abs(v))
    target = cmath.exp(1j * math.pi * p.theta)
    u = cmath.exp(p.reduced_tau)
    return {
        "tau": [tau.real, tau.imag],
        "strip": p.k,
        "theta": p.theta,
        "abs_u": abs(u),
        "method": "series" if abs(u) <= 8 else "asymptotic",
        "value": [v.real, v.imag],
        "normalized_value": [a.real, a.imag],
        "nearest_boundary": {"descriptor": F_map(P1Point(math.inf, p.k, p.theta)),
                             "angle_gap": abs(a - target)},
        "large_x_relative_error": abs(v - (0.5j * math.pi + 2 * u)) / abs(u),
        "descriptor": F_map(p, with_value=False),
    }
