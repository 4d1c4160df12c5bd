"""Coordinates on tori and their cooriented contact-element spaces.

Provides the point types, contact-form catalog, fiber-sphere charts and the
forward-mode jet arithmetic that the map catalog and the dissipation
machinery differentiate through.  Everything here is a pure function over
immutable values; batched evaluation just means the scalars are numpy
arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# Centralized tolerances: geometric identities / AD-vs-FD checks.
GEOM_TOL = 1e-9
AD_FD_TOL = 1e-5
UNIT_TOL = 1e-12

# n=3 fiber charts hand over when the direction comes this close to the
# projection pole of the active chart.
CHART_SWITCH = 0.1


class GeometryError(ValueError):
    """Invalid geometric data (zero covector, bad dimension, ...)."""


# ---------------------------------------------------------------------------
# Forward-mode jets
# ---------------------------------------------------------------------------

class Jet:
    """Value plus a vector of partial derivatives.

    ``value`` may be a float or an ndarray (batched evaluation); ``partials``
    carries one leading axis per seeded input variable and broadcasts against
    ``value``.  Arithmetic follows the exact chain and product rules.
    """

    __slots__ = ("value", "partials")

    def __init__(self, value, partials):
        self.value = value
        self.partials = np.asarray(partials, dtype=float)

    def __repr__(self):
        return f"Jet({self.value!r}, {self.partials!r})"

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value + other.value, self.partials + other.partials)
        return Jet(self.value + other, self.partials)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.value, -self.partials)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.value - other.value, self.partials - other.partials)
        return Jet(self.value - other, self.partials)

    def __rsub__(self, other):
        return Jet(other - self.value, -self.partials)

    def __mul__(self, other):
        if isinstance(other, Jet):
            return Jet(
                self.value * other.value,
                self.value * other.partials + other.value * self.partials,
            )
        return Jet(self.value * other, self.partials * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            inv = 1.0 / other.value
            return Jet(
                self.value * inv,
                (self.partials - (self.value * inv) * other.partials) * inv,
            )
        return Jet(self.value / other, self.partials / other)

    def __rtruediv__(self, other):
        inv = 1.0 / self.value
        return Jet(other * inv, -(other * inv * inv) * self.partials)


def jval(x):
    """Plain value of a jet or pass-through for non-jets."""
    return x.value if isinstance(x, Jet) else x


def jsin(x):
    if isinstance(x, Jet):
        return Jet(np.sin(x.value), np.cos(x.value) * x.partials)
    return np.sin(x)


def jcos(x):
    if isinstance(x, Jet):
        return Jet(np.cos(x.value), -np.sin(x.value) * x.partials)
    return np.cos(x)


def jsqrt(x):
    if isinstance(x, Jet):
        r = np.sqrt(x.value)
        return Jet(r, x.partials / (2.0 * r))
    return np.sqrt(x)


def jatan2(y, x):
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        return np.arctan2(y, x)
    yv, xv = jval(y), jval(x)
    r2 = xv * xv + yv * yv
    val = np.arctan2(yv, xv)
    num = 0.0
    if isinstance(y, Jet):
        num = num + xv * y.partials
    if isinstance(x, Jet):
        num = num - yv * x.partials
    return Jet(val, num / r2)


def jmod1(x):
    """Reduce mod 1; the derivative of the sawtooth is 1 a.e."""
    if isinstance(x, Jet):
        return Jet(np.mod(x.value, 1.0), x.partials)
    return np.mod(x, 1.0)


def seed_jets(values: Sequence) -> list[Jet]:
    """Turn m scalars (or arrays) into jets carrying the identity seed."""
    vals = [np.asarray(v, dtype=float) for v in values]
    m = len(vals)
    shape = np.broadcast_shapes(*(v.shape for v in vals)) if vals else ()
    jets = []
    for i, v in enumerate(vals):
        d = np.zeros((m,) + shape)
        d[i] = 1.0
        jets.append(Jet(v if v.shape else float(v), d))
    return jets


def jacobian(phi: Callable, x: Sequence[float]) -> np.ndarray:
    """Exact-to-roundoff Jacobian of ``phi`` at ``x`` via jets.

    ``phi`` maps a list of jet-compatible scalars to a list of outputs.
    """
    outs = phi(seed_jets(x))
    m = len(x)
    rows = []
    for o in outs:
        if isinstance(o, Jet):
            rows.append(np.asarray(o.partials, dtype=float))
        else:
            rows.append(np.zeros(m))
    return np.array(rows)


# ---------------------------------------------------------------------------
# Point types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorusPoint:
    """Base point with angular coordinates, each stored in [0, 1)."""

    q: tuple[float, ...]

    def __init__(self, q):
        coords = tuple(float(c) % 1.0 for c in q)
        if len(coords) not in (2, 3):
            raise GeometryError(f"torus dimension must be 2 or 3, got {len(coords)}")
        object.__setattr__(self, "q", coords)

    @property
    def n(self) -> int:
        return len(self.q)


def wrap(q: Sequence[float]) -> TorusPoint:
    """Reduce coordinates mod 1 into [0, 1)."""
    return TorusPoint(q)


@dataclass(frozen=True)
class Direction:
    """Unit fiber direction; for n=2 also available as an angle in revolutions."""

    u: tuple[float, ...]

    def __init__(self, u):
        vec = np.asarray(u, dtype=float)
        norm = float(np.linalg.norm(vec))
        if norm == 0.0 or not np.isfinite(norm):
            raise GeometryError("direction must be a nonzero finite vector")
        vec = vec / norm
        if vec.shape[0] not in (2, 3):
            raise GeometryError(f"fiber dimension must be 2 or 3, got {vec.shape[0]}")
        object.__setattr__(self, "u", tuple(float(c) for c in vec))

    @classmethod
    def from_angle(cls, theta: float) -> "Direction":
        a = TWO_PI * theta
        return cls((math.cos(a), math.sin(a)))

    @property
    def n(self) -> int:
        return len(self.u)

    @property
    def theta(self) -> float:
        if self.n != 2:
            raise GeometryError("angle coordinate only defined for n=2")
        return math.atan2(self.u[1], self.u[0]) / TWO_PI % 1.0


@dataclass(frozen=True)
class CEPoint:
    """Point of the space of cooriented contact elements over the torus."""

    u: Direction
    q: TorusPoint

    def __post_init__(self):
        if self.u.n != self.q.n:
            raise GeometryError("fiber and base dimensions differ")

    @property
    def n(self) -> int:
        return self.q.n


@dataclass(frozen=True)
class CotangentPoint:
    """Nonzero covector over a torus point."""

    p: tuple[float, ...]
    q: TorusPoint

    def __post_init__(self):
        vec = np.asarray(self.p, dtype=float)
        if float(np.linalg.norm(vec)) == 0.0:
            raise GeometryError("not in T*_0: zero covector")
        if vec.shape[0] != self.q.n:
            raise GeometryError("covector and base dimensions differ")
        object.__setattr__(self, "p", tuple(float(c) for c in vec))

    def direction(self) -> Direction:
        return Direction(self.p)


# ---------------------------------------------------------------------------
# Contact forms
# ---------------------------------------------------------------------------

class ContactForm:
    """Positive profile multiplying the round contact form.

    Subclasses implement ``profile(u, q)`` where ``u`` and ``q`` are sequences
    of jet-compatible scalars; the result must be positive everywhere and
    periodic in the base and fiber variables.
    """

    def profile(self, u, q):
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError


class RoundForm(ContactForm):
    """The round form: profile identically 1."""

    def profile(self, u, q):
        return 1.0

    def spec(self):
        return {"kind": "round"}


class ConstantForm(ContactForm):
    def __init__(self, c: float):
        if not (c > 0.0):
            raise GeometryError("constant profile must be positive")
        self.c = float(c)

    def profile(self, u, q):
        return self.c

    def spec(self):
        return {"kind": "constant", "value": self.c}


@dataclass(frozen=True)
class TrigTerm:
    """amp * u^powers * cos(2 pi k.q)  (sin when use_sin is set)."""

    amp: float
    q_freq: tuple[int, ...]
    u_powers: tuple[int, ...] = ()
    use_sin: bool = False


class TrigForm(ContactForm):
    """Constant plus a trigonometric polynomial in q and the fiber direction.

    Fiber dependence enters through monomials in the components of u, which
    keeps the profile automatically periodic in the fiber angle.
    """

    def __init__(self, c0: float, terms: Sequence[TrigTerm]):
        self.c0 = float(c0)
        self.terms = tuple(terms)

    def profile(self, u, q):
        total = self.c0
        for t in self.terms:
            phase = 0.0
            for k, qi in zip(t.q_freq, q):
                if k:
                    phase = phase + (TWO_PI * k) * qi
            osc = jsin(phase) if t.use_sin else jcos(phase)
            term = t.amp * osc
            for pw, ui in zip(t.u_powers, u):
                for _ in range(pw):
                    term = term * ui
            total = total + term
        return total

    def spec(self):
        return {
            "kind": "trig",
            "c0": self.c0,
            "terms": [
                {
                    "amp": t.amp,
                    "q_freq": list(t.q_freq),
                    "u_powers": list(t.u_powers),
                    "use_sin": t.use_sin,
                }
                for t in self.terms
            ],
        }


class MetricForm(ContactForm):
    """Profile of the unit codisk bundle of a flat metric G.

    The defining hypersurface is the unit cosphere of G, so the radius in
    direction u is 1/sqrt(u . G^{-1} u); the profile does not depend on q.
    """

    def __init__(self, g: np.ndarray):
        g = np.asarray(g, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise GeometryError("metric must be a square matrix")
        if not np.allclose(g, g.T):
            raise GeometryError("metric must be symmetric")
        if np.min(np.linalg.eigvalsh(g)) <= 1e-10:
            raise GeometryError("metric must be positive definite")
        self.g = g
        self.g_inv = np.linalg.inv(g)

    def profile(self, u, q):
        quad = 0.0
        k = self.g_inv.shape[0]
        for i in range(k):
            for j in range(k):
                c = self.g_inv[i, j]
                if c != 0.0:
                    quad = quad + c * (u[i] * u[j])
        return 1.0 / jsqrt(quad)

    def spec(self):
        return {"kind": "metric", "g": self.g.tolist()}


class PullbackForm(ContactForm):
    """The base form pulled back by the canonical lift of q -> Mq.

    The lifted symplectomorphism sends (p, q) to (M^{-T} p, Mq), so the
    pulled-back profile is F(w/|w|, Mq)/|w| with w = M^{-T} u.
    """

    def __init__(self, matrix, base: ContactForm):
        m = np.asarray(matrix, dtype=float)
        if abs(round(float(np.linalg.det(m)))) != 1:
            raise GeometryError("lift matrix must be unimodular")
        self.matrix = np.asarray(matrix, dtype=int)
        self.m_inv_t = np.linalg.inv(m).T
        self.base = base

    def profile(self, u, q):
        k = self.m_inv_t.shape[0]
        w = []
        for i in range(k):
            acc = 0.0
            for j in range(k):
                c = self.m_inv_t[i, j]
                if c != 0.0:
                    acc = acc + c * u[j]
            w.append(acc)
        norm = jsqrt(sum(wi * wi for wi in w))
        w_hat = [wi / norm for wi in w]
        mq = []
        for i in range(k):
            acc = 0.0
            for j in range(k):
                c = self.matrix[i, j]
                if c != 0:
                    acc = acc + float(c) * q[j]
            mq.append(acc)
        return self.base.profile(w_hat, mq) / norm

    def spec(self):
        return {
            "kind": "linear_pullback",
            "matrix": self.matrix.tolist(),
            "base": self.base.spec(),
        }


def check_positive(form: ContactForm, n: int, q_res: int = 64, fiber_res: int = 256):
    """Sampled positivity check over a q grid x fiber grid; raises on failure."""
    u, q = _product_grid(n, q_res, fiber_res)
    vals = np.asarray(form.profile(list(u), list(q)), dtype=float)
    low = float(np.min(vals))
    if not low > 0.0:
        raise GeometryError(f"contact form profile not positive (sampled min {low})")
    return low


def norm_of(z: CotangentPoint, form: ContactForm) -> float:
    """|z| for the section of the cotangent bundle cut out by the form."""
    p = np.asarray(z.p)
    norm = float(np.linalg.norm(p))
    u = p / norm
    f = float(jval(form.profile(list(u), list(z.q.q))))
    return norm / f


def eval_form(form: ContactForm, x: CEPoint) -> np.ndarray:
    """Coefficients of the form at x in the chart coordinates.

    Ordering is (fiber coordinates..., dq...); the fiber block is always 0.
    """
    comps = eval_form_components(form, x.u.u, x.q.q, x.n)
    return np.array([float(c) for c in comps])


def eval_form_components(form: ContactForm, u, q, n: int):
    """Chart coefficients with batched (array) inputs allowed."""
    f = form.profile(list(u), list(q))
    fiber_zeros = n - 1
    out = [0.0] * fiber_zeros
    for i in range(n):
        out.append(f * u[i])
    return out


# ---------------------------------------------------------------------------
# Sphere grids
# ---------------------------------------------------------------------------

def sphere_grid_array(n: int, resolution: int) -> np.ndarray:
    """(resolution, n) array of unit fiber directions."""
    if resolution < 4:
        raise GeometryError("resolution must be at least 4")
    if n == 2:
        theta = np.arange(resolution) / resolution
        return np.stack([np.cos(TWO_PI * theta), np.sin(TWO_PI * theta)], axis=1)
    if n == 3:
        i = np.arange(resolution)
        z = 1.0 - (2.0 * i + 1.0) / resolution
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = i * math.pi * (3.0 - math.sqrt(5.0))
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    raise GeometryError(f"unsupported dimension {n}")


def sphere_grid(n: int, resolution: int) -> list[Direction]:
    return [Direction(row) for row in sphere_grid_array(n, resolution)]


def _product_grid(n: int, q_res: int, fiber_res: int):
    """Flattened fiber x base product grid as component arrays."""
    dirs = sphere_grid_array(n, fiber_res)
    axes = [np.arange(q_res) / q_res for _ in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    qs = np.stack([m.ravel() for m in mesh], axis=1)
    nd, nq = dirs.shape[0], qs.shape[0]
    u = [np.repeat(dirs[:, i], nq) for i in range(n)]
    q = [np.tile(qs[:, i], nd) for i in range(n)]
    return u, q


# ---------------------------------------------------------------------------
# Fiber charts
# ---------------------------------------------------------------------------

def chart_dim(n: int) -> int:
    return 2 * n - 1


def select_chart(u) -> int:
    """Chart index at a direction: n=2 has a single global chart."""
    if len(u) == 2:
        return 0
    return 0 if jval(u[2]) < 1.0 - CHART_SWITCH else 1


def select_chart_batch(u3: np.ndarray) -> np.ndarray:
    return (u3 >= 1.0 - CHART_SWITCH).astype(int)


def chart_decode(n: int, chart: int, coords):
    """Chart coordinates -> (u components, q components), jet-compatible."""
    if n == 2:
        theta = coords[0]
        a = TWO_PI * theta
        return [jcos(a), jsin(a)], list(coords[1:])
    a, b = coords[0], coords[1]
    denom = 1.0 + a * a + b * b
    if chart == 0:
        # Stereographic from the north pole; singular only at u3 = +1.
        u = [2.0 * a / denom, 2.0 * b / denom, (a * a + b * b - 1.0) / denom]
    else:
        u = [2.0 * a / denom, 2.0 * b / denom, (1.0 - a * a - b * b) / denom]
    return u, list(coords[2:])


def chart_encode(n: int, chart: int, u, q):
    """(u, q) -> chart coordinates; torus coordinates reduced mod 1."""
    if n == 2:
        theta = jmod1(jatan2(u[1], u[0]) / TWO_PI)
        return [theta] + [jmod1(qi) for qi in q]
    if chart == 0:
        denom = 1.0 - u[2]
    else:
        denom = 1.0 + u[2]
    return [u[0] / denom, u[1] / denom] + [jmod1(qi) for qi in q]


def point_to_chart(x: CEPoint) -> tuple[int, list[float]]:
    chart = select_chart(x.u.u)
    coords = chart_encode(x.n, chart, list(x.u.u), list(x.q.q))
    return chart, [float(jval(c)) for c in coords]


def chart_to_point(n: int, chart: int, coords) -> CEPoint:
    u, q = chart_decode(n, chart, coords)
    return CEPoint(Direction([float(jval(c)) for c in u]), wrap([float(jval(c)) for c in q]))
