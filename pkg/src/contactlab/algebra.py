"""Exact integer-matrix spectral invariants and word growth in groups.

Matrices are tuples of tuples of Python ints so that characteristic
polynomials, inverses and powers stay exact; eigenvalue moduli go through a
square-free split followed by simultaneous (Durand-Kerner) root iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

IntMatrix = tuple[tuple[int, ...], ...]

ROOT_TOL = 1e-10
HYPERBOLIC_EPS = 1e-8


class AlgebraError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Exact matrix arithmetic
# ---------------------------------------------------------------------------

def as_matrix(rows) -> IntMatrix:
    mat = tuple(tuple(int(c) for c in row) for row in rows)
    k = len(mat)
    if k == 0 or k > 6 or any(len(r) != k for r in mat):
        raise AlgebraError("need a square integer matrix of size at most 6")
    return mat


def identity_matrix(k: int) -> IntMatrix:
    return tuple(tuple(1 if i == j else 0 for j in range(k)) for i in range(k))


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    k = len(a)
    return tuple(
        tuple(sum(a[i][l] * b[l][j] for l in range(k)) for j in range(k))
        for i in range(k)
    )


def mat_vec(a: IntMatrix, v: Sequence[int]) -> tuple[int, ...]:
    return tuple(sum(row[j] * int(v[j]) for j in range(len(row))) for row in a)


def mat_pow(a: IntMatrix, n: int) -> IntMatrix:
    if n < 0:
        return mat_pow(mat_inverse(a), -n)
    result = identity_matrix(len(a))
    base = a
    while n:
        if n & 1:
            result = mat_mul(result, base)
        base = mat_mul(base, base)
        n >>= 1
    return result


def determinant(a: IntMatrix) -> int:
    """Fraction-free (Bareiss) determinant."""
    k = len(a)
    m = [list(row) for row in a]
    sign = 1
    prev = 1
    for i in range(k - 1):
        if m[i][i] == 0:
            for r in range(i + 1, k):
                if m[r][i] != 0:
                    m[i], m[r] = m[r], m[i]
                    sign = -sign
                    break
            else:
                return 0
        for r in range(i + 1, k):
            for c in range(i + 1, k):
                m[r][c] = (m[r][c] * m[i][i] - m[r][i] * m[i][c]) // prev
            m[r][i] = 0
        prev = m[i][i]
    return sign * m[k - 1][k - 1]


def _minor(a: IntMatrix, i: int, j: int) -> IntMatrix:
    return tuple(
        tuple(a[r][c] for c in range(len(a)) if c != j)
        for r in range(len(a))
        if r != i
    )


def mat_inverse(a: IntMatrix) -> IntMatrix:
    """Exact inverse of a unimodular matrix (adjugate over det = +-1)."""
    det = determinant(a)
    if det not in (1, -1):
        raise AlgebraError(f"matrix is not unimodular (det {det})")
    k = len(a)
    if k == 1:
        return ((det,),)
    adj = tuple(
        tuple((-1) ** (i + j) * determinant(_minor(a, j, i)) for j in range(k))
        for i in range(k)
    )
    return tuple(tuple(det * e for e in row) for row in adj)


def mat_transpose(a: IntMatrix) -> IntMatrix:
    return tuple(tuple(a[j][i] for j in range(len(a))) for i in range(len(a)))


def trace(a: IntMatrix) -> int:
    return sum(a[i][i] for i in range(len(a)))


# ---------------------------------------------------------------------------
# Exact polynomials (coefficient lists, highest degree first)
# ---------------------------------------------------------------------------

def charpoly(a: IntMatrix) -> list[int]:
    """Monic characteristic polynomial via the Faddeev-LeVerrier recursion."""
    k = len(a)
    coeffs = [1]
    m = identity_matrix(k)
    for i in range(1, k + 1):
        m = mat_mul(a, m)
        t = trace(m)
        if t % i != 0:
            raise AlgebraError("Faddeev-LeVerrier division not exact")
        c = -(t // i)
        coeffs.append(c)
        m = tuple(
            tuple(m[r][s] + (c if r == s else 0) for s in range(k)) for r in range(k)
        )
    return coeffs


def poly_deriv(p: list) -> list:
    n = len(p) - 1
    return [c * (n - i) for i, c in enumerate(p[:-1])] or [0]


def poly_mul(p: list, q: list) -> list:
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return out


def poly_divmod(p: list, q: list):
    """Division over the rationals; exact Fractions throughout."""
    p = [Fraction(c) for c in p]
    q = [Fraction(c) for c in q]
    if all(c == 0 for c in q):
        raise ZeroDivisionError("polynomial division by zero")
    out = []
    while len(p) >= len(q) and any(c != 0 for c in p):
        factor = p[0] / q[0]
        out.append(factor)
        for i, c in enumerate(q):
            p[i] -= factor * c
        p.pop(0)
    return out or [Fraction(0)], p or [Fraction(0)]


def poly_div_exact_int(p: list[int], q: list[int]) -> list[int] | None:
    """Quotient if q divides p exactly over the integers, else None."""
    quo, rem = poly_divmod(p, q)
    if any(c != 0 for c in rem):
        return None
    if any(c.denominator != 1 for c in quo):
        return None
    return [int(c) for c in quo]


def _poly_gcd(p: list, q: list) -> list:
    """Monic gcd over the rationals, returned as primitive integer coeffs."""
    a = [Fraction(c) for c in p]
    b = [Fraction(c) for c in q]
    while any(c != 0 for c in b):
        _, r = poly_divmod(a, b)
        while len(r) > 1 and r[0] == 0:
            r.pop(0)
        a, b = b, r if any(c != 0 for c in r) else [Fraction(0)]
    lead = a[0]
    monic = [c / lead for c in a]
    denom = math.lcm(*(c.denominator for c in monic))
    ints = [int(c * denom) for c in monic]
    g = math.gcd(*(abs(c) for c in ints)) or 1
    return [c // g for c in ints]


def squarefree_factors(p: list[int]) -> list[tuple[list[int], int]]:
    """p = prod f_i^i with f_i square-free and pairwise coprime."""
    factors = []
    a = list(p)
    i = 1
    while len(a) > 1:
        g = _poly_gcd(a, poly_deriv(a))
        if len(g) == 1:
            factors.append((a, i))
            break
        b = poly_div_exact_int(a, g)
        c = _poly_gcd(b, g)
        f = poly_div_exact_int(b, c)
        if f is None or b is None:
            raise AlgebraError("square-free decomposition failed")
        if len(f) > 1:
            factors.append((f, i))
        a = g
        i += 1
    return factors


def poly_eval_complex(p: list, z: complex) -> complex:
    acc = 0j
    for c in p:
        acc = acc * z + c
    return acc


def durand_kerner(p: list[int], tol: float = ROOT_TOL, max_iter: int = 2000):
    """All complex roots of a square-free integer polynomial."""
    deg = len(p) - 1
    if deg == 0:
        return []
    lead = p[0]
    monic = [c / lead for c in p]
    radius = 1.0 + max(abs(c) for c in monic[1:]) if deg else 1.0
    roots = [radius * (0.4 + 0.9j) ** k for k in range(deg)]
    for _ in range(max_iter):
        shift = 0.0
        new = []
        for i, z in enumerate(roots):
            denom = 1.0 + 0j
            for j, w in enumerate(roots):
                if i != j:
                    denom *= z - w
            dz = poly_eval_complex(monic, z) / denom
            new.append(z - dz)
            shift = max(shift, abs(dz))
        roots = new
        if shift < tol:
            return roots
    raise AlgebraError("root iteration did not converge")


# ---------------------------------------------------------------------------
# Spectral invariants
# ---------------------------------------------------------------------------

def eigen_moduli(m: IntMatrix) -> list[float]:
    """Sorted moduli of all complex eigenvalues, with multiplicity."""
    m = as_matrix(m)
    p = charpoly(m)
    moduli: list[float] = []
    for factor, mult in squarefree_factors(p):
        for root in durand_kerner(factor):
            moduli.extend([abs(root)] * mult)
    moduli.sort()
    return moduli


def s_value(m: IntMatrix) -> float:
    """Maximal |log| of an eigenvalue modulus; hyperbolic iff positive."""
    return max(abs(math.log(r)) for r in eigen_moduli(m))


def is_hyperbolic(m: IntMatrix) -> bool:
    return s_value(m) > HYPERBOLIC_EPS


@lru_cache(maxsize=None)
def cyclotomic(d: int) -> tuple[int, ...]:
    """Coefficients of the d-th cyclotomic polynomial."""
    p = [1] + [0] * (d - 1) + [-1]  # x^d - 1
    for e in range(1, d):
        if d % e == 0:
            q = poly_div_exact_int(p, list(cyclotomic(e)))
            if q is None:
                raise AlgebraError("cyclotomic recursion failed")
            p = q
    return tuple(p)


def _euler_phi(d: int) -> int:
    return len(cyclotomic(d)) - 1


def is_periodic(m: IntMatrix) -> tuple[bool, int | None]:
    """Whether some power of the matrix is the identity, and its order.

    Trial-divides the characteristic polynomial by cyclotomic polynomials;
    a direct power check then also catches non-semisimple unipotent parts.
    """
    m = as_matrix(m)
    if determinant(m) not in (1, -1):
        raise AlgebraError("periodicity test expects a unimodular matrix")
    k = len(m)
    p = charpoly(m)
    orders = []
    d = 1
    while _candidates_remaining(d, k):
        if _euler_phi(d) <= k:
            while True:
                q = poly_div_exact_int(p, list(cyclotomic(d)))
                if q is None:
                    break
                p = q
                orders.append(d)
                if len(p) == 1:
                    break
        if len(p) == 1:
            break
        d += 1
    if len(p) > 1:
        return (False, None)
    order = math.lcm(*orders) if orders else 1
    if mat_pow(m, order) == identity_matrix(k):
        return (True, order)
    return (False, None)


def _candidates_remaining(d: int, k: int) -> bool:
    # phi(d) > k for all d > 2 k^2 + 1 comfortably; small bound for k <= 6
    return d <= 4 * k * k + 2


def a_block(i_mat: IntMatrix) -> tuple[IntMatrix, int, int]:
    """Split a 3x3 action in the basis ([dtheta], [dq1], [dq2]).

    Returns the 2x2 base block together with the two shear integers; raises
    when the fiber class line is not fixed, since such an automorphism is not
    realized by any contactomorphism of the contact-element space.
    """
    i_mat = as_matrix(i_mat)
    if len(i_mat) != 3:
        raise AlgebraError("block extraction needs a 3x3 matrix")
    col0 = tuple(i_mat[r][0] for r in range(3))
    if col0 != (1, 0, 0):
        raise AlgebraError("not representable by a contactomorphism: fiber class moves")
    block = ((i_mat[1][1], i_mat[1][2]), (i_mat[2][1], i_mat[2][2]))
    return block, i_mat[0][1], i_mat[0][2]


# ---------------------------------------------------------------------------
# Growth rates
# ---------------------------------------------------------------------------

def _log_big(x: int) -> float:
    return math.log(x)  # math.log handles arbitrary-precision ints


def growth_slope(log_values: Sequence[float], tail: float = 0.5) -> float:
    """Least-squares slope over the trailing part of a series."""
    n = len(log_values)
    start = min(n - 2, int(n * (1.0 - tail)))
    ys = np.asarray(log_values[start:], dtype=float)
    xs = np.arange(start, n, dtype=float)
    return float(np.polyfit(xs, ys, 1)[0])


def abelian_bar_s(m: IntMatrix, sample_classes: Sequence[Sequence[int]], n_steps: int) -> float:
    """Exponential growth rate of the L1 word length along iterated classes."""
    m = as_matrix(m)
    if n_steps < 10:
        raise AlgebraError("need at least 10 iterations")
    if not sample_classes:
        raise AlgebraError("need at least one sample class")
    best = 0.0
    for gamma in sample_classes:
        v = tuple(int(c) for c in gamma)
        if all(c == 0 for c in v):
            raise AlgebraError("trivial class")
        logs = []
        for _ in range(n_steps + 1):
            logs.append(_log_big(sum(abs(c) for c in v)))
            v = mat_vec(m, v)
        best = max(best, growth_slope(logs))
    return max(best, 0.0)


# ---------------------------------------------------------------------------
# Free groups
# ---------------------------------------------------------------------------

GroupWord = tuple[int, ...]  # signed generator indices, 1-based


def parse_word(text: str) -> GroupWord:
    """Letters a..z are generators, capitals their inverses."""
    out = []
    for ch in text:
        if ch.islower():
            out.append(ord(ch) - ord("a") + 1)
        elif ch.isupper():
            out.append(-(ord(ch) - ord("A") + 1))
        else:
            raise AlgebraError(f"bad word character {ch!r}")
    return tuple(out)


def word_str(w: GroupWord) -> str:
    return "".join(
        chr(ord("a") + g - 1) if g > 0 else chr(ord("A") - g - 1) for g in w
    )


def free_reduce(w: Sequence[int]) -> GroupWord:
    out: list[int] = []
    for g in w:
        if out and out[-1] == -g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def cyclic_reduce(w: Sequence[int]) -> GroupWord:
    """Freely reduce, then cancel matching first/last letters."""
    red = list(free_reduce(w))
    while len(red) >= 2 and red[0] == -red[-1]:
        red = red[1:-1]
    return tuple(red)


def invert_word(w: Sequence[int]) -> GroupWord:
    return tuple(-g for g in reversed(w))


@dataclass(frozen=True)
class FreeAutomorphism:
    """Substitution rule generator -> word (invertibility is the caller's job)."""

    images: tuple[GroupWord, ...]  # images[i] is the image of generator i+1

    @classmethod
    def from_strings(cls, rules: Sequence[str]) -> "FreeAutomorphism":
        return cls(tuple(parse_word(r) for r in rules))

    def apply(self, w: Sequence[int]) -> GroupWord:
        out: list[int] = []
        for g in w:
            image = self.images[abs(g) - 1]
            out.extend(image if g > 0 else invert_word(image))
        return free_reduce(out)


def free_growth(
    sigma: FreeAutomorphism,
    w: Sequence[int],
    n_steps: int,
    cap: int = 10**6,
) -> float:
    """Growth rate of the cyclically reduced length under iteration."""
    if n_steps < 5:
        raise AlgebraError("need at least 5 iterations")
    word = cyclic_reduce(w)
    if not word:
        raise AlgebraError("trivial class")
    logs = [math.log(len(word))]
    for _ in range(n_steps):
        word = cyclic_reduce(sigma.apply(word))
        if not word:
            raise AlgebraError("trivial class reached under iteration")
        logs.append(math.log(len(word)))
        if len(word) > cap:
            break
    if len(logs) < 3:
        return 0.0
    return max(growth_slope(logs), 0.0)


# ---------------------------------------------------------------------------
# Random hyperbolic lattice matrices (seeded; used by tests and experiments)
# ---------------------------------------------------------------------------

def sample_hyperbolic_lattice_matrices(
    rng: np.random.Generator, dim: int, count: int, entry_cap: int = 5
) -> list[IntMatrix]:
    """Unimodular hyperbolic matrices with entries bounded by entry_cap.

    dim=2 draws products of elementary shears; dim=3 conjugates a hyperbolic
    2x2 block (so the spectrum stays closed under reciprocals, which keeps
    the forward word-length growth rate equal to the spectral invariant).
    """
    out: list[IntMatrix] = []
    while len(out) < count:
        if dim == 2:
            m = identity_matrix(2)
            for _ in range(6):
                k = int(rng.integers(-2, 3))
                shear = ((1, k), (0, 1)) if rng.random() < 0.5 else ((1, 0), (k, 1))
                m = mat_mul(m, shear)
        else:
            block = sample_hyperbolic_lattice_matrices(rng, 2, 1, entry_cap)[0]
            m3 = (
                (block[0][0], block[0][1], 0),
                (block[1][0], block[1][1], 0),
                (0, 0, 1),
            )
            k = int(rng.integers(-1, 2))
            axis = int(rng.integers(0, 3))
            u = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
            u[axis][(axis + 1) % 3] = k
            u = as_matrix(u)
            m = mat_mul(mat_mul(u, m3), mat_inverse(u))
        if max(abs(e) for row in m for e in row) > entry_cap:
            continue
        if determinant(m) not in (1, -1):
            continue
        if s_value(m) <= 0.1:
            continue
        out.append(m)
    return out
