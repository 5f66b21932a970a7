"""Bigraded Chevalley-Eilenberg complexes in exact rational arithmetic.

A Lie algebra with a chosen vertical subalgebra gives a bigrading of the
exterior algebra on the dual basis: a monomial has bidegree (p, q) with p
horizontal and q vertical factors.  The differential then splits by
bidegree shift into pieces of shift (0,1), (1,0) and (2,-1).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import sympy as sp

__all__ = [
    "InvalidPresentationError",
    "StructuralError",
    "LieAlgebraPresentation",
    "BigradedBasis",
    "DifferentialSplit",
    "ScaledGram",
    "IDENTITY_NAMES",
    "library_names",
    "load_library",
    "build_basis",
    "build_ce_complex",
    "split_differential",
    "verify_identities",
    "scaled_gram",
    "scaled_gram_squared",
    "norm_of",
    "up_laplacian",
    "count_eigenvalues_le",
    "lower_central_ranks",
]


class InvalidPresentationError(ValueError):
    pass


class StructuralError(ValueError):
    """The differential has components outside the three allowed shifts."""

    def __init__(self, message, entries):
        super().__init__(message)
        self.entries = entries


def _rational(x) -> sp.Rational:
    if isinstance(x, str):
        x = Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not accepted; pass a rational or a string")
    x = Fraction(x)
    return sp.Rational(x.numerator, x.denominator)


@dataclass(frozen=True)
class LieAlgebraPresentation:
    """Structure constants c_{ij}^k with [e_i, e_j] = sum_k c_{ij}^k e_k.

    ``brackets`` maps (i, j, k) with i < j to a non-zero rational.  By
    default the Jacobi identity and the vertical-subalgebra condition are
    enforced; ``strict=False`` skips the latter so that the residual of a
    bad split can be examined.
    """

    dim: int
    brackets: dict
    vertical: tuple = ()
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidPresentationError("dim must be >= 1")
        clean = {}
        for (i, j, k), c in self.brackets.items():
            for idx in (i, j, k):
                if not 0 <= idx < self.dim:
                    raise InvalidPresentationError(f"index {idx} out of range for dim {self.dim}")
            c = _rational(c)
            if i == j:
                if c != 0:
                    raise InvalidPresentationError(f"[e{i}, e{i}] must vanish")
                continue
            if i > j:
                i, j, c = j, i, -c
            if c != 0:
                clean[(i, j, k)] = clean.get((i, j, k), 0) + c
        object.__setattr__(self, "brackets", {key: v for key, v in sorted(clean.items()) if v != 0})
        vert = tuple(sorted(set(self.vertical)))
        if any(not 0 <= v < self.dim for v in vert):
            raise InvalidPresentationError("vertical index out of range")
        object.__setattr__(self, "vertical", vert)
        self._check_jacobi()
        if self.strict:
            bad = [key for key in self.brackets
                   if key[0] in vert and key[1] in vert and key[2] not in vert]
            if bad:
                i, j, k = bad[0]
                raise InvalidPresentationError(
                    f"vertical directions do not span a subalgebra: [e{i}, e{j}] has an e{k} component")

    @property
    def horizontal(self) -> tuple:
        return tuple(i for i in range(self.dim) if i not in self.vertical)

    def c(self, i, j, k):
        if i == j:
            return sp.Integer(0)
        if i < j:
            return self.brackets.get((i, j, k), sp.Integer(0))
        return -self.brackets.get((j, i, k), sp.Integer(0))

    def bracket_vector(self, i, j):
        return [self.c(i, j, k) for k in range(self.dim)]

    def _check_jacobi(self):
        n = self.dim
        for a, b, e in itertools.combinations(range(n), 3):
            for out in range(n):
                total = sp.Integer(0)
                for x, y, z in ((a, b, e), (b, e, a), (e, a, b)):
                    for m in range(n):
                        total += self.c(x, y, m) * self.c(m, z, out)
                if total != 0:
                    raise InvalidPresentationError(
                        f"Jacobi identity fails for the triple ({a}, {b}, {e}) in component {out}")

    def dumps(self) -> str:
        lines = [f"dim = {self.dim}", "vertical = " + ",".join(str(v) for v in self.vertical)]
        for (i, j, k), c in self.brackets.items():
            lines.append(f"bracket {i} {j} {k} = {c}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str, *, strict: bool = True) -> "LieAlgebraPresentation":
        dim = None
        vertical = ()
        brackets = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep:
                raise InvalidPresentationError(f"line {lineno}: expected 'key = value'")
            words = key.split()
            if words == ["dim"]:
                dim = int(value)
            elif words == ["vertical"]:
                vertical = tuple(int(v) for v in value.split(",") if v.strip())
            elif len(words) == 4 and words[0] == "bracket":
                i, j, k = (int(w) for w in words[1:])
                if (i, j, k) in brackets or (j, i, k) in brackets:
                    raise InvalidPresentationError(f"line {lineno}: duplicate bracket")
                brackets[(i, j, k)] = value
            else:
                raise InvalidPresentationError(f"line {lineno}: unknown key {key!r}")
        if dim is None:
            raise InvalidPresentationError("missing 'dim'")
        return cls(dim, brackets, vertical, strict=strict)

    @classmethod
    def load(cls, path, *, strict: bool = True) -> "LieAlgebraPresentation":
        return cls.loads(Path(path).read_text(), strict=strict)


def _library_dir():
    return resources.files("tpnsi") / "data" / "algebras"


def library_names() -> list[str]:
    return sorted(p.name[:-4] for p in _library_dir().iterdir() if p.name.endswith(".txt"))


def load_library(name: str) -> LieAlgebraPresentation:
    path = _library_dir() / f"{name}.txt"
    if not path.is_file():
        raise KeyError(f"no library algebra {name!r}; available: {', '.join(library_names())}")
    return LieAlgebraPresentation.loads(path.read_text())


# --------------------------------------------------------------------------
# basis and differential
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BigradedBasis:
    """Monomials xi^{i1} ^ ... ^ xi^{ik}, i1 < ... < ik, grouped by degree."""

    dim: int
    vertical: tuple
    monomials: tuple  # monomials[k] = tuple of index words of length k

    def bidegree(self, word) -> tuple[int, int]:
        q = sum(1 for i in word if i in self.vertical)
        return len(word) - q, q

    def index(self, word) -> int:
        return self.monomials[len(word)].index(tuple(word))

    def size(self, k: int) -> int:
        return len(self.monomials[k]) if 0 <= k <= self.dim else 0


def build_basis(lie: LieAlgebraPresentation) -> BigradedBasis:
    monos = tuple(tuple(itertools.combinations(range(lie.dim), k)) for k in range(lie.dim + 1))
    return BigradedBasis(lie.dim, lie.vertical, monos)


def _sort_sign(word):
    """(sign, sorted word) for a word of distinct indices, or (0, None)."""
    if len(set(word)) < len(word):
        return 0, None
    w = list(word)
    sign = 1
    for a in range(len(w)):
        for b in range(len(w) - 1 - a):
            if w[b] > w[b + 1]:
                w[b], w[b + 1] = w[b + 1], w[b]
                sign = -sign
    return sign, tuple(w)


def build_ce_complex(lie: LieAlgebraPresentation) -> list[sp.Matrix]:
    """d_k : Lambda^k -> Lambda^{k+1} for k = 0..dim, as exact matrices.

    d xi^k = -sum_{i<j} c_{ij}^k xi^i ^ xi^j, extended as a graded
    derivation.  Columns index the source monomials.
    """
    basis = build_basis(lie)
    d_one = {k: [] for k in range(lie.dim)}
    for (i, j, k), c in lie.brackets.items():
        d_one[k].append(((i, j), -c))
    mats = []
    for k in range(lie.dim + 1):
        rows = basis.size(k + 1)
        m = sp.zeros(rows, basis.size(k))
        for col, word in enumerate(basis.monomials[k]):
            for r, a in enumerate(word):
                for pair, coeff in d_one[a]:
                    sign, target = _sort_sign(word[:r] + pair + word[r + 1:])
                    if sign:
                        m[basis.index(target), col] += (-1) ** r * sign * coeff
        mats.append(m)
    for k in range(lie.dim):
        if not (mats[k + 1] * mats[k]).is_zero_matrix:
            raise InvalidPresentationError(f"d^2 != 0 in degree {k}")
    return mats


# --------------------------------------------------------------------------
# splitting
# --------------------------------------------------------------------------

SHIFTS = {"D01": (0, 1), "D10": (1, 0), "D2m1": (2, -1)}


@dataclass(frozen=True)
class DifferentialSplit:
    basis: BigradedBasis
    D01: tuple
    D10: tuple
    D2m1: tuple
    residual: tuple

    def total(self, k: int) -> sp.Matrix:
        return self.D01[k] + self.D10[k] + self.D2m1[k] + self.residual[k]

    def residual_entries(self) -> list:
        out = []
        for k, m in enumerate(self.residual):
            for (r, c), v in m.todok().items():
                if v != 0:
                    out.append((k, self.basis.monomials[k][c], self.basis.monomials[k + 1][r], v))
        return out


def split_differential(d, basis: BigradedBasis, *, allow_residual: bool = False) -> DifferentialSplit:
    """Sort every entry of d by the bidegree shift from source to target.

    Entries outside the three allowed shifts go to the residual; unless
    ``allow_residual`` is set, a non-zero residual raises StructuralError.
    """
    parts = {name: [] for name in (*SHIFTS, "residual")}
    lookup = {shift: name for name, shift in SHIFTS.items()}
    for k, m in enumerate(d):
        pieces = {name: sp.zeros(*m.shape) for name in parts}
        for (r, c), v in m.todok().items():
            if v == 0:
                continue
            ps, qs = basis.bidegree(basis.monomials[k][c])
            pt, qt = basis.bidegree(basis.monomials[k + 1][r])
            pieces[lookup.get((pt - ps, qt - qs), "residual")][r, c] = v
        for name in parts:
            parts[name].append(pieces[name])
    split = DifferentialSplit(basis, *(tuple(parts[n]) for n in ("D01", "D10", "D2m1", "residual")))
    if not allow_residual:
        bad = split.residual_entries()
        if bad:
            raise StructuralError(
                f"{len(bad)} entries of d leave the allowed bidegree shifts "
                f"(vertical is not a subalgebra); first: {bad[0]}", bad)
    return split


IDENTITY_NAMES = (
    "d01^2",
    "d01 d10 + d10 d01",
    "d01 d2m1 + d10^2 + d2m1 d01",
    "d10 d2m1 + d2m1 d10",
    "d2m1^2",
)


def verify_identities(split: DifferentialSplit) -> dict[str, list[sp.Matrix]]:
    """The five bidegree components of d^2, one matrix per source degree."""
    a, b, c = split.D01, split.D10, split.D2m1
    out = {name: [] for name in IDENTITY_NAMES}
    for k in range(len(a) - 1):
        out[IDENTITY_NAMES[0]].append(a[k + 1] * a[k])
        out[IDENTITY_NAMES[1]].append(a[k + 1] * b[k] + b[k + 1] * a[k])
        out[IDENTITY_NAMES[2]].append(a[k + 1] * c[k] + b[k + 1] * b[k] + c[k + 1] * a[k])
        out[IDENTITY_NAMES[3]].append(b[k + 1] * c[k] + c[k + 1] * b[k])
        out[IDENTITY_NAMES[4]].append(c[k + 1] * c[k])
    return out


# --------------------------------------------------------------------------
# scaled inner products and Laplacians
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledGram:
    """Diagonal Gram matrices, weight mu^{-2p} nu^{-2q} on bidegree (p, q)."""

    basis: BigradedBasis
    mu2: sp.Rational
    nu2: sp.Rational
    weights: tuple  # weights[k] = tuple of diagonal entries

    def matrix(self, k: int) -> sp.Matrix:
        return sp.diag(*self.weights[k]) if self.weights[k] else sp.zeros(0, 0)


def scaled_gram_squared(basis: BigradedBasis, mu2, nu2) -> ScaledGram:
    """Gram for the squared scales mu^2, nu^2; allows irrational mu, nu."""
    mu2, nu2 = _rational(mu2), _rational(nu2)
    if mu2 <= 0 or nu2 <= 0:
        raise ValueError("scales must be positive")
    weights = []
    for words in basis.monomials:
        row = []
        for w in words:
            p, q = basis.bidegree(w)
            row.append(mu2 ** (-p) * nu2 ** (-q))
        weights.append(tuple(row))
    return ScaledGram(basis, mu2, nu2, tuple(weights))


def scaled_gram(basis: BigradedBasis, mu, nu) -> ScaledGram:
    mu, nu = _rational(mu), _rational(nu)
    if mu <= 0 or nu <= 0:
        raise ValueError("scales must be positive")
    return scaled_gram_squared(basis, mu**2, nu**2)


def norm_of(form, gram: ScaledGram) -> sp.Rational:
    """Squared norm of a form given as {index word: coefficient}."""
    total = sp.Integer(0)
    for word, coeff in form.items():
        sign, w = _sort_sign(tuple(word))
        if not sign:
            continue
        k = len(w)
        total += gram.weights[k][gram.basis.index(w)] * _rational(coeff) ** 2
    return total


def up_laplacian(k: int, d, gram: ScaledGram) -> sp.Matrix:
    """G_k^{-1} d_k^T G_{k+1} d_k, the Gram adjoint d^* d on k-forms.

    ``d`` is the list of differentials or a DifferentialSplit.
    """
    if isinstance(d, DifferentialSplit):
        dk = d.total(k)
    else:
        dk = d[k]
    if dk.rows == 0:
        return sp.zeros(dk.cols, dk.cols)
    gk_inv = sp.diag(*[1 / w for w in gram.weights[k]])
    g_next = gram.matrix(k + 1)
    return gk_inv * dk.T * g_next * dk


def _sign_changes(coeffs) -> int:
    signs = [c > 0 for c in coeffs if c != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_eigenvalues_le(A: sp.Matrix, lam) -> int:
    """Number of eigenvalues of A in (-inf, lam], with multiplicity, exactly.

    A must have only real eigenvalues (true for the Gram-self-adjoint
    Laplacians here).  The roots above lam are the positive roots of the
    shifted characteristic polynomial, which Descartes' rule counts exactly
    when every root is real.
    """
    n = A.rows
    if n == 0:
        return 0
    lam = _rational(lam)
    x = sp.Symbol("x")
    p = A.charpoly(x).as_expr()
    shifted = sp.Poly(sp.expand(p.subs(x, x + lam)), x)
    return n - _sign_changes(shifted.all_coeffs())


def lower_central_ranks(lie: LieAlgebraPresentation) -> list[tuple[int, int]]:
    """(i, dim g_i / g_{i+1}) for the lower central series g_1 = g, g_{i+1} = [g, g_i].

    Stops when the series stabilises; for a nilpotent algebra the output
    feeds growth_degree directly.
    """
    def row_basis(m):
        rref, pivots = m.rref()
        return [list(rref.row(r)) for r in range(len(pivots))]

    def bracket_span(vectors):
        cols = []
        for i in range(lie.dim):
            for v in vectors:
                w = [sp.Integer(0)] * lie.dim
                for j, vj in enumerate(v):
                    if vj != 0:
                        for k, ck in enumerate(lie.bracket_vector(i, j)):
                            w[k] += vj * ck
                cols.append(w)
        if not cols:
            return []
        return row_basis(sp.Matrix(cols))

    current = [[sp.Integer(int(i == j)) for j in range(lie.dim)] for i in range(lie.dim)]
    out = []
    weight = 1
    while current:
        nxt = bracket_span(current)
        if len(nxt) == len(current):
            break
        out.append((weight, len(current) - len(nxt)))
        current = nxt
        weight += 1
    return out
