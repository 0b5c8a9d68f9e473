"""
Exact linear algebra over the rationals and the integers.
Everything here works on plain Python lists/tuples of int or Fraction.
"""

from fractions import Fraction
from itertools import combinations
from math import gcd
from typing import List, Optional, Sequence, Tuple

Vector = Tuple[Fraction, ...]


def to_fraction(value) -> Fraction:
    """Convert int / Fraction / numeric string / [num, den] pair to a Fraction"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not coordinates")
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"rational pair must have 2 entries, got {value!r}")
        num, den = value
        if den == 0:
            raise ValueError("zero denominator")
        return Fraction(int(num), int(den))
    return Fraction(value)


def to_vector(values) -> Vector:
    return tuple(to_fraction(v) for v in values)


def dot(a: Sequence, b: Sequence):
    return sum((x * y for x, y in zip(a, b)), Fraction(0))


def sub(a: Sequence, b: Sequence) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def add(a: Sequence, b: Sequence) -> Vector:
    return tuple(x + y for x, y in zip(a, b))


def scale(a: Sequence, c) -> Vector:
    return tuple(x * c for x in a)


def rref(rows: Sequence[Sequence], ncols: Optional[int] = None) -> Tuple[List[List[Fraction]], List[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)"""
    matrix = [[Fraction(x) for x in row] for row in rows]
    if ncols is None:
        ncols = len(matrix[0]) if matrix else 0
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(matrix)) if matrix[i][c] != 0), None)
        if pivot is None:
            continue
        matrix[r], matrix[pivot] = matrix[pivot], matrix[r]
        lead = matrix[r][c]
        matrix[r] = [x / lead for x in matrix[r]]
        for i in range(len(matrix)):
            if i != r and matrix[i][c] != 0:
                factor = matrix[i][c]
                matrix[i] = [x - factor * y for x, y in zip(matrix[i], matrix[r])]
        pivots.append(c)
        r += 1
        if r == len(matrix):
            break
    return matrix[:r], pivots


def rank(rows: Sequence[Sequence], ncols: Optional[int] = None) -> int:
    if not rows:
        return 0
    return len(rref(rows, ncols)[1])


def nullspace(rows: Sequence[Sequence], ncols: int) -> List[Vector]:
    """Basis of {x : A x = 0}, each vector scaled to a primitive integer vector"""
    if not rows:
        return [tuple(Fraction(int(i == j)) for j in range(ncols)) for i in range(ncols)]
    reduced, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * ncols
        vec[f] = Fraction(1)
        for row, p in zip(reduced, pivots):
            vec[p] = -row[f]
        basis.append(tuple(Fraction(x) for x in primitive(vec)))
    return basis


def solve(rows: Sequence[Sequence], rhs: Sequence) -> Optional[Vector]:
    """Unique solution of a square or overdetermined consistent system, else None"""
    n = len(rows[0])
    augmented = [list(row) + [b] for row, b in zip(rows, rhs)]
    reduced, pivots = rref(augmented, n + 1)
    if n in pivots or len(pivots) < n:
        return None
    solution = [Fraction(0)] * n
    for row, p in zip(reduced, pivots):
        solution[p] = row[n]
    return tuple(solution)


def det(rows: Sequence[Sequence]) -> Fraction:
    """Determinant by fraction-exact Gaussian elimination"""
    matrix = [[Fraction(x) for x in row] for row in rows]
    size = len(matrix)
    result = Fraction(1)
    for c in range(size):
        pivot = next((i for i in range(c, size) if matrix[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            matrix[c], matrix[pivot] = matrix[pivot], matrix[c]
            result = -result
        lead = matrix[c][c]
        result *= lead
        for i in range(c + 1, size):
            if matrix[i][c] != 0:
                factor = matrix[i][c] / lead
                matrix[i] = [x - factor * y for x, y in zip(matrix[i], matrix[c])]
    return result


def primitive(vec: Sequence) -> Tuple[int, ...]:
    """Clear denominators and divide by the gcd; zero vector stays zero"""
    fracs = [Fraction(x) for x in vec]
    lcm = 1
    for x in fracs:
        lcm = lcm * x.denominator // gcd(lcm, x.denominator)
    ints = [int(x * lcm) for x in fracs]
    g = 0
    for x in ints:
        g = gcd(g, x)
    if g == 0:
        return tuple(ints)
    return tuple(x // g for x in ints)


def lattice_length(vec: Sequence[int]) -> int:
    """Number of lattice steps along an integer segment (gcd of its coordinates)"""
    g = 0
    for x in vec:
        g = gcd(g, int(x))
    return g


def integer_kernel(rows: Sequence[Sequence[int]], ncols: int) -> List[Tuple[int, ...]]:
    """Basis of the saturated lattice {z in Z^n : A z = 0}.

    Column operations with extended gcd bring A to lower-triangular form A U;
    the columns of the unimodular U beyond the rank span the integer kernel.
    """
    matrix = [[int(x) for x in primitive(row)] for row in rows] if rows else []
    unimodular = [[int(i == j) for j in range(ncols)] for i in range(ncols)]

    def column_op(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for mat in (matrix, unimodular):
            for row in mat:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    pivot_col = 0
    for row_index in range(len(matrix)):
        if pivot_col >= ncols:
            break
        for j in range(pivot_col + 1, ncols):
            x, y = matrix[row_index][pivot_col], matrix[row_index][j]
            if y == 0:
                continue
            g, s, t = _extended_gcd(x, y)
            column_op(pivot_col, j, s, t, -y // g, x // g)
        if matrix[row_index][pivot_col] != 0:
            pivot_col += 1
    return [tuple(unimodular[i][c] for i in range(ncols)) for c in range(pivot_col, ncols)]


def _extended_gcd(a: int, b: int) -> Tuple[int, int, int]:
    """g, s, t with s*a + t*b = g = gcd(a, b) >= 0"""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def gcd_of_maximal_minors(vectors: Sequence[Sequence[int]]) -> int:
    """Index of the lattice spanned by the vectors inside its saturation"""
    k = len(vectors)
    if k == 0:
        return 1
    n = len(vectors[0])
    g = 0
    for cols in combinations(range(n), k):
        minor = det([[v[c] for c in cols] for v in vectors])
        g = gcd(g, int(minor))
    return g
