"""Alphabets, points, frequency vectors and the target-function classes.

Points of ``[b]^n`` are handled as integer numpy arrays (one row per point).
A point and its integer index are related by little-endian digit order::

    index = x[0] + x[1] * b + ... + x[n-1] * b**(n-1)

which is the order used by every truth table, spectrum and file format in the
package.  Every target evaluates to +1 or -1; points inside a rectangle (or
satisfying a DNF term) map to -1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from walklearn.errors import ContractViolation, ParameterError, ResourceError
from walklearn.rng import make_rng

EXACT_CAP = 2 ** 24
DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


@dataclass(frozen=True)
class Alphabet:
    b: int
    n: int

    def __post_init__(self):
        if int(self.b) != self.b or self.b < 2:
            raise ParameterError(f"base b must be an integer >= 2, got {self.b!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"dimension n must be an integer >= 1, got {self.n!r}")

    @property
    def size(self) -> int:
        return self.b ** self.n

    def check_exact(self, cap=EXACT_CAP):
        if self.size > cap:
            raise ResourceError(
                f"b^n = {self.b}^{self.n} exceeds the exact-mode cap {cap}",
                size=self.size, cap=cap)

    def all_points(self) -> np.ndarray:
        """All of ``[b]^n`` as a ``(b^n, n)`` array, row ``i`` being the point of index ``i``."""
        self.check_exact()
        idx = np.arange(self.size, dtype=np.int64)
        powers = self.b ** np.arange(self.n, dtype=np.int64)
        return ((idx[:, None] // powers[None, :]) % self.b).astype(np.int64)

    def index_of(self, points) -> np.ndarray:
        pts = self.validate_points(points)
        powers = self.b ** np.arange(self.n, dtype=np.int64)
        return pts @ powers

    def point_at(self, index: int) -> tuple:
        if not 0 <= index < self.size:
            raise ContractViolation(f"index {index} outside [0, {self.size})")
        digits = []
        for _ in range(self.n):
            index, d = divmod(index, self.b)
            digits.append(d)
        return tuple(digits)

    def validate_points(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.int64)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] != self.n:
            raise ContractViolation(
                f"points must have {self.n} coordinates, got shape {np.shape(points)}")
        if pts.size and (pts.min() < 0 or pts.max() >= self.b):
            raise ContractViolation(f"point digits must lie in [0, {self.b})")
        return pts


@dataclass(frozen=True)
class FreqIndex:
    """A frequency vector ``a`` in ``[b]^n`` labelling the character ``chi_a``."""

    digits: tuple

    def __post_init__(self):
        object.__setattr__(self, "digits", tuple(int(d) for d in self.digits))

    @property
    def degree(self) -> int:
        return sum(1 for d in self.digits if d != 0)

    @property
    def support(self) -> tuple:
        return tuple(i for i, d in enumerate(self.digits) if d != 0)

    @property
    def n(self) -> int:
        return len(self.digits)

    def to_string(self) -> str:
        return "".join(DIGITS[d] for d in self.digits)

    @classmethod
    def from_string(cls, text: str) -> FreqIndex:
        return cls(tuple(DIGITS.index(ch) for ch in text.strip().lower()))

    @classmethod
    def zero(cls, n: int) -> FreqIndex:
        return cls((0,) * n)

    @classmethod
    def unit(cls, n: int, i: int, value: int = 1) -> FreqIndex:
        d = [0] * n
        d[i] = value
        return cls(tuple(d))

    def check(self, alphabet: Alphabet):
        if len(self.digits) != alphabet.n or any(not 0 <= d < alphabet.b for d in self.digits):
            raise ContractViolation(f"frequency {self.digits} does not belong to [{alphabet.b}]^{alphabet.n}")

    def __str__(self):
        return self.to_string()


@dataclass(frozen=True)
class Rectangle:
    lower: tuple
    upper: tuple

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(int(v) for v in self.lower))
        object.__setattr__(self, "upper", tuple(int(v) for v in self.upper))
        if len(self.lower) != len(self.upper):
            raise ContractViolation("rectangle bounds have different lengths")
        if any(lo > up for lo, up in zip(self.lower, self.upper)):
            raise ContractViolation(f"rectangle needs lower <= upper, got {self.lower} / {self.upper}")

    def check(self, alphabet: Alphabet):
        if len(self.lower) != alphabet.n:
            raise ContractViolation("rectangle dimension does not match the alphabet")
        if min(self.lower) < 0 or max(self.upper) > alphabet.b - 1:
            raise ContractViolation(f"rectangle bounds must lie in [0, {alphabet.b - 1}]")

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points)
        lo = np.asarray(self.lower)
        up = np.asarray(self.upper)
        return np.all((pts >= lo) & (pts <= up), axis=-1)

    def constrained(self, b: int) -> int:
        """Number of coordinates whose interval is not all of ``[b]``."""
        return sum(1 for lo, up in zip(self.lower, self.upper) if lo > 0 or up < b - 1)


def _signs(mask) -> np.ndarray:
    # True (inside / satisfied) -> -1, False -> +1
    return np.where(mask, -1, 1).astype(np.int8)


class TargetFunction:
    """Base class for the +-1 valued target functions on ``[b]^n``."""

    kind = "abstract"
    alphabet: Alphabet

    def evaluate(self, x) -> int:
        pts = self.alphabet.validate_points(x)
        if pts.shape[0] != 1:
            raise ContractViolation("evaluate() takes a single point; use evaluate_many()")
        return int(self._eval(pts)[0])

    def evaluate_many(self, points) -> np.ndarray:
        """Vectorised evaluation; ``points`` is an ``(m, n)`` array, returns int8 signs."""
        return self._eval(self.alphabet.validate_points(points))

    def _eval(self, pts) -> np.ndarray:
        raise NotImplementedError

    def truth_table(self) -> np.ndarray:
        return self._eval(self.alphabet.all_points())

    def description_size(self) -> int:
        raise NotImplementedError

    def payload(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Parity(TargetFunction):
    vector: FreqIndex
    kind = "parity"

    def __post_init__(self):
        if not isinstance(self.vector, FreqIndex):
            object.__setattr__(self, "vector", FreqIndex(self.vector))
        if any(d not in (0, 1) for d in self.vector.digits):
            raise ContractViolation("parity targets are Boolean (b = 2)")

    @property
    def alphabet(self):
        return Alphabet(2, self.vector.n)

    def _eval(self, pts):
        a = np.asarray(self.vector.digits, dtype=np.int64)
        return (1 - 2 * ((pts @ a) & 1)).astype(np.int8)

    def description_size(self):
        return self.vector.n

    def payload(self):
        return {"vector": self.vector.to_string()}


@dataclass(frozen=True)
class DNF(TargetFunction):
    """Disjunction of terms; each term is a tuple of ``(variable, required bit)`` literals."""

    n: int
    terms: tuple
    kind = "dnf"

    def __post_init__(self):
        terms = tuple(tuple((int(i), int(v)) for i, v in term) for term in self.terms)
        object.__setattr__(self, "terms", terms)
        for term in terms:
            for i, v in term:
                if not 0 <= i < self.n or v not in (0, 1):
                    raise ContractViolation(f"bad literal ({i}, {v}) for n = {self.n}")

    @property
    def alphabet(self):
        return Alphabet(2, self.n)

    def _eval(self, pts):
        sat = np.zeros(pts.shape[0], dtype=bool)
        for term in self.terms:
            if not term:
                sat[:] = True
                break
            idx = np.fromiter((i for i, _ in term), dtype=np.int64)
            val = np.fromiter((v for _, v in term), dtype=np.int64)
            sat |= np.all(pts[:, idx] == val, axis=1)
        return _signs(sat)

    def to_ubox(self) -> UBOX:
        rects = []
        for term in self.terms:
            lo, up = [0] * self.n, [1] * self.n
            for i, v in term:
                lo[i] = max(lo[i], v)
                up[i] = min(up[i], v)
            if all(l <= u for l, u in zip(lo, up)):
                rects.append(Rectangle(tuple(lo), tuple(up)))
        return UBOX(Alphabet(2, self.n), tuple(rects))

    def description_size(self):
        return max(1, sum(len(t) for t in self.terms))

    def payload(self):
        return {"terms": [[list(lit) for lit in term] for term in self.terms]}


@dataclass(frozen=True)
class TOP(TargetFunction):
    """Threshold of parities ``sgn(sum_m w_m (-1)^{a_m . x})`` over ``[2]^n``."""

    n: int
    weights: tuple
    vectors: tuple
    weight_sum: int = field(init=False)
    kind = "top"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(int(w) for w in self.weights))
        object.__setattr__(self, "vectors", tuple(
            v if isinstance(v, FreqIndex) else FreqIndex(v) for v in self.vectors))
        if len(self.weights) != len(self.vectors) or not self.weights:
            raise ContractViolation("TOP needs one weight per parity vector (M >= 1)")
        for v in self.vectors:
            if v.n != self.n or any(d not in (0, 1) for d in v.digits):
                raise ContractViolation(f"TOP vectors must lie in [2]^{self.n}")
        object.__setattr__(self, "weight_sum", sum(abs(w) for w in self.weights))
        if self.weight_sum % 2 == 0:
            # an odd weight sum makes the inner sum odd, hence never 0
            if self.alphabet.size > EXACT_CAP:
                raise ContractViolation("TOP with even weight sum cannot be tie-checked above the exact cap")
            if np.any(self._sums(self.alphabet.all_points()) == 0):
                raise ContractViolation("TOP has a reachable zero inner sum (sign undefined)")

    @property
    def alphabet(self):
        return Alphabet(2, self.n)

    def _sums(self, pts):
        A = np.array([v.digits for v in self.vectors], dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.int64)
        return (1 - 2 * ((pts @ A.T) & 1)) @ w

    def _eval(self, pts):
        s = self._sums(pts)
        if np.any(s == 0):
            raise ContractViolation("TOP inner sum is zero at a queried point")
        return np.where(s > 0, 1, -1).astype(np.int8)

    def description_size(self):
        return len(self.vectors) * self.n + sum(len(str(abs(w))) for w in self.weights)

    def payload(self):
        return {"weights": list(self.weights), "vectors": [v.to_string() for v in self.vectors]}


@dataclass(frozen=True)
class UBOX(TargetFunction):
    alphabet: Alphabet
    rectangles: tuple
    kind = "ubox"

    def __post_init__(self):
        rects = tuple(r if isinstance(r, Rectangle) else Rectangle(*r) for r in self.rectangles)
        object.__setattr__(self, "rectangles", rects)
        for r in rects:
            r.check(self.alphabet)

    def _eval(self, pts):
        inside = np.zeros(pts.shape[0], dtype=bool)
        for r in self.rectangles:
            inside |= r.contains(pts)
        return _signs(inside)

    def description_size(self):
        # literal encoding: one literal per constrained coordinate, at least one per rectangle
        return max(1, sum(max(1, r.constrained(self.alphabet.b)) for r in self.rectangles))

    def payload(self):
        return {"rectangles": [[list(r.lower), list(r.upper)] for r in self.rectangles]}


@dataclass(frozen=True, eq=False)
class TruthTable(TargetFunction):
    alphabet: Alphabet
    values: np.ndarray
    kind = "truthtable"

    def __post_init__(self):
        self.alphabet.check_exact()
        vals = np.asarray(self.values, dtype=np.int8).copy()
        if vals.shape != (self.alphabet.size,) or not np.all(np.abs(vals) == 1):
            raise ContractViolation("truth table must hold b^n entries, each +1 or -1")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __eq__(self, other):
        return (isinstance(other, TruthTable) and other.alphabet == self.alphabet
                and np.array_equal(other.values, self.values))

    def __hash__(self):
        return hash((self.alphabet, self.values.tobytes()))

    def _eval(self, pts):
        powers = self.alphabet.b ** np.arange(self.alphabet.n, dtype=np.int64)
        return self.values[pts @ powers]

    def truth_table(self):
        return self.values.copy()

    def description_size(self):
        return self.alphabet.size

    def payload(self):
        return {"values": "".join("+" if v > 0 else "-" for v in self.values)}


def constant(alphabet: Alphabet, value: int = 1) -> TruthTable:
    return TruthTable(alphabet, np.full(alphabet.size, value, dtype=np.int8))


# ---------------------------------------------------------------------------
# random generation

def random_instance(kind: str, seed: int, **params) -> TargetFunction:
    """Draw a reproducible random target.

    ``parity``: n [, degree];  ``dnf``: n, terms, width;  ``top``: n, M
    [, max_weight, degree];  ``ubox``: b, n, rectangles [, width];
    ``truthtable``: b, n.
    """
    rng = make_rng(seed)
    kind = kind.lower()
    try:
        if kind == "parity":
            return _random_parity(rng, **params)
        if kind == "dnf":
            return _random_dnf(rng, **params)
        if kind == "top":
            return _random_top(rng, **params)
        if kind == "ubox":
            return _random_ubox(rng, **params)
        if kind == "truthtable":
            alpha = Alphabet(params["b"], params["n"])
            return TruthTable(alpha, rng.choice(np.array([-1, 1], dtype=np.int8), size=alpha.size))
    except TypeError as exc:
        raise ParameterError(f"bad parameters for {kind}: {exc}") from None
    raise ParameterError(f"unknown target class {kind!r}")


def _random_parity(rng, n, degree=None):
    if degree is None:
        digits = rng.integers(0, 2, size=n)
    else:
        if not 0 <= degree <= n:
            raise ParameterError(f"parity degree {degree} not in [0, {n}]")
        digits = np.zeros(n, dtype=np.int64)
        digits[rng.choice(n, size=degree, replace=False)] = 1
    return Parity(FreqIndex(tuple(digits)))


def _random_dnf(rng, n, terms, width):
    if not 1 <= width <= n:
        raise ParameterError(f"term width {width} not in [1, {n}]")
    if terms > math.comb(n, width) * 2 ** width:
        raise ParameterError("more distinct terms requested than exist")
    chosen = []
    seen = set()
    while len(chosen) < terms:
        vars_ = sorted(int(v) for v in rng.choice(n, size=width, replace=False))
        term = tuple((v, int(rng.integers(0, 2))) for v in vars_)
        if term not in seen:
            seen.add(term)
            chosen.append(term)
    return DNF(n, tuple(chosen))


def _random_top(rng, n, M, max_weight=3, degree=None):
    if M > 2 ** n - 1:
        raise ParameterError("more distinct parity vectors requested than exist")
    if degree is not None and M > math.comb(n, degree):
        raise ParameterError("more distinct parity vectors of that degree requested than exist")
    vectors = []
    seen = set()
    while len(vectors) < M:
        if degree is None:
            v = tuple(int(d) for d in rng.integers(0, 2, size=n))
        else:
            d = np.zeros(n, dtype=np.int64)
            d[rng.choice(n, size=degree, replace=False)] = 1
            v = tuple(int(x) for x in d)
        if any(v) and v not in seen:
            seen.add(v)
            vectors.append(FreqIndex(v))
    weights = [int(rng.integers(1, max_weight + 1)) * int(rng.choice([-1, 1])) for _ in range(M)]
    if sum(abs(w) for w in weights) % 2 == 0:
        weights[-1] += 1 if weights[-1] > 0 else -1
    return TOP(n, tuple(weights), tuple(vectors))


def _random_ubox(rng, b, n, rectangles, width=None):
    alpha = Alphabet(b, n)
    # each coordinate takes one of b(b+1)/2 intervals
    if rectangles > (b * (b + 1) // 2) ** n:
        raise ParameterError("more distinct rectangles requested than exist")
    if width is not None and not 0 <= width <= n:
        raise ParameterError(f"rectangle width {width} not in [0, {n}]")
    proper = [(lo, up) for lo in range(b) for up in range(lo, b) if (lo, up) != (0, b - 1)]
    rects = []
    seen = set()
    attempts = 0
    while len(rects) < rectangles:
        attempts += 1
        if attempts > 10000 * rectangles:
            raise ParameterError("could not draw enough distinct rectangles")
        if width is None:
            mask = rng.random(n) < 0.5
        else:
            mask = np.zeros(n, dtype=bool)
            mask[rng.choice(n, size=width, replace=False)] = True
        lo, up = [0] * n, [b - 1] * n
        for i in np.flatnonzero(mask):
            lo[i], up[i] = proper[int(rng.integers(0, len(proper)))]
        r = Rectangle(tuple(lo), tuple(up))
        if r not in seen:
            seen.add(r)
            rects.append(r)
    return UBOX(alpha, tuple(rects))


def description_size(f: TargetFunction) -> int:
    return f.description_size()


def evaluate(f: TargetFunction, x) -> int:
    return f.evaluate(x)


# ---------------------------------------------------------------------------
# function-instance files

def function_to_dict(f: TargetFunction, seed=None) -> dict:
    alpha = f.alphabet
    return {"class": f.kind, "b": alpha.b, "n": alpha.n, "payload": f.payload(), "seed": seed}


def function_from_dict(doc: dict) -> TargetFunction:
    try:
        kind = doc["class"].lower()
        alpha = Alphabet(int(doc["b"]), int(doc["n"]))
        p = doc["payload"]
    except (KeyError, AttributeError) as exc:
        raise ContractViolation(f"function document is missing field {exc}") from None
    if kind == "parity":
        f = Parity(FreqIndex.from_string(p["vector"]))
    elif kind == "dnf":
        f = DNF(alpha.n, tuple(tuple(tuple(lit) for lit in term) for term in p["terms"]))
    elif kind == "top":
        f = TOP(alpha.n, tuple(p["weights"]), tuple(FreqIndex.from_string(v) for v in p["vectors"]))
    elif kind == "ubox":
        f = UBOX(alpha, tuple(Rectangle(lo, up) for lo, up in p["rectangles"]))
    elif kind == "truthtable":
        f = TruthTable(alpha, np.array([1 if c == "+" else -1 for c in p["values"]], dtype=np.int8))
    else:
        raise ContractViolation(f"unknown function class {kind!r}")
    if f.alphabet != alpha:
        raise ContractViolation("payload does not match the declared b, n")
    return f


def write_function(path, f: TargetFunction, seed=None):
    with open(path, "w") as fh:
        json.dump(function_to_dict(f, seed), fh, indent=2)
        fh.write("\n")


def read_function(path) -> TargetFunction:
    with open(path) as fh:
        return function_from_dict(json.load(fh))


def as_points(alphabet: Alphabet, points: Sequence) -> np.ndarray:
    return alphabet.validate_points(points)
