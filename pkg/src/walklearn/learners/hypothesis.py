"""Hypotheses as real parts of weighted character sums."""

from __future__ import annotations

import json

import numpy as np

from walklearn.domain import Alphabet, FreqIndex, TargetFunction
from walklearn.errors import ContractViolation
from walklearn.fourier import roots_of_unity

TIE_TOL = 1e-12  # |value| below this counts as a tie and is decided as +1


class Hypothesis:
    """``h(x) = sign(Re sum_a w_a conj(chi_a(x)))`` with ties broken to +1."""

    def __init__(self, alphabet: Alphabet, terms=None):
        self.alphabet = alphabet
        self.terms = {}
        for a, w in (terms or {}).items():
            a = a if isinstance(a, FreqIndex) else FreqIndex(a)
            a.check(alphabet)
            self.terms[a] = self.terms.get(a, 0j) + complex(w)
        self._cache = None

    def _arrays(self):
        if self._cache is None:
            keys = list(self.terms)
            A = np.asarray([a.digits for a in keys], dtype=np.int64).reshape(len(keys), self.alphabet.n)
            w = np.asarray([self.terms[a] for a in keys], dtype=np.complex128)
            self._cache = (A, w)
        return self._cache

    def values(self, X) -> np.ndarray:
        """Real-valued score ``Re sum_a w_a conj(chi_a(x))`` for every row of X."""
        X = np.asarray(X, dtype=np.int64)
        A, w = self._arrays()
        if len(w) == 0:
            return np.zeros(X.shape[0])
        b = self.alphabet.b
        e = (X @ A.T) % b
        if b == 2:
            return (1.0 - 2.0 * e) @ w.real
        roots = roots_of_unity(b)
        # Re(w * conj(r)) = w.re * r.re + w.im * r.im
        return roots.real[e] @ w.real + roots.imag[e] @ w.imag

    def evaluate_many(self, X) -> np.ndarray:
        v = self.values(X)
        return np.where(v < -TIE_TOL, -1, 1).astype(np.int8)

    def evaluate(self, x) -> int:
        return int(self.evaluate_many(self.alphabet.validate_points(x))[0])

    def __add__(self, other: Hypothesis) -> Hypothesis:
        if other.alphabet != self.alphabet:
            raise ContractViolation("cannot add hypotheses over different alphabets")
        out = Hypothesis(self.alphabet, self.terms)
        for a, w in other.terms.items():
            out.terms[a] = out.terms.get(a, 0j) + w
        return out

    def scaled(self, factor: float) -> Hypothesis:
        return Hypothesis(self.alphabet, {a: factor * w for a, w in self.terms.items()})

    def exact_error(self, f: TargetFunction) -> float:
        """Uniform disagreement with ``f`` by enumeration of ``[b]^n``."""
        X = f.alphabet.all_points()
        return float(np.mean(self.evaluate_many(X) != f.truth_table()))

    def to_dict(self) -> dict:
        rows = sorted(((a.to_string(), w.real, w.imag) for a, w in self.terms.items()))
        return {"b": self.alphabet.b, "n": self.alphabet.n,
                "terms": [[a, re, im] for a, re, im in rows]}

    @classmethod
    def from_dict(cls, doc) -> Hypothesis:
        alpha = Alphabet(int(doc["b"]), int(doc["n"]))
        return cls(alpha, {FreqIndex.from_string(a): complex(re, im) for a, re, im in doc["terms"]})

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)
            fh.write("\n")

    @classmethod
    def read(cls, path) -> Hypothesis:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __repr__(self):
        return f"Hypothesis(b={self.alphabet.b}, n={self.alphabet.n}, terms={len(self.terms)})"


def constant_hypothesis(alphabet: Alphabet, sign: int = 1) -> Hypothesis:
    return Hypothesis(alphabet, {FreqIndex.zero(alphabet.n): float(sign)})


def weak_hypothesis(a: FreqIndex, coeff: complex, alphabet: Alphabet = None) -> Hypothesis:
    """``h(x) = sign(Re(coeff * conj(chi_a(x))))`` written as a character sum.

    ``h`` depends on x only through ``k = a . x mod b``; its b values are
    expanded over the characters ``chi_{j a}``, so for b = 2 the result is
    ``sign(coeff) * chi_a`` and for b > 2 it pairs ``a`` with its multiples
    (including the conjugate partner ``-a``).
    """
    a = a if isinstance(a, FreqIndex) else FreqIndex(a)
    alphabet = alphabet or Alphabet(2, a.n)
    a.check(alphabet)
    coeff = complex(coeff)
    if coeff == 0:
        raise ContractViolation("weak hypothesis needs a nonzero coefficient")
    b = alphabet.b
    roots = roots_of_unity(b)
    k = np.arange(b)
    phase = (coeff * np.conj(roots[k])).real
    phi = np.where(phase < -TIE_TOL, -1.0, 1.0)
    digits = np.asarray(a.digits)
    terms = {}
    for j in range(b):
        # phi(k) = sum_j phihat_j omega^(-j k), phihat_j = mean_k phi(k) omega^(j k)
        w = complex(np.mean(phi * roots[(j * k) % b]))
        if abs(w) > 1e-15:
            key = FreqIndex(tuple((j * digits) % b))
            terms[key] = terms.get(key, 0j) + w
    return Hypothesis(alphabet, terms)
