"""Exact harmonic analysis on ``Z_b^n``.

Characters are ``chi_a(x) = omega_b ** (a . x)`` with ``omega_b = exp(2 pi i / b)``,
coefficients are ``f^(a) = E_x[f(x) chi_a(x)]`` and ``f = sum_a f^(a) conj(chi_a)``.
Everything here is computed by enumeration and serves as ground truth for
the Monte-Carlo estimators.
"""

from __future__ import annotations

import csv
import itertools
import math

import numpy as np

from walklearn.domain import Alphabet, FreqIndex, TargetFunction
from walklearn.errors import ContractViolation, ParameterError, ResourceError


def roots_of_unity(b: int) -> np.ndarray:
    """``omega_b ** k`` for ``k = 0..b-1`` with the rational-angle values snapped exactly."""
    k = np.arange(b)
    roots = np.exp(2j * np.pi * k / b)
    # cos/sin leave ~1e-16 residue at multiples of pi/2
    for j in range(b):
        if (4 * j) % b == 0:
            roots[j] = [1, 1j, -1, -1j][(4 * j) // b]
    return roots


def char_exponents(A, X, b) -> np.ndarray:
    """Integer exponents ``(x . a) mod b`` for every row of X against every row of A: shape (m, k)."""
    A = np.asarray(A, dtype=np.int64)
    X = np.asarray(X, dtype=np.int64)
    if A.ndim == 1:
        A = A[None, :]
    return (X @ A.T) % b


def characters(A, X, b) -> np.ndarray:
    """``chi_a(x)`` for all rows: complex array of shape (m, k)."""
    return roots_of_unity(b)[char_exponents(A, X, b)]


def char_eval(a: FreqIndex, x, b: int) -> complex:
    if len(a.digits) != len(x):
        raise ContractViolation("frequency and point have different dimensions")
    e = sum(ai * xi for ai, xi in zip(a.digits, x)) % b
    return complex(roots_of_unity(b)[e])


class Spectrum:
    """All ``b^n`` Fourier coefficients of a function, stored densely by little-endian index."""

    def __init__(self, alphabet: Alphabet, coeffs):
        alphabet.check_exact()
        coeffs = np.asarray(coeffs, dtype=np.complex128)
        if coeffs.shape != (alphabet.size,):
            raise ContractViolation(f"spectrum needs {alphabet.size} coefficients, got {coeffs.shape}")
        self.alphabet = alphabet
        self.coeffs = coeffs

    @classmethod
    def from_mapping(cls, alphabet: Alphabet, mapping) -> Spectrum:
        coeffs = np.zeros(alphabet.size, dtype=np.complex128)
        for a, c in dict(mapping).items():
            a = a if isinstance(a, FreqIndex) else FreqIndex(a)
            a.check(alphabet)
            coeffs[alphabet.index_of(a.digits)[0]] = c
        return cls(alphabet, coeffs)

    def __getitem__(self, a) -> complex:
        a = a if isinstance(a, FreqIndex) else FreqIndex(a)
        a.check(self.alphabet)
        return complex(self.coeffs[self.alphabet.index_of(a.digits)[0]])

    def degrees(self) -> np.ndarray:
        return np.count_nonzero(self.alphabet.all_points(), axis=1)

    def frequencies(self) -> np.ndarray:
        return self.alphabet.all_points()

    def items(self, tol=0.0):
        """``(FreqIndex, coefficient)`` pairs with ``|c| > tol``, sorted lexicographically by digit string."""
        pts = self.alphabet.all_points()
        keep = np.flatnonzero(np.abs(self.coeffs) > tol)
        pairs = [(FreqIndex(tuple(pts[i])), complex(self.coeffs[i])) for i in keep]
        pairs.sort(key=lambda p: p[0].to_string())
        return pairs

    def mass(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def heavy(self, theta: float):
        """Frequencies whose coefficient magnitude is at least ``theta``."""
        return [a for a, c in self.items() if abs(c) >= theta]

    def to_csv(self, path, tol=0.0):
        """Write rows ``a,re,im`` for coefficients above ``tol`` to a path or open text file."""
        if hasattr(path, "write"):
            self._write_rows(path, tol)
            return
        with open(path, "w", newline="") as fh:
            self._write_rows(fh, tol)

    def _write_rows(self, fh, tol):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "re", "im"])
        for a, c in self.items(tol):
            w.writerow([a.to_string(), f"{c.real:.17g}", f"{c.imag:.17g}"])

    @classmethod
    def read_csv(cls, path, alphabet: Alphabet) -> Spectrum:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls.from_mapping(alphabet, {
            FreqIndex.from_string(r["a"]): complex(float(r["re"]), float(r["im"])) for r in rows})

    def __repr__(self):
        return f"Spectrum(b={self.alphabet.b}, n={self.alphabet.n}, mass={self.mass():.6g})"


def _fwht(values: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard butterfly over little-endian bit order."""
    a = np.asarray(values, dtype=np.float64).copy()
    size = a.shape[0]
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        a = np.stack((a[:, 0] + a[:, 1], a[:, 0] - a[:, 1]), axis=1)
        h *= 2
    return a.reshape(size)


def _dft_axes(table: np.ndarray, alphabet: Alphabet, sign: int) -> np.ndarray:
    """Apply the b-point DFT ``omega^(sign * a_i x_i)`` along every coordinate."""
    b, n = alphabet.b, alphabet.n
    roots = roots_of_unity(b)
    W = roots[(sign * np.outer(np.arange(b), np.arange(b))) % b]
    # Fortran order puts coordinate i on axis i
    t = np.asarray(table, dtype=np.complex128).reshape((b,) * n, order="F")
    for axis in range(n):
        t = np.moveaxis(np.tensordot(W, t, axes=([1], [axis])), 0, axis)
    return t.reshape(alphabet.size, order="F")


def transform_table(table, alphabet: Alphabet) -> Spectrum:
    alphabet.check_exact()
    table = np.asarray(table)
    if table.shape != (alphabet.size,):
        raise ContractViolation(f"truth table needs {alphabet.size} entries")
    if alphabet.b == 2 and not np.iscomplexobj(table):
        coeffs = _fwht(table) / alphabet.size
    else:
        coeffs = _dft_axes(table, alphabet, +1) / alphabet.size
    return Spectrum(alphabet, coeffs)


def transform(f: TargetFunction) -> Spectrum:
    return transform_table(f.truth_table(), f.alphabet)


def inverse_transform(S: Spectrum) -> np.ndarray:
    """Truth table ``f(x) = sum_a f^(a) conj(chi_a(x))`` (complex)."""
    alpha = S.alphabet
    if alpha.b == 2:
        return _fwht(S.coeffs.real) + 1j * _fwht(S.coeffs.imag)
    return _dft_axes(S.coeffs, alpha, -1)


def _check_rho(rho):
    if not 0.0 <= rho <= 1.0:
        raise ParameterError(f"rho must lie in [0, 1], got {rho}")


def noise_weights(degrees, rho) -> np.ndarray:
    degrees = np.asarray(degrees)
    # 0^0 = 1: the constant coefficient always survives
    return np.where(degrees == 0, 1.0, float(rho) ** degrees.astype(np.float64))


def noise_operator(S: Spectrum, rho: float) -> Spectrum:
    _check_rho(rho)
    return Spectrum(S.alphabet, S.coeffs * noise_weights(S.degrees(), rho))


def prefix_energy_exact(S: Spectrum, prefix, coords=None) -> float:
    """Sum of ``|f^(a)|^2`` over all ``a`` that carry ``prefix`` on ``coords``.

    ``coords`` defaults to the first ``len(prefix)`` coordinates.
    """
    prefix = tuple(prefix.digits if isinstance(prefix, FreqIndex) else prefix)
    k = len(prefix)
    n = S.alphabet.n
    if not 1 <= k <= n:
        raise ContractViolation(f"prefix length must lie in [1, {n}]")
    coords = list(range(k)) if coords is None else list(coords)
    if len(coords) != k:
        raise ContractViolation("prefix and coordinate list differ in length")
    pts = S.alphabet.all_points()
    match = np.all(pts[:, coords] == np.asarray(prefix), axis=1)
    return float(np.sum(np.abs(S.coeffs[match]) ** 2))


def _support_mask(S: Spectrum, I, full: bool) -> np.ndarray:
    I = sorted(set(int(i) for i in I))
    if any(not 0 <= i < S.alphabet.n for i in I):
        raise ContractViolation(f"coordinate set {I} not within [0, {S.alphabet.n})")
    pts = S.alphabet.all_points()
    if not I:
        return np.ones(S.alphabet.size, dtype=bool)
    sub = pts[:, I] != 0
    return np.all(sub, axis=1) if full else ~np.any(sub, axis=1)


def t_exact(S: Spectrum, rho: float, I) -> float:
    """rho-weighted mass on frequencies nonzero on every coordinate of I."""
    _check_rho(rho)
    w = noise_weights(S.degrees(), rho) * np.abs(S.coeffs) ** 2
    return float(np.sum(w[_support_mask(S, I, full=True)]))


def t_prime_exact(S: Spectrum, rho: float, I) -> float:
    """rho-weighted mass on frequencies vanishing on every coordinate of I."""
    _check_rho(rho)
    w = noise_weights(S.degrees(), rho) * np.abs(S.coeffs) ** 2
    return float(np.sum(w[_support_mask(S, I, full=False)]))


def level_mass_exact(S: Spectrum, rho: float, j: int) -> float:
    """``sum_{|I| = j} T(I)`` by explicit enumeration of the coordinate sets."""
    return sum(t_exact(S, rho, I) for I in itertools.combinations(range(S.alphabet.n), j))


def level_mass_bound(rho: float, j: int) -> float:
    if rho >= 1.0:
        return math.inf
    return rho ** j * (1.0 - rho) ** (-j - 1)


def noise_kernel(alphabet: Alphabet, rho: float, cap=2 ** 24) -> np.ndarray:
    """Transition matrix ``K[x, y] = P[N_rho(x) = y]`` over little-endian indices."""
    _check_rho(rho)
    if alphabet.size ** 2 > cap:
        raise ResourceError("pair enumeration exceeds the exact-mode cap",
                            size=alphabet.size ** 2, cap=cap)
    b = alphabet.b
    k1 = rho * np.eye(b) + (1.0 - rho) / b * np.ones((b, b))
    K = np.ones((1, 1))
    for _ in range(alphabet.n):
        K = np.kron(k1, K)
    return K


def uniform_error(h_table, f_table) -> float:
    """Exact disagreement rate of two +-1 tables."""
    return float(np.mean(np.asarray(h_table) != np.asarray(f_table)))
