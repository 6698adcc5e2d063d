"""Heavy-coefficient search: prefix-tree search over the cyclic walk and the
breadth-first sieve over coordinate sets in the noise-sensitivity model."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from walklearn.domain import Alphabet, FreqIndex
from walklearn.errors import ContractViolation, ParameterError
from walklearn.estimators import (
    EstimatorConfig, _align_crw, _weighted, coefficients_from_examples, crw_prefix_coords,
    estimate_t_ns, hoeffding_samples, pooled_t_estimates)
from walklearn.fourier import _dft_axes, level_mass_bound, roots_of_unity
from walklearn.oracles import OracleSession

DENSE_LIMIT = 1 << 16  # largest b^k handled by histogram + transform


@dataclass
class SearchResult:
    coefficients: list  # (FreqIndex, estimated coefficient), heaviest first
    truncated: bool = False
    samples: int = 0
    steps: int = 0
    warmup_steps: int = 0
    frontier: list = field(default_factory=list)
    candidates: list = field(default_factory=list)  # every estimated (FreqIndex, coefficient)
    mean_weight: float = 1.0

    def best(self):
        pool = self.candidates or self.coefficients
        if not pool:
            return None
        return max(pool, key=lambda p: (abs(p[1]), [-d for d in p[0].digits]))

    def frequencies(self):
        return [a for a, _ in self.coefficients]


def empirical_spectrum(X, g, alphabet: Alphabet) -> np.ndarray:
    """``mean(g * chi_a(x))`` for every a at once, via a weighted histogram and a DFT."""
    powers = alphabet.b ** np.arange(alphabet.n, dtype=np.int64)
    hist = np.bincount(np.asarray(X) @ powers, weights=g, minlength=alphabet.size)
    if alphabet.b == 2:
        from walklearn.fourier import _fwht
        return _fwht(hist).astype(np.complex128) / len(g)
    return _dft_axes(hist, alphabet, +1) / len(g)


class CRWSample:
    """Shared 2n-step trajectories for prefix-energy estimation at every level.

    For level k, ``diffs[k]`` holds ``(y - z) mod b`` on the k renamed prefix
    coordinates and ``products[k]`` holds ``g(yx) g(zx)``.
    """

    def __init__(self, session: OracleSession, m: int, weight=None, chunk=4096):
        session._require("CRW")
        n, b = session.alphabet.n, session.alphabet.b
        self.alphabet = session.alphabet
        self.m = m
        self.warmup_steps = _align_crw(session)
        start = session.query_count
        coords = crw_prefix_coords(session, n)
        self.coords = coords
        self.diffs = {k: [] for k in range(1, n + 1)}
        self.products = {k: [] for k in range(1, n + 1)}
        ends, end_g, weights = [], [], []
        rows = np.arange(n - 1, 2 * n)  # steps n .. 2n (0-based rows)
        done = 0
        while done < m:
            c = min(chunk, m - done)
            X, labels = session.crw_steps(2 * n * c)
            X = X.reshape(c, 2 * n, n)[:, rows, :]
            labels = labels.reshape(c, 2 * n)[:, rows]
            flat = X.reshape(-1, n)
            w = np.ones(flat.shape[0]) if weight is None else weight(flat, labels.ravel())
            g = (labels.ravel() * w).reshape(c, n + 1)
            last = X[:, n, :]
            for k in range(1, n + 1):
                # point after step 2n - k sits at row n - k of the kept slice
                mid = X[:, n - k, :]
                self.diffs[k].append(((mid[:, coords[:k]] - last[:, coords[:k]]) % b).astype(np.int16))
                self.products[k].append(g[:, n - k] * g[:, n])
            ends.append(last)
            end_g.append(g[:, n])
            weights.append(w.reshape(c, n + 1)[:, n])
            done += c
        self.steps = session.query_count - start
        self.diffs = {k: np.concatenate(v) for k, v in self.diffs.items()}
        self.products = {k: np.concatenate(v) for k, v in self.products.items()}
        self.end_points = np.concatenate(ends)
        self.end_g = np.concatenate(end_g)
        self.mean_weight = float(np.mean(np.concatenate(weights)))

    def energies(self, prefixes) -> np.ndarray:
        """Estimated prefix energies for same-length prefixes (renamed coordinates)."""
        if len(prefixes) == 0:
            return np.zeros(0)
        b = self.alphabet.b
        P = np.asarray(prefixes, dtype=np.int64)
        k = P.shape[1]
        d, gg = self.diffs[k], self.products[k]
        if b ** k <= DENSE_LIMIT:
            alpha = Alphabet(b, k)
            powers = b ** np.arange(k, dtype=np.int64)
            table = empirical_spectrum(d.astype(np.int64), gg, alpha).real
            return table[P @ powers]
        out = np.empty(len(P))
        real_roots = roots_of_unity(b).real
        for s in range(0, len(P), 256):
            e = (d.astype(np.int64) @ P[s:s + 256].T) % b
            out[s:s + 256] = (gg[:, None] * real_roots[e]).mean(axis=0)
        return out

    def to_original(self, prefix) -> FreqIndex:
        digits = [0] * self.alphabet.n
        for j, d in enumerate(prefix):
            digits[self.coords[j]] = int(d)
        return FreqIndex(tuple(digits))

    def coefficients(self, freqs) -> np.ndarray:
        return coefficients_from_examples(self.end_points, self.end_g, freqs, self.alphabet.b)


def km_search_from_sample(sample: CRWSample, theta: float, max_live=None) -> SearchResult:
    """Prefix-tree search on a collected :class:`CRWSample`."""
    if not theta > 0:
        raise ParameterError("theta must be positive")
    b, n = sample.alphabet.b, sample.alphabet.n
    cap = max_live or math.ceil(2.0 / theta ** 2)
    keep_at = theta ** 2 / 2.0
    live = [()]
    truncated = False
    frontier = []
    for k in range(1, n + 1):
        cands = [p + (d,) for p in live for d in range(b)]
        e = sample.energies(cands)
        order = np.argsort(-e, kind="stable")
        passing = [i for i in order if e[i] >= keep_at]
        if len(passing) > cap:
            truncated = True
            passing = passing[:cap]
        live = [cands[i] for i in passing]
        frontier.append(len(live))
        if not live:
            break
    freqs = [sample.to_original(p) for p in live]
    coefs = sample.coefficients(freqs)
    candidates = list(zip(freqs, (complex(c) for c in coefs)))
    keep = [(a, c) for a, c in candidates if abs(c) >= 0.75 * theta]
    keep.sort(key=lambda p: -abs(p[1]))
    return SearchResult(keep, truncated, sample.m, sample.steps, sample.warmup_steps, frontier,
                        candidates, sample.mean_weight)


def km_search_crw(session: OracleSession, theta: float, cfg: EstimatorConfig = None, weight=None,
                  samples=None, max_live=None) -> SearchResult:
    """Find the frequencies with ``|g^(a)| >= theta`` from a cyclic random walk.

    Keeps length-k prefixes whose estimated energy is at least ``theta^2 / 2``
    (at most ``ceil(2 / theta^2)`` per level, the lowest pruned with the
    ``truncated`` flag set), extends survivors by every digit, and at full
    length estimates the coefficients directly.  The sample size is
    ``samples`` if given, else Hoeffding-sized from ``cfg`` (default:
    tolerance ``theta^2 / 4``, confidence 0.05 split over all estimates).
    """
    n, b = session.alphabet.n, session.alphabet.b
    if samples is None:
        if cfg is None:
            estimates = n * b * math.ceil(2.0 / theta ** 2)
            cfg = EstimatorConfig(theta ** 2 / 4.0, 0.05 / estimates)
        samples = hoeffding_samples(cfg)
    sample = CRWSample(session, samples, weight)
    return km_search_from_sample(sample, theta, max_live)


@dataclass(frozen=True)
class SieveConfig:
    rho: float
    theta: float
    degree_cap: int
    samples: int = 200_000
    frontier_cap: int = None
    pooled: bool = True
    estimator: EstimatorConfig = None  # used when pooled is False

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ParameterError("the sieve needs 0 < rho < 1")
        if not self.theta > 0 or self.degree_cap < 0:
            raise ParameterError("theta must be positive and the degree cap non-negative")

    @property
    def t_threshold(self) -> float:
        # a coefficient of size theta at degree <= d puts rho^d theta^2 into T(I) for I inside its support
        return self.rho ** self.degree_cap * self.theta ** 2 / 2.0

    def level_cap(self, j: int) -> int:
        derived = math.ceil(level_mass_bound(self.rho, j) / self.t_threshold)
        return derived if self.frontier_cap is None else self.frontier_cap


def bounded_sieve_ns(session: OracleSession, cfg: SieveConfig, weight=None, batch=None) -> SearchResult:
    """Breadth-first search over coordinate sets of size at most ``degree_cap``.

    A set I is kept when its estimated ``T(I)`` reaches ``cfg.t_threshold``;
    candidates at the next level are one-coordinate extensions whose every
    subset of size ``|I|`` was kept.  For each kept I all ``(b-1)^|I|``
    frequencies supported exactly on I are estimated from the uniform
    halves of the NS pairs.  A pre-drawn ``batch`` replaces the
    ``cfg.samples`` fresh draws.
    """
    session._require("NS")
    if abs(cfg.rho - session.rho) > 1e-12:
        raise ContractViolation(f"sieve configured for rho={cfg.rho} but the session has rho={session.rho}")
    alpha = session.alphabet
    n, b = alpha.n, alpha.b
    start = session.query_count
    if batch is None:
        batch = session.ns_draws(cfg.samples)
    gx = _weighted(batch.fx, batch.x, weight)
    mean_weight = 1.0 if weight is None else float(np.mean(weight(batch.x, batch.fx)))
    truncated = False
    kept = [()]
    all_kept = [()]
    frontier = [1]
    for j in range(1, cfg.degree_cap + 1):
        prev = set(kept)
        cands = sorted({tuple(sorted(I + (i,))) for I in kept for i in range(n) if i not in I})
        cands = [c for c in cands if all(tuple(s) in prev for s in itertools.combinations(c, j - 1))]
        if not cands:
            break
        if cfg.pooled:
            est = pooled_t_estimates(batch, cfg.rho, cands, weight)
        else:
            ecfg = cfg.estimator or EstimatorConfig(cfg.t_threshold / 2, 0.01)
            est = {c: estimate_t_ns(session, c, ecfg, weight=weight) for c in cands}
        passing = sorted((c for c in cands if est[c] >= cfg.t_threshold), key=lambda c: -est[c])
        cap = cfg.level_cap(j)
        if len(passing) > cap:
            truncated = True
            passing = passing[:cap]
        kept = passing
        all_kept.extend(kept)
        frontier.append(len(kept))
        if not kept:
            break
    freqs = []
    for I in all_kept:
        for vals in itertools.product(range(1, b), repeat=len(I)):
            d = [0] * n
            for i, v in zip(I, vals):
                d[i] = v
            freqs.append(FreqIndex(tuple(d)))
    if alpha.size <= DENSE_LIMIT:
        spec = empirical_spectrum(batch.x, gx, alpha)
        powers = b ** np.arange(n, dtype=np.int64)
        coefs = spec[np.asarray([f.digits for f in freqs], dtype=np.int64) @ powers]
    else:
        coefs = coefficients_from_examples(batch.x, gx, freqs, b)
    candidates = list(zip(freqs, (complex(c) for c in coefs)))
    keep = sorted(((a, c) for a, c in candidates if abs(c) >= cfg.theta), key=lambda p: -abs(p[1]))
    return SearchResult(keep, truncated, len(batch), session.query_count - start, 0, frontier,
                        candidates, mean_weight)
