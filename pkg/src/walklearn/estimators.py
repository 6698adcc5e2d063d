"""Monte-Carlo estimators of spectral quantities, sized by Hoeffding's bound.

Every estimator draws fresh examples from an :class:`OracleSession` and can
optionally reweight labels by a bounded function ``weight(X, labels)`` with
values in [0, 1]; the estimated quantity then refers to ``g = weight * f``
instead of ``f``.  Boosting uses this to search the reweighted target.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from walklearn.domain import Alphabet, FreqIndex, TargetFunction
from walklearn.errors import ContractViolation, ParameterError
from walklearn.fourier import noise_kernel, roots_of_unity
from walklearn.oracles import OracleSession

CRW_CHUNK = 4096  # trajectories generated per vectorised block


@dataclass(frozen=True)
class EstimatorConfig:
    tolerance: float
    confidence: float
    value_range: tuple = (-1.0, 1.0)

    def __post_init__(self):
        c, d = self.value_range
        if not self.tolerance > 0:
            raise ParameterError(f"tolerance must be positive, got {self.tolerance}")
        if not 0.0 < self.confidence < 1.0:
            raise ParameterError(f"confidence parameter delta must lie in (0, 1), got {self.confidence}")
        if not d > c:
            raise ParameterError(f"value range needs d > c, got {self.value_range}")

    @property
    def samples(self) -> int:
        return hoeffding_samples(self)

    def split(self, parts: int) -> EstimatorConfig:
        """Per-part config for a sum of ``parts`` estimates with the same overall guarantee."""
        return EstimatorConfig(self.tolerance / parts, self.confidence / parts, self.value_range)

    def with_range(self, value_range) -> EstimatorConfig:
        return EstimatorConfig(self.tolerance, self.confidence, tuple(value_range))


def hoeffding_samples(cfg: EstimatorConfig) -> int:
    """Smallest m with ``2 exp(-2 m lambda^2 / (d - c)^2) <= delta``."""
    c, d = cfg.value_range
    m = (d - c) ** 2 * math.log(2.0 / cfg.confidence) / (2.0 * cfg.tolerance ** 2)
    return max(1, math.ceil(m - 1e-9))


@dataclass
class EstimateRecord:
    quantity: str
    params: dict
    estimate: object
    tolerance: float
    samples: int
    wall_time: float = 0.0

    def to_json(self) -> str:
        d = asdict(self)
        if isinstance(self.estimate, complex):
            d["estimate"] = [self.estimate.real, self.estimate.imag]
        return json.dumps(d, sort_keys=True)


@dataclass
class RunLog:
    """Append-only list of estimation records, written as JSON lines."""

    path: object = None
    records: list = field(default_factory=list)

    def append(self, record: EstimateRecord):
        self.records.append(record)
        if self.path is not None:
            with open(self.path, "a") as fh:
                fh.write(record.to_json() + "\n")

    @staticmethod
    def read(path) -> list:
        out = []
        with open(path) as fh:
            for line in fh:
                if line.strip():
                    d = json.loads(line)
                    if isinstance(d["estimate"], list):
                        d["estimate"] = complex(*d["estimate"])
                    out.append(EstimateRecord(**d))
        return out


def _log(log, quantity, params, estimate, cfg, samples, started):
    if log is not None:
        log.append(EstimateRecord(quantity, params, estimate, cfg.tolerance, samples,
                                  time.perf_counter() - started))


def _weighted(labels, X, weight):
    g = labels.astype(np.float64)
    if weight is not None:
        g = g * weight(X, labels)
    return g


# ---------------------------------------------------------------------------
# uniform examples from any passive session

def rw_mixing_gap(n: int) -> int:
    """Walk steps between retained examples for RW coefficient estimation."""
    return max(1, math.ceil(5 * n * math.log(max(n, 2))))


def uniform_examples(session: OracleSession, m: int):
    """``m`` independent (or well-mixed) uniform labelled examples from a passive session."""
    n = session.alphabet.n
    if session.mode == "UQ":
        return session.uq_draws(m)
    if session.mode == "NS":
        batch = session.ns_draws(m)
        return batch.x, batch.fx
    if session.mode == "CRW":
        _align_crw(session)
        X, y = session.crw_steps(m * n)
        # a full cycle redraws every coordinate
        return X[n - 1::n], y[n - 1::n]
    if session.mode == "RW":
        gap = rw_mixing_gap(n)
        if not session.initialized:
            session.rw_steps(1)
        X, y = session.rw_steps(m * gap)
        return X[gap - 1::gap], y[gap - 1::gap]
    raise ContractViolation(f"uniform examples are not available from a {session.mode} session")


def estimate_coefficient(session: OracleSession, a: FreqIndex, cfg: EstimatorConfig,
                         weight=None, log=None) -> complex:
    """Estimate ``g^(a) = E[g(x) chi_a(x)]``; real and imaginary parts each within lambda."""
    started = time.perf_counter()
    a = a if isinstance(a, FreqIndex) else FreqIndex(a)
    a.check(session.alphabet)
    b = session.alphabet.b
    # real and imaginary parts share the failure probability
    parts_cfg = cfg if b == 2 else EstimatorConfig(cfg.tolerance, cfg.confidence / 2, cfg.value_range)
    m = hoeffding_samples(parts_cfg)
    X, labels = uniform_examples(session, m)
    value = complex(np.mean(_weighted(labels, X, weight) * _chars(X, [a.digits], b)[:, 0]))
    if b == 2:
        value = complex(value.real, 0.0)
    _log(log, "coefficient", {"a": a.to_string(), "mode": session.mode}, value, cfg, m, started)
    return value


def _chars(X, A, b):
    A = np.asarray(A, dtype=np.int64)
    return roots_of_unity(b)[(X @ A.T) % b]


def coefficients_from_examples(X, g, freqs, b) -> np.ndarray:
    """Empirical ``mean(g * chi_a)`` for many frequencies over one sample."""
    if len(freqs) == 0:
        return np.zeros(0, dtype=np.complex128)
    A = np.asarray([f.digits if isinstance(f, FreqIndex) else f for f in freqs], dtype=np.int64)
    out = np.zeros(len(A), dtype=np.complex128)
    step = 256
    for s in range(0, len(A), step):
        out[s:s + step] = g @ _chars(X, A[s:s + step], b) / len(g)
    if b == 2:
        out = out.real.astype(np.complex128)
    return out


# ---------------------------------------------------------------------------
# cyclic random walk: prefix energies

def crw_prefix_coords(session: OracleSession, k: int) -> list:
    """Original coordinates carrying prefix digits ``0..k-1``.

    After renaming components so that the cycle updates them in the order
    ``n, n-1, ..., 1``, prefix digit j sits on the coordinate updated last-but-j
    in each cycle.
    """
    n = session.alphabet.n
    return [session.cycle[n - 1 - j] for j in range(k)]


def _align_crw(session: OracleSession) -> int:
    """Bring the walk to a cycle boundary; returns the warm-up steps spent."""
    session._require("CRW")
    spent = 0
    if not session.initialized:
        session.crw_steps(1)
        spent += 1
    if session.cycle_position:
        gap = session.alphabet.n - session.cycle_position
        session.crw_steps(gap)
        spent += gap
    return spent


def crw_energy_batch(session: OracleSession, prefixes, m: int, weight=None):
    """Prefix energies of ``g`` for many prefixes from ``m`` shared 2n-step trajectories.

    ``prefixes`` is a list of digit tuples (any mix of lengths).  Each
    trajectory walks n steps to a uniform point, n-k more steps to obtain
    ``(y, x)`` and k final steps to obtain ``(z, x)``; the same trajectory
    serves every prefix length because the point after step ``2n - k`` and
    the final point share exactly the last n-k renamed coordinates.

    Returns ``(energies, end_points, end_weights)`` where the last two are the
    uniform end-of-trajectory points and their ``g`` values (reusable for
    coefficient estimates), plus the warm-up step count.
    """
    n, b = session.alphabet.n, session.alphabet.b
    warmup = _align_crw(session)
    lengths = sorted({len(p) for p in prefixes})
    if any(not 1 <= k <= n for k in lengths):
        raise ContractViolation(f"prefix lengths must lie in [1, {n}]")
    roots = roots_of_unity(b)
    groups = {k: [i for i, p in enumerate(prefixes) if len(p) == k] for k in lengths}
    mats = {k: np.asarray([prefixes[i] for i in groups[k]], dtype=np.int64) for k in lengths}
    coords = {k: crw_prefix_coords(session, k) for k in lengths}
    sums = np.zeros(len(prefixes), dtype=np.float64)
    ends, end_g = [], []
    done = 0
    while done < m:
        c = min(CRW_CHUNK, m - done)
        X, labels = session.crw_steps(2 * n * c)
        g = _weighted(labels, X, weight).reshape(c, 2 * n)
        X = X.reshape(c, 2 * n, n)
        last = X[:, 2 * n - 1, :]
        g_last = g[:, 2 * n - 1]
        for k in lengths:
            mid = X[:, 2 * n - k - 1, :]
            gg = g[:, 2 * n - k - 1] * g_last
            diff = (mid[:, coords[k]] - last[:, coords[k]]) % b
            e = (diff @ mats[k].T) % b
            if b == 2:
                stat = gg[:, None] * (1.0 - 2.0 * e)
            else:
                stat = gg[:, None] * roots.real[e]
            sums[groups[k]] += stat.sum(axis=0)
        ends.append(last)
        end_g.append(g_last)
        done += c
    return sums / m, np.concatenate(ends), np.concatenate(end_g), warmup


def estimate_prefix_energy_crw(session: OracleSession, a, cfg: EstimatorConfig, coords=None,
                               weight=None, log=None) -> float:
    """Estimate the summed squared coefficients over all completions of prefix ``a``.

    ``a`` is given in renamed coordinates (see :func:`crw_prefix_coords`).
    Passing ``coords`` asserts which original coordinates the prefix occupies;
    a mismatch with the session's cycle is a contract violation.  Uses
    exactly ``2n`` walk steps per sample after aligning to a cycle boundary.
    """
    started = time.perf_counter()
    session._require("CRW")
    digits = tuple(a.digits if isinstance(a, FreqIndex) else a)
    k = len(digits)
    if coords is not None and list(coords) != crw_prefix_coords(session, k):
        raise ContractViolation(
            f"prefix coordinates {list(coords)} do not match the walk cycle "
            f"(expected {crw_prefix_coords(session, k)})")
    m = hoeffding_samples(cfg)
    energies, _, _, _ = crw_energy_batch(session, [digits], m, weight)
    value = float(energies[0])
    _log(log, "prefix_energy_crw", {"prefix": "".join(map(str, digits))}, value, cfg, m, started)
    return value


# ---------------------------------------------------------------------------
# noise sensitivity: T'(I) and T(I)

def estimate_t_prime_ns(session: OracleSession, I, cfg: EstimatorConfig, budget=None,
                        weight=None, log=None) -> float:
    """Estimate ``E[g(x) g(y)]`` under NS pairs conditioned on ``I`` inside S."""
    started = time.perf_counter()
    session._require("NS")
    m = hoeffding_samples(cfg)
    batch = session.ns_draws_conditioned(I, m, budget)
    gx = _weighted(batch.fx, batch.x, weight)
    gy = _weighted(batch.fy, batch.y, weight)
    value = float(np.mean(gx * gy))
    _log(log, "t_prime_ns", {"I": sorted(I), "rho": session.rho, "attempts": batch.attempts},
         value, cfg, m, started)
    return value


def subsets(I):
    I = sorted(set(int(i) for i in I))
    for r in range(len(I) + 1):
        yield from itertools.combinations(I, r)


def estimate_t_ns(session: OracleSession, I, cfg: EstimatorConfig, budget=None, weight=None,
                  log=None) -> float:
    """Inclusion-exclusion estimate ``sum_{J <= I} (-1)^|J| T'(J)``.

    ``cfg`` is the overall guarantee; each of the ``2^|I|`` sub-estimates gets
    an equal share of both tolerance and failure probability.
    """
    started = time.perf_counter()
    I = sorted(set(int(i) for i in I))
    sub = cfg.split(2 ** len(I))
    total = 0.0
    for J in subsets(I):
        total += (-1) ** len(J) * estimate_t_prime_ns(session, J, sub, budget, weight)
    _log(log, "t_ns", {"I": I, "rho": session.rho}, total, cfg, 2 ** len(I) * hoeffding_samples(sub), started)
    return total


def pooled_factor_range(rho: float, size: int) -> float:
    """Largest magnitude of the importance factor used by :func:`pooled_t_estimates`."""
    return max(1.0, rho / (1.0 - rho)) ** size


def pooled_t_estimates(batch, rho: float, sets, weight=None) -> dict:
    """Estimate ``T(I)`` for many I from one unconditioned NS batch.

    Uses ``E[g(x) g(y) prod_{i in I} (1 - [i in S] / (1 - rho))]``, which equals
    the inclusion-exclusion sum with each conditional expectation replaced by
    its importance-weighted form ``E[g g 1{J <= S}] / (1 - rho)^|J|``.
    """
    if rho >= 1.0:
        raise ParameterError("pooled estimation needs rho < 1")
    gg = _weighted(batch.fx, batch.x, weight) * _weighted(batch.fy, batch.y, weight)
    factor = 1.0 - 1.0 / (1.0 - rho)
    out = {}
    for I in sets:
        I = tuple(sorted(I))
        if I:
            prod = np.prod(np.where(batch.S[:, list(I)], factor, 1.0), axis=1)
            out[I] = float(np.mean(gg * prod))
        else:
            out[I] = float(np.mean(gg))
    return out


# ---------------------------------------------------------------------------
# verification experiments

@dataclass(frozen=True)
class CollisionResult:
    rho: float
    n: int
    samples: int
    hits: int
    empirical: float
    analytic: float

    @property
    def sigma(self) -> float:
        p = self.analytic
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.samples)

    @property
    def z_score(self) -> float:
        if self.sigma == 0.0:
            return 0.0 if self.empirical == self.analytic else math.inf
        return (self.empirical - self.analytic) / self.sigma


def collision_probability(rho: float, n: int) -> float:
    return (1.0 - (1.0 - rho) + 0.5 * (1.0 - rho) ** 2) ** n


def collision_decay_experiment(rho: float, n: int, samples: int, seed=0, chunk=1 << 16) -> CollisionResult:
    """Empirical ``P[x xor u == y xor v]`` for independent NS pairs (x, y), (u, v) on [2]^n."""
    session = OracleSession(_Const(n), "NS", seed=seed, rho=rho)
    hits = 0
    done = 0
    while done < samples:
        c = min(chunk, samples - done)
        first = session.ns_draws(c)
        second = session.ns_draws(c)
        g1 = first.x ^ second.x
        g2 = first.y ^ second.y
        hits += int(np.count_nonzero(np.all(g1 == g2, axis=1)))
        done += c
    return CollisionResult(rho, n, samples, hits, hits / samples, collision_probability(rho, n))


class _Const(TargetFunction):
    """Constant +1 on [2]^n without a truth table (for large n)."""

    kind = "constant"

    def __init__(self, n):
        self.alphabet = Alphabet(2, n)

    def _eval(self, pts):
        return np.ones(pts.shape[0], dtype=np.int8)


def sq_decomposition_check(gamma, f: TargetFunction, rho: float) -> float:
    """Discrepancy between a second-order query's expectation and its four-term expansion.

    ``gamma(X, Y, i, j)`` is vectorised over rows of X, Y with label arrays
    ``i``, ``j``.  Both sides are computed by enumerating the correlated
    pair distribution.
    """
    alpha = f.alphabet
    if alpha.b != 2:
        raise ContractViolation("the decomposition check is defined for b = 2")
    K = noise_kernel(alpha, rho)
    N = alpha.size
    X = alpha.all_points()
    fx = f.truth_table().astype(np.float64)
    ix, iy = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    ix, iy = ix.ravel(), iy.ravel()
    P = K / N  # joint P[x, y]

    def table(i, j):
        li = np.full(N * N, i, dtype=np.int8)
        lj = np.full(N * N, j, dtype=np.int8)
        return np.asarray(gamma(X[ix], X[iy], li, lj), dtype=np.float64).reshape(N, N)

    lhs_vals = np.asarray(gamma(X[ix], X[iy], fx[ix].astype(np.int8), fx[iy].astype(np.int8)),
                          dtype=np.float64).reshape(N, N)
    lhs = float(np.sum(P * lhs_vals))

    rhs = 0.0
    for i in (1, -1):
        for j in (1, -1):
            G = table(i, j)
            plain = np.sum(P * G)
            # E_x[f(x) E_{y|x}[G]]: rows of K are conditionals given x
            first_x = np.mean(fx * np.sum(K * G, axis=1))
            # E_y[f(y) E_{x|y}[G]]: K is symmetric, so K[:, y] is the conditional given y
            first_y = np.mean(fx * np.sum(K * G, axis=0))
            second = np.sum(P * np.outer(fx, fx) * G)
            rhs += 0.25 * (plain + i * first_x + j * first_y + i * j * second)
    return abs(lhs - float(rhs))
