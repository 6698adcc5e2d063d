"""Example-access models over a hidden target.

An :class:`OracleSession` wraps a target and hands out labelled examples in
one of five modes:

``MQ``   membership queries at points of the caller's choosing
``UQ``   independent uniform examples
``RW``   random walk: each step redraws one uniformly chosen coordinate
``CRW``  cyclic random walk: coordinates are redrawn in a fixed cyclic order
``NS``   noise sensitivity: pairs ``(x, N_rho(x))`` with the updated set S

A redrawn digit may equal the old one, so walk steps with Hamming distance
0 are legal.  Each session owns a Philox stream; outputs are a function of
the seed and the sequence of calls (including batch sizes).  Learners are
expected to touch the target only through session methods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from walklearn.domain import Alphabet, TargetFunction
from walklearn.errors import ContractViolation, ParameterError, ResourceError
from walklearn.rng import make_rng

MODES = ("MQ", "UQ", "RW", "CRW", "NS")


@dataclass(frozen=True)
class NSSample:
    x: tuple
    y: tuple
    fx: int
    fy: int
    S: frozenset


@dataclass
class NSBatch:
    """A batch of noise-sensitivity draws as parallel arrays."""

    x: np.ndarray
    y: np.ndarray
    fx: np.ndarray
    fy: np.ndarray
    S: np.ndarray  # bool mask, True where the coordinate was updated
    attempts: int = 0
    hits: int = 0  # draws that satisfied the conditioning, surplus included

    def __len__(self):
        return self.x.shape[0]

    def sample(self, i) -> NSSample:
        return NSSample(tuple(int(v) for v in self.x[i]), tuple(int(v) for v in self.y[i]),
                        int(self.fx[i]), int(self.fy[i]), frozenset(np.flatnonzero(self.S[i]).tolist()))


def default_rejection_budget(rho: float, size: int) -> int:
    """Attempts allowed per accepted conditioned sample: ``ceil(50 (1 - rho)^-|I|)``."""
    if size == 0:
        return 1
    if rho >= 1.0:
        return 0
    return math.ceil(50.0 * (1.0 - rho) ** (-size))


class OracleSession:
    """Stateful sampling session over a hidden target."""

    def __init__(self, target: TargetFunction, mode: str, seed=0, rho=None, cycle=None,
                 transcript=None):
        mode = mode.upper()
        if mode not in MODES:
            raise ParameterError(f"unknown oracle mode {mode!r}; expected one of {MODES}")
        self._target = target
        self._rng = make_rng(seed)
        self.mode = mode
        self.alphabet: Alphabet = target.alphabet
        self.query_count = 0
        self.rho = None
        if mode == "NS":
            if rho is None or not 0.0 <= rho <= 1.0:
                raise ParameterError(f"NS sessions need rho in [0, 1], got {rho!r}")
            self.rho = float(rho)
        n = self.alphabet.n
        if cycle is None:
            cycle = tuple(range(n))
        cycle = tuple(int(c) for c in cycle)
        if sorted(cycle) != list(range(n)):
            raise ContractViolation(f"cycle must be a permutation of 0..{n - 1}")
        self.cycle = cycle
        self._cycle_arr = np.asarray(cycle, dtype=np.int64)
        self.cycle_position = 0
        self._current = None
        self._transcript = transcript

    # -- bookkeeping -------------------------------------------------------

    @property
    def initialized(self) -> bool:
        return self._current is not None

    @property
    def current_point(self):
        return None if self._current is None else tuple(int(v) for v in self._current)

    def _require(self, *modes):
        if self.mode not in modes:
            raise ContractViolation(f"operation needs a {'/'.join(modes)} session, this one is {self.mode}")

    def _label(self, pts) -> np.ndarray:
        return self._target._eval(pts)

    def _log(self, kind, inputs, outputs, count):
        self.query_count += count
        if self._transcript is not None:
            self._transcript.write(f"{kind}\t{inputs}\t{outputs}\t{self.query_count}\n")

    def _uniform(self, m) -> np.ndarray:
        return self._rng.integers(0, self.alphabet.b, size=(m, self.alphabet.n), dtype=np.int64)

    # -- MQ / UQ -----------------------------------------------------------

    def mq_query(self, x) -> int:
        self._require("MQ")
        pts = self.alphabet.validate_points(x)
        if pts.shape[0] != 1:
            raise ContractViolation("mq_query takes a single point")
        y = int(self._label(pts)[0])
        self._log("MQ", "".join(map(str, pts[0])), y, 1)
        return y

    def mq_queries(self, points) -> np.ndarray:
        self._require("MQ")
        pts = self.alphabet.validate_points(points)
        labels = self._label(pts)
        self._log("MQ*", len(pts), "batch", len(pts))
        return labels

    def uq_draw(self):
        X, y = self.uq_draws(1)
        return tuple(int(v) for v in X[0]), int(y[0])

    def uq_draws(self, m: int):
        self._require("UQ")
        X = self._uniform(m)
        y = self._label(X)
        self._log("UQ", m, "batch", m)
        return X, y

    # -- walks -------------------------------------------------------------

    def _init_walk(self):
        self._current = self._uniform(1)[0]
        self.cycle_position = 0

    def rw_step(self):
        X, y = self.rw_steps(1)
        return tuple(int(v) for v in X[0]), int(y[0])

    def rw_steps(self, count: int):
        """``count`` consecutive walk examples; the first example of a session is uniform."""
        self._require("RW")
        n, b = self.alphabet.n, self.alphabet.b
        out = np.empty((count, n), dtype=np.int64)
        start = 0
        if not self.initialized and count > 0:
            self._init_walk()
            out[0] = self._current
            start = 1
        m = count - start
        if m > 0:
            coords = self._rng.integers(0, n, size=m)
            vals = self._rng.integers(0, b, size=m)
            idx = np.full((m, n), -1, dtype=np.int64)
            idx[np.arange(m), coords] = np.arange(m)
            np.maximum.accumulate(idx, axis=0, out=idx)
            pts = np.where(idx >= 0, vals[np.maximum(idx, 0)], self._current[None, :])
            out[start:] = pts
            self._current = pts[-1].copy()
        labels = self._label(out)
        self._log("RW", count, "batch", count)
        return out, labels

    def crw_step(self):
        X, y = self.crw_steps(1)
        return tuple(int(v) for v in X[0]), int(y[0])

    def crw_steps(self, count: int):
        """``count`` consecutive cyclic-walk examples.

        Step ``t`` redraws coordinate ``cycle[cycle_position]`` and advances the
        position mod n.  The first example of a session is a fresh uniform
        point and does not advance the cycle.
        """
        self._require("CRW")
        n, b = self.alphabet.n, self.alphabet.b
        out = np.empty((count, n), dtype=np.int64)
        start = 0
        if not self.initialized and count > 0:
            self._init_walk()
            out[0] = self._current
            start = 1
        m = count - start
        if m > 0:
            pos = self.cycle_position
            total = pos + m
            rows = -(-total // n)
            cur_cp = self._current[self._cycle_arr]
            D = np.zeros(rows * n, dtype=np.int64)
            D[:pos] = cur_cp[:pos]
            D[pos:total] = self._rng.integers(0, b, size=m)
            D = D.reshape(rows, n)
            prev = np.vstack([cur_cp[None, :], D[:-1]])
            # after the step at cycle position p, positions q <= p hold this round's draw
            mask = np.tri(n, dtype=bool)
            pts_cp = np.where(mask[None, :, :], D[:, None, :], prev[:, None, :]).reshape(rows * n, n)
            pts = np.empty((m, n), dtype=np.int64)
            pts[:, self._cycle_arr] = pts_cp[pos:total]
            out[start:] = pts
            self._current = pts[-1].copy()
            self.cycle_position = total % n
        labels = self._label(out)
        self._log("CRW", count, "batch", count)
        return out, labels

    # -- noise sensitivity ---------------------------------------------------

    def _ns_raw(self, m):
        x = self._uniform(m)
        S = self._rng.random((m, self.alphabet.n)) < (1.0 - self.rho)
        z = self._uniform(m)
        y = np.where(S, z, x)
        return x, y, S

    def ns_draw(self) -> NSSample:
        return self.ns_draws(1).sample(0)

    def ns_draws(self, m: int) -> NSBatch:
        self._require("NS")
        x, y, S = self._ns_raw(m)
        batch = NSBatch(x, y, self._label(x), self._label(y), S, attempts=m, hits=m)
        self._log("NS", m, "batch", m)
        return batch

    def ns_draw_conditioned(self, I, budget=None) -> NSSample:
        return self.ns_draws_conditioned(I, 1, budget).sample(0)

    def ns_draws_conditioned(self, I, m: int, budget=None) -> NSBatch:
        """``m`` draws from the NS distribution conditioned on ``I`` being inside S.

        Rejection sampling; ``budget`` is the number of attempts allowed per
        accepted sample (default :func:`default_rejection_budget`).  The
        returned batch records the total number of attempts.
        """
        self._require("NS")
        I = sorted(set(int(i) for i in I))
        if any(not 0 <= i < self.alphabet.n for i in I):
            raise ContractViolation(f"coordinate set {I} outside [0, {self.alphabet.n})")
        per = default_rejection_budget(self.rho, len(I)) if budget is None else int(budget)
        limit = per * m
        rate = (1.0 - self.rho) ** len(I)
        parts = []
        accepted = 0
        attempts = 0
        hits = 0
        while accepted < m:
            remaining = limit - attempts
            if remaining <= 0 or rate == 0.0:
                observed = accepted / attempts if attempts else 0.0
                raise ResourceError(
                    f"rejection budget exhausted conditioning on I={I}: "
                    f"{accepted}/{m} accepted after {attempts} attempts "
                    f"(observed acceptance {observed:.3g})",
                    accepted=accepted, attempts=attempts, acceptance_rate=observed)
            want = m - accepted
            draw = min(remaining, int(math.ceil(want / rate * 1.1)) + 16)
            x, y, S = self._ns_raw(draw)
            attempts += draw
            ok = np.all(S[:, I], axis=1) if I else np.ones(draw, dtype=bool)
            idx = np.flatnonzero(ok)[:want]
            if idx.size:
                parts.append((x[idx], y[idx], S[idx]))
                accepted += idx.size
            hits += int(np.count_nonzero(ok))
        x = np.concatenate([p[0] for p in parts])
        y = np.concatenate([p[1] for p in parts])
        S = np.concatenate([p[2] for p in parts])
        self._log("NS|I", f"I={I},m={m}", f"attempts={attempts}", attempts)
        return NSBatch(x, y, self._label(x), self._label(y), S, attempts=attempts, hits=hits)


class SQOracle:
    """Statistical-query oracle in ``honest`` or ``adversarial-zero`` mode.

    First-order queries take ``gamma(X, labels)``; second-order queries take
    ``gamma(X, Y, fx, fy)`` over NS pairs at noise ``rho``.  Query functions
    are vectorised over rows and must return values in [-1, 1].
    """

    def __init__(self, target: TargetFunction, mode="honest", seed=0, delta=0.01, rho=None,
                 tau_floor=0.0):
        if mode not in ("honest", "adversarial-zero"):
            raise ParameterError(f"unknown SQ mode {mode!r}")
        if not 0.0 < delta < 1.0:
            raise ParameterError("delta must lie in (0, 1)")
        self._target = target
        self._rng = make_rng(seed)
        self.mode = mode
        self.delta = delta
        self.rho = rho
        self.tau_floor = tau_floor
        self.query_count = 0

    def _check_values(self, v):
        v = np.asarray(v, dtype=np.float64)
        if v.size and (v.min() < -1.0 - 1e-12 or v.max() > 1.0 + 1e-12):
            raise ContractViolation("statistical query values must lie in [-1, 1]")
        return v

    def _true_value(self, gamma, order):
        alpha = self._target.alphabet
        try:
            alpha.check_exact()
        except ResourceError as exc:
            raise ResourceError("adversarial-zero mode needs an exact-mode target", **exc.details) from None
        X = alpha.all_points()
        fx = self._target._eval(X)
        if order == 1:
            return float(np.mean(self._check_values(gamma(X, fx))))
        from walklearn.fourier import noise_kernel
        K = noise_kernel(alpha, self._rho())
        N = alpha.size
        ix, iy = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
        ix, iy = ix.ravel(), iy.ravel()
        vals = self._check_values(gamma(X[ix], X[iy], fx[ix], fx[iy]))
        return float(np.sum(K.ravel() * vals) / N)

    def _rho(self):
        if self.rho is None:
            raise ContractViolation("second-order queries need an oracle constructed with rho")
        return self.rho

    def sq_query(self, gamma, tau: float, order: int = 1) -> float:
        if not 0.0 < tau <= 1.0 or tau < self.tau_floor:
            raise ParameterError(f"tolerance {tau} outside ({self.tau_floor}, 1]")
        if order not in (1, 2):
            raise ParameterError("order must be 1 or 2")
        self.query_count += 1
        if self.mode == "adversarial-zero":
            true = self._true_value(gamma, order)
            return 0.0 if abs(true) <= tau else true
        from walklearn.estimators import EstimatorConfig, hoeffding_samples
        m = hoeffding_samples(EstimatorConfig(tau, self.delta, (-1.0, 1.0)))
        alpha = self._target.alphabet
        X = self._rng.integers(0, alpha.b, size=(m, alpha.n), dtype=np.int64)
        fx = self._target._eval(X)
        if order == 1:
            return float(np.mean(self._check_values(gamma(X, fx))))
        S = self._rng.random((m, alpha.n)) < (1.0 - self._rho())
        Y = np.where(S, self._rng.integers(0, alpha.b, size=(m, alpha.n), dtype=np.int64), X)
        return float(np.mean(self._check_values(gamma(X, Y, fx, self._target._eval(Y)))))
