"""Smooth boosting by filtering.

The booster keeps a score ``H = sum_t alpha_t h_t`` and weights every example
by ``min(1, exp(-f(x) H(x)))``.  The weight is computed pointwise from the
example's label and the current margin, so reweighting is applied lazily to
fresh oracle draws and never needs a membership query.  Weights never exceed
1, i.e. the reweighted distribution has density at most ``1 / E[w]`` with
respect to uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from walklearn.errors import ParameterError
from walklearn.estimators import uniform_examples
from walklearn.learners.hypothesis import Hypothesis


@dataclass(frozen=True)
class BoostConfig:
    epsilon: float
    delta: float
    max_rounds: int = 60
    gamma_floor: float = 0.01
    eval_samples: int = None  # per round; default sized so the error estimate is within epsilon / 4

    def __post_init__(self):
        if not 0 < self.epsilon < 1 or not 0 < self.delta < 1:
            raise ParameterError("epsilon and delta must lie in (0, 1)")
        if self.max_rounds < 1:
            raise ParameterError("max_rounds must be at least 1")

    @property
    def error_margin(self) -> float:
        return self.epsilon / 4.0

    def samples_per_round(self) -> int:
        if self.eval_samples is not None:
            return int(self.eval_samples)
        # indicator range [0, 1], failure probability spread over all rounds
        return math.ceil(math.log(2.0 * self.max_rounds / self.delta) / (2.0 * self.error_margin ** 2))


class MarginWeight:
    """``w(x) = min(1, exp(-label * H(x)))`` for the current boosted score."""

    def __init__(self, score: Hypothesis = None):
        self.score = score

    def __call__(self, X, labels) -> np.ndarray:
        if self.score is None or not self.score.terms:
            return np.ones(len(labels))
        margin = np.asarray(labels, dtype=np.float64) * self.score.values(X)
        return np.minimum(1.0, np.exp(-margin))


@dataclass
class BoostResult:
    hypothesis: Hypothesis
    success: bool
    rounds: int
    estimated_error: float
    history: list = field(default_factory=list)
    message: str = ""


def boost(weak_finder, cfg: BoostConfig, session) -> BoostResult:
    """Boost ``weak_finder`` until the estimated uniform error is at most ``epsilon - epsilon/4``.

    ``weak_finder(weight)`` receives a :class:`MarginWeight` and returns a
    :class:`Hypothesis` (or ``None`` on failure).  Each round estimates the
    weak hypothesis' edge under the reweighted distribution and the
    combined hypothesis' error on fresh uniform examples from ``session``.
    The best hypothesis by estimated error is always returned.
    """
    score = None
    best, best_err = None, math.inf
    history = []
    m = cfg.samples_per_round()
    for t in range(1, cfg.max_rounds + 1):
        weight = MarginWeight(score)
        h = weak_finder(weight)
        if h is None:
            return _fail(best, best_err, t - 1, history, "weak learner found no hypothesis")
        X, y = uniform_examples(session, 2 * m)
        Xa, ya, Xb, yb = X[:m], y[:m], X[m:], y[m:]
        w = weight(Xa, ya)
        mu = float(np.mean(w))
        edge = float(np.mean(w * ya * h.evaluate_many(Xa))) / mu if mu > 0 else 0.0
        if edge <= cfg.gamma_floor:
            history.append({"round": t, "edge": edge, "mean_weight": mu, "error": best_err})
            return _fail(best, best_err, t - 1, history,
                         f"weak hypothesis edge {edge:.4f} below floor {cfg.gamma_floor}")
        edge = min(edge, 1.0 - 1e-9)
        alpha = 0.5 * math.log((1.0 + edge) / (1.0 - edge))
        h_scaled = h.scaled(alpha)
        score = h_scaled if score is None else score + h_scaled
        err = float(np.mean(score.evaluate_many(Xb) != yb))
        if err < best_err:
            best, best_err = score, err
        history.append({"round": t, "edge": edge, "alpha": alpha, "mean_weight": mu,
                        "error": err, "best_error": best_err})
        if best_err <= cfg.epsilon - cfg.error_margin:
            return BoostResult(best, True, t, best_err, history, "target error reached")
    return _fail(best, best_err, cfg.max_rounds, history, "round limit reached")


def _fail(best, best_err, rounds, history, message):
    return BoostResult(best, False, rounds, best_err, history, message)
