"""End-to-end learners: heavy-coefficient search feeding the booster."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from walklearn.errors import ContractViolation, ParameterError, ResourceError
from walklearn.learners.boosting import BoostConfig, boost
from walklearn.learners.hypothesis import Hypothesis, weak_hypothesis
from walklearn.learners.search import CRWSample, SieveConfig, bounded_sieve_ns, km_search_from_sample
from walklearn.oracles import OracleSession


@dataclass
class LearnResult:
    hypothesis: Hypothesis
    success: bool
    stage: str  # "done", or the stage that failed
    rounds: int
    estimated_error: float
    queries: int
    message: str = ""
    history: list = field(default_factory=list)
    searches: list = field(default_factory=list)  # per-round search statistics


def default_theta(size: int, epsilon: float) -> float:
    """Conservative absolute threshold ``epsilon / (4 * size)``."""
    return epsilon / (4.0 * size)


def default_degree(size: int, epsilon: float) -> int:
    return math.ceil(math.log2(size / epsilon)) + 2


def class_params(target) -> dict:
    """The class parameters a learner is allowed to know about ``target``."""
    kind = target.kind
    out = {"class": kind, "size": target.description_size()}
    if kind == "top":
        out["weight_sum"] = target.weight_sum
    elif kind == "dnf":
        out["terms"] = len(target.terms)
    elif kind == "ubox":
        out["rectangles"] = len(target.rectangles)
    return out


def relative_theta(params: dict) -> float:
    """Fraction of the reweighted mass a heavy coefficient is guaranteed to carry.

    A union of s terms (or rectangles) has a character correlating at least
    ``1 / (2s + 1)`` with it under any distribution; a TOP of total weight W
    has one correlating at least ``1 / W``.
    """
    kind = params.get("class")
    if kind == "top":
        return 1.0 / params["weight_sum"]
    if kind == "dnf":
        return 1.0 / (2 * params["terms"] + 1)
    if kind == "ubox":
        return 1.0 / (2 * params["rectangles"] + 1)
    if kind == "parity":
        return 0.5
    raise ContractViolation(f"no threshold rule for target class {kind!r}; pass theta explicitly")


def _search_stats(res, theta):
    return {"theta": theta, "samples": res.samples, "steps": res.steps, "warmup_steps": res.warmup_steps,
            "frontier": list(res.frontier), "truncated": res.truncated, "candidates": len(res.candidates),
            "mean_weight": res.mean_weight}


def _run(session, weak, cfg, searches):
    start = session.query_count
    try:
        out = boost(weak, cfg, session)
    except ResourceError as exc:
        return LearnResult(None, False, "search", len(searches), math.inf, session.query_count - start,
                           str(exc), [], searches)
    stage = "done" if out.success else ("search" if out.message.startswith("weak learner") else "boost")
    return LearnResult(out.hypothesis, out.success, stage, out.rounds, out.estimated_error,
                       session.query_count - start, out.message, out.history, searches)


def learn_top_crw(session: OracleSession, params: dict, epsilon: float, delta: float, theta_rel: float = None,
                  samples: int = 20_000, max_rounds: int = 60, eval_samples: int = None,
                  theta: float = None) -> LearnResult:
    """Learn a TOP or DNF from a cyclic random walk.

    ``params`` holds the class parameters (see :func:`class_params`).
    Each boosting round draws ``samples`` fresh 2n-step trajectories, weights
    their labels by the current margin, runs the prefix-tree search with
    threshold ``theta_rel * E[w]`` (or a fixed ``theta``) and turns the
    heaviest candidate into a weak hypothesis.
    """
    session._require("CRW")
    if theta_rel is None and theta is None:
        theta_rel = relative_theta(params)
    cfg = BoostConfig(epsilon, delta, max_rounds=max_rounds, eval_samples=eval_samples)
    searches = []

    def weak(weight):
        sample = CRWSample(session, samples, weight)
        th = theta if theta is not None else theta_rel * sample.mean_weight
        res = km_search_from_sample(sample, th)
        searches.append(_search_stats(res, th))
        best = res.best()
        if best is None or best[1] == 0:
            return None
        return weak_hypothesis(best[0], best[1], session.alphabet)

    return _run(session, weak, cfg, searches)


def learn_ubox_ns(session: OracleSession, params: dict, epsilon: float, delta: float, theta_rel: float = None,
                  degree: int = None, samples: int = 50_000, max_rounds: int = 60,
                  eval_samples: int = None, theta: float = None, frontier_cap: int = None) -> LearnResult:
    """Learn a UBOX (or DNF) from noise-sensitivity pairs.

    ``params`` holds the class parameters (see :func:`class_params`).
    Each round runs the bounded sieve on ``samples`` fresh pairs weighted by
    the current margin and turns the heaviest coefficient into a weak
    hypothesis.  ``degree`` defaults to ``ceil(log2(size / epsilon)) + 2``
    capped at n.
    """
    session._require("NS")
    rho = session.rho
    if not 0.0 < rho < 1.0:
        raise ParameterError("the sieve needs 0 < rho < 1")
    if degree is None:
        degree = min(session.alphabet.n, default_degree(params["size"], epsilon))
    if theta_rel is None and theta is None:
        theta_rel = relative_theta(params)
    cfg = BoostConfig(epsilon, delta, max_rounds=max_rounds, eval_samples=eval_samples)
    searches = []

    def weak(weight):
        batch = session.ns_draws(samples)
        if theta is not None:
            th = theta
        else:
            mu = 1.0 if weight is None else float(weight(batch.x, batch.fx).mean())
            th = theta_rel * mu
        res = bounded_sieve_ns(session, SieveConfig(rho, th, degree, samples, frontier_cap), weight, batch)
        searches.append(_search_stats(res, th))
        best = res.best()
        if best is None or best[1] == 0:
            return None
        return weak_hypothesis(best[0], best[1], session.alphabet)

    return _run(session, weak, cfg, searches)
