"""Parity learning from single-flip witnesses at low attribute noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from walklearn.domain import FreqIndex
from walklearn.errors import ContractViolation, LearningFailure
from walklearn.oracles import OracleSession


def single_flip_probability(n: int, rho: float) -> float:
    """Chance that an NS pair differs in exactly one position (b = 2)."""
    q = (1.0 - rho) / 2.0
    return n * q * (1.0 - q) ** (n - 1)


@dataclass
class ParityResult:
    vector: FreqIndex
    samples: int
    witnesses: int


def low_noise_parity_learner(session: OracleSession, budget: int, batch: int = 8192) -> ParityResult:
    """Recover a parity's support from NS pairs whose points differ in one bit.

    When x and y differ only at coordinate i, ``f(x) != f(y)`` exactly when i
    belongs to the parity.  Stops once every coordinate has been witnessed;
    raises :class:`LearningFailure` (listing the unwitnessed coordinates) if
    ``budget`` draws are used up first.
    """
    session._require("NS")
    if session.alphabet.b != 2:
        raise ContractViolation("the single-flip learner works over [2]^n")
    n = session.alphabet.n
    seen = np.zeros(n, dtype=bool)
    inside = np.zeros(n, dtype=bool)
    used = 0
    witnesses = 0
    while used < budget:
        c = min(batch, budget - used)
        B = session.ns_draws(c)
        used += c
        diff = B.x != B.y
        one = np.count_nonzero(diff, axis=1) == 1
        if np.any(one):
            pos = np.argmax(diff[one], axis=1)
            flipped = B.fx[one] != B.fy[one]
            witnesses += int(one.sum())
            seen[pos] = True
            inside[pos[flipped]] = True
        if seen.all():
            return ParityResult(FreqIndex(tuple(int(v) for v in inside)), used, witnesses)
    missing = np.flatnonzero(~seen).tolist()
    raise LearningFailure(f"sample budget {budget} exhausted; coordinates never witnessed: {missing}",
                          stage="parity", unwitnessed=missing, samples=used)
