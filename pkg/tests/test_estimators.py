import math

import numpy as np
import pytest

import reference as R
from walklearn.domain import Alphabet, FreqIndex, Parity, constant, random_instance
from walklearn.errors import ContractViolation, ParameterError
from walklearn.estimators import (
    EstimateRecord, EstimatorConfig, RunLog, collision_decay_experiment, collision_probability,
    crw_prefix_coords, estimate_coefficient, estimate_prefix_energy_crw, estimate_t_ns, estimate_t_prime_ns,
    hoeffding_samples, pooled_t_estimates, sq_decomposition_check, uniform_examples)
from walklearn.fourier import prefix_energy_exact, t_exact, transform
from walklearn.oracles import OracleSession


def test_hoeffding_sample_size():
    assert hoeffding_samples(EstimatorConfig(0.1, 0.01)) == R.hoeffding(0.1, 0.01) == 1060
    m1 = hoeffding_samples(EstimatorConfig(0.05, 0.01))
    m2 = hoeffding_samples(EstimatorConfig(0.1, 0.01))
    assert m2 == math.ceil(m1 / 4) or m2 == math.ceil(m1 / 4) + 1
    sizes = [hoeffding_samples(EstimatorConfig(0.1, d)) for d in (0.01, 0.1, 0.5, 0.99)]
    assert sizes == sorted(sizes, reverse=True) and sizes[-1] < 300
    assert hoeffding_samples(EstimatorConfig(0.1, 0.01, (0.0, 1.0))) == R.hoeffding(0.1, 0.01, 1.0)


def test_config_validation():
    for args in [(0.0, 0.1), (0.1, 0.0), (0.1, 1.0), (0.1, 0.1, (1.0, 1.0))]:
        with pytest.raises(ParameterError):
            EstimatorConfig(*args)


def test_coefficient_on_parity():
    a = FreqIndex((1, 0, 1, 1, 0, 0))
    cfg = EstimatorConfig(0.05, 0.01)
    s = OracleSession(Parity(a), "UQ", seed=1)
    assert abs(estimate_coefficient(s, a, cfg) - 1) <= 0.05
    assert abs(estimate_coefficient(s, FreqIndex((1, 1, 0, 0, 0, 0)), cfg)) <= 0.05


def test_coefficient_calibration_dnf():
    f = random_instance("dnf", 5, n=10, terms=3, width=3)
    S = transform(f)
    a = S.heavy(0.2)[1]
    cfg = EstimatorConfig(0.05, 0.02)
    s = OracleSession(f, "UQ", seed=2)
    hits = sum(abs(estimate_coefficient(s, a, cfg) - S[a]) <= 0.05 for _ in range(100))
    assert hits >= 98


@pytest.mark.parametrize("mode", ["NS", "CRW", "RW"])
def test_coefficient_from_passive_sessions(mode):
    f = random_instance("ubox", 4, b=3, n=4, rectangles=2)
    S = transform(f)
    a = max(S.frequencies()[1:], key=lambda d: abs(S[FreqIndex(d)]))
    a = FreqIndex(a)
    s = OracleSession(f, mode, seed=3, rho=0.5 if mode == "NS" else None)
    est = estimate_coefficient(s, a, EstimatorConfig(0.05, 0.01))
    assert abs(est.real - S[a].real) <= 0.05 and abs(est.imag - S[a].imag) <= 0.05


def test_uniform_examples_requires_passive_mode():
    with pytest.raises(ContractViolation):
        uniform_examples(OracleSession(constant(Alphabet(2, 3)), "MQ"), 10)


def test_prefix_energy_on_parity():
    a0 = FreqIndex((1, 0, 1, 1, 0, 1))
    s = OracleSession(Parity(a0), "CRW", seed=0)
    coords = crw_prefix_coords(s, 3)
    prefix = tuple(a0.digits[c] for c in coords)
    cfg = EstimatorConfig(0.05, 0.05)
    assert abs(estimate_prefix_energy_crw(s, prefix, cfg) - 1) <= 0.05
    other = tuple(1 - d for d in prefix)
    assert abs(estimate_prefix_energy_crw(s, other, cfg)) <= 0.05
    with pytest.raises(ContractViolation):
        estimate_prefix_energy_crw(s, prefix, cfg, coords=[0, 1, 2])


def test_prefix_energy_step_accounting():
    f = random_instance("top", 3, n=8, M=3)
    s = OracleSession(f, "CRW", seed=4)
    cfg = EstimatorConfig(0.1, 0.1)
    s.crw_steps(3)  # leave the walk mid-cycle
    before = s.query_count
    estimate_prefix_energy_crw(s, (1, 0), cfg)
    warmup = 8 - 2  # steps to the next cycle boundary
    assert s.query_count - before - warmup == 2 * 8 * cfg.samples


def test_prefix_energy_calibration_top():
    f = random_instance("top", 1, n=12, M=3)
    S = transform(f)
    cfg = EstimatorConfig(0.05, 0.05)
    s = OracleSession(f, "CRW", seed=5, cycle=tuple(np.random.default_rng(0).permutation(12)))
    coords = crw_prefix_coords(s, 6)
    # the prefix of the heaviest coefficient, read on the renamed coordinates
    heavy = S.heavy(0.3)[0]
    prefix = tuple(heavy.digits[c] for c in coords)
    exact = prefix_energy_exact(S, prefix, coords)
    hits = sum(abs(estimate_prefix_energy_crw(s, prefix, cfg) - exact) <= 0.05 for _ in range(100))
    assert hits >= 95


def test_t_prime_examples():
    f = random_instance("ubox", 2, b=3, n=5, rectangles=2)
    cfg = EstimatorConfig(0.05, 0.01)
    assert abs(estimate_t_prime_ns(OracleSession(f, "NS", seed=1, rho=1.0), (), cfg) - 1) <= 0.05
    a0 = FreqIndex((1, 1, 0, 1, 0))
    s = OracleSession(Parity(a0), "NS", seed=2, rho=0.5)
    assert abs(estimate_t_prime_ns(s, (1,), cfg)) <= 0.05


def test_t_estimates():
    a0 = FreqIndex((1, 1, 0, 1, 0))
    cfg = EstimatorConfig(0.05, 0.05)
    s = OracleSession(Parity(a0), "NS", seed=3, rho=0.5)
    assert abs(estimate_t_ns(s, a0.support, cfg) - 0.125) <= 0.05
    a = OracleSession(Parity(a0), "NS", seed=7, rho=0.5)
    b = OracleSession(Parity(a0), "NS", seed=7, rho=0.5)
    assert estimate_t_ns(a, (), cfg) == estimate_t_prime_ns(b, (), cfg)


def test_t_calibration_ubox():
    cfg = EstimatorConfig(0.05, 0.05)
    good = 0
    for r in range(20):
        f = random_instance("ubox", 100 + r, b=3, n=6, rectangles=2)
        exact = t_exact(transform(f), 0.5, (0, 3))
        good += abs(estimate_t_ns(OracleSession(f, "NS", seed=r, rho=0.5), (0, 3), cfg) - exact) <= 0.05
    assert good >= 19


def test_pooled_estimates_track_exact():
    f = random_instance("ubox", 9, b=3, n=6, rectangles=2)
    S = transform(f)
    batch = OracleSession(f, "NS", seed=1, rho=0.5).ns_draws(200_000)
    sets = [(), (0,), (1,), (0, 1), (2, 4, 5)]
    est = pooled_t_estimates(batch, 0.5, sets)
    for I in sets:
        # each factor is +-1 at rho = 1/2, so Hoeffding with range [-1, 1] applies
        assert abs(est[I] - t_exact(S, 0.5, I)) <= 0.01


def test_collision_probability_formula():
    for rho in (0.0, 0.3, 0.5, 1.0):
        for n in (1, 4, 10):
            assert collision_probability(rho, n) == pytest.approx(R.collision_bruteforce(n, rho), rel=1e-12)
    assert collision_probability(0.5, 10) == pytest.approx(0.009094947017729282, rel=1e-12)
    assert collision_probability(0.0, 6) == pytest.approx(2 ** -6)


def test_collision_experiment():
    r = collision_decay_experiment(1.0, 8, 1000, seed=1)
    assert r.empirical == 1.0 and r.analytic == 1.0
    r = collision_decay_experiment(0.5, 10, 1_000_000, seed=2)
    assert abs(r.z_score) < 4


def test_decomposition_check():
    f = random_instance("dnf", 1, n=4, terms=2, width=2)
    assert sq_decomposition_check(lambda X, Y, i, j: np.ones(len(X)), f, 0.4) <= 1e-12
    assert sq_decomposition_check(lambda X, Y, i, j: i * j, f, 0.4) <= 1e-12
    rng = np.random.default_rng(0)
    table = rng.uniform(-1, 1, size=(16, 16, 2, 2))
    w = 2 ** np.arange(4)

    def gamma(X, Y, i, j):
        return table[X @ w, Y @ w, (1 - i) // 2, (1 - j) // 2]

    assert sq_decomposition_check(gamma, f, 0.7) <= 1e-12


def test_run_log_round_trip(tmp_path):
    path = tmp_path / "log.jsonl"
    log = RunLog(path)
    f = random_instance("ubox", 3, b=3, n=4, rectangles=1)
    s = OracleSession(f, "UQ", seed=0)
    estimate_coefficient(s, FreqIndex((1, 0, 0, 0)), EstimatorConfig(0.1, 0.1), log=log)
    log.append(EstimateRecord("note", {"k": 1}, 0.5, 0.1, 10))
    back = RunLog.read(path)
    assert len(back) == 2
    assert back[0].quantity == "coefficient" and isinstance(back[0].estimate, complex)
    assert back[0].estimate == log.records[0].estimate
    assert back[1] == log.records[1]
