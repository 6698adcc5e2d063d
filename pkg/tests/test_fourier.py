import cmath
import itertools
import math

import numpy as np
import pytest

import reference as R
from walklearn.domain import Alphabet, FreqIndex, Parity, TruthTable, constant, random_instance
from walklearn.errors import ParameterError, ResourceError
from walklearn.fourier import (
    Spectrum, char_eval, inverse_transform, level_mass_bound, level_mass_exact, noise_kernel, noise_operator,
    prefix_energy_exact, t_exact, t_prime_exact, transform, transform_table)


def _random_table(alpha, seed):
    rng = np.random.default_rng(seed)
    return rng.choice([-1, 1], size=alpha.size)


def test_character_examples():
    assert char_eval(FreqIndex.zero(3), (1, 0, 1), 2) == 1
    assert char_eval(FreqIndex.unit(3, 0), (1, 0, 0), 2) == -1
    assert abs(char_eval(FreqIndex.unit(2, 0), (2, 0), 3) - cmath.exp(4j * math.pi / 3)) < 1e-15


def test_parity_and_constant_spectra():
    a0 = FreqIndex((1, 0, 1, 1, 0))
    S = transform(Parity(a0))
    assert S[a0] == pytest.approx(1)
    assert S.mass() == pytest.approx(1)
    assert S.heavy(0.5) == [a0]
    S1 = transform(constant(Alphabet(3, 3)))
    assert S1[FreqIndex.zero(3)] == pytest.approx(1)
    assert S1.mass() == pytest.approx(1)


def test_dnf_spectrum_against_naive_dft():
    f = random_instance("dnf", 7, n=10, terms=3, width=3)
    S = transform(f)
    ref = R.naive_dft_matrix(f.truth_table(), 2, 10)
    assert np.max(np.abs(S.coeffs - ref)) < 1e-9
    assert S.mass() == pytest.approx(1.0, abs=1e-12)
    # frozen from the naive transform
    assert S[FreqIndex.zero(10)].real == pytest.approx(0.3125, abs=1e-12)
    assert S[FreqIndex.from_string("0000100001")].real == pytest.approx(0.25, abs=1e-12)
    assert S[FreqIndex.from_string("0010000001")].real == pytest.approx(-0.25, abs=1e-12)


@pytest.mark.parametrize("b,n", [(3, 3), (4, 2), (5, 2)])
def test_nonbinary_against_double_loop(b, n):
    alpha = Alphabet(b, n)
    table = _random_table(alpha, b * 10 + n)
    S = transform_table(table, alpha)
    ref = R.naive_dft(table, b, n)
    for a, c in ref.items():
        assert abs(S[FreqIndex(a)] - c) < 1e-12


def test_round_trip_and_symmetry():
    alpha = Alphabet(3, 4)
    table = _random_table(alpha, 1)
    S = transform(TruthTable(alpha, table.astype(np.int8)))
    back = inverse_transform(S)
    assert np.max(np.abs(back - table)) < 1e-9
    assert np.max(np.abs(back.imag)) < 1e-12
    # f^(-a) = conj(f^(a)) for real f
    for a in itertools.islice(S.frequencies(), 30):
        neg = FreqIndex(tuple((-d) % 3 for d in a))
        assert abs(S[neg] - np.conj(S[FreqIndex(a)])) < 1e-12


def test_inverse_of_spikes():
    alpha = Alphabet(2, 4)
    a0 = FreqIndex((0, 1, 1, 0))
    table = inverse_transform(Spectrum.from_mapping(alpha, {a0: 1.0}))
    assert np.allclose(table, Parity(a0).truth_table())
    assert np.allclose(inverse_transform(Spectrum.from_mapping(alpha, {FreqIndex.zero(4): 1.0})), 1)


@pytest.mark.parametrize("b,n", [(2, 5), (3, 3)])
@pytest.mark.parametrize("rho", [0.0, 0.3, 0.5, 0.7, 1.0])
def test_noise_operator_matches_defining_average(b, n, rho):
    alpha = Alphabet(b, n)
    table = _random_table(alpha, 7)
    T = inverse_transform(noise_operator(transform_table(table, alpha), rho)).real
    pts = R.points(b, n)
    for i in range(0, len(pts), max(1, len(pts) // 12)):
        assert abs(T[i] - R.noisy_average(table, b, n, rho, pts[i])) < 1e-9


def test_noise_operator_edge_cases():
    S = transform(random_instance("ubox", 2, b=3, n=3, rectangles=2))
    assert np.array_equal(noise_operator(S, 1.0).coeffs, S.coeffs)
    zero = noise_operator(S, 0.0)
    assert zero.coeffs[0] == S.coeffs[0] and np.all(zero.coeffs[1:] == 0)
    with pytest.raises(ParameterError):
        noise_operator(S, 1.5)


def test_noise_semigroup():
    S = transform(random_instance("dnf", 2, n=8, terms=3, width=2))
    for r1, r2 in [(0.3, 0.7), (0.5, 0.5), (0.0, 0.9)]:
        lhs = noise_operator(noise_operator(S, r1), r2).coeffs
        rhs = noise_operator(S, r1 * r2).coeffs
        assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_noise_kernel_rows_are_distributions():
    K = noise_kernel(Alphabet(3, 3), 0.4)
    assert np.allclose(K.sum(axis=1), 1)
    with pytest.raises(ResourceError):
        noise_kernel(Alphabet(2, 13), 0.5)


def test_prefix_energy():
    a0 = FreqIndex((1, 1, 0, 1))
    S = transform(Parity(a0))
    assert prefix_energy_exact(S, (1, 1)) == pytest.approx(1)
    assert prefix_energy_exact(S, (0, 1)) == pytest.approx(0)
    assert prefix_energy_exact(S, a0.digits) == pytest.approx(1)
    f = random_instance("dnf", 4, n=7, terms=3, width=2)
    S = transform(f)
    prefix = (1, 0, 1)
    direct = sum(abs(S[FreqIndex(prefix + tail)]) ** 2 for tail in itertools.product((0, 1), repeat=4))
    assert prefix_energy_exact(S, prefix) == pytest.approx(direct, abs=1e-12)
    # a prefix on chosen coordinates
    coords = [6, 2]
    direct = sum(abs(c) ** 2 for a, c in S.items() if a.digits[6] == 1 and a.digits[2] == 0)
    assert prefix_energy_exact(S, (1, 0), coords) == pytest.approx(direct, abs=1e-12)


def test_t_sums_on_spikes():
    a0 = FreqIndex((1, 0, 1, 1, 0))
    S = transform(Parity(a0))
    I = a0.support
    assert t_exact(S, 0.5, I) == pytest.approx(0.125)
    assert t_prime_exact(S, 0.5, I) == pytest.approx(0)
    assert t_exact(S, 0.5, ()) == pytest.approx(t_prime_exact(S, 0.5, ()))


def test_t_sums_against_bruteforce_and_pairs():
    f = random_instance("ubox", 9, b=3, n=4, rectangles=2)
    S = transform(f)
    spec = {tuple(int(d) for d in a): S[FreqIndex(a)] for a in S.frequencies()}
    for I in [(), (0,), (1, 3), (0, 2, 3)]:
        t, tp = R.t_sets_bruteforce(spec, 0.6, I, 3, 4)
        assert t_exact(S, 0.6, I) == pytest.approx(t, abs=1e-12)
        assert t_prime_exact(S, 0.6, I) == pytest.approx(tp, abs=1e-12)
    # T'(I) is the conditioned pair correlation
    table = f.truth_table().astype(float)
    for I in [(), (2,), (0, 1)]:
        assert t_prime_exact(S, 0.6, I) == pytest.approx(R.noisy_pair_expectation(table, 3, 4, 0.6, I), abs=1e-12)


def test_inclusion_exclusion_and_level_mass():
    f = random_instance("ubox", 9, b=3, n=6, rectangles=2)
    S = transform(f)
    for I in [(0,), (1, 4), (0, 2, 5), (1, 2, 3, 5)]:
        signed = sum((-1) ** len(J) * t_prime_exact(S, 0.5, J)
                     for r in range(len(I) + 1) for J in itertools.combinations(I, r))
        assert abs(t_exact(S, 0.5, I) - signed) < 1e-9
    for j in range(7):
        assert level_mass_exact(S, 0.5, j) <= level_mass_bound(0.5, j) + 1e-12


def test_spectrum_csv_round_trip(tmp_path):
    alpha = Alphabet(3, 3)
    S = transform_table(_random_table(alpha, 3), alpha)
    S.to_csv(tmp_path / "s.csv")
    T = Spectrum.read_csv(tmp_path / "s.csv", alpha)
    assert np.array_equal(S.coeffs, T.coeffs)
