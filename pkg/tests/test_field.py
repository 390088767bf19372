import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from mpdp.errors import ConfigError, DomainError, InsufficientShares, IntegrityError
from mpdp.field import (
    DEFAULT_PRIME,
    PrimeField,
    Share,
    field_arith,
    shamir_reconstruct,
    shamir_share,
    share_linear,
)

F61 = PrimeField(DEFAULT_PRIME)
F101 = PrimeField(101)


def egcd_inverse(a, p):
    # independent oracle: extended Euclid, no pow(..., -1, p)
    old_r, r = a % p, p
    old_s, s = 1, 0
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
    assert old_r == 1
    return old_s % p


class TestFieldArith:
    def test_add_mod_7(self):
        f = PrimeField(7)
        assert field_arith(f, "add", 3, 5) == 1

    def test_inverse_law(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            a = int(rng.integers(1, DEFAULT_PRIME))
            assert F61.mul(a, F61.inv(a)) == 1

    def test_inverse_of_two_against_euclid_oracle(self):
        # 2^-1 mod (2^61 - 1) = 2^60, cross-checked by extended Euclid
        assert F61.inv(2) == egcd_inverse(2, DEFAULT_PRIME) == 2**60

    def test_inverse_of_zero_rejected(self):
        with pytest.raises(DomainError):
            F61.inv(0)

    def test_unknown_op_rejected(self):
        with pytest.raises(ConfigError):
            field_arith(F61, "xor", 1, 2)

    @given(st.integers(0, 100), st.integers(0, 100))
    def test_matches_python_mod(self, a, b):
        assert F101.add(a, b) == (a + b) % 101
        assert F101.sub(a, b) == (a - b) % 101
        assert F101.mul(a, b) == (a * b) % 101
        assert F101.neg(a) == (-a) % 101


class TestShamir:
    def test_roundtrip_sweep(self):
        rng = np.random.default_rng(7)
        for s in rng.integers(0, DEFAULT_PRIME, size=100):
            shares = shamir_share(F61, int(s), t=2, n=5, rng=rng)
            assert shamir_reconstruct(F61, shares) == int(s)

    def test_constant_polynomial_when_coefficients_zero(self):
        class ZeroRng:
            def integers(self, low, high):
                return 0

        shares = shamir_share(F101, 42, t=1, n=3, rng=ZeroRng())
        assert [s.value for s in shares] == [42, 42, 42]

    def test_reconstruct_zero(self):
        rng = np.random.default_rng(3)
        shares = shamir_share(F101, 0, t=2, n=5, rng=rng)
        assert shamir_reconstruct(F101, shares) == 0

    def test_any_subset_reconstructs(self):
        rng = np.random.default_rng(11)
        shares = shamir_share(F101, 77, t=2, n=6, rng=rng)
        for subset in itertools.combinations(shares, 3):
            assert shamir_reconstruct(F101, list(subset)) == 77

    def test_known_polynomial_oracle(self):
        # q(x) = 7 + 3x + 5x^2 over F_101, evaluated by hand at x = 1, 2, 3
        shares = [Share(1, 15, 2), Share(2, 33, 2), Share(3, 61, 2)]
        assert (7 + 3 * 1 + 5 * 1) % 101 == 15
        assert (7 + 3 * 2 + 5 * 4) % 101 == 33
        assert (7 + 3 * 3 + 5 * 9) % 101 == 61
        assert shamir_reconstruct(F101, shares) == 7

    def test_insufficient_shares(self):
        rng = np.random.default_rng(5)
        shares = shamir_share(F101, 9, t=2, n=5, rng=rng)
        with pytest.raises(InsufficientShares):
            shamir_reconstruct(F101, shares[:2])

    def test_inconsistent_redundant_share_detected(self):
        rng = np.random.default_rng(5)
        shares = shamir_share(F101, 9, t=1, n=4, rng=rng)
        bad = shares[:3] + [Share(4, (shares[3].value + 1) % 101, 1)]
        with pytest.raises(IntegrityError):
            shamir_reconstruct(F101, bad)

    def test_parameter_validation(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ConfigError):
            shamir_share(F101, 1, t=0, n=3, rng=rng)
        with pytest.raises(ConfigError):
            shamir_share(F101, 1, t=3, n=3, rng=rng)
        with pytest.raises(ConfigError):
            shamir_share(PrimeField(5), 1, t=2, n=5, rng=rng)

    def test_single_share_uniform_chi_square(self):
        # empirical distribution of party 1's share over many sharings of a
        # fixed secret; expected uniform over F_101
        rng = np.random.default_rng(13)
        counts = np.zeros(101, dtype=int)
        for _ in range(10_000):
            counts[shamir_share(F101, 55, t=1, n=3, rng=rng)[0].value] += 1
        expected = np.full(101, 10_000 / 101)
        stat = ((counts - expected) ** 2 / expected).sum()
        assert stat < stats.chi2.ppf(0.99, df=100)


class TestShareLinear:
    def _share(self, s, rng):
        return shamir_share(F101, s, t=1, n=3, rng=rng)

    def test_identity(self):
        rng = np.random.default_rng(2)
        sv = self._share(12, rng)
        assert shamir_reconstruct(F101, share_linear(F101, 0, [(1, sv)])) == 12

    def test_additivity(self):
        rng = np.random.default_rng(2)
        x, y = self._share(12, rng), self._share(30, rng)
        out = share_linear(F101, 0, [(1, x), (1, y)])
        assert shamir_reconstruct(F101, out) == 42

    def test_affine_plaintext_oracle(self):
        rng = np.random.default_rng(2)
        x, y = self._share(3, rng), self._share(4, rng)
        out = share_linear(F101, 5, [(2, x), (-1, y)])
        assert shamir_reconstruct(F101, out) == (5 + 2 * 3 - 4) % 101

    def test_degree_stability(self):
        rng = np.random.default_rng(2)
        x = self._share(3, rng)
        out = share_linear(F101, 1, [(7, x)])
        assert all(s.degree == 1 for s in out)

    def test_mismatched_parameters_rejected(self):
        rng = np.random.default_rng(2)
        x = shamir_share(F101, 3, t=1, n=3, rng=rng)
        y = shamir_share(F101, 4, t=2, n=3, rng=rng)
        with pytest.raises(ConfigError):
            share_linear(F101, 0, [(1, x), (1, y)])

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100),
           st.integers(0, 100), st.integers(0, 2**32))
    def test_linearity_property(self, a, b, c0, c1, seed):
        rng = np.random.default_rng(seed)
        x, y = self._share(a, rng), self._share(b, rng)
        out = share_linear(F101, c0, [(c1, x), (1, y)])
        assert shamir_reconstruct(F101, out) == (c0 + c1 * a + b) % 101


class TestHiding:
    """Exhaustive information-theoretic hiding at small field sizes.

    For every secret, enumerate all sharing polynomials and count the joint
    distribution of the first t shares; all secrets must induce the exact
    same distribution.
    """

    def test_hiding_t1_p101(self):
        p = 101
        f = PrimeField(p)
        dists = []
        for secret in (0, 1, 50, 100):
            counts = {}
            for a1 in range(p):
                share1 = (secret + a1 * 1) % p
                counts[share1] = counts.get(share1, 0) + 1
            dists.append(counts)
        assert all(d == dists[0] for d in dists)

    def test_hiding_t2_p101(self):
        p = 101
        dists = []
        for secret in (0, 1, 73):
            counts = {}
            for a1 in range(p):
                for a2 in range(p):
                    s1 = (secret + a1 + a2) % p
                    s2 = (secret + 2 * a1 + 4 * a2) % p
                    counts[(s1, s2)] = counts.get((s1, s2), 0) + 1
            dists.append(counts)
        assert all(d == dists[0] for d in dists)
