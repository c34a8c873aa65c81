import itertools
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from recombchain.errors import InvalidInputError, ResourceLimitError
from recombchain.instances import random_measure, random_symmetric_rho, three_site_example
from recombchain.measures import (Alphabet, check_closure_marginals, check_marginal_preservation,
                                  dense_measure, marginal, product, product_over_partition,
                                  product_spec, unit, xi_apply, xi_iterate)
from recombchain.rho import coefficient_table, symmetrize, validate
from recombchain.subsets import SiteSet

from conftest import distributions

A2 = Alphabet([2, 2])
CORRELATED = dense_measure(A2, ["1/2", 0, 0, "1/2"])
UNIFORM2 = dense_measure(A2, ["1/4"] * 4)


def configurations(sizes):
    return list(itertools.product(*(range(s) for s in sizes)))


def xi_oracle(rho, mu):
    """Xi evaluated point by point with dictionary marginals."""
    sizes = mu.alphabet.sizes
    n = len(sizes)
    configs = configurations(sizes)
    prob = dict(zip(configs, mu.flat()))

    def marg(mask, x):
        keep = [i for i in range(n) if mask >> i & 1]
        return sum((p for y, p in prob.items() if all(y[i] == x[i] for i in keep)), F(0))

    full = (1 << n) - 1
    return [sum((w * marg(j, x) * marg(full ^ j, x) for j, w in rho.weights.items()), F(0)) for x in configs]


def test_marginal_examples():
    assert marginal(UNIFORM2, 1).flat() == [F(1, 2), F(1, 2)]
    assert marginal(CORRELATED, 1).flat() == [F(1, 2), F(1, 2)]
    assert marginal(CORRELATED, 3) is CORRELATED
    assert marginal(CORRELATED, 0).flat() == [1]
    with pytest.raises(InvalidInputError):
        marginal(marginal(CORRELATED, 1), 2)


def test_product_examples():
    half = dense_measure(A2, ["1/2", "1/2"], support=1)
    other = dense_measure(A2, ["1/2", "1/2"], support=2)
    assert product(half, other) == UNIFORM2
    assert product(CORRELATED, unit(A2)) == CORRELATED
    with pytest.raises(InvalidInputError):
        product(half, half)


def test_xi_examples():
    s2 = SiteSet(2)
    assert xi_apply(validate({s2.full: 1}, s2), CORRELATED) == CORRELATED
    split = validate({1: F(1, 2), 2: F(1, 2)}, s2)
    assert xi_apply(split, CORRELATED) == UNIFORM2
    bernoulli = product_spec(A2, [["1/3", "2/3"], ["1/5", "4/5"]])
    assert xi_apply(split, bernoulli) == bernoulli
    assert xi_iterate(split, CORRELATED, 0) == CORRELATED
    assert xi_iterate(split, CORRELATED, 1) == xi_apply(split, CORRELATED)


def test_product_over_partition_examples():
    assert product_over_partition(CORRELATED, (3,)) == CORRELATED
    assert product_over_partition(CORRELATED, (1, 2)) == UNIFORM2


def test_iteration_approaches_product_over_atoms():
    rho = three_site_example()
    mu = random_measure(random.Random(3), Alphabet([2, 2, 2]))
    limit = product_over_partition(mu, coefficient_table(rho).atom_partition)
    gap = max(abs(a - b) for a, b in zip(xi_iterate(rho, mu, 30).flat(), limit.flat()))
    assert gap < F(1, 10**6)


def test_guards_and_bad_input():
    with pytest.raises(ResourceLimitError):
        Alphabet([2] * 21)
    with pytest.raises(InvalidInputError):
        Alphabet([2, 1])
    with pytest.raises(InvalidInputError) as err:
        dense_measure(A2, ["1/2", "1/2"])
    assert err.value.code == "bad-measure-size"
    with pytest.raises(InvalidInputError) as err:
        dense_measure(A2, ["1/2", "1/2", "1/2", "-1/2"])
    assert err.value.code == "negative-probability"


@st.composite
def rho_and_measure(draw):
    rng = random.Random(draw(st.integers(0, 2**32)))
    n = rng.choice([2, 3])
    return random_symmetric_rho(rng, n), random_measure(rng, Alphabet([rng.choice([2, 3]) for _ in range(n)]))


measures_and_rhos = rho_and_measure()


@given(measures_and_rhos)
def test_xi_matches_pointwise_oracle(case):
    rho, mu = case
    image = xi_apply(rho, mu)
    assert image.flat() == xi_oracle(rho, mu)
    assert image.total() == 1 and all(p >= 0 for p in image.flat())


@given(measures_and_rhos)
def test_marginal_tower_and_restriction(case):
    _, mu = case
    full = mu.alphabet.full
    for j in range(full + 1):
        for k in range(j + 1):
            if k & ~j == 0:
                assert marginal(marginal(mu, j), k) == marginal(mu, k)
    j = 1
    a, b = marginal(mu, j), marginal(mu, full ^ j)
    for m in range(full + 1):
        assert marginal(product(a, b), m) == product(marginal(a, j & m), marginal(b, m & ~j))


@given(measures_and_rhos)
def test_identities_of_xi(case):
    rho, mu = case
    table = coefficient_table(rho)
    assert check_marginal_preservation(table, mu).passed
    assert check_closure_marginals(table, mu).passed
    assert xi_apply(symmetrize(rho), mu) == xi_apply(rho, mu)
    image = xi_apply(rho, mu)
    for i in range(mu.alphabet.n_sites):
        assert marginal(image, 1 << i) == marginal(mu, 1 << i)


@given(distributions(max_sites=3))
def test_asymmetric_rho_is_handled_like_its_symmetrization(rho):
    mu = random_measure(random.Random(1), Alphabet([2] * rho.site_set.n_sites))
    assert xi_apply(rho, mu) == xi_apply(symmetrize(rho), mu)
    assert check_closure_marginals(coefficient_table(rho), mu).passed
