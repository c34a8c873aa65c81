import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given

from recombchain.chain import (build_chain, check_chain, hitting_distribution, hitting_transform,
                               q_by_chain, survival_profile)
from recombchain.errors import InvalidInputError, ResourceLimitError
from recombchain.instances import random_instances, single_crossover, three_site_example, two_site_lazy
from recombchain.rho import validate
from recombchain.subsets import SiteSet, canonical
from recombchain.trees import q_by_trees

from conftest import distributions

S3 = SiteSet(3)
WHOLE = (S3.full,)
LEFT = canonical([S3.subset([1]), S3.subset([2, 3])])
RIGHT = canonical([S3.subset([1, 2]), S3.subset([3])])
SINGLETONS = S3.singletons()


def transition_oracle(rho):
    """Every block draws a support set J and splits along it; reachable states by search."""
    support = list(rho.weights.items())
    start = (rho.full,)
    rows, todo = {}, [start]
    while todo:
        state = todo.pop()
        if state in rows:
            continue
        row = {}
        for draw in itertools.product(support, repeat=len(state)):
            w = F(1)
            blocks = []
            for block, (j, pj) in zip(state, draw):
                w *= pj
                blocks.extend(b for b in (block & j, block & ~j) if b)
            nxt = canonical(blocks)
            row[nxt] = row.get(nxt, F(0)) + w
        rows[state] = row
        todo.extend(row)
    return rows


def as_partition_rows(model):
    return {
        model.states[i]: {model.states[j]: w for j, w in row.items()}
        for i, row in enumerate(model.transitions)
    }


def test_three_site_chain():
    model = build_chain(three_site_example())
    assert model.states == (WHOLE, LEFT, RIGHT, SINGLETONS)
    assert as_partition_rows(model) == {
        WHOLE: {LEFT: F(1, 2), RIGHT: F(1, 2)},
        LEFT: {LEFT: F(1, 2), SINGLETONS: F(1, 2)},
        RIGHT: {RIGHT: F(1, 2), SINGLETONS: F(1, 2)},
        SINGLETONS: {SINGLETONS: 1},
    }
    assert model.absorbing == SINGLETONS
    assert check_chain(model).passed


def test_identity_chain_is_a_single_absorbing_state():
    model = build_chain(validate({S3.full: 1}, S3))
    assert model.states == (WHOLE,)
    assert model.transitions == ({0: 1},)
    assert survival_profile(model, 3).survival == [0, 0, 0, 0]


def test_lazy_two_site_chain():
    model = build_chain(two_site_lazy())
    assert model.states == ((3,), (1, 2))
    assert model.p((3,), (3,)) == F(1, 2)
    assert survival_profile(model, 8).survival == [F(1, 2) ** n for n in range(9)]


def test_three_site_laws():
    model = build_chain(three_site_example())
    assert q_by_chain(model, 0) == {WHOLE: 1}
    assert q_by_chain(model, 2) == {LEFT: F(1, 4), RIGHT: F(1, 4), SINGLETONS: F(1, 2)}
    survival = survival_profile(model, 12).survival
    assert survival[0] == 1
    assert all(survival[n] == F(1, 2) ** (n - 1) for n in range(1, 13))


def test_three_site_hitting_times():
    model = build_chain(three_site_example())
    assert hitting_distribution(model, [WHOLE], 3).by_time == [1, 0, 0, 0]
    both = hitting_distribution(model, [LEFT, RIGHT], 4)
    assert both.by_time[1] == 1 and both.never == 0
    left = hitting_distribution(model, [LEFT], 4)
    assert left.by_time[1] == F(1, 2) and left.never == F(1, 2)
    assert sum(left.by_time) + left.never + left.pending == 1
    assert hitting_transform(model, [model.index[LEFT]])[0] == F(1, 2)


def test_unknown_state_and_guards():
    model = build_chain(three_site_example())
    with pytest.raises(InvalidInputError):
        model.lookup((5, 2))
    with pytest.raises(ResourceLimitError):
        build_chain(single_crossover(6), max_states=5)
    with pytest.raises(ResourceLimitError):
        build_chain(single_crossover(17))


@given(distributions(max_sites=4, max_support=4))
def test_transitions_match_support_draw_oracle(rho):
    model = build_chain(rho)
    assert as_partition_rows(model) == transition_oracle(rho)
    assert check_chain(model).passed


@given(distributions(max_sites=4, symmetric=True))
def test_absorption_is_certain(rho):
    model = build_chain(rho)
    if rho.is_identity:
        return
    survival = survival_profile(model, 200).survival
    assert all(a >= b for a, b in zip(survival, survival[1:]))
    assert survival[-1] < F(1, 10**6)


@pytest.mark.parametrize("n", range(5))
def test_chain_laws_match_tree_weights(n):
    for rho, _ in random_instances(10, seed=4):
        assert q_by_chain(build_chain(rho), n) == q_by_trees(rho, n)
