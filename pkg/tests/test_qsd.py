import random
from fractions import Fraction as F

import pytest
from hypothesis import given

from recombchain.chain import build_chain, hitting_transform, survival_profile
from recombchain.errors import InvalidInputError, NotApplicableError
from recombchain.instances import single_crossover, three_site_example, two_site_lazy
from recombchain.qsd import (analyze, collapse, conditioned_path_probability, decay_rate,
                             eigenvector_check, geometric_limit_check, indicator_check, q_process,
                             qsd_verify, ratio_limit, stay_levels, terminal_level_states,
                             transform_values)
from recombchain.rho import validate
from recombchain.subsets import SiteSet, canonical

from conftest import distributions

S3, S4 = SiteSet(3), SiteSet(4)
WHOLE = (S3.full,)
LEFT = canonical([S3.subset([1]), S3.subset([2, 3])])
RIGHT = canonical([S3.subset([1, 2]), S3.subset([3])])


@pytest.fixture(scope="module")
def three():
    model = build_chain(three_site_example())
    return model, analyze(model)


def bypass_example():
    """One pair keeps a block at the decay rate; the other skips past it."""
    s = S4
    return validate({s.subset([3]): F(3, 10), s.subset([1, 2, 4]): F(3, 10),
                     s.subset([2, 3]): F(1, 5), s.subset([1, 4]): F(1, 5)}, s)


def test_three_site_decay_rate(three):
    model, analysis = three
    rate = decay_rate(model)
    assert rate.eta == F(1, 2) and rate.beta0 == 0
    assert set(rate.e_sets) == {S3.subset([1, 2]), S3.subset([2, 3])}
    assert set(rate.e_states) == {LEFT, RIGHT}


def test_three_site_transforms(three):
    model, analysis = three
    assert transform_values(model, analysis.eta, [LEFT, RIGHT])[WHOLE] == 2
    assert transform_values(model, analysis.eta, [LEFT])[WHOLE] == 1
    assert transform_values(model, analysis.eta, [LEFT])[LEFT] == 1
    assert analysis.phi == {WHOLE: 2, LEFT: 1, RIGHT: 1}
    assert analysis.limit_constant == 2
    assert analysis.quasi_limit == {LEFT: F(1, 2), RIGHT: F(1, 2)}


def test_three_site_ratio_limits_and_q(three):
    model, analysis = three
    assert ratio_limit(model, analysis, WHOLE) == 1
    assert ratio_limit(model, analysis, LEFT) == F(1, 2)
    with pytest.raises(InvalidInputError):
        ratio_limit(model, analysis, S3.singletons())
    q = q_process(model, analysis)
    assert q.q_matrix[WHOLE] == {LEFT: F(1, 2), RIGHT: F(1, 2)}
    assert q.q_matrix[LEFT] == {LEFT: 1} and q.q_matrix[RIGHT] == {RIGHT: 1}


def test_three_site_eigen_and_geometric(three):
    model, analysis = three
    assert eigenvector_check(model, analysis).passed
    geo = geometric_limit_check(model, analysis, n=20)
    assert geo.report.passed
    assert geo.scaled_survival[1:] == [2] * 20


def test_three_site_conditioned_paths_are_exact(three):
    model, _ = three
    for n in (1, 5, 12):
        assert conditioned_path_probability(model, [LEFT], n) == F(1, 2)
        assert conditioned_path_probability(model, [LEFT, LEFT], max(n, 2)) == F(1, 2)
        assert conditioned_path_probability(model, [LEFT, RIGHT], max(n, 2)) == 0


def test_three_site_quasi_stationary_measures(three):
    model, analysis = three
    assert qsd_verify(model, analysis, {LEFT: F(1, 2), RIGHT: F(1, 2)}, F(1, 2)).passed
    assert qsd_verify(model, analysis, {LEFT: 1}, F(1, 2)).passed


def test_qsd_verify_rejects_bad_arguments(three):
    model, analysis = three
    with pytest.raises(InvalidInputError) as err:
        qsd_verify(model, analysis, {LEFT: 1}, F(1, 3))
    assert err.value.code == "bad-rate"
    with pytest.raises(InvalidInputError) as err:
        qsd_verify(model, analysis, {WHOLE: 1}, F(1, 2))
    assert err.value.code == "unsupported-measure"
    with pytest.raises(InvalidInputError) as err:
        qsd_verify(model, analysis, {LEFT: F(1, 3)}, F(1, 2))
    assert err.value.code == "not-normalized"


def test_indicator_is_a_left_not_a_right_eigenvector(three):
    model, analysis = three
    e_idx = analysis.e_indices(model)
    pstar_times_indicator = sum(w for j, w in model.transitions[model.initial_index].items() if j in e_idx)
    assert pstar_times_indicator == 1 != analysis.eta * 0
    assert indicator_check(model, [LEFT, RIGHT], analysis.eta).passed
    assert indicator_check(model, [LEFT], analysis.eta).passed


def test_lower_level_measures_can_fail_to_be_quasi_stationary():
    model = build_chain(single_crossover(4))
    analysis = analyze(model)
    k = S4.subset([1, 2, 3])
    a = model.table.stay(k)
    assert analysis.eta == F(2, 3) and a == F(1, 3)
    state = collapse(model.table.atom_partition, k)
    report = qsd_verify(model, analysis, {state: 1}, a)
    assert not report.passed
    assert state not in terminal_level_states(model, a)


def test_two_site_lazy():
    model = build_chain(two_site_lazy())
    analysis = analyze(model)
    assert analysis.eta == F(1, 2)
    assert analysis.e_sets == (3,) and analysis.e_states == ((3,),)
    assert analysis.quasi_limit == {(3,): 1}
    assert geometric_limit_check(model, analysis, n=15).scaled_survival == [1] * 16


def test_not_applicable_inputs():
    with pytest.raises(NotApplicableError) as err:
        analyze(build_chain(validate({S3.full: 1}, S3)))
    assert str(err.value) == "identity transformation; quasi-stationary analysis not applicable"
    pair = validate({1: F(1, 2), 6: F(1, 2)}, S3)
    with pytest.raises(NotApplicableError) as err:
        analyze(build_chain(pair))
    assert err.value.code == "no-decay"


def test_bypass_path_keeps_hitting_probability_below_one():
    model = build_chain(bypass_example())
    analysis = analyze(model)
    assert analysis.eta == F(3, 5)
    assert 0 < analysis.hit_probability < 1
    assert analysis.hit_probability == F(3, 5)
    skipped = canonical([S4.subset([1, 4]), S4.subset([2, 3])])
    assert analysis.phi[skipped] == 0
    assert ratio_limit(model, analysis, skipped) == 0
    assert eigenvector_check(model, analysis).passed


@given(distributions(max_sites=4, symmetric=True))
def test_analysis_identities(rho):
    model = build_chain(rho)
    try:
        analysis = analyze(model)
    except NotApplicableError:
        assert rho.is_identity or not stay_levels(model.table)
        return
    assert sum(analysis.quasi_limit.values()) == 1
    assert eigenvector_check(model, analysis).passed
    assert all(v == 1 for v in q_process(model, analysis).row_sums().values())
    assert analysis.beta0 < analysis.eta
    e_idx = analysis.e_indices(model)
    hits = hitting_transform(model, e_idx)
    assert analysis.hit_probability == hits[model.initial_index]
    assert qsd_verify(model, analysis, analysis.quasi_limit, analysis.eta).passed


@given(distributions(max_sites=4, symmetric=True))
def test_terminal_level_states_are_quasi_stationary(rho):
    model = build_chain(rho)
    try:
        analysis = analyze(model)
    except NotApplicableError:
        return
    rng = random.Random(0)
    for a in stay_levels(model.table):
        states = terminal_level_states(model, a)
        if not states:
            continue
        weights = [rng.randint(1, 5) for _ in states]
        nu = {s: F(w, sum(weights)) for s, w in zip(states, weights)}
        assert qsd_verify(model, analysis, nu, a, n=4).passed
        assert indicator_check(model, states, a).passed


@given(distributions(max_sites=4, symmetric=True))
def test_conditioned_law_converges_to_quasi_limit(rho):
    model = build_chain(rho)
    try:
        analysis = analyze(model)
    except NotApplicableError:
        return
    n = 60
    last = survival_profile(model, n).state_occupancy[n]
    alive = sum(w for s, w in last.items() if s != model.absorbing)
    for s, target in analysis.quasi_limit.items():
        ratio = float(analysis.beta0 / analysis.eta)
        assert abs(float(last.get(s, 0) / alive) - float(target)) <= 50 * (n + 1) ** 3 * ratio ** n + 1e-12
