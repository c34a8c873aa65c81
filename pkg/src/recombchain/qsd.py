"""Geometric decay, quasi-limits, ratio limits, the Q-process and QSDs.

The chain is absorbing and its transient part is not irreducible, so none
of this goes through Perron-Frobenius. The decay rate ``eta`` is the
largest stay weight ``rho^K_K`` over closure sets K that are not atoms. The
distinguished states are the partitions ``D^{rho,K}`` for K attaining eta:
K itself plus every atom disjoint from K. Every quantity below is obtained
by exact back-substitution over the transition DAG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .chain import ChainModel, hitting_transform, step, survival_from, distributions
from .errors import CheckReport, InvalidInputError, InvariantViolation, NotApplicableError
from .rho import CoefficientTable
from .subsets import Partition, canonical, format_partition


def collapse(atom_partition: Partition, k: int) -> Partition:
    """``K`` together with every atom disjoint from it."""
    return canonical([a for a in atom_partition if not a & k] + [k])


def _candidate_sets(table: CoefficientTable) -> list[int]:
    """Non-atom closure sets with a positive stay weight."""
    return [k for k in table.non_atoms() if table.stay(k) > 0]


def stay_levels(table: CoefficientTable) -> list[Fraction]:
    """Distinct positive stay weights of non-atom closure sets, descending."""
    return sorted({table.stay(k) for k in _candidate_sets(table)}, reverse=True)


def level_sets(table: CoefficientTable, a: Fraction) -> list[int]:
    return sorted(k for k in _candidate_sets(table) if table.stay(k) == a)


def _require_applicable(table: CoefficientTable) -> None:
    if table.rho.is_identity:
        raise NotApplicableError("identity transformation; quasi-stationary analysis not applicable",
                                 "identity-transformation")
    if not _candidate_sets(table):
        raise NotApplicableError(
            "every non-root closure set is an atom: the chain is absorbed after one step "
            "and has no decay rate", "no-decay")


@dataclass
class DecayRate:
    eta: Fraction
    beta0: Fraction
    beta: Fraction
    e_sets: tuple[int, ...]
    e_states: tuple[Partition, ...]


def decay_rate(model: ChainModel) -> DecayRate:
    table = model.table
    _require_applicable(table)
    levels = stay_levels(table)
    eta = levels[0]
    beta = levels[1] if len(levels) > 1 else Fraction(0)
    e_sets = tuple(level_sets(table, eta))
    e_states = tuple(sorted((collapse(table.atom_partition, k) for k in e_sets),
                            key=lambda s: model.index.get(s, -1)))
    missing = [s for s in e_states if s not in model.index]
    if missing:
        raise InvariantViolation(f"distinguished state {format_partition(missing[0])} is unreachable")
    e_idx = {model.index[s] for s in e_states}
    beta0 = max((model.self_loop(i) for i in model.transient() if i not in e_idx), default=Fraction(0))
    return DecayRate(eta, beta0, beta, e_sets, e_states)


@dataclass
class DecayAnalysis:
    eta: Fraction
    beta0: Fraction
    beta: Fraction
    e_sets: tuple[int, ...]
    e_states: tuple[Partition, ...]
    phi: dict[Partition, Fraction]
    limit_constant: Fraction
    quasi_limit: dict[Partition, Fraction]
    hit_probability: Fraction

    def e_indices(self, model: ChainModel) -> set[int]:
        return {model.index[s] for s in self.e_states}


def transform_values(model: ChainModel, eta: Fraction, targets) -> dict[Partition, Fraction]:
    """``E_delta(eta^-zeta_B ; zeta_B < inf)`` for every state delta."""
    idx = {model.lookup(t) for t in targets}
    h = hitting_transform(model, idx, eta)
    return {model.states[i]: h[i] for i in range(model.n_states)}


def quasi_limit(model: ChainModel, eta: Fraction, e_states, limit_constant: Fraction,
                ) -> dict[Partition, Fraction]:
    start = model.states[model.initial_index]
    return {s: transform_values(model, eta, [s])[start] / limit_constant for s in e_states}


def analyze(model: ChainModel) -> DecayAnalysis:
    rate = decay_rate(model)
    values = transform_values(model, rate.eta, rate.e_states)
    phi = {s: v for s, v in values.items() if s != model.absorbing}
    start = model.states[model.initial_index]
    limit_constant = phi[start]
    hits = hitting_transform(model, {model.index[s] for s in rate.e_states})
    return DecayAnalysis(
        rate.eta, rate.beta0, rate.beta, rate.e_sets, rate.e_states, phi, limit_constant,
        quasi_limit(model, rate.eta, rate.e_states, limit_constant), hits[model.initial_index],
    )


def ratio_limit(model: ChainModel, analysis: DecayAnalysis, state: Partition) -> Fraction:
    """Limit of ``P_state(zeta > n) / P(zeta > n)``."""
    state = canonical(state)
    if state == model.absorbing:
        raise InvalidInputError("ratio limit is undefined at the absorbing state", "absorbing-state")
    model.lookup(state)
    return analysis.phi[state] / analysis.limit_constant


def eigenvector_check(model: ChainModel, analysis: DecayAnalysis) -> CheckReport:
    """``P* phi = eta phi`` on the transient states, exactly."""
    report = CheckReport("right eigenvector")
    a = model.absorbing_index
    phi = {model.index[s]: v for s, v in analysis.phi.items()}
    for i in model.transient():
        lhs = sum((w * phi[j] for j, w in model.transitions[i].items() if j != a), Fraction(0))
        report.expect(lhs == analysis.eta * phi[i],
                      f"row {format_partition(model.states[i])}: {lhs} != eta * {phi[i]}")
    return report


@dataclass
class QProcess:
    domain: tuple[Partition, ...]
    q_matrix: dict[Partition, dict[Partition, Fraction]]

    def row_sums(self) -> dict[Partition, Fraction]:
        return {s: sum(row.values(), Fraction(0)) for s, row in self.q_matrix.items()}


def q_process(model: ChainModel, analysis: DecayAnalysis) -> QProcess:
    """Chain conditioned never to be absorbed: ``Q = P phi' / (eta phi)``."""
    domain = tuple(s for s in model.states if s != model.absorbing and analysis.phi[s] > 0)
    inside = set(domain)
    rows = {}
    for s in domain:
        i = model.index[s]
        row = {}
        for j, w in model.transitions[i].items():
            t = model.states[j]
            if t in inside:
                row[t] = w * analysis.phi[t] / (analysis.eta * analysis.phi[s])
        rows[s] = row
    return QProcess(domain, rows)


def conditioned_path_probability(model: ChainModel, path, n: int, start: Partition | None = None,
                                 _survival_cache: dict | None = None) -> Fraction:
    """``P_start(Y_1..Y_j = path | zeta > n)`` exactly, for ``n >= j``."""
    first = model.initial_index if start is None else model.lookup(start)
    idx = [model.lookup(s) for s in path]
    if n < len(idx):
        raise InvalidInputError("conditioning horizon shorter than the path", "bad-horizon")
    cache = {} if _survival_cache is None else _survival_cache

    def surv(i):
        if i not in cache:
            cache[i] = survival_from(model, i, n)
        return cache[i]

    p = Fraction(1)
    prev = first
    for i in idx:
        p *= model.transitions[prev].get(i, Fraction(0))
        prev = i
    if not p:
        return Fraction(0)
    return p * surv(prev)[n - len(idx)] / surv(first)[n]


@dataclass
class GeometricLimit:
    scaled_survival: list[Fraction]
    deviation: list[float]
    non_e_mass: list[Fraction]
    depth: int
    fitted_constant: float | None
    report: CheckReport


def geometric_limit_check(model: ChainModel, analysis: DecayAnalysis, n: int = 40,
                          tolerance: float = 1e-9) -> GeometricLimit:
    """``eta^-k P(zeta > k)`` against the limit constant for k = 0..n.

    The report fails when the deviation at ``n`` exceeds ``tolerance``, or
    when ``beta0 = 0`` and some k beyond the DAG depth is not exactly equal.
    ``fitted_constant`` is the smallest C with deviation <= C (beta0/eta)^k
    over the sampled k (diagnostic only).
    """
    report = CheckReport(f"geometric limit at n={n}")
    eta = analysis.eta
    laws = distributions(model, n)
    a = model.absorbing_index
    e_idx = analysis.e_indices(model)
    scaled, deviation, non_e = [], [], []
    for k, v in enumerate(laws):
        alive = sum((w for i, w in v.items() if i != a), Fraction(0))
        scaled.append(alive / eta**k)
        deviation.append(abs(float(scaled[-1] - analysis.limit_constant)))
        outside = sum((w for i, w in v.items() if i != a and i not in e_idx), Fraction(0))
        non_e.append(outside / alive if alive else Fraction(0))
    depth = model.depth()
    report.expect(deviation[n] <= tolerance,
                  f"|eta^-n P(zeta>n) - limit| = {deviation[n]:.3e} > {tolerance:g} at n={n} "
                  f"(beta0/eta = {float(analysis.beta0 / eta):.4f})")
    if analysis.beta0 == 0:
        for k in range(depth + 1, n + 1):
            report.expect(scaled[k] == analysis.limit_constant,
                          f"beta0 = 0 but eta^-k P(zeta>k) is not exact at k={k}")
    fitted = None
    if analysis.beta0 > 0:
        ratio = float(analysis.beta0 / eta)
        fitted = max((d / ratio**k for k, d in enumerate(deviation) if k and d), default=0.0)
        if math.isinf(fitted):
            fitted = None
    report.data.update(depth=depth)
    return GeometricLimit(scaled, deviation, non_e, depth, fitted, report)


def _left_times_pstar(model: ChainModel, nu: Mapping[int, Fraction]) -> dict[int, Fraction]:
    out = step(model, nu)
    out.pop(model.absorbing_index, None)
    return {i: w for i, w in out.items() if w}


def qsd_verify(model: ChainModel, analysis: DecayAnalysis, nu: Mapping[Partition, Fraction],
               a: Fraction, n: int = 10) -> CheckReport:
    """Check that ``nu`` is a left eigenvector of P* for ``a`` and conditionally stationary.

    ``nu`` must be a probability vector on the collapsed partitions whose
    non-atom block has stay weight ``a``. Left-eigenvector status can fail
    for ``a < eta`` when such a block can split into non-atoms; the report
    then records the failure rather than raising.
    """
    table = model.table
    allowed = {analysis.eta, *stay_levels(table)}
    if a not in allowed:
        raise InvalidInputError(f"{a} is not the stay weight of any non-atom closure set", "bad-rate")
    support_states = {collapse(table.atom_partition, k) for k in level_sets(table, a)}
    vec: dict[int, Fraction] = {}
    for s, w in nu.items():
        s = canonical(s)
        if w and s not in support_states:
            raise InvalidInputError(f"{format_partition(s)} is outside the level-{a} states",
                                    "unsupported-measure")
        if w:
            vec[model.lookup(s)] = Fraction(w)
    if sum(vec.values(), Fraction(0)) != 1 or any(w < 0 for w in vec.values()):
        raise InvalidInputError("nu must be a probability vector", "not-normalized")

    report = CheckReport(f"quasi-stationary distribution at a={a}")
    image = _left_times_pstar(model, vec)
    report.expect(image == {i: a * w for i, w in vec.items()},
                  "nu P* differs from a nu")
    v = dict(vec)
    for k in range(1, n + 1):
        v = _left_times_pstar(model, v)
        alive = sum(v.values(), Fraction(0))
        cond = {i: w / alive for i, w in v.items()} if alive else {}
        report.expect(cond == vec, f"P_nu(Y_{k} = . | zeta > {k}) differs from nu")
    return report


def terminal_level_states(model: ChainModel, a: Fraction) -> list[Partition]:
    """Level-``a`` collapsed partitions whose only exits lead to the atoms."""
    table = model.table
    out = []
    for k in level_sets(table, a):
        s = collapse(table.atom_partition, k)
        i = model.index.get(s)
        if i is not None and set(model.transitions[i]) <= {i, model.absorbing_index}:
            out.append(s)
    return sorted(out, key=model.index.__getitem__)


def indicator_check(model: ChainModel, states, a: Fraction) -> CheckReport:
    """The indicator row vector of ``states`` is a left eigenvector of P* for ``a``."""
    idx = {model.lookup(s) for s in states}
    report = CheckReport(f"indicator left eigenvector at a={a}")
    image = _left_times_pstar(model, {i: Fraction(1) for i in idx})
    report.expect(image == {i: a for i in idx}, "indicator times P* differs from a times indicator")
    return report
