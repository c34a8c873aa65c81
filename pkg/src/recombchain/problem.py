"""Problem documents: one JSON file describing sites, rho, and optionally mu.

Example::

    {
      "sites": 3,
      "rho": {"[1]": "1/4", "[2,3]": "1/4", "[1,2]": "1/4", "[3]": "1/4"},
      "alphabet": [2, 2, 2],
      "mu": {"product": [["1/2", "1/2"], ["1/3", "2/3"], ["1/4", "3/4"]]},
      "n": 3,
      "horizon": 20,
      "simulate": {"seed": 1, "trajectories": 10000, "mode": "chain"},
      "guards": {"max_states": 1000000, "max_dense": 1048576}
    }

Probabilities are exact ``"p/q"`` strings (or JSON integers); JSON numbers
with a fraction or exponent are refused. Errors carry the line and column
of the offending token.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .chain import MAX_STATES
from .errors import InvalidInputError
from .measures import MAX_DENSE, Alphabet, DenseMeasure, dense_measure, product_spec
from .rho import RecombDistribution, as_rational, validate
from .subsets import Partition, SiteSet, partition_to_lists, subset_to_list

_KNOWN_KEYS = {"sites", "site_labels", "rho", "alphabet", "mu", "n", "horizon", "simulate", "guards"}


class _FloatLiteral(str):
    """Marks a JSON number with a fraction or exponent so it can be refused later."""


def _position(text: str, offset: int) -> str:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return f"line {line}, column {column}"


def _locate(text: str, *tokens: str) -> str:
    """Position of the first token, searching each later token after the previous hit."""
    offset = 0
    for token in tokens:
        hit = text.find(token, offset)
        if hit < 0:
            break
        offset = hit
    return _position(text, offset)


@dataclass
class ProblemSpec:
    text: str
    digest: str
    site_set: SiteSet
    rho: RecombDistribution
    alphabet: Alphabet | None = None
    mu: DenseMeasure | None = None
    n: int = 3
    horizon: int = 20
    simulation: dict[str, Any] = field(default_factory=dict)
    max_states: int = MAX_STATES
    max_dense: int = MAX_DENSE


def _fail(text: str, message: str, code: str, *tokens: str):
    where = _locate(text, *tokens) if tokens else "line 1, column 1"
    raise InvalidInputError(f"{where}: {message}", code)


def _int_field(text, doc, key, default, minimum=0):
    value = doc.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        _fail(text, f"{key!r} must be an integer >= {minimum}", "bad-field", f'"{key}"')
    return value


def _subset_key(text: str, key: str, site_set: SiteSet) -> int:
    try:
        sites = json.loads(key)
    except json.JSONDecodeError:
        sites = None
    if not isinstance(sites, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in sites):
        _fail(text, f"rho key {key!r} is not a list of site indices", "bad-subset", '"rho"', json.dumps(key))
    if len(set(sites)) != len(sites):
        _fail(text, f"rho key {key!r} repeats a site", "bad-subset", '"rho"', json.dumps(key))
    try:
        return site_set.subset(sites)
    except InvalidInputError as err:
        _fail(text, str(err), err.code, '"rho"', json.dumps(key))


def _rational(text: str, value, *tokens: str) -> Fraction:
    if isinstance(value, _FloatLiteral):
        _fail(text, f"decimal literal {value} is not exact; write it as \"p/q\"", "bad-rational", *tokens)
    try:
        return as_rational(value)
    except InvalidInputError as err:
        _fail(text, str(err), err.code, *tokens)


def _parse_rho(text: str, doc: dict, site_set: SiteSet) -> RecombDistribution:
    raw = doc.get("rho")
    if not isinstance(raw, dict) or not raw:
        _fail(text, "'rho' must be a non-empty object mapping subsets to probabilities", "bad-rho", '"rho"')
    weights: dict[int, Fraction] = {}
    for key, value in raw.items():
        mask = _subset_key(text, key, site_set)
        if mask in weights:
            _fail(text, f"subset {key} listed twice", "bad-subset", '"rho"', json.dumps(key))
        weights[mask] = _rational(text, value, '"rho"', json.dumps(key))
    try:
        return validate(weights, site_set)
    except InvalidInputError as err:
        _fail(text, str(err), err.code, '"rho"')


def _parse_alphabet(text: str, doc: dict, n_sites: int, max_dense: int) -> Alphabet | None:
    raw = doc.get("alphabet")
    mu = doc.get("mu")
    if raw is None and isinstance(mu, dict) and isinstance(mu.get("product"), list):
        raw = [len(m) if isinstance(m, list) else 0 for m in mu["product"]]
    if raw is None:
        return None
    if isinstance(raw, int) and not isinstance(raw, bool):
        raw = [raw] * n_sites
    if not isinstance(raw, list) or not all(isinstance(a, int) and not isinstance(a, bool) for a in raw):
        _fail(text, "'alphabet' must be an integer or a list of integers", "bad-alphabet", '"alphabet"')
    if len(raw) != n_sites:
        _fail(text, f"alphabet lists {len(raw)} sites but the problem has {n_sites}",
              "bad-alphabet", '"alphabet"')
    try:
        return Alphabet(raw, max_dense=max_dense)
    except InvalidInputError as err:
        _fail(text, str(err), err.code, '"alphabet"')


def _parse_mu(text: str, doc: dict, alphabet: Alphabet | None) -> DenseMeasure | None:
    raw = doc.get("mu")
    if raw is None:
        return None
    if alphabet is None:
        _fail(text, "'mu' needs an 'alphabet'", "bad-measure", '"mu"')
    if not isinstance(raw, dict) or len(raw) != 1 or not set(raw) <= {"dense", "product"}:
        _fail(text, "'mu' must be {\"dense\": [...]} or {\"product\": [[...], ...]}", "bad-measure", '"mu"')
    try:
        if "dense" in raw:
            values = raw["dense"]
            if not isinstance(values, list):
                _fail(text, "'dense' must be a list", "bad-measure", '"mu"')
            return dense_measure(alphabet, [_rational(text, v, '"mu"') for v in values])
        marginals = raw["product"]
        if not isinstance(marginals, list) or not all(isinstance(m, list) for m in marginals):
            _fail(text, "'product' must be a list of lists", "bad-measure", '"mu"')
        return product_spec(alphabet, [[_rational(text, v, '"mu"') for v in m] for m in marginals])
    except InvalidInputError as err:
        if err.args[0].startswith("line "):
            raise
        _fail(text, str(err), err.code, '"mu"')


def parse_problem(text: str, max_states: int | None = None, max_dense: int | None = None) -> ProblemSpec:
    """Parse and validate a problem document; guard arguments override its ``guards``."""
    try:
        doc = json.loads(text, parse_float=_FloatLiteral,
                         parse_constant=lambda c: _fail(text, f"{c} is not allowed", "bad-rational", c))
    except json.JSONDecodeError as err:
        raise InvalidInputError(f"line {err.lineno}, column {err.colno}: {err.msg}", "parse-error") from None
    if not isinstance(doc, dict):
        _fail(text, "the document must be a JSON object", "bad-document")
    for key in doc:
        if key not in _KNOWN_KEYS:
            _fail(text, f"unknown field {key!r}", "bad-field", json.dumps(key))

    labels = doc.get("site_labels")
    if labels is not None and (not isinstance(labels, list) or not all(isinstance(x, str) for x in labels)):
        _fail(text, "'site_labels' must be a list of strings", "bad-field", '"site_labels"')
    default_sites = len(labels) if labels is not None else None
    if "sites" not in doc and default_sites is None:
        _fail(text, "missing 'sites'", "bad-field")
    n_sites = _int_field(text, doc, "sites", default_sites, minimum=1)
    try:
        site_set = SiteSet(n_sites, tuple(labels) if labels is not None else None)
    except InvalidInputError as err:
        _fail(text, str(err), err.code, '"sites"')

    guards = doc.get("guards", {})
    if not isinstance(guards, dict) or not set(guards) <= {"max_states", "max_dense"}:
        _fail(text, "'guards' accepts only max_states and max_dense", "bad-field", '"guards"')
    if max_states is None:
        max_states = _int_field(text, guards, "max_states", MAX_STATES, minimum=1)
    if max_dense is None:
        max_dense = _int_field(text, guards, "max_dense", MAX_DENSE, minimum=1)

    rho = _parse_rho(text, doc, site_set)
    alphabet = _parse_alphabet(text, doc, n_sites, max_dense)
    mu = _parse_mu(text, doc, alphabet)

    simulation = doc.get("simulate", {})
    if not isinstance(simulation, dict) or not set(simulation) <= {"seed", "trajectories", "mode"}:
        _fail(text, "'simulate' accepts only seed, trajectories and mode", "bad-field", '"simulate"')

    return ProblemSpec(
        text=text,
        digest=hashlib.sha256(text.encode("utf-8")).hexdigest(),
        site_set=site_set,
        rho=rho,
        alphabet=alphabet,
        mu=mu,
        n=_int_field(text, doc, "n", 3),
        horizon=_int_field(text, doc, "horizon", 20, minimum=1),
        simulation=simulation,
        max_states=max_states,
        max_dense=max_dense,
    )


def load_problem(path: str, **guards) -> ProblemSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_problem(fh.read(), **guards)


# Serialization helpers shared by reports.

def decimal(x: Fraction, digits: int = 12) -> str:
    return f"{float(x):.{digits}g}"


def rational(x: Fraction) -> dict[str, str]:
    return {"exact": str(x), "decimal": decimal(x)}


def subset_json(mask: int) -> list[int]:
    return subset_to_list(mask)


def partition_json(p: Partition) -> list[list[int]]:
    return partition_to_lists(p)


def weighted_partitions(law: dict[Partition, Fraction]) -> list[dict[str, Any]]:
    return [{"partition": partition_json(p), **rational(w)} for p, w in law.items()]
