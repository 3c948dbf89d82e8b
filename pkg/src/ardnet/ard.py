"""Aggregate relational data: survey-question DSL, answer vectors, distances.

A query counts, for each respondent, the alters on one side of their links
(inbound or outbound) that satisfy a predicate on the covariates. Stacking
every respondent's answers respondent-major gives the answer vector; two
vectors compare through a norm and a tolerance radius.

All interval predicates use the half-open convention [lo, hi), so a family
of bins with touching cut points partitions the attribute range with no
gaps and no overlap.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import CovariateTable, Network

PREDICATE_KINDS = (
    "always-true",
    "alter-attr-range",
    "abs-diff-range",
    "alter-attr-threshold",
)
THRESHOLD_OPS = ("gt", "ge", "lt", "le")
DIRECTIONS = ("inbound", "outbound")
NORMS = ("l1", "l2", "linf")


@dataclass(frozen=True)
class Predicate:
    """Condition on (respondent i, alter j) deciding whether a link counts."""

    kind: str
    attr: str | None = None
    lo: float = -math.inf
    hi: float = math.inf
    op: str | None = None
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in PREDICATE_KINDS:
            raise ValidationError(f"unknown predicate kind {self.kind!r}")
        if self.kind != "always-true" and not self.attr:
            raise ValidationError(f"predicate {self.kind!r} needs an attribute name")
        if self.kind in ("alter-attr-range", "abs-diff-range") and not self.lo < self.hi:
            raise ValidationError("range predicates need lo < hi")
        if self.kind == "alter-attr-threshold" and self.op not in THRESHOLD_OPS:
            raise ValidationError(f"threshold op must be one of {THRESHOLD_OPS}")

    def mask(self, X: CovariateTable) -> np.ndarray:
        """Boolean (n, n) matrix over (respondent, alter); diagonal False."""
        n = X.n
        if self.kind == "always-true":
            out = np.ones((n, n), dtype=bool)
        elif self.kind == "alter-attr-range":
            x = X.vec(self.attr)
            out = np.tile((x >= self.lo) & (x < self.hi), (n, 1))
        elif self.kind == "abs-diff-range":
            x = X.vec(self.attr)
            d = np.abs(x[:, None] - x[None, :])
            out = (d >= self.lo) & (d < self.hi)
        else:
            x = X.vec(self.attr)
            if self.op == "gt":
                col = x > self.value
            elif self.op == "ge":
                col = x >= self.value
            elif self.op == "lt":
                col = x < self.value
            else:
                col = x <= self.value
            out = np.tile(col, (n, 1))
        np.fill_diagonal(out, False)
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "always-true":
            return d
        d["attr"] = self.attr
        if self.kind == "alter-attr-threshold":
            d["op"] = self.op
            d["value"] = float(self.value)
            return d
        if math.isfinite(self.lo):
            d["lo"] = float(self.lo)
        if math.isfinite(self.hi):
            d["hi"] = float(self.hi)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Predicate":
        return cls(
            kind=d["kind"],
            attr=d.get("attr"),
            lo=float(d.get("lo", -math.inf)),
            hi=float(d.get("hi", math.inf)),
            op=d.get("op"),
            value=float(d.get("value", 0.0)),
        )


def always_true() -> Predicate:
    return Predicate("always-true")


def alter_attr_range(attr: str, lo: float, hi: float) -> Predicate:
    return Predicate("alter-attr-range", attr=attr, lo=float(lo), hi=float(hi))


def abs_diff_range(attr: str, lo: float, hi: float) -> Predicate:
    return Predicate("abs-diff-range", attr=attr, lo=float(lo), hi=float(hi))


def alter_attr_threshold(attr: str, op: str, value: float) -> Predicate:
    return Predicate("alter-attr-threshold", attr=attr, op=op, value=float(value))


@dataclass(frozen=True)
class ArdQuery:
    name: str
    direction: str
    predicate: Predicate

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}")
        if not self.name:
            raise ValidationError("queries need a non-empty name")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "direction": self.direction,
            "predicate": self.predicate.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ArdQuery":
        return cls(d["name"], d["direction"], Predicate.from_dict(d["predicate"]))


@dataclass(frozen=True)
class ArdQuerySet:
    queries: tuple

    def __post_init__(self):
        qs = tuple(self.queries)
        if not qs:
            raise ValidationError("a query set needs at least one query")
        names = [q.name for q in qs]
        if len(set(names)) != len(names):
            raise ValidationError("query names must be unique")
        object.__setattr__(self, "queries", qs)

    def __len__(self):
        return len(self.queries)

    def names(self):
        return tuple(q.name for q in self.queries)

    def d_psi(self, n: int) -> int:
        return n * len(self.queries)

    def to_json(self) -> str:
        return json.dumps(
            {"queries": [q.to_dict() for q in self.queries]},
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ArdQuerySet":
        data = json.loads(text)
        return cls(tuple(ArdQuery.from_dict(q) for q in data["queries"]))


@dataclass(frozen=True)
class ArdVector:
    """Stacked answers; respondent i's answers occupy values[i*q : (i+1)*q]."""

    values: np.ndarray
    n: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.ndim != 1:
            raise ValidationError("answer vector must be one-dimensional")
        if self.n < 2 or v.size % self.n:
            raise ValidationError("answer vector length must be a multiple of n")
        if np.any(v < 0) or np.any(v > self.n - 1):
            raise ValidationError("answers must be counts between 0 and n-1")
        object.__setattr__(self, "values", v)

    @property
    def n_queries(self) -> int:
        return self.values.size // self.n

    def by_respondent(self) -> np.ndarray:
        return self.values.reshape(self.n, self.n_queries)

    def __eq__(self, other):
        if not isinstance(other, ArdVector):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.values, other.values))


def query_masks(X: CovariateTable, qs: ArdQuerySet) -> list:
    return [q.predicate.mask(X) for q in qs.queries]


def compute_ard(g: Network, X: CovariateTable, qs: ArdQuerySet) -> ArdVector:
    """Answer every query for every respondent on the given network."""
    if g.n != X.n:
        raise ValidationError(f"network has {g.n} nodes, covariates have {X.n}")
    cols = []
    for q in qs.queries:
        mask = q.predicate.mask(X)
        if q.direction == "outbound":
            cols.append((g.adj & mask).sum(axis=1))
        else:
            cols.append((g.adj.T & mask).sum(axis=1))
    return ArdVector(np.column_stack(cols).ravel(), g.n)


def ard_distance(a: ArdVector, b: ArdVector, norm: str = "l2") -> float:
    if a.values.size != b.values.size:
        raise ValidationError("answer vectors have different lengths")
    if norm not in NORMS:
        raise ValidationError(f"norm must be one of {NORMS}")
    d = (a.values - b.values).astype(np.float64)
    if norm == "l1":
        return float(np.sum(np.abs(d)))
    if norm == "l2":
        return float(np.sqrt(np.sum(d * d)))
    return float(np.max(np.abs(d))) if d.size else 0.0


def within_tolerance(a: ArdVector, b: ArdVector, delta: float, norm: str = "l2") -> bool:
    """True when the distance is at most delta (delta=0 means exact match)."""
    if delta < 0:
        raise ValidationError("tolerance must be non-negative")
    return ard_distance(a, b, norm) <= delta


def _both_directions(stub: str, predicate: Predicate) -> tuple:
    return (
        ArdQuery(f"in-{stub}", "inbound", predicate),
        ArdQuery(f"out-{stub}", "outbound", predicate),
    )


def builtin_query_sets() -> dict:
    """The three preset questionnaires keyed by name.

    design1: totals, links within a 5-year age difference, and alter-age
    bins under 25 / 25-44 / 45 and over, each inbound and outbound (10).
    design2-benchmark: totals plus age-difference bins with cut points
    5 and 10 (8). design2-augmented: totals plus age-difference bins with
    cut points 2, 5, 8, 12, 17, 24 (16).
    """
    inf = math.inf
    design1 = ArdQuerySet(
        _both_directions("total", always_true())
        + _both_directions("age-within-5", abs_diff_range("age", 0.0, 5.0))
        + _both_directions("age-under-25", alter_attr_range("age", 0.0, 25.0))
        + _both_directions("age-25-to-44", alter_attr_range("age", 25.0, 45.0))
        + _both_directions("age-45-up", alter_attr_range("age", 45.0, inf))
    )

    def diff_bins(cuts):
        edges = [0.0, *cuts, inf]
        queries = _both_directions("total", always_true())
        for lo, hi in zip(edges[:-1], edges[1:]):
            label = f"agediff-{lo:g}-{hi:g}" if math.isfinite(hi) else f"agediff-{lo:g}-up"
            queries += _both_directions(label, abs_diff_range("age", lo, hi))
        return ArdQuerySet(queries)

    return {
        "design1": design1,
        "design2-benchmark": diff_bins([5.0, 10.0]),
        "design2-augmented": diff_bins([2.0, 5.0, 8.0, 12.0, 17.0, 24.0]),
    }


def load_query_set(path) -> ArdQuerySet:
    with open(path, "r", encoding="utf-8") as fh:
        return ArdQuerySet.from_json(fh.read())


def save_query_set(qs: ArdQuerySet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(qs.to_json())
        fh.write("\n")
