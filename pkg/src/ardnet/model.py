"""Core model objects: directed networks, node covariates, pairwise utilities.

The potential defined here is the single scalar whose link-by-link
increments drive the network sampler, the mean-field bound and the
enumeration oracle, so every summation convention is fixed in this module
and inherited everywhere else. In particular the reciprocity term sums over
*ordered* pairs, so a mutual dyad contributes its value twice; the matching
player utility carries the same doubled term so that toggling one link
changes the potential and the deciding player's utility by the same amount.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

PARTS = ("direct", "mutual", "indirect")

FEATURE_KINDS = ("constant", "abs-diff", "alter-attr", "same-bin")


def ordered_pairs(n: int) -> np.ndarray:
    """All ordered node pairs (i, j) with i != j, row-major; shape (n*(n-1), 2)."""
    out = np.empty((n * (n - 1), 2), dtype=np.int64)
    p = 0
    for i in range(n):
        for j in range(n):
            if j != i:
                out[p, 0] = i
                out[p, 1] = j
                p += 1
    return out


class Network:
    """Directed graph over ``n`` nodes as a dense boolean adjacency matrix.

    ``adj[i, j]`` is True when node ``i`` points a link at node ``j``.
    Self-links are forbidden; mutation goes through :meth:`set_link` /
    :meth:`toggle` so the diagonal stays clean.
    """

    __slots__ = ("n", "adj")

    def __init__(self, adj):
        a = np.array(adj, dtype=bool)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValidationError("adjacency must be a square matrix")
        if a.shape[0] < 2:
            raise ValidationError("a network needs at least two nodes")
        if a.diagonal().any():
            raise ValidationError("self-links are not allowed")
        self.n = int(a.shape[0])
        self.adj = a

    @classmethod
    def empty(cls, n: int) -> "Network":
        return cls(np.zeros((n, n), dtype=bool))

    @classmethod
    def complete(cls, n: int) -> "Network":
        a = np.ones((n, n), dtype=bool)
        np.fill_diagonal(a, False)
        return cls(a)

    @classmethod
    def random(cls, n: int, p: float, rng: np.random.Generator) -> "Network":
        if not 0.0 <= p <= 1.0:
            raise ValidationError("link probability must lie in [0, 1]")
        a = rng.random((n, n)) < p
        np.fill_diagonal(a, False)
        return cls(a)

    def copy(self) -> "Network":
        return Network(self.adj)

    def set_link(self, i: int, j: int, present: bool) -> None:
        if i == j:
            raise DomainError("self-links are not allowed")
        self.adj[i, j] = bool(present)

    def toggle(self, i: int, j: int) -> None:
        self.set_link(i, j, not self.adj[i, j])

    def link_count(self) -> int:
        return int(self.adj.sum())

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.adj, other.adj))

    def __repr__(self):
        return f"Network(n={self.n}, links={self.link_count()})"


class CovariateTable:
    """Named per-node real attributes (the X matrix, one column per name)."""

    def __init__(self, attributes: dict):
        if not attributes:
            raise ValidationError("at least one attribute column is required")
        cols = {}
        n = None
        for name, values in attributes.items():
            a = np.asarray(values, dtype=np.float64)
            if a.ndim != 1:
                raise ValidationError(f"attribute {name!r} must be one-dimensional")
            if n is None:
                n = a.size
            elif a.size != n:
                raise ValidationError(
                    f"attribute {name!r} has length {a.size}, expected {n}"
                )
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"attribute {name!r} contains non-finite values")
            cols[str(name)] = a.copy()
        if n is None or n < 2:
            raise ValidationError("a covariate table needs at least two rows")
        self.n = int(n)
        self.attributes = cols

    def vec(self, name: str) -> np.ndarray:
        try:
            return self.attributes[name]
        except KeyError:
            raise ValidationError(f"unknown attribute {name!r}") from None

    def names(self):
        return tuple(self.attributes)


@dataclass(frozen=True)
class PairFeature:
    """One pairwise regressor f(X_i, X_j) entering a linear utility part.

    kind:
      constant            1 for every pair
      abs-diff            |x_i - x_j| / scale
      alter-attr          x_j (the alter's attribute)
      same-bin            1 when floor(x_i/width) == floor(x_j/width)
    """

    kind: str
    attr: str | None = None
    scale: float = 1.0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValidationError(f"unknown feature kind {self.kind!r}")
        if self.kind != "constant" and not self.attr:
            raise ValidationError(f"feature kind {self.kind!r} needs an attribute name")
        if self.kind == "abs-diff" and not self.scale > 0:
            raise ValidationError("abs-diff scale must be positive")
        if self.kind == "same-bin" and not self.width > 0:
            raise ValidationError("same-bin width must be positive")

    def matrix(self, X: CovariateTable) -> np.ndarray:
        """Dense (n, n) evaluation with a zeroed diagonal."""
        n = X.n
        if self.kind == "constant":
            out = np.ones((n, n))
        elif self.kind == "abs-diff":
            x = X.vec(self.attr)
            out = np.abs(x[:, None] - x[None, :]) / self.scale
        elif self.kind == "alter-attr":
            x = X.vec(self.attr)
            out = np.tile(x, (n, 1))
        else:
            b = np.floor(X.vec(self.attr) / self.width)
            out = (b[:, None] == b[None, :]).astype(np.float64)
        np.fill_diagonal(out, 0.0)
        return out

    def value(self, X: CovariateTable, i: int, j: int) -> float:
        if self.kind == "constant":
            return 1.0
        x = X.vec(self.attr)
        if self.kind == "abs-diff":
            return abs(float(x[i]) - float(x[j])) / self.scale
        if self.kind == "alter-attr":
            return float(x[j])
        return float(np.floor(x[i] / self.width) == np.floor(x[j] / self.width))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind != "constant":
            d["attr"] = self.attr
        if self.kind == "abs-diff":
            d["scale"] = float(self.scale)
        if self.kind == "same-bin":
            d["width"] = float(self.width)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PairFeature":
        return cls(
            kind=d["kind"],
            attr=d.get("attr"),
            scale=float(d.get("scale", 1.0)),
            width=float(d.get("width", 1.0)),
        )


def constant() -> PairFeature:
    return PairFeature("constant")


def abs_diff(attr: str, scale: float = 1.0) -> PairFeature:
    return PairFeature("abs-diff", attr=attr, scale=scale)


def alter_attr(attr: str) -> PairFeature:
    return PairFeature("alter-attr", attr=attr)


def same_bin(attr: str, width: float) -> PairFeature:
    return PairFeature("same-bin", attr=attr, width=width)


@dataclass(frozen=True)
class UtilityModel:
    """Linear-in-parameters utility specification.

    ``direct_features`` define the per-link payoff, ``mutual_features`` the
    reciprocity payoff (must be symmetric in the pair), and
    ``indirect_features`` the friend-of-friend payoff. The popularity channel
    reuses the indirect list, so those two roles always share coefficients.
    """

    direct_features: tuple = ()
    mutual_features: tuple = ()
    indirect_features: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "direct_features", tuple(self.direct_features))
        object.__setattr__(self, "mutual_features", tuple(self.mutual_features))
        object.__setattr__(self, "indirect_features", tuple(self.indirect_features))

    def features(self, part: str) -> tuple:
        if part not in PARTS:
            raise ValidationError(f"unknown utility part {part!r}")
        return getattr(self, f"{part}_features")

    def dims(self) -> tuple:
        return (
            len(self.direct_features),
            len(self.mutual_features),
            len(self.indirect_features),
        )

    def total_dim(self) -> int:
        return sum(self.dims())

    def validate(self, X: CovariateTable) -> None:
        """Resolve every attribute and check mutual features by evaluation."""
        for part in PARTS:
            for f in self.features(part):
                f.matrix(X)
        for f in self.mutual_features:
            m = f.matrix(X)
            if not np.array_equal(m, m.T):
                raise ValidationError(
                    f"mutual feature {f.kind!r} is not symmetric in (i, j)"
                )

    def to_dict(self) -> dict:
        return {
            "direct": [f.to_dict() for f in self.direct_features],
            "mutual": [f.to_dict() for f in self.mutual_features],
            "indirect": [f.to_dict() for f in self.indirect_features],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "UtilityModel":
        return cls(
            direct_features=tuple(PairFeature.from_dict(x) for x in d.get("direct", [])),
            mutual_features=tuple(PairFeature.from_dict(x) for x in d.get("mutual", [])),
            indirect_features=tuple(
                PairFeature.from_dict(x) for x in d.get("indirect", [])
            ),
        )


@dataclass(frozen=True, eq=False)
class Theta:
    """Coefficient vectors for the three utility parts."""

    direct: np.ndarray
    mutual: np.ndarray
    indirect: np.ndarray

    def __post_init__(self):
        for part in PARTS:
            a = np.atleast_1d(np.asarray(getattr(self, part), dtype=np.float64))
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"theta.{part} contains non-finite entries")
            object.__setattr__(self, part, a)

    @classmethod
    def zeros(cls, model: UtilityModel) -> "Theta":
        d, m, v = model.dims()
        return cls(np.zeros(d), np.zeros(m), np.zeros(v))

    @classmethod
    def from_vector(cls, model: UtilityModel, vec) -> "Theta":
        vec = np.asarray(vec, dtype=np.float64).ravel()
        d, m, v = model.dims()
        if vec.size != d + m + v:
            raise ValidationError(
                f"theta vector has {vec.size} entries, model needs {d + m + v}"
            )
        return cls(vec[:d], vec[d : d + m], vec[d + m :])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.direct, self.mutual, self.indirect])


def check_theta(model: UtilityModel, theta: Theta) -> None:
    for part, want in zip(PARTS, model.dims()):
        got = getattr(theta, part).size
        if got != want:
            raise ValidationError(
                f"theta.{part} has {got} coefficients, model has {want} features"
            )


def utility_matrices(model: UtilityModel, theta: Theta, X: CovariateTable):
    """Dense (U, M, V) coefficient-weighted feature sums, zero diagonals."""
    check_theta(model, theta)
    n = X.n
    out = []
    for part in PARTS:
        feats = model.features(part)
        coefs = getattr(theta, part)
        acc = np.zeros((n, n))
        for c, f in zip(coefs, feats):
            if c != 0.0:
                acc += c * f.matrix(X)
        out.append(acc)
    return tuple(out)


def pair_value(
    model: UtilityModel, part: str, theta: Theta, X: CovariateTable, i: int, j: int
) -> float:
    """Linear form sum_f theta_f * feature_f(X_i, X_j) for one utility part."""
    if part not in PARTS:
        raise ValidationError(f"unknown utility part {part!r}")
    if i == j:
        raise DomainError("pair value needs two distinct nodes")
    n = X.n
    if not (0 <= i < n and 0 <= j < n):
        raise DomainError(f"node index out of range for n={n}")
    check_theta(model, theta)
    feats = model.features(part)
    coefs = getattr(theta, part)
    return float(sum(c * f.value(X, i, j) for c, f in zip(coefs, feats)))


def _potential_terms(a: np.ndarray, U: np.ndarray, M: np.ndarray, V: np.ndarray):
    direct = float(np.sum(a * U))
    mutual = float(np.sum(a * a.T * M))
    indirect = float(np.sum((a @ a) * V))
    return direct, mutual, indirect


def potential(g: Network, X: CovariateTable, model: UtilityModel, theta: Theta) -> float:
    """Aggregate incentive scalar for the whole network.

    Sum over ordered pairs of g_ij*u_ij, plus g_ij*g_ji*m_ij (each mutual
    dyad counted twice), plus the ordered-triple sum g_ij*g_jk*v_ik.
    """
    if g.n != X.n:
        raise ValidationError(f"network has {g.n} nodes, covariates have {X.n}")
    U, M, V = utility_matrices(model, theta, X)
    a = g.adj.astype(np.float64)
    return float(sum(_potential_terms(a, U, M, V)))


def delta_potential(
    g: Network, X: CovariateTable, model: UtilityModel, theta: Theta, i: int, j: int
) -> float:
    """Potential with g_ij set minus potential with g_ij clear, in O(n)."""
    if i == j:
        raise DomainError("link toggles need two distinct nodes")
    if g.n != X.n:
        raise ValidationError(f"network has {g.n} nodes, covariates have {X.n}")
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise DomainError(f"node index out of range for n={g.n}")
    U, M, V = utility_matrices(model, theta, X)
    a = g.adj.astype(np.float64)
    return float(
        U[i, j] + 2.0 * M[i, j] * a[j, i] + a[j, :] @ V[i, :] + a[:, i] @ V[:, j]
    )


def utility(
    i: int,
    g: Network,
    X: CovariateTable,
    eps: np.ndarray,
    model: UtilityModel,
    theta: Theta,
) -> float:
    """Payoff of player ``i``: direct (with shocks), reciprocal, indirect and
    popularity terms; the popularity channel uses the indirect coefficients.

    The reciprocal term is doubled to stay increment-compatible with
    :func:`potential` (which counts each mutual dyad once per direction).
    """
    if not (0 <= i < g.n):
        raise DomainError(f"node index {i} out of range for n={g.n}")
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != (g.n, g.n):
        raise ValidationError(f"shock matrix must be {(g.n, g.n)}, got {eps.shape}")
    U, M, V = utility_matrices(model, theta, X)
    a = g.adj.astype(np.float64)
    row = a[i, :]
    direct = float(row @ (U[i, :] + eps[i, :]))
    reciprocal = 2.0 * float(row @ (a[:, i] * M[i, :]))
    indirect = float(row @ (a @ V[i, :]))
    popularity = float(row @ (a[:, i] @ V))
    return direct + reciprocal + indirect + popularity


class ModelContext:
    """Feature tensors bound to one (model, covariates) pair.

    Building the per-part feature stacks once makes utility matrices for a
    fresh theta a handful of tensordots, which keeps the per-iteration cost
    of the posterior sampler flat.
    """

    def __init__(self, model: UtilityModel, X: CovariateTable):
        model.validate(X)
        self.model = model
        self.X = X
        self.n = X.n
        self.pairs = ordered_pairs(X.n)
        self._stacks = {}
        for part in PARTS:
            feats = model.features(part)
            if feats:
                self._stacks[part] = np.stack([f.matrix(X) for f in feats])
            else:
                self._stacks[part] = np.zeros((0, X.n, X.n))

    def matrices(self, theta: Theta):
        check_theta(self.model, theta)
        out = []
        for part in PARTS:
            stack = self._stacks[part]
            coefs = getattr(theta, part)
            if stack.shape[0]:
                out.append(np.tensordot(coefs, stack, axes=1))
            else:
                out.append(np.zeros((self.n, self.n)))
        return tuple(out)

    def potential_from(self, adj: np.ndarray, U, M, V) -> float:
        a = adj.astype(np.float64)
        return float(sum(_potential_terms(a, U, M, V)))
