"""Undirected network state, dyad typing, constraints, and edge-age bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Network",
    "DyadTyper",
    "Constraint",
    "DurationSpec",
    "Spell",
    "canonical_dyad",
    "dyad_index",
    "all_dyads",
    "is_valid",
    "toggle_is_valid",
]


def canonical_dyad(i, j):
    if i == j:
        raise ValueError("self-loops are not allowed")
    return (i, j) if i < j else (j, i)


def dyad_index(i, j):
    """Triangular index of the dyad {i, j} with i < j: j*(j-1)/2 + i."""
    i, j = canonical_dyad(i, j)
    return j * (j - 1) // 2 + i


def all_dyads(n):
    """All unordered node pairs of an n-node network, in triangular-index order."""
    return [(i, j) for j in range(n) for i in range(j)]


@dataclass(frozen=True)
class Spell:
    """A completed edge spell: the dyad's type and its realized age in steps."""

    dyad_type: int
    age: int


class Network:
    """Cross-sectional undirected simple graph with per-edge formation times.

    Node ids are 0-based integers.  The edge set is kept as a hash set of
    canonical (min, max) pairs, with per-node degrees cached incrementally so
    constraint checks stay O(1).  Completed spells are returned to the caller
    on toggle-off rather than accumulated here: the Network is a pure
    cross-sectional state.
    """

    def __init__(self, node_count, edges=(), node_attrs=None, time=0):
        if node_count < 1:
            raise ValueError("node_count must be positive")
        self.node_count = int(node_count)
        self.edges = set()
        self.formation_time = {}
        self.degree = np.zeros(self.node_count, dtype=np.int64)
        self.node_attrs = dict(node_attrs) if node_attrs else {}
        for e in edges:
            self.toggle(e, time)

    @property
    def dyad_count(self):
        n = self.node_count
        return n * (n - 1) // 2

    @property
    def edge_count(self):
        return len(self.edges)

    def has_edge(self, dyad):
        return canonical_dyad(*dyad) in self.edges

    def neighbors(self, i):
        return {b if a == i else a for (a, b) in self.edges if i in (a, b)}

    def toggle(self, dyad, time=0, typer=None):
        """Flip the edge state on ``dyad``.

        Turning an edge on records ``time`` as its formation time.  Turning
        an edge off returns the completed :class:`Spell` (age = time minus
        formation time); turning on returns None.
        """
        i, j = canonical_dyad(*dyad)
        if not (0 <= i < self.node_count and 0 <= j < self.node_count):
            raise ValueError(f"dyad {dyad!r} out of range for {self.node_count} nodes")
        e = (i, j)
        if e in self.edges:
            self.edges.discard(e)
            formed = self.formation_time.pop(e)
            self.degree[i] -= 1
            self.degree[j] -= 1
            k = typer.type_of(i, j) if typer is not None else 0
            return Spell(dyad_type=k, age=time - formed)
        self.edges.add(e)
        self.formation_time[e] = time
        self.degree[i] += 1
        self.degree[j] += 1
        return None

    def copy(self):
        out = Network(self.node_count, node_attrs=self.node_attrs)
        out.edges = set(self.edges)
        out.formation_time = dict(self.formation_time)
        out.degree = self.degree.copy()
        return out

    def edge_mask(self):
        """Edge set as a bitmask over triangular dyad indices (small graphs)."""
        m = 0
        for (i, j) in self.edges:
            m |= 1 << dyad_index(i, j)
        return m

    @classmethod
    def from_edge_mask(cls, node_count, mask, time=0):
        net = cls(node_count)
        for d, (i, j) in enumerate(all_dyads(node_count)):
            if mask >> d & 1:
                net.toggle((i, j), time)
        return net

    def __eq__(self, other):
        return (
            isinstance(other, Network)
            and self.node_count == other.node_count
            and self.edges == other.edges
        )

    def __repr__(self):
        return f"Network(n={self.node_count}, edges={sorted(self.edges)})"

    # -- edge-list text serialization ("nodes=<n>" header, 1-based ids) --

    def to_edgelist(self):
        lines = [f"nodes={self.node_count}"]
        for (i, j) in sorted(self.edges):
            lines.append(f"{i + 1} {j + 1} {self.formation_time[(i, j)]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_edgelist(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("nodes="):
            raise ValueError("edge list must start with a 'nodes=<n>' header")
        net = cls(int(lines[0].split("=", 1)[1]))
        for ln in lines[1:]:
            i, j, t = ln.split()
            net.toggle((int(i) - 1, int(j) - 1), int(t))
        return net


class DyadTyper:
    """Dyad-independent typing from per-node categorical labels.

    The type of a dyad depends only on the (unordered) pair of endpoint
    labels, never on any edge state.  With no labels every dyad has type 0.
    """

    def __init__(self, labels=None):
        if labels is None:
            self.labels = None
            self.n_labels = 1
            self._pair_type = np.zeros((1, 1), dtype=np.int64)
        else:
            self.labels = np.asarray(labels, dtype=np.int64)
            if self.labels.min() < 0:
                raise ValueError("labels must be nonnegative integers")
            L = int(self.labels.max()) + 1
            self.n_labels = L
            # unordered label pairs -> consecutive type ids
            self._pair_type = np.zeros((L, L), dtype=np.int64)
            t = 0
            for a in range(L):
                for b in range(a, L):
                    self._pair_type[a, b] = self._pair_type[b, a] = t
                    t += 1

    @property
    def n_types(self):
        L = self.n_labels
        return L * (L + 1) // 2

    def type_of(self, i, j):
        if self.labels is None:
            return 0
        return int(self._pair_type[self.labels[i], self.labels[j]])

    def type_vector(self, n):
        """Per-dyad type over the n-node dyad set, in triangular-index order."""
        out = np.zeros(n * (n - 1) // 2, dtype=np.int64)
        for d, (i, j) in enumerate(all_dyads(n)):
            out[d] = self.type_of(i, j)
        return out


HOMOGENEOUS = DyadTyper()


@dataclass(frozen=True)
class Constraint:
    """Cross-sectional degree constraint on the instantaneous network.

    ``none`` and ``max-degree`` support both cross-sectional and durational
    exactness guarantees; ``min-degree`` supports the cross-sectional
    guarantee only (an edge at the bound cannot be toggled off).
    """

    kind: str = "none"
    bound: int = 0

    KINDS = ("none", "max-degree", "min-degree")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown constraint kind {self.kind!r}")

    @classmethod
    def none(cls):
        return cls("none")

    @classmethod
    def max_degree(cls, b):
        return cls("max-degree", int(b))

    @classmethod
    def min_degree(cls, b):
        return cls("min-degree", int(b))

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if text in ("none", ""):
            return cls.none()
        for kind in ("max-degree", "min-degree"):
            if text.startswith(kind + "(") and text.endswith(")"):
                return cls(kind, int(text[len(kind) + 1 : -1]))
        raise ValueError(f"cannot parse constraint {text!r}")

    def __str__(self):
        return self.kind if self.kind == "none" else f"{self.kind}({self.bound})"

    @property
    def cross_sectional_exact(self):
        """Whether single-toggle connectivity (assumption on state space) holds."""
        return True

    @property
    def durationally_exact(self):
        """Whether any present edge can always be toggled off validly."""
        return self.kind in ("none", "max-degree")


@dataclass(frozen=True)
class DurationSpec:
    """Per-dyad-type mean durations: base vector D0 and step scale lambda.

    Realized durations are D_k = lam * D0[k], in units of one chain step.
    """

    d0: tuple
    lam: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "d0", tuple(float(x) for x in np.atleast_1d(self.d0)))
        if any(x <= 0 for x in self.d0):
            raise ValueError("base durations must be positive")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")

    @property
    def d(self):
        return np.array(self.d0) * self.lam

    def d_of(self, k):
        return self.d0[k] * self.lam


def is_valid(net, constraint):
    """Whether every node degree satisfies the constraint bound."""
    if constraint.kind == "none":
        return True
    if constraint.kind == "max-degree":
        return bool(net.degree.max() <= constraint.bound)
    return bool(net.degree.min() >= constraint.bound)


def toggle_is_valid(net, dyad, constraint):
    """Whether toggling ``dyad`` keeps the instantaneous network valid.

    Evaluated on the post-toggle instantaneous network; never on union or
    intersection networks.
    """
    if constraint.kind == "none":
        return True
    i, j = canonical_dyad(*dyad)
    delta = -1 if net.has_edge((i, j)) else 1
    if constraint.kind == "max-degree":
        return (
            net.degree[i] + delta <= constraint.bound
            and net.degree[j] + delta <= constraint.bound
        )
    return (
        net.degree[i] + delta >= constraint.bound
        and net.degree[j] + delta >= constraint.bound
    )
