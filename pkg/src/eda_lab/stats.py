"""Network statistics, change statistics, and the ergm potential."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .net import Network, canonical_dyad

__all__ = [
    "Term",
    "Model",
    "parse_term",
    "stat",
    "change_stat",
    "conditional_logodds",
    "potential_ratio",
    "read_model_file",
    "write_model_file",
]

_TERM_RE = re.compile(r"^(edges|degree|gwesp|nodematch)(?:\((.*)\))?$")


@dataclass(frozen=True)
class Term:
    """A single ergm term: edges, degree(k), gwesp(alpha, fixed), or nodematch(attr)."""

    kind: str
    k: int = 0
    alpha: float = 0.0
    attr: str = ""

    def label(self):
        if self.kind == "edges":
            return "edges"
        if self.kind == "degree":
            return f"degree({self.k})"
        if self.kind == "gwesp":
            return f"gwesp({self.alpha:g})"
        return f"nodematch({self.attr})"

    def __str__(self):
        return self.label()


def parse_term(spec):
    """Parse "edges", "degree(1)", "gwesp(0.5)", or "nodematch(attr)"."""
    m = _TERM_RE.match(spec.strip())
    if not m:
        raise ValueError(f"cannot parse term {spec!r}")
    kind, arg = m.group(1), m.group(2)
    if kind == "edges":
        return Term("edges")
    if arg is None:
        raise ValueError(f"term {kind!r} requires an argument")
    # tolerate an explicit "fixed" marker in gwesp specs
    arg = arg.split(",")[0].strip()
    if kind == "degree":
        k = int(arg)
        if k < 0:
            raise ValueError("degree(k) requires k >= 0")
        return Term("degree", k=k)
    if kind == "gwesp":
        alpha = float(arg)
        if alpha < 0:
            raise ValueError("gwesp decay must be nonnegative")
        return Term("gwesp", alpha=alpha)
    return Term("nodematch", attr=arg)


def _gwesp_weight(alpha, s):
    """Weight of an edge with s shared partners: 1 - (1 - e^-alpha)^s."""
    return 1.0 - (1.0 - math.exp(-alpha)) ** s


def _shared_partners(net, i, j):
    return len(net.neighbors(i) & net.neighbors(j) - {i, j})


def stat(term, net):
    """Global statistic g_t(y)."""
    if term.kind == "edges":
        return float(net.edge_count)
    if term.kind == "degree":
        return float(np.count_nonzero(net.degree == term.k))
    if term.kind == "nodematch":
        labels = net.node_attrs[term.attr]
        return float(sum(1 for (i, j) in net.edges if labels[i] == labels[j]))
    # gwesp: e^alpha * sum_s w(s) * EP_s over edges with s >= 1 shared partners
    total = 0.0
    for (i, j) in net.edges:
        s = _shared_partners(net, i, j)
        if s:
            total += _gwesp_weight(term.alpha, s)
    return math.exp(term.alpha) * total


def change_stat(term, net, dyad):
    """Exact change statistic: g(y with dyad on) - g(y with dyad off).

    Computed incrementally from the state of ``net`` without a full recount;
    the result does not depend on the current edge state of ``dyad``.
    """
    i, j = canonical_dyad(*dyad)
    if term.kind == "edges":
        return 1.0
    present = net.has_edge((i, j))
    if term.kind == "degree":
        # endpoint degrees in the graph with the dyad off
        di = int(net.degree[i]) - (1 if present else 0)
        dj = int(net.degree[j]) - (1 if present else 0)
        k = term.k
        return float(
            (di + 1 == k) - (di == k) + (dj + 1 == k) - (dj == k)
        )
    if term.kind == "nodematch":
        labels = net.node_attrs[term.attr]
        return 1.0 if labels[i] == labels[j] else 0.0
    # gwesp: work in the graph with the dyad off
    alpha = term.alpha
    if present:
        formed = net.formation_time[(i, j)]
        net.toggle((i, j))
    try:
        ni = net.neighbors(i)
        nj = net.neighbors(j)
        common = (ni & nj) - {i, j}
        delta = _gwesp_weight(alpha, len(common))
        decay = 1.0 - math.exp(-alpha)
        for u in common:
            # edges (i,u) and (j,u) each gain one shared partner
            for a, b in ((i, u), (j, u)):
                s = _shared_partners(net, a, b)
                delta += decay**s * math.exp(-alpha)
    finally:
        if present:
            net.toggle((i, j), formed)
    return math.exp(alpha) * delta


@dataclass
class Model:
    """An ergm potential theta . g(y): ordered terms with real coefficients."""

    terms: list
    theta: np.ndarray

    def __post_init__(self):
        self.terms = list(self.terms)
        self.theta = np.asarray(self.theta, dtype=float)
        if len(self.terms) != len(self.theta):
            raise ValueError("terms and coefficients must have equal length")

    def stats(self, net):
        return np.array([stat(t, net) for t in self.terms])

    def potential(self, net):
        return float(self.theta @ self.stats(net))

    def change_stats(self, net, dyad):
        return np.array([change_stat(t, net, dyad) for t in self.terms])


def conditional_logodds(model, net, dyad):
    """theta . change_stats: log pi(dyad on) / pi(dyad off), normalization-free."""
    total = 0.0
    for t, th in zip(model.terms, model.theta):
        if th == 0.0:
            continue
        total += th * change_stat(t, net, dyad)
    return total


def potential_ratio(model, net_i, net_j):
    """pi(j)/pi(i) = exp(theta . (g(j) - g(i))); j need not be a valid state."""
    if net_i.node_count != net_j.node_count:
        raise ValueError("networks must share a node set")
    return math.exp(model.potential(net_j) - model.potential(net_i))


# -- model file format: lines of "term=<spec> coef=<real>" --

def read_model_file(text):
    terms, theta = [], []
    for ln in text.splitlines():
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        fields = dict(
            part.split("=", 1) for part in ln.replace(",", " ").split() if "=" in part
        )
        if "term" not in fields or "coef" not in fields:
            raise ValueError(f"model line needs term= and coef=: {ln!r}")
        terms.append(parse_term(fields["term"]))
        theta.append(float(fields["coef"]))
    if not terms:
        raise ValueError("empty model file")
    return Model(terms, np.array(theta))


def write_model_file(model):
    return "".join(
        f"term={t.label()} coef={float(c)!r}\n" for t, c in zip(model.terms, model.theta)
    )
