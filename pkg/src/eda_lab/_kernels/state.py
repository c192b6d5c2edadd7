"""Flat array state shared by the pure-Python and compiled simulation kernels.

The simulators run on a ChainState (adjacency matrix, degree cache, and
swap-remove edge/non-edge membership lists) plus a CompiledModel (term
descriptors as parallel arrays).  Both kernel backends consume exactly the
same arrays and the same random-number stream, so their outputs are
bit-identical.
"""

from __future__ import annotations

import numpy as np

from ..net import HOMOGENEOUS, Network, all_dyads

# term kind codes shared with the kernels
KIND_EDGES = 0
KIND_DEGREE = 1
KIND_GWESP = 2
KIND_NODEMATCH = 3

# constraint codes
CONS_NONE = 0
CONS_MAX_DEGREE = 1
CONS_MIN_DEGREE = 2

_CONS_CODE = {"none": CONS_NONE, "max-degree": CONS_MAX_DEGREE, "min-degree": CONS_MIN_DEGREE}


class CompiledModel:
    """Term descriptors flattened for the kernels.

    ``terms`` is the model's term list optionally extended with extra
    monitored terms; coefficients for the extras are zero so they contribute
    to the tracked statistic vector but not to acceptance ratios.
    """

    def __init__(self, terms, theta, n, node_attrs=None):
        terms = list(terms)
        theta = np.asarray(theta, dtype=np.float64)
        if len(theta) != len(terms):
            raise ValueError("terms and theta must have equal length")
        T = len(terms)
        self.terms = terms
        self.theta = theta.copy()
        self.kinds = np.zeros(T, dtype=np.int64)
        self.kparam = np.zeros(T, dtype=np.int64)
        self.ea = np.ones(T, dtype=np.float64)       # exp(alpha)
        self.eminus = np.ones(T, dtype=np.float64)   # exp(-alpha)
        self.decay = np.zeros(T, dtype=np.float64)   # 1 - exp(-alpha)
        self.dstat = np.zeros(T, dtype=np.float64)   # change-stat scratch
        attr_rows = {}
        labels = []
        for t_idx, term in enumerate(terms):
            if term.kind == "edges":
                self.kinds[t_idx] = KIND_EDGES
            elif term.kind == "degree":
                self.kinds[t_idx] = KIND_DEGREE
                self.kparam[t_idx] = term.k
            elif term.kind == "gwesp":
                self.kinds[t_idx] = KIND_GWESP
                self.ea[t_idx] = np.exp(term.alpha)
                self.eminus[t_idx] = np.exp(-term.alpha)
                self.decay[t_idx] = 1.0 - np.exp(-term.alpha)
            elif term.kind == "nodematch":
                self.kinds[t_idx] = KIND_NODEMATCH
                if term.attr not in attr_rows:
                    if node_attrs is None or term.attr not in node_attrs:
                        raise ValueError(f"network lacks node attribute {term.attr!r}")
                    attr_rows[term.attr] = len(labels)
                    labels.append(np.asarray(node_attrs[term.attr], dtype=np.int64))
                self.kparam[t_idx] = attr_rows[term.attr]
            else:
                raise ValueError(f"unsupported term kind {term.kind!r}")
        self.labels = (
            np.vstack(labels) if labels else np.zeros((0, n), dtype=np.int64)
        )
        self.n_terms = T


class ChainState:
    """Mutable simulation state over the dyads of an n-node network.

    Dyads are addressed by triangular index.  ``counts`` packs the mutable
    scalars [edge count m, non-edge count, within-phase-added count, edge
    bitmask] so both backends can update them through one int64 array.  The
    bitmask slot is only maintained when the dyad count fits in 62 bits.
    """

    def __init__(self, net: Network, typer=HOMOGENEOUS, constraint=None):
        n = net.node_count
        N = n * (n - 1) // 2
        self.n = n
        self.N = N
        self.adj = np.zeros((n, n), dtype=np.uint8)
        self.deg = np.zeros(n, dtype=np.int64)
        dyads = all_dyads(n)
        self.dyad_i = np.array([d[0] for d in dyads], dtype=np.int64)
        self.dyad_j = np.array([d[1] for d in dyads], dtype=np.int64)
        self.type_of = typer.type_vector(n)
        self.n_types = typer.n_types
        self.edge_list = np.zeros(N, dtype=np.int64)
        self.edge_pos = np.full(N, -1, dtype=np.int64)
        self.nonedge_list = np.arange(N, dtype=np.int64)
        self.nonedge_pos = np.arange(N, dtype=np.int64)
        self.added_list = np.zeros(N, dtype=np.int64)
        self.added_pos = np.full(N, -1, dtype=np.int64)
        self.formation_step = np.full(N, -1, dtype=np.int64)
        self.counts = np.zeros(4, dtype=np.int64)
        self.counts[1] = N
        self.track_mask = N <= 62
        if constraint is None:
            self.cons_kind = CONS_NONE
            self.cons_bound = 0
        else:
            self.cons_kind = _CONS_CODE[constraint.kind]
            self.cons_bound = constraint.bound
        self.stat_vec = np.zeros(0, dtype=np.float64)
        dyad_index = {}
        for d in range(N):
            dyad_index[(int(self.dyad_i[d]), int(self.dyad_j[d]))] = d
        self._dyad_index = dyad_index
        for (i, j) in net.edges:
            self._insert_edge(dyad_index[(i, j)], net.formation_time[(i, j)])

    def _insert_edge(self, d, step):
        i, j = int(self.dyad_i[d]), int(self.dyad_j[d])
        self.adj[i, j] = self.adj[j, i] = 1
        self.deg[i] += 1
        self.deg[j] += 1
        m = self.counts[0]
        self.edge_list[m] = d
        self.edge_pos[d] = m
        self.counts[0] = m + 1
        p = self.nonedge_pos[d]
        nm = self.counts[1]
        last = self.nonedge_list[nm - 1]
        self.nonedge_list[p] = last
        self.nonedge_pos[last] = p
        self.nonedge_pos[d] = -1
        self.counts[1] = nm - 1
        self.formation_step[d] = step
        if self.track_mask:
            self.counts[3] |= np.int64(1) << np.int64(d)

    @property
    def m(self):
        return int(self.counts[0])

    def attach_model(self, model: CompiledModel, net: Network):
        """Initialize the tracked statistic vector from a full recount."""
        from ..stats import stat

        self.stat_vec = np.array(
            [stat(t, net) for t in model.terms], dtype=np.float64
        )

    def to_network(self, time=0):
        """Materialize the current state as a Network with formation times."""
        net = Network(self.n)
        for idx in range(self.m):
            d = int(self.edge_list[idx])
            net.toggle(
                (int(self.dyad_i[d]), int(self.dyad_j[d])),
                int(self.formation_step[d]),
            )
        return net

    def edge_mask(self):
        if not self.track_mask:
            raise ValueError("bitmask tracking disabled for this dyad count")
        return int(self.counts[3])
