import logging
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from varinf.errors import GraphError, ModelParseError


#1. Graph structures
@dataclass(frozen=True, eq=False)
class Graph:
    """
    Undirected simple graph on the nodes 0..N-1 with canonically ordered edges.

    Edges are stored as (i, j) with i < j in the order they were given; the edge position is the
    key for every per-edge array in the package (potentials, counting numbers, pseudo-marginals).

    Parameters:
    - node_count (int): Number of nodes N, at least 1.
    - edges (tuple of (int, int)): Edge list with i < j, no duplicates, endpoints in [0, N).

    Derived attributes:
    - heads, tails (np.ndarray): Integer arrays with the first and second endpoint of every edge.
    - adjacency (tuple of tuples): Neighbour list N(i) for every node.
    - degrees (np.ndarray): d_i = |N(i)|.
    - incident (tuple of tuples): For every node, the (edge index, neighbour) pairs touching it.
    """

    node_count: int
    edges: tuple
    heads: np.ndarray = field(init=False, repr=False)
    tails: np.ndarray = field(init=False, repr=False)
    adjacency: tuple = field(init=False, repr=False)
    degrees: np.ndarray = field(init=False, repr=False)
    incident: tuple = field(init=False, repr=False)

    def __post_init__(self):
        edges = tuple((int(i), int(j)) for i, j in self.edges)
        object.__setattr__(self, 'edges', edges)
        check_graph(self)

        heads = np.array([i for i, _ in edges], dtype=np.int64)
        tails = np.array([j for _, j in edges], dtype=np.int64)
        incident = [[] for _ in range(self.node_count)]
        for k, (i, j) in enumerate(edges):
            incident[i].append((k, j))
            incident[j].append((k, i))
        adjacency = tuple(tuple(other for _, other in pairs) for pairs in incident)
        degrees = np.array([len(nbrs) for nbrs in adjacency], dtype=np.int64)
        for arr in (heads, tails, degrees):
            arr.setflags(write=False)

        object.__setattr__(self, 'heads', heads)
        object.__setattr__(self, 'tails', tails)
        object.__setattr__(self, 'adjacency', adjacency)
        object.__setattr__(self, 'degrees', degrees)
        object.__setattr__(self, 'incident', tuple(tuple(pairs) for pairs in incident))

    @property
    def edge_count(self):
        return len(self.edges)

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.node_count == other.node_count and self.edges == other.edges

    def __hash__(self):
        return hash((self.node_count, self.edges))

    def edge_sum(self, values):
        """Sum a per-edge array onto both endpoints: out_i = sum over j in N(i) of values_ij."""
        values = np.asarray(values, dtype=float)
        return (np.bincount(self.heads, weights=values, minlength=self.node_count)
                + np.bincount(self.tails, weights=values, minlength=self.node_count))

    def to_networkx(self):
        g = nx.Graph()
        g.add_nodes_from(range(self.node_count))
        g.add_edges_from(self.edges)
        return g

    def components(self):
        """Connected components as sorted node lists, ordered by their smallest node."""
        comps = [sorted(c) for c in nx.connected_components(self.to_networkx())]
        return sorted(comps, key=lambda c: c[0])


def check_graph(graph):
    """
    Structural checker for Graph invariants.

    Verifies N >= 1, that every edge satisfies 0 <= i < j < N (which rules out self-loops) and that
    no edge appears twice. Raises GraphError describing the first violation; returns True otherwise.
    """
    n = graph.node_count
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise GraphError(f"node_count must be a positive integer, got {n!r}")
    seen = set()
    for i, j in graph.edges:
        if i == j:
            raise GraphError(f"self-loop on node {i}")
        if not (0 <= i < j < n):
            raise GraphError(f"edge ({i}, {j}) is not canonical (need 0 <= i < j < {n})")
        if (i, j) in seen:
            raise GraphError(f"duplicate edge ({i}, {j})")
        seen.add((i, j))
    # degree bookkeeping, checked only when the derived arrays exist
    degrees = getattr(graph, 'degrees', None)
    if degrees is not None and int(degrees.sum()) != 2 * len(graph.edges):
        raise GraphError("degree sum does not equal twice the edge count")
    return True


#2. Graph generators
def _require_positive(name, value):
    if int(value) != value or value < 1:
        raise GraphError(f"{name} must be a positive integer, got {value!r}")


def make_complete(n):
    """Complete graph K_n with edges in lexicographic order."""
    _require_positive('n', n)
    rows, cols = np.triu_indices(n, k=1)
    return Graph(n, tuple(zip(rows.tolist(), cols.tolist())))


def make_grid(rows, cols):
    """
    4-neighbour lattice with rows x cols nodes; node (r, c) has index r * cols + c.

    The edge count is rows * (cols - 1) + cols * (rows - 1).
    """
    _require_positive('rows', rows)
    _require_positive('cols', cols)
    edges = []
    for r in range(rows):
        for c in range(cols):
            node = r * cols + c
            if c + 1 < cols:
                edges.append((node, node + 1))
            if r + 1 < rows:
                edges.append((node, node + cols))
    return Graph(rows * cols, tuple(sorted(edges)))


def make_erdos_renyi(n, p, seed):
    """
    Erdős–Rényi G(n, p) graph.

    Each of the n(n-1)/2 candidate pairs, visited in lexicographic order, is kept independently with
    probability p using numpy's PCG64 generator seeded with `seed`. Disconnected samples are returned
    as they are.
    """
    _require_positive('n', n)
    if not 0.0 <= p <= 1.0:
        raise GraphError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    rows, cols = np.triu_indices(n, k=1)
    keep = rng.random(rows.size) < p
    graph = Graph(n, tuple(zip(rows[keep].tolist(), cols[keep].tolist())))
    logging.debug(f"Sampled G({n}, {p}) with {graph.edge_count} edges (seed {seed})")
    return graph


def make_random_tree(n, seed):
    """Random recursive tree: node k >= 1 attaches to a uniformly chosen node in [0, k)."""
    _require_positive('n', n)
    rng = np.random.default_rng(seed)
    edges = []
    for k in range(1, n):
        parent = int(rng.integers(0, k))
        edges.append((parent, k))
    return Graph(n, tuple(sorted(edges)))


#3. Ising models
@dataclass(frozen=True, eq=False)
class IsingModel:
    """
    Binary pairwise model with energy E(x) = -sum_ij J_ij x_i x_j - sum_i theta_i x_i over x in {-1, +1}^N.

    Parameters:
    - graph (Graph): Underlying graph.
    - J (np.ndarray): One pairwise potential per edge, aligned with graph.edges.
    - theta (np.ndarray): One local potential per node.
    """

    graph: Graph
    J: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        J = np.array(self.J, dtype=float).reshape(-1)
        theta = np.array(self.theta, dtype=float).reshape(-1)
        if J.size != self.graph.edge_count:
            raise GraphError(f"expected {self.graph.edge_count} pairwise potentials, got {J.size}")
        if theta.size != self.graph.node_count:
            raise GraphError(f"expected {self.graph.node_count} local potentials, got {theta.size}")
        if not (np.all(np.isfinite(J)) and np.all(np.isfinite(theta))):
            raise GraphError("potentials must be finite")
        J.setflags(write=False)
        theta.setflags(write=False)
        object.__setattr__(self, 'J', J)
        object.__setattr__(self, 'theta', theta)

    @property
    def attractive(self):
        return bool(np.all(self.J > 0))

    def energy(self, states):
        """Energy of one state (shape (N,)) or a batch of states (shape (S, N)) with entries ±1."""
        x = np.asarray(states, dtype=float)
        g = self.graph
        pair = (x[..., g.heads] * x[..., g.tails]) @ self.J
        return -pair - x @ self.theta

    def scaled(self, zeta_pair=1.0, zeta_node=1.0):
        """Model with potentials multiplied by the given scale factors (scalars or arrays)."""
        return IsingModel(self.graph, self.J * zeta_pair, self.theta * zeta_node)


def sample_ising(graph, j_low, j_high, theta_half_width, seed):
    """
    Draw an Ising model on `graph` with i.i.d. uniform potentials.

    J_ij ~ Uniform(j_low, j_high) per edge, then theta_i ~ Uniform(-w, w) per node, from one PCG64
    stream seeded with `seed`. Attractive models use j_low = 0, mixed ones j_low = -j_high.

    Raises:
    - GraphError: If j_low >= j_high or the half-width is negative.
    """
    if not j_low < j_high:
        raise GraphError(f"pairwise range is inverted or empty: ({j_low}, {j_high})")
    if theta_half_width < 0:
        raise GraphError(f"theta half-width must be nonnegative, got {theta_half_width}")
    rng = np.random.default_rng(seed)
    J = rng.uniform(j_low, j_high, size=graph.edge_count)
    theta = rng.uniform(-theta_half_width, theta_half_width, size=graph.node_count)
    return IsingModel(graph, J, theta)


def pairwise_range(model_class, j_hat):
    """Sampling interval for J: (0, Ĵ) for attractive models, (-Ĵ, Ĵ) for mixed ones."""
    if model_class == 'attractive':
        return 0.0, float(j_hat)
    if model_class == 'mixed':
        return -float(j_hat), float(j_hat)
    raise GraphError(f"unknown model class '{model_class}'")


#4. Model files
def serialize_model(model):
    """
    Serialize a model to the line-oriented text format:

        ising N E
        node <i> <theta_i>        (N lines)
        edge <i> <j> <J_ij>       (E lines, i < j)

    Floats are written with 17 significant digits so parsing restores them exactly.
    """
    g = model.graph
    lines = [f"ising {g.node_count} {g.edge_count}"]
    lines += [f"node {i} {model.theta[i]:.17g}" for i in range(g.node_count)]
    lines += [f"edge {i} {j} {model.J[k]:.17g}" for k, (i, j) in enumerate(g.edges)]
    return "\n".join(lines) + "\n"


def _parse_number(token, kind, line, name):
    try:
        value = kind(token)
    except ValueError:
        raise ModelParseError(f"cannot read {name} from '{token}'", line=line, field=name)
    if kind is float and not np.isfinite(value):
        raise ModelParseError(f"{name} must be finite, got '{token}'", line=line, field=name)
    return value


def parse_model(text):
    """
    Parse the text format written by serialize_model.

    Blank lines and lines starting with '#' are ignored. Node lines may appear in any order but every
    node must be listed exactly once; edge endpoints must be existing nodes with i < j.

    Raises:
    - ModelParseError: On the first malformed entry, naming its line and field.
    """
    entries = [(no, raw.split()) for no, raw in enumerate(text.splitlines(), start=1)
               if raw.strip() and not raw.lstrip().startswith('#')]
    if not entries:
        raise ModelParseError("empty model file", line=1, field='header')

    header_line, header = entries[0]
    if len(header) != 3 or header[0] != 'ising':
        raise ModelParseError("expected header 'ising N E'", line=header_line, field='header')
    n = _parse_number(header[1], int, header_line, 'N')
    m = _parse_number(header[2], int, header_line, 'E')
    if n < 1 or m < 0:
        raise ModelParseError(f"invalid sizes N={n}, E={m}", line=header_line, field='header')

    theta = [None] * n
    edges, J, seen = [], [], set()
    for line, parts in entries[1:]:
        kind = parts[0]
        if kind == 'node':
            if len(parts) != 3:
                raise ModelParseError("expected 'node <i> <theta>'", line=line, field='node')
            i = _parse_number(parts[1], int, line, 'i')
            if not 0 <= i < n:
                raise ModelParseError(f"node {i} outside [0, {n})", line=line, field='i')
            if theta[i] is not None:
                raise ModelParseError(f"node {i} listed twice", line=line, field='i')
            theta[i] = _parse_number(parts[2], float, line, 'theta')
        elif kind == 'edge':
            if len(parts) != 4:
                raise ModelParseError("expected 'edge <i> <j> <J>'", line=line, field='edge')
            i = _parse_number(parts[1], int, line, 'i')
            j = _parse_number(parts[2], int, line, 'j')
            if not (0 <= i < j < n):
                raise ModelParseError(f"edge ({i}, {j}) does not join two nodes with i < j < {n}",
                                      line=line, field='j' if 0 <= i < n else 'i')
            if (i, j) in seen:
                raise ModelParseError(f"edge ({i}, {j}) listed twice", line=line, field='edge')
            seen.add((i, j))
            edges.append((i, j))
            J.append(_parse_number(parts[3], float, line, 'J'))
        else:
            raise ModelParseError(f"unknown entry '{kind}'", line=line, field='kind')

    missing = [i for i, t in enumerate(theta) if t is None]
    if missing:
        raise ModelParseError(f"missing node lines for {missing[:5]}", line=header_line, field='N')
    if len(edges) != m:
        raise ModelParseError(f"header announces {m} edges but {len(edges)} were listed",
                              line=header_line, field='E')
    return IsingModel(Graph(n, tuple(edges)), np.array(J, dtype=float), np.array(theta, dtype=float))
