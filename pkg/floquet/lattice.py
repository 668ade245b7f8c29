"""
Lattices the Floquet circuits run on.

A LatticeGraph carries its qubits, its couplings and a proper edge coloring
of those couplings: every color class is one layer of two-qubit gates that
can be applied in parallel.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from floquet.errors import DuplicateEdge, InvalidGraph, \
        MalformedCouplingMap, PatternError, SelfLoop

logger = logging.getLogger(__name__)

DATA_DIR = Path(__file__).parent / 'data'

Edge = Tuple[int, int]


class LatticeKind(IntEnum):
    """Where a graph came from."""
    HeavyHex = 0
    Chain = 1
    Custom = 2


class PatternKind(IntEnum):
    """The initial product states the simulator knows about."""
    Stripe = 0
    DomainWall = 1
    Polarized = 2
    Explicit = 3


@dataclass(frozen=True)
class LatticeGraph():
    """
    Qubits, couplings and the gate layers derived from them.

    Edges are stored as (min, max) pairs. The layers partition the edges and
    no two edges of a layer share a vertex. Coordinates are optional planar
    positions, one (x, y) pair per vertex.
    """
    num_qubits: int
    edges: Tuple[Edge, ...]
    layers: Tuple[Tuple[Edge, ...], ...]
    coords: Optional[Tuple[Tuple[float, float], ...]] = None
    kind: LatticeKind = LatticeKind.Custom
    name: str = ''
    _incident: Tuple[Tuple[Edge, ...], ...] = field(
        init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise InvalidGraph('a graph needs at least one vertex')
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise SelfLoop('self-loop on vertex {}'.format(i))
            if i > j:
                raise InvalidGraph('edge ({}, {}) is not ordered'.format(i, j))
            if i < 0 or j >= self.num_qubits:
                raise InvalidGraph(
                    'edge ({}, {}) outside [0, {})'.format(i, j, self.num_qubits))
            if (i, j) in seen:
                raise DuplicateEdge('edge ({}, {}) listed twice'.format(i, j))
            seen.add((i, j))
        layered = [edge for layer in self.layers for edge in layer]
        if len(layered) != len(seen) or set(layered) != seen:
            raise InvalidGraph('layers must partition the edge set')
        for layer in self.layers:
            touched = [v for edge in layer for v in edge]
            if len(set(touched)) != len(touched):
                raise InvalidGraph('two edges of one layer share a vertex')
        if self.coords is not None and len(self.coords) != self.num_qubits:
            raise InvalidGraph('need one coordinate pair per vertex')

        incident = [[] for _ in range(self.num_qubits)]
        for edge in self.edges:
            incident[edge[0]].append(edge)
            incident[edge[1]].append(edge)
        object.__setattr__(
            self, '_incident', tuple(tuple(sorted(e)) for e in incident))

    def incident_edges(self, vertex: int) -> Tuple[Edge, ...]:
        """Edges touching vertex, sorted."""
        return self._incident[vertex]

    def degree(self, vertex: int) -> int:
        """Number of couplings of a vertex."""
        return len(self._incident[vertex])

    def neighbours(self, vertex: int) -> Tuple[int, ...]:
        """Vertices coupled to vertex."""
        return tuple(i if j == vertex else j
                     for i, j in self._incident[vertex])

    @property
    def max_degree(self) -> int:
        """The largest vertex degree."""
        return max((len(e) for e in self._incident), default=0)

    @property
    def active_qubits(self) -> Tuple[int, ...]:
        """Vertices with at least one coupling; every vertex if none has."""
        if not self.edges:
            return tuple(range(self.num_qubits))
        return tuple(v for v in range(self.num_qubits) if self._incident[v])

    def to_networkx(self) -> nx.Graph:
        """The graph as networkx sees it, positions included."""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.num_qubits))
        graph.add_edges_from(self.edges)
        if self.coords is not None:
            nx.set_node_attributes(
                graph, dict(enumerate(self.coords)), 'pos')
        return graph

    def is_bipartite(self) -> bool:
        """True if the vertices admit a 2-coloring."""
        return nx.is_bipartite(self.to_networkx())

    def rows(self) -> Tuple[int, ...]:
        """Row index of every vertex in the planar embedding."""
        if self.coords is None:
            raise PatternError('graph {!r} has no coordinates'.format(self.name))
        return tuple(int(math.floor(y + 1e-9)) for _, y in self.coords)


@dataclass(frozen=True)
class InitialPattern():
    """A computational-basis product state, one bit per qubit."""
    bits: Tuple[int, ...]
    label: PatternKind

    def __post_init__(self):
        if any(bit not in (0, 1) for bit in self.bits):
            raise PatternError('pattern bits must be 0 or 1')
        if self.label == PatternKind.Polarized and any(self.bits):
            raise PatternError('a polarized pattern is all zeros')

    def __len__(self):
        return len(self.bits)

    def magnetisation(self) -> np.ndarray:
        """<Z_j> of the pattern: +1 for |0>, -1 for |1>."""
        return 1.0 - 2.0 * np.asarray(self.bits, dtype=float)

    def text(self) -> str:
        """The pattern as a string of '0' and '1'."""
        return ''.join(str(bit) for bit in self.bits)


@dataclass(frozen=True)
class MeasureSet():
    """The qubits a magnetisation is averaged over."""
    qubits: Tuple[int, ...]

    def __post_init__(self):
        if not self.qubits:
            raise PatternError('a measure set needs at least one qubit')
        if list(self.qubits) != sorted(set(self.qubits)):
            raise PatternError('measure set must be sorted and unique')
        if self.qubits[0] < 0:
            raise PatternError('negative qubit index in measure set')

    def __len__(self):
        return len(self.qubits)


def measure_set(graph: LatticeGraph, qubits: Optional[Iterable[int]] = None):
    """Build a measure set; defaults to every coupled qubit of the graph."""
    if qubits is None:
        chosen = graph.active_qubits
    else:
        chosen = tuple(sorted(set(int(q) for q in qubits)))
    if chosen and chosen[-1] >= graph.num_qubits:
        raise PatternError('qubit {} not in a graph of {} qubits'.format(
            chosen[-1], graph.num_qubits))
    return MeasureSet(chosen)


def color_edges(num_qubits: int, edges: Iterable[Edge]):
    """
    Partition edges into layers of vertex-disjoint edges.

    Greedy coloring in (min, max) order first. If that needs more colors than
    the maximum degree and the graph is bipartite, fall back to the König
    alternating-path coloring, which always reaches the maximum degree.
    """
    ordered = sorted((min(e), max(e)) for e in edges)
    if not ordered:
        return ()
    degree = [0] * num_qubits
    for i, j in ordered:
        degree[i] += 1
        degree[j] += 1
    max_degree = max(degree)

    colors = {}
    used = [set() for _ in range(num_qubits)]
    for i, j in ordered:
        color = 0
        while color in used[i] or color in used[j]:
            color += 1
        colors[(i, j)] = color
        used[i].add(color)
        used[j].add(color)

    if max(colors.values()) + 1 > max_degree:
        graph = nx.Graph(ordered)
        if nx.is_bipartite(graph):
            colors = _konig_coloring(num_qubits, ordered, max_degree)
        else:
            logger.warning(
                'graph is not bipartite, keeping %d greedy layers for '
                'maximum degree %d', max(colors.values()) + 1, max_degree)

    layers = {}
    for edge, color in colors.items():
        layers.setdefault(color, []).append(edge)
    return tuple(tuple(sorted(layers[c])) for c in sorted(layers))


def _free_color(at_vertex: Dict[int, int], max_degree: int) -> int:
    for color in range(max_degree):
        if color not in at_vertex:
            return color
    raise InvalidGraph('no free color below the maximum degree')


def _konig_coloring(num_qubits, ordered, max_degree):
    # at[v][c] is the neighbour joined to v by the edge of color c.
    at = [dict() for _ in range(num_qubits)]
    for i, j in ordered:
        free_i = _free_color(at[i], max_degree)
        free_j = _free_color(at[j], max_degree)
        if free_i in at[j]:
            # Swap free_i/free_j along the alternating path leaving j. In a
            # bipartite graph the path never reaches i.
            path = []
            vertex, color = j, free_i
            while color in at[vertex]:
                other = at[vertex][color]
                path.append((vertex, other, color))
                vertex = other
                color = free_j if color == free_i else free_i
            for u, v, color in path:
                del at[u][color]
                del at[v][color]
            for u, v, color in path:
                swapped = free_j if color == free_i else free_i
                at[u][swapped] = v
                at[v][swapped] = u
        at[i][free_i] = j
        at[j][free_i] = i
    colors = {}
    for vertex in range(num_qubits):
        for color, other in at[vertex].items():
            colors[(min(vertex, other), max(vertex, other))] = color
    return colors


def _bridge_columns(gap: int, cols: int):
    offset = 2 * (gap % 2)
    return [offset + 4 * m for m in range(cols + 1)]


def build_heavy_hex(rows: int, cols: int) -> LatticeGraph:
    """
    Heavy-hexagonal lattice of rows x cols hexagons.

    Qubits sit on rows + 1 horizontal lines; bridge qubits join consecutive
    lines every fourth column, the bridge columns shifting by two from one
    gap to the next. Line k lies at y = k and the bridges below it at
    y = k + 0.5. Vertices are numbered line by line, each line followed by
    its bridges, the way the device is labelled.
    """
    if rows < 1 or cols < 1:
        raise InvalidGraph('rows and cols must be positive')
    spans = []
    for line in range(rows + 1):
        touching = []
        if line > 0:
            touching += _bridge_columns(line - 1, cols)
        if line < rows:
            touching += _bridge_columns(line, cols)
        spans.append((min(touching), max(touching)))

    index = {}
    coords = []
    for line in range(rows + 1):
        low, high = spans[line]
        for x in range(low, high + 1):
            index[('line', line, x)] = len(coords)
            coords.append((float(x), float(line)))
        if line < rows:
            for x in _bridge_columns(line, cols):
                index[('bridge', line, x)] = len(coords)
                coords.append((float(x), line + 0.5))

    edges = []
    for line in range(rows + 1):
        low, high = spans[line]
        for x in range(low, high):
            edges.append((index[('line', line, x)], index[('line', line, x + 1)]))
    for gap in range(rows):
        for x in _bridge_columns(gap, cols):
            bridge = index[('bridge', gap, x)]
            edges.append((index[('line', gap, x)], bridge))
            edges.append((bridge, index[('line', gap + 1, x)]))

    edges = tuple(sorted((min(e), max(e)) for e in edges))
    return LatticeGraph(
        len(coords), edges, color_edges(len(coords), edges), tuple(coords),
        LatticeKind.HeavyHex, 'heavy_hex_{}x{}'.format(rows, cols))


def build_chain(length: int) -> LatticeGraph:
    """Open chain of length qubits; even bonds form the first layer."""
    if length < 2:
        raise InvalidGraph('a chain needs at least two qubits')
    edges = tuple((i, i + 1) for i in range(length - 1))
    coords = tuple((float(i), 0.0) for i in range(length))
    return LatticeGraph(
        length, edges, color_edges(length, edges), coords,
        LatticeKind.Chain, 'chain_{}'.format(length))


def load_coupling_map(source: Union[str, Iterable[str]],
                      name: str = '') -> LatticeGraph:
    """
    Parse a coupling map: one "i j" pair per line, '#' starts a comment.

    The number of qubits is the largest index plus one; unused indices stay
    as isolated vertices.
    """
    lines = source.splitlines() if isinstance(source, str) else list(source)
    edges = []
    seen = set()
    for number, raw in enumerate(lines, 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise MalformedCouplingMap(
                'line {}: expected "i j", got {!r}'.format(number, raw))
        try:
            i, j = int(tokens[0]), int(tokens[1])
        except ValueError:
            raise MalformedCouplingMap(
                'line {}: non-integer token in {!r}'.format(number, raw)) \
                from None
        if i < 0 or j < 0:
            raise MalformedCouplingMap(
                'line {}: negative vertex index'.format(number))
        if i == j:
            raise SelfLoop('line {}: self-loop on {}'.format(number, i))
        edge = (min(i, j), max(i, j))
        if edge in seen:
            raise DuplicateEdge(
                'line {}: edge {} {} listed twice'.format(number, i, j))
        seen.add(edge)
        edges.append(edge)
    if not edges:
        raise MalformedCouplingMap('coupling map has no edges')
    num_qubits = max(max(e) for e in edges) + 1
    edges = tuple(sorted(edges))
    graph = LatticeGraph(num_qubits, edges, color_edges(num_qubits, edges),
                         None, LatticeKind.Custom, name)
    isolated = num_qubits - len(graph.active_qubits)
    if isolated:
        logger.info('coupling map %r has %d isolated vertices', name, isolated)
    return graph


def read_coupling_map(path: Union[str, Path], name: str = None) -> LatticeGraph:
    """Load a coupling-map file."""
    path = Path(path)
    return load_coupling_map(path.read_text(encoding='utf-8'),
                             name if name is not None else path.stem)


def serialize_coupling_map(graph: LatticeGraph) -> str:
    """The coupling-map text of a graph."""
    lines = ['# {} qubits, {} edges{}'.format(
        graph.num_qubits, len(graph.edges),
        ', ' + graph.name if graph.name else '')]
    lines += ['{} {}'.format(i, j) for i, j in graph.edges]
    return '\n'.join(lines) + '\n'


def subgraph(graph: LatticeGraph, vertices: Iterable[int]):
    """
    Induced subgraph on vertices, relabelled 0..k-1 in ascending order.

    Returns the new graph and the map from old to new labels.
    """
    chosen = sorted(set(int(v) for v in vertices))
    if not chosen:
        raise InvalidGraph('empty vertex selection')
    if chosen[0] < 0 or chosen[-1] >= graph.num_qubits:
        raise InvalidGraph('selected vertex outside the graph')
    relabel = {old: new for new, old in enumerate(chosen)}
    edges = tuple(sorted((relabel[i], relabel[j]) for i, j in graph.edges
                         if i in relabel and j in relabel))
    coords = None
    if graph.coords is not None:
        coords = tuple(graph.coords[v] for v in chosen)
    name = '{}_sub{}'.format(graph.name, len(chosen)) if graph.name else ''
    sub = LatticeGraph(len(chosen), edges, color_edges(len(chosen), edges),
                       coords, LatticeKind.Custom, name)
    return sub, relabel


def make_pattern(graph: LatticeGraph, kind: PatternKind,
                 explicit_bits: Optional[Sequence[int]] = None):
    """
    Initial product state on a graph.

    Stripe takes the row parity of the planar embedding, DomainWall puts the
    first half of the qubits (the larger half for odd sizes) in |0> and the
    rest in |1>.
    """
    kind = PatternKind(kind)
    size = graph.num_qubits
    if (explicit_bits is not None) != (kind == PatternKind.Explicit):
        raise PatternError('explicit bits go with, and only with, Explicit')
    if kind == PatternKind.Explicit:
        bits = tuple(int(b) for b in explicit_bits)
        if len(bits) != size:
            raise PatternError('pattern has {} bits for {} qubits'.format(
                len(bits), size))
    elif kind == PatternKind.Polarized:
        bits = (0,) * size
    elif kind == PatternKind.DomainWall:
        zeros = (size + 1) // 2
        bits = (0,) * zeros + (1,) * (size - zeros)
    else:
        bits = tuple(row % 2 for row in graph.rows())
    return InitialPattern(bits, kind)


def read_pattern(path: Union[str, Path], graph: LatticeGraph):
    """Read a pattern file: one line of '0'/'1', '#' lines are comments."""
    body = [line.strip() for line
            in Path(path).read_text(encoding='utf-8').splitlines()
            if line.strip() and not line.lstrip().startswith('#')]
    if len(body) != 1 or set(body[0]) - {'0', '1'}:
        raise PatternError('{}: expected one line of 0/1 characters'.format(path))
    return make_pattern(graph, PatternKind.Explicit, [int(c) for c in body[0]])


def write_pattern(pattern: InitialPattern, path: Union[str, Path]):
    """Write a pattern file."""
    Path(path).write_text(pattern.text() + '\n', encoding='utf-8')


DEVICE_LINES = 7
DEVICE_LINE_LENGTH = 15
DEVICE_BRIDGES = 4


def _device_coordinates():
    # 7 lines of 15 qubits, each followed by its 4 bridge qubits.
    stride = DEVICE_LINE_LENGTH + DEVICE_BRIDGES
    coords = []
    for line in range(DEVICE_LINES):
        coords += [(float(x), float(line)) for x in range(DEVICE_LINE_LENGTH)]
        offset = 2 * (line % 2)
        coords += [(float(offset + 4 * m), line + 0.5)
                   for m in range(DEVICE_BRIDGES)]
    assert len(coords) == DEVICE_LINES * stride
    return tuple(coords)


def device_graph() -> LatticeGraph:
    """The 133-qubit heavy-hex device, with its planar layout."""
    graph = read_coupling_map(DATA_DIR / 'ibm_torino.txt', 'ibm_torino')
    return replace(graph, coords=_device_coordinates(),
                   kind=LatticeKind.HeavyHex)


def device_pattern(graph: LatticeGraph = None) -> InitialPattern:
    """The frozen row-parity stripe of the 133-qubit device."""
    return read_pattern(DATA_DIR / 'ibm_torino_stripe.txt',
                        graph if graph is not None else device_graph())


def device_region():
    """
    The 28-qubit region of the device used for state-vector comparisons.

    Returns the region graph (relabelled) and the map from device labels.
    """
    text = (DATA_DIR / 'ibm_torino_region28.txt').read_text(encoding='utf-8')
    vertices = [int(token) for line in text.splitlines()
                if not line.lstrip().startswith('#') for token in line.split()]
    return subgraph(device_graph(), vertices)
