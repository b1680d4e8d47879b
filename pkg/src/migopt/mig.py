"""Majority-inverter graph core: nodes, signals, simulation, size.

A MIG is a DAG whose only gate is the 3-input majority function.
Inversion lives on edges (``Signal.neg``), never as a separate node.
Node 0 is the single constant-0 node; nodes 1..pi_count are the primary
inputs; everything above is a majority gate. Node identifiers grow
monotonically and are never reused, even after deletion.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

CONST = "const"
PI = "pi"
MAJ = "maj"


@dataclass(frozen=True, slots=True)
class Signal:
    """A directed, optionally complemented reference to a node."""

    node: int
    neg: bool = False

    def invert(self) -> "Signal":
        return Signal(self.node, not self.neg)

    def __invert__(self) -> "Signal":
        return Signal(self.node, not self.neg)

    def xor(self, flip: bool) -> "Signal":
        return Signal(self.node, self.neg ^ flip) if flip else self

    def __repr__(self):
        return f"{'!' if self.neg else ''}@{self.node}"


@dataclass(slots=True)
class Node:
    kind: str
    fanins: tuple[Signal, Signal, Signal] | tuple[()] = ()

    def is_maj(self) -> bool:
        return self.kind == MAJ


class MigError(Exception):
    pass


def _maj_word(a: int, b: int, c: int) -> int:
    return (a & b) | (a & c) | (b & c)


_PI_PATTERNS: dict[tuple[int, int], int] = {}


def pi_pattern(k: int, n: int) -> int:
    """Truth-table bits of primary input k (1-based) over n inputs.

    Row r of the table is the assignment where PI_j = bit (j-1) of r,
    so PI_1 toggles fastest (least significant).
    """
    key = (k, n)
    pat = _PI_PATTERNS.get(key)
    if pat is None:
        block = 1 << (k - 1)
        chunk = ((1 << block) - 1) << block  # `block` zeros then `block` ones
        pat = 0
        for off in range(0, 1 << n, block << 1):
            pat |= chunk << off
        _PI_PATTERNS[key] = pat
    return pat


class MigGraph:
    """DAG of 3-input majority nodes with complemented edges.

    Single-writer: all mutation must be serialized per graph. Reads
    (simulation, traversal) are safe on a graph that is not being mutated.
    """

    def __init__(self, pi_count: int):
        if pi_count < 0:
            raise MigError("pi_count must be non-negative")
        self.pi_count = pi_count
        self.nodes: dict[int, Node] = {0: Node(CONST)}
        for i in range(1, pi_count + 1):
            self.nodes[i] = Node(PI)
        self.outputs: list[Signal] = []
        self._next_id = pi_count + 1

    # -- construction -------------------------------------------------

    def const0(self) -> Signal:
        return Signal(0, False)

    def const1(self) -> Signal:
        return Signal(0, True)

    def pi(self, k: int) -> Signal:
        if not 1 <= k <= self.pi_count:
            raise MigError(f"no primary input x{k}")
        return Signal(k, False)

    def _check_live(self, s: Signal):
        if s.node not in self.nodes:
            raise MigError(f"signal references dead or unknown node {s.node}")

    def add_majority(self, a: Signal, b: Signal, c: Signal) -> Signal:
        for s in (a, b, c):
            self._check_live(s)
        nid = self._next_id
        self._next_id += 1
        self.nodes[nid] = Node(MAJ, (a, b, c))
        return Signal(nid, False)

    def add_and(self, a: Signal, b: Signal) -> Signal:
        return self.add_majority(a, b, self.const0())

    def add_or(self, a: Signal, b: Signal) -> Signal:
        return self.add_majority(a, b, self.const1())

    def set_outputs(self, sigs: list[Signal]):
        for s in sigs:
            self._check_live(s)
        self.outputs = list(sigs)

    def clone(self) -> "MigGraph":
        g = MigGraph.__new__(MigGraph)
        g.pi_count = self.pi_count
        g.nodes = {nid: Node(n.kind, n.fanins) for nid, n in self.nodes.items()}
        g.outputs = list(self.outputs)
        g._next_id = self._next_id
        return g

    # -- traversal ----------------------------------------------------

    def is_live(self, nid: int) -> bool:
        return nid in self.nodes

    def maj_ids(self) -> list[int]:
        return [nid for nid, n in self.nodes.items() if n.kind == MAJ]

    def reachable_nodes(self) -> set[int]:
        """Transitive fanin closure of the outputs (all node kinds)."""
        seen: set[int] = set()
        stack = [s.node for s in self.outputs]
        while stack:
            nid = stack.pop()
            if nid in seen:
                continue
            node = self.nodes.get(nid)
            if node is None:
                raise MigError(f"output cone references dead node {nid}")
            seen.add(nid)
            for s in node.fanins:
                if s.node not in seen:
                    stack.append(s.node)
        return seen

    def topological_order(self) -> list[int]:
        """Live node ids, fanins before fanouts. Raises on a cycle."""
        order: list[int] = []
        state: dict[int, int] = {}  # 1 = on stack, 2 = done
        for root in sorted(self.nodes):
            if state.get(root):
                continue
            stack: list[tuple[int, int]] = [(root, 0)]
            while stack:
                nid, idx = stack.pop()
                if idx == 0:
                    if state.get(nid) == 2:
                        continue
                    state[nid] = 1
                node = self.nodes[nid]
                advanced = False
                for i in range(idx, len(node.fanins)):
                    child = node.fanins[i].node
                    st = state.get(child)
                    if st == 1:
                        raise MigError(f"cycle through node {child}: graph corrupted")
                    if st is None:
                        if child not in self.nodes:
                            raise MigError(f"node {nid} references dead node {child}")
                        stack.append((nid, i + 1))
                        stack.append((child, 0))
                        advanced = True
                        break
                if not advanced:
                    state[nid] = 2
                    order.append(nid)
        return order

    def size(self) -> int:
        """Number of majority nodes in the output cone."""
        return sum(1 for nid in self.reachable_nodes() if self.nodes[nid].kind == MAJ)

    # -- simulation ---------------------------------------------------

    def _eval_words(self, leaf_vals: dict[int, int], mask: int) -> dict[int, int]:
        vals = dict(leaf_vals)
        for nid in self.topological_order():
            node = self.nodes[nid]
            if node.kind != MAJ:
                continue
            a, b, c = node.fanins
            va = vals[a.node] ^ (mask if a.neg else 0)
            vb = vals[b.node] ^ (mask if b.neg else 0)
            vc = vals[c.node] ^ (mask if c.neg else 0)
            vals[nid] = _maj_word(va, vb, vc)
        return vals

    def simulate_truth_tables(self) -> list[int]:
        """Exact truth table per output, as an int of 2^pi_count bits."""
        if self.pi_count > 16:
            raise MigError("exact truth tables limited to 16 inputs")
        n = self.pi_count
        mask = (1 << (1 << n)) - 1
        leaves = {0: 0}
        for k in range(1, n + 1):
            leaves[k] = pi_pattern(k, n)
        vals = self._eval_words(leaves, mask)
        return [vals[s.node] ^ (mask if s.neg else 0) for s in self.outputs]

    def simulate_signatures(self, seed: int, width: int = 256) -> "SignatureSet":
        """Bit-parallel simulation under `width` pseudo-random PI patterns.

        Patterns depend only on (seed, width, PI index), so functionally
        equal graphs over the same inputs produce equal signatures.
        """
        if width < 64:
            raise MigError("signature width must be at least 64")
        rng = random.Random(seed)
        mask = (1 << width) - 1
        leaves = {0: 0}
        for k in range(1, self.pi_count + 1):
            leaves[k] = rng.getrandbits(width)
        vals = self._eval_words(leaves, mask)
        outs = [vals[s.node] ^ (mask if s.neg else 0) for s in self.outputs]
        return SignatureSet(width=width, seed=seed, node_bits=vals, output_bits=outs)

    def check(self):
        """Structural invariant sweep; raises MigError on corruption."""
        if self.nodes.get(0, Node(MAJ)).kind != CONST:
            raise MigError("node 0 must be the constant")
        for k in range(1, self.pi_count + 1):
            if self.nodes.get(k, Node(MAJ)).kind != PI:
                raise MigError(f"node {k} must be primary input x{k}")
        for nid, node in self.nodes.items():
            if node.kind == MAJ and len(node.fanins) != 3:
                raise MigError(f"majority node {nid} needs 3 fanins")
            if node.kind != MAJ and node.fanins:
                raise MigError(f"terminal node {nid} must have no fanins")
            for s in node.fanins:
                if s.node not in self.nodes:
                    raise MigError(f"node {nid} references dead node {s.node}")
        for s in self.outputs:
            if s.node not in self.nodes:
                raise MigError(f"output references dead node {s.node}")
        self.topological_order()


@dataclass(slots=True)
class SignatureSet:
    """Per-node simulated bit-vectors under seeded random patterns."""

    width: int
    seed: int
    node_bits: dict[int, int]
    output_bits: list[int]


def new_graph(pi_count: int) -> MigGraph:
    return MigGraph(pi_count)
