"""Local rewrite engine for majority-inverter graphs.

Two rule families:

* agent-selectable moves (commutativity, associativity, complementary
  associativity, both distributivity directions, inverter propagation,
  identity), matched with port-search so a pattern is found regardless of
  how operands happen to be arranged;
* always-applied cleanup rules: majority collapse M(x,x,z)=x /
  M(x,x',z)=z and redundancy merging of nodes with identical fanin
  triples.

Every agent move is gated by a local equivalence check: the affected cut
is exhaustively simulated over its boundary variables on the old and the
proposed structure, and the rewrite only commits when the functions agree.
A move that fails the gate leaves the graph untouched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from migopt.mig import MAJ, MigError, MigGraph, Signal, pi_pattern


class OmegaAction(IntEnum):
    IDENTITY = 0
    COMM01 = 1
    COMM02 = 2
    COMM12 = 3
    ASSOC = 4
    COMPL_ASSOC = 5
    DIST_LR = 6
    DIST_RL = 7
    INV_PROP = 8


ACTION_COUNT = len(OmegaAction)

_COMM_PORTS = {
    OmegaAction.COMM01: (0, 1),
    OmegaAction.COMM02: (0, 2),
    OmegaAction.COMM12: (1, 2),
}


@dataclass(frozen=True, slots=True)
class PlanRef:
    """Reference to the idx-th node a rewrite plan will create."""

    idx: int
    neg: bool = False


@dataclass(slots=True)
class RewritePlan:
    root: int
    new_root_fanins: tuple
    new_nodes: list[tuple]  # fanin triples of Signal | PlanRef
    expanded: frozenset[int]  # nodes whose old structure the rewrite consumes
    complements_root: bool = False


@dataclass(slots=True)
class MatchDescriptor:
    root: int
    action: OmegaAction
    binding: tuple
    footprint: frozenset[int]
    plan: RewritePlan | None


@dataclass(slots=True)
class ApplyResult:
    applied: bool
    new_ids: list[int] = field(default_factory=list)


@dataclass(slots=True)
class StepReport:
    applied: int = 0
    blocked_illegal: int = 0
    blocked_collision: int = 0
    identity_count: int = 0
    lambda_m_count: int = 0
    lambda_r_count: int = 0
    size_before: int = 0
    size_after: int = 0
    nodes_added: int = 0
    nodes_removed: int = 0
    outcomes: dict[int, str] = field(default_factory=dict)


def _virtual_ops(node_fanins, edge: Signal) -> tuple[Signal, Signal, Signal]:
    # Fold a complemented child edge into the child operands:
    # not M(a,b,c) == M(!a,!b,!c).
    if edge.neg:
        return tuple(s.invert() for s in node_fanins)
    return tuple(node_fanins)


def _consumers(g: MigGraph, nid: int) -> list[tuple[int, int]]:
    out = []
    for cid, node in g.nodes.items():
        for port, s in enumerate(node.fanins):
            if s.node == nid:
                out.append((cid, port))
    return out


def match(g: MigGraph, nid: int, action: OmegaAction) -> MatchDescriptor | None:
    """Find the first applicable binding for `action` at node `nid`.

    Search order is fixed (ascending ports, then ascending child ports),
    so the binding is deterministic for a given graph state. Returns None
    when the pattern does not occur; that is a normal outcome.
    """
    node = g.nodes.get(nid)
    if node is None or node.kind != MAJ:
        return None
    fan = node.fanins

    if action == OmegaAction.IDENTITY:
        return MatchDescriptor(nid, action, (), frozenset(), None)

    if action in _COMM_PORTS:
        i, j = _COMM_PORTS[action]
        new = list(fan)
        new[i], new[j] = new[j], new[i]
        plan = RewritePlan(nid, tuple(new), [], frozenset((nid,)))
        return MatchDescriptor(nid, action, (i, j), frozenset((nid,)), plan)

    if action == OmegaAction.INV_PROP:
        cons = _consumers(g, nid)
        plan = RewritePlan(
            nid,
            tuple(s.invert() for s in fan),
            [],
            frozenset((nid,)),
            complements_root=True,
        )
        foot = frozenset({nid} | {cid for cid, _ in cons})
        return MatchDescriptor(nid, action, (), foot, plan)

    if action in (OmegaAction.ASSOC, OmegaAction.COMPL_ASSOC):
        want_compl = action == OmegaAction.COMPL_ASSOC
        for cp in range(3):
            child_sig = fan[cp]
            child = g.nodes[child_sig.node]
            if child.kind != MAJ or child_sig.node == nid:
                continue
            virt = _virtual_ops(child.fanins, child_sig)
            for up in range(3):
                if up == cp:
                    continue
                u = fan[up]
                needle = u.invert() if want_compl else u
                for uc in range(3):
                    if virt[uc] != needle:
                        continue
                    xp = 3 - cp - up
                    x = fan[xp]
                    rest = [p for p in range(3) if p != uc]
                    nc = [None, None, None]
                    new_root = list(fan)
                    if want_compl:
                        # M(x,u,M(y,u',z)) = M(x,u,M(y,x,z))
                        nc[uc] = x
                        nc[rest[0]] = virt[rest[0]]
                        nc[rest[1]] = virt[rest[1]]
                    else:
                        # M(x,u,M(y,u,z)) = M(z,u,M(y,u,x)); z := lower rest port
                        zc, yc = rest
                        nc[uc] = u
                        nc[yc] = virt[yc]
                        nc[zc] = x
                        new_root[xp] = virt[zc]
                    new_root[cp] = PlanRef(0)
                    plan = RewritePlan(
                        nid,
                        tuple(new_root),
                        [tuple(nc)],
                        frozenset((nid, child_sig.node)),
                    )
                    foot = frozenset((nid, child_sig.node))
                    return MatchDescriptor(nid, action, (cp, up, uc), foot, plan)
        return None

    if action == OmegaAction.DIST_LR:
        # M(x,y,M(u,v,z)) = M(M(x,y,u),M(x,y,v),z)
        for cp in range(3):
            child_sig = fan[cp]
            child = g.nodes[child_sig.node]
            if child.kind != MAJ or child_sig.node == nid:
                continue
            virt = _virtual_ops(child.fanins, child_sig)
            zc = 0
            pa, pb = 1, 2
            o0, o1 = [p for p in range(3) if p != cp]
            node_a = [None, None, None]
            node_b = [None, None, None]
            node_a[o0], node_a[o1], node_a[cp] = fan[o0], fan[o1], virt[pa]
            node_b[o0], node_b[o1], node_b[cp] = fan[o0], fan[o1], virt[pb]
            new_root = [None, None, None]
            new_root[o0] = PlanRef(0)
            new_root[o1] = PlanRef(1)
            new_root[cp] = virt[zc]
            plan = RewritePlan(
                nid,
                tuple(new_root),
                [tuple(node_a), tuple(node_b)],
                frozenset((nid, child_sig.node)),
            )
            foot = frozenset((nid, child_sig.node))
            return MatchDescriptor(nid, action, (cp, zc), foot, plan)
        return None

    if action == OmegaAction.DIST_RL:
        # M(M(x,y,u),M(x,y,v),z) = M(x,y,M(u,v,z))
        for cpa, cpb in ((0, 1), (0, 2), (1, 2)):
            sa, sb = fan[cpa], fan[cpb]
            na, nb = g.nodes[sa.node], g.nodes[sb.node]
            if na.kind != MAJ or nb.kind != MAJ:
                continue
            if sa.node == nid or sb.node == nid:
                continue
            virt_a = _virtual_ops(na.fanins, sa)
            virt_b = _virtual_ops(nb.fanins, sb)
            zp = 3 - cpa - cpb
            z = fan[zp]
            for i, j in ((0, 1), (0, 2), (1, 2)):
                p, q = virt_a[i], virt_a[j]
                for k in range(3):
                    if virt_b[k] != p:
                        continue
                    for l in range(3):
                        if l == k or virt_b[l] != q:
                            continue
                        ua = virt_a[3 - i - j]
                        vb = virt_b[3 - k - l]
                        new_root = [None, None, None]
                        new_root[cpa] = p
                        new_root[cpb] = q
                        new_root[zp] = PlanRef(0)
                        plan = RewritePlan(
                            nid,
                            tuple(new_root),
                            [(ua, vb, z)],
                            frozenset((nid, sa.node, sb.node)),
                        )
                        foot = frozenset((nid, sa.node, sb.node))
                        binding = (cpa, cpb, i, j, k, l)
                        return MatchDescriptor(nid, action, binding, foot, plan)
        return None

    raise MigError(f"unknown action {action}")


def _plan_equivalent(g: MigGraph, plan: RewritePlan) -> bool:
    """Exhaustively simulate the cut boundary on old vs planned structure."""
    boundary: list[int] = []
    bset: set[int] = set()

    def collect_old(nid: int):
        for s in g.nodes[nid].fanins:
            if s.node in plan.expanded:
                collect_old(s.node)
            elif s.node not in bset:
                bset.add(s.node)
                boundary.append(s.node)

    def collect_plan(ps):
        if isinstance(ps, PlanRef):
            for e in plan.new_nodes[ps.idx]:
                collect_plan(e)
        elif ps.node in plan.expanded:
            collect_old(ps.node)
        elif ps.node not in bset:
            bset.add(ps.node)
            boundary.append(ps.node)

    collect_old(plan.root)
    for ps in plan.new_root_fanins:
        collect_plan(ps)

    k = len(boundary)
    if k > 8:
        return False
    mask = (1 << (1 << k)) - 1 if k else 1
    pats = {nid: pi_pattern(i + 1, k) for i, nid in enumerate(boundary)}

    memo_old: dict[int, int] = {}

    def val_old(nid: int) -> int:
        if nid not in plan.expanded:
            return pats[nid]
        v = memo_old.get(nid)
        if v is None:
            a, b, c = (val_sig(s) for s in g.nodes[nid].fanins)
            v = (a & b) | (a & c) | (b & c)
            memo_old[nid] = v
        return v

    def val_sig(s: Signal) -> int:
        return val_old(s.node) ^ (mask if s.neg else 0)

    memo_new: dict[int, int] = {}

    def val_plan(ps) -> int:
        if isinstance(ps, PlanRef):
            v = memo_new.get(ps.idx)
            if v is None:
                a, b, c = (val_plan(e) for e in plan.new_nodes[ps.idx])
                v = (a & b) | (a & c) | (b & c)
                memo_new[ps.idx] = v
            return v ^ (mask if ps.neg else 0)
        return val_sig(ps)

    old = val_old(plan.root)
    a, b, c = (val_plan(ps) for ps in plan.new_root_fanins)
    new = (a & b) | (a & c) | (b & c)
    if plan.complements_root:
        new ^= mask
    return new == old


def apply_omega(g: MigGraph, desc: MatchDescriptor) -> ApplyResult:
    """Commit a matched rewrite, or block it if the local check fails.

    A blocked rewrite leaves the graph bit-identical.
    """
    if desc.action == OmegaAction.IDENTITY:
        return ApplyResult(True)
    plan = desc.plan
    if plan is None or plan.root not in g.nodes:
        return ApplyResult(False)
    if not _plan_equivalent(g, plan):
        return ApplyResult(False)

    new_ids: list[int] = []

    def resolve(ps) -> Signal:
        if isinstance(ps, PlanRef):
            return Signal(new_ids[ps.idx], ps.neg)
        return ps

    for fanins in plan.new_nodes:
        sig = g.add_majority(*(resolve(e) for e in fanins))
        new_ids.append(sig.node)
    g.nodes[plan.root].fanins = tuple(resolve(ps) for ps in plan.new_root_fanins)

    if plan.complements_root:
        root = plan.root
        for node in g.nodes.values():
            if any(s.node == root for s in node.fanins):
                node.fanins = tuple(
                    s.invert() if s.node == root else s for s in node.fanins
                )
        g.outputs = [s.invert() if s.node == root else s for s in g.outputs]
    return ApplyResult(True, new_ids)


# -- always-applied cleanup rules --------------------------------------


def _resolve_subst(subst: dict[int, Signal], s: Signal) -> Signal:
    while s.node in subst:
        t = subst[s.node]
        s = Signal(t.node, t.neg ^ s.neg)
    return s


def _apply_subst(g: MigGraph, subst: dict[int, Signal]):
    for node in g.nodes.values():
        if node.fanins and any(s.node in subst for s in node.fanins):
            node.fanins = tuple(_resolve_subst(subst, s) for s in node.fanins)
    g.outputs = [_resolve_subst(subst, s) for s in g.outputs]
    for nid in subst:
        del g.nodes[nid]


def lambda_majority(g: MigGraph) -> int:
    """Collapse M(x,x,z) to x and M(x,x',z) to z, to fixpoint."""
    total = 0
    while True:
        subst: dict[int, Signal] = {}
        for nid in g.topological_order():
            node = g.nodes[nid]
            if node.kind != MAJ:
                continue
            a, b, c = (_resolve_subst(subst, s) for s in node.fanins)
            node.fanins = (a, b, c)
            if a == b or a == c:
                target = a
            elif b == c:
                target = b
            elif a.node == b.node:  # complementary pair
                target = c
            elif a.node == c.node:
                target = b
            elif b.node == c.node:
                target = a
            else:
                continue
            subst[nid] = target
        if not subst:
            return total
        _apply_subst(g, subst)
        total += len(subst)


def _canonical_triple(fanins) -> tuple[tuple, bool]:
    tr = sorted(fanins, key=lambda s: (s.node, s.neg))
    if sum(s.neg for s in tr) >= 2:
        tr = sorted((s.invert() for s in tr), key=lambda s: (s.node, s.neg))
        return tuple(tr), True
    return tuple(tr), False


def lambda_redundancy(g: MigGraph, canonical: bool = False) -> int:
    """Merge nodes with identical fanin triples into the lowest-id survivor.

    Triples compare port-ordered including polarities. With
    canonical=True the comparison is permutation- and polarity-invariant
    instead (merged references then absorb the phase difference).
    """
    total = 0
    while True:
        subst: dict[int, Signal] = {}
        seen: dict[tuple, tuple[int, bool]] = {}
        for nid in g.topological_order():
            node = g.nodes[nid]
            if node.kind != MAJ:
                continue
            fanins = tuple(_resolve_subst(subst, s) for s in node.fanins)
            node.fanins = fanins
            if canonical:
                key, phase = _canonical_triple(fanins)
            else:
                key, phase = fanins, False
            hit = seen.get(key)
            if hit is None:
                seen[key] = (nid, phase)
                continue
            other, other_phase = hit
            if nid < other:
                subst[other] = Signal(nid, phase ^ other_phase)
                seen[key] = (nid, phase)
            else:
                subst[nid] = Signal(other, phase ^ other_phase)
            total += 1
        if not subst:
            return total
        _apply_subst(g, subst)


def lambda_fixpoint(g: MigGraph, canonical: bool = False) -> tuple[int, int]:
    """Run both cleanup rules alternately until neither fires."""
    lm = lr = 0
    while True:
        m = lambda_majority(g)
        r = lambda_redundancy(g, canonical=canonical)
        lm += m
        lr += r
        if m == 0 and r == 0:
            return lm, lr


def delete_dead(g: MigGraph) -> int:
    """Drop majority nodes unreachable from the outputs."""
    keep = g.reachable_nodes()
    dead = [nid for nid, n in g.nodes.items() if n.kind == MAJ and nid not in keep]
    for nid in dead:
        del g.nodes[nid]
    return len(dead)


def step(g: MigGraph, actions: dict[int, OmegaAction]) -> StepReport:
    """Apply one simultaneous action set, then cleanup and dead-node removal.

    Acting nodes run in ascending id order. An action whose footprint
    overlaps nodes already touched by an applied rewrite this step is
    blocked as a collision; a failed match or failed equivalence gate is
    blocked as illegal. Both leave the graph unchanged for that node.
    """
    rep = StepReport()
    reach_before = {n for n in g.reachable_nodes() if g.nodes[n].kind == MAJ}
    rep.size_before = len(reach_before)

    touched: set[int] = set()
    for nid in sorted(actions):
        act = actions[nid]
        node = g.nodes.get(nid)
        if node is None or node.kind != MAJ:
            rep.blocked_illegal += 1
            rep.outcomes[nid] = "blocked_illegal"
            continue
        if act == OmegaAction.IDENTITY:
            rep.identity_count += 1
            rep.outcomes[nid] = "identity"
            continue
        desc = match(g, nid, act)
        if desc is None:
            rep.blocked_illegal += 1
            rep.outcomes[nid] = "blocked_illegal"
            continue
        if desc.footprint & touched:
            rep.blocked_collision += 1
            rep.outcomes[nid] = "blocked_collision"
            continue
        res = apply_omega(g, desc)
        if res.applied:
            rep.applied += 1
            rep.outcomes[nid] = "applied"
            touched |= desc.footprint
            touched.update(res.new_ids)
        else:
            rep.blocked_illegal += 1
            rep.outcomes[nid] = "blocked_illegal"

    rep.lambda_m_count, rep.lambda_r_count = lambda_fixpoint(g)
    delete_dead(g)

    reach_after = {n for n in g.reachable_nodes() if g.nodes[n].kind == MAJ}
    rep.size_after = len(reach_after)
    rep.nodes_added = len(reach_after - reach_before)
    rep.nodes_removed = len(reach_before - reach_after)
    return rep


# -- equivalence -------------------------------------------------------


def check_equivalence_exact(g1: MigGraph, g2: MigGraph) -> bool:
    """True iff all output truth tables match (inputs must be <= 16)."""
    if g1.pi_count != g2.pi_count:
        raise MigError("graphs have different input counts")
    if len(g1.outputs) != len(g2.outputs):
        raise MigError("graphs have different output counts")
    return g1.simulate_truth_tables() == g2.simulate_truth_tables()


def verify_equivalence(
    g1: MigGraph,
    g2: MigGraph,
    exact_limit: int = 16,
    seeds: tuple[int, ...] = (101, 202, 303),
    width: int = 256,
) -> tuple[bool, bool]:
    """Equivalence evidence for any input width.

    Returns (equivalent, proven): an exact truth-table comparison when
    the input count permits, otherwise seeded random signatures
    (agreement is strong evidence but not proof).
    """
    if g1.pi_count != g2.pi_count:
        raise MigError("graphs have different input counts")
    if len(g1.outputs) != len(g2.outputs):
        raise MigError("graphs have different output counts")
    if g1.pi_count <= exact_limit:
        return check_equivalence_exact(g1, g2), True
    for seed in seeds:
        s1 = g1.simulate_signatures(seed, width)
        s2 = g2.simulate_signatures(seed, width)
        if s1.output_bits != s2.output_bits:
            return False, True  # a mismatch is a definite counterexample
    return True, False
