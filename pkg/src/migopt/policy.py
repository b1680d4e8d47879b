"""Per-node rewrite policy: neighborhood embedding, message passing, head.

Each acting node observes the induced subgraph within a fixed edge radius
of itself (both fanin and fanout directions). Node features carry no
identifiers, only a self/not-self bit plus the node type, so the same
parameters run on graphs of any size. Messages concatenate six slots: the
three fanin feature vectors (each with a +1/-1 polarity channel) and three
fanout sums binned by the consuming input port. After L layers the center
feature vector feeds a linear head and a softmax over the action catalog.

All arithmetic is float64. Fanout-bin summation orders contributions by
value, which makes a forward pass bitwise invariant under node relabeling.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from migopt.mig import CONST, MAJ, PI, MigError, MigGraph
from migopt.rewrite import ACTION_COUNT, OmegaAction

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

BASE_FEATURES = 4  # [is_self, is_pi, is_const, is_majority]


@dataclass(slots=True)
class Hyperparams:
    layers: int = 3  # message-passing depth == neighborhood radius
    hidden: int = 16
    actions: int = ACTION_COUNT

    def validate(self):
        if self.layers < 1:
            raise MigError("need at least one layer")
        if self.hidden < 4:
            raise MigError("hidden width must be at least 4")
        if self.actions != ACTION_COUNT:
            raise MigError(f"action head must have {ACTION_COUNT} outputs")


class PolicyParams:
    """Weights of the port-binned message-passing network plus action head."""

    def __init__(self, hp: Hyperparams, weights, biases, head_w, head_b):
        hp.validate()
        self.hp = hp
        self.weights = weights  # L arrays, hidden x 6*(h_in+1)
        self.biases = biases  # L arrays, hidden
        self.head_w = head_w  # actions x hidden
        self.head_b = head_b  # actions

    @staticmethod
    def layer_in_dim(hp: Hyperparams, layer: int) -> int:
        return BASE_FEATURES if layer == 0 else hp.hidden

    @classmethod
    def init(cls, hp: Hyperparams, seed: int = 0) -> "PolicyParams":
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for layer in range(hp.layers):
            fan_in = 6 * (cls.layer_in_dim(hp, layer) + 1)
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(hp.hidden, fan_in)))
            biases.append(np.zeros(hp.hidden))
        bound = 1.0 / np.sqrt(hp.hidden)
        head_w = rng.uniform(-bound, bound, size=(hp.actions, hp.hidden))
        head_b = np.zeros(hp.actions)
        return cls(hp, weights, biases, head_w, head_b)

    @classmethod
    def zeros(cls, hp: Hyperparams) -> "PolicyParams":
        weights = [
            np.zeros((hp.hidden, 6 * (cls.layer_in_dim(hp, i) + 1)))
            for i in range(hp.layers)
        ]
        biases = [np.zeros(hp.hidden) for _ in range(hp.layers)]
        return cls(hp, weights, biases, np.zeros((hp.actions, hp.hidden)), np.zeros(hp.actions))

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"w{i}", w))
            out.append((f"b{i}", b))
        out.append(("head_w", self.head_w))
        out.append(("head_b", self.head_b))
        return out

    def param_count(self) -> int:
        return sum(a.size for _, a in self.arrays())

    @staticmethod
    def expected_param_count(hp: Hyperparams) -> int:
        h, L = hp.hidden, hp.layers
        return (
            6 * (BASE_FEATURES + 1) * h
            + h
            + (L - 1) * (6 * (h + 1) * h + h)
            + hp.actions * h
            + hp.actions
        )

    def clone(self) -> "PolicyParams":
        return PolicyParams(
            self.hp,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.head_w.copy(),
            self.head_b.copy(),
        )

    def add_scaled(self, grads: "PolicyGradients", scale: float):
        for w, gw in zip(self.weights, grads.weights):
            w += scale * gw
        for b, gb in zip(self.biases, grads.biases):
            b += scale * gb
        self.head_w += scale * grads.head_w
        self.head_b += scale * grads.head_b


class PolicyGradients:
    def __init__(self, hp: Hyperparams):
        self.weights = [
            np.zeros((hp.hidden, 6 * (PolicyParams.layer_in_dim(hp, i) + 1)))
            for i in range(hp.layers)
        ]
        self.biases = [np.zeros(hp.hidden) for _ in range(hp.layers)]
        self.head_w = np.zeros((hp.actions, hp.hidden))
        self.head_b = np.zeros(hp.actions)

    def arrays(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"w{i}", w))
            out.append((f"b{i}", b))
        out.append(("head_w", self.head_w))
        out.append(("head_b", self.head_b))
        return out

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a))) if a.size else 0.0 for _, a in self.arrays())


@dataclass(slots=True)
class ActionDistribution:
    probs: np.ndarray  # (actions,)
    log_probs: np.ndarray


@dataclass(slots=True)
class Neighborhood:
    """Induced subgraph within d_adj edge traversals of the center."""

    center: int
    nodes: list[int]  # breadth-first from the center
    fanins: dict[int, tuple]  # nid -> ((member-or-None, neg) x3), () for terminals
    fanouts: dict[int, list]  # nid -> [(consumer, port, neg)] within the view


def graph_fanouts(g: MigGraph) -> dict[int, list[tuple[int, int]]]:
    fo: dict[int, list[tuple[int, int]]] = {}
    for cid, node in g.nodes.items():
        for port, s in enumerate(node.fanins):
            fo.setdefault(s.node, []).append((cid, port))
    return fo


def extract_neighborhood(
    g: MigGraph, center: int, d_adj: int, fanouts=None
) -> Neighborhood:
    if center not in g.nodes:
        raise MigError(f"center {center} is not a live node")
    if fanouts is None:
        fanouts = graph_fanouts(g)
    dist = {center: 0}
    order = [center]
    qi = 0
    while qi < len(order):
        nid = order[qi]
        qi += 1
        d = dist[nid]
        if d == d_adj:
            continue
        for s in g.nodes[nid].fanins:
            if s.node not in dist:
                dist[s.node] = d + 1
                order.append(s.node)
        for cid, _ in fanouts.get(nid, ()):
            if cid not in dist:
                dist[cid] = d + 1
                order.append(cid)
    members = dist.keys()
    fanin_view: dict[int, tuple] = {}
    fanout_view: dict[int, list] = {}
    for nid in order:
        node = g.nodes[nid]
        fanin_view[nid] = tuple(
            (s.node if s.node in members else None, s.neg) for s in node.fanins
        )
        fanout_view[nid] = [
            (cid, port, g.nodes[cid].fanins[port].neg)
            for cid, port in fanouts.get(nid, ())
            if cid in members
        ]
    return Neighborhood(center, order, fanin_view, fanout_view)


@dataclass(slots=True)
class _Batch:
    """Index arrays for one forward/backward pass over many neighborhoods."""

    x0: np.ndarray  # (S, 4)
    fanin_idx: np.ndarray  # (S, 3) row index or -1
    fanin_pol: np.ndarray  # (S, 3) +-1, 0 where absent
    edge_consumer: np.ndarray  # (E,) row of the consuming node
    edge_key: np.ndarray  # (E,) producing row * 3 + port
    edge_pol: np.ndarray  # (E,)
    center_rows: np.ndarray  # (C,)
    centers: list[int] = field(default_factory=list)  # node ids, center order
    canonical: bool = True  # value-sorted bin sums (relabeling-invariant)
    caches: list = field(default_factory=list)
    _key_order: tuple | None = None  # cached (order, starts, out_rows)
    _row_port: tuple | None = None  # cached (edge_key // 3, edge_key % 3)

    def row_port(self) -> tuple:
        if self._row_port is None:
            self._row_port = (self.edge_key // 3, self.edge_key % 3)
        return self._row_port


def build_batch(g: MigGraph, neighborhoods: list[Neighborhood]) -> _Batch:
    total = sum(len(nb.nodes) for nb in neighborhoods)
    x0 = np.zeros((total, BASE_FEATURES))
    fanin_idx = np.full((total, 3), -1, dtype=np.int64)
    fanin_pol = np.zeros((total, 3))
    e_cons: list[int] = []
    e_key: list[int] = []
    e_pol: list[float] = []
    center_rows = np.zeros(len(neighborhoods), dtype=np.int64)

    base = 0
    for ci, nb in enumerate(neighborhoods):
        rows = {nid: base + i for i, nid in enumerate(nb.nodes)}
        center_rows[ci] = rows[nb.center]
        for nid in nb.nodes:
            r = rows[nid]
            node = g.nodes[nid]
            x0[r, 0] = 1.0 if nid == nb.center else 0.0
            x0[r, 1] = 1.0 if node.kind == PI else 0.0
            x0[r, 2] = 1.0 if node.kind == CONST else 0.0
            x0[r, 3] = 1.0 if node.kind == MAJ else 0.0
            for port, (src, neg) in enumerate(nb.fanins[nid]):
                if src is not None:
                    fanin_idx[r, port] = rows[src]
                    fanin_pol[r, port] = -1.0 if neg else 1.0
            for cid, port, neg in nb.fanouts[nid]:
                e_cons.append(rows[cid])
                e_key.append(r * 3 + port)
                e_pol.append(-1.0 if neg else 1.0)
        base += len(nb.nodes)

    return _Batch(
        x0,
        fanin_idx,
        fanin_pol,
        np.asarray(e_cons, dtype=np.int64),
        np.asarray(e_key, dtype=np.int64),
        np.asarray(e_pol),
        center_rows,
        centers=[nb.center for nb in neighborhoods],
    )


def _bin_sums(contrib: np.ndarray, keys: np.ndarray, slots: int, batch: "_Batch"):
    """Segment-sum rows of `contrib` by key.

    With batch.canonical, contributions are summed in value-sorted order,
    which makes the result a function of the multiset of contributions
    only, independent of node numbering. The fast path sums in stable
    key order instead (still deterministic for a fixed batch) and reuses
    the sort across layers.
    """
    width = contrib.shape[1]
    out = np.zeros((slots, width))
    if contrib.shape[0] == 0:
        return out
    if batch.canonical:
        order = np.lexsort(tuple(contrib.T[::-1]) + (keys,))
        ks = keys[order]
        starts = np.concatenate(([0], np.flatnonzero(np.diff(ks)) + 1))
        out_rows = ks[starts]
    else:
        if batch._key_order is None:
            order = np.argsort(keys, kind="stable")
            ks = keys[order]
            starts = np.concatenate(([0], np.flatnonzero(np.diff(ks)) + 1))
            batch._key_order = (order, starts, ks[starts])
        order, starts, out_rows = batch._key_order
    out[out_rows] = np.add.reduceat(contrib[order], starts, axis=0)
    return out


def _scatter_add(dst: np.ndarray, idx: np.ndarray, src: np.ndarray):
    """dst[idx[k]] += src[k], deterministic; bincount beats add.at in bulk."""
    if idx.size > 192:
        n = dst.shape[0]
        for k in range(src.shape[1]):
            dst[:, k] += np.bincount(idx, weights=src[:, k], minlength=n)
    else:
        np.add.at(dst, idx, src)


if _HAVE_NUMBA:

    @numba.njit(cache=True)
    def _nb_assemble(feats, fanin_idx, fanin_pol, e_cons, e_row, e_port, e_pol, msg):
        s_rows, h_in = feats.shape
        slot = h_in + 1
        for i in range(s_rows):
            for p in range(3):
                j = fanin_idx[i, p]
                base = p * slot
                if j >= 0:
                    for k in range(h_in):
                        msg[i, base + k] = feats[j, k]
                    msg[i, base + h_in] = fanin_pol[i, p]
        half = 3 * slot
        for e in range(e_row.shape[0]):
            row = e_row[e]
            base = half + e_port[e] * slot
            c = e_cons[e]
            for k in range(h_in):
                msg[row, base + k] += feats[c, k]
            msg[row, base + h_in] += e_pol[e]

    @numba.njit(cache=True)
    def _nb_scatter(dmsg, fanin_idx, e_cons, e_row, e_port, h_in, dfeats):
        s_rows = dmsg.shape[0]
        slot = h_in + 1
        for i in range(s_rows):
            for p in range(3):
                j = fanin_idx[i, p]
                if j >= 0:
                    base = p * slot
                    for k in range(h_in):
                        dfeats[j, k] += dmsg[i, base + k]
        half = 3 * slot
        for e in range(e_row.shape[0]):
            row = e_row[e]
            base = half + e_port[e] * slot
            c = e_cons[e]
            for k in range(h_in):
                dfeats[c, k] += dmsg[row, base + k]


def _forward_batch(params: PolicyParams, batch: _Batch, keep_cache: bool = False):
    hp = params.hp
    s_rows = batch.x0.shape[0]
    feats = batch.x0
    batch.caches = []
    fast = _HAVE_NUMBA and not batch.canonical
    absent = None if fast else batch.fanin_idx < 0
    for layer in range(hp.layers):
        h_in = feats.shape[1]
        slot = h_in + 1
        if fast:
            e_row, e_port = batch.row_port()
            msg = np.zeros((s_rows, 6 * slot))
            _nb_assemble(
                feats,
                batch.fanin_idx,
                batch.fanin_pol,
                batch.edge_consumer,
                e_row,
                e_port,
                batch.edge_pol,
                msg,
            )
        else:
            fan3 = np.empty((s_rows, 3, slot))
            fan3[:, :, :h_in] = feats[batch.fanin_idx]
            fan3[absent] = 0.0
            fan3[:, :, h_in] = batch.fanin_pol
            contrib = np.empty((batch.edge_consumer.shape[0], slot))
            contrib[:, :h_in] = feats[batch.edge_consumer]
            contrib[:, h_in] = batch.edge_pol
            sums = _bin_sums(contrib, batch.edge_key, s_rows * 3, batch)
            msg = np.concatenate(
                [fan3.reshape(s_rows, 3 * slot), sums.reshape(s_rows, 3 * slot)], axis=1
            )
        z = msg @ params.weights[layer].T + params.biases[layer]
        new_feats = np.maximum(z, 0.0)
        if keep_cache:
            batch.caches.append((feats, msg, z))
        feats = new_feats

    logits = feats[batch.center_rows] @ params.head_w.T + params.head_b
    m = logits.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(logits - m).sum(axis=1, keepdims=True))
    log_probs = logits - lse
    if keep_cache:
        batch.caches.append(feats)
    return np.exp(log_probs), log_probs


def _backward_batch(
    params: PolicyParams,
    batch: _Batch,
    probs: np.ndarray,
    action_idx: np.ndarray,
    scales: np.ndarray,
    grads: PolicyGradients,
    entropy_coef: float = 0.0,
):
    """Accumulate sum_i scales[i] * grad log pi(action_i | center_i).

    With entropy_coef set, also accumulates the gradient of
    entropy_coef * sum_i H(pi(.|center_i)).
    """
    hp = params.hp
    s_rows = batch.x0.shape[0]
    feats_last = batch.caches[-1]

    dlogits = -probs * scales[:, None]
    dlogits[np.arange(len(action_idx)), action_idx] += scales
    if entropy_coef:
        logp = np.log(np.maximum(probs, 1e-300))
        ent = -(probs * logp).sum(axis=1, keepdims=True)
        dlogits += entropy_coef * (-probs * (logp + ent))

    grads.head_w += dlogits.T @ feats_last[batch.center_rows]
    grads.head_b += dlogits.sum(axis=0)
    dfeats = np.zeros_like(feats_last)
    dfeats[batch.center_rows] = dlogits @ params.head_w

    for layer in range(hp.layers - 1, -1, -1):
        feats_prev, msg, z = batch.caches[layer]
        h_in = feats_prev.shape[1]
        slot = h_in + 1
        dz = dfeats * (z > 0.0)
        grads.weights[layer] += dz.T @ msg
        grads.biases[layer] += dz.sum(axis=0)
        dmsg = dz @ params.weights[layer]

        dfeats = np.zeros_like(feats_prev)
        if _HAVE_NUMBA and not batch.canonical:
            e_row, e_port = batch.row_port()
            _nb_scatter(
                dmsg, batch.fanin_idx, batch.edge_consumer, e_row, e_port, h_in, dfeats
            )
        else:
            dfanin = dmsg[:, : 3 * slot].reshape(s_rows, 3, slot)[:, :, :h_in]
            valid = batch.fanin_idx >= 0
            _scatter_add(dfeats, batch.fanin_idx[valid], dfanin[valid])
            dfanout = dmsg[:, 3 * slot :].reshape(s_rows * 3, slot)
            if batch.edge_key.size:
                dcontrib = dfanout[batch.edge_key][:, :h_in]
                _scatter_add(dfeats, batch.edge_consumer, dcontrib)


class _Adjacency:
    """Dense per-graph adjacency snapshot for fast neighborhood batching."""

    __slots__ = (
        "index",
        "kind_feat",
        "fanin_idx",
        "fanin_neg",
        "fo_ptr",
        "fo_cons",
        "fo_port",
        "fo_neg",
        "nbrs",
    )

    def __init__(self, g: MigGraph):
        ids = list(g.nodes)
        index = {nid: i for i, nid in enumerate(ids)}
        n = len(ids)
        self.index = index
        self.kind_feat = np.zeros((n, BASE_FEATURES))
        self.fanin_idx = np.full((n, 3), -1, dtype=np.int64)
        self.fanin_neg = np.zeros((n, 3), dtype=np.int8)
        fo_lists: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for i, nid in enumerate(ids):
            node = g.nodes[nid]
            if node.kind == PI:
                self.kind_feat[i, 1] = 1.0
            elif node.kind == CONST:
                self.kind_feat[i, 2] = 1.0
            else:
                self.kind_feat[i, 3] = 1.0
            for port, s in enumerate(node.fanins):
                j = index[s.node]
                self.fanin_idx[i, port] = j
                self.fanin_neg[i, port] = 1 if s.neg else 0
                fo_lists[j].append((i, port, 1 if s.neg else 0))
                nbrs[i].append(j)
                nbrs[j].append(i)
        counts = [len(x) for x in fo_lists]
        self.fo_ptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.fo_ptr[1:])
        total = int(self.fo_ptr[-1])
        self.fo_cons = np.zeros(total, dtype=np.int64)
        self.fo_port = np.zeros(total, dtype=np.int64)
        self.fo_neg = np.zeros(total, dtype=np.int8)
        pos = 0
        for lst in fo_lists:
            for cid, port, neg in lst:
                self.fo_cons[pos] = cid
                self.fo_port[pos] = port
                self.fo_neg[pos] = neg
                pos += 1
        self.nbrs = nbrs


def _batch_from_adj(adj: _Adjacency, centers: list[int], depth: int) -> _Batch:
    n_total = adj.kind_feat.shape[0]
    glob2loc = np.full(n_total, -1, dtype=np.int64)
    rows_x0 = []
    rows_fanin_idx = []
    rows_fanin_pol = []
    e_cons_parts = []
    e_key_parts = []
    e_pol_parts = []
    center_rows = np.zeros(len(centers), dtype=np.int64)
    base = 0
    nbrs = adj.nbrs
    for ci, center in enumerate(centers):
        c = adj.index[center]
        dist = {c: 0}
        order = [c]
        qi = 0
        while qi < len(order):
            v = order[qi]
            qi += 1
            d = dist[v]
            if d == depth:
                continue
            for nb in nbrs[v]:
                if nb not in dist:
                    dist[nb] = d + 1
                    order.append(nb)
        m = len(order)
        orda = np.asarray(order, dtype=np.int64)
        glob2loc[orda] = base + np.arange(m, dtype=np.int64)
        center_rows[ci] = base

        x0 = adj.kind_feat[orda].copy()
        x0[0, 0] = 1.0
        rows_x0.append(x0)

        fi_g = adj.fanin_idx[orda]
        fi_l = glob2loc[np.maximum(fi_g, 0)]
        fi_l[fi_g < 0] = -1
        inside = fi_l >= 0
        fp = np.where(inside, 1.0 - 2.0 * adj.fanin_neg[orda], 0.0)
        rows_fanin_idx.append(fi_l)
        rows_fanin_pol.append(fp)

        starts = adj.fo_ptr[orda]
        lengths = adj.fo_ptr[orda + 1] - starts
        tot = int(lengths.sum())
        if tot:
            rep = np.repeat(starts - (np.cumsum(lengths) - lengths), lengths)
            flat = rep + np.arange(tot, dtype=np.int64)
            prod_rows = np.repeat(base + np.arange(m, dtype=np.int64), lengths)
            cons_l = glob2loc[adj.fo_cons[flat]]
            keep = cons_l >= 0
            e_cons_parts.append(cons_l[keep])
            e_key_parts.append(prod_rows[keep] * 3 + adj.fo_port[flat][keep])
            e_pol_parts.append(1.0 - 2.0 * adj.fo_neg[flat][keep])

        glob2loc[orda] = -1
        base += m
    empty_i = np.zeros(0, dtype=np.int64)
    empty_f = np.zeros(0)
    return _Batch(
        np.concatenate(rows_x0, axis=0),
        np.concatenate(rows_fanin_idx, axis=0),
        np.concatenate(rows_fanin_pol, axis=0),
        np.concatenate(e_cons_parts) if e_cons_parts else empty_i,
        np.concatenate(e_key_parts) if e_key_parts else empty_i,
        np.concatenate(e_pol_parts) if e_pol_parts else empty_f,
        center_rows,
        centers=list(centers),
        canonical=False,
    )


def forward(params: PolicyParams, g: MigGraph, center: int, fanouts=None) -> ActionDistribution:
    node = g.nodes.get(center)
    if node is None or node.kind != MAJ:
        raise MigError(f"node {center} is not a live majority node")
    nb = extract_neighborhood(g, center, params.hp.layers, fanouts)
    batch = build_batch(g, [nb])
    probs, log_probs = _forward_batch(params, batch)
    return ActionDistribution(probs[0], log_probs[0])


def batch_for(params: PolicyParams, g: MigGraph) -> _Batch | None:
    """Index arrays covering every reachable majority node as a center."""
    reach = g.reachable_nodes()
    centers = [nid for nid in sorted(reach) if g.nodes[nid].kind == MAJ]
    if not centers:
        return None
    return _batch_from_adj(_Adjacency(g), centers, params.hp.layers)


def forward_all(params: PolicyParams, g: MigGraph) -> dict[int, ActionDistribution]:
    batch = batch_for(params, g)
    if batch is None:
        return {}
    probs, log_probs = _forward_batch(params, batch)
    return {
        c: ActionDistribution(probs[i], log_probs[i])
        for i, c in enumerate(batch.centers)
    }


def sample_actions(
    dists: dict[int, ActionDistribution], rng: np.random.Generator
) -> dict[int, tuple[OmegaAction, float]]:
    """Independent categorical draw per node; deterministic for a fixed rng."""
    if not dists:
        return {}
    nids = sorted(dists)
    probs = np.stack([dists[n].probs for n in nids])
    cum = np.cumsum(probs, axis=1)
    draws = rng.random(len(nids))
    idxs = (cum < draws[:, None]).sum(axis=1)
    np.clip(idxs, 0, probs.shape[1] - 1, out=idxs)
    return {
        n: (OmegaAction(int(i)), float(dists[n].log_probs[int(i)]))
        for n, i in zip(nids, idxs)
    }


def argmax_actions(dists: dict[int, ActionDistribution]) -> dict[int, tuple[OmegaAction, float]]:
    out = {}
    for nid in sorted(dists):
        d = dists[nid]
        idx = int(np.argmax(d.probs))
        out[nid] = (OmegaAction(idx), float(d.log_probs[idx]))
    return out


def backward(
    params: PolicyParams,
    g: MigGraph,
    center: int,
    action: OmegaAction,
    scale: float,
    grads: PolicyGradients,
):
    """Accumulate scale * grad log pi(action | center's neighborhood)."""
    backward_many(params, g, [center], [action], [scale], grads)


def backward_many(
    params: PolicyParams,
    g: MigGraph,
    centers: list[int],
    actions: list[OmegaAction],
    scales,
    grads: PolicyGradients,
):
    if not centers:
        return
    batch = _batch_from_adj(_Adjacency(g), list(centers), params.hp.layers)
    probs, _ = _forward_batch(params, batch, keep_cache=True)
    _backward_batch(
        params,
        batch,
        probs,
        np.asarray([int(a) for a in actions], dtype=np.int64),
        np.asarray(scales, dtype=float),
        grads,
    )


def backward_batch(
    params: PolicyParams,
    batch: _Batch,
    actions: list[OmegaAction],
    scales,
    grads: PolicyGradients,
    entropy_coef: float = 0.0,
):
    """Gradient pass over a prebuilt batch (one scale per batch center)."""
    probs, _ = _forward_batch(params, batch, keep_cache=True)
    _backward_batch(
        params,
        batch,
        probs,
        np.asarray([int(a) for a in actions], dtype=np.int64),
        np.asarray(scales, dtype=float),
        grads,
        entropy_coef=entropy_coef,
    )


def log_prob_of(params: PolicyParams, g: MigGraph, center: int, action: OmegaAction) -> float:
    return float(forward(params, g, center).log_probs[int(action)])
