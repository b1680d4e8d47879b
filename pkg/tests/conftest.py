import random

import pytest

from migopt.mig import MigGraph, Signal, new_graph
from migopt import rewrite as rw


def crude_random_graph(pi_count: int, node_count: int, seed: int, po_count: int = 2) -> MigGraph:
    """Random collapse-free graph builder independent of migopt.datagen."""
    rng = random.Random(seed)
    g = new_graph(pi_count)
    pool = list(range(pi_count + 1))
    for _ in range(node_count):
        ids = rng.sample(pool, 3)
        s = g.add_majority(*(Signal(i, rng.random() < 0.5) for i in ids))
        pool.append(s.node)
    maj = pool[pi_count + 1 :]
    outs = [Signal(maj[-1], rng.random() < 0.5)]
    for _ in range(po_count - 1):
        outs.append(Signal(rng.choice(maj), rng.random() < 0.5))
    g.set_outputs(outs)
    return g


def clean_random_graph(pi_count: int, node_count: int, seed: int) -> MigGraph:
    g = crude_random_graph(pi_count, node_count, seed)
    rw.lambda_fixpoint(g)
    rw.delete_dead(g)
    return g


@pytest.fixture
def and_graph():
    g = new_graph(2)
    out = g.add_and(g.pi(1), g.pi(2))
    g.set_outputs([out])
    return g
