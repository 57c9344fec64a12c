import numpy as np
import pytest

from cpdnet import Branch, Network, build_conductance_matrix

# Three-port benchmark: loads of 3 kW at two ports, a 6.6 kW source at the
# port joined by the 1 S and 0.5 S branches.  Known solution near
# (201.4, 205.2, 223.6) V.
GOLDEN_INJECTIONS = {"1": -3000.0, "2": -3000.0, "3": 6600.0}
GOLDEN_V = np.array([201.4, 205.2, 223.6])


@pytest.fixture
def golden_network() -> Network:
    return Network(
        node_ids=("1", "2", "3"),
        branches=(
            Branch("1", "2", 1.0),
            Branch("2", "3", 1.0),
            Branch("1", "3", 0.5),
        ),
        injections=dict(GOLDEN_INJECTIONS),
    )


@pytest.fixture
def golden_matrix(golden_network):
    return build_conductance_matrix(golden_network)


def make_random_network(
    rng: np.random.Generator,
    n: int,
    edge_prob: float = 0.6,
    conductance_range: tuple[float, float] = (0.5, 2.0),
    interior_count: int = 0,
    injections: dict | None = None,
) -> Network:
    """Connected random network: spanning tree plus extra edges."""
    labels = tuple(f"n{i}" for i in range(n))
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    present = {frozenset(e) for e in edges}
    for i in range(n):
        for j in range(i + 1, n):
            if frozenset((i, j)) not in present and rng.random() < edge_prob:
                edges.append((i, j))
                present.add(frozenset((i, j)))
    branches = tuple(
        Branch(labels[a], labels[b], float(rng.uniform(*conductance_range)))
        for a, b in edges
    )
    interior = frozenset()
    if interior_count:
        picks = rng.choice(n, size=interior_count, replace=False)
        interior = frozenset(labels[i] for i in picks)
    injections = dict(injections or {})
    injections = {k: v for k, v in injections.items() if k not in interior}
    return Network(
        node_ids=labels,
        branches=branches,
        injections=injections,
        interior=interior,
    )
