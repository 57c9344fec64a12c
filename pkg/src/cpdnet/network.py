"""Circuit description, conductance (Laplacian) matrix construction, and
elimination of passive interior nodes.

The network file format is a strict JSON document::

    {
      "nodes": ["1", "2", "3"],
      "branches": [{"a": "1", "b": "2", "g_siemens": 1.0}, ...],
      "injections": {"1": -3000.0, ...},
      "interior": ["4", ...]
    }

Unknown fields are rejected.  Nodes listed under ``interior`` must not
carry injections; every other node is a port (missing injection entries
default to 0 W).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    DisconnectedGraph,
    DuplicateBranch,
    InteriorNodeHasInjection,
    InvalidNetwork,
    NetworkFormatError,
    NonpositiveConductance,
    SingularInteriorBlock,
)

# Structural identities (symmetry, zero row sums) are enforced at this
# relative tolerance; looser numerical equivalences use NUMERIC_RTOL.
STRUCTURAL_RTOL = 1e-12
NUMERIC_RTOL = 1e-10

_INTERIOR_COND_LIMIT = 1e12


@dataclass(frozen=True)
class Branch:
    """An undirected resistive branch with conductance in siemens."""

    a: str
    b: str
    conductance: float


@dataclass(frozen=True)
class Network:
    """Immutable node/branch description of a DC resistive circuit.

    ``injections`` maps port nodes to constant power in watts (positive =
    generation, negative = load).  ``interior`` nodes are passive: they
    carry no injection and are meant to be eliminated before solving.
    """

    node_ids: tuple[str, ...]
    branches: tuple[Branch, ...]
    injections: Mapping[str, float] = field(default_factory=dict)
    interior: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        object.__setattr__(
            self, "branches", tuple(Branch(b.a, b.b, float(b.conductance)) for b in self.branches)
        )
        object.__setattr__(
            self,
            "injections",
            MappingProxyType({k: float(v) for k, v in self.injections.items()}),
        )
        object.__setattr__(self, "interior", frozenset(self.interior))
        self._validate()

    def _validate(self) -> None:
        if not self.node_ids:
            raise InvalidNetwork("network has no nodes")
        if len(set(self.node_ids)) != len(self.node_ids):
            raise InvalidNetwork("duplicate node ids")
        known = set(self.node_ids)

        seen_pairs = set()
        for br in self.branches:
            if br.a not in known or br.b not in known:
                raise InvalidNetwork(f"branch ({br.a}, {br.b}) references unknown node")
            if br.a == br.b:
                raise InvalidNetwork(f"self-loop branch at node {br.a}")
            if not (math.isfinite(br.conductance) and br.conductance > 0):
                raise NonpositiveConductance(
                    f"branch ({br.a}, {br.b}) has conductance {br.conductance} S"
                )
            pair = frozenset((br.a, br.b))
            if pair in seen_pairs:
                raise DuplicateBranch(f"duplicate branch between {br.a} and {br.b}")
            seen_pairs.add(pair)

        for node, watts in self.injections.items():
            if node not in known:
                raise InvalidNetwork(f"injection on unknown node {node}")
            if not math.isfinite(watts):
                raise InvalidNetwork(f"injection on node {node} is not finite")

        bad = self.interior & set(self.injections)
        if bad:
            raise InteriorNodeHasInjection(
                f"interior nodes carry injections: {sorted(bad)}"
            )
        if not self.interior <= known:
            raise InvalidNetwork("interior lists unknown nodes")
        if self.interior == known:
            raise InvalidNetwork("every node is interior; no ports remain")

        self._check_connected()

    def _check_connected(self) -> None:
        # Exact traversal check; cheaper than inspecting the spectrum.
        adjacency: dict[str, list[str]] = {n: [] for n in self.node_ids}
        for br in self.branches:
            adjacency[br.a].append(br.b)
            adjacency[br.b].append(br.a)
        seen = {self.node_ids[0]}
        stack = [self.node_ids[0]]
        while stack:
            for neighbor in adjacency[stack.pop()]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    stack.append(neighbor)
        if len(seen) != len(self.node_ids):
            missing = sorted(set(self.node_ids) - seen)
            raise DisconnectedGraph(f"nodes unreachable from {self.node_ids[0]}: {missing}")

    @property
    def ports(self) -> tuple[str, ...]:
        """Non-interior nodes, in declaration order."""
        return tuple(n for n in self.node_ids if n not in self.interior)

    def injection_vector(self, nodes: Sequence[str] | None = None) -> np.ndarray:
        """Power injections (watts) over ``nodes`` (default: the ports)."""
        nodes = self.ports if nodes is None else tuple(nodes)
        return np.array([float(self.injections.get(n, 0.0)) for n in nodes])

    def g_min(self) -> float:
        """Smallest branch conductance, taken over branches (not matrix entries)."""
        return min(br.conductance for br in self.branches)


class ConductanceMatrix:
    """Symmetric Laplacian of branch conductances with node labels.

    The matrix is the full singular Laplacian over the listed nodes (the
    ground datum is implicit and never represented).  Instances are
    immutable: the wrapped array is read-only.
    """

    def __init__(self, matrix: np.ndarray, labels: Sequence[str], validate: bool = True):
        m = np.array(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidNetwork(f"conductance matrix must be square, got {m.shape}")
        if len(labels) != m.shape[0]:
            raise InvalidNetwork("label count does not match matrix size")
        m.setflags(write=False)
        self.matrix = m
        self.labels = tuple(labels)
        if validate:
            diag = validate_laplacian(self)
            if not diag.passed:
                raise InvalidNetwork(
                    f"matrix is not a valid conductance Laplacian: {', '.join(diag.flags)}"
                )

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def inf_norm(self) -> float:
        """Maximum absolute row sum; equals twice the largest nodal degree."""
        if self.size == 0:
            return 0.0
        return float(np.abs(self.matrix).sum(axis=1).max())

    def index_of(self, label: str) -> int:
        return self.labels.index(label)

    def __repr__(self) -> str:
        return f"ConductanceMatrix(n={self.size}, labels={self.labels})"


@dataclass(frozen=True)
class LaplacianDiagnostics:
    """Report-only numerical check of the Laplacian identities."""

    row_sum_defect: float
    symmetry_defect: float
    sign_defect: float
    min_eigenvalue: float
    flags: tuple[str, ...]
    passed: bool


def build_conductance_matrix(network: Network) -> ConductanceMatrix:
    """Assemble the branch-conductance Laplacian over all network nodes.

    Off-diagonal entries are the negated branch conductances; each diagonal
    entry is the sum of conductances incident on that node, so rows sum to
    zero exactly.
    """
    n = len(network.node_ids)
    index = {label: i for i, label in enumerate(network.node_ids)}
    g = np.zeros((n, n))
    for br in network.branches:
        i, j = index[br.a], index[br.b]
        g[i, j] -= br.conductance
        g[j, i] -= br.conductance
        g[i, i] += br.conductance
        g[j, j] += br.conductance
    return ConductanceMatrix(g, network.node_ids)


def validate_laplacian(matrix: ConductanceMatrix | np.ndarray) -> LaplacianDiagnostics:
    """Check symmetry, zero row sums, sign pattern, and semidefiniteness.

    Never raises; collects a flag for each violated identity.  Thresholds
    are relative to the matrix infinity norm.
    """
    m = matrix.matrix if isinstance(matrix, ConductanceMatrix) else np.asarray(matrix, dtype=float)
    scale = float(np.abs(m).sum(axis=1).max()) if m.size else 0.0
    tol = STRUCTURAL_RTOL * scale

    symmetry_defect = float(np.abs(m - m.T).max()) if m.size else 0.0
    row_sum_defect = float(np.abs(m.sum(axis=1)).max()) if m.size else 0.0
    off = m - np.diag(np.diag(m))
    sign_defect = float(max(off.max(initial=0.0), 0.0))
    diag_defect = float(max(-np.diag(m).min(initial=0.0), 0.0))
    sym = 0.5 * (m + m.T)
    min_eigenvalue = float(np.linalg.eigvalsh(sym).min()) if m.size else 0.0

    flags = []
    if symmetry_defect > tol:
        flags.append("Symmetry")
    if row_sum_defect > tol:
        flags.append("RowSums")
    if sign_defect > tol or diag_defect > tol:
        flags.append("SignPattern")
    if min_eigenvalue < -tol:
        flags.append("NegativeEigenvalue")
    return LaplacianDiagnostics(
        row_sum_defect=row_sum_defect,
        symmetry_defect=symmetry_defect,
        sign_defect=sign_defect,
        min_eigenvalue=min_eigenvalue,
        flags=tuple(flags),
        passed=not flags,
    )


def kron_reduce(matrix: ConductanceMatrix, interior: Iterable[str]) -> ConductanceMatrix:
    """Eliminate the given nodes via the Schur complement of their block.

    The result is the conductance matrix over the remaining (boundary)
    nodes; boundary port behavior is preserved when the eliminated nodes
    carry zero current injection.
    """
    interior = set(interior)
    unknown = interior - set(matrix.labels)
    if unknown:
        raise InvalidNetwork(f"cannot eliminate unknown nodes: {sorted(unknown)}")
    if not interior:
        return matrix
    boundary = [lab for lab in matrix.labels if lab not in interior]
    if not boundary:
        raise SingularInteriorBlock("cannot eliminate every node; boundary would be empty")

    b_idx = [matrix.index_of(lab) for lab in boundary]
    i_idx = [matrix.index_of(lab) for lab in sorted(interior, key=matrix.index_of)]
    g = matrix.matrix
    g_bb = g[np.ix_(b_idx, b_idx)]
    g_bi = g[np.ix_(b_idx, i_idx)]
    g_ii = g[np.ix_(i_idx, i_idx)]

    if np.linalg.cond(g_ii) > _INTERIOR_COND_LIMIT:
        raise SingularInteriorBlock("interior block is singular or near-singular")
    try:
        reduced = g_bb - g_bi @ np.linalg.solve(g_ii, g_bi.T)
    except np.linalg.LinAlgError as exc:
        raise SingularInteriorBlock("interior block is singular") from exc

    reduced = 0.5 * (reduced + reduced.T)
    # Clip roundoff that lands on the wrong side of the sign pattern.
    scale = float(np.abs(reduced).max(initial=0.0))
    off_mask = ~np.eye(len(boundary), dtype=bool)
    noise = off_mask & (reduced > 0) & (reduced <= STRUCTURAL_RTOL * scale)
    reduced[noise] = 0.0
    return ConductanceMatrix(reduced, boundary)


def reduce_network(network: Network) -> Network:
    """Eliminate the declared interior nodes, returning a ports-only network.

    With no interior nodes the input is returned unchanged.  Reduced branch
    conductances are read off the Schur complement; entries below roundoff
    are dropped.
    """
    if not network.interior:
        return network
    full = build_conductance_matrix(network)
    reduced = kron_reduce(full, network.interior)
    boundary = reduced.labels
    g = reduced.matrix
    drop = STRUCTURAL_RTOL * float(np.abs(g).max(initial=0.0))
    branches = []
    for i in range(len(boundary)):
        for j in range(i + 1, len(boundary)):
            conductance = -g[i, j]
            if conductance > drop:
                branches.append(Branch(boundary[i], boundary[j], float(conductance)))
    injections = {n: w for n, w in network.injections.items() if n in boundary}
    return Network(node_ids=boundary, branches=tuple(branches), injections=injections)


# ---------------------------------------------------------------------------
# Strict JSON input/output
# ---------------------------------------------------------------------------

_TOP_LEVEL_KEYS = {"nodes", "branches", "injections", "interior"}
_BRANCH_KEYS = {"a", "b", "g_siemens"}


def network_from_obj(obj: object) -> Network:
    """Build a Network from a decoded JSON object, rejecting unknown fields."""
    if not isinstance(obj, dict):
        raise NetworkFormatError("top-level value must be a JSON object")
    unknown = set(obj) - _TOP_LEVEL_KEYS
    if unknown:
        raise NetworkFormatError(f"unknown top-level fields: {sorted(unknown)}")
    for required in ("nodes", "branches"):
        if required not in obj:
            raise NetworkFormatError(f"missing required field '{required}'")

    nodes = obj["nodes"]
    if not isinstance(nodes, list) or not all(isinstance(n, str) for n in nodes):
        raise NetworkFormatError("'nodes' must be a list of strings")

    raw_branches = obj["branches"]
    if not isinstance(raw_branches, list):
        raise NetworkFormatError("'branches' must be a list")
    branches = []
    for k, item in enumerate(raw_branches):
        if not isinstance(item, dict):
            raise NetworkFormatError(f"branches[{k}] must be an object")
        extra = set(item) - _BRANCH_KEYS
        if extra:
            raise NetworkFormatError(f"branches[{k}] has unknown fields: {sorted(extra)}")
        if set(item) != _BRANCH_KEYS:
            raise NetworkFormatError(f"branches[{k}] must have fields a, b, g_siemens")
        if not isinstance(item["a"], str) or not isinstance(item["b"], str):
            raise NetworkFormatError(f"branches[{k}]: 'a' and 'b' must be strings")
        if not isinstance(item["g_siemens"], (int, float)) or isinstance(item["g_siemens"], bool):
            raise NetworkFormatError(f"branches[{k}]: 'g_siemens' must be a number")
        branches.append(Branch(item["a"], item["b"], float(item["g_siemens"])))

    injections = obj.get("injections", {})
    if not isinstance(injections, dict):
        raise NetworkFormatError("'injections' must be an object mapping node to watts")
    parsed_injections = {}
    for node, watts in injections.items():
        if not isinstance(watts, (int, float)) or isinstance(watts, bool):
            raise NetworkFormatError(f"injections['{node}'] must be a number")
        parsed_injections[node] = float(watts)

    interior = obj.get("interior", [])
    if not isinstance(interior, list) or not all(isinstance(n, str) for n in interior):
        raise NetworkFormatError("'interior' must be a list of strings")

    return Network(
        node_ids=tuple(nodes),
        branches=tuple(branches),
        injections=parsed_injections,
        interior=frozenset(interior),
    )


def network_to_obj(network: Network) -> dict:
    obj: dict = {
        "nodes": list(network.node_ids),
        "branches": [
            {"a": br.a, "b": br.b, "g_siemens": br.conductance} for br in network.branches
        ],
        "injections": {n: network.injections[n] for n in network.node_ids if n in network.injections},
    }
    if network.interior:
        obj["interior"] = [n for n in network.node_ids if n in network.interior]
    return obj


def dumps_network(network: Network) -> str:
    """Canonical serialization; identical networks produce identical bytes."""
    return json.dumps(network_to_obj(network), indent=2) + "\n"


def loads_network(text: str) -> Network:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    return network_from_obj(obj)


def load_network(path: str) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_network(fh.read())


def save_network(network: Network, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_network(network))
