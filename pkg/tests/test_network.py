import json

import numpy as np
import pytest

from cpdnet import (
    Branch,
    ConductanceMatrix,
    Network,
    build_conductance_matrix,
    dumps_network,
    kron_reduce,
    loads_network,
    reduce_network,
    validate_laplacian,
)
from cpdnet.errors import (
    DisconnectedGraph,
    DuplicateBranch,
    InteriorNodeHasInjection,
    InvalidNetwork,
    NetworkFormatError,
    NonpositiveConductance,
    SingularInteriorBlock,
)

from conftest import make_random_network


def two_node(g=1.0):
    return Network(("a", "b"), (Branch("a", "b", g),))


class TestBuildConductanceMatrix:
    def test_single_branch(self):
        cm = build_conductance_matrix(two_node())
        np.testing.assert_allclose(cm.matrix, [[1, -1], [-1, 1]])

    def test_three_node_benchmark(self, golden_matrix):
        expected = [[1.5, -1, -0.5], [-1, 2, -1], [-0.5, -1, 1.5]]
        np.testing.assert_allclose(golden_matrix.matrix, expected)

    def test_uniform_triangle(self):
        net = Network(
            ("a", "b", "c"),
            (Branch("a", "b", 2.0), Branch("b", "c", 2.0), Branch("a", "c", 2.0)),
        )
        cm = build_conductance_matrix(net)
        np.testing.assert_allclose(np.diag(cm.matrix), [4, 4, 4])
        np.testing.assert_allclose(cm.matrix.sum(axis=1), 0, atol=1e-15)

    def test_zero_row_sums_on_random_networks(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            net = make_random_network(rng, int(rng.integers(2, 12)))
            cm = build_conductance_matrix(net)
            defect = np.abs(cm.matrix.sum(axis=1)).max()
            assert defect <= 1e-12 * cm.inf_norm()

    def test_matrix_is_read_only(self, golden_matrix):
        with pytest.raises(ValueError):
            golden_matrix.matrix[0, 0] = 9.0


class TestNetworkValidation:
    def test_disconnected_graph(self):
        with pytest.raises(DisconnectedGraph):
            Network(("a", "b", "c"), (Branch("a", "b", 1.0),))

    def test_nonpositive_conductance(self):
        with pytest.raises(NonpositiveConductance):
            Network(("a", "b"), (Branch("a", "b", 0.0),))
        with pytest.raises(NonpositiveConductance):
            Network(("a", "b"), (Branch("a", "b", -2.0),))

    def test_duplicate_branch(self):
        with pytest.raises(DuplicateBranch):
            Network(("a", "b"), (Branch("a", "b", 1.0), Branch("b", "a", 2.0)))

    def test_self_loop(self):
        with pytest.raises(InvalidNetwork):
            Network(("a", "b"), (Branch("a", "b", 1.0), Branch("a", "a", 1.0)))

    def test_interior_with_injection(self):
        with pytest.raises(InteriorNodeHasInjection):
            Network(
                ("a", "m", "b"),
                (Branch("a", "m", 1.0), Branch("m", "b", 1.0)),
                injections={"m": 5.0},
                interior=frozenset({"m"}),
            )

    def test_unknown_injection_node(self):
        with pytest.raises(InvalidNetwork):
            Network(("a", "b"), (Branch("a", "b", 1.0),), injections={"z": 1.0})


class TestKronReduce:
    def test_series_path(self):
        net = Network(
            ("a", "m", "b"),
            (Branch("a", "m", 2.0), Branch("m", "b", 2.0)),
            interior=frozenset({"m"}),
        )
        cm = build_conductance_matrix(net)
        reduced = kron_reduce(cm, {"m"})
        np.testing.assert_allclose(reduced.matrix, [[1, -1], [-1, 1]], atol=1e-14)
        assert reduced.labels == ("a", "b")

    def test_empty_interior_is_identity(self, golden_matrix):
        assert kron_reduce(golden_matrix, set()) is golden_matrix

    def test_star_center_matches_dense_schur_complement(self):
        labels = ("hub", "p1", "p2", "p3")
        net = Network(
            labels,
            tuple(Branch("hub", p, 1.0) for p in labels[1:]),
            interior=frozenset({"hub"}),
        )
        cm = build_conductance_matrix(net)
        reduced = kron_reduce(cm, {"hub"})

        g = cm.matrix
        keep = [1, 2, 3]
        drop = [0]
        oracle = g[np.ix_(keep, keep)] - g[np.ix_(keep, drop)] @ np.linalg.inv(
            g[np.ix_(drop, drop)]
        ) @ g[np.ix_(drop, keep)]
        np.testing.assert_allclose(reduced.matrix, oracle, rtol=1e-12, atol=1e-14)

    def test_result_is_valid_laplacian(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(4, 10))
            net = make_random_network(rng, n, interior_count=int(rng.integers(1, n - 1)))
            reduced = kron_reduce(build_conductance_matrix(net), net.interior)
            assert validate_laplacian(reduced).passed

    def test_port_behavior_preserved(self):
        # Boundary currents of the reduced matrix must match the full
        # system with interior voltages solved from zero interior current.
        rng = np.random.default_rng(17)
        for _ in range(25):
            n = int(rng.integers(4, 10))
            k = int(rng.integers(1, n - 1))
            net = make_random_network(rng, n, interior_count=k)
            cm = build_conductance_matrix(net)
            reduced = kron_reduce(cm, net.interior)

            b_idx = [cm.index_of(lab) for lab in reduced.labels]
            i_idx = [cm.index_of(lab) for lab in net.interior]
            g = cm.matrix
            v_b = rng.uniform(1.0, 10.0, len(b_idx))
            v_i = np.linalg.solve(g[np.ix_(i_idx, i_idx)], -g[np.ix_(i_idx, b_idx)] @ v_b)
            currents_full = g[np.ix_(b_idx, b_idx)] @ v_b + g[np.ix_(b_idx, i_idx)] @ v_i
            currents_reduced = reduced.matrix @ v_b
            scale = max(np.abs(currents_full).max(), 1e-30)
            assert np.abs(currents_full - currents_reduced).max() <= 1e-10 * scale

    def test_block_equals_sequential_elimination(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            n = int(rng.integers(4, 9))
            k = int(rng.integers(2, n - 1))
            net = make_random_network(rng, n, interior_count=k)
            cm = build_conductance_matrix(net)
            block = kron_reduce(cm, net.interior)
            stepwise = cm
            for node in sorted(net.interior):
                stepwise = kron_reduce(stepwise, {node})
            # Align label order before comparing.
            perm = [stepwise.labels.index(lab) for lab in block.labels]
            aligned = stepwise.matrix[np.ix_(perm, perm)]
            scale = np.abs(block.matrix).max()
            assert np.abs(block.matrix - aligned).max() <= 1e-10 * scale

    def test_eliminating_everything_fails(self, golden_matrix):
        with pytest.raises(SingularInteriorBlock):
            kron_reduce(golden_matrix, {"1", "2", "3"})


class TestReduceNetwork:
    def test_no_interior_returns_same_object(self, golden_network):
        assert reduce_network(golden_network) is golden_network

    def test_reduced_network_rebuilds_same_matrix(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = int(rng.integers(4, 9))
            net = make_random_network(rng, n, interior_count=int(rng.integers(1, n - 1)))
            direct = kron_reduce(build_conductance_matrix(net), net.interior)
            rebuilt = build_conductance_matrix(reduce_network(net))
            assert rebuilt.labels == direct.labels
            scale = max(np.abs(direct.matrix).max(), 1e-30)
            assert np.abs(rebuilt.matrix - direct.matrix).max() <= 1e-12 * scale


class TestValidateLaplacian:
    def test_valid_matrix_passes(self, golden_matrix):
        diag = validate_laplacian(golden_matrix)
        assert diag.passed
        assert diag.row_sum_defect <= 1e-12 * golden_matrix.inf_norm()

    def test_positive_offdiagonal_flagged(self):
        diag = validate_laplacian(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert not diag.passed
        assert "SignPattern" in diag.flags

    def test_asymmetric_flagged(self):
        diag = validate_laplacian(np.array([[1.0, -1.0], [-0.5, 0.5]]))
        assert not diag.passed
        assert "Symmetry" in diag.flags

    def test_conductance_matrix_constructor_rejects_invalid(self):
        with pytest.raises(InvalidNetwork):
            ConductanceMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]), ("a", "b"))


class TestNetworkJson:
    def test_round_trip(self, golden_network):
        text = dumps_network(golden_network)
        again = loads_network(text)
        assert again == golden_network
        assert dumps_network(again) == text

    def test_unknown_top_level_field_rejected(self):
        with pytest.raises(NetworkFormatError, match="unknown top-level"):
            loads_network('{"nodes": ["a"], "branches": [], "color": "red"}')

    def test_unknown_branch_field_rejected(self):
        doc = {
            "nodes": ["a", "b"],
            "branches": [{"a": "a", "b": "b", "g_siemens": 1.0, "length": 3}],
        }
        with pytest.raises(NetworkFormatError, match="unknown fields"):
            loads_network(json.dumps(doc))

    def test_malformed_json_reports_line(self):
        with pytest.raises(NetworkFormatError, match="line 2"):
            loads_network('{\n  "nodes": [,]\n}')

    def test_missing_required_field(self):
        with pytest.raises(NetworkFormatError, match="branches"):
            loads_network('{"nodes": ["a"]}')

    def test_branch_conductance_must_be_number(self):
        doc = {"nodes": ["a", "b"], "branches": [{"a": "a", "b": "b", "g_siemens": "1"}]}
        with pytest.raises(NetworkFormatError, match="number"):
            loads_network(json.dumps(doc))

    def test_injection_values_must_be_numbers(self):
        doc = {
            "nodes": ["a", "b"],
            "branches": [{"a": "a", "b": "b", "g_siemens": 1.0}],
            "injections": {"a": True},
        }
        with pytest.raises(NetworkFormatError):
            loads_network(json.dumps(doc))
