import json

import numpy as np
import pytest

from cpdnet import SweepConfig, build_conductance_matrix, generate_instance, run_sweep
from cpdnet.certificates import certificate_spectral
from cpdnet.decomposition import decompose_power
from cpdnet.errors import GenerationFailed, NetworkFormatError
from cpdnet.spectral import laplacian_spectrum
from cpdnet.sweep import CSV_COLUMNS, write_rows_csv, write_summary_json


def small_config(**overrides):
    defaults = dict(seed=5, n_instances=30, node_count_range=(2, 6))
    defaults.update(overrides)
    return SweepConfig(**defaults)


class TestGenerateInstance:
    def test_deterministic(self):
        cfg = small_config()
        a_net, a_p = generate_instance(cfg, 3)
        b_net, b_p = generate_instance(cfg, 3)
        assert a_net == b_net
        np.testing.assert_array_equal(a_p, b_p)

    def test_distinct_indices_differ(self):
        cfg = small_config()
        a_net, _ = generate_instance(cfg, 0)
        b_net, _ = generate_instance(cfg, 1)
        assert a_net != b_net

    def test_fixed_loss_fraction_enforced(self):
        cfg = SweepConfig(
            seed=1,
            n_instances=1,
            node_count_range=(3, 3),
            topology="complete",
            conductance_range=(1.0, 1.0),
            loss_fraction=0.05,
        )
        _, p = generate_instance(cfg, 0)
        pd = decompose_power(p)
        assert pd.loss / pd.transfer_norm2 == pytest.approx(0.05, abs=1e-9)

    def test_random_connected_networks_are_valid(self):
        # Network construction itself enforces connectivity and positivity;
        # verify the spectrum confirms connectedness too.
        cfg = small_config(topology="random_connected", edge_prob=0.5, node_count_range=(6, 6))
        for i in range(10):
            net, _ = generate_instance(cfg, i)
            summary = laplacian_spectrum(build_conductance_matrix(net), net)
            assert summary.lambda2 > 0

    @pytest.mark.parametrize("topology,expected_edges", [
        ("path", lambda n: n - 1),
        ("cycle", lambda n: n),
        ("complete", lambda n: n * (n - 1) // 2),
    ])
    def test_fixed_topologies(self, topology, expected_edges):
        cfg = small_config(
            topology=topology,
            node_count_range=(5, 5),
            require_spectral_applicable=False,
        )
        net, _ = generate_instance(cfg, 0)
        assert len(net.branches) == expected_edges(5)

    def test_applicability_filter_respected(self):
        cfg = small_config(n_instances=10)
        for i in range(10):
            net, p = generate_instance(cfg, i)
            summary = laplacian_spectrum(build_conductance_matrix(net), net)
            assert certificate_spectral(summary, decompose_power(p)).applicable

    def test_generation_failure_after_retries(self):
        # Path graphs with extreme conductance spread have large eigenratio;
        # a high loss fraction makes the applicability filter unreachable.
        cfg = SweepConfig(
            seed=2,
            n_instances=1,
            node_count_range=(8, 8),
            topology="path",
            conductance_range=(0.5, 2.0),
            loss_fraction=0.45,
            max_attempts=5,
        )
        with pytest.raises(GenerationFailed):
            generate_instance(cfg, 0)


class TestRunSweep:
    def test_zero_violations_on_default_style_config(self):
        report = run_sweep(small_config(n_instances=60))
        assert report.aggregates["soundness_violations"] == 0
        assert report.aggregates["rows"] == 60
        assert report.aggregates["spectral_applicable_count"] == 60

    def test_empty_sweep(self):
        report = run_sweep(small_config(n_instances=0))
        assert report.rows == []
        assert report.aggregates["rows"] == 0
        assert report.aggregates["soundness_violations"] == 0
        assert report.aggregates["tightness_v0"]["count"] == 0

    def test_bit_identical_reports(self, tmp_path):
        cfg = small_config(n_instances=25)
        paths = []
        for run in range(2):
            report = run_sweep(cfg)
            path = tmp_path / f"rows{run}.csv"
            write_rows_csv(report, str(path))
            write_summary_json(report, str(tmp_path / f"summary{run}.json"))
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        assert (tmp_path / "summary0.json").read_bytes() == (tmp_path / "summary1.json").read_bytes()

    def test_tightness_at_least_one_on_inside_instances(self):
        report = run_sweep(small_config(n_instances=40))
        for row in report.rows:
            if row.membership_spectral == "inside" and row.tightness_v0 is not None:
                assert row.tightness_v0 >= 1.0

    def test_tightness_grows_with_loss_fraction(self):
        # Direct evaluation: the certified floor is asymptotically exact in
        # the small-loss regime, so the ratio to it grows with the loss
        # fraction.
        means = []
        for rho in (0.01, 0.05, 0.1):
            cfg = SweepConfig(
                seed=3,
                n_instances=40,
                node_count_range=(3, 3),
                topology="complete",
                conductance_range=(1.0, 1.0),
                loss_fraction=rho,
            )
            means.append(run_sweep(cfg).aggregates["tightness_v0"]["mean"])
        assert means[0] < means[1] < means[2]

    def test_csv_schema(self, tmp_path):
        report = run_sweep(small_config(n_instances=5))
        path = tmp_path / "rows.csv"
        write_rows_csv(report, str(path))
        header = path.read_text().splitlines()[0]
        assert header == ",".join(CSV_COLUMNS)
        assert len(path.read_text().splitlines()) == 6


class TestSweepConfig:
    def test_unknown_field_rejected(self):
        with pytest.raises(NetworkFormatError, match="unknown"):
            SweepConfig.from_json('{"seed": 1, "bogus": true}')

    def test_invalid_topology_rejected(self):
        with pytest.raises(NetworkFormatError):
            SweepConfig.from_json('{"topology": "torus"}')

    def test_invalid_ranges_rejected(self):
        with pytest.raises(ValueError):
            SweepConfig(node_count_range=(1, 4))
        with pytest.raises(ValueError):
            SweepConfig(conductance_range=(-1.0, 2.0))
        with pytest.raises(ValueError):
            SweepConfig(edge_prob=0.0)
        with pytest.raises(ValueError):
            SweepConfig(loss_fraction=-0.1)

    def test_round_trip_from_json(self):
        text = json.dumps(
            {
                "seed": 9,
                "n_instances": 12,
                "node_count_range": [2, 4],
                "topology": "cycle",
                "conductance_range": [1.0, 1.0],
                "power_scheme": "uniform_random",
            }
        )
        cfg = SweepConfig.from_json(text)
        assert cfg.seed == 9
        assert cfg.topology == "cycle"
        assert cfg.node_count_range == (2, 4)
        assert cfg.power_scheme == "uniform_random"
