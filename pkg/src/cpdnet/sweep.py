"""Randomized instance generation and Monte Carlo certificate studies.

``run_sweep`` generates seeded random instances, evaluates both
certificates, solves each applicable instance with the multi-start Newton
solver, and checks every found operating point against the certified
region.  The report carries one row per generated instance plus
aggregates; the soundness violation count is present even when zero,
because a nonzero count would falsify the certified bounds and is the
headline result of the study.

CSV column schema (stable, one row per instance):

    index, n_nodes, topology, eigenratio, loss, transfer_norm2,
    transfer_norm_inf, delta_spectral, v_min_spectral, x_max_spectral,
    spectral_applicable, delta_infnorm, v_min_infnorm, x_max_infnorm,
    infnorm_applicable, n_solutions, v0_top, deviation_inf_top,
    membership_spectral, membership_infnorm, tightness_v0,
    tightness_deviation, solver_converged
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field, asdict

import numpy as np

from .certificates import INSIDE, NOT_APPLICABLE, OUTSIDE, certificate_infnorm, certificate_spectral, check_membership
from .decomposition import decompose_power
from .errors import GenerationFailed, NetworkFormatError
from .network import Branch, Network, build_conductance_matrix
from .solver import SolverOptions, solve_operating_point
from .spectral import laplacian_spectrum

logger = logging.getLogger(__name__)

TOPOLOGIES = ("path", "cycle", "complete", "random_connected")
POWER_SCHEMES = ("fixed_loss_fraction", "uniform_random")

NO_SOLUTIONS = "no_solutions"

CSV_COLUMNS = (
    "index",
    "n_nodes",
    "topology",
    "eigenratio",
    "loss",
    "transfer_norm2",
    "transfer_norm_inf",
    "delta_spectral",
    "v_min_spectral",
    "x_max_spectral",
    "spectral_applicable",
    "delta_infnorm",
    "v_min_infnorm",
    "x_max_infnorm",
    "infnorm_applicable",
    "n_solutions",
    "v0_top",
    "deviation_inf_top",
    "membership_spectral",
    "membership_infnorm",
    "tightness_v0",
    "tightness_deviation",
    "solver_converged",
)


@dataclass
class SweepConfig:
    seed: int = 0
    n_instances: int = 100
    node_count_range: tuple[int, int] = (2, 8)
    topology: str = "random_connected"
    edge_prob: float = 0.5
    conductance_range: tuple[float, float] = (0.5, 2.0)
    power_scheme: str = "fixed_loss_fraction"
    loss_fraction: float = 0.05
    power_scale_range: tuple[float, float] = (100.0, 5000.0)
    require_spectral_applicable: bool = True
    require_feasible: bool = True
    n_starts: int = 8
    max_attempts: int = 100

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if self.n_instances < 0:
            raise ValueError("n_instances must be non-negative")
        lo, hi = self.node_count_range
        if not (2 <= lo <= hi):
            raise ValueError("node_count_range must satisfy 2 <= lo <= hi")
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}")
        if not 0.0 < self.edge_prob <= 1.0:
            raise ValueError("edge_prob must lie in (0, 1]")
        g_lo, g_hi = self.conductance_range
        if not (0.0 < g_lo <= g_hi):
            raise ValueError("conductance_range must be positive and ordered")
        if self.power_scheme not in POWER_SCHEMES:
            raise ValueError(f"power_scheme must be one of {POWER_SCHEMES}")
        if self.loss_fraction < 0:
            raise ValueError("loss_fraction must be non-negative")
        s_lo, s_hi = self.power_scale_range
        if not (0.0 < s_lo <= s_hi):
            raise ValueError("power_scale_range must be positive and ordered")

    @classmethod
    def from_obj(cls, obj: object) -> "SweepConfig":
        if not isinstance(obj, dict):
            raise NetworkFormatError("sweep config must be a JSON object")
        known = {f for f in cls.__dataclass_fields__}  # noqa: C416
        unknown = set(obj) - known
        if unknown:
            raise NetworkFormatError(f"unknown sweep config fields: {sorted(unknown)}")
        kwargs = dict(obj)
        for key in ("node_count_range", "conductance_range", "power_scale_range"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise NetworkFormatError(f"invalid sweep config: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "SweepConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise NetworkFormatError(
                f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
        return cls.from_obj(obj)


@dataclass
class InstanceRow:
    index: int
    n_nodes: int
    topology: str
    eigenratio: float
    loss: float
    transfer_norm2: float
    transfer_norm_inf: float
    delta_spectral: float
    v_min_spectral: float
    x_max_spectral: float
    spectral_applicable: bool
    delta_infnorm: float
    v_min_infnorm: float
    x_max_infnorm: float
    infnorm_applicable: bool
    n_solutions: int
    v0_top: float | None
    deviation_inf_top: float | None
    membership_spectral: str
    membership_infnorm: str
    tightness_v0: float | None
    tightness_deviation: float | None
    solver_converged: bool


@dataclass
class SweepReport:
    config: SweepConfig
    rows: list[InstanceRow]
    aggregates: dict
    violations: list[str] = field(default_factory=list)


def _edges_for_topology(config: SweepConfig, n: int, rng: np.random.Generator) -> list[tuple[int, int]]:
    if config.topology == "path":
        return [(i, i + 1) for i in range(n - 1)]
    if config.topology == "cycle":
        edges = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            edges.append((n - 1, 0))
        return edges
    if config.topology == "complete":
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    # random_connected: random spanning tree first, then extra edges.
    edges = [(int(rng.integers(0, i)), i) for i in range(1, n)]
    present = {frozenset(e) for e in edges}
    for i in range(n):
        for j in range(i + 1, n):
            if frozenset((i, j)) not in present and rng.random() < config.edge_prob:
                edges.append((i, j))
                present.add(frozenset((i, j)))
    return edges


def _powers(config: SweepConfig, n: int, rng: np.random.Generator) -> np.ndarray | None:
    scale = float(rng.uniform(*config.power_scale_range))
    if config.power_scheme == "uniform_random":
        return rng.uniform(-1.0, 1.0, n) * scale
    raw = rng.standard_normal(n)
    transfer = raw - raw.mean()
    norm = float(np.linalg.norm(transfer))
    if norm < 1e-9:
        return None
    transfer *= scale / norm
    return config.loss_fraction * scale / n + transfer


def generate_instance(config: SweepConfig, index: int) -> tuple[Network, np.ndarray]:
    """Generate one connected instance, deterministic in (config.seed, index).

    Filter misses draw a fresh attempt from a derived stream; exceeding
    ``max_attempts`` raises GenerationFailed.
    """
    for attempt in range(config.max_attempts):
        rng = np.random.default_rng([config.seed, index, attempt])
        lo, hi = config.node_count_range
        n = int(rng.integers(lo, hi + 1))
        labels = tuple(f"n{i}" for i in range(n))
        branches = tuple(
            Branch(labels[a], labels[b], float(rng.uniform(*config.conductance_range)))
            for a, b in _edges_for_topology(config, n, rng)
        )
        powers = _powers(config, n, rng)
        if powers is None:
            continue
        network = Network(
            node_ids=labels,
            branches=branches,
            injections={lab: float(w) for lab, w in zip(labels, powers)},
        )
        if config.require_feasible and float(powers.sum()) < 0.0:
            continue
        if config.require_spectral_applicable:
            summary = laplacian_spectrum(build_conductance_matrix(network), network)
            if not certificate_spectral(summary, decompose_power(powers)).applicable:
                continue
        return network, powers
    raise GenerationFailed(
        f"instance {index}: filters unmet after {config.max_attempts} attempts"
    )


def _membership_verdict(memberships: list) -> str:
    if not memberships:
        return NO_SOLUTIONS
    if all(m.status == NOT_APPLICABLE for m in memberships):
        return NOT_APPLICABLE
    if any(m.status == OUTSIDE for m in memberships):
        return OUTSIDE
    return INSIDE


def _stats(values: list[float]) -> dict:
    if not values:
        return {"count": 0, "mean": None, "min": None, "max": None}
    arr = np.asarray(values)
    return {
        "count": len(values),
        "mean": float(arr.mean()),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


def run_sweep(config: SweepConfig) -> SweepReport:
    """Run the Monte Carlo study; deterministic given the config."""
    rows: list[InstanceRow] = []
    violations: list[str] = []
    generation_failures = 0
    solver_failures = 0

    for index in range(config.n_instances):
        try:
            network, powers = generate_instance(config, index)
        except GenerationFailed as exc:
            logger.warning("%s", exc)
            generation_failures += 1
            continue

        matrix = build_conductance_matrix(network)
        summary = laplacian_spectrum(matrix, network)
        pd = decompose_power(powers)
        cert_s = certificate_spectral(summary, pd)
        cert_i = certificate_infnorm(summary, pd)

        options = SolverOptions(
            n_starts=config.n_starts, seed=config.seed * 1_000_003 + index
        )
        points = solve_operating_point(matrix, powers, options)
        if not points:
            solver_failures += 1

        member_s = [check_membership(cert_s, op) for op in points]
        member_i = [check_membership(cert_i, op) for op in points]
        for kind, cert, members in (("spectral", cert_s, member_s), ("infnorm", cert_i, member_i)):
            for op, m in zip(points, members):
                if m.status == OUTSIDE:
                    violations.append(
                        f"instance {index} ({kind}): v0={op.v0:.6g}, "
                        f"dev={op.deviation_inf:.6g}: " + "; ".join(m.violations)
                    )

        top = points[0] if points else None
        tight_v0 = None
        tight_dev = None
        if top is not None and cert_s.applicable:
            tight_v0 = top.v0 / cert_s.v_min
            if cert_s.x_max > 0:
                tight_dev = top.deviation_inf / cert_s.x_max

        rows.append(
            InstanceRow(
                index=index,
                n_nodes=len(network.node_ids),
                topology=config.topology,
                eigenratio=summary.eigenratio,
                loss=pd.loss,
                transfer_norm2=pd.transfer_norm2,
                transfer_norm_inf=pd.transfer_norm_inf,
                delta_spectral=cert_s.delta,
                v_min_spectral=cert_s.v_min,
                x_max_spectral=cert_s.x_max,
                spectral_applicable=cert_s.applicable,
                delta_infnorm=cert_i.delta,
                v_min_infnorm=cert_i.v_min,
                x_max_infnorm=cert_i.x_max,
                infnorm_applicable=cert_i.applicable,
                n_solutions=len(points),
                v0_top=None if top is None else top.v0,
                deviation_inf_top=None if top is None else top.deviation_inf,
                membership_spectral=_membership_verdict(member_s),
                membership_infnorm=_membership_verdict(member_i),
                tightness_v0=tight_v0,
                tightness_deviation=tight_dev,
                solver_converged=bool(points),
            )
        )

    tight_v0_values = [r.tightness_v0 for r in rows if r.tightness_v0 is not None]
    tight_dev_values = [r.tightness_deviation for r in rows if r.tightness_deviation is not None]
    paired = [(r.eigenratio, r.tightness_v0) for r in rows if r.tightness_v0 is not None]
    correlation = None
    if len(paired) >= 2:
        xs, ys = np.array([p[0] for p in paired]), np.array([p[1] for p in paired])
        if xs.std() > 0 and ys.std() > 0:
            correlation = float(np.corrcoef(xs, ys)[0, 1])

    aggregates = {
        "instances_requested": config.n_instances,
        "rows": len(rows),
        "generation_failures": generation_failures,
        "solver_failures": solver_failures,
        "soundness_violations": len(violations),
        "spectral_applicable_count": sum(r.spectral_applicable for r in rows),
        "infnorm_applicable_count": sum(r.infnorm_applicable for r in rows),
        "tightness_v0": _stats(tight_v0_values),
        "tightness_deviation": _stats(tight_dev_values),
        "eigenratio_tightness_correlation": correlation,
    }
    return SweepReport(config=config, rows=rows, aggregates=aggregates, violations=violations)


def write_rows_csv(report: SweepReport, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for row in report.rows:
            record = asdict(row)
            writer.writerow([_csv_cell(record[col]) for col in CSV_COLUMNS])


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_summary_json(report: SweepReport, path: str) -> None:
    payload = {
        "config": asdict(report.config),
        "aggregates": report.aggregates,
        "violations": report.violations,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
