"""Cross-module interface and edge-path tests."""

import json

import numpy as np
import pytest

from wernerlab import serialize, steer
from wernerlab.cli import main
from wernerlab.extend import (
    ExtensionQuery,
    critical_weight,
    quasi_extension,
    symmetric_extension,
    symmetric_subspace_isometry,
)
from wernerlab.filterops import filtered_weight, qubit_projection
from wernerlab.qmat import DensityMatrix
from wernerlab.solver import lp_vertex_enumeration_check, solve
from wernerlab.states import werner


def test_filter_json_roundtrip():
    f = qubit_projection(3, (1, 2), "B")
    mat, side = serialize.filter_from_json(serialize.filter_to_json(f.mat, f.side))
    assert side == "B"
    assert np.array_equal(mat, f.mat)


def test_assemblage_json_roundtrip():
    psi = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)
    rho = DensityMatrix(2, 2, np.outer(psi, psi.conj()))
    asm = steer.assemblage_from(rho, steer.mub_qubit_measurements(2), "A")
    back = steer.assemblage_from_json(steer.assemblage_to_json(asm))
    assert back.n_settings == 2 and back.n_outcomes == 2
    for x in range(2):
        for a in range(2):
            assert np.array_equal(back.sigma[x][a], asm.sigma[x][a])


def test_correlation_json_roundtrip():
    rng = np.random.default_rng(0)
    corr = steer.correlation_from(
        werner(3, 0.2), steer.random_projective(3, 2, rng), steer.random_projective(3, 2, rng)
    )
    back = steer.correlation_from_json(steer.correlation_to_json(corr))
    assert back.scenario == corr.scenario
    assert np.allclose(back.p, corr.p, atol=1e-15)


def test_vertex_oracle_on_tiny_nonlocal_content():
    # one-setting deterministic box: the LP fits in the 12-variable oracle
    p = np.zeros((1, 1, 2, 2))
    p[0, 0, 1, 0] = 1.0
    prog = steer.nonlocal_content_program(steer.Correlation(p))
    assert prog.n <= 12
    exact = lp_vertex_enumeration_check(prog)
    assert exact == pytest.approx(0.0, abs=1e-12)
    assert solve(prog, tol=1e-9).primal_obj == pytest.approx(exact, abs=1e-7)


def test_extension_k4_two_qubit_threshold():
    # known 3/8 threshold at (d, k) = (2, 4) exercises the four-copy path
    res = symmetric_extension(ExtensionQuery(werner(2, 0.0), 4, "B", "SE"))
    assert res.status == "OPTIMAL"
    assert critical_weight(res.t_star, 2) == pytest.approx(3 / 8, abs=2e-3)
    assert res.t_star == pytest.approx(2.0, abs=1e-3)


def test_quasi_extension_k4_partition_subset():
    q = ExtensionQuery(werner(2, 0.1), 4, "B", "SQE")
    sqe = quasi_extension(q, tol=1e-6)
    se = symmetric_extension(ExtensionQuery(werner(2, 0.1), 4, "B", "SE"), tol=1e-6)
    assert sqe.status == "OPTIMAL"
    assert sqe.t_star <= se.t_star + 1e-5


def test_symmetric_isometry_size_guard():
    with pytest.raises(ValueError, match="too large"):
        symmetric_subspace_isometry(4, 4)


def test_filter_boundary_maps_to_qubit_steering_threshold():
    # v = 2/7 maps exactly onto the two-qubit projective-steering boundary 3/8
    assert filtered_weight(3, 2 / 7) == pytest.approx(3 / 8, abs=1e-15)
    # and v = v_distill = 0.4 maps onto the two-qubit teleportation boundary 1/2
    assert filtered_weight(3, 0.4) == pytest.approx(0.5, abs=1e-15)


def test_pipeline_low_noise_directions(tmp_path):
    report_file = tmp_path / "r.json"
    code = main(
        [
            "pipeline",
            "--v",
            "0.0",
            "--depol",
            "0.02",
            "--eps",
            "0.01",
            "--shots",
            "30000",
            "--bootstrap",
            "10",
            "--restarts",
            "8",
            "--sr-restarts",
            "3",
            "--seed",
            "12",
            "--strict",
            "--out",
            str(report_file),
        ]
    )
    assert code == 0
    report = json.loads(report_file.read_text())
    filtered = report["filtered"]
    assert filtered["certificates"]["chsh"]["value"] > 2.6
    assert filtered["certificates"]["dense_coding"]["verdict"] == "PASS"
    assert filtered["steering_robustness"] > report["unfiltered"]["steering_robustness"]
