import json

import numpy as np
import pytest

from cotrans import metrics, run
from cotrans.analysis import check_small_gain, GainCertificateInput
from cotrans.emitters import (
    certificate_dict,
    metrics_dict,
    plot_curves_svg,
    plot_trajectory_svg,
    read_csv_columns,
    write_errors_csv,
    write_report_json,
    write_trajectory_csv,
    write_velocities_csv,
)

import support


@pytest.fixture(scope="module")
def short_log():
    return run(support.circle_config(t_end=0.05))


class TestCsvSeries:
    def test_trajectory_header_and_round_trip(self, short_log, tmp_path):
        path = tmp_path / "trajectory.csv"
        write_trajectory_csv(short_log, path)
        cols = read_csv_columns(path)
        expected = ["t", "p_o_x", "p_o_y", "v_o_x", "v_o_y"]
        for i in (1, 2, 3):
            expected += [
                f"p_{i}_x",
                f"p_{i}_y",
                f"p_star_{i}_x",
                f"p_star_{i}_y",
                f"s_star_{i}",
                f"force_{i}_x",
                f"force_{i}_y",
            ]
        assert list(cols) == expected
        assert np.array_equal(cols["t"], short_log.times)
        assert np.array_equal(cols["p_o_x"], short_log.p_o[:, 0])
        assert np.array_equal(cols["s_star_2"], short_log.s_star[:, 1])
        assert np.array_equal(cols["force_3_y"], short_log.contact_forces[:, 2, 1])
        assert np.array_equal(cols["p_star_1_x"], short_log.p_star[:, 0, 0])

    def test_errors_header_and_round_trip(self, short_log, tmp_path):
        path = tmp_path / "errors.csv"
        write_errors_csv(short_log, path)
        cols = read_csv_columns(path)
        assert list(cols) == [
            "t",
            "vel_error_norm",
            "pos_error_norm_max",
            "qp_residual",
            "saturated",
        ]
        assert np.array_equal(cols["vel_error_norm"], short_log.vel_error_norm)
        assert np.array_equal(cols["qp_residual"], short_log.qp_residual)
        assert set(np.unique(cols["saturated"])) <= {0.0, 1.0}

    def test_velocities_header_and_round_trip(self, short_log, tmp_path):
        path = tmp_path / "velocities.csv"
        write_velocities_csv(short_log, path)
        cols = read_csv_columns(path)
        expected = ["t", "v_c_x", "v_c_y", "v_o_x", "v_o_y"]
        for i in (1, 2, 3):
            expected += [f"v_{i}_x", f"v_{i}_y"]
        assert list(cols) == expected
        assert np.array_equal(cols["v_c_x"], short_log.v_c[:, 0])
        assert np.array_equal(cols["v_2_y"], short_log.robot_velocities[:, 1, 1])

    def test_identical_logs_produce_identical_bytes(self, tmp_path):
        cfg = support.circle_config(t_end=0.02)
        paths = []
        for name in ("a.csv", "b.csv"):
            path = tmp_path / name
            write_trajectory_csv(run(cfg), path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestFigures:
    def test_trajectory_svg(self, short_log, tmp_path):
        path = tmp_path / "trajectory.svg"
        plot_trajectory_svg(short_log, support.GEOM, path)
        body = path.read_text()
        assert body.lstrip().startswith("<?xml")
        assert "<svg" in body

    def test_curves_svg(self, short_log, tmp_path):
        path = tmp_path / "curves.svg"
        plot_curves_svg(short_log, path)
        assert "<svg" in path.read_text()

    def test_figures_are_byte_deterministic(self, short_log, tmp_path):
        first = tmp_path / "one.svg"
        second = tmp_path / "two.svg"
        plot_curves_svg(short_log, first)
        plot_curves_svg(short_log, second)
        assert first.read_bytes() == second.read_bytes()


class TestReportPieces:
    def test_metrics_dict_is_json_safe(self, short_log):
        payload = metrics_dict(metrics(short_log))
        rebuilt = json.loads(json.dumps(payload, allow_nan=False))
        assert rebuilt["saturation_count"] == 0
        assert rebuilt["vel_error_max"] > 0.0

    def test_certificate_dict_maps_infinity_to_null(self):
        cert = check_small_gain(
            GainCertificateInput(k_v=2.0, k_p=0.5, delta=0.5, L_f=3.0, L_phi=0.1, N=3)
        )
        payload = certificate_dict(cert)
        assert payload["small_gain_lhs"] is None
        json.dumps(payload, allow_nan=False)

    def test_certificate_dict_keeps_finite_lhs(self):
        cert = check_small_gain(
            GainCertificateInput(k_v=2.0, k_p=10.0, delta=0.5, L_f=3.0, L_phi=0.1, N=3)
        )
        payload = certificate_dict(cert)
        assert payload["small_gain_lhs"] == pytest.approx(1.8 / 9.1, rel=1e-12)
        assert payload["small_gain_ok"] is True

    def test_report_json_round_trip(self, tmp_path):
        path = tmp_path / "report.json"
        write_report_json({"label": "case", "metrics": None, "values": [1.0, 2.5]}, path)
        with open(path) as handle:
            rebuilt = json.load(handle)
        assert rebuilt == {"label": "case", "metrics": None, "values": [1.0, 2.5]}
