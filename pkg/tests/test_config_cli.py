import json

import numpy as np
import pytest

from cgbandits.audit import InvariantRecord
from cgbandits.cli import main
from cgbandits.config import ConfigError, parse_config, resolve_region
from cgbandits.environment import RegretTrace
from cgbandits.io_csv import (
    read_aggregate_csv,
    read_epoch_csv,
    read_invariant_csv,
    read_trace_csv,
    write_aggregate_csv,
    write_epoch_csv,
    write_invariant_csv,
    write_trace_csv,
)

MINIMAL = """
# minimal sequential run
algo = gp_ucb
T = 10
trials = 1
seed = 2
domain.res = 3
domain.dim = 1
"""


class TestParser:
    def test_defaults_and_comments(self):
        cfg = parse_config(MINIMAL)
        assert cfg.algo == "gp_ucb"
        assert cfg["eta"] == 2.0
        assert cfg["attack.type"] == "none"

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config(MINIMAL + "bogus.key = 1\n")

    def test_eta_must_exceed_one(self):
        with pytest.raises(ConfigError, match="eta must exceed 1"):
            parse_config(MINIMAL + "eta = 1.0\n")

    def test_t_lower_bound(self):
        with pytest.raises(ConfigError, match="T must be at least 2"):
            parse_config(MINIMAL.replace("T = 10", "T = 1"))

    def test_region_required_for_clipping(self):
        with pytest.raises(ConfigError, match="requires attack.region"):
            parse_config(MINIMAL + "attack.type = clipping\n")

    def test_duplicate_key_rejected(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config(MINIMAL + "T = 20\n")

    def test_psi_auto_allowed(self):
        cfg = parse_config(MINIMAL + "psi = auto\n")
        assert cfg["psi"] == "auto"


class TestRegion:
    PTS = np.array([[0.0, 1.0], [2.0, 1.0], [1.0, 1.0]])

    def test_coordinate_comparison(self):
        mask = resolve_region("x0 <= x1", self.PTS)
        assert mask.tolist() == [True, False, True]

    def test_constant_comparison(self):
        mask = resolve_region("x0 >= 1.5", self.PTS)
        assert mask.tolist() == [False, True, False]

    def test_index_list(self):
        mask = resolve_region("indices:0,2", self.PTS)
        assert mask.tolist() == [True, False, True]

    def test_garbage_rejected(self):
        with pytest.raises(ConfigError):
            resolve_region("y1 < 3", self.PTS)


def _trace(T=6):
    rng = np.random.default_rng(0)
    inst = rng.uniform(0, 1, T)
    return RegretTrace(
        algorithm="gp_ucb",
        trial=0,
        seed=2,
        action=rng.integers(0, 3, T).astype(np.int64),
        y=rng.normal(size=T),
        c=np.zeros(T),
        instant_regret=inst,
        cum_regret=np.cumsum(inst),
    )


class TestCsvRoundTrip:
    def test_trace(self, tmp_path):
        tr = _trace()
        path = tmp_path / "trace.csv"
        write_trace_csv(path, tr)
        back = read_trace_csv(path)
        assert np.array_equal(back.action, tr.action)
        assert np.array_equal(back.y, tr.y)
        assert np.array_equal(back.cum_regret, tr.cum_regret)
        assert back.algorithm == "gp_ucb" and back.seed == 2

    def test_aggregate(self, tmp_path):
        mean = np.array([0.1, 0.4, 1.0])
        std = np.array([0.0, 0.2, 0.3])
        path = tmp_path / "agg.csv"
        write_aggregate_csv(path, mean, std)
        t, m, s = read_aggregate_csv(path)
        assert t.tolist() == [1, 2, 3]
        assert np.array_equal(m, mean)
        assert np.array_equal(s, std)

    def test_invariants(self, tmp_path):
        recs = [InvariantRecord(0, "epoch_length", 10.0, 12.0), InvariantRecord(-1, "epoch_count", 3, 8)]
        path = tmp_path / "inv.csv"
        write_invariant_csv(path, recs)
        back = read_invariant_csv(path)
        assert back == recs

    def test_epoch_marks(self, tmp_path):
        from cgbandits.environment import EpochMark

        tr = _trace()
        tr.algorithm = "rgp_pe"
        tr.epoch_marks = [EpochMark(0, 1, 10, 2, 4), EpochMark(1, 5, 9, 3, 12)]
        path = tmp_path / "epochs.csv"
        write_epoch_csv(path, [tr])
        back = read_epoch_csv(path)
        assert back == [("rgp_pe", 0, tr.epoch_marks[0]), ("rgp_pe", 0, tr.epoch_marks[1])]


class TestCliRun:
    def _write_cfg(self, tmp_path, body):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(body)
        return cfg

    def test_minimal_run_writes_files(self, tmp_path):
        cfg = self._write_cfg(tmp_path, MINIMAL)
        out = tmp_path / "out"
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        assert (out / "trace_gp_ucb_trial0.csv").exists()
        assert (out / "aggregate_gp_ucb.csv").exists()
        assert (out / "epochs_gp_ucb.csv").exists()
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["algo"] == "gp_ucb"
        assert manifest["seeds"] == [2]

    def test_invalid_config_exits_two(self, tmp_path):
        cfg = self._write_cfg(tmp_path, MINIMAL + "eta = 1.0\n")
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2

    def test_byte_identical_reruns(self, tmp_path):
        cfg = self._write_cfg(
            tmp_path,
            MINIMAL.replace("algo = gp_ucb", "algo = rgp_pe") + "attack.type = flip\nattack.C = 2\n",
        )
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["run", "--config", str(cfg), "--out", str(out2)]) == 0
        for name in ("trace_rgp_pe_trial0.csv", "aggregate_rgp_pe.csv", "epochs_rgp_pe.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_trials_and_seed_overrides(self, tmp_path):
        cfg = self._write_cfg(tmp_path, MINIMAL)
        out = tmp_path / "o"
        assert main(["run", "--config", str(cfg), "--out", str(out), "--trials", "2", "--seed", "9"]) == 0
        assert (out / "trace_gp_ucb_trial1.csv").exists()
        assert json.loads((out / "manifest.json").read_text())["seeds"] == [9, 10]


class TestCliErrorPaths:
    def test_numerical_failure_exits_three(self, tmp_path, monkeypatch):
        from cgbandits import cli
        from cgbandits.posterior import SingularSystemError

        def boom(cfg):
            raise SingularSystemError("Cholesky failed after jitter escalation")

        monkeypatch.setattr(cli, "run_trials", boom)
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(MINIMAL)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3

    def test_invariant_violation_exits_one(self, tmp_path, monkeypatch):
        from cgbandits import cli
        from cgbandits.audit import InvariantRecord
        from cgbandits.runner import run_single_trial as real_run

        def tampered(cfg, trial, audit=None):
            result = real_run(cfg, trial, audit)
            if audit is not None:
                audit.records.append(InvariantRecord(0, "epoch_length", 99.0, 1.0))
            return result

        monkeypatch.setattr(cli, "run_single_trial", tampered)
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(MINIMAL.replace("algo = gp_ucb", "algo = rgp_pe"))
        out = tmp_path / "out"
        assert main(["audit", "--config", str(cfg), "--out", str(out)]) == 1
        rows = read_invariant_csv(out / "invariants_rgp_pe.csv")
        assert any(not r.passed for r in rows)


class TestCliAudit:
    def test_conformant_run_audits_clean(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            """
algo = rgp_pe
T = 64
trials = 1
seed = 0
domain.res = 3
domain.dim = 1
kernel.lengthscale = 0.3
"""
        )
        out = tmp_path / "out"
        assert main(["audit", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_invariant_csv(out / "invariants_rgp_pe.csv")
        assert rows and all(r.passed for r in rows)

    def test_ucb_audit_emits_single_run_level_row(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(MINIMAL)
        out = tmp_path / "out"
        assert main(["audit", "--config", str(cfg), "--out", str(out)]) == 0
        rows = read_invariant_csv(out / "invariants_gp_ucb.csv")
        assert [r.invariant for r in rows] == ["sum_of_std"]
        assert rows[0].h == -1


class TestCliPlot:
    def test_plot_single_series(self, tmp_path):
        agg = tmp_path / "aggregate_gp_ucb.csv"
        write_aggregate_csv(agg, np.linspace(0, 5, 10), np.full(10, 0.3))
        out = tmp_path / "plot.svg"
        assert main(["plot", str(agg), "--out", str(out)]) == 0
        body = out.read_text()
        assert body.startswith("<svg")
        assert body.count("<polyline") == 1
        assert "aggregate_gp_ucb" in body

    def test_plot_three_series_has_three_lines(self, tmp_path):
        paths = []
        for k in range(3):
            p = tmp_path / f"aggregate_{k}.csv"
            write_aggregate_csv(p, np.linspace(0, 5 + k, 8), np.zeros(8))
            paths.append(str(p))
        out = tmp_path / "plot.svg"
        assert main(["plot", *paths, "--out", str(out)]) == 0
        assert out.read_text().count("<polyline") == 3

    def test_empty_csv_exits_two(self, tmp_path):
        bad = tmp_path / "empty.csv"
        bad.write_text("")
        assert main(["plot", str(bad), "--out", str(tmp_path / "x.svg")]) == 2

    def test_header_only_csv_exits_two(self, tmp_path):
        bad = tmp_path / "h.csv"
        bad.write_text("t,mean_cum_regret,std_cum_regret\n")
        assert main(["plot", str(bad), "--out", str(tmp_path / "x.svg")]) == 2

    def test_deterministic_svg(self, tmp_path):
        agg = tmp_path / "agg.csv"
        write_aggregate_csv(agg, np.linspace(0, 5, 10), np.full(10, 0.3))
        o1, o2 = tmp_path / "a.svg", tmp_path / "b.svg"
        main(["plot", str(agg), "--out", str(o1)])
        main(["plot", str(agg), "--out", str(o2)])
        assert o1.read_bytes() == o2.read_bytes()


class TestCliNewton:
    def test_newton_dump(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(
            """
algo = rpe_linear
T = 10
domain.res = 30
domain.dim = 1
domain.low = -1
domain.high = 1
kernel.lengthscale = 0.4
newton.e = 0.2
"""
        )
        out = tmp_path / "out"
        assert main(["newton", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "newton_trace.csv").read_text().splitlines()
        assert lines[0] == "iter,center_index,p2max"
        assert len(lines) > 2
        iters = [int(l.split(",")[0]) for l in lines[1:]]
        assert iters == list(range(1, len(iters) + 1))
        p2 = [float(l.split(",")[2]) for l in lines[1:]]
        assert p2[-1] < 0.2**2
