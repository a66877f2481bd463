import json

import numpy as np
import pytest

from xcflow import (
    BundleKind,
    ClaimTolerances,
    ConfigError,
    NotApplicableError,
    SlopeConditionError,
    StationaryFlowWarning,
    build_profile,
    check_series,
    curvature_dump,
    epsilon_sweep,
    load_config,
    load_snapshot,
    main,
    read_series,
    run_scenario,
    save_snapshot,
    sinusoid_profile,
)
from xcflow.cli import SERIES_HEADER

from conftest import TWO_PI


def config_text(out_dir, **keys):
    lines = [f"{k} = {v}" for k, v in keys.items()]
    lines.append(f"output.dir = {out_dir}")
    return "\n".join(lines) + "\n"


class TestLoadConfig:
    def test_minimal_defaults(self, tmp_path):
        cfg = load_config("bundle = torus\nt_end = 2.0\n")
        assert cfg.flow.kind is BundleKind.TORUS
        assert cfg.flow.t_end == 2.0
        assert cfg.flow.epsilon == 0.0
        assert cfg.flow.safety == 0.25
        assert cfg.flow.dt_max == 1.0
        assert cfg.flow.record_every == pytest.approx(0.02)
        assert cfg.flow.tolerances.theta == 0.1
        assert cfg.n == 256
        assert cfg.period == pytest.approx(TWO_PI)
        assert cfg.family == "sinusoid"
        assert (cfg.base, cfg.amplitude, cfg.wavenumber) == (2.0, 0.1, 1)
        assert cfg.snapshot_every == pytest.approx(1.0)

    def test_comments_and_blank_lines(self):
        cfg = load_config(
            "# scenario\n\nbundle = sphere  # family\nt_end = 1.0\n  \n"
        )
        assert cfg.flow.kind is BundleKind.SPHERE

    def test_missing_required_keys(self):
        with pytest.raises(ConfigError, match="bundle"):
            load_config("t_end = 1.0\n")
        with pytest.raises(ConfigError, match="t_end"):
            load_config("bundle = torus\n")

    def test_unknown_key_reports_line(self):
        with pytest.raises(ConfigError, match="line 3"):
            load_config("bundle = torus\nt_end = 1.0\nwhatever = 3\n")

    def test_bad_value_reports_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            load_config("bundle = torus\nt_end = soon\n")

    def test_amplitude_above_base_rejected(self):
        with pytest.raises(ConfigError, match="amplitude"):
            load_config(
                "bundle = torus\nt_end = 1.0\nprofile.base = 2.0\nprofile.amplitude = 2.5\n"
            )

    def test_steep_sphere_parses_but_fails_validation(self, tmp_path):
        text = config_text(
            tmp_path / "out", bundle="sphere", t_end="1.0",
            **{"profile.amplitude": "0.3", "profile.wavenumber": "1"},
        )
        cfg = load_config(text)  # parser accepts: base > amplitude >= 0 holds
        with pytest.raises(SlopeConditionError):
            run_scenario(cfg)

    def test_tolerance_overrides(self):
        cfg = load_config(
            "bundle = torus\nt_end = 1.0\ntheta = 0.2\ntol.tol_k = 0.5\n"
        )
        assert cfg.flow.tolerances.theta == 0.2
        assert cfg.flow.tolerances.tol_k == 0.5
        assert cfg.flow.tolerances.dx == pytest.approx(TWO_PI / 256)

    def test_unknown_tolerance_key(self):
        with pytest.raises(ConfigError, match="tol.bogus"):
            load_config("bundle = torus\nt_end = 1.0\ntol.bogus = 1\n")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            load_config("bundle = torus\nbundle = sphere\nt_end = 1.0\n")

    def test_file_family_requires_path(self):
        with pytest.raises(ConfigError, match="profile.path"):
            load_config("bundle = torus\nt_end = 1.0\nprofile.family = file\n")

    def test_file_family_profile(self, tmp_path):
        snap = tmp_path / "seed.json"
        save_snapshot(sinusoid_profile(64, TWO_PI, 3.0, 0.5, 2), snap)
        cfg = load_config(
            f"bundle = torus\nt_end = 1.0\nprofile.family = file\nprofile.path = {snap}\n"
        )
        profile = build_profile(cfg)
        assert profile.n == 64
        assert profile.g.max() == pytest.approx(3.5, abs=1e-6)


class TestSnapshots:
    def test_round_trip_is_bit_exact(self, tmp_path):
        profile = sinusoid_profile(64, TWO_PI, 2.0, 0.1, 1)
        path = tmp_path / "snap.json"
        save_snapshot(profile, path)
        loaded = load_snapshot(path)
        assert loaded.n == profile.n
        assert loaded.period == profile.period
        assert loaded.t == profile.t
        assert np.array_equal(loaded.f, profile.f)
        assert np.array_equal(loaded.g, profile.g)

    def test_schema(self, tmp_path):
        path = tmp_path / "snap.json"
        save_snapshot(sinusoid_profile(16, 1.0, 2.0, 0.0, 1), path)
        data = json.loads(path.read_text())
        assert set(data) == {"n", "period", "t", "f", "g"}
        assert len(data["f"]) == len(data["g"]) == 16


class TestRunScenario:
    def test_stationary_run(self, tmp_path):
        cfg = load_config(config_text(
            tmp_path / "out", bundle="torus", t_end="1.0",
            **{"profile.amplitude": "0.0", "record_every": "0.25"},
        ))
        with pytest.warns(StationaryFlowWarning):
            status = run_scenario(cfg)
        assert status == 0
        lines = (tmp_path / "out" / "series.csv").read_text().splitlines()
        assert lines[0] == SERIES_HEADER
        body = [line.split(",", 1)[1] for line in lines[1:]]
        assert len(body) == 5
        assert len(set(body)) == 1  # identical except t
        claims = (tmp_path / "out" / "claims.txt").read_text()
        assert "T-L5 pass measured=0.0" in claims
        assert "T-L2 n/a" in claims

    def test_series_round_trip(self, tmp_path):
        out = tmp_path / "out"
        cfg = load_config(config_text(out, bundle="torus", t_end="0.2"))
        run_scenario(cfg)
        records = read_series(out / "series.csv")
        assert len(records) == 101  # t_end / record_every + 1 with the default cadence
        rewritten = [  # reformatting parsed floats reproduces the file exactly
            ",".join(
                str(rec.zero_count) if name == "zero_count" else repr(getattr(rec, name))
                for name in SERIES_HEADER.split(",")
            )
            for rec in records
        ]
        assert rewritten == (out / "series.csv").read_text().splitlines()[1:]

    def test_xcf_out_env_override(self, tmp_path, monkeypatch):
        target = tmp_path / "elsewhere"
        monkeypatch.setenv("XCF_OUT", str(target))
        cfg = load_config(config_text(tmp_path / "ignored", bundle="torus", t_end="0.1"))
        run_scenario(cfg)
        assert (target / "series.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_resume_ignores_config_profile(self, tmp_path):
        base = config_text(
            tmp_path / "a", bundle="torus", t_end="1.0",
            **{"output.snapshot_every": "0.5"},
        )
        run_scenario(load_config(base))
        snap = tmp_path / "a" / "snap_0.5.json"
        assert snap.exists()
        # resumed config declares a different profile; snapshot must win
        resumed = config_text(
            tmp_path / "b", bundle="torus", t_end="1.0",
            **{"profile.amplitude": "0.05", "output.snapshot_every": "0.5"},
        )
        run_scenario(load_config(resumed), resume=snap)
        rows_a = (tmp_path / "a" / "series.csv").read_text().splitlines()[1:]
        rows_b = (tmp_path / "b" / "series.csv").read_text().splitlines()[1:]
        tail_a = [r for r in rows_a if float(r.split(",")[0]) >= 0.5]
        assert rows_b == tail_a

    def test_exit_status_tracks_claims(self, tmp_path):
        # an unreachable growth requirement forces a T-T6 failure
        cfg = load_config(config_text(
            tmp_path / "out", bundle="torus", t_end="0.1",
            **{"tol.delta_l_frac": "0.9"},
        ))
        assert run_scenario(cfg) == 1
        claims = (tmp_path / "out" / "claims.txt").read_text()
        assert "T-T6 fail" in claims


class TestCurvatureDump:
    def test_flat_torus(self, tmp_path):
        cfg = load_config(config_text(
            tmp_path / "out", bundle="torus", t_end="1.0",
            **{"profile.amplitude": "0.0", "grid.n": "16"},
        ))
        curvature_dump(cfg)
        lines = (tmp_path / "out" / "curvature.csv").read_text().splitlines()
        assert lines[0].startswith("i,x,f,g,w,w_s,K12")
        assert len(lines) == 17
        for line in lines[1:]:
            parts = line.split(",")
            assert all(float(v) == 0.0 for v in parts[4:])

    def test_round_cylinder(self, tmp_path):
        cfg = load_config(config_text(
            tmp_path / "out", bundle="sphere", t_end="1.0",
            **{"profile.amplitude": "0.0", "grid.n": "16"},
        ))
        curvature_dump(cfg)
        lines = (tmp_path / "out" / "curvature.csv").read_text().splitlines()
        header = lines[0].split(",")
        k23 = header.index("K23")
        r = header.index("R")
        for line in lines[1:]:
            parts = line.split(",")
            assert float(parts[k23]) == pytest.approx(0.25, abs=1e-15)
            assert float(parts[r]) == pytest.approx(0.5, abs=1e-15)

    def test_profile_a_crest(self, tmp_path):
        cfg = load_config(config_text(tmp_path / "out", bundle="torus", t_end="1.0"))
        curvature_dump(cfg)
        lines = (tmp_path / "out" / "curvature.csv").read_text().splitlines()
        header = lines[0].split(",")
        h11 = header.index("h11")
        row = lines[1 + 64].split(",")  # node nearest x = pi/2
        assert float(row[h11]) == pytest.approx(2.26757e-3, abs=1e-5)


class TestEpsilonSweep:
    def test_zero_only(self, tmp_path):
        cfg = load_config(config_text(tmp_path / "out", bundle="torus", t_end="0.2"))
        epsilon_sweep(cfg, [0.0])
        lines = (tmp_path / "out" / "eps_sweep.csv").read_text().splitlines()
        assert lines == ["epsilon,sup_gap", "0.0,0.0"]

    def test_constant_profile_gap_is_zero(self, tmp_path):
        cfg = load_config(config_text(
            tmp_path / "out", bundle="torus", t_end="0.2",
            **{"profile.amplitude": "0.0"},
        ))
        with pytest.warns(StationaryFlowWarning):
            epsilon_sweep(cfg, [1e-2, 1e-3])
        lines = (tmp_path / "out" / "eps_sweep.csv").read_text().splitlines()[1:]
        assert [line.split(",")[1] for line in lines] == ["0.0", "0.0"]

    def test_member_directories(self, tmp_path):
        cfg = load_config(config_text(tmp_path / "out", bundle="torus", t_end="0.2"))
        epsilon_sweep(cfg, [1e-2])
        assert (tmp_path / "out" / "eps_0.0" / "series.csv").exists()
        assert (tmp_path / "out" / "eps_0.01" / "series.csv").exists()

    def test_sphere_rejected(self, tmp_path):
        cfg = load_config(config_text(tmp_path / "out", bundle="sphere", t_end="0.2"))
        with pytest.raises(NotApplicableError):
            epsilon_sweep(cfg, [1e-2])

    def test_negative_epsilon_rejected(self, tmp_path):
        cfg = load_config(config_text(tmp_path / "out", bundle="torus", t_end="0.2"))
        with pytest.raises(ValueError, match=">= 0"):
            epsilon_sweep(cfg, [-1e-3])


class TestCheckSeries:
    def test_reproduces_run_verdicts(self, tmp_path, capsys):
        out = tmp_path / "out"
        cfg = load_config(config_text(out, bundle="torus", t_end="0.2"))
        status = run_scenario(cfg)
        check_status = check_series(out / "series.csv", BundleKind.TORUS)
        printed = capsys.readouterr().out
        claims_file = (out / "claims.txt").read_text()
        assert check_status == status
        assert printed == claims_file


class TestMain:
    def test_run_command(self, tmp_path):
        path = tmp_path / "cfg.txt"
        # the growth proxy threshold is scaled down to suit the short horizon
        path.write_text(config_text(
            tmp_path / "out", bundle="torus", t_end="0.1",
            **{"tol.delta_l_frac": "1e-5"},
        ))
        assert main(["run", "--config", str(path)]) == 0
        assert (tmp_path / "out" / "series.csv").exists()
        assert (tmp_path / "out" / "claims.txt").exists()

    def test_curvature_command(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text(config_text(tmp_path / "out", bundle="sphere", t_end="0.1"))
        assert main(["curvature", "--config", str(path)]) == 0
        assert (tmp_path / "out" / "curvature.csv").exists()

    def test_check_command(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text(config_text(
            tmp_path / "out", bundle="torus", t_end="2.0",
            **{"tol.delta_l_frac": "1e-4"},
        ))
        main(["run", "--config", str(path)])
        series = tmp_path / "out" / "series.csv"
        # default check tolerances keep delta_l_frac = 0.005; this run clears it
        assert main(["check", "--series", str(series), "--kind", "torus"]) == 1
        assert check_series(
            series, BundleKind.TORUS,
            tolerances=ClaimTolerances(dx=TWO_PI / 256, delta_l_frac=1e-4),
        ) == 0

    def test_eps_sweep_command(self, tmp_path):
        path = tmp_path / "cfg.txt"
        path.write_text(config_text(tmp_path / "out", bundle="torus", t_end="0.1"))
        assert main(["eps-sweep", "--config", str(path), "--epsilons", "1e-2,1e-3"]) == 0
        assert (tmp_path / "out" / "eps_sweep.csv").exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = tmp_path / "cfg.txt"
        path.write_text("bundle = torus\n")  # missing t_end
        assert main(["run", "--config", str(path)]) == 2
        assert "t_end" in capsys.readouterr().err
