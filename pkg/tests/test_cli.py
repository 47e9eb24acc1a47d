"""Tests for the command-line interface and CSV outputs."""

import json

import pytest

from precofdm.cli import main


def run(args):
    return main([str(a) for a in args])


def read_lines(path):
    data = path.read_bytes()
    assert b"\r" not in data
    return data.decode().splitlines()


class TestDpssCommand:
    def test_writes_csv_and_reruns_identically(self, tmp_path):
        out = tmp_path / "dpss.csv"
        assert run(["dpss", "--n", 9, "--w", 0.25, "--k", 9, "--out", out]) == 0
        lines = read_lines(out)
        assert lines[0] == "order,eigenvalue," + ",".join(f"c{i}" for i in range(9))
        assert len(lines) == 10
        first = out.read_bytes()
        assert run(["dpss", "--n", 9, "--w", 0.25, "--k", 9, "--out", out]) == 0
        assert out.read_bytes() == first

    def test_limit_half_export(self, tmp_path):
        out = tmp_path / "dpss.csv"
        assert run(["dpss", "--n", 128, "--w", 0.5, "--k", 125, "--out", out]) == 0
        assert len(read_lines(out)) == 126

    def test_bad_params_exit_code(self, tmp_path):
        out = tmp_path / "dpss.csv"
        assert run(["dpss", "--n", 9, "--w", 0.7, "--k", 9, "--out", out]) == 2


class TestEbctCommand:
    def test_schema_and_row_count(self, tmp_path):
        out = tmp_path / "ebct.csv"
        assert run(["ebct", "--scheme", "ofdm", "--n", 9, "--m", 9, "--out", out, "--verify"]) == 0
        lines = read_lines(out)
        assert lines[0] == "scheme,N,M,r,s,ebct,bound"
        assert len(lines) == 82
        fields = lines[1].split(",")
        assert fields[0] == "ofdm" and fields[1] == "9"
        assert float(fields[6]) >= float(fields[5]) - 1e-12

    def test_twelve_significant_digits(self, tmp_path):
        out = tmp_path / "ebct.csv"
        run(["ebct", "--scheme", "dpss", "--n", 9, "--m", 9, "--out", out])
        value = read_lines(out)[1].split(",")[5]
        assert value == format(float(value), ".12g")
        assert "." in value or "e" in value


class TestBasisXcorrCommands:
    def test_basis_long_format(self, tmp_path):
        out = tmp_path / "basis.csv"
        assert run(["basis", "--scheme", "dft", "--n", 9, "--m", 7, "--out", out, "--verify"]) == 0
        lines = read_lines(out)
        assert lines[0] == "component,sample,re,im"
        assert len(lines) == 1 + 7 * 9

    def test_xcorr_long_format(self, tmp_path):
        out = tmp_path / "xcorr.csv"
        assert run(["xcorr", "--scheme", "ofdm", "--n", 9, "--m", 7, "--out", out, "--verify"]) == 0
        assert len(read_lines(out)) == 1 + 7 * 7 * 17


class TestS2iCommand:
    def test_sweep_csv(self, tmp_path):
        out = tmp_path / "s2i.csv"
        code = run([
            "s2i", "--schemes", "ofdm,dpss", "--etas", "[1.0]", "--channel",
            "integer", "--n", 17, "--blocks", 4, "--out", out, "--no-bound",
        ])
        assert code == 0
        lines = read_lines(out)
        assert lines[0] == "scheme,eta,tap_model,s2i_db,s2i_lower_bound_db"
        assert len(lines) == 3
        assert lines[1].split(",")[3] == "inf"

    def test_plot_data_written(self, tmp_path):
        out = tmp_path / "s2i.csv"
        run([
            "s2i", "--schemes", "dft", "--etas", "1.0", "--channel", "integer",
            "--n", 17, "--blocks", 4, "--out", out, "--no-bound", "--plot-data",
        ])
        extra = tmp_path / "s2i_plotdata.csv"
        assert extra.exists()
        assert read_lines(extra)[0] == "figure,series,x,y"

    def test_eta_range_parsing(self, tmp_path):
        out = tmp_path / "s2i.csv"
        run([
            "s2i", "--schemes", "dft", "--etas", "0.9:0.05:1.0", "--channel",
            "integer", "--n", 20, "--blocks", 4, "--out", out, "--no-bound",
        ])
        assert len(read_lines(out)) == 4


class TestSerCommand:
    def test_ser_csv_and_manifest(self, tmp_path):
        out = tmp_path / "ser.csv"
        profile = tmp_path / "chan.txt"
        profile.write_text("delays_samples: [0, 1.5]\npowers_db: [0, -3]\nseed: 9\n")
        code = run([
            "ser", "--schemes", "ofdm", "--etas", "1.0", "--channel", profile,
            "--n", 17, "--snrs", "[10, 20]", "--trials", 3, "--prefix", 2,
            "--out", out,
        ])
        assert code == 0
        lines = read_lines(out)
        assert lines[0] == (
            "scheme,eta,p_delta_db,delay_spread_ns,snr_db,ser,trials,total_symbols"
        )
        assert len(lines) == 3
        manifest = json.loads((tmp_path / "ser.csv.manifest.json").read_text())
        assert manifest["base_seed"] == 9
        assert manifest["trials"] == 3
        assert manifest["runs"][0]["scheme"] == "ofdm"

    def test_rerun_identical_bytes(self, tmp_path):
        out = tmp_path / "ser.csv"
        args = [
            "ser", "--schemes", "dft", "--etas", "1.0", "--channel", "cdlc200ns",
            "--n", 17, "--snrs", "[15]", "--trials", 4, "--seed", 1, "--out", out,
        ]
        assert run(args) == 0
        first = out.read_bytes()
        assert run(args) == 0
        assert out.read_bytes() == first

    def test_preset_table1_defaults(self, tmp_path):
        out = tmp_path / "ser.csv"
        code = run([
            "ser", "--preset", "table1", "--delay-spread", "200ns", "--pdelta", 10,
            "--schemes", "dpss", "--etas", "0.95", "--snrs", "[20]", "--trials", 2,
            "--out", out,
        ])
        assert code == 0
        row = read_lines(out)[1].split(",")
        assert row[0] == "dpss"
        assert float(row[1]) == pytest.approx(121 / 128)
        assert float(row[2]) == 10.0
        assert float(row[3]) == pytest.approx(8.6523 * 200.0, rel=1e-4)

    def test_missing_channel_is_error(self, tmp_path):
        assert run(["ser", "--schemes", "ofdm", "--out", tmp_path / "x.csv"]) == 2


class TestScanCommand:
    def test_scan_output(self, tmp_path):
        out = tmp_path / "scan.csv"
        code = run([
            "scan-halfshift", "--scheme", "ofdm", "--n", 5, "--m", 5,
            "--taus", "0.25:0.25:0.75", "--out", out,
        ])
        assert code == 0
        lines = read_lines(out)
        assert lines[0] == "scheme,N,M,r,s,tau,tail_energy"
        assert len(lines) == 1 + 25 * 3


class TestConfigHandling:
    def test_config_file_supplies_defaults_and_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("n = 9\nw = 0.25\nk = 4\nout = ignored.csv\n")
        out = tmp_path / "out.csv"
        assert run(["dpss", "--config", cfg, "--out", out]) == 0
        assert len(read_lines(out)) == 5
        out2 = tmp_path / "out2.csv"
        assert run(["dpss", "--config", cfg, "--k", 2, "--out", out2]) == 0
        assert len(read_lines(out2)) == 3

    def test_missing_config_file(self, tmp_path):
        assert run(["dpss", "--config", tmp_path / "nope.cfg", "--n", 9]) == 2

    def test_unknown_channel_name(self, tmp_path):
        assert run([
            "s2i", "--channel", "bogus", "--n", 9, "--etas", "1.0",
            "--out", tmp_path / "x.csv",
        ]) == 2
