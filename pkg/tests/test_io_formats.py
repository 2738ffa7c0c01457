import csv
import io

import numpy as np
import pytest

from truncgrad.errors import ConfigurationError
from truncgrad.io_formats import (
    PgmParseError,
    RunConfig,
    append_classical_dp_row,
    merge_overrides,
    parse_config,
    parse_value,
    read_pgm,
    validate_config,
    write_history_csv,
    write_pgm,
)
from truncgrad.problems import ImageGrid
from truncgrad.solvers import IterationRecord, RunReport
from truncgrad.stopping import Snapshot


class TestReadPgm:
    def test_ascii_single_white_pixel(self, tmp_path):
        p = tmp_path / "one.pgm"
        p.write_bytes(b"P2\n1 1\n255\n255\n")
        grid = read_pgm(p)
        assert grid.rows == grid.cols == 1
        assert grid.pixels[0] == 1.0

    def test_ascii_black_pixel(self, tmp_path):
        p = tmp_path / "zero.pgm"
        p.write_bytes(b"P2\n1 1\n255\n0\n")
        assert read_pgm(p).pixels[0] == 0.0

    def test_comments_skipped(self, tmp_path):
        p = tmp_path / "c.pgm"
        p.write_bytes(b"P2 # magic\n# a comment line\n2 1\n# another\n4\n2 4\n")
        grid = read_pgm(p)
        assert np.array_equal(grid.pixels, [0.5, 1.0])

    def test_binary_roundtrip_values(self, tmp_path):
        p = tmp_path / "b.pgm"
        p.write_bytes(b"P5\n2 2\n255\n" + bytes([0, 64, 128, 255]))
        grid = read_pgm(p)
        assert np.allclose(grid.pixels, np.array([0, 64, 128, 255]) / 255.0)

    def test_sixteen_bit_big_endian(self, tmp_path):
        p = tmp_path / "w.pgm"
        p.write_bytes(b"P5\n1 1\n65535\n" + (0x0102).to_bytes(2, "big"))
        assert abs(read_pgm(p).pixels[0] - 0x0102 / 65535.0) <= 1e-15

    def test_truncated_raster_offset(self, tmp_path):
        p = tmp_path / "t.pgm"
        payload = b"P5\n2 2\n255\n" + bytes([1, 2])
        p.write_bytes(payload)
        with pytest.raises(PgmParseError) as err:
            read_pgm(p)
        assert err.value.offset == len(payload)
        assert "byte" in str(err.value)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "m.pgm"
        p.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(PgmParseError):
            read_pgm(p)

    def test_bad_maxval(self, tmp_path):
        p = tmp_path / "mv.pgm"
        p.write_bytes(b"P2\n1 1\n70000\n1\n")
        with pytest.raises(PgmParseError):
            read_pgm(p)

    def test_ascii_sample_out_of_range(self, tmp_path):
        p = tmp_path / "r.pgm"
        p.write_bytes(b"P2\n1 1\n255\n300\n")
        with pytest.raises(PgmParseError):
            read_pgm(p)

    def test_missing_header_token(self, tmp_path):
        p = tmp_path / "h.pgm"
        p.write_bytes(b"P2\n1\n")
        with pytest.raises(PgmParseError):
            read_pgm(p)


class TestWritePgm:
    def test_roundtrip_identity_at_8bit(self, tmp_path):
        rng = np.random.default_rng(0)
        for i in range(5):
            grid = ImageGrid(6, 4, rng.random(24))
            p = tmp_path / f"img{i}.pgm"
            write_pgm(grid, p)
            back = read_pgm(p)
            write_pgm(back, p)
            again = read_pgm(p)
            assert np.array_equal(back.pixels, again.pixels)
            assert np.max(np.abs(back.pixels - grid.pixels)) <= 0.5 / 255.0 + 1e-12

    def test_round_half_up(self, tmp_path):
        grid = ImageGrid(1, 2, np.array([0.5 / 255.0, 0.49 / 255.0]))
        p = tmp_path / "r.pgm"
        write_pgm(grid, p)
        data = p.read_bytes()
        assert data.endswith(bytes([1, 0]))

    def test_clamps_out_of_range(self, tmp_path):
        grid = ImageGrid(1, 2, np.array([-0.5, 1.5]))
        p = tmp_path / "c.pgm"
        write_pgm(grid, p)
        assert p.read_bytes().endswith(bytes([0, 255]))

    def test_sixteen_bit_payload(self, tmp_path):
        grid = ImageGrid(1, 1, np.array([1.0]))
        p = tmp_path / "w.pgm"
        write_pgm(grid, p, maxval=65535)
        assert p.read_bytes().endswith(b"\xff\xff")
        assert read_pgm(p).pixels[0] == 1.0

    def test_rejects_non_finite(self, tmp_path):
        grid = ImageGrid(1, 1, np.array([np.nan]))
        with pytest.raises(ValueError):
            write_pgm(grid, tmp_path / "n.pgm")


def _report(with_snapshots=False, with_truth=True):
    history = [
        IterationRecord(0, 25.0, 5.0, 100.0, 16, 1.0 if with_truth else None),
        IterationRecord(1, 6.25, 2.5, 50.0, 12, 0.643218 if with_truth else None),
    ]
    snaps = []
    if with_snapshots:
        snaps = [Snapshot(4.0, 1, 50.0, 64.3218 if with_truth else None, 12,
                          np.zeros(4))]
    return RunReport(history, np.zeros(4), "max_iters", snaps)


class TestWriteHistoryCsv:
    def test_empty_history_header_only(self, tmp_path):
        rep = RunReport([], np.zeros(2), "max_iters", [])
        p = tmp_path / "h.csv"
        write_history_csv(rep, p)
        assert p.read_text() == "m,rel_residual_pct,rel_error_pct,sparsity,objective\n"

    def test_one_row_per_iteration(self, tmp_path):
        p = tmp_path / "h.csv"
        write_history_csv(_report(), p)
        lines = p.read_text().splitlines()
        assert len(lines) == 3
        assert lines[1] == "0,100,100,16,25"

    def test_missing_rel_error_prints_empty(self, tmp_path):
        p = tmp_path / "h.csv"
        write_history_csv(_report(with_truth=False), p)
        assert p.read_text().splitlines()[1] == "0,100,,16,25"

    def test_snapshot_section(self, tmp_path):
        p = tmp_path / "h.csv"
        write_history_csv(_report(with_snapshots=True), p)
        text = p.read_text()
        assert "# snapshots\n" in text
        tail = text.split("# snapshots\n")[1].splitlines()
        assert tail[0] == "gamma,m,rel_residual_pct,rel_error_pct,sparsity"
        assert tail[1] == "4,1,50,64.3218,12"

    def test_lf_line_endings_and_six_digits(self, tmp_path):
        p = tmp_path / "h.csv"
        write_history_csv(_report(), p)
        raw = p.read_bytes()
        assert b"\r" not in raw
        assert "64.3218" in p.read_text()  # 6 significant digits

    def test_reparses_within_print_precision(self, tmp_path):
        p = tmp_path / "h.csv"
        write_history_csv(_report(), p)
        with open(p, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[1]["rel_error_pct"]) == pytest.approx(64.3218, rel=1e-5)
        assert int(rows[1]["sparsity"]) == 12

    def test_classical_dp_append(self, tmp_path):
        p = tmp_path / "h.csv"
        write_history_csv(_report(), p)
        append_classical_dp_row(p, 3.4242, _report().history[1])
        tail = p.read_text().split("# classical_dp\n")[1].splitlines()
        assert tail[0] == "gamma,m,rel_residual_pct,rel_error_pct,sparsity"
        assert tail[1].startswith("3.4242,1,50,")


class TestParseConfig:
    def test_empty_text_is_defaults(self):
        assert parse_config("") == RunConfig()

    def test_basic_values(self):
        cfg = parse_config("sigma = 10\nside=32\nband = 3\nimage = dense\n")
        assert cfg.sigma == 10.0 and cfg.side == 32 and cfg.band == 3
        assert cfg.image == "dense"

    def test_comments_and_blanks(self):
        cfg = parse_config("# full-line comment\n\nsigma = 2.5 # trailing\n")
        assert cfg.sigma == 2.5

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigurationError, match="zeta"):
            parse_config("zeta = 3\n")

    def test_unparsable_value_names_key(self):
        with pytest.raises(ConfigurationError, match="side"):
            parse_config("side = many\n")

    def test_range_violation_names_key(self):
        with pytest.raises(ConfigurationError, match="alpha"):
            parse_config("alpha = 140\n")

    def test_eta_constraint_only_for_dp(self):
        with pytest.raises(ConfigurationError, match="eta"):
            parse_config("stop = dp\neta = 1.0\n")
        cfg = parse_config("stop = never\neta = 1.0\n")
        assert cfg.eta == 1.0

    def test_duplicate_key_warns_last_wins(self):
        with pytest.warns(UserWarning, match="duplicate"):
            cfg = parse_config("sigma = 1\nsigma = 9\n")
        assert cfg.sigma == 9.0

    def test_order_independent(self):
        a = parse_config("sigma = 3\nband = 2\nside = 16\n")
        b = parse_config("side = 16\nsigma = 3\nband = 2\n")
        assert a == b

    def test_missing_equals_rejected(self):
        with pytest.raises(ConfigurationError):
            parse_config("sigma 3\n")

    def test_xmin_minus_inf(self):
        cfg = parse_config("xmin = -inf\n")
        assert cfg.xmin == float("-inf")

    def test_band_side_consistency(self):
        with pytest.raises(ConfigurationError, match="band"):
            parse_config("side = 4\nband = 9\n")


class TestMergeOverrides:
    def test_flag_beats_file(self):
        cfg = parse_config("sigma = 3\n")
        merged = merge_overrides(cfg, {"sigma": parse_value("sigma", "7")})
        assert merged.sigma == 7.0

    def test_override_validated(self):
        with pytest.raises(ConfigurationError):
            merge_overrides(RunConfig(), {"rho": -0.5})

    def test_parse_value_unknown_key(self):
        with pytest.raises(ConfigurationError):
            parse_value("bogus", "1")


def test_validate_config_direct():
    validate_config(RunConfig())
    with pytest.raises(ConfigurationError):
        validate_config(RunConfig(source_count=0))
