import struct

import numpy as np
import pytest
import scipy.sparse as sp

from gloria import FormatError, HSImage, build_spatial_response
from gloria.io import (
    read_dense_csv,
    read_hsrm,
    read_hsrm_image,
    read_json,
    read_sparse,
    write_dense_csv,
    write_hsrm,
    write_json,
    write_rank_table_csv,
    write_sparse,
    write_trace_csv,
)


def awkward_matrix(rng, m, l):
    """Values that exercise the full float64 bit range."""
    x = rng.standard_normal((m, l))
    x[0, 0] = 0.1 + 0.2  # not exactly 0.3
    x[0, 1] = 1e-308
    x[0, 2] = -1e300
    x[0, 3] = 0.0
    return x


class TestHsrm:
    def test_bit_exact_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        x = awkward_matrix(rng, 5, 12)
        path = tmp_path / "m.hsrm"
        write_hsrm(path, x, width=4, height=3)
        got, width, height = read_hsrm(path)
        assert (width, height) == (4, 3)
        assert got.tobytes() == x.tobytes()

    def test_image_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        img = HSImage(rng.uniform(size=(3, 20)), 5, 4)
        path = tmp_path / "img.hsrm"
        write_hsrm(path, img)
        back = read_hsrm_image(path)
        assert np.array_equal(back.data, img.data)
        assert (back.width, back.height) == (5, 4)

    def test_matrix_without_grid(self, tmp_path):
        path = tmp_path / "f.hsrm"
        write_hsrm(path, np.eye(3))
        got, width, height = read_hsrm(path)
        assert (width, height) == (0, 0)
        assert np.array_equal(got, np.eye(3))
        with pytest.raises(FormatError):
            read_hsrm_image(path)

    def test_frozen_header_bytes(self, tmp_path):
        path = tmp_path / "h.hsrm"
        write_hsrm(path, np.zeros((2, 3)), width=3, height=1)
        raw = path.read_bytes()
        assert raw[:8] == b"HSRM" + bytes([1, 1, 0, 0])
        assert raw[8:24] == struct.pack("<IIII", 2, 3, 3, 1)
        assert raw[24:] == b"\x00" * 48

    def test_payload_is_column_major(self, tmp_path):
        path = tmp_path / "c.hsrm"
        write_hsrm(path, np.array([[1.0, 2.0], [3.0, 4.0]]))
        body = path.read_bytes()[24:]
        assert np.frombuffer(body, dtype="<f8").tolist() == [1.0, 3.0, 2.0, 4.0]

    @pytest.mark.parametrize(
        "corrupt",
        [
            lambda b: b"JUNK" + b[4:],                       # magic
            lambda b: b[:4] + bytes([9]) + b[5:],            # version
            lambda b: b[:5] + bytes([2]) + b[6:],            # dtype
            lambda b: b[:6] + b"xy" + b[8:],                 # reserved
            lambda b: b[:20],                                # header cut
            lambda b: b[:-8],                                # payload cut
            lambda b: b + b"\x00",                           # trailing
            lambda b: b[:16] + struct.pack("<II", 7, 7) + b[24:],  # grid mismatch
        ],
    )
    def test_corruption_raises(self, tmp_path, corrupt):
        path = tmp_path / "x.hsrm"
        write_hsrm(path, np.ones((2, 4)), width=2, height=2)
        path.write_bytes(corrupt(path.read_bytes()))
        with pytest.raises(FormatError):
            read_hsrm(path)

    def test_grid_validation_on_write(self, tmp_path):
        with pytest.raises(ValueError):
            write_hsrm(tmp_path / "x.hsrm", np.ones((2, 4)), width=3, height=2)
        with pytest.raises(ValueError):
            write_hsrm(tmp_path / "x.hsrm", np.ones((2, 4)), width=4)


class TestSparseFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        g = build_spatial_response(8, 8, kernel_size=3, variance=1.3, factor=2)
        path = tmp_path / "g.sparse"
        write_sparse(path, g)
        back = read_sparse(path)
        assert back.shape == g.matrix.shape
        assert (back != g.matrix).nnz == 0
        assert back.toarray().tobytes() == g.matrix.toarray().tobytes()

    def test_header_and_sorting(self, tmp_path):
        mat = sp.coo_array(
            ([3.0, 1.0, 2.0], ([2, 0, 2], [0, 1, 2])), shape=(3, 4)
        )
        path = tmp_path / "g.sparse"
        write_sparse(path, mat)
        lines = path.read_text().splitlines()
        assert lines[0] == "HSRG 3 4 3"
        assert lines[1:] == ["0 1 1.0", "2 0 3.0", "2 2 2.0"]

    def test_empty_matrix(self, tmp_path):
        path = tmp_path / "e.sparse"
        write_sparse(path, sp.csc_array((3, 2)))
        back = read_sparse(path)
        assert back.shape == (3, 2)
        assert back.nnz == 0

    @pytest.mark.parametrize(
        "text",
        [
            "HSRX 2 2 1\n0 0 1.0\n",
            "HSRG 2 2\n",
            "HSRG 2 2 two\n0 0 1.0\n",
            "HSRG 2 2 2\n0 0 1.0\n",
            "HSRG 2 2 1\n0 0 1.0\n1 1 2.0\n",
            "HSRG 2 2 1\n0 0\n",
            "HSRG 2 2 1\n5 0 1.0\n",
        ],
    )
    def test_malformed_raises(self, tmp_path, text):
        path = tmp_path / "bad.sparse"
        path.write_text(text)
        with pytest.raises(FormatError):
            read_sparse(path)


class TestDenseCsv:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(2)
        f = awkward_matrix(rng, 3, 6)
        path = tmp_path / "f.csv"
        write_dense_csv(path, f)
        back = read_dense_csv(path)
        assert back.tobytes() == f.tobytes()

    def test_repr_floats_on_disk(self, tmp_path):
        path = tmp_path / "f.csv"
        write_dense_csv(path, np.array([[0.1, 0.25]]))
        assert path.read_text() == "0.1,0.25\n"

    def test_malformed(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1.0,2.0\n3.0\n")
        with pytest.raises(FormatError):
            read_dense_csv(path)
        path.write_text("")
        with pytest.raises(FormatError):
            read_dense_csv(path)


class TestTraceAndTables:
    def test_trace_csv_layout(self, tmp_path):
        from gloria import SolveReport

        report = SolveReport(
            objective_trace=[10.0, 4.0, 3.5],
            step_sizes=[0.5, 0.5],
            wall_ms_trace=[0.0, 1.25, 2.5],
        )
        path = tmp_path / "trace.csv"
        write_trace_csv(path, report)
        lines = path.read_text().splitlines()
        assert lines[0] == "iter,objective,step_size,wall_ms"
        assert lines[1] == "0,10.0,,0.0"
        assert lines[2] == "1,4.0,0.5,1.25"
        assert lines[3] == "2,3.5,0.5,2.5"
        # every data row parses back to the original floats
        for line, obj in zip(lines[1:], [10.0, 4.0, 3.5]):
            assert float(line.split(",")[1]) == obj

    def test_rank_table_csv(self, tmp_path):
        from gloria import RankTableRow

        rows = [
            RankTableRow(grid=1, patch_pixels=64, mean_rank=4.0, std_rank=0.0, global_rank=4),
            RankTableRow(grid=2, patch_pixels=16, mean_rank=1.5, std_rank=0.25, global_rank=4),
        ]
        path = tmp_path / "rank.csv"
        write_rank_table_csv(path, rows)
        lines = path.read_text().splitlines()
        assert lines[0] == "grid,patch_pixels,mean_rank,std_rank,global_rank"
        assert lines[1] == "1,64,4.0,0.0,4"
        assert lines[2] == "2,16,1.5,0.25,4"


class TestJson:
    def test_round_trip_sorted_and_newline(self, tmp_path):
        path = tmp_path / "doc.json"
        write_json(path, {"b": 2, "a": [1, 2]})
        text = path.read_text()
        assert text.endswith("\n")
        assert text.index('"a"') < text.index('"b"')
        assert read_json(path) == {"b": 2, "a": [1, 2]}

    def test_deterministic_bytes(self, tmp_path):
        doc = {"z": 1.5, "m": {"q": [3, 2, 1], "a": None}}
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        write_json(p1, doc)
        write_json(p2, doc)
        assert p1.read_bytes() == p2.read_bytes()
