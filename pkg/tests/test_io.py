import json

import numpy as np
import pytest

from dmcprune.core import RowSumError
from dmcprune.gen import GeneratorConfig, sample_dmc
from dmcprune.io import FormatError, channel_from_dict, channel_to_dict, load_channel, save_channel


class TestJsonFormat:
    def test_round_trip(self, tmp_path, four_row_channel):
        path = tmp_path / "ch.json"
        save_channel(path, four_row_channel, metadata={"note": "test"})
        loaded = load_channel(path)
        assert np.array_equal(loaded.matrix, four_row_channel.matrix)
        raw = json.loads(path.read_text())
        assert raw["num_inputs"] == 4
        assert raw["num_outputs"] == 4
        assert raw["metadata"] == {"note": "test"}

    def test_shape_mismatch_rejected(self):
        with pytest.raises(FormatError):
            channel_from_dict({"num_inputs": 3, "num_outputs": 2,
                               "rows": [[0.5, 0.5], [1.0, 0.0]]})

    def test_missing_field(self):
        with pytest.raises(FormatError):
            channel_from_dict({"rows": [[1.0]]})

    def test_invalid_rows_propagate(self):
        with pytest.raises(RowSumError):
            channel_from_dict({"num_inputs": 1, "num_outputs": 2,
                               "rows": [[0.5, 0.6]]})

    def test_generated_channel_exact(self, tmp_path):
        cfg = GeneratorConfig(num_inputs=6, num_outputs=5, num_prototypes=2, seed=3)
        ch = sample_dmc(cfg)
        path = tmp_path / "gen.json"
        save_channel(path, ch, metadata={"generator": cfg.to_dict()})
        loaded = load_channel(path)
        assert np.array_equal(loaded.matrix, ch.matrix)


class TestCsvFormat:
    def test_round_trip(self, tmp_path, bsc01):
        path = tmp_path / "ch.csv"
        save_channel(path, bsc01)
        loaded = load_channel(path)
        assert np.array_equal(loaded.matrix, bsc01.matrix)

    def test_comments_skipped(self, tmp_path):
        path = tmp_path / "ch.csv"
        path.write_text("# comment line\n0.5,0.5\n# another\n0.25,0.75\n")
        loaded = load_channel(path)
        assert loaded.num_inputs == 2

    def test_bad_line(self, tmp_path):
        path = tmp_path / "ch.csv"
        path.write_text("0.5,abc\n")
        with pytest.raises(FormatError):
            load_channel(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "ch.csv"
        path.write_text("# nothing\n")
        with pytest.raises(FormatError):
            load_channel(path)

    def test_dict_helpers(self, bsc01):
        d = channel_to_dict(bsc01)
        back = channel_from_dict(d)
        assert np.array_equal(back.matrix, bsc01.matrix)
