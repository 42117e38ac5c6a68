import numpy as np
import pytest

from envelope_learn.data import DataError, dataset_to_csv
from envelope_learn.labeling import (
    CHANNELS, EngineTrace, LabelingConfig, build_feature_vector, cycle_flags, label_cycles, read_trace_csv,
    trace_to_csv, write_trace_csv,
)

from conftest import GOLDEN

IMEP = CHANNELS.index("IMEP")
CA50 = CHANNELS.index("CA50")

# hand-traced label sets, p = 5, N_h = 2, T = 30 (eligible k = 5..24)
EXPECTED = {
    "all_stable": (list(range(5, 25)), []),
    "single_misfire": (list(range(5, 11)) + list(range(22, 25)), [15]),
    "consecutive_misfire": (list(range(5, 11)) + list(range(23, 25)), [15]),
}


def fixture_trace(misfires=(), T=30):
    data = np.array([[100.0 * c + k for c in range(13)] for k in range(T)])
    data[:, IMEP] = 3.0
    data[:, CA50] = 7.0
    for k in misfires:
        data[k, IMEP] = 0.0
    return EngineTrace(data)


def split(ds):
    pos = ds.cycles[ds.y == 1].tolist()
    neg = ds.cycles[ds.y == -1].tolist()
    return pos, neg


class TestFeatureVector:
    def test_lengths(self):
        tr = fixture_trace()
        assert build_feature_vector(tr, 10, 2).shape == (39,)
        assert build_feature_vector(tr, 10, 0).shape == (13,)

    def test_no_history_is_record(self):
        tr = fixture_trace()
        assert np.array_equal(build_feature_vector(tr, 7, 0), tr.data[7])

    def test_ordering(self):
        tr = fixture_trace(T=3)
        v = build_feature_vector(tr, 2, 2)
        assert np.array_equal(v[0:13], tr.data[2])
        assert np.array_equal(v[13:26], tr.data[1])
        assert np.array_equal(v[26:39], tr.data[0])

    def test_insufficient_history(self):
        with pytest.raises(DataError, match="insufficient history"):
            build_feature_vector(fixture_trace(), 1, 2)


class TestGoldenFixtures:
    @pytest.mark.parametrize("name,misfires", [
        ("all_stable", ()), ("single_misfire", (16,)), ("consecutive_misfire", (16, 17))])
    def test_label_sets(self, name, misfires):
        ds = label_cycles(fixture_trace(misfires), LabelingConfig())
        assert split(ds) == EXPECTED[name]

    @pytest.mark.parametrize("name", sorted(EXPECTED))
    def test_golden_csv_bytes(self, name):
        tr = read_trace_csv(GOLDEN / f"{name}_trace.csv")
        got = dataset_to_csv(label_cycles(tr, LabelingConfig()))
        assert got == (GOLDEN / f"{name}_dataset.csv").read_text()

    def test_all_stable_count(self):
        ds = label_cycles(fixture_trace())
        assert ds.N == 20 and ds.n_neg == 0 and ds.n == 39

    def test_second_misfire_cycle_emitted_nowhere(self):
        ds = label_cycles(fixture_trace((16, 17)))
        assert 16 not in ds.cycles.tolist()


class TestRules:
    def test_variance_rule(self):
        tr = fixture_trace()
        data = tr.data.copy()
        data[18:21, CA50] = [0.0, 14.0, 0.0]  # variance over k+1..k+5 well above 4
        flags = cycle_flags(EngineTrace(data), LabelingConfig())
        ds = label_cycles(EngineTrace(data))
        assert flags.unstable[13] and flags.unstable[17]
        assert not flags.unstable[12]
        # a single run 13..19 collapses to its first cycle
        assert split(ds)[1] == [13]

    def test_variance_uses_population_denominator(self):
        data = fixture_trace().data.copy()
        # CA50 over cycles 11..15 = [5,9,5,9,5] -> population variance 3.84, sample variance 4.8
        data[11:16, CA50] = [5.0, 9.0, 5.0, 9.0, 5.0]
        flags = cycle_flags(EngineTrace(data), LabelingConfig(ca50_var_limit=4.0))
        assert not flags.unstable[10]

    def test_too_short(self):
        with pytest.raises(DataError, match="too short"):
            label_cycles(fixture_trace(T=10))

    @pytest.mark.parametrize("kw", [dict(n_hist=-1), dict(p=0), dict(imep_misfire_limit=0), dict(ca50_var_limit=-1)])
    def test_config_validation(self, kw):
        with pytest.raises(DataError):
            LabelingConfig(**kw)

    def test_feature_dimension_follows_history(self):
        for nh in (0, 1, 2, 4):
            assert label_cycles(fixture_trace(), LabelingConfig(n_hist=nh)).n == 13 * (nh + 1)


class TestInvariants:
    def _random_trace(self, seed, T=400):
        rng = np.random.default_rng(seed)
        data = rng.normal(size=(T, 13))
        data[:, IMEP] = np.where(rng.random(T) < 0.05, 0.0, 3.0)
        data[:, CA50] = 7 + rng.normal(size=T) * np.where(rng.random(T) < 0.1, 4.0, 0.3)
        return EngineTrace(data)

    @pytest.mark.parametrize("seed", range(5))
    def test_index_bounds_and_disjointness(self, seed):
        tr = self._random_trace(seed)
        cfg = LabelingConfig(n_hist=7)
        ds = label_cycles(tr, cfg)
        pos, neg = split(ds)
        assert not set(pos) & set(neg)
        assert all(max(cfg.n_hist, cfg.p) <= k and k + cfg.p < tr.T for k in pos + neg)

    @pytest.mark.parametrize("seed", range(5))
    def test_first_unstable_rule_independent_of_stable_set(self, seed):
        tr = self._random_trace(seed)
        cfg = LabelingConfig()
        fl = cycle_flags(tr, cfg)
        pos, _ = split(label_cycles(tr, cfg))
        assert pos == np.flatnonzero(fl.stable & fl.eligible).tolist()
        # every unstable cycle (not just run starts) is excluded from +1
        assert not np.any(fl.stable & fl.unstable)

    def test_deterministic(self):
        tr = self._random_trace(3)
        assert dataset_to_csv(label_cycles(tr)) == dataset_to_csv(label_cycles(tr))


class TestTraceCsv:
    def test_round_trip(self, tmp_path):
        tr = EngineTrace(np.random.default_rng(0).normal(size=(20, 13)))
        path = tmp_path / "t.csv"
        write_trace_csv(tr, path)
        assert np.array_equal(read_trace_csv(path).data, tr.data)
        assert trace_to_csv(read_trace_csv(path)) == path.read_text()

    def test_missing_column_named(self, tmp_path):
        lines = (GOLDEN / "all_stable_trace.csv").read_text().splitlines()
        hdr = lines[0].split(",")
        drop = hdr.index("CA50")
        text = "\n".join(",".join(c for i, c in enumerate(l.split(",")) if i != drop) for l in lines)
        path = tmp_path / "t.csv"
        path.write_text(text)
        with pytest.raises(DataError, match="CA50"):
            read_trace_csv(path)
