import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmclean.metrics import MetricsRecord, MetricsSeries, coherency, ratio_within


class TestRatioWithin:
    def test_all_at_center(self):
        pos = np.zeros((7, 2)) + 142.5
        assert ratio_within(pos, (142.5, 142.5), 70.0) == 1.0

    def test_one_of_ten_inside(self):
        pos = np.full((10, 2), 142.5)
        pos[1:, 0] += 200.0  # nine robots 2 m out
        pos[0, 0] += 69.0  # one robot 0.69 m out
        assert ratio_within(pos, (142.5, 142.5), 70.0) == pytest.approx(0.1)

    def test_boundary_counts_as_inside(self):
        pos = np.full((4, 2), 142.5)
        pos[:, 0] += 70.0
        assert ratio_within(pos, (142.5, 142.5), 70.0) == 1.0

    def test_empty_swarm_reports_zero(self):
        assert ratio_within(np.empty((0, 2)), (0.0, 0.0), 70.0) == 0.0

    @given(st.integers(1, 20), st.integers(0))
    @settings(max_examples=40, deadline=None)
    def test_values_are_multiples_of_one_over_n(self, n, seed):
        rng = np.random.default_rng(seed)
        pos = rng.uniform(0, 285, size=(n, 2))
        r = ratio_within(pos, (142.5, 142.5), 70.0)
        assert r == pytest.approx(round(r * n) / n, abs=1e-12)
        assert 0.0 <= r <= 1.0


class TestCoherency:
    def test_single_pair(self):
        pos = np.array([[0.0, 0.0], [150.0, 0.0]])
        assert coherency(pos) == pytest.approx(1.5)

    def test_coincident_robots(self):
        pos = np.full((5, 2), 33.0)
        assert coherency(pos) == 0.0

    def test_equilateral_triangle(self):
        s = 100.0  # 1 m sides
        pos = np.array([[0.0, 0.0], [s, 0.0], [s / 2, s * np.sqrt(3) / 2]])
        assert coherency(pos) == pytest.approx(1.0, abs=1e-12)

    def test_fewer_than_two_robots(self):
        assert coherency(np.empty((0, 2))) == 0.0
        assert coherency(np.array([[10.0, 10.0]])) == 0.0

    def test_matches_brute_force_pair_mean(self):
        rng = np.random.default_rng(5)
        pos = rng.uniform(0, 285, size=(12, 2))
        total = 0.0
        count = 0
        for i in range(12):
            for j in range(i + 1, 12):
                total += np.hypot(*(pos[i] - pos[j]))
                count += 1
        assert coherency(pos) == pytest.approx(total / count / 100.0, rel=1e-12)

    @given(st.integers(0, 1000))
    @settings(max_examples=30, deadline=None)
    def test_invariances(self, seed):
        rng = np.random.default_rng(seed)
        pos = rng.uniform(0, 285, size=(8, 2))
        base = coherency(pos)
        shuffled = pos[rng.permutation(8)]
        assert coherency(shuffled) == pytest.approx(base, rel=1e-12)
        assert coherency(pos + [17.0, -4.0]) == pytest.approx(base, rel=1e-9)
        assert coherency(pos * 2.0) == pytest.approx(2.0 * base, rel=1e-9)

    def test_bounded_by_arena_diagonal(self):
        rng = np.random.default_rng(9)
        pos = rng.uniform(0, 285, size=(30, 2))
        assert coherency(pos) <= 285.0 * np.sqrt(2) / 100.0


class TestMetricsSeries:
    def make_series(self):
        return MetricsSeries.from_records(
            [
                MetricsRecord(0, 40.76, 0.2, 1.47),
                MetricsRecord(1, 40.5, 0.3, 1.40),
                MetricsRecord(2, 40.1, 0.4, 1.32),
            ]
        )

    def test_roundtrip_is_byte_identical(self, tmp_path):
        s = self.make_series()
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        s.to_csv(p1)
        MetricsSeries.from_csv(p1).to_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_header_and_schema(self, tmp_path):
        p = tmp_path / "m.csv"
        self.make_series().to_csv(p)
        lines = p.read_text().splitlines()
        assert lines[0] == "t,mean_cue,ratio_within_rc,coherency_m"
        assert len(lines) == 4
        assert lines[1].split(",")[0] == "0"

    def test_reject_foreign_header(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("time,cue\n0,1\n")
        with pytest.raises(ValueError):
            MetricsSeries.from_csv(p)

    def test_row_accessor(self):
        s = self.make_series()
        r = s.row(1)
        assert (r.t, r.mean_cue, r.ratio_within_rc, r.coherency_m) == (1, 40.5, 0.3, 1.40)

    def test_shortest_roundtrip_floats(self, tmp_path):
        s = MetricsSeries.from_records([MetricsRecord(0, 0.1, 1 / 3, 2.0000000000000004)])
        p = tmp_path / "m.csv"
        s.to_csv(p)
        body = p.read_text().splitlines()[1]
        assert body == "0,0.1,0.3333333333333333,2.0000000000000004"
