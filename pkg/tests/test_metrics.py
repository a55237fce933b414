import math

import numpy as np
import pytest
from scipy import stats

from swarmmap.belief import BeliefMap
from swarmmap.metrics import (
    CSV_HEADER,
    MetricsRecord,
    aggregate_from_arrays,
    aggregate_map,
    coverage_fraction,
    coverage_time,
    format_csv_row,
    map_mse,
    weed_observation_correlation,
    write_run_csv,
)
from swarmmap.sensor import SensorModel
from swarmmap.world import WorldConfig, generate_field

from test_sensor import identity_table


def delta_map(c, n_w, assignments):
    """BeliefMap with delta beliefs at given {cell: w} and uniform elsewhere."""
    bmap = BeliefMap.uniform(c, n_w)
    for (x, y), w in assignments.items():
        p = np.zeros(n_w + 1)
        p[w] = 1.0
        bmap.probs[x, y] = p
        bmap.entropy[x, y] = 0.0
        bmap.mapped[x, y] = True
    return bmap


class TestAggregateMap:
    def test_single_agent_is_identity(self):
        bmap = delta_map(4, 3, {(0, 0): 2, (3, 1): 1})
        w_map, entropy = aggregate_map([bmap])
        assert w_map[0, 0] == 2 and w_map[3, 1] == 1
        np.testing.assert_allclose(entropy, bmap.entropy)

    def test_lowest_entropy_wins(self):
        a = delta_map(3, 3, {})  # uniform everywhere
        b = delta_map(3, 3, {(1, 1): 3})
        w_map, entropy = aggregate_map([a, b])
        assert w_map[1, 1] == 3
        assert entropy[1, 1] == 0.0

    def test_entropy_tie_takes_lowest_agent_id(self):
        a = delta_map(3, 3, {(1, 1): 2})
        b = delta_map(3, 3, {(1, 1): 3})
        w_map, _ = aggregate_map([a, b])
        assert w_map[1, 1] == 2

    def test_uniform_belief_reads_zero(self):
        w_map, _ = aggregate_map([BeliefMap.uniform(3, 12)])
        assert np.all(w_map == 0)  # argmax tie resolves to the lowest count

    def test_needs_at_least_one_map(self):
        with pytest.raises(ValueError):
            aggregate_map([])


class TestMapMse:
    def test_perfect_map(self):
        cfg = WorldConfig(c=20, c_p=2, n_p=5, c_i=5)
        field = generate_field(cfg, np.random.default_rng(0))
        assert map_mse(field.weeds.copy(), field) == 0.0

    def test_single_cell_off_by_two(self):
        truth = np.zeros((50, 50), dtype=int)
        w_map = truth.copy()
        w_map[4, 7] = 2
        assert map_mse(w_map, truth) == pytest.approx(4 / 2500)

    def test_uniform_beliefs_equal_sum_of_squares(self):
        cfg = WorldConfig(c=50, c_p=4, n_p=7, c_i=40)
        field = generate_field(cfg, np.random.default_rng(3))
        w_map, _ = aggregate_map([BeliefMap.uniform(50, 12)])
        expected = sum(
            int(field.weeds[x, y]) ** 2 for x in range(50) for y in range(50)
        ) / 2500  # direct summation oracle
        assert map_mse(w_map, field) == pytest.approx(expected)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            map_mse(np.zeros((3, 3)), np.zeros((4, 4)))

    def test_aggregate_no_worse_than_identical_individuals(self):
        cfg = WorldConfig(c=10, c_p=1, n_p=5, c_i=5)
        field = generate_field(cfg, np.random.default_rng(1))
        bmap = delta_map(10, 12, {(2, 2): 4})
        w_one, _ = aggregate_map([bmap])
        w_all, _ = aggregate_map([bmap, bmap, bmap])
        assert map_mse(w_all, field) == map_mse(w_one, field)


class TestCoverage:
    def test_complete_coverage_takes_last_first_visit(self):
        fv = np.array([[0.0, 10.0], [250.0, 30.0]])
        assert coverage_time(fv) == 250.0
        assert coverage_fraction(fv) == 1.0

    def test_pending_when_unvisited(self):
        fv = np.array([[0.0, math.inf], [250.0, 30.0]])
        assert coverage_time(fv) is None
        assert coverage_fraction(fv) == 0.75

    def test_perfect_partition_fixture(self):
        # n agents sweep disjoint column bands at one cell per 10 s: the last
        # first-visit lands at t_n = 10 c^2 / n.
        c, n = 20, 4
        fv = np.full((c, c), math.inf)
        t_cell = 10.0
        per_agent = c * c // n
        for agent in range(n):
            cells = [(x, y) for x in range(agent * 5, agent * 5 + 5) for y in range(c)]
            for k, (x, y) in enumerate(cells):
                fv[x, y] = (k + 1) * t_cell
        assert coverage_time(fv) == pytest.approx(per_agent * t_cell)
        assert coverage_time(fv) == pytest.approx(10 * c * c / n)


class TestCorrelation:
    def test_proportional_counts_give_unity(self):
        weeds = np.arange(25).reshape(5, 5) % 13
        counts = weeds * 3
        assert weed_observation_correlation(weeds, counts) == pytest.approx(1.0)

    def test_matches_scipy(self):
        rng = np.random.default_rng(2)
        weeds = rng.integers(0, 13, size=(30, 30))
        counts = rng.integers(0, 40, size=(30, 30))
        got = weed_observation_correlation(weeds, counts)
        want = stats.pearsonr(weeds.ravel(), counts.ravel()).statistic
        assert got == pytest.approx(want, abs=1e-12)

    def test_independent_counts_near_zero(self):
        rng = np.random.default_rng(3)
        rs = []
        for _ in range(100):
            weeds = rng.integers(0, 13, size=(50, 50))
            counts = rng.integers(0, 40, size=(50, 50))
            rs.append(weed_observation_correlation(weeds, counts))
        assert abs(np.mean(rs)) < 0.05

    def test_zero_variance_undefined(self):
        weeds = np.arange(9).reshape(3, 3)
        assert weed_observation_correlation(weeds, np.full((3, 3), 7)) is None
        assert weed_observation_correlation(np.zeros((3, 3)), weeds) is None

    def test_affine_invariance(self):
        rng = np.random.default_rng(4)
        weeds = rng.integers(0, 13, size=(20, 20))
        counts = rng.integers(0, 50, size=(20, 20))
        base = weed_observation_correlation(weeds, counts)
        scaled = weed_observation_correlation(weeds * 7 + 3, counts * 0.5 + 11)
        assert scaled == pytest.approx(base, abs=1e-12)


class TestCsv:
    def test_header_and_row_format(self, tmp_path):
        rec = MetricsRecord(
            time_s=25.0, time_over_tn=0.05, mse=1.25, coverage_fraction=0.5,
            pearson_r=None,
        )
        row = format_csv_row("run1", "ig-g", 10, math.inf, 3, rec)
        assert row == "run1,ig-g,10,inf,3,25.0,0.05,1.25,0.5,"
        rec2 = MetricsRecord(25.0, 0.05, 1.25, 0.5, 0.25)
        assert format_csv_row("r", "ig-g", 10, 10.0, 3, rec2).endswith(",0.25")

    def test_write_run_csv(self, tmp_path):
        p = tmp_path / "run.csv"
        recs = [
            MetricsRecord(0.0, 0.0, 3.0, 0.0, None),
            MetricsRecord(25.0, 0.05, 2.0, 0.1, 0.5),
        ]
        write_run_csv(p, "runx", "ig-g", 50, math.inf, 1, recs)
        lines = p.read_text().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3
        assert lines[1].startswith("runx,ig-g,50,inf,1,0.0,")
