import numpy as np
import pytest
from hypothesis import given, strategies as st

from bayesqd.benchmarks import (
    ROSENBROCK_TABLE,
    STYBLINSKI_TABLE,
    SUITES,
    TRID_TABLE,
    get_suite,
    rosenbrock_suite,
    styblinski_suite,
    trid_suite,
)
from bayesqd.space import PointSet, lhs_sample

# Second transcription, typed separately in the printed row order.
# Leading integer columns are the categorical levels.
ROSENBROCK_TEXT = """
0 0 100 1   0.7 2000  1  0     1 -1.2  0    0    -1
0 1 103 1.6 0.2 1950 -1  0     1 -0.2  0    0     0.97
1 0  98 2   0.3 2100  1  0     1 -0.7  0    0     0.95
1 1 100 1.7 0.5 2020  1  0     1  0.15 0    0     1.1
2 0  95 4.7 1.5 1970  1  0.15  2  0    0.5  0    -0.8
2 1  97 2.4 1.2 2100  1 -0.55  2  0.4  0   -0.8   0.7
3 0 103 1.7 2.5 2070 -1 -1.15  2  0   -1.5  0     1.8
3 1 100 0.2 1   1890  1 -1.3   2  1.4  0    0.8  -1.7
4 0  96 1.1 0.5 2140 -1  0.5   2  0   -2.3  0    -0.8
4 1 104 1.5 2   1930 -1  1.4   2 -2.4  0    1.8  -0.8
5 0  99 1.1 0.5 2140  1 -1.5   2  0    2    0    -0.9
5 1 104 1.5 2   2030  1  1.8   2  0.4  0    1    -0.3
"""
TRID_TEXT = """
0 0 1    1   1    1   1   0.7  1   1   1.5 1   0.4
1 0 0.95 1   1.1  0.8 1   0.4  1.1 1   1.9 1   0.1
2 0 1    1.3 0.97 1.1 0.8 0.1  1   0.9 1.5 1.1 0.4
0 1 1.1  0.7 1    1   1   0.7  1   1   0.7 1   1.4
1 1 0.7  0.5 0.4  1.5 1   1.7  0.7 0.7 0.5 1   0.9
2 1 0.7  1   1.5  1   1.3 0.91 1   1   1.5 0.7 0.1
"""
STYBLINSKI_TEXT = """
0 0 0 1    16 5   1.2 0.7 3.5 0.7
1 0 0 1.1  18 6.1 1.4 0.9 3.8 0.2
1 1 0 0.95 17 4.9 1.7 1.3 2.8 0.7
0 1 0 0.94 12 6.9 1.4 0.2 1.4 0.2
0 0 1 0.75 10 7   2.2 1.7 1.5 0.5
1 0 1 1.2  19 4.2 1.5 2.9 1.4 1.2
1 1 1 0.97 12 1.9 0.7 2.3 3.8 0.4
0 1 1 1.1  18 4.2 1.9 0.7 2.7 0.4
"""


def parse_table(text, n_levels):
    rows = {}
    for line in text.strip().splitlines():
        vals = line.split()
        rows[tuple(int(v) for v in vals[:n_levels])] = [float(v) for v in vals[n_levels:]]
    return rows


def at(problem, x, q):
    pts = PointSet(np.array([x], float), np.zeros((1, 0), int), np.array([q]))
    y, f, g = problem.evaluate_checked(pts)
    return y[0], f[0], g[0]


class TestCoefficientTranscription:
    @pytest.mark.parametrize(
        "table, text, n_levels, n_rows",
        [(ROSENBROCK_TABLE, ROSENBROCK_TEXT, 2, 12), (TRID_TABLE, TRID_TEXT, 2, 6),
         (STYBLINSKI_TABLE, STYBLINSKI_TEXT, 3, 8)],
        ids=["rosenbrock", "trid", "styblinski"],
    )
    def test_every_cell(self, table, text, n_levels, n_rows):
        ref = parse_table(text, n_levels)
        assert len(ref) == n_rows == len(table.rows)
        for key, vals in ref.items():
            assert list(table.row(key).values()) == vals, key

    def test_lookup_vectorized(self):
        levels = np.array([[5, 1], [0, 0]])
        c = ROSENBROCK_TABLE.lookup(levels)
        np.testing.assert_array_equal(c["a"], [104, 100])
        np.testing.assert_array_equal(c["v"], [-0.3, -1])


class TestRosenbrock:
    def test_objective_example(self):
        y, _, _ = at(rosenbrock_suite(), [0.0, 0.0], [0, 0])
        assert y == pytest.approx(-2.45e-4, abs=1e-15)

    def test_feature_example(self):
        _, f, _ = at(rosenbrock_suite(), [0.0, 0.0], [0, 0])
        assert f[0] == -1.2

    def test_constraint_boundary(self):
        _, _, g = at(rosenbrock_suite(), [0.5, 5.6], [3, 1])
        assert g[0] == pytest.approx(0.0, abs=1e-15)

    def test_quadratic_feature_row(self):
        # row (2,0): j=1, k=0.15, r=2, s=0 -> (x1 - 0.15)^2
        _, f, _ = at(rosenbrock_suite(), [1.15, 0.0], [2, 0])
        assert f[0] == pytest.approx(1.0)


class TestTrid:
    def test_objective_example(self):
        y, _, _ = at(trid_suite(), [0, 0, 0, 0], [0, 0])
        assert y == 4.0

    def test_constraint_example(self):
        _, _, g = at(trid_suite(), [0.4, 0.3, 0.0, 0.9], [1, 1])
        assert g[0] == pytest.approx(-1.3)

    def test_second_feature_example(self):
        _, f, _ = at(trid_suite(), [0.6, 0.0, 0.0, 0.8], [0, 0])
        assert f[1] == pytest.approx(-1.34, abs=1e-12)


class TestStyblinski:
    @pytest.mark.parametrize("q", [(0, 0, 0), (1, 0, 1), (0, 1, 1)])
    def test_zero_vector(self, q):
        y, _, _ = at(styblinski_suite(), [0.0] * 6, list(q))
        assert y == 0.0

    def test_unit_vector(self):
        y, _, _ = at(styblinski_suite(), [1.0] * 6, [0, 0, 0])
        assert y == pytest.approx(-60.0)

    def test_second_constraint_boundary(self):
        _, _, g = at(styblinski_suite(), [0.0, 0.0, 0.0, 1.0, 0.0, 1.0], [0, 0, 0])
        assert g[1] == 0.0


class TestSuites:
    @pytest.mark.parametrize(
        "name, dims, bins",
        [("rosenbrock", (2, 0, 2, 2, 1), 130), ("trid", (4, 0, 2, 2, 1), 30), ("styblinski", (6, 0, 3, 2, 2), 30)],
    )
    def test_shapes(self, name, dims, bins):
        pb = get_suite(name)
        s = pb.space
        assert (s.d_c, s.d_d, s.d_q, pb.n_features, pb.n_constraints) == dims
        assert pb.grid.n_bins == bins

    def test_unknown_suite(self):
        with pytest.raises(KeyError, match="wing"):
            get_suite("wing")

    @pytest.mark.parametrize("name", sorted(SUITES))
    def test_batch_matches_single_point(self, name):
        pb = get_suite(name)
        pts = lhs_sample(pb.space, 25, 0)
        y, F, G = pb.evaluate_checked(pts)
        for k in (0, 7, 24):
            assert pb.objective(pts[k]) == y[k]
            np.testing.assert_array_equal(pb.features(pts[k]), F[k])
            np.testing.assert_array_equal(pb.constraints(pts[k]), G[k])

    @pytest.mark.parametrize("name", sorted(SUITES))
    @given(seed=st.integers(0, 2**31))
    def test_finite_outputs(self, name, seed):
        pb = get_suite(name)
        y, F, G = pb.evaluate_checked(lhs_sample(pb.space, 8, seed))
        assert np.all(np.isfinite(y)) and np.all(np.isfinite(F)) and np.all(np.isfinite(G))
