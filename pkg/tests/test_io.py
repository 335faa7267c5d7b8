import json

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from sipkit import io
from sipkit.contour import empirical_contour_pdf
from sipkit.density import Grid1D, Grid2D, GriddedPdf1D, GriddedPdf2D, SampleSet
from sipkit.inference import MAXENT_FAMILY, ParamGrid, posterior, true_law_samples, uniform_prior
from sipkit.maxent import MaxEntModel, first_moment_constraints, solve_multipliers
from sipkit.random_fields import Matern, Mesh1D, kl_decompose, sample_gp


class TestCsv:
    def test_round_trip_is_exact(self, tmp_path, rng):
        x = rng.standard_normal(50) * 10.0 ** rng.integers(-20, 20, 50)
        io.write_csv(tmp_path / "a.csv", ["x", "k"], [x, np.arange(50)])
        d = io.read_csv(tmp_path / "a.csv")
        assert_array_equal(d["x"], x)
        assert_array_equal(d["k"], np.arange(50))

    def test_seventeen_digits(self, tmp_path):
        io.write_csv(tmp_path / "a.csv", ["v"], [[1 / 3]])
        line = (tmp_path / "a.csv").read_text().splitlines()[1]
        assert line == "%.17g" % (1 / 3)
        assert len(line.replace("0.", "")) == 17

    def test_header_and_lengths(self, tmp_path):
        io.write_csv(tmp_path / "sub" / "a.csv", ["a", "b"], [[1, 2], [3.5, 4.5]])
        assert (tmp_path / "sub" / "a.csv").read_text().splitlines()[0] == "a,b"
        with pytest.raises(ValueError):
            io.write_csv(tmp_path / "b.csv", ["a", "b"], [[1, 2], [3]])

    def test_matrix(self, tmp_path, rng):
        M = rng.random((4, 3))
        io.write_matrix_csv(tmp_path / "m.csv", M, ["p", "q", "r"])
        d = io.read_csv(tmp_path / "m.csv")
        assert_array_equal(np.column_stack([d["p"], d["q"], d["r"]]), M)


class TestJson:
    def test_numpy_and_nonfinite(self, tmp_path):
        io.write_json(tmp_path / "a.json", {"a": np.float64(0.5), "b": np.arange(3), "c": np.inf,
                                            "d": np.bool_(True), 3: (1, 2)})
        d = json.loads((tmp_path / "a.json").read_text())
        assert d == {"a": 0.5, "b": [0, 1, 2], "c": None, "d": True, "3": [1, 2]}

    def test_sorted_keys(self, tmp_path):
        io.write_json(tmp_path / "a.json", {"b": 1, "a": 2})
        assert (tmp_path / "a.json").read_text().index('"a"') < (tmp_path / "a.json").read_text().index('"b"')


class TestTypedWriters:
    def test_pdf_1d_round_trip(self, tmp_path, rng):
        g = Grid1D(0, 1, 20)
        p = GriddedPdf1D(g, rng.random(20))
        io.save_pdf(p, tmp_path / "p.csv")
        assert_array_equal(io.load_pdf1d(tmp_path / "p.csv", g).values, p.values)
        with pytest.raises(ValueError):
            io.load_pdf1d(tmp_path / "p.csv", Grid1D(0, 2, 20))

    def test_pdf_2d_row_major(self, tmp_path):
        g = Grid2D.unit_square(3, 2)
        v = np.arange(6.0).reshape(3, 2)
        io.save_pdf(GriddedPdf2D(g, v), tmp_path / "p.csv")
        d = io.read_csv(tmp_path / "p.csv")
        assert list(d) == ["x", "y", "value"]
        assert_array_equal(d["value"], v.ravel())
        assert d["x"][0] == d["x"][1] and d["y"][0] != d["y"][1]

    def test_samples_sidecar(self, tmp_path):
        s = SampleSet(np.random.default_rng(0).random((5, 2)), 42)
        io.save_samples(s, tmp_path / "s.csv")
        meta = json.loads((tmp_path / "s.json").read_text())
        assert meta == {"dim": 2, "n": 5, "seed": 42}
        assert list(io.read_csv(tmp_path / "s.csv")) == ["z1", "z2"]

    def test_contour_pdf(self, tmp_path):
        c = empirical_contour_pdf(0.8, n_segments=20, adapt=False)
        io.save_contour_pdf(c, tmp_path / "c.csv")
        assert list(io.read_csv(tmp_path / "c.csv")) == ["x_C", "value"]
        assert set(json.loads((tmp_path / "c.json").read_text())) == {"x_L", "eps", "n_segments",
                                                                       "arc_length"}

    def test_maxent(self, tmp_path):
        m = solve_multipliers(MaxEntModel(Grid2D.unit_square(20), first_moment_constraints(0.4, 0.6)))
        io.save_maxent(m, tmp_path / "m.json")
        d = json.loads((tmp_path / "m.json").read_text())
        assert d["constraint_names"] == ["z1", "z2"]

    def test_posterior(self, tmp_path):
        g = ParamGrid(("mu1", "mu2"), (0.3, 0.3), (0.7, 0.7), (3, 3))
        p = posterior(MAXENT_FAMILY, uniform_prior(g), true_law_samples(20, 1), g)
        io.save_posterior(p, tmp_path / "post.csv")
        d = io.read_csv(tmp_path / "post.csv")
        assert list(d) == ["theta1", "theta2", "prior", "loglik", "posterior"]
        assert_array_equal(d["posterior"], p.posterior.ravel())
        meta = json.loads((tmp_path / "post.json").read_text())
        assert {"map_estimate", "n_samples", "seed"} <= set(meta)
        assert meta["n_samples"] == 20 and meta["seed"] == 1

    def test_ensemble_and_kl(self, tmp_path):
        e = sample_gp(Matern(2.5, 0.1), Mesh1D(0.25), 30, 3)
        io.save_ensemble(e, tmp_path / "e.csv")
        meta = json.loads((tmp_path / "e.json").read_text())
        assert set(meta) == {"mesh", "kernel", "seed"} and meta["seed"] == 3
        d = io.read_csv(tmp_path / "e.csv")
        assert_array_equal(np.column_stack(list(d.values())), e.samples)
        io.save_kl(kl_decompose(e), tmp_path / "kl")
        for suffix in ("eigvals", "eigvecs", "scores"):
            assert (tmp_path / f"kl_{suffix}.csv").exists()
