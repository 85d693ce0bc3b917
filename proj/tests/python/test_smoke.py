import numpy as np
import pytest

import lmcommittor as lmc

A, B = "x in [-1,-0.9]", "x in [0.9,1]"


def uniform_line(n=1000):
    return np.linspace(-1.0, 1.0, n).reshape(-1, 1)


def test_potential_values():
    u = lmc.Potential("double_well")
    assert u.value([0.0]) == pytest.approx(1.0)
    assert u.value([1.0]) == 0.0
    assert u.gradient([0.0]) == [0.0]
    assert u.kind == "double_well_1d"


def test_local_mesh_matches_finite_elements():
    u = lmc.Potential("double_well")
    sol = lmc.solve_local_mesh(uniform_line(), u, A, B, dim=1)
    ref = lmc.fem_solve_1d(u, -1.0, 1.0, 1000, A, B)
    assert np.max(np.abs(sol["q"] - ref["q"])) <= 1e-10
    assert sol["nu_r"] == pytest.approx(ref["nu_r"], rel=1e-10)
    labels = np.asarray(sol["labels"])
    assert np.all(sol["q"][labels == 1] == 0.0)
    assert np.all(sol["q"][labels == 2] == 1.0)


def test_flat_rate():
    u = lmc.Potential("flat")
    x = np.linspace(0.0, 1.0, 2000).reshape(-1, 1)
    sol = lmc.solve_local_mesh(x, u, "x in [0,0.1]", "x in [0.9,1]", dim=1)
    assert sol["nu_r"] == pytest.approx(1.25, rel=1e-2)


def test_diffusion_map_runs():
    u = lmc.Potential("double_well")
    sol = lmc.solve_diffusion_map(uniform_line(), u, A, B)
    assert sol["q"].shape == (1000,)
    assert 0.0 < sol["epsilon"][0] < 0.1


def test_sample_knn_and_noise():
    u = lmc.Potential("double_well")
    s = lmc.sample(u, [-1.0], 500, 1e-3, stride=50, seed=3, box_lo=[-1.0], box_hi=[1.0])
    pts = s["points"]
    assert pts.shape[1] == 1
    assert s["kept"] + s["discarded"] == 500
    idx, dist = lmc.knn(pts, 4)
    assert idx.shape == (pts.shape[0], 4)
    assert np.all(np.diff(dist, axis=1) >= 0)
    noisy = lmc.embed_with_noise(pts, 10, 0.0, 1)
    assert noisy.shape == (pts.shape[0], 10)
    assert np.array_equal(noisy[:, :1], pts)
    assert lmc.max_fiftieth_neighbor_distance(pts) > 0


def test_references_and_monte_carlo():
    u = lmc.Potential("double_well")
    assert lmc.closed_form_1d(u, -0.9, 0.9, 0.0) == pytest.approx(0.5, abs=1e-8)
    mc = lmc.mc_committor(u, [0.0], A, B, n_paths=200, dt=1e-3, seed=1)
    assert abs(mc["estimate"] - 0.5) <= 4 * mc["std_error"] + 1e-12
    flat = lmc.Potential("flat", flat_dim=2)
    g = lmc.grid_solve_2d(flat, [0, 0], [1, 0.2], 41, 17, "x<=0.1", "x>=0.9")
    assert g["q"].shape == (41, 17)
    assert g["nu_r"] == pytest.approx(1.25, rel=1e-2)


def test_trace_on_strip():
    xs, ys = np.meshgrid(np.linspace(0, 1, 41), np.linspace(0, 0.3, 13), indexing="ij")
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    u = lmc.Potential("flat", flat_dim=2)
    sol = lmc.solve_local_mesh(pts, u, "x<0.05", "x>0.95")
    tr = lmc.trace(pts, sol["q"], u, "x<0.05", "x>0.95", np.array([0.3, 0.15]))
    assert tr["reason"] == "reached B"
    assert np.all(np.diff(tr["q"]) >= -1e-9)


def test_errors_map_to_python():
    u = lmc.Potential("double_well")
    with pytest.raises(lmc.ConfigError):
        lmc.solve_local_mesh(uniform_line(), u, A, "x>5", dim=1)
    with pytest.raises(lmc.InvalidParameter):
        lmc.knn(uniform_line(10), 10)
    with pytest.raises(lmc.LmcError):
        lmc.Potential("harmonic")
