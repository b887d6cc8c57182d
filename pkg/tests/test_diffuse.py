import numpy as np
import pytest

from chlimit.diffuse import (
    RadialGrid,
    RadialState,
    _wall_flux,
    chemical_potential,
    energy,
    init_from_approx,
    interface_radius,
    mass,
    run,
    step,
)
from chlimit.errors import MultipleInterfaces, NoInterface, ResolutionTooCoarse


@pytest.fixture(scope="module")
def coarse_run(coarse_field):
    grid = RadialGrid.for_eps(2.0, coarse_field.eps)
    return run(coarse_field, grid, coarse_field.eps, 0.05, snapshot_times=np.linspace(0, 0.05, 3))


def test_grid_geometry():
    g = RadialGrid(2.0, 200)
    assert g.h == pytest.approx(0.01)
    assert g.nodes[0] == 0.0 and g.nodes[-1] == 2.0
    # control volumes tile the disk (measure int r dr = R^2/2)
    assert g.weights.sum() == pytest.approx(2.0, rel=1e-12)


def test_for_eps_resolution():
    g = RadialGrid.for_eps(2.0, 0.04)
    assert g.h <= 0.04 / 8
    g.check_resolution(0.04)
    with pytest.raises(ResolutionTooCoarse):
        RadialGrid(2.0, 50).check_resolution(0.04)


def test_laplacian_of_quadratic():
    g = RadialGrid(1.0, 100)
    lap = g.laplacian(g.nodes**2)
    # exact in the interior, symmetric closure at the origin
    assert lap[1:] == pytest.approx(4.0, rel=1e-10)
    assert lap[0] == pytest.approx(4.0, rel=1e-10)


def test_laplacian_order():
    errs = []
    for n in (100, 200):
        g = RadialGrid(1.0, n)
        r = g.nodes
        u = np.cos(2 * r)
        exact = -4 * np.cos(2 * r) - 2 * np.sin(2 * r) / np.where(r > 0, r, 1)
        exact[0] = -8.0
        errs.append(np.max(np.abs(g.laplacian(u)[1:] - exact[1:-1])))
    assert np.log2(errs[0] / errs[1]) > 1.8


def test_steady_wall_state_is_fixed_point(well):
    g = RadialGrid(2.0, 100)
    c = -np.ones(101)
    mu = chemical_potential(g, c, 0.1, well)
    assert np.all(mu == 0)
    s = RadialState(0.0, c, mu, energy(g, c, 0.1, well), mass(g, c))
    new, iters, _ = step(s, 1e-3, 0.1, well, g)
    assert iters == 0
    assert np.all(new.c == c)


def test_init_boundary_rows(coarse_field):
    grid = RadialGrid.for_eps(2.0, coarse_field.eps)
    s = init_from_approx(coarse_field, grid)
    assert s.c[-1] == -1.0 and s.mu[-1] == 0.0
    assert interface_radius(s, grid) == pytest.approx(1.0, abs=1e-3)


def test_init_rejects_coarse_grid(coarse_field):
    with pytest.raises(ResolutionTooCoarse):
        init_from_approx(coarse_field, RadialGrid(2.0, 40))


def test_step_mass_balance_and_newton(coarse_field, well):
    eps = coarse_field.eps
    grid = RadialGrid.for_eps(2.0, eps)
    s = init_from_approx(coarse_field, grid)
    dt = 10 * eps**3
    new, iters, hist = step(s, dt, eps, well, grid)
    assert 1 <= iters <= 6
    assert hist[-1] <= 1e-10
    # mass changes only through the wall flux
    assert (new.mass - s.mass) / dt == pytest.approx(_wall_flux(grid, new.mu), rel=1e-8, abs=1e-10)
    assert new.energy < s.energy


def test_run_history(coarse_run):
    res = coarse_run
    assert len(res.snapshots) == 3
    assert res.snapshots[-1].t == pytest.approx(0.05)
    assert np.all(res.energy_increments <= 0)
    assert res.energy_rejections == 0
    assert res.boundary_error == 0.0
    assert np.all(np.diff(res.R_eps) < 0)


def test_run_tracks_sharp_radius(coarse_run, coarse_field):
    h = coarse_run.arrays()
    err = np.max(np.abs(h["R_eps"] - coarse_field.sharp.R(h["t"])))
    assert err < 0.01


def test_run_without_guard_matches(coarse_field):
    grid = RadialGrid.for_eps(2.0, coarse_field.eps)
    a = run(coarse_field, grid, coarse_field.eps, 0.01)
    b = run(coarse_field, grid, coarse_field.eps, 0.01, energy_guard=False)
    assert a.final.c == pytest.approx(b.final.c, abs=1e-13)


def test_write(tmp_path, coarse_run):
    paths = coarse_run.write(tmp_path / "out")
    hist = np.genfromtxt(paths[0], delimiter=",", names=True)
    assert hist.dtype.names == ("t", "R_eps", "energy", "mass")
    snap = np.genfromtxt(paths[1], delimiter=",", names=True)
    assert snap.dtype.names == ("r", "c", "mu")
    assert len(paths) == 1 + len(coarse_run.snapshots)


def test_interface_radius_errors():
    g = RadialGrid(1.0, 10)
    with pytest.raises(NoInterface):
        interface_radius(-np.ones(11), g)
    c = np.ones(11)
    c[3] = -1
    c[-1] = -1
    with pytest.raises(MultipleInterfaces):
        interface_radius(c, g)


def test_interface_radius_interpolates():
    g = RadialGrid(1.0, 10)
    c = 0.53 - g.nodes
    assert interface_radius(c, g) == pytest.approx(0.53)
