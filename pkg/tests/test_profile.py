from __future__ import annotations

import math

import numpy as np
import pytest

from conex.grid import Grid1D
from conex.io import read_csv
from conex.profile import (ConeSpec, ProfileDiverged, admissible_beta, ball_barrier, comparison_bound,
                           defining_function, halfplane_oracle, max_beta, profile_residual,
                           solve_profile)


@pytest.fixture(scope="module")
def halfplane_n3():
    return solve_profile(ConeSpec(n=3), Grid1D(0.0, math.pi, 4096))


def test_grid_nodes_avoid_endpoints():
    g = Grid1D(0.0, 1.0, 16)
    assert g.nodes[0] == pytest.approx(g.h / 2)
    assert g.nodes[-1] == pytest.approx(1 - g.h / 2)
    e = Grid1D(0.0, 1.0, 16, "endpoint-offset")
    assert e.nodes[0] == pytest.approx(e.h) and e.h == pytest.approx(1 / 17)
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 8)
    assert g.refined().count == 32


def test_cone_spec_validation():
    with pytest.raises(ValueError):
        ConeSpec(n=3, alpha=2 * math.pi)
    with pytest.raises(ValueError):
        ConeSpec(n=3, k=4)
    with pytest.raises(ValueError):
        ConeSpec(n=3, M=0)
    assert ConeSpec(n=4).power == 3.0


def test_defining_function_slope_one():
    d, d1, _ = defining_function(np.array([0.0, 0.5]), 0.5)
    assert d[0] == 0 and d1[0] == pytest.approx(1.0) and d1[1] == pytest.approx(-1.0)
    assert d[1] == pytest.approx(0.0, abs=1e-15)


def test_halfplane_profile_matches_oracle(halfplane_n3):
    sol = halfplane_n3
    exact = halfplane_oracle(3, sol.theta)
    assert np.max(np.abs(sol.u_S / exact - 1)) <= 1e-6
    assert sol.sigma == pytest.approx(1.0, rel=1e-5)
    assert sol.c_S.coeff(0) == 1.0
    assert np.all(sol.u_S > 0)


def test_halfplane_grid_refinement_second_order():
    errs = []
    for n in (64, 128, 256):
        sol = solve_profile(ConeSpec(n=4, alpha=math.pi), Grid1D(0.0, math.pi, n))
        errs.append(np.max(np.abs(sol.u_S / halfplane_oracle(4, sol.theta) - 1)))
    # w == 1 is exact on the half-plane; the scheme reproduces it to roundoff
    assert max(errs) < 1e-12


@pytest.mark.parametrize("alpha", [3 * math.pi / 4, math.pi / 2])
def test_profile_residual_and_symmetry(alpha):
    sol = solve_profile(ConeSpec(n=3, alpha=alpha), Grid1D(0.0, alpha, 1024))
    assert profile_residual(sol) <= 1e-8
    assert np.allclose(sol.w, sol.w[::-1], atol=1e-9)
    assert sol.w[0] == pytest.approx(1.0, abs=1e-3)
    assert sol.c_S.coeff(0) == 1.0


def test_profile_self_convergence_on_wedge():
    alpha = math.pi / 2
    sols = [solve_profile(ConeSpec(n=3, alpha=alpha), Grid1D(0.0, alpha, n)) for n in (128, 256, 512, 1024)]
    # compare coarse cells against the average of the two children
    diffs = []
    for c, f in zip(sols[:-1], sols[1:]):
        fine = 0.5 * (f.w[0::2] + f.w[1::2])
        diffs.append(np.max(np.abs(c.w - fine)))
    ratios = [a / b for a, b in zip(diffs[:-1], diffs[1:])]
    assert min(ratios) >= 3.0


def test_sigma_increases_as_arc_shrinks():
    sig = [solve_profile(ConeSpec(n=3, alpha=a), Grid1D(0.0, a, 512)).sigma
           for a in (math.pi, 3 * math.pi / 4, math.pi / 2)]
    assert sig[0] < sig[1] < sig[2]


def test_profile_errors():
    with pytest.raises(ValueError):
        solve_profile(ConeSpec(n=3, k=3))
    with pytest.raises(ProfileDiverged, match="profile diverged"):
        solve_profile(ConeSpec(n=3, alpha=math.pi / 2), Grid1D(0.0, math.pi / 2, 256), max_steps=1)


def test_profile_save(tmp_path, halfplane_n3):
    csv_path, json_path = halfplane_n3.save(tmp_path)
    data = read_csv(csv_path)
    assert set(data) == {"theta", "u_S", "w"}
    assert np.array_equal(data["u_S"], halfplane_n3.u_S)
    assert '"sigma"' in json_path.read_text()


def test_halfplane_oracle_examples():
    assert halfplane_oracle(3, math.pi / 2) == 1.0
    assert halfplane_oracle(3, math.pi / 6) == pytest.approx(math.sqrt(2))
    assert halfplane_oracle(4, math.pi / 2) == 1.0
    with pytest.raises(ValueError):
        halfplane_oracle(3, math.pi)


def test_barrier_constants():
    assert ball_barrier(3, 2.0, 0.0) == 1.0
    assert ball_barrier(4, 2.0, 0.0) == 1.0
    assert comparison_bound(3, 2.0) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        ball_barrier(3, 2.0, 2.0)


def test_admissible_beta():
    assert admissible_beta(3, 1.0, 1.0)
    assert not admissible_beta(3, 1.0, 1.5)
    assert admissible_beta(3, 1.0, 1e-9)
    assert max_beta(3, 1.0) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        admissible_beta(3, 0.0, 1.0)
