import math

import numpy as np
import pytest
from scipy import stats

from flowdesc.errors import InputError
from flowdesc.fields import CHANNELS, grid_coordinates
from flowdesc.synth import RANGES, SynthParams, pressure, synth_dataset, synth_field, velocity

from oracles import control_volume_lift, cylinder_flow


def test_free_stream_far_upstream():
    p = SynthParams(10.0, 0.5, 0.0)
    u, v = velocity(p, np.array([-20 * 0.5 - 1.0]), np.array([0.0]))
    assert abs(u[0] - 10.0) <= 0.1 and abs(v[0]) <= 0.1


def test_velocity_matches_closed_form():
    p = SynthParams(7.0, 1.0, 4.0)
    rng = np.random.default_rng(0)
    for x, y in rng.uniform(-5, 5, (20, 2)):
        if math.hypot(x, y) < 1.0:
            continue
        u, v = velocity(p, x, y)
        ue, ve = cylinder_flow(7.0, 1.0, 4.0, x, y)
        assert u == pytest.approx(ue, abs=1e-12) and v == pytest.approx(ve, abs=1e-12)


def test_stagnation_pressure():
    p = SynthParams(8.0, 1.0, 0.0)
    u, v = velocity(p, np.array([-1.0]), np.array([0.0]))
    assert pressure(p, u, v)[0] == pytest.approx(0.5 * 8.0 ** 2, rel=1e-12)


@pytest.mark.parametrize("U,a,gamma", [(10.0, 1.0, 5.0), (5.0, 0.5, -8.0), (15.0, 1.5, 1.0)])
def test_lift_truth_matches_momentum_balance(U, a, gamma):
    params = SynthParams(U, a, gamma)
    _, (lift, drag) = synth_field(params, 32, 24)
    force_y = control_volume_lift(lambda x, y: cylinder_flow(U, a, gamma, x, y), 1.5 * a, n=1440, U=U)
    # lift is measured along -y
    assert -force_y == pytest.approx(lift, rel=0.02)
    assert lift == pytest.approx(U * gamma)
    assert drag == 0.0


def test_pressure_alone_undercounts_on_a_finite_circle():
    # the surface integral of -p n on r = 1.5a only recovers (1 + a^2/R^2)/2 of the lift
    U, a, gamma = 10.0, 1.0, 5.0
    R, n = 1.5 * a, 1440
    total = 0.0
    for i in range(n):
        th = 2 * math.pi * i / n
        u, v = cylinder_flow(U, a, gamma, R * math.cos(th), R * math.sin(th))
        total += -0.5 * (U * U - u * u - v * v) * math.sin(th) * 2 * math.pi * R / n
    assert -total == pytest.approx(U * gamma * (1 + a * a / R ** 2) / 2, rel=1e-9)


def test_lift_linear_in_circulation():
    a = synth_field(SynthParams(9.0, 1.0, 3.0), 16, 16)[1][0]
    b = synth_field(SynthParams(9.0, 1.0, 6.0), 16, 16)[1][0]
    assert b == 2 * a


def test_field_finite_and_masked_interior():
    params = SynthParams(12.0, 1.2, -4.0, 0.3, 0.5, 3, seed=99)
    f, _ = synth_field(params)
    assert f.names == CHANNELS and np.isfinite(f.data).all()
    xs, ys = grid_coordinates(f.width, f.height, (-2, 10, -4, 4))
    gx, gy = np.meshgrid(xs, ys)
    inside = np.hypot(gx, gy) < 1.2
    assert inside.any()
    assert np.all(f.data[0][inside] == np.float32(12.0))
    assert not f.data[1:][:, inside].any()


def _max_divergence(params, n):
    xs, ys = grid_coordinates(n, n, (2.0, 6.0, -2.0, 2.0))
    gx, gy = np.meshgrid(xs, ys)
    u, v = velocity(params, gx, gy)
    dudx = np.gradient(u, xs, axis=1)
    dvdy = np.gradient(v, ys, axis=0)
    return np.abs(dudx + dvdy)[2:-2, 2:-2].max()


def test_discrete_divergence_shrinks_at_second_order():
    params = SynthParams(10.0, 1.0, 6.0)
    coarse, fine = _max_divergence(params, 41), _max_divergence(params, 81)
    # truncation bound from refinement: error(h) ~ C h^2; fine should sit near coarse / 4
    bound = coarse / 4
    assert fine <= 10 * bound
    assert fine < coarse / 3


def test_invalid_params_rejected():
    with pytest.raises(InputError):
        synth_field(SynthParams(1.0, 1.0, 0.0))
    with pytest.raises(InputError):
        synth_field(SynthParams(10.0, 1.0, 11.0))
    with pytest.raises(InputError):
        synth_field(SynthParams(10.0, 1.0, 0.0), bounds=(5, 10, 5, 10))
    with pytest.raises(InputError):
        synth_dataset(0, 1)


def test_dataset_deterministic_and_in_range():
    a, b = synth_dataset(3, 7), synth_dataset(3, 7)
    assert [r.id for r in a] == [r.id for r in b]
    assert all(x.field == y.field and x.drag == y.drag and x.lift == y.lift for x, y in zip(a, b))
    one = synth_dataset(1, 3)
    assert len(one) == 1 and math.isfinite(one[0].drag) and math.isfinite(one[0].lift)
    lazy = synth_dataset(3, 7, lazy=True)
    assert all(r.field is None and r.load() == s.field for r, s in zip(lazy, a))


def test_circulation_draws_are_uniform():
    recs = synth_dataset(10_000, 11, lazy=True)
    gammas = np.array([r.source.params.circulation for r in recs])
    lo, hi = RANGES["circulation"]
    ks = stats.kstest(gammas, stats.uniform(loc=lo, scale=hi - lo).cdf).statistic
    assert ks < 0.02
    lifts = np.array([r.lift for r in recs])
    U = np.array([r.source.params.u_inf for r in recs])
    assert np.allclose(lifts, U * gammas)
