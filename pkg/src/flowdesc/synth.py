"""Analytic stand-in for CFD output: potential flow past a cylinder with
circulation, a Gaussian wake deficit and a few Lamb-Oseen vortices.

Lift is measured along -y, so a positive (counter-clockwise) circulation in a
left-to-right stream gives a positive ``lift_truth = rho * U * Gamma``.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .errors import InputError
from .fields import CHANNELS, FlowField, SampleRecord, grid_coordinates

RHO = 1.0
NUT_COEFF = 0.01

DEFAULT_SIZE = (192, 128)
DEFAULT_BOUNDS = (-2.0, 10.0, -4.0, 4.0)

RANGES = {
    "u_inf": (5.0, 15.0),
    "radius": (0.5, 1.5),
    "circulation": (-10.0, 10.0),
    "wake_strength": (0.0, 0.5),
    "wake_width": (0.2, 0.8),
    "n_vortices": (0, 4),
}

# perturbation vortices have absolute strengths, independent of the stream
VORTEX_STRENGTH = (0.5, 2.0)
VORTEX_CORE = (0.15, 0.4)


@dataclass(frozen=True)
class SynthParams:
    u_inf: float
    radius: float
    circulation: float
    wake_strength: float = 0.0
    wake_width: float = 0.5
    n_vortices: int = 0
    seed: int = 0

    def validate(self) -> None:
        for name, (lo, hi) in RANGES.items():
            v = getattr(self, name)
            if not (lo <= v <= hi):
                raise InputError(f"{name}={v} outside [{lo}, {hi}]")
        if int(self.n_vortices) != self.n_vortices:
            raise InputError("n_vortices must be an integer")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise InputError("seed must fit in 64 bits")


def _vortices(params: SynthParams, bounds) -> list:
    """Seeded (x, y, strength, core) tuples placed outside 1.5 radii."""
    rng = np.random.default_rng(int(params.seed))
    xmin, xmax, ymin, ymax = bounds
    out = []
    while len(out) < params.n_vortices:
        x, y = rng.uniform(xmin, xmax), rng.uniform(ymin, ymax)
        strength = rng.uniform(*VORTEX_STRENGTH) * rng.choice([-1.0, 1.0])
        core = rng.uniform(*VORTEX_CORE)
        if np.hypot(x, y) > 1.5 * params.radius:
            out.append((x, y, strength, core))
    return out


def velocity(params: SynthParams, x, y, bounds=DEFAULT_BOUNDS):
    """Unmasked analytic velocity ``(u, v)`` at points ``(x, y)``."""
    U, a, gamma = params.u_inf, params.radius, params.circulation
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    r = np.maximum(np.hypot(x, y), 0.5 * a)
    th = np.arctan2(y, x)
    ur = U * (1 - a * a / r ** 2) * np.cos(th)
    ut = -U * (1 + a * a / r ** 2) * np.sin(th) + gamma / (2 * np.pi * r)
    u = ur * np.cos(th) - ut * np.sin(th)
    v = ur * np.sin(th) + ut * np.cos(th)

    if params.wake_strength > 0:
        onset = 0.5 * (1 + np.tanh(2.0 * x / a))
        u = u - params.wake_strength * U * np.exp(-0.5 * (y / params.wake_width) ** 2) * onset

    for vx, vy, strength, core in _vortices(params, bounds):
        dx, dy = x - vx, y - vy
        rr = np.maximum(np.hypot(dx, dy), 1e-12)
        ut_v = strength / (2 * np.pi * rr) * (1 - np.exp(-(rr / core) ** 2))
        u = u - ut_v * dy / rr
        v = v + ut_v * dx / rr
    return u, v


def pressure(params: SynthParams, u, v):
    """Kinematic Bernoulli pressure with zero free-stream reference."""
    return 0.5 * (params.u_inf ** 2 - (np.asarray(u) ** 2 + np.asarray(v) ** 2))


def synth_field(params: SynthParams, width: int = DEFAULT_SIZE[0], height: int = DEFAULT_SIZE[1],
                bounds=DEFAULT_BOUNDS) -> tuple:
    """Sample the analytic flow on a ``width x height`` node grid.

    Returns ``(field, (lift_truth, drag_proxy))``.  Nodes inside the body are
    filled with free-stream values.
    """
    params.validate()
    xmin, xmax, ymin, ymax = map(float, bounds)
    if width < 2 or height < 2 or not (xmax > xmin and ymax > ymin):
        raise InputError("need at least a 2x2 grid over non-degenerate bounds")
    a = params.radius
    nearest_x = min(max(0.0, xmin), xmax)
    nearest_y = min(max(0.0, ymin), ymax)
    if np.hypot(nearest_x, nearest_y) > a:
        raise InputError("cylinder does not reach the sampled domain")

    xs, ys = grid_coordinates(width, height, bounds)
    gx, gy = np.meshgrid(xs, ys)
    u, v = velocity(params, gx, gy, bounds)
    p = pressure(params, u, v)
    dudy, _ = np.gradient(u, ys, xs)
    _, dvdx = np.gradient(v, ys, xs)
    nut = NUT_COEFF * np.abs(dvdx - dudy)

    inside = np.hypot(gx, gy) < a
    u[inside] = params.u_inf
    v[inside] = 0.0
    p[inside] = 0.0
    nut[inside] = 0.0

    field = FlowField(CHANNELS, np.stack([u, v, p, nut, nut.copy()]))
    return field, (RHO * params.u_inf * params.circulation, float(params.wake_strength))


def draw_params(rng: np.random.Generator) -> SynthParams:
    return SynthParams(
        u_inf=float(rng.uniform(*RANGES["u_inf"])),
        radius=float(rng.uniform(*RANGES["radius"])),
        circulation=float(rng.uniform(*RANGES["circulation"])),
        wake_strength=float(rng.uniform(*RANGES["wake_strength"])),
        wake_width=float(rng.uniform(*RANGES["wake_width"])),
        n_vortices=int(rng.integers(0, RANGES["n_vortices"][1] + 1)),
        seed=int(rng.integers(0, 2 ** 63)),
    )


@dataclass(frozen=True)
class SynthSource:
    """Picklable deferred generator for one record's field."""

    params: SynthParams
    width: int
    height: int
    bounds: tuple

    def __call__(self) -> FlowField:
        return synth_field(self.params, self.width, self.height, self.bounds)[0]


def synth_dataset(n: int, seed: int, width: int = DEFAULT_SIZE[0], height: int = DEFAULT_SIZE[1],
                  bounds=DEFAULT_BOUNDS, lazy: bool = False) -> list:
    """``n`` records with i.i.d. uniform parameters; drag <- wake proxy, lift <- rho*U*Gamma.

    With ``lazy=True`` records hold a :class:`SynthSource` instead of the grids,
    which keeps thousands of records cheap to hold in memory.
    """
    if n < 1:
        raise InputError("n must be positive")
    rng = np.random.default_rng(seed)
    bounds = tuple(float(b) for b in bounds)
    records = []
    for i in range(n):
        params = draw_params(rng)
        params.validate()
        lift, drag = RHO * params.u_inf * params.circulation, float(params.wake_strength)
        source = SynthSource(params, width, height, bounds)
        records.append(SampleRecord(
            id=f"synth-{seed}-{i:05d}", field=None if lazy else source(), drag=drag, lift=lift,
            angle_of_attack=None, shape_id=f"r{params.radius:.3f}", source=source))
    return records


def params_dict(params: SynthParams) -> dict:
    return asdict(params)
