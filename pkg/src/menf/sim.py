"""Coupled plant / filter / gain simulation on a shared fixed-step RK4 grid.

One engine step advances the plant state, all N estimates and all N gains
together: measurements and neighbor signals are formed from the *stage*
values of x and xhat_j, so the coupled system is integrated as a single
vector field. All built-in disturbance kinds (zero, pulse, held-gaussian)
are piecewise constant with breakpoints snapped to the grid; each is
sampled once per step at the step midpoint, which equals its value at every
interior stage time and keeps the scheme at full order across pulse edges.
Grid-point samples stored for the verifier use closed pulse edges so that
trapezoid integration of ||w||^2 reproduces amplitude^2 * duration exactly.

Everything is deterministic given the scenario seed: the initial state and
each disturbance channel draw from independent streams spawned from the
seed with stable per-channel keys, so removing one channel never reshuffles
the others.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DimensionMismatch,
    LostPositivity,
    MissingTuning,
    NonFinite,
    SingularGain,
)
from .linalg import require_psd, symmetrize
from .model import Network, NeighborLink, NodeModel, PlantModel, build_network

GRID_TOL = 1e-9


# ---------------------------------------------------------------------------
# Disturbance specification and realization
# ---------------------------------------------------------------------------

@dataclass
class DisturbanceSpec:
    """One disturbance channel: kind in {zero, pulse, held_gaussian};
    target "w", or "v" with node, or "eps" with edge=(i, j).

    Pulse: amplitude (scalar broadcast or per-component vector) on
    [start, start + duration]. Held-gaussian: i.i.d. N(mean, std^2) values
    held constant over consecutive `hold`-second windows, truncated at the
    horizon so realizations stay square-integrable.
    """

    kind: str
    target: str
    node: int | None = None
    edge: tuple[int, int] | None = None
    amplitude: object = 1.0
    start: float = 0.0
    duration: float = 1.0
    mean: float = 0.0
    std: float = 1.0
    hold: float = 0.1
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("zero", "pulse", "held_gaussian"):
            raise DimensionMismatch(f"unknown disturbance kind {self.kind!r}")
        if self.target not in ("w", "v", "eps"):
            raise DimensionMismatch(f"unknown disturbance target {self.target!r}")
        if self.target == "v" and self.node is None:
            raise DimensionMismatch("target 'v' needs a node id")
        if self.target == "eps" and self.edge is None:
            raise DimensionMismatch("target 'eps' needs an edge (i, j)")
        if self.edge is not None:
            self.edge = (int(self.edge[0]), int(self.edge[1]))

    def channel_key(self) -> tuple:
        if self.target == "w":
            return ("w",)
        if self.target == "v":
            return ("v", self.node)
        return ("eps", self.edge[0], self.edge[1])


def _snap_to_grid(value: float, dt: float, what: str) -> float:
    k = round(value / dt)
    snapped = k * dt
    if abs(snapped - value) > GRID_TOL * max(1.0, abs(value)):
        warnings.warn(
            f"{what} {value} not aligned with dt={dt}; snapped to {snapped}",
            stacklevel=3,
        )
    return snapped


class _Signal:
    """Piecewise-constant-over-steps disturbance signal."""

    def value_in_step(self, mid: float) -> np.ndarray:
        raise NotImplementedError

    def sample_at(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def energy_on(self, T: float, dt: float) -> float:
        """Exact squared L2 norm on [0, T]: the signal is constant on every
        integration panel, so summing panel areas is the panel-refined
        trapezoid with no re-interpolation."""
        steps = int(round(T / dt))
        total = 0.0
        for k in range(steps):
            val = self.value_in_step((k + 0.5) * dt)
            total += float(val @ val)
        return total * dt


class _ZeroSignal(_Signal):
    def __init__(self, dim: int):
        self._zero = np.zeros(dim)

    def value_in_step(self, mid: float) -> np.ndarray:
        return self._zero

    def sample_at(self, t: float) -> np.ndarray:
        return self._zero

    def energy_on(self, T: float, dt: float) -> float:
        return 0.0


class _PulseSignal(_Signal):
    def __init__(self, amplitude: np.ndarray, t0: float, t1: float, dt: float):
        self.amplitude = amplitude
        self.t0 = t0
        self.t1 = t1
        self._zero = np.zeros_like(amplitude)
        self._tol = 0.25 * dt

    def value_in_step(self, mid: float) -> np.ndarray:
        return self.amplitude if self.t0 < mid < self.t1 else self._zero

    def sample_at(self, t: float) -> np.ndarray:
        # closed edges: grid samples at both ends carry the amplitude
        return (
            self.amplitude
            if (self.t0 - self._tol) <= t <= (self.t1 + self._tol)
            else self._zero
        )

    def energy_on(self, T: float, dt: float) -> float:
        span = max(0.0, min(self.t1, T) - max(self.t0, 0.0))
        return float(self.amplitude @ self.amplitude) * span


class _HeldSignal(_Signal):
    def __init__(self, values: np.ndarray, hold: float):
        self.values = values  # (frames, dim)
        self.hold = hold

    def _frame(self, t: float) -> np.ndarray:
        idx = int(np.floor(t / self.hold + 1e-12))
        return self.values[min(max(idx, 0), len(self.values) - 1)]

    def value_in_step(self, mid: float) -> np.ndarray:
        return self._frame(mid)

    def sample_at(self, t: float) -> np.ndarray:
        return self._frame(t)

    def energy_on(self, T: float, dt: float) -> float:
        sq = np.einsum("fi,fi->f", self.values, self.values)
        total = 0.0
        for f, energy in enumerate(sq):
            span = max(0.0, min((f + 1) * self.hold, T) - f * self.hold)
            if span <= 0.0:
                break
            total += float(energy) * span
        return total


class _SumSignal(_Signal):
    def __init__(self, parts: list[_Signal], dim: int):
        self.parts = parts
        self._zero = np.zeros(dim)

    def value_in_step(self, mid: float) -> np.ndarray:
        out = self._zero
        for p in self.parts:
            out = out + p.value_in_step(mid)
        return out

    def sample_at(self, t: float) -> np.ndarray:
        out = self._zero
        for p in self.parts:
            out = out + p.sample_at(t)
        return out


@dataclass
class X0Law:
    """Initial-state law: fixed vector, or i.i.d. gaussian per coordinate."""

    kind: str
    value: np.ndarray | None = None
    mean: float = 0.0
    std: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in ("fixed", "gaussian"):
            raise DimensionMismatch(f"unknown x0 law {self.kind!r}")
        if self.kind == "fixed":
            if self.value is None:
                raise DimensionMismatch("fixed x0 law needs a value")
            self.value = np.asarray(self.value, dtype=float)

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "fixed":
            if self.value.shape != (n,):
                raise DimensionMismatch(
                    f"fixed x0 must have dimension {n}, got {self.value.shape}"
                )
            return self.value.copy()
        return self.mean + self.std * rng.standard_normal(n)


@dataclass
class Scenario:
    """Everything a run needs: network, grid, disturbances, priors, weights.

    m_inv_blocks are the per-node M_i^-1 matrices (PSD; zero allowed). They
    must be fixed before simulation -- the gain equations are
    data-independent and could equally be solved offline.
    """

    network: Network
    T: float
    dt: float
    seed: int
    x0_law: X0Law
    disturbances: tuple[DisturbanceSpec, ...] = ()
    m_inv_blocks: tuple[np.ndarray, ...] | None = None
    K0_blocks: tuple[np.ndarray, ...] | None = None
    minv_margin: float | None = None

    def __post_init__(self):
        if self.dt <= 0:
            raise DimensionMismatch("dt must be positive")
        steps = round(self.T / self.dt)
        if steps < 1 or abs(self.T - steps * self.dt) > GRID_TOL * max(1.0, self.T):
            raise DimensionMismatch("T must be an integral number of dt steps")
        self.disturbances = tuple(self.disturbances)

    @property
    def steps(self) -> int:
        return round(self.T / self.dt)

    def t_grid(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt

    def gain_initial_blocks(self) -> tuple[np.ndarray, ...]:
        if self.K0_blocks is not None:
            return tuple(np.asarray(b, dtype=float) for b in self.K0_blocks)
        return tuple(node.Xcal for node in self.network.nodes)

    def require_m_inv(self) -> tuple[np.ndarray, ...]:
        if self.m_inv_blocks is None:
            raise MissingTuning(
                "scenario has no M^-1 blocks; run the tuner or set them explicitly"
            )
        return tuple(
            require_psd(b, f"M_inv_{i}")
            for i, b in enumerate(self.m_inv_blocks, start=1)
        )


@dataclass
class RealizedDisturbances:
    """Concrete signals for one run: x0 plus one signal per channel."""

    x0: np.ndarray
    w: _Signal
    v: dict[int, _Signal]
    eps: dict[tuple[int, int], _Signal]

    def step_values(self, mid: float):
        w = self.w.value_in_step(mid)
        v = {i: sig.value_in_step(mid) for i, sig in self.v.items()}
        eps = {e: sig.value_in_step(mid) for e, sig in self.eps.items()}
        return w, v, eps


def _channel_dim(net: Network, spec: DisturbanceSpec) -> int:
    if spec.target == "w":
        return net.plant.q
    if spec.target == "v":
        if spec.node not in set(net.node_ids()):
            raise DimensionMismatch(f"disturbance targets unknown node {spec.node}")
        return net.node(spec.node).p
    if spec.edge not in set(net.edges):
        raise DimensionMismatch(f"disturbance targets unknown edge {spec.edge}")
    return net.link(*spec.edge).m


def _spec_rng(spec: DisturbanceSpec, scenario_seed: int, occurrence: int):
    if spec.seed is not None:
        return np.random.default_rng(spec.seed)
    tcode = {"w": 0, "v": 1, "eps": 2}[spec.target]
    a = spec.node or (spec.edge[0] if spec.edge else 0)
    b = spec.edge[1] if spec.edge else 0
    seq = np.random.SeedSequence(scenario_seed, spawn_key=(1, tcode, a, b, occurrence))
    return np.random.default_rng(seq)


def _build_signal(
    spec: DisturbanceSpec, dim: int, scenario: Scenario, occurrence: int
) -> _Signal:
    if spec.kind == "zero":
        return _ZeroSignal(dim)
    if spec.kind == "pulse":
        amp = np.asarray(spec.amplitude, dtype=float)
        if amp.ndim == 0:
            amp = np.full(dim, float(amp))
        if amp.shape != (dim,):
            raise DimensionMismatch(
                f"pulse amplitude must be scalar or length {dim}, got {amp.shape}"
            )
        t0 = _snap_to_grid(spec.start, scenario.dt, "pulse start")
        t1 = _snap_to_grid(spec.start + spec.duration, scenario.dt, "pulse end")
        return _PulseSignal(amp, t0, t1, scenario.dt)
    hold = _snap_to_grid(spec.hold, scenario.dt, "hold interval")
    if hold <= 0:
        raise DimensionMismatch("hold interval must be positive")
    frames = int(np.ceil(scenario.T / hold))
    rng = _spec_rng(spec, scenario.seed, occurrence)
    values = spec.mean + spec.std * rng.standard_normal((frames, dim))
    return _HeldSignal(values, hold)


def realize_disturbances(scenario: Scenario) -> RealizedDisturbances:
    """Draw x0 and compile every disturbance channel into a signal."""
    net = scenario.network
    rng_x0 = (
        np.random.default_rng(scenario.x0_law.seed)
        if scenario.x0_law.seed is not None
        else np.random.default_rng(np.random.SeedSequence(scenario.seed, spawn_key=(0,)))
    )
    x0 = scenario.x0_law.draw(net.n, rng_x0)

    per_channel: dict[tuple, list[_Signal]] = {}
    occurrences: dict[tuple, int] = {}
    for spec in scenario.disturbances:
        dim = _channel_dim(net, spec)
        key = spec.channel_key()
        occ = occurrences.get(key, 0)
        occurrences[key] = occ + 1
        per_channel.setdefault(key, []).append(
            _build_signal(spec, dim, scenario, occ)
        )

    def channel(key: tuple, dim: int) -> _Signal:
        parts = per_channel.get(key, [])
        if not parts:
            return _ZeroSignal(dim)
        if len(parts) == 1:
            return parts[0]
        return _SumSignal(parts, dim)

    w = channel(("w",), net.plant.q)
    v = {i: channel(("v", i), net.node(i).p) for i in net.node_ids()}
    eps = {
        (i, j): channel(("eps", i, j), net.link(i, j).m)
        for (i, j) in net.edges
    }
    return RealizedDisturbances(x0=x0, w=w, v=v, eps=eps)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

@dataclass
class Trajectories:
    """Grid-sampled output of one run. Errors are always recomputed from
    xhat - x, never stored."""

    t: np.ndarray                       # (steps+1,)
    x: np.ndarray                       # (steps+1, n)
    xhat: np.ndarray                    # (N, steps+1, n)
    K: np.ndarray                       # (N, steps+1, n, n)
    w_samples: np.ndarray               # (steps+1, q)
    v_samples: dict[int, np.ndarray]
    eps_samples: dict[tuple[int, int], np.ndarray]
    realization: RealizedDisturbances
    network: Network
    hypotheses: dict = field(default_factory=dict)

    @property
    def e(self) -> np.ndarray:
        """(N, steps+1, n) estimation errors xhat_i - x."""
        return self.xhat - self.x[None, :, :]

    def e_stacked(self) -> np.ndarray:
        """(steps+1, N*n) errors stacked node-major per time point."""
        N, T1, n = self.xhat.shape
        return np.transpose(self.e, (1, 0, 2)).reshape(T1, N * n)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


@dataclass
class ErrorTrajectories:
    """Output of the direct error-dynamics integration (cross-check oracle)."""

    t: np.ndarray
    e: np.ndarray  # (N, steps+1, n)


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

class _EngineData:
    """Per-run constant data laid out for the batched stage evaluations."""

    def __init__(self, net: Network, m_inv_blocks):
        self.net = net
        self.A = net.plant.A
        self.B = net.plant.B
        self.Q = net.plant.Q
        n, N = net.n, net.N
        self.S_const = np.empty((N, n, n))
        for i in net.node_ids():
            node = net.node(i)
            self.S_const[i - 1] = symmetrize(
                node.CtRinvC + net.delta_block(i) - np.asarray(m_inv_blocks[i - 1])
            )
        self.nodes: list[NodeModel] = list(net.nodes)
        self.neighbors = [net.neighbors[i] for i in net.node_ids()]

    def gain_rhs(self, K: np.ndarray) -> np.ndarray:
        KQ = K @ self.Q
        return -KQ @ K + self.S_const - self.A.T @ K - K @ self.A

    def innovations(self, x, xhat, v, eps) -> np.ndarray:
        """(N, n) information-weighted innovations at one stage."""
        out = np.empty_like(xhat)
        for idx, node in enumerate(self.nodes):
            y = node.C @ x + node.D @ v[idx + 1]
            innov = node.CtRinv @ (y - node.C @ xhat[idx])
            for j in self.neighbors[idx]:
                link = node.links[j]
                c = link.W @ xhat[j - 1] + link.F @ eps[(idx + 1, j)]
                innov = innov + link.WtUinv @ (c - link.W @ xhat[idx])
            out[idx] = innov
        return out

    def error_inner(self, e, v, eps) -> np.ndarray:
        """(N, n) bracketed term of the error dynamics at one stage."""
        out = np.empty_like(e)
        for idx, node in enumerate(self.nodes):
            inner = node.CtRinvC @ e[idx] - node.CtRinv @ (node.D @ v[idx + 1])
            for j in self.neighbors[idx]:
                link = node.links[j]
                inner = inner + link.WtUinvW @ e[idx]
                inner = inner - link.WtUinv @ (
                    link.W @ e[j - 1] + link.F @ eps[(idx + 1, j)]
                )
            out[idx] = inner
        return out


def _spd_solve_batched(K: np.ndarray, rhs: np.ndarray, t: float) -> np.ndarray:
    """Solve K_i z_i = rhs_i for all nodes via batched Cholesky."""
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise SingularGain(f"at t={t:.6g}: {exc}") from exc
    y = np.linalg.solve(L, rhs[:, :, None])
    return np.linalg.solve(np.transpose(L, (0, 2, 1)), y)[:, :, 0]


def _check_gains(K: np.ndarray, t: float) -> float:
    """Positive-definiteness guard at an accepted grid point; returns min eig."""
    eigs = np.linalg.eigvalsh(K)
    min_eig = float(eigs[:, 0].min())
    norms = np.linalg.norm(K, axis=(1, 2))
    thresholds = 1e-12 * (1.0 + norms)
    if np.any(eigs[:, 0] <= thresholds):
        raise LostPositivity(t, min_eig)
    return min_eig


def simulate(scenario: Scenario) -> Trajectories:
    """Run the coupled plant / filter / gain integration.

    Deterministic given the scenario seed. Raises MissingTuning when no
    M^-1 blocks are fixed, and propagates LostPositivity / SingularGain /
    NonFinite with the failing timestamp.
    """
    net = scenario.network
    m_inv = scenario.require_m_inv()
    data = _EngineData(net, m_inv)
    real = realize_disturbances(scenario)
    n, N = net.n, net.N
    dt = scenario.dt
    steps = scenario.steps
    t_grid = scenario.t_grid()

    x = real.x0.copy()
    xhat = np.stack([node.xi for node in net.nodes]).astype(float)
    K = np.stack([np.asarray(b, dtype=float) for b in scenario.gain_initial_blocks()])
    for i, K0 in enumerate(K, start=1):
        require_psd(K0, f"K0_{i}")

    xs = np.empty((steps + 1, n))
    xhs = np.empty((N, steps + 1, n))
    Ks = np.empty((N, steps + 1, n, n))
    xs[0] = x
    xhs[:, 0] = xhat
    Ks[:, 0] = K
    min_gain_eig = _check_gains(K, 0.0)

    A, B = data.A, data.B

    for k in range(steps):
        t = k * dt
        w, v, eps = real.step_values(t + 0.5 * dt)
        Bw = B @ w

        def rhs(xc, xhc, Kc, stage_t):
            dx = A @ xc + Bw
            innov = data.innovations(xc, xhc, v, eps)
            corr = _spd_solve_batched(Kc, innov, stage_t)
            dxh = xhc @ A.T + corr
            dK = data.gain_rhs(Kc)
            return dx, dxh, dK

        dx1, dxh1, dK1 = rhs(x, xhat, K, t)
        dx2, dxh2, dK2 = rhs(
            x + 0.5 * dt * dx1, xhat + 0.5 * dt * dxh1, K + 0.5 * dt * dK1, t + 0.5 * dt
        )
        dx3, dxh3, dK3 = rhs(
            x + 0.5 * dt * dx2, xhat + 0.5 * dt * dxh2, K + 0.5 * dt * dK2, t + 0.5 * dt
        )
        dx4, dxh4, dK4 = rhs(x + dt * dx3, xhat + dt * dxh3, K + dt * dK3, t + dt)

        x = x + (dt / 6.0) * (dx1 + 2.0 * dx2 + 2.0 * dx3 + dx4)
        xhat = xhat + (dt / 6.0) * (dxh1 + 2.0 * dxh2 + 2.0 * dxh3 + dxh4)
        K = K + (dt / 6.0) * (dK1 + 2.0 * dK2 + 2.0 * dK3 + dK4)
        K = 0.5 * (K + np.transpose(K, (0, 2, 1)))

        t_next = float(t_grid[k + 1])
        if not (
            np.all(np.isfinite(x)) and np.all(np.isfinite(xhat)) and np.all(np.isfinite(K))
        ):
            raise NonFinite(t_next)
        min_gain_eig = min(min_gain_eig, _check_gains(K, t_next))

        xs[k + 1] = x
        xhs[:, k + 1] = xhat
        Ks[:, k + 1] = K

    w_samples = np.stack([real.w.sample_at(tk) for tk in t_grid])
    v_samples = {
        i: np.stack([real.v[i].sample_at(tk) for tk in t_grid]) for i in net.node_ids()
    }
    eps_samples = {
        e: np.stack([real.eps[e].sample_at(tk) for tk in t_grid]) for e in net.edges
    }
    return Trajectories(
        t=t_grid,
        x=xs,
        xhat=xhs,
        K=Ks,
        w_samples=w_samples,
        v_samples=v_samples,
        eps_samples=eps_samples,
        realization=real,
        network=net,
        hypotheses={
            "minv_margin": scenario.minv_margin,
            "gains_positive_definite": True,
            "min_gain_eigenvalue": min_gain_eig,
        },
    )


def simulate_error_oracle(
    scenario: Scenario,
    realization: RealizedDisturbances,
    e0: np.ndarray | None = None,
) -> ErrorTrajectories:
    """Integrate the stacked error dynamics directly, re-using the realized
    disturbances of a prior run. Cross-validation only: the result must match
    xhat - x from simulate() up to roundoff."""
    net = scenario.network
    data = _EngineData(net, scenario.require_m_inv())
    dt = scenario.dt
    steps = scenario.steps
    t_grid = scenario.t_grid()

    if e0 is None:
        e = np.stack([node.xi - realization.x0 for node in net.nodes])
    else:
        e = np.asarray(e0, dtype=float).copy()
        if e.shape != (net.N, net.n):
            raise DimensionMismatch(f"e0 must have shape {(net.N, net.n)}, got {e.shape}")
    K = np.stack([np.asarray(b, dtype=float) for b in scenario.gain_initial_blocks()])

    es = np.empty((net.N, steps + 1, net.n))
    es[:, 0] = e
    A, B = data.A, data.B

    for k in range(steps):
        t = k * dt
        w, v, eps = realization.step_values(t + 0.5 * dt)
        Bw = B @ w

        def rhs(ec, Kc, stage_t):
            inner = data.error_inner(ec, v, eps)
            corr = _spd_solve_batched(Kc, inner, stage_t)
            de = ec @ A.T - Bw[None, :] - corr
            dK = data.gain_rhs(Kc)
            return de, dK

        de1, dK1 = rhs(e, K, t)
        de2, dK2 = rhs(e + 0.5 * dt * de1, K + 0.5 * dt * dK1, t + 0.5 * dt)
        de3, dK3 = rhs(e + 0.5 * dt * de2, K + 0.5 * dt * dK2, t + 0.5 * dt)
        de4, dK4 = rhs(e + dt * de3, K + dt * dK3, t + dt)

        e = e + (dt / 6.0) * (de1 + 2.0 * de2 + 2.0 * de3 + de4)
        K = K + (dt / 6.0) * (dK1 + 2.0 * dK2 + 2.0 * dK3 + dK4)
        K = 0.5 * (K + np.transpose(K, (0, 2, 1)))

        t_next = float(t_grid[k + 1])
        if not (np.all(np.isfinite(e)) and np.all(np.isfinite(K))):
            raise NonFinite(t_next)
        _check_gains(K, t_next)
        es[:, k + 1] = e

    return ErrorTrajectories(t=t_grid, e=es)


# ---------------------------------------------------------------------------
# Built-in Chua scenario
# ---------------------------------------------------------------------------

CHUA_A = np.array([[-3.2, 10.0, 0.0], [1.0, -1.0, 1.0], [0.0, -14.87, 0.0]])
CHUA_C_WEAK = 0.001 * np.array([[3.1923, -4.6597, 1.0]])
CHUA_C_STRONG = np.array([[-0.8986, 0.1312, -1.9703]])
CHUA_EDGES = ((1, 3), (2, 3), (3, 1), (3, 2), (3, 4), (4, 3), (4, 5), (5, 4))


def chua_network() -> Network:
    """Five-node network observing the chaotic Chua-circuit regime.

    Nodes 1 and 4 carry the nearly uninformative sensor (C scaled by 0.001);
    every link uses W = I, F = 0.5 I, Z = 0.1 I, so U = 0.35 I.
    """
    plant = PlantModel(A=CHUA_A, B=0.4 * np.eye(3))
    Cs = {
        1: CHUA_C_WEAK,
        2: CHUA_C_STRONG,
        3: CHUA_C_STRONG,
        4: CHUA_C_WEAK,
        5: CHUA_C_STRONG,
    }
    nodes = []
    for i in range(1, 6):
        links = {
            j: NeighborLink(W=np.eye(3), F=0.5 * np.eye(3), Z=0.1 * np.eye(3))
            for (a, j) in CHUA_EDGES
            if a == i
        }
        nodes.append(
            NodeModel(
                C=Cs[i],
                D=np.array([[0.025]]),
                xi=np.zeros(3),
                Xcal=10.0 * np.eye(3),
                links=links,
            )
        )
    return build_network(plant, nodes, CHUA_EDGES)


def chua_pulse_specs(net: Network, amplitude: float = 1.0) -> tuple[DisturbanceSpec, ...]:
    """One-second pulses on every disturbance channel (w, each v_i, each eps_ij)."""
    specs = [
        DisturbanceSpec(kind="pulse", target="w", amplitude=amplitude, start=0.0, duration=1.0)
    ]
    for i in net.node_ids():
        specs.append(
            DisturbanceSpec(
                kind="pulse", target="v", node=i, amplitude=amplitude, start=0.0, duration=1.0
            )
        )
    for e in net.edges:
        specs.append(
            DisturbanceSpec(
                kind="pulse", target="eps", edge=e, amplitude=amplitude, start=0.0, duration=1.0
            )
        )
    return tuple(specs)


def chua_held_gaussian_specs(
    net: Network, std: float = 1.0, hold: float = 0.1
) -> tuple[DisturbanceSpec, ...]:
    """Held-gaussian noise on every disturbance channel."""
    specs = [DisturbanceSpec(kind="held_gaussian", target="w", mean=0.0, std=std, hold=hold)]
    for i in net.node_ids():
        specs.append(
            DisturbanceSpec(kind="held_gaussian", target="v", node=i, mean=0.0, std=std, hold=hold)
        )
    for e in net.edges:
        specs.append(
            DisturbanceSpec(kind="held_gaussian", target="eps", edge=e, mean=0.0, std=std, hold=hold)
        )
    return tuple(specs)


def make_chua_scenario(
    seed: int,
    *,
    disturbance_kind: str = "pulse",
    pulse_amplitude: float = 1.0,
    gaussian_std: float = 1.0,
    tuning=None,
) -> Scenario:
    """The built-in desk-scale reproduction scenario.

    T = 10 s at dt = 1e-3, K_i(0) = 10 I, x0 ~ N(0.1, 0.2^2) per coordinate,
    one-second disturbance pulses on every channel (or held-gaussian noise),
    and M^-1 tuned against P = (1/2)(L + L_rev) (x) I + 0.01 I. Pass a
    TuningResult to skip the tuning solve.
    """
    from .tuning import laplacian_P, tune_scalar

    net = chua_network()
    if tuning is None:
        P = laplacian_P(net, np.eye(3), ridge=0.01)
        tuning = tune_scalar(net, P)
    if disturbance_kind == "pulse":
        specs = chua_pulse_specs(net, pulse_amplitude)
    elif disturbance_kind == "held_gaussian":
        specs = chua_held_gaussian_specs(net, std=gaussian_std)
    elif disturbance_kind == "zero":
        specs = ()
    else:
        raise DimensionMismatch(f"unknown disturbance kind {disturbance_kind!r}")
    return Scenario(
        network=net,
        T=10.0,
        dt=1e-3,
        seed=seed,
        x0_law=X0Law(kind="gaussian", mean=0.1, std=0.2),
        disturbances=specs,
        m_inv_blocks=tuning.m_inv_blocks,
        K0_blocks=tuple(10.0 * np.eye(3) for _ in range(net.N)),
        minv_margin=tuning.minv_margin,
    )


def make_isolated_variant(scenario: Scenario, node_id: int) -> Scenario:
    """Cut every incoming link of one node and drop its attenuation penalty.

    The isolated node runs the plain minimum-energy filter (M^-1 = 0, no
    neighbor terms); outgoing edges are kept, so the rest of the network
    still receives its estimate. Disturbance channels on removed edges are
    dropped; the stable per-channel seeding keeps all other realizations
    identical to the networked run.
    """
    net = scenario.network
    kept_edges = tuple(e for e in net.edges if e[0] != node_id)
    nodes = []
    for i in net.node_ids():
        node = net.node(i)
        links = {} if i == node_id else dict(node.links)
        nodes.append(
            NodeModel(C=node.C, D=node.D, xi=node.xi, Xcal=node.Xcal, links=links)
        )
    new_net = build_network(scenario.network.plant, nodes, kept_edges)
    m_inv = list(scenario.require_m_inv())
    m_inv[node_id - 1] = np.zeros((net.n, net.n))
    specs = tuple(
        s
        for s in scenario.disturbances
        if not (s.target == "eps" and s.edge is not None and s.edge[0] == node_id)
    )
    return replace(
        scenario,
        network=new_net,
        disturbances=specs,
        m_inv_blocks=tuple(m_inv),
        minv_margin=None,
    )
