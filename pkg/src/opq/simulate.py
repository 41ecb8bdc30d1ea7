"""Monte-Carlo simulation of diffusive quantum trajectories.

Two mathematically equivalent formulations are provided:

* bayesian_stratonovich -- the readout-form update with r = q + sqrt(tau) dW/dt,
  stepped with Heun (predictor-corrector), which converges to the Stratonovich
  law the readout equations are written in.
* sme_ito -- Euler-Maruyama on the Ito SDEs derived from the stochastic
  master equation with L_i = sigma_i / 2 sqrt(tau_i).

Both share identical noise streams: counter-based Philox keyed by
(master seed, batch index) over a fixed batch partition, so ensembles are
bit-reproducible independent of execution layout or worker count.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import systems
from .errors import DomainError, EmptySelection, UnstableStep

FORMULATIONS = ("bayesian_stratonovich", "sme_ito")
DEFAULT_DT = 1e-3
DEFAULT_N_STORE = 101
DEFAULT_TOL_THETA = 0.05
# A chord step of length |dq| ~ dW/sqrt(tau) sits off the sphere by
# O(|dq|^2) ~ dt * chi^2, whose tail over millions of draws reaches ~1e-3 at
# dt = 1e-3; the guard must only catch genuine blowup, not that geometry.
PURITY_STEP_LIMIT = 5e-2
_BATCH = 16384           # fixed partition; part of the noise-stream contract
_CHUNK = 512             # pre-drawn noise steps per batch (memory bound)


def _channels(spec):
    return ("x", "z") if spec.kind == "two_observable" else ("z",)


def _taus(spec):
    if spec.kind == "two_observable":
        return {"x": spec.tau_x, "z": spec.tau_z}
    return {"z": spec.tau}


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to reproduce one ensemble bit-for-bit."""

    system: object
    theta_i: float
    t_final: float
    n_trajectories: int
    seed: int
    dt: float = DEFAULT_DT
    formulation: str = "bayesian_stratonovich"
    n_store: int = DEFAULT_N_STORE
    store_readouts: bool = False

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise DomainError(f"unknown formulation {self.formulation!r}")
        if self.n_trajectories < 1:
            raise DomainError("n_trajectories must be >= 1")
        if not self.t_final > 0:
            raise DomainError("t_final must be positive")
        min_tau = min(_taus(self.system).values())
        if self.dt > min_tau / 100.0:
            raise DomainError(f"dt = {self.dt:g} exceeds min(tau)/100 = "
                              f"{min_tau / 100.0:g} (stability guard)")
        if self.n_store < 2:
            raise DomainError("n_store must be >= 2")

    def to_json(self):
        return {"system": self.system.to_json(), "theta_i": self.theta_i,
                "t_final": self.t_final, "n_trajectories": self.n_trajectories,
                "seed": self.seed, "dt": self.dt,
                "formulation": self.formulation, "n_store": self.n_store,
                "store_readouts": self.store_readouts}


@dataclass(frozen=True)
class TrajectoryRecord:
    """One stochastic trajectory reconstructed from the ensemble arrays."""

    traj_id: int
    seed_stream: int
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    theta: np.ndarray               # unwrapped
    readouts: dict = None           # channel -> series, if stored


@dataclass(frozen=True)
class Ensemble:
    """Column-wise ensemble storage; rows are trajectories."""

    config: SimConfig
    t: np.ndarray                   # (n_store,)
    theta: np.ndarray               # (N, n_store), unwrapped
    final_bloch: np.ndarray         # (N, 3)
    traj_ids: np.ndarray            # (N,) into the original ensemble
    purity_max_dev: float
    readouts: np.ndarray = None     # (N, n_store, n_channels) or None
    selection_fraction: float = 1.0

    @property
    def n(self):
        return self.theta.shape[0]

    def record(self, i):
        """TrajectoryRecord for row i; Bloch series via the great-circle map."""
        x, y, z = systems.bloch_from_theta(self.config.system, self.theta[i])
        ro = None
        if self.readouts is not None:
            ro = dict(zip(_channels(self.config.system),
                          np.moveaxis(self.readouts[i], -1, 0)))
        tid = int(self.traj_ids[i])
        return TrajectoryRecord(traj_id=tid,
                                seed_stream=_stream_key(self.config.seed,
                                                        tid // _BATCH),
                                t=self.t, x=x, y=y, z=z, theta=self.theta[i],
                                readouts=ro)

    def subset(self, idx, selection_fraction):
        return replace(self, theta=self.theta[idx],
                       final_bloch=self.final_bloch[idx],
                       traj_ids=self.traj_ids[idx],
                       readouts=None if self.readouts is None else self.readouts[idx],
                       selection_fraction=selection_fraction)

    def theta_final_wrapped(self):
        return systems.wrap_angle(self.theta[:, -1])

    def to_csv(self, path, *, decimate=1):
        """Long-format CSV traj_id,t,theta (optionally decimated in time)."""
        ts = self.t[::decimate]
        th = self.theta[:, ::decimate]
        ids = np.repeat(self.traj_ids, ts.size)
        data = np.column_stack([ids, np.tile(ts, self.n), th.ravel()])
        np.savetxt(path, data, delimiter=",", header="traj_id,t,theta",
                   comments="", fmt=("%d", "%.17g", "%.17g"))


def _stream_key(seed, batch_index):
    """128-bit Philox key from (master seed, batch index)."""
    return (int(seed) << 64) | int(batch_index)


# ---------------------------------------------------------------------------
# specialized step kernels (hot loop; noise pre-scaled per chunk)
# ---------------------------------------------------------------------------

def _heun_drift_xz(x, y, z, u, v):
    """Readout-form drift with u = r_x/tau_x, v = r_z/tau_z."""
    xz = x * z
    dx = u - u * x * x - v * xz
    dy = -y * (v * z + u * x)
    dz = v - v * z * z - u * xz
    return dx, dy, dz


def _heun_drift_dz(x, y, z, delta, v):
    """Readout-form drift with v = r_z/tau."""
    dx = -x * z * v
    dy = delta * z - y * z * v
    dz = -delta * y + v - v * z * z
    return dx, dy, dz


def _step_heun(spec, x, y, z, dt, g):
    """One Heun step; g holds per-channel dW/(sqrt(tau) dt) slices."""
    if spec.kind == "two_observable":
        u = x / spec.tau_x + g[0]
        v = z / spec.tau_z + g[1]
        f1 = _heun_drift_xz(x, y, z, u, v)
        f2 = _heun_drift_xz(x + dt * f1[0], y + dt * f1[1], z + dt * f1[2],
                            u, v)
    else:
        v = z / spec.tau + g[0]
        f1 = _heun_drift_dz(x, y, z, spec.delta, v)
        f2 = _heun_drift_dz(x + dt * f1[0], y + dt * f1[1], z + dt * f1[2],
                            spec.delta, v)
    h = 0.5 * dt
    return (x + h * (f1[0] + f2[0]), y + h * (f1[1] + f2[1]),
            z + h * (f1[2] + f2[2]))


def _step_ito(spec, x, y, z, dt, g):
    """Euler-Maruyama on the SME-derived Ito SDEs; g = dW/sqrt(tau) slices."""
    if spec.kind == "two_observable":
        gx, gz = g
        xz = x * z
        xn = x + (-x / (2.0 * spec.tau_z) * dt
                  + (1.0 - x * x) * gx - xz * gz)
        yn = y + (-(0.5 / spec.tau_z + 0.5 / spec.tau_x) * y * dt
                  - x * y * gx - y * z * gz)
        zn = z + (-z / (2.0 * spec.tau_x) * dt
                  - xz * gx + (1.0 - z * z) * gz)
        return xn, yn, zn
    gz = g[0]
    xn = x + (-x / (2.0 * spec.tau) * dt - x * z * gz)
    yn = y + ((spec.delta * z - y / (2.0 * spec.tau)) * dt - y * z * gz)
    zn = z + (-spec.delta * y * dt + (1.0 - z * z) * gz)
    return xn, yn, zn


def _noise_scale(spec, formulation, dt):
    """Per-channel factor turning unit normals into the kernel's g slices."""
    taus = _taus(spec)
    if formulation == "sme_ito":
        # g = dW / sqrt(tau) with dW ~ N(0, dt)
        return [np.sqrt(dt / taus[c]) for c in _channels(spec)]
    # g = dW / (sqrt(tau) dt)
    return [1.0 / np.sqrt(taus[c] * dt) for c in _channels(spec)]


def simulate_ensemble(config):
    """Simulate the full ensemble; deterministic given (seed, config)."""
    spec = config.system
    chans = _channels(spec)
    nch = len(chans)
    n_steps = max(1, int(round(config.t_final / config.dt)))
    dt = config.t_final / n_steps
    store_steps = np.round(np.linspace(0, n_steps, config.n_store)).astype(int)
    t_store = store_steps * dt
    scale = _noise_scale(spec, config.formulation, dt)
    step = _step_ito if config.formulation == "sme_ito" else _step_heun
    taus = _taus(spec)

    N = config.n_trajectories
    theta_store = np.empty((N, config.n_store))
    final_bloch = np.empty((N, 3))
    ro_store = (np.empty((N, config.n_store, nch))
                if config.store_readouts else None)
    purity_max = 0.0

    for b_idx, lo in enumerate(range(0, N, _BATCH)):
        hi = min(lo + _BATCH, N)
        nb = hi - lo
        gen = np.random.Generator(
            np.random.Philox(key=_stream_key(config.seed, b_idx)))
        x0, y0, z0 = systems.bloch_from_theta(spec, config.theta_i)
        x = np.full(nb, float(x0))
        y = np.full(nb, float(y0))
        z = np.full(nb, float(z0))
        store_ptr = 0
        while store_steps[store_ptr] == 0:
            theta_store[lo:hi, store_ptr] = config.theta_i
            if ro_store is not None:
                ro_store[lo:hi, store_ptr] = np.nan
            store_ptr += 1

        noise = None
        for s in range(n_steps):
            k = s % _CHUNK
            if k == 0:
                m = min(_CHUNK, n_steps - s)
                noise = gen.standard_normal((m, nch, nb))
                for ci in range(nch):
                    noise[:, ci, :] *= scale[ci]
            g = noise[k]

            x, y, z = step(spec, x, y, z, dt, g)
            n2 = x * x + y * y + z * z
            dev = float(np.max(np.abs(n2 - 1.0)))
            if dev > PURITY_STEP_LIMIT:
                raise UnstableStep(f"purity drifted by {dev:.3g} in one step "
                                   f"(dt = {dt:g} too large)")
            purity_max = max(purity_max, dev)
            inv = 1.0 / np.sqrt(n2)
            x *= inv
            y *= inv
            z *= inv

            while (store_ptr < config.n_store
                   and store_steps[store_ptr] == s + 1):
                theta_store[lo:hi, store_ptr] = systems.theta_from_bloch(
                    spec, (x, y, z))
                if ro_store is not None:
                    q = {"x": x, "z": z}
                    for ci, c in enumerate(chans):
                        # recover r = q + sqrt(tau) dW/dt from the scaled slice
                        dW_over = g[ci] / scale[ci] * np.sqrt(dt) / dt
                        ro_store[lo:hi, store_ptr, ci] = (
                            q[c] + np.sqrt(taus[c]) * dW_over)
                store_ptr += 1

        final_bloch[lo:hi, 0] = x
        final_bloch[lo:hi, 1] = y
        final_bloch[lo:hi, 2] = z

    theta_store = np.unwrap(theta_store, axis=1)
    # anchor the unwrapped series at the true initial angle
    theta_store += config.theta_i - theta_store[:, :1]
    return Ensemble(config=config, t=t_store, theta=theta_store,
                    final_bloch=final_bloch, traj_ids=np.arange(N),
                    purity_max_dev=purity_max, readouts=ro_store)


def postselect(ensemble, theta_f, T, tol_theta=DEFAULT_TOL_THETA):
    """Sub-ensemble with wrapped theta(T) within tol_theta of theta_f."""
    if not tol_theta > 0:
        raise DomainError("tol_theta must be positive")
    i_t = int(np.argmin(np.abs(ensemble.t - T)))
    th = systems.wrap_angle(ensemble.theta[:, i_t])
    d = np.abs(th - systems.wrap_angle(theta_f))
    d = np.minimum(d, 2.0 * np.pi - d)
    idx = np.flatnonzero(d <= tol_theta)
    frac = idx.size / ensemble.n
    if idx.size == 0:
        raise EmptySelection(frac, f"no trajectory within {tol_theta:g} rad of "
                                   f"theta_f = {theta_f:.6g} at T = {T:.6g}")
    return ensemble.subset(idx, selection_fraction=frac)


@dataclass(frozen=True)
class DensityHistogram:
    """Max-normalized 2-D histogram of trajectory density over (t, theta)."""

    t_edges: np.ndarray
    theta_edges: np.ndarray
    density: np.ndarray             # (n_time_bins, n_theta_bins) in [0, 1]
    n_trajectories: int

    def to_csv(self, path):
        np.savetxt(path, self.density, delimiter=",", fmt="%.17g")

    def meta_json(self):
        return {"t_edges": self.t_edges.tolist(),
                "theta_edges": self.theta_edges.tolist(),
                "normalization": "max-bin",
                "n_trajectories": self.n_trajectories}


def density_histogram(sub_ensemble, n_time_bins=60, n_theta_bins=60):
    """Equal-area-bin histogram over all stored (t, theta) samples."""
    if sub_ensemble.n == 0:
        raise EmptySelection(0.0, "cannot histogram an empty ensemble")
    th = sub_ensemble.theta
    tt = np.broadcast_to(sub_ensemble.t, th.shape)
    counts, t_edges, th_edges = np.histogram2d(
        tt.ravel(), th.ravel(), bins=(n_time_bins, n_theta_bins),
        range=((0.0, sub_ensemble.t[-1]), (th.min(), th.max())))
    return DensityHistogram(t_edges=t_edges, theta_edges=th_edges,
                            density=counts / counts.max(),
                            n_trajectories=sub_ensemble.n)


def branch_count_check(sub_ensemble, solution, *, n_points=100):
    """Empirical fraction of trajectories nearest (L2 in theta) to each branch."""
    grid = np.linspace(0.0, solution.T, n_points)
    traj = np.empty((sub_ensemble.n, n_points))
    for j in range(sub_ensemble.n):
        traj[j] = np.interp(grid, sub_ensemble.t, sub_ensemble.theta[j])
    dist = np.empty((sub_ensemble.n, len(solution.branches)))
    for bi, b in enumerate(solution.branches):
        ref = np.interp(grid, b.path.t, b.path.theta)
        dist[:, bi] = np.sum((traj - ref) ** 2, axis=1)
    assign = np.argmin(dist, axis=1)
    return np.bincount(assign, minlength=len(solution.branches)) / sub_ensemble.n
