"""Quantum-jump unraveling of the open atom-cavity dynamics.

Between jumps the state evolves under the non-Hermitian no-click generator;
the squared norm is the no-jump survival probability.  Jump times invert the
survival against a uniform draw, channels are selected from the instantaneous
weights, and every trajectory owns a counter-based RNG stream derived from
the master seed so ensembles merge identically for any worker count.
"""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from macrojumps.model import CHANNEL_LABELS, JumpChannel, Model, Operator

__all__ = [
    "Propagator",
    "JumpEvent",
    "TrajectoryRecord",
    "NoJumpPossibleError",
    "build_propagator",
    "propagate_nojump",
    "sample_jump_time",
    "select_channel",
    "run_trajectory",
    "run_ensemble",
    "trajectory_seed",
    "write_events_csv",
]

log = logging.getLogger(__name__)

# Squared-norm floor below which the working state is rescaled mid-flight.
NORM_FLOOR = 1e-12


class NoJumpPossibleError(RuntimeError):
    """Every channel weight vanishes for the supplied state."""


@dataclass(eq=False)
class Propagator:
    """Precomputed action of exp(-i H t) for the no-click generator.

    Spectral form V exp(-i lambda t) V^{-1} when the eigenbasis is well
    conditioned and reconstructs H; otherwise demoted to dense matrix
    exponentials per call.  Eigenvalue imaginary parts are clamped to be
    nonpositive: the anti-Hermitian part of H is negative semidefinite, so
    positive parts are rounding noise that would otherwise let the survival
    grow over long horizons.
    """

    h: np.ndarray
    spectral: bool
    eigvals: np.ndarray | None = None
    v: np.ndarray | None = None
    v_inv: np.ndarray | None = None
    cond: float = math.inf

    def propagate(self, psi: np.ndarray, dt: float) -> np.ndarray:
        if self.spectral:
            return self.v @ (np.exp(-1j * self.eigvals * dt) * (self.v_inv @ psi))
        return scipy.linalg.expm(-1j * self.h * dt) @ psi

    def survival_fn(self, psi: np.ndarray):
        """Callable t -> squared norm of the no-click evolved state."""
        if self.spectral:
            m = self.v * (self.v_inv @ psi)[np.newaxis, :]
            lam = self.eigvals

            def surv(t: float) -> float:
                amp = m @ np.exp(-1j * lam * t)
                return float(amp.real @ amp.real + amp.imag @ amp.imag)

        else:

            def surv(t: float) -> float:
                amp = scipy.linalg.expm(-1j * self.h * t) @ psi
                return float(np.real(np.vdot(amp, amp)))

        return surv


def build_propagator(
    h: Operator | np.ndarray,
    *,
    cond_limit: float = 1e8,
    recon_tol: float = 1e-9,
) -> Propagator:
    hm = h.matrix if isinstance(h, Operator) else np.asarray(h, dtype=complex)
    try:
        eigvals, v = np.linalg.eig(hm)
        v_inv = np.linalg.inv(v)
    except np.linalg.LinAlgError:
        log.warning("eigendecomposition failed; demoting to stepped matrix exponentials")
        return Propagator(h=hm, spectral=False)
    cond = float(np.linalg.cond(v))
    scale = max(float(np.max(np.abs(hm))), 1e-300)
    recon = float(np.max(np.abs((v * eigvals) @ v_inv - hm)))
    if cond > cond_limit or recon > recon_tol * scale:
        log.warning(
            "propagator demoted: cond(V)=%.3e recon=%.3e (limits %.1e, %.1e * scale)",
            cond, recon, cond_limit, recon_tol,
        )
        return Propagator(h=hm, spectral=False, cond=cond)
    eigvals = np.where(eigvals.imag > 0, eigvals.real, eigvals)
    return Propagator(h=hm, spectral=True, eigvals=eigvals, v=v, v_inv=v_inv, cond=cond)


def propagate_nojump(state: np.ndarray, prop: Propagator, dt: float) -> np.ndarray:
    """Unnormalized no-click evolution over dt >= 0."""
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    if dt == 0:
        return state.copy()
    return prop.propagate(state, dt)


def total_weight(state: np.ndarray, channels: tuple[JumpChannel, ...]) -> float:
    return sum(c.weight(state) for c in channels)


def sample_jump_time(
    state: np.ndarray,
    prop: Propagator,
    channels: tuple[JumpChannel, ...],
    r: float,
    t_max: float,
    *,
    rel_tol: float = 1e-9,
) -> float | None:
    """Earliest t with survival(t) = r, or None when survival(t_max) > r.

    The survival is monotone nonincreasing, so the root is bracketed by
    stride doubling from the instantaneous decay time 1/weight and then
    bisected to relative time tolerance rel_tol.
    """
    if not 0.0 < r < 1.0:
        raise ValueError(f"survival target r must lie in (0, 1), got {r}")
    if t_max <= 0:
        return None
    surv = prop.survival_fn(state)
    norm0 = float(np.real(np.vdot(state, state)))
    target = r * norm0

    w = total_weight(state, channels)
    stride = min(norm0 / w, t_max) if w > 0 else t_max
    lo, hi = 0.0, stride
    s_hi = surv(hi)
    while s_hi > target:
        if hi >= t_max:
            return None
        lo, hi = hi, min(2.0 * hi, t_max)
        s_hi = surv(hi)
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if surv(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def select_channel(state: np.ndarray, channels: tuple[JumpChannel, ...], u: float) -> int:
    """Channel index drawn from the normalized instantaneous weights."""
    if not 0.0 <= u < 1.0:
        raise ValueError(f"selector u must lie in [0, 1), got {u}")
    weights = np.array([c.weight(state) for c in channels])
    total = float(weights.sum())
    if total <= 0.0:
        raise NoJumpPossibleError("all channel weights vanish; no jump possible from this state")
    acc = 0.0
    for idx, w in enumerate(weights):
        acc += w / total
        if u < acc:
            return idx
    return len(channels) - 1  # u rounded against the accumulated sum


@dataclass(frozen=True)
class JumpEvent:
    time: float
    channel: int

    @property
    def channel_label(self) -> str:
        return CHANNEL_LABELS[self.channel]


@dataclass(eq=False)
class TrajectoryRecord:
    seed: object
    initial_label: str
    horizon: float
    times: np.ndarray
    channels: np.ndarray
    snapshots: tuple[tuple[float, np.ndarray], ...] = ()
    n_rescales: int = 0

    @property
    def events(self) -> tuple[JumpEvent, ...]:
        return tuple(JumpEvent(float(t), int(c)) for t, c in zip(self.times, self.channels))

    def __len__(self) -> int:
        return len(self.times)


def trajectory_seed(master_seed: int, index: int, stream: int = 0) -> np.random.SeedSequence:
    """Per-trajectory seed: master entropy with spawn key (index, stream).

    Stream 0 drives the physics (jump times and channels); nonzero streams
    are reserved for independent post-processing such as detector thinning.
    """
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(index, stream))


def _rng_from_seed(seed: int | np.random.SeedSequence) -> np.random.Generator:
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(entropy=int(seed))
    return np.random.Generator(np.random.Philox(seed))


def _survival_draw(rng: np.random.Generator) -> float:
    # rng.random() is uniform on [0, 1); map to (0, 1) for the survival target.
    return min(1.0 - rng.random(), 1.0 - 1e-16)


def run_trajectory(
    model: Model,
    seed: int | np.random.SeedSequence,
    t_max: float,
    snapshot_times: tuple[float, ...] = (),
    *,
    initial_state: np.ndarray | None = None,
    initial_label: str = "|00,0>",
    propagator: Propagator | None = None,
) -> TrajectoryRecord:
    """Single trajectory from |00, 0> (or initial_state) up to the horizon.

    Exactly one uniform draw per jump-time sampling and one per channel
    selection, in that order, so records are reproducible bit for bit from
    the seed alone.  Snapshots are normalized pre-jump states.
    """
    prop = propagator or build_propagator(model.h_cond)
    channels = model.channels
    if initial_state is None:
        state = model.basis.ket(0, 0, 0)
    else:
        state = np.asarray(initial_state, dtype=complex).copy()
        state /= math.sqrt(float(np.real(np.vdot(state, state))))
    rng = _rng_from_seed(seed)

    snaps_pending = sorted(float(t) for t in snapshot_times)
    if any(t < 0 or t > t_max for t in snaps_pending):
        raise ValueError("snapshot times must lie in [0, t_max]")
    snapshots: list[tuple[float, np.ndarray]] = []
    times: list[float] = []
    chans: list[int] = []
    t = 0.0
    n_rescales = 0

    def emit_snapshots(up_to: float) -> None:
        while snaps_pending and snaps_pending[0] <= up_to:
            s = snaps_pending.pop(0)
            vec = propagate_nojump(state, prop, s - t)
            vec /= math.sqrt(float(np.real(np.vdot(vec, vec))))
            snapshots.append((s, vec))

    while True:
        r = _survival_draw(rng)
        dt = sample_jump_time(state, prop, channels, r, t_max - t)
        if dt is None:
            emit_snapshots(t_max)
            break
        emit_snapshots(t + dt)
        state = propagate_nojump(state, prop, dt)
        norm2 = float(np.real(np.vdot(state, state)))
        if norm2 < NORM_FLOOR:
            state = state / math.sqrt(norm2)
            n_rescales += 1
        u = rng.random()
        try:
            idx = select_channel(state, channels, u)
        except NoJumpPossibleError:
            # Sampled instant carries no decaying component (measure-zero
            # numerical corner); renormalize and keep evolving.
            state = state / math.sqrt(float(np.real(np.vdot(state, state))))
            t += dt
            continue
        state = channels[idx].apply(state)
        state /= math.sqrt(float(np.real(np.vdot(state, state))))
        t += dt
        times.append(t)
        chans.append(idx)

    return TrajectoryRecord(
        seed=seed if isinstance(seed, int) else (seed.entropy, tuple(seed.spawn_key)),
        initial_label=initial_label,
        horizon=t_max,
        times=np.asarray(times, dtype=float),
        channels=np.asarray(chans, dtype=np.int8),
        snapshots=tuple(snapshots),
        n_rescales=n_rescales,
    )


def _ensemble_chunk(args) -> list[TrajectoryRecord]:
    model, indices, master_seed, t_max, snapshot_times = args
    prop = build_propagator(model.h_cond)
    return [
        run_trajectory(model, trajectory_seed(master_seed, i), t_max, snapshot_times, propagator=prop)
        for i in indices
    ]


def run_ensemble(
    model: Model,
    n_traj: int,
    master_seed: int,
    t_max: float,
    snapshot_times: tuple[float, ...] = (),
    *,
    workers: int = 1,
) -> list[TrajectoryRecord]:
    """Seeded ensemble; the merged result is independent of worker count."""
    if n_traj < 1:
        raise ValueError("n_traj must be positive")
    indices = list(range(n_traj))
    if workers <= 1:
        return _ensemble_chunk((model, indices, master_seed, t_max, snapshot_times))
    chunks = [indices[k::workers] for k in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(
            _ensemble_chunk,
            [(model, chunk, master_seed, t_max, snapshot_times) for chunk in chunks if chunk],
        ))
    merged: list[TrajectoryRecord | None] = [None] * n_traj
    for chunk, records in zip([c for c in chunks if c], parts):
        for i, rec in zip(chunk, records):
            merged[i] = rec
    return merged  # type: ignore[return-value]


def write_events_csv(records: list[TrajectoryRecord], path) -> None:
    """Event log, one row per jump: trajectory_id, time, channel label.

    Times are written with repr so they round-trip exactly (well beyond the
    12 significant digits the format guarantees).
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trajectory_id", "time", "channel"])
        for tid, rec in enumerate(records):
            for t, c in zip(rec.times, rec.channels):
                writer.writerow([tid, repr(float(t)), CHANNEL_LABELS[int(c)]])
