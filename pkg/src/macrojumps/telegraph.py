"""Detection records, telegraph-period statistics, and the heralding protocol.

A detector with efficiency eta sees a Bernoulli thinning of the cavity
emissions.  Long click-free gaps are dark periods; their appearance heralds
the antisymmetric entangled state, and waiting out a click-free window of
length t_wait prepares it with a fidelity estimated here by replaying the
true conditional state.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from macrojumps.effective import timescales
from macrojumps.model import CAVITY_CHANNEL, Model
from macrojumps.trajectory import (
    Propagator,
    TrajectoryRecord,
    build_propagator,
    propagate_nojump,
    sample_jump_time,
    select_channel,
    trajectory_seed,
    _rng_from_seed,
    _survival_draw,
)

__all__ = [
    "DetectionStream",
    "BinnedCounts",
    "Period",
    "PeriodSegmentation",
    "PeriodStats",
    "FidelityPoint",
    "InsufficientDataError",
    "HorizonTooShortError",
    "DEFAULT_CHANNEL_MASK",
    "thin_detections",
    "bin_counts",
    "segment_periods",
    "period_stats",
    "light_spacings",
    "default_gap_threshold",
    "fidelity_protocol",
    "write_counts_csv",
    "write_fidelity_csv",
]

# By default only cavity leakage reaches the detector; atomic spontaneous
# emission goes into free space and is never observed.
DEFAULT_CHANNEL_MASK = frozenset({CAVITY_CHANNEL})


class InsufficientDataError(RuntimeError):
    """No interior telegraph periods to aggregate."""


class HorizonTooShortError(RuntimeError):
    """More than half of the protocol samples exhausted the horizon."""


@dataclass(frozen=True, eq=False)
class DetectionStream:
    trajectory_id: int
    eta: float
    times: np.ndarray
    horizon: float
    channel_mask: frozenset[int]
    seed: object


def thin_detections(
    record: TrajectoryRecord,
    eta: float,
    seed: int | np.random.SeedSequence,
    channel_mask: frozenset[int] = DEFAULT_CHANNEL_MASK,
    trajectory_id: int = 0,
) -> DetectionStream:
    """Bernoulli thinning of the masked emission channels.

    One uniform draw per masked event in time order; unmasked events never
    reach the detector and consume no draw.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"detector efficiency eta must lie in [0, 1], got {eta}")
    rng = _rng_from_seed(seed)
    masked = np.isin(record.channels, list(channel_mask))
    candidate = record.times[masked]
    keep = rng.random(candidate.size) < eta
    return DetectionStream(
        trajectory_id=trajectory_id,
        eta=eta,
        times=candidate[keep],
        horizon=record.horizon,
        channel_mask=channel_mask,
        seed=seed if isinstance(seed, int) else (seed.entropy, tuple(seed.spawn_key)),
    )


@dataclass(frozen=True, eq=False)
class BinnedCounts:
    bin_width: float
    starts: np.ndarray
    counts: np.ndarray


def bin_counts(stream: DetectionStream, bin_width: float) -> BinnedCounts:
    """Click counts on [k w, (k+1) w) bins covering [0, horizon].

    The final bin is closed on the right so clicks at the horizon are kept.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    n_bins = max(int(math.ceil(stream.horizon / bin_width)), 1)
    idx = np.minimum((stream.times / bin_width).astype(int), n_bins - 1)
    counts = np.bincount(idx, minlength=n_bins)
    starts = bin_width * np.arange(n_bins)
    return BinnedCounts(bin_width=bin_width, starts=starts, counts=counts)


@dataclass(frozen=True)
class Period:
    kind: str  # "light" | "dark"
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True, eq=False)
class PeriodSegmentation:
    periods: tuple[Period, ...]
    gap_threshold: float
    horizon: float

    def count(self, kind: str) -> int:
        return sum(1 for p in self.periods if p.kind == kind)

    def interior(self) -> tuple[Period, ...]:
        """Periods with both endpoints observed (first and last are censored)."""
        return self.periods[1:-1]


def default_gap_threshold(model_params, eta: float) -> float:
    """10 light-period click spacings at efficiency eta."""
    return 10.0 * timescales(model_params).t_cav / eta


def segment_periods(stream: DetectionStream, gap_threshold: float) -> PeriodSegmentation:
    """Alternating light/dark tiling of [0, horizon].

    Every inter-click gap longer than gap_threshold (including the leading
    and trailing gaps) is a dark period; everything else is light.
    """
    if gap_threshold <= 0:
        raise ValueError("gap_threshold must be positive")
    edges = np.concatenate(([0.0], stream.times, [stream.horizon]))
    periods: list[Period] = []
    light_start = 0.0
    for left, right in zip(edges[:-1], edges[1:]):
        if right - left <= gap_threshold:
            continue
        if left > light_start:
            periods.append(Period("light", light_start, left))
        if periods and periods[-1].kind == "dark":
            periods[-1] = Period("dark", periods[-1].start, right)
        else:
            periods.append(Period("dark", left, right))
        light_start = right
    if stream.horizon > light_start or not periods:
        periods.append(Period("light", light_start, stream.horizon))
    return PeriodSegmentation(tuple(periods), gap_threshold, stream.horizon)


@dataclass(frozen=True)
class PeriodStats:
    dark_count: int
    dark_mean: float
    dark_var: float
    dark_stderr: float
    light_count: int
    light_mean: float
    light_var: float
    light_stderr: float
    n_segmentations: int


def _moments(values: list[float]) -> tuple[int, float, float, float]:
    n = len(values)
    if n == 0:
        return 0, math.nan, math.nan, math.nan
    arr = np.asarray(values)
    mean = float(arr.mean())
    var = float(arr.var(ddof=1)) if n > 1 else math.nan
    stderr = math.sqrt(var / n) if n > 1 else math.nan
    return n, mean, var, stderr


def period_stats(segmentations) -> PeriodStats:
    """Aggregate interior-period moments across segmentations.

    Dark durations are reported net of the gap threshold: a dark gap must
    exceed the threshold to be declared at all, and for the memoryless dark
    periods of this system the overshoot beyond the threshold is an unbiased
    sample of the true duration, while the raw gap overestimates it by the
    threshold itself.
    """
    darks: list[float] = []
    lights: list[float] = []
    n_seg = 0
    for seg in segmentations:
        n_seg += 1
        for p in seg.interior():
            if p.kind == "dark":
                darks.append(p.duration - seg.gap_threshold)
            else:
                lights.append(p.duration)
    if not darks and not lights:
        raise InsufficientDataError("insufficient data: no interior telegraph periods")
    dn, dm, dv, ds = _moments(darks)
    ln, lm, lv, ls = _moments(lights)
    return PeriodStats(dn, dm, dv, ds, ln, lm, lv, ls, n_seg)


def light_spacings(stream: DetectionStream, segmentation: PeriodSegmentation) -> np.ndarray:
    """Click-to-click spacings strictly inside interior light periods."""
    spacings: list[np.ndarray] = []
    for p in segmentation.interior():
        if p.kind != "light":
            continue
        clicks = stream.times[(stream.times >= p.start) & (stream.times <= p.end)]
        if clicks.size >= 2:
            spacings.append(np.diff(clicks))
    return np.concatenate(spacings) if spacings else np.array([])


@dataclass(frozen=True)
class FidelityPoint:
    eta: float
    t_wait: float          # units of 1/g
    t_over_tdark: float
    fidelity: float
    stderr: float
    n_samples: int
    n_dropped: int
    mean_prep_time: float  # units of 1/g


def _dark_overlap_indices(model: Model) -> tuple[np.ndarray, np.ndarray]:
    basis = model.basis
    ia = np.array([basis.index(0, 1, n) for n in range(basis.n_max + 1)])
    ib = np.array([basis.index(1, 0, n) for n in range(basis.n_max + 1)])
    return ia, ib


def _protocol_sample(
    model: Model,
    prop: Propagator,
    eta: float,
    t_wait: float,
    horizon: float,
    phys_seed: np.random.SeedSequence,
    det_seed: np.random.SeedSequence,
    channel_mask: frozenset[int],
    dark_idx: tuple[np.ndarray, np.ndarray],
) -> tuple[float, float] | None:
    """One protocol run: (fidelity, preparation time), or None when dropped.

    Runs the physical trajectory from |00, 0>, thinning masked emissions on
    an independent stream, until the detected record first shows a click-free
    window of length t_wait (the window may start at time zero).  The
    fidelity is the population of the antisymmetric ground doublet, traced
    over photon number, in the true conditional state at that instant.
    """
    channels = model.channels
    rng_phys = _rng_from_seed(phys_seed)
    rng_det = _rng_from_seed(det_seed)
    state = model.basis.ket(0, 0, 0)
    t = 0.0
    last_detected = 0.0
    ia, ib = dark_idx
    while True:
        deadline = last_detected + t_wait
        r = _survival_draw(rng_phys)
        dt = sample_jump_time(state, prop, channels, r, horizon - t)
        t_next = t + dt if dt is not None else horizon
        if deadline <= t_next:
            vec = propagate_nojump(state, prop, deadline - t)
            vec /= math.sqrt(float(np.real(np.vdot(vec, vec))))
            fid = 0.5 * float(np.sum(np.abs(vec[ia] - vec[ib]) ** 2))
            return fid, deadline
        if dt is None:
            return None
        state = propagate_nojump(state, prop, dt)
        u = rng_phys.random()
        idx = select_channel(state, channels, u)
        state = channels[idx].apply(state)
        state /= math.sqrt(float(np.real(np.vdot(state, state))))
        t = t_next
        if idx in channel_mask and rng_det.random() < eta:
            last_detected = t


def _protocol_chunk(args) -> list[tuple[int, tuple[float, float] | None]]:
    model, indices, eta, t_wait, horizon, master_seed, channel_mask = args
    prop = build_propagator(model.h_cond)
    dark_idx = _dark_overlap_indices(model)
    return [
        (
            i,
            _protocol_sample(
                model, prop, eta, t_wait, horizon,
                trajectory_seed(master_seed, i, 0), trajectory_seed(master_seed, i, 1),
                channel_mask, dark_idx,
            ),
        )
        for i in indices
    ]


def fidelity_protocol(
    model: Model,
    eta: float,
    t_wait: float,
    n_traj: int,
    master_seed: int,
    *,
    horizon: float | None = None,
    channel_mask: frozenset[int] = DEFAULT_CHANNEL_MASK,
    propagator: Propagator | None = None,
    workers: int = 1,
) -> FidelityPoint:
    """Heralded-preparation fidelity estimate over n_traj protocol runs.

    Each run i uses the physics stream trajectory_seed(master_seed, i) and
    the detection stream trajectory_seed(master_seed, i, 1), so the merged
    estimate is independent of the worker count.  Runs whose horizon
    (default 50 t_dark) expires before the window completes are dropped;
    more than 50% drops raises HorizonTooShortError.
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"detector efficiency eta must lie in (0, 1], got {eta}")
    if t_wait < 0:
        raise ValueError("t_wait must be nonnegative")
    if n_traj < 1:
        raise ValueError("n_traj must be positive")
    t_dark = timescales(model.params).t_dark
    if horizon is None:
        horizon = 50.0 * t_dark

    indices = list(range(n_traj))
    samples: list[tuple[float, float] | None]
    if workers <= 1:
        prop = propagator or build_propagator(model.h_cond)
        dark_idx = _dark_overlap_indices(model)
        samples = [
            _protocol_sample(
                model, prop, eta, t_wait, horizon,
                trajectory_seed(master_seed, i, 0), trajectory_seed(master_seed, i, 1),
                channel_mask, dark_idx,
            )
            for i in indices
        ]
    else:
        chunks = [indices[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                _protocol_chunk,
                [
                    (model, chunk, eta, t_wait, horizon, master_seed, channel_mask)
                    for chunk in chunks if chunk
                ],
            ))
        merged: list[tuple[float, float] | None] = [None] * n_traj
        for pairs in parts:
            for i, sample in pairs:
                merged[i] = sample
        samples = merged

    fids = [s[0] for s in samples if s is not None]
    prep = [s[1] for s in samples if s is not None]
    dropped = sum(1 for s in samples if s is None)
    if dropped * 2 > n_traj:
        raise HorizonTooShortError(
            f"horizon too short: {dropped}/{n_traj} runs never completed a {t_wait:g} window"
        )
    arr = np.asarray(fids)
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.nan
    return FidelityPoint(
        eta=eta,
        t_wait=t_wait,
        t_over_tdark=t_wait / t_dark,
        fidelity=float(arr.mean()),
        stderr=stderr,
        n_samples=int(arr.size),
        n_dropped=dropped,
        mean_prep_time=float(np.mean(prep)),
    )


def write_counts_csv(binned: BinnedCounts, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_start", "count"])
        for s, c in zip(binned.starts, binned.counts):
            writer.writerow([repr(float(s)), int(c)])


def write_fidelity_csv(points: list[FidelityPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eta", "t_over_Tdark", "F", "stderr", "n_samples", "mean_prep_time"])
        for p in points:
            writer.writerow([
                repr(p.eta), repr(p.t_over_tdark), repr(p.fidelity),
                repr(p.stderr), p.n_samples, repr(p.mean_prep_time),
            ])
