"""Adiabatically eliminated description of the driven atom-cavity system.

For omega_m < g, kappa, gamma, omega_l << |delta| the dynamics inside the
zero-photon ground manifold reduces to a three-state cascade
|00> <-> |s01> <-> |11> with an effective cavity-mediated decay rate, while
the antisymmetric state |a01> decouples entirely.  This module carries the
closed-form steady state, the telegraph timescales, and the quasi-steady
amplitude relations used to cross-check the full model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from macrojumps.model import BasisIndex, JumpChannel, ModelParams, Operator

__all__ = [
    "EffectiveParams",
    "SteadyPopulations",
    "TimescaleSummary",
    "QuasiSteadyAmplitudes",
    "EFFECTIVE_LABELS",
    "derived_params",
    "build_effective_model",
    "light_submodel",
    "steady_populations",
    "timescales",
    "extract_amplitudes",
    "quasisteady_residual",
    "analytic_summary",
]

# Effective basis ordering: the light cascade first, the decoupled dark state last.
EFFECTIVE_LABELS = ("00", "s01", "11", "a01")


@dataclass(frozen=True)
class EffectiveParams:
    """Second-order parameters of the eliminated model."""

    g_eff: float     # cavity-mediated coupling, -omega_l * g / (sqrt(2) delta)
    delta_l: float   # laser-induced level shift, -omega_l^2 / (4 delta)
    kappa_eff: float # effective photon emission rate, 4 g_eff^2 / kappa
    x: float         # dimensionless operating point, -omega_l^2 / (4 delta omega_m)
    cooperativity: float  # g^2 / (kappa gamma)


def derived_params(params: ModelParams) -> EffectiveParams:
    if params.delta == 0:
        raise ValueError("delta must be nonzero: g_eff, delta_l and x are undefined at delta = 0")
    if params.omega_m == 0:
        raise ValueError("omega_m must be nonzero: the operating point x is undefined at omega_m = 0")
    if params.kappa == 0:
        raise ValueError("kappa must be nonzero: kappa_eff and the cooperativity are undefined at kappa = 0")
    if params.gamma == 0:
        raise ValueError("gamma0 + gamma1 must be nonzero: the cooperativity is undefined at gamma = 0")
    g_eff = -params.omega_l * params.g / (math.sqrt(2.0) * params.delta)
    return EffectiveParams(
        g_eff=g_eff,
        delta_l=-params.omega_l**2 / (4.0 * params.delta),
        kappa_eff=4.0 * g_eff**2 / params.kappa,
        x=-params.omega_l**2 / (4.0 * params.delta * params.omega_m),
        cooperativity=params.g**2 / (params.kappa * params.gamma),
    )


def build_effective_model(params: ModelParams) -> tuple[Operator, tuple[JumpChannel, ...]]:
    """Four-state no-click generator on (|00>, |s01>, |11>, |a01>), photon vacuum.

    The single decay channel is the eliminated cavity mode: both one-photon
    admixtures leak through the same mirror, so a photon detection applies the
    coherent sum |00><s01| + |s01><11| at rate kappa_eff.  Splitting this into
    two independent channels would leave the no-click generator unchanged but
    alter the refill terms, shifting the stationary populations at order x^2.
    The dark state |a01> is annihilated exactly by both the Hamiltonian and
    the decay channel.
    """
    eff = derived_params(params)
    return _effective_model(params.omega_m, eff.delta_l, eff.kappa_eff)


def _effective_model(
    omega_m: float, delta_l: float, kappa_eff: float
) -> tuple[Operator, tuple[JumpChannel, ...]]:
    """Effective generator from the reduced parameters directly.

    Useful for probing limits (e.g. kappa_eff -> 0 at fixed x = delta_l/omega_m)
    that no single physical parameter set realises.
    """
    drive = omega_m / math.sqrt(2.0)
    h = np.zeros((4, 4), dtype=complex)
    h[0, 1] = h[1, 0] = drive
    h[1, 2] = h[2, 1] = drive
    h[0, 0] = -delta_l
    h[2, 2] = delta_l
    h[1, 1] += -0.5j * kappa_eff
    h[2, 2] += -0.5j * kappa_eff

    lower = np.zeros((4, 4))
    lower[0, 1] = 1.0  # |00><s01|
    lower[1, 2] = 1.0  # |s01><11|
    channels = (JumpChannel("cavity", kappa_eff, lower, basis="effective"),)
    return Operator(h, basis="effective", label="h_eff"), channels


def light_submodel(params: ModelParams) -> tuple[Operator, tuple[JumpChannel, ...]]:
    """Restriction of the effective model to the light cascade (dark state removed).

    The full four-state generator has a two-dimensional stationary manifold
    (the cascade steady state and the decoupled dark state); the restriction
    has the unique steady state of the emitting dynamics.
    """
    return _restrict_light(*build_effective_model(params))


def _restrict_light(
    h: Operator, channels: tuple[JumpChannel, ...]
) -> tuple[Operator, tuple[JumpChannel, ...]]:
    h3 = Operator(h.matrix[:3, :3], basis="effective", label="h_eff_light")
    ch3 = tuple(
        JumpChannel(c.label, c.rate, c.op[:3, :3], basis="effective") for c in channels
    )
    return h3, ch3


@dataclass(frozen=True)
class SteadyPopulations:
    """Stationary occupations of the emitting cascade."""

    p00: float
    ps01: float
    p11: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p00, self.ps01, self.p11)


def steady_populations(x: float) -> SteadyPopulations:
    """Closed-form steady state of the cascade at operating point x."""
    d = 3.0 + 16.0 * x**2 + 16.0 * x**4
    ps01 = (1.0 + 8.0 * x**2) / d
    p11 = 1.0 / d
    return SteadyPopulations(p00=1.0 - ps01 - p11, ps01=ps01, p11=p11)


@dataclass(frozen=True)
class TimescaleSummary:
    """Closed-form telegraph timescales (units of 1/g) and their ratios."""

    t_cav: float          # mean spacing of cavity emissions inside a light period
    t_dark: float         # mean dark-period duration
    t_light: float        # mean light-period duration
    ratio_dark_cav: float
    ratio_light_dark: float
    ratio_max: float      # supremum of t_dark / t_cav over x, 32 g^2 / (3 kappa (2 gamma0 + gamma1))


def timescales(params: ModelParams) -> TimescaleSummary:
    eff = derived_params(params)
    if params.omega_l == 0:
        raise ValueError("omega_l must be nonzero: every telegraph timescale diverges at omega_l = 0")
    ending = 2.0 * params.gamma0 + params.gamma1
    if ending == 0:
        raise ValueError("2 gamma0 + gamma1 must be nonzero: the dark period never ends without spontaneous decay")
    x = eff.x
    base = 8.0 * params.delta**2 / params.omega_l**2
    t_cav = (3.0 + 4.0 * x**2) * params.kappa * params.delta**2 / (4.0 * params.g**2 * params.omega_l**2)
    t_dark = base / ending
    light_ending = 2.0 * params.gamma0 + (1.0 + 8.0 * x**2) * params.gamma1
    t_light = (3.0 + 16.0 * x**2 + 16.0 * x**4) / light_ending * base
    return TimescaleSummary(
        t_cav=t_cav,
        t_dark=t_dark,
        t_light=t_light,
        ratio_dark_cav=t_dark / t_cav,
        ratio_light_dark=t_light / t_dark,
        ratio_max=32.0 * params.g**2 / (3.0 * params.kappa * ending),
    )


@dataclass(frozen=True)
class QuasiSteadyAmplitudes:
    """Amplitudes entering the adiabatic-elimination relations.

    a/s prefixes are the antisymmetric/symmetric doublets, x the exchange
    symmetric product states; the trailing digit is the photon number.
    """

    a01_0: complex
    a02_0: complex
    a12_0: complex
    s01_0: complex
    s02_0: complex
    s12_0: complex
    x00_0: complex
    x11_0: complex
    x22_0: complex
    x00_1: complex
    s01_1: complex


_AMPLITUDE_KEYS = (
    ("a01_0", "a01", 0), ("a02_0", "a02", 0), ("a12_0", "a12", 0),
    ("s01_0", "s01", 0), ("s02_0", "s02", 0), ("s12_0", "s12", 0),
    ("x00_0", "00", 0), ("x11_0", "11", 0), ("x22_0", "22", 0),
    ("x00_1", "00", 1), ("s01_1", "s01", 1),
)


def extract_amplitudes(state: np.ndarray, basis: BasisIndex) -> QuasiSteadyAmplitudes:
    """Read the named amplitudes from a collective-basis state vector."""
    values = {}
    for field_name, label, n in _AMPLITUDE_KEYS:
        values[field_name] = complex(state[basis.collective_index(label, n)])
    return QuasiSteadyAmplitudes(**values)


def quasisteady_residual(state: np.ndarray, params: ModelParams, basis: BasisIndex) -> dict[str, float]:
    """Violations of the adiabatic amplitude relations for a collective-basis state.

    Residuals vanish for states in which the fast variables have relaxed onto
    the slow manifold; all relations are phase covariant.
    """
    eff = derived_params(params)
    amp = extract_amplitudes(state, basis)
    slope = params.omega_l / (2.0 * params.delta)
    pump = 2.0j * eff.g_eff / params.kappa
    res = {
        "a02_0": amp.a02_0 + slope * amp.a01_0,
        "a12_0": amp.a12_0,
        "x22_0": amp.x22_0,
        "s02_0": amp.s02_0 + slope * amp.s01_0,
        "s12_0": amp.s12_0 - math.sqrt(2.0) * slope * amp.x11_0,
        "x00_1": amp.x00_1 + pump * amp.s01_0,
        "s01_1": amp.s01_1 + pump * amp.x11_0,
    }
    return {k: abs(v) for k, v in res.items()}


def analytic_summary(params: ModelParams) -> dict[str, dict[str, float]]:
    """All closed-form quantities as plain floats, with times also in t_dark units."""
    eff = derived_params(params)
    pops = steady_populations(eff.x)
    times = timescales(params)
    out = {
        "params": {f.name: getattr(params, f.name) for f in fields(params)},
        "effective": {f.name: getattr(eff, f.name) for f in fields(eff)},
        "steady_populations": {f.name: getattr(pops, f.name) for f in fields(pops)},
        "timescales": {f.name: getattr(times, f.name) for f in fields(times)},
    }
    for name in ("t_cav", "t_dark", "t_light"):
        out["timescales"][f"{name}_over_tdark"] = out["timescales"][name] / times.t_dark
    return out
