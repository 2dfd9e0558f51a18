"""Round-tube critical heat flux correlations and the heat-balance solver.

Implements the Biasi and Bowring CHF correlations for uniformly heated
vertical tubes, each usable two ways:

* direct substitution (DSM): evaluate the correlation at a known local
  equilibrium quality;
* heat balance (HBM): find the wall flux at which the correlation value
  equals the flux implied by the channel heat balance, so the quality
  argument is itself consistent with the critical power.

The heat balance for a uniformly heated tube of diameter D, heated
length L, mass flux G and inlet subcooling dh_sub is

    x(q'') = 4 q'' L / (G D h_fg) - dh_sub / h_fg

with h_fg evaluated at the system pressure.  The HBM solves
q'' = corr(x(q'')) by bracketed bisection; because both correlations
decrease with quality while x increases with q'', the root is unique
when it exists.

Both correlations are dimensional fits.  Out-of-validity inputs are
evaluated anyway (screening use); the published validity envelopes are
exposed as metadata, and nonpositive correlation values are returned
as-is rather than clamped so callers can apply their own policy.

References
----------
Biasi, L. et al., "Studies on burnout, Part 3," Energia Nucleare 14
(1967) 530-536.
Bowring, R.W., "A simple but accurate round tube uniform heat flux
dryout correlation over the pressure range 0.7 to 17 MN/m2," AEEW-R-789
(1972); constants as tabulated by Todreas & Kazimi, Nuclear Systems I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

from . import fluid

__all__ = [
    "InletConditions",
    "LocalConditions",
    "HbmSolution",
    "NoCriticalConditionError",
    "heat_balance_quality",
    "biasi_dsm",
    "bowring_dsm",
    "bowring_inlet",
    "solve_hbm",
    "BIASI_VALIDITY",
    "BOWRING_VALIDITY",
    "HBM_FLUX_BRACKET",
]

# Published validity envelopes (informational, not enforced).
BIASI_VALIDITY = {
    "diameter_m": (0.003, 0.0375),
    "heated_length_m": (0.2, 6.0),
    "pressure_pa": (0.27e6, 14.0e6),
    "mass_flux_kg_m2s": (100.0, 6000.0),
}
BOWRING_VALIDITY = {
    "diameter_m": (0.002, 0.045),
    "heated_length_m": (0.15, 3.7),
    "pressure_pa": (0.2e6, 19.0e6),
    "mass_flux_kg_m2s": (136.0, 18600.0),
}

# Search bracket for the heat-balance solve, W/m2.
HBM_FLUX_BRACKET = (1.0, 20.0e6)

# Below this mass flux only the high-quality Biasi branch applies.
BIASI_LOW_FLOW_LIMIT = 300.0

# Quality window of the underlying database; excursions outside it
# during an HBM solve are flagged on the solution.
QUALITY_MIN = -0.5
QUALITY_MAX = 1.0


@dataclass(frozen=True)
class InletConditions:
    """Channel geometry and inlet state for heat-balance evaluations.

    Attributes
    ----------
    diameter : float
        Tube inside diameter, m.
    heated_length : float
        Heated length over which the flux acts, m.
    pressure : float
        System pressure, Pa.
    mass_flux : float
        Mass flux, kg/(m2 s).
    inlet_subcooling : float
        h_f - h_inlet, J/kg.  Negative values describe a two-phase
        inlet and are allowed.
    """

    diameter: float
    heated_length: float
    pressure: float
    mass_flux: float
    inlet_subcooling: float

    def __post_init__(self) -> None:
        if self.diameter <= 0.0:
            raise ValueError(f"diameter must be positive, got {self.diameter}")
        if self.heated_length <= 0.0:
            raise ValueError(f"heated_length must be positive, got {self.heated_length}")
        if self.mass_flux <= 0.0:
            raise ValueError(f"mass_flux must be positive, got {self.mass_flux}")
        if not fluid.P_SAT_MIN <= self.pressure <= fluid.P_CRITICAL:
            raise ValueError(
                f"pressure {self.pressure} Pa outside saturation range "
                f"[{fluid.P_SAT_MIN}, {fluid.P_CRITICAL}] Pa"
            )


@dataclass(frozen=True)
class LocalConditions:
    """Local state for direct-substitution correlation evaluation."""

    diameter: float
    pressure: float
    mass_flux: float
    quality: float

    def __post_init__(self) -> None:
        if self.diameter <= 0.0:
            raise ValueError(f"diameter must be positive, got {self.diameter}")
        if self.mass_flux <= 0.0:
            raise ValueError(f"mass_flux must be positive, got {self.mass_flux}")
        if not fluid.P_SAT_MIN <= self.pressure <= fluid.P_CRITICAL:
            raise ValueError(
                f"pressure {self.pressure} Pa outside saturation range "
                f"[{fluid.P_SAT_MIN}, {fluid.P_CRITICAL}] Pa"
            )
        if not QUALITY_MIN <= self.quality <= QUALITY_MAX:
            raise ValueError(
                f"quality {self.quality} outside [{QUALITY_MIN}, {QUALITY_MAX}]"
            )


@dataclass(frozen=True)
class HbmSolution:
    """Result of a heat-balance critical heat flux solve.

    Attributes
    ----------
    chf : float
        Critical heat flux, W/m2.
    critical_quality : float
        Heat-balance quality at the critical flux.
    iterations : int
        Bisection iterations used.
    residual : float
        chf - corr(critical_quality), W/m2.
    quality_excursion : bool
        True when the converged critical quality lies outside the
        database window [-0.5, 1.0], i.e. the correlation had to be
        evaluated beyond its quality envelope at the solution.
    """

    chf: float
    critical_quality: float
    iterations: int
    residual: float
    quality_excursion: bool = False


class NoCriticalConditionError(RuntimeError):
    """The correlation admits no critical flux inside the search bracket."""

    def __init__(self, message: str, bracket: tuple, residuals: tuple):
        super().__init__(f"{message}; bracket={bracket}, residuals={residuals}")
        self.bracket = bracket
        self.residuals = residuals


def heat_balance_quality(q_pp: float, c: InletConditions, length: float | None = None) -> float:
    """Equilibrium quality at the end of ``length`` for wall flux q_pp, W/m2.

    Uses the channel heat balance with h_fg at the system pressure.
    ``length`` defaults to the full heated length.
    """
    l_cr = c.heated_length if length is None else length
    h_fg = fluid.saturation_state(c.pressure).h_fg
    return 4.0 * q_pp * l_cr / (c.mass_flux * c.diameter * h_fg) - c.inlet_subcooling / h_fg


# ---------------------------------------------------------------------------
# Biasi (1967)
# ---------------------------------------------------------------------------

def _biasi_pressure_f(p_bar: float) -> float:
    return 0.7249 + 0.099 * p_bar * math.exp(-0.032 * p_bar)


def _biasi_pressure_h(p_bar: float) -> float:
    return -1.159 + 0.149 * p_bar * math.exp(-0.019 * p_bar) + 9.0 * p_bar / (10.0 + p_bar * p_bar)


def _biasi_flux(d: float, g: float, p_pa: float, x: float) -> float:
    # diameter enters in cm, pressure in bar; result in W/m2
    p_bar = p_pa / 1e5
    d_cm = 100.0 * d
    n = 0.4 if d >= 0.01 else 0.6
    scale = d_cm ** (-n)
    q_high = 15.048e7 * scale * g ** (-0.6) * _biasi_pressure_h(p_bar) * (1.0 - x)
    if g <= BIASI_LOW_FLOW_LIMIT:
        return q_high
    q_low = 2.764e7 * scale * g ** (-1.0 / 6.0) * (
        1.468 * _biasi_pressure_f(p_bar) * g ** (-1.0 / 6.0) - x
    )
    return max(q_low, q_high)


def biasi_dsm(c: LocalConditions) -> float:
    """Biasi CHF at a known local quality, W/m2.

    Takes the larger of the low-quality and high-quality branches; at
    mass fluxes of 300 kg/(m2 s) and below only the high-quality branch
    applies.  The raw value is returned even when nonpositive (the
    correlation predicts no burnout margin there); callers clamp.
    """
    return _biasi_flux(c.diameter, c.mass_flux, c.pressure, c.quality)


# ---------------------------------------------------------------------------
# Bowring (1972)
# ---------------------------------------------------------------------------

def _bowring_factors(p_pa: float) -> tuple[float, float, float, float, float]:
    """Pressure functions F1..F4 and flow exponent n at pressure p, Pa."""
    p_r = p_pa / 6.895e6
    n = 2.0 - 0.5 * p_r
    if p_r <= 1.0:
        f1 = (p_r**18.942 * math.exp(20.89 * (1.0 - p_r)) + 0.917) / 1.917
        f2 = f1 / ((p_r**1.316 * math.exp(2.444 * (1.0 - p_r)) + 0.309) / 1.309)
        f3 = (p_r**17.023 * math.exp(16.658 * (1.0 - p_r)) + 0.667) / 1.667
    else:
        f1 = p_r**-0.368 * math.exp(0.648 * (1.0 - p_r))
        f2 = f1 / (p_r**-0.448 * math.exp(0.245 * (1.0 - p_r)))
        f3 = p_r**0.219
    f4 = f3 * p_r**1.649
    return f1, f2, f3, f4, n


def _bowring_ac(d: float, g: float, p_pa: float, h_fg: float) -> tuple[float, float]:
    f1, f2, f3, f4, n = _bowring_factors(p_pa)
    a = 2.317 * (h_fg * d * g / 4.0) * f1 / (1.0 + 0.0143 * f2 * math.sqrt(d) * g)
    c = 0.077 * f3 * d * g / (1.0 + 0.347 * f4 * (g / 1356.0) ** n)
    return a, c


def bowring_inlet(c: InletConditions) -> float:
    """Bowring CHF from inlet conditions, W/m2 (closed form).

    q'' = (A + D G dh_sub / 4) / (C + L); equivalent to the heat-balance
    solution because the length dependence cancels exactly when the
    local quality is eliminated through the heat balance.
    """
    h_fg = fluid.saturation_state(c.pressure).h_fg
    a, cc = _bowring_ac(c.diameter, c.mass_flux, c.pressure, h_fg)
    return (a + 0.25 * c.diameter * c.mass_flux * c.inlet_subcooling) / (cc + c.heated_length)


def _bowring_flux_local(d: float, g: float, p_pa: float, x: float, h_fg: float) -> float:
    a, cc = _bowring_ac(d, g, p_pa, h_fg)
    return (a - 0.25 * d * g * h_fg * x) / cc


def bowring_dsm(c: LocalConditions) -> float:
    """Bowring CHF at a known local quality, W/m2.

    Local-conditions form q'' = (A - D G h_fg x / 4) / C, obtained from
    the inlet form by eliminating the inlet subcooling through the heat
    balance.  Raw value returned even when nonpositive.
    """
    h_fg = fluid.saturation_state(c.pressure).h_fg
    return _bowring_flux_local(c.diameter, c.mass_flux, c.pressure, c.quality, h_fg)


# ---------------------------------------------------------------------------
# Heat-balance solver
# ---------------------------------------------------------------------------

_RAW_FLUX = {
    "biasi": lambda d, g, p, x, h_fg: _biasi_flux(d, g, p, x),
    "bowring": lambda d, g, p, x, h_fg: _bowring_flux_local(d, g, p, x, h_fg),
}

CorrelationArg = Union[str, Callable[[InletConditions, float], float]]


def solve_hbm(
    correlation: CorrelationArg,
    c: InletConditions,
    tol: float = 1.0,
    max_iter: int = 200,
) -> HbmSolution:
    """Critical heat flux by the heat-balance method.

    Finds q'' with corr(x(q'')) = q'' by bisection over the bracket
    ``HBM_FLUX_BRACKET``, where x(q'') is the heat-balance quality at
    the full heated length.  ``correlation`` is "biasi", "bowring", or
    a callable f(c, x) -> W/m2 for custom monotone-decreasing fits.

    Parameters
    ----------
    tol : float
        Absolute residual tolerance, W/m2.
    max_iter : int
        Bisection iteration cap.

    Raises
    ------
    NoCriticalConditionError
        If the residual does not change sign over the bracket, i.e. the
        correlation never intersects the heat-balance line (no burnout
        is predicted inside the search range).
    """
    h_fg = fluid.saturation_state(c.pressure).h_fg
    gd = c.mass_flux * c.diameter

    if isinstance(correlation, str):
        try:
            raw = _RAW_FLUX[correlation]
        except KeyError:
            raise ValueError(
                f"unknown correlation {correlation!r}; expected one of {sorted(_RAW_FLUX)}"
            ) from None
        flux_at = lambda x: raw(c.diameter, c.mass_flux, c.pressure, x, h_fg)
    else:
        flux_at = lambda x: correlation(c, x)

    def quality(q: float) -> float:
        return 4.0 * q * c.heated_length / (gd * h_fg) - c.inlet_subcooling / h_fg

    def residual(q: float) -> float:
        return q - flux_at(quality(q))

    q_lo, q_hi = HBM_FLUX_BRACKET
    r_lo, r_hi = residual(q_lo), residual(q_hi)
    if r_lo >= 0.0 or r_hi <= 0.0:
        raise NoCriticalConditionError(
            "correlation does not cross the heat-balance line",
            bracket=(q_lo, q_hi),
            residuals=(r_lo, r_hi),
        )

    q_mid = 0.5 * (q_lo + q_hi)
    r_mid = residual(q_mid)
    iterations = 1
    while abs(r_mid) > tol and iterations < max_iter:
        if r_mid > 0.0:
            q_hi = q_mid
        else:
            q_lo = q_mid
        q_mid = 0.5 * (q_lo + q_hi)
        r_mid = residual(q_mid)
        iterations += 1
    if abs(r_mid) > tol:
        raise NoCriticalConditionError(
            f"bisection did not reach |residual| <= {tol} W/m2 in {max_iter} iterations",
            bracket=(q_lo, q_hi),
            residuals=(r_mid, r_mid),
        )
    x_cr = quality(q_mid)
    return HbmSolution(
        chf=q_mid,
        critical_quality=x_cr,
        iterations=iterations,
        residual=r_mid,
        quality_excursion=not QUALITY_MIN <= x_cr <= QUALITY_MAX,
    )
