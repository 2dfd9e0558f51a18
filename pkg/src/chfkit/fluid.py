"""Water/steam properties from the IAPWS Industrial Formulation 1997.

Implements the subset of IAPWS-IF97 needed for heat-balance work on
boiling channels: the Region 4 saturation line (both directions), and
specific enthalpy from the Region 1 (compressed liquid) and Region 2
(superheated steam) basic equations.  Saturated-liquid and saturated-
vapor enthalpies are obtained by evaluating the Region 1 and Region 2
equations on the saturation line, which keeps Regions 3 and 5 out of
scope.  Above ~16.53 MPa the saturation line lies outside the nominal
Region 1/2 rectangles and the basic equations are smooth extrapolations
there; this is adequate for heat-balance quality bookkeeping but should
not be mistaken for full IF97 fidelity near the critical point.

All public functions take SI units (Pa, K) and return SI units (J/kg).

Reference
---------
IAPWS, Revised Release on the IAPWS Industrial Formulation 1997 for the
Thermodynamic Properties of Water and Steam, August 2007.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "FluidRangeError",
    "SaturationState",
    "saturation_pressure",
    "saturation_temperature",
    "saturation_state",
    "enthalpy_region1",
    "enthalpy_region2",
    "subcooling_from_inlet_temp",
    "inlet_temp_from_subcooling",
    "P_CRITICAL",
    "T_CRITICAL",
    "P_SAT_MIN",
    "T_SAT_MIN",
]

# Specific gas constant for ordinary water, J/(kg K).
R_WATER = 461.526

T_CRITICAL = 647.096       # K
P_CRITICAL = 22.064e6      # Pa
T_SAT_MIN = 273.15         # K
P_SAT_MIN = 611.213        # Pa, saturation pressure at 273.15 K

# Region 1 basic equation, IAPWS-IF97 Table 2.  gamma(pi, tau) =
# sum n_i (7.1 - pi)^I_i (tau - 1.222)^J_i with pi = p/16.53 MPa,
# tau = 1386 K / T.
_R1_I = (
    0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 2, 2, 2,
    2, 2, 3, 3, 3, 4, 4, 4, 5, 8, 8, 21, 23, 29, 30, 31, 32,
)
_R1_J = (
    -2, -1, 0, 1, 2, 3, 4, 5, -9, -7, -1, 0, 1, 3, -3, 0, 1,
    3, 17, -4, 0, 6, -5, -2, 10, -8, -11, -6, -29, -31, -38, -39, -40, -41,
)
_R1_N = (
    0.14632971213167,
    -0.84548187169114,
    -0.37563603672040e1,
    0.33855169168385e1,
    -0.95791963387872,
    0.15772038513228,
    -0.16616417199501e-1,
    0.81214629983568e-3,
    0.28319080123804e-3,
    -0.60706301565874e-3,
    -0.18990068218419e-1,
    -0.32529748770505e-1,
    -0.21841717175414e-1,
    -0.52838357969930e-4,
    -0.47184321073267e-3,
    -0.30001780793026e-3,
    0.47661393906987e-4,
    -0.44141845330846e-5,
    -0.72694996297594e-15,
    -0.31679644845054e-4,
    -0.28270797985312e-5,
    -0.85205128120103e-9,
    -0.22425281908000e-5,
    -0.65171222895601e-6,
    -0.14341729937924e-12,
    -0.40516996860117e-6,
    -0.12734301741682e-8,
    -0.17424871230634e-9,
    -0.68762131295531e-18,
    0.14478307828521e-19,
    0.26335781662795e-22,
    -0.11947622640071e-22,
    0.18228094581404e-23,
    -0.93537087292458e-25,
)

# Region 2 ideal-gas part, IAPWS-IF97 Table 10.
_R2_J0 = (0, 1, -5, -4, -3, -2, -1, 2, 3)
_R2_N0 = (
    -0.96927686500217e1,
    0.10086655968018e2,
    -0.56087911283020e-2,
    0.71452738081455e-1,
    -0.40710498223928,
    0.14240819171444e1,
    -0.43839511319450e1,
    -0.28408632460772,
    0.21268463753307e-1,
)

# Region 2 residual part, IAPWS-IF97 Table 11.
_R2_I = (
    1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3, 4, 4, 4, 5, 6, 6, 6,
    7, 7, 7, 8, 8, 9, 10, 10, 10, 16, 16, 18, 20, 20, 20, 21, 22, 23,
    24, 24, 24,
)
_R2_J = (
    0, 1, 2, 3, 6, 1, 2, 4, 7, 36, 0, 1, 3, 6, 35, 1, 2, 3, 7, 3, 16,
    35, 0, 11, 25, 8, 36, 13, 4, 10, 14, 29, 50, 57, 20, 35, 48, 21,
    53, 39, 26, 40, 58,
)
_R2_N = (
    -0.17731742473213e-2,
    -0.17834862292358e-1,
    -0.45996013696365e-1,
    -0.57581259083432e-1,
    -0.50325278727930e-1,
    -0.33032641670203e-4,
    -0.18948987516315e-3,
    -0.39392777243355e-2,
    -0.43797295650573e-1,
    -0.26674547914087e-4,
    0.20481737692309e-7,
    0.43870667284435e-6,
    -0.32277677238570e-4,
    -0.15033924542148e-2,
    -0.40668253562649e-1,
    -0.78847309559367e-9,
    0.12790717852285e-7,
    0.48225372718507e-6,
    0.22922076337661e-5,
    -0.16714766451061e-10,
    -0.21171472321355e-2,
    -0.23895741934104e2,
    -0.59059564324270e-17,
    -0.12621808899101e-5,
    -0.38946842435739e-1,
    0.11256211360459e-10,
    -0.82311340897998e1,
    0.19809712802088e-7,
    0.10406965210174e-18,
    -0.10234747095929e-12,
    -0.10018179379511e-8,
    -0.80882908646985e-10,
    0.10693031879409,
    -0.33662250574171,
    0.89185845355421e-24,
    0.30629316876232e-12,
    -0.42002467698208e-5,
    -0.59056029685639e-25,
    0.37826947613457e-5,
    -0.12768608934681e-14,
    0.73087610595061e-28,
    0.55414715350778e-16,
    -0.94369707241210e-6,
)

# Region 4 saturation line, IAPWS-IF97 Table 34.
_R4_N = (
    0.11670521452767e4,
    -0.72421316703206e6,
    -0.17073846940092e2,
    0.12020824702470e5,
    -0.32325550322333e7,
    0.14915108613530e2,
    -0.48232657361591e4,
    0.40511340542057e6,
    -0.23855557567849,
    0.65017534844798e3,
)


class FluidRangeError(ValueError):
    """Input lies outside the validity range of the requested equation."""


@dataclass(frozen=True)
class SaturationState:
    """Saturation properties at a given pressure.

    Attributes
    ----------
    pressure : float
        Saturation pressure, Pa.
    temperature : float
        Saturation temperature, K.
    h_f : float
        Saturated-liquid specific enthalpy, J/kg.
    h_g : float
        Saturated-vapor specific enthalpy, J/kg.
    h_fg : float
        Latent heat of vaporization ``h_g - h_f``, J/kg.
    """

    pressure: float
    temperature: float
    h_f: float
    h_g: float
    h_fg: float


def saturation_pressure(t: float) -> float:
    """Saturation pressure of water, Pa, from temperature, K.

    Implements IF97 Eq. (30), valid for 273.15 K <= t <= 647.096 K.
    """
    if not T_SAT_MIN <= t <= T_CRITICAL:
        raise FluidRangeError(
            f"saturation temperature {t} K outside [{T_SAT_MIN}, {T_CRITICAL}] K"
        )
    n = _R4_N
    theta = t + n[8] / (t - n[9])
    a = theta * theta + n[0] * theta + n[1]
    b = n[2] * theta * theta + n[3] * theta + n[4]
    c = n[5] * theta * theta + n[6] * theta + n[7]
    p_mpa = (2.0 * c / (-b + math.sqrt(b * b - 4.0 * a * c))) ** 4
    return p_mpa * 1e6


def saturation_temperature(p: float) -> float:
    """Saturation temperature of water, K, from pressure, Pa.

    Implements IF97 Eq. (31), the exact algebraic inverse of Eq. (30),
    valid for 611.213 Pa <= p <= 22.064 MPa.
    """
    if not P_SAT_MIN <= p <= P_CRITICAL:
        raise FluidRangeError(
            f"saturation pressure {p} Pa outside [{P_SAT_MIN}, {P_CRITICAL}] Pa"
        )
    n = _R4_N
    beta = (p / 1e6) ** 0.25
    e = beta * beta + n[2] * beta + n[5]
    f = n[0] * beta * beta + n[3] * beta + n[6]
    g = n[1] * beta * beta + n[4] * beta + n[7]
    d = 2.0 * g / (-f - math.sqrt(f * f - 4.0 * e * g))
    return 0.5 * (n[9] + d - math.sqrt((n[9] + d) ** 2 - 4.0 * (n[8] + n[9] * d)))


def enthalpy_region1(p: float, t: float) -> float:
    """Specific enthalpy of compressed liquid water, J/kg.

    Region 1 basic equation, h = R T tau d(gamma)/d(tau).  Nominal
    validity is 273.15 K <= t <= 623.15 K, p_sat(t) <= p <= 100 MPa;
    evaluation is permitted up to the critical temperature so that the
    saturation line can be followed, but values beyond 623.15 K are
    extrapolations.
    """
    _check_pt(p, t)
    pi = p / 16.53e6
    tau = 1386.0 / t
    a = 7.1 - pi
    b = tau - 1.222
    gamma_tau = 0.0
    for i, j, c in zip(_R1_I, _R1_J, _R1_N):
        gamma_tau += c * a**i * j * b ** (j - 1)
    return R_WATER * t * tau * gamma_tau


def enthalpy_region2(p: float, t: float) -> float:
    """Specific enthalpy of superheated steam, J/kg.

    Region 2 basic equation, ideal-gas plus residual part.  Nominal
    validity is 273.15 K <= t <= 1073.15 K, p <= 100 MPa with p below
    the Region 2/3 boundary; evaluation at saturated-vapor states above
    ~16.53 MPa is an extrapolation (see module docstring).
    """
    _check_pt(p, t)
    pi = p / 1e6
    tau = 540.0 / t
    gamma0_tau = 0.0
    for j0, c in zip(_R2_J0, _R2_N0):
        gamma0_tau += c * j0 * tau ** (j0 - 1)
    b = tau - 0.5
    gammar_tau = 0.0
    for i, j, c in zip(_R2_I, _R2_J, _R2_N):
        gammar_tau += c * pi**i * j * b ** (j - 1)
    return R_WATER * t * tau * (gamma0_tau + gammar_tau)


def saturation_state(p: float) -> SaturationState:
    """Saturation temperature and phase enthalpies at pressure p, Pa.

    h_f comes from the Region 1 equation and h_g from the Region 2
    equation, both evaluated at (t_sat(p), p).
    """
    t_sat = saturation_temperature(p)
    h_f = enthalpy_region1(p, t_sat)
    h_g = enthalpy_region2(p, t_sat)
    return SaturationState(pressure=p, temperature=t_sat, h_f=h_f, h_g=h_g, h_fg=h_g - h_f)


def subcooling_from_inlet_temp(p: float, t_in: float) -> float:
    """Inlet subcooling h_f(p) - h(p, t_in), J/kg, for a liquid inlet.

    Raises FluidRangeError if t_in exceeds the saturation temperature
    (a superheated inlet has no liquid-temperature representation).
    """
    t_sat = saturation_temperature(p)
    if t_in > t_sat:
        raise FluidRangeError(
            f"inlet temperature {t_in} K exceeds saturation temperature "
            f"{t_sat} K at {p} Pa"
        )
    sat = saturation_state(p)
    return sat.h_f - enthalpy_region1(p, t_in)


def inlet_temp_from_subcooling(p: float, dh_sub: float) -> float:
    """Liquid inlet temperature, K, that yields the given subcooling, J/kg.

    Inverts subcooling_from_inlet_temp by bisection on temperature over
    [273.15 K, t_sat(p)].  dh_sub must be nonnegative and no larger than
    the subcooling of a 273.15 K inlet.
    """
    if dh_sub < 0.0:
        raise FluidRangeError(f"subcooling {dh_sub} J/kg is negative (superheated inlet)")
    sat = saturation_state(p)
    target = sat.h_f - dh_sub
    lo, hi = T_SAT_MIN, sat.temperature
    if enthalpy_region1(p, lo) > target:
        raise FluidRangeError(
            f"subcooling {dh_sub} J/kg exceeds the maximum representable "
            f"{sat.h_f - enthalpy_region1(p, lo)} J/kg at {p} Pa"
        )
    # enthalpy_region1 is strictly increasing in t at fixed p
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if enthalpy_region1(p, mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-9:
            break
    return 0.5 * (lo + hi)


def _check_pt(p: float, t: float) -> None:
    if not 0.0 < p <= 100e6:
        raise FluidRangeError(f"pressure {p} Pa outside (0, 100e6] Pa")
    if not T_SAT_MIN <= t <= 1073.15:
        raise FluidRangeError(f"temperature {t} K outside [{T_SAT_MIN}, 1073.15] K")
