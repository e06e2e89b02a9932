"""Dimensionless analysis and the scaling-regime table.

From physical scales (or directly from the exponents of the scaled
system) this module derives the Strouhal and Knudsen numbers, the
inter-species interaction strength, and identifies which of the six
limiting two-fluid systems applies.  Exponent conventions: the time
scaling is eps, the species Knudsen numbers are eps**c_l, the
interaction strength is eps**q with 4q = 2 + c1 + c2 in the very-weak
coupling mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class UnclassifiedRegimeError(ValueError):
    """Exponents outside the six-case table; never guessed."""


@dataclass(frozen=True)
class SpeciesFlags:
    advect: bool
    diffuse: bool


@dataclass(frozen=True)
class RegimeId:
    """One of the six limiting systems, as per-species term flags.

    ``label`` is a stable machine name; ``species`` holds the
    (advect, diffuse) flags for species 1 and 2; the inter-species
    coupling (velocity and temperature relaxation) and the
    divergence-free + Boussinesq constraints are common to all six.
    """

    label: str
    description: str
    species: tuple[SpeciesFlags, SpeciesFlags]
    coupling: bool = True
    divergence_free: bool = True
    boussinesq: bool = True

    def swapped(self) -> "RegimeId":
        return RegimeId(self.label, self.description,
                        (self.species[1], self.species[0]),
                        self.coupling, self.divergence_free, self.boussinesq)


def _flags(a1, d1, a2, d2):
    return (SpeciesFlags(a1, d1), SpeciesFlags(a2, d2))


def classify(r: float, c1: float, c2: float, tol: float = 1e-12) -> RegimeId:
    """Map scaling exponents to the limiting two-fluid system.

    The six admissible cases (r, c1, c2 with 1 <= c_l < 2r):

    ========  ==========================  ================================
    r         c1, c2                      limit
    ========  ==========================  ================================
    r = 1     c1 = c2 = 1                 coupled Navier-Stokes-Fourier
    r = 1     one c = 1, other in (1,2)   NSF + inviscid Euler-type twin
    r = 1     c1 = c2 in (1,2)            coupled inviscid, non-diffusive
    r > 1     c1 = c2 = 1                 coupled Stokes-Fourier
    r > 1     one c = 1, other in (1,2r)  Stokes-Fourier + relaxation twin
    r > 1     c1 = c2 in (1,2r)           pure coupling relaxation
    ========  ==========================  ================================

    Anything else (c_l >= 2r, c_l < 1, r < 1, or c1 != c2 both > 1)
    raises ``UnclassifiedRegimeError``.
    """
    if r < 1.0 - tol:
        raise UnclassifiedRegimeError(f"time exponent r = {r} < 1 is not covered")
    for c in (c1, c2):
        if c < 1.0 - tol:
            raise UnclassifiedRegimeError(f"Knudsen exponent {c} < 1 is not covered")
        if c >= 2.0 * r - tol:
            raise UnclassifiedRegimeError(
                f"Knudsen exponent {c} >= 2r = {2 * r} violates the validity box")
    one1 = abs(c1 - 1.0) <= tol
    one2 = abs(c2 - 1.0) <= tol
    equal = abs(c1 - c2) <= tol
    r_is_one = abs(r - 1.0) <= tol

    if r_is_one:
        if one1 and one2:
            return RegimeId("nsf_coupled",
                            "two-fluid incompressible Navier-Stokes-Fourier",
                            _flags(True, True, True, True))
        if one1 != one2:
            # the species with larger Knudsen exponent loses its diffusion
            if one2:
                return RegimeId("nsf_euler_mixed",
                                "advective two-fluid system, species 1 inviscid "
                                "and non-diffusive, species 2 Navier-Stokes-Fourier",
                                _flags(True, False, True, True))
            return RegimeId("nsf_euler_mixed",
                            "advective two-fluid system, species 2 inviscid "
                            "and non-diffusive, species 1 Navier-Stokes-Fourier",
                            _flags(True, True, True, False))
        if equal:
            return RegimeId("euler_coupled",
                            "two-fluid advective system without diffusion",
                            _flags(True, False, True, False))
        raise UnclassifiedRegimeError(
            f"c1 = {c1}, c2 = {c2} both above 1 but unequal: not covered")

    if one1 and one2:
        return RegimeId("stokes_coupled",
                        "two-fluid Stokes-Fourier (linear, diffusive)",
                        _flags(False, True, False, True))
    if one1 != one2:
        if one2:
            return RegimeId("stokes_relax_mixed",
                            "linear system, species 1 pure relaxation, "
                            "species 2 Stokes-Fourier",
                            _flags(False, False, False, True))
        return RegimeId("stokes_relax_mixed",
                        "linear system, species 2 pure relaxation, "
                        "species 1 Stokes-Fourier",
                        _flags(False, True, False, False))
    if equal:
        return RegimeId("relaxation_only",
                        "pure inter-species relaxation (no advection, "
                        "no diffusion)",
                        _flags(False, False, False, False))
    raise UnclassifiedRegimeError(
        f"c1 = {c1}, c2 = {c2} both above 1 but unequal: not covered")


@dataclass(frozen=True)
class ScalingParams:
    """Dimensionless numbers of one scaled configuration."""

    epsilon: float
    r: float
    c1: float
    c2: float
    q: float
    St: float
    Kn1: float
    Kn2: float
    delta_bar: float
    interaction: str = "very_weak"
    coupling_ratio: float = 1.0

    def __post_init__(self):
        if self.interaction == "very_weak":
            if abs(4.0 * self.q - (2.0 + self.c1 + self.c2)) > 1e-12:
                raise ValueError("very-weak scaling requires 4q = 2 + c1 + c2")


def from_exponents(epsilon: float, r: float = 1.0, c1: float = 1.0,
                   c2: float = 1.0) -> ScalingParams:
    """St = eps, Kn_l = eps**c_l, delta_bar = eps**q with 4q = 2 + c1 + c2."""
    if epsilon <= 0 or epsilon >= 1:
        raise ValueError("epsilon must lie in (0, 1)")
    q = (2.0 + c1 + c2) / 4.0
    return ScalingParams(
        epsilon=epsilon, r=r, c1=c1, c2=c2, q=q,
        St=epsilon, Kn1=epsilon**c1, Kn2=epsilon**c2, delta_bar=epsilon**q,
    )


@dataclass(frozen=True)
class PhysicalScales:
    """Reference scales of the unscaled mixture problem."""

    t0: float                # macroscopic time
    L0: float                # macroscopic length
    T0: float                # reference temperature
    mass: float              # particle mass (equal across species)
    boltzmann_k: float       # Boltzmann constant in the chosen units
    tau1: float              # single-species mean free time, species 1
    tau2: float              # single-species mean free time, species 2
    delta_bar: float         # inter-species interaction strength

    def __post_init__(self):
        for name in ("t0", "L0", "T0", "mass", "boltzmann_k", "tau1", "tau2",
                     "delta_bar"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class DimensionlessReport:
    U0: float
    c0: float
    tau12: float
    lambda1: float
    lambda2: float
    lambda12: float
    St: float
    Kn1: float
    Kn2: float
    delta_bar: float
    coupling_ratio: float
    interaction: str


def derive_dimensionless(scales: PhysicalScales, strong_cut: float = 0.5,
                         very_weak_hi: float = 2.0) -> DimensionlessReport:
    """Compute St, Kn, the mixture mean free path, and the coupling class.

    The macroscopic velocity is L0/t0 and the microscopic velocity
    sqrt(5 k T0 / (3 m)).  The mixture mean free time divides the
    geometric mean of the species times by the squared interaction
    strength; mean free paths are c0 times the mean free times.  The
    interaction class compares delta_bar against
    (Kn1 Kn2 St^2)^(1/4): order-one delta_bar is "strong"; a ratio
    beyond ``very_weak_hi`` is "weak"; a bounded ratio is "very_weak".
    """
    U0 = scales.L0 / scales.t0
    c0 = math.sqrt(5.0 * scales.boltzmann_k * scales.T0 / (3.0 * scales.mass))
    tau12 = math.sqrt(scales.tau1 * scales.tau2) / scales.delta_bar**2
    lam1 = c0 * scales.tau1
    lam2 = c0 * scales.tau2
    lam12 = c0 * tau12
    St = scales.L0 / (c0 * scales.t0)
    Kn1 = lam1 / scales.L0
    Kn2 = lam2 / scales.L0
    ratio = scales.delta_bar / (Kn1 * Kn2 * St**2) ** 0.25
    if scales.delta_bar >= strong_cut:
        kind = "strong"
    elif ratio > very_weak_hi:
        kind = "weak"
    else:
        kind = "very_weak"
    return DimensionlessReport(U0=U0, c0=c0, tau12=tau12, lambda1=lam1,
                               lambda2=lam2, lambda12=lam12, St=St, Kn1=Kn1,
                               Kn2=Kn2, delta_bar=scales.delta_bar,
                               coupling_ratio=ratio, interaction=kind)
