"""Hypercube energy-gap analysis and the local two-level closed forms.

For every bitstring with at least one lower-energy single-bit-flip
neighbor, the largest downhill gap is collected; binned means of these
gaps over energy are fitted with a degree-6 polynomial, which feeds the
spectral-oracle schedule and serves as an analysis artifact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial

from .problems import SpectrumTable

__all__ = [
    "GapProfile",
    "largest_lower_gaps",
    "mean_gap_profile",
    "fit_profile",
    "build_gap_profile",
    "rabi_probability",
    "resonance_gamma",
    "write_profile_csv",
]

DRIVER_GAP = 2.0  # |Delta^D| of the local driver Hamiltonian


@dataclass(eq=False)
class GapProfile:
    """Largest-lower-gap samples, binned means, and their polynomial fit."""

    e_min: float
    e_max: float
    fit: Polynomial
    residual: float
    sample_e: np.ndarray | None = None
    sample_gap: np.ndarray | None = None
    bin_centers: np.ndarray | None = None
    bin_means: np.ndarray | None = None
    bin_counts: np.ndarray | None = None

    def fit_values(self, e) -> np.ndarray:
        return self.fit(np.asarray(e, dtype=float))

    def gamma_tilde(self, e) -> np.ndarray:
        """Locally resonant hopping rate <gap>(E) / (2 |Delta^D|)."""
        return np.maximum(self.fit_values(e), 0.0) / (2.0 * DRIVER_GAP)

    def fit_dict(self) -> dict:
        return {
            "degree": int(self.fit.degree()),
            "domain": [float(self.fit.domain[0]), float(self.fit.domain[1])],
            "coefficients": [float(c) for c in self.fit.coef],
        }

    @staticmethod
    def from_fit_dict(data: dict) -> "GapProfile":
        poly = Polynomial(
            np.array(data["coefficients"]),
            domain=data["domain"],
            window=[0.0, 1.0],
        )
        lo, hi = data["domain"]
        return GapProfile(e_min=float(lo), e_max=float(hi), fit=poly, residual=0.0)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.fit_dict(), fh, indent=1)

    @staticmethod
    def load(path) -> "GapProfile":
        with open(path) as fh:
            return GapProfile.from_fit_dict(json.load(fh))


def largest_lower_gaps(spectrum: SpectrumTable) -> tuple[np.ndarray, np.ndarray]:
    """Per-vertex largest energy drop to a hypercube neighbor.

    Returns (energies, gaps) for the vertices that have at least one
    lower-energy neighbor; local minima are excluded so downstream fits
    stay positive.
    """
    e = spectrum.energies
    idx = np.arange(e.size)
    best = np.full(e.size, -np.inf)
    for b in range(spectrum.n_vars):
        np.maximum(best, e - e[idx ^ (1 << b)], out=best)
    mask = best > 0
    return e[mask], best[mask]


def mean_gap_profile(
    sample_e: np.ndarray,
    sample_gap: np.ndarray,
    bin_count: int,
    e_min: float,
    e_max: float,
):
    """Arithmetic mean of the gaps in uniform energy bins over [e_min, e_max].

    Empty bins are filled by linear interpolation from their neighbors.
    Returns (centers, means, counts).
    """
    if bin_count < 1:
        raise ValueError("bin_count must be >= 1")
    if sample_e.size == 0:
        raise ValueError("no gap samples: flat or degenerate spectrum")
    edges = np.linspace(e_min, e_max, bin_count + 1)
    which = np.clip(np.digitize(sample_e, edges) - 1, 0, bin_count - 1)
    sums = np.bincount(which, weights=sample_gap, minlength=bin_count)
    counts = np.bincount(which, minlength=bin_count)
    centers = 0.5 * (edges[:-1] + edges[1:])
    means = np.full(bin_count, np.nan)
    nonempty = counts > 0
    means[nonempty] = sums[nonempty] / counts[nonempty]
    if not nonempty.all():
        means[~nonempty] = np.interp(
            centers[~nonempty], centers[nonempty], means[nonempty]
        )
    return centers, means, counts


def fit_profile(
    centers: np.ndarray,
    means: np.ndarray,
    counts: np.ndarray,
    e_min: float,
    e_max: float,
    degree: int = 6,
) -> tuple[Polynomial, float]:
    """Least-squares polynomial fit of the binned means over [e_min, e_max].

    The fit domain is normalized to [0, 1] for conditioning.  Requires at
    least degree + 1 nonempty bins.
    """
    nonempty = int(np.count_nonzero(counts))
    if nonempty < degree + 1:
        raise ValueError(
            f"rank deficiency: {nonempty} nonempty bins cannot support degree {degree}"
        )
    poly = Polynomial.fit(
        centers, means, degree, domain=[e_min, e_max], window=[0.0, 1.0]
    )
    residual = float(np.sum((poly(centers) - means) ** 2))
    return poly, residual


def build_gap_profile(
    spectrum: SpectrumTable, bins: int = 100, degree: int = 6
) -> GapProfile:
    """Full pipeline: gap extraction, binning, and polynomial fit."""
    sample_e, sample_gap = largest_lower_gaps(spectrum)
    centers, means, counts = mean_gap_profile(
        sample_e, sample_gap, bins, spectrum.e_min, spectrum.e_max
    )
    poly, residual = fit_profile(
        centers, means, counts, spectrum.e_min, spectrum.e_max, degree
    )
    return GapProfile(
        e_min=spectrum.e_min,
        e_max=spectrum.e_max,
        fit=poly,
        residual=residual,
        sample_e=sample_e,
        sample_gap=sample_gap,
        bin_centers=centers,
        bin_means=means,
        bin_counts=counts,
    )


def rabi_probability(gamma: float, delta: float, t: float) -> float:
    """Lower-state probability of the local two-level oscillation.

    P(t) = 1/2 + gamma*delta/(gamma^2 + delta^2) * sin^2(sqrt(gamma^2 +
    delta^2) * t) for a subspace started in its local equal superposition,
    where 2*delta is the local cost gap.
    """
    w2 = gamma * gamma + delta * delta
    if w2 == 0.0:
        raise ValueError("gamma and delta cannot both be zero")
    return 0.5 + (gamma * delta / w2) * math.sin(math.sqrt(w2) * t) ** 2


def resonance_gamma(delta_c: float) -> float:
    """Hopping rate balancing a local cost gap delta_c against the driver."""
    if delta_c < 0:
        raise ValueError("gap must be nonnegative")
    return delta_c / (2.0 * DRIVER_GAP)


def write_profile_csv(profile: GapProfile, path) -> None:
    """Profile CSV: bin_center_E, mean_gap, sample_count."""
    if profile.bin_centers is None:
        raise ValueError("profile carries no binned data")
    with open(path, "w") as fh:
        fh.write("bin_center_E,mean_gap,sample_count\n")
        for c, m, n in zip(
            profile.bin_centers, profile.bin_means, profile.bin_counts
        ):
            fh.write(f"{c:.12g},{m:.12g},{int(n)}\n")
