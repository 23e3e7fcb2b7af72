"""Analytic small-time heat-trace coefficients of a quotient orbifold.

The trace is written as (4 pi t)^(-n/2) * sum_j c_j t^(j/2). The smooth part
contributes c_{2k} = a_k; a singular stratum N of dimension d contributes its
leading density at j = n - d with weight (4 pi)^((n-d)/2) / |iso(N)|.

For flat tori every isometry's contribution is an exact Gaussian, so the
series is complete. For sphere quotients only a_0..a_2 and the leading
(k = 0) stratum densities are known here; ``AsymptoticSeries.claimed`` lists
the indices the computation actually covers.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import intlinalg as il
from .errors import InsufficientOrder, SingularNormalAction, UnsupportedGeometry
from .isometry import GroupAction, IsometryElement, ModelGeometry, manifold_fixed_dim
from .stratification import StratificationReport, Stratum, enumerate_strata

ZERO_THRESHOLD = 1e-9
SPHERE_SMOOTH_ORDER = 2  # a_0, a_1, a_2


@dataclass(frozen=True)
class SmoothTermCoeffs:
    a0: float
    a1: float
    a2: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.a0, self.a1, self.a2)


def smooth_term_coeffs(geometry: ModelGeometry, group_order: int) -> SmoothTermCoeffs:
    vol = geometry.cover_volume / group_order
    if geometry.is_torus:
        return SmoothTermCoeffs(vol, 0.0, 0.0)
    if geometry.dimension != 2:
        raise UnsupportedGeometry("smooth coefficients only for the 2-sphere")
    curv = 1.0 / geometry.radius**2
    # scal = 2K; a_1 = vol*scal/6, a_2 = vol*(5 scal^2 - 2|Ric|^2 + 2|Rm|^2)/360 = vol*K^2/15
    return SmoothTermCoeffs(vol, vol * curv / 3.0, vol * curv**2 / 15.0)


def normal_determinant(g: IsometryElement) -> Fraction | float:
    """det((I - A)|_normal): the product of 1 - lambda over eigenvalues lambda != 1."""
    m = g.size
    if g.is_exact:
        mat = [[int(i == j) - int(g.linear[i, j]) for j in range(m)] for i in range(m)]
        return il.elementary_symmetric_top(mat)
    eig = np.linalg.eigvals(np.eye(m) - g.linear)
    keep = eig[np.abs(eig) > 1e-9]
    return float(np.real(np.prod(keep))) if keep.size else 1.0


def b0_element(g: IsometryElement, stratum: Stratum, action: GroupAction) -> float:
    """Leading heat density of one iso^max element: |det((I - A)|_normal)|^-1."""
    n = action.geometry.dimension
    if manifold_fixed_dim(g, action.geometry) != stratum.dimension:
        raise SingularNormalAction("element is not in iso^max of this stratum")
    m = g.size
    if g.is_exact:
        r = il.rank([[int(i == j) - int(g.linear[i, j]) for j in range(m)] for i in range(m)])
    else:
        r = int(np.sum(np.linalg.svd(np.eye(m) - g.linear, compute_uv=False) > 1e-9))
    if r != n - stratum.dimension:
        raise SingularNormalAction("normal space rank does not match the codimension")
    d = normal_determinant(g)
    if abs(float(d)) <= 1e-12:
        raise SingularNormalAction("I - A is singular on the normal space")
    return 1.0 / abs(float(d))


@dataclass(frozen=True)
class StratumContribution:
    """I_N / |iso(N)|: (4 pi t)^(-power_offset) * b0_value / isotropy_order."""

    stratum: Stratum
    power_offset: float  # dim N / 2
    b0_value: float  # sum over iso^max of b0, integrated over N
    higher_orders_exact_zero: bool
    primary: bool = True

    @property
    def leading_term(self) -> float:
        return self.b0_value / self.stratum.isotropy_order


def stratum_contribution(stratum: Stratum, action: GroupAction) -> StratumContribution:
    flat = action.geometry.is_torus
    if not stratum.iso_max_elements:
        return StratumContribution(stratum, stratum.dimension / 2, 0.0, flat, primary=False)
    density = sum(b0_element(action.elements[i], stratum, action) for i in stratum.iso_max_elements)
    return StratumContribution(stratum, stratum.dimension / 2, density * stratum.volume, flat)


@dataclass(frozen=True)
class AsymptoticSeries:
    """Coefficients c_j of (4 pi t)^(-n/2) * sum_j c_j t^(j/2)."""

    n: int
    coefficients: dict[int, float]
    provenance: str  # "analytic" | "fitted"
    claimed: frozenset[int] = field(default_factory=frozenset)

    @property
    def j_max(self) -> int:
        return max(self.coefficients)

    def exponent(self, j: int) -> Fraction:
        """Power of t carried by c_j once (4 pi t)^(-n/2) is multiplied out."""
        return Fraction(j - self.n, 2)

    def absolute(self, j: int) -> float:
        """Coefficient of t^((j-n)/2) in the trace itself."""
        return self.coefficients.get(j, 0.0) / (4 * math.pi) ** (self.n / 2)

    def absolute_at(self, exponent) -> float:
        j = int(2 * Fraction(exponent) + self.n)
        return self.absolute(j)

    @staticmethod
    def is_opposite_parity_index(j: int) -> bool:
        # exponent (j - n)/2 has the parity type opposite to the smooth part exactly for odd j
        return j % 2 == 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["exponent", "coefficient", "provenance"])
        for j in sorted(self.coefficients):
            if self.claimed and j not in self.claimed:
                continue
            w.writerow([str(self.exponent(j)), repr(float(self.absolute(j))), self.provenance])
        return buf.getvalue()


def asymptotic_series(
    action: GroupAction, j_max: int | None = None, report: StratificationReport | None = None
) -> AsymptoticSeries:
    geometry = action.geometry
    n = geometry.dimension
    j_max = n + 4 if j_max is None else j_max
    report = enumerate_strata(action) if report is None else report
    smooth = smooth_term_coeffs(geometry, action.order)
    coeffs = {j: 0.0 for j in range(j_max + 1)}
    for k, a in enumerate(smooth.as_tuple()):
        if 2 * k <= j_max:
            coeffs[2 * k] += a
    claimed = set(range(j_max + 1))
    if not geometry.is_torus:
        claimed = {j for j in claimed if j <= 2 * SPHERE_SMOOTH_ORDER + 1}
    for s in report.singular_strata:
        contrib = stratum_contribution(s, action)
        offset = n - s.dimension
        if not contrib.higher_orders_exact_zero:
            # k >= 1 corrections of this stratum start at j = offset + 2
            claimed = {j for j in claimed if j < offset + 2}
        if not contrib.primary or offset > j_max:
            continue
        coeffs[offset] += (4 * math.pi) ** (offset / 2) * contrib.leading_term
    return AsymptoticSeries(n, coeffs, "analytic", frozenset(claimed))


def detect_local_orientability_analytic(series: AsymptoticSeries, threshold: float = ZERO_THRESHOLD) -> bool:
    """True iff no claimed opposite-parity power carries a nonzero coefficient."""
    if series.j_max < series.n:
        raise InsufficientOrder(f"need j_max >= {series.n}, have {series.j_max}")
    for j in series.coefficients:
        if series.claimed and j not in series.claimed:
            continue
        if series.is_opposite_parity_index(j) and abs(series.absolute(j)) > threshold:
            return False
    return True
