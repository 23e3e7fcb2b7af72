"""Exact Laplace spectra of torus and sphere quotients by invariant counting.

Flat case: the character e_k(x) = exp(2 pi i k.x) (lattice coordinates) pulls
back under x -> A x + b to exp(2 pi i k.b) e_{A^T k}, so the multiplicity of a
shell is the average over the group of the phases of its A^T-fixed vectors.
Sphere case: average of the SO(3) characters of the degree-l harmonics.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import gmpy2
import mpmath
import numpy as np
from scipy.special import gamma, gammaincc

from . import intlinalg as il
from .errors import NonIntegerMultiplicity, NonPositiveTime, ShellOverflow, UnsupportedDimension, UnsupportedGeometry
from .isometry import GroupAction, ModelGeometry

INTEGRALITY_TOL = 1e-9
MAX_ENUMERATED = 60_000_000  # box points per element before ShellOverflow
TRACE_PRECISION = 160  # bits for heat_trace_precise


def thread_count() -> int:
    env = os.environ.get("ORBISPEC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


@dataclass(frozen=True)
class SpectrumData:
    """Distinct eigenvalues up to ``cutoff`` with their multiplicities.

    ``labels`` holds the exact index of each eigenvalue: the integer shell
    form q (eigenvalue = 4 pi^2 q / norm_denominator) for tori, the degree l
    for the sphere.
    """

    entries: tuple[tuple[float, int], ...]
    cutoff: float
    geometry: ModelGeometry
    group_order: int
    labels: tuple[int, ...]
    norm_denominator: int = 1
    l_max: int | None = None
    max_integrality_error: float = 0.0

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([e for e, _ in self.entries])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([m for _, m in self.entries], dtype=np.int64)

    def __len__(self):
        return len(self.entries)

    def as_multiset(self) -> dict[int, int]:
        """Exact label -> multiplicity map."""
        return {lab: m for lab, (_, m) in zip(self.labels, self.entries)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eigenvalue", "multiplicity"])
        for e, m in self.entries:
            w.writerow([repr(float(e)), m])
        return buf.getvalue()


def _dual_form(geometry: ModelGeometry) -> tuple[list[list[int]], int]:
    """Integer matrix M and denominator D with |k|^2_dual = k^T M k / D."""
    ginv = il.inverse(geometry.gram)
    d = 1
    for row in ginv:
        for x in row:
            d = math.lcm(d, x.denominator)
    return [[int(x * d) for x in row] for row in ginv], d


def _slabs(form: np.ndarray, qmax: int, budget: int):
    """Yield arrays of integer z with z^T form z <= qmax, one slab of the
    first coordinate at a time."""
    m = form.shape[0]
    if m == 0:
        yield np.zeros((1, 0), dtype=np.int64)
        return
    inv = np.linalg.inv(form.astype(float))
    bounds = [int(math.floor(math.sqrt(max(qmax * inv[i, i], 0.0)) + 1e-9)) for i in range(m)]
    box = math.prod(2 * b + 1 for b in bounds)
    if box > budget:
        raise ShellOverflow(f"cutoff needs {box} lattice points, budget is {budget}")
    ranges = [np.arange(-b, b + 1, dtype=np.int64) for b in bounds]
    rest = np.stack(np.meshgrid(*ranges[1:], indexing="ij"), axis=-1).reshape(-1, m - 1) if m > 1 else None
    for z0 in ranges[0]:
        if rest is None:
            z = np.array([[z0]], dtype=np.int64)
        else:
            z = np.concatenate([np.full((rest.shape[0], 1), z0, dtype=np.int64), rest], axis=1)
        q = np.einsum("ij,jk,ik->i", z, form, z)
        keep = q <= qmax
        yield z[keep]


def _element_trace(linear: np.ndarray, translations: list[tuple[Fraction, ...]], M: np.ndarray, qmax: int, budget: int):
    """Per-shell sum over A^T-fixed dual vectors of the translation phases, for
    every element sharing the linear part ``linear``."""
    n = linear.shape[0]
    a_t_minus = (linear.T - np.eye(n, dtype=np.int64)).tolist()
    if all(x == 0 for row in a_t_minus for x in row):
        cols = il.identity(n)
    else:
        cols = il.integer_kernel_basis(a_t_minus, n)
    K = np.array(cols, dtype=np.int64).T.reshape(n, len(cols))  # columns span the fixed dual sublattice
    form = K.T @ M @ K
    # phase k.b with k = K z is z.c mod 1, kept exact as (z.num mod den) / den
    phases = []
    for b in translations:
        c = [sum(int(K[i, j]) * b[i] for i in range(n)) for j in range(K.shape[1])]
        den = 1
        for x in c:
            den = math.lcm(den, x.denominator)
        phases.append((np.array([int(x * den) for x in c], dtype=np.int64), den))
    counts = np.zeros(qmax + 1)
    re = np.zeros(qmax + 1)
    im = np.zeros(qmax + 1)
    for z in _slabs(form, qmax, budget):
        q = np.einsum("ij,jk,ik->i", z, form, z)
        for num, den in phases:
            if den == 1:
                counts += np.bincount(q, minlength=qmax + 1)
                continue
            ang = 2 * np.pi * ((z @ num) % den) / den
            re += np.bincount(q, weights=np.cos(ang), minlength=qmax + 1)
            im += np.bincount(q, weights=np.sin(ang), minlength=qmax + 1)
    return counts + re, im


def _rounded(raw: np.ndarray, imag: np.ndarray | None = None) -> tuple[np.ndarray, float]:
    mult = np.rint(raw)
    err = float(np.max(np.abs(raw - mult))) if raw.size else 0.0
    if imag is not None and imag.size:
        err = max(err, float(np.max(np.abs(imag))))
    if err > INTEGRALITY_TOL:
        raise NonIntegerMultiplicity(f"projector trace off an integer by {err:.3g}")
    if np.any(mult < 0):
        raise NonIntegerMultiplicity("negative multiplicity")
    return mult.astype(np.int64), err


def flat_orbifold_spectrum(action: GroupAction, cutoff: float, max_vectors: int = MAX_ENUMERATED) -> SpectrumData:
    geometry = action.geometry
    if not geometry.is_torus:
        raise UnsupportedGeometry("flat_orbifold_spectrum needs a torus geometry")
    if not cutoff >= 0:
        raise ValueError("cutoff must be nonnegative")
    M_list, D = _dual_form(geometry)
    M = np.array(M_list, dtype=np.int64)
    qmax = int(math.floor(cutoff * D / (4 * math.pi**2) * (1 + 1e-15)))
    # elements sharing a linear part share the fixed dual lattice
    by_linear: dict[tuple, list] = {}
    for g in action.elements:
        by_linear.setdefault(tuple(map(tuple, g.linear.tolist())), []).append(g.translation)
    jobs = [(np.array(k, dtype=np.int64), v) for k, v in by_linear.items()]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        parts = list(pool.map(lambda job: _element_trace(job[0], job[1], M, qmax, max_vectors), jobs))
    re = np.zeros(qmax + 1)
    im = np.zeros(qmax + 1)
    for r, i in parts:
        re += r
        im += i
    mult, err = _rounded(re / action.order, im / action.order)
    labels = np.nonzero(mult)[0]
    entries = tuple((4 * math.pi**2 * int(q) / D, int(mult[q])) for q in labels)
    return SpectrumData(entries, float(cutoff), geometry, action.order, tuple(int(q) for q in labels), D, None, err)


def sphere_character(linear: np.ndarray, l_values: np.ndarray) -> np.ndarray:
    """Trace of an O(3) element on the degree-l harmonics, for each l."""
    det = float(np.linalg.det(linear))
    rot = linear if det > 0 else -linear
    cos_theta = float(np.clip((np.trace(rot) - 1.0) / 2.0, -1.0, 1.0))
    theta = math.acos(cos_theta)
    lmax = int(l_values.max()) if l_values.size else 0
    m = np.arange(1, lmax + 1)
    partial = np.concatenate([[1.0], 1.0 + 2.0 * np.cumsum(np.cos(m * theta))])
    chi = partial[l_values]
    if det < 0:
        chi = chi * np.where(l_values % 2 == 0, 1.0, -1.0)
    return chi


def sphere_orbifold_spectrum(action: GroupAction, l_max: int) -> SpectrumData:
    geometry = action.geometry
    if geometry.is_torus:
        raise UnsupportedGeometry("sphere_orbifold_spectrum needs a sphere geometry")
    if geometry.dimension != 2:
        raise UnsupportedDimension("only S^2 quotients are supported")
    ls = np.arange(l_max + 1)
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        chis = list(pool.map(lambda g: sphere_character(np.asarray(g.linear), ls), action.elements))
    raw = np.sum(chis, axis=0) / action.order
    mult, err = _rounded(raw)
    r2 = geometry.radius**2
    keep = np.nonzero(mult)[0]
    entries = tuple((float(l * (l + 1) / r2), int(mult[l])) for l in keep)
    cutoff = l_max * (l_max + 1) / r2
    return SpectrumData(entries, cutoff, geometry, action.order, tuple(int(l) for l in keep), 1, l_max, err)


def dual_covering_radius_bound(geometry: ModelGeometry) -> float:
    """Half the length of the dual-basis diagonal; bounds the dual covering radius."""
    ginv = np.array(il.inverse(geometry.gram), dtype=float)
    return 0.5 * math.sqrt(float(np.trace(ginv)))


def flat_tail_bound(geometry: ModelGeometry, cutoff: float, t: float) -> float:
    """Upper bound on sum over dual vectors with 4 pi^2 |mu|^2 > cutoff of exp(-4 pi^2 |mu|^2 t).

    Each dual Voronoi cell lies within delta of its lattice point, so the sum is
    at most density * S_{n-1} * int_{R-delta}^inf r^{n-1} exp(-a (r - delta)_+^2) dr.
    """
    n = geometry.dimension
    a = 4 * math.pi**2 * t
    R = math.sqrt(cutoff) / (2 * math.pi)
    delta = dual_covering_radius_bound(geometry)
    density = geometry.cover_volume  # dual covolume is 1 / sqrt(det G)
    sphere_area = 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    lo = max(R - delta, 0.0)
    total = 0.0
    if lo < delta:
        total += (delta**n - lo**n) / n  # flat part of the integrand where r <= delta
    s0 = max(lo - delta, 0.0)
    for k in range(n):
        # int_{s0}^inf s^k e^{-a s^2} ds = Gamma((k+1)/2, a s0^2) / (2 a^((k+1)/2))
        h = (k + 1) / 2
        moment = gamma(h) * gammaincc(h, a * s0 * s0) / (2 * a**h)
        total += math.comb(n - 1, k) * delta ** (n - 1 - k) * moment
    return density * sphere_area * total


def sphere_tail_bound(l_max: int, radius: float, t: float) -> float:
    """Bound on sum_{l > l_max} (2l+1) exp(-l(l+1) t / r^2)."""
    s = t / radius**2
    explicit = 0.0
    L = l_max
    # the integral comparison needs the summand to be decreasing past L
    while (2 * L + 1) ** 2 * s <= 2:
        L += 1
        explicit += (2 * L + 1) * math.exp(-L * (L + 1) * s)
    return explicit + math.exp(-L * (L + 1) * s) / s


def heat_trace_partial(spectrum: SpectrumData, t: float) -> tuple[float, float]:
    """sum of mult * exp(-lambda t) over the stored spectrum, with a tail bound."""
    if not t > 0:
        raise NonPositiveTime(f"t must be positive, got {t}")
    ev = spectrum.eigenvalues
    value = float(np.sum(spectrum.multiplicities * np.exp(-ev * t)))
    if spectrum.geometry.is_torus:
        tail = flat_tail_bound(spectrum.geometry, spectrum.cutoff, t)
    else:
        tail = sphere_tail_bound(spectrum.l_max, spectrum.geometry.radius, t)
    return value, float(tail)


def heat_trace_precise(spectrum: SpectrumData, t: float) -> mpmath.mpf:
    """The stored part of the trace in TRACE_PRECISION-bit arithmetic.

    Eigenvalues are integer multiples of a base step (4 pi^2 / D for tori,
    1 / r^2 for the sphere), so exp(-lambda t) is a power of one exponential
    and the sum runs as a chain of multiplications.
    """
    if not t > 0:
        raise NonPositiveTime(f"t must be positive, got {t}")
    with gmpy2.context(gmpy2.get_context(), precision=TRACE_PRECISION):
        tt = gmpy2.mpfr(t)
        if spectrum.geometry.is_torus:
            pi = gmpy2.const_pi()
            x = gmpy2.exp(-4 * pi * pi * tt / spectrum.norm_denominator)
            powers = spectrum.labels
        else:
            x = gmpy2.exp(-tt / gmpy2.mpfr(spectrum.geometry.radius) ** 2)
            powers = [l * (l + 1) for l in spectrum.labels]
        steps: dict[int, gmpy2.mpfr] = {}
        total = gmpy2.mpfr(0)
        term = gmpy2.mpfr(1)
        prev = 0
        for q, (_, m) in zip(powers, spectrum.entries):
            d = q - prev
            if d:
                f = steps.get(d)
                if f is None:
                    f = steps[d] = x**d
                term *= f
                prev = q
            total += m * term
        man, exp = total.as_mantissa_exp()
    with mpmath.workprec(TRACE_PRECISION):
        return mpmath.ldexp(mpmath.mpf(int(man)), int(exp))
