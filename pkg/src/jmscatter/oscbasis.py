"""Radial oscillator basis and the analytic free-motion coefficients.

Internally everything runs in oscillator units: energies in multiples of
hbar*omega, momentum as the dimensionless p = sqrt(2*E/hbar*omega). Matrix
elements carrying physical units (MeV, fm^2) say so in their docstrings.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, gammasgn

from .errors import NumericalError, SeriesConvergenceError

#: hbar^2/mu for the neutron-proton system in MeV fm^2 (mu = m_N/2).
DEFAULT_MASS_CONSTANT = 2.0 * 41.47105

# Direct series summation of 1F1 is reliable up to this p^2; larger real
# arguments go through the log-scaled branches.
_SERIES_ZMAX = 200.0
_SERIES_TOL = 1e-15
_SERIES_CAP = 500

# Past n*p^2 of about this size the direct series loses exp(2*sqrt(n*p^2))
# to cancellation, so the three-term recursion takes over (its n=0,1 seeds
# are one- and two-term polynomials, exact at any argument).
_RECURSION_THRESHOLD = 20.0

_MILLER_SEED = 1e-250
_MILLER_CAP = 4_000_000


@dataclass(frozen=True)
class OscillatorBasis:
    """Oscillator basis parameters for one partial wave.

    hbar_omega -- level spacing in MeV.
    l -- orbital angular momentum.
    mass_constant -- hbar^2/mu in MeV fm^2; together with hbar_omega it fixes
        the oscillator radius r0 = sqrt(mass_constant/hbar_omega).
    """

    hbar_omega: float
    l: int = 0
    mass_constant: float = DEFAULT_MASS_CONSTANT

    def __post_init__(self):
        if not self.hbar_omega > 0.0:
            raise ValueError("hbar_omega must be positive")
        if self.l != int(self.l) or self.l < 0:
            raise ValueError("l must be a non-negative integer")
        if not self.mass_constant > 0.0:
            raise ValueError("mass_constant must be positive")

    @property
    def r0(self) -> float:
        return math.sqrt(self.mass_constant / self.hbar_omega)

    def momentum(self, energy_mev):
        """Dimensionless momentum for a cm energy in MeV.

        Positive float above threshold, i*kappa (complex) below, and the
        principal branch for complex energies.
        """
        e = 2.0 * energy_mev / self.hbar_omega
        if isinstance(energy_mev, complex):
            return cmath.sqrt(e)
        if e >= 0.0:
            return math.sqrt(e)
        return 1j * math.sqrt(-e)


def _check_n(n):
    if n != int(n) or n < 0:
        raise ValueError("n must be a non-negative integer")


def _is_complex(p) -> bool:
    return isinstance(p, (complex, np.complexfloating)) and p.imag != 0.0


# Kinetic energy in units of hbar_omega; tridiagonal. The off-diagonal is
# negative with the (-1)^n phase baked into form_factor.
def _t_diag(n, l):
    return 0.5 * (2.0 * n + l + 1.5)


def _t_off(n, l):
    return -0.5 * math.sqrt((n + 1.0) * (n + l + 1.5))


def kinetic_matrix_element(basis: OscillatorBasis, n: int, nprime: int) -> float:
    """Kinetic matrix element <n l|T|n' l> in MeV."""
    _check_n(min(n, nprime))
    lo, hi = sorted((n, nprime))
    if hi == lo:
        return basis.hbar_omega * _t_diag(lo, basis.l)
    if hi == lo + 1:
        return basis.hbar_omega * _t_off(lo, basis.l)
    return 0.0


def kinetic_matrix(basis: OscillatorBasis, size: int) -> np.ndarray:
    """Kinetic matrix on n = 0..size-1, MeV."""
    t = np.zeros((size, size))
    for n in range(size):
        t[n, n] = _t_diag(n, basis.l)
        if n + 1 < size:
            t[n, n + 1] = t[n + 1, n] = _t_off(n, basis.l)
    return basis.hbar_omega * t


def r2_matrix_element(basis: OscillatorBasis, n: int, nprime: int) -> float:
    """Matrix element <n l|r^2|n' l> in fm^2. Tridiagonal, off-diagonal
    positive (opposite sign to the kinetic one under the same phase)."""
    _check_n(min(n, nprime))
    lo, hi = sorted((n, nprime))
    r2 = basis.r0 ** 2
    if hi == lo:
        return r2 * (2.0 * lo + basis.l + 1.5)
    if hi == lo + 1:
        return r2 * math.sqrt((lo + 1.0) * (lo + basis.l + 1.5))
    return 0.0


def form_factor(basis: OscillatorBasis, n: int, r):
    """Radial oscillator function u_nl(r), unit L2 norm in r (fm).

    Includes the (-1)^n phase; this is the convention under which the
    kinetic off-diagonal is negative and the sine-like coefficients below
    solve the free recursion with no extra alternation.
    """
    _check_n(n)
    r = np.asarray(r, dtype=float)
    l = basis.l
    x = (r / basis.r0) ** 2
    lg = 0.5 * (math.log(2.0) + gammaln(n + 1) - gammaln(n + l + 1.5))
    lg -= 0.5 * math.log(basis.r0)
    sign = -1.0 if n % 2 else 1.0
    poly = eval_genlaguerre(n, l + 0.5, x)
    return sign * math.exp(lg) * (r / basis.r0) ** (l + 1) * np.exp(-x / 2.0) * poly


def _kummer_sum(a, b, z):
    term = 1.0
    total = 1.0
    for k in range(_SERIES_CAP):
        term = term * ((a + k) * z) / ((b + k) * (k + 1.0))
        total = total + term
        if abs(term) <= _SERIES_TOL * abs(total):
            return total
    raise SeriesConvergenceError("1F1 series did not settle; argument too large")


def _hyp1f1(a, b, z):
    # Kummer's transformation keeps every term of the sum one-signed for
    # Re z < 0, which is what makes the bound-state region stable.
    zr = z.real if isinstance(z, complex) else z
    if zr < 0.0:
        ez = cmath.exp(z) if isinstance(z, complex) else math.exp(z)
        return ez * _kummer_sum(b - a, b, -z)
    return _kummer_sum(a, b, z)


def _s_prefactor_log(n, l):
    return 0.5 * (math.log(2.0) + gammaln(n + l + 1.5) - gammaln(n + 1)) - gammaln(l + 1.5)


def _c_prefactor(n, l):
    sg = (1.0 if l % 2 == 0 else -1.0) * gammasgn(0.5 - l)
    lm = 0.5 * (math.log(2.0) + gammaln(n + 1) - gammaln(n + l + 1.5)) - gammaln(0.5 - l)
    return sg, lm


def _s_direct(basis, n, p):
    l = basis.l
    z = p * p
    hyp = _hyp1f1(-float(n), l + 1.5, z)
    if _is_complex(p):
        return cmath.exp(_s_prefactor_log(n, l) - z / 2.0) * p ** (l + 1) * hyp
    return math.exp(_s_prefactor_log(n, l) - z / 2.0) * p ** (l + 1) * hyp


def _c_direct(basis, n, p):
    l = basis.l
    z = p * p
    sg, lm = _c_prefactor(n, l)
    hyp = _hyp1f1(-(n + l + 0.5), 0.5 - l, z)
    if l == 0:
        pl = 1.0
    else:
        pl = p ** (-l)
    if _is_complex(p):
        return sg * cmath.exp(lm - z / 2.0) * pl * hyp
    return sg * math.exp(lm - z / 2.0) * pl * hyp


def s_solution(basis: OscillatorBasis, n: int, p):
    """Sine-like expansion coefficient S_nl(p) of the free solution.

    Regular at p = 0; a polynomial in p^2 times p^(l+1) exp(-p^2/2). Real p
    returns a float, complex p a complex number.
    """
    _check_n(n)
    if _is_complex(p):
        z = complex(p) ** 2
        if z.real > _SERIES_ZMAX:
            raise NumericalError("p^2 too large off the real axis; not supported")
        if z.real > 0.0 and n * abs(z) > _RECURSION_THRESHOLD:
            return complex(s_solution_seq(basis, n, p)[n])
        return _s_direct(basis, n, complex(p))
    p = float(p.real if isinstance(p, complex) else p)
    z = p * p
    if z > _SERIES_ZMAX:
        sg, lm = s_solution_log(basis, n, p)
        # decays like exp(-p^2/2); underflow to zero is the right limit
        return sg * math.exp(lm) if lm > -745.0 else 0.0
    if n * z > _RECURSION_THRESHOLD:
        return float(s_solution_seq(basis, n, p)[n])
    return _s_direct(basis, n, p)


def c_solution(basis: OscillatorBasis, n: int, p):
    """Cosine-like expansion coefficient C_nl(p) of the free solution.

    Irregular partner of s_solution: same recursion for n >= 1, and a unit
    Casorati bracket with it. Diverges like p^-l at threshold for l > 0.
    """
    _check_n(n)
    if _is_complex(p):
        z = complex(p) ** 2
        if z.real > _SERIES_ZMAX:
            raise NumericalError("p^2 too large off the real axis; not supported")
        if z.real > 0.0 and n * abs(z) > _RECURSION_THRESHOLD:
            return complex(c_solution_seq(basis, n, p)[n])
        return _c_direct(basis, n, complex(p))
    p = float(p.real if isinstance(p, complex) else p)
    z = p * p
    if z > _SERIES_ZMAX:
        sg, lm = c_solution_log(basis, n, p)
        if lm > 709.0:
            raise NumericalError("C overflows at this p; use c_solution_log")
        return sg * math.exp(lm)
    if n * z > _RECURSION_THRESHOLD:
        return float(c_solution_seq(basis, n, p)[n])
    return _c_direct(basis, n, p)


def c_plus_minus(basis: OscillatorBasis, n: int, p, sign: int = +1) -> complex:
    """Outgoing (+) or incoming (-) combination C_nl(p) +- i S_nl(p).

    Formed directly from the two real solutions; on the positive imaginary
    axis this cancels catastrophically as n grows, use c_plus_seq there.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    c = c_solution(basis, n, p)
    s = s_solution(basis, n, p)
    return complex(c) + 1j * sign * complex(s)


def _seq_recur(basis, n_max, p, seed0, seed1, dtype):
    l = basis.l
    z = p * p
    e = z / 2.0
    out = np.empty(n_max + 1, dtype=dtype)
    out[0] = seed0
    if n_max >= 1:
        out[1] = seed1
    for n in range(1, n_max):
        out[n + 1] = -((_t_diag(n, l) - e) * out[n] + _t_off(n - 1, l) * out[n - 1]) / _t_off(n, l)
    return out


def s_solution_seq(basis: OscillatorBasis, n_max: int, p) -> np.ndarray:
    """S_nl(p) for n = 0..n_max via the free three-term recursion.

    The sine-like solution is never subdominant when moving up in n (it is
    oscillatory for real p and the growing branch for p = i*kappa), so the
    upward sweep is stable.
    """
    _check_n(n_max)
    if _is_complex(p):
        p = complex(p)
        if (p * p).real > _SERIES_ZMAX:
            raise NumericalError("p^2 too large off the real axis; not supported")
        dtype = complex
    else:
        p = float(p.real if isinstance(p, complex) else p)
        if p * p > 2.0 * 700.0:
            raise NumericalError("seed underflow at this p; nothing representable")
        dtype = float
    seed0 = _s_direct(basis, 0, p)
    seed1 = _s_direct(basis, 1, p) if n_max >= 1 else 0.0
    return _seq_recur(basis, n_max, p, seed0, seed1, dtype)


def c_solution_seq(basis: OscillatorBasis, n_max: int, p) -> np.ndarray:
    """C_nl(p) for n = 0..n_max via the same recursion.

    Stable upward as well: C contains the dominant branch everywhere. Only
    the outgoing combination C + iS at imaginary p decays, and that one has
    its own backward scheme in c_plus_seq.
    """
    _check_n(n_max)
    if _is_complex(p):
        p = complex(p)
        if (p * p).real > _SERIES_ZMAX:
            raise NumericalError("p^2 too large off the real axis; not supported")
        dtype = complex
        seed0 = _c_direct(basis, 0, p)
        seed1 = _c_direct(basis, 1, p) if n_max >= 1 else 0.0
    else:
        p = float(p.real if isinstance(p, complex) else p)
        z = p * p
        dtype = float
        if z > _SERIES_ZMAX:
            seeds = []
            for n in (0, 1):
                sg, lm = c_solution_log(basis, n, p)
                if lm > 700.0:
                    raise NumericalError("C overflows at this p; stay with c_solution_log")
                seeds.append(sg * math.exp(lm))
            seed0, seed1 = seeds
        else:
            seed0 = _c_direct(basis, 0, p)
            seed1 = _c_direct(basis, 1, p) if n_max >= 1 else 0.0
    return _seq_recur(basis, n_max, p, seed0, seed1, dtype)


def c_plus_seq(basis: OscillatorBasis, n_max: int, p) -> np.ndarray:
    """Decaying combination C_nl + i S_nl on the positive imaginary axis,
    n = 0..n_max, as a real array (the combination is real there).

    Backward (Miller-type) recursion: starting high enough above n_max that
    the admixed growing branch decays below machine precision on the way
    down, then normalizing against direct small-n values. The start offset
    solves exp(-4*kappa*(sqrt(n_start)-sqrt(n_max))) < 1e-17.
    """
    _check_n(n_max)
    p = complex(p)
    if p.real != 0.0 or p.imag <= 0.0:
        raise ValueError("c_plus_seq expects p = i*kappa with kappa > 0")
    kappa = p.imag
    l = basis.l
    e = -(kappa * kappa) / 2.0
    n_start = int((math.sqrt(n_max + 1.0) + 9.79 / kappa) ** 2) + 16
    if n_start > _MILLER_CAP:
        raise NumericalError(
            "backward recursion would need n_start=%d; kappa too small" % n_start
        )
    y = np.zeros(n_start + 2)
    y[n_start] = _MILLER_SEED
    for n in range(n_start - 1, -1, -1):
        y[n] = -((_t_diag(n + 1, l) - e) * y[n + 1] + _t_off(n + 1, l) * y[n + 2]) / _t_off(n, l)
        if abs(y[n]) > 1e250:
            y[n:] *= 1e-250
    # normalize on the small-n entry with the largest direct value; direct
    # cancellation there is at most a digit or two
    best, scale = -1.0, 0.0
    for n in range(0, min(4, n_max) + 1):
        ref = (complex(_c_direct(basis, n, p)) + 1j * complex(_s_direct(basis, n, p))).real
        if abs(ref) > best:
            best, scale = abs(ref), ref / y[n]
    return y[: n_max + 1] * scale


def _poly1f1_log(n, b, z):
    # alternating polynomial sum, carried in log space; fine while the last
    # terms dominate (z well above n), which is the only regime that calls it
    logs = np.empty(n + 1)
    logs[0] = 0.0
    for k in range(n):
        logs[k + 1] = logs[k] + math.log((n - k) * z / ((b + k) * (k + 1.0)))
    m = logs.max()
    total = 0.0
    for k in range(n + 1):
        total += (-1.0 if k % 2 else 1.0) * math.exp(logs[k] - m)
    if abs(total) < 1e-6:
        raise NumericalError("alternating sum lost precision; p^2 too close to n")
    return math.copysign(1.0, total), m + math.log(abs(total))


def _hyp1f1_asym_log(a, b, z):
    # 1F1(a;b;z) ~ Gamma(b)/Gamma(a) e^z z^(a-b) * 2F0-type tail, z >> 1
    s = 1.0
    t = 1.0
    for k in range(64):
        step = (b - a + k) * (1.0 - a + k) / ((k + 1.0) * z)
        if abs(step) >= 1.0:
            break
        t *= step
        s += t
        if abs(t) <= 1e-17 * abs(s):
            break
    sign = gammasgn(b) * gammasgn(a) * math.copysign(1.0, s)
    logm = gammaln(b) - gammaln(a) + z + (a - b) * math.log(z) + math.log(abs(s))
    return sign, logm


def s_solution_log(basis: OscillatorBasis, n: int, p):
    """(sign, log magnitude) of S_nl at real p > 0; usable at any p^2."""
    _check_n(n)
    p = float(p)
    if p <= 0.0:
        raise ValueError("p must be positive")
    z = p * p
    l = basis.l
    if z <= _SERIES_ZMAX and n * z <= _RECURSION_THRESHOLD:
        val = _s_direct(basis, n, p)
        if val == 0.0:
            raise NumericalError("S underflowed; use the pieces separately")
        return math.copysign(1.0, val), math.log(abs(val))
    sg, lm = _poly1f1_log(n, l + 1.5, z)
    return sg, _s_prefactor_log(n, l) + (l + 1) * math.log(p) - z / 2.0 + lm


def c_solution_log(basis: OscillatorBasis, n: int, p):
    """(sign, log magnitude) of C_nl at real p > 0; usable at any p^2."""
    _check_n(n)
    p = float(p)
    if p <= 0.0:
        raise ValueError("p must be positive")
    z = p * p
    l = basis.l
    if z <= _SERIES_ZMAX:
        val = c_solution(basis, n, p)
        return math.copysign(1.0, val), math.log(abs(val))
    sg_a, lm_a = _hyp1f1_asym_log(-(n + l + 0.5), 0.5 - l, z)
    csg, clm = _c_prefactor(n, l)
    return csg * sg_a, clm - l * math.log(p) - z / 2.0 + lm_a


def radial_function(basis: OscillatorBasis, coefficients, r) -> np.ndarray:
    """Radial wave function u(r) = sum_n c_n u_nl(r) on a grid r (fm).

    Single pass of the Laguerre recurrence on unscaled polynomial values;
    their magnitude is folded into a per-point log scale every few steps
    and meets the Gaussian only in each mode's contribution. Folding the
    Gaussian into the seeds instead would underflow at (r/r0)^2 beyond
    ~1400 and silently zero the large-n modes that still live out there.
    """
    c = np.asarray(coefficients, dtype=float)
    r = np.asarray(r, dtype=float)
    l = basis.l
    alpha = l + 0.5
    x = (r / basis.r0) ** 2
    with np.errstate(divide="ignore"):
        base_log = -x / 2.0 + (l + 1) * np.log(r / basis.r0) - 0.5 * math.log(basis.r0)
    w = math.sqrt(2.0) * math.exp(-0.5 * gammaln(l + 1.5))
    if c.size == 0:
        return np.zeros_like(r)
    ls = np.zeros_like(x)
    sc = np.exp(base_log)
    row_prev = np.ones_like(x)
    acc = (c[0] * w) * sc
    if c.size > 1:
        row = 1.0 + alpha - x
        w *= -math.sqrt(1.0 / (1.0 + alpha))
        acc = acc + (c[1] * w) * (sc * row)
        for k in range(2, c.size):
            row, row_prev = ((2.0 * k - 1.0 + alpha - x) * row - (k - 1.0 + alpha) * row_prev) / k, row
            if k % 8 == 0:
                scale = np.maximum(np.abs(row), 1.0)
                row = row / scale
                row_prev = row_prev / scale
                ls += np.log(scale)
                sc = np.exp(ls + base_log)
            w *= -math.sqrt(k / (k + alpha))
            acc = acc + (c[k] * w) * (sc * row)
    return acc
