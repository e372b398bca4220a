"""Spectral densities, the single-excitation amplitude and the memory functional m(t, τ).

All quantities live in the frame rotating with the free Hamiltonian, so the
bath correlation is f(u) = ∫ J(ω) e^{i(ω0 − ω)u} dω and the excited-state
amplitude obeys q̇(t) = −∫_0^t f(t − s) q(s) ds with q(0) = 1.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.signal import fftconvolve

from config.tolerances import TOLERANCES

from .errors import CutoffLeakageError, GridError, InputError, QuadratureError

logger = logging.getLogger(__name__)

RETRIEVER_SIGNS = {"singlet": 1.0, "triplet": -1.0}
_OHMIC_SERIES_TERMS = 10


def _require_positive(**values):
    for name, value in values.items():
        if not np.isfinite(value) or value <= 0:
            raise InputError(f"{name} must be a positive rate, got {value}")


@dataclass(frozen=True)
class SpectralDensity:
    """Base class; variants provide correlation(u) and laplace(w)."""

    def correlation(self, u) -> np.ndarray:
        raise NotImplementedError

    def laplace(self, w: complex) -> complex:
        raise NotImplementedError

    def fastest_rate(self) -> float:
        raise NotImplementedError


@dataclass(frozen=True)
class SingleMode(SpectralDensity):
    g: float
    omega0: float = 1.0

    def __post_init__(self):
        _require_positive(g=self.g, omega0=self.omega0)

    def correlation(self, u) -> np.ndarray:
        return np.full(np.shape(u), self.g**2, dtype=complex)

    def laplace(self, w: complex) -> complex:
        return self.g**2 / w

    def fastest_rate(self) -> float:
        return self.g


@dataclass(frozen=True)
class Lorentzian(SpectralDensity):
    """Damped-cavity density with 2 f(u) = γ0 λ e^{−λ|u|}."""

    gamma0: float
    lam: float
    omega0: float = 1.0

    def __post_init__(self):
        _require_positive(gamma0=self.gamma0, lam=self.lam, omega0=self.omega0)

    @classmethod
    def from_rabi_ratio(cls, ratio: float, lam: float = 1.0, omega0: float = 1.0) -> "Lorentzian":
        """Density whose vacuum Rabi frequency Ω equals ratio · λ."""
        _require_positive(ratio=ratio, lam=lam)
        return cls(gamma0=lam * (4 * ratio**2 + 1) / 2, lam=lam, omega0=omega0)

    @property
    def coupling_squared(self) -> float:
        return self.gamma0 * self.lam / 2

    @property
    def rabi_frequency(self) -> complex:
        """Ω = √(2γ0λ − λ²)/2, imaginary in the overdamped regime."""
        return np.sqrt(complex(2 * self.gamma0 * self.lam - self.lam**2)) / 2

    def correlation(self, u) -> np.ndarray:
        return (self.coupling_squared * np.exp(-self.lam * np.abs(np.asarray(u, dtype=float)))).astype(complex)

    def laplace(self, w: complex) -> complex:
        return self.coupling_squared / (w + self.lam)

    def fastest_rate(self) -> float:
        return max(self.lam, abs(self.rabi_frequency))

    def _sin_over(self, t):
        omega = self.rabi_frequency
        if abs(omega) < 1e-12:
            return np.asarray(t, dtype=complex)
        return np.sin(omega * np.asarray(t)) / omega

    def amplitude(self, t) -> np.ndarray:
        """Closed-form q(t) = e^{−λt/2}[cos Ωt + (λ/2Ω) sin Ωt]."""
        t = np.asarray(t, dtype=float)
        omega = self.rabi_frequency
        q = np.exp(-self.lam * t / 2) * (np.cos(omega * t) + self.lam / 2 * self._sin_over(t))
        return np.real(q)

    def memory_functional(self, t, tau, retriever: str = "singlet") -> np.ndarray:
        """Closed-form m(t, τ); the double integral factorizes as q̇(t) q̇(τ)/g²."""
        sign = _retriever_sign(retriever)
        t = np.asarray(t, dtype=float)
        tau = np.asarray(tau, dtype=float)
        g2 = self.coupling_squared
        memory = g2 * np.exp(-self.lam * (t + tau) / 2) * self._sin_over(t) * self._sin_over(tau)
        return np.abs(self.amplitude(t) + sign * np.real(memory)) ** 2


@dataclass(frozen=True)
class OhmicHardCutoff(SpectralDensity):
    """J(ω) = η ω on [0, ω_c]."""

    eta: float
    omega_c: float
    omega0: float = 1.0

    def __post_init__(self):
        _require_positive(eta=self.eta, omega_c=self.omega_c, omega0=self.omega0)

    def correlation(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        x = -1j * self.omega_c * u
        small = np.abs(self.omega_c * u) < 1e-2
        safe = np.where(small, 1.0, u)
        closed = (np.exp(x) * (1 - x) - 1) / safe**2
        series = np.zeros(u.shape, dtype=complex)
        for k in range(2, _OHMIC_SERIES_TERMS):
            series -= (k - 1) * (-1j * self.omega_c) ** k * u ** (k - 2) / math.factorial(k)
        return self.eta * np.exp(1j * self.omega0 * u) * np.where(small, series, closed)

    def laplace(self, w: complex) -> complex:
        z = complex(w) - 1j * self.omega0
        if abs(z.real) < 1e-8 * max(1.0, abs(z)):
            logger.warning(f"Laplace argument {w} is close to the branch cut of the Ohmic logarithm")
        log_ratio = np.log(z + 1j * self.omega_c) - np.log(z)
        return -1j * self.eta * self.omega_c + self.eta * z * log_ratio

    def fastest_rate(self) -> float:
        return max(self.omega_c, self.omega0)


@dataclass(frozen=True)
class Tabulated(SpectralDensity):
    """Sampled J(ω), linearly interpolated and zero outside the samples."""

    omegas: Tuple[float, ...]
    values: Tuple[float, ...]
    omega0: float = 1.0

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if omegas.ndim != 1 or omegas.shape != values.shape or len(omegas) < 2:
            raise InputError(f"Tabulated density needs matching 1-D samples, got {omegas.shape} and {values.shape}")
        if np.any(np.diff(omegas) <= 0):
            raise InputError("Tabulated frequencies must be strictly increasing")
        if np.any(values < 0):
            raise InputError(f"Tabulated J(ω) must be nonnegative, minimum {values.min()}")
        _require_positive(omega0=self.omega0)
        object.__setattr__(self, "omegas", tuple(omegas.tolist()))
        object.__setattr__(self, "values", tuple(values.tolist()))

    def density(self, omega):
        return np.interp(omega, self.omegas, self.values, left=0.0, right=0.0)

    def _quad(self, fn, **kwargs) -> float:
        lo, hi = self.omegas[0] - self.omega0, self.omegas[-1] - self.omega0
        with warnings.catch_warnings():
            warnings.simplefilter("error", IntegrationWarning)
            try:
                value, _ = quad(fn, lo, hi, limit=200, **kwargs)
            except IntegrationWarning as exc:
                logger.error(f"Quadrature of the tabulated density failed: {exc}")
                raise QuadratureError(f"Tabulated density quadrature did not converge: {exc}") from exc
        return value

    def correlation(self, u) -> np.ndarray:
        shifted = lambda x: self.density(x + self.omega0)
        out = []
        for ui in np.atleast_1d(np.asarray(u, dtype=float)):
            if ui == 0:
                out.append(complex(self._quad(shifted)))
                continue
            re = self._quad(shifted, weight="cos", wvar=ui)
            im = self._quad(shifted, weight="sin", wvar=ui)
            out.append(re - 1j * im)
        return np.asarray(out, dtype=complex).reshape(np.shape(u))

    def laplace(self, w: complex) -> complex:
        z = complex(w) - 1j * self.omega0
        kernel = lambda x: self.density(x + self.omega0) / (z + 1j * (x + self.omega0))
        re = self._quad(lambda x: np.real(kernel(x)))
        im = self._quad(lambda x: np.imag(kernel(x)))
        return complex(re, im)

    def fastest_rate(self) -> float:
        return max(abs(self.omegas[0] - self.omega0), abs(self.omegas[-1] - self.omega0), self.omega0)


def bath_correlation(sd: SpectralDensity, u) -> np.ndarray:
    return sd.correlation(u)


def laplace_f(sd: SpectralDensity, w: complex) -> complex:
    if complex(w).real <= 0:
        raise InputError(f"Laplace transform needs Re(w) > 0, got {w}")
    return sd.laplace(w)


def _retriever_sign(retriever: str) -> float:
    if retriever not in RETRIEVER_SIGNS:
        raise InputError(f"Retriever {retriever} not supported. Available retrievers: {list(RETRIEVER_SIGNS)}")
    return RETRIEVER_SIGNS[retriever]


@dataclass(frozen=True, eq=False)
class AmplitudeSolution:
    dt: float
    q: np.ndarray
    f: np.ndarray
    sd: Optional[SpectralDensity] = None
    endpoint_change: float = 0.0

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(len(self.q))

    @property
    def t_max(self) -> float:
        return self.dt * (len(self.q) - 1)

    def index(self, t: float) -> int:
        """Grid index of a time that lies on the grid."""
        k = t / self.dt
        i = int(round(k))
        if abs(k - i) > 1e-6 or i < 0 or i >= len(self.q):
            raise GridError(f"Time {t} is not on the solution grid (dt={self.dt}, t_max={self.t_max})")
        return i


def _volterra(f: np.ndarray, dt: float) -> np.ndarray:
    n_steps = len(f) - 1
    q = np.zeros(n_steps + 1, dtype=complex)
    q[0] = 1.0
    integral = 0.0
    denominator = 1 + dt**2 * f[0] / 4
    for n in range(n_steps):
        s = dt * (0.5 * f[n + 1] * q[0] + np.dot(f[n:0:-1], q[1:n + 1]))
        q[n + 1] = (q[n] - dt / 2 * (integral + s)) / denominator
        integral = s + dt / 2 * f[0] * q[n + 1]
    return q


def solve_amplitude(sd: SpectralDensity, t_max: float, dt: float, check_step: bool = True) -> AmplitudeSolution:
    """Integrate the amplitude equation with the product trapezoidal rule.

    Both the memory integral and the time derivative use the trapezoidal
    rule, which gives a second-order scheme.

    Args:
        sd: spectral density
        t_max: final time
        dt: grid step
        check_step: compare against the solution at step 2·dt and warn when the
            estimated change under halving dt exceeds 1e-5

    Returns:
        AmplitudeSolution on the grid 0, dt, ..., t_max
    """
    _require_positive(t_max=t_max, dt=dt)
    if dt * sd.fastest_rate() > 0.05:
        logger.warning(f"Step dt={dt} may not resolve the fastest rate {sd.fastest_rate():.4g} of the bath")
    n_steps = int(round(t_max / dt))
    f = np.asarray(sd.correlation(dt * np.arange(n_steps + 1)), dtype=complex)
    q = _volterra(f, dt)
    change = 0.0
    if check_step and n_steps >= 4:
        coarse = _volterra(f[::2], 2 * dt)
        m = len(coarse) - 1
        change = float(abs(q[2 * m] - coarse[m])) / 4
        if change > 1e-5:
            logger.warning(f"Halving dt={dt} is estimated to change the endpoint amplitude by {change:.2e}")
    overshoot = float(np.abs(q).max()) - 1
    if overshoot > 1e-6:
        logger.warning(f"Amplitude exceeds 1 by {overshoot:.2e}; refine dt")
    logger.info(f"Solved amplitude equation on {n_steps + 1} points up to t={n_steps * dt:.4g}")
    return AmplitudeSolution(dt=dt, q=q, f=f, sd=sd, endpoint_change=change)


def memory_surface(sol: AmplitudeSolution, i: int, retriever: str = "singlet") -> np.ndarray:
    """m(t_i, τ_j) for every τ_j with t_i + τ_j on the grid.

    The double integral ∫_0^t ∫_0^τ f(t + τ − r − s) q(r) q(s) dr ds is built
    from two trapezoidal convolutions.
    """
    sign = _retriever_sign(retriever)
    n = len(sol.q) - 1
    if not 0 <= i <= n:
        raise GridError(f"t index {i} outside the solution grid [0, {n}]")
    q, f, dt = sol.q, sol.f, sol.dt
    k_max = n - i
    inner = dt * fftconvolve(q[: i + 1], f)[i : i + k_max + 1]
    inner -= dt / 2 * (q[0] * f[i : i + k_max + 1] + q[i] * f[: k_max + 1])
    outer = dt * fftconvolve(q[: k_max + 1], inner)[: k_max + 1]
    outer -= dt / 2 * (q[0] * inner + q[: k_max + 1] * inner[0])
    return np.abs(q[i] + sign * outer) ** 2


def memory_functional(sol: AmplitudeSolution, t: float, tau: float, retriever: str = "singlet") -> float:
    """m(t, τ) from a solution whose grid contains t and t + τ."""
    i = sol.index(t)
    j = sol.index(tau)
    if i + j >= len(sol.q):
        raise GridError(f"t + tau = {t + tau} exceeds the solution grid end {sol.t_max}")
    return float(memory_surface(sol, i, retriever)[j])


def singlemode_fock_m(g: float, t, tau, n: int, retriever: str = "singlet"):
    """Closed-form m(t, τ; n) for a single resonant mode initially in Fock state n."""
    if n < 0:
        raise InputError(f"Fock number must be nonnegative, got {n}")
    sign = _retriever_sign(retriever)
    t = np.asarray(t, dtype=float)
    tau = np.asarray(tau, dtype=float)
    a = np.sqrt(n + 1) * g
    value = sign * np.sin(a * t) * np.sin(a * tau) + np.cos(a * t) * np.cos(np.sqrt(n) * g * tau)
    return value**2


def thermal_cutoff(beta: float, omega0: float = 1.0, tail: float = TOLERANCES["thermal_tail"]) -> int:
    """Largest Fock number kept so that the Gibbs tail x^{n+1} stays below tail."""
    _require_positive(beta=beta, omega0=omega0)
    x = np.exp(-beta * omega0)
    return max(0, int(np.floor(np.log(tail) / np.log(x))))


def thermal_weights(beta: float, cutoff: Optional[int] = None, omega0: float = 1.0) -> np.ndarray:
    """Normalized Gibbs weights p_n ∝ xⁿ, x = e^{−βω0}, for n = 0..cutoff."""
    _require_positive(beta=beta, omega0=omega0)
    x = np.exp(-beta * omega0)
    if cutoff is None:
        cutoff = thermal_cutoff(beta, omega0)
    if x ** (cutoff + 1) >= TOLERANCES["thermal_tail"]:
        raise CutoffLeakageError(
            f"Fock cutoff {cutoff} leaves Gibbs tail {x ** (cutoff + 1):.2e} at beta={beta}; "
            f"need at least {thermal_cutoff(beta, omega0)}"
        )
    p = (1 - x) * x ** np.arange(cutoff + 1)
    return p / p.sum()


def singlemode_thermal_m(
    g: float,
    t,
    tau,
    beta: float,
    cutoff: Optional[int] = None,
    omega0: float = 1.0,
    retriever: str = "singlet",
):
    """Gibbs mixture Σ_n p_n m(t, τ; n)."""
    p = thermal_weights(beta, cutoff, omega0)
    return sum(pn * singlemode_fock_m(g, t, tau, n, retriever) for n, pn in enumerate(p))
