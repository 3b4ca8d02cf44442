"""Frequency analysis and torus detection for the w-flow.

An orbit is judged by integrating it over ``[0, T]``, extracting one
refined frequency per angle on each half, and comparing the two: quasi
periodic motion on an invariant torus keeps its frequencies, chaotic
motion lets them diffuse.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import _kernels
from .dynamics import HamiltonianSpec
from .integrate import IntegratorConfig, Trajectory, integrate_w

MIN_SAMPLES = 256
PEAK_TIE = 1e-6
MAX_LATTICE_POINTS = 20_000_000
VERDICTS = ("torus", "resonant", "non_torus")


@dataclass(frozen=True)
class DiophantineParams:
    """Parameters of ``|<m, omega>| >= gamma |m|_1^{-tau}`` for ``0 < |m|_1 <= K_max``."""

    gamma: float
    tau: float
    K_max: int

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.K_max < 1:
            raise ValueError(f"K_max must be >= 1, got {self.K_max}")

    @classmethod
    def default_for(cls, omega: Sequence[float], K_max: int = 10) -> "DiophantineParams":
        omega = np.asarray(omega, dtype=float)
        return cls(0.01 * float(np.min(np.abs(omega))), float(omega.size), K_max)


@dataclass(frozen=True)
class DiophantineResult:
    passed: bool
    worst_m: tuple[int, ...]
    worst_ratio: float


def lattice_size(k: int, K: int) -> int:
    """Number of nonzero integer vectors in ``Z^k`` with ``|m|_1 <= K``."""
    total = sum(2 ** j * math.comb(k, j) * math.comb(K, j) for j in range(min(k, K) + 1))
    return total - 1


def lattice_shell(k: int, K: int) -> np.ndarray:
    """All ``m`` with ``0 < |m|_1 <= K`` in lexicographic order, shape ``(count, k)``."""
    count = lattice_size(k, K)
    if count > MAX_LATTICE_POINTS:
        raise OverflowError(
            f"resonance search over |m|_1 <= {K} in dimension {k} needs {count} "
            f"lattice points (limit {MAX_LATTICE_POINTS}); lower K_max")

    def build(dims: int, budget: int) -> np.ndarray:
        if dims == 1:
            return np.arange(-budget, budget + 1, dtype=np.int64).reshape(-1, 1)
        blocks = []
        for a in range(-budget, budget + 1):
            rest = build(dims - 1, budget - abs(a))
            blocks.append(np.hstack([np.full((rest.shape[0], 1), a, dtype=np.int64), rest]))
        return np.vstack(blocks)

    ms = build(k, K)
    return ms[np.any(ms != 0, axis=1)]


def diophantine_check(omega: Sequence[float], params: DiophantineParams) -> DiophantineResult:
    """Test ``omega`` against the truncated Diophantine condition.

    ``worst_ratio`` is ``min |<m, omega>| |m|_1^tau`` and ``worst_m`` the
    shortest lattice vector attaining it, signed so that its first nonzero
    entry is positive.
    """
    omega = np.asarray(omega, dtype=float)
    ms = lattice_shell(omega.size, params.K_max)
    dot = ms[:, 0] * omega[0]
    for j in range(1, omega.size):
        dot = dot + ms[:, j] * omega[j]
    norm1 = np.sum(np.abs(ms), axis=1)
    # scalar pow is correctly rounded on every platform, vectorized pow is not
    powers = np.array([float(j) ** params.tau for j in range(params.K_max + 1)])
    ratio = np.abs(dot) * powers[norm1]
    # exact resonances tie along the whole ray m, 2m, ...; report the shortest
    j = int(np.lexsort((norm1, ratio))[0])
    m = ms[j] if ms[j][np.flatnonzero(ms[j])[0]] > 0 else -ms[j]
    return DiophantineResult(bool(ratio[j] >= params.gamma), tuple(int(v) for v in m),
                             float(ratio[j]))


def _window(n: int, kind: str) -> np.ndarray:
    if kind == "hann":
        return np.hanning(n)
    if kind == "none":
        return np.ones(n)
    raise ValueError(f"unknown window {kind!r}; use 'hann' or 'none'")


def refine_frequency(times: np.ndarray, angle: np.ndarray, window: str = "hann") -> float:
    """Dominant frequency of ``exp(i angle(t))`` on a uniform time grid.

    The FFT peak gives a bracket of one bin either side; inside it the
    stationary point of the windowed correlation magnitude is located to
    a relative tolerance of 1e-12.
    """
    times = np.asarray(times, dtype=float)
    angle = np.asarray(angle, dtype=float)
    n = times.size
    if n < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n}")
    dt = np.diff(times)
    h = (times[-1] - times[0]) / (n - 1)
    if not h > 0 or np.max(np.abs(dt - h)) > 1e-9 * max(abs(h), 1.0):
        raise ValueError("frequency extraction needs a uniform, increasing time grid")
    tau = times - 0.5 * (times[0] + times[-1])
    a = _window(n, window) * np.exp(1j * angle)
    spectrum = np.abs(np.fft.fft(a))
    freqs = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    # a librating angle has mirror lines at +-nu of equal height; taking the
    # lowest |nu| and then the positive one keeps both halves of an orbit
    # on the same line
    top = np.flatnonzero(spectrum >= spectrum.max() * (1.0 - PEAK_TIE))
    peak = freqs[min(top, key=lambda j: (abs(freqs[j]), -freqs[j]))]
    width = 2.0 * np.pi / (n * h)
    a_re = np.ascontiguousarray(a.real)
    a_im = np.ascontiguousarray(a.imag)
    lo, hi = peak - width, peak + width
    xtol = 1e-12 * max(abs(peak), width)

    def slope(nu):
        return _kernels.correlation_slope(tau, a_re, a_im, nu)[1]

    s_lo, s_hi = slope(lo), slope(hi)
    if s_lo > 0 > s_hi:
        return float(brentq(slope, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps))
    res = minimize_scalar(
        lambda d: -_kernels.correlation_slope(tau, a_re, a_im, peak + d)[0],
        bounds=(-width, width), method="bounded", options={"xatol": xtol})
    return float(peak + res.x)


def extract_frequencies(traj: Trajectory, window: str = "hann") -> np.ndarray:
    """One refined frequency per angle from the unwrapped angle history."""
    return np.array([refine_frequency(traj.times, traj.phi_unwrapped[:, i], window)
                     for i in range(traj.k)])


@dataclass(frozen=True, eq=False)
class OrbitClassification:
    omega_first_half: np.ndarray
    omega_second_half: np.ndarray
    diffusion: float
    verdict: str
    nearest_resonance: tuple[int, ...] | None = None

    def __eq__(self, other):
        if not isinstance(other, OrbitClassification):
            return NotImplemented
        return (np.array_equal(self.omega_first_half, other.omega_first_half)
                and np.array_equal(self.omega_second_half, other.omega_second_half)
                and self.diffusion == other.diffusion and self.verdict == other.verdict
                and self.nearest_resonance == other.nearest_resonance)


@dataclass(frozen=True)
class ClassifierSettings:
    """Thresholds for :func:`classify_orbit`.

    ``resonance`` only flags near-exact low-order commensurabilities, so
    gamma is far below the defaults of :meth:`DiophantineParams.default_for`.
    """

    T_total: float = 2000.0
    tol_torus: float = 1e-5
    resonance: DiophantineParams = DiophantineParams(1e-6, 2.0, 10)
    window: str = "hann"


def classify_orbit(H: HamiltonianSpec, x0, cfg: IntegratorConfig,
                   settings: ClassifierSettings = ClassifierSettings()) -> OrbitClassification:
    """Torus / resonant / non-torus verdict for the w-orbit through ``x0``.

    Resonance is tested first so that exactly commensurate tori (which
    have zero diffusion) are reported as resonant rather than torus.
    """
    steps = max(1, int(round(settings.T_total / cfg.step)))
    traj = integrate_w(H, x0, replace(cfg, steps=steps))
    t_half = 0.5 * traj.times[-1]
    # the midpoint sample, if present, belongs to both windows
    first = traj.slice(traj.times <= t_half)
    second = traj.slice(traj.times >= t_half)
    w1 = extract_frequencies(first, settings.window)
    w2 = extract_frequencies(second, settings.window)
    scale = float(np.max(np.abs(w1)))
    spread = float(np.max(np.abs(w1 - w2)))
    if scale > 0:
        diffusion = spread / scale
    else:
        diffusion = 0.0 if spread == 0 else math.inf
    check = diophantine_check(w1, settings.resonance)
    if not check.passed:
        return OrbitClassification(w1, w2, diffusion, "resonant", check.worst_m)
    verdict = "torus" if diffusion < settings.tol_torus else "non_torus"
    return OrbitClassification(w1, w2, diffusion, verdict, None)


@dataclass(frozen=True)
class ScanGrid:
    """Uniform grid of initial actions at fixed angles and fixed z."""

    action_ranges: tuple[tuple[float, float], ...]
    counts: tuple[int, ...]
    phi0: tuple[float, ...]
    z0: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "action_ranges",
                           tuple((float(a), float(b)) for a, b in self.action_ranges))
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        object.__setattr__(self, "phi0", tuple(float(v) for v in self.phi0))
        object.__setattr__(self, "z0", tuple(float(v) for v in self.z0))
        k = len(self.action_ranges)
        if len(self.counts) != k or len(self.phi0) != k:
            raise ValueError("grid ranges, counts and phi0 must all have length k")
        if any(c < 1 for c in self.counts):
            raise ValueError("grid counts must be >= 1")

    @property
    def size(self) -> int:
        return int(np.prod(self.counts))

    def actions(self) -> np.ndarray:
        """Initial actions, shape ``(size, k)``, first action varying slowest."""
        axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(self.action_ranges, self.counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([g.reshape(-1) for g in mesh])

    def initial_states(self) -> np.ndarray:
        acts = self.actions()
        tail = np.concatenate([self.z0, self.phi0])
        return np.hstack([acts, np.broadcast_to(tail, (acts.shape[0], tail.size))])


@dataclass(frozen=True)
class MeasureScanResult:
    epsilon: float
    grid_size: int
    fraction_torus: float
    fraction_resonant: float
    fraction_non_torus: float

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "grid_size": self.grid_size,
            "fraction_torus": self.fraction_torus,
            "fraction_resonant": self.fraction_resonant,
            "fraction_non_torus": self.fraction_non_torus,
        }


def _classify_chunk(args):
    H, states, cfg, settings = args
    return [classify_orbit(H, x, cfg, settings) for x in states]


def frequency_map(H: HamiltonianSpec, grid: ScanGrid, cfg: IntegratorConfig,
                  settings: ClassifierSettings = ClassifierSettings(),
                  jobs: int = 1) -> list[OrbitClassification]:
    """Classify every grid orbit; the result order follows ``grid.actions()``.

    Orbits are independent, so they are split into contiguous chunks for
    ``jobs`` worker processes and reassembled in grid order.
    """
    if len(grid.z0) != H.m:
        raise ValueError(f"grid z0 has {len(grid.z0)} entries, system has m={H.m}")
    states = grid.initial_states()
    if jobs <= 1 or len(states) <= 1:
        return _classify_chunk((H, states, cfg, settings))
    n_chunks = min(len(states), 4 * jobs)
    chunks = [c for c in np.array_split(states, n_chunks) if len(c)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = pool.map(_classify_chunk, [(H, c, cfg, settings) for c in chunks])
        return [r for part in parts for r in part]


def summarize(epsilon: float, results: Sequence[OrbitClassification]) -> MeasureScanResult:
    n = len(results)
    counts = {v: 0 for v in VERDICTS}
    for r in results:
        counts[r.verdict] += 1
    return MeasureScanResult(
        epsilon=float(epsilon),
        grid_size=n,
        fraction_torus=counts["torus"] / n,
        fraction_resonant=counts["resonant"] / n,
        fraction_non_torus=counts["non_torus"] / n,
    )


def scan_measure(template: HamiltonianSpec, epsilon: float, grid: ScanGrid,
                 cfg: IntegratorConfig, settings: ClassifierSettings = ClassifierSettings(),
                 jobs: int = 1) -> MeasureScanResult:
    """Fractions of torus, resonant and non-torus orbits at perturbation ``epsilon``."""
    H = template.with_epsilon(epsilon)
    return summarize(epsilon, frequency_map(H, grid, cfg, settings, jobs))
