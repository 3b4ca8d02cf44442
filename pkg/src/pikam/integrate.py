"""Time integration of the w-flow and the Omega-flow.

``splitting2`` is the Strang (leapfrog) splitting of ``H(I) + eps H1(phi)``
into exact kicks and drifts.  ``midpoint`` is the implicit midpoint rule,
solved by fixed-point iteration with a Newton fallback.  Angles are kept
unwrapped internally; :class:`Trajectory` exposes both views.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .dynamics import HamiltonianSpec, omega_velocity_vector
from .errors import ConvergenceError, DegenerateFormError
from .geometry import (
    NONDEGENERATE_TOL,
    SymplecticFormSpec,
    symplectic_matrix_at,
    symplectic_matrix_derivatives,
)
from .state import PhasePoint, as_vector, wrap_angles

METHODS = ("splitting2", "midpoint")


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "splitting2"
    step: float = 0.01
    steps: int = 1000
    newton_tol: float = 1e-13
    newton_max_iter: int = 50
    record_every: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not (self.step > 0 and np.isfinite(self.step)):
            raise ValueError(f"step must be positive, got {self.step}")
        if self.steps < 1 or self.record_every < 1 or self.newton_max_iter < 1:
            raise ValueError("steps, record_every and newton_max_iter must be >= 1")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded states of one integration.

    ``phi_unwrapped`` is the continuous angle history; ``phi`` gives the
    wrapped view used by :class:`PhasePoint`.
    """

    times: np.ndarray
    I: np.ndarray
    z: np.ndarray
    phi_unwrapped: np.ndarray
    energy: np.ndarray

    def __len__(self):
        return self.times.size

    @property
    def k(self) -> int:
        return self.I.shape[1]

    @property
    def m(self) -> int:
        return self.z.shape[1]

    @property
    def phi(self) -> np.ndarray:
        return wrap_angles(self.phi_unwrapped.copy())

    def point(self, j: int) -> PhasePoint:
        return PhasePoint(self.I[j], self.z[j], self.phi_unwrapped[j])

    @property
    def points(self) -> list[PhasePoint]:
        return [self.point(j) for j in range(len(self))]

    def slice(self, sel) -> "Trajectory":
        return Trajectory(self.times[sel], self.I[sel], self.z[sel],
                          self.phi_unwrapped[sel], self.energy[sel])

    def energy_error(self) -> np.ndarray:
        return np.abs(self.energy - self.energy[0])

    def write_csv(self, path):
        """Write ``t,I_1..,z_1..,phi_1..,energy`` rows at 17 significant digits."""
        k, m = self.k, self.m
        header = (["t"] + [f"I_{i + 1}" for i in range(k)] + [f"z_{j + 1}" for j in range(m)]
                  + [f"phi_{i + 1}" for i in range(k)] + ["energy"])
        table = np.column_stack([self.times, self.I, self.z, self.phi, self.energy])
        lines = [",".join(header)]
        lines.extend(",".join(f"{v:.17g}" for v in row) for row in table)
        atomic_write_text(path, "\n".join(lines) + "\n")


def atomic_write_text(path, text: str):
    """Write via a temp file in the target directory and rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _packed_scaled(field, c):
    coeff, powers, wave, phase = field.packed
    return (coeff * c, powers, wave, phase)


def _run_w(H: HamiltonianSpec, x0: np.ndarray, h: float, steps: int, method: str,
           record_every: int, tol: float, max_iter: int):
    k, m = H.k, H.m
    eff = H.effective.packed
    if method == "splitting2":
        if not H.is_separable():
            raise ValueError("splitting2 needs H(I) + eps H1(phi); the perturbation "
                             "depends on the actions, use midpoint")
        pert = _packed_scaled(H.perturbation, H.epsilon)
        return (*_kernels.splitting_run(*H.base.packed, *pert, *eff, k, m, x0, h,
                                        steps, record_every), -1)
    return _kernels.midpoint_run(*eff, k, m, x0, h, steps, record_every, tol, max_iter)


def _check_state(H: HamiltonianSpec, x0) -> np.ndarray:
    x0 = as_vector(x0).copy()
    if x0.size != 2 * H.k + H.m:
        raise ValueError(f"initial state has {x0.size} coordinates, expected {2 * H.k + H.m}")
    return x0


def integrate_w(H: HamiltonianSpec, x0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate ``I' = -dH'/dphi``, ``z' = 0``, ``phi' = dH'/dI``.

    The z block of every recorded state is a verbatim copy of ``x0.z``.
    """
    x0 = _check_state(H, x0)
    idx, xs, energy, failed = _run_w(H, x0, cfg.step, cfg.steps, cfg.method,
                                     cfg.record_every, cfg.newton_tol, cfg.newton_max_iter)
    if failed >= 0:
        raise ConvergenceError(
            f"implicit midpoint did not converge at step {failed} "
            f"after {cfg.newton_max_iter} iterations", step=int(failed))
    k, m = H.k, H.m
    z = np.broadcast_to(x0[k:k + m], (idx.size, m)).copy()
    return Trajectory(idx * cfg.step, xs[:, :k], z, xs[:, k + m:], energy)


def advance_w(H: HamiltonianSpec, x0, h: float, steps: int, method: str = "splitting2",
              tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
    """Final flat state after ``steps`` steps of signed size ``h`` (angles unwrapped)."""
    x0 = _check_state(H, x0)
    _, xs, _, failed = _run_w(H, x0, h, steps, method, steps, tol, max_iter)
    if failed >= 0:
        raise ConvergenceError(f"implicit midpoint did not converge at step {failed}",
                               step=int(failed))
    return xs[-1]


class _OmegaSystem:
    """Velocity and its Jacobian for the Omega-flow ``M(x) v = grad H'(x)``."""

    def __init__(self, H: HamiltonianSpec, form: SymplecticFormSpec):
        self.H = H
        self.form = form

    def matrix(self, x) -> np.ndarray:
        M = symplectic_matrix_at(self.form, x)
        if abs(np.linalg.det(M)) <= NONDEGENERATE_TOL:
            raise DegenerateFormError(f"degenerate form at point {x.tolist()}")
        return M

    def velocity(self, x) -> np.ndarray:
        return omega_velocity_vector(self.H, self.form, x)

    def jacobian(self, x) -> np.ndarray:
        # d_c v = M^{-1} (Hess[:, c] - dM[c] v)
        M = self.matrix(x)
        v = np.linalg.solve(M, self.H.gradient(x))
        dM = symplectic_matrix_derivatives(self.form, x)
        rhs = self.H.effective.hessian(x) - np.einsum("cab,b->ac", dM, v)
        return np.linalg.solve(M, rhs)


def _midpoint_step(system: _OmegaSystem, x: np.ndarray, h: float, tol: float,
                   max_iter: int) -> np.ndarray | None:
    d = h * system.velocity(x)
    for it in range(max_iter):
        y = x + 0.5 * d
        if it < 10:
            nxt = h * system.velocity(y)
            change = np.max(np.abs(nxt - d))
            scale = max(1.0, np.max(np.abs(nxt)))
            d = nxt
        else:
            res = d - h * system.velocity(y)
            jac = np.eye(x.size) - 0.5 * h * system.jacobian(y)
            step = np.linalg.solve(jac, res)
            d = d - step
            change = np.max(np.abs(step))
            scale = max(1.0, np.max(np.abs(d)))
        if change <= tol * scale:
            return x + d
    return None


def integrate_omega(H: HamiltonianSpec, form: SymplecticFormSpec, x0,
                    cfg: IntegratorConfig) -> Trajectory:
    """Implicit midpoint for the Hamilton equation of ``H'`` under ``Omega``.

    Symplectic when the form components are constant; otherwise the energy
    log in the trajectory shows whatever drift occurs.
    """
    if cfg.method != "midpoint":
        raise ValueError("the Omega-flow is integrated with method='midpoint' only")
    chart = form.chart
    if (H.k, H.m) != (chart.k, chart.m):
        raise ValueError("Hamiltonian does not match the form's chart")
    x = _check_state(H, x0)
    system = _OmegaSystem(H, form)
    k, m = chart.k, chart.m
    rec_t, rec_x, rec_e = [0], [x.copy()], [H.energy(x)]
    for s in range(1, cfg.steps + 1):
        nxt = _midpoint_step(system, x, cfg.step, cfg.newton_tol, cfg.newton_max_iter)
        if nxt is None:
            raise ConvergenceError(
                f"implicit midpoint did not converge at step {s} "
                f"after {cfg.newton_max_iter} iterations", step=s)
        x = nxt
        if s % cfg.record_every == 0 or s == cfg.steps:
            rec_t.append(s)
            rec_x.append(x.copy())
            rec_e.append(H.energy(x))
    xs = np.array(rec_x)
    return Trajectory(np.array(rec_t) * cfg.step, xs[:, :k], xs[:, k:k + m],
                      xs[:, k + m:], np.array(rec_e))
