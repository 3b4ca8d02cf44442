"""Chart, exact trig-polynomial fields, the symplectic form and the Poisson bivector.

Coordinates are ordered ``(I_1..I_k, z_1..z_m, phi_1..phi_k)`` with
``m = 2(n - k)``.  The form is stored as the value matrix
``M[a, b] = Omega(d_a, d_b)``; the bivector ``w = d^i ^ d_i`` pairs each
action with its angle and annihilates every z direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import DegenerateFormError, DomainError
from .state import TWO_PI, PhasePoint, as_vector

CLOSED_TOL = 1e-10
NONDEGENERATE_TOL = 1e-12
DARBOUX_TOL = 1e-9


@dataclass(frozen=True)
class ChartSpec:
    """Dimensions and coordinate boxes of the chart ``U = V x W x T^k``."""

    k: int
    n: int
    v_box: tuple[tuple[float, float], ...]
    w_box: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "v_box", tuple((float(a), float(b)) for a, b in self.v_box))
        object.__setattr__(self, "w_box", tuple((float(a), float(b)) for a, b in self.w_box))
        if not 1 <= self.k <= self.n:
            raise ValueError(f"need 1 <= k <= n, got k={self.k}, n={self.n}")
        if len(self.v_box) != self.k:
            raise ValueError(f"v_box needs {self.k} intervals, got {len(self.v_box)}")
        if len(self.w_box) != self.m:
            raise ValueError(f"w_box needs {self.m} intervals, got {len(self.w_box)}")

    @property
    def m(self) -> int:
        return 2 * (self.n - self.k)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def action_index(self, i: int) -> int:
        return i

    def z_index(self, mu: int) -> int:
        return self.k + mu

    def angle_index(self, i: int) -> int:
        return self.k + self.m + i

    def check_nonempty(self):
        for lo, hi in self.v_box + self.w_box:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
                raise DomainError(f"empty or invalid coordinate box [{lo}, {hi}]")

    def contains(self, x) -> bool:
        x = as_vector(x)
        boxes = self.v_box + self.w_box
        return all(lo <= x[a] <= hi for a, (lo, hi) in enumerate(boxes))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Uniform points of the chart, shape ``(count, 2n)``."""
        self.check_nonempty()
        boxes = np.array(self.v_box + self.w_box, dtype=float).reshape(-1, 2)
        poly = rng.uniform(boxes[:, 0], boxes[:, 1], size=(count, len(boxes)))
        ang = rng.uniform(0.0, TWO_PI, size=(count, self.k))
        return np.hstack([poly, ang])


@dataclass(frozen=True)
class Term:
    """``coeff * prod I^i_pow * prod z^z_pow * cos(wave . phi + phase)``."""

    coeff: float
    i_pow: tuple[int, ...]
    z_pow: tuple[int, ...] = ()
    wave: tuple[int, ...] = ()
    phase: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "phase", float(self.phase))
        for name in ("i_pow", "z_pow", "wave"):
            vals = tuple(getattr(self, name))
            if any(int(v) != v for v in vals):
                raise ValueError(f"{name} entries must be integers, got {vals}")
            object.__setattr__(self, name, tuple(int(v) for v in vals))
        if any(p < 0 for p in self.i_pow + self.z_pow):
            raise ValueError("exponents must be nonnegative")
        if not self.wave:
            object.__setattr__(self, "wave", (0,) * len(self.i_pow))
        if len(self.wave) != len(self.i_pow):
            raise ValueError(
                f"wave has length {len(self.wave)} but i_pow has length {len(self.i_pow)}"
            )


@dataclass(frozen=True)
class ScalarField:
    """A finite sum of :class:`Term` objects with exact derivatives.

    Fields are immutable; arithmetic returns new fields.  Products use
    product-to-sum identities so the class stays closed.
    """

    k: int
    m: int
    terms: tuple[Term, ...] = ()
    _packed: tuple = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        for idx, t in enumerate(terms):
            if len(t.i_pow) != self.k or len(t.wave) != self.k:
                raise ValueError(f"term {idx}: i_pow/wave must have length k={self.k}")
            if len(t.z_pow) != self.m:
                raise ValueError(f"term {idx}: z_pow must have length m={self.m}")
        n_terms = len(terms)
        coeff = np.array([t.coeff for t in terms], dtype=np.float64)
        powers = np.array([t.i_pow + t.z_pow for t in terms], dtype=np.int64).reshape(
            n_terms, self.k + self.m)
        wave = np.array([t.wave for t in terms], dtype=np.int64).reshape(n_terms, self.k)
        phase = np.array([t.phase for t in terms], dtype=np.float64)
        for arr in (coeff, powers, wave, phase):
            arr.setflags(write=False)
        object.__setattr__(self, "_packed", (coeff, powers, wave, phase))

    # construction helpers

    @classmethod
    def zero(cls, k: int, m: int = 0) -> "ScalarField":
        return cls(k, m, ())

    @classmethod
    def constant(cls, k: int, m: int, value: float) -> "ScalarField":
        if value == 0:
            return cls.zero(k, m)
        return cls(k, m, (Term(value, (0,) * k, (0,) * m),))

    @classmethod
    def action(cls, k: int, m: int, i: int, power: int = 1) -> "ScalarField":
        i_pow = [0] * k
        i_pow[i] = power
        return cls(k, m, (Term(1.0, tuple(i_pow), (0,) * m),))

    @classmethod
    def zcoord(cls, k: int, m: int, mu: int, power: int = 1) -> "ScalarField":
        z_pow = [0] * m
        z_pow[mu] = power
        return cls(k, m, (Term(1.0, (0,) * k, tuple(z_pow)),))

    @classmethod
    def cosine(cls, k: int, m: int, wave: Sequence[int], coeff: float = 1.0,
               phase: float = 0.0) -> "ScalarField":
        return cls(k, m, (Term(coeff, (0,) * k, (0,) * m, tuple(wave), phase),))

    # structure queries

    @property
    def dim(self) -> int:
        return 2 * self.k + self.m

    @property
    def packed(self) -> tuple:
        return self._packed

    def is_angle_independent(self) -> bool:
        return all(not any(t.wave) for t in self.terms)

    def depends_on_z(self) -> bool:
        return any(any(t.z_pow) for t in self.terms)

    def depends_on_actions(self) -> bool:
        return any(any(t.i_pow) for t in self.terms)

    # evaluation

    def value(self, x) -> float:
        x = self._point(x)
        return float(_kernels.field_value(*self._packed, x, self.k, self.m))

    def gradient(self, x) -> np.ndarray:
        x = self._point(x)
        out = np.empty(self.dim)
        _kernels.field_gradient(*self._packed, x, self.k, self.m, out)
        return out

    def hessian(self, x) -> np.ndarray:
        x = self._point(x)
        out = np.empty((self.dim, self.dim))
        _kernels.field_hessian(*self._packed, x, self.k, self.m, out)
        return out

    def derivative(self, x, index: int) -> float:
        if not 0 <= index < self.dim:
            raise IndexError(f"coordinate index {index} out of range for dimension {self.dim}")
        return float(self.gradient(x)[index])

    def _point(self, x) -> np.ndarray:
        x = as_vector(x)
        if x.size != self.dim:
            raise ValueError(f"point has {x.size} coordinates, field expects {self.dim}")
        return x

    # algebra

    def _check_compatible(self, other: "ScalarField"):
        if (self.k, self.m) != (other.k, other.m):
            raise ValueError(f"incompatible fields: (k, m)=({self.k}, {self.m}) "
                             f"vs ({other.k}, {other.m})")

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = ScalarField.constant(self.k, self.m, other)
        if not isinstance(other, ScalarField):
            return NotImplemented
        self._check_compatible(other)
        return ScalarField(self.k, self.m, self.terms + other.terms)

    __radd__ = __add__

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, c: float) -> "ScalarField":
        return ScalarField(self.k, self.m, tuple(
            Term(c * t.coeff, t.i_pow, t.z_pow, t.wave, t.phase) for t in self.terms))

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scaled(float(other))
        if not isinstance(other, ScalarField):
            return NotImplemented
        self._check_compatible(other)
        out = []
        for a in self.terms:
            for b in other.terms:
                i_pow = tuple(p + q for p, q in zip(a.i_pow, b.i_pow))
                z_pow = tuple(p + q for p, q in zip(a.z_pow, b.z_pow))
                c = 0.5 * a.coeff * b.coeff
                w_sum = tuple(p + q for p, q in zip(a.wave, b.wave))
                w_diff = tuple(p - q for p, q in zip(a.wave, b.wave))
                out.append(Term(c, i_pow, z_pow, w_sum, a.phase + b.phase))
                out.append(Term(c, i_pow, z_pow, w_diff, a.phase - b.phase))
        return ScalarField(self.k, self.m, tuple(out)).simplified()

    __rmul__ = __mul__

    def simplified(self) -> "ScalarField":
        """Merge terms with identical exponents, wave and phase; drop zeros."""
        merged: dict[tuple, float] = {}
        for t in self.terms:
            key = (t.i_pow, t.z_pow, t.wave, t.phase)
            merged[key] = merged.get(key, 0.0) + t.coeff
        return ScalarField(self.k, self.m, tuple(
            Term(c, *key) for key, c in merged.items() if c != 0.0))

    def restrict_z(self, z0: Sequence[float]) -> "ScalarField":
        """Partial evaluation at ``z = z0``; the result lives on a chart with m = 0."""
        z0 = np.asarray(z0, dtype=float)
        if z0.size != self.m:
            raise ValueError(f"z0 has {z0.size} entries, field has m={self.m}")
        terms = []
        for t in self.terms:
            c = t.coeff
            for zv, p in zip(z0, t.z_pow):
                c *= zv ** p
            terms.append(Term(c, t.i_pow, (), t.wave, t.phase))
        return ScalarField(self.k, 0, tuple(terms))

    def embed(self, m: int) -> "ScalarField":
        """Pull back a z-independent field to a chart with ``m`` z coordinates."""
        if self.depends_on_z():
            raise ValueError("only z-independent fields can be embedded")
        return ScalarField(self.k, m, tuple(
            Term(t.coeff, t.i_pow, (0,) * m, t.wave, t.phase) for t in self.terms))


@dataclass(frozen=True)
class AngleCoordinate:
    """The coordinate function ``phi^i`` (not periodic, so not a ScalarField).

    Only its value and gradient are meaningful; it exists so brackets such
    as ``{I_1, phi^1}`` can be formed.
    """

    k: int
    m: int
    index: int

    @property
    def dim(self) -> int:
        return 2 * self.k + self.m

    def value(self, x) -> float:
        return float(as_vector(x)[self.k + self.m + self.index])

    def gradient(self, x) -> np.ndarray:
        g = np.zeros(self.dim)
        g[self.k + self.m + self.index] = 1.0
        return g

    def depends_on_z(self) -> bool:
        return False

    def embed(self, m: int) -> "AngleCoordinate":
        return AngleCoordinate(self.k, m, self.index)


def eval_field(f: ScalarField, x) -> float:
    return f.value(x)


def d_field(f: ScalarField, x, index: int) -> float:
    """Exact partial derivative of ``f`` along coordinate ``index``."""
    return f.derivative(x, index)


@dataclass(frozen=True)
class SymplecticFormSpec:
    """``Omega = dI_i ^ dphi^i + (z, z) block + (I, z) block``.

    ``zz_entries`` holds ``(mu, nu, field)`` with ``mu < nu`` giving
    ``Omega(d_{z^mu}, d_{z^nu})``; ``iz_entries`` holds ``(i, mu, field)``
    giving ``Omega(d_{I_i}, d_{z^mu})``.  Indices are zero-based.  All
    component fields must be angle-independent.
    """

    chart: ChartSpec
    zz_entries: tuple[tuple[int, int, ScalarField], ...] = ()
    iz_entries: tuple[tuple[int, int, ScalarField], ...] = ()

    def __post_init__(self):
        k, m = self.chart.k, self.chart.m
        zz = {}
        for mu, nu, f in self.zz_entries:
            if not (0 <= mu < m and 0 <= nu < m) or mu == nu:
                raise ValueError(f"zz entry ({mu}, {nu}) out of range for m={m}")
            if mu > nu:
                mu, nu, f = nu, mu, -f
            if (mu, nu) in zz:
                raise ValueError(f"duplicate zz entry ({mu}, {nu})")
            zz[(mu, nu)] = f
        iz = {}
        for i, mu, f in self.iz_entries:
            if not (0 <= i < k and 0 <= mu < m):
                raise ValueError(f"Iz entry ({i}, {mu}) out of range for k={k}, m={m}")
            if (i, mu) in iz:
                raise ValueError(f"duplicate Iz entry ({i}, {mu})")
            iz[(i, mu)] = f
        for (a, b), f in list(zz.items()) + list(iz.items()):
            if (f.k, f.m) != (k, m):
                raise ValueError(f"form component ({a}, {b}) has wrong dimensions")
            if not f.is_angle_independent():
                raise ValueError(f"form component ({a}, {b}) depends on the angles")
        object.__setattr__(self, "zz_entries",
                           tuple((a, b, f) for (a, b), f in sorted(zz.items())))
        object.__setattr__(self, "iz_entries",
                           tuple((a, b, f) for (a, b), f in sorted(iz.items())))

    @classmethod
    def canonical(cls, chart: ChartSpec, zz_value: float = 1.0) -> "SymplecticFormSpec":
        """``dI ^ dphi + zz_value * sum dz^l ^ dz^{l + n - k}``."""
        half = chart.n - chart.k
        zz = tuple((lam, lam + half, ScalarField.constant(chart.k, chart.m, zz_value))
                   for lam in range(half))
        return cls(chart, zz, ())

    def has_iz(self) -> bool:
        return any(f.terms for _, _, f in self.iz_entries)

    def _entries(self):
        k = self.chart.k
        for mu, nu, f in self.zz_entries:
            yield k + mu, k + nu, f
        for i, mu, f in self.iz_entries:
            yield i, k + mu, f


def symplectic_matrix_at(form: SymplecticFormSpec, x) -> np.ndarray:
    """The antisymmetric ``2n x 2n`` matrix ``M[a, b] = Omega(d_a, d_b)`` at ``x``."""
    chart = form.chart
    x = as_vector(x)
    k, m = chart.k, chart.m
    M = np.zeros((chart.dim, chart.dim))
    for i in range(k):
        M[i, k + m + i] = 1.0
        M[k + m + i, i] = -1.0
    for a, b, f in form._entries():
        val = f.value(x)
        M[a, b] = val
        M[b, a] = -val
    return M


def symplectic_matrix_derivatives(form: SymplecticFormSpec, x) -> np.ndarray:
    """``D[c, a, b] = d_c M[a, b]`` from the exact field gradients."""
    chart = form.chart
    x = as_vector(x)
    D = np.zeros((chart.dim, chart.dim, chart.dim))
    for a, b, f in form._entries():
        g = f.gradient(x)
        D[:, a, b] = g
        D[:, b, a] = -g
    return D


def _zz_matrix(form: SymplecticFormSpec, x) -> np.ndarray:
    k, m = form.chart.k, form.chart.m
    return symplectic_matrix_at(form, x)[k:k + m, k:k + m]


def check_nondegenerate(form: SymplecticFormSpec, x) -> np.ndarray:
    """Return ``M`` at ``x`` or raise if it is singular there."""
    M = symplectic_matrix_at(form, x)
    if abs(np.linalg.det(M)) <= NONDEGENERATE_TOL:
        raise DegenerateFormError(f"degenerate form at point {as_vector(x).tolist()}")
    return M


@dataclass(frozen=True)
class FormReport:
    closed: bool
    nondegenerate: bool
    max_closure_residual: float
    min_abs_det: float
    worst_closure_point: tuple[float, ...]
    worst_det_point: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return self.closed and self.nondegenerate


def closure_residual(form: SymplecticFormSpec, x) -> np.ndarray:
    """Cyclic sum ``d_a M_bc + d_b M_ca + d_c M_ab`` as a 3-tensor."""
    D = symplectic_matrix_derivatives(form, x)
    return D + D.transpose(1, 2, 0) + D.transpose(2, 0, 1)


def validate_form(form: SymplecticFormSpec, sample_count: int, seed: int) -> FormReport:
    """Check closedness and nondegeneracy of ``form`` at seeded sample points."""
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    form.chart.check_nonempty()
    rng = np.random.default_rng(seed)
    pts = form.chart.sample(rng, sample_count)
    worst_t, worst_t_pt = -1.0, pts[0]
    min_det, min_det_pt = np.inf, pts[0]
    for x in pts:
        t = float(np.max(np.abs(closure_residual(form, x)))) if form.chart.dim else 0.0
        if t > worst_t:
            worst_t, worst_t_pt = t, x
        d = abs(float(np.linalg.det(symplectic_matrix_at(form, x))))
        if d < min_det:
            min_det, min_det_pt = d, x
    return FormReport(
        closed=worst_t <= CLOSED_TOL,
        nondegenerate=min_det > NONDEGENERATE_TOL,
        max_closure_residual=worst_t,
        min_abs_det=min_det,
        worst_closure_point=tuple(worst_t_pt.tolist()),
        worst_det_point=tuple(min_det_pt.tolist()),
    )


def bivector_matrix(k: int, m: int) -> np.ndarray:
    """Matrix of ``w = d^i ^ d_i``: ``W[I_i, phi^i] = 1``, ``W[phi^i, I_i] = -1``."""
    dim = 2 * k + m
    W = np.zeros((dim, dim))
    for i in range(k):
        W[i, k + m + i] = 1.0
        W[k + m + i, i] = -1.0
    return W


def poisson_bracket_w(f, g, x) -> float:
    """``{f, g} = d^i f d_i g - d_i f d^i g``; z derivatives never enter."""
    if f.k != g.k or f.m != g.m:
        raise ValueError("fields live on different charts")
    k, m = f.k, f.m
    gf = f.gradient(x)
    gg = g.gradient(x)
    ang = slice(k + m, k + m + k)
    return float(gf[:k] @ gg[ang] - gf[ang] @ gg[:k])


def omega_bracket(f, g, form: SymplecticFormSpec, x) -> float:
    """Bracket of the full form, ``{f, g}_Omega = grad(g) . M^{-1} grad(f)``.

    Diagnostic only: it shows z coordinates failing to commute with the
    actions when the (I, z) block is present.
    """
    M = check_nondegenerate(form, x)
    return float(g.gradient(x) @ np.linalg.solve(M, f.gradient(x)))


def recursion_operator_at(form: SymplecticFormSpec, x) -> np.ndarray:
    """``R = w# o Omega_flat`` as a matrix acting on tangent vectors.

    With ``Omega_flat(v) = v -| Omega`` (matrix ``-M``) and ``w#`` given by
    ``W``, ``R = -W M``.  This is the sign for which R carries the
    Omega-Hamiltonian field of any H to its w-Hamiltonian field.
    """
    M = check_nondegenerate(form, x)
    W = bivector_matrix(form.chart.k, form.chart.m)
    return -W @ M


@dataclass(frozen=True)
class DarbouxCandidate:
    """Proposed map ``(I, z, phi) -> (I, p(I, z), q(I, z), phi + f(I, z))``."""

    f: tuple[ScalarField, ...]
    p: tuple[ScalarField, ...]
    q: tuple[ScalarField, ...]

    def __post_init__(self):
        for name in ("f", "p", "q"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        for fld in self.f + self.p + self.q:
            if not fld.is_angle_independent():
                raise ValueError("Darboux candidate fields must be angle-independent")

    @classmethod
    def identity(cls, chart: ChartSpec) -> "DarbouxCandidate":
        k, m = chart.k, chart.m
        half = chart.n - chart.k
        return cls(
            tuple(ScalarField.zero(k, m) for _ in range(k)),
            tuple(ScalarField.zcoord(k, m, lam) for lam in range(half)),
            tuple(ScalarField.zcoord(k, m, half + lam) for lam in range(half)),
        )


@dataclass(frozen=True)
class DarbouxReport:
    canonical: bool
    worst_residual: float


def darboux_jacobian(candidate: DarbouxCandidate, chart: ChartSpec, x) -> np.ndarray:
    """Jacobian of the new coordinates ``(I, p, q, phi')`` w.r.t. ``(I, z, phi)``."""
    k, m = chart.k, chart.m
    half = chart.n - chart.k
    J = np.zeros((chart.dim, chart.dim))
    J[:k, :k] = np.eye(k)
    for lam in range(half):
        J[k + lam] = candidate.p[lam].gradient(x)
        J[k + half + lam] = candidate.q[lam].gradient(x)
    for i in range(k):
        J[k + m + i] = candidate.f[i].gradient(x)
        J[k + m + i, k + m + i] += 1.0
    return J


def canonical_matrix(chart: ChartSpec) -> np.ndarray:
    """``dI ^ dphi' + dp ^ dq`` in the order ``(I, p, q, phi')``."""
    k, m = chart.k, chart.m
    half = chart.n - chart.k
    C = bivector_matrix(k, m)
    for lam in range(half):
        C[k + lam, k + half + lam] = 1.0
        C[k + half + lam, k + lam] = -1.0
    return C


def verify_darboux(candidate: DarbouxCandidate, form: SymplecticFormSpec,
                   sample_count: int, seed: int) -> DarbouxReport:
    """Judge whether ``candidate`` brings ``form`` to canonical shape.

    The form in the new coordinates is ``M' = J^{-T} M J^{-1}`` (so that
    ``J^T M' J = M``); the residual is ``max |M' - C|`` over the samples.
    """
    chart = form.chart
    k, half = chart.k, chart.n - chart.k
    if (len(candidate.f), len(candidate.p), len(candidate.q)) != (k, half, half):
        raise ValueError(f"candidate needs {k} angle shifts and {half} p and q fields")
    rng = np.random.default_rng(seed)
    C = canonical_matrix(chart)
    worst = 0.0
    for x in chart.sample(rng, sample_count):
        J = darboux_jacobian(candidate, chart, x)
        if abs(np.linalg.det(J)) <= NONDEGENERATE_TOL:
            raise DomainError(f"singular Darboux Jacobian at point {x.tolist()}")
        J_inv = np.linalg.inv(J)
        M_new = J_inv.T @ symplectic_matrix_at(form, x) @ J_inv
        worst = max(worst, float(np.max(np.abs(M_new - C))))
    return DarbouxReport(canonical=worst <= DARBOUX_TOL, worst_residual=worst)


def coordinate_fields(chart: ChartSpec) -> list:
    """All coordinate functions of the chart, in coordinate order."""
    k, m = chart.k, chart.m
    return ([ScalarField.action(k, m, i) for i in range(k)]
            + [ScalarField.zcoord(k, m, mu) for mu in range(m)]
            + [AngleCoordinate(k, m, i) for i in range(k)])


def sample_points(chart: ChartSpec, count: int, seed: int) -> Iterable[PhasePoint]:
    rng = np.random.default_rng(seed)
    for x in chart.sample(rng, count):
        yield PhasePoint.from_vector(x, chart.k, chart.m)
