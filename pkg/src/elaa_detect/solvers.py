"""Iterative zero-forcing detectors with exact per-iteration MAC accounting.

All methods minimise ``f(x) = x^H A x / 2 - Re(b^H x)`` and track the
gradient ``g = A x - b``. Updates are written ``x <- x - (direction)``.

Ten methods are provided:

=========  ==========================================  ===============
name       update                                      MACs/iteration
=========  ==========================================  ===============
RI         ``x - g``                                   N^2
JI         ``x - D^-1 g``                              N^2 + 2N
GS         ``x - (D + L)^-1 g``                        2N^2
SSOR       ``x - M_gs^-H D M_gs^-1 g``                 3N^2 + N
SD         ``x - zeta g`` (exact line search)          2N^2 + 2N
LBFGS      memory-1 quasi-Newton, ``F0 = I``           3N^2 + 4N
P-RI       ``x - psi g``                               2N^2
P-SD       SD on ``psi A x = psi b``                   4N^2 + 2N
P-LBFGS    LBFGS on ``psi A x = psi b``                5N^2 + 4N
I-LBFGS    LBFGS with ``F0 = psi``                     3N^2 + 4N
=========  ==========================================  ===============

Cost model: a dense ``N x N`` product (with ``A``, ``psi`` or ``F0``) or a
triangular solve costs ``N^2``, an inner product or a diagonal scaling costs
``N``, additions are free. ``F0 = I`` is priced as a full product, as in
the published complexity table, so LBFGS and I-LBFGS cost the same.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import DegenerateStep, DetectionError, NotPositiveDefinite
from .linalg import FlopCounter, back_substitute, forward_substitute, inner, matvec, solve_hermitian
from .system import split as split_matrix

CURVATURE_RTOL = 1e-14


class Method(str, Enum):
    RI = "RI"
    JI = "JI"
    GS = "GS"
    SSOR = "SSOR"
    SD = "SD"
    LBFGS = "LBFGS"
    P_RI = "P-RI"
    P_SD = "P-SD"
    P_LBFGS = "P-LBFGS"
    I_LBFGS = "I-LBFGS"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).strip().upper().replace("_", "-")
        for m in cls:
            if m.value == key:
                return m
        raise ValueError(f"unknown method {name!r}; choose from "
                         f"{', '.join(m.value for m in cls)}")

    @property
    def needs_psi(self):
        return self in (Method.P_RI, Method.P_SD, Method.P_LBFGS, Method.I_LBFGS)

    @property
    def needs_splitting(self):
        return self in (Method.JI, Method.GS, Method.SSOR)


ALL_METHODS = tuple(Method)

# (N^2 coefficient, N coefficient)
_COSTS = {
    Method.RI: (1, 0),
    Method.JI: (1, 2),
    Method.GS: (2, 0),
    Method.SSOR: (3, 1),
    Method.SD: (2, 2),
    Method.LBFGS: (3, 4),
    Method.P_RI: (2, 0),
    Method.P_SD: (4, 2),
    Method.P_LBFGS: (5, 4),
    Method.I_LBFGS: (3, 4),
}


def cost_per_iteration(method, n):
    """Closed-form MACs per iteration of ``method`` for ``n`` user antennas."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    quad, lin = _COSTS[Method.parse(method)]
    return quad * n * n + lin * n


class Status(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class SolverConfig:
    """Runner settings.

    ``conjugate_step`` uses ``d^H g`` instead of ``g^H d`` in the
    quasi-Newton step size. ``classical_bfgs`` swaps the verbatim memory-1
    update for the textbook BFGS inverse-Hessian update. Both default off.
    """

    max_iters: int = 1000
    tol: float = 1e-8
    x0: Optional[np.ndarray] = None
    divergence_factor: float = 1e6
    conjugate_step: bool = False
    classical_bfgs: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if not self.divergence_factor > 1:
            raise ValueError(f"divergence_factor must exceed 1, got {self.divergence_factor}")


@dataclass(frozen=True)
class SolverState:
    x: np.ndarray
    g: np.ndarray
    prev_x: Optional[np.ndarray] = None
    prev_g: Optional[np.ndarray] = None
    step_count: int = 0
    fell_back: bool = False


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    rel_residual: float
    rel_error: float
    cum_macs: int


@dataclass
class IterationTrace:
    method: Method
    records: list = field(default_factory=list)
    status: Status = Status.MAX_ITERS
    message: str = ""
    fallbacks: list = field(default_factory=list)
    x: Optional[np.ndarray] = None

    @property
    def iterations(self):
        return self.records[-1].iter if self.records else 0

    @property
    def residuals(self):
        return np.array([r.rel_residual for r in self.records])


def init_state(system, x0=None):
    """Starting state; the initial gradient is setup work and is not charged."""
    n = system.n
    x = np.zeros(n, dtype=np.complex128) if x0 is None else np.array(x0, dtype=np.complex128)
    return SolverState(x, system.A @ x - system.b)


def _gradient(system, x, counter):
    return matvec(system.A, x, counter) - system.b


def _psi(system):
    if system.psi is None:
        raise ValueError("this method needs the static component psi on the system")
    return system.psi


def _advance(state, system, x_new, counter, **memory):
    return replace(state, x=x_new, g=_gradient(system, x_new, counter),
                   step_count=state.step_count + 1, fell_back=False, **memory)


def ri_step(state, system, counter=None):
    return _advance(state, system, state.x - state.g, counter)


def ji_step(state, system, splitting, counter=None):
    n = system.n
    inv_d = 1.0 / splitting.D
    if counter is not None:
        counter.charge(n)  # reciprocal of D
    y = inv_d * state.g
    if counter is not None:
        counter.charge(n)
    return _advance(state, system, state.x - y, counter)


def _gs_solve(splitting, rhs, counter):
    M_gs = np.diag(splitting.D).astype(np.complex128) + splitting.L
    y = forward_substitute(M_gs, rhs, counter)
    if counter is not None:
        # bill the triangular solve at N^2, the granularity of the cost model
        n = rhs.shape[0]
        counter.charge(n * (n - 1) // 2)
    return y, M_gs


def gs_precondition(splitting, g, counter=None):
    """``(D + L)^-1 g``."""
    y, _ = _gs_solve(splitting, g, counter)
    return y


def ssor_precondition(splitting, g, counter=None):
    """``(M_gs D^-1 M_gs^H)^-1 g`` by forward solve, scaling and back solve."""
    n = g.shape[0]
    y, M_gs = _gs_solve(splitting, g, counter)
    z = splitting.D * y
    if counter is not None:
        counter.charge(n)
    w = back_substitute(M_gs.conj().T, z, counter)
    if counter is not None:
        counter.charge(n * (n - 1) // 2)
    return w


def gs_step(state, system, splitting, counter=None):
    return _advance(state, system, state.x - gs_precondition(splitting, state.g, counter),
                    counter)


def ssor_step(state, system, splitting, counter=None):
    return _advance(state, system, state.x - ssor_precondition(splitting, state.g, counter),
                    counter)


def sd_step_size(g, A, counter=None):
    Ag = matvec(A, g, counter)
    num = inner(g, g, counter).real
    den = inner(g, Ag, counter).real
    if den <= 0:
        raise NotPositiveDefinite(f"g^H A g = {den:g} is not positive")
    return num / den


def sd_step(state, system, counter=None):
    zeta = sd_step_size(state.g, system.A, counter)
    return _advance(state, system, state.x - zeta * state.g, counter)


def pri_step(state, system, counter=None):
    return _advance(state, system, state.x - matvec(_psi(system), state.g, counter), counter)


def _preconditioned_apply(system, counter):
    psi = _psi(system)
    return lambda v: matvec(psi, matvec(system.A, v, counter), counter)


def psd_step(state, system, counter=None):
    psi = _psi(system)
    gbar = matvec(psi, state.g, counter)
    Abar_g = _preconditioned_apply(system, counter)(gbar)
    num = inner(gbar, gbar, counter)
    den = inner(gbar, Abar_g, counter)
    if den == 0:
        raise DegenerateStep("preconditioned SD step has a zero denominator")
    return _advance(state, system, state.x - (num / den) * gbar, counter)


def qn_direction(grad, F0g, s=None, y=None, counter=None):
    """Memory-1 quasi-Newton direction ``F_t grad`` with ``F0 grad`` given.

    Without memory (first iteration) the direction is ``F0 grad``. With
    ``s = x_t - x_{t-1}`` and ``y = grad_t - grad_{t-1}`` it is

        -F0 grad + s (y^H F0 grad) / (s^H y)

    Returns ``None`` when the curvature ``s^H y`` is negligible.
    """
    n = grad.shape[0]
    if s is None:
        if counter is not None:
            # first iteration has no correction term but is billed at the
            # steady-state rate so every iteration costs the same
            counter.charge(2 * n)
        return F0g
    sy = inner(s, y, counter)
    y_f0g = inner(y, F0g, counter)
    if sy == 0 or abs(sy) < CURVATURE_RTOL * np.linalg.norm(s) * np.linalg.norm(y):
        return None
    return -F0g + s * (y_f0g / sy)


def _classical_bfgs_direction(grad, F0, s, y, counter):
    """Textbook BFGS ``H grad`` with ``H = V^H F0 V + rho s s^H``, ``V = I - rho y s^H``."""
    sy = inner(y, s, counter)
    if sy == 0 or abs(sy) < CURVATURE_RTOL * np.linalg.norm(s) * np.linalg.norm(y):
        return None
    rho = 1.0 / sy
    a = rho * inner(s, grad, counter)
    q = grad - a * y
    r = q if F0 is None else matvec(F0, q, counter)
    return r + s * (a - rho * inner(y, r, counter))


def qn_step_size(grad, d, Ad, counter=None, conjugate=False):
    """Exact line-search step ``g^H d / d^H A d`` (``d^H g`` if ``conjugate``)."""
    num = inner(d, grad, counter) if conjugate else inner(grad, d, counter)
    den = inner(d, Ad, counter)
    if den == 0:
        raise DegenerateStep("quasi-Newton step has a zero denominator")
    return num / den


def _qn_step(state, system, counter, F0, grad, apply_A, conjugate_step, classical):
    n = system.n
    if state.prev_x is None:
        s = y = None
    else:
        s = state.x - state.prev_x
        y = grad - state.prev_g
    if classical and s is not None:
        d = _classical_bfgs_direction(grad, F0, s, y, counter)
    else:
        if F0 is None:
            F0g = grad
            if counter is not None:
                counter.charge(n * n)  # F0 = I priced as a dense product
        else:
            F0g = matvec(F0, grad, counter)
        d = qn_direction(grad, F0g, s, y, counter)
    fell_back = d is None
    if fell_back:
        d = grad
    step = qn_step_size(grad, d, apply_A(d), counter, conjugate_step)
    new = _advance(state, system, state.x - step * d, counter,
                   prev_x=state.x, prev_g=grad)
    return replace(new, fell_back=fell_back)


def lbfgs_step(state, system, counter=None, conjugate_step=False, classical=False):
    apply_A = lambda v: matvec(system.A, v, counter)  # noqa: E731
    return _qn_step(state, system, counter, None, state.g, apply_A, conjugate_step, classical)


def plbfgs_step(state, system, counter=None, conjugate_step=False, classical=False):
    gbar = matvec(_psi(system), state.g, counter)
    return _qn_step(state, system, counter, None, gbar,
                    _preconditioned_apply(system, counter), conjugate_step, classical)


def ilbfgs_step(state, system, counter=None, conjugate_step=False, classical=False):
    apply_A = lambda v: matvec(system.A, v, counter)  # noqa: E731
    return _qn_step(state, system, counter, _psi(system), state.g, apply_A,
                    conjugate_step, classical)


def make_stepper(method, system, splitting=None, cfg=None):
    """Bind ``method`` to a one-argument ``step(state, counter)`` callable."""
    method = Method.parse(method)
    cfg = cfg or SolverConfig()
    if method.needs_psi:
        _psi(system)
    if method.needs_splitting and splitting is None:
        splitting = split_matrix(system.A)
    qn = dict(conjugate_step=cfg.conjugate_step, classical=cfg.classical_bfgs)
    table = {
        Method.RI: lambda st, c: ri_step(st, system, c),
        Method.JI: lambda st, c: ji_step(st, system, splitting, c),
        Method.GS: lambda st, c: gs_step(st, system, splitting, c),
        Method.SSOR: lambda st, c: ssor_step(st, system, splitting, c),
        Method.SD: lambda st, c: sd_step(st, system, c),
        Method.LBFGS: lambda st, c: lbfgs_step(st, system, c, **qn),
        Method.P_RI: lambda st, c: pri_step(st, system, c),
        Method.P_SD: lambda st, c: psd_step(st, system, c),
        Method.P_LBFGS: lambda st, c: plbfgs_step(st, system, c, **qn),
        Method.I_LBFGS: lambda st, c: ilbfgs_step(st, system, c, **qn),
    }
    return table[method]


def _ratio(num, den):
    return num / den if den > 0 else (0.0 if num == 0 else float("inf"))


def run(method, system, splitting=None, cfg=None, x_star=None):
    """Iterate ``method`` on ``system`` and record every iteration.

    Stops when the relative residual ``||A x - b|| / ||b||`` reaches
    ``cfg.tol`` (Converged), exceeds ``cfg.divergence_factor`` times its
    initial value or becomes non-finite (Diverged), or after
    ``cfg.max_iters`` steps (MaxIters). Iteration 0 is recorded too.
    ``x_star`` defaults to the direct solution and is used only for the
    relative-error column.
    """
    method = Method.parse(method)
    cfg = cfg or SolverConfig()
    step = make_stepper(method, system, splitting, cfg)
    if x_star is None:
        x_star = solve_hermitian(system.A, system.b)
    b_norm = float(np.linalg.norm(system.b))
    x_star_norm = float(np.linalg.norm(x_star))

    counter = FlopCounter()
    state = init_state(system, cfg.x0)
    trace = IterationTrace(method)

    def record(st):
        res = _ratio(float(np.linalg.norm(st.g)), b_norm)
        err = _ratio(float(np.linalg.norm(st.x - x_star)), x_star_norm)
        trace.records.append(IterationRecord(st.step_count, res, err, counter.macs))
        return res

    res0 = record(state)
    if res0 <= cfg.tol:
        trace.status = Status.CONVERGED
        trace.x = state.x
        return trace

    limit = cfg.divergence_factor * res0
    for _ in range(cfg.max_iters):
        try:
            state = step(state, counter)
        except DetectionError as exc:
            trace.status = Status.DIVERGED
            trace.message = f"{type(exc).__name__} at iteration {state.step_count + 1}: {exc}"
            break
        if state.fell_back:
            trace.fallbacks.append(state.step_count)
        res = record(state)
        if not np.isfinite(res) or res > limit:
            trace.status = Status.DIVERGED
            trace.message = f"residual {res:.3g} exceeded {limit:.3g}"
            break
        if res <= cfg.tol:
            trace.status = Status.CONVERGED
            break
    else:
        trace.status = Status.MAX_ITERS
    trace.x = state.x
    return trace
