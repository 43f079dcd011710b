"""Equal-nu and network-wide max-min power allocation.

The max-min problem is solved by bisection on a common SINR target. For a
fixed target every user's SINR constraint is a second-order cone in the power
coefficients, so each bisection step is a conic feasibility problem.

Internally the cone is written in scaled variables ``u = nu * sqrt(alpha)``
and every SINR row is divided by the noise amplitude; both keep the conic
data O(1) even though raw link gains sit around 1e-11.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from .estimation import EstimatorStats
from .sinr import PowerCoefficients, evaluate_sinr, per_array_power, per_cell_power

log = logging.getLogger(__name__)

FEAS_TOL = 1e-8
MAX_DOUBLINGS = 60
CONE_FORMAT_VERSION = 1


class NumericalFailure(RuntimeError):
    """The conic solver stalled without a feasibility verdict."""


class BoundsExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class SocConstraint:
    """||A u + b|| <= c . u + d."""
    name: str
    A: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    d: float
    kind: str = "sinr"  # "sinr" or "power"

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    def margin(self, u: np.ndarray) -> float:
        return float(self.c @ u + self.d - np.linalg.norm(self.A @ u + self.b))


@dataclass(frozen=True)
class ConeProblem:
    """Feasibility of a common SINR target ``gamma``.

    Variables are ``u`` (length L*K*N, flattened [l, i, n]) followed by any
    auxiliaries; ``nu = u[:n_nu] / scale``. ``linear`` holds rows G u <= h
    (auxiliary bounds); every variable is nonnegative.
    """
    gamma: float
    shape: tuple
    scale: np.ndarray
    n_vars: int
    soc: list
    linear_G: sp.csr_matrix
    linear_h: np.ndarray
    noise_power: float
    power_constraint: str = "per_cell"

    @property
    def n_nu(self) -> int:
        return int(np.prod(self.shape))

    @property
    def sinr_cones(self):
        return [c for c in self.soc if c.kind == "sinr"]

    def nu_from_u(self, u: np.ndarray) -> np.ndarray:
        return (u[: self.n_nu] / self.scale).reshape(self.shape)

    def u_from_nu(self, nu: np.ndarray) -> np.ndarray:
        return np.asarray(nu, dtype=float).ravel() * self.scale

    def margins(self, u: np.ndarray) -> dict:
        out = {c.name: c.margin(u) for c in self.soc}
        out["nonneg"] = float(np.min(u)) if u.size else 0.0
        if self.linear_G.shape[0]:
            out["linear"] = float(np.min(self.linear_h - self.linear_G @ u))
        return out

    def min_margin(self, u: np.ndarray) -> float:
        return min(self.margins(u).values())


def _flat(shape, l, i, n):
    L, K, N = shape
    return (l * K + i) * N + n


def equal_nu(stats: EstimatorStats) -> PowerCoefficients:
    """Common coefficient that spends exactly L units of power across the network."""
    L = stats.alpha.shape[0]
    total = float(stats.alpha.sum())
    if total <= 0:
        raise ValueError("all power weights are zero; equal-nu is undefined")
    return PowerCoefficients(np.full(stats.alpha.shape, math.sqrt(L / total)))


def _scale(stats: EstimatorStats) -> np.ndarray:
    a = stats.alpha.ravel()
    floor = 1e-12 * max(a.max(), 1e-300)
    return np.sqrt(np.maximum(a, floor))


def build_feasibility(stats: EstimatorStats, noise_power: float, gamma: float,
                      power_constraint: str = "per_cell", coherent: str = "direct") -> ConeProblem:
    """Conic feasibility problem for SINR target ``gamma``.

    ``coherent="direct"`` puts sum_n nu_lk^n xi_jk^ln in the cone as one
    coordinate per interfering cell (two if xi is complex), which represents
    the coherent interference exactly. ``coherent="aux"`` instead bounds
    each |nu_lk^n xi_jk^ln| by an auxiliary variable and stacks per-cell
    sums of those auxiliaries, which is conservative when the xi change sign
    across sub-arrays.
    """
    if gamma <= 0:
        raise ValueError("SINR target must be positive")
    if noise_power <= 0:
        raise ValueError("noise power must be positive")
    if coherent not in ("direct", "aux"):
        raise ValueError("coherent must be 'direct' or 'aux'")
    shape = stats.chi.shape
    L, K, N = shape
    n_nu = L * K * N
    s = _scale(stats)
    sigma = math.sqrt(noise_power)
    complex_xi = np.iscomplexobj(stats.xi)

    # auxiliaries rho[j, k, l, n] for l != j
    aux_index = {}
    if coherent == "aux":
        for j in range(L):
            for k in range(K):
                for l in range(L):
                    if l == j:
                        continue
                    for n in range(N):
                        aux_index[(j, k, l, n)] = n_nu + len(aux_index)
    n_vars = n_nu + len(aux_index)

    soc = []
    G_rows, G_cols, G_vals = [], [], []
    n_lin = 0
    zeta = stats.zeta / sigma ** 2
    for j in range(L):
        for k in range(K):
            rows, cols, vals = [], [], []
            # noncoherent terms: one row per (l, i, n)
            w = np.sqrt(zeta[j, k].ravel()) / s
            rows.extend(range(n_nu))
            cols.extend(range(n_nu))
            vals.extend(w)
            r = n_nu
            for l in range(L):
                if l == j:
                    continue
                idx = [_flat(shape, l, k, n) for n in range(N)]
                coef = stats.xi[j, k, l] / sigma / s[idx]
                if coherent == "direct":
                    parts = [coef.real, coef.imag] if complex_xi else [coef.real]
                    for part in parts:
                        rows.extend([r] * N)
                        cols.extend(idx)
                        vals.extend(part)
                        r += 1
                else:
                    amag = np.abs(coef)
                    for n in range(N):
                        a = aux_index[(j, k, l, n)]
                        # |coef_n| u_n - rho <= 0
                        G_rows.extend([n_lin, n_lin])
                        G_cols.extend([idx[n], a])
                        G_vals.extend([amag[n], -1.0])
                        n_lin += 1
                        rows.append(r)
                        cols.append(a)
                        vals.append(1.0)
                    r += 1
            dim = r + 1  # last row is the noise term (constant 1 after scaling)
            A = sp.csr_matrix((vals, (rows, cols)), shape=(dim, n_vars))
            b = np.zeros(dim)
            b[-1] = 1.0
            c = np.zeros(n_vars)
            own = [_flat(shape, j, k, n) for n in range(N)]
            c[own] = stats.chi[j, k] / sigma / s[own] / math.sqrt(gamma)
            soc.append(SocConstraint(f"sinr[{j},{k}]", A, b, c, 0.0, "sinr"))

    groups = []
    if power_constraint == "per_cell":
        for l in range(L):
            groups.append((f"power[{l}]", [_flat(shape, l, i, n) for i in range(K) for n in range(N)]))
    elif power_constraint == "per_array":
        for l in range(L):
            for n in range(N):
                groups.append((f"power[{l},{n}]", [_flat(shape, l, i, n) for i in range(K)]))
    else:
        raise ValueError(f"unknown power constraint {power_constraint!r}")
    for name, idx in groups:
        A = sp.csr_matrix((np.ones(len(idx)), (np.arange(len(idx)), idx)), shape=(len(idx), n_vars))
        soc.append(SocConstraint(name, A, np.zeros(len(idx)), np.zeros(n_vars), 1.0, "power"))

    G = sp.csr_matrix((G_vals, (G_rows, G_cols)), shape=(n_lin, n_vars))
    return ConeProblem(gamma=float(gamma), shape=shape, scale=s, n_vars=n_vars, soc=soc,
                       linear_G=G, linear_h=np.zeros(n_lin), noise_power=noise_power,
                       power_constraint=power_constraint)


@dataclass
class FeasibilityResult:
    feasible: bool
    nu: np.ndarray | None
    margin: float
    power_level: float  # smallest max-group power that meets the SINR target


class FeasibilitySolver:
    """Compiled conic model for one set of statistics; the SINR target is a parameter.

    Each solve minimises the largest group power subject to the SINR cones.
    The target is feasible iff that minimum is at most 1; a feasible point
    is then scaled up to full power, which only raises every SINR.
    """

    def __init__(self, template: ConeProblem, solver: str = "CLARABEL", **solver_opts):
        self.template = template
        self.solver = solver
        self.solver_opts = solver_opts
        self._u = cp.Variable(template.n_vars, nonneg=True)
        self._tau = cp.Variable(nonneg=True)
        self._t = cp.Parameter(nonneg=True, value=1.0 / math.sqrt(template.gamma))
        g0 = math.sqrt(template.gamma)
        cons = []
        for c in template.soc:
            if c.kind == "sinr":
                # stored c already carries 1/sqrt(gamma0); rescale to the parameter
                cons.append(cp.SOC(self._t * ((c.c * g0) @ self._u), c.A @ self._u + c.b))
            else:
                cons.append(cp.SOC(self._tau, c.A @ self._u + c.b))
        if template.linear_G.shape[0]:
            cons.append(template.linear_G @ self._u <= template.linear_h)
        self._problem = cp.Problem(cp.Minimize(self._tau), cons)

    def solve(self, gamma: float) -> FeasibilityResult:
        if gamma <= 0:
            raise ValueError("SINR target must be positive")
        self._t.value = 1.0 / math.sqrt(gamma)
        try:
            self._problem.solve(solver=self.solver, **self.solver_opts)
        except cp.error.SolverError as exc:
            raise NumericalFailure(str(exc)) from exc
        status = self._problem.status
        if status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            return FeasibilityResult(False, None, -math.inf, math.inf)
        if status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE) or self._u.value is None:
            raise NumericalFailure(f"conic solver returned status {status!r}")
        tau = float(self._tau.value)
        u = np.clip(np.asarray(self._u.value, dtype=float), 0.0, None)
        if tau > 1.0 + FEAS_TOL or not np.any(u[: self.template.n_nu] > 0):
            return FeasibilityResult(False, None, 1.0 - tau, tau)
        problem = _with_gamma(self.template, gamma)
        u = _to_full_power(problem, u)
        margin = problem.min_margin(u)
        return FeasibilityResult(True, problem.nu_from_u(u), margin, tau)


def _with_gamma(p: ConeProblem, gamma: float) -> ConeProblem:
    f = math.sqrt(p.gamma / gamma)
    soc = [SocConstraint(c.name, c.A, c.b, c.c * f, c.d, c.kind) if c.kind == "sinr" else c for c in p.soc]
    return ConeProblem(gamma=float(gamma), shape=p.shape, scale=p.scale, n_vars=p.n_vars, soc=soc,
                       linear_G=p.linear_G, linear_h=p.linear_h, noise_power=p.noise_power,
                       power_constraint=p.power_constraint)


def _to_full_power(p: ConeProblem, u: np.ndarray) -> np.ndarray:
    """Scale u so the busiest power group sits exactly at 1."""
    top = max(np.linalg.norm(c.A @ u) for c in p.soc if c.kind == "power")
    return u / top if top > 0 else u


def solve_feasibility(problem: ConeProblem, **solver_opts):
    """Return a PowerCoefficients meeting every constraint, or None if infeasible."""
    res = FeasibilitySolver(problem, **solver_opts).solve(problem.gamma)
    return PowerCoefficients(res.nu) if res.feasible else None


def interference_free_bound(stats: EstimatorStats, noise_power: float) -> np.ndarray:
    """Per-user SINR ceiling: all power on the user, no interference, (sum_n chi/sqrt(alpha))^2 / noise."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(stats.alpha > 0, stats.chi / np.sqrt(stats.alpha), 0.0)
    return r.sum(axis=2) ** 2 / noise_power


def single_user_bound(stats: EstimatorStats, noise_power: float, power_constraint: str = "per_cell") -> np.ndarray:
    """Exact best SINR of each user if every other user were silent.

    Keeps the user's own non-coherent term; with the power budget folded into
    the noise term the optimum is the Rayleigh quotient sum_n chi^2 / (zeta + noise * alpha / G),
    G being the number of power groups the user's coefficients span.
    """
    L, K, N = stats.chi.shape
    groups = 1 if power_constraint == "per_cell" else N
    j, k = np.meshgrid(np.arange(L), np.arange(K), indexing="ij")
    zeta_self = stats.zeta[j, k, j, k]  # (L, K, N)
    den = zeta_self + noise_power * stats.alpha / groups
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(den > 0, stats.chi ** 2 / den, 0.0)
    return q.sum(axis=2)


@dataclass
class MaxMinResult:
    nu_star: PowerCoefficients
    gamma_star: float
    iterations: int
    feasibility_margin: float
    status: str  # "Converged" or "BoundsExhausted"
    gamma_bounds: tuple = (0.0, 0.0)
    epsilon: float = 1e-3
    trace: list = field(default_factory=list)  # (gamma, feasible) per bisection step
    doublings: int = 0

    def iteration_bound(self) -> int:
        lo, hi = self.gamma_bounds
        return math.ceil(math.log2(max((hi - lo) / self.epsilon, 1.0))) + 1


def maxmin(stats: EstimatorStats, noise_power: float, epsilon: float = 1e-3,
           gamma_bounds: tuple | None = None, power_constraint: str = "per_cell",
           coherent: str = "direct", solver: str = "CLARABEL") -> MaxMinResult:
    """Bisection for the largest common SINR every user can reach."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if gamma_bounds is None:
        # no user can beat its own single-user ceiling, so the min over users bounds max-min
        g_lo, g_hi = 0.0, float(single_user_bound(stats, noise_power, power_constraint).min())
        check_hi = False
    else:
        g_lo, g_hi = map(float, gamma_bounds)
        check_hi = True
    if g_hi <= g_lo or g_hi <= 0:
        raise ValueError("invalid SINR search range")

    template = build_feasibility(stats, noise_power, g_hi, power_constraint, coherent)
    fs = FeasibilitySolver(template, solver=solver)

    doublings = 0
    status = "Converged"
    best = None
    if check_hi:
        while True:
            res = fs.solve(g_hi)
            if not res.feasible:
                break
            best = (g_hi, res)
            if doublings >= MAX_DOUBLINGS:
                status = "BoundsExhausted"
                break
            log.info("upper bound %.4g is feasible; doubling", g_hi)
            g_lo, g_hi = g_hi, 2 * g_hi
            doublings += 1
    if best is None and g_lo > 0:
        res = fs.solve(g_lo)
        if not res.feasible:
            raise ValueError(f"lower bound {g_lo} is infeasible")
        best = (g_lo, res)

    lo, hi = g_lo, g_hi
    trace = []
    iterations = 0
    while status == "Converged" and hi - lo >= epsilon:
        mid = 0.5 * (lo + hi)
        res = fs.solve(mid)
        trace.append((mid, res.feasible))
        iterations += 1
        if res.feasible:
            lo, best = mid, (mid, res)
        else:
            hi = mid

    if best is None:
        # the optimum is below epsilon; report a tiny feasible target
        g = max(lo, epsilon * 1e-6)
        res = fs.solve(g)
        if not res.feasible:
            raise NumericalFailure("no feasible point even for a vanishing SINR target")
        best = (g, res)
    gamma_star, res = best
    return MaxMinResult(nu_star=PowerCoefficients(res.nu), gamma_star=gamma_star, iterations=iterations,
                        feasibility_margin=res.margin, status=status, gamma_bounds=(g_lo, g_hi),
                        epsilon=epsilon, trace=trace, doublings=doublings)


def check_solution(stats: EstimatorStats, noise_power: float, result: MaxMinResult,
                   power_constraint: str = "per_cell") -> dict:
    rep = evaluate_sinr(stats, result.nu_star, noise_power)
    if power_constraint == "per_cell":
        power = per_cell_power(stats, result.nu_star)
    else:
        power = per_array_power(stats, result.nu_star)
    spread = (rep.sinr.max() - rep.sinr.min()) / result.gamma_star if result.gamma_star > 0 else 0.0
    return {"min_sinr": rep.min_sinr, "max_power": float(power.max()),
            "min_nu": float(result.nu_star.nu.min()), "sinr_spread": float(spread)}


# ---------------------------------------------------------------------------
# plain-text export

def export_cone(problem: ConeProblem) -> str:
    """Serialise a ConeProblem.

    Layout, one item per line::

        cone_format <version>
        gamma <g>
        noise_power <s2>
        shape <L> <K> <N>
        variables <n>
        scale <n_nu floats>          # nu = u / scale
        nonneg all
        soc <name> <kind> <dim>      # ||A u + b|| <= c.u + d
        a <row> <col> <value>        # repeated, nonzeros of A
        b <value> ...                # dim floats
        c <col>:<value> ...          # nonzeros of c
        d <value>
        end
        linear <rows>                # G u <= h
        g <row> <col> <value>
        h <value> ...
    """
    out = [f"cone_format {CONE_FORMAT_VERSION}", f"gamma {problem.gamma!r}",
           f"noise_power {problem.noise_power!r}", "shape " + " ".join(map(str, problem.shape)),
           f"variables {problem.n_vars}", "scale " + " ".join(repr(float(v)) for v in problem.scale),
           "nonneg all"]
    for c in problem.soc:
        out.append(f"soc {c.name} {c.kind} {c.dim}")
        A = c.A.tocoo()
        out.extend(f"a {r} {k} {v!r}" for r, k, v in zip(A.row, A.col, A.data.tolist()))
        out.append("b " + " ".join(repr(float(v)) for v in c.b))
        nz = np.flatnonzero(c.c)
        out.append("c " + " ".join(f"{i}:{float(c.c[i])!r}" for i in nz))
        out.append(f"d {float(c.d)!r}")
        out.append("end")
    G = problem.linear_G.tocoo()
    out.append(f"linear {problem.linear_G.shape[0]}")
    out.extend(f"g {r} {k} {v!r}" for r, k, v in zip(G.row, G.col, G.data.tolist()))
    out.append("h " + " ".join(repr(float(v)) for v in problem.linear_h))
    return "\n".join(out) + "\n"


def parse_cone(text: str) -> ConeProblem:
    lines = iter(text.splitlines())
    head = {}
    soc = []
    G_entries, h = [], np.zeros(0)
    n_lin = 0
    for line in lines:
        tok = line.split()
        if not tok:
            continue
        key = tok[0]
        if key == "soc":
            name, kind, dim = tok[1], tok[2], int(tok[3])
            entries, b, c, d = [], np.zeros(dim), np.zeros(head["variables"]), 0.0
            for inner in lines:
                t = inner.split()
                if t[0] == "end":
                    break
                if t[0] == "a":
                    entries.append((int(t[1]), int(t[2]), float(t[3])))
                elif t[0] == "b":
                    b = np.array([float(v) for v in t[1:]])
                elif t[0] == "c":
                    for pair in t[1:]:
                        i, v = pair.split(":")
                        c[int(i)] = float(v)
                elif t[0] == "d":
                    d = float(t[1])
            r, k, v = zip(*entries) if entries else ((), (), ())
            A = sp.csr_matrix((v, (r, k)), shape=(dim, head["variables"]))
            soc.append(SocConstraint(name, A, b, c, d, kind))
        elif key == "linear":
            n_lin = int(tok[1])
        elif key == "g":
            G_entries.append((int(tok[1]), int(tok[2]), float(tok[3])))
        elif key == "h":
            h = np.array([float(v) for v in tok[1:]])
        elif key == "cone_format":
            if int(tok[1]) != CONE_FORMAT_VERSION:
                raise ValueError(f"unsupported cone format {tok[1]}")
        elif key in ("gamma", "noise_power"):
            head[key] = float(tok[1])
        elif key == "variables":
            head[key] = int(tok[1])
        elif key == "shape":
            head[key] = tuple(int(v) for v in tok[1:])
        elif key == "scale":
            head[key] = np.array([float(v) for v in tok[1:]])
    r, k, v = zip(*G_entries) if G_entries else ((), (), ())
    G = sp.csr_matrix((v, (r, k)), shape=(n_lin, head["variables"]))
    kinds = {c.name.count(",") for c in soc if c.kind == "power"}
    pc = "per_array" if kinds == {1} else "per_cell"
    return ConeProblem(gamma=head["gamma"], shape=head["shape"], scale=head["scale"], n_vars=head["variables"],
                       soc=soc, linear_G=G, linear_h=h if n_lin else np.zeros(0),
                       noise_power=head["noise_power"], power_constraint=pc)
