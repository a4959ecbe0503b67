"""Polynomial systems: multi-start damped least squares plus exact certification.

Discovery is numeric, acceptance is exact.  A run goes

1. batched Levenberg-Marquardt from uniformly drawn starts,
2. greedy clustering of converged points,
3. rationalization of each representative, with a pin-and-resolve
   refinement for points sitting on positive-dimensional solution sets,
4. exact re-evaluation of every rational candidate.

Nothing is reported as a solution unless step 4 returns exactly zero.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import exact
from .algebra import LieAlgebra
from .complex import almost_complex_residual, integrability_residual_matrix
from .polynomial import Polynomial, as_polynomial, symbol_matrix

RATIONALIZE_ABS_TOL = 1e-9


# ---------------------------------------------------------------------------
# compiled evaluation


class _Compiled:
    """A list of polynomials evaluated as ``monomials(X) @ T.T`` on a batch."""

    def __init__(self, names: Sequence[str], polys: Sequence[Polynomial]):
        idx = {v: i for i, v in enumerate(names)}
        monos: dict = {}
        rows, cols, vals = [], [], []
        for i, p in enumerate(polys):
            for m, c in p.terms.items():
                k = monos.setdefault(m, len(monos))
                rows.append(i)
                cols.append(k)
                vals.append(float(c))
        n = len(names)
        self.E = np.zeros((max(len(monos), 1), n), dtype=int)
        for m, k in monos.items():
            for v, e in m:
                self.E[k, idx[v]] = e
        self.T = np.zeros((len(polys), self.E.shape[0]))
        np.add.at(self.T, (rows, cols), vals)
        self.maxexp = self.E.max(axis=0) if n else np.zeros(0, dtype=int)

    def monomials(self, X: np.ndarray) -> np.ndarray:
        out = np.ones((X.shape[0], self.E.shape[0]))
        for j, d in enumerate(self.maxexp):
            if d == 0:
                continue
            powers = X[:, j : j + 1] ** np.arange(d + 1)
            out *= powers[:, self.E[:, j]]
        return out

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.monomials(X) @ self.T.T


class PolySystem:
    """Stacked polynomial residuals over named unknowns.

    Provides a batched float residual, an analytic Jacobian and an exact
    re-evaluator that share the same polynomial data.
    """

    def __init__(self, names: Sequence[str], polys: Iterable, meta: Mapping | None = None):
        self.names = list(names)
        self.polys = [as_polynomial(p) for p in polys]
        self.meta = dict(meta or {})
        unknown = set().union(*(p.variables() for p in self.polys)) - set(self.names) if self.polys else set()
        if unknown:
            raise ValueError(f"polynomials use undeclared unknowns {sorted(unknown)}")
        self._res = _Compiled(self.names, self.polys)
        derivs = [p.derivative(v) for p in self.polys for v in self.names]
        self._jac = _Compiled(self.names, derivs)

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def m(self) -> int:
        return len(self.polys)

    def residual(self, x: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        r = self._res(X)
        return r[0] if np.ndim(x) == 1 else r

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(x, dtype=float))
        jac = self._jac(X).reshape(X.shape[0], self.m, self.n)
        return jac[0] if np.ndim(x) == 1 else jac

    def exact_residual(self, point: Sequence) -> list[Fraction]:
        values = dict(zip(self.names, (exact.to_fraction(v) for v in point)))
        return [p.evaluate(values) for p in self.polys]

    def substitute(self, fixed: Mapping[str, Fraction]) -> "PolySystem":
        """The system in the remaining unknowns after fixing some exactly."""
        names = [v for v in self.names if v not in fixed]
        return PolySystem(names, [p.substitute(fixed) for p in self.polys], self.meta)

    def degree(self) -> int:
        return max((p.degree() for p in self.polys), default=0)


# ---------------------------------------------------------------------------
# configuration and report


@dataclass(frozen=True)
class SolveConfig:
    starts: int = 512
    max_iters: int = 200
    tol: float = 1e-12
    seed: int = 0
    start_box: float = 3.0
    cluster_tol: float = 1e-6
    max_den: int = 1000
    damping: float = 1e-3
    damping_up: float = 10.0
    damping_down: float = 10.0
    refine_limit: int = 4
    search_bound: float = 6.0  # iterates are clipped to this box; 0 disables
    max_certified: int = 0  # 0 means no cap

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be at least 1")
        for name in ("tol", "start_box", "cluster_tol", "damping", "damping_up", "damping_down"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_den < 1 or self.max_iters < 1:
            raise ValueError("max_den and max_iters must be positive")


@dataclass
class Cluster:
    point: list[float]
    residual: float
    rationalized: bool = False


@dataclass
class SolveReport:
    certified: list[tuple[Fraction, ...]]
    clusters: list[Cluster]
    starts: int
    min_residual: float
    seed: int
    converged: int = 0
    config: dict = field(default_factory=dict)
    names: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "names": list(self.names),
            "certified": [[exact.fraction_str(v) for v in sol] for sol in self.certified],
            "clusters": [
                {"point": c.point, "residual": c.residual, "rationalized": c.rationalized} for c in self.clusters
            ],
            "starts": self.starts,
            "converged": self.converged,
            "min_residual": self.min_residual,
            "seed": self.seed,
            "config": dict(self.config),
        }

    @classmethod
    def from_json(cls, doc: Mapping) -> "SolveReport":
        return cls(
            certified=[tuple(Fraction(v) for v in sol) for sol in doc["certified"]],
            clusters=[Cluster(list(c["point"]), c["residual"], c.get("rationalized", False)) for c in doc["clusters"]],
            starts=doc["starts"],
            min_residual=doc["min_residual"],
            seed=doc["seed"],
            converged=doc.get("converged", 0),
            config=dict(doc.get("config", {})),
            names=list(doc.get("names", [])),
        )


# ---------------------------------------------------------------------------
# building blocks


def rationalize(x: float, max_den: int = 1000, abs_tol: float = RATIONALIZE_ABS_TOL) -> Fraction | None:
    """Best convergent ``p/q`` with ``q <= max_den``, or None.

    Accepted only if ``|x - p/q| <= 1/(2 q^2)`` and ``|x - p/q| <= abs_tol``.
    The second test is what rejects irrationals that happen to sit close to
    a small-denominator convergent.
    """
    if not math.isfinite(x):
        return None
    q = Fraction(x).limit_denominator(max_den)
    err = abs(x - float(q))
    if err <= 1 / (2 * q.denominator**2) and err <= abs_tol:
        return q
    return None


def certify(S: PolySystem, candidate: Sequence) -> bool:
    """True iff the exact residual is identically zero."""
    if len(candidate) != S.n:
        raise ValueError(f"candidate has length {len(candidate)}, system has {S.n} unknowns")
    return all(v == 0 for v in S.exact_residual(candidate))


def cluster(points: Sequence[np.ndarray], tol: float) -> list[np.ndarray]:
    """Greedy infinity-norm clustering; returns the representatives."""
    reps: list[np.ndarray] = []
    for p in points:
        p = np.asarray(p, dtype=float)
        if not any(np.max(np.abs(p - r)) < tol for r in reps):
            reps.append(p)
    return reps


def _inf_norm(r: np.ndarray) -> np.ndarray:
    return np.max(np.abs(r), axis=-1) if r.shape[-1] else np.zeros(r.shape[:-1])


def levenberg_marquardt(
    S: PolySystem,
    X0: np.ndarray,
    cfg: SolveConfig,
    free: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Batched damped Gauss-Newton.  Returns final points and residual inf-norms.

    ``free`` masks which coordinates may move; the others stay at their
    starting values.
    """
    X = np.array(X0, dtype=float, copy=True)
    B = X.shape[0]
    free = np.ones(S.n, dtype=bool) if free is None else np.asarray(free, dtype=bool)
    cols = np.flatnonzero(free)
    lam = np.full(B, cfg.damping)
    r = S.residual(X)
    cost = np.einsum("bm,bm->b", r, r)
    active = np.ones(B, dtype=bool)
    eye = np.eye(len(cols))
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.max_iters):
            active &= _inf_norm(r) >= cfg.tol
            active &= lam < 1e16
            act = np.flatnonzero(active)
            if act.size == 0 or cols.size == 0:
                break
            jac = S.jacobian(X[act])[:, :, cols]
            jt = jac.transpose(0, 2, 1)
            lhs = jt @ jac + lam[act, None, None] * eye
            rhs = -np.einsum("bnm,bm->bn", jt, r[act])
            try:
                step = np.linalg.solve(lhs, rhs[..., None])[..., 0]
            except np.linalg.LinAlgError:
                step = np.stack([np.linalg.lstsq(a, b, rcond=None)[0] for a, b in zip(lhs, rhs)])
            trial = X[act].copy()
            trial[:, cols] += step
            if cfg.search_bound:
                trial[:, cols] = np.clip(trial[:, cols], -cfg.search_bound, cfg.search_bound)
            r_trial = S.residual(trial)
            cost_trial = np.einsum("bm,bm->b", r_trial, r_trial)
            good = np.isfinite(cost_trial) & (cost_trial < cost[act])
            idx = act[good]
            X[idx] = trial[good]
            r[idx] = r_trial[good]
            cost[idx] = cost_trial[good]
            lam[idx] = np.maximum(lam[idx] / cfg.damping_down, 1e-15)
            lam[act[~good]] *= cfg.damping_up
    res = _inf_norm(r)
    res[~np.isfinite(res)] = np.inf
    return X, res


SNAP_TOL = 1e-5  # refinement guesses only; certification stays exact
SNAP_DEN = 100
PIN_TOL = 1e-10


def _simple_rationals(x: float, window: float, max_den: int) -> list[Fraction]:
    """Rationals within ``window`` of ``x``, simplest (smallest denominator) first."""
    cands = set()
    for d in range(1, max_den + 1):
        lo, hi = math.ceil((x - window) * d), math.floor((x + window) * d)
        cands.update(Fraction(k, d) for k in range(lo, hi + 1))
    return sorted(cands, key=lambda q: (q.denominator, abs(float(q) - x), q))


def _roughness(x: np.ndarray, max_den: int = 6) -> float:
    """Mean distance from each coordinate to its nearest rational with small denominator."""
    x = np.asarray(x, dtype=float)
    dens = np.arange(1, max_den + 1)[:, None]
    return float(np.abs(np.round(x * dens) / dens - x).min(axis=0).mean())


def _exact_linear(S: PolySystem, fixed: dict, x: np.ndarray) -> list[Fraction] | None:
    """Solve the system exactly once the remaining unknowns enter linearly."""
    reduced = S.substitute(fixed)
    if any(p.degree() > 1 for p in reduced.polys):
        return None
    names = reduced.names
    if not names:
        return [fixed[v] for v in S.names]
    a = exact.zeros((len(reduced.polys), len(names)))
    b = []
    for i, p in enumerate(reduced.polys):
        for j, v in enumerate(names):
            a[i, j] = p.terms.get(((v, 1),), Fraction(0))
        b.append(-p.constant())
    try:
        part, kernel = exact.solve_affine(a, b)
    except Exception:
        return None
    y = part
    if kernel:
        # stay near the float point: project, then snap the coordinates
        pos = {v: i for i, v in enumerate(S.names)}
        target = np.array([x[pos[v]] for v in names])
        H = exact.to_float(np.array(kernel).T)
        t, *_ = np.linalg.lstsq(H, target - exact.to_float(part), rcond=None)
        coeffs = [Fraction(ti).limit_denominator(12) for ti in t]
        y = part.copy()
        for c, h in zip(coeffs, kernel):
            y = y + h * c
    sol = dict(fixed)
    sol.update(zip(names, y))
    return [sol[v] for v in S.names]


def _null_space(S: PolySystem, x: np.ndarray, free: np.ndarray) -> np.ndarray:
    """Orthonormal rows spanning the numerical kernel of the Jacobian in the free coordinates."""
    jac = S.jacobian(x)[:, free]
    if jac.shape[1] == 0:
        return np.zeros((0, 0))
    if jac.shape[0] == 0:
        return np.eye(jac.shape[1])
    _, sv, vt = np.linalg.svd(jac)
    cutoff = 1e-7 * max(sv.max(initial=0.0), 1.0)
    return vt[int(np.sum(sv > cutoff)) :]


def _nonlinear_counts(polys: Sequence[Polynomial]) -> tuple[dict, dict]:
    """Per variable: nonlinear monomials containing it, and whether it appears squared."""
    count: dict[str, int] = {}
    squared: dict[str, bool] = {}
    for p in polys:
        for m in p.terms:
            if sum(e for _, e in m) < 2:
                continue
            for v, e in m:
                count[v] = count.get(v, 0) + 1
                squared[v] = squared.get(v, False) or e > 1
    return count, squared


def _complete(S: PolySystem, fixed: dict, x: np.ndarray, max_den: int) -> tuple[Fraction, ...] | None:
    """Finish a pinned point: exact linear solve, or snapping the remaining coordinates."""
    sol = _exact_linear(S, fixed, x)
    if sol is not None:
        return tuple(sol) if certify(S, sol) else None
    snapped = dict(fixed)
    for v, xv in zip(S.names, x):
        if v not in snapped:
            q = rationalize(float(xv), max_den, abs_tol=SNAP_TOL)
            if q is not None:
                snapped[v] = q
    if len(snapped) < S.n:
        # leftovers (typically an inverse-determinant variable) may be linear now
        if len(snapped) == len(fixed):
            return None
        sol = _exact_linear(S, snapped, x)
        return tuple(sol) if sol is not None and certify(S, sol) else None
    out = [snapped[v] for v in S.names]
    return tuple(out) if certify(S, out) else None


def _pin(S, x, fixed, v, values, cfg, max_den):
    """Try pinning ``v`` to each value (batched).  Returns (point, solution).

    ``solution`` is set when some pinned point completes to a certified
    rational solution; otherwise ``point`` is the simplest pin that still
    converged, or None.
    """
    pos = S.names.index(v)
    mask = np.array([u not in fixed and u != v for u in S.names])
    X0 = np.repeat(x[None, :], len(values), axis=0)
    X0[:, pos] = [float(q) for q in values]
    pts, res = levenberg_marquardt(S, X0, cfg, free=mask)
    first = None
    for q, pt, r in zip(values, pts, res):
        if r >= PIN_TOL:
            continue
        trial = dict(fixed)
        trial[v] = q
        sol = _complete(S, trial, pt, max_den)
        if sol is not None:
            return pt, sol, q
        if first is None:
            first = (pt, q)
    if first is None:
        return None, None, None
    return first[0], None, first[1]


def _refine_once(S: PolySystem, x: np.ndarray, cfg: SolveConfig, shift: int, max_den: int):
    pos = {v: i for i, v in enumerate(S.names)}
    fixed: dict[str, Fraction] = {}
    blocked: set[str] = set()
    n = len(S.names)
    while True:
        sol = _complete(S, fixed, x, max_den)
        if sol is not None:
            return sol
        free = np.array([v not in fixed for v in S.names])
        free_names = [v for v in S.names if v not in fixed]
        null = _null_space(S, x, free)
        weights = dict(zip(free_names, np.linalg.norm(null, axis=0) if null.size else np.zeros(len(free_names))))
        # locally forced coordinates that already look rational are fixed first
        forced = [
            v for v in free_names
            if weights[v] < 1e-6 and v not in blocked and rationalize(float(x[pos[v]]), max_den, SNAP_TOL) is not None
        ]
        if forced:
            v = forced[0]
            values = [rationalize(float(x[pos[v]]), max_den, SNAP_TOL)]
        else:
            movable = [v for v in free_names if weights[v] >= 1e-6 and v not in blocked]
            if not movable:
                return None
            count, squared = _nonlinear_counts(S.substitute(fixed).polys)
            v = min(movable, key=lambda u: (not squared.get(u, False), -count.get(u, 0), (pos[u] + shift) % n))
            # the last free direction decides rationality of everything forced, so search wider
            last = null.shape[0] <= 1
            values = _simple_rationals(x[pos[v]], 1.0 if last else 0.5, 24 if last else 6)
            values = values[: 160 if last else 24]
        pt, sol, q = _pin(S, x, fixed, v, values, cfg, max_den)
        if sol is not None:
            return sol
        if pt is None:
            blocked.add(v)
        else:
            fixed[v] = q
            x = pt


def refine(S: PolySystem, x: np.ndarray, cfg: SolveConfig, attempts: int = 3) -> tuple[Fraction, ...] | None:
    """Turn a converged float point into a certified rational one, or None.

    Direct rationalization is tried first.  Otherwise coordinates that can
    move along the local solution set are pinned one at a time to simple
    rationals, re-solving the rest after each pin, until the remaining
    unknowns enter linearly (solved exactly) or snap to rationals that
    certify.  Variables in nonlinear terms are pinned first.
    """
    x = np.array(x, dtype=float)
    direct = [rationalize(float(v), cfg.max_den) for v in x]
    if all(q is not None for q in direct) and certify(S, direct):
        return tuple(direct)
    lm_cfg = SolveConfig(max_iters=100, tol=min(cfg.tol, PIN_TOL), damping=cfg.damping, search_bound=cfg.search_bound)
    for k in range(attempts):
        sol = _refine_once(S, x, lm_cfg, shift=k * 5, max_den=min(cfg.max_den, SNAP_DEN))
        if sol is not None:
            return sol
    return None


def solve_multistart(S: PolySystem, cfg: SolveConfig | None = None, **overrides) -> SolveReport:
    """Multi-start search; deterministic for a fixed seed."""
    cfg = cfg or SolveConfig()
    if overrides:
        cfg = SolveConfig(**{**asdict(cfg), **overrides})
    rng = np.random.default_rng(cfg.seed)
    X0 = rng.uniform(-cfg.start_box, cfg.start_box, size=(cfg.starts, S.n))
    X, res = levenberg_marquardt(S, X0, cfg)
    converged = np.flatnonzero(res < cfg.tol)
    reps = cluster([X[i] for i in converged], cfg.cluster_tol)
    rep_res = [float(_inf_norm(S.residual(r))) for r in reps]
    # points already near simple rationals refine most often
    order = sorted(range(len(reps)), key=lambda k: (_roughness(reps[k]), rep_res[k], k))
    certified: list[tuple[Fraction, ...]] = []
    clusters = [Cluster(point=reps[k].tolist(), residual=rep_res[k]) for k in range(len(reps))]
    for rank_, k in enumerate(order):
        if rank_ >= cfg.refine_limit:
            break
        if cfg.max_certified and len(certified) >= cfg.max_certified:
            break
        sol = refine(S, reps[k], cfg)
        if sol is not None:
            clusters[k].rationalized = True
            if sol not in certified:
                certified.append(sol)
    finite = res[np.isfinite(res)]
    return SolveReport(
        certified=certified,
        clusters=clusters,
        starts=cfg.starts,
        min_residual=float(finite.min()) if finite.size else math.inf,
        seed=cfg.seed,
        converged=int(converged.size),
        config=asdict(cfg),
        names=list(S.names),
    )


# ---------------------------------------------------------------------------
# system builders


def build_complex_structure_system(L: LieAlgebra) -> PolySystem:
    """Unknowns: the entries of J (row-major).  Residuals: J^2 + I and every R^a."""
    J, names = symbol_matrix("J", L.dim, L.dim)
    polys = list(almost_complex_residual(J).flat)
    polys += list(integrability_residual_matrix(L, J).flat)
    return PolySystem(names, polys, {"kind": "complex-structure", "algebra": L.name, "bindings": L.bindings_str()})


def vector_to_matrix(values: Sequence, rows: int, cols: int) -> np.ndarray:
    out = np.empty((rows, cols), dtype=object)
    for k, v in enumerate(values[: rows * cols]):
        out[k // cols, k % cols] = v
    return out


def solutions_as_matrices(report: SolveReport, dim: int) -> list[np.ndarray]:
    return [vector_to_matrix(sol, dim, dim) for sol in report.certified]

