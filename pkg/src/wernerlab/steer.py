"""Assemblages, steering robustness, Bell correlations and nonlocal content.

The steering-robustness SDP minimizes the total weight of a local-hidden-state
covering: min sum_lambda tr(sigma_lambda) - 1 subject to
sum_lambda D(a|x,lambda) sigma_lambda >= rho_{a|x} for every (a, x), with
deterministic response functions D(a|x,lambda) = [lambda_x == a].

State-level lower bounds come from a see-saw: solve the SDP for the current
measurements, read off the dual operators F_{a|x}, then improve the
measurements against the linearized objective sum tr(M_{a|x} G_{a|x}) - 1,
which is a valid SR lower bound for any POVM choice since the dual point stays
feasible.  Measurement updates are pairwise eigenvector rotations, so each
accepted step never lowers the bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np
import scipy.sparse as sp

from .qmat import DensityMatrix, dagger, kron, trace_out
from .solver import Block, ConicProgram, mat_real, solve, vec_real
from .states import haar_unitary

MAX_LAMBDA = 4096


@dataclass(frozen=True)
class MeasurementSet:
    """POVMs M_{a|x}: effects[x][a] are d x d PSD operators summing to the identity."""

    effects: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        d = self.effects[0][0].shape[0]
        for setting in self.effects:
            total = np.zeros((d, d), dtype=complex)
            for eff in setting:
                if eff.shape != (d, d):
                    raise ValueError("all effects must share one dimension")
                if np.linalg.eigvalsh((eff + dagger(eff)) / 2)[0] < -1e-9:
                    raise ValueError("effect is not PSD within 1e-9")
                total = total + eff
            if np.max(np.abs(total - np.eye(d))) > 1e-9:
                raise ValueError("effects of one setting must sum to the identity")

    @property
    def n_settings(self) -> int:
        return len(self.effects)

    @property
    def n_outcomes(self) -> int:
        return len(self.effects[0])

    @property
    def dim(self) -> int:
        return self.effects[0][0].shape[0]


def projective_from_unitaries(unitaries: list[np.ndarray]) -> MeasurementSet:
    """Rank-1 projective measurements onto the rotated computational bases."""
    settings = []
    for u in unitaries:
        d = u.shape[0]
        settings.append(tuple(np.outer(u[:, a], u[:, a].conj()) for a in range(d)))
    return MeasurementSet(tuple(settings))


def random_projective(d: int, n_settings: int, rng: np.random.Generator) -> MeasurementSet:
    return projective_from_unitaries([haar_unitary(d, rng) for _ in range(n_settings)])


def random_grouped_projective(
    d: int, n_settings: int, n_outcomes: int, rng: np.random.Generator
) -> MeasurementSet:
    """Projective measurements with fewer outcomes than levels: rank-1 pieces
    of a Haar-rotated basis grouped round-robin into ``n_outcomes`` effects."""
    settings = []
    for _ in range(n_settings):
        u = haar_unitary(d, rng)
        effects = [np.zeros((d, d), dtype=complex) for _ in range(n_outcomes)]
        for level in range(d):
            effects[level % n_outcomes] += np.outer(u[:, level], u[:, level].conj())
        settings.append(tuple(effects))
    return MeasurementSet(tuple(settings))


def mub_qubit_measurements(n_settings: int = 2) -> MeasurementSet:
    """Qubit Z, X (and Y) bases."""
    z = np.eye(2, dtype=complex)
    x = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    y = np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2)
    return projective_from_unitaries([z, x, y][:n_settings])


@dataclass(frozen=True)
class Assemblage:
    """Sub-normalized conditional states sigma[x][a] left on the unmeasured side."""

    sigma: tuple[tuple[np.ndarray, ...], ...]

    def __post_init__(self):
        reduced = None
        for setting in self.sigma:
            tot = sum(setting)
            if reduced is None:
                reduced = tot
            elif np.max(np.abs(tot - reduced)) > 1e-8:
                raise ValueError("assemblage signals: setting marginals differ")
            for s in setting:
                if np.linalg.eigvalsh((s + dagger(s)) / 2)[0] < -1e-9:
                    raise ValueError("conditional state is not PSD within 1e-9")
        if abs(np.trace(reduced).real - 1.0) > 1e-9:
            raise ValueError("assemblage is not normalized")

    @property
    def n_settings(self) -> int:
        return len(self.sigma)

    @property
    def n_outcomes(self) -> int:
        return len(self.sigma[0])

    @property
    def dim(self) -> int:
        return self.sigma[0][0].shape[0]


def assemblage_from(rho: DensityMatrix, meas: MeasurementSet, steering_side: str = "A") -> Assemblage:
    """Conditional states of the other side when ``steering_side`` is measured."""
    sigma = []
    for setting in meas.effects:
        row = []
        for eff in setting:
            if steering_side == "A":
                if meas.dim != rho.dimA:
                    raise ValueError("measurement dimension does not match side A")
                big = kron(eff, np.eye(rho.dimB))
                red = trace_out(big @ rho.mat, [rho.dimA, rho.dimB], [0])
            else:
                if meas.dim != rho.dimB:
                    raise ValueError("measurement dimension does not match side B")
                big = kron(np.eye(rho.dimA), eff)
                red = trace_out(big @ rho.mat, [rho.dimA, rho.dimB], [1])
            row.append((red + dagger(red)) / 2)
        sigma.append(tuple(row))
    return Assemblage(tuple(sigma))


@lru_cache(maxsize=32)
def deterministic_strategies(n_settings: int, n_outcomes: int) -> tuple[tuple[int, ...], ...]:
    """All response functions lambda = (lambda_1..lambda_ns), lexicographic."""
    return tuple(product(range(n_outcomes), repeat=n_settings))


@dataclass
class SRResult:
    value: float
    gap: float
    status: str
    duals: tuple[tuple[np.ndarray, ...], ...]  # F_{a|x} per [x][a]


def sr_solve(assemblage: Assemblage, tol: float = 1e-7, max_iter: int = 200000) -> SRResult:
    """Steering robustness SDP with its dual steering functional."""
    n_s, n_o, d = assemblage.n_settings, assemblage.n_outcomes, assemblage.dim
    if n_o**n_s > MAX_LAMBDA:
        raise ValueError(f"lambda space {n_o}^{n_s} exceeds {MAX_LAMBDA}")
    lambdas = deterministic_strategies(n_s, n_o)
    n_lam = len(lambdas)
    k = d * d
    n_cons_blocks = n_s * n_o

    rows, cols, vals = [], [], []
    b = np.empty(n_cons_blocks * k)
    for x in range(n_s):
        for a in range(n_o):
            blk = x * n_o + a
            row0 = blk * k
            b[row0 : row0 + k] = vec_real(assemblage.sigma[x][a])
            for il, lam in enumerate(lambdas):
                if lam[x] != a:
                    continue
                col0 = il * k
                for r in range(k):
                    rows.append(row0 + r)
                    cols.append(col0 + r)
                    vals.append(1.0)
            slack0 = (n_lam + blk) * k
            for r in range(k):
                rows.append(row0 + r)
                cols.append(slack0 + r)
                vals.append(-1.0)
    n_var = (n_lam + n_cons_blocks) * k
    a_mat = sp.csr_matrix((vals, (rows, cols)), shape=(len(b), n_var))
    c = np.zeros(n_var)
    eye_comp = vec_real(np.eye(d))
    for il in range(n_lam):
        c[il * k : il * k + d] = eye_comp[:d]
    blocks = tuple([Block("psd", d)] * (n_lam + n_cons_blocks))
    sol = solve(ConicProgram(blocks, c, a_mat, b), tol=tol, max_iter=max_iter)
    duals = []
    for x in range(n_s):
        row = []
        for a in range(n_o):
            blk = x * n_o + a
            f = mat_real(sol.y[blk * k : (blk + 1) * k], d)
            row.append((f + dagger(f)) / 2)
        duals.append(tuple(row))
    return SRResult(
        value=float(sol.primal_obj) - 1.0,
        gap=sol.gap,
        status=sol.status,
        duals=tuple(duals),
    )


def steering_robustness(assemblage: Assemblage, tol: float = 1e-7) -> float:
    """SR of an assemblage; zero means a local-hidden-state model exists."""
    return sr_solve(assemblage, tol=tol).value


def _response_operators(rho: DensityMatrix, duals, steering_side: str):
    """G_{a|x} with sum_ax tr(M_{a|x} G_{a|x}) - 1 the dual steering value."""
    out = []
    for row in duals:
        g_row = []
        for f in row:
            if steering_side == "A":
                big = kron(np.eye(rho.dimA), f) @ rho.mat
                g = trace_out(big, [rho.dimA, rho.dimB], [1])
            else:
                big = kron(f, np.eye(rho.dimB)) @ rho.mat
                g = trace_out(big, [rho.dimA, rho.dimB], [0])
            g_row.append((g + dagger(g)) / 2)
        out.append(tuple(g_row))
    return out


def _pairwise_basis_update(vectors: np.ndarray, response: list[np.ndarray], sweeps: int = 3) -> np.ndarray:
    """Improve an orthonormal outcome basis against sum_a <m_a|G_a|m_a>.

    Each (a, a') pair is rotated to the eigenbasis of the restriction of
    G_a - G_a' onto their span: an exact two-dimensional ascent step.
    """
    m = vectors.copy()
    n_o = m.shape[1]
    for _ in range(sweeps):
        for a in range(n_o):
            for ap in range(a + 1, n_o):
                span = np.column_stack([m[:, a], m[:, ap]])
                diff = dagger(span) @ (response[a] - response[ap]) @ span
                w, q = np.linalg.eigh((diff + dagger(diff)) / 2)
                # top eigenvector carries outcome a
                new = span @ q[:, ::-1]
                m[:, a], m[:, ap] = new[:, 0], new[:, 1]
    return m


def _objective(meas: MeasurementSet, response) -> float:
    total = 0.0
    for x in range(meas.n_settings):
        for a in range(meas.n_outcomes):
            total += float(np.real(np.trace(meas.effects[x][a] @ response[x][a])))
    return total


def _update_measurements(meas: MeasurementSet, response) -> MeasurementSet:
    """Per-setting eigenvector updates, keeping a setting only when it improves."""
    new_settings = []
    for x in range(meas.n_settings):
        setting = meas.effects[x]
        old_val = sum(float(np.real(np.trace(setting[a] @ response[x][a]))) for a in range(len(setting)))
        # current effects are rank-1 projectors onto an orthonormal basis
        basis = np.column_stack(
            [np.linalg.eigh(setting[a])[1][:, -1] for a in range(len(setting))]
        )
        updated = _pairwise_basis_update(basis, list(response[x]))
        cand = tuple(np.outer(updated[:, a], updated[:, a].conj()) for a in range(len(setting)))
        new_val = sum(float(np.real(np.trace(cand[a] @ response[x][a]))) for a in range(len(setting)))
        new_settings.append(cand if new_val >= old_val - 1e-12 else setting)
    return MeasurementSet(tuple(new_settings))


@dataclass
class SRLowerBound:
    best: float
    per_restart: list[float]
    best_measurements: MeasurementSet | None = None
    best_gap: float = 0.0


def sr_state_lower_bound(
    rho: DensityMatrix,
    n_settings: int,
    n_outcomes: int | None = None,
    restarts: int = 200,
    seed: int = 0,
    steering_side: str = "A",
    sdp_tol: float = 1e-7,
    max_rounds: int = 200,
) -> SRLowerBound:
    """Best steering-robustness lower bound over seeded see-saw restarts."""
    d = rho.dimA if steering_side == "A" else rho.dimB
    n_o = d if n_outcomes is None else n_outcomes
    if n_o != d:
        raise ValueError("projective see-saw uses n_outcomes = local dimension")
    per_restart = []
    best, best_meas, best_gap = 0.0, None, 0.0
    for r in range(restarts):
        rng = np.random.default_rng(seed ^ r if r else seed)
        meas = random_projective(d, n_settings, rng)
        res = sr_solve(assemblage_from(rho, meas, steering_side), tol=sdp_tol)
        value = res.value
        for _ in range(max_rounds):
            response = _response_operators(rho, res.duals, steering_side)
            new_meas = _update_measurements(meas, response)
            new_res = sr_solve(assemblage_from(rho, new_meas, steering_side), tol=sdp_tol)
            if new_res.value > value + 1e-7:
                meas, res, value = new_meas, new_res, new_res.value
            else:
                value = max(value, new_res.value)
                break
        per_restart.append(value)
        if value > best:
            best, best_meas, best_gap = value, meas, res.gap
    return SRLowerBound(best=best, per_restart=per_restart, best_measurements=best_meas, best_gap=best_gap)


@dataclass(frozen=True)
class Correlation:
    """Joint conditional distribution p[x, y, a, b] for a fixed scenario."""

    p: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=float)
        if arr.ndim != 4:
            raise ValueError("correlation table must have shape (x, y, a, b)")
        if np.min(arr) < -1e-9:
            raise ValueError("negative probabilities")
        sums = arr.sum(axis=(2, 3))
        if np.max(np.abs(sums - 1.0)) > 1e-8:
            raise ValueError("per-setting distributions must be normalized")
        marg_a = arr.sum(axis=3)  # (x, y, a)
        if np.max(np.abs(marg_a - marg_a[:, :1, :])) > 1e-8:
            raise ValueError("signaling from B to A detected")
        marg_b = arr.sum(axis=2)
        if np.max(np.abs(marg_b - marg_b[:1, :, :])) > 1e-8:
            raise ValueError("signaling from A to B detected")
        object.__setattr__(self, "p", arr)

    @property
    def scenario(self) -> tuple[int, int, int, int]:
        return self.p.shape


def correlation_from(rho: DensityMatrix, meas_a: MeasurementSet, meas_b: MeasurementSet) -> Correlation:
    """P(a,b|x,y) = tr[rho M_{a|x} (x) M_{b|y}]."""
    if meas_a.dim != rho.dimA or meas_b.dim != rho.dimB:
        raise ValueError("measurement dimensions do not match the state")
    p = np.empty((meas_a.n_settings, meas_b.n_settings, meas_a.n_outcomes, meas_b.n_outcomes))
    for x, sa in enumerate(meas_a.effects):
        for y, sb in enumerate(meas_b.effects):
            for a, ma in enumerate(sa):
                for bq, mb in enumerate(sb):
                    p[x, y, a, bq] = float(np.real(np.trace(rho.mat @ kron(ma, mb))))
    return Correlation(p)


def nonlocal_content(corr: Correlation, tol: float = 1e-9) -> float:
    """Minimal weight v with P = (1-v) P_local + v P_nonsignaling.

    LP over the local polytope's product deterministic vertices with the
    nonsignaling part kept as constrained free mass.
    """
    sol = solve(nonlocal_content_program(corr), tol=tol)
    return float(np.clip(sol.primal_obj, 0.0, 1.0))


def nonlocal_content_program(corr: Correlation) -> ConicProgram:
    """The nonlocal-content LP in standard conic form (variables q, R, v)."""
    n_sa, n_sb, n_oa, n_ob = corr.scenario
    if n_oa ** (n_sa) * n_ob ** (n_sb) > 10**6:
        raise ValueError("scenario too large for vertex enumeration")
    las = deterministic_strategies(n_sa, n_oa)
    mus = deterministic_strategies(n_sb, n_ob)
    n_q = len(las) * len(mus)
    n_r = n_sa * n_sb * n_oa * n_ob

    def r_index(x, y, a, bq):
        return ((x * n_sb + y) * n_oa + a) * n_ob + bq

    rows, cols, vals = [], [], []
    b_vec = []
    row = 0
    # decomposition constraints
    for x in range(n_sa):
        for y in range(n_sb):
            for a in range(n_oa):
                for bq in range(n_ob):
                    for il, lam in enumerate(las):
                        if lam[x] != a:
                            continue
                        for im, mu in enumerate(mus):
                            if mu[y] != bq:
                                continue
                            rows.append(row)
                            cols.append(il * len(mus) + im)
                            vals.append(1.0)
                    rows.append(row)
                    cols.append(n_q + r_index(x, y, a, bq))
                    vals.append(1.0)
                    b_vec.append(corr.p[x, y, a, bq])
                    row += 1
    # total weight: sum q + v = 1
    for j in range(n_q):
        rows.append(row)
        cols.append(j)
        vals.append(1.0)
    rows.append(row)
    cols.append(n_q + n_r)
    vals.append(1.0)
    b_vec.append(1.0)
    row += 1
    # nonsignaling of the nonlocal mass
    for x in range(n_sa):
        for a in range(n_oa):
            for y in range(1, n_sb):
                for bq in range(n_ob):
                    rows.append(row)
                    cols.append(n_q + r_index(x, y, a, bq))
                    vals.append(1.0)
                    rows.append(row)
                    cols.append(n_q + r_index(x, 0, a, bq))
                    vals.append(-1.0)
                b_vec.append(0.0)
                row += 1
    for y in range(n_sb):
        for bq in range(n_ob):
            for x in range(1, n_sa):
                for a in range(n_oa):
                    rows.append(row)
                    cols.append(n_q + r_index(x, y, a, bq))
                    vals.append(1.0)
                    rows.append(row)
                    cols.append(n_q + r_index(0, y, a, bq))
                    vals.append(-1.0)
                b_vec.append(0.0)
                row += 1

    n_var = n_q + n_r + 1
    a_mat = sp.csr_matrix((vals, (rows, cols)), shape=(row, n_var))
    c = np.zeros(n_var)
    c[-1] = 1.0
    return ConicProgram((Block("nonneg", n_var),), c, a_mat, np.asarray(b_vec))


def chsh_coefficients() -> np.ndarray:
    """CHSH as a (x, y, a, b) coefficient table: sum of +-<A_x B_y> with the last sign flipped."""
    c = np.zeros((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            s = -1.0 if (x, y) == (1, 1) else 1.0
            for a in range(2):
                for bq in range(2):
                    c[x, y, a, bq] = s * (1.0 if a == bq else -1.0)
    return c


def bell_value(corr: Correlation, coefficients: np.ndarray) -> float:
    return float(np.sum(corr.p * coefficients))


def _bell_response_for_a(rho, coefficients, meas_b):
    n_sa = coefficients.shape[0]
    n_oa = coefficients.shape[2]
    out = []
    for x in range(n_sa):
        row = []
        for a in range(n_oa):
            g = np.zeros((rho.dimA, rho.dimA), dtype=complex)
            for y in range(coefficients.shape[1]):
                for bq in range(coefficients.shape[3]):
                    if coefficients[x, y, a, bq] == 0.0:
                        continue
                    red = trace_out(
                        kron(np.eye(rho.dimA), meas_b.effects[y][bq]) @ rho.mat,
                        [rho.dimA, rho.dimB],
                        [1],
                    )
                    g += coefficients[x, y, a, bq] * red
            row.append((g + dagger(g)) / 2)
        out.append(tuple(row))
    return out


def _bell_response_for_b(rho, coefficients, meas_a):
    n_sb = coefficients.shape[1]
    n_ob = coefficients.shape[3]
    out = []
    for y in range(n_sb):
        row = []
        for bq in range(n_ob):
            g = np.zeros((rho.dimB, rho.dimB), dtype=complex)
            for x in range(coefficients.shape[0]):
                for a in range(coefficients.shape[2]):
                    if coefficients[x, y, a, bq] == 0.0:
                        continue
                    red = trace_out(
                        kron(meas_a.effects[x][a], np.eye(rho.dimB)) @ rho.mat,
                        [rho.dimA, rho.dimB],
                        [0],
                    )
                    g += coefficients[x, y, a, bq] * red
            row.append((g + dagger(g)) / 2)
        out.append(tuple(row))
    return out


def _exact_two_outcome_update(response) -> MeasurementSet:
    """Optimal POVM per setting for two outcomes: positive part of G_0 - G_1."""
    settings = []
    for g0, g1 in response:
        w, q = np.linalg.eigh(g0 - g1)
        pos = (q * (w > 0)) @ dagger(q)
        settings.append((pos, np.eye(g0.shape[0], dtype=complex) - pos))
    return MeasurementSet(tuple(settings))


def _best_povm_update(meas: MeasurementSet, response) -> MeasurementSet:
    if meas.n_outcomes == 2:
        return _exact_two_outcome_update(response)
    return _update_measurements(meas, response)


def assemblage_to_json(asm: Assemblage) -> str:
    from .serialize import matrix_to_obj

    return json.dumps(
        {
            "n_settings": asm.n_settings,
            "n_outcomes": asm.n_outcomes,
            "dim": asm.dim,
            "sigma": [[matrix_to_obj(s) for s in setting] for setting in asm.sigma],
        }
    )


def assemblage_from_json(text: str) -> Assemblage:
    from .serialize import matrix_from_obj

    obj = json.loads(text)
    d = obj["dim"]
    sigma = tuple(
        tuple(matrix_from_obj(entries, d, d) for entries in setting) for setting in obj["sigma"]
    )
    return Assemblage(sigma)


def correlation_to_json(corr: Correlation) -> str:
    n_sa, n_sb, n_oa, n_ob = corr.scenario
    return json.dumps(
        {
            "scenario": {"n_settings": [n_sa, n_sb], "n_outcomes": [n_oa, n_ob]},
            "p": corr.p.ravel().tolist(),
        }
    )


def correlation_from_json(text: str) -> Correlation:
    obj = json.loads(text)
    n_sa, n_sb = obj["scenario"]["n_settings"]
    n_oa, n_ob = obj["scenario"]["n_outcomes"]
    return Correlation(np.asarray(obj["p"]).reshape(n_sa, n_sb, n_oa, n_ob))


def seesaw_bell(
    rho: DensityMatrix,
    coefficients: np.ndarray,
    n_settings: int | None = None,
    n_outcomes: int | None = None,
    restarts: int = 20,
    seed: int = 0,
) -> float:
    """Lower bound on the maximal Bell value of rho for the given functional.

    Alternates exact (two-outcome) or pairwise-eigenvector measurement updates
    between the sides; each accepted half-step never decreases the value.
    """
    n_sa, n_sb, n_oa, n_ob = coefficients.shape
    if n_settings is not None and n_settings not in (n_sa, n_sb):
        raise ValueError("n_settings does not match the coefficient table")
    if n_outcomes is not None and n_outcomes not in (n_oa, n_ob):
        raise ValueError("n_outcomes does not match the coefficient table")
    if n_oa ** n_sa * n_ob ** n_sb > 10**6:
        raise ValueError("scenario too large")
    best = -np.inf
    for r in range(restarts):
        rng = np.random.default_rng(seed ^ r if r else seed)
        meas_a = random_grouped_projective(rho.dimA, n_sa, n_oa, rng)
        meas_b = random_grouped_projective(rho.dimB, n_sb, n_ob, rng)
        value = bell_value(correlation_from(rho, meas_a, meas_b), coefficients)
        for _ in range(500):
            round_start = value
            meas_a_new = _best_povm_update(meas_a, _bell_response_for_a(rho, coefficients, meas_b))
            val_a = bell_value(correlation_from(rho, meas_a_new, meas_b), coefficients)
            if val_a >= value - 1e-12:
                meas_a, value = meas_a_new, max(val_a, value)
            meas_b_new = _best_povm_update(meas_b, _bell_response_for_b(rho, coefficients, meas_a))
            val_b = bell_value(correlation_from(rho, meas_a, meas_b_new), coefficients)
            if val_b >= value - 1e-12:
                meas_b, value = meas_b_new, max(val_b, value)
            if value - round_start < 1e-9:
                break
        best = max(best, value)
    return best
