"""Left-endpoint stochastic integration on discretized paths.

Bound bi-/triprocesses pair a 1- or 2-linear trace polynomial symbol with
adapted argument paths; integrals and quadratic Riemann-Stieltjes sums
are left-endpoint sums on the stored grid.  Quadratic covariation admits
a closed form through the gamma contraction, and the standard identities
(Ito isometry, BDG p=2, substitution, QC of integrals) are exposed as
report-producing checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .evaluator import EvalContext, eval_multilinear, eval_poly
from .reports import make_report
from .trace_poly import (
    ContractionModel,
    LinearityError,
    TracePolynomial,
    classify_linearity,
    compose_linear,
    gamma_contract,
)
from .process_sim import Ensemble, ProcessPath, TimeGrid


def _values_of(X):
    if isinstance(X, (ProcessPath, Ensemble)):
        return X.values
    return np.asarray(X, dtype=complex)


def _grid_of(X, fallback=None):
    if isinstance(X, (ProcessPath, Ensemble)):
        return X.grid
    if fallback is None:
        raise ValueError("a grid is required for raw value arrays")
    return fallback


def _left(values):
    return values[..., :-1, :, :]


def _increments(values):
    return values[..., 1:, :, :] - values[..., :-1, :, :]


@dataclass(frozen=True)
class BoundBiprocess:
    """A 1-linear symbol bound to adapted argument paths on one grid.

    ``bindings`` maps x-variable indices to value arrays shaped
    (..., T, n, n); a plain (n, n) matrix is treated as constant in time.
    """

    symbolic: TracePolynomial
    grid: TimeGrid
    n: int
    bindings: Mapping[int, np.ndarray] = field(default_factory=dict)
    linearity: int = 1

    def __post_init__(self):
        if classify_linearity(self.symbolic, self.linearity) == "not-linear":
            raise LinearityError(
                f"symbol must be {self.linearity}-linear in its slots"
            )
        T = len(self.grid.times)
        for i, arr in self.bindings.items():
            arr = np.asarray(arr)
            if arr.shape[-2:] != (self.n, self.n):
                raise ValueError(f"binding x{i} has wrong dimension")
            if arr.ndim >= 3 and arr.shape[-3] != T:
                raise ValueError(
                    f"binding x{i} must be constant or have {T} time points"
                )

    def left_context(self) -> EvalContext:
        """Bindings frozen at left endpoints, one per grid step."""
        left = {}
        for i, arr in self.bindings.items():
            arr = np.asarray(arr, dtype=complex)
            left[i] = arr if arr.ndim == 2 else _left(arr)
        return EvalContext(self.n, left)


class BoundTriprocess(BoundBiprocess):
    def __init__(self, symbolic, grid, n, bindings=None):
        super().__init__(symbolic, grid, n, bindings or {}, linearity=2)


@dataclass(frozen=True)
class ElementaryPredictable:
    """Finitely many windows (s_i, t_i] with a frozen 1-linear symbol each.

    Each piece's bindings are constant matrices sampled at times <= s_i,
    which is where adaptedness lives at this scale.
    """

    pieces: Sequence  # of (s, t, symbolic, bindings)

    def __post_init__(self):
        for s, t, sym, _ in self.pieces:
            if not s < t:
                raise ValueError("windows need s < t")
            if classify_linearity(sym, 1) == "not-linear":
                raise LinearityError("piece symbols must be 1-linear")


def elementary_integral(H: ElementaryPredictable, X, t: float) -> np.ndarray:
    """Sum_i H_i[X(t_i ^ t) - X(s_i ^ t)] evaluated on the grid."""
    grid = _grid_of(X)
    values = _values_of(X)
    n = values.shape[-1]
    out = np.zeros(values.shape[:-3] + (n, n), dtype=complex)
    for s, w, sym, bindings in H.pieces:
        i0 = grid.index_of(min(s, t))
        i1 = grid.index_of(min(w, t))
        if i1 == i0:
            continue
        delta = values[..., i1, :, :] - values[..., i0, :, :]
        ctx = EvalContext(n, bindings)
        out = out + eval_multilinear(sym, ctx, [delta])
    return out


def rs_increments(H: BoundBiprocess, X) -> np.ndarray:
    """Per-step integrand values H(t_-)[Delta X], shape (..., T-1, n, n)."""
    values = _values_of(X)
    return eval_multilinear(H.symbolic, H.left_context(), [_increments(values)])


def rs_integral(H: BoundBiprocess, X) -> np.ndarray:
    """Cumulative left-endpoint integral path, shape (..., T, n, n)."""
    inc = rs_increments(H, X)
    out = np.zeros(inc.shape[:-3] + (inc.shape[-3] + 1,) + inc.shape[-2:],
                   dtype=complex)
    np.cumsum(inc, axis=-3, out=out[..., 1:, :, :])
    return out


def quad_rs_increments(L: BoundBiprocess, X, Y) -> np.ndarray:
    """Per-step quadratic sum terms Lambda(s_-)[Delta X, Delta Y]."""
    return eval_multilinear(
        L.symbolic, L.left_context(),
        [_increments(_values_of(X)), _increments(_values_of(Y))],
    )


def quad_rs_path(L: BoundBiprocess, X, Y) -> np.ndarray:
    """Cumulative quadratic Riemann-Stieltjes sum path."""
    inc = quad_rs_increments(L, X, Y)
    out = np.zeros(inc.shape[:-3] + (inc.shape[-3] + 1,) + inc.shape[-2:],
                   dtype=complex)
    np.cumsum(inc, axis=-3, out=out[..., 1:, :, :])
    return out


def quad_rs_sum(L: BoundBiprocess, X, Y, t: float) -> np.ndarray:
    """Quadratic sum at time t."""
    idx = L.grid.index_of(t)
    inc = quad_rs_increments(L, X, Y)
    return np.sum(inc[..., :idx, :, :], axis=-3)


def qc_closed_form(L: BoundBiprocess, model: ContractionModel) -> np.ndarray:
    """Closed-form QC path for a self-adjoint Brownian driver.

    Contracts the 2-linear symbol and integrates it along the bound
    arguments against kappa(dt) = dt with the left rectangle rule.
    """
    G = gamma_contract(L.symbolic, model)
    dts = np.diff(L.grid.times)
    ctx = L.left_context()
    vals = eval_poly(G, ctx)
    if vals.ndim == 2:
        # constant integrand: broadcast over the steps
        vals = np.broadcast_to(vals, (len(dts),) + vals.shape)
    inc = vals * dts[:, None, None]
    out = np.zeros(inc.shape[:-3] + (inc.shape[-3] + 1,) + inc.shape[-2:],
                   dtype=complex)
    np.cumsum(inc, axis=-3, out=out[..., 1:, :, :])
    return out


# -- norms over ensembles -------------------------------------------------


def ensemble_l1_trace_norm(values: np.ndarray) -> np.ndarray:
    """Mean over leading path axes of tr_n |A|: the ensemble L^1 norm.

    Accepts (..., n, n) and reduces everything but the matrix axes;
    a time axis should be moved out before calling.
    """
    n = values.shape[-1]
    s = np.linalg.svd(values, compute_uv=False)
    per = np.sum(s, axis=-1) / n
    return float(np.mean(per))


def _paired_stats(a: np.ndarray, b: np.ndarray):
    """Means of a and b with the paired standard error of mean(a - b)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    diff = a - b
    se = float(np.std(diff, ddof=1) / np.sqrt(len(diff))) if len(diff) > 1 else 0.0
    return float(np.mean(a)), float(np.mean(b)), se


def _tr_quad(v: np.ndarray) -> np.ndarray:
    """Per-path tr_n(v* v), real."""
    n = v.shape[-1]
    return np.einsum("...ij,...ij->...", np.conj(v), v).real / n


# -- identity checks ------------------------------------------------------


def ito_isometry_check(H, M: Ensemble, t: float, params: dict) -> dict:
    """Compare ||int H[dM](t)||_2^2 against the QC form E int (H dM)*(H dM)."""
    idx = M.grid.index_of(t)
    if isinstance(H, ElementaryPredictable):
        u_t = elementary_integral(H, M, t)
        # per-window quadratic terms
        rhs_paths = np.zeros(M.n_paths)
        for s, w, sym, bindings in H.pieces:
            i0 = M.grid.index_of(min(s, t))
            i1 = M.grid.index_of(min(w, t))
            if i1 == i0:
                continue
            seg = M.values[:, i0:i1 + 1]
            ctx = EvalContext(M.n, bindings)
            inc = eval_multilinear(sym, ctx, [_increments(seg)])
            rhs_paths = rhs_paths + np.sum(_tr_quad(inc), axis=-1)
    else:
        inc = rs_increments(H, M)
        u_t = np.sum(inc[..., :idx, :, :], axis=-3)
        rhs_paths = np.sum(_tr_quad(inc[..., :idx, :, :]), axis=-1)
    lhs_paths = _tr_quad(u_t)
    lhs, rhs, se = _paired_stats(lhs_paths, rhs_paths)
    return make_report("ito_isometry", params, lhs, rhs, se,
                       passed=abs(lhs - rhs) <= 3 * se + 1e-12)


def bdg_stats(M: Ensemble, p: int, t: float, params: dict) -> dict:
    """BDG statistics: the exact p=2 identity, the p=4 ratio reported."""
    if p not in (2, 4):
        raise ValueError("p must be 2 or 4")
    idx = M.grid.index_of(t)
    m_t = M.values[:, idx] - M.values[:, 0]
    inc = _increments(M.values[:, :idx + 1])
    qv_paths = np.sum(_tr_quad(inc), axis=-1)
    if p == 2:
        lhs_paths = _tr_quad(m_t)
        lhs, rhs, se = _paired_stats(lhs_paths, qv_paths)
        return make_report("bdg_p2", params, lhs, rhs, se,
                           passed=abs(lhs - rhs) <= 3 * se + 1e-12)
    # p = 4: fourth-moment norm against the H^4 proxy built from the
    # quadratic variation matrix; reported as a ratio, not asserted
    n = M.n
    m2 = m_t @ np.conj(np.swapaxes(m_t, -1, -2))
    lhs = float(np.mean(np.einsum("pij,pij->p", m2, np.conj(m2)).real / n)
                ** 0.25)
    qv_mat = np.einsum("ptji,ptjk->pik", np.conj(inc), inc)
    rhs = float(np.mean(
        np.einsum("pij,pij->p", qv_mat, np.conj(qv_mat)).real / n
    ) ** 0.25)
    ratio = lhs / rhs if rhs else np.inf
    return make_report("bdg_p4", params, lhs, rhs, 0.0,
                       extra={"ratio": ratio})


def conditional_qc_check(L: BoundBiprocess, X, Y, t: float,
                         model: ContractionModel, params: dict) -> dict:
    """Quadratic sums against the conditional (contracted) closed form."""
    idx = L.grid.index_of(t)
    q = quad_rs_path(L, X, Y)[..., idx, :, :]
    c = qc_closed_form(L, model)[..., idx, :, :]
    gap_paths = q - np.broadcast_to(c, q.shape)
    lhs = ensemble_l1_trace_norm(q)
    rhs = ensemble_l1_trace_norm(np.broadcast_to(c, q.shape))
    n = q.shape[-1]
    per_path_gap = np.sum(
        np.linalg.svd(gap_paths, compute_uv=False), axis=-1
    ) / n
    se = (float(np.std(per_path_gap, ddof=1) / np.sqrt(per_path_gap.size))
          if per_path_gap.size > 1 else 0.0)
    return make_report("conditional_qc", params, lhs, rhs, se,
                       extra={"l1_gap": float(np.mean(per_path_gap))})


def substitution_check(H: BoundBiprocess, K: BoundBiprocess, X,
                       params: dict) -> dict:
    """int H[dU] with U = int K[dX] against int (H o K)[dX].

    The two sides coincide on the grid up to floating-point accumulation.
    """
    u = rs_integral(K, X)
    lhs_path = rs_integral(H, u)
    merged = dict(K.bindings)
    merged.update(H.bindings)
    composed = BoundBiprocess(
        compose_linear(H.symbolic, K.symbolic), H.grid, H.n, merged
    )
    rhs_path = rs_integral(composed, X)
    gap = lhs_path[..., -1, :, :] - rhs_path[..., -1, :, :]
    return make_report(
        "substitution", params,
        ensemble_l1_trace_norm(lhs_path[..., -1, :, :]),
        ensemble_l1_trace_norm(rhs_path[..., -1, :, :]),
        0.0,
        extra={"l1_gap": ensemble_l1_trace_norm(gap)},
    )


def qc_of_integrals_check(H: BoundBiprocess, K: BoundBiprocess,
                          L: BoundBiprocess, X, Y, t: float,
                          params: dict) -> dict:
    """QC of U = int H[dX], V = int K[dY], direct vs composed integrand."""
    u = rs_integral(H, X)
    v = rs_integral(K, Y)
    direct = quad_rs_sum(L, u, v, t)
    sym = compose_linear(
        compose_linear(L.symbolic, H.symbolic, slot=1), K.symbolic, slot=2
    )
    merged = dict(H.bindings)
    merged.update(K.bindings)
    merged.update(L.bindings)
    composed = BoundTriprocess(sym, L.grid, L.n, merged)
    via = quad_rs_sum(composed, X, Y, t)
    gap = direct - via
    return make_report(
        "qc_of_integrals", params,
        ensemble_l1_trace_norm(direct),
        ensemble_l1_trace_norm(via),
        0.0,
        extra={"l1_gap": ensemble_l1_trace_norm(gap)},
    )
