"""Generalized entropies and the maximum-entropy optimal forecast.

The maxent problem  max_{lambda in simplex} H(P_lambda | X)  is a finite
zero-sum game between the vertex-weight player (maximizing) and the lifted
action player (minimizing).  Because the lifted loss separates across
feature values, best responses and payoffs are computed per feature value;
the lifted action space is never enumerated.

The solver runs multiplicative-weights self-play and, at regular
checkpoints, tries to purify the current iterate: it reads off the active
actions per feature value, solves the small payoff-equalization system for
both players on those supports, and accepts the purified pair when its
exactly-evaluated duality gap meets the tolerance.  Every candidate bound
is sound (H(lambda) is always a valid lower bound, any product action
distribution gives a valid upper bound), so purification can only tighten
the certificate, never fake it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .decisions import Forecast, constant_forecast, ip_score
from .errors import ConvergenceError, DimensionMismatchError, InvalidInputError
from .losses import LossMatrix
from .spaces import CredalSet, Gamble, OutcomeSpace, ProbVec, singleton

#: actions whose conditional expected losses are within this margin are
#: treated as tied, which suppresses the uniqueness claim of the maxent
#: reduction
UNIQUENESS_TOL = 1e-9

#: guard on |A|^J, the lifted action count (contractual; the solver itself
#: never enumerates lifted actions)
LIFTED_GUARD = 10**6


@dataclass(frozen=True)
class LiftedAction:
    """One action per feature value, i.e. a deterministic decision rule."""

    per_feature_action: tuple[int, ...]


def lifted_loss_gamble(space: OutcomeSpace, loss: LossMatrix,
                       action: LiftedAction) -> Gamble:
    """Gamble omega -> loss of the rule's action at X(omega)."""
    loss.check_space(space)
    choices = np.asarray(action.per_feature_action, dtype=int)
    if choices.shape[0] != space.n_features:
        raise InvalidInputError("lifted action must cover every feature value")
    if np.any(choices < 0) or np.any(choices >= loss.n_actions):
        raise InvalidInputError("lifted action contains an invalid action index")
    feature_of = space.feature_array
    return Gamble(loss.entries[choices[feature_of], np.arange(space.k)])


def enumerate_lifted_actions(space: OutcomeSpace,
                             loss: LossMatrix) -> Iterator[LiftedAction]:
    """All |A|^J decision rules (desk scale only, guarded)."""
    _check_lifted_guard(space, loss)
    for combo in itertools.product(range(loss.n_actions), repeat=space.n_features):
        yield LiftedAction(combo)


def _check_lifted_guard(space: OutcomeSpace, loss: LossMatrix) -> None:
    if space.n_features * math.log10(loss.n_actions) > math.log10(LIFTED_GUARD):
        raise InvalidInputError(
            f"lifted action space {loss.n_actions}^{space.n_features} exceeds "
            f"{LIFTED_GUARD}; use the gradient trainer (dro-train) instead"
        )


def entropy_unconditional(p: ProbVec, loss: LossMatrix) -> float:
    """Bayes risk min_a E_P[l(a, omega)]."""
    if loss.k != len(p):
        raise DimensionMismatchError("loss matrix and probability disagree on k")
    return float(np.min(loss.entries @ p.p))


def entropy_conditional(p: ProbVec, loss: LossMatrix, space: OutcomeSpace) -> float:
    """Conditional Bayes risk E_P[score of the forecast P(.|X)].

    Computed through the decision-rule identity: the per-feature terms
    min_a sum_{omega: X=x} P(omega) l(a, omega) add up to the minimum of
    E_P over deterministic rules.  Feature values with P(X=x)=0 contribute
    nothing.
    """
    loss.check_space(space)
    if len(p) != space.k:
        raise DimensionMismatchError("probability lives on a different space")
    total = 0.0
    for block in space.feature_blocks():
        total += float(np.min(loss.entries[:, block] @ p.p[block]))
    return total


def imprecise_entropy(credal: CredalSet, loss: LossMatrix) -> float:
    """IP score of the constant forecast announcing the set itself."""
    return ip_score(constant_forecast(credal), loss, credal)


@dataclass(frozen=True, eq=False)
class MaxentResult:
    """Solution of the maxent game with its optimality certificate."""

    lambda_star: np.ndarray
    p_star: ProbVec
    maxent_value: float
    duality_gap: float
    bayes_unique_per_x: dict[int, bool | None]
    ip_score_star: float
    iterations: int

    @property
    def bayes_unique(self) -> bool:
        return all(v is True for v in self.bayes_unique_per_x.values())

    def to_dict(self) -> dict:
        return {
            "lambda_star": [float(v) for v in self.lambda_star],
            "p_star": [float(v) for v in self.p_star.p],
            "maxent_value": float(self.maxent_value),
            "duality_gap": float(self.duality_gap),
            "bayes_unique_per_x": {
                str(x): v for x, v in self.bayes_unique_per_x.items()
            },
            "bayes_unique": self.bayes_unique,
            "ip_score_star": float(self.ip_score_star),
            "iterations": int(self.iterations),
        }


def _payoff_tensor(data: CredalSet, loss: LossMatrix) -> np.ndarray:
    """c[i, x, a] = sum_{omega: X=x} P_i(omega) l(a, omega), shape (G, J, A)."""
    space = data.space
    mask = np.zeros((space.n_features, space.k))
    mask[space.feature_array, np.arange(space.k)] = 1.0
    mask = mask.T  # (k, J)
    return np.einsum("gk,kx,ak->gxa", data.matrix, mask, loss.entries)


def _game_h(c: np.ndarray, lam: np.ndarray) -> float:
    return float(np.tensordot(lam, c, axes=(0, 0)).min(axis=1).sum())


def _h_batch(c2: np.ndarray, n_features: int, n_actions: int,
             points: np.ndarray) -> np.ndarray:
    """H of many lambda points at once; c2 is c reshaped to (G, J*A)."""
    vals = points @ c2
    return vals.reshape(-1, n_features, n_actions).min(axis=2).sum(axis=1)


def _active_sets(c: np.ndarray, lam: np.ndarray, tol: float) -> list[np.ndarray]:
    s = np.tensordot(lam, c, axes=(0, 0))
    return [np.flatnonzero(s[x] <= s[x].min() + tol) for x in range(c.shape[1])]


def _solve_lambda(c: np.ndarray, active: list[np.ndarray],
                  support: np.ndarray) -> np.ndarray | None:
    """Weights on the given support face equalizing the payoffs of co-active
    actions per feature value."""
    n_vertices = c.shape[0]
    rows = []
    for x, acts in enumerate(active):
        base = acts[0]
        for a in acts[1:]:
            rows.append(c[support, x, a] - c[support, x, base])
    rows.append(np.ones(support.size))
    rhs = np.zeros(len(rows))
    rhs[-1] = 1.0
    sub, *_ = np.linalg.lstsq(np.asarray(rows), rhs, rcond=None)
    if not np.all(np.isfinite(sub)) or np.any(sub < -1e-10):
        return None
    sub = np.clip(sub, 0.0, None)
    total = sub.sum()
    if total <= 0:
        return None
    lam = np.zeros(n_vertices)
    lam[support] = sub / total
    return lam


def _solve_mu(c: np.ndarray, active: list[np.ndarray],
              support: np.ndarray) -> float | None:
    """Upper bound from equalizing supported vertices over active actions."""
    n_vertices, n_features, _ = c.shape
    sizes = [len(a) for a in active]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    n_vars = offsets[-1]
    rows, rhs = [], []
    base = support[0]
    for i in support[1:]:
        row = np.zeros(n_vars)
        for x, acts in enumerate(active):
            row[offsets[x]:offsets[x + 1]] = c[i, x, acts] - c[base, x, acts]
        rows.append(row)
        rhs.append(0.0)
    for x in range(n_features):
        row = np.zeros(n_vars)
        row[offsets[x]:offsets[x + 1]] = 1.0
        rows.append(row)
        rhs.append(1.0)
    mu, *_ = np.linalg.lstsq(np.asarray(rows), np.asarray(rhs), rcond=None)
    if not np.all(np.isfinite(mu)) or np.any(mu < -1e-10):
        return None
    mu = np.clip(mu, 0.0, None)
    payoff = np.zeros(n_vertices)
    for x, acts in enumerate(active):
        seg = mu[offsets[x]:offsets[x + 1]]
        total = seg.sum()
        if total <= 0:
            return None
        payoff += c[:, x, acts] @ (seg / total)
    return float(payoff.max())


def _pure_upper(c: np.ndarray, lam: np.ndarray) -> float:
    """Upper bound from the pure best response to lam."""
    s = np.tensordot(lam, c, axes=(0, 0))
    amin = s.argmin(axis=1)
    return float(c[:, np.arange(c.shape[1]), amin].sum(axis=1).max())


_ACT_TOL_LADDER = (1e-12, 1e-9, 1e-6, 1e-3, 3e-2, 1.5e-1)
_SEGMENT_ITERS = 20


class _Certifier:
    """Purification of iterates into an exactly-evaluated certificate.

    Every bound produced here is sound: H(lambda) of any feasible lambda
    lower-bounds the game value, and any product action distribution gives
    an upper bound, so the candidate search can only tighten the
    certificate, never fake it.  Solved active-set signatures are cached
    across checkpoints of one solve.
    """

    def __init__(self, c: np.ndarray, span: float):
        self.c = c
        self.n_vertices, self.n_features, self.n_actions = c.shape
        self.c2 = np.ascontiguousarray(c.reshape(self.n_vertices, -1))
        self.scale = max(span, 1.0)
        self.vertices = np.eye(self.n_vertices)
        self._solved: dict[bytes, np.ndarray | None] = {}
        self._mu_bounds: dict[bytes, float | None] = {}

    def _hs(self, points: np.ndarray) -> np.ndarray:
        return _h_batch(self.c2, self.n_features, self.n_actions, points)

    def _rung_masks(self, lam: np.ndarray):
        s = (lam @ self.c2).reshape(self.n_features, self.n_actions)
        gaps = s - s.min(axis=1, keepdims=True)
        return [gaps <= rung * self.scale for rung in _ACT_TOL_LADDER]

    def _supports(self, lam: np.ndarray) -> list[np.ndarray]:
        """Candidate support faces of the iterate, coarse to fine."""
        supports = [np.arange(self.n_vertices)]
        for threshold in (1e-7, 1e-2):
            sup = np.flatnonzero(lam > threshold)
            if sup.size and sup.size < self.n_vertices:
                supports.append(sup)
        return supports

    def _ladder_solve(self, lam: np.ndarray) -> list[np.ndarray]:
        solved = []
        supports = self._supports(lam)
        for mask in self._rung_masks(lam):
            mask_key = mask.tobytes()
            active = None
            for support in supports:
                key = mask_key + support.tobytes()
                if key not in self._solved:
                    if active is None:
                        active = [np.flatnonzero(mask[x])
                                  for x in range(self.n_features)]
                    self._solved[key] = _solve_lambda(self.c, active, support)
                candidate = self._solved[key]
                if candidate is not None:
                    solved.append(candidate)
        return solved

    def _gap_at(self, lam: np.ndarray, lower: float, tol: float) -> float:
        upper = _pure_upper(self.c, lam)
        support = np.flatnonzero(lam > 1e-12)
        for mask in self._rung_masks(lam):
            if upper - lower <= tol:
                break
            key = mask.tobytes() + support.tobytes()
            if key not in self._mu_bounds:
                active = [np.flatnonzero(mask[x]) for x in range(self.n_features)]
                self._mu_bounds[key] = _solve_mu(self.c, active, support)
            bound = self._mu_bounds[key]
            if bound is not None:
                upper = min(upper, bound)
        return max(upper - lower, 0.0)

    def _segments(self, heads: np.ndarray, tails: np.ndarray) -> np.ndarray:
        """Batched ternary search of the concave H along each [head, tail]."""
        n_segments = heads.shape[0]
        lo = np.zeros(n_segments)
        hi = np.ones(n_segments)
        for _ in range(_SEGMENT_ITERS):
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            p1 = heads * (1.0 - m1)[:, None] + tails * m1[:, None]
            p2 = heads * (1.0 - m2)[:, None] + tails * m2[:, None]
            move = self._hs(p1) < self._hs(p2)
            lo = np.where(move, m1, lo)
            hi = np.where(move, hi, m2)
        theta = 0.5 * (lo + hi)
        return heads * (1.0 - theta)[:, None] + tails * theta[:, None]

    def run(self, lam_candidates: list[np.ndarray],
            tol: float) -> tuple[np.ndarray, float, float]:
        pool = np.vstack([np.vstack(lam_candidates), self.vertices])
        hs = self._hs(pool)
        order = np.argsort(-hs)
        pool, hs = pool[order], hs[order]
        best_lam, best_h = pool[0], float(hs[0])

        # cheap phase: active-set solves at the incumbent, the runner-up,
        # and (for few vertices) the simplex corners
        seeds = [best_lam]
        if len(pool) > 1:
            seeds.append(pool[1])
        if self.n_vertices <= 4:
            seeds.extend(self.vertices)
        candidates = [cand for seed in seeds for cand in self._ladder_solve(seed)]
        if candidates:
            stacked = np.vstack(candidates)
            hs_cand = self._hs(stacked)
            index = int(np.argmax(hs_cand))
            if hs_cand[index] > best_h:
                best_lam, best_h = stacked[index], float(hs_cand[index])
        gap = self._gap_at(best_lam, best_h, tol)
        if gap <= tol:
            return best_lam, best_h, gap

        # segment phase: line maxima from the incumbent toward the simplex
        # vertices and the runner-up, plus every simplex edge (this covers
        # optima on faces for small vertex counts), then active-set solves
        heads, tails = [], []
        for v in self.vertices:
            if np.max(np.abs(v - best_lam)) > 1e-12:
                heads.append(best_lam)
                tails.append(v)
        for i in range(min(2, len(pool))):
            if np.max(np.abs(pool[i] - best_lam)) > 1e-12:
                heads.append(best_lam)
                tails.append(pool[i])
        if self.n_vertices <= 8:
            for i in range(self.n_vertices):
                for j in range(i + 1, self.n_vertices):
                    heads.append(self.vertices[i])
                    tails.append(self.vertices[j])
        if heads:
            points = self._segments(np.vstack(heads), np.vstack(tails))
            point_hs = self._hs(points)
            for index in np.argsort(-point_hs)[:4]:
                point = points[index]
                if point_hs[index] > best_h:
                    best_lam, best_h = point, float(point_hs[index])
                for candidate in self._ladder_solve(point):
                    h = _game_h(self.c, candidate)
                    if h > best_h:
                        best_lam, best_h = candidate, h
        gap = self._gap_at(best_lam, best_h, tol)
        return best_lam, best_h, gap


def solve_maxent(data: CredalSet, loss: LossMatrix, tol: float = 1e-8,
                 max_iter: int = 20000) -> MaxentResult:
    """Maximum-entropy weighting of the data-model vertices.

    Returns the maximizing vertex weights, the maxent probability, the game
    value with a duality-gap certificate, per-feature-value uniqueness of
    the Bayes action under P*, and the IP score of the induced conditional
    forecast (falling back to the game value when uniqueness fails).
    """
    loss.check_space(data.space)
    _check_lifted_guard(data.space, loss)
    c = _payoff_tensor(data, loss)
    n_vertices, n_features, _ = c.shape
    span = float(c.max() - c.min())
    eta0 = 2.0 / max(span, 1e-12)
    certifier = _Certifier(c, span)
    uniform = np.full(n_vertices, 1.0 / n_vertices)

    c2 = np.ascontiguousarray(c.reshape(n_vertices, -1))
    c_by_action = np.ascontiguousarray(np.moveaxis(c, 0, 2).reshape(-1, n_vertices))
    feature_index = np.arange(n_features)
    log_w = np.zeros(n_vertices)
    lam = uniform.copy()
    lam_sum = np.zeros(n_vertices)
    best_lam, best_h = lam.copy(), _game_h(c, lam)
    next_check = 8
    iterations = 0
    result = None
    gap = np.inf
    for iterations in range(1, max_iter + 1):
        s = (lam @ c2).reshape(n_features, -1)
        amin = s.argmin(axis=1)
        h = float(s[feature_index, amin].sum())
        if h > best_h:
            best_h, best_lam = h, lam.copy()
        gradient = c_by_action[feature_index * s.shape[1] + amin].sum(axis=0)
        log_w += (eta0 / np.sqrt(iterations)) * gradient
        log_w -= log_w.max()
        w = np.exp(log_w)
        lam = w / w.sum()
        lam_sum += lam
        if iterations >= next_check or iterations == max_iter:
            next_check = min(2 * next_check, next_check + 4096)
            candidates = [best_lam, lam, lam_sum / iterations, uniform]
            cand, lower, gap = certifier.run(candidates, tol)
            if gap <= tol:
                result = (cand, lower, gap)
                break
            best_lam, best_h = cand, lower
    if result is None:
        raise ConvergenceError(
            f"maxent game not certified to {tol:g} within {max_iter} iterations "
            f"(last duality gap {gap:g})", gap=gap)
    lambda_star, maxent_value, duality_gap = result

    p_star = data.mixture(lambda_star)
    unique_per_x: dict[int, bool | None] = {}
    conditionals: dict[int, ProbVec] = {}
    for x, block in enumerate(data.space.feature_blocks()):
        mass = float(p_star.p[block].sum())
        if mass <= 0.0:
            unique_per_x[x] = None
            continue
        expected = loss.entries[:, block] @ p_star.p[block] / mass
        order = np.sort(expected)
        unique_per_x[x] = bool(order[1] - order[0] > UNIQUENESS_TOL)
        cond = np.zeros(data.space.k)
        cond[block] = p_star.p[block] / mass
        conditionals[x] = ProbVec(cond)

    if all(v is True for v in unique_per_x.values()):
        forecast = Forecast(
            data.space,
            {x: singleton(data.space, conditionals[x]) for x in conditionals},
        )
        ip_star = ip_score(forecast, loss, data)
    else:
        ip_star = maxent_value

    return MaxentResult(
        lambda_star=lambda_star,
        p_star=p_star,
        maxent_value=maxent_value,
        duality_gap=duality_gap,
        bayes_unique_per_x=unique_per_x,
        ip_score_star=ip_star,
        iterations=iterations,
    )
