"""Exact information measures on finite distributions.

Everything here works on explicit probability tables, summing over all
outcomes, so the two cross-entropy decompositions checked by
``theorem1_terms`` / ``theorem2_terms`` hold as numerical identities rather
than estimates. All quantities are in nats.

Conventions: 0 * log 0 = 0; classifier tables must be strictly positive so
that every log is finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12


class DistributionError(ValueError):
    """Raised for tables that are not valid (conditional) distributions."""


def _xlogy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """x * log(y) with the 0 * log 0 = 0 convention."""
    out = np.zeros_like(x, dtype=float)
    mask = x > 0
    out[mask] = x[mask] * np.log(y[mask])
    return out


@dataclass(frozen=True)
class DiscreteJoint:
    """Finite joint distribution over (x, y, w), stored as a (nx, ny, nw) table."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 3:
            raise DistributionError(f"expected rank-3 table, got shape {p.shape}")
        if p.min() < 0:
            raise DistributionError("negative probability entry")
        if abs(p.sum() - 1.0) > NORM_TOL:
            raise DistributionError(f"table sums to {p.sum()!r}, expected 1")
        object.__setattr__(self, "p", p)

    @property
    def nx(self) -> int:
        return self.p.shape[0]

    @property
    def ny(self) -> int:
        return self.p.shape[1]

    @property
    def nw(self) -> int:
        return self.p.shape[2]

    def marginal(self, axes: tuple[int, ...]) -> np.ndarray:
        """Marginal table over the given axes (0=x, 1=y, 2=w)."""
        drop = tuple(i for i in range(3) if i not in axes)
        return self.p.sum(axis=drop)


@dataclass(frozen=True)
class DiscreteClassifier:
    """Conditional table f(y | x, w), indexed (x, y, w), strictly positive."""

    f: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.f, dtype=float)
        if f.ndim != 3:
            raise DistributionError(f"expected rank-3 table, got shape {f.shape}")
        if f.min() <= 0 or f.max() > 1 + NORM_TOL:
            raise DistributionError("classifier entries must lie in (0, 1]")
        col = f.sum(axis=1)
        if np.abs(col - 1.0).max() > 1e-9:
            raise DistributionError("f(.|x,w) columns must each sum to 1")
        object.__setattr__(self, "f", f)


def entropy(pmf: np.ndarray) -> float:
    """Shannon entropy -sum p log p of a probability vector, in nats."""
    pmf = np.asarray(pmf, dtype=float).ravel()
    if pmf.min() < 0 or abs(pmf.sum() - 1.0) > 1e-9:
        raise DistributionError("input is not a normalized probability vector")
    return float(-_xlogy(pmf, pmf).sum())


def mutual_information(joint: np.ndarray) -> float:
    """I(X;Y) of a 2-D joint probability table, in nats."""
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2:
        raise DistributionError("expected a 2-D joint table")
    if joint.min() < 0 or abs(joint.sum() - 1.0) > 1e-9:
        raise DistributionError("joint table is not normalized")
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(joint > 0, joint / (px * py), 1.0)
    return float(_xlogy(joint, ratio).sum())


def lautum_information(joint: np.ndarray) -> float:
    """L(X;Y) = sum p(x)p(y) log(p(x)p(y)/p(x,y)), in nats.

    Returns ``math.inf`` when some joint cell is zero while the product of
    its marginals is positive (the divergence genuinely diverges there).
    """
    joint = np.asarray(joint, dtype=float)
    if joint.ndim != 2:
        raise DistributionError("expected a 2-D joint table")
    if joint.min() < 0 or abs(joint.sum() - 1.0) > 1e-9:
        raise DistributionError("joint table is not normalized")
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    prod = px * py
    if np.any((joint == 0) & (prod > 0)):
        return math.inf
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(prod > 0, prod / np.where(joint > 0, joint, 1.0), 1.0)
    return float(_xlogy(prod, ratio).sum())


def joint_entropy(table: np.ndarray) -> float:
    """Entropy of an arbitrary-rank joint table."""
    table = np.asarray(table, dtype=float)
    return float(-_xlogy(table, table).sum())


def conditional_entropy(joint: np.ndarray, condition_axes: tuple[int, ...]) -> float:
    """H(rest | variables on `condition_axes`) = H(all) - H(condition marginal)."""
    joint = np.asarray(joint, dtype=float)
    if joint.min() < 0 or abs(joint.sum() - 1.0) > 1e-9:
        raise DistributionError("joint table is not normalized")
    keep = tuple(sorted(condition_axes))
    drop = tuple(i for i in range(joint.ndim) if i not in keep)
    cond_marginal = joint.sum(axis=drop) if drop else joint
    return joint_entropy(joint) - joint_entropy(cond_marginal)


def expected_ce_factored(j: DiscreteJoint, f: DiscreteClassifier) -> float:
    """Cross-entropy with expectation over p(x,y) and p(w) taken separately."""
    _check_shapes(j, f)
    pxy = j.marginal((0, 1))  # (nx, ny)
    pw = j.marginal((2,))  # (nw,)
    weight = pxy[:, :, None] * pw[None, None, :]
    return float(-_xlogy(weight, f.f).sum())


def expected_ce_joint(j: DiscreteJoint, f: DiscreteClassifier) -> float:
    """Cross-entropy weighted by the full joint p(x,y,w)."""
    _check_shapes(j, f)
    return float(-_xlogy(j.p, f.f).sum())


@dataclass(frozen=True)
class Theorem1Terms:
    classifier_mismatch: float
    bayes_error: float
    lautum_wx: float
    lhs: float
    residual: float


@dataclass(frozen=True)
class Theorem2Terms:
    kl_term: float
    cond_entropy_xy_given_w: float
    h_x: float
    h_y: float
    mi_xw: float
    lhs_joint: float
    residual_corrected: float
    residual_paper: float


def theorem1_terms(j: DiscreteJoint, f: DiscreteClassifier) -> Theorem1Terms:
    """Decompose the factored-expectation cross-entropy.

    lhs = E_w{KL(p(x,y) || f(x,y|w))} + H(y|x) - L(w;x), where
    f(x,y|w) = f(y|x,w) * p(x|w): the classifier only reshapes the label
    conditional, leaving the (x, w) joint untouched.
    """
    _check_shapes(j, f)
    pxy = j.marginal((0, 1))
    pw = j.marginal((2,))
    pxw = j.marginal((0, 2))  # (nx, nw)
    if np.any((pxw == 0) & (pw[None, :] > 0)):
        # p(x|w) undefined on a reachable cell; mismatch term diverges.
        return Theorem1Terms(math.inf, conditional_entropy(pxy, (0,)), math.inf,
                             expected_ce_factored(j, f), math.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        px_given_w = np.where(pw[None, :] > 0, pxw / np.where(pw[None, :] > 0, pw[None, :], 1.0), 0.0)
    # f(x,y|w), normalized over (x, y) for each w
    f_xy_w = f.f * px_given_w[:, None, :]

    weight = pxy[:, :, None] * pw[None, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(weight > 0, pxy[:, :, None] / np.where(f_xy_w > 0, f_xy_w, 1.0), 1.0)
    if np.any((weight > 0) & (f_xy_w == 0)):
        mismatch = math.inf
    else:
        mismatch = float(_xlogy(weight, ratio).sum())

    bayes = conditional_entropy(pxy, (0,))
    lautum_wx = lautum_information(pxw)  # table indexed (x, w); value symmetric in roles
    lhs = expected_ce_factored(j, f)
    if math.isinf(mismatch) or math.isinf(lautum_wx):
        residual = math.nan
    else:
        residual = lhs - (mismatch + bayes - lautum_wx)
    return Theorem1Terms(mismatch, bayes, lautum_wx, lhs, residual)


def theorem2_terms(j: DiscreteJoint, f: DiscreteClassifier) -> Theorem2Terms:
    """Decompose the joint-expectation cross-entropy.

    The corrected identity asserts
    lhs = KL + H(x,y|w) - H(x) + I(x;w); the variant with -H(y) in place of
    -H(x) is also reported, and differs from the corrected one by exactly
    H(y) - H(x).
    """
    _check_shapes(j, f)
    pxw = j.marginal((0, 2))
    with np.errstate(divide="ignore", invalid="ignore"):
        p_y_given_xw = np.where(pxw[:, None, :] > 0,
                                j.p / np.where(pxw[:, None, :] > 0, pxw[:, None, :], 1.0), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(j.p > 0, p_y_given_xw / f.f, 1.0)
    kl_term = float(_xlogy(j.p, ratio).sum())

    cond_xy_w = conditional_entropy(j.p, (2,))
    h_x = entropy(j.marginal((0,)))
    h_y = entropy(j.marginal((1,)))
    mi_xw = mutual_information(pxw)
    lhs_joint = expected_ce_joint(j, f)
    residual_corrected = lhs_joint - (kl_term + cond_xy_w - h_x + mi_xw)
    residual_paper = lhs_joint - (kl_term + cond_xy_w - h_y + mi_xw)
    return Theorem2Terms(kl_term, cond_xy_w, h_x, h_y, mi_xw, lhs_joint,
                         residual_corrected, residual_paper)


def random_instance(rng: np.random.Generator, nx: int, ny: int, nw: int,
                    floor: float = 1e-12) -> tuple[DiscreteJoint, DiscreteClassifier]:
    """Strictly positive random joint + classifier pair for fuzzing."""
    p = rng.random((nx, ny, nw)) + floor
    p /= p.sum()
    f = rng.random((nx, ny, nw)) + floor
    f /= f.sum(axis=1, keepdims=True)
    return DiscreteJoint(p), DiscreteClassifier(f)


def _check_shapes(j: DiscreteJoint, f: DiscreteClassifier) -> None:
    if j.p.shape != f.f.shape:
        raise DistributionError(
            f"joint shape {j.p.shape} and classifier shape {f.f.shape} differ")
