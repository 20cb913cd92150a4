"""Exact t-SNE with perplexity-calibrated Gaussian affinities."""

import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

AFFINITY_FLOOR = 1e-12
PERPLEXITY_TOL = 1e-5
MAX_BISECTION_STEPS = 200
JITTER_SCALE = 1e-10


class TsneError(RuntimeError):
    pass


@dataclass(frozen=True)
class TsneConfig:
    out_dims: int = 2
    perplexity: float = 30.0
    iterations: int = 1000
    learning_rate: float = 200.0
    exaggeration: float = 12.0
    exaggeration_iters: int = 250
    momentum_initial: float = 0.5
    momentum_final: float = 0.8
    momentum_switch: int = 250
    seed: int = 0
    pca_whiten: bool = False

    def __post_init__(self):
        if self.out_dims not in (2, 3):
            raise ValueError("out_dims must be 2 or 3")
        if not self.perplexity > 1:
            raise ValueError("perplexity must exceed 1")
        if self.iterations <= 0:
            raise ValueError("iterations must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.exaggeration < 1 or self.exaggeration_iters < 0:
            raise ValueError("exaggeration factor must be >= 1 and duration >= 0")
        for m in (self.momentum_initial, self.momentum_final):
            if not 0 <= m < 1:
                raise ValueError("momentum values must lie in [0, 1)")


@dataclass
class TsneEmbedding:
    Y: np.ndarray
    kl_history: list = field(default_factory=list)
    sigmas: np.ndarray | None = None
    jittered: bool = False


def squared_distances(X):
    X = np.asarray(X, dtype=np.float64)
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def _row(d, beta):
    """Conditional row for distances ``d`` (self excluded) at precision beta.

    Returns (probabilities, entropy in nats). Distances are shifted by their
    minimum before exponentiating, which cancels in the normalization.
    """
    shifted = d - d.min()
    e = np.exp(-beta * shifted)
    s = e.sum()
    p = e / s
    # H = log s + beta * <shifted>_p
    h = np.log(s) + beta * np.dot(p, shifted)
    return p, h


def _has_duplicates(X):
    return len(np.unique(X, axis=0)) < len(X)


def conditional_affinities(X, perplexity, seed=0):
    """Row-stochastic p_{j|i} and the Gaussian bandwidth sigma_i of each row.

    Each row's precision beta_i = 1 / (2 sigma_i^2) is found by bisection so
    that exp(H_i) matches ``perplexity`` to within 1e-5. Duplicate points are
    separated by a tiny seeded jitter first.
    """
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n < 3:
        raise ValueError("t-SNE needs at least 3 points")
    if not 1 < perplexity < n:
        raise ValueError(f"perplexity must lie in (1, {n}), got {perplexity}")
    X, _ = _dejitter(X, seed)
    D = squared_distances(X)
    target = np.log(perplexity)
    P = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        d = np.delete(D[i], i)
        beta, lo, hi = 1.0, 0.0, np.inf
        if d.max() > d.min():
            # scale the starting precision to the row's distance spread
            beta = 1.0 / np.mean(d - d.min()) if np.mean(d - d.min()) > 0 else 1.0
        p, h = _row(d, beta)
        for _ in range(MAX_BISECTION_STEPS):
            if abs(np.exp(h) - perplexity) < PERPLEXITY_TOL:
                break
            if h > target:
                lo = beta
                beta = beta * 2.0 if hi == np.inf else (beta + hi) / 2.0
            else:
                hi = beta
                beta = (beta + lo) / 2.0
            p, h = _row(d, beta)
        else:
            log.warning("row %d: perplexity %.6f after %d bisection steps (target %.6f)",
                        i, np.exp(h), MAX_BISECTION_STEPS, perplexity)
        P[i, np.arange(n) != i] = p
        betas[i] = beta
    return P, np.sqrt(1.0 / (2.0 * betas))


def _dejitter(X, seed):
    if not _has_duplicates(X):
        return X, False
    span = float(X.max() - X.min()) or 1.0
    rng = np.random.default_rng(seed)
    log.warning("duplicate input points: adding Gaussian jitter of scale %.3g", JITTER_SCALE * span)
    return X + rng.normal(0.0, JITTER_SCALE * span, size=X.shape), True


def row_perplexity(row, i):
    """exp of the Shannon entropy of row ``i`` excluding the diagonal."""
    p = np.delete(np.asarray(row, dtype=np.float64), i)
    p = p[p > 0]
    return float(np.exp(-np.sum(p * np.log(p))))


def symmetrize(P_cond):
    """Joint affinities (p_{j|i} + p_{i|j}) / 2n, floored at 1e-12 and renormalized."""
    P_cond = np.asarray(P_cond, dtype=np.float64)
    n = len(P_cond)
    P = (P_cond + P_cond.T) / (2.0 * n)
    P = np.maximum(P, AFFINITY_FLOOR)
    np.fill_diagonal(P, 0.0)
    return P / P.sum()


def low_dim_affinities(Y):
    """Student-t weights w_ij = 1 / (1 + |y_i - y_j|^2) and Q = w / sum(w)."""
    W = 1.0 / (1.0 + squared_distances(Y))
    np.fill_diagonal(W, 0.0)
    return W / W.sum(), W


def kl_divergence(P, Y):
    Q, _ = low_dim_affinities(Y)
    mask = P > 0
    return float(np.sum(P[mask] * np.log(P[mask] / np.maximum(Q[mask], AFFINITY_FLOOR))))


def kl_gradient(P, Y):
    """dKL/dy_i = 4 sum_j (P_ij - Q_ij) w_ij (y_i - y_j)."""
    Y = np.asarray(Y, dtype=np.float64)
    Q, W = low_dim_affinities(Y)
    M = (P - Q) * W
    return 4.0 * (M.sum(axis=1)[:, None] * Y - M @ Y)


def _pca(X, dims):
    Xc = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    k = min(dims, len(s))
    return (Xc @ vt[:k].T) / np.where(s[:k] > 0, s[:k], 1.0) * np.sqrt(len(X))


def run_tsne(X, config=TsneConfig()):
    """Embed rows of ``X`` into ``config.out_dims`` dimensions.

    Y starts from N(0, 1e-4 I) (standard deviation 0.01) drawn from the seed.
    Plain gradient descent with momentum; P is scaled by the exaggeration
    factor for the first ``exaggeration_iters`` iterations. Y is re-centred
    each iteration and the KL history is measured against the unscaled P.
    """
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n < 3:
        raise ValueError("t-SNE needs at least 3 points")
    if config.pca_whiten:
        X = _pca(X, min(50, X.shape[1]))
    X, jittered = _dejitter(X, config.seed)
    P_cond, sigmas = conditional_affinities(X, config.perplexity)
    P = symmetrize(P_cond)
    rng = np.random.default_rng(config.seed)
    Y = rng.normal(0.0, 1e-2, size=(n, config.out_dims))
    Y -= Y.mean(axis=0)
    update = np.zeros_like(Y)
    history = []
    for it in range(config.iterations):
        exaggerate = it < config.exaggeration_iters
        momentum = config.momentum_initial if it < config.momentum_switch else config.momentum_final
        grad = kl_gradient(P * config.exaggeration if exaggerate else P, Y)
        update = momentum * update - config.learning_rate * grad
        Y = Y + update
        Y -= Y.mean(axis=0)
        kl = kl_divergence(P, Y)
        if not np.isfinite(kl) or not np.all(np.isfinite(Y)):
            raise TsneError(f"non-finite KL divergence at iteration {it}")
        history.append(kl)
    return TsneEmbedding(Y, history, sigmas, jittered)


def embedding_to_csv(ids, Y, styles):
    dims = Y.shape[1]
    cols = ["x", "y", "z"][:dims]
    lines = [",".join(["painting_id"] + cols + ["style"])]
    for pid, row, style in zip(ids, Y, styles):
        lines.append(",".join([pid] + [repr(float(v)) for v in row] + [style]))
    return "\n".join(lines) + "\n"


def kl_history_to_csv(history):
    lines = ["iteration,kl"] + [f"{i},{kl!r}" for i, kl in enumerate(history)]
    return "\n".join(lines) + "\n"
