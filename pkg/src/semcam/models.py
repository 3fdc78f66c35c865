"""Learned mappings between descriptor vectors and shot parameters.

D2P maps a 7-vector of semantic scores to the 11-entry feature vector
(6 shot parameters + 5-way one-hot shot type); P2D is the inverse direction.
Both are L1-regularized linear models fitted on [-1, 1]-normalized data.
Descriptor completion fills unspecified scores with the conditional mean of
a fitted multivariate Gaussian.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .shots import PARAM_NAMES, ShotParameters, ShotType, clamp_parameters, shot_type_order

N_PARAMS = 6
N_TYPES = 5
N_FEATURES = N_PARAMS + N_TYPES
N_DESCRIPTORS = 7

DEFAULT_LAMBDA_GRID = tuple(np.logspace(-4, 0, 9))


# ---------------------------------------------------------------------------
# Feature encoding


def encode_features(shot: ShotParameters, shot_type: ShotType) -> np.ndarray:
    """11-vector: the 6 shot parameters followed by the one-hot shot type."""
    x = np.zeros(N_FEATURES)
    x[:N_PARAMS] = shot.as_tuple()
    x[N_PARAMS + shot_type.one_hot_index] = 1.0
    return x


def decode_features(x: np.ndarray) -> tuple[ShotParameters, ShotType, dict]:
    """Inverse of encode_features for model outputs.

    The shot type is the argmax of the one-hot block (ties break to the
    lowest index); parameters are clamped into valid ranges. Flags report
    whether clamping or tie-breaking occurred.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (N_FEATURES,):
        raise ValueError(f"expected {N_FEATURES}-vector, got shape {x.shape}")
    raw = dict(zip(PARAM_NAMES, x[:N_PARAMS]))
    params, clamped = clamp_parameters(raw)
    block = x[N_PARAMS:]
    best = int(np.argmax(block))
    tie = bool(np.sum(block == block[best]) > 1)
    return params, shot_type_order()[best], {"clamped": clamped, "tie_broken": tie}


# ---------------------------------------------------------------------------
# Normalization


@dataclass(frozen=True)
class NormalizationSpec:
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.mins, self.maxs)):
            raise ValueError("max must exceed min on every dimension")

    @property
    def dim(self) -> int:
        return len(self.mins)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        mins = np.array(self.mins)
        maxs = np.array(self.maxs)
        return 2.0 * (np.asarray(x, dtype=float) - mins) / (maxs - mins) - 1.0

    def denormalize(self, z: np.ndarray) -> np.ndarray:
        mins = np.array(self.mins)
        maxs = np.array(self.maxs)
        return (np.asarray(z, dtype=float) + 1.0) * (maxs - mins) / 2.0 + mins


def fit_normalization(data: np.ndarray) -> NormalizationSpec:
    """Per-dimension [-1, 1] scaling fitted to the data range."""
    data = np.asarray(data, dtype=float)
    mins = data.min(axis=0)
    maxs = data.max(axis=0)
    for i, (a, b) in enumerate(zip(mins, maxs)):
        if b <= a:
            raise ValueError(f"dimension {i} is constant ({a})")
    return NormalizationSpec(tuple(mins.tolist()), tuple(maxs.tolist()))


# ---------------------------------------------------------------------------
# Lasso


def _soft_threshold(x: float, thresh: float) -> float:
    return math.copysign(max(abs(x) - thresh, 0.0), x)


def lasso_objective(X: np.ndarray, y: np.ndarray, beta: np.ndarray,
                    lam: float) -> float:
    n = X.shape[0]
    resid = y - X @ beta
    return float(resid @ resid / (2 * n) + lam * np.abs(beta).sum())


def lasso_path(X: np.ndarray, y: np.ndarray, lam: float, tol: float = 1e-8,
               max_iter: int = 10_000) -> tuple[np.ndarray, list[float]]:
    """Cyclic coordinate descent for one output column.

    Minimizes (1/2n)||y - X b||^2 + lam ||b||_1. Returns the coefficients and
    the per-sweep objective values (asserted non-increasing).
    """
    n, p = X.shape
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite training data")
    beta = np.zeros(p)
    resid = y.copy()
    col_sq = (X ** 2).sum(axis=0) / n
    objectives = [lasso_objective(X, y, beta, lam)]
    for _ in range(max_iter):
        max_change = 0.0
        for j in range(p):
            if col_sq[j] == 0:
                continue
            b_old = beta[j]
            rho = X[:, j] @ resid / n + col_sq[j] * b_old
            b_new = _soft_threshold(rho, lam) / col_sq[j]
            if b_new != b_old:
                resid += X[:, j] * (b_old - b_new)
                beta[j] = b_new
                max_change = max(max_change, abs(b_new - b_old))
        obj = lasso_objective(X, y, beta, lam)
        if obj > objectives[-1] + 1e-10 * max(1.0, abs(objectives[-1])):
            raise RuntimeError("lasso objective increased within a sweep")
        objectives.append(obj)
        if max_change < tol:
            break
    return beta, objectives


@dataclass
class LinearModel:
    direction: str  # "D2P" or "P2D"
    coefficients: np.ndarray  # n_outputs x n_inputs, in normalized space
    intercepts: np.ndarray  # n_outputs
    lam: float
    input_norm: NormalizationSpec
    output_norm: NormalizationSpec
    metadata: dict = field(default_factory=dict)

    def predict_normalized(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape[-1] != self.coefficients.shape[1]:
            raise ValueError(
                f"expected input dim {self.coefficients.shape[1]}, got {z.shape[-1]}")
        return z @ self.coefficients.T + self.intercepts

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self.input_norm.normalize(x)
        return self.output_norm.denormalize(self.predict_normalized(z))


def lasso_fit(X: np.ndarray, Y: np.ndarray, lam: float, direction: str = "P2D",
              tol: float = 1e-8, max_iter: int = 10_000,
              normalize: bool = True, fit_intercept: bool = True,
              metadata: Optional[dict] = None) -> LinearModel:
    """Multi-output lasso, each output fitted independently.

    With normalize=True (the training path), inputs and outputs are first
    scaled to [-1, 1]; coefficients live in the normalized space.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0] or X.shape[0] < 2:
        raise ValueError("need matching X/Y with at least 2 rows")

    if normalize:
        input_norm = fit_normalization(X)
        output_norm = fit_normalization(Y)
        Xn = input_norm.normalize(X)
        Yn = output_norm.normalize(Y)
    else:
        # identity scaling: normalized space == raw space
        d_in, d_out = X.shape[1], Y.shape[1]
        input_norm = NormalizationSpec((-1.0,) * d_in, (1.0,) * d_in)
        output_norm = NormalizationSpec((-1.0,) * d_out, (1.0,) * d_out)
        Xn, Yn = X, Y

    if fit_intercept:
        x_mean = Xn.mean(axis=0)
        y_mean = Yn.mean(axis=0)
        Xc = Xn - x_mean
        Yc = Yn - y_mean
    else:
        x_mean = np.zeros(Xn.shape[1])
        y_mean = np.zeros(Yn.shape[1])
        Xc, Yc = Xn, Yn

    W = np.zeros((Yn.shape[1], Xn.shape[1]))
    for q in range(Yn.shape[1]):
        beta, _ = lasso_path(Xc, Yc[:, q], lam, tol=tol, max_iter=max_iter)
        W[q] = beta
    intercepts = y_mean - W @ x_mean
    return LinearModel(direction=direction, coefficients=W, intercepts=intercepts,
                       lam=lam, input_norm=input_norm, output_norm=output_norm,
                       metadata=metadata or {})


def r_squared(pred: np.ndarray, actual: np.ndarray) -> float:
    """Coefficient of determination, computed per output and averaged."""
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape:
        raise ValueError("shape mismatch")
    if pred.ndim == 1:
        pred = pred[:, None]
        actual = actual[:, None]
    ss_res = ((actual - pred) ** 2).sum(axis=0)
    ss_tot = ((actual - actual.mean(axis=0)) ** 2).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        r2 = np.where(ss_tot > 0, 1.0 - ss_res / ss_tot, 0.0)
    return float(r2.mean())


def cross_validate_lambda(X: np.ndarray, Y: np.ndarray,
                          grid: Sequence[float] = DEFAULT_LAMBDA_GRID,
                          folds: int = 5, seed: int = 0) -> tuple[float, dict]:
    """5-fold CV over a log grid; returns the best lambda and per-lambda MSE."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    fold_ids = np.array_split(order, folds)
    scores: dict[float, float] = {}
    for lam in grid:
        errs = []
        for holdout in fold_ids:
            mask = np.ones(n, dtype=bool)
            mask[holdout] = False
            model = lasso_fit(X[mask], Y[mask], lam)
            pred = model.predict(X[holdout])
            errs.append(float(((pred - Y[holdout]) ** 2).mean()))
        scores[float(lam)] = float(np.mean(errs))
    best = min(scores, key=scores.get)
    return best, scores


# ---------------------------------------------------------------------------
# Gaussian prior and conditional completion


@dataclass
class GaussianPrior:
    mu: np.ndarray
    sigma: np.ndarray
    floored: bool = False

    @property
    def dim(self) -> int:
        return len(self.mu)


def fit_gaussian_prior(values: np.ndarray, eig_floor: float = 1e-10) -> GaussianPrior:
    """Sample mean/covariance of descriptor vectors, PSD-floored if needed."""
    values = np.asarray(values, dtype=float)
    n, k = values.shape
    if n <= k:
        raise ValueError(f"need more than {k} samples, got {n}")
    mu = values.mean(axis=0)
    sigma = np.cov(values, rowvar=False, ddof=1)
    sigma = (sigma + sigma.T) / 2.0
    floored = False
    min_eig = float(np.linalg.eigvalsh(sigma).min())
    if min_eig < eig_floor:
        sigma = sigma + (eig_floor - min_eig) * np.eye(k)
        floored = True
    return GaussianPrior(mu=mu, sigma=sigma, floored=floored)


def complete_descriptors(partial: dict[int, float], prior: GaussianPrior) -> np.ndarray:
    """Fill unspecified entries with the conditional Gaussian mean.

    Specified entries pass through unchanged; the rest get
    mu_1 + S_12 S_22^-1 (d_2 - mu_2).
    """
    k = prior.dim
    observed = sorted(partial)
    if any(i < 0 or i >= k for i in observed):
        raise ValueError("observed index out of range")
    out = prior.mu.copy()
    if not observed:
        return out
    for i in observed:
        out[i] = partial[i]
    if len(observed) == k:
        return out
    hidden = [i for i in range(k) if i not in partial]
    s22 = prior.sigma[np.ix_(observed, observed)]
    s12 = prior.sigma[np.ix_(hidden, observed)]
    d2 = np.array([partial[i] for i in observed])
    try:
        adj = s12 @ np.linalg.solve(s22, d2 - prior.mu[observed])
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular covariance block for indices {observed}") from exc
    out[hidden] = prior.mu[hidden] + adj
    return out


def expression_sweep(descriptor: int, n: int, prior: GaussianPrior) -> np.ndarray:
    """n descriptor vectors sweeping one axis over mu +/- 2 sd, the rest
    conditionally completed."""
    if n < 2:
        raise ValueError("need at least 2 sweep points")
    sd = math.sqrt(prior.sigma[descriptor, descriptor])
    lo = prior.mu[descriptor] - 2.0 * sd
    hi = prior.mu[descriptor] + 2.0 * sd
    targets = np.linspace(lo, hi, n)
    return np.array([complete_descriptors({descriptor: t}, prior) for t in targets])


# ---------------------------------------------------------------------------
# D2P / P2D front ends


def d2p(d: np.ndarray, model: LinearModel) -> tuple[ShotParameters, ShotType, dict]:
    if model.direction != "D2P":
        raise ValueError("model direction must be D2P")
    d = np.asarray(d, dtype=float)
    if d.shape != (N_DESCRIPTORS,):
        raise ValueError(f"expected {N_DESCRIPTORS}-vector, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise ValueError("non-finite descriptor values")
    features = model.predict(d)
    return decode_features(features)


def p2d(shot: ShotParameters, shot_type: ShotType, model: LinearModel) -> np.ndarray:
    if model.direction != "P2D":
        raise ValueError("model direction must be P2D")
    return model.predict(encode_features(shot, shot_type))


# ---------------------------------------------------------------------------
# Model artifact JSON


def model_to_dict(model: LinearModel, prior: Optional[GaussianPrior] = None) -> dict:
    doc = {
        "direction": model.direction,
        "lambda": model.lam,
        "norm": {
            "input": {"mins": list(model.input_norm.mins),
                      "maxs": list(model.input_norm.maxs)},
            "output": {"mins": list(model.output_norm.mins),
                       "maxs": list(model.output_norm.maxs)},
        },
        "W": model.coefficients.tolist(),
        "b": model.intercepts.tolist(),
        "metadata": model.metadata,
    }
    if prior is not None:
        doc["prior"] = {"mu": prior.mu.tolist(), "sigma": prior.sigma.tolist()}
    return doc


def model_from_dict(doc: dict) -> tuple[LinearModel, Optional[GaussianPrior]]:
    norm = doc["norm"]
    model = LinearModel(
        direction=doc["direction"],
        coefficients=np.array(doc["W"], dtype=float),
        intercepts=np.array(doc["b"], dtype=float),
        lam=float(doc["lambda"]),
        input_norm=NormalizationSpec(tuple(norm["input"]["mins"]),
                                     tuple(norm["input"]["maxs"])),
        output_norm=NormalizationSpec(tuple(norm["output"]["mins"]),
                                      tuple(norm["output"]["maxs"])),
        metadata=doc.get("metadata", {}),
    )
    prior = None
    if "prior" in doc:
        prior = GaussianPrior(mu=np.array(doc["prior"]["mu"], dtype=float),
                              sigma=np.array(doc["prior"]["sigma"], dtype=float))
    return model, prior


def save_model(model: LinearModel, path, prior: Optional[GaussianPrior] = None) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, prior), fh, indent=2)


def load_model(path) -> tuple[LinearModel, Optional[GaussianPrior]]:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Optional MLP tier


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]


def mlp_init(in_dim: int, out_dim: int, hidden: Sequence[int] = (32, 16, 8),
             seed: int = 0) -> MlpModel:
    sizes = [in_dim, *hidden, out_dim]
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for a, b in zip(sizes, sizes[1:]):
        weights.append(rng.standard_normal((b, a)) / math.sqrt(a))
        biases.append(np.zeros(b))
    return MlpModel(weights=weights, biases=biases)


def mlp_forward(model: MlpModel, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass; returns outputs and per-layer activations (tanh hidden,
    linear output)."""
    a = np.asarray(X, dtype=float)
    if a.ndim == 1:
        a = a[None, :]
    activations = [a]
    last = len(model.weights) - 1
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ W.T + b
        a = z if i == last else np.tanh(z)
        activations.append(a)
    return a, activations


def mlp_predict(model: MlpModel, X: np.ndarray) -> np.ndarray:
    out, _ = mlp_forward(model, X)
    return out


def mlp_loss_and_grads(model: MlpModel, X: np.ndarray, Y: np.ndarray
                       ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Mean-squared-error loss with backpropagated gradients."""
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[None, :]
    out, acts = mlp_forward(model, X)
    n = out.shape[0]
    loss = float(((out - Y) ** 2).mean())
    delta = 2.0 * (out - Y) / out.size
    grads_w = [np.zeros_like(w) for w in model.weights]
    grads_b = [np.zeros_like(b) for b in model.biases]
    for i in reversed(range(len(model.weights))):
        grads_w[i] = delta.T @ acts[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ model.weights[i]) * (1.0 - acts[i] ** 2)
    return loss, grads_w, grads_b


def mlp_fit(model: MlpModel, X: np.ndarray, Y: np.ndarray, epochs: int = 500,
            lr: float = 1e-3, batch_size: int = 32, seed: int = 0) -> list[float]:
    """Mini-batch gradient descent; returns the per-epoch training loss."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    rng = np.random.default_rng(seed)
    n = X.shape[0]
    losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            _, gw, gb = mlp_loss_and_grads(model, X[idx], Y[idx])
            for i in range(len(model.weights)):
                model.weights[i] -= lr * gw[i]
                model.biases[i] -= lr * gb[i]
        loss, _, _ = mlp_loss_and_grads(model, X, Y)
        losses.append(loss)
    return losses


def gradient_check(model: MlpModel, X: np.ndarray, Y: np.ndarray,
                   n_coords: int = 20, step: float = 1e-5, seed: int = 0) -> float:
    """Max relative error between backprop and central finite differences."""
    rng = np.random.default_rng(seed)
    _, grads_w, grads_b = mlp_loss_and_grads(model, X, Y)
    flat = []
    for li, g in enumerate(grads_w):
        for pos in np.ndindex(g.shape):
            flat.append(("w", li, pos, g[pos]))
    for li, g in enumerate(grads_b):
        for pos in np.ndindex(g.shape):
            flat.append(("b", li, pos, g[pos]))
    picks = rng.choice(len(flat), size=min(n_coords, len(flat)), replace=False)
    max_err = 0.0
    for pick in picks:
        kind, li, pos, analytic = flat[pick]
        arr = model.weights[li] if kind == "w" else model.biases[li]
        orig = arr[pos]
        arr[pos] = orig + step
        lp, _, _ = mlp_loss_and_grads(model, X, Y)
        arr[pos] = orig - step
        lm, _, _ = mlp_loss_and_grads(model, X, Y)
        arr[pos] = orig
        numeric = (lp - lm) / (2 * step)
        denom = max(abs(analytic), abs(numeric), 1e-8)
        max_err = max(max_err, abs(analytic - numeric) / denom)
    return max_err
