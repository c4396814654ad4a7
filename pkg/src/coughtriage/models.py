"""Classifiers trained from scratch, plus the feature standardizer.

Three probabilistic binary classifiers (abnormal == 1):

* L2-regularized logistic regression, full-batch gradient descent with a
  backtracking line search;
* soft-margin kernel SVM solved by SMO, with a Platt sigmoid fitted on the
  training decision values;
* multilayer perceptron (ReLU hidden layers, sigmoid output) trained by
  mini-batch SGD.

All estimators follow the scikit-learn protocol (``fit`` / ``predict_proba``
/ ``get_params``) so they compose with the wider ecosystem; the optimization
code itself is self-contained.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import DegenerateLabels, InvalidArgument

PROB_EPS = 1e-12
STD_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# input validation helpers

def check_feature_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise InvalidArgument(f"expected a 2-D feature matrix, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise InvalidArgument("feature matrix holds non-finite values")
    return X


def check_training_set(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = check_feature_matrix(X)
    y = np.asarray(y)
    if y.shape != (X.shape[0],):
        raise InvalidArgument(
            f"labels shape {y.shape} does not match {X.shape[0]} rows")
    if not np.all(np.isin(y, (0, 1))):
        raise InvalidArgument("labels must be 0 (normal) or 1 (abnormal)")
    y = y.astype(np.float64)
    if np.unique(y).size < 2:
        raise DegenerateLabels("training set holds a single class")
    return X, y


def _check_predict_input(model, X) -> np.ndarray:
    X = check_feature_matrix(X)
    if X.shape[1] != model.n_features_in_:
        raise InvalidArgument(
            f"model expects {model.n_features_in_} features, got {X.shape[1]}")
    return X


def clamp_probabilities(p: np.ndarray) -> np.ndarray:
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def _proba_pair(p_abnormal: np.ndarray) -> np.ndarray:
    p = clamp_probabilities(p_abnormal)
    return np.column_stack([1.0 - p, p])


# ---------------------------------------------------------------------------
# standardizer

class Standardizer(BaseEstimator, TransformerMixin):
    """Column-wise (x - mean) / std, with the std floored at 1e-12."""

    def fit(self, X, y=None):
        X = check_feature_matrix(X)
        if X.shape[0] < 2:
            raise InvalidArgument("standardizer needs at least 2 rows")
        self.means_ = X.mean(axis=0)
        self.stds_ = np.maximum(X.std(axis=0), STD_FLOOR)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "means_")
        X = _check_predict_input(self, X)
        return (X - self.means_) / self.stds_


# ---------------------------------------------------------------------------
# logistic regression

def _augment(X: np.ndarray) -> np.ndarray:
    return np.column_stack([X, np.ones(X.shape[0])])


def lr_loss_and_grad(theta: np.ndarray, X: np.ndarray, y: np.ndarray,
                     lambda_l2: float) -> tuple[float, np.ndarray]:
    """Mean log-loss plus (lambda/2)*||weights||^2; the intercept (last
    component of theta) is not regularized."""
    Xb = _augment(X)
    z = Xb @ theta
    n = X.shape[0]
    # log(1 + e^z) - y*z is the log-loss written without forming probabilities
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    loss += 0.5 * lambda_l2 * float(theta[:-1] @ theta[:-1])
    grad = Xb.T @ (expit(z) - y) / n
    grad[:-1] += lambda_l2 * theta[:-1]
    return loss, grad


def _minimize_lr(X: np.ndarray, y: np.ndarray, lambda_l2: float,
                 max_iter: int, tol: float):
    theta = np.zeros(X.shape[1] + 1)
    loss, grad = lr_loss_and_grad(theta, X, y, lambda_l2)
    history = [loss]
    step = 1.0
    n_iter = 0
    converged = False
    for n_iter in range(1, max_iter + 1):
        if np.max(np.abs(grad)) < tol:
            converged = True
            break
        step = min(step * 2.0, 1e6)
        g_sq = float(grad @ grad)
        while True:
            candidate = theta - step * grad
            cand_loss, cand_grad = lr_loss_and_grad(candidate, X, y, lambda_l2)
            if cand_loss <= loss - 1e-4 * step * g_sq or step < 1e-14:
                break
            step *= 0.5
        if cand_loss > loss:  # numerically stationary
            converged = True
            break
        theta, loss, grad = candidate, cand_loss, cand_grad
        history.append(loss)
    return theta, history, n_iter, converged


class LogisticRegressionClassifier(BaseEstimator, ClassifierMixin):
    """L2-regularized logistic regression fit by batch gradient descent."""

    def __init__(self, lambda_l2: float = 0.1, max_iter: int = 500,
                 tol: float = 1e-6):
        self.lambda_l2 = lambda_l2
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y):
        if self.lambda_l2 < 0:
            raise InvalidArgument("lambda_l2 must be non-negative")
        X, y = check_training_set(X, y)
        theta, history, n_iter, converged = _minimize_lr(
            X, y, self.lambda_l2, self.max_iter, self.tol)
        self.theta_ = theta
        self.loss_history_ = history
        self.n_iter_ = n_iter
        self.converged_ = converged
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "theta_")
        X = _check_predict_input(self, X)
        return X @ self.theta_[:-1] + self.theta_[-1]

    def predict_proba(self, X) -> np.ndarray:
        return _proba_pair(expit(self.decision_function(X)))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


# ---------------------------------------------------------------------------
# support vector machine (SMO)

def _kernel_matrix(kernel: str, gamma: float, A: np.ndarray,
                   B: np.ndarray) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
              - 2.0 * (A @ B.T))
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise InvalidArgument(f"unknown kernel {kernel!r}")


class _SMOSolver:
    """Pairwise dual ascent until no KKT violation exceeds ``tol``."""

    def __init__(self, K: np.ndarray, y_pm: np.ndarray, C: float, tol: float,
                 max_steps: int):
        self.K = K
        self.y = y_pm
        self.C = C
        self.tol = tol
        self.max_steps = max_steps
        self.n = y_pm.shape[0]
        self.alpha = np.zeros(self.n)
        self.b = 0.0
        self.decision = np.zeros(self.n)  # includes b
        self.steps = 0

    def solve(self):
        examine_all = True
        num_changed = 1
        while (num_changed > 0 or examine_all) and self.steps < self.max_steps:
            num_changed = 0
            if examine_all:
                candidates = range(self.n)
            else:
                candidates = np.flatnonzero(
                    (self.alpha > 0) & (self.alpha < self.C))
            for i2 in candidates:
                num_changed += self._examine(int(i2))
                if self.steps >= self.max_steps:
                    break
            examine_all = not examine_all and num_changed == 0
        return self

    def _examine(self, i2: int) -> int:
        y2, a2 = self.y[i2], self.alpha[i2]
        e2 = self.decision[i2] - y2
        r2 = e2 * y2
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0)):
            return 0
        errors = self.decision - self.y
        non_bound = np.flatnonzero((self.alpha > 0) & (self.alpha < self.C))
        if non_bound.size > 1:
            i1 = int(non_bound[np.argmax(np.abs(errors[non_bound] - e2))])
            if self._take_step(i1, i2):
                return 1
        for i1 in np.roll(non_bound, -(np.searchsorted(non_bound, i2 + 1))):
            if self._take_step(int(i1), i2):
                return 1
        for i1 in np.roll(np.arange(self.n), -(i2 + 1)):
            if self._take_step(int(i1), i2):
                return 1
        return 0

    def _take_step(self, i1: int, i2: int) -> bool:
        if i1 == i2:
            return False
        a1, a2 = self.alpha[i1], self.alpha[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1 = self.decision[i1] - y1
        e2 = self.decision[i2] - y2
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1 + a2 - self.C), min(self.C, a1 + a2)
        else:
            lo, hi = max(0.0, a2 - a1), min(self.C, self.C + a2 - a1)
        if lo >= hi:
            return False
        k11 = self.K[i1, i1]
        k12 = self.K[i1, i2]
        k22 = self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta > 0:
            a2_new = np.clip(a2 + y2 * (e1 - e2) / eta, lo, hi)
        else:
            # flat or concave direction: pick the better endpoint
            a2_new = self._endpoint(i1, i2, lo, hi)
            if a2_new is None:
                return False
        if abs(a2_new - a2) < 1e-12 * (a2_new + a2 + 1e-12):
            return False
        a1_new = a1 + s * (a2 - a2_new)
        d1, d2 = y1 * (a1_new - a1), y2 * (a2_new - a2)
        b1 = self.b - e1 - d1 * k11 - d2 * k12
        b2 = self.b - e2 - d1 * k12 - d2 * k22
        if 0.0 < a1_new < self.C:
            b_new = b1
        elif 0.0 < a2_new < self.C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)
        self.decision += d1 * self.K[i1] + d2 * self.K[i2] + (b_new - self.b)
        self.alpha[i1], self.alpha[i2] = a1_new, a2_new
        self.b = b_new
        self.steps += 1
        return True

    def _endpoint(self, i1, i2, lo, hi):
        best = None
        best_obj = -np.inf
        for a2_cand in (lo, hi):
            alpha = self.alpha.copy()
            s = self.y[i1] * self.y[i2]
            alpha[i1] = self.alpha[i1] + s * (self.alpha[i2] - a2_cand)
            alpha[i2] = a2_cand
            obj = self._objective_of(alpha)
            if obj > best_obj + 1e-12:
                best_obj = obj
                best = a2_cand
        if best is not None and self._objective_of(self.alpha) >= best_obj - 1e-12:
            return None
        return best

    def _objective_of(self, alpha: np.ndarray) -> float:
        ay = alpha * self.y
        return float(alpha.sum() - 0.5 * (ay @ self.K @ ay))

    def objective(self) -> float:
        return self._objective_of(self.alpha)


class SVMClassifier(BaseEstimator, ClassifierMixin):
    """Soft-margin SVM (linear or RBF kernel) with Platt-calibrated output."""

    def __init__(self, kernel: str = "rbf", C: float = 1.0,
                 gamma: float | None = None, tol: float = 1e-3,
                 max_steps: int = 200_000, platt_lambda: float = 1e-3):
        self.kernel = kernel
        self.C = C
        self.gamma = gamma
        self.tol = tol
        self.max_steps = max_steps
        self.platt_lambda = platt_lambda

    def fit(self, X, y):
        if self.C <= 0:
            raise InvalidArgument("C must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise InvalidArgument("gamma must be positive")
        if self.kernel not in ("linear", "rbf"):
            raise InvalidArgument(f"unknown kernel {self.kernel!r}")
        X, y01 = check_training_set(X, y)
        y_pm = 2.0 * y01 - 1.0
        self.gamma_ = self.gamma if self.gamma is not None else 1.0 / X.shape[1]

        K = _kernel_matrix(self.kernel, self.gamma_, X, X)
        solver = _SMOSolver(K, y_pm, float(self.C), float(self.tol),
                            self.max_steps).solve()

        self.alpha_ = solver.alpha
        self.intercept_ = solver.b
        self.dual_objective_ = solver.objective()
        self.converged_ = solver.steps < self.max_steps
        sv = np.flatnonzero(solver.alpha > 1e-12)
        self.support_ = sv
        self.support_vectors_ = X[sv].copy()
        self.dual_coef_ = (solver.alpha * y_pm)[sv]
        if self.kernel == "linear":
            self.coef_ = self.dual_coef_ @ self.support_vectors_
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])

        train_decision = self.decision_function(X)
        self.platt_a_, self.platt_b_ = _fit_platt(
            train_decision, y01, self.platt_lambda)
        return self

    def decision_function(self, X) -> np.ndarray:
        check_is_fitted(self, "dual_coef_")
        X = _check_predict_input(self, X)
        K = _kernel_matrix(self.kernel, self.gamma_, X, self.support_vectors_)
        return K @ self.dual_coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        d = self.decision_function(X)
        p = expit(-(self.platt_a_ * d + self.platt_b_))
        return _proba_pair(p)

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


def _fit_platt(decision: np.ndarray, y01: np.ndarray,
               lambda_l2: float) -> tuple[float, float]:
    """Sigmoid calibration 1 / (1 + exp(a*d + b)) via a regularized
    logistic fit on the training decision values."""
    theta, _, _, _ = _minimize_lr(decision.reshape(-1, 1), y01,
                                  lambda_l2, max_iter=1000, tol=1e-9)
    return -float(theta[0]), -float(theta[1])


def svm_kkt_violations(model: SVMClassifier, X, y) -> float:
    """Largest KKT violation over a training set; small at convergence.

    alpha == 0 requires y*f >= 1, 0 < alpha < C requires y*f == 1, and
    alpha == C requires y*f <= 1.
    """
    X, y01 = check_training_set(X, y)
    y_pm = 2.0 * y01 - 1.0
    margins = y_pm * model.decision_function(X)
    alpha, C = model.alpha_, model.C
    worst = 0.0
    for a, m in zip(alpha, margins):
        if a < 1e-9:
            worst = max(worst, 1.0 - m)
        elif a > C - 1e-9:
            worst = max(worst, m - 1.0)
        else:
            worst = max(worst, abs(m - 1.0))
    return worst


# ---------------------------------------------------------------------------
# multilayer perceptron

class MLPClassifier(BaseEstimator, ClassifierMixin):
    """ReLU hidden layers with a sigmoid output, trained by mini-batch SGD."""

    def __init__(self, hidden_sizes: tuple[int, ...] = (64,),
                 learning_rate: float = 0.01, epochs: int = 200,
                 batch_size: int = 32, seed: int = 0):
        self.hidden_sizes = hidden_sizes
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.seed = seed

    def _init_params(self, n_features: int, rng: np.random.Generator):
        sizes = [n_features] + [int(h) for h in self.hidden_sizes] + [1]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            scale = np.sqrt(2.0 / fan_in) if fan_out != 1 else np.sqrt(1.0 / fan_in)
            weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return weights, biases

    def fit(self, X, y):
        X, y = check_training_set(X, y)
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        self.weights_, self.biases_ = self._init_params(X.shape[1], rng)
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([0, 1])
        n = X.shape[0]
        batch = min(self.batch_size, n)
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                _, grads_w, grads_b = self.loss_gradients(X[idx], y[idx])
                for w, b, gw, gb in zip(self.weights_, self.biases_,
                                        grads_w, grads_b):
                    w -= self.learning_rate * gw
                    b -= self.learning_rate * gb
        return self

    def _forward(self, X: np.ndarray):
        """Returns hidden activations (inputs to each layer) and final logits."""
        activations = [X]
        a = X
        for w, b in zip(self.weights_[:-1], self.biases_[:-1]):
            a = np.maximum(0.0, a @ w + b)
            activations.append(a)
        z = (a @ self.weights_[-1] + self.biases_[-1]).ravel()
        return activations, z

    def loss(self, X, y) -> float:
        X = _check_predict_input(self, X)
        _, z = self._forward(X)
        return float(np.mean(np.logaddexp(0.0, z) - np.asarray(y) * z))

    def loss_gradients(self, X, y):
        """Loss and backpropagated parameter gradients at the current weights."""
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        activations, z = self._forward(X)
        n = X.shape[0]
        loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
        delta = ((expit(z) - y) / n).reshape(-1, 1)
        grads_w = [np.empty_like(w) for w in self.weights_]
        grads_b = [np.empty_like(b) for b in self.biases_]
        for layer in range(len(self.weights_) - 1, -1, -1):
            a_in = activations[layer]
            grads_w[layer] = a_in.T @ delta
            grads_b[layer] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ self.weights_[layer].T) * (a_in > 0)
        return loss, grads_w, grads_b

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "weights_")
        X = _check_predict_input(self, X)
        _, z = self._forward(X)
        return _proba_pair(expit(z))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X)[:, 1] >= 0.5).astype(int)


# ---------------------------------------------------------------------------
# persistence

MODEL_FORMAT = "coughtriage-model"
MODEL_FORMAT_VERSION = 1

_MODEL_TYPES = {
    "lr": LogisticRegressionClassifier,
    "svm": SVMClassifier,
    "mlp": MLPClassifier,
}


def model_type_of(model) -> str:
    for name, cls in _MODEL_TYPES.items():
        if type(model) is cls:
            return name
    raise InvalidArgument(f"unknown model class {type(model).__name__}")


def _model_state(model) -> dict:
    kind = model_type_of(model)
    if kind == "lr":
        return {"theta": model.theta_.tolist()}
    if kind == "svm":
        return {
            "support_vectors": model.support_vectors_.tolist(),
            "dual_coef": model.dual_coef_.tolist(),
            "intercept": model.intercept_,
            "gamma": model.gamma_,
            "platt_a": model.platt_a_,
            "platt_b": model.platt_b_,
            "dual_objective": model.dual_objective_,
        }
    return {
        "weights": [w.tolist() for w in model.weights_],
        "biases": [b.tolist() for b in model.biases_],
    }


def _restore_state(model, kind: str, state: dict, n_features: int):
    model.n_features_in_ = n_features
    model.classes_ = np.array([0, 1])
    if kind == "lr":
        model.theta_ = np.asarray(state["theta"], dtype=np.float64)
    elif kind == "svm":
        model.support_vectors_ = np.asarray(state["support_vectors"],
                                            dtype=np.float64)
        model.dual_coef_ = np.asarray(state["dual_coef"], dtype=np.float64)
        model.intercept_ = float(state["intercept"])
        model.gamma_ = float(state["gamma"])
        model.platt_a_ = float(state["platt_a"])
        model.platt_b_ = float(state["platt_b"])
        model.dual_objective_ = float(state["dual_objective"])
    else:
        model.weights_ = [np.asarray(w, dtype=np.float64)
                          for w in state["weights"]]
        model.biases_ = [np.asarray(b, dtype=np.float64)
                         for b in state["biases"]]
    return model


def save_model(model, path: str | Path, standardizer: Standardizer | None = None,
               seed: int | None = None) -> None:
    """Write a self-describing JSON artifact that round-trips predictions
    bit-for-bit (floats are serialized at full precision)."""
    params = model.get_params()
    if "hidden_sizes" in params:
        params["hidden_sizes"] = list(params["hidden_sizes"])
    doc = {
        "format": MODEL_FORMAT,
        "format_version": MODEL_FORMAT_VERSION,
        "model_type": model_type_of(model),
        "n_features": model.n_features_in_,
        "hyperparameters": params,
        "parameters": _model_state(model),
        "standardizer": None if standardizer is None else {
            "means": standardizer.means_.tolist(),
            "stds": standardizer.stds_.tolist(),
        },
        "seed": seed,
    }
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n")


def load_model(path: str | Path):
    """Returns ``(model, standardizer_or_None)`` from :func:`save_model`."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != MODEL_FORMAT:
        raise InvalidArgument(f"{path} is not a {MODEL_FORMAT} artifact")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise InvalidArgument(
            f"unsupported model format version {doc.get('format_version')}")
    kind = doc["model_type"]
    if kind not in _MODEL_TYPES:
        raise InvalidArgument(f"unknown model type {kind!r}")
    params = doc["hyperparameters"]
    if "hidden_sizes" in params:
        params["hidden_sizes"] = tuple(params["hidden_sizes"])
    model = _MODEL_TYPES[kind](**params)
    _restore_state(model, kind, doc["parameters"], int(doc["n_features"]))
    standardizer = None
    if doc.get("standardizer") is not None:
        standardizer = Standardizer()
        standardizer.means_ = np.asarray(doc["standardizer"]["means"],
                                         dtype=np.float64)
        standardizer.stds_ = np.asarray(doc["standardizer"]["stds"],
                                        dtype=np.float64)
        standardizer.n_features_in_ = standardizer.means_.shape[0]
    return model, standardizer
