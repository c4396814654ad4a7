"""Independent reference implementations used to check the fast paths.

Everything here is deliberately naive (direct sums, exhaustive enumeration)
and shares no code with the package.
"""

import itertools

import numpy as np


def direct_dft_magnitudes(frame: np.ndarray, n_fft: int) -> np.ndarray:
    """O(N^2) DFT via an explicit complex exponential matrix."""
    padded = np.zeros(n_fft, dtype=np.complex128)
    padded[:len(frame)] = frame
    k = np.arange(n_fft // 2 + 1)
    t = np.arange(n_fft)
    basis = np.exp(-2j * np.pi * np.outer(k, t) / n_fft)
    return np.abs(basis @ padded)


def dct2_orthonormal_matrix(n: int) -> np.ndarray:
    """Orthonormal DCT-II as an explicit n x n matrix."""
    m = np.zeros((n, n))
    for j in range(n):
        scale = np.sqrt(1.0 / n) if j == 0 else np.sqrt(2.0 / n)
        for k in range(n):
            m[j, k] = scale * np.cos(np.pi * j * (2 * k + 1) / (2 * n))
    return m


def fbank_double_loop(weights: np.ndarray, power: np.ndarray) -> np.ndarray:
    """Naive matrix-vector product, one multiply at a time."""
    out = np.zeros(weights.shape[0])
    for i in range(weights.shape[0]):
        acc = 0.0
        for j in range(weights.shape[1]):
            acc += weights[i, j] * power[j]
        out[i] = acc
    return out


def central_difference_gradient(f, x: np.ndarray, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function, one coordinate at a time."""
    grad = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = step
        grad.flat[i] = (f(x + e) - f(x - e)) / (2.0 * step)
    return grad


def auc_by_pair_counting(labels: np.ndarray, probs: np.ndarray) -> float:
    """Exhaustive Mann-Whitney count: wins + half-ties over all pos/neg pairs."""
    pos = probs[np.asarray(labels) == 1]
    neg = probs[np.asarray(labels) == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def svm_dual_oracle(K: np.ndarray, y_pm: np.ndarray, C: float):
    """Exhaustive small-instance solver for the soft-margin SVM dual.

    Enumerates every partition of points into {alpha=0, alpha=C, free},
    solves the stationarity system for each, keeps feasible candidates, and
    returns the best objective. The true optimum satisfies KKT under some
    partition, so it is always among the candidates.

    Returns (alpha, b, objective); b is averaged over free vectors, or taken
    from the bound constraints' midpoint when no vector is free.
    """
    n = len(y_pm)
    best = None
    for assignment in itertools.product((0, 1, 2), repeat=n):
        free = [i for i, a in enumerate(assignment) if a == 2]
        at_c = [i for i, a in enumerate(assignment) if a == 1]
        alpha = np.zeros(n)
        alpha[at_c] = C
        if free:
            # stationarity for i in free: sum_j y_i y_j K_ij alpha_j + beta y_i = 1
            # plus the equality constraint sum_j y_j alpha_j = 0
            m = len(free)
            A = np.zeros((m + 1, m + 1))
            rhs = np.zeros(m + 1)
            for r, i in enumerate(free):
                for c, j in enumerate(free):
                    A[r, c] = y_pm[i] * y_pm[j] * K[i, j]
                A[r, m] = y_pm[i]
                rhs[r] = 1.0 - sum(y_pm[i] * y_pm[j] * K[i, j] * C for j in at_c)
            A[m, :m] = y_pm[free]
            rhs[m] = -sum(y_pm[j] * C for j in at_c)
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            if not np.all(np.isfinite(sol)):
                continue
            alpha[free] = sol[:m]
        if np.any(alpha < -1e-9) or np.any(alpha > C + 1e-9):
            continue
        if abs(float(alpha @ y_pm)) > 1e-8 * max(1.0, C):
            continue
        ay = alpha * y_pm
        obj = float(alpha.sum() - 0.5 * (ay @ K @ ay))
        if best is None or obj > best[2]:
            margins_wo_b = K @ ay
            if free:
                b = float(np.mean(y_pm[free] - margins_wo_b[free]))
            else:
                # b constrained to an interval; take its midpoint
                lo, hi = -np.inf, np.inf
                for i in range(n):
                    bound = y_pm[i] - margins_wo_b[i]
                    # alpha=0 needs y f >= 1; alpha=C needs y f <= 1
                    if (alpha[i] < 1e-9 and y_pm[i] > 0) or \
                       (alpha[i] > C - 1e-9 and y_pm[i] < 0):
                        lo = max(lo, bound)
                    else:
                        hi = min(hi, bound)
                if np.isfinite(lo) and np.isfinite(hi):
                    b = float((lo + hi) / 2.0)
                elif np.isfinite(lo) or np.isfinite(hi):
                    b = float(lo if np.isfinite(lo) else hi)
                else:
                    b = 0.0
            best = (alpha.copy(), b, obj)
    assert best is not None, "oracle found no feasible candidate"
    return best
