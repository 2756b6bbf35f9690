"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Backend selection: set ``REPLYAUCTION_BACKEND=numpy`` or ``=numba`` before
import; unset, numba is used when importable and numpy otherwise.  Both
implementations of each kernel are kept importable so tests and benchmarks
can compare them directly.

The kernels receive only plain arrays:

* ``weight_table[k]``  softmax weight of reply k, exp(logit_k - max logit),
  where logit_k = r(k)/tau + log pi_ref(k) - log pi_gen(k);
* ``gen_probs[k]``     proposal probability of reply k;
* ``cand[t, j]``       reply index of candidate j in trial t.

Weight tables must come from max-subtracted logits; a tuple whose weights all
underflow to zero is skipped, which is only reachable when the logit spread
exceeds ~700.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_BACKEND = os.environ.get("REPLYAUCTION_BACKEND", "").strip().lower()

# default to the OpenMP layer: always present here and quieter than TBB probing
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    _HAVE_NUMBA = False

if _ENV_BACKEND not in ("", "numba", "numpy"):
    raise ValueError(
        f"REPLYAUCTION_BACKEND must be 'numba' or 'numpy', got {_ENV_BACKEND!r}"
    )
if _ENV_BACKEND == "numba" and not _HAVE_NUMBA:
    raise ImportError("REPLYAUCTION_BACKEND=numba but numba is not importable")

ACTIVE_BACKEND = _ENV_BACKEND or ("numba" if _HAVE_NUMBA else "numpy")

_ENUM_CHUNK = 1 << 14


# ---------------------------------------------------------------- numpy path

def induced_exact_numpy(gen_probs: np.ndarray, weight_table: np.ndarray, m: int) -> np.ndarray:
    """Exact induced reply distribution by summing over all ordered K^m tuples."""
    k = gen_probs.shape[0]
    out = np.zeros(k)
    total = k**m
    radix = k ** np.arange(m - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, _ENUM_CHUNK):
        codes = np.arange(start, min(start + _ENUM_CHUNK, total), dtype=np.int64)
        idx = (codes[:, None] // radix[None, :]) % k
        p_tuple = gen_probs[idx].prod(axis=1)
        w = weight_table[idx]
        denom = w.sum(axis=1)
        live = (p_tuple > 0.0) & (denom > 0.0)
        if not np.any(live):
            continue
        contrib = (p_tuple[live, None] / denom[live, None]) * w[live]
        out += np.bincount(idx[live].ravel(), weights=contrib.ravel(), minlength=k)
    return out


def run_trials_numpy(
    cand: np.ndarray, logit_table: np.ndarray, u_final: np.ndarray
) -> np.ndarray:
    """Chosen reply index per trial: softmax over each row's logits, inverse CDF."""
    logits = logit_table[cand]
    w = np.exp(logits - logits.max(axis=1, keepdims=True))
    cum = np.cumsum(w, axis=1)
    threshold = u_final * cum[:, -1]
    slot = (cum > threshold[:, None]).argmax(axis=1)
    # argmax yields 0 on an all-False row (threshold rounding up to the total);
    # match the sequential path, which falls back to the last slot.
    slot = np.where(cum[:, -1] > threshold, slot, cand.shape[1] - 1)
    return cand[np.arange(cand.shape[0]), slot]


def batch_tv_numpy(
    cand: np.ndarray, weight_table: np.ndarray, opt_probs: np.ndarray
) -> np.ndarray:
    """Per-trial TV distance between the batch's self-normalized reply mass and opt."""
    t_n, m = cand.shape
    k = opt_probs.shape[0]
    w = weight_table[cand]
    flat = (np.arange(t_n, dtype=np.int64)[:, None] * k + cand).ravel()
    mass = np.bincount(flat, weights=w.ravel(), minlength=t_n * k).reshape(t_n, k)
    mass /= w.sum(axis=1, keepdims=True)
    return 0.5 * np.abs(mass - opt_probs[None, :]).sum(axis=1)


# ---------------------------------------------------------------- numba path

if _HAVE_NUMBA:

    @njit(cache=True)
    def _induced_exact_numba(gen_probs, weight_table, m):  # pragma: no cover - jit
        k = gen_probs.shape[0]
        out = np.zeros(k)
        idx = np.zeros(m, dtype=np.int64)
        while True:
            p_tuple = 1.0
            denom = 0.0
            for j in range(m):
                p_tuple *= gen_probs[idx[j]]
                denom += weight_table[idx[j]]
            if p_tuple > 0.0 and denom > 0.0:
                scale = p_tuple / denom
                for j in range(m):
                    out[idx[j]] += scale * weight_table[idx[j]]
            pos = m - 1
            while pos >= 0:
                idx[pos] += 1
                if idx[pos] < k:
                    break
                idx[pos] = 0
                pos -= 1
            if pos < 0:
                break
        return out

    @njit(cache=True, parallel=True)
    def _run_trials_numba(cand, logit_table, u_final):  # pragma: no cover - jit
        t_n, m = cand.shape
        chosen = np.empty(t_n, dtype=np.int64)
        for t in prange(t_n):
            mx = -np.inf
            for j in range(m):
                v = logit_table[cand[t, j]]
                if v > mx:
                    mx = v
            total = 0.0
            for j in range(m):
                total += math.exp(logit_table[cand[t, j]] - mx)
            threshold = u_final[t] * total
            acc = 0.0
            pick = m - 1
            for j in range(m):
                acc += math.exp(logit_table[cand[t, j]] - mx)
                if acc > threshold:
                    pick = j
                    break
            chosen[t] = cand[t, pick]
        return chosen

    @njit(cache=True, parallel=True)
    def _batch_tv_numba(cand, weight_table, opt_probs):  # pragma: no cover - jit
        t_n, m = cand.shape
        k = opt_probs.shape[0]
        tv = np.empty(t_n)
        for t in prange(t_n):
            mass = np.zeros(k)
            total = 0.0
            for j in range(m):
                w = weight_table[cand[t, j]]
                mass[cand[t, j]] += w
                total += w
            acc = 0.0
            for y in range(k):
                acc += abs(mass[y] / total - opt_probs[y])
            tv[t] = 0.5 * acc
        return tv

    def induced_exact_numba(gen_probs, weight_table, m):
        return _induced_exact_numba(
            np.ascontiguousarray(gen_probs), np.ascontiguousarray(weight_table), m
        )

    def run_trials_numba(cand, logit_table, u_final):
        return _run_trials_numba(
            np.ascontiguousarray(cand, dtype=np.int64),
            np.ascontiguousarray(logit_table),
            np.ascontiguousarray(u_final),
        )

    def batch_tv_numba(cand, weight_table, opt_probs):
        return _batch_tv_numba(
            np.ascontiguousarray(cand, dtype=np.int64),
            np.ascontiguousarray(weight_table),
            np.ascontiguousarray(opt_probs),
        )


if ACTIVE_BACKEND == "numba":
    induced_exact = induced_exact_numba
    run_trials = run_trials_numba
    batch_tv = batch_tv_numba
else:
    induced_exact = induced_exact_numpy
    run_trials = run_trials_numpy
    batch_tv = batch_tv_numpy
