# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled training and evaluation kernels.

Hot loops for bounded ReLU networks: per-sample forward/backward passes and
the full Adam mini-batch loop run in C without returning to Python.  The
interface mirrors ``plrnet._py_kernels``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt

cnp.import_array()

COMPILED = True

ctypedef cnp.int64_t i64


cdef void _offsets(i64[::1] dims, i64[::1] woff, i64[::1] boff) noexcept nogil:
    cdef Py_ssize_t i
    cdef i64 off = 0
    for i in range(dims.shape[0] - 1):
        woff[i] = off
        off += dims[i] * dims[i + 1]
        boff[i] = off
        off += dims[i + 1]


cdef double _forward_one(const double[::1] flat, i64[::1] dims,
                         i64[::1] woff, i64[::1] boff,
                         double[:, ::1] acts, const double[:] xrow) noexcept nogil:
    """Unclamped output; post-ReLU hidden activations stored in ``acts``."""
    cdef Py_ssize_t n_aff = dims.shape[0] - 1
    cdef Py_ssize_t layer, h, k
    cdef i64 nin, nout, wo, bo
    cdef double s
    for layer in range(n_aff):
        nin = dims[layer]
        nout = dims[layer + 1]
        wo = woff[layer]
        bo = boff[layer]
        for h in range(nout):
            s = flat[bo + h]
            if layer == 0:
                for k in range(nin):
                    s += flat[wo + h * nin + k] * xrow[k]
            else:
                for k in range(nin):
                    s += flat[wo + h * nin + k] * acts[layer - 1, k]
            if layer < n_aff - 1:
                acts[layer, h] = s if s > 0.0 else 0.0
            else:
                return s
    return 0.0  # not reached: n_aff >= 2 and the last layer returns


cdef void _backward_one(const double[::1] flat, i64[::1] dims,
                        i64[::1] woff, i64[::1] boff,
                        double[:, ::1] acts, const double[:] xrow, double up,
                        double[::1] gflat, double[::1] dcur,
                        double[::1] dnxt) noexcept nogil:
    """Accumulate d(up * output)/d(params) into ``gflat``.

    ``up`` is the upstream derivative at the raw output; the caller zeroes
    it for clamped samples.
    """
    cdef Py_ssize_t n_aff = dims.shape[0] - 1
    cdef Py_ssize_t layer, h, k
    cdef i64 nin, nout, wo, bo
    cdef double dh

    # output layer (single unit)
    layer = n_aff - 1
    nin = dims[layer]
    wo = woff[layer]
    bo = boff[layer]
    for k in range(nin):
        gflat[wo + k] += up * acts[layer - 1, k]
        dcur[k] = up * flat[wo + k]
    gflat[bo] += up

    for layer in range(n_aff - 2, -1, -1):
        nin = dims[layer]
        nout = dims[layer + 1]
        wo = woff[layer]
        bo = boff[layer]
        if layer > 0:
            for k in range(nin):
                dnxt[k] = 0.0
        for h in range(nout):
            if acts[layer, h] <= 0.0:
                continue
            dh = dcur[h]
            if layer == 0:
                for k in range(nin):
                    gflat[wo + h * nin + k] += dh * xrow[k]
            else:
                for k in range(nin):
                    gflat[wo + h * nin + k] += dh * acts[layer - 1, k]
                    dnxt[k] += dh * flat[wo + h * nin + k]
            gflat[bo + h] += dh
        if layer > 0:
            for k in range(nin):
                dcur[k] = dnxt[k]


def batch_forward(flat, dims, double bound, x):
    """Clamped network output for every row of ``x`` (shape (n, d))."""
    cdef double[::1] flat_v = np.ascontiguousarray(flat, dtype=np.float64)
    cdef i64[::1] dims_v = np.ascontiguousarray(dims, dtype=np.int64)
    cdef double[:, ::1] x_v = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = x_v.shape[0]
    cdef Py_ssize_t n_hidden = dims_v.shape[0] - 2
    cdef i64 maxw = 0
    cdef Py_ssize_t i
    for i in range(dims_v.shape[0]):
        if dims_v[i] > maxw:
            maxw = dims_v[i]

    woff_a = np.empty(dims_v.shape[0] - 1, dtype=np.int64)
    boff_a = np.empty(dims_v.shape[0] - 1, dtype=np.int64)
    cdef i64[::1] woff = woff_a
    cdef i64[::1] boff = boff_a
    _offsets(dims_v, woff, boff)

    acts_a = np.zeros((max(n_hidden, 1), maxw), dtype=np.float64)
    cdef double[:, ::1] acts = acts_a
    out_a = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_a
    cdef double raw
    with nogil:
        for i in range(n):
            raw = _forward_one(flat_v, dims_v, woff, boff, acts, x_v[i])
            if raw > bound:
                raw = bound
            elif raw < -bound:
                raw = -bound
            out[i] = raw
    return out_a


def train_mlp(flat0, dims, double bound, x, y, batch_idx,
              double step_size, double beta1, double beta2, double eps,
              double stop_tol, long stop_patience):
    """Adam on the mean-squared error, mini-batches given by ``batch_idx``.

    Same contract as the numpy fallback: batch_idx has shape
    (max_epochs, n_batches, batch_size); stops once the full-sample MSE has
    not improved by ``stop_tol`` for ``stop_patience`` consecutive epochs.
    Returns (trained flat params, final full-sample MSE, epochs run).
    """
    flat_a = np.array(flat0, dtype=np.float64, copy=True)
    cdef double[::1] flat = flat_a
    cdef i64[::1] dims_v = np.ascontiguousarray(dims, dtype=np.int64)
    cdef double[:, ::1] x_v = np.ascontiguousarray(x, dtype=np.float64)
    cdef double[::1] y_v = np.ascontiguousarray(y, dtype=np.float64)
    cdef i64[:, :, ::1] idx = np.ascontiguousarray(batch_idx, dtype=np.int64)

    cdef Py_ssize_t n = x_v.shape[0]
    cdef Py_ssize_t n_params = flat.shape[0]
    cdef Py_ssize_t max_epochs = idx.shape[0]
    cdef Py_ssize_t n_batches = idx.shape[1]
    cdef Py_ssize_t mb = idx.shape[2]
    cdef Py_ssize_t n_hidden = dims_v.shape[0] - 2

    cdef i64 maxw = 0
    cdef Py_ssize_t i
    for i in range(dims_v.shape[0]):
        if dims_v[i] > maxw:
            maxw = dims_v[i]

    woff_a = np.empty(dims_v.shape[0] - 1, dtype=np.int64)
    boff_a = np.empty(dims_v.shape[0] - 1, dtype=np.int64)
    cdef i64[::1] woff = woff_a
    cdef i64[::1] boff = boff_a
    _offsets(dims_v, woff, boff)

    cdef double[:, ::1] acts = np.zeros((max(n_hidden, 1), maxw), dtype=np.float64)
    cdef double[::1] dcur = np.zeros(maxw, dtype=np.float64)
    cdef double[::1] dnxt = np.zeros(maxw, dtype=np.float64)
    cdef double[::1] gflat = np.zeros(n_params, dtype=np.float64)
    cdef double[::1] m1 = np.zeros(n_params, dtype=np.float64)
    cdef double[::1] m2 = np.zeros(n_params, dtype=np.float64)

    cdef Py_ssize_t epoch, b, ii, j, epochs_run = 0
    cdef i64 r
    cdef long t = 0, stall = 0
    cdef double raw, out, up, mse, best, bc1, bc2, resid

    mse = 0.0
    with nogil:
        for ii in range(n):
            raw = _forward_one(flat, dims_v, woff, boff, acts, x_v[ii])
            out = raw
            if out > bound:
                out = bound
            elif out < -bound:
                out = -bound
            resid = out - y_v[ii]
            mse += resid * resid
    mse /= n
    best = np.inf

    with nogil:
        for epoch in range(max_epochs):
            for b in range(n_batches):
                for j in range(n_params):
                    gflat[j] = 0.0
                for ii in range(mb):
                    r = idx[epoch, b, ii]
                    raw = _forward_one(flat, dims_v, woff, boff, acts, x_v[r])
                    if fabs(raw) >= bound:
                        continue
                    up = 2.0 * (raw - y_v[r]) / mb
                    _backward_one(flat, dims_v, woff, boff, acts, x_v[r], up,
                                  gflat, dcur, dnxt)
                t += 1
                bc1 = 1.0 - pow(beta1, t)
                bc2 = 1.0 - pow(beta2, t)
                for j in range(n_params):
                    m1[j] += (1.0 - beta1) * (gflat[j] - m1[j])
                    m2[j] += (1.0 - beta2) * (gflat[j] * gflat[j] - m2[j])
                    flat[j] -= step_size * (m1[j] / bc1) / (sqrt(m2[j] / bc2) + eps)
            mse = 0.0
            for ii in range(n):
                raw = _forward_one(flat, dims_v, woff, boff, acts, x_v[ii])
                out = raw
                if out > bound:
                    out = bound
                elif out < -bound:
                    out = -bound
                resid = out - y_v[ii]
                mse += resid * resid
            mse /= n
            epochs_run = epoch + 1
            if mse < best - stop_tol:
                best = mse
                stall = 0
            else:
                stall += 1
                if stall >= stop_patience:
                    break
    return flat_a, mse, int(epochs_run)
