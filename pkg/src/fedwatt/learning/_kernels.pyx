# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-epoch SGD kernels (hot loop of every simulation).

Contract matches ``_pykernels``: update ``params`` in place over one epoch,
visiting samples in ``order``, and return the summed squared error measured
at each batch's forward pass. Loops run without the GIL so client training
threads can overlap.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

COMPILED = True


def linear_sgd_epoch(double[::1] params, const double[:, ::1] X, const double[::1] y,
                     const long long[::1] order, Py_ssize_t batch_size, double lr):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef double[::1] grad_w = np.zeros(d)
    cdef double[::1] err = np.empty(min(batch_size, n))
    cdef double sq_err = 0.0
    cdef double pred, grad_b, scale
    cdef Py_ssize_t start, stop, nb, i, j, row

    with nogil:
        start = 0
        while start < n:
            stop = start + batch_size
            if stop > n:
                stop = n
            nb = stop - start
            grad_b = 0.0
            for j in range(d):
                grad_w[j] = 0.0
            for i in range(nb):
                row = order[start + i]
                pred = params[d]
                for j in range(d):
                    pred += params[j] * X[row, j]
                err[i] = pred - y[row]
                sq_err += err[i] * err[i]
                grad_b += err[i]
                for j in range(d):
                    grad_w[j] += err[i] * X[row, j]
            scale = 2.0 * lr / nb
            for j in range(d):
                params[j] -= scale * grad_w[j]
            params[d] -= scale * grad_b
            start = stop
    return sq_err


def mlp_sgd_epoch(double[::1] params, const double[:, ::1] X, const double[::1] y,
                  const long long[::1] order, Py_ssize_t batch_size, double lr,
                  Py_ssize_t hidden):
    cdef Py_ssize_t n = order.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t h = hidden
    cdef Py_ssize_t bmax = min(batch_size, n)
    # layout: [W1 (h*d), b1 (h), w2 (h), b2]
    cdef Py_ssize_t off_b1 = h * d
    cdef Py_ssize_t off_w2 = h * d + h
    cdef Py_ssize_t off_b2 = h * d + 2 * h
    cdef double[:, ::1] act = np.empty((bmax, h))
    cdef double[::1] err = np.empty(bmax)
    cdef double[::1] grad_w1 = np.zeros(h * d)
    cdef double[::1] grad_b1 = np.zeros(h)
    cdef double[::1] grad_w2 = np.zeros(h)
    cdef double sq_err = 0.0
    cdef double pred, z, grad_b2, scale, dz
    cdef Py_ssize_t start, stop, nb, i, j, l, row

    with nogil:
        start = 0
        while start < n:
            stop = start + batch_size
            if stop > n:
                stop = n
            nb = stop - start
            grad_b2 = 0.0
            for j in range(h * d):
                grad_w1[j] = 0.0
            for j in range(h):
                grad_b1[j] = 0.0
                grad_w2[j] = 0.0
            for i in range(nb):
                row = order[start + i]
                pred = params[off_b2]
                for j in range(h):
                    z = params[off_b1 + j]
                    for l in range(d):
                        z += params[j * d + l] * X[row, l]
                    act[i, j] = tanh(z)
                    pred += params[off_w2 + j] * act[i, j]
                err[i] = pred - y[row]
                sq_err += err[i] * err[i]
                grad_b2 += err[i]
                for j in range(h):
                    grad_w2[j] += err[i] * act[i, j]
                    dz = err[i] * params[off_w2 + j] * (1.0 - act[i, j] * act[i, j])
                    grad_b1[j] += dz
                    for l in range(d):
                        grad_w1[j * d + l] += dz * X[row, l]
            scale = 2.0 * lr / nb
            for j in range(h * d):
                params[j] -= scale * grad_w1[j]
            for j in range(h):
                params[off_b1 + j] -= scale * grad_b1[j]
                params[off_w2 + j] -= scale * grad_w2[j]
            params[off_b2] -= scale * grad_b2
            start = stop
    return sq_err


cdef extern from "math.h" nogil:
    double tanh(double)
