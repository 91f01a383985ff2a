# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs

cnp.import_array()

ctypedef double complex cplx

def alias_solve(const cplx[:, ::1] otf, psi, const cplx[:, ::1] rhs,
                Py_ssize_t ml, Py_ssize_t nl, Py_ssize_t dr, Py_ssize_t dc,
                double two_tau):
    # Row-sequential sweeps with small per-class accumulators keep memory
    # traffic linear. The dominant member of each class is kept out of the
    # running sums so its own term never gets subtracted back out.
    cdef Py_ssize_t mh = dr * ml, nh = dc * nl, d = dr * dc
    cdef const double[:, ::1] pv
    cdef bint has_psi = psi is not None
    if has_psi:
        pv = np.ascontiguousarray(psi, dtype=np.float64)
    amax_arr = np.full((ml, nl), -1.0)
    kmax_arr = np.zeros((ml, nl), dtype=np.intp)
    rest_a_arr = np.zeros((ml, nl))
    rest_b_arr = np.zeros((ml, nl), dtype=np.complex128)
    bmax_arr = np.zeros((ml, nl), dtype=np.complex128)
    out = np.empty((mh, nh), dtype=np.complex128)
    cdef double[:, ::1] amax = amax_arr
    cdef Py_ssize_t[:, ::1] kmax = kmax_arr
    cdef double[:, ::1] rest_a = rest_a_arr
    cdef cplx[:, ::1] rest_b = rest_b_arr
    cdef cplx[:, ::1] bmax = bmax_arr
    cdef cplx[:, ::1] x = out
    cdef Py_ssize_t i, j, p, q, b, flat
    cdef double pk, ak, ta, scale, lr, li, rr, ri, bor, boi
    cdef double base = two_tau * d
    cdef cplx bk, bo
    with nogil:
        # pass 1: dominant member of every class
        for i in range(mh):
            p = i % ml
            for b in range(dc):
                for q in range(nl):
                    j = b * nl + q
                    lr = otf[i, j].real
                    li = otf[i, j].imag
                    pk = pv[i, j] if has_psi else 1.0
                    ak = pk * (lr * lr + li * li)
                    if ak > amax[p, q]:
                        amax[p, q] = ak
                        kmax[p, q] = i * nh + j
        # pass 2: sums over the remaining members
        for i in range(mh):
            p = i % ml
            for b in range(dc):
                for q in range(nl):
                    j = b * nl + q
                    lr = otf[i, j].real
                    li = otf[i, j].imag
                    rr = rhs[i, j].real
                    ri = rhs[i, j].imag
                    pk = pv[i, j] if has_psi else 1.0
                    bk.real = pk * (lr * rr - li * ri)
                    bk.imag = pk * (lr * ri + li * rr)
                    if i * nh + j == kmax[p, q]:
                        bmax[p, q] = bk
                    else:
                        rest_a[p, q] += pk * (lr * lr + li * li)
                        rest_b[p, q].real += bk.real
                        rest_b[p, q].imag += bk.imag
        # pass 3: leave-one-out combination
        for i in range(mh):
            p = i % ml
            for b in range(dc):
                for q in range(nl):
                    j = b * nl + q
                    lr = otf[i, j].real
                    li = otf[i, j].imag
                    rr = rhs[i, j].real
                    ri = rhs[i, j].imag
                    pk = pv[i, j] if has_psi else 1.0
                    flat = i * nh + j
                    if flat == kmax[p, q]:
                        ta = base + rest_a[p, q]
                        bor = rest_b[p, q].real
                        boi = rest_b[p, q].imag
                    else:
                        ak = pk * (lr * lr + li * li)
                        ta = base + (rest_a[p, q] - ak) + amax[p, q]
                        bor = (rest_b[p, q].real - pk * (lr * rr - li * ri)) + bmax[p, q].real
                        boi = (rest_b[p, q].imag - pk * (lr * ri + li * rr)) + bmax[p, q].imag
                    scale = pk / (two_tau * (base + rest_a[p, q] + amax[p, q]))
                    # pk * (R * ta - conj(lam) * bo) / (two_tau * total)
                    x[i, j].real = scale * (rr * ta - (lr * bor + li * boi))
                    x[i, j].imag = scale * (ri * ta - (lr * boi - li * bor))
    return out


def alias_solve_identity(const cplx[:, ::1] otf, const cplx[:, ::1] rhs,
                         Py_ssize_t ml, Py_ssize_t nl, Py_ssize_t dr, Py_ssize_t dc,
                         double two_tau):
    cdef Py_ssize_t mh = dr * ml, nh = dc * nl, d = dr * dc
    num_arr = np.zeros((ml, nl), dtype=np.complex128)
    den_arr = np.full((ml, nl), two_tau * d)
    out = np.empty((mh, nh), dtype=np.complex128)
    cdef cplx[:, ::1] num = num_arr
    cdef double[:, ::1] den = den_arr
    cdef cplx[:, ::1] x = out
    cdef Py_ssize_t i, j, p, q, b
    cdef double lr, li, rr, ri, sr, si, inv = 1.0 / two_tau
    with nogil:
        for i in range(mh):
            p = i % ml
            for b in range(dc):
                for q in range(nl):
                    j = b * nl + q
                    lr = otf[i, j].real
                    li = otf[i, j].imag
                    rr = rhs[i, j].real
                    ri = rhs[i, j].imag
                    num[p, q].real += lr * rr - li * ri
                    num[p, q].imag += lr * ri + li * rr
                    den[p, q] += lr * lr + li * li
        for p in range(ml):
            for q in range(nl):
                num[p, q].real /= den[p, q]
                num[p, q].imag /= den[p, q]
        for i in range(mh):
            p = i % ml
            for b in range(dc):
                for q in range(nl):
                    j = b * nl + q
                    lr = otf[i, j].real
                    li = otf[i, j].imag
                    sr = num[p, q].real
                    si = num[p, q].imag
                    # (R - conj(lam) * s) / two_tau
                    x[i, j].real = (rhs[i, j].real - (lr * sr + li * si)) * inv
                    x[i, j].imag = (rhs[i, j].imag - (lr * si - li * sr)) * inv
    return out


def vector_shrink(nu_h, nu_v, double threshold):
    h_arr = np.ascontiguousarray(nu_h, dtype=np.float64)
    v_arr = np.ascontiguousarray(nu_v, dtype=np.float64)
    shape = h_arr.shape
    cdef const double[::1] h = h_arr.reshape(-1)
    cdef const double[::1] v = v_arr.reshape(-1)
    out_h = np.empty(h.shape[0])
    out_v = np.empty(h.shape[0])
    cdef double[::1] oh = out_h, ov = out_v
    cdef Py_ssize_t i, n = h.shape[0]
    cdef double nrm, scale
    with nogil:
        for i in range(n):
            nrm = sqrt(h[i] * h[i] + v[i] * v[i])
            if nrm > threshold:
                scale = 1.0 - threshold / nrm
            else:
                scale = 0.0
            oh[i] = scale * h[i]
            ov[i] = scale * v[i]
    return out_h.reshape(shape), out_v.reshape(shape)


def soft_threshold(nu, double threshold):
    arr = np.ascontiguousarray(nu, dtype=np.float64)
    shape = arr.shape
    cdef const double[::1] src = arr.reshape(-1)
    out = np.empty(src.shape[0])
    cdef double[::1] dst = out
    cdef Py_ssize_t i, n = src.shape[0]
    cdef double mag
    with nogil:
        for i in range(n):
            mag = fabs(src[i]) - threshold
            if mag > 0.0:
                dst[i] = mag if src[i] > 0.0 else -mag
            else:
                dst[i] = 0.0
    return out.reshape(shape)
