# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-mode loops; see ``_kernels_py`` for the reference semantics."""

cimport cython


def field_flow(double complex[:, :, ::1] a, double complex[:, :, ::1] b,
               const double[:, :, ::1] cosw, const double[:, :, ::1] sab,
               const double[:, :, ::1] sba, const double[:, :, ::1] qa,
               const double[:, :, ::1] qb,
               const double complex[::1] px, const double complex[::1] py,
               const double complex[::1] pz):
    cdef Py_ssize_t i, j, l
    cdef Py_ssize_t ni = a.shape[0], nj = a.shape[1], nl = a.shape[2]
    cdef double complex pxy, ph, av, bv
    with nogil:
        for i in range(ni):
            for j in range(nj):
                pxy = px[i] * py[j]
                for l in range(nl):
                    ph = pxy * pz[l]
                    av = a[i, j, l]
                    bv = b[i, j, l]
                    a[i, j, l] = cosw[i, j, l] * av + sab[i, j, l] * bv + qa[i, j, l] * ph
                    b[i, j, l] = cosw[i, j, l] * bv - sba[i, j, l] * av + qb[i, j, l] * ph


def particle_force(const double complex[:, :, ::1] a, const double[:, :, ::1] wk,
                   const double[::1] kx, const double[::1] ky, const double[::1] kz,
                   const double complex[::1] px, const double complex[::1] py,
                   const double complex[::1] pz):
    cdef Py_ssize_t i, j, l
    cdef Py_ssize_t ni = a.shape[0], nj = a.shape[1], nl = a.shape[2]
    cdef double complex pxy, t
    cdef double fx = 0.0, fy = 0.0, fz = 0.0, e = 0.0
    cdef double sx, sy, sz, se, im
    with nogil:
        for i in range(ni):
            sx = 0.0
            for j in range(nj):
                pxy = px[i] * py[j]
                sy = 0.0
                sz = 0.0
                se = 0.0
                for l in range(nl):
                    t = wk[i, j, l] * (pxy * pz[l] * a[i, j, l])
                    im = t.imag
                    sy += im
                    sz += kz[l] * im
                    se += t.real
                sx += sy
                fy += ky[j] * sy
                fz += sz
                e += se
            fx += kx[i] * sx
    return fx, fy, fz, e


def friction_sum(const double[:, :, ::1] wk2, const double[::1] kx, const double[::1] ky,
                 const double[::1] kz, const double[:, :, ::1] epsk, const double[:, :, ::1] gk,
                 double vx, double vy, double vz, double eps):
    cdef Py_ssize_t i, j, l
    cdef Py_ssize_t ni = wk2.shape[0], nj = wk2.shape[1], nl = wk2.shape[2]
    cdef double kv, re, im, den, ek, t
    cdef double fx = 0.0, fy = 0.0, fz = 0.0
    cdef double sx, sy, sz
    with nogil:
        for i in range(ni):
            sx = 0.0
            for j in range(nj):
                sy = 0.0
                sz = 0.0
                for l in range(nl):
                    ek = epsk[i, j, l]
                    if ek <= 0.0:
                        continue
                    kv = kx[i] * vx + ky[j] * vy + kz[l] * vz
                    # (kv + i eps)^2 - ek gk = re + i im
                    re = kv * kv - eps * eps - ek * gk[i, j, l]
                    im = 2.0 * kv * eps
                    den = re * re + im * im
                    t = wk2[i, j, l] * (-ek * im / den)
                    sy += t
                    sz += kz[l] * t
                sx += sy
                fy += ky[j] * sy
                fz += sz
            fx += kx[i] * sx
    return fx, fy, fz
