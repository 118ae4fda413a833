# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled replication kernels. Must stay bit-identical to ``_kernels_py``."""
from libc.stdint cimport uint64_t, int64_t
from libc.stdlib cimport malloc, free
from libc.math cimport ldexp

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double TWO_M53 = 1.1102230246251565e-16
cdef double TINY = 1.4996968138956309e-241    # 2**-800
cdef double HUGE = 6.668014432879854e+240     # 2**800
cdef int SCALE_BITS = 800


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t key, uint64_t ctr) noexcept nogil:
    return <double>(_mix(key + (ctr + 1) * GOLDEN) >> 11) * TWO_M53


cdef inline int64_t _search(const double* cum, int64_t m, double t) noexcept nogil:
    # first index with cum[i] > t, clamped to m - 1
    cdef int64_t lo = 0, hi = m, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cum[mid] > t:
            hi = mid
        else:
            lo = mid + 1
    if lo >= m:
        lo = m - 1
    return lo


def simulate(const int64_t[::1] sizes, const double[::1] mu0_cum,
             const double[::1] gbar_flat, const int64_t[::1] gbar_off,
             const double[::1] kcum_flat, const int64_t[::1] kcum_off,
             const double[::1] f, int64_t N, const uint64_t[::1] keys,
             double[::1] eta_out, double[::1] phi_out, int64_t[:, ::1] pos_out):
    """Run one particle system per key; write eta_n(f) and phi_n per replication."""
    cdef int64_t R = keys.shape[0]
    cdef int64_t n = sizes.shape[0] - 1
    cdef bint keep = pos_out.shape[0] == R
    cdef int64_t r, i, k, m_prev, m_next, row
    cdef uint64_t key, ctr
    cdef double total, phi, s, t
    cdef int scale
    cdef const double* gb
    cdef const double* kc
    cdef int64_t* pos = <int64_t*> malloc(N * sizeof(int64_t))
    cdef int64_t* par = <int64_t*> malloc(N * sizeof(int64_t))
    cdef double* cum = <double*> malloc(N * sizeof(double))
    if pos == NULL or par == NULL or cum == NULL:
        free(pos); free(par); free(cum)
        raise MemoryError()
    try:
        with nogil:
            for r in range(R):
                key = keys[r]
                m_prev = sizes[0]
                total = mu0_cum[m_prev - 1]
                for i in range(N):
                    pos[i] = _search(&mu0_cum[0], m_prev, _uniform(key, i) * total)
                phi = 1.0
                scale = 0
                ctr = N
                for k in range(1, n + 1):
                    m_next = sizes[k]
                    gb = &gbar_flat[gbar_off[k - 1]]
                    kc = &kcum_flat[kcum_off[k - 1]]
                    s = 0.0
                    for i in range(N):
                        s = s + gb[pos[i]]
                        cum[i] = s
                    total = cum[N - 1]
                    phi = phi * (total / N)
                    while phi < TINY and phi > 0.0:
                        phi = phi * HUGE
                        scale += 1
                    while phi > HUGE:
                        phi = phi * TINY
                        scale -= 1
                    for i in range(N):
                        par[i] = pos[_search(cum, N, _uniform(key, ctr + i) * total)]
                    ctr += N
                    for i in range(N):
                        row = par[i] * m_next
                        t = _uniform(key, ctr + i) * kc[row + m_next - 1]
                        pos[i] = _search(&kc[row], m_next, t)
                    ctr += N
                    m_prev = m_next
                s = 0.0
                for i in range(N):
                    s = s + f[pos[i]]
                eta_out[r] = s / N
                phi_out[r] = ldexp(phi, -SCALE_BITS * scale)
                if keep:
                    for i in range(N):
                        pos_out[r, i] = pos[i]
    finally:
        free(pos); free(par); free(cum)


def sis(const double[::1] pi_cum, const double[::1] fw, int64_t N,
        const uint64_t[::1] keys, double[::1] out):
    """Unnormalized importance sampling estimate (1/N) sum f*omega per key."""
    cdef int64_t R = keys.shape[0]
    cdef int64_t m = pi_cum.shape[0]
    cdef int64_t r, i
    cdef double total = pi_cum[m - 1]
    cdef double s
    cdef uint64_t key
    with nogil:
        for r in range(R):
            key = keys[r]
            s = 0.0
            for i in range(N):
                s = s + fw[_search(&pi_cum[0], m, _uniform(key, i) * total)]
            out[r] = s / N
