"""Hot numeric kernels: numba-compiled loops with a pure-numpy fallback.

Two kernels dominate sweep runtime: the piecewise-constant Fourier sum
(far-field amplitude over a detector grid) and the pointwise interference
statistics over eight intensity curves.  Both exist in two functionally
identical versions:

* ``*_numba`` -- ``@njit(cache=True, nogil=True)`` scalar loops,
* ``*_numpy`` -- vectorized numpy.

Selection, fixed at import time:

* ``BORNLAB_BACKEND=numba`` forces the compiled path (raises if numba is
  not importable),
* ``BORNLAB_BACKEND=numpy`` forces the fallback,
* unset: numba when importable, numpy otherwise.

The interference-statistics kernels perform the same IEEE operations in
the same order in both versions and agree bit for bit.  The Fourier
kernels may differ in the last ulp (libm vs. numpy SIMD transcendentals);
``benchmarks/bench_backends.py`` measures both and checks agreement.
"""

from __future__ import annotations

import math
import os

import numpy as np

BACKEND_ENV = "BORNLAB_BACKEND"

_choice = os.environ.get(BACKEND_ENV, "").strip().lower()
if _choice not in ("", "numba", "numpy"):
    raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy' (got {_choice!r})")

if _choice == "numpy":
    _numba = None
else:
    try:
        import numba as _numba
    except ImportError:
        if _choice == "numba":
            raise
        _numba = None

HAS_NUMBA = _numba is not None
BACKEND = "numba" if HAS_NUMBA else "numpy"


def piecewise_fourier_numpy(lo, hi, val, u):
    """Fourier transform of a piecewise-constant function at frequencies u.

    The function takes the complex value ``val[j]`` on ``[lo[j], hi[j])``
    and vanishes elsewhere.  Each interval of width w centered at c
    contributes ``val * w * sinc(pi w u) * exp(-2i pi c u)``.
    """
    out = np.zeros(u.shape, dtype=np.complex128)
    for j in range(lo.size):
        width = hi[j] - lo[j]
        center = 0.5 * (lo[j] + hi[j])
        x = np.pi * width * u
        s = np.ones_like(u)
        nz = x != 0.0
        s[nz] = np.sin(x[nz]) / x[nz]
        out += (val[j] * width) * s * np.exp(-2j * np.pi * center * u)
    return out


def sorkin_grid_numpy(p, guard):
    """Pointwise interference statistics for stacked curves.

    ``p`` has shape (8, n) in the canonical combination order
    ``0, A, B, C, AB, BC, CA, ABC``.  Returns arrays
    ``(i_ab, i_bc, i_ca, epsilon, delta, rho, defined)``; ``rho`` is NaN
    where ``delta`` is below ``guard``.
    """
    p0, pa, pb, pc, pab, pbc, pca, pabc = p
    i_ab = pab - pa - pb + p0
    i_bc = pbc - pb - pc + p0
    i_ca = pca - pc - pa + p0
    eps = pabc - pab - pbc - pca + pa + pb + pc - p0
    delta = np.abs(i_ab) + np.abs(i_bc) + np.abs(i_ca)
    defined = delta >= guard
    rho = np.full(delta.shape, np.nan)
    np.divide(eps, delta, out=rho, where=defined)
    return i_ab, i_bc, i_ca, eps, delta, rho, defined


if HAS_NUMBA:

    @_numba.njit(cache=True, nogil=True)
    def piecewise_fourier_numba(lo, hi, val, u):  # pragma: no cover - jitted
        out = np.zeros(u.size, dtype=np.complex128)
        for i in range(u.size):
            acc = 0.0 + 0.0j
            for j in range(lo.size):
                width = hi[j] - lo[j]
                center = 0.5 * (lo[j] + hi[j])
                x = np.pi * width * u[i]
                if x != 0.0:
                    s = math.sin(x) / x
                else:
                    s = 1.0
                phase = -2.0 * np.pi * center * u[i]
                acc += (val[j] * width) * s * complex(math.cos(phase), math.sin(phase))
            out[i] = acc
        return out

    @_numba.njit(cache=True, nogil=True)
    def sorkin_grid_numba(p, guard):  # pragma: no cover - jitted
        n = p.shape[1]
        i_ab = np.empty(n)
        i_bc = np.empty(n)
        i_ca = np.empty(n)
        eps = np.empty(n)
        delta = np.empty(n)
        rho = np.empty(n)
        defined = np.empty(n, dtype=np.bool_)
        for i in range(n):
            p0 = p[0, i]
            pa = p[1, i]
            pb = p[2, i]
            pc = p[3, i]
            pab = p[4, i]
            pbc = p[5, i]
            pca = p[6, i]
            pabc = p[7, i]
            i_ab[i] = pab - pa - pb + p0
            i_bc[i] = pbc - pb - pc + p0
            i_ca[i] = pca - pc - pa + p0
            eps[i] = pabc - pab - pbc - pca + pa + pb + pc - p0
            delta[i] = abs(i_ab[i]) + abs(i_bc[i]) + abs(i_ca[i])
            defined[i] = delta[i] >= guard
            rho[i] = eps[i] / delta[i] if defined[i] else np.nan
        return i_ab, i_bc, i_ca, eps, delta, rho, defined

    piecewise_fourier = piecewise_fourier_numba
    sorkin_grid = sorkin_grid_numba
else:
    piecewise_fourier_numba = None
    sorkin_grid_numba = None
    piecewise_fourier = piecewise_fourier_numpy
    sorkin_grid = sorkin_grid_numpy


def available_backends() -> dict:
    """Name -> (piecewise_fourier, sorkin_grid) for every usable backend."""
    table = {"numpy": (piecewise_fourier_numpy, sorkin_grid_numpy)}
    if HAS_NUMBA:
        table["numba"] = (piecewise_fourier_numba, sorkin_grid_numba)
    return table
