"""Independent oracles used by the test suite.

Everything here recomputes expected values from first principles without
touching the package's own code paths: raw bitmask inclusion-exclusion,
union-merging recursion, Monte Carlo resampling, and quadrature.
"""

from __future__ import annotations

import numpy as np


def raw_probability(psi: complex, alpha: float = 0.0) -> float:
    mag2 = psi.real * psi.real + psi.imag * psi.imag
    return mag2 + alpha * mag2 * np.sqrt(mag2)


def brute_force_interference(amps, alpha: float = 0.0) -> float:
    """Order-k term by explicit bitmask enumeration of all nonempty subsets."""
    amps = list(amps)
    k = len(amps)
    total = 0.0
    for bits in range(1, 2 ** k):
        psi = 0j
        count = 0
        for j in range(k):
            if bits >> j & 1:
                psi += amps[j]
                count += 1
        total += (-1.0) ** (k - count) * raw_probability(psi, alpha)
    return total


def union_recursion_interference(amps, alpha: float = 0.0) -> float:
    """Order-k term via the union-merging recursion.

    ``I(a1, a2, rest...) = I(a1+a2, rest...) - I(a1, rest...) - I(a2, rest...)``
    with the order-1 base case ``I(a) = p(a)``.  An algebraically
    different route from subset enumeration.
    """
    amps = list(amps)
    if len(amps) == 1:
        return raw_probability(amps[0], alpha)
    a1, a2, *rest = amps
    return (
        union_recursion_interference([a1 + a2, *rest], alpha)
        - union_recursion_interference([a1, *rest], alpha)
        - union_recursion_interference([a2, *rest], alpha)
    )


def mc_power_rho_std(pv_array, dp: float, samples: int, seed: int) -> float:
    """Sample std of rho after scaling each of the eight entries by
    independent relative Gaussian noise of size dp."""
    rng = np.random.default_rng(seed)
    rho = np.empty(samples)
    done = 0
    chunk = 200000
    while done < samples:
        n = min(chunk, samples - done)
        p = pv_array[None, :] * (1.0 + dp * rng.standard_normal((n, 8)))
        rho[done:done + n] = _rho_of_rows(p)
        done += n
    return float(np.std(rho, ddof=1))


def mc_poisson_rho_std(counts_array, samples: int, seed: int) -> float:
    """Sample std of rho under Poisson resampling of the eight counts."""
    rng = np.random.default_rng(seed)
    rho = np.empty(samples)
    done = 0
    chunk = 200000
    while done < samples:
        n = min(chunk, samples - done)
        p = rng.poisson(counts_array, size=(n, 8)).astype(float)
        rho[done:done + n] = _rho_of_rows(p)
        done += n
    return float(np.std(rho, ddof=1))


def _rho_of_rows(p: np.ndarray) -> np.ndarray:
    p0, pa, pb, pc, pab, pbc, pca, pabc = p.T
    i_ab = pab - pa - pb + p0
    i_bc = pbc - pb - pc + p0
    i_ca = pca - pc - pa + p0
    eps = pabc - pab - pbc - pca + pa + pb + pc - p0
    delta = np.abs(i_ab) + np.abs(i_bc) + np.abs(i_ca)
    return eps / delta


def single_slit_energy_quadrature(amplitude_fn, width: float, lobes: int = 200) -> float:
    """Integral of |amplitude|^2 over all u for a single slit.

    Gauss-Legendre quadrature lobe by lobe out to ``lobes`` sinc zeros,
    plus the exact analytic tail
    ``int_U^inf w^2 sinc^2(pi w u) du = (w/pi) [pi/2 - Si(2 pi w U) + sin^2(pi w U)/(pi w U)]``.
    """
    from scipy.special import sici

    nodes, weights = np.polynomial.legendre.leggauss(24)
    total = 0.0
    for m in range(lobes):
        a, b = m / width, (m + 1) / width
        u = 0.5 * (b - a) * nodes + 0.5 * (a + b)
        amp = amplitude_fn(u)
        intensity = np.abs(amp) ** 2
        total += 0.5 * (b - a) * np.sum(weights * intensity)
    total *= 2.0  # symmetric in u
    big_u = lobes / width
    s = np.pi * width * big_u
    si_val, _ci = sici(2.0 * s)
    tail = (width / np.pi) * (np.pi / 2.0 - si_val + np.sin(s) ** 2 / s)
    return total + 2.0 * tail
