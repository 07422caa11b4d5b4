"""Interference-hierarchy arithmetic for multi-path detection probabilities.

An experiment with n mutually exclusive paths yields one detection
probability per subset of open paths.  Classical additivity fails already
for pairs (ordinary interference); this module computes the whole tower of
interference terms order by order, and the background-subtracted order-3
statistics used by triple-slit null tests:

* ``I_A = p_A`` (order 1),
* ``I_AB = p_AB - p_A - p_B`` (order 2),
* ``I_ABC = p_ABC - p_AB - p_BC - p_CA + p_A + p_B + p_C`` (order 3),
* general order k by inclusion-exclusion over the nonempty subsets.

With a measured background ``p_0`` (all paths closed), the order-3 test
statistic and its normalization are

* ``epsilon = p_ABC - p_AB - p_BC - p_CA + p_A + p_B + p_C - p_0``,
* ``I_XY = p_XY - p_X - p_Y + p_0`` for the three pairs,
* ``delta = |I_AB| + |I_BC| + |I_CA|``  (pairwise-interference contrast),
* ``rho = epsilon / delta``.

When probabilities come from squared magnitudes of summed complex
amplitudes, ``epsilon`` vanishes identically; any systematic error then
shows up as a spurious nonzero value.  ``rho`` is reported as *undefined*
whenever ``delta`` falls below a guard threshold instead of dividing by a
vanishing contrast.

Probabilities may be densities, optical powers, or count rates; any common
unit works, ``epsilon``/``delta`` inherit it and ``rho`` is unitless.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from ._backend import sorkin_grid as _sorkin_grid_kernel

#: Path labels, in order; at most eight paths are supported.
PATH_LABELS = "ABCDEFGH"

#: Canonical order of the eight three-path combinations.  Every stacked
#: array and every CSV column in the package follows it.
COMBINATIONS = ("0", "A", "B", "C", "AB", "BC", "CA", "ABC")

#: Default guard threshold below which ``rho`` is flagged undefined,
#: in the working probability unit.
DEFAULT_GUARD = 1e-9

#: Bound on the interference order (subset enumeration is O(2^k)).
MAX_ORDER = 8


def _check_finite_complex(z: complex, what: str) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{what} must be finite (got {z!r})")
    return z


@dataclass(frozen=True)
class PathAmplitudes:
    """Complex amplitude per path, labeled ``A, B, C, ...`` in order."""

    amplitudes: tuple[complex, ...]

    def __init__(self, amplitudes: Iterable[complex]):
        amps = tuple(
            _check_finite_complex(a, "path amplitude") for a in amplitudes
        )
        if not 2 <= len(amps) <= len(PATH_LABELS):
            raise ValueError(
                f"need between 2 and {len(PATH_LABELS)} path amplitudes "
                f"(got {len(amps)})"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(PATH_LABELS[: len(self.amplitudes)])

    def amplitude(self, label: str) -> complex:
        try:
            idx = self.labels.index(label)
        except ValueError:
            raise ValueError(
                f"unknown path label {label!r}; have {''.join(self.labels)}"
            ) from None
        return self.amplitudes[idx]


@dataclass(frozen=True)
class ProbabilityRule:
    """Map from a summed path amplitude to a detection probability.

    ``alpha = 0`` is the quadratic rule ``|psi|**2``; nonzero ``alpha``
    adds a cubic correction ``alpha * |psi|**3``, the lowest-order term
    that breaks the quadratic cancellation of the order-3 statistic.
    Outputs are non-negative whenever ``alpha >= 0``.
    """

    alpha: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.alpha):
            raise ValueError(f"alpha must be finite (got {self.alpha})")

    @property
    def is_quadratic(self) -> bool:
        return self.alpha == 0.0

    def probability(self, psi: complex) -> float:
        psi = complex(psi)
        mag2 = psi.real * psi.real + psi.imag * psi.imag
        if self.alpha == 0.0:
            return mag2
        return mag2 + self.alpha * mag2 * math.sqrt(mag2)


#: The quadratic (squared-magnitude) rule.
BORN = ProbabilityRule(0.0)

_PV_FIELDS = ("p0", "pA", "pB", "pC", "pAB", "pBC", "pCA", "pABC")


@dataclass(frozen=True)
class ProbabilityVector:
    """The eight detection probabilities of a three-path experiment.

    Fields follow the canonical combination order; ``p0`` is the
    all-closed (background) measurement.
    """

    p0: float
    pA: float
    pB: float
    pC: float
    pAB: float
    pBC: float
    pCA: float
    pABC: float

    def __post_init__(self):
        for name in _PV_FIELDS:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite (got {v})")
            if v < 0.0:
                raise ValueError(f"{name} must be >= 0 (got {v})")

    @classmethod
    def from_array(cls, values) -> "ProbabilityVector":
        arr = np.asarray(values, dtype=float)
        if arr.shape != (8,):
            raise ValueError(f"expected 8 probabilities (got shape {arr.shape})")
        return cls(*map(float, arr))

    @classmethod
    def from_rule(
        cls,
        rule: ProbabilityRule,
        amps: PathAmplitudes,
        background: float = 0.0,
    ) -> "ProbabilityVector":
        """Probabilities of all eight combinations of a 3-path system,
        plus a constant additive background on every entry."""
        if len(amps.amplitudes) != 3:
            raise ValueError("from_rule needs exactly 3 path amplitudes")
        if background < 0.0 or not math.isfinite(background):
            raise ValueError(f"background must be finite and >= 0 (got {background})")
        values = [
            rule_probability(rule, amps, combo if combo != "0" else "")
            + background
            for combo in COMBINATIONS
        ]
        return cls(*values)

    @property
    def array(self) -> np.ndarray:
        return np.array([getattr(self, f) for f in _PV_FIELDS], dtype=float)

    def __add__(self, other: "ProbabilityVector") -> "ProbabilityVector":
        if not isinstance(other, ProbabilityVector):
            return NotImplemented
        return ProbabilityVector.from_array(self.array + other.array)

    def shifted(self, background: float) -> "ProbabilityVector":
        """Add the same constant to all eight entries."""
        return ProbabilityVector.from_array(self.array + background)


@dataclass(frozen=True)
class SorkinResult:
    """Order-3 statistics of one probability vector.

    ``rho`` is NaN and ``rho_defined`` False exactly when
    ``delta < guard``.  ``s_xy`` is the sign of the corresponding pairwise
    term (one of -1, 0, +1).
    """

    epsilon: float
    delta: float
    rho: float
    rho_defined: bool
    i_ab: float
    i_bc: float
    i_ca: float
    s_ab: int
    s_bc: int
    s_ca: int


def _sign(x: float) -> int:
    return (x > 0.0) - (x < 0.0)


def rule_probability(
    rule: ProbabilityRule, amps: PathAmplitudes, subset: Iterable[str]
) -> float:
    """Probability of detecting with exactly the given paths open.

    The subset's amplitudes are summed coherently and the rule applied to
    the sum; the empty subset gives ``rule(0) = 0``.
    """
    labels = list(subset)
    if len(set(labels)) != len(labels):
        raise ValueError(f"duplicate path labels in subset {labels!r}")
    total = 0j
    for lab in labels:
        total += amps.amplitude(lab)
    return rule.probability(total)


def interference_term(
    rule: ProbabilityRule, amps: PathAmplitudes, paths: Sequence[str]
) -> float:
    """Order-k interference term of the given paths.

    Inclusion-exclusion over the nonempty subsets S of ``paths``:
    ``I_k = sum_S (-1)**(k - |S|) p_S``.  Order 1 is the single-path
    probability, order 2 the usual pairwise term, order 3 the first term
    that vanishes under the quadratic rule.
    """
    k = len(paths)
    if k < 1:
        raise ValueError("need at least one path")
    if k > MAX_ORDER:
        raise ValueError(f"interference order limited to {MAX_ORDER} (got {k})")
    if len(set(paths)) != k:
        raise ValueError(f"duplicate path labels in {tuple(paths)!r}")
    for lab in paths:
        amps.amplitude(lab)  # validates presence
    total = 0.0
    for m in range(1, k + 1):
        sign = (-1.0) ** (k - m)
        for subset in itertools.combinations(paths, m):
            total += sign * rule_probability(rule, amps, subset)
    return total


def epsilon(pv: ProbabilityVector) -> float:
    """Background-subtracted order-3 interference term."""
    return pv.pABC - pv.pAB - pv.pBC - pv.pCA + pv.pA + pv.pB + pv.pC - pv.p0


def sorkin(pv: ProbabilityVector, guard: float = DEFAULT_GUARD) -> SorkinResult:
    """Full order-3 statistics of one probability vector.

    ``guard`` must be positive; ``rho`` is flagged undefined (NaN) exactly
    when ``delta < guard``, never producing a huge ratio from a vanishing
    pairwise contrast.
    """
    if not guard > 0.0:
        raise ValueError(f"guard must be > 0 (got {guard})")
    i_ab = pv.pAB - pv.pA - pv.pB + pv.p0
    i_bc = pv.pBC - pv.pB - pv.pC + pv.p0
    i_ca = pv.pCA - pv.pC - pv.pA + pv.p0
    eps = epsilon(pv)
    delta = abs(i_ab) + abs(i_bc) + abs(i_ca)
    defined = delta >= guard
    rho = eps / delta if defined else math.nan
    return SorkinResult(
        epsilon=eps,
        delta=delta,
        rho=rho,
        rho_defined=defined,
        i_ab=i_ab,
        i_bc=i_bc,
        i_ca=i_ca,
        s_ab=_sign(i_ab),
        s_bc=_sign(i_bc),
        s_ca=_sign(i_ca),
    )


class SorkinCurves(NamedTuple):
    """Pointwise order-3 statistics of eight stacked curves."""

    i_ab: np.ndarray
    i_bc: np.ndarray
    i_ca: np.ndarray
    epsilon: np.ndarray
    delta: np.ndarray
    rho: np.ndarray
    rho_defined: np.ndarray


def sorkin_curves(patterns: np.ndarray, guard: float = DEFAULT_GUARD) -> SorkinCurves:
    """Vectorized :func:`sorkin` over stacked curves.

    ``patterns`` has shape (8, n) in canonical combination order.  The
    kernel performs the exact operation sequence of the scalar path, so
    both routes agree bitwise.
    """
    if not guard > 0.0:
        raise ValueError(f"guard must be > 0 (got {guard})")
    p = np.ascontiguousarray(patterns, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] != 8:
        raise ValueError(f"patterns must have shape (8, n) (got {p.shape})")
    return SorkinCurves(*_sorkin_grid_kernel(p, guard))
