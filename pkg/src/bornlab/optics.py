"""Two-plate aperture model and far-field diffraction patterns.

The aperture consists of a stationary slit plate and a movable
combination mask pressed against it (contact approximation: amplitude
transmissions multiply pointwise).  The slit plate transmits 1 on its
slits and ``leakage_amplitude`` elsewhere within its finite extent.  The
mask carries one feature row per slit combination:

* ``opening`` scheme -- the mask is opaque (its leakage amplitude)
  except for listed openings, which transmit 1;
* ``blocking`` scheme -- the mask is transparent except for listed
  blockers, which transmit its leakage amplitude.

Leakage is quoted in intensity everywhere in configs; amplitudes are the
square roots and live in the dataclasses below.

The detector sits in the far field, where the field amplitude is the
Fourier transform of the aperture transmission evaluated at the conjugate
coordinate ``u = sin(theta)/lambda`` (cycles per meter).  Transmissions
here are piecewise constant, so the transform is computed analytically as
a sum of displaced sinc terms: an interval of width w centered at c with
value t contributes ``t * w * sinc(pi w u) * exp(-2i pi c u)``.  This is
exact; no FFT gridding enters, which matters for a null test where
discretization error would masquerade as signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from ._backend import piecewise_fourier
from ._parallel import map_slices
from .interference import COMBINATIONS

#: Mask feature schemes.
OPENING = "opening"
BLOCKING = "blocking"

Feature = tuple[float, float]  # (center, width), meters


def _validate_features(features: Sequence[Feature], what: str, allow_empty: bool):
    feats = tuple((float(c), float(w)) for c, w in features)
    if not feats:
        if not allow_empty:
            raise ValueError(f"{what}: need at least one feature")
        return feats
    for c, w in feats:
        if not (math.isfinite(c) and math.isfinite(w)):
            raise ValueError(f"{what}: center/width must be finite")
        if w <= 0.0:
            raise ValueError(f"{what}: width must be > 0 (got {w})")
    ordered = sorted(feats)
    for (c1, w1), (c2, w2) in zip(ordered[:-1], ordered[1:]):
        if c1 + w1 / 2 > c2 - w2 / 2:
            raise ValueError(
                f"{what}: features at {c1} and {c2} overlap"
            )
    return feats


def _check_amplitude(a: float, what: str) -> float:
    a = float(a)
    if not (0.0 <= a <= 1.0) or not math.isfinite(a):
        raise ValueError(f"{what} must lie in [0, 1] (got {a})")
    return a


@dataclass(frozen=True)
class SlitPlate:
    """Stationary plate: slits in an otherwise (nearly) opaque layer.

    ``leakage_amplitude`` is the amplitude transmission of the nominally
    opaque regions; its square is the intensity leakage fraction.
    """

    slits: tuple[Feature, ...]
    plate_half_width: float = 2e-3
    leakage_amplitude: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "slits", _validate_features(self.slits, "slits", allow_empty=False)
        )
        _check_amplitude(self.leakage_amplitude, "plate leakage amplitude")
        if not self.plate_half_width > 0.0:
            raise ValueError(
                f"plate_half_width must be > 0 (got {self.plate_half_width})"
            )
        for c, w in self.slits:
            if c - w / 2 < -self.plate_half_width or c + w / 2 > self.plate_half_width:
                raise ValueError(
                    f"slit at {c} extends beyond the plate half-width "
                    f"{self.plate_half_width}"
                )


@dataclass(frozen=True)
class CombinationMask:
    """Movable mask with one feature row per combination.

    ``features`` maps a combination label to the (center, width) list of
    its openings (``opening`` scheme) or blockers (``blocking`` scheme).
    ``displacement`` rigidly shifts the whole feature row for the
    measurement it is used in.
    """

    scheme: str
    features: Mapping[str, tuple[Feature, ...]]
    leakage_amplitude: float = 0.0
    displacement: float = 0.0

    def __post_init__(self):
        if self.scheme not in (OPENING, BLOCKING):
            raise ValueError(
                f"scheme must be '{OPENING}' or '{BLOCKING}' (got {self.scheme!r})"
            )
        _check_amplitude(self.leakage_amplitude, "mask leakage amplitude")
        if not math.isfinite(self.displacement):
            raise ValueError("displacement must be finite")
        checked = {}
        for combo, feats in self.features.items():
            if combo not in COMBINATIONS:
                raise ValueError(f"unknown combination label {combo!r}")
            checked[combo] = _validate_features(
                feats, f"mask features for {combo!r}", allow_empty=True
            )
        object.__setattr__(self, "features", checked)


@dataclass(frozen=True)
class OpticalConfig:
    """Wavelength and screen-coordinate conversions.

    The far-field coordinate is ``u = sin(theta)/lambda``; a detector at
    transverse position x and distance L sits at ``u = x / (lambda L)``
    in the small-angle regime.
    """

    wavelength: float

    def __post_init__(self):
        if not self.wavelength > 0.0:
            raise ValueError(f"wavelength must be > 0 (got {self.wavelength})")

    def u_from_position(self, x: float, distance: float) -> float:
        if not distance > 0.0:
            raise ValueError(f"distance must be > 0 (got {distance})")
        return x / (self.wavelength * distance)

    def u_from_angle(self, sin_theta: float) -> float:
        return sin_theta / self.wavelength


@dataclass(frozen=True, eq=False)
class CombinationAperture:
    """Piecewise-constant complex transmission of one combination.

    ``values[i]`` holds on ``[edges[i], edges[i+1])``; the transmission is
    zero outside ``[edges[0], edges[-1]]``.
    """

    edges: np.ndarray
    values: np.ndarray
    combination: str

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.complex128)
        if edges.ndim != 1 or values.ndim != 1 or edges.size != values.size + 1:
            raise ValueError("need n+1 edges for n interval values")
        if edges.size and not np.all(np.diff(edges) > 0):
            raise ValueError("edges must be strictly increasing")
        if values.size and np.max(np.abs(values)) > 1.0 + 1e-12:
            raise ValueError("|transmission| must not exceed 1")
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "values", values)

    def transmission(self, x):
        """Complex transmission at position(s) x."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.edges, x, side="right") - 1
        inside = (idx >= 0) & (idx < self.values.size)
        out = np.zeros(x.shape, dtype=np.complex128)
        out[inside] = self.values[idx[inside]]
        return out if out.ndim else out[()]


def triple_slit_plate(
    slit_width: float = 30e-6,
    separation: float = 100e-6,
    plate_half_width: float = 2e-3,
    leakage_amplitude: float = 0.0,
) -> SlitPlate:
    """Three equal slits centered on the beam at -d, 0, +d."""
    slits = tuple((c, slit_width) for c in (-separation, 0.0, separation))
    return SlitPlate(slits, plate_half_width, leakage_amplitude)


def combination_mask_for_plate(
    plate: SlitPlate,
    scheme: str = OPENING,
    feature_width: float = 100e-6,
    leakage_amplitude: float = 0.0,
    displacement: float = 0.0,
) -> CombinationMask:
    """Mask with one row per combination, features centered on the slits.

    Path labels A, B, C follow the order of ``plate.slits``.  ``opening``
    rows carry one opening per open slit; ``blocking`` rows carry one
    blocker per closed slit.
    """
    if len(plate.slits) != 3:
        raise ValueError("combination masks are defined for 3-slit plates")
    centers = {lab: c for lab, (c, _w) in zip("ABC", plate.slits)}
    features = {}
    for combo in COMBINATIONS:
        open_labels = set(combo) - {"0"}
        target = open_labels if scheme == OPENING else set("ABC") - open_labels
        features[combo] = tuple(
            (centers[lab], feature_width) for lab in sorted(target)
        )
    return CombinationMask(scheme, features, leakage_amplitude, displacement)


def _plate_pieces(plate: SlitPlate):
    """Breakpoints and values of the plate transmission on its extent."""
    w = plate.plate_half_width
    edges = [-w]
    values = []
    g = plate.leakage_amplitude
    for c, width in sorted(plate.slits):
        a, b = c - width / 2, c + width / 2
        edges.extend([a, b])
        values.extend([g, 1.0])
    edges.append(w)
    values.append(g)
    return edges, values


def build_combination_aperture(
    plate: SlitPlate, mask: CombinationMask, combination: str
) -> CombinationAperture:
    """Pointwise product of the plate and the (displaced) mask row.

    Raises if the mask defines no feature row for the combination.
    """
    if combination not in mask.features:
        raise ValueError(
            f"mask defines no feature row for combination {combination!r}"
        )
    plate_edges, plate_values = _plate_pieces(plate)
    feats = [
        (c + mask.displacement - w / 2, c + mask.displacement + w / 2)
        for c, w in mask.features[combination]
    ]
    if mask.scheme == OPENING:
        base, feat_val = mask.leakage_amplitude, 1.0
    else:
        base, feat_val = 1.0, mask.leakage_amplitude

    half = plate.plate_half_width
    cut = np.array(
        sorted(
            set(plate_edges)
            | {e for ab in feats for e in ab if -half < e < half}
        )
    )

    def plate_at(x: float) -> float:
        for (lo, hi), v in zip(zip(plate_edges[:-1], plate_edges[1:]), plate_values):
            if lo <= x < hi:
                return v
        return 0.0

    def mask_at(x: float) -> float:
        for lo, hi in feats:
            if lo <= x < hi:
                return feat_val
        return base

    edges = [cut[0]]
    values: list[float] = []
    for lo, hi in zip(cut[:-1], cut[1:]):
        mid = 0.5 * (lo + hi)
        v = plate_at(mid) * mask_at(mid)
        if values and v == values[-1]:
            edges[-1] = hi  # coalesce equal neighbors
        else:
            edges.append(hi)
            values.append(v)
    return CombinationAperture(
        np.array(edges), np.array(values, dtype=np.complex128), combination
    )


def far_field_amplitude(aperture: CombinationAperture, u):
    """Far-field amplitude at frequency(ies) ``u`` (cycles/meter).

    Analytic transform of the piecewise-constant transmission; exact up
    to floating-point rounding.
    """
    u_arr = np.ascontiguousarray(np.atleast_1d(u), dtype=np.float64)
    lo = np.ascontiguousarray(aperture.edges[:-1])
    hi = np.ascontiguousarray(aperture.edges[1:])
    val = np.ascontiguousarray(aperture.values)
    out = np.empty(u_arr.size, dtype=np.complex128)

    def fill(a: int, b: int) -> None:
        out[a:b] = piecewise_fourier(lo, hi, val, u_arr[a:b])

    map_slices(fill, u_arr.size)
    if np.ndim(u) == 0:
        return complex(out[0])
    return out


def pattern_set(
    plate: SlitPlate,
    mask: CombinationMask,
    u_grid,
    normalize: bool = True,
    displacements: Mapping[str, float] | None = None,
) -> dict[str, np.ndarray]:
    """Intensity curves of all eight combinations on a common grid.

    All curves share one normalization; with ``normalize`` the grid peak
    of the all-open curve is scaled to 1.  ``displacements`` optionally
    overrides the mask displacement per combination (one rigid shift per
    combination measurement).
    """
    u_arr = np.ascontiguousarray(np.atleast_1d(u_grid), dtype=np.float64)
    if u_arr.size == 0 or not np.all(np.isfinite(u_arr)):
        raise ValueError("u grid must be non-empty and finite")
    curves: dict[str, np.ndarray] = {}
    for combo in COMBINATIONS:
        m = mask
        if displacements is not None and combo in displacements:
            m = replace(mask, displacement=float(displacements[combo]))
        aperture = build_combination_aperture(plate, m, combo)
        amp = far_field_amplitude(aperture, u_arr)
        curves[combo] = amp.real * amp.real + amp.imag * amp.imag
    if normalize:
        peak = float(np.max(curves["ABC"]))
        if peak <= 0.0:
            raise ValueError("all-open curve vanishes on the grid; cannot normalize")
        for combo in COMBINATIONS:
            curves[combo] = curves[combo] / peak
    return curves


def stack_patterns(curves: Mapping[str, np.ndarray]) -> np.ndarray:
    """Stack the eight curves into shape (8, n), canonical order."""
    return np.stack([np.asarray(curves[c], dtype=float) for c in COMBINATIONS])
