"""Sampled transverse fields: synthesis, rotation, holograms, serialization.

This layer works purely on pixel grids and never touches the ladder-operator
algebra, so it can serve as an independent oracle for the mode-space results
(and vice versa). Grids are square with symmetric sample coordinates
x_i = (i - (side - 1) / 2) * pitch, so the beam axis sits between the four
central pixels and right-angle rotations land exactly on grid nodes.

File formats
------------
Field binary ("FGRD", version 1): little-endian header
    magic 4s | version u32 | side u32 | pitch f64 | sigma0 f64
    | wavelength f64 | z f64
followed by side*side complex128 samples (interleaved float64 re, im),
row-major with the row index running along y.

Phase-map binary ("PMAP", version 1): little-endian header
    magic 4s | version u32 | side u32 | grating_period f64
followed by side*side float64 phase values in radians.

Phase-map image dump: 8-bit binary PGM (P5), phases mapped linearly from
[-pi, pi] to [0, 255].
"""

from __future__ import annotations

import math
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import j1 as _bessel_j1
from scipy.special import jvp as _bessel_jvp

from .errors import (
    CoverageError,
    GridMismatchError,
    SeparationError,
    UnreachableAmplitudeError,
)
from .modes import ModeIndex, ModeState, beam_params, BeamGeometry, hg_wavefunction, index_to_mode

MIN_SIDE = 128
MIN_COVERAGE_SIGMA = 6.0
DEFAULT_SIDE = 512
DEFAULT_WINDOW_SIGMA = 8.0
DEFAULT_WAVELENGTH = 780e-9

# First maximum of J1: the invertible range of the amplitude encoding.
J1_PEAK_X = float(brentq(lambda x: _bessel_jvp(1, x, 1), 1.0, 3.0, xtol=1e-14))
J1_PEAK = float(_bessel_j1(J1_PEAK_X))

_RENORM_FLOOR = 1e-9


@dataclass(frozen=True)
class FieldGrid:
    """Complex field samples on a square symmetric grid."""

    samples: np.ndarray
    pitch: float
    sigma0: float
    wavelength: float = DEFAULT_WAVELENGTH
    z: float = 0.0

    def __post_init__(self):
        arr = np.array(self.samples, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("samples must be a square 2-D array")
        if arr.shape[0] < MIN_SIDE:
            raise ValueError(f"grid side {arr.shape[0]} below minimum {MIN_SIDE}")
        if self.pitch <= 0 or self.sigma0 <= 0 or self.wavelength <= 0:
            raise ValueError("pitch, sigma0 and wavelength must be positive")
        half = 0.5 * arr.shape[0] * self.pitch
        if half < MIN_COVERAGE_SIGMA * self.sigma0:
            raise CoverageError(
                f"window half-width {half:.4g} below "
                f"{MIN_COVERAGE_SIGMA} sigma0 = {MIN_COVERAGE_SIGMA * self.sigma0:.4g}")
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def side(self) -> int:
        return self.samples.shape[0]

    @property
    def coords(self) -> np.ndarray:
        """1-D sample coordinates shared by both axes."""
        return (np.arange(self.side) - (self.side - 1) / 2.0) * self.pitch

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.pitch ** 2)

    def with_samples(self, samples: np.ndarray) -> "FieldGrid":
        return FieldGrid(samples, self.pitch, self.sigma0, self.wavelength, self.z)


def _grid_axes(side: int, pitch: float) -> tuple[np.ndarray, np.ndarray]:
    c = (np.arange(side) - (side - 1) / 2.0) * pitch
    return np.meshgrid(c, c, indexing="xy")  # X varies along columns, Y along rows


def synthesize_hg_field(idx: ModeIndex, sigma0: float, side: int = DEFAULT_SIDE,
                        window_sigma: float = DEFAULT_WINDOW_SIGMA,
                        wavelength: float = DEFAULT_WAVELENGTH,
                        z: float = 0.0) -> FieldGrid:
    """Sample HG(m, n) on a symmetric grid, renormalized to unit grid power.

    At z = 0 the waist wavefunction is sampled directly. Away from the waist
    the profile is rescaled by sigma(z) and picks up the wavefront curvature
    and the (m + n + 1) multiple of the Gouy phase.
    """
    if window_sigma < MIN_COVERAGE_SIGMA:
        raise CoverageError(
            f"window of {window_sigma} sigma0 below minimum {MIN_COVERAGE_SIGMA}")
    pitch = 2.0 * window_sigma * sigma0 / side
    x, y = _grid_axes(side, pitch)
    if z == 0.0:
        f = hg_wavefunction(idx, sigma0, x, y).astype(complex)
    else:
        geom = BeamGeometry(sigma0, wavelength, z)
        sigma_z, gouy, q_inv = beam_params(geom)
        scale = sigma0 / sigma_z
        curvature = -(q_inv.imag)  # k / q
        phase = 0.5 * curvature * (x ** 2 + y ** 2) - (idx.total + 1) * gouy
        f = (scale * hg_wavefunction(idx, sigma0, scale * x, scale * y)
             * np.exp(1j * phase))
    f = f / math.sqrt(float(np.sum(np.abs(f) ** 2)) * pitch ** 2)
    return FieldGrid(f, pitch, sigma0, wavelength, z)


def synthesize_superposition(state: ModeState, sigma0: float,
                             side: int = DEFAULT_SIDE,
                             window_sigma: float = DEFAULT_WINDOW_SIGMA,
                             wavelength: float = DEFAULT_WAVELENGTH) -> FieldGrid:
    """Waist-plane field of an amplitude vector over the HG basis."""
    pitch = 2.0 * window_sigma * sigma0 / side
    x, y = _grid_axes(side, pitch)
    total = np.zeros_like(x, dtype=complex)
    for i, amp in enumerate(state.amplitudes):
        if amp == 0:
            continue
        m, n = index_to_mode(i, state.cutoff)
        total += amp * hg_wavefunction(ModeIndex(m, n), sigma0, x, y)
    norm = math.sqrt(float(np.sum(np.abs(total) ** 2)) * pitch ** 2)
    if norm == 0.0:
        raise ValueError("zero superposition")
    return FieldGrid(total / norm, pitch, sigma0, wavelength, 0.0)


def gaussian_illumination(sigma: float, grid_like: FieldGrid) -> FieldGrid:
    """Fundamental-mode beam of width sigma sampled on an existing grid."""
    x, y = _grid_axes(grid_like.side, grid_like.pitch)
    f = hg_wavefunction(ModeIndex(0, 0), sigma, x, y).astype(complex)
    f = f / math.sqrt(float(np.sum(np.abs(f) ** 2)) * grid_like.pitch ** 2)
    return grid_like.with_samples(f)


def rotate_field(field: FieldGrid, angle: float) -> FieldGrid:
    """Rotate the field about the beam axis by bilinear resampling.

    Active rotation: the returned samples are f(R_{-angle} r). Bilinear
    accuracy claims hold for |angle| < pi/4; angles up to pi/2 are accepted
    because right angles map grid nodes onto grid nodes exactly. Samples
    pulled from outside the window are zero.
    """
    if abs(angle) > math.pi / 2.0 + 1e-12:
        raise ValueError("|angle| above pi/2 not supported by the resampler")
    x, y = _grid_axes(field.side, field.pitch)
    c, s = math.cos(angle), math.sin(angle)
    xs = c * x + s * y
    ys = -s * x + c * y
    # fractional source indices; col tracks x, row tracks y
    half = (field.side - 1) / 2.0
    fc = xs / field.pitch + half
    fr = ys / field.pitch + half
    c0 = np.floor(fc).astype(int)
    r0 = np.floor(fr).astype(int)
    tc = fc - c0
    tr = fr - r0

    def gather(rr, cc):
        inside = (rr >= 0) & (rr < field.side) & (cc >= 0) & (cc < field.side)
        out = np.zeros(rr.shape, dtype=complex)
        out[inside] = field.samples[rr[inside], cc[inside]]
        return out

    rotated = ((1 - tr) * (1 - tc) * gather(r0, c0)
               + (1 - tr) * tc * gather(r0, c0 + 1)
               + tr * (1 - tc) * gather(r0 + 1, c0)
               + tr * tc * gather(r0 + 1, c0 + 1))
    return field.with_samples(rotated)


def overlap(a: FieldGrid, b: FieldGrid) -> complex:
    """Discrete inner product <a|b> = pitch^2 sum conj(a) b."""
    if a.side != b.side or not math.isclose(a.pitch, b.pitch, rel_tol=1e-12):
        raise GridMismatchError("fields sampled on different grids")
    if not math.isclose(a.z, b.z, abs_tol=1e-12):
        raise GridMismatchError("fields sampled at different planes")
    return complex(np.vdot(a.samples, b.samples) * a.pitch ** 2)


def mode_purity(field: FieldGrid, idx: ModeIndex) -> float:
    """|overlap|^2 against the ideal grid mode with matching geometry."""
    ideal = synthesize_hg_field(
        idx, field.sigma0, field.side,
        0.5 * field.side * field.pitch / field.sigma0, field.wavelength)
    return abs(overlap(ideal, field)) ** 2


def j1_inverse(target: float) -> float:
    """Depth f with J1(f) = target on the rising branch [0, J1_PEAK_X].

    Bisection to 1e-10; targets outside [0, J1_PEAK] are unreachable.
    """
    if not (0.0 <= target <= J1_PEAK):
        raise UnreachableAmplitudeError(
            f"amplitude {target} outside encodable range [0, {J1_PEAK:.6f}]")
    return float(_j1_inverse_array(np.array([target]))[0])


def _j1_inverse_array(targets: np.ndarray) -> np.ndarray:
    lo = np.zeros_like(targets)
    hi = np.full_like(targets, J1_PEAK_X)
    for _ in range(48):  # 1.85 / 2^48 ~ 7e-15, well under the 1e-10 contract
        mid = 0.5 * (lo + hi)
        below = _bessel_j1(mid) < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PhaseMap:
    """Phase hologram in radians plus its carrier grating period (pixels)."""

    values: np.ndarray
    grating_period: float
    clipped_fraction: float = 0.0

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("phase map must be square")
        if np.max(np.abs(arr)) > math.pi + 1e-9:
            raise ValueError("phase values must lie in [-pi, pi]")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def side(self) -> int:
        return self.values.shape[0]


def hologram_phase(target: FieldGrid, incident: FieldGrid,
                   grating_period: float | None,
                   amplitude_scale: float | None = None) -> PhaseMap:
    """Phase-only encoding H = f(A_rel) sin(phi_out - phi_in + phi_grating).

    The relative amplitude A_rel = |target| / |incident| is scaled so its
    maximum reaches the peak of J1 (full modulation depth) unless an explicit
    amplitude_scale is given; values that would exceed the invertible branch
    are clipped and reported via clipped_fraction. grating_period is in
    pixels along x; None encodes without a carrier.
    """
    if target.side != incident.side or not math.isclose(
            target.pitch, incident.pitch, rel_tol=1e-12):
        raise GridMismatchError("target and incident grids differ")
    a_in = np.abs(incident.samples)
    a_out = np.abs(target.samples)
    floor = 1e-8 * float(a_in.max())
    valid = a_in > floor
    if np.any(a_out[~valid] > 1e-6 * float(a_out.max())):
        raise UnreachableAmplitudeError(
            "target has weight where the illumination is empty")
    rel = np.zeros_like(a_out)
    rel[valid] = a_out[valid] / a_in[valid]
    peak = float(rel.max())
    if peak == 0.0:
        depth_target = rel
        clipped = 0.0
    else:
        scale = J1_PEAK / peak if amplitude_scale is None else amplitude_scale
        scaled = rel * scale
        clipped = float(np.mean(scaled > J1_PEAK * (1 + 1e-12)))
        depth_target = np.minimum(scaled, J1_PEAK)
    depth = _j1_inverse_array(depth_target)
    cols = np.arange(target.side, dtype=float)
    if grating_period is None:
        grating = np.zeros(target.side)
        period = 0.0
    else:
        if grating_period <= 0:
            raise ValueError("grating period must be positive")
        grating = 2.0 * math.pi * cols / grating_period
        period = float(grating_period)
    phi = np.angle(target.samples) - np.angle(incident.samples) + grating[None, :]
    return PhaseMap(depth * np.sin(phi), period, clipped)


def modulate(incident: FieldGrid, phase: PhaseMap) -> FieldGrid:
    """Field right after the phase mask: incident * exp(i H)."""
    if phase.side != incident.side:
        raise GridMismatchError("phase map and field sides differ")
    return incident.with_samples(incident.samples * np.exp(1j * phase.values))


def first_order_extract(modulated: FieldGrid, grating_period: float) -> FieldGrid:
    """Isolate the +1 diffraction order (simulated far-field pinhole).

    Fourier transform, keep a square window of half-width equal to half the
    carrier frequency around the carrier, inverse transform, remove the
    carrier by a conjugate-grating multiply, and renormalize to unit power.
    Renormalization is skipped when the windowed power is numerically empty
    (below 1e-9) so that a blank mask legitimately yields a dark output.
    """
    side = modulated.side
    if grating_period < 4.0:
        raise SeparationError(
            f"grating period {grating_period} px below the 4 px resolution bound")
    if grating_period > side / 2.0:
        raise SeparationError(
            f"grating period {grating_period} px puts the carrier inside the "
            "zeroth-order window")
    carrier = 1.0 / grating_period  # cycles per pixel along x
    fx = np.fft.fftfreq(side)
    mask = ((np.abs(fx[None, :] - carrier) <= carrier / 2.0)
            & (np.abs(fx[:, None]) <= carrier / 2.0))
    spectrum = np.fft.fft2(modulated.samples)
    windowed = np.fft.ifft2(spectrum * mask)
    cols = np.arange(side, dtype=float)
    baseband = windowed * np.exp(-2j * math.pi * cols[None, :] / grating_period)
    out = modulated.with_samples(baseband)
    if out.power >= _RENORM_FLOOR:
        out = out.with_samples(baseband / math.sqrt(out.power))
    return out


def _atomic_write_bytes(path, payload: bytes):
    directory = os.path.dirname(os.fspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


_FGRD_HEADER = struct.Struct("<4sII4d")
_PMAP_HEADER = struct.Struct("<4sIId")


def write_field_binary(path, field: FieldGrid):
    """Serialize a FieldGrid in the documented FGRD layout (atomic write)."""
    header = _FGRD_HEADER.pack(b"FGRD", 1, field.side, field.pitch,
                               field.sigma0, field.wavelength, field.z)
    data = np.ascontiguousarray(field.samples, dtype="<c16").tobytes()
    _atomic_write_bytes(path, header + data)


def read_field_binary(path) -> FieldGrid:
    with open(path, "rb") as handle:
        raw = handle.read()
    if len(raw) < _FGRD_HEADER.size:
        raise ValueError("not a version-1 field binary")
    magic, version, side, pitch, sigma0, wavelength, z = _FGRD_HEADER.unpack_from(raw)
    if magic != b"FGRD" or version != 1:
        raise ValueError("not a version-1 field binary")
    samples = np.frombuffer(raw, dtype="<c16", offset=_FGRD_HEADER.size)
    return FieldGrid(samples.reshape(side, side).astype(complex),
                     pitch, sigma0, wavelength, z)


def write_phase_binary(path, phase: PhaseMap):
    header = _PMAP_HEADER.pack(b"PMAP", 1, phase.side, phase.grating_period)
    data = np.ascontiguousarray(phase.values, dtype="<f8").tobytes()
    _atomic_write_bytes(path, header + data)


def read_phase_binary(path) -> PhaseMap:
    with open(path, "rb") as handle:
        raw = handle.read()
    if len(raw) < _PMAP_HEADER.size:
        raise ValueError("not a version-1 phase binary")
    magic, version, side, period = _PMAP_HEADER.unpack_from(raw)
    if magic != b"PMAP" or version != 1:
        raise ValueError("not a version-1 phase binary")
    values = np.frombuffer(raw, dtype="<f8", offset=_PMAP_HEADER.size)
    return PhaseMap(values.reshape(side, side).copy(), period)


def write_phase_pgm(path, phase: PhaseMap):
    """Dump the phase map as an 8-bit binary PGM, [-pi, pi] -> [0, 255]."""
    levels = np.clip(np.round((phase.values + math.pi) / (2 * math.pi) * 255.0),
                     0, 255).astype(np.uint8)
    header = f"P5\n{phase.side} {phase.side}\n255\n".encode("ascii")
    _atomic_write_bytes(path, header + levels.tobytes())
