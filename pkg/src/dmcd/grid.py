"""Periodic lattice conventions and Fourier primitives.

Images live on a d1 x d2 lattice with periodic (circular) boundary handling
everywhere.  Index 0 is the origin in both axes; axis 0 indexes rows and
pairs with the angular frequency omega1, axis 1 indexes columns and pairs
with omega2.  The forward transform is the plain unnormalized DFT and the
inverse carries the 1/(d1*d2) factor, so the DC coefficient of a kernel that
sums to one equals one exactly.

All inverse transforms return the real part.  A large imaginary residue
means the caller fed a spectrum that is not conjugate-symmetric; it is
reported through the module logger rather than raised, since small residues
are expected from round-off.
"""

from __future__ import annotations

import logging

import numpy as np

__all__ = [
    "dft2",
    "idft2",
    "circular_convolve",
    "time_reverse",
    "angular_frequencies",
]

logger = logging.getLogger(__name__)

# Relative imaginary residue above which idft2 reports a warning.
IMAG_RESIDUE_THRESHOLD = 1e-8


def _require_2d(f: np.ndarray, name: str) -> np.ndarray:
    arr = np.asarray(f)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {arr.shape}")
    return arr


def dft2(f: np.ndarray) -> np.ndarray:
    """Unnormalized 2-d DFT of a real image.

    Parameters
    ----------
    f : ndarray, shape (d1, d2)
        Real image on the periodic lattice.

    Returns
    -------
    ndarray of complex128, shape (d1, d2)
        Spectrum with the DC coefficient at index (0, 0).

    Raises
    ------
    ValueError
        If ``f`` is not 2-d or contains non-finite values.
    """
    arr = _require_2d(f, "f")
    if not np.all(np.isfinite(arr)):
        raise ValueError("dft2 input contains non-finite values")
    return np.fft.fft2(arr)


def idft2(F: np.ndarray) -> np.ndarray:
    """Inverse 2-d DFT, normalized by 1/(d1*d2), real part only.

    Parameters
    ----------
    F : ndarray, shape (d1, d2)
        Spectrum.

    Returns
    -------
    ndarray of float64, shape (d1, d2)
        Real part of the inverse transform.  If the imaginary residue
        exceeds ``IMAG_RESIDUE_THRESHOLD`` relative to the real energy it
        is logged as a warning.
    """
    arr = _require_2d(F, "F")
    out = np.fft.ifft2(arr)
    real = out.real
    imag_norm = float(np.linalg.norm(out.imag))
    scale = max(float(np.linalg.norm(real)), 1.0)
    if imag_norm / scale > IMAG_RESIDUE_THRESHOLD:
        logger.warning(
            "idft2 dropped imaginary residue %.3e (relative to %.3e)",
            imag_norm,
            scale,
        )
    return np.ascontiguousarray(real)


def circular_convolve(f: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Circular convolution of two images on the same lattice.

    Computed spectrally: the result equals ``idft2(dft2(f) * dft2(d))`` up
    to round-off, which is the defining identity on the periodic lattice.

    Parameters
    ----------
    f, d : ndarray, shape (d1, d2)
        Real images; shapes must match.

    Returns
    -------
    ndarray of float64, shape (d1, d2)
    """
    a = _require_2d(f, "f")
    b = _require_2d(d, "d")
    if a.shape != b.shape:
        raise ValueError(f"lattice mismatch: {a.shape} vs {b.shape}")
    return idft2(dft2(a) * dft2(b))


def time_reverse(f: np.ndarray) -> np.ndarray:
    """Reverse an image through the origin: out[k] = f[-k mod (d1, d2)].

    The origin stays fixed; every other site swaps with its mirror.  For an
    even-symmetric kernel this is the identity, and in general it realizes
    the adjoint of convolution: <h (*) f, g> = <f, time_reverse(h) (*) g>.

    Parameters
    ----------
    f : ndarray, shape (d1, d2)

    Returns
    -------
    ndarray, shape (d1, d2)
    """
    arr = _require_2d(f, "f")
    return np.roll(arr[::-1, ::-1], shift=(1, 1), axis=(0, 1))


def angular_frequencies(shape: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Angular frequency grids for a lattice, wrapped to [-pi, pi).

    Parameters
    ----------
    shape : (d1, d2)
        Lattice dimensions.

    Returns
    -------
    (omega1, omega2) : pair of ndarray
        ``omega1`` has shape (d1, 1) and ``omega2`` shape (1, d2), laid out
        in native DFT order (DC first) so spectra built from them align with
        ``dft2`` output.  They broadcast against each other to (d1, d2).
    """
    d1, d2 = int(shape[0]), int(shape[1])
    if d1 < 1 or d2 < 1:
        raise ValueError(f"invalid lattice shape {shape}")
    w1 = 2.0 * np.pi * np.fft.fftfreq(d1)
    w2 = 2.0 * np.pi * np.fft.fftfreq(d2)
    return w1[:, None], w2[None, :]
