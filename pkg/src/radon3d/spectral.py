"""Spectral primitives shared by the pseudo-polar and Radon transforms.

Everything here works on centred index ranges: a signal of length ``n``
occupies indices ``-n//2 .. n - n//2 - 1`` and a centred DFT of odd length
``m`` returns frequencies ``-(m-1)/2 .. (m-1)/2``.  The forward transform
uses ``exp(-2*pi*i*...)``.
"""

import numpy as np
import scipy.fft as sfft

__all__ = [
    "dirichlet_kernel",
    "frft",
    "pad_zero",
    "pad_centered",
    "crop_centered",
    "cfft",
    "icfft",
    "cfftn",
    "icfftn",
]


def dirichlet_kernel(p, m):
    """Periodic sinc ``sin(pi p) / (m sin(pi p / m))``.

    Trigonometric interpolation weight for a band-limited signal of ``m``
    samples.  At multiples of ``m`` the removable singularity is replaced
    by its limit, which is 1 for odd ``m``.

    Parameters
    ----------
    p : float or ndarray
        Offset in sample units.
    m : int
        Kernel length.

    Returns
    -------
    float or ndarray
    """
    m = int(m)
    if m < 1:
        raise ValueError("kernel length must be >= 1")
    p = np.asarray(p, dtype=float)
    num = np.sin(np.pi * p)
    den = m * np.sin(np.pi * p / m)
    # Nearest multiple of m; inside a small band around it use the limit.
    r = np.rint(p / m)
    near = np.abs(p - r * m) < 1e-9
    limit = np.cos(np.pi * p) / np.cos(np.pi * p / m)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(near, limit, num / np.where(near, 1.0, den))
    if out.ndim == 0:
        return float(out)
    return out


def _chirp(alpha, j, m):
    return np.exp(-1j * np.pi * alpha * (np.asarray(j, dtype=float) ** 2) / m)


def frft(x, alpha, m, *, n_out=None, in_start=0, out_start=0, axis=-1):
    """Fractional Fourier transform evaluated exactly by Bluestein's chirp-z.

    Computes::

        y[k] = sum_u x[u] * exp(-2j*pi*alpha*k*u/m)

    for ``u = in_start .. in_start + N - 1`` and
    ``k = out_start .. out_start + n_out - 1`` along ``axis``.  With the
    default arguments the index ranges start at zero and the output has the
    same length as the input, so ``alpha=1, m=N`` reduces to the ordinary
    DFT.

    ``alpha`` may be an array broadcasting against the remaining axes of
    ``x`` (after ``axis`` has been moved last), which lets every row of a
    batch use its own factor.

    Parameters
    ----------
    x : array_like
        Input samples.
    alpha : float or ndarray
        Frequency scaling factor.
    m : int
        Normalising length in the exponent.
    n_out : int, optional
        Number of output samples; defaults to the input length.
    in_start, out_start : int
        First input / output index.
    axis : int
        Axis along which to transform.

    Returns
    -------
    ndarray of complex128
    """
    x = np.asarray(x)
    if x.size == 0 or x.shape[axis] == 0:
        raise ValueError("frft of an empty signal")
    x = np.moveaxis(x.astype(np.complex128, copy=False), axis, -1)
    n_in = x.shape[-1]
    n_out = n_in if n_out is None else int(n_out)
    alpha = np.asarray(alpha, dtype=float)[..., None]

    a = np.arange(n_in)
    b = np.arange(n_out)
    # Offsets split the bilinear exponent (k0+b)(u0+a) into separable phases.
    pre = np.exp(-2j * np.pi * alpha * out_start * a / m)
    post = np.exp(-2j * np.pi * alpha * (in_start * b + in_start * out_start) / m)

    # Bluestein: a*b = (a^2 + b^2 - (b-a)^2) / 2.
    L = 1 << int(np.ceil(np.log2(n_in + n_out - 1)))
    xa = x * pre * _chirp(alpha, a, m)
    j = np.arange(L)
    j = np.where(j < n_out, j, j - L)  # lags -(n_in-1) .. n_out-1 wrapped
    kernel = np.conj(_chirp(alpha, j, m))
    kernel = np.where((j > -n_in) & (j < n_out), kernel, 0.0)
    conv = sfft.ifft(
        sfft.fft(xa, n=L, axis=-1) * sfft.fft(kernel, axis=-1), axis=-1
    )[..., :n_out]
    y = conv * _chirp(alpha, b, m) * post
    return np.moveaxis(y, -1, axis)


def pad_zero(x, axis, amount):
    """Zero-pad ``x`` along ``axis``.

    ``amount`` is either a single count applied to both ends or a
    ``(before, after)`` pair.
    """
    x = np.asarray(x)
    if np.isscalar(amount) or np.ndim(amount) == 0:
        before = after = int(amount)
    else:
        before, after = (int(v) for v in amount)
    if before < 0 or after < 0:
        raise ValueError("padding must be non-negative")
    widths = [(0, 0)] * x.ndim
    widths[axis] = (before, after)
    return np.pad(x, widths)


def _centered_pad_widths(n, m):
    before = m // 2 - n // 2
    return before, m - n - before


def pad_centered(x, m, axis=-1):
    """Pad to length ``m`` so that centred index 0 stays at centred index 0.

    A length-8 signal (indices -4..3) padded to 17 gets 4 zeros before
    and 5 after, which places it on indices -8..8.
    """
    n = np.shape(x)[axis]
    if m < n:
        raise ValueError("target length shorter than signal")
    return pad_zero(x, axis, _centered_pad_widths(n, m))


def crop_centered(x, n, axis=-1):
    """Inverse of :func:`pad_centered`."""
    m = np.shape(x)[axis]
    before, _ = _centered_pad_widths(n, m)
    return np.take(x, np.arange(before, before + n), axis=axis)


def cfft(x, axis=-1):
    """Centred 1D DFT along ``axis``."""
    x = sfft.ifftshift(x, axes=axis)
    return sfft.fftshift(sfft.fft(x, axis=axis), axes=axis)


def icfft(x, axis=-1):
    """Centred 1D inverse DFT along ``axis`` (includes the 1/m factor)."""
    x = sfft.ifftshift(x, axes=axis)
    return sfft.fftshift(sfft.ifft(x, axis=axis), axes=axis)


def cfftn(x, axes=None):
    """Centred n-dimensional DFT."""
    x = sfft.ifftshift(x, axes=axes)
    return sfft.fftshift(sfft.fftn(x, axes=axes), axes=axes)


def icfftn(x, axes=None):
    """Centred n-dimensional inverse DFT."""
    x = sfft.ifftshift(x, axes=axes)
    return sfft.fftshift(sfft.ifftn(x, axes=axes), axes=axes)
