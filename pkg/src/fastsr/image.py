"""Image value type and file IO.

Supported files: binary PGM (P5, 8 or 16 bit), PNG (grayscale read/write,
RGB read for luminance extraction) and a raw little-endian float64 format
(``.fsr``) for lossless intermediates.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Image",
    "ImageFormatError",
    "load_image",
    "write_image",
    "load_rgb",
    "write_rgb",
    "extract_luminance",
    "combine_luminance",
]

FSR_MAGIC = b"FSR1"
_FSR_HEADER = struct.Struct("<4sIII")

# BT.601 full-range luma/chroma rows
_YCC = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)


class ImageFormatError(ValueError):
    """Unsupported or corrupt image file."""


@dataclass(frozen=True)
class Image:
    """Immutable real 2-D raster.

    ``pixels`` is stored as a read-only float64 array of shape
    ``(height, width)``; row-major flattening gives the lexicographic
    vector used by all operators.
    """

    pixels: np.ndarray
    value_scale: float = 1.0

    def __post_init__(self):
        arr = np.array(self.pixels, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be a non-empty 2-D array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image samples must be finite")
        if not self.value_scale > 0:
            raise ValueError("value_scale must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)
        object.__setattr__(self, "value_scale", float(self.value_scale))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape

    @property
    def data(self) -> np.ndarray:
        """Row-major sample vector of length ``height * width``."""
        return self.pixels.reshape(-1)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.pixels
        return self.pixels.astype(dtype)

    def with_pixels(self, pixels) -> "Image":
        return Image(pixels, self.value_scale)

    def __eq__(self, other):
        if not isinstance(other, Image):
            return NotImplemented
        return self.value_scale == other.value_scale and np.array_equal(self.pixels, other.pixels)

    __hash__ = None


# -- PGM ---------------------------------------------------------------------


def _pgm_tokens(buf: bytes, count: int):
    """Read ``count`` whitespace separated header tokens, skipping comments."""
    tokens = []
    pos = 2
    n = len(buf)
    while len(tokens) < count:
        while pos < n and buf[pos : pos + 1].isspace():
            pos += 1
        if pos < n and buf[pos : pos + 1] == b"#":
            while pos < n and buf[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not buf[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ImageFormatError("truncated PGM header")
        tokens.append(buf[start:pos])
    # exactly one whitespace byte separates header from raster
    return tokens, pos + 1


def _read_pgm(buf: bytes):
    if buf[:2] != b"P5":
        raise ImageFormatError("only binary PGM (P5) is supported")
    try:
        tokens, offset = _pgm_tokens(buf, 3)
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise ImageFormatError(f"corrupt PGM header: {exc}") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ImageFormatError("corrupt PGM header")
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    expected = width * height * dtype.itemsize
    raster = buf[offset : offset + expected]
    if len(raster) != expected:
        raise ImageFormatError("PGM raster is truncated")
    arr = np.frombuffer(raster, dtype=dtype).reshape(height, width)
    return arr.astype(np.float64), float(maxval)


def _write_pgm(path: Path, q: np.ndarray, maxval: int):
    h, w = q.shape
    dtype = ">u2" if maxval > 255 else "u1"
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    path.write_bytes(header + q.astype(dtype).tobytes())


# -- raw float64 ---------------------------------------------------------------


def _read_fsr(buf: bytes):
    if len(buf) < _FSR_HEADER.size:
        raise ImageFormatError("truncated FSR1 header")
    magic, m, n, reserved = _FSR_HEADER.unpack_from(buf)
    if magic != FSR_MAGIC:
        raise ImageFormatError("bad FSR1 magic")
    body = buf[_FSR_HEADER.size :]
    if m < 1 or n < 1 or len(body) != 8 * m * n:
        raise ImageFormatError("FSR1 payload size does not match header")
    arr = np.frombuffer(body, dtype="<f8").reshape(m, n).astype(np.float64)
    # reserved word carries an integral value scale; 0 means unspecified
    return arr, float(reserved) if reserved else 1.0


def _write_fsr(path: Path, img: Image):
    scale = img.value_scale
    reserved = int(scale) if scale.is_integer() and scale < 2**32 else 0
    header = _FSR_HEADER.pack(FSR_MAGIC, img.height, img.width, reserved)
    path.write_bytes(header + img.pixels.astype("<f8").tobytes())


# -- public API ----------------------------------------------------------------


def _png_array(path: Path):
    from PIL import Image as PILImage

    try:
        with PILImage.open(path) as im:
            im.load()
            mode = im.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                arr = np.asarray(im, dtype=np.float64)
                return arr, 65535.0
            if mode in ("L", "P", "1", "LA"):
                arr = np.asarray(im.convert("L"), dtype=np.float64)
                return arr, 255.0
            if mode in ("RGB", "RGBA"):
                return np.asarray(im.convert("RGB"), dtype=np.float64), 255.0
            raise ImageFormatError(f"unsupported PNG mode {mode!r}")
    except (OSError, SyntaxError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise ImageFormatError(f"cannot decode PNG {path}: {exc}") from None


def _read_any(path: Path):
    suffix = path.suffix.lower()
    if suffix == ".png":
        return _png_array(path)
    buf = path.read_bytes()
    if suffix == ".fsr" or buf[:4] == FSR_MAGIC:
        return _read_fsr(buf)
    if suffix == ".pgm" or buf[:2] == b"P5":
        return _read_pgm(buf)
    raise ImageFormatError(f"unsupported image format: {path}")


def load_image(path, value_scale: float | None = None) -> Image:
    """Read a grayscale image.

    Samples come back in the file's native scale (``maxval`` for PGM,
    255 or 65535 for PNG) unless ``value_scale`` is given, in which case
    they are linearly rescaled onto ``[0, value_scale]``.
    """
    path = Path(path)
    arr, native = _read_any(path)
    if arr.ndim != 2:
        raise ImageFormatError(f"{path} is not a grayscale image")
    if value_scale is not None and value_scale != native:
        arr = arr * (value_scale / native)
        native = value_scale
    return Image(arr, native)


def load_rgb(path) -> tuple[np.ndarray, float]:
    """Read a colour PNG as an ``(h, w, 3)`` float array and its value scale."""
    path = Path(path)
    arr, scale = _read_any(path)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ImageFormatError(f"{path} is not an RGB image")
    return arr, scale


def write_image(img: Image, path, bits: int = 8) -> None:
    """Write ``img`` to ``path``; the format follows the file suffix.

    Integer formats clip samples to ``[0, value_scale]`` and quantize to
    ``2**bits - 1`` levels. ``.fsr`` files are written losslessly.
    """
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".fsr":
        _write_fsr(path, img)
        return
    if bits not in (8, 16):
        raise ValueError("bits must be 8 or 16")
    maxval = 2**bits - 1
    clipped = np.clip(img.pixels, 0.0, img.value_scale)
    q = np.rint(clipped * (maxval / img.value_scale))
    if suffix == ".pgm":
        _write_pgm(path, q, maxval)
    elif suffix == ".png":
        from PIL import Image as PILImage

        if bits == 8:
            PILImage.fromarray(q.astype(np.uint8), mode="L").save(path)
        else:
            PILImage.fromarray(q.astype(np.uint16)).save(path)
    else:
        raise ImageFormatError(f"unsupported output format: {path}")


def write_rgb(rgb, path, value_scale: float = 255.0) -> None:
    """Write an ``(h, w, 3)`` raster as an 8-bit RGB PNG (clipped, rounded)."""
    from PIL import Image as PILImage

    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) raster")
    if Path(path).suffix.lower() != ".png":
        raise ImageFormatError("colour output must be PNG")
    q = np.rint(np.clip(arr, 0.0, value_scale) * (255.0 / value_scale)).astype(np.uint8)
    PILImage.fromarray(q, mode="RGB").save(path)


def extract_luminance(rgb, value_scale: float = 255.0):
    """Split an RGB raster into luminance and chroma.

    Parameters
    ----------
    rgb : array_like or sequence of three 2-D arrays
        Either an ``(h, w, 3)`` array or three equal-sized channels.

    Returns
    -------
    (Image, (ndarray, ndarray))
        Luminance image and the untouched ``(Cb, Cr)`` planes, offset by
        ``value_scale / 2`` as in full-range BT.601.
    """
    if isinstance(rgb, (list, tuple)):
        if len(rgb) != 3:
            raise ValueError("expected three channels")
        chans = [np.asarray(c, dtype=np.float64) for c in rgb]
        if not (chans[0].shape == chans[1].shape == chans[2].shape):
            raise ValueError("channel sizes differ")
        stack = np.stack(chans, axis=-1)
    else:
        stack = np.asarray(rgb, dtype=np.float64)
        if stack.ndim != 3 or stack.shape[2] != 3:
            raise ValueError("expected an (h, w, 3) raster")
    ycc = stack @ _YCC.T
    offset = value_scale / 2.0
    return Image(ycc[..., 0], value_scale), (ycc[..., 1] + offset, ycc[..., 2] + offset)


def combine_luminance(y, cb, cr, value_scale: float = 255.0) -> np.ndarray:
    """Inverse of :func:`extract_luminance`; returns an ``(h, w, 3)`` array."""
    offset = value_scale / 2.0
    ycc = np.stack([np.asarray(y, dtype=np.float64), cb - offset, cr - offset], axis=-1)
    return ycc @ np.linalg.inv(_YCC).T
