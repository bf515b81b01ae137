"""Model-space/display-space conversion and binary PPM (P6) files.

Model space is [-1, 1] per channel; the display mapping is
v -> round(255 * (v + 1) / 2) clamped to 0..255, applied only at export.
"""

import numpy as np

from .errors import ContractViolation


def to_display(img: np.ndarray) -> np.ndarray:
    """Quantize a (3, H, W) model-space image to 8-bit display values."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[0] != 3:
        raise ContractViolation(f"expected a (3, H, W) image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ContractViolation("image contains non-finite values")
    scaled = np.rint(255.0 * (img + 1.0) / 2.0)
    return np.clip(scaled, 0, 255).astype(np.uint8)


def from_display(display: np.ndarray) -> np.ndarray:
    """Map 8-bit display values back to model space."""
    display = np.asarray(display)
    return display.astype(np.float64) / 255.0 * 2.0 - 1.0


def ppm_bytes(img: np.ndarray) -> bytes:
    """Serialized binary PPM: 'P6\\n<W> <H>\\n255\\n' + row-major RGB triples."""
    display = to_display(img)
    _, height, width = display.shape
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + display.transpose(1, 2, 0).tobytes()


def write_ppm(img: np.ndarray, path) -> None:
    with open(path, "wb") as fh:
        fh.write(ppm_bytes(img))


def _read_token(fh) -> bytes:
    """Next whitespace-delimited header token, skipping '#' comments."""
    token = b""
    while True:
        ch = fh.read(1)
        if ch == b"":
            raise ContractViolation("truncated PPM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = fh.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def read_ppm(path) -> np.ndarray:
    """Parse a binary PPM into 8-bit display values of shape (3, H, W)."""
    with open(path, "rb") as fh:
        if _read_token(fh) != b"P6":
            raise ContractViolation(f"{path}: not a binary PPM (P6) file")
        width = int(_read_token(fh))
        height = int(_read_token(fh))
        maxval = int(_read_token(fh))
        if maxval != 255:
            raise ContractViolation(f"{path}: unsupported max value {maxval}")
        data = fh.read(width * height * 3)
        if len(data) != width * height * 3:
            raise ContractViolation(f"{path}: truncated pixel data")
    pixels = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
    return pixels.transpose(2, 0, 1)
