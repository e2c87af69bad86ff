"""Dataset containers on disk.

matrix-csv
    First line ``d,n``; then ``d`` lines of ``n`` comma-separated values, one
    sample per column. Values are written with ``repr`` so a save/load round
    trip is exact. Values are loaded as-is (no rescaling).
pgm
    Binary grayscale image (``P5`` magic, width, height, maxval, raw bytes).
    One image is one sample; intensities are divided by maxval.
pgm-dir
    A directory of ``*.pgm`` files of equal size, taken in sorted name order.
"""

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FORMATS = ("matrix-csv", "pgm", "pgm-dir")


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    x: np.ndarray  # d x n, samples as columns
    image_shape: tuple = None  # (height, width) when samples are images
    name: str = "dataset"

    @property
    def images(self):
        if self.image_shape is None:
            raise DatasetError(f"{self.name}: no image shape known for a {self.x.shape[0]}-dim dataset")
        return images_from_matrix(self.x, self.image_shape)


def images_from_matrix(x, shape):
    h, w = shape
    if h * w != x.shape[0]:
        raise DatasetError(f"image shape {h}x{w} does not match dimension {x.shape[0]}")
    return np.ascontiguousarray(x.T).reshape(x.shape[1], h, w)


def matrix_from_images(images):
    images = np.asarray(images, dtype=float)
    return images.reshape(images.shape[0], -1).T.copy()


def guess_format(path):
    path = Path(path)
    if path.is_dir():
        return "pgm-dir"
    if path.suffix.lower() == ".pgm":
        return "pgm"
    return "matrix-csv"


def load_dataset(path, format=None):
    """Load a dataset; see the module docstring for the formats."""
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"{path}: no such file or directory")
    format = format or guess_format(path)
    if format == "matrix-csv":
        return Dataset(x=read_matrix_csv(path), name=path.stem)
    if format == "pgm":
        image = read_pgm(path)
        return Dataset(x=image.reshape(-1, 1), image_shape=image.shape, name=path.stem)
    if format == "pgm-dir":
        files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".pgm")
        if not files:
            raise DatasetError(f"{path}: no samples (no .pgm files)")
        images = [read_pgm(files[0])]
        for f in files[1:]:
            image = read_pgm(f)
            if image.shape != images[0].shape:
                raise DatasetError(
                    f"{f}: image is {image.shape[0]}x{image.shape[1]}, "
                    f"expected {images[0].shape[0]}x{images[0].shape[1]} like {files[0].name}"
                )
            images.append(image)
        return Dataset(x=matrix_from_images(np.stack(images)), image_shape=images[0].shape,
                       name=path.name)
    raise DatasetError(f"unknown format {format!r}; expected one of {FORMATS}")


def read_matrix_csv(path):
    path = Path(path)
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise DatasetError(f"{path}: no samples")
    try:
        d, n = (int(v) for v in lines[0].split(","))
    except ValueError:
        raise DatasetError(f"{path}:1: malformed header {lines[0]!r}; expected 'd,n'") from None
    if d < 1 or n < 1:
        raise DatasetError(f"{path}: no samples (header declares {d}x{n})")
    if len(lines) - 1 != d:
        raise DatasetError(f"{path}: header declares {d} rows, found {len(lines) - 1}")
    x = np.empty((d, n))
    for r, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != n:
            raise DatasetError(f"{path}:{r + 2}: expected {n} values, found {len(cells)}")
        for c, cell in enumerate(cells):
            try:
                x[r, c] = float(cell)
            except ValueError:
                raise DatasetError(f"{path}:{r + 2}: non-numeric value {cell.strip()!r} in column {c + 1}") from None
    if not np.all(np.isfinite(x)):
        raise DatasetError(f"{path}: non-finite values")
    return x


def write_matrix_csv(x, path):
    x = np.asarray(x, dtype=float)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"{x.shape[0]},{x.shape[1]}\n")
        for row in x:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def _pgm_tokens(data, path, count):
    # whitespace-separated header tokens, '#' comments allowed
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DatasetError(f"{path}: truncated header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def read_pgm(path):
    path = Path(path)
    data = path.read_bytes()
    if not data:
        raise DatasetError(f"{path}: no samples (empty file)")
    if data[:2] != b"P5":
        raise DatasetError(f"{path}: bad magic {data[:2]!r}; expected b'P5'")
    tokens, offset = _pgm_tokens(data, path, 4)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DatasetError(f"{path}: malformed header") from None
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise DatasetError(f"{path}: invalid header values {width}x{height} maxval {maxval}")
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    expected = width * height * np.dtype(dtype).itemsize
    raw = data[offset:offset + expected]
    if len(raw) != expected:
        raise DatasetError(f"{path}: expected {expected} pixel bytes, found {len(raw)}")
    pixels = np.frombuffer(raw, dtype=dtype).reshape(height, width)
    return np.minimum(pixels.astype(float) / maxval, 1.0)


def write_pgm(image, path, maxval=255):
    image = np.clip(np.asarray(image, dtype=float), 0.0, 1.0)
    height, width = image.shape
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    pixels = np.rint(image * maxval).astype(dtype)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        fh.write(pixels.tobytes())


def save_dataset(dataset, path, format=None):
    """Write ``dataset`` as matrix-csv, or as a directory of PGMs."""
    format = format or ("pgm-dir" if dataset.image_shape is not None and not str(path).endswith(".csv")
                        else "matrix-csv")
    if format == "matrix-csv":
        write_matrix_csv(dataset.x, path)
    elif format == "pgm-dir":
        os.makedirs(path, exist_ok=True)
        images = dataset.images
        width = len(str(len(images) - 1))
        for i, image in enumerate(images):
            write_pgm(image, Path(path) / f"{i:0{width}d}.pgm")
    else:
        raise DatasetError(f"cannot save as {format!r}")
