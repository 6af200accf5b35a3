"""Restarted tensor Lanczos bidiagonalization under the t-product."""

from ._tlbr import (
    DimMismatch,
    Error,
    IndexOutOfRange,
    InvalidArgument,
    IoError,
    UnsupportedFormat,
    compress,
    load_image,
    read_t3b,
    save_image,
    t_svd,
    tlbr_svd,
    tprod,
    ttranspose,
    write_t3b,
)

__version__ = "0.1.0"
