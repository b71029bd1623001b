"""Learned joint and separate source-channel coding over differentiable channels.

Thin Python face over the native core: closed-form channel quantities, the
synthetic sources, the sample discrepancy statistic, and the command line
entry point.
"""

try:
    from ._core import (
        binary_snr,
        gaussian_capacity,
        gaussian_transmit,
        generate_synthetic,
        mmd,
        run_cli,
        standard_normal,
    )
except ImportError:  # build tree: the extension sits next to this package on sys.path
    from _core import (
        binary_snr,
        gaussian_capacity,
        gaussian_transmit,
        generate_synthetic,
        mmd,
        run_cli,
        standard_normal,
    )

__all__ = [
    "binary_snr",
    "gaussian_capacity",
    "gaussian_transmit",
    "generate_synthetic",
    "mmd",
    "run_cli",
    "standard_normal",
]
