"""Precoding schemes and effective transmit bases.

The effective basis O is the product of a centered DFT modulation matrix and
a precoder S: plain OFDM keeps the M centermost subcarriers, DFT precoding
(SC-FDMA style) spreads M time shifts across those subcarriers, and DPSS
precoding uses the W -> 0.5- prolate sequences directly as basis columns.

Storage row i of a basis corresponds to time sample i - (N - 1)/2; only the
closed-form phase conventions depend on this labeling, correlations and
channel application do not.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dpss import DpssSet, dpss_limit_half
from .errors import ParameterError

__all__ = [
    "PrecodingScheme",
    "PrefixKind",
    "WaveformBasis",
    "PrefixedBasis",
    "retained_frequencies",
    "build_basis",
    "default_basis",
    "with_prefix",
    "edge_truncation_order",
]


class PrecodingScheme(str, Enum):
    """Precoder choice: plain OFDM, DFT spreading (SC-FDMA), or DPSS."""

    OFDM = "ofdm"
    DFT = "dft"
    DPSS = "dpss"


class PrefixKind(str, Enum):
    ZERO = "zero"
    CYCLIC = "cyclic"


@dataclass(frozen=True)
class WaveformBasis:
    """Effective transmit basis with orthonormal columns.

    ``o_matrix`` is N x M complex; ``eta`` is the utilization M / N.
    """

    n_len: int
    m_active: int
    scheme: PrecodingScheme
    o_matrix: np.ndarray
    eta: float

    def __post_init__(self):
        self.o_matrix.flags.writeable = False


@dataclass(frozen=True)
class PrefixedBasis:
    """Transmit/receive basis pair extended by a guard prefix of g rows.

    ``o_t`` prepends either zeros or the last g rows of O (cyclic);
    ``o_r`` always prepends zeros - the receiver ignores prefix samples.
    """

    base: WaveformBasis
    prefix_len: int
    prefix_kind: PrefixKind
    o_t: np.ndarray
    o_r: np.ndarray

    def __post_init__(self):
        self.o_t.flags.writeable = False
        self.o_r.flags.writeable = False

    @property
    def block_len(self) -> int:
        return self.base.n_len + self.prefix_len


def time_grid(n_len: int) -> np.ndarray:
    """Centered sample labels for storage rows 0..N-1: i - (N-1)/2."""
    return np.arange(n_len) - (n_len - 1) / 2.0


def retained_frequencies(n_len: int, m_active: int) -> np.ndarray:
    """Centered subcarrier indices kept when N - M edge components are nulled.

    The grid is j - (N-1)/2 for all N, so even N uses the symmetric
    half-integer offsets +-1/2, +-3/2, ...; this keeps the band symmetric
    and avoids placing a carrier exactly on the +-N/2 band-limit edge,
    where the fractional-delay kernel is discontinuous.  The lower edge
    loses floor((N - M)/2) subcarriers and the upper edge the remainder, so
    an odd deficit drops one extra component from the top.
    """
    if m_active > n_len:
        raise ParameterError(f"m_active={m_active} exceeds n_len={n_len}")
    d_low = (n_len - m_active) // 2
    return np.arange(d_low, d_low + m_active) - (n_len - 1) / 2.0


def _centered_dft_columns(n_len: int, freqs: np.ndarray) -> np.ndarray:
    n = time_grid(n_len)
    return np.exp(2j * np.pi * np.outer(n, freqs) / n_len) / np.sqrt(n_len)


def build_basis(
    scheme: PrecodingScheme,
    n_len: int,
    m_active: int,
    dpss_source: DpssSet | None = None,
) -> WaveformBasis:
    """Construct the effective basis O for a scheme at utilization M / N.

    OFDM keeps the M centermost subcarriers of the centered DFT; DFT
    precoding produces M Dirichlet pulses at centered time shifts; DPSS uses
    the first M columns of ``dpss_source`` (required, length N).  Columns are
    renormalized to unit norm to pin orthonormality numerically.
    """
    if not 1 <= m_active <= n_len:
        raise ParameterError(f"need 1 <= m_active <= n_len, got {m_active}, {n_len}")
    scheme = PrecodingScheme(scheme)

    if scheme is PrecodingScheme.OFDM:
        o = _centered_dft_columns(n_len, retained_frequencies(n_len, m_active))
    elif scheme is PrecodingScheme.DFT:
        freqs = retained_frequencies(n_len, m_active)
        f_sel = _centered_dft_columns(n_len, freqs)
        # M-point DFT precoder with symmetric in-block indices; time shift of
        # column m is m - (M - 1)/2 on the centered sample grid.
        a = np.arange(m_active) - (m_active - 1) / 2.0
        f_m = np.exp(-2j * np.pi * np.outer(a, a) / m_active) / np.sqrt(m_active)
        o = f_sel @ f_m
    elif scheme is PrecodingScheme.DPSS:
        if dpss_source is None:
            raise ParameterError("DPSS precoding requires a dpss_source set")
        if dpss_source.sequences.shape[0] != n_len:
            raise ParameterError(
                f"dpss_source length {dpss_source.sequences.shape[0]} != n_len {n_len}"
            )
        if dpss_source.sequences.shape[1] < m_active:
            raise ParameterError("dpss_source has fewer than m_active columns")
        o = dpss_source.sequences[:, :m_active].astype(np.complex128)
    else:  # pragma: no cover
        raise ParameterError(f"unknown scheme {scheme}")

    o = o / np.linalg.norm(o, axis=0, keepdims=True)
    return WaveformBasis(
        n_len=n_len,
        m_active=m_active,
        scheme=scheme,
        o_matrix=np.ascontiguousarray(o),
        eta=m_active / n_len,
    )


def default_basis(scheme: PrecodingScheme, n_len: int, m_active: int) -> WaveformBasis:
    """``build_basis`` that supplies the W -> 0.5- DPSS set when needed."""
    scheme = PrecodingScheme(scheme)
    source = None
    if scheme is PrecodingScheme.DPSS:
        source = dpss_limit_half(n_len, m_active)
    return build_basis(scheme, n_len, m_active, dpss_source=source)


def with_prefix(
    base: WaveformBasis, prefix_len: int, prefix_kind: PrefixKind = PrefixKind.CYCLIC
) -> PrefixedBasis:
    """Extend a basis by a guard prefix of ``prefix_len`` samples."""
    if prefix_len < 0:
        raise ParameterError(f"prefix_len must be >= 0, got {prefix_len}")
    if prefix_len >= base.n_len:
        raise ParameterError(
            f"prefix_len {prefix_len} must be shorter than the symbol ({base.n_len})"
        )
    prefix_kind = PrefixKind(prefix_kind)
    o = base.o_matrix
    zeros = np.zeros((prefix_len, base.m_active), dtype=o.dtype)
    if prefix_kind is PrefixKind.CYCLIC and prefix_len > 0:
        guard = o[-prefix_len:, :]
    else:
        guard = zeros
    o_t = np.vstack([guard, o])
    o_r = np.vstack([zeros, o])
    return PrefixedBasis(
        base=base, prefix_len=prefix_len, prefix_kind=prefix_kind, o_t=o_t, o_r=o_r
    )


def edge_truncation_order(
    scheme: PrecodingScheme, n_len: int, m_active: int
) -> list[int]:
    """Full-basis component indices deactivated when going from N to M.

    OFDM/DFT drop the outermost (highest |frequency| / outermost time shift)
    components symmetrically, one extra from the upper edge when N - M is
    odd; DPSS drops the highest-order sequences.
    """
    if not 1 <= m_active <= n_len:
        raise ParameterError(f"need 1 <= m_active <= n_len, got {m_active}, {n_len}")
    scheme = PrecodingScheme(scheme)
    if scheme is PrecodingScheme.DPSS:
        return list(range(m_active, n_len))
    d_low = (n_len - m_active) // 2
    d_high = n_len - m_active - d_low
    return list(range(d_low)) + list(range(n_len - d_high, n_len))
