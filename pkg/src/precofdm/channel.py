"""Delay-Doppler multipath channels with fractional-delay taps.

A channel is a sum over paths of (complex gain) x (Doppler modulation) x
(band-limited delay).  Integer delays shift exactly; fractional delays act
through the sinc kernel and therefore spread over all lags.  The operator is
available both as a guarded dense matrix and as a streaming filter whose
per-path kernels are truncated sinc interpolators (exact for integer
delays); both forms sample the same kernels, so they agree to round-off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
import scipy.signal

from .configio import load_kv_file
from .errors import MemoryBudgetError, ParameterError

__all__ = [
    "PathSpec",
    "ChannelSpec",
    "ChannelRealization",
    "sinc_delay_matrix",
    "doppler_matrix",
    "ChannelOperator",
    "assemble_channel",
    "block_submatrix",
    "realize",
    "exp_profile_spec",
    "exp_profile_channel",
    "mild_channel_spec",
    "severe_channel_spec",
    "integer_channel_spec",
    "cdlc_channel_spec",
    "builtin_channel_spec",
    "prefix_length_for",
    "load_channel_profile",
]

DEFAULT_FIR_HALF_LEN = 64
DEFAULT_MAX_DENSE_LEN = 4096


@dataclass(frozen=True)
class PathSpec:
    """One specular path: delay (samples), gain or gain power, Doppler."""

    delay: float
    gain: complex | None = None
    gain_power: float | None = None
    doppler: float = 0.0

    def __post_init__(self):
        if self.delay < 0:
            raise ParameterError(f"path delay must be >= 0, got {self.delay}")
        if (self.gain is None) == (self.gain_power is None):
            raise ParameterError("specify exactly one of gain, gain_power")
        if self.gain_power is not None and self.gain_power <= 0:
            raise ParameterError(f"gain_power must be > 0, got {self.gain_power}")

    @property
    def power(self) -> float:
        return abs(self.gain) ** 2 if self.gain is not None else self.gain_power


@dataclass(frozen=True)
class ChannelSpec:
    """Ordered path list plus the nominal delay spread tau_max (samples)."""

    paths: tuple[PathSpec, ...]
    max_delay: float
    name: str = "custom"

    def __post_init__(self):
        if not self.paths:
            raise ParameterError("channel needs at least one path")
        worst = max(p.delay for p in self.paths)
        if self.max_delay < worst:
            raise ParameterError(
                f"max_delay {self.max_delay} below largest path delay {worst}"
            )

    @property
    def delays(self) -> np.ndarray:
        return np.array([p.delay for p in self.paths])

    @property
    def powers(self) -> np.ndarray:
        return np.array([p.power for p in self.paths])

    @property
    def dopplers(self) -> np.ndarray:
        return np.array([p.doppler for p in self.paths])


@dataclass(frozen=True)
class ChannelRealization:
    """A spec with drawn complex gains, tied to a block layout."""

    spec: ChannelSpec
    drawn_gains: np.ndarray
    block_len: int = 1
    n_blocks: int = 1

    def __post_init__(self):
        self.drawn_gains.flags.writeable = False
        if len(self.drawn_gains) != len(self.spec.paths):
            raise ParameterError("one drawn gain per path required")

    def with_blocks(self, block_len: int, n_blocks: int) -> "ChannelRealization":
        return replace(self, block_len=block_len, n_blocks=n_blocks)

    @property
    def stream_len(self) -> int:
        return self.block_len * self.n_blocks


def sinc_delay_matrix(
    delay: float, rows: int, cols: int, row_offset: int = 0
) -> np.ndarray:
    """Delay operator block: entry (l, k) = sinc(l + row_offset - k - delay).

    Integer delays produce an exact 0/1 shift matrix.
    """
    if rows < 1 or cols < 1:
        raise ParameterError("rows and cols must be >= 1")
    lags = np.arange(rows)[:, None] + row_offset - np.arange(cols)[None, :]
    if float(delay).is_integer():
        return (lags == int(delay)).astype(np.float64)
    return np.sinc(lags - delay)


def doppler_matrix(doppler: float, n: int, offset: int = 0) -> np.ndarray:
    """Diagonal modulation matrix exp(j 2 pi (l + offset) nu)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return np.diag(np.exp(2j * np.pi * (np.arange(n) + offset) * doppler))


def _path_kernel(delay: float, half_len: int | None, stream_len: int):
    """Integer-lag response of one delay tap: (first lag, values).

    ``half_len`` is the truncation half-length around the delay; ``None``
    keeps every lag that can matter for a stream of ``stream_len`` samples,
    which makes the streaming form exact.
    """
    if float(delay).is_integer():
        return int(delay), np.ones(1)
    if half_len is None:
        lag0 = -(stream_len - 1)
        lags = np.arange(lag0, stream_len)
    else:
        lag0 = math.floor(delay) - half_len
        lags = np.arange(lag0, math.floor(delay) + half_len + 1)
    return lag0, np.sinc(lags - delay)


class ChannelOperator:
    """Realized channel as a linear operator on a sample stream.

    ``apply`` filters per path (FFT convolution) and adds the Doppler phase
    ramp; ``dense``/``block`` materialize the same kernels as matrices, the
    former guarded by ``max_dense_len``.
    """

    def __init__(
        self,
        realization: ChannelRealization,
        half_len: int | None = DEFAULT_FIR_HALF_LEN,
        max_dense_len: int = DEFAULT_MAX_DENSE_LEN,
    ):
        self.realization = realization
        self.half_len = half_len
        self.max_dense_len = max_dense_len
        self.stream_len = realization.stream_len
        self._kernels = [
            _path_kernel(p.delay, half_len, self.stream_len)
            for p in realization.spec.paths
        ]

    def _kernel_at(self, path_idx: int, lags: np.ndarray) -> np.ndarray:
        lag0, values = self._kernels[path_idx]
        out = np.zeros(lags.shape)
        idx = lags - lag0
        ok = (idx >= 0) & (idx < len(values))
        out[ok] = values[idx[ok].astype(int)]
        return out

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != (self.stream_len,):
            raise ParameterError(
                f"expected stream of length {self.stream_len}, got {x.shape}"
            )
        spec = self.realization.spec
        y = np.zeros(self.stream_len, dtype=np.complex128)
        sample_idx = np.arange(self.stream_len)
        for gain, path, (lag0, h) in zip(
            self.realization.drawn_gains, spec.paths, self._kernels
        ):
            if len(h) == 1:
                delayed = np.zeros(self.stream_len, dtype=x.dtype)
                if lag0 >= 0:
                    if lag0 < self.stream_len:
                        delayed[lag0:] = x[: self.stream_len - lag0]
                else:
                    delayed[: self.stream_len + lag0] = x[-lag0:]
            else:
                conv = scipy.signal.fftconvolve(x, h)
                delayed = np.zeros(self.stream_len, dtype=np.complex128)
                lo = max(0, lag0)
                hi = min(self.stream_len - 1, lag0 + len(conv) - 1)
                if hi >= lo:
                    delayed[lo : hi + 1] = conv[lo - lag0 : hi + 1 - lag0]
            if path.doppler != 0.0:
                delayed = delayed * np.exp(2j * np.pi * path.doppler * sample_idx)
            y += gain * delayed
        return y

    def dense(self) -> np.ndarray:
        if self.stream_len > self.max_dense_len:
            raise MemoryBudgetError(
                f"dense channel of size {self.stream_len} exceeds the budget "
                f"({self.max_dense_len}); use the streaming form"
            )
        n = self.stream_len
        lag_col = np.arange(n)
        lag_row = -np.arange(n)
        h = np.zeros((n, n), dtype=np.complex128)
        for p, (gain, path) in enumerate(
            zip(self.realization.drawn_gains, self.realization.spec.paths)
        ):
            t = scipy.linalg.toeplitz(
                self._kernel_at(p, lag_col), self._kernel_at(p, lag_row)
            )
            if path.doppler != 0.0:
                t = np.exp(2j * np.pi * path.doppler * lag_col)[:, None] * t
            h += gain * t
        return h

    def block(self, l: int, l_prime: int) -> np.ndarray:
        """The (l, l') block of the stream matrix, shape block_len x block_len."""
        nb = self.realization.n_blocks
        if not (0 <= l < nb and 0 <= l_prime < nb):
            raise ParameterError(f"block indices ({l}, {l_prime}) out of range {nb}")
        b = self.realization.block_len
        base = (l - l_prime) * b
        lag_col = base + np.arange(b)
        lag_row = base - np.arange(b)
        out = np.zeros((b, b), dtype=np.complex128)
        for p, (gain, path) in enumerate(
            zip(self.realization.drawn_gains, self.realization.spec.paths)
        ):
            t = scipy.linalg.toeplitz(
                self._kernel_at(p, lag_col), self._kernel_at(p, lag_row)
            )
            if path.doppler != 0.0:
                t = (
                    np.exp(2j * np.pi * path.doppler * (l * b + np.arange(b)))[:, None]
                    * t
                )
            out += gain * t
        return out


def assemble_channel(
    realization: ChannelRealization,
    half_len: int | None = DEFAULT_FIR_HALF_LEN,
    max_dense_len: int = DEFAULT_MAX_DENSE_LEN,
) -> ChannelOperator:
    """Build the stream operator for a realization."""
    return ChannelOperator(realization, half_len=half_len, max_dense_len=max_dense_len)


def block_submatrix(operator: ChannelOperator, l: int, l_prime: int) -> np.ndarray:
    return operator.block(l, l_prime)


def realize(
    spec: ChannelSpec,
    seed: int | np.random.Generator,
    block_len: int = 1,
    n_blocks: int = 1,
) -> ChannelRealization:
    """Draw path gains: fixed gains pass through, powers get a random phase.

    One phase per path per realization (quasi-static), uniform on [0, 2 pi),
    from ``default_rng(seed)`` in path order.
    """
    rng = np.random.default_rng(seed)
    gains = np.empty(len(spec.paths), dtype=np.complex128)
    for i, path in enumerate(spec.paths):
        if path.gain is not None:
            gains[i] = path.gain
        else:
            phase = rng.uniform(0.0, 2.0 * np.pi)
            gains[i] = np.sqrt(path.gain_power) * np.exp(1j * phase)
    return ChannelRealization(
        spec=spec, drawn_gains=gains, block_len=block_len, n_blocks=n_blocks
    )


def exp_profile_spec(
    decay: float,
    delays: np.ndarray,
    max_delay: float | None = None,
    name: str = "custom",
) -> ChannelSpec:
    """Tapped-delay-line spec with amplitudes exp(-decay * tau)."""
    if decay <= 0:
        raise ParameterError(f"decay must be > 0, got {decay}")
    delays = np.asarray(delays, dtype=float)
    if delays.size == 0:
        raise ParameterError("delays grid must be non-empty")
    paths = tuple(
        PathSpec(delay=t, gain_power=float(np.exp(-2.0 * decay * t))) for t in delays
    )
    if max_delay is None:
        max_delay = float(delays.max())
    return ChannelSpec(paths=paths, max_delay=max_delay, name=name)


def exp_profile_channel(
    decay: float, delays: np.ndarray, seed: int
) -> ChannelRealization:
    """Seeded realization of an exponential-decay profile."""
    return realize(exp_profile_spec(decay, delays), seed)


def mild_channel_spec() -> ChannelSpec:
    return exp_profile_spec(0.5, np.arange(0.0, 15.05, 0.1), max_delay=16.0, name="mild")


def severe_channel_spec() -> ChannelSpec:
    return exp_profile_spec(
        0.05, np.arange(0.0, 15.05, 0.1), max_delay=16.0, name="severe"
    )


def integer_channel_spec() -> ChannelSpec:
    return exp_profile_spec(0.5, np.arange(0.0, 16.0, 1.0), max_delay=16.0, name="integer")


# 24-cluster tapped-delay-line approximation of the CDL-C profile:
# (normalized delay, power dB).  Spatial structure is out of scope; each tap
# gets a unit-magnitude random phase at realization time.
_CDLC_TAPS = (
    (0.0000, -4.4), (0.2099, -1.2), (0.2219, -3.5), (0.2329, -5.2),
    (0.2176, -2.5), (0.6366, 0.0), (0.6448, -2.2), (0.6560, -3.9),
    (0.6584, -7.4), (0.7935, -7.1), (0.8213, -10.7), (0.9336, -11.1),
    (1.2285, -5.1), (1.3083, -6.8), (2.1704, -8.7), (2.7105, -13.2),
    (4.2589, -13.9), (4.6003, -13.9), (5.4902, -15.8), (5.6077, -17.1),
    (6.3065, -16.0), (6.6374, -15.7), (7.0427, -21.6), (8.6523, -22.8),
)


def cdlc_channel_spec(
    delay_spread_ns: float, sample_rate_hz: float = 1.92e6
) -> ChannelSpec:
    """CDL-C style power-delay profile scaled to a delay spread, unit total power."""
    if delay_spread_ns <= 0:
        raise ParameterError("delay_spread_ns must be > 0")
    powers = np.array([10.0 ** (p / 10.0) for _, p in _CDLC_TAPS])
    powers /= powers.sum()
    delays = np.array(
        [d * delay_spread_ns * 1e-9 * sample_rate_hz for d, _ in _CDLC_TAPS]
    )
    paths = tuple(
        PathSpec(delay=float(t), gain_power=float(p)) for t, p in zip(delays, powers)
    )
    return ChannelSpec(
        paths=paths,
        max_delay=float(delays.max()),
        name=f"cdlc{int(delay_spread_ns)}ns",
    )


def builtin_channel_spec(name: str) -> ChannelSpec:
    """Look up a named channel: mild, severe, integer, cdlc200ns, cdlc1000ns."""
    table = {
        "mild": mild_channel_spec,
        "severe": severe_channel_spec,
        "integer": integer_channel_spec,
        "cdlc200ns": lambda: cdlc_channel_spec(200.0),
        "cdlc1000ns": lambda: cdlc_channel_spec(1000.0),
    }
    try:
        return table[name]()
    except KeyError:
        raise ParameterError(
            f"unknown channel {name!r}; expected one of {sorted(table)}"
        ) from None


def prefix_length_for(spec: ChannelSpec) -> int:
    """Guard length covering the delay spread: ceil(tau_max) samples."""
    return int(math.ceil(spec.max_delay - 1e-12))


def load_channel_profile(path) -> tuple[ChannelSpec, int | None]:
    """Read a channel profile file; returns (spec, seed or None).

    Fields: ``delays_samples`` (list or range), one of ``powers_db`` /
    ``decay``, optional ``doppler`` (scalar or per-path list), ``seed``,
    ``max_delay``, ``name``.
    """
    kv = load_kv_file(path)
    if "delays_samples" not in kv:
        raise ParameterError(f"profile {path} missing delays_samples")
    delays = np.atleast_1d(np.asarray(kv["delays_samples"], dtype=float))
    if "powers_db" in kv:
        powers_db = np.atleast_1d(np.asarray(kv["powers_db"], dtype=float))
        if powers_db.shape != delays.shape:
            raise ParameterError("powers_db and delays_samples lengths differ")
        powers = 10.0 ** (powers_db / 10.0)
    elif "decay" in kv:
        powers = np.exp(-2.0 * float(kv["decay"]) * delays)
    else:
        raise ParameterError(f"profile {path} needs powers_db or decay")
    doppler = kv.get("doppler", 0.0)
    dopplers = np.broadcast_to(
        np.atleast_1d(np.asarray(doppler, dtype=float)), delays.shape
    )
    paths = tuple(
        PathSpec(delay=float(t), gain_power=float(p), doppler=float(nu))
        for t, p, nu in zip(delays, powers, dopplers)
    )
    max_delay = float(kv.get("max_delay", delays.max()))
    name = str(kv.get("name", "profile"))
    seed = kv.get("seed")
    return (
        ChannelSpec(paths=paths, max_delay=max_delay, name=name),
        int(seed) if seed is not None else None,
    )
