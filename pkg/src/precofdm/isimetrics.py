"""Inter-symbol interference metrics for precoded waveform bases.

The chain implemented here:

* cross-correlation tensor C[r, s, q] between basis columns (direct sums,
  plus closed forms for the OFDM and DFT-precoded bases);
* the band-limit-then-shift operator that fractional channel delays apply to
  each correlation sequence;
* tail energies of the shifted sequences, the half-sample-shift figure of
  merit per pair (band-limited correlation tail energy), and its certified
  finite form through an energy identity on the 4N+1 half-grid window;
* exact ISI transfer matrices and energies for prefixed transmit/receive
  bases over realized channels, the matching analytical upper bound per
  channel, and signal-to-ISI sweeps across utilization.

Quasi-static channels (zero Doppler) are assumed by the energy/bound
operations; the transfer-matrix operation supports per-block Doppler.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelOperator, ChannelRealization, ChannelSpec, sinc_delay_matrix
from .errors import ParameterError
from .waveform import (
    PrecodingScheme,
    PrefixKind,
    PrefixedBasis,
    WaveformBasis,
    default_basis,
    retained_frequencies,
    with_prefix,
)

__all__ = [
    "CrossCorrTensor",
    "IsiTransfer",
    "BoundReport",
    "S2iPoint",
    "xcorr_tensor",
    "xcorr_ofdm_closed",
    "xcorr_scfdma_closed",
    "bandlimit_shift",
    "tail_energy",
    "ebct",
    "ebct_all",
    "ebct_bound",
    "ebct_bound_all",
    "isi_transfer",
    "isi_gram",
    "isi_energy",
    "signal_isi_energies",
    "isi_bound",
    "s2i_sweep",
    "half_shift_worst_case_scan",
]

log = logging.getLogger(__name__)

DEFAULT_TRUNCATION_FACTOR = 64
DEFAULT_BLOCK_WINDOW = 12


def _sinc(x: np.ndarray) -> np.ndarray:
    """sin(pi x) / (pi x) with exact zeros at nonzero integer arguments."""
    x = np.asarray(x, dtype=float)
    out = np.sinc(x)
    exact = (x == np.round(x)) & (x != 0)
    if np.any(exact):
        out = np.where(exact, 0.0, out)
    return out


@dataclass(frozen=True)
class CrossCorrTensor:
    """All pairwise lag correlations of basis columns.

    ``values[r, s, q + n_len - 1]`` is sum_n o_r*[n] o_s[n - q] for lags
    q in [-(N-1), N-1].
    """

    m: int
    n_len: int
    values: np.ndarray
    source_scheme: PrecodingScheme | None = None

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def lags(self) -> np.ndarray:
        return np.arange(-(self.n_len - 1), self.n_len)

    def lag(self, r: int, s: int, q: int) -> complex:
        return self.values[r, s, q + self.n_len - 1]

    def pair_sequence(self, r: int, s: int) -> np.ndarray:
        return self.values[r, s, :]


@dataclass(frozen=True)
class IsiTransfer:
    """Linear map from block l' symbols into block l output."""

    beta: np.ndarray
    from_block: int
    to_block: int


@dataclass(frozen=True)
class BoundReport:
    """Per-pair and total analytical ISI bound, with optional measurements."""

    per_pair: np.ndarray
    total_bound: float
    empirical: float | None = None
    s2i_db: float | None = None


@dataclass(frozen=True)
class S2iPoint:
    scheme: str
    eta: float
    tap_model: str
    s2i_db: float
    s2i_lower_bound_db: float | None = None


def _cross_lag_matrix(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Correlations sum_n left*[n, r] right[n - q, s] for q in [-(B-1), B-1].

    Returns shape (M_left * M_right, 2B - 1) with pair index r * M_right + s.
    """
    b = left.shape[0]
    if right.shape[0] != b:
        raise ParameterError("row counts must match")
    m_l, m_r = left.shape[1], right.shape[1]
    out = np.empty((m_l * m_r, 2 * b - 1), dtype=np.complex128)
    for q in range(-(b - 1), b):
        if q >= 0:
            c = left[q:].conj().T @ right[: b - q]
        else:
            c = left[: b + q].conj().T @ right[-q:]
        out[:, q + b - 1] = c.ravel()
    return out


def xcorr_tensor(basis: WaveformBasis) -> CrossCorrTensor:
    """Cross-correlation tensor of an effective basis (direct summation)."""
    o = basis.o_matrix
    n, m = o.shape
    values = _cross_lag_matrix(o, o).reshape(m, m, 2 * n - 1)
    return CrossCorrTensor(
        m=m, n_len=n, values=values, source_scheme=basis.scheme
    )


def _dirichlet_ratio(delta: np.ndarray, count: np.ndarray, n_len: int) -> np.ndarray:
    """sum_{n=-(K-1)/2}^{(K-1)/2} exp(j 2 pi delta n / N) for K = count terms."""
    delta = np.asarray(delta, dtype=float)
    count = np.asarray(count, dtype=float)
    num = np.sin(np.pi * count * delta / n_len)
    den = np.sin(np.pi * delta / n_len)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = num / den
    return np.where(delta == 0, count, ratio)


def xcorr_ofdm_closed(r: int, s: int, q: int, n_len: int, m_active: int | None = None) -> complex:
    """Closed-form OFDM correlation entry; r = s uses the analytic limit.

    Matches the direct-sum tensor of the centered-subcarrier basis:
    C_rs[q >= 0] = exp(-j pi (f_r + f_s) q / N) sin(pi (N-q)(s-r)/N)
                   / (N sin(pi (s-r)/N)).
    """
    if m_active is None:
        m_active = n_len
    if abs(q) > n_len - 1:
        raise ParameterError(f"|q| must be <= N-1, got q={q}")
    if not (0 <= r < m_active and 0 <= s < m_active):
        raise ParameterError("component indices out of range")
    if q < 0:
        return complex(np.conj(xcorr_ofdm_closed(s, r, -q, n_len, m_active)))
    freqs = retained_frequencies(n_len, m_active)
    phase = np.exp(-1j * np.pi * (freqs[r] + freqs[s]) * q / n_len)
    ratio = _dirichlet_ratio(np.array(float(s - r)), np.array(n_len - q), n_len)
    return complex(phase * ratio / n_len)


def xcorr_scfdma_closed(r: int, s: int, q: int, n_len: int, m_active: int) -> complex:
    """Closed-form DFT-precoded correlation entry via the reduced double sum.

    For q >= 0, with in-block indices l', k' on the symmetric grid
    +-(M-1)/2 and centered shift labels r~ = r - (M-1)/2:

    C_rs[q] = e^{-j 2 pi q f_c / N} / (M N) *
              sum_{l',k'} e^{j 2 pi (l' r~ - k' s~)/M} e^{-j pi (l'+k') q/N}
                          D(k'-l'; N-q)

    where D is the Dirichlet ratio over N - q terms and f_c the center of
    the occupied subcarrier block.
    """
    if abs(q) > n_len - 1:
        raise ParameterError(f"|q| must be <= N-1, got q={q}")
    if not (0 <= r < m_active and 0 <= s < m_active):
        raise ParameterError("component indices out of range")
    if q < 0:
        return complex(np.conj(xcorr_scfdma_closed(s, r, -q, n_len, m_active)))
    freqs = retained_frequencies(n_len, m_active)
    f_c = float(freqs.mean())
    c_m = (m_active - 1) / 2.0
    grid = np.arange(m_active) - c_m
    lp = grid[:, None]
    kp = grid[None, :]
    r_t = r - c_m
    s_t = s - c_m
    phases = np.exp(2j * np.pi * (lp * r_t - kp * s_t) / m_active)
    phases = phases * np.exp(-1j * np.pi * (lp + kp) * q / n_len)
    ratio = _dirichlet_ratio(kp - lp, np.full_like(kp, n_len - q), n_len)
    total = np.sum(phases * ratio) / (m_active * n_len)
    return complex(np.exp(-2j * np.pi * q * f_c / n_len) * total)


def bandlimit_shift(
    seq: np.ndarray,
    half_bandwidth: float,
    shift: float,
    eval_points: np.ndarray,
) -> np.ndarray:
    """Band-limit a lag sequence to |f| <= W, shift by ``shift``, resample.

    ``seq`` lives on the symmetric integer grid -(L-1)/2 .. (L-1)/2 (odd
    length).  The output at integer n is sum_q seq[q] sinc(2W (q - n -
    shift)); at W = 0.5 this is the band-limited interpolation of the
    sequence evaluated at n + shift, so shift = 0 returns the input samples
    and integer shifts translate them exactly.
    """
    seq = np.asarray(seq)
    if seq.ndim != 1 or seq.size % 2 == 0:
        raise ParameterError("seq must be 1-D with odd length (symmetric lags)")
    if not 0.0 < half_bandwidth <= 0.5:
        raise ParameterError(f"half_bandwidth must be in (0, 0.5], got {half_bandwidth}")
    half = (seq.size - 1) // 2
    lags = np.arange(-half, half + 1)
    pts = np.asarray(eval_points)
    kernel = _sinc(2.0 * half_bandwidth * (lags[None, :] - pts[:, None] - shift))
    return kernel @ seq


def tail_energy(values: np.ndarray, l: int, origin: int | None = None) -> float:
    """Energy of a sampled sequence outside the index window [-l, l].

    ``values[k]`` corresponds to index k - origin (default: midpoint).  The
    provided samples are the truncation; they must reach at least |n| = l.
    """
    values = np.asarray(values)
    if l < 0:
        raise ParameterError(f"l must be >= 0, got {l}")
    if origin is None:
        if values.size % 2 == 0:
            raise ParameterError("even-length sequence needs an explicit origin")
        origin = (values.size - 1) // 2
    n = np.arange(values.size) - origin
    if n.max() < l and n.min() > -l:
        raise ParameterError(
            f"samples reach |n| <= {max(n.max(), -n.min())}, below the window l={l}"
        )
    return float(np.sum(np.abs(values[np.abs(n) > l]) ** 2))


def _shifted_tail_energy(
    cmat: np.ndarray, n_len: int, shift: float, threshold: int, truncation: int
) -> np.ndarray:
    """Tail energy beyond ``threshold`` of the shifted band-limited sequences.

    ``cmat`` holds lag sequences as rows (pairs x (2N-1)).
    """
    lags = np.arange(-(n_len - 1), n_len)
    pts = np.concatenate(
        [np.arange(-truncation, -threshold), np.arange(threshold + 1, truncation + 1)]
    )
    out = np.zeros(cmat.shape[0])
    chunk = max(1, 2_000_000 // max(1, cmat.shape[0]))
    for start in range(0, pts.size, chunk):
        p = pts[start : start + chunk]
        kernel = _sinc(lags[None, :] - p[:, None] - shift)
        u = cmat @ kernel.T
        out += np.sum(np.abs(u) ** 2, axis=1)
    return out


def ebct(
    tensor: CrossCorrTensor,
    r: int,
    s: int,
    truncation_factor: int = DEFAULT_TRUNCATION_FACTOR,
) -> float:
    """Band-limited correlation tail energy of pair (r, s).

    Tail energy beyond N-1 of the half-sample-shifted, half-band-limited
    correlation sequence, truncated at |n| <= truncation_factor * N.  The
    infinite-tail remainder is bounded and logged at debug level;
    ``ebct_bound`` serves as the certified cap.
    """
    n = tensor.n_len
    trunc = truncation_factor * n
    seq = tensor.pair_sequence(r, s)[None, :]
    value = float(_shifted_tail_energy(seq, n, 0.5, n - 1, trunc)[0])
    l1 = float(np.sum(np.abs(seq)))
    residual = 2.0 * l1**2 / (np.pi**2 * max(1, trunc - n))
    log.debug("ebct(%d,%d): value=%.6e, truncation residual <= %.2e", r, s, value, residual)
    return value


def ebct_all(
    tensor: CrossCorrTensor, truncation_factor: int = DEFAULT_TRUNCATION_FACTOR
) -> np.ndarray:
    """E_BCT for every pair, shape (M, M)."""
    n = tensor.n_len
    m = tensor.m
    cmat = tensor.values.reshape(m * m, 2 * n - 1)
    vals = _shifted_tail_energy(cmat, n, 0.5, n - 1, truncation_factor * n)
    return vals.reshape(m, m)


def _halfshift_tail_exact(cmat: np.ndarray, n_len: int, n_param: int) -> np.ndarray:
    """Exact tail energy beyond n_param - 1 of half-shifted lag sequences.

    Each row of ``cmat`` is a lag sequence C on |q| <= N-1.  Its band-limited
    interpolant y sampled on the half-integer grid t = k/2 carries total
    energy exactly 2 ||C||^2 (two-fold oversampling Parseval), its even
    samples reproduce C, and its odd samples are the half-sample-shifted
    sequence.  The tail energy therefore reduces to window bookkeeping on
    the 4 n_param + 1 samples with |k| <= 2 n_param: a finite, certified
    replacement for the infinite tail sum.
    """
    lags = np.arange(-(n_len - 1), n_len)
    k = np.arange(-2 * n_param, 2 * n_param + 1)
    kernel = _sinc(k[:, None] / 2.0 - lags[None, :])
    n_pairs = cmat.shape[0]
    out = np.empty(n_pairs)
    chunk = max(1, 8_000_000 // (len(k) + 1))
    even_outside = np.abs(lags) >= n_param + 1
    for start in range(0, n_pairs, chunk):
        c = cmat[start : start + chunk]
        y = c @ kernel.T
        total = 2.0 * np.sum(np.abs(c) ** 2, axis=1)
        window = np.sum(np.abs(y) ** 2, axis=1)
        # odd sample k = -2 n_param + 1 (index n = -n_param) sits inside the
        # window but belongs to the tail; even samples beyond the window are
        # plain C values
        boundary = np.abs(y[:, 1]) ** 2
        even_tail = np.sum(np.abs(c[:, even_outside]) ** 2, axis=1)
        out[start : start + chunk] = total - window - even_tail + boundary
    return np.maximum(out, 0.0)


def ebct_bound(tensor: CrossCorrTensor, r: int, s: int) -> float:
    """Certified finite-form value of E_BCT(r, s): dominates any truncation.

    Evaluates the infinite tail exactly through the half-grid window
    identity, so it upper-bounds (and tightly matches) the truncated sum
    computed by ``ebct``; the gap is the truncation deficit.
    """
    n = tensor.n_len
    cmat = tensor.pair_sequence(r, s)[None, :]
    return float(_halfshift_tail_exact(cmat, n, n)[0])


def ebct_bound_all(tensor: CrossCorrTensor) -> np.ndarray:
    """The E_BCT bound for every pair, shape (M, M)."""
    m, n = tensor.m, tensor.n_len
    cmat = tensor.values.reshape(m * m, 2 * n - 1)
    return _halfshift_tail_exact(cmat, n, n).reshape(m, m)


def _check_pair(tx: PrefixedBasis, rx: PrefixedBasis):
    if tx.block_len != rx.block_len or tx.base.m_active != rx.base.m_active:
        raise ParameterError("transmit/receive bases have mismatched shapes")


def isi_transfer(
    basis_tx: PrefixedBasis,
    basis_rx: PrefixedBasis,
    channel: ChannelRealization | ChannelOperator,
    l: int,
    l_prime: int,
) -> IsiTransfer:
    """ISI transfer matrix beta_{l,l'} = O_r^H H_{l,l'} O_t.

    Given a realization, the channel block is evaluated with the exact sinc
    delay kernel; given an operator, the operator's own (possibly truncated)
    kernels are used so the result matches what ``apply`` does.
    """
    _check_pair(basis_tx, basis_rx)
    b = basis_tx.block_len
    if isinstance(channel, ChannelOperator):
        if channel.realization.block_len != b:
            raise ParameterError("channel block length != basis block length")
        h_block = channel.block(l, l_prime)
    else:
        if channel.block_len != b:
            raise ParameterError("channel block length != basis block length")
        nb = channel.n_blocks
        if not (0 <= l < nb and 0 <= l_prime < nb):
            raise ParameterError(f"block indices ({l}, {l_prime}) out of range {nb}")
        h_block = np.zeros((b, b), dtype=np.complex128)
        offset = (l - l_prime) * b
        for gain, path in zip(channel.drawn_gains, channel.spec.paths):
            t = sinc_delay_matrix(path.delay, b, b, row_offset=offset)
            if path.doppler != 0.0:
                ramp = np.exp(2j * np.pi * path.doppler * (l * b + np.arange(b)))
                t = ramp[:, None] * t
            h_block += gain * t
    beta = basis_rx.o_r.conj().T @ h_block @ basis_tx.o_t
    return IsiTransfer(beta=beta, from_block=l_prime, to_block=l)


def isi_gram(
    tx: PrefixedBasis,
    rx: PrefixedBasis,
    delays: np.ndarray,
    n_blocks: int = DEFAULT_BLOCK_WINDOW,
    include_signal: bool = False,
):
    """Hermitian path-interference matrix K with
    K[p, p'] = sum_{d != 0} tr(beta_{p,d}^H beta_{p',d}),

    where beta_{p,d} is the unit-gain transfer matrix of the path with delay
    tau_p from a block d symbols away (|d| < n_blocks).  The ISI energy of a
    gain vector g is then g^H K g, and diag(K) holds per-path energies.
    With ``include_signal`` the analogous d = 0 matrix (desired-signal
    energies through the same bases) is returned as a second value.
    """
    _check_pair(tx, rx)
    if n_blocks < 2:
        raise ParameterError("n_blocks must be >= 2 to include any interferer")
    delays = np.asarray(delays, dtype=float)
    b = tx.block_len
    cmat = _cross_lag_matrix(rx.o_r, tx.o_t)
    lags = np.arange(-(b - 1), b)
    n_paths = delays.size
    k_isi = np.zeros((n_paths, n_paths), dtype=np.complex128)
    k_sig = np.zeros((n_paths, n_paths), dtype=np.complex128)
    for d in range(-(n_blocks - 1), n_blocks):
        if d == 0 and not include_signal:
            continue
        kernel = _sinc(lags[:, None] + d * b - delays[None, :])
        u = cmat @ kernel
        if d == 0:
            k_sig += u.conj().T @ u
        else:
            k_isi += u.conj().T @ u
    if include_signal:
        return k_isi, k_sig
    return k_isi


def _spec_of(channel: ChannelSpec | ChannelRealization) -> ChannelSpec:
    spec = channel.spec if isinstance(channel, ChannelRealization) else channel
    if np.any(spec.dopplers != 0.0):
        raise ParameterError(
            "ISI energy is defined for quasi-static (zero Doppler) channels"
        )
    return spec


def _quad(gram: np.ndarray, channel: ChannelSpec | ChannelRealization) -> float:
    if isinstance(channel, ChannelRealization):
        g = channel.drawn_gains
        return float(np.real(g.conj() @ gram @ g))
    return float(channel.powers @ np.real(np.diag(gram)))


def isi_energy(
    tx: PrefixedBasis,
    rx: PrefixedBasis,
    channel: ChannelSpec | ChannelRealization,
    n_blocks: int = DEFAULT_BLOCK_WINDOW,
) -> float:
    """Average ISI energy on one block under unit per-component symbol energy.

    With a realization, evaluates sum_{d != 0} ||beta_d||_F^2 for the drawn
    gains; with a spec, returns the statistical form sum_p sigma_p^2
    E_isi(tau_p).  Requires a purely delay-dispersive channel.
    """
    spec = _spec_of(channel)
    gram = isi_gram(tx, rx, spec.delays, n_blocks)
    return _quad(gram, channel)


def signal_isi_energies(
    tx: PrefixedBasis,
    rx: PrefixedBasis,
    channel: ChannelSpec | ChannelRealization,
    n_blocks: int = DEFAULT_BLOCK_WINDOW,
) -> tuple[float, float]:
    """Desired-signal energy and ISI energy through a basis pair.

    Their ratio is the signal-to-ISI ratio of the link.
    """
    spec = _spec_of(channel)
    k_isi, k_sig = isi_gram(tx, rx, spec.delays, n_blocks, include_signal=True)
    return _quad(k_sig, channel), _quad(k_isi, channel)


def isi_bound(
    tensor: CrossCorrTensor,
    channel: ChannelSpec,
    prefix_len: int,
    empirical: float | None = None,
    signal_energy: float | None = None,
) -> BoundReport:
    """Analytical upper bound on the total ISI energy of a channel.

    Each path acts like a half-sample shift at worst (verified empirically
    by the scan operation, never assumed silently), displaced by its integer
    part, so its per-pair contribution is capped by the shifted-correlation
    tail energy beyond N_p - 1 with N_p = N + g - floor(tau_p), evaluated
    on the 4 N_p + 1 half-grid window.  Path powers weight the terms.
    """
    if np.any(channel.dopplers != 0.0):
        raise ParameterError("the ISI bound applies to quasi-static channels")
    m, n = tensor.m, tensor.n_len
    cmat = tensor.values.reshape(m * m, 2 * n - 1)
    per_pair = np.zeros(m * m)
    groups: dict[int, float] = {}
    for path in channel.paths:
        n_p = n + prefix_len - math.floor(path.delay)
        if n_p < 1:
            raise ParameterError(
                f"path delay {path.delay} too large for N={n}, g={prefix_len}"
            )
        groups[n_p] = groups.get(n_p, 0.0) + path.power
    for n_p, power in sorted(groups.items()):
        per_pair += power * _halfshift_tail_exact(cmat, n, n_p)
    total = float(per_pair.sum())
    s2i_db = None
    if empirical is not None and empirical > 0 and signal_energy is not None:
        s2i_db = 10.0 * math.log10(signal_energy / empirical)
    return BoundReport(
        per_pair=per_pair.reshape(m, m),
        total_bound=total,
        empirical=empirical,
        s2i_db=s2i_db,
    )


def _ratio_db(signal: float, interference: float) -> float:
    if interference <= 0.0:
        return float("inf")
    return 10.0 * math.log10(signal / interference)


def s2i_sweep(
    schemes,
    eta_list,
    channel: ChannelSpec,
    n_len: int,
    prefix_len: int,
    prefix_kind: PrefixKind = PrefixKind.ZERO,
    n_blocks: int = DEFAULT_BLOCK_WINDOW,
    include_bound: bool = True,
) -> list[S2iPoint]:
    """Signal-to-ISI ratio (dB) per (scheme, eta), with the analytic lower bound.

    S2I is the received desired-signal energy over the ISI energy, both
    statistical under unit per-component symbol energy; replacing the ISI
    energy by its analytic upper bound gives the lower-bound column.
    m_active = floor(eta * N).
    """
    rows: list[S2iPoint] = []
    for scheme in schemes:
        scheme = PrecodingScheme(scheme)
        for eta in eta_list:
            m_active = int(math.floor(eta * n_len + 1e-9))
            if not 1 <= m_active <= n_len:
                raise ParameterError(f"eta={eta} gives invalid m_active={m_active}")
            basis = default_basis(scheme, n_len, m_active)
            pref = with_prefix(basis, prefix_len, prefix_kind)
            signal, energy = signal_isi_energies(pref, pref, channel, n_blocks)
            lower = None
            if include_bound:
                report = isi_bound(xcorr_tensor(basis), channel, prefix_len)
                lower = _ratio_db(signal, report.total_bound)
            rows.append(
                S2iPoint(
                    scheme=scheme.value,
                    eta=basis.eta,
                    tap_model=channel.name,
                    s2i_db=_ratio_db(signal, energy),
                    s2i_lower_bound_db=lower,
                )
            )
    return rows


def half_shift_worst_case_scan(
    tensor: CrossCorrTensor,
    r: int,
    s: int,
    tau_grid: np.ndarray,
    truncation_factor: int = DEFAULT_TRUNCATION_FACTOR,
) -> tuple[float, np.ndarray]:
    """Tail energy beyond N-1 versus fractional shift; returns (argmax, curve).

    Whether the half-sample shift maximizes the curve is reported by the
    returned argmax, never assumed.
    """
    tau_grid = np.asarray(tau_grid, dtype=float)
    if np.any((tau_grid <= 0.0) | (tau_grid >= 1.0)):
        raise ParameterError("tau grid must lie strictly inside (0, 1)")
    n = tensor.n_len
    seq = tensor.pair_sequence(r, s)[None, :]
    curve = np.array(
        [
            _shifted_tail_energy(seq, n, tau, n - 1, truncation_factor * n)[0]
            for tau in tau_grid
        ]
    )
    return float(tau_grid[int(np.argmax(curve))]), curve
