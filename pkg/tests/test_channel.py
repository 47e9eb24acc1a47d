"""Tests for fractional-delay channel construction and application."""

import numpy as np
import pytest

from precofdm.channel import (
    ChannelRealization,
    ChannelSpec,
    PathSpec,
    assemble_channel,
    block_submatrix,
    builtin_channel_spec,
    cdlc_channel_spec,
    doppler_matrix,
    exp_profile_channel,
    exp_profile_spec,
    integer_channel_spec,
    load_channel_profile,
    mild_channel_spec,
    prefix_length_for,
    realize,
    severe_channel_spec,
    sinc_delay_matrix,
)
from precofdm.errors import MemoryBudgetError, ParameterError


class TestSincDelayMatrix:
    def test_zero_delay_is_identity(self):
        assert np.array_equal(sinc_delay_matrix(0.0, 6, 6), np.eye(6))

    def test_integer_delay_is_exact_subdiagonal(self):
        t = sinc_delay_matrix(3.0, 8, 8)
        expected = np.zeros((8, 8))
        for i in range(3, 8):
            expected[i, i - 3] = 1.0
        assert np.array_equal(t, expected)

    def test_fractional_matches_elementwise_sinc(self):
        t = sinc_delay_matrix(0.5, 8, 8, row_offset=2)
        for l in range(8):
            for k in range(8):
                x = l + 2 - k - 0.5
                assert t[l, k] == pytest.approx(
                    np.sin(np.pi * x) / (np.pi * x), abs=1e-15
                )

    def test_half_sample_row_energy(self):
        t = sinc_delay_matrix(0.5, 8, 8)
        energies = np.sum(np.abs(t) ** 2, axis=1)
        assert np.all(energies > 0.0) and np.all(energies <= 1.0 + 1e-12)

    def test_bad_shape(self):
        with pytest.raises(ParameterError):
            sinc_delay_matrix(0.1, 0, 4)


class TestDopplerMatrix:
    def test_zero_doppler_is_identity(self):
        assert np.array_equal(doppler_matrix(0.0, 5), np.eye(5))

    def test_quarter_cycle(self):
        d = np.diag(doppler_matrix(0.25, 4))
        assert np.allclose(d, [1.0, 1.0j, -1.0, -1.0j], atol=1e-15)

    def test_block_offset_matches_stream_slice(self):
        full = np.diag(doppler_matrix(0.013, 12))
        block = np.diag(doppler_matrix(0.013, 4, offset=8))
        assert np.allclose(block, full[8:12], atol=1e-15)


def two_path_realization(block_len=8, n_blocks=3):
    spec = ChannelSpec(
        (
            PathSpec(delay=0.3, gain=0.5 + 0.2j, doppler=0.01),
            PathSpec(delay=2.0, gain=0.1 - 0.7j, doppler=-0.02),
        ),
        max_delay=3.0,
    )
    return realize(spec, 0, block_len=block_len, n_blocks=n_blocks)


class TestChannelOperator:
    def test_identity_path(self):
        spec = ChannelSpec((PathSpec(delay=0.0, gain=1.0 + 0.0j),), 0.0)
        op = assemble_channel(realize(spec, 0, block_len=5, n_blocks=2))
        x = np.arange(10.0) + 1j
        assert np.allclose(op.apply(x), x, atol=1e-14)
        assert np.array_equal(op.dense(), np.eye(10))

    def test_factorization_consistency(self):
        real = two_path_realization()
        h = assemble_channel(real, half_len=None).dense()
        n = real.stream_len
        explicit = np.zeros((n, n), dtype=complex)
        for path, gain in zip(real.spec.paths, real.drawn_gains):
            explicit += (
                gain
                * doppler_matrix(path.doppler, n)
                @ sinc_delay_matrix(path.delay, n, n)
            )
        assert np.max(np.abs(h - explicit)) <= 1e-10

    def test_integer_taps_strictly_banded(self):
        spec = exp_profile_spec(0.5, np.arange(0.0, 4.0), max_delay=4.0)
        op = assemble_channel(realize(spec, 1, block_len=10, n_blocks=2))
        h = op.dense()
        for i in range(20):
            for j in range(20):
                if not 0 <= i - j <= 3:
                    assert h[i, j] == 0.0

    def test_single_fractional_tap_fills_all_diagonals(self):
        spec = ChannelSpec((PathSpec(delay=0.5, gain=1.0 + 0.0j),), 1.0)
        h = assemble_channel(realize(spec, 0, block_len=8, n_blocks=1)).dense()
        assert np.all(np.abs(h) > 0.0)

    def test_fractional_row_matches_integer_expansion(self):
        spec = ChannelSpec((PathSpec(delay=2.7, gain=1.0 + 0.0j),), 3.0)
        h = assemble_channel(realize(spec, 0, block_len=16, n_blocks=1)).dense()
        for k in range(16):
            x = 8 - k - 2.7
            assert h[8, k] == pytest.approx(np.sin(np.pi * x) / (np.pi * x), abs=1e-12)

    def test_dense_and_streaming_agree(self):
        real = two_path_realization(block_len=13, n_blocks=3)
        op = assemble_channel(real)  # default truncation covers this size
        rng = np.random.default_rng(5)
        x = rng.standard_normal(39) + 1j * rng.standard_normal(39)
        assert np.max(np.abs(op.apply(x) - op.dense() @ x)) <= 1e-9

    def test_memory_guard(self):
        spec = ChannelSpec((PathSpec(delay=0.5, gain=1.0 + 0.0j),), 1.0)
        op = assemble_channel(
            realize(spec, 0, block_len=64, n_blocks=2), max_dense_len=100
        )
        with pytest.raises(MemoryBudgetError):
            op.dense()

    def test_energy_preservation_interior(self):
        spec = ChannelSpec((PathSpec(delay=3.4, gain=1.0 + 0.0j),), 4.0)
        op = assemble_channel(
            realize(spec, 0, block_len=512, n_blocks=4), half_len=None,
            max_dense_len=0,
        )
        rng = np.random.default_rng(11)
        x = (rng.standard_normal(2048) + 1j * rng.standard_normal(2048)) / np.sqrt(2)
        y = op.apply(x)
        interior = y[128:-128]
        p_in = np.mean(np.abs(x[128:-128]) ** 2)
        p_out = np.mean(np.abs(interior) ** 2)
        assert abs(p_out / p_in - 1.0) < 0.01

    def test_block_matches_dense_slice(self):
        real = two_path_realization(block_len=8, n_blocks=3)
        op = assemble_channel(real, half_len=None)
        h = op.dense()
        for l in range(3):
            for lp in range(3):
                blk = block_submatrix(op, l, lp)
                assert np.max(np.abs(blk - h[l * 8:(l + 1) * 8, lp * 8:(lp + 1) * 8])) <= 1e-12

    def test_block_out_of_range(self):
        op = assemble_channel(two_path_realization())
        with pytest.raises(ParameterError):
            op.block(0, 5)

    def test_integer_taps_with_prefix_clear_after_removal(self):
        # integer-delay taps only reach rows below the prefix length of the
        # following block, so the receiver-visible part of off-diagonal
        # blocks is exactly zero
        spec = exp_profile_spec(0.5, np.arange(0.0, 4.0), max_delay=4.0)
        g = 4
        op = assemble_channel(realize(spec, 3, block_len=12 + g, n_blocks=3))
        blk = op.block(1, 0)
        assert np.array_equal(blk[g:, :], np.zeros((12, 12 + g)))


class TestProfiles:
    def test_exp_profile_gain_magnitudes(self):
        real = exp_profile_channel(0.5, np.arange(0.0, 3.0, 0.5), seed=9)
        mags = np.abs(real.drawn_gains)
        assert np.allclose(mags, np.exp(-0.5 * np.arange(0.0, 3.0, 0.5)), atol=1e-12)

    def test_seed_reproducibility_bit_exact(self):
        a = exp_profile_channel(0.05, np.arange(0.0, 5.0, 0.1), seed=42)
        b = exp_profile_channel(0.05, np.arange(0.0, 5.0, 0.1), seed=42)
        assert np.array_equal(a.drawn_gains, b.drawn_gains)
        c = exp_profile_channel(0.05, np.arange(0.0, 5.0, 0.1), seed=43)
        assert not np.array_equal(a.drawn_gains, c.drawn_gains)

    def test_builtin_channels(self):
        mild = mild_channel_spec()
        severe = severe_channel_spec()
        integer = integer_channel_spec()
        assert len(mild.paths) == 151 and mild.max_delay == 16.0
        assert severe.paths[-1].power == pytest.approx(np.exp(-0.1 * 15.0))
        assert len(integer.paths) == 16
        assert all(float(p.delay).is_integer() for p in integer.paths)
        assert prefix_length_for(mild) == 16

    def test_cdlc_scaling(self):
        spec = cdlc_channel_spec(1000.0)
        assert spec.max_delay == pytest.approx(8.6523e-6 * 1.92e6, rel=1e-6)
        assert sum(p.power for p in spec.paths) == pytest.approx(1.0, abs=1e-12)
        assert prefix_length_for(spec) == 17
        assert prefix_length_for(cdlc_channel_spec(200.0)) == 4

    def test_builtin_lookup(self):
        assert builtin_channel_spec("mild").name == "mild"
        with pytest.raises(ParameterError):
            builtin_channel_spec("nonsense")

    def test_fixed_gain_passthrough(self):
        spec = ChannelSpec((PathSpec(delay=1.0, gain=0.3 - 0.4j),), 1.0)
        real = realize(spec, 17)
        assert real.drawn_gains[0] == 0.3 - 0.4j

    def test_gain_validation(self):
        with pytest.raises(ParameterError):
            PathSpec(delay=1.0)
        with pytest.raises(ParameterError):
            PathSpec(delay=1.0, gain=1.0 + 0j, gain_power=1.0)
        with pytest.raises(ParameterError):
            PathSpec(delay=-0.1, gain=1.0 + 0j)
        with pytest.raises(ParameterError):
            ChannelSpec((PathSpec(delay=2.0, gain=1.0 + 0j),), max_delay=1.0)

    def test_profile_file_roundtrip(self, tmp_path):
        path = tmp_path / "chan.txt"
        path.write_text(
            "# test profile\n"
            "name: bumpy\n"
            "delays_samples: [0, 1.5, 3.25]\n"
            "powers_db: [0, -3, -10]\n"
            "doppler: 0\n"
            "seed: 5\n"
            "max_delay: 4\n"
        )
        spec, seed = load_channel_profile(path)
        assert seed == 5
        assert spec.name == "bumpy"
        assert np.allclose(spec.delays, [0.0, 1.5, 3.25])
        assert np.allclose(spec.powers, [1.0, 10 ** -0.3, 0.1])
        a = realize(spec, seed)
        b = realize(spec, seed)
        assert np.array_equal(a.drawn_gains, b.drawn_gains)

    def test_profile_file_with_decay_range(self, tmp_path):
        path = tmp_path / "chan.txt"
        path.write_text("delays_samples: 0:0.5:2\ndecay: 0.5\n")
        spec, seed = load_channel_profile(path)
        assert seed is None
        assert np.allclose(spec.delays, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert np.allclose(spec.powers, np.exp(-1.0 * spec.delays))

    def test_profile_missing_fields(self, tmp_path):
        path = tmp_path / "chan.txt"
        path.write_text("delays_samples: [0, 1]\n")
        with pytest.raises(ParameterError):
            load_channel_profile(path)

    def test_realization_gain_count_checked(self):
        spec = ChannelSpec((PathSpec(delay=0.0, gain=1.0 + 0j),), 0.0)
        with pytest.raises(ParameterError):
            ChannelRealization(spec=spec, drawn_gains=np.ones(2, dtype=complex))
