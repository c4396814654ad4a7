import math

import numpy as np
import pytest

from coughtriage.dsp import (dct2_orthonormal, fft_power, hamming_normalized,
                             hz_to_mel, mel_filterbank, mel_to_hz)
from coughtriage.errors import InvalidArgument

from oracles import dct2_orthonormal_matrix, direct_dft_magnitudes


class TestHammingNormalized:
    def test_degenerate_length_one(self):
        np.testing.assert_array_equal(hamming_normalized(1), [1.0])

    def test_length_three_closed_form(self):
        w = hamming_normalized(3)
        np.testing.assert_allclose(w, np.array([0.08, 1.0, 0.08]) / 1.16,
                                   atol=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 10, 800, 801])
    def test_unit_sum_and_symmetry(self, n):
        w = hamming_normalized(n)
        assert abs(w.sum() - 1.0) <= 1e-12
        np.testing.assert_allclose(w, w[::-1], rtol=0, atol=1e-16)
        assert np.all(w > 0)

    def test_zero_length_rejected(self):
        with pytest.raises(InvalidArgument):
            hamming_normalized(0)


class TestFFTPower:
    def test_zero_frame(self):
        spec = fft_power(np.zeros(800))
        assert spec.magnitudes.shape == (513,)
        np.testing.assert_array_equal(spec.magnitudes, 0.0)
        assert spec.bin_width_hz == 16000 / 1024

    def test_bin_aligned_cosine(self):
        t = np.arange(1024)
        frame = np.cos(2 * np.pi * 4 * t / 1024)
        spec = fft_power(frame)
        assert spec.magnitudes.argmax() == 4
        assert abs(spec.magnitudes[4] - 512.0) < 1e-6

    def test_matches_direct_dft(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(100):
            frame = rng.normal(size=1024)
            got = fft_power(frame).magnitudes
            want = direct_dft_magnitudes(frame, 1024)
            worst = max(worst, float(np.max(np.abs(got - want))))
        assert worst < 1e-9

    def test_zero_padding_matches_oracle(self):
        rng = np.random.default_rng(3)
        frame = rng.normal(size=800)
        np.testing.assert_allclose(fft_power(frame).magnitudes,
                                   direct_dft_magnitudes(frame, 1024),
                                   rtol=0, atol=1e-9)

    def test_frame_longer_than_nfft_rejected(self):
        with pytest.raises(InvalidArgument):
            fft_power(np.zeros(1025))

    def test_non_power_of_two_rejected(self):
        with pytest.raises(InvalidArgument):
            fft_power(np.zeros(100), n_fft=1000)

    def test_linearity_in_amplitude(self):
        rng = np.random.default_rng(5)
        frame = rng.normal(size=1024)
        base = fft_power(frame).magnitudes
        scaled = fft_power(2.5 * frame).magnitudes
        np.testing.assert_allclose(scaled, 2.5 * base, rtol=0, atol=1e-9)

    def test_parseval(self):
        rng = np.random.default_rng(6)
        frame = rng.normal(size=1024)
        full = np.abs(np.fft.fft(frame))
        time_energy = float(np.sum(frame ** 2))
        freq_energy = float(np.sum(full ** 2) / 1024)
        assert abs(time_energy - freq_energy) / time_energy < 1e-8
        # the one-sided magnitudes agree with the full spectrum's lower half
        np.testing.assert_allclose(fft_power(frame).magnitudes, full[:513],
                                   rtol=0, atol=1e-9)


class TestMelFilterbank:
    def test_mel_formula_anchor(self):
        assert abs(hz_to_mel(700.0) - 2595.0 * math.log10(2.0)) < 1e-9
        assert abs(hz_to_mel(700.0) - 781.17) < 5e-3
        assert abs(mel_to_hz(hz_to_mel(1234.5)) - 1234.5) < 1e-9

    def test_shape_and_center_range(self):
        fb = mel_filterbank()
        assert fb.weights.shape == (40, 513)
        assert fb.center_freqs_hz.shape == (40,)
        assert np.all(np.diff(fb.center_freqs_hz) > 0)
        assert fb.center_freqs_hz[0] > 0.0
        assert fb.center_freqs_hz[-1] < 8000.0

    def test_rows_are_triangles(self):
        fb = mel_filterbank()
        for row in fb.weights:
            assert np.all(row >= 0)
            assert row.max() > 0
            support = np.flatnonzero(row > 0)
            # single local maximum: rises then falls over the support
            diffs = np.diff(row[support])
            peak = row[support].argmax()
            assert np.all(diffs[:peak] > 0)
            assert np.all(diffs[peak:] < 0)

    def test_deterministic_construction(self):
        a = mel_filterbank()
        b = mel_filterbank()
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.center_freqs_hz, b.center_freqs_hz)

    def test_too_many_filters_rejected(self):
        with pytest.raises(InvalidArgument):
            mel_filterbank(n_filters=200, n_fft=256)

    def test_zero_filters_rejected(self):
        with pytest.raises(InvalidArgument):
            mel_filterbank(n_filters=0)


class TestDCT2Orthonormal:
    def test_constant_input(self):
        out = dct2_orthonormal(np.full(40, 3.25), n_out=13)
        assert abs(out[0] - 3.25 * math.sqrt(40)) < 1e-12
        np.testing.assert_allclose(out[1:], 0.0, atol=1e-12)

    def test_zero_vector(self):
        np.testing.assert_array_equal(dct2_orthonormal(np.zeros(40)), 0.0)

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(11)
        m = dct2_orthonormal_matrix(40)
        for _ in range(20):
            v = rng.normal(size=40)
            np.testing.assert_allclose(dct2_orthonormal(v, 40), m @ v,
                                       rtol=0, atol=1e-10)

    def test_energy_preserved(self):
        v = np.random.default_rng(12).normal(size=40)
        coeffs = dct2_orthonormal(v, 40)
        assert abs(np.sum(coeffs ** 2) - np.sum(v ** 2)) < 1e-10

    def test_transform_matrix_is_orthonormal(self):
        m = dct2_orthonormal_matrix(40)
        np.testing.assert_allclose(m @ m.T, np.eye(40), rtol=0, atol=1e-10)

    def test_inverse_reconstructs(self):
        v = np.random.default_rng(13).normal(size=40)
        m = dct2_orthonormal_matrix(40)
        np.testing.assert_allclose(m.T @ dct2_orthonormal(v, 40), v,
                                   rtol=0, atol=1e-10)

    def test_n_out_too_large_rejected(self):
        with pytest.raises(InvalidArgument):
            dct2_orthonormal(np.zeros(40), n_out=41)
