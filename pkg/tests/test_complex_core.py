import json
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graf import complex_core as cc
from graf.errors import InvalidArgumentError

from conftest import crandn


def literal_dft(x):
    n = len(x)
    return np.array([sum(x[t] * np.exp(-2j * np.pi * k * t / n) for t in range(n)) for k in range(n)])


def rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


@pytest.mark.parametrize(
    "x, expected",
    [
        ([1, 0, 0, 0], [1, 1, 1, 1]),
        ([1, 1, 1, 1], [4, 0, 0, 0]),
        ([1, 1j, -1, -1j], [0, 4, 0, 0]),
    ],
)
def test_fft_examples(fft_backend, x, expected):
    np.testing.assert_allclose(cc.fft(x), expected, atol=1e-14)


@pytest.mark.parametrize(
    "X, expected",
    [([4, 0, 0, 0], [1, 1, 1, 1]), ([1, 1, 1, 1], [1, 0, 0, 0])],
)
def test_ifft_examples(fft_backend, X, expected):
    np.testing.assert_allclose(cc.ifft(X), expected, atol=1e-15)


def test_round_trip(fft_backend, rng):
    x = crandn(rng, 8)
    assert rel(cc.ifft(cc.fft(x)), x) <= 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 12, 13, 16, 64])
def test_fft_matches_literal_sum(fft_backend, rng, n):
    x = crandn(rng, n)
    assert rel(cc.fft(x), literal_dft(x)) <= 1e-12


def test_backends_agree_rowwise(rng):
    x = crandn(rng, 32, 256)
    assert rel(cc.fft_radix2(x), np.fft.fft(x, axis=-1)) <= 1e-12


@pytest.mark.parametrize("fn", [cc.fft, cc.ifft, cc.fft_radix2])
def test_empty_input_rejected(fn):
    with pytest.raises(InvalidArgumentError):
        fn([])


def test_unknown_backend():
    with pytest.raises(InvalidArgumentError):
        cc.set_backend("fftw")


def test_parseval_many(fft_backend, rng):
    worst = 0.0
    for _ in range(120):
        n = int(rng.integers(2, 65))
        x = crandn(rng, n)
        lhs = np.sum(np.abs(cc.fft(x)) ** 2)
        rhs = n * np.sum(np.abs(x) ** 2)
        worst = max(worst, abs(lhs - rhs) / rhs)
    assert worst <= 1e-12


@settings(max_examples=50, deadline=None)
@given(
    n=st.integers(2, 64),
    seed=st.integers(0, 2**32 - 1),
    a=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
    b=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
)
def test_linearity(n, seed, a, b):
    r = np.random.default_rng(seed)
    x, y = crandn(r, n), crandn(r, n)
    lhs = cc.fft(a * x + b * y)
    rhs = a * cc.fft(x) + b * cc.fft(y)
    # relative to the term sizes, since a*X + b*Y may cancel
    scale = abs(a) * np.max(np.abs(cc.fft(x))) + abs(b) * np.max(np.abs(cc.fft(y))) + 1e-300
    assert np.max(np.abs(lhs - rhs)) / scale <= 1e-12


@settings(max_examples=50, deadline=None)
@given(n=st.integers(2, 64), k=st.integers(-200, 200), seed=st.integers(0, 2**32 - 1))
def test_shift_theorem(n, k, seed):
    x = crandn(np.random.default_rng(seed), n)
    m = np.arange(n)
    expected = cc.fft(x) * np.exp(-2j * np.pi * k * m / n)
    assert rel(cc.fft(cc.circshift(x, k)), expected) <= 1e-12


def test_circshift_examples():
    x = np.array(["a", "b", "c", "d"])
    assert list(cc.circshift(x, 1)) == ["d", "a", "b", "c"]
    assert list(cc.circshift(x, 0)) == list(x)
    assert list(cc.circshift(x, 4)) == list(x)
    assert list(cc.circshift(x, -1)) == ["b", "c", "d", "a"]


def test_fftshift2_examples(rng):
    m = np.array([["a", "b"], ["c", "d"]])
    assert cc.fftshift2(m).tolist() == [["d", "c"], ["b", "a"]]
    r = rng.normal(size=(6, 6))
    np.testing.assert_array_equal(cc.fftshift2(cc.fftshift2(r)), r)
    e = np.zeros((4, 4))
    e[0, 0] = 1
    shifted = cc.fftshift2(e)
    assert shifted[2, 2] == 1 and shifted.sum() == 1


def test_fftshift2_odd_inverse(rng):
    r = rng.normal(size=(5, 5))
    np.testing.assert_array_equal(cc.ifftshift2(cc.fftshift2(r)), r)
    e = np.zeros((5, 5))
    e[0, 0] = 1
    assert cc.fftshift2(e)[2, 2] == 1


def test_fftshift2_non_square():
    with pytest.raises(InvalidArgumentError):
        cc.fftshift2(np.zeros((2, 3)))


def test_centered_axis():
    assert cc.centered_axis(4).tolist() == [-2, -1, 0, 1]
    assert cc.centered_axis(5).tolist() == [-2, -1, 0, 1, 2]


def test_no_input_mutation(rng):
    x = crandn(rng, 16)
    before = x.copy()
    cc.fft(x), cc.ifft(x), cc.circshift(x, 3)
    np.testing.assert_array_equal(x, before)


def test_scaling_smoke():
    # informational: O(N log N) means doubling N should cost well under 3x
    times = {}
    for n in (2**14, 2**15):
        x = np.ones(n, dtype=complex)
        cc.fft_radix2(x)
        t = time.perf_counter()
        for _ in range(5):
            cc.fft_radix2(x)
        times[n] = time.perf_counter() - t
    print(f"radix-2 time ratio 2^15/2^14 = {times[2**15] / times[2**14]:.2f}")


def test_waveform_csv_round_trip(tmp_path, rng):
    x = crandn(rng, 17) * 1e3
    path = cc.write_waveform_csv(tmp_path / "w.csv", x)
    assert path.read_text().splitlines()[0] == "re,im"
    np.testing.assert_array_equal(cc.read_waveform_csv(path), x)
    cc.write_waveform_csv(tmp_path / "nohead.csv", x, header=False)
    np.testing.assert_array_equal(cc.read_waveform_csv(tmp_path / "nohead.csv"), x)


def test_waveform_csv_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("re,im\n1,2,3\n")
    with pytest.raises(InvalidArgumentError):
        cc.read_waveform_csv(bad)
    bad.write_text("re,im\n")
    with pytest.raises(InvalidArgumentError):
        cc.read_waveform_csv(bad)
    bad.write_text("nan,0\n")
    with pytest.raises(InvalidArgumentError):
        cc.read_waveform_csv(bad)
    with pytest.raises(OSError, match="missing.csv"):
        cc.read_waveform_csv(tmp_path / "missing.csv")


def test_matrix_csv_round_trip(tmp_path, rng):
    m = rng.normal(size=(5, 5)) ** 2
    path = cc.write_matrix_csv(tmp_path / "chi.csv", m, layout="shifted")
    meta = json.loads((tmp_path / "chi.csv.json").read_text())
    assert meta == {"n": 5, "layout": "shifted"}
    back, meta2 = cc.read_matrix_csv(path)
    np.testing.assert_array_equal(back, m)
    assert meta2 == meta
