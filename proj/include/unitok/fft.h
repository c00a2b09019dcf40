#pragma once

namespace unitok::fft {

bool is_pow2(int n);

// In-place radix-2 complex FFT over interleaved (re, im) pairs.
// Forward: X_k = sum_n x_n e^{-2*pi*i*k*n/N}. Inverse is unnormalized
// (callers divide by N). Plans (twiddles + bit-reversal) are cached per size
// behind a mutex; transforms themselves are lock-free and thread-safe.
void transform(float* data, int n, bool inverse);

}  // namespace unitok::fft
