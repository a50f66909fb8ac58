#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace fbmlab {

// In-place radix-2 FFT; size must be a power of two.  Only used by the
// circulant-embedding sampler, where sizes are 2^k by construction.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

bool is_power_of_two(std::size_t n);

}  // namespace fbmlab
