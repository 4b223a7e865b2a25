#pragma once

#include <complex>
#include <vector>

namespace dsrf::analysis {

using Spectrum = std::vector<std::complex<double>>;

/// Forward 2-D DFT of a real row-major h x w array (unnormalized).
Spectrum fft2(const std::vector<double>& in, int h, int w);

/// Inverse 2-D DFT scaled by 1/(h*w); returns the real part.
std::vector<double> ifft2_real(const Spectrum& in, int h, int w);

/// Moves the zero-frequency (or zero-lag) sample to (h/2, w/2).
std::vector<double> fftshift(const std::vector<double>& in, int h, int w);

/// Periodic Hann window w[n] = 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> hann(int n);

}  // namespace dsrf::analysis
