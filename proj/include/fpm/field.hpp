#pragma once

#include <complex>
#include <Eigen/Dense>

namespace fpm {

using Complex = std::complex<double>;

// 2D complex array, the universal currency: objects, spectra, pupils, HR tiles.
using ComplexField = Eigen::Array<Complex, Eigen::Dynamic, Eigen::Dynamic>;
using RealField = Eigen::ArrayXXd;
using IntensityImage = Eigen::Array<uint16_t, Eigen::Dynamic, Eigen::Dynamic>;

// Centered-spectrum convention: DC sits at (rows/2, cols/2) in both domains.
// Forward transform is unscaled, inverse carries the 1/(rows*cols) factor, so
// ifft2(fft2(x)) == x to machine precision.
ComplexField fft2(const ComplexField& in, int threads = 1);
ComplexField ifft2(const ComplexField& in, int threads = 1);

ComplexField fftshift(const ComplexField& in);
ComplexField ifftshift(const ComplexField& in);

// Bilinear upsample of a real image onto a factor-times-larger grid.
RealField upsample_bilinear(const RealField& in, int factor);

bool all_finite(const ComplexField& f);

} // namespace fpm
