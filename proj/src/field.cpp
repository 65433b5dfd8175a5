#include "fpm/field.hpp"

#include <stdexcept>
#include <thread>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace fpm {

namespace {

enum class Dir { Forward, Inverse };

// Runs 1D transforms along every column of `m` in place. Eigen::FFT objects
// carry plan caches and are not shareable across threads, so each worker owns
// one.
void fft_columns(ComplexField& m, Dir dir, int threads) {
    const Eigen::Index rows = m.rows();
    const Eigen::Index cols = m.cols();
    auto work = [&](Eigen::Index c0, Eigen::Index c1) {
        Eigen::FFT<double> fft;
        std::vector<Complex> in(static_cast<size_t>(rows)), out(static_cast<size_t>(rows));
        for (Eigen::Index c = c0; c < c1; ++c) {
            for (Eigen::Index r = 0; r < rows; ++r) in[static_cast<size_t>(r)] = m(r, c);
            if (dir == Dir::Forward)
                fft.fwd(out, in);
            else
                fft.inv(out, in);
            for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = out[static_cast<size_t>(r)];
        }
    };
    if (threads <= 1 || cols < 2 * threads) {
        work(0, cols);
        return;
    }
    std::vector<std::thread> pool;
    Eigen::Index chunk = (cols + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        Eigen::Index c0 = t * chunk;
        Eigen::Index c1 = std::min(cols, c0 + chunk);
        if (c0 >= c1) break;
        pool.emplace_back(work, c0, c1);
    }
    for (auto& th : pool) th.join();
}

ComplexField fft2_impl(const ComplexField& in, Dir dir, int threads) {
    // shift so pixel (rows/2, cols/2) becomes the origin, transform, shift back
    ComplexField m = ifftshift(in);
    fft_columns(m, dir, threads);
    ComplexField mt = m.transpose();
    fft_columns(mt, dir, threads);
    m = mt.transpose();
    return fftshift(m);
}

} // namespace

ComplexField fft2(const ComplexField& in, int threads) {
    return fft2_impl(in, Dir::Forward, threads);
}

ComplexField ifft2(const ComplexField& in, int threads) {
    // Eigen::FFT's inv already divides by N per axis
    return fft2_impl(in, Dir::Inverse, threads);
}

ComplexField fftshift(const ComplexField& in) {
    const Eigen::Index r = in.rows(), c = in.cols();
    const Eigen::Index rh = r / 2, ch = c / 2;
    ComplexField out(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            out((i + rh) % r, (j + ch) % c) = in(i, j);
    return out;
}

ComplexField ifftshift(const ComplexField& in) {
    const Eigen::Index r = in.rows(), c = in.cols();
    const Eigen::Index rh = (r + 1) / 2, ch = (c + 1) / 2;
    ComplexField out(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            out((i + rh) % r, (j + ch) % c) = in(i, j);
    return out;
}

RealField upsample_bilinear(const RealField& in, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
    const Eigen::Index r = in.rows(), c = in.cols();
    const Eigen::Index R = r * factor, C = c * factor;
    RealField out(R, C);
    for (Eigen::Index i = 0; i < R; ++i) {
        // map output pixel center back to input coordinates
        double y = (i + 0.5) / factor - 0.5;
        Eigen::Index y0 = static_cast<Eigen::Index>(std::floor(y));
        double wy = y - y0;
        Eigen::Index y1 = std::min(y0 + 1, r - 1);
        y0 = std::max<Eigen::Index>(y0, 0);
        for (Eigen::Index j = 0; j < C; ++j) {
            double x = (j + 0.5) / factor - 0.5;
            Eigen::Index x0 = static_cast<Eigen::Index>(std::floor(x));
            double wx = x - x0;
            Eigen::Index x1 = std::min(x0 + 1, c - 1);
            x0 = std::max<Eigen::Index>(x0, 0);
            out(i, j) = (1 - wy) * ((1 - wx) * in(y0, x0) + wx * in(y0, x1)) +
                        wy * ((1 - wx) * in(y1, x0) + wx * in(y1, x1));
        }
    }
    return out;
}

bool all_finite(const ComplexField& f) {
    for (Eigen::Index j = 0; j < f.cols(); ++j)
        for (Eigen::Index i = 0; i < f.rows(); ++i)
            if (!std::isfinite(f(i, j).real()) || !std::isfinite(f(i, j).imag())) return false;
    return true;
}

} // namespace fpm
