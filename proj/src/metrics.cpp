#include "fpm/metrics.hpp"

#include <cmath>

namespace fpm {

ComplexField band_limit(const ComplexField& field, double na, const OpticalConfig& cfg) {
    const int n = int(field.rows());
    if (field.cols() != n) throw DataError("band_limit expects a square field");
    // the HR grid shares its frequency step with the LR grid
    const double dk = 1.0 / (cfg.tile_size * cfg.dx_obj());
    const double radius_px = (na / cfg.wavelength) / dk;
    ComplexField spec = fft2(field);
    const int c = n / 2;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::hypot(double(i - c), double(j - c)) > radius_px) spec(i, j) = Complex(0, 0);
    return ifft2(spec);
}

Complex global_alignment(const ComplexField& recon, const ComplexField& truth) {
    // c = <truth, recon> / <recon, recon>
    Complex num(0, 0);
    double den = 0.0;
    for (Eigen::Index j = 0; j < recon.cols(); ++j) {
        for (Eigen::Index i = 0; i < recon.rows(); ++i) {
            num += truth(i, j) * std::conj(recon(i, j));
            den += std::norm(recon(i, j));
        }
    }
    if (den <= 0) throw DataError("global_alignment: zero reconstruction");
    return num / den;
}

double amplitude_rmse(const ComplexField& a, const ComplexField& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double d = std::abs(a(i, j)) - std::abs(b(i, j));
            sum += d * d;
        }
    return std::sqrt(sum / double(a.size()));
}

double phase_rmse(const ComplexField& a, const ComplexField& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DataError("dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            double d = std::arg(a(i, j)) - std::arg(b(i, j));
            while (d > M_PI) d -= 2 * M_PI;
            while (d < -M_PI) d += 2 * M_PI;
            sum += d * d;
        }
    return std::sqrt(sum / double(a.size()));
}

double seam_phase_jump(const ComplexField& field, int seam, bool vertical_seam) {
    if (seam < 1) throw DataError("seam index out of range");
    double sum = 0.0;
    Eigen::Index count = 0;
    if (vertical_seam) {
        if (seam >= field.cols()) throw DataError("seam index out of range");
        for (Eigen::Index i = 0; i < field.rows(); ++i) {
            double d = std::arg(field(i, seam)) - std::arg(field(i, seam - 1));
            while (d > M_PI) d -= 2 * M_PI;
            while (d < -M_PI) d += 2 * M_PI;
            sum += std::abs(d);
            ++count;
        }
    } else {
        if (seam >= field.rows()) throw DataError("seam index out of range");
        for (Eigen::Index j = 0; j < field.cols(); ++j) {
            double d = std::arg(field(seam, j)) - std::arg(field(seam - 1, j));
            while (d > M_PI) d -= 2 * M_PI;
            while (d < -M_PI) d += 2 * M_PI;
            sum += std::abs(d);
            ++count;
        }
    }
    return sum / double(count);
}

double sharpness(const RealField& amplitude) {
    double energy = 0.0;
    for (Eigen::Index i = 0; i + 1 < amplitude.rows(); ++i)
        for (Eigen::Index j = 0; j + 1 < amplitude.cols(); ++j) {
            const double gx = amplitude(i, j + 1) - amplitude(i, j);
            const double gy = amplitude(i + 1, j) - amplitude(i, j);
            energy += gx * gx + gy * gy;
        }
    const double mean = amplitude.mean();
    return mean > 0 ? energy / (mean * mean) : 0.0;
}

double defocus_search(const FrameSet& frames, int x0, int y0, const OpticalConfig& cfg,
                      const std::vector<double>& z_candidates_um) {
    if (z_candidates_um.empty()) throw ConfigError("empty defocus candidate list");
    const Frame* f = frames.find(cfg.center_led);
    if (!f) throw DataError("defocus search needs the on-axis frame");
    const int n = cfg.tile_size;
    if (y0 + n > f->image.rows() || x0 + n > f->image.cols())
        throw DataError("tile extends past frame bounds");
    RealField amp = f->image.block(y0, x0, n, n).cast<double>().sqrt();
    ComplexField spec = fft2(amp.cast<Complex>());
    double best_z = z_candidates_um.front(), best_s = -1.0;
    for (double z : z_candidates_um) {
        Pupil p = build_pupil(cfg, n, z);
        // conjugate pupil phase refocuses the recorded field by -z
        ComplexField refocused = ifft2(ComplexField(spec * p.values.conjugate()));
        const double s = sharpness(refocused.abs());
        if (s > best_s) {
            best_s = s;
            best_z = z;
        }
    }
    return best_z;
}

} // namespace fpm
