#include "fpm/forward.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace fpm {

const Frame* FrameSet::find(LedIndex led) const {
    for (const auto& f : frames)
        if (f.led == led) return &f;
    return nullptr;
}

ObjectKind object_kind_from_string(const std::string& s) {
    if (s == "bars") return ObjectKind::Bars;
    if (s == "phase-disk") return ObjectKind::PhaseDisk;
    if (s == "composite") return ObjectKind::Composite;
    throw ConfigError("unknown object kind: " + s);
}

std::vector<BarGroup> bar_groups(int size) {
    std::vector<BarGroup> groups;
    const int periods[] = {64, 32, 16, 8, 4};
    const int n = 5;
    const int band = size / n;
    for (int g = 0; g < n; ++g) {
        BarGroup grp;
        grp.period_px = periods[g];
        grp.row_begin = g * band + band / 4;
        grp.row_end = g * band + 3 * band / 4;
        // three bars of width p/2 separated by p/2 gaps, centered
        const int p = periods[g];
        const int start = size / 2 - (5 * p) / 4; // pattern spans 2.5 periods
        for (int b = 0; b < 3; ++b) grp.bar_centers.push_back(start + b * p + p / 4);
        for (int b = 0; b < 2; ++b) grp.gap_centers.push_back(start + b * p + (3 * p) / 4);
        groups.push_back(std::move(grp));
    }
    return groups;
}

namespace {

// sum of a few seeded low-frequency sinusoids, normalized into [-1, 1]
RealField smooth_texture(int size, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> phase_d(0.0, 2.0 * M_PI);
    std::uniform_int_distribution<int> freq_d(1, 5);
    std::uniform_real_distribution<double> amp_d(0.3, 1.0);
    const int terms = 6;
    std::vector<double> u(terms), v(terms), ph(terms), a(terms);
    double norm = 0.0;
    for (int k = 0; k < terms; ++k) {
        u[k] = freq_d(rng);
        v[k] = freq_d(rng);
        ph[k] = phase_d(rng);
        a[k] = amp_d(rng);
        norm += a[k];
    }
    RealField out(size, size);
    for (int i = 0; i < size; ++i) {
        for (int j = 0; j < size; ++j) {
            double s = 0.0;
            for (int k = 0; k < terms; ++k)
                s += a[k] * std::sin(2.0 * M_PI * (u[k] * j + v[k] * i) / size + ph[k]);
            out(i, j) = s / norm;
        }
    }
    return out;
}

} // namespace

ComplexField synth_object(ObjectKind kind, int size, uint64_t seed) {
    if (size < 256) throw ConfigError("object size must be >= 256");
    ComplexField obj(size, size);
    switch (kind) {
    case ObjectKind::PhaseDisk: {
        const double r = size / 8.0; // diameter size/4
        const double c = size / 2.0;
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j) {
                const bool inside = std::hypot(i - c, j - c) <= r;
                obj(i, j) = std::polar(1.0, inside ? M_PI / 2.0 : 0.0);
            }
        break;
    }
    case ObjectKind::Bars: {
        obj.setConstant(Complex(1.0, 0.0));
        for (const auto& g : bar_groups(size)) {
            const int p = g.period_px;
            const int start = size / 2 - (5 * p) / 4;
            for (int b = 0; b < 3; ++b) {
                const int x0 = start + b * p;
                for (int i = g.row_begin; i < g.row_end; ++i)
                    for (int j = x0; j < x0 + p / 2 && j < size; ++j)
                        obj(i, j) = Complex(0.1, 0.0);
            }
        }
        break;
    }
    case ObjectKind::Composite: {
        std::mt19937_64 rng(seed);
        RealField ta = smooth_texture(size, rng);
        RealField tp = smooth_texture(size, rng);
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j)
                obj(i, j) = std::polar(0.55 + 0.35 * ta(i, j), 1.2 * tp(i, j));
        break;
    }
    }
    return obj;
}

namespace {

std::pair<int, int> spectrum_offset(const WaveVector& wv, const OpticalConfig& cfg) {
    const double dk = 1.0 / (cfg.tile_size * cfg.dx_obj());
    return {int(std::lround(wv.fy / dk)), int(std::lround(wv.fx / dk))}; // (row, col)
}

} // namespace

RealField simulate_intensity(const ComplexField& object_hr, const WaveVector& wv,
                             const Pupil& pupil, const OpticalConfig& cfg) {
    const int hr = cfg.hr_size();
    if (object_hr.rows() != hr || object_hr.cols() != hr)
        throw DataError("object tile must be square with side tile_size*upsample");
    if (pupil.grid != cfg.tile_size) throw DataError("pupil grid must equal tile_size");
    const int n = cfg.tile_size;
    auto [oy, ox] = spectrum_offset(wv, cfg);
    const int r0 = hr / 2 + oy - n / 2;
    const int c0 = hr / 2 + ox - n / 2;
    if (r0 < 0 || c0 < 0 || r0 + n > hr || c0 + n > hr)
        throw DataError("illumination NA too high for upsample factor");
    ComplexField spectrum = fft2(object_hr);
    ComplexField block = spectrum.block(r0, c0, n, n) * pupil.values;
    ComplexField field = ifft2(block);
    return field.abs2();
}

double auto_scale(const ComplexField& object_hr, const Pupil& pupil, const OpticalConfig& cfg) {
    RealField on_axis = simulate_intensity(object_hr, WaveVector{0, 0}, pupil, cfg);
    const double peak = on_axis.maxCoeff();
    if (peak <= 0) throw DataError("on-axis frame is identically zero");
    return 0.8 * 65535.0 / peak;
}

IntensityImage quantize_frame(const RealField& intensity, double scale, const NoiseModel& noise,
                              uint64_t frame_index) {
    IntensityImage out(intensity.rows(), intensity.cols());
    std::mt19937_64 rng(noise.seed ^ (frame_index * 0x9E3779B97F4A7C15ULL + 1));
    for (Eigen::Index i = 0; i < intensity.rows(); ++i) {
        for (Eigen::Index j = 0; j < intensity.cols(); ++j) {
            double counts = intensity(i, j) * scale;
            if (noise.enabled) {
                const double mean = counts / 65535.0 * noise.photons;
                std::poisson_distribution<long long> pd(std::max(mean, 0.0));
                counts = double(pd(rng)) / noise.photons * 65535.0;
            }
            out(i, j) = uint16_t(std::clamp(std::lround(counts), 0L, 65535L));
        }
    }
    return out;
}

IntensityImage simulate_frame(const ComplexField& object_hr, const WaveVector& wv,
                              const Pupil& pupil, const OpticalConfig& cfg, double scale,
                              const NoiseModel& noise, uint64_t frame_index) {
    return quantize_frame(simulate_intensity(object_hr, wv, pupil, cfg), scale, noise, frame_index);
}

FrameSet simulate_dataset(const ComplexField& object_hr, const std::vector<LedIndex>& seq,
                          const OpticalConfig& cfg, const NoiseModel& noise, double defocus_um) {
    cfg.validate();
    const int up = cfg.upsample;
    if (object_hr.rows() % up != 0 || object_hr.cols() % up != 0)
        throw DataError("object dimensions must be a multiple of upsample");
    const int fov_h = int(object_hr.rows()) / up;
    const int fov_w = int(object_hr.cols()) / up;
    auto tiles = partition_tiles(fov_w, fov_h, cfg, defocus_um);
    auto xs = tile_origins(fov_w, cfg.tile_size, cfg.tile_overlap);
    auto ys = tile_origins(fov_h, cfg.tile_size, cfg.tile_overlap);

    // feathered assembly: each tile's patch ramps down linearly across the
    // shared overlap, so synthetic frames carry no artificial hard edges at
    // the assembly boundaries
    auto axis_weights = [&](const std::vector<int>& origins) {
        std::vector<std::vector<double>> w(origins.size(),
                                           std::vector<double>(size_t(cfg.tile_size), 1.0));
        for (size_t k = 0; k < origins.size(); ++k) {
            const int o = origins[k], n = cfg.tile_size;
            if (k > 0) {
                const int prev_end = origins[k - 1] + n;
                for (int x = o; x < std::min(prev_end, o + n); ++x)
                    w[k][size_t(x - o)] *= double(x - o + 1) / double(prev_end - o + 1);
            }
            if (k + 1 < origins.size()) {
                const int next = origins[k + 1];
                for (int x = std::max(next, o); x < o + n; ++x)
                    w[k][size_t(x - o)] *= double(o + n - x) / double(o + n - next + 1);
            }
        }
        return w;
    };
    auto wx = axis_weights(xs), wy = axis_weights(ys);

    std::vector<RealField> buffers(seq.size(), RealField::Zero(fov_h, fov_w));
    RealField wsum = RealField::Zero(fov_h, fov_w);

    const int n = cfg.tile_size;
    const double cutoff = cfg.objective_na / cfg.wavelength;
    const double inv_lam2 = 1.0 / (cfg.wavelength * cfg.wavelength);
    for (size_t ti = 0; ti < tiles.size(); ++ti) {
        const TileSpec& t = tiles[ti];
        const size_t col_idx = ti % xs.size(), row_idx = ti / xs.size();
        // guard bands (even, up to n/2 LR px per side) keep the crop's FFT
        // wraparound ringing out of the kept patch
        const int ml = std::min(n / 2, t.x0) & ~1, mr = std::min(n / 2, fov_w - t.x0 - n) & ~1;
        const int mt = std::min(n / 2, t.y0) & ~1, mb = std::min(n / 2, fov_h - t.y0 - n) & ~1;
        const int pw = n + ml + mr, ph = n + mt + mb;
        const int PW = pw * up, PH = ph * up;
        ComplexField crop = object_hr.block((t.y0 - mt) * up, (t.x0 - ml) * up, PH, PW);
        ComplexField spectrum = fft2(crop);
        const double dky = 1.0 / (ph * cfg.dx_obj()), dkx = 1.0 / (pw * cfg.dx_obj());
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                wsum(t.y0 + y, t.x0 + x) += wy[row_idx][size_t(y)] * wx[col_idx][size_t(x)];
        for (size_t li = 0; li < seq.size(); ++li) {
            const WaveVector wv = t.wavevectors.at(seq[li]);
            const int oy = int(std::lround(wv.fy / dky)), ox = int(std::lround(wv.fx / dkx));
            const int r0 = PH / 2 + oy - ph / 2, c0 = PW / 2 + ox - pw / 2;
            if (r0 < 0 || c0 < 0 || r0 + ph > PH || c0 + pw > PW)
                throw DataError("illumination NA too high for upsample factor");
            ComplexField block = ComplexField::Zero(ph, pw);
            for (int i = 0; i < ph; ++i) {
                for (int j = 0; j < pw; ++j) {
                    const double fy = (i - ph / 2) * dky, fx = (j - pw / 2) * dkx;
                    const double fr = std::hypot(fy, fx);
                    if (fr > cutoff) continue;
                    Complex ctf(1.0, 0.0);
                    if (defocus_um != 0.0) {
                        const double kz = std::sqrt(std::max(0.0, inv_lam2 - fr * fr));
                        ctf = std::polar(1.0, 2.0 * M_PI * defocus_um * kz);
                    }
                    block(i, j) = spectrum(r0 + i, c0 + j) * ctf;
                }
            }
            RealField patch = ifft2(block).abs2();
            for (int y = 0; y < n; ++y)
                for (int x = 0; x < n; ++x)
                    buffers[li](t.y0 + y, t.x0 + x) += wy[row_idx][size_t(y)] *
                                                       wx[col_idx][size_t(x)] *
                                                       patch(mt + y, ml + x);
        }
    }
    for (auto& b : buffers) b /= wsum;

    // anchor the gray scale to the brightest frame (on-axis when present)
    double peak = 0.0;
    for (size_t li = 0; li < seq.size(); ++li) {
        const bool on_axis = seq[li] == cfg.center_led;
        if (on_axis) {
            peak = buffers[li].maxCoeff();
            break;
        }
        peak = std::max(peak, buffers[li].maxCoeff());
    }
    if (peak <= 0) throw DataError("dataset is identically zero");
    const double scale = 0.8 * 65535.0 / peak;

    FrameSet fs;
    fs.cfg = cfg;
    const double step = cfg.acq_pattern_delay + cfg.acq_exposure;
    for (size_t li = 0; li < seq.size(); ++li) {
        Frame f;
        f.led = seq[li];
        f.image = quantize_frame(buffers[li], scale, noise, li);
        f.timestamp_s = double(li + 1) * step;
        fs.frames.push_back(std::move(f));
    }
    return fs;
}

} // namespace fpm
