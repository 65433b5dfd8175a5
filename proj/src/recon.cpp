#include "fpm/recon.hpp"

#include <chrono>
#include <cmath>
#include <iostream>

namespace fpm {

UpdateOrder update_order_from_string(const std::string& s) {
    if (s == "spiral") return UpdateOrder::Spiral;
    if (s == "raster") return UpdateOrder::Raster;
    throw ConfigError("unknown update order: " + s);
}

std::vector<std::pair<int, int>> sequence_offsets(UpdateOrder order, int rows, int cols) {
    if (rows % 2 == 0 || cols % 2 == 0) throw ConfigError("scan dimensions must be odd");
    const int hr = rows / 2, hc = cols / 2;
    std::vector<std::pair<int, int>> out;
    out.reserve(size_t(rows) * cols);
    if (order == UpdateOrder::Raster) {
        for (int r = -hr; r <= hr; ++r)
            for (int c = -hc; c <= hc; ++c) out.emplace_back(r, c);
        return out;
    }
    // spiral: step lengths 1,1,2,2,3,3,... through +col, -row, -col, +row
    const int dirs[4][2] = {{0, 1}, {-1, 0}, {0, -1}, {1, 0}};
    int r = 0, c = 0, leg = 1, d = 0;
    out.emplace_back(0, 0);
    const size_t total = size_t(rows) * cols;
    while (out.size() < total) {
        for (int rep = 0; rep < 2 && out.size() < total; ++rep, d = (d + 1) % 4) {
            for (int s = 0; s < leg && out.size() < total; ++s) {
                r += dirs[d][0];
                c += dirs[d][1];
                if (std::abs(r) <= hr && std::abs(c) <= hc) out.emplace_back(r, c);
            }
        }
        ++leg;
    }
    return out;
}

LedSequence led_sequence(UpdateOrder order, const OpticalConfig& cfg) {
    LedSequence seq;
    for (auto [dr, dc] : sequence_offsets(order, cfg.led_scan_rows, cfg.led_scan_cols))
        seq.push_back({cfg.center_led.row + dr, cfg.center_led.col + dc});
    return seq;
}

std::pair<int, int> spectrum_offset_px(const WaveVector& wv, const OpticalConfig& cfg) {
    const double dk = 1.0 / (cfg.tile_size * cfg.dx_obj());
    return {int(std::lround(wv.fy / dk)), int(std::lround(wv.fx / dk))};
}

IntensityImage crop_frame(const IntensityImage& frame, const TileSpec& tile) {
    if (tile.y0 + tile.size > frame.rows() || tile.x0 + tile.size > frame.cols())
        throw DataError("tile extends past frame bounds");
    return frame.block(tile.y0, tile.x0, tile.size, tile.size);
}

SpectrumCanvas init_canvas(const FrameSet& frames, const TileSpec& tile,
                           const OpticalConfig& cfg) {
    const Frame* f = frames.find(cfg.center_led);
    if (!f) {
        std::cerr << "fpm: warning: on-axis frame missing, initializing from brightest frame\n";
        double best = -1.0;
        for (const auto& fr : frames.frames) {
            const double mean = fr.image.cast<double>().mean();
            if (mean > best) {
                best = mean;
                f = &fr;
            }
        }
        if (!f) throw DataError("empty frame set");
    }
    IntensityImage crop = crop_frame(f->image, tile);
    RealField amp = crop.cast<double>().sqrt();
    RealField amp_hr = upsample_bilinear(amp, cfg.upsample);
    SpectrumCanvas canvas;
    canvas.cfg = cfg;
    // 1/upsample^2 keeps the canvas consistent with the LR inverse-transform
    // normalization used during sub-block extraction
    const double inv = 1.0 / (double(cfg.upsample) * cfg.upsample);
    canvas.spectrum = fft2(amp_hr.cast<Complex>()) * inv;
    return canvas;
}

ComplexField canvas_to_field(const SpectrumCanvas& canvas, int fft_threads) {
    const double up2 = double(canvas.cfg.upsample) * canvas.cfg.upsample;
    return ifft2(canvas.spectrum, fft_threads) * up2;
}

double update_step(SpectrumCanvas& canvas, const RealField& intensity, const WaveVector& wv,
                   const Pupil& pupil, int fft_threads) {
    const int n = pupil.grid;
    if (intensity.rows() != n || intensity.cols() != n)
        throw DataError("frame side must equal pupil grid");
    const int hr = canvas.size();
    auto [oy, ox] = spectrum_offset_px(wv, canvas.cfg);
    const int r0 = hr / 2 + oy - n / 2;
    const int c0 = hr / 2 + ox - n / 2;
    if (r0 < 0 || c0 < 0 || r0 + n > hr || c0 + n > hr)
        throw DataError("spectrum offset out of canvas bounds");

    // touch only pixels inside the pupil disk; concurrent updates with
    // disjoint disks then never race
    ComplexField block = ComplexField::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (pupil.values(i, j) != Complex(0, 0))
                block(i, j) = canvas.spectrum(r0 + i, c0 + j) * pupil.values(i, j);

    ComplexField e = ifft2(block, fft_threads);

    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double meas = std::sqrt(intensity(i, j));
            const double mag = std::abs(e(i, j));
            num += (mag - meas) * (mag - meas);
            den += intensity(i, j);
            e(i, j) = mag > 0 ? e(i, j) * (meas / mag) : Complex(meas, 0.0);
        }
    }

    ComplexField corrected = fft2(e, fft_threads);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (pupil.values(i, j) != Complex(0, 0))
                canvas.spectrum(r0 + i, c0 + j) = corrected(i, j) * std::conj(pupil.values(i, j));

    canvas.updated_offsets.emplace_back(oy, ox);
    return den > 0 ? num / den : 0.0;
}

double update_step(SpectrumCanvas& canvas, const IntensityImage& frame, const WaveVector& wv,
                   const Pupil& pupil, int fft_threads) {
    return update_step(canvas, RealField(frame.cast<double>()), wv, pupil, fft_threads);
}

ReconResult reconstruct_tile(const FrameSet& frames, const TileSpec& tile,
                             const OpticalConfig& cfg, int iters, const LedSequence& seq,
                             int fft_threads) {
    if (iters < 1) throw ConfigError("iters must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<RealField> crops;
    std::vector<WaveVector> wvs;
    crops.reserve(seq.size());
    for (const auto& led : seq) {
        const Frame* f = frames.find(led);
        if (!f)
            throw DataError("missing frame for LED (" + std::to_string(led.row) + "," +
                            std::to_string(led.col) + ")");
        crops.push_back(crop_frame(f->image, tile).cast<double>());
        wvs.push_back(tile.wavevectors.at(led));
    }
    Pupil pupil = build_pupil(cfg, cfg.tile_size, tile.defocus_um);
    SpectrumCanvas canvas = init_canvas(frames, tile, cfg);

    ReconResult res;
    for (int pass = 0; pass < iters; ++pass) {
        double sum = 0.0;
        for (size_t k = 0; k < seq.size(); ++k)
            sum += update_step(canvas, crops[k], wvs[k], pupil, fft_threads);
        res.metrics.pass_mean_residual.push_back(sum / double(seq.size()));
    }
    res.hr = canvas_to_field(canvas, fft_threads);
    res.metrics.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace fpm
