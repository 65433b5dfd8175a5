#pragma once

#include <vector>

#include "fpm/forward.hpp"
#include "fpm/optics.hpp"
#include "fpm/tiles.hpp"

namespace fpm {

using LedSequence = std::vector<LedIndex>;

enum class UpdateOrder { Spiral, Raster };

UpdateOrder update_order_from_string(const std::string& s);

// Center-relative (row, col) offsets over an odd rows x cols scan grid.
// Raster is row-major; spiral starts at the center, first step +col, turning
// counterclockwise ring by ring.
std::vector<std::pair<int, int>> sequence_offsets(UpdateOrder order, int rows, int cols);

// Absolute LED indices for the configured scan sub-grid.
LedSequence led_sequence(UpdateOrder order, const OpticalConfig& cfg);

// HR Fourier-domain estimate a tile's spectrum updates are written into.
struct SpectrumCanvas {
    ComplexField spectrum;
    OpticalConfig cfg;
    std::vector<std::pair<int, int>> updated_offsets; // (row, col) disk centers

    int size() const { return int(spectrum.rows()); }
};

// (row, col) pixel offset of a wavevector's disk center on the HR grid.
std::pair<int, int> spectrum_offset_px(const WaveVector& wv, const OpticalConfig& cfg);

// Canvas from the bilinearly upsampled on-axis amplitude with zero phase.
// Falls back to the brightest frame when the on-axis LED is missing. The
// spectrum carries a 1/upsample^2 factor so LR sub-block extraction sees
// measurement-scale fields; canvas_to_field undoes it.
SpectrumCanvas init_canvas(const FrameSet& frames, const TileSpec& tile, const OpticalConfig& cfg);

// Final HR complex image of a canvas, in measurement (sqrt-count) units.
ComplexField canvas_to_field(const SpectrumCanvas& canvas, int fft_threads = 1);

// One alternating-projection step: project the canvas through the pupil to
// the LR plane, replace the amplitude with the measurement, and write the
// corrected spectrum back inside the pupil support disk. Returns the
// amplitude residual sum(| |e| - sqrt(frame) |^2) / sum(frame).
double update_step(SpectrumCanvas& canvas, const RealField& intensity, const WaveVector& wv,
                   const Pupil& pupil, int fft_threads = 1);
double update_step(SpectrumCanvas& canvas, const IntensityImage& frame, const WaveVector& wv,
                   const Pupil& pupil, int fft_threads = 1);

struct ReconMetrics {
    std::vector<double> pass_mean_residual;
    double wall_s = 0.0;
};

struct ReconResult {
    ComplexField hr;
    ReconMetrics metrics;
};

// iters full passes of update_step in seq order; hr = ifft2(canvas).
ReconResult reconstruct_tile(const FrameSet& frames, const TileSpec& tile,
                             const OpticalConfig& cfg, int iters, const LedSequence& seq,
                             int fft_threads = 1);

// LR crop of a full-FOV frame at the tile origin.
IntensityImage crop_frame(const IntensityImage& frame, const TileSpec& tile);

} // namespace fpm
