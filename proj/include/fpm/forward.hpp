#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fpm/optics.hpp"
#include "fpm/tiles.hpp"

namespace fpm {

struct Frame {
    LedIndex led;
    IntensityImage image;
    double timestamp_s = 0.0;
};

// Acquired or simulated LR intensity stack with LED identities.
struct FrameSet {
    std::vector<Frame> frames;
    OpticalConfig cfg;

    const Frame* find(LedIndex led) const;
    int width() const { return frames.empty() ? 0 : int(frames.front().image.cols()); }
    int height() const { return frames.empty() ? 0 : int(frames.front().image.rows()); }
};

enum class ObjectKind { Bars, PhaseDisk, Composite };

ObjectKind object_kind_from_string(const std::string& s);

// Ground-truth complex objects on the HR grid. Deterministic given
// (kind, size, seed). Amplitude stays in [0.1, 1], phase in [-pi/2, pi/2].
//
// "bars": three-bar groups at periods 64, 32, 16, 8, 4 HR px (halving), one
// horizontal band per group, so resolution can be read off directly.
// "phase-disk": amplitude 1, phase pi/2 inside a centered disk of diameter
// size/4. "composite": smooth seeded amplitude and phase textures.
ComplexField synth_object(ObjectKind kind, int size, uint64_t seed);

// Bar-group layout of synth_object(Bars, ...), for resolution measurements.
struct BarGroup {
    int period_px;      // HR px
    int row_begin, row_end;
    std::vector<int> bar_centers; // HR column indices
    std::vector<int> gap_centers;
};
std::vector<BarGroup> bar_groups(int size);

struct NoiseModel {
    bool enabled = false;
    double photons = 1e4; // photon budget at full scale
    uint64_t seed = 0;
};

// |IFFT(pupil * sub-block of HR spectrum centered at wv's pixel offset)|^2.
// The HR and LR grids share one frequency step, so the offset is
// round(f / dk) pixels from the spectrum center.
RealField simulate_intensity(const ComplexField& object_hr, const WaveVector& wv,
                             const Pupil& pupil, const OpticalConfig& cfg);

// Scale factor that puts the brightest pixel of the on-axis frame at 80% of
// the 16-bit range.
double auto_scale(const ComplexField& object_hr, const Pupil& pupil, const OpticalConfig& cfg);

IntensityImage quantize_frame(const RealField& intensity, double scale,
                              const NoiseModel& noise = {}, uint64_t frame_index = 0);

IntensityImage simulate_frame(const ComplexField& object_hr, const WaveVector& wv,
                              const Pupil& pupil, const OpticalConfig& cfg, double scale,
                              const NoiseModel& noise = {}, uint64_t frame_index = 0);

// Full-FOV dataset: the HR object (side = FOV * upsample) is partitioned
// into tiles, each simulated with its own illumination angles, and the
// per-tile patches are assembled into whole LR frames (each pixel owned by
// the nearest tile). Timestamps are spaced by pattern delay + exposure.
FrameSet simulate_dataset(const ComplexField& object_hr,
                          const std::vector<LedIndex>& seq, const OpticalConfig& cfg,
                          const NoiseModel& noise = {}, double defocus_um = 0.0);

} // namespace fpm
