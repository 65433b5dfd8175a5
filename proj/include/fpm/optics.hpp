#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include "fpm/field.hpp"

namespace fpm {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LedIndex {
    int row = 0;
    int col = 0;
    bool operator==(const LedIndex&) const = default;
    bool operator<(const LedIndex& o) const {
        return row != o.row ? row < o.row : col < o.col;
    }
};

// All physical and discretization parameters of the virtual microscope.
// Lengths: wavelength/camera_pixel in micron, led_pitch/led_height in mm.
struct OpticalConfig {
    double wavelength = 0.525;     // um, green channel
    double objective_na = 0.1;
    double magnification = 2.0;
    double camera_pixel = 2.4;     // um
    double led_pitch = 2.5;        // mm
    int led_grid_rows = 64;
    int led_grid_cols = 64;
    double led_height = 83.0;      // mm, sample plane to LED board
    LedIndex center_led{32, 32};
    int led_scan_rows = 13;        // sub-grid actually used, odd, centered
    int led_scan_cols = 13;
    int upsample = 4;
    int tile_size = 256;           // px
    int tile_overlap = 26;         // px
    double acq_pattern_delay = 0.3; // s
    double acq_exposure = 0.03;     // s

    double dx_obj() const { return camera_pixel / magnification; }
    double dx_hr() const { return dx_obj() / upsample; }
    int hr_size() const { return tile_size * upsample; }

    void validate() const;
};

// Spatial frequency of a tilted plane wave, cycles per micron.
struct WaveVector {
    double fx = 0.0;
    double fy = 0.0;
};

// Coherent transfer function sampled on the LR grid: binary disk of
// radius_px, optionally carrying an angular-spectrum defocus phase.
struct Pupil {
    int grid = 0;
    double radius_px = 0.0;
    double defocus = 0.0; // um
    ComplexField values;
};

// fx = -(x_led - x_c) / (lambda * D): an LED displaced toward +x samples the
// -x side of the spectrum. Tile center in object-plane micron; x maps to
// columns and y to rows of the LED grid.
WaveVector illumination_wavevector(LedIndex led, std::pair<double, double> tile_center_um,
                                   const OpticalConfig& cfg);

Pupil build_pupil(const OpticalConfig& cfg, int grid, double defocus_um);

// objective NA plus the largest illumination NA over the scan sub-grid
double synthesized_na(const OpticalConfig& cfg);

} // namespace fpm
