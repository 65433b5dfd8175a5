#include "fpm/optics.hpp"

#include <cmath>

namespace fpm {

void OpticalConfig::validate() const {
    auto fail = [](const std::string& inv) { throw ConfigError("config invariant violated: " + inv); };
    if (!(wavelength > 0)) fail("wavelength > 0");
    if (!(objective_na > 0 && objective_na < 1)) fail("0 < objective_na < 1");
    if (!(magnification > 0)) fail("magnification > 0");
    if (!(camera_pixel > 0)) fail("camera_pixel > 0");
    if (!(led_pitch > 0)) fail("led_pitch > 0");
    if (!(led_height > 0)) fail("led_height > 0");
    if (led_grid_rows < 1 || led_grid_cols < 1) fail("led_grid positive");
    if (led_scan_rows % 2 == 0 || led_scan_cols % 2 == 0) fail("led_scan dimensions odd");
    if (center_led.row - led_scan_rows / 2 < 0 || center_led.row + led_scan_rows / 2 >= led_grid_rows ||
        center_led.col - led_scan_cols / 2 < 0 || center_led.col + led_scan_cols / 2 >= led_grid_cols)
        fail("led_scan fits inside led_grid");
    if (upsample < 2) fail("upsample >= 2");
    if (tile_size < 1) fail("tile_size positive");
    if (!(tile_overlap >= 0 && tile_overlap < tile_size)) fail("tile_overlap < tile_size");
    if (!(acq_pattern_delay >= 0 && acq_exposure >= 0)) fail("acquisition times >= 0");
}

WaveVector illumination_wavevector(LedIndex led, std::pair<double, double> tile_center_um,
                                   const OpticalConfig& cfg) {
    if (led.row < 0 || led.row >= cfg.led_grid_rows || led.col < 0 || led.col >= cfg.led_grid_cols)
        throw std::domain_error("LED index (" + std::to_string(led.row) + "," +
                                std::to_string(led.col) + ") outside LED grid");
    const double pitch_um = cfg.led_pitch * 1000.0;
    const double x_led = (led.col - cfg.center_led.col) * pitch_um;
    const double y_led = (led.row - cfg.center_led.row) * pitch_um;
    const double h_um = cfg.led_height * 1000.0;
    const double dx = x_led - tile_center_um.first;
    const double dy = y_led - tile_center_um.second;
    const double dist = std::sqrt(dx * dx + dy * dy + h_um * h_um);
    return {-dx / (cfg.wavelength * dist), -dy / (cfg.wavelength * dist)};
}

Pupil build_pupil(const OpticalConfig& cfg, int grid, double defocus_um) {
    if (grid < 32 || grid % 2 != 0)
        throw ConfigError("pupil grid must be even and >= 32");
    const double dk = 1.0 / (grid * cfg.dx_obj()); // cyc/um per pixel
    const double cutoff = cfg.objective_na / cfg.wavelength;
    const double radius_px = cutoff / dk;
    if (radius_px >= grid / 2.0)
        throw ConfigError("pupil exceeds Nyquist of LR grid (radius " + std::to_string(radius_px) +
                          " px, grid " + std::to_string(grid) + ")");
    Pupil p;
    p.grid = grid;
    p.radius_px = radius_px;
    p.defocus = defocus_um;
    p.values = ComplexField::Zero(grid, grid);
    const int c = grid / 2;
    const double inv_lam2 = 1.0 / (cfg.wavelength * cfg.wavelength);
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            const double rpx = std::hypot(double(i - c), double(j - c));
            if (rpx > radius_px) continue; // pixel included iff center radius <= radius_px
            if (defocus_um == 0.0) {
                p.values(i, j) = Complex(1.0, 0.0);
            } else {
                const double fr2 = rpx * dk * rpx * dk;
                const double kz = std::sqrt(std::max(0.0, inv_lam2 - fr2));
                const double phase = 2.0 * M_PI * defocus_um * kz;
                p.values(i, j) = Complex(std::cos(phase), std::sin(phase));
            }
        }
    }
    return p;
}

double synthesized_na(const OpticalConfig& cfg) {
    double max_sin = 0.0;
    const int hr = cfg.led_scan_rows / 2, hc = cfg.led_scan_cols / 2;
    for (int dr = -hr; dr <= hr; ++dr) {
        for (int dc = -hc; dc <= hc; ++dc) {
            LedIndex led{cfg.center_led.row + dr, cfg.center_led.col + dc};
            WaveVector wv = illumination_wavevector(led, {0.0, 0.0}, cfg);
            max_sin = std::max(max_sin, cfg.wavelength * std::hypot(wv.fx, wv.fy));
        }
    }
    return cfg.objective_na + max_sin;
}

} // namespace fpm
