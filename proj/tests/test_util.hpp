#pragma once

#include "fpm/forward.hpp"
#include "fpm/optics.hpp"
#include "fpm/recon.hpp"

namespace fpm::testutil {

// Desk-scale geometry: stock optics with a small tile so whole pipelines run
// in milliseconds. Scan 3x3 unless a test widens it.
inline OpticalConfig toy_cfg() {
    OpticalConfig c;
    c.tile_size = 64;
    c.tile_overlap = 8;
    c.upsample = 4;
    c.led_scan_rows = 3;
    c.led_scan_cols = 3;
    return c;
}

inline double max_abs_diff(const ComplexField& a, const ComplexField& b) {
    return (a - b).abs().maxCoeff();
}

} // namespace fpm::testutil
