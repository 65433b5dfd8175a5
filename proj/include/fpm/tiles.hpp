#pragma once

#include <map>
#include <vector>

#include "fpm/optics.hpp"

namespace fpm {

// One spatial sub-region of the FOV. Origin in camera (LR) pixels; the
// center is expressed in object-plane micron relative to the optical axis
// (taken at the FOV center), so per-tile illumination angles differ.
struct TileSpec {
    int x0 = 0;
    int y0 = 0;
    int size = 0;
    double center_x_um = 0.0;
    double center_y_um = 0.0;
    double defocus_um = 0.0;
    std::map<LedIndex, WaveVector> wavevectors;
};

// Grid of tile origins at stride tile_size - tile_overlap; a final clamped
// tile is appended per axis when the last stride overshoots the FOV.
std::vector<int> tile_origins(int fov, int tile_size, int tile_overlap);

std::vector<TileSpec> partition_tiles(int fov_w, int fov_h, const OpticalConfig& cfg,
                                      double defocus_um = 0.0);

} // namespace fpm
