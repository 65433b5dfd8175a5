#include "fpm/tiles.hpp"

namespace fpm {

std::vector<int> tile_origins(int fov, int tile_size, int tile_overlap) {
    if (fov < tile_size) throw ConfigError("FOV smaller than one tile");
    const int stride = tile_size - tile_overlap;
    std::vector<int> origins;
    int o = 0;
    while (true) {
        if (o + tile_size >= fov) {
            origins.push_back(fov - tile_size); // clamped final tile
            break;
        }
        origins.push_back(o);
        o += stride;
    }
    return origins;
}

std::vector<TileSpec> partition_tiles(int fov_w, int fov_h, const OpticalConfig& cfg,
                                      double defocus_um) {
    auto xs = tile_origins(fov_w, cfg.tile_size, cfg.tile_overlap);
    auto ys = tile_origins(fov_h, cfg.tile_size, cfg.tile_overlap);
    std::vector<TileSpec> tiles;
    tiles.reserve(xs.size() * ys.size());
    const int hr = cfg.led_scan_rows / 2, hc = cfg.led_scan_cols / 2;
    for (int y0 : ys) {
        for (int x0 : xs) {
            TileSpec t;
            t.x0 = x0;
            t.y0 = y0;
            t.size = cfg.tile_size;
            t.defocus_um = defocus_um;
            t.center_x_um = (x0 + cfg.tile_size / 2.0 - fov_w / 2.0) * cfg.dx_obj();
            t.center_y_um = (y0 + cfg.tile_size / 2.0 - fov_h / 2.0) * cfg.dx_obj();
            for (int dr = -hr; dr <= hr; ++dr) {
                for (int dc = -hc; dc <= hc; ++dc) {
                    LedIndex led{cfg.center_led.row + dr, cfg.center_led.col + dc};
                    t.wavevectors[led] =
                        illumination_wavevector(led, {t.center_x_um, t.center_y_um}, cfg);
                }
            }
            tiles.push_back(std::move(t));
        }
    }
    return tiles;
}

} // namespace fpm
