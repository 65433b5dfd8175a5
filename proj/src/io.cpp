#include "fpm/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace fpm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void put_u16_be(std::ostream& os, uint16_t v) {
    const char b[2] = {char(v >> 8), char(v & 0xff)};
    os.write(b, 2);
}

void put_u32_le(std::ostream& os, uint32_t v) {
    const char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff),
                       char((v >> 24) & 0xff)};
    os.write(b, 4);
}

uint32_t get_u32_le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("unexpected end of file");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

void put_f64_le(std::ostream& os, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = char((bits >> (8 * i)) & 0xff);
    os.write(b, 8);
}

double get_f64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("unexpected end of file");
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= uint64_t(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

} // namespace

void write_pgm16(const fs::path& path, const IntensityImage& image) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << "P5\n" << image.cols() << ' ' << image.rows() << "\n65535\n";
    for (Eigen::Index i = 0; i < image.rows(); ++i)
        for (Eigen::Index j = 0; j < image.cols(); ++j) put_u16_be(os, image(i, j));
    if (!os) throw IoError("write failed: " + path.string());
}

IntensityImage read_pgm16(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    std::string magic;
    is >> magic;
    if (magic != "P5") throw IoError("not a binary PGM: " + path.string());
    long w = 0, h = 0, maxval = 0;
    is >> w >> h >> maxval;
    if (!is || w <= 0 || h <= 0) throw IoError("malformed PGM header: " + path.string());
    if (maxval != 65535) throw IoError("PGM maxval must be 65535, got " + std::to_string(maxval));
    is.get(); // single whitespace after maxval
    std::vector<char> buf(size_t(w) * size_t(h) * 2);
    is.read(buf.data(), std::streamsize(buf.size()));
    if (size_t(is.gcount()) != buf.size())
        throw IoError("truncated PGM payload in " + path.string() + ": expected " +
                      std::to_string(buf.size()) + " bytes, got " + std::to_string(is.gcount()));
    IntensityImage img(h, w);
    size_t k = 0;
    for (long i = 0; i < h; ++i)
        for (long j = 0; j < w; ++j, k += 2)
            img(i, j) = uint16_t((uint8_t(buf[k]) << 8) | uint8_t(buf[k + 1]));
    return img;
}

void write_cfi(const fs::path& path, const ComplexField& field) {
    for (Eigen::Index i = 0; i < field.rows(); ++i)
        for (Eigen::Index j = 0; j < field.cols(); ++j)
            if (!std::isfinite(field(i, j).real()) || !std::isfinite(field(i, j).imag()))
                throw IoError("non-finite value at pixel (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os.write("CFI1", 4);
    put_u32_le(os, uint32_t(field.cols()));
    put_u32_le(os, uint32_t(field.rows()));
    for (Eigen::Index i = 0; i < field.rows(); ++i)
        for (Eigen::Index j = 0; j < field.cols(); ++j) {
            put_f64_le(os, field(i, j).real());
            put_f64_le(os, field(i, j).imag());
        }
    if (!os) throw IoError("write failed: " + path.string());
}

ComplexField read_cfi(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CFI1", 4) != 0)
        throw IoError("bad CFI magic in " + path.string());
    const uint32_t w = get_u32_le(is), h = get_u32_le(is);
    if (w == 0 || h == 0 || uint64_t(w) * h > (1u << 30))
        throw IoError("CFI size out of range: " + std::to_string(w) + "x" + std::to_string(h));
    ComplexField f(h, w);
    for (uint32_t i = 0; i < h; ++i)
        for (uint32_t j = 0; j < w; ++j) {
            const double re = get_f64_le(is);
            const double im = get_f64_le(is);
            f(i, j) = Complex(re, im);
        }
    return f;
}

void export_view(const ComplexField& field, View which, const fs::path& path) {
    double lo, hi;
    RealField vals(field.rows(), field.cols());
    if (which == View::Amplitude) {
        vals = field.abs();
        lo = 0.0;
        hi = vals.maxCoeff();
        if (hi <= 0.0) hi = 1.0; // constant zero field maps to all-zero image
    } else {
        for (Eigen::Index j = 0; j < field.cols(); ++j)
            for (Eigen::Index i = 0; i < field.rows(); ++i) vals(i, j) = std::arg(field(i, j));
        lo = -M_PI;
        hi = M_PI;
    }
    IntensityImage img(field.rows(), field.cols());
    for (Eigen::Index i = 0; i < field.rows(); ++i)
        for (Eigen::Index j = 0; j < field.cols(); ++j) {
            const double t = (vals(i, j) - lo) / (hi - lo);
            img(i, j) = uint16_t(std::clamp(std::lround(t * 65535.0), 0L, 65535L));
        }
    write_pgm16(path, img);
    std::ofstream meta(path.string() + ".meta.txt");
    meta << "view " << (which == View::Amplitude ? "amplitude" : "phase") << "\n";
    meta << std::setprecision(17) << "lo " << lo << "\nhi " << hi << "\n";
    if (!meta) throw IoError("cannot write sidecar for " + path.string());
}

RealField import_view(const fs::path& path) {
    std::ifstream meta(path.string() + ".meta.txt");
    if (!meta) throw IoError("missing sidecar for " + path.string());
    std::string key, view;
    double lo = 0, hi = 1;
    meta >> key >> view;
    meta >> key >> lo;
    meta >> key >> hi;
    if (!meta) throw IoError("malformed sidecar for " + path.string());
    IntensityImage img = read_pgm16(path);
    RealField out(img.rows(), img.cols());
    for (Eigen::Index i = 0; i < img.rows(); ++i)
        for (Eigen::Index j = 0; j < img.cols(); ++j)
            out(i, j) = lo + (hi - lo) * double(img(i, j)) / 65535.0;
    return out;
}

namespace {

json optics_to_json(const OpticalConfig& c) {
    return json{{"wavelength_um", c.wavelength},
                {"objective_na", c.objective_na},
                {"magnification", c.magnification},
                {"camera_pixel_um", c.camera_pixel},
                {"led_pitch_mm", c.led_pitch},
                {"led_grid", {c.led_grid_rows, c.led_grid_cols}},
                {"led_height_mm", c.led_height},
                {"center_led", {c.center_led.row, c.center_led.col}},
                {"led_scan", {c.led_scan_rows, c.led_scan_cols}},
                {"upsample", c.upsample},
                {"tile_size_px", c.tile_size},
                {"tile_overlap_px", c.tile_overlap},
                {"acq_pattern_delay_s", c.acq_pattern_delay},
                {"acq_exposure_s", c.acq_exposure}};
}

OpticalConfig optics_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"wavelength_um", "objective_na", "magnification", "camera_pixel_um",
                         "led_pitch_mm", "led_grid", "led_height_mm", "center_led", "led_scan",
                         "upsample", "tile_size_px", "tile_overlap_px", "acq_pattern_delay_s",
                         "acq_exposure_s"},
                        "optics");
    OpticalConfig c;
    c.wavelength = j.value("wavelength_um", c.wavelength);
    c.objective_na = j.value("objective_na", c.objective_na);
    c.magnification = j.value("magnification", c.magnification);
    c.camera_pixel = j.value("camera_pixel_um", c.camera_pixel);
    c.led_pitch = j.value("led_pitch_mm", c.led_pitch);
    if (j.contains("led_grid")) {
        c.led_grid_rows = j["led_grid"].at(0);
        c.led_grid_cols = j["led_grid"].at(1);
    }
    c.led_height = j.value("led_height_mm", c.led_height);
    if (j.contains("center_led")) {
        c.center_led.row = j["center_led"].at(0);
        c.center_led.col = j["center_led"].at(1);
    }
    if (j.contains("led_scan")) {
        c.led_scan_rows = j["led_scan"].at(0);
        c.led_scan_cols = j["led_scan"].at(1);
    }
    c.upsample = j.value("upsample", c.upsample);
    c.tile_size = j.value("tile_size_px", c.tile_size);
    c.tile_overlap = j.value("tile_overlap_px", c.tile_overlap);
    c.acq_pattern_delay = j.value("acq_pattern_delay_s", c.acq_pattern_delay);
    c.acq_exposure = j.value("acq_exposure_s", c.acq_exposure);
    c.validate();
    return c;
}

json run_to_json(const RunConfig& r) {
    json j{{"iters", r.iters},
           {"order", r.order},
           {"workers", r.workers},
           {"lag", r.lag ? json(*r.lag) : json("auto")},
           {"mode", r.mode},
           {"online_delay", r.online_delay},
           {"noise",
            {{"enabled", r.noise.enabled}, {"photons", r.noise.photons}, {"seed", r.noise.seed}}},
           {"defocus_um", r.defocus_um},
           {"defocus_candidates_um", r.defocus_candidates_um}};
    return j;
}

RunConfig run_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"iters", "order", "workers", "lag", "mode", "online_delay", "noise",
                         "defocus_um", "defocus_candidates_um"},
                        "run");
    RunConfig r;
    r.iters = j.value("iters", r.iters);
    r.order = j.value("order", r.order);
    r.workers = j.value("workers", r.workers);
    if (j.contains("lag") && !j["lag"].is_string()) r.lag = int(j["lag"]);
    r.mode = j.value("mode", r.mode);
    r.online_delay = j.value("online_delay", r.online_delay);
    if (j.contains("noise")) {
        const json& n = j["noise"];
        reject_unknown_keys(n, {"enabled", "photons", "seed"}, "run.noise");
        r.noise.enabled = n.value("enabled", false);
        r.noise.photons = n.value("photons", 1e4);
        r.noise.seed = n.value("seed", uint64_t(0));
    }
    r.defocus_um = j.value("defocus_um", 0.0);
    if (j.contains("defocus_candidates_um"))
        r.defocus_candidates_um = j["defocus_candidates_um"].get<std::vector<double>>();
    if (r.iters < 1) throw ConfigError("run.iters must be >= 1");
    if (r.workers < 1) throw ConfigError("run.workers must be >= 1");
    if (r.order != "spiral" && r.order != "raster")
        throw ConfigError("run.order must be spiral or raster");
    if (r.mode != "offline" && r.mode != "online")
        throw ConfigError("run.mode must be offline or online");
    return r;
}

} // namespace

std::string config_to_json(const AppConfig& cfg) {
    json j{{"optics", optics_to_json(cfg.optics)}, {"run", run_to_json(cfg.run)}};
    return j.dump(2) + "\n";
}

AppConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    reject_unknown_keys(j, {"optics", "run"}, "config");
    AppConfig cfg;
    try {
        if (j.contains("optics")) cfg.optics = optics_from_json(j["optics"]);
        if (j.contains("run")) cfg.run = run_from_json(j["run"]);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config type error: ") + e.what());
    }
    return cfg;
}

AppConfig read_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return config_from_json(ss.str());
}

void write_config(const fs::path& path, const AppConfig& cfg) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    os << config_to_json(cfg);
}

void write_dataset(const fs::path& dir, const FrameSet& frames, const ComplexField* truth) {
    fs::create_directories(dir / "frames");
    json manifest;
    manifest["format_version"] = "fpm-dataset/1";
    manifest["config"] = {{"optics", optics_to_json(frames.cfg)}};
    json flist = json::array();
    for (const auto& f : frames.frames) {
        char name[64];
        std::snprintf(name, sizeof name, "frames/led_%02d_%02d.pgm", f.led.row, f.led.col);
        write_pgm16(dir / name, f.image);
        flist.push_back({{"file", name},
                         {"led_row", f.led.row},
                         {"led_col", f.led.col},
                         {"timestamp_s", f.timestamp_s}});
    }
    manifest["frames"] = std::move(flist);
    if (truth) {
        write_cfi(dir / "truth.cfi", *truth);
        manifest["object_truth"] = "truth.cfi";
    }
    std::ofstream os(dir / "manifest.json");
    if (!os) throw IoError("cannot write manifest in " + dir.string());
    os << manifest.dump(2) << "\n";
}

Dataset read_dataset(const fs::path& dir) {
    std::ifstream is(dir / "manifest.json");
    if (!is) throw IoError("missing manifest.json in " + dir.string());
    json manifest;
    try {
        manifest = json::parse(is);
    } catch (const json::exception& e) {
        throw IoError(std::string("manifest parse error: ") + e.what());
    }
    reject_unknown_keys(manifest, {"format_version", "config", "frames", "object_truth"},
                        "manifest");
    const std::string version = manifest.value("format_version", "");
    if (version != "fpm-dataset/1") throw IoError("unrecognized manifest version: " + version);
    if (!manifest.contains("config") || !manifest.contains("frames"))
        throw IoError("manifest missing required keys (config, frames)");

    Dataset ds;
    ds.frames.cfg = optics_from_json(manifest["config"].at("optics"));
    for (const auto& fj : manifest["frames"]) {
        if (!fj.contains("file") || !fj.contains("led_row") || !fj.contains("led_col"))
            throw IoError("manifest frame entry missing required keys");
        Frame f;
        f.led = {fj["led_row"], fj["led_col"]};
        if (f.led.row < 0 || f.led.row >= ds.frames.cfg.led_grid_rows || f.led.col < 0 ||
            f.led.col >= ds.frames.cfg.led_grid_cols)
            throw IoError("manifest LED index outside grid");
        f.timestamp_s = fj.value("timestamp_s", 0.0);
        const fs::path file = dir / std::string(fj["file"]);
        if (!fs::exists(file)) throw IoError("referenced frame missing: " + file.string());
        f.image = read_pgm16(file);
        ds.frames.frames.push_back(std::move(f));
    }
    if (manifest.contains("object_truth")) {
        const fs::path t = dir / std::string(manifest["object_truth"]);
        if (!fs::exists(t)) throw IoError("referenced truth missing: " + t.string());
        ds.object_truth = t;
    }
    return ds;
}

} // namespace fpm
