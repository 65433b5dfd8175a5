#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "fpm/forward.hpp"
#include "fpm/optics.hpp"

namespace fpm {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// 16-bit binary PGM, big-endian samples per the maxval > 255 rule.
void write_pgm16(const std::filesystem::path& path, const IntensityImage& image);
IntensityImage read_pgm16(const std::filesystem::path& path);

// CFI: "CFI1", u32le width, u32le height, then row-major (re, im) pairs of
// little-endian f64. Round trips are bit-exact; non-finite values refused.
void write_cfi(const std::filesystem::path& path, const ComplexField& field);
ComplexField read_cfi(const std::filesystem::path& path);

enum class View { Amplitude, Phase };

// Renders amplitude ([0, max] -> [0, 65535]) or phase ([-pi, pi]) to PGM,
// with the mapping recorded in "<path>.meta.txt" for reversibility.
void export_view(const ComplexField& field, View which, const std::filesystem::path& path);
RealField import_view(const std::filesystem::path& path);

struct NoiseSpec {
    bool enabled = false;
    double photons = 1e4;
    uint64_t seed = 0;
};

// Run options as stored in config files and run reports.
struct RunConfig {
    int iters = 5;
    std::string order = "spiral";
    int workers = 1;
    std::optional<int> lag; // nullopt = auto
    std::string mode = "offline";
    double online_delay = 1.0; // timestamp scale for online replay
    NoiseSpec noise;
    double defocus_um = 0.0;
    std::vector<double> defocus_candidates_um; // nonempty = per-tile search
};

struct AppConfig {
    OpticalConfig optics;
    RunConfig run;
};

// Strict JSON: unknown keys are rejected, defaults are materialized on
// write so stored configs are self-describing.
AppConfig read_config(const std::filesystem::path& path);
void write_config(const std::filesystem::path& path, const AppConfig& cfg);
std::string config_to_json(const AppConfig& cfg);
AppConfig config_from_json(const std::string& text);

struct Dataset {
    FrameSet frames;
    std::optional<std::filesystem::path> object_truth;
};

// Dataset directory: frames/led_RR_CC.pgm + manifest.json (+ truth.cfi).
void write_dataset(const std::filesystem::path& dir, const FrameSet& frames,
                   const ComplexField* object_truth = nullptr);
Dataset read_dataset(const std::filesystem::path& dir);

} // namespace fpm
