#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fpm/recon.hpp"

namespace fpm {

// Raised when a user-provided pipeline lag is below the computed minimum.
struct UnsafeLagError : std::runtime_error {
    int minimum;
    explicit UnsafeLagError(int min_lag)
        : std::runtime_error("pipeline lag below the safe minimum of " + std::to_string(min_lag)),
          minimum(min_lag) {}
};

// (iteration stage, sequence position) execution plan. Stage s executes
// position p at round p + s*lag; all entries of one round touch disjoint
// pupil-support disks when lag >= min_safe_lag.
struct PipelineSchedule {
    int lag = 1;
    int stages = 1;
    struct Entry {
        int stage;
        int position;
    };
    std::vector<std::vector<Entry>> rounds;
};

// Two positions conflict iff their HR-grid disk centers are closer than
// 2*radius_px. Returns 1 + the largest forward gap between conflicting
// positions (>= 1: every position conflicts with itself).
int min_safe_lag(const std::vector<std::pair<int, int>>& offsets_px, double radius_px);
int min_safe_lag(const LedSequence& seq, const TileSpec& tile, const OpticalConfig& cfg);

PipelineSchedule build_schedule(int positions, int iters, int lag);

struct PipelineResult {
    ComplexField hr;
    ReconMetrics metrics;
    int lag = 1;
    bool nondeterministic = false; // set when an unsafe lag was forced
};

// Pipelined passes over the update sequence; equal to the sequential path
// whenever the lag satisfies the non-interference condition. lag == nullopt
// resolves via min_safe_lag.
PipelineResult pipelined_reconstruct_tile(const FrameSet& frames, const TileSpec& tile,
                                          const OpticalConfig& cfg, int iters,
                                          const LedSequence& seq,
                                          std::optional<int> lag = std::nullopt,
                                          bool force_unsafe = false);

struct TimingRow {
    std::string run_id;
    std::string mode;
    int workers = 1;
    int lag = 1;
    int tiles = 1;
    int iters = 1;
    double wall_s = 0.0;
    double per_tile_mean_s = 0.0;
};

std::string timing_csv_header();
std::string timing_csv_row(const TimingRow& r);

struct RunResult {
    std::vector<TileSpec> specs;
    std::vector<ComplexField> tiles;
    ComplexField stitched;
    TimingRow timing;
    std::vector<ReconMetrics> tile_metrics;
    double acquisition_s = 0.0; // online mode only
};

struct RunOptions {
    int iters = 5;
    int workers = 1;
    std::optional<int> lag;     // nullopt = auto
    bool force_unsafe_lag = false;
    bool force_pipeline = false; // pipeline inside tiles even when pool is busy
    double defocus_um = 0.0;
    std::optional<int> max_tiles; // reconstruct only the first N tiles (bench)
};

// All frames available up front: tiles go to a pool of `workers` executors.
RunResult run_offline(const FrameSet& frames, const OpticalConfig& cfg, const LedSequence& seq,
                      const RunOptions& opt);

// Frames replayed against their manifest timestamps (scaled by delay_scale);
// every arriving frame's update is applied to all tiles while the next
// frame's delay elapses. Remaining iters-1 passes run after the stream ends.
RunResult run_online(const FrameSet& frames, const OpticalConfig& cfg, const LedSequence& seq,
                     const RunOptions& opt, double delay_scale = 1.0);

} // namespace fpm
