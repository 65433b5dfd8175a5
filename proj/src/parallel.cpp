#include "fpm/parallel.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <functional>
#include <mutex>
#include <sstream>
#include <thread>

#include "fpm/stitch.hpp"

namespace fpm {

int min_safe_lag(const std::vector<std::pair<int, int>>& offsets_px, double radius_px) {
    if (offsets_px.empty()) throw DataError("min_safe_lag: empty sequence");
    const double limit = 2.0 * radius_px;
    int max_gap = 0; // self-conflict
    for (size_t i = 0; i < offsets_px.size(); ++i) {
        for (size_t j = i; j < offsets_px.size(); ++j) {
            const double dy = offsets_px[i].first - offsets_px[j].first;
            const double dx = offsets_px[i].second - offsets_px[j].second;
            if (std::hypot(dx, dy) < limit) max_gap = std::max(max_gap, int(j - i));
        }
    }
    return 1 + max_gap;
}

int min_safe_lag(const LedSequence& seq, const TileSpec& tile, const OpticalConfig& cfg) {
    std::vector<std::pair<int, int>> offsets;
    offsets.reserve(seq.size());
    for (const auto& led : seq) offsets.push_back(spectrum_offset_px(tile.wavevectors.at(led), cfg));
    const Pupil pupil = build_pupil(cfg, cfg.tile_size, tile.defocus_um);
    return min_safe_lag(offsets, pupil.radius_px);
}

PipelineSchedule build_schedule(int positions, int iters, int lag) {
    if (positions < 1 || iters < 1 || lag < 1) throw ConfigError("invalid schedule parameters");
    PipelineSchedule sch;
    sch.lag = lag;
    sch.stages = iters;
    const int last_round = (positions - 1) + (iters - 1) * lag;
    sch.rounds.resize(size_t(last_round) + 1);
    for (int s = 0; s < iters; ++s)
        for (int p = 0; p < positions; ++p)
            sch.rounds[size_t(p + s * lag)].push_back({s, p});
    return sch;
}

PipelineResult pipelined_reconstruct_tile(const FrameSet& frames, const TileSpec& tile,
                                          const OpticalConfig& cfg, int iters,
                                          const LedSequence& seq, std::optional<int> lag,
                                          bool force_unsafe) {
    if (iters < 1) throw ConfigError("iters must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    const int min_lag = min_safe_lag(seq, tile, cfg);
    int use_lag = lag.value_or(min_lag);
    bool nondet = false;
    if (use_lag < min_lag) {
        if (!force_unsafe) throw UnsafeLagError(min_lag);
        nondet = true;
    }

    std::vector<RealField> crops;
    std::vector<WaveVector> wvs;
    for (const auto& led : seq) {
        const Frame* f = frames.find(led);
        if (!f) throw DataError("missing frame for a sequence LED");
        crops.push_back(crop_frame(f->image, tile).cast<double>());
        wvs.push_back(tile.wavevectors.at(led));
    }
    const Pupil pupil = build_pupil(cfg, cfg.tile_size, tile.defocus_um);
    SpectrumCanvas canvas = init_canvas(frames, tile, cfg);

    PipelineSchedule sch = build_schedule(int(seq.size()), iters, use_lag);
    // residuals indexed [stage][position], filled as rounds retire
    std::vector<std::vector<double>> residuals(size_t(iters),
                                               std::vector<double>(seq.size(), 0.0));
    for (const auto& round : sch.rounds) {
        if (round.size() == 1) {
            const auto& e = round.front();
            residuals[size_t(e.stage)][size_t(e.position)] =
                update_step(canvas, crops[size_t(e.position)], wvs[size_t(e.position)], pupil);
            continue;
        }
        std::vector<std::thread> pool;
        pool.reserve(round.size());
        for (const auto& e : round) {
            pool.emplace_back([&, e] {
                residuals[size_t(e.stage)][size_t(e.position)] =
                    update_step(canvas, crops[size_t(e.position)], wvs[size_t(e.position)], pupil);
            });
        }
        for (auto& th : pool) th.join(); // round barrier
    }

    PipelineResult res;
    res.lag = use_lag;
    res.nondeterministic = nondet;
    for (const auto& stage : residuals) {
        double sum = 0.0;
        for (double r : stage) sum += r;
        res.metrics.pass_mean_residual.push_back(sum / double(stage.size()));
    }
    res.hr = canvas_to_field(canvas);
    res.metrics.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

std::string timing_csv_header() {
    return "run_id,mode,workers,lag,tiles,iters,wall_s,per_tile_mean_s";
}

std::string timing_csv_row(const TimingRow& r) {
    std::ostringstream os;
    os << r.run_id << ',' << r.mode << ',' << r.workers << ',' << r.lag << ',' << r.tiles << ','
       << r.iters << ',' << r.wall_s << ',' << r.per_tile_mean_s;
    return os.str();
}

namespace {

void parallel_for(int workers, size_t count, const std::function<void(size_t)>& fn) {
    if (workers <= 1 || count <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    const int n = std::min<size_t>(size_t(workers), count);
    for (int t = 0; t < n; ++t) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

std::vector<TileSpec> select_tiles(const FrameSet& frames, const OpticalConfig& cfg,
                                   const RunOptions& opt) {
    auto tiles = partition_tiles(frames.width(), frames.height(), cfg, opt.defocus_um);
    if (opt.max_tiles) {
        if (*opt.max_tiles > int(tiles.size()))
            throw ConfigError("requested tile count exceeds partition");
        tiles.resize(size_t(*opt.max_tiles));
    }
    return tiles;
}

} // namespace

RunResult run_offline(const FrameSet& frames, const OpticalConfig& cfg, const LedSequence& seq,
                      const RunOptions& opt) {
    if (opt.workers < 1) throw ConfigError("workers must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    res.specs = select_tiles(frames, cfg, opt);
    const size_t T = res.specs.size();
    res.tiles.resize(T);
    res.tile_metrics.resize(T);
    std::vector<double> tile_wall(T, 0.0);

    const bool pipeline_tiles = opt.force_pipeline || opt.workers > int(T);
    parallel_for(opt.workers, T, [&](size_t i) {
        const auto tt0 = std::chrono::steady_clock::now();
        if (pipeline_tiles) {
            PipelineResult pr = pipelined_reconstruct_tile(frames, res.specs[i], cfg, opt.iters,
                                                           seq, opt.lag, opt.force_unsafe_lag);
            res.tiles[i] = std::move(pr.hr);
            res.tile_metrics[i] = std::move(pr.metrics);
        } else {
            ReconResult rr = reconstruct_tile(frames, res.specs[i], cfg, opt.iters, seq);
            res.tiles[i] = std::move(rr.hr);
            res.tile_metrics[i] = std::move(rr.metrics);
        }
        tile_wall[i] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - tt0).count();
    });

    if (!opt.max_tiles) res.stitched = stitch_mosaic(res.tiles, res.specs, cfg);

    res.timing.mode = "offline";
    res.timing.workers = opt.workers;
    res.timing.lag = opt.lag.value_or(1);
    res.timing.tiles = int(T);
    res.timing.iters = opt.iters;
    res.timing.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    double sum = 0.0;
    for (double w : tile_wall) sum += w;
    res.timing.per_tile_mean_s = T ? sum / double(T) : 0.0;
    return res;
}

RunResult run_online(const FrameSet& frames, const OpticalConfig& cfg, const LedSequence& seq,
                     const RunOptions& opt, double delay_scale) {
    if (opt.workers < 1) throw ConfigError("workers must be >= 1");
    if (delay_scale < 0) throw ConfigError("delay scale must be >= 0");
    const auto t0 = std::chrono::steady_clock::now();

    RunResult res;
    res.specs = select_tiles(frames, cfg, opt);
    const size_t T = res.specs.size();

    // ordered frame source replaying manifest timestamps
    std::mutex mx;
    std::condition_variable cv;
    std::deque<size_t> arrived;
    bool stream_done = false;
    std::vector<const Frame*> stream;
    for (const auto& led : seq) {
        const Frame* f = frames.find(led);
        if (!f) throw DataError("missing frame for a sequence LED");
        stream.push_back(f);
    }
    std::thread producer([&] {
        for (size_t i = 0; i < stream.size(); ++i) {
            const double t = stream[i]->timestamp_s * delay_scale;
            std::this_thread::sleep_until(t0 + std::chrono::duration<double>(t));
            {
                std::lock_guard<std::mutex> lk(mx);
                arrived.push_back(i);
            }
            cv.notify_one();
        }
        {
            std::lock_guard<std::mutex> lk(mx);
            stream_done = true;
        }
        cv.notify_one();
    });

    std::vector<SpectrumCanvas> canvases;
    std::vector<Pupil> pupils;
    std::vector<std::vector<RealField>> crops(T); // [tile][seq position]
    std::vector<std::vector<double>> pass1(T, std::vector<double>(seq.size(), 0.0));
    bool initialized = false;
    size_t next_update = 0; // first seq position not yet applied
    size_t last_arrived = 0;

    auto ensure_init = [&] {
        canvases.reserve(T);
        for (size_t i = 0; i < T; ++i) {
            canvases.push_back(init_canvas(frames, res.specs[i], cfg));
            pupils.push_back(build_pupil(cfg, cfg.tile_size, res.specs[i].defocus_um));
            crops[i].reserve(seq.size());
            for (size_t k = 0; k < seq.size(); ++k)
                crops[i].push_back(crop_frame(stream[k]->image, res.specs[i]).cast<double>());
        }
        initialized = true;
    };

    while (next_update < stream.size()) {
        bool done;
        {
            std::unique_lock<std::mutex> lk(mx);
            cv.wait(lk, [&] { return !arrived.empty() || stream_done; });
            while (!arrived.empty()) {
                last_arrived = arrived.front() + 1;
                arrived.pop_front();
            }
            done = stream_done;
        }
        // updates wait for the on-axis frame (the canvas seed); with spiral
        // order that is the first arrival, with raster it buffers until then
        if (!initialized) {
            bool seed_seen = done;
            for (size_t k = 0; k < last_arrived && !seed_seen; ++k)
                if (seq[k] == cfg.center_led) seed_seen = true;
            if (seed_seen) ensure_init();
        }
        if (initialized) {
            while (next_update < last_arrived) {
                const size_t k = next_update;
                parallel_for(opt.workers, T, [&](size_t i) {
                    pass1[i][k] = update_step(canvases[i], crops[i][k],
                                              res.specs[i].wavevectors.at(seq[k]), pupils[i]);
                });
                ++next_update;
            }
        }
    }
    producer.join();
    res.acquisition_s = stream.empty() ? 0.0 : stream.back()->timestamp_s * delay_scale;

    // refinement passes after the stream has ended
    res.tiles.resize(T);
    res.tile_metrics.resize(T);
    parallel_for(opt.workers, T, [&](size_t i) {
        double sum = 0.0;
        for (double r : pass1[i]) sum += r;
        res.tile_metrics[i].pass_mean_residual.push_back(sum / double(seq.size()));
        for (int pass = 1; pass < opt.iters; ++pass) {
            double s = 0.0;
            for (size_t k = 0; k < seq.size(); ++k)
                s += update_step(canvases[i], crops[i][k], res.specs[i].wavevectors.at(seq[k]),
                                 pupils[i]);
            res.tile_metrics[i].pass_mean_residual.push_back(s / double(seq.size()));
        }
        res.tiles[i] = canvas_to_field(canvases[i]);
    });

    if (!opt.max_tiles) res.stitched = stitch_mosaic(res.tiles, res.specs, cfg);

    res.timing.mode = "online";
    res.timing.workers = opt.workers;
    res.timing.lag = 1;
    res.timing.tiles = int(T);
    res.timing.iters = opt.iters;
    res.timing.wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    res.timing.per_tile_mean_s = T ? res.timing.wall_s / double(T) : 0.0;
    return res;
}

} // namespace fpm
