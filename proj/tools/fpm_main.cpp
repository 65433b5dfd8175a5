#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpm/io.hpp"
#include "fpm/metrics.hpp"
#include "fpm/parallel.hpp"
#include "fpm/stitch.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fpm;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitUnsafe = 4;

int default_workers() {
    if (const char* env = std::getenv("FPM_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return 1;
}

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw ConfigError("empty list: " + s);
    return out;
}

NoiseModel to_noise_model(const NoiseSpec& n) {
    return NoiseModel{n.enabled, n.photons, n.seed};
}

void write_report(const fs::path& out_dir, const std::string& command, const AppConfig& cfg,
                  const std::vector<TimingRow>& rows, const json& metrics,
                  const std::vector<std::string>& outputs) {
    json rep;
    rep["command"] = command;
    rep["config"] = json::parse(config_to_json(cfg));
    json timing = json::array();
    for (const auto& r : rows)
        timing.push_back({{"run_id", r.run_id},
                          {"mode", r.mode},
                          {"workers", r.workers},
                          {"lag", r.lag},
                          {"tiles", r.tiles},
                          {"iters", r.iters},
                          {"wall_s", r.wall_s},
                          {"per_tile_mean_s", r.per_tile_mean_s}});
    rep["timing"] = std::move(timing);
    rep["metrics"] = metrics;
    rep["outputs"] = outputs;
    std::ofstream os(out_dir / "report.json");
    os << rep.dump(2) << "\n";
}

struct SimulateArgs {
    std::string config_path, object = "composite", noise = "off", out;
    int size = 0; // 0 = one tile (tile_size * upsample)
    uint64_t seed = 1;
    bool force = false;
};

int cmd_simulate(const SimulateArgs& a) {
    AppConfig cfg;
    if (!a.config_path.empty()) cfg = read_config(a.config_path);
    cfg.optics.validate();
    if (a.noise == "off") {
        cfg.run.noise.enabled = false;
    } else if (a.noise.rfind("photons=", 0) == 0) {
        cfg.run.noise.enabled = true;
        cfg.run.noise.photons = std::stod(a.noise.substr(8));
        cfg.run.noise.seed = a.seed;
    } else {
        throw ConfigError("--noise must be off or photons=K");
    }

    const fs::path out(a.out);
    if (fs::exists(out) && !fs::is_empty(out) && !a.force)
        throw DataError("output directory not empty (use --force): " + out.string());
    fs::create_directories(out);

    const int size = a.size > 0 ? a.size : cfg.optics.hr_size();
    ComplexField truth = synth_object(object_kind_from_string(a.object), size, a.seed);
    LedSequence seq = led_sequence(update_order_from_string(cfg.run.order), cfg.optics);
    FrameSet frames = simulate_dataset(truth, seq, cfg.optics, to_noise_model(cfg.run.noise),
                                       cfg.run.defocus_um);
    write_dataset(out, frames, &truth);
    write_config(out / "config.json", cfg);
    write_report(out, "simulate", cfg, {},
                 {{"object", a.object}, {"size", size}, {"seed", a.seed}, {"frames", seq.size()}},
                 {"manifest.json", "truth.cfi"});
    std::cout << "simulated " << seq.size() << " frames (" << frames.width() << "x"
              << frames.height() << " px) into " << out.string() << "\n";
    return 0;
}

struct ReconArgs {
    std::string data, out, order, mode, lag = "auto";
    int iters = 0, workers = 0, max_tiles = 0;
    double online_delay = -1.0;
    bool unsafe_lag = false, force_pipeline = false, force = false;
};

int cmd_reconstruct(const ReconArgs& a) {
    Dataset ds = read_dataset(a.data);
    AppConfig cfg;
    cfg.optics = ds.frames.cfg;
    if (fs::exists(fs::path(a.data) / "config.json"))
        cfg.run = read_config(fs::path(a.data) / "config.json").run;
    if (a.iters > 0) cfg.run.iters = a.iters;
    if (!a.order.empty()) cfg.run.order = a.order;
    if (a.workers > 0) cfg.run.workers = a.workers;
    else if (cfg.run.workers == 1) cfg.run.workers = default_workers();
    if (!a.mode.empty()) cfg.run.mode = a.mode;
    if (a.online_delay >= 0) cfg.run.online_delay = a.online_delay;
    if (a.lag != "auto") cfg.run.lag = std::stoi(a.lag);

    const fs::path out(a.out);
    if (fs::exists(out) && !fs::is_empty(out) && !a.force)
        throw DataError("output directory not empty (use --force): " + out.string());
    fs::create_directories(out);

    RunOptions opt;
    opt.iters = cfg.run.iters;
    opt.workers = cfg.run.workers;
    opt.lag = cfg.run.lag;
    opt.force_unsafe_lag = a.unsafe_lag;
    opt.force_pipeline = a.force_pipeline;
    opt.defocus_um = cfg.run.defocus_um;
    if (a.max_tiles > 0) opt.max_tiles = a.max_tiles;

    if (cfg.run.mode == "online" && !cfg.run.defocus_candidates_um.empty())
        throw ConfigError("online mode requires explicit per-tile defocus, not a search");

    LedSequence seq = led_sequence(update_order_from_string(cfg.run.order), cfg.optics);
    RunResult res = cfg.run.mode == "online"
                        ? run_online(ds.frames, cfg.optics, seq, opt, cfg.run.online_delay)
                        : run_offline(ds.frames, cfg.optics, seq, opt);
    res.timing.run_id = "reconstruct";

    std::vector<std::string> outputs;
    for (size_t i = 0; i < res.tiles.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "tile_%03d_%03d.cfi", res.specs[i].y0, res.specs[i].x0);
        write_cfi(out / name, res.tiles[i]);
        outputs.push_back(name);
    }
    json metrics;
    if (res.stitched.size() > 0) {
        write_cfi(out / "stitched.cfi", res.stitched);
        outputs.push_back("stitched.cfi");
    }
    for (size_t i = 0; i < res.tile_metrics.size(); ++i)
        metrics["pass_mean_residual"].push_back(res.tile_metrics[i].pass_mean_residual);
    if (ds.object_truth && res.stitched.size() > 0) {
        ComplexField truth = read_cfi(*ds.object_truth);
        if (truth.rows() == res.stitched.rows() && truth.cols() == res.stitched.cols() &&
            truth.rows() == truth.cols()) {
            ComplexField limited = band_limit(truth, synthesized_na(cfg.optics), cfg.optics);
            ComplexField aligned = res.stitched * global_alignment(res.stitched, limited);
            metrics["amplitude_rmse_vs_truth"] = amplitude_rmse(aligned, limited);
            metrics["phase_rmse_vs_truth"] = phase_rmse(aligned, limited);
        }
    }
    if (cfg.run.mode == "online") metrics["acquisition_s"] = res.acquisition_s;

    std::ofstream csv(out / "timings.csv");
    csv << timing_csv_header() << "\n" << timing_csv_row(res.timing) << "\n";
    write_report(out, "reconstruct", cfg, {res.timing}, metrics, outputs);
    std::cout << "reconstructed " << res.tiles.size() << " tile(s) in " << res.timing.wall_s
              << " s\n";
    return 0;
}

struct StitchArgs {
    std::string inputs, out, config_path;
};

// tiles.list lines: "<x0_lr> <y0_lr> <path.cfi>"
int cmd_stitch(const StitchArgs& a) {
    AppConfig cfg;
    if (!a.config_path.empty()) cfg = read_config(a.config_path);
    std::ifstream is(a.inputs);
    if (!is) throw DataError("cannot open tile list " + a.inputs);
    std::vector<ComplexField> tiles;
    std::vector<TileSpec> specs;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        TileSpec s;
        std::string path;
        if (!(ls >> s.x0 >> s.y0 >> path))
            throw DataError("malformed tile list line: " + line);
        s.size = cfg.optics.tile_size;
        tiles.push_back(read_cfi(path));
        specs.push_back(s);
    }
    if (tiles.empty()) throw DataError("tile list is empty");
    ComplexField out = tiles.size() == 1 ? tiles[0] : stitch_mosaic(tiles, specs, cfg.optics);
    write_cfi(a.out, out);
    std::cout << "stitched " << tiles.size() << " tile(s) -> " << out.cols() << "x" << out.rows()
              << "\n";
    return 0;
}

struct ExportArgs {
    std::string in, amplitude, phase;
};

int cmd_export(const ExportArgs& a) {
    ComplexField f = read_cfi(a.in);
    if (!a.amplitude.empty()) export_view(f, View::Amplitude, a.amplitude);
    if (!a.phase.empty()) export_view(f, View::Phase, a.phase);
    return 0;
}

struct BenchArgs {
    std::string data, out, workers = "1,2,4,8", tiles = "1,4,9,16";
    int iters = 1;
};

int cmd_bench(const BenchArgs& a) {
    Dataset ds = read_dataset(a.data);
    AppConfig cfg;
    cfg.optics = ds.frames.cfg;
    LedSequence seq = led_sequence(UpdateOrder::Spiral, cfg.optics);
    auto workers = parse_int_list(a.workers);
    auto tile_counts = parse_int_list(a.tiles);
    const auto partition = partition_tiles(ds.frames.width(), ds.frames.height(), cfg.optics);
    for (int t : tile_counts)
        if (t > int(partition.size()))
            throw ConfigError("requested tile count " + std::to_string(t) +
                              " exceeds partition of " + std::to_string(partition.size()));

    std::ofstream csv(a.out);
    if (!csv) throw DataError("cannot open " + a.out + " for writing");
    csv << timing_csv_header() << "\n";
    std::vector<TimingRow> rows;
    for (int w : workers) {
        for (int t : tile_counts) {
            RunOptions opt;
            opt.iters = a.iters;
            opt.workers = w;
            opt.max_tiles = t;
            RunResult res = run_offline(ds.frames, cfg.optics, seq, opt);
            res.timing.run_id = "bench";
            rows.push_back(res.timing);
            csv << timing_csv_row(res.timing) << "\n";
            csv.flush();
            std::cout << "workers=" << w << " tiles=" << t << " wall=" << res.timing.wall_s
                      << " s\n";
        }
    }
    // speedup summary against the single-worker rows
    for (int t : tile_counts) {
        double base = 0.0;
        for (const auto& r : rows)
            if (r.workers == workers.front() && r.tiles == t) base = r.wall_s;
        std::cout << "tiles=" << t << " speedup:";
        for (int w : workers)
            for (const auto& r : rows)
                if (r.workers == w && r.tiles == t)
                    std::cout << " x" << (r.wall_s > 0 ? base / r.wall_s : 0.0);
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"parallel Fourier-ptychography simulator and reconstruction engine"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "synthesize an LR dataset from a known object");
    s->add_option("--config", sim.config_path, "config JSON");
    s->add_option("--object", sim.object, "bars | phase-disk | composite");
    s->add_option("--size", sim.size, "object HR side, px (default: one tile)");
    s->add_option("--seed", sim.seed, "RNG seed");
    s->add_option("--noise", sim.noise, "off | photons=K");
    s->add_option("--out", sim.out, "output directory")->required();
    s->add_flag("--force", sim.force, "overwrite nonempty output directory");

    ReconArgs rec;
    auto* r = app.add_subcommand("reconstruct", "reconstruct HR tiles from a dataset");
    r->add_option("--data", rec.data, "dataset directory")->required();
    r->add_option("--out", rec.out, "output directory")->required();
    r->add_option("--iters", rec.iters, "full passes over the LED sequence");
    r->add_option("--order", rec.order, "spiral | raster");
    r->add_option("--workers", rec.workers, "worker pool size (or FPM_WORKERS)");
    r->add_option("--lag", rec.lag, "auto | N (pipeline lag)");
    r->add_option("--mode", rec.mode, "offline | online");
    r->add_option("--online-delay", rec.online_delay, "timestamp scale for online replay");
    r->add_option("--tiles", rec.max_tiles, "reconstruct only the first N tiles");
    r->add_flag("--unsafe-lag", rec.unsafe_lag, "allow a lag below the computed minimum");
    r->add_flag("--force-pipeline", rec.force_pipeline, "pipeline inside tiles unconditionally");
    r->add_flag("--force", rec.force, "overwrite nonempty output directory");

    StitchArgs st;
    auto* t = app.add_subcommand("stitch", "stitch HR tiles into one field");
    t->add_option("--inputs", st.inputs, "tile list: lines of '<x0> <y0> <path.cfi>'")->required();
    t->add_option("--out", st.out, "output CFI path")->required();
    t->add_option("--config", st.config_path, "config JSON (tile size / overlap / upsample)");

    ExportArgs ex;
    auto* e = app.add_subcommand("export", "render amplitude/phase views of a CFI file");
    e->add_option("--in", ex.in, "input CFI")->required();
    e->add_option("--amplitude", ex.amplitude, "amplitude PGM path");
    e->add_option("--phase", ex.phase, "phase PGM path");

    BenchArgs be;
    auto* b = app.add_subcommand("bench", "timing sweep over workers and tile counts");
    b->add_option("--data", be.data, "dataset directory")->required();
    b->add_option("--workers", be.workers, "comma list, e.g. 1,2,4,8");
    b->add_option("--tiles", be.tiles, "comma list, e.g. 1,4,9,16");
    b->add_option("--iters", be.iters, "passes per tile");
    b->add_option("--out", be.out, "timing CSV path")->required();

    try {
        app.parse(argc, argv);
        if (s->parsed()) return cmd_simulate(sim);
        if (r->parsed()) return cmd_reconstruct(rec);
        if (t->parsed()) return cmd_stitch(st);
        if (e->parsed()) return cmd_export(ex);
        if (b->parsed()) return cmd_bench(be);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitConfig;
    } catch (const UnsafeLagError& err) {
        std::cerr << "fpm: " << err.what() << "\n";
        return kExitUnsafe;
    } catch (const ConfigError& err) {
        std::cerr << "fpm: " << err.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& err) {
        std::cerr << "fpm: " << err.what() << "\n";
        return kExitData;
    }
    return 0;
}
