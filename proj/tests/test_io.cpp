#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "fpm/io.hpp"
#include "fpm/recon.hpp"
#include "test_util.hpp"

using namespace fpm;
using namespace fpm::testutil;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("fpm_io_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::vector<uint8_t> slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    REQUIRE(is.good());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_CASE("PGM bytes: header then big-endian u16 samples") {
    TempDir tmp;
    IntensityImage img(2, 2);
    img << 0, 1, 65535, 256;
    const fs::path p = tmp.path / "t.pgm";
    write_pgm16(p, img);
    auto bytes = slurp(p);
    const std::string header = "P5\n2 2\n65535\n";
    REQUIRE(bytes.size() == header.size() + 8);
    CHECK(std::equal(header.begin(), header.end(), bytes.begin()));
    const uint8_t payload[8] = {0x00, 0x00, 0x00, 0x01, 0xFF, 0xFF, 0x01, 0x00};
    for (int i = 0; i < 8; ++i) CHECK(bytes[header.size() + size_t(i)] == payload[i]);
}

TEST_CASE("PGM round trip is bit-exact") {
    TempDir tmp;
    std::mt19937_64 rng(4);
    IntensityImage img(13, 7);
    for (Eigen::Index i = 0; i < img.size(); ++i)
        img.data()[i] = uint16_t(rng() & 0xffff);
    const fs::path p = tmp.path / "r.pgm";
    write_pgm16(p, img);
    CHECK((read_pgm16(p) == img).all());
}

TEST_CASE("PGM reader rejects truncation, wrong magic and wrong maxval") {
    TempDir tmp;
    IntensityImage img = IntensityImage::Constant(4, 4, 9);
    const fs::path p = tmp.path / "bad.pgm";
    write_pgm16(p, img);
    // drop the last byte of the payload
    fs::resize_file(p, fs::file_size(p) - 1);
    CHECK_THROWS_WITH_AS(read_pgm16(p), doctest::Contains("expected 32 bytes, got 31"), IoError);

    std::ofstream(tmp.path / "magic.pgm") << "P2\n2 2\n65535\n0 0 0 0\n";
    CHECK_THROWS_WITH_AS(read_pgm16(tmp.path / "magic.pgm"),
                         doctest::Contains("not a binary PGM"), IoError);
    std::ofstream(tmp.path / "maxval.pgm", std::ios::binary) << "P5\n1 1\n255\n\0\0";
    CHECK_THROWS_WITH_AS(read_pgm16(tmp.path / "maxval.pgm"),
                         doctest::Contains("maxval must be 65535"), IoError);
    CHECK_THROWS_AS(read_pgm16(tmp.path / "absent.pgm"), IoError);
}

TEST_CASE("CFI layout: 4 + 8 header bytes, 16 bytes per pixel") {
    TempDir tmp;
    ComplexField f(1, 1);
    f(0, 0) = Complex(1.0, -2.0);
    const fs::path p = tmp.path / "one.cfi";
    write_cfi(p, f);
    auto bytes = slurp(p);
    REQUIRE(bytes.size() == 28);
    CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "CFI1");
    // width = height = 1, little-endian
    CHECK(bytes[4] == 1);
    CHECK(bytes[5] == 0);
    CHECK(bytes[8] == 1);
    // 1.0 as LE f64: 00 00 00 00 00 00 F0 3F
    CHECK(bytes[18] == 0xF0);
    CHECK(bytes[19] == 0x3F);
    // -2.0: 00 00 00 00 00 00 00 C0
    CHECK(bytes[27] == 0xC0);
}

TEST_CASE("CFI round trip is bit-exact on random fields") {
    TempDir tmp;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    ComplexField f(9, 17);
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j) f(i, j) = Complex(g(rng), g(rng));
    const fs::path p = tmp.path / "rt.cfi";
    write_cfi(p, f);
    ComplexField back = read_cfi(p);
    REQUIRE(back.rows() == 9);
    REQUIRE(back.cols() == 17);
    CHECK(max_abs_diff(back, f) == 0.0);
}

TEST_CASE("CFI refuses non-finite values, naming the pixel") {
    TempDir tmp;
    ComplexField f = ComplexField::Zero(3, 3);
    f(2, 1) = Complex(0.0, std::nan(""));
    CHECK_THROWS_WITH_AS(write_cfi(tmp.path / "nan.cfi", f),
                         doctest::Contains("non-finite value at pixel (2,1)"), IoError);
    std::ofstream(tmp.path / "junk.cfi", std::ios::binary) << "NOPE";
    CHECK_THROWS_WITH_AS(read_cfi(tmp.path / "junk.cfi"), doctest::Contains("bad CFI magic"),
                         IoError);
}

TEST_CASE("exported amplitude view round-trips within quantization") {
    TempDir tmp;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    ComplexField f(12, 12);
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j) f(i, j) = std::polar(u(rng), u(rng) - 1.5);
    const fs::path p = tmp.path / "amp.pgm";
    export_view(f, View::Amplitude, p);
    RealField amp = import_view(p);
    const double step = f.abs().maxCoeff() / 65535.0;
    CHECK((amp - f.abs()).abs().maxCoeff() <= 0.5 * step * 1.0001);
}

TEST_CASE("exported phase view spans [-pi, pi] and round-trips") {
    TempDir tmp;
    ComplexField f(8, 8);
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j)
            f(i, j) = std::polar(1.0, -M_PI + 2 * M_PI * double(i * 8 + j) / 64.0);
    const fs::path p = tmp.path / "ph.pgm";
    export_view(f, View::Phase, p);
    RealField ph = import_view(p);
    const double step = 2 * M_PI / 65535.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i)
        for (Eigen::Index j = 0; j < f.cols(); ++j)
            CHECK(std::abs(ph(i, j) - std::arg(f(i, j))) <= 0.5 * step * 1.0001);
}

TEST_CASE("zero field exports without dividing by zero") {
    TempDir tmp;
    ComplexField f = ComplexField::Zero(4, 4);
    const fs::path p = tmp.path / "zero.pgm";
    export_view(f, View::Amplitude, p);
    CHECK((read_pgm16(p) == 0).all());
}

TEST_CASE("config round-trips through JSON with defaults materialized") {
    AppConfig cfg;
    cfg.optics.tile_size = 128;
    cfg.optics.tile_overlap = 16;
    cfg.run.iters = 7;
    cfg.run.lag = 3;
    cfg.run.noise.enabled = true;
    cfg.run.noise.seed = 99;
    AppConfig back = config_from_json(config_to_json(cfg));
    CHECK(back.optics.tile_size == 128);
    CHECK(back.optics.tile_overlap == 16);
    CHECK(back.optics.wavelength == cfg.optics.wavelength);
    CHECK(back.run.iters == 7);
    REQUIRE(back.run.lag.has_value());
    CHECK(*back.run.lag == 3);
    CHECK(back.run.noise.enabled);
    CHECK(back.run.noise.seed == 99);
    // "auto" lag stays unset
    AppConfig def = config_from_json(config_to_json(AppConfig{}));
    CHECK_FALSE(def.run.lag.has_value());
}

TEST_CASE("strict parsing rejects unknown keys at every level") {
    CHECK_THROWS_WITH_AS(config_from_json(R"({"optics": {}, "runs": {}})"),
                         doctest::Contains("unknown key \"runs\""), ConfigError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"optics": {"wavelength_nm": 525}})"),
                         doctest::Contains("unknown key \"wavelength_nm\""), ConfigError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"run": {"iterations": 5}})"),
                         doctest::Contains("unknown key \"iterations\""), ConfigError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"run": {"noise": {"sigma": 1}}})"),
                         doctest::Contains("unknown key \"sigma\""), ConfigError);
    CHECK_THROWS_AS(config_from_json("not json"), ConfigError);
}

TEST_CASE("invalid optics and run values are refused") {
    CHECK_THROWS_AS(config_from_json(R"({"optics": {"tile_overlap_px": 300}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"optics": {"objective_na": -0.1}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"run": {"iters": 0}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"run": {"order": "zigzag"}})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"run": {"mode": "batch"}})"), ConfigError);
}

TEST_CASE("empty JSON object yields the stock configuration") {
    AppConfig cfg = config_from_json("{}");
    CHECK(cfg.optics.wavelength == doctest::Approx(0.525));
    CHECK(cfg.optics.objective_na == doctest::Approx(0.1));
    CHECK(cfg.optics.tile_size == 256);
    CHECK(cfg.optics.tile_overlap == 26);
    CHECK(cfg.optics.led_grid_rows == 64);
    CHECK(cfg.run.iters == 5);
    CHECK(cfg.run.order == "spiral");
    CHECK(cfg.run.mode == "offline");
}

TEST_CASE("dataset directory round-trips frames, timestamps and truth") {
    TempDir tmp;
    OpticalConfig cfg = toy_cfg();
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 55);
    LedSequence seq = led_sequence(UpdateOrder::Spiral, cfg);
    FrameSet fs_out = simulate_dataset(obj, seq, cfg);
    write_dataset(tmp.path, fs_out, &obj);

    Dataset ds = read_dataset(tmp.path);
    REQUIRE(ds.frames.frames.size() == fs_out.frames.size());
    for (size_t i = 0; i < fs_out.frames.size(); ++i) {
        const Frame* f = ds.frames.find(fs_out.frames[i].led);
        REQUIRE(f != nullptr);
        CHECK((f->image == fs_out.frames[i].image).all());
        CHECK(f->timestamp_s == doctest::Approx(fs_out.frames[i].timestamp_s));
    }
    CHECK(ds.frames.cfg.tile_size == cfg.tile_size);
    REQUIRE(ds.object_truth.has_value());
    CHECK(max_abs_diff(read_cfi(*ds.object_truth), obj) == 0.0);
}

TEST_CASE("dataset reader enforces the manifest contract") {
    TempDir tmp;
    OpticalConfig cfg = toy_cfg();
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 56);
    FrameSet fs_out = simulate_dataset(obj, {cfg.center_led}, cfg);
    write_dataset(tmp.path, fs_out);

    SUBCASE("missing manifest") {
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path / "nowhere"),
                             doctest::Contains("missing manifest.json"), IoError);
    }
    SUBCASE("missing referenced frame") {
        fs::remove(tmp.path / "frames" / "led_32_32.pgm");
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), doctest::Contains("referenced frame missing"),
                             IoError);
    }
    SUBCASE("wrong format version") {
        std::ofstream(tmp.path / "manifest.json")
            << R"({"format_version": "fpm-dataset/2", "config": {}, "frames": []})";
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path),
                             doctest::Contains("unrecognized manifest version"), IoError);
    }
    SUBCASE("LED outside the grid") {
        std::ofstream(tmp.path / "manifest.json") << R"({
            "format_version": "fpm-dataset/1",
            "config": {"optics": {}},
            "frames": [{"file": "frames/led_32_32.pgm", "led_row": 64, "led_col": 0}]})";
        CHECK_THROWS_WITH_AS(read_dataset(tmp.path), doctest::Contains("outside grid"), IoError);
    }
}
