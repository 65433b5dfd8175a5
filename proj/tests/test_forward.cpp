#include <doctest.h>

#include <cmath>

#include "fpm/forward.hpp"
#include "fpm/metrics.hpp"
#include "fpm/recon.hpp"
#include "test_util.hpp"

using namespace fpm;
using namespace fpm::testutil;

TEST_CASE("phase-disk object: unit amplitude, pi/2 phase inside the disk") {
    ComplexField obj = synth_object(ObjectKind::PhaseDisk, 256, 0);
    CHECK((obj.abs() - 1.0).abs().maxCoeff() < 1e-15);
    CHECK(std::arg(obj(128, 128)) == doctest::Approx(M_PI / 2));
    CHECK(std::arg(obj(128, 128 + 40)) == doctest::Approx(0.0)); // outside r = 32
    CHECK(std::arg(obj(128, 128 + 20)) == doctest::Approx(M_PI / 2));
}

TEST_CASE("bars object: periods halve from 64 down to 4 HR px") {
    auto groups = bar_groups(1024);
    REQUIRE(groups.size() == 5);
    CHECK(groups.front().period_px == 64);
    CHECK(groups.back().period_px == 4);
    for (size_t i = 1; i < groups.size(); ++i)
        CHECK(groups[i].period_px * 2 == groups[i - 1].period_px);
    ComplexField obj = synth_object(ObjectKind::Bars, 1024, 0);
    for (const auto& g : groups) {
        const int row = (g.row_begin + g.row_end) / 2;
        for (int x : g.bar_centers) CHECK(std::abs(obj(row, x)) == doctest::Approx(0.1));
        for (int x : g.gap_centers) CHECK(std::abs(obj(row, x)) == doctest::Approx(1.0));
    }
}

TEST_CASE("objects are bit-deterministic given (kind, size, seed)") {
    for (auto kind : {ObjectKind::Bars, ObjectKind::PhaseDisk, ObjectKind::Composite}) {
        ComplexField a = synth_object(kind, 256, 42);
        ComplexField b = synth_object(kind, 256, 42);
        CHECK(max_abs_diff(a, b) == 0.0);
    }
    CHECK(max_abs_diff(synth_object(ObjectKind::Composite, 256, 1),
                       synth_object(ObjectKind::Composite, 256, 2)) > 0.0);
}

TEST_CASE("composite object stays inside the amplitude and phase bounds") {
    ComplexField obj = synth_object(ObjectKind::Composite, 256, 9);
    for (int i = 0; i < 256; ++i)
        for (int j = 0; j < 256; ++j) {
            CHECK(std::abs(obj(i, j)) >= 0.1);
            CHECK(std::abs(obj(i, j)) <= 1.0);
            CHECK(std::abs(std::arg(obj(i, j))) <= M_PI / 2);
        }
}

TEST_CASE("unknown object kind is rejected") {
    CHECK_THROWS_AS(object_kind_from_string("usaf"), ConfigError);
}

TEST_CASE("flat object, on-axis LED: intensity constant up to quantization") {
    OpticalConfig cfg = toy_cfg();
    ComplexField flat = ComplexField::Constant(cfg.hr_size(), cfg.hr_size(), Complex(1, 0));
    Pupil pupil = build_pupil(cfg, cfg.tile_size, 0.0);
    const double scale = auto_scale(flat, pupil, cfg);
    IntensityImage img = simulate_frame(flat, {0, 0}, pupil, cfg, scale);
    const uint16_t v = img(0, 0);
    CHECK(v == doctest::Approx(0.8 * 65535).epsilon(0.01));
    CHECK((img.cast<int>() - int(v)).abs().maxCoeff() <= 1);
}

TEST_CASE("offset extraction equals simulating a pre-tilted object") {
    OpticalConfig cfg = toy_cfg();
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 3);
    Pupil pupil = build_pupil(cfg, cfg.tile_size, 0.0);
    // pick a wavevector that lands on an integer pixel offset
    const double dk = 1.0 / (cfg.tile_size * cfg.dx_obj());
    WaveVector wv{3 * dk, -2 * dk};
    RealField via_offset = simulate_intensity(obj, wv, pupil, cfg);

    const int n = cfg.hr_size();
    ComplexField tilted(n, n);
    const double dx = cfg.dx_hr();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = (j - n / 2) * dx, y = (i - n / 2) * dx;
            tilted(i, j) = obj(i, j) * std::polar(1.0, -2 * M_PI * (wv.fx * x + wv.fy * y));
        }
    RealField via_tilt = simulate_intensity(tilted, {0, 0}, pupil, cfg);
    CHECK((via_offset - via_tilt).abs().maxCoeff() / via_offset.maxCoeff() < 1e-10);
}

TEST_CASE("one-pitch LED offset on the stock HR canvas rounds to 18 px") {
    OpticalConfig cfg; // stock defaults: tile 256, upsample 4
    auto wv = illumination_wavevector({cfg.center_led.row, cfg.center_led.col + 1}, {0, 0}, cfg);
    auto [oy, ox] = spectrum_offset_px(wv, cfg);
    CHECK(oy == 0);
    CHECK(ox == -18); // LED at +x samples the -x side
}

TEST_CASE("illumination beyond the upsample headroom is refused") {
    OpticalConfig cfg = toy_cfg();
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 3);
    Pupil pupil = build_pupil(cfg, cfg.tile_size, 0.0);
    const double f_max = 0.95 / cfg.wavelength; // near-grazing illumination
    CHECK_THROWS_WITH_AS(simulate_intensity(obj, {f_max, 0}, pupil, cfg),
                         doctest::Contains("illumination NA too high"), DataError);
}

TEST_CASE("3x3 scan of a flat object: 9 equal brightfield frames") {
    OpticalConfig cfg = toy_cfg();
    ComplexField flat = ComplexField::Constant(cfg.hr_size(), cfg.hr_size(), Complex(1, 0));
    LedSequence seq = led_sequence(UpdateOrder::Raster, cfg);
    FrameSet fs = simulate_dataset(flat, seq, cfg);
    REQUIRE(fs.frames.size() == 9);
    for (const auto& f : fs.frames)
        CHECK((f.image.cast<int>() - fs.frames[0].image.cast<int>()).abs().maxCoeff() <= 1);
}

TEST_CASE("timestamps step by pattern delay plus exposure") {
    OpticalConfig cfg = toy_cfg();
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 5);
    FrameSet fs = simulate_dataset(obj, led_sequence(UpdateOrder::Spiral, cfg), cfg);
    const double step = cfg.acq_pattern_delay + cfg.acq_exposure;
    for (size_t i = 0; i < fs.frames.size(); ++i)
        CHECK(fs.frames[i].timestamp_s == doctest::Approx((i + 1) * step));
    // 169 frames at 0.33 s/frame land near the minute mark
    CHECK(169 * step == doctest::Approx(55.77));
}

TEST_CASE("13x13 scan yields 169 frames") {
    OpticalConfig cfg = toy_cfg();
    cfg.led_scan_rows = cfg.led_scan_cols = 13;
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 5);
    FrameSet fs = simulate_dataset(obj, led_sequence(UpdateOrder::Spiral, cfg), cfg);
    CHECK(fs.frames.size() == 169);
}

TEST_CASE("darkfield frames are dimmer than brightfield for a DC-dominated object") {
    OpticalConfig cfg = toy_cfg();
    cfg.led_scan_rows = cfg.led_scan_cols = 9; // reaches past the objective NA
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 7);
    Pupil pupil = build_pupil(cfg, cfg.tile_size, 0.0);
    const double scale = auto_scale(obj, pupil, cfg);
    auto frame_mean = [&](LedIndex led) {
        auto wv = illumination_wavevector(led, {0, 0}, cfg);
        return simulate_frame(obj, wv, pupil, cfg, scale).cast<double>().mean();
    };
    const double bright = frame_mean(cfg.center_led);
    const double dark = frame_mean({cfg.center_led.row, cfg.center_led.col + 4});
    // LED 4 pitches out: sin = 10/sqrt(100+6889) = 0.120 > NA 0.1
    CHECK(dark < bright);
}

TEST_CASE("noiseless simulation is bit-deterministic, seeded noise reproducible") {
    OpticalConfig cfg = toy_cfg();
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 11);
    LedSequence seq = led_sequence(UpdateOrder::Spiral, cfg);
    FrameSet a = simulate_dataset(obj, seq, cfg);
    FrameSet b = simulate_dataset(obj, seq, cfg);
    for (size_t i = 0; i < a.frames.size(); ++i)
        CHECK((a.frames[i].image == b.frames[i].image).all());

    NoiseModel noise{true, 1e4, 77};
    FrameSet c = simulate_dataset(obj, seq, cfg, noise);
    FrameSet d = simulate_dataset(obj, seq, cfg, noise);
    bool differs_from_clean = false;
    for (size_t i = 0; i < c.frames.size(); ++i) {
        CHECK((c.frames[i].image == d.frames[i].image).all());
        if (!(c.frames[i].image == a.frames[i].image).all()) differs_from_clean = true;
    }
    CHECK(differs_from_clean);
}

TEST_CASE("on-axis forward model equals low-pass filtering plus decimation") {
    OpticalConfig cfg = toy_cfg();
    ComplexField obj = synth_object(ObjectKind::Composite, cfg.hr_size(), 13);
    Pupil pupil = build_pupil(cfg, cfg.tile_size, 0.0);
    RealField sim = simulate_intensity(obj, {0, 0}, pupil, cfg);

    // oracle: mask the HR spectrum to the pupil disk, back-transform, sample
    // every upsample-th pixel
    const int N = cfg.hr_size(), n = cfg.tile_size, up = cfg.upsample;
    ComplexField spec = fft2(obj);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            if (std::hypot(i - N / 2.0, j - N / 2.0) > pupil.radius_px) spec(i, j) = Complex(0, 0);
    ComplexField filtered = ifft2(spec);
    RealField oracle(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) oracle(i, j) = std::norm(filtered(i * up, j * up));
    CHECK((sim / sim.maxCoeff() - oracle / oracle.maxCoeff()).abs().maxCoeff() < 1e-9);
}
