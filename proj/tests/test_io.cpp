// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "mbrec/io.hpp"
#include "mbrec/presets.hpp"

using namespace mbrec;
namespace fs = std::filesystem;

namespace {

const fs::path tmp = fs::temp_directory_path() / "mbrec_io_test";

struct TmpDir {
    TmpDir() { fs::create_directories(tmp); }
    ~TmpDir() { fs::remove_all(tmp); }
} guard;

ChannelTensor random_tensor(int M, int N, int P) {
    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    ChannelTensor y(M, N, P);
    for (auto& v : y.values) v = {g(rng), g(rng)};
    return y;
}

}  // namespace

TEST_CASE("tensor round trip preserves every bit") {
    const auto y = random_tensor(2, 3, 5);
    RfConfig rf;
    rf.sub_bandwidth = 12.5e6;
    rf.sub_band_count = 5;
    rf.snr_db = 17.0;
    const auto path = (tmp / "t.bin").string();
    save_tensor(y, rf, path);

    RfConfig back;
    const auto z = load_tensor(path, &back);
    CHECK(z.M == 2);
    CHECK(z.N == 3);
    CHECK(z.P == 5);
    CHECK(z.values == y.values);
    CHECK(back.sub_bandwidth == 12.5e6);
    CHECK(back.snr_db == 17.0);
}

TEST_CASE("corrupted magic is a format error") {
    const auto y = random_tensor(1, 1, 4);
    const auto path = (tmp / "bad.bin").string();
    save_tensor(y, RfConfig{}, path);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("NOPE", 4);
    }
    CHECK_THROWS_AS(load_tensor(path), format_error);
}

TEST_CASE("truncated payload is a format error") {
    const auto y = random_tensor(2, 2, 8);
    const auto path = (tmp / "short.bin").string();
    save_tensor(y, RfConfig{}, path);
    fs::resize_file(path, fs::file_size(path) - 9);
    CHECK_THROWS_AS(load_tensor(path), format_error);
}

TEST_CASE("missing file is a format error") {
    CHECK_THROWS_AS(load_tensor((tmp / "absent.bin").string()), format_error);
}

TEST_CASE("scene round trip") {
    const PresetScenario pre = preset_scenario("blocked");
    const auto path = (tmp / "scene.json").string();
    save_scene(pre.scene, pre.rf, pre.trace, path);

    Scene sc;
    RfConfig rf;
    TraceOptions trace;
    load_scene(path, sc, rf, trace);
    CHECK(sc.walls.size() == 3);
    CHECK(sc.walls[1].label == "upper");
    REQUIRE(sc.obstacle.has_value());
    CHECK(sc.obstacle->vertices.size() == 4);
    CHECK(sc.tx.element_count == 16);
    CHECK(sc.rx.element_count == 121);
    CHECK(sc.rx.element_spacing == doctest::Approx(pre.scene.rx.element_spacing));
    CHECK(rf.carrier_frequency == 30e9);
    CHECK(trace.include_los == false);
}

TEST_CASE("scene spacing accepts wavelengths") {
    const auto path = (tmp / "lam.json").string();
    std::ofstream(path) << R"({
      "room": {"width": 6.5, "height": 6.5},
      "walls": [{"label": "left", "a": [0, 0], "b": [0, 6]}],
      "obstacle": null,
      "tx": {"reference": [2.1, 4.1], "elements": 2, "spacing_lambda": 0.5},
      "rx": {"reference": [3.3, 1.0], "elements": 2, "spacing_m": 0.01},
      "rf": {"carrier_frequency_hz": 30e9}
    })";
    Scene sc;
    RfConfig rf;
    TraceOptions trace;
    load_scene(path, sc, rf, trace);
    CHECK(sc.tx.element_spacing == doctest::Approx(0.5 * rf.wavelength()));
    CHECK(sc.rx.element_spacing == 0.01);
    CHECK(trace.include_los == true);  // default for custom configs
}

TEST_CASE("malformed scene JSON is a format error") {
    const auto path = (tmp / "broken.json").string();
    std::ofstream(path) << "{ not json";
    Scene sc;
    RfConfig rf;
    TraceOptions trace;
    CHECK_THROWS_AS(load_scene(path, sc, rf, trace), format_error);
}

TEST_CASE("out-of-room scene is rejected on load") {
    const auto path = (tmp / "oob.json").string();
    std::ofstream(path) << R"({
      "room": {"width": 6.5, "height": 6.5},
      "walls": [{"label": "left", "a": [0, 0], "b": [0, 6]}],
      "tx": {"reference": [9.0, 4.1], "elements": 1, "spacing_m": 0.01},
      "rx": {"reference": [3.3, 1.0], "elements": 1, "spacing_m": 0.01}
    })";
    Scene sc;
    RfConfig rf;
    TraceOptions trace;
    CHECK_THROWS_AS(load_scene(path, sc, rf, trace), format_error);
}

TEST_CASE("truth round trip including masks") {
    std::vector<PathTruth> truth(2);
    truth[0].bounce_order = 1;
    truth[0].wall_labels = {"upper"};
    truth[0].scatterers = {{2.43, 6.0}};
    truth[0].reference_delay = 2.34e-8;
    truth[0].reference_distance = 7.0;
    truth[0].amplitude = {0.14, -0.02};
    truth[0].blockage_mask = {1, 0, 1, 1};
    truth[1].bounce_order = 2;
    truth[1].wall_labels = {"upper", "right"};
    truth[1].scatterers = {{3.9, 6.0}, {6.0, 3.8}};
    truth[1].reference_delay = 3.2e-8;
    truth[1].reference_distance = 9.5;
    truth[1].amplitude = {0.1, 0.0};
    truth[1].blockage_mask = {1, 1, 1, 1};

    const auto path = (tmp / "truth.json").string();
    save_truth(truth, path);
    const auto back = load_truth(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].blockage_mask == truth[0].blockage_mask);
    CHECK(back[0].wall_labels == truth[0].wall_labels);
    CHECK(back[1].scatterers[1].x == 6.0);
    CHECK(back[1].reference_delay == truth[1].reference_delay);
    CHECK(back[0].amplitude == truth[0].amplitude);
}

TEST_CASE("estimates round trip") {
    SageState state;
    state.iteration = 4;
    state.converged = true;
    state.noise_variance = 1.5e-3;
    state.objective_trace = {10.0, 4.0, 2.0, 1.9};
    state.interference_weights = {0.7071067811865476, 0.7071067811865476};
    PathEstimate e;
    e.bounce_class = BounceClass::two_bounce;
    e.scatterers = {{3.8, 6.0}, {6.0, 3.6}};
    e.reference_delay = 3.18e-8;
    e.equivalent_amplitude = {{0.1, 0.2}, {0.0, 0.0}};
    e.blockage_estimate = {1, 0};
    e.delays = {3.18e-8, 3.19e-8};
    e.objective_value = 12.5;
    state.estimates.push_back(e);

    const auto path = (tmp / "est.json").string();
    save_estimates(state, path);
    const auto back = load_estimates(path);
    CHECK(back.iteration == 4);
    CHECK(back.converged);
    REQUIRE(back.estimates.size() == 1);
    CHECK(back.estimates[0].bounce_class == BounceClass::two_bounce);
    CHECK(back.estimates[0].equivalent_amplitude == e.equivalent_amplitude);
    CHECK(back.estimates[0].blockage_estimate == e.blockage_estimate);
    CHECK(back.estimates[0].delays == e.delays);
    CHECK(back.objective_trace == state.objective_trace);
}
