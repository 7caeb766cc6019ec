// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mbrec/presets.hpp"
#include "mbrec/sage.hpp"
#include "mbrec/simulate.hpp"

using namespace mbrec;

namespace {

std::mt19937 rng(20240903);

// Small scene for oracle-sized problems: M=2, N=4, P=16.
struct SmallSetup {
    Scene scene;
    RfConfig rf;
};

SmallSetup small_setup() {
    SmallSetup s;
    // Delay bin c/(16*50e6) = 0.375 m; the unambiguous delay range is only
    // P bins = 6 m, so the room is compact enough that every wall path is
    // shorter than that.
    s.rf.sub_bandwidth = 50e6;
    s.rf.sub_band_count = 16;
    s.rf.snr_db = std::numeric_limits<double>::infinity();
    s.scene.room_width = 3.0;
    s.scene.room_height = 3.0;
    s.scene.walls = {{{0.0, 0.0}, {0.0, 2.8}, "left"},
                     {{0.0, 2.8}, {2.8, 2.8}, "upper"},
                     {{2.8, 0.0}, {2.8, 2.8}, "right"}};
    const double sp = 0.5 * s.rf.wavelength();
    s.scene.tx = {{1.0, 2.0}, 2, sp, {1.0, 0.0}};
    s.scene.rx = {{1.6, 0.5}, 4, sp, {1.0, 0.0}};
    return s;
}

// Tensor holding exactly the given dictionary candidates as unit-amplitude
// paths (per-channel delays retraced through the scatterers).
ChannelTensor tensor_from_candidates(const SmallSetup& s,
                                     const std::vector<DictionaryEntry>& entries,
                                     const std::vector<cplx>& amps) {
    const int M = s.scene.tx.element_count, N = s.scene.rx.element_count;
    ChannelTensor y(M, N, s.rf.sub_band_count);
    for (std::size_t l = 0; l < entries.size(); ++l) {
        PropagationPath p;
        p.bounce_order = static_cast<int>(entries[l].points.size());
        p.M = M;
        p.N = N;
        p.scatterers_ref = entries[l].points;
        p.reference_amplitude = amps[l];
        const std::size_t mn = static_cast<std::size_t>(M) * N;
        p.blockage_mask.assign(mn, 1);
        p.sns_attenuation.assign(mn, cplx(1.0, 0.0));
        p.delays.resize(mn);
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n)
                p.delays[static_cast<std::size_t>(m) * N + n] =
                    path_length(s.scene.tx.element(m), entries[l].points,
                                s.scene.rx.element(n)) /
                    kSpeedOfLight;
        const ChannelTensor z = synthesize_path(p, s.rf);
        for (std::size_t i = 0; i < y.values.size(); ++i)
            y.values[i] += z.values[i];
    }
    return y;
}

double entry_delay(const SmallSetup& s, const DictionaryEntry& e) {
    return path_length(s.scene.tx.element(0), e.points, s.scene.rx.element(0)) /
           kSpeedOfLight;
}

}  // namespace

TEST_CASE("interference weights are beta = 1/sqrt(L)") {
    const SmallSetup s = small_setup();
    const auto dict = build_dictionary(1, 3.6 / kSpeedOfLight, s.scene, 0.2,
                                       1.5 * s.rf.delay_bin());
    REQUIRE_FALSE(dict.empty());
    const auto y =
        tensor_from_candidates(s, {dict.entries[0]}, {cplx(1.0, 0.0)});
    const SageState st = run_gm_sage(y, s.scene, s.rf);
    double sum_sq = 0.0;
    for (const double b : st.interference_weights) sum_sq += b * b;
    CHECK(sum_sq == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("e_step reproduces z_l plus weighted residual") {
    const SmallSetup s = small_setup();
    const auto dict = build_dictionary(1, 3.6 / kSpeedOfLight, s.scene, 0.2,
                                       1.5 * s.rf.delay_bin());
    REQUIRE(dict.entries.size() >= 2);
    const auto y = tensor_from_candidates(
        s, {dict.entries.front(), dict.entries.back()},
        {cplx(1.0, 0.0), cplx(0.0, 0.7)});

    SageState st;
    st.interference_weights = {0.6, 0.8};
    const int M = s.scene.tx.element_count, N = s.scene.rx.element_count;
    for (int l = 0; l < 2; ++l) {
        PathEstimate e;
        e.bounce_class = BounceClass::one_bounce;
        e.scatterers = l == 0 ? dict.entries.front().points : dict.entries.back().points;
        const std::size_t mn = static_cast<std::size_t>(M) * N;
        e.equivalent_amplitude.assign(mn, l == 0 ? cplx(0.5, 0.0) : cplx(0.0, 0.3));
        e.delays.assign(mn, entry_delay(s, l == 0 ? dict.entries.front()
                                                  : dict.entries.back()));
        e.blockage_estimate.assign(mn, 1);
        st.estimates.push_back(e);
    }

    const ChannelTensor h0 = e_step(st, 0, y, s.rf);
    const ChannelTensor z0 = synthesize_estimate(st.estimates[0], M, N, s.rf);
    const ChannelTensor z1 = synthesize_estimate(st.estimates[1], M, N, s.rf);
    for (std::size_t i = 0; i < y.values.size(); ++i) {
        const cplx residual = y.values[i] - z0.values[i] - z1.values[i];
        const cplx want = z0.values[i] + 0.6 * residual;
        CHECK(std::abs(h0.values[i] - want) < 1e-10);
    }

    // Hidden-data conservation: sum_l (hidden_l - z_l) = (sum_l beta_l) r.
    const ChannelTensor h1 = e_step(st, 1, y, s.rf);
    for (std::size_t i = 0; i < y.values.size(); ++i) {
        const cplx residual = y.values[i] - z0.values[i] - z1.values[i];
        const cplx lhs =
            (h0.values[i] - z0.values[i]) + (h1.values[i] - z1.values[i]);
        CHECK(std::abs(lhs - 1.4 * residual) < 1e-10);
    }
}

TEST_CASE("dictionary entries satisfy the delay constraint") {
    const SmallSetup s = small_setup();
    const double tol = 1.5 * s.rf.delay_bin();
    for (int bounce : {1, 2}) {
        const auto dict =
            build_dictionary(bounce, 4.2 / kSpeedOfLight, s.scene,
                             bounce == 1 ? 0.1 : 0.2, tol);
        for (const auto& e : dict.entries) {
            CHECK(static_cast<int>(e.points.size()) == bounce);
            CHECK(std::abs(entry_delay(s, e) - 4.2 / kSpeedOfLight) <= tol + 1e-15);
        }
    }
}

TEST_CASE("dictionary contains the known wall reflection points") {
    const PresetScenario pre = preset_scenario("unblocked");
    const double tol = 1.5 * pre.rf.delay_bin();
    // Upper-wall one-bounce truth near (2.46, 6) at 0.1 m grid.
    auto dict = build_dictionary(1, 7.0036 / kSpeedOfLight, pre.scene, 0.1, tol);
    bool found = false;
    for (const auto& e : dict.entries)
        if (distance(e.points[0], {2.46, 6.0}) <= 0.1) found = true;
    CHECK(found);

    // Upper-right two-bounce truth near ((3.94, 6), (6, 3.84)) at 0.2 m grid.
    dict = build_dictionary(2, 9.5483 / kSpeedOfLight, pre.scene, 0.2, tol);
    found = false;
    for (const auto& e : dict.entries)
        if (distance(e.points[0], {3.94, 6.0}) <= 0.2 * std::numbers::sqrt2 &&
            distance(e.points[1], {6.0, 3.84}) <= 0.2 * std::numbers::sqrt2)
            found = true;
    CHECK(found);
}

TEST_CASE("delays shorter than the direct path give empty dictionaries") {
    const PresetScenario pre = preset_scenario("unblocked");
    const double los = distance(pre.scene.tx.element(0), pre.scene.rx.element(0));
    const auto dict = build_dictionary(1, 0.5 * los / kSpeedOfLight, pre.scene, 0.1,
                                       1.5 * pre.rf.delay_bin());
    CHECK(dict.empty());
}

TEST_CASE("equivalent amplitude is exact on a pure steering vector") {
    const SmallSetup s = small_setup();
    const int M = 2, N = 4;
    const std::size_t mn = M * N;
    std::vector<double> delays(mn);
    std::vector<cplx> amps(mn);
    for (std::size_t c = 0; c < mn; ++c) {
        delays[c] = std::uniform_real_distribution<double>(1e-9, 3e-8)(rng);
        amps[c] = std::polar(std::uniform_real_distribution<double>(0.1, 1.0)(rng),
                             std::uniform_real_distribution<double>(0.0, 6.28)(rng));
    }
    ChannelTensor y(M, N, s.rf.sub_band_count);
    const auto f = frequency_grid(s.rf);
    for (std::size_t c = 0; c < mn; ++c)
        for (int p = 0; p < s.rf.sub_band_count; ++p)
            y.values[c * s.rf.sub_band_count + p] =
                amps[c] * std::polar(1.0, -2.0 * std::numbers::pi * f[p] * delays[c]);
    const auto fit = estimate_equivalent_amplitude(y, delays, s.rf);
    for (std::size_t c = 0; c < mn; ++c) CHECK(std::abs(fit[c] - amps[c]) < 1e-12);
}

TEST_CASE("LS amplitude is the residual minimizer (convexity probe)") {
    const SmallSetup s = small_setup();
    const auto dict = build_dictionary(1, 3.6 / kSpeedOfLight, s.scene, 0.2,
                                       1.5 * s.rf.delay_bin());
    REQUIRE_FALSE(dict.empty());
    const auto y = tensor_from_candidates(s, {dict.entries[0]}, {cplx(0.8, 0.3)});
    std::vector<double> delays(8);
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 4; ++n)
            delays[m * 4 + n] = path_length(s.scene.tx.element(m),
                                            dict.entries[0].points,
                                            s.scene.rx.element(n)) /
                                kSpeedOfLight;
    const auto fit = estimate_equivalent_amplitude(y, delays, s.rf);
    const auto f = frequency_grid(s.rf);
    auto residual = [&](double scale) {
        double r = 0.0;
        for (std::size_t c = 0; c < 8; ++c)
            for (int p = 0; p < s.rf.sub_band_count; ++p) {
                const cplx model = scale * fit[c] *
                                   std::polar(1.0, -2.0 * std::numbers::pi * f[p] * delays[c]);
                r += std::norm(y.values[c * s.rf.sub_band_count + p] - model);
            }
        return r;
    };
    const double at_fit = residual(1.0);
    CHECK(residual(1.01) > at_fit);
    CHECK(residual(0.99) > at_fit);
}

TEST_CASE("m_step returns the generating candidate with near-zero objective") {
    const SmallSetup s = small_setup();
    const double tol = 1.5 * s.rf.delay_bin();
    for (int trial = 0; trial < 20; ++trial) {
        const int bounce = 1 + (trial % 2);
        const double d_ref =
            std::uniform_real_distribution<double>(3.2, 5.2)(rng);
        const auto dict = build_dictionary(bounce, d_ref / kSpeedOfLight, s.scene,
                                           bounce == 1 ? 0.1 : 0.2, tol);
        if (dict.empty()) continue;
        const std::size_t pick = std::uniform_int_distribution<std::size_t>(
            0, dict.entries.size() - 1)(rng);
        const auto y = tensor_from_candidates(s, {dict.entries[pick]},
                                              {cplx(1.0, -0.5)});
        const PathEstimate est = m_step(y, dict, s.scene, s.rf, 1.0, 1.0);
        REQUIRE(est.scatterers.size() == dict.entries[pick].points.size());
        for (std::size_t i = 0; i < est.scatterers.size(); ++i)
            CHECK(distance(est.scatterers[i], dict.entries[pick].points[i]) < 1e-12);
        CHECK(est.objective_value < 1e-9 * y.energy());
    }
}

TEST_CASE("blockage detection thresholds against sigma0^2 / P") {
    const double sigma0 = 1e-3;
    const int P = 101;
    const double floor = 9.0 * sigma0 / P;
    std::vector<cplx> amps{cplx(std::sqrt(floor) * 1.01, 0.0),
                           cplx(std::sqrt(floor) * 0.99, 0.0), cplx(0.0, 0.0),
                           cplx(0.0, 1.0)};
    const auto mask = detect_blockage(amps, sigma0, P, 9.0);
    CHECK(mask == std::vector<std::uint8_t>{1, 0, 0, 1});
    CHECK_THROWS_AS(detect_blockage(amps, sigma0, P, 0.0), std::invalid_argument);
}

TEST_CASE("bounce classification picks the smaller objective, ties to one") {
    PathEstimate one, two;
    one.bounce_class = BounceClass::one_bounce;
    two.bounce_class = BounceClass::two_bounce;
    one.objective_value = 2.0;
    two.objective_value = 1.0;
    CHECK(classify_bounce(one, two)->bounce_class == BounceClass::two_bounce);
    two.objective_value = 2.0;
    CHECK(classify_bounce(one, two)->bounce_class == BounceClass::one_bounce);
    CHECK(classify_bounce(std::nullopt, two)->bounce_class == BounceClass::two_bounce);
    CHECK_FALSE(classify_bounce(std::nullopt, std::nullopt).has_value());
}

TEST_CASE("iterative loop matches exhaustive joint search on small instances") {
    // Oracle equivalence on M=2, N=4, P=16 noiseless instances with L <= 2.
    const SmallSetup s = small_setup();
    const double tol = 1.5 * s.rf.delay_bin();
    const double bin_m = s.rf.delay_bin() * kSpeedOfLight;
    int done = 0;
    for (int trial = 0; trial < 200 && done < 20; ++trial) {
        const int L = 1 + (trial % 2);
        // Draw well-separated candidate paths from real dictionaries.
        std::vector<DictionaryEntry> chosen;
        std::vector<double> dists;
        for (int l = 0; l < L; ++l) {
            const int bounce = std::uniform_int_distribution<int>(1, 2)(rng);
            const double d_ref =
                std::uniform_real_distribution<double>(3.2, 5.2)(rng);
            const auto dict = build_dictionary(bounce, d_ref / kSpeedOfLight, s.scene,
                                               bounce == 1 ? 0.1 : 0.2, tol);
            if (dict.empty()) break;
            const auto& e = dict.entries[std::uniform_int_distribution<std::size_t>(
                0, dict.entries.size() - 1)(rng)];
            chosen.push_back(e);
            dists.push_back(path_length(s.scene.tx.element(0), e.points,
                                        s.scene.rx.element(0)));
        }
        if (static_cast<int>(chosen.size()) != L) continue;
        if (L == 2 && std::abs(dists[0] - dists[1]) < 3.0 * bin_m) continue;
        if (L == 2 && dists[0] > dists[1]) {
            std::swap(chosen[0], chosen[1]);
            std::swap(dists[0], dists[1]);
        }

        std::vector<cplx> amps;
        for (int l = 0; l < L; ++l)
            amps.push_back(std::polar(1.0, std::uniform_real_distribution<double>(
                                               0.0, 6.28)(rng)));
        const auto y = tensor_from_candidates(s, chosen, amps);

        const SageState st = run_gm_sage(y, s.scene, s.rf);
        REQUIRE(st.estimates.size() == static_cast<std::size_t>(L));

        // Exhaustive joint search over the same dictionaries, scored by the
        // true residual after per-channel LS fits (alternated to a fixed
        // point for L = 2).
        std::vector<SearchDictionary> dicts;
        for (int l = 0; l < L; ++l) {
            const int bounce = static_cast<int>(chosen[l].points.size());
            dicts.push_back(build_dictionary(
                bounce, st.reference.entries[l].delay, s.scene,
                bounce == 1 ? 0.1 : 0.2, tol));
            REQUIRE_FALSE(dicts.back().empty());
        }
        auto fit_residual = [&](const std::vector<const DictionaryEntry*>& pick) {
            // Exact per-channel joint LS residual: 1x1 or 2x2 normal equations.
            double res = 0.0;
            const int M = 2, N = 4, P = s.rf.sub_band_count;
            for (int c = 0; c < M * N; ++c) {
                std::vector<std::vector<cplx>> a(L, std::vector<cplx>(P));
                const auto f = frequency_grid(s.rf);
                for (int l = 0; l < L; ++l) {
                    const double tau =
                        path_length(s.scene.tx.element(c / N), pick[l]->points,
                                    s.scene.rx.element(c % N)) /
                        kSpeedOfLight;
                    for (int p = 0; p < P; ++p)
                        a[l][p] = std::polar(1.0, -2.0 * std::numbers::pi * f[p] * tau);
                }
                const cplx* yc = y.values.data() + static_cast<std::size_t>(c) * P;
                if (L == 1) {
                    cplx g{0.0, 0.0};
                    for (int p = 0; p < P; ++p) g += std::conj(a[0][p]) * yc[p];
                    g /= static_cast<double>(P);
                    for (int p = 0; p < P; ++p) res += std::norm(yc[p] - g * a[0][p]);
                } else {
                    // Solve the 2x2 normal equations exactly.
                    cplx g11{static_cast<double>(P), 0.0}, g22{static_cast<double>(P), 0.0};
                    cplx g12{0.0, 0.0}, b1{0.0, 0.0}, b2{0.0, 0.0};
                    for (int p = 0; p < P; ++p) {
                        g12 += std::conj(a[0][p]) * a[1][p];
                        b1 += std::conj(a[0][p]) * yc[p];
                        b2 += std::conj(a[1][p]) * yc[p];
                    }
                    const cplx det = g11 * g22 - g12 * std::conj(g12);
                    const cplx x1 = (g22 * b1 - g12 * b2) / det;
                    const cplx x2 = (g11 * b2 - std::conj(g12) * b1) / det;
                    for (int p = 0; p < P; ++p)
                        res += std::norm(yc[p] - x1 * a[0][p] - x2 * a[1][p]);
                }
            }
            return res;
        };

        std::vector<const DictionaryEntry*> best(L, nullptr);
        double best_res = std::numeric_limits<double>::max();
        if (L == 1) {
            for (const auto& e : dicts[0].entries) {
                std::vector<const DictionaryEntry*> pick{&e};
                const double r = fit_residual(pick);
                if (r < best_res) {
                    best_res = r;
                    best = pick;
                }
            }
        } else {
            for (const auto& e1 : dicts[0].entries)
                for (const auto& e2 : dicts[1].entries) {
                    std::vector<const DictionaryEntry*> pick{&e1, &e2};
                    const double r = fit_residual(pick);
                    if (r < best_res) {
                        best_res = r;
                        best = pick;
                    }
                }
        }

        for (int l = 0; l < L; ++l) {
            REQUIRE(st.estimates[l].scatterers.size() == best[l]->points.size());
            for (std::size_t i = 0; i < best[l]->points.size(); ++i)
                CHECK(distance(st.estimates[l].scatterers[i], best[l]->points[i]) <
                      1e-12);
        }
        ++done;
    }
    CHECK(done == 20);
}

TEST_CASE("partial blockage is recovered without destroying the path") {
    const PresetScenario pre = preset_scenario("blocked");
    const SimulatedScenario sim = trace_scene_paths(pre.scene, pre.rf, pre.trace);
    ChannelTensor y = synthesize_channel(sim.paths, pre.rf);
    y = add_noise(y, pre.rf.snr_db, 3, sim.noise_reference_power);
    const SageState st = run_gm_sage(y, pre.scene, pre.rf);
    REQUIRE(st.estimates.size() == 7);
    for (const auto& est : st.estimates) {
        CHECK(est.bounce_class != BounceClass::high_bounce);
        const std::size_t zeros =
            std::count(est.blockage_estimate.begin(), est.blockage_estimate.end(), 0);
        CHECK(zeros <= 0.4 * est.blockage_estimate.size());
    }
}
