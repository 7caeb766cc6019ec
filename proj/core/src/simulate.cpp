// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include "mbrec/simulate.hpp"

#include <algorithm>

namespace mbrec {

namespace {

struct Candidate {
    int bounce = 0;
    std::vector<const Wall*> walls;
    std::vector<std::string> labels;
};

// Reference-channel specular points for one wall sequence, empty when the
// geometry does not admit the path for this (tx, rx) pair.
std::optional<std::vector<Point2>> trace_channel(Point2 tx, Point2 rx,
                                                 const Candidate& cand) {
    switch (cand.bounce) {
        case 0:
            return std::vector<Point2>{};
        case 1: {
            const auto s = trace_one_bounce(tx, rx, *cand.walls[0]);
            if (!s) return std::nullopt;
            return std::vector<Point2>{*s};
        }
        case 2: {
            const auto s = trace_two_bounce(tx, rx, *cand.walls[0], *cand.walls[1]);
            if (!s) return std::nullopt;
            return std::vector<Point2>{s->first, s->second};
        }
        default:
            return std::nullopt;
    }
}

}  // namespace

SimulatedScenario trace_scene_paths(const Scene& scene, const RfConfig& rf,
                                    const TraceOptions& opts) {
    scene.validate();
    const int M = scene.tx.element_count;
    const int N = scene.rx.element_count;
    const std::size_t mn = static_cast<std::size_t>(M) * N;
    const Point2 tx_ref = scene.tx.element(0);
    const Point2 rx_ref = scene.rx.element(0);

    std::vector<Candidate> candidates;
    if (opts.include_los) candidates.push_back({0, {}, {}});
    for (const auto& w : scene.walls)
        candidates.push_back({1, {&w}, {w.label}});
    for (const auto& w1 : scene.walls)
        for (const auto& w2 : scene.walls)
            if (&w1 != &w2) candidates.push_back({2, {&w1, &w2}, {w1.label, w2.label}});

    SimulatedScenario out;
    for (const auto& cand : candidates) {
        const auto ref_pts = trace_channel(tx_ref, rx_ref, cand);
        if (!ref_pts) continue;  // path does not exist for this scene

        PropagationPath path;
        path.bounce_order = cand.bounce;
        path.M = M;
        path.N = N;
        path.scatterers_ref = *ref_pts;
        path.delays.resize(mn);
        path.sns_attenuation.assign(mn, cplx(1.0, 0.0));

        const double d_ref = path_length(tx_ref, *ref_pts, rx_ref);
        path.reference_amplitude =
            opts.amplitude_scale > 0.0 ? cplx(opts.amplitude_scale / d_ref, 0.0)
                                       : cplx(1.0, 0.0);

        std::vector<std::optional<std::vector<Point2>>> per_channel(mn);
        for (int m = 0; m < M; ++m) {
            for (int n = 0; n < N; ++n) {
                const std::size_t c = static_cast<std::size_t>(m) * N + n;
                const Point2 tx = scene.tx.element(m);
                const Point2 rx = scene.rx.element(n);
                per_channel[c] = trace_channel(tx, rx, cand);
                const auto& pts = per_channel[c] ? *per_channel[c] : *ref_pts;
                path.delays[c] = path_length(tx, pts, rx) / kSpeedOfLight;
            }
        }
        path.blockage_mask = path_blockage_mask(scene, per_channel);

        PathTruth truth;
        truth.bounce_order = cand.bounce;
        truth.wall_labels = cand.labels;
        truth.scatterers = *ref_pts;
        truth.reference_distance = d_ref;
        truth.reference_delay = d_ref / kSpeedOfLight;
        truth.amplitude = path.reference_amplitude;
        truth.blockage_mask = path.blockage_mask;

        out.paths.push_back(std::move(path));
        out.truth.push_back(std::move(truth));
    }

    // Sort jointly by reference delay.
    std::vector<std::size_t> order(out.paths.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return out.truth[a].reference_delay < out.truth[b].reference_delay;
    });
    SimulatedScenario sorted;
    for (const std::size_t i : order) {
        sorted.paths.push_back(std::move(out.paths[i]));
        sorted.truth.push_back(std::move(out.truth[i]));
    }

    // Noise reference: mean per-entry power over fully visible channels.
    double power = 0.0;
    std::size_t visible = 0;
    for (std::size_t c = 0; c < mn; ++c) {
        bool all_visible = true;
        for (const auto& p : sorted.paths)
            if (!p.blockage_mask[c]) {
                all_visible = false;
                break;
            }
        if (!all_visible) continue;
        ++visible;
        // Mean over p of |sum_l z_l|^2 equals the tone-power sum plus cross
        // terms; use the per-path power sum (phases average out over p).
        for (const auto& p : sorted.paths)
            power += std::norm(p.reference_amplitude * p.sns_attenuation[c]);
    }
    sorted.noise_reference_power = visible ? power / static_cast<double>(visible) : 0.0;
    return sorted;
}

}  // namespace mbrec
