// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#ifndef mbrec_simulate_H
#define mbrec_simulate_H

#include <string>
#include <vector>

#include "mbrec/channel.hpp"
#include "mbrec/geometry.hpp"

namespace mbrec {

// Ground-truth record for one traced path, anchored at the reference
// channel (m = 0, n = 0).
struct PathTruth {
    int bounce_order = 0;
    std::vector<std::string> wall_labels;   // in bounce order, empty for LOS
    std::vector<Point2> scatterers;         // reference-channel specular points
    double reference_delay = 0.0;           // seconds
    double reference_distance = 0.0;        // meters
    cplx amplitude{0.0, 0.0};
    std::vector<std::uint8_t> blockage_mask;  // size M*N, m-major
};

struct SimulatedScenario {
    std::vector<PropagationPath> paths;  // sorted by reference delay
    std::vector<PathTruth> truth;        // same order as paths
    // Mean per-entry signal power over channels where every path is
    // visible; the noise reference so blockage does not deflate sigma0^2.
    double noise_reference_power = 0.0;
};

struct TraceOptions {
    bool include_los = true;
    // Reference amplitude policy: |alpha_l| = amplitude_scale / d_ref, zero
    // phase. amplitude_scale = 0 selects unit amplitudes instead.
    double amplitude_scale = 1.0;
};

// Enumerates the LOS path (optional), one one-bounce path per wall and one
// two-bounce path per ordered wall pair, keeping those whose reference
// channel traces successfully. Every (m, n) channel is retraced for its own
// specular points; channels that fail to trace are masked out, as are
// channels whose polyline touches the obstacle.
SimulatedScenario trace_scene_paths(const Scene& scene, const RfConfig& rf,
                                    const TraceOptions& opts = {});

}  // namespace mbrec

#endif
