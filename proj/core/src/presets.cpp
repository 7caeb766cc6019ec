// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include "mbrec/presets.hpp"

#include <stdexcept>

namespace mbrec {

PresetScenario preset_scenario(const std::string& name) {
    if (name != "blocked" && name != "unblocked")
        throw std::invalid_argument("unknown preset: " + name);

    PresetScenario p;
    p.rf = RfConfig{};  // 30 GHz carrier, 101 bands of 10 MHz, 20 dB SNR

    p.scene.room_width = 6.5;
    p.scene.room_height = 6.5;
    p.scene.walls = {
        {{0.0, 0.0}, {0.0, 6.0}, "left"},
        {{0.0, 6.0}, {6.0, 6.0}, "upper"},
        {{6.0, 0.0}, {6.0, 6.0}, "right"},
    };

    const double half_lambda = 0.5 * p.rf.wavelength();
    p.scene.tx = {{2.1, 4.1}, 16, half_lambda, {1.0, 0.0}};
    p.scene.rx = {{3.3, 1.0}, 121, half_lambda, {1.0, 0.0}};

    if (name == "blocked") {
        // Shadows the high Rx-index end of the upper-wall reflection and the
        // low Rx-index end of the upper-right double bounce. The placement
        // keeps every blocked channel's delay at least 0.6 resolution bins
        // away from all visible paths at that channel, so blocked-channel
        // amplitude fits do not pick up neighboring path energy, and leaves
        // the reference channel and the other five paths fully visible.
        Obstacle obs;
        obs.vertices = {{2.9, 4.6}, {3.0, 4.6}, {3.0, 4.9}, {2.9, 4.9}};
        p.scene.obstacle = std::move(obs);
    }

    p.trace.include_los = false;
    p.trace.amplitude_scale = 1.0;

    p.scene.validate();
    return p;
}

}  // namespace mbrec
