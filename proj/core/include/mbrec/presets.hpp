// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#ifndef mbrec_presets_H
#define mbrec_presets_H

#include <string>

#include "mbrec/channel.hpp"
#include "mbrec/geometry.hpp"
#include "mbrec/simulate.hpp"

namespace mbrec {

// Desk-scale reference scenario: a 6.5 m x 6.5 m room with three reflecting
// walls (left x = 0, upper y = 6, right x = 6, each spanning 6 m), a 16
// element Tx array at (2.1, 4.1) and a 121 element Rx array at (3.3, 1),
// half-wavelength spacing at 30 GHz. The "blocked" variant adds a small
// rectangular obstacle that shadows part of the upper-wall reflections;
// "unblocked" is the same scene without it. Presets trace wall reflections
// only (no direct path).
struct PresetScenario {
    Scene scene;
    RfConfig rf;
    TraceOptions trace;
};

PresetScenario preset_scenario(const std::string& name);  // "blocked" | "unblocked"

}  // namespace mbrec

#endif
