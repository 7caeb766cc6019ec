// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#ifndef mbrec_reference_H
#define mbrec_reference_H

#include <span>
#include <vector>

#include "mbrec/channel.hpp"

namespace mbrec {

struct empty_channel_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ReferencePath {
    double delay = 0.0;  // seconds
    cplx amplitude{0.0, 0.0};
};

struct ReferencePathList {
    std::vector<ReferencePath> entries;  // sorted by increasing delay
    double noise_variance = 0.0;         // per-entry residual power estimate

    int count() const { return static_cast<int>(entries.size()); }
};

struct ReferenceOptions {
    // Stop threshold: the strongest residual delay peak must exceed the
    // median delay-grid power by this margin. The maximum of roughly P
    // independent noise correlation bins sits about 8.5 dB above the grid
    // median, so anything below ~9 dB keeps absorbing pure noise.
    double detection_factor_db = 10.0;
    int oversample = 16;               // delay-grid oversampling for peak picking
    int max_paths = 25;
    int refine_sweeps = 3;             // per-path coordinate-descent polish passes
};

// Delay-domain correlation (1/P) sum_p y_p exp(+j 2 pi f_p tau).
cplx delay_correlation(std::span<const cplx> siso, const RfConfig& rf, double tau);

// CLEAN-style successive cancellation on one SISO channel: repeatedly pick
// the strongest residual delay peak, refine it by quadratic interpolation,
// LS-fit the complex amplitude and subtract, until the peak drops below the
// detection threshold. A few joint re-fit sweeps polish closely spaced
// delays. Throws empty_channel_error when nothing exceeds the threshold.
ReferencePathList estimate_reference_channel(std::span<const cplx> siso,
                                             const RfConfig& rf,
                                             const ReferenceOptions& opts = {});

}  // namespace mbrec

#endif
