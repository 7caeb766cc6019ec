// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#ifndef mbrec_io_H
#define mbrec_io_H

#include <stdexcept>
#include <string>

#include "mbrec/channel.hpp"
#include "mbrec/sage.hpp"
#include "mbrec/simulate.hpp"

namespace mbrec {

// Raised when a file fails structural validation (bad magic, truncated
// payload, malformed JSON, missing fields).
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Channel tensor container, little-endian binary:
//   "MBCT" magic, u32 version, u32 M, u32 N, u32 P,
//   f64 sub_bandwidth, f64 snr_db, then M*N*P interleaved (re, im) f64
//   in Tx-major order ((m * N + n) * P + p).
void save_tensor(const ChannelTensor& y, const RfConfig& rf, const std::string& path);
ChannelTensor load_tensor(const std::string& path, RfConfig* rf = nullptr);

// Scene and RF config as one JSON document. Element spacing accepts either
// "spacing_lambda" (carrier wavelengths) or "spacing_m" (meters).
void save_scene(const Scene& scene, const RfConfig& rf, const TraceOptions& trace,
                const std::string& path);
void load_scene(const std::string& path, Scene& scene, RfConfig& rf,
                TraceOptions& trace);

// Ground-truth path list; blockage masks serialize as "01" strings.
void save_truth(const std::vector<PathTruth>& truth, const std::string& path);
std::vector<PathTruth> load_truth(const std::string& path);

// Estimator output, including per-channel equivalent amplitudes.
void save_estimates(const SageState& state, const std::string& path);
SageState load_estimates(const std::string& path);

}  // namespace mbrec

#endif
