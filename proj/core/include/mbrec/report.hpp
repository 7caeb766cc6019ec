// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#ifndef mbrec_report_H
#define mbrec_report_H

#include <string>
#include <vector>

#include "mbrec/sage.hpp"
#include "mbrec/simulate.hpp"

namespace mbrec {

// Dense row-major real matrix, small enough for CSV export.
struct RealMatrix {
    std::size_t rows = 0, cols = 0;
    std::vector<double> data;

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Per-scatterer Euclidean distances; lists must match in length and order.
std::vector<double> localization_error(const std::vector<Point2>& est,
                                       const std::vector<Point2>& truth);

// N x P power matrix |IDFT_P(y[m, n, .])|^2 (unitary transform), one row per
// Rx element. Delay bin k maps to distance k * c / (P * f_s).
RealMatrix concatenated_pdp(const ChannelTensor& y, int tx_index);

// L x N map of |alpha-bar| in dB for the given Tx row (default reference).
RealMatrix sns_amplitude_map(const std::vector<PathEstimate>& estimates, int N,
                             int tx_index = 0, double db_floor = -100.0);

// Confusion counts with "blocked" (mask value 0) as the positive class.
struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

Confusion blockage_confusion(const std::vector<std::uint8_t>& detected,
                             const std::vector<std::uint8_t>& truth);

struct PathReport {
    int truth_index = -1;     // -1 for a spurious estimate
    int estimate_index = -1;  // -1 for a missed truth path
    std::string truth_class;
    std::string estimate_class;
    std::vector<std::string> wall_labels;
    std::vector<Point2> truth_scatterers;
    std::vector<Point2> estimate_scatterers;
    double truth_delay = 0.0;
    double estimate_delay = 0.0;
    bool scored = false;         // wall paths only (LOS/high-bounce excluded)
    bool class_correct = false;
    std::vector<double> errors;  // meters, per scatterer, when class_correct
    bool outlier = false;        // any error above the outlier threshold
    Confusion confusion;
};

struct ReconstructionReport {
    int schema_version = 1;
    std::vector<PathReport> paths;
    std::vector<double> objective_trace;
    double noise_variance = 0.0;
    bool converged = false;
    int iterations = 0;
    double outlier_threshold_m = 0.5;
    double match_tolerance_s = 0.0;
    std::string config_echo;
};

struct ReportOptions {
    double match_tolerance_bins = 3.0;  // delay gap for truth matching
    double outlier_threshold_m = 0.5;
    std::string config_echo;
};

// Matches estimates to truth by nearest reference delay (unique, greedy) and
// computes errors and blockage confusions.
ReconstructionReport build_report(const std::vector<PathTruth>& truth,
                                  const SageState& state, const RfConfig& rf,
                                  const ReportOptions& opts = {});

// Writes report.json plus a human-readable report.txt and an
// objective_trace.csv into the directory.
void emit_report(const ReconstructionReport& report, const std::string& directory);

void write_pdp_csv(const RealMatrix& pdp, const RfConfig& rf, const std::string& path);
void write_amplitude_map_csv(const RealMatrix& map, const std::string& path);

}  // namespace mbrec

#endif
