// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#ifndef mbrec_sage_H
#define mbrec_sage_H

#include <optional>

#include "mbrec/channel.hpp"
#include "mbrec/geometry.hpp"
#include "mbrec/reference.hpp"

namespace mbrec {

enum class BounceClass { one_bounce, two_bounce, high_bounce };

const char* to_string(BounceClass c);

// Estimated parameter set of one path. Per-channel vectors are m-major,
// size M*N. High-bounce paths carry no scatterers and are represented at
// the reference channel only.
struct PathEstimate {
    BounceClass bounce_class = BounceClass::high_bounce;
    std::vector<Point2> scatterers;           // 1 or 2 points, empty for high-bounce
    double reference_delay = 0.0;             // seconds
    std::vector<cplx> equivalent_amplitude;   // alpha-bar per channel
    std::vector<std::uint8_t> blockage_estimate;  // gamma-hat per channel
    std::vector<double> delays;               // candidate delays per channel
    double objective_value = 0.0;
    int reference_channel = 0;                // flat index used for high-bounce synthesis
};

struct DictionaryEntry {
    std::vector<Point2> points;  // 1 or 2, on wall segments
    std::vector<int> wall_index; // wall of each point (for local refinement)
    double reference_distance = 0.0;
};

// Delay-consistent candidate scatterer grid for one bounce hypothesis.
struct SearchDictionary {
    int bounce = 1;
    double grid_step = 0.0;
    double reference_delay = 0.0;
    std::vector<DictionaryEntry> entries;

    bool empty() const { return entries.empty(); }
};

struct SageOptions {
    double grid_one = 0.1;            // m, one-bounce wall grid
    double grid_two = 0.2;            // m, two-bounce wall grid
    double delay_tolerance_bins = 1.5;
    double convergence_tol = 1e-3;
    int max_iters = 20;
    double threshold_factor = 9.0;    // blockage detection, |a|^2 vs sigma0^2/P
    bool refine = false;              // local grid_step/5 polish after convergence
    int reference_m = 0;
    int reference_n = 0;
    // A fitted path whose detected unblocked fraction falls below this is
    // relabeled high-bounce (noise or unlocalizable).
    double min_unblocked_fraction = 0.01;
    ReferenceOptions reference;
};

struct SageState {
    int iteration = 0;
    std::vector<PathEstimate> estimates;     // sorted by reference delay
    ChannelTensor residual;                  // y - sum_l z_l
    std::vector<double> objective_trace;     // ||residual||^2 after each sweep
    double noise_variance = 0.0;             // sigma0^2 estimate
    std::vector<double> interference_weights;  // beta_l, sum of squares = 1
    ReferencePathList reference;
    bool converged = false;
};

// Path reconstruction z_l from an estimate (zero tensor for an estimate
// with all-zero amplitudes).
ChannelTensor synthesize_estimate(const PathEstimate& est, int M, int N,
                                  const RfConfig& rf);

// Hidden data y-hat_l = z_l + beta_l (y - sum_k z_k), recomputed from the
// estimates in `state`.
ChannelTensor e_step(const SageState& state, int l, const ChannelTensor& y,
                     const RfConfig& rf);

// Wall-grid candidates whose reference-channel delay matches tau_ref within
// delay_tolerance (seconds). bounce = 2 enumerates ordered distinct wall
// pairs. May return an empty dictionary (infeasible hypothesis).
SearchDictionary build_dictionary(int bounce, double tau_ref, const Scene& scene,
                                  double grid_step, double delay_tolerance);

// Per-channel closed-form LS amplitude (1/P) sum_p conj(a_p) y_p.
std::vector<cplx> estimate_equivalent_amplitude(const ChannelTensor& hidden,
                                                const std::vector<double>& delays,
                                                const RfConfig& rf);

// Evaluates the quadratic objective for every candidate (with per-channel
// LS amplitudes) and returns the arg-min. Throws on an empty dictionary.
PathEstimate m_step(const ChannelTensor& hidden, const SearchDictionary& dict,
                    const Scene& scene, const RfConfig& rf, double beta,
                    double sigma0_sq);

// gamma-hat = 0 iff |a|^2 < threshold_factor * sigma0^2 / P.
std::vector<std::uint8_t> detect_blockage(const std::vector<cplx>& amplitudes,
                                          double sigma0_sq, int P,
                                          double threshold_factor);

// Hypothesis with the smaller objective wins; ties break to one-bounce.
// Returns empty when both hypotheses are absent.
std::optional<PathEstimate> classify_bounce(const std::optional<PathEstimate>& one_b,
                                            const std::optional<PathEstimate>& two_b);

// Full two-stage GM-SAGE loop.
SageState run_gm_sage(const ChannelTensor& y, const Scene& scene, const RfConfig& rf,
                      const SageOptions& opts = {});

}  // namespace mbrec

#endif
