// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include "mbrec/reference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mbrec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void subtract_tone(std::vector<cplx>& residual, const RfConfig& rf, double tau, cplx amp) {
    const cplx w = std::polar(1.0, -kTwoPi * rf.sub_bandwidth * tau);
    cplx phase = std::polar(1.0, -kTwoPi * rf.frequency(0) * tau);
    for (auto& r : residual) {
        r -= amp * phase;
        phase *= w;
    }
}

double median(std::vector<double> v) {
    const std::size_t k = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + k, v.end());
    return v[k];
}

// Vertex offset of the parabola through three equally spaced samples.
double parabolic_offset(double left, double mid, double right) {
    const double denom = left - 2.0 * mid + right;
    if (std::abs(denom) < 1e-300) return 0.0;
    const double d = 0.5 * (left - right) / denom;
    return std::clamp(d, -0.5, 0.5);
}

}  // namespace

cplx delay_correlation(std::span<const cplx> siso, const RfConfig& rf, double tau) {
    const cplx w = std::polar(1.0, kTwoPi * rf.sub_bandwidth * tau);
    cplx phase = std::polar(1.0, kTwoPi * rf.frequency(0) * tau);
    cplx acc{0.0, 0.0};
    for (const auto& y : siso) {
        acc += y * phase;
        phase *= w;
    }
    return acc / static_cast<double>(siso.size());
}

ReferencePathList estimate_reference_channel(std::span<const cplx> siso,
                                             const RfConfig& rf,
                                             const ReferenceOptions& opts) {
    const int P = static_cast<int>(siso.size());
    if (P < 2) throw std::invalid_argument("reference channel needs at least 2 sub-bands");
    const int grid = P * opts.oversample;
    const double tau_step = 1.0 / (rf.sub_bandwidth * grid);
    const double factor = std::pow(10.0, opts.detection_factor_db / 10.0);

    std::vector<cplx> residual(siso.begin(), siso.end());
    std::vector<double> powers(grid);
    std::vector<ReferencePath> found;
    double initial_peak = 0.0;

    // Re-fit each found path against the residual with the others kept
    // subtracted; reabsorbs cancellation leakage between nearby delays.
    const double fine_step = rf.delay_bin() / 256.0;
    const int half_span = static_cast<int>(1.5 * 256.0);
    auto polish_once = [&] {
        for (auto& path : found) {
            subtract_tone(residual, rf, path.delay, -path.amplitude);  // add back
            double best_tau = path.delay;
            double best_pow = -1.0;
            for (int k = -half_span; k <= half_span; ++k) {
                const double tau = path.delay + k * fine_step;
                if (tau < 0.0) continue;
                const double p = std::norm(delay_correlation(residual, rf, tau));
                if (p > best_pow) {
                    best_pow = p;
                    best_tau = tau;
                }
            }
            if (best_tau >= fine_step) {
                const double l = std::norm(delay_correlation(residual, rf, best_tau - fine_step));
                const double r = std::norm(delay_correlation(residual, rf, best_tau + fine_step));
                best_tau += parabolic_offset(l, best_pow, r) * fine_step;
            }
            path.delay = best_tau;
            path.amplitude = delay_correlation(residual, rf, best_tau);
            subtract_tone(residual, rf, path.delay, path.amplitude);
        }
    };
    // Coordinate descent to a fixed point; closely spaced delays converge
    // only linearly, so a single sweep leaves leakage that would be
    // re-detected as ghost paths.
    auto polish = [&] {
        double prev = std::numeric_limits<double>::max();
        for (int sweep = 0; sweep < 50; ++sweep) {
            polish_once();
            double e = 0.0;
            for (const auto& r : residual) e += std::norm(r);
            if (e >= prev * (1.0 - 1e-6)) break;
            prev = e;
        }
    };

    for (int iter = 0; iter < opts.max_paths; ++iter) {
        int best = 0;
        double best_pow = -1.0;
        for (int k = 0; k < grid; ++k) {
            powers[k] = std::norm(delay_correlation(residual, rf, k * tau_step));
            if (powers[k] > best_pow) {
                best_pow = powers[k];
                best = k;
            }
        }
        if (iter == 0) initial_peak = best_pow;
        const double floor =
            std::max({factor * median(powers), 1e-10 * initial_peak, 1e-300});
        if (best_pow < floor || best_pow <= 0.0) break;

        const double left = powers[(best + grid - 1) % grid];
        const double right = powers[(best + 1) % grid];
        const double tau = (best + parabolic_offset(left, best_pow, right)) * tau_step;
        const cplx amp = delay_correlation(residual, rf, tau);
        subtract_tone(residual, rf, tau, amp);
        found.push_back({tau, amp});
        polish();
    }

    if (found.empty()) throw empty_channel_error("no delay peak above detection threshold");

    for (int sweep = 0; sweep < opts.refine_sweeps; ++sweep) polish();

    std::sort(found.begin(), found.end(),
              [](const ReferencePath& a, const ReferencePath& b) { return a.delay < b.delay; });

    ReferencePathList out;
    out.entries = std::move(found);
    double acc = 0.0;
    for (const auto& r : residual) acc += std::norm(r);
    out.noise_variance = acc / P;
    return out;
}

}  // namespace mbrec
