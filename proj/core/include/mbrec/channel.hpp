// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#ifndef mbrec_channel_H
#define mbrec_channel_H

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "mbrec/geometry.hpp"

namespace mbrec {

using cplx = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;

struct shape_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct RfConfig {
    double carrier_frequency = 30e9;  // Hz, only used for lambda-to-meter conversion
    double sub_bandwidth = 10e6;      // f_s, Hz
    int sub_band_count = 101;         // P
    double snr_db = 20.0;             // +inf disables noise
    // When true, use the literal f_p = p * f_s (p = 1..P) indexing instead
    // of the span-consistent f_p = (p-1) * f_s.
    bool one_based_frequency_indexing = false;

    double wavelength() const { return kSpeedOfLight / carrier_frequency; }
    double frequency(int p) const {
        return (one_based_frequency_indexing ? p + 1.0 : static_cast<double>(p)) * sub_bandwidth;
    }
    // Delay-domain resolution cell 1/(P*f_s).
    double delay_bin() const { return 1.0 / (sub_band_count * sub_bandwidth); }
};

std::vector<double> frequency_grid(const RfConfig& rf);

// Complex baseband channel over (m, n, p), m-major storage.
struct ChannelTensor {
    int M = 0, N = 0, P = 0;
    std::vector<cplx> values;  // size M*N*P, index (m*N + n)*P + p

    ChannelTensor() = default;
    ChannelTensor(int m, int n, int p)
        : M(m), N(n), P(p), values(static_cast<std::size_t>(m) * n * p) {}

    cplx& at(int m, int n, int p) {
        return values[(static_cast<std::size_t>(m) * N + n) * P + p];
    }
    cplx at(int m, int n, int p) const {
        return values[(static_cast<std::size_t>(m) * N + n) * P + p];
    }
    const cplx* channel(int m, int n) const {
        return values.data() + (static_cast<std::size_t>(m) * N + n) * P;
    }
    cplx* channel(int m, int n) {
        return values.data() + (static_cast<std::size_t>(m) * N + n) * P;
    }
    std::size_t channel_count() const { return static_cast<std::size_t>(M) * N; }
    double energy() const;
};

// One simulated multipath. Per-channel vectors are flattened m-major
// (index c = m*N + n).
struct PropagationPath {
    int bounce_order = 0;                // K
    int M = 0, N = 0;
    std::vector<Point2> scatterers_ref;  // reference-channel specular points
    cplx reference_amplitude{1.0, 0.0};  // alpha_l
    std::vector<std::uint8_t> blockage_mask;  // gamma, size M*N
    std::vector<cplx> sns_attenuation;        // delta-alpha, size M*N
    std::vector<double> delays;               // seconds, size M*N
};

// Per-entry value alpha * gamma * delta-alpha * exp(-j 2 pi f_p tau).
// Blocked channels are exactly zero across all p.
ChannelTensor synthesize_path(const PropagationPath& path, const RfConfig& rf);

// Entrywise sum over paths; the empty list yields a zero tensor (dims taken
// from the first path, so the empty list needs explicit dims).
ChannelTensor synthesize_channel(const std::vector<PropagationPath>& paths,
                                 const RfConfig& rf);

// Steering entries exp(-j 2 pi f_p tau_c) for every channel delay, flattened
// like the tensor storage.
std::vector<cplx> steering_vector(const std::vector<double>& delays, const RfConfig& rf);

struct NoiseInfo {
    double sigma0_sq = 0.0;
    bool unit_reference = false;  // all-zero input, variance from unit power
};

// Adds circularly-symmetric complex white Gaussian noise with per-entry
// variance sigma0^2 = ref_power / 10^(snr/10). When reference_power <= 0 the
// reference is the mean |z|^2 over nonzero entries (an all-zero tensor falls
// back to unit power and is flagged). snr = +inf returns the input unchanged.
ChannelTensor add_noise(const ChannelTensor& tensor, double snr_db, std::uint64_t seed,
                        double reference_power = 0.0, NoiseInfo* info = nullptr);

// Per-channel complex attenuation profile, evaluated at (m, n).
using SnsProfile = std::function<cplx(int m, int n)>;

PropagationPath apply_sns_profile(PropagationPath path, const SnsProfile& profile);

SnsProfile identity_profile();
// |delta-alpha| proportional to d_ref / d_{m,n} for the given path.
SnsProfile free_space_profile(const PropagationPath& path);

}  // namespace mbrec

#endif
