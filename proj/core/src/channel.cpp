// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include "mbrec/channel.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace mbrec {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::vector<double> frequency_grid(const RfConfig& rf) {
    std::vector<double> grid(rf.sub_band_count);
    for (int p = 0; p < rf.sub_band_count; ++p) grid[p] = rf.frequency(p);
    return grid;
}

double ChannelTensor::energy() const {
    double e = 0.0;
    for (const auto& v : values) e += std::norm(v);
    return e;
}

ChannelTensor synthesize_path(const PropagationPath& path, const RfConfig& rf) {
    const std::size_t mn = static_cast<std::size_t>(path.M) * path.N;
    if (path.blockage_mask.size() != mn || path.sns_attenuation.size() != mn ||
        path.delays.size() != mn)
        throw shape_error("path per-channel vectors do not match M*N");
    ChannelTensor out(path.M, path.N, rf.sub_band_count);
    const double f0 = rf.frequency(0);
    for (std::size_t c = 0; c < mn; ++c) {
        cplx* ch = out.values.data() + c * rf.sub_band_count;
        if (!path.blockage_mask[c]) continue;  // exact zeros when blocked
        const cplx gain = path.reference_amplitude * path.sns_attenuation[c];
        const double tau = path.delays[c];
        const cplx w = std::polar(1.0, -kTwoPi * rf.sub_bandwidth * tau);
        cplx phase = std::polar(1.0, -kTwoPi * f0 * tau);
        for (int p = 0; p < rf.sub_band_count; ++p) {
            ch[p] = gain * phase;
            phase *= w;
        }
    }
    return out;
}

ChannelTensor synthesize_channel(const std::vector<PropagationPath>& paths,
                                 const RfConfig& rf) {
    if (paths.empty()) return {};
    ChannelTensor sum = synthesize_path(paths.front(), rf);
    for (std::size_t l = 1; l < paths.size(); ++l) {
        const ChannelTensor t = synthesize_path(paths[l], rf);
        if (t.values.size() != sum.values.size())
            throw shape_error("paths have inconsistent dimensions");
        for (std::size_t i = 0; i < sum.values.size(); ++i) sum.values[i] += t.values[i];
    }
    return sum;
}

std::vector<cplx> steering_vector(const std::vector<double>& delays, const RfConfig& rf) {
    std::vector<cplx> out(delays.size() * rf.sub_band_count);
    const double f0 = rf.frequency(0);
    for (std::size_t c = 0; c < delays.size(); ++c) {
        const double tau = delays[c];
        const cplx w = std::polar(1.0, -kTwoPi * rf.sub_bandwidth * tau);
        cplx phase = std::polar(1.0, -kTwoPi * f0 * tau);
        for (int p = 0; p < rf.sub_band_count; ++p) {
            out[c * rf.sub_band_count + p] = phase;
            phase *= w;
        }
    }
    return out;
}

ChannelTensor add_noise(const ChannelTensor& tensor, double snr_db, std::uint64_t seed,
                        double reference_power, NoiseInfo* info) {
    if (std::isinf(snr_db) && snr_db > 0) {
        if (info) *info = {0.0, false};
        return tensor;
    }
    double ref = reference_power;
    bool unit_ref = false;
    if (ref <= 0.0) {
        double acc = 0.0;
        std::size_t count = 0;
        for (const auto& v : tensor.values) {
            const double p = std::norm(v);
            if (p > 0.0) {
                acc += p;
                ++count;
            }
        }
        if (count == 0) {
            ref = 1.0;
            unit_ref = true;
        } else {
            ref = acc / static_cast<double>(count);
        }
    }
    const double sigma0_sq = ref / std::pow(10.0, snr_db / 10.0);
    const double s = std::sqrt(sigma0_sq / 2.0);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    ChannelTensor out = tensor;
    for (auto& v : out.values) v += cplx(s * gauss(rng), s * gauss(rng));
    if (info) *info = {sigma0_sq, unit_ref};
    return out;
}

PropagationPath apply_sns_profile(PropagationPath path, const SnsProfile& profile) {
    for (int m = 0; m < path.M; ++m)
        for (int n = 0; n < path.N; ++n)
            path.sns_attenuation[static_cast<std::size_t>(m) * path.N + n] = profile(m, n);
    return path;
}

SnsProfile identity_profile() {
    return [](int, int) { return cplx(1.0, 0.0); };
}

SnsProfile free_space_profile(const PropagationPath& path) {
    const int N = path.N;
    const double d_ref = path.delays.empty() ? 1.0 : path.delays[0] * kSpeedOfLight;
    const std::vector<double> delays = path.delays;
    return [N, d_ref, delays](int m, int n) {
        const double d = delays[static_cast<std::size_t>(m) * N + n] * kSpeedOfLight;
        return cplx(d_ref / d, 0.0);
    };
}

}  // namespace mbrec
