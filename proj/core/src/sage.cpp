// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include "mbrec/sage.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mbrec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Un-normalized correlation sum_p y_p exp(+j 2 pi f_p tau).
cplx channel_correlation(const cplx* ch, int P, const RfConfig& rf, double tau) {
    const cplx w = std::polar(1.0, kTwoPi * rf.sub_bandwidth * tau);
    cplx phase = std::polar(1.0, kTwoPi * rf.frequency(0) * tau);
    cplx acc{0.0, 0.0};
    for (int p = 0; p < P; ++p) {
        acc += ch[p] * phase;
        phase *= w;
    }
    return acc;
}

double candidate_distance(Point2 tx, const DictionaryEntry& e, Point2 rx) {
    return path_length(tx, e.points, rx);
}

std::vector<Point2> element_positions(const ArrayGeometry& arr) {
    std::vector<Point2> pos(arr.element_count);
    for (int i = 0; i < arr.element_count; ++i) pos[i] = arr.element(i);
    return pos;
}

// Index of the wall segment carrying p (closest match); used to rebuild a
// local grid around a converged estimate.
int locate_wall(const Scene& scene, Point2 p) {
    int best = 0;
    double best_d = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < scene.walls.size(); ++i) {
        const auto& w = scene.walls[i];
        const Point2 d = w.b - w.a;
        const double t = std::clamp(dot(p - w.a, d) / dot(d, d), 0.0, 1.0);
        const double dist = distance(p, w.a + t * d);
        if (dist < best_d) {
            best_d = dist;
            best = static_cast<int>(i);
        }
    }
    return best;
}

}  // namespace

const char* to_string(BounceClass c) {
    switch (c) {
        case BounceClass::one_bounce: return "one-bounce";
        case BounceClass::two_bounce: return "two-bounce";
        default: return "high-bounce";
    }
}

ChannelTensor synthesize_estimate(const PathEstimate& est, int M, int N,
                                  const RfConfig& rf) {
    ChannelTensor z(M, N, rf.sub_band_count);
    if (est.bounce_class == BounceClass::high_bounce) {
        const cplx amp = est.equivalent_amplitude.empty()
                             ? cplx(0.0, 0.0)
                             : est.equivalent_amplitude[est.reference_channel];
        if (amp == cplx(0.0, 0.0)) return z;
        cplx* ch = z.values.data() +
                   static_cast<std::size_t>(est.reference_channel) * rf.sub_band_count;
        const cplx w = std::polar(1.0, -kTwoPi * rf.sub_bandwidth * est.reference_delay);
        cplx phase = std::polar(1.0, -kTwoPi * rf.frequency(0) * est.reference_delay);
        for (int p = 0; p < rf.sub_band_count; ++p) {
            ch[p] = amp * phase;
            phase *= w;
        }
        return z;
    }
    const std::size_t mn = static_cast<std::size_t>(M) * N;
    if (est.delays.size() != mn || est.equivalent_amplitude.size() != mn)
        throw shape_error("estimate per-channel vectors do not match M*N");
    for (std::size_t c = 0; c < mn; ++c) {
        const cplx amp = est.equivalent_amplitude[c];
        if (amp == cplx(0.0, 0.0)) continue;
        cplx* ch = z.values.data() + c * rf.sub_band_count;
        const cplx w = std::polar(1.0, -kTwoPi * rf.sub_bandwidth * est.delays[c]);
        cplx phase = std::polar(1.0, -kTwoPi * rf.frequency(0) * est.delays[c]);
        for (int p = 0; p < rf.sub_band_count; ++p) {
            ch[p] = amp * phase;
            phase *= w;
        }
    }
    return z;
}

ChannelTensor e_step(const SageState& state, int l, const ChannelTensor& y,
                     const RfConfig& rf) {
    if (l < 0 || l >= static_cast<int>(state.estimates.size()))
        throw std::invalid_argument("path index out of range");
    ChannelTensor residual = y;
    ChannelTensor z_l(y.M, y.N, y.P);
    for (int k = 0; k < static_cast<int>(state.estimates.size()); ++k) {
        ChannelTensor z = synthesize_estimate(state.estimates[k], y.M, y.N, rf);
        for (std::size_t i = 0; i < residual.values.size(); ++i)
            residual.values[i] -= z.values[i];
        if (k == l) z_l = std::move(z);
    }
    const double beta = state.interference_weights[l];
    ChannelTensor hidden = std::move(z_l);
    for (std::size_t i = 0; i < hidden.values.size(); ++i)
        hidden.values[i] += beta * residual.values[i];
    return hidden;
}

SearchDictionary build_dictionary(int bounce, double tau_ref, const Scene& scene,
                                  double grid_step, double delay_tolerance) {
    if (bounce != 1 && bounce != 2)
        throw std::invalid_argument("bounce hypothesis must be 1 or 2");
    if (grid_step <= 0.0) throw std::invalid_argument("grid_step must be positive");
    const Point2 tx = scene.tx.element(0);
    const Point2 rx = scene.rx.element(0);
    const double d_ref = tau_ref * kSpeedOfLight;
    const double d_tol = delay_tolerance * kSpeedOfLight;

    // Grid anchored at the first wall endpoint, inclusive of the far end.
    auto wall_points = [&](const Wall& w) {
        std::vector<Point2> pts;
        const int steps = static_cast<int>(std::floor(w.length() / grid_step + 1e-9));
        for (int i = 0; i <= steps; ++i)
            pts.push_back(w.point_at(i * grid_step / w.length()));
        return pts;
    };

    SearchDictionary dict;
    dict.bounce = bounce;
    dict.grid_step = grid_step;
    dict.reference_delay = tau_ref;
    if (bounce == 1) {
        for (std::size_t wi = 0; wi < scene.walls.size(); ++wi) {
            for (const auto& p : wall_points(scene.walls[wi])) {
                const double d = distance(tx, p) + distance(p, rx);
                if (std::abs(d - d_ref) <= d_tol)
                    dict.entries.push_back({{p}, {static_cast<int>(wi)}, d});
            }
        }
    } else {
        std::vector<std::vector<Point2>> grids;
        for (const auto& w : scene.walls) grids.push_back(wall_points(w));
        for (std::size_t wa = 0; wa < scene.walls.size(); ++wa) {
            for (std::size_t wb = 0; wb < scene.walls.size(); ++wb) {
                if (wa == wb) continue;
                for (const auto& p1 : grids[wa]) {
                    const double d1 = distance(tx, p1);
                    for (const auto& p2 : grids[wb]) {
                        const double d = d1 + distance(p1, p2) + distance(p2, rx);
                        if (std::abs(d - d_ref) <= d_tol)
                            dict.entries.push_back(
                                {{p1, p2}, {static_cast<int>(wa), static_cast<int>(wb)}, d});
                    }
                }
            }
        }
    }
    return dict;
}

std::vector<cplx> estimate_equivalent_amplitude(const ChannelTensor& hidden,
                                                const std::vector<double>& delays,
                                                const RfConfig& rf) {
    const std::size_t mn = hidden.channel_count();
    if (delays.size() != mn) throw shape_error("delay vector does not match M*N");
    std::vector<cplx> amps(mn);
    for (std::size_t c = 0; c < mn; ++c)
        amps[c] = channel_correlation(hidden.values.data() + c * hidden.P, hidden.P, rf,
                                      delays[c]) /
                  static_cast<double>(hidden.P);
    return amps;
}

PathEstimate m_step(const ChannelTensor& hidden, const SearchDictionary& dict,
                    const Scene& scene, const RfConfig& rf, double beta,
                    double sigma0_sq) {
    if (dict.empty()) throw std::invalid_argument("m_step: empty dictionary");
    const int M = hidden.M, N = hidden.N, P = hidden.P;
    const auto tx_pos = element_positions(scene.tx);
    const auto rx_pos = element_positions(scene.rx);

    std::size_t best_idx = 0;
    double best_score = -1.0;
    for (std::size_t idx = 0; idx < dict.entries.size(); ++idx) {
        const auto& entry = dict.entries[idx];
        double score = 0.0;
        for (int m = 0; m < M; ++m) {
            for (int n = 0; n < N; ++n) {
                const double tau =
                    candidate_distance(tx_pos[m], entry, rx_pos[n]) / kSpeedOfLight;
                const cplx* ch =
                    hidden.values.data() + (static_cast<std::size_t>(m) * N + n) * P;
                score += std::norm(channel_correlation(ch, P, rf, tau));
            }
        }
        if (score > best_score) {
            best_score = score;
            best_idx = idx;
        }
    }

    const auto& entry = dict.entries[best_idx];
    PathEstimate est;
    est.bounce_class = dict.bounce == 1 ? BounceClass::one_bounce : BounceClass::two_bounce;
    est.scatterers = entry.points;
    // Fitted geometry, not the stage-1 window center: when two stage-1
    // delays sit within the dictionary tolerance of each other their fits
    // can exchange walls, and downstream matching goes by this delay.
    est.reference_delay = entry.reference_distance / kSpeedOfLight;
    est.delays.resize(hidden.channel_count());
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n)
            est.delays[static_cast<std::size_t>(m) * N + n] =
                candidate_distance(tx_pos[m], entry, rx_pos[n]) / kSpeedOfLight;
    est.equivalent_amplitude = estimate_equivalent_amplitude(hidden, est.delays, rf);
    est.objective_value =
        (hidden.energy() - best_score / P) / std::max(beta * sigma0_sq, 1e-300);
    return est;
}

std::vector<std::uint8_t> detect_blockage(const std::vector<cplx>& amplitudes,
                                          double sigma0_sq, int P,
                                          double threshold_factor) {
    if (threshold_factor <= 0.0)
        throw std::invalid_argument("threshold_factor must be positive");
    const double floor = threshold_factor * sigma0_sq / P;
    std::vector<std::uint8_t> mask(amplitudes.size());
    for (std::size_t c = 0; c < amplitudes.size(); ++c)
        mask[c] = std::norm(amplitudes[c]) >= floor ? 1 : 0;
    return mask;
}

std::optional<PathEstimate> classify_bounce(const std::optional<PathEstimate>& one_b,
                                            const std::optional<PathEstimate>& two_b) {
    if (!one_b && !two_b) return std::nullopt;
    if (!two_b) return one_b;
    if (!one_b) return two_b;
    return one_b->objective_value <= two_b->objective_value ? one_b : two_b;
}

namespace {

// Local grid around a converged spatial estimate at step `fine`, including
// the current point so the objective cannot increase.
SearchDictionary local_refinement_dictionary(const PathEstimate& est, const Scene& scene,
                                             const SearchDictionary& coarse,
                                             double delay_tolerance, double fine) {
    const Point2 tx = scene.tx.element(0);
    const Point2 rx = scene.rx.element(0);
    const double d_tol = delay_tolerance * kSpeedOfLight;
    const double d_ref = coarse.reference_delay * kSpeedOfLight;

    auto around = [&](Point2 p) {
        const int wi = locate_wall(scene, p);
        const Wall& w = scene.walls[wi];
        const Point2 dir = w.b - w.a;
        const double len = w.length();
        const double t0 = dot(p - w.a, dir) / dot(dir, dir) * len;  // arclength
        std::vector<std::pair<Point2, int>> pts;
        for (int k = -5; k <= 5; ++k) {
            const double t = std::clamp(t0 + k * fine, 0.0, len);
            pts.emplace_back(w.point_at(t / len), wi);
        }
        return pts;
    };

    SearchDictionary dict;
    dict.bounce = coarse.bounce;
    dict.grid_step = fine;
    dict.reference_delay = coarse.reference_delay;
    if (est.scatterers.size() == 1) {
        for (const auto& [p, wi] : around(est.scatterers[0])) {
            const double d = distance(tx, p) + distance(p, rx);
            if (std::abs(d - d_ref) <= d_tol) dict.entries.push_back({{p}, {wi}, d});
        }
        dict.entries.push_back({{est.scatterers[0]}, {locate_wall(scene, est.scatterers[0])},
                                path_length(tx, est.scatterers, rx)});
    } else if (est.scatterers.size() == 2) {
        for (const auto& [p1, w1] : around(est.scatterers[0])) {
            for (const auto& [p2, w2] : around(est.scatterers[1])) {
                const double d = distance(tx, p1) + distance(p1, p2) + distance(p2, rx);
                if (std::abs(d - d_ref) <= d_tol)
                    dict.entries.push_back({{p1, p2}, {w1, w2}, d});
            }
        }
        dict.entries.push_back({est.scatterers,
                                {locate_wall(scene, est.scatterers[0]),
                                 locate_wall(scene, est.scatterers[1])},
                                path_length(tx, est.scatterers, rx)});
    }
    return dict;
}

}  // namespace

SageState run_gm_sage(const ChannelTensor& y, const Scene& scene, const RfConfig& rf,
                      const SageOptions& opts) {
    scene.validate();
    const int M = scene.tx.element_count;
    const int N = scene.rx.element_count;
    if (y.M != M || y.N != N || y.P != rf.sub_band_count)
        throw shape_error("tensor dims do not match scene/rf configuration");
    const std::size_t mn = static_cast<std::size_t>(M) * N;
    const int ref_channel = opts.reference_m * N + opts.reference_n;
    if (opts.reference_m < 0 || opts.reference_m >= M || opts.reference_n < 0 ||
        opts.reference_n >= N)
        throw std::invalid_argument("reference channel index out of range");

    SageState state;
    state.reference = estimate_reference_channel(
        std::span<const cplx>(y.channel(opts.reference_m, opts.reference_n),
                              static_cast<std::size_t>(y.P)),
        rf, opts.reference);
    const int L = state.reference.count();
    state.noise_variance = state.reference.noise_variance;
    const double beta = 1.0 / std::sqrt(static_cast<double>(L));
    state.interference_weights.assign(L, beta);

    const double delay_tol = opts.delay_tolerance_bins * rf.delay_bin();
    std::vector<SearchDictionary> dict_one(L), dict_two(L);
    for (int l = 0; l < L; ++l) {
        const double tau = state.reference.entries[l].delay;
        dict_one[l] = build_dictionary(1, tau, scene, opts.grid_one, delay_tol);
        dict_two[l] = build_dictionary(2, tau, scene, opts.grid_two, delay_tol);
    }

    // Strongest-first processing order.
    std::vector<int> order(L);
    for (int l = 0; l < L; ++l) order[l] = l;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(state.reference.entries[a].amplitude) >
               std::abs(state.reference.entries[b].amplitude);
    });

    std::vector<PathEstimate> estimates(L);
    std::vector<ChannelTensor> z(L, ChannelTensor(M, N, y.P));
    for (int l = 0; l < L; ++l) {
        estimates[l].reference_delay = state.reference.entries[l].delay;
        estimates[l].reference_channel = ref_channel;
        estimates[l].equivalent_amplitude.assign(mn, cplx(0.0, 0.0));
        estimates[l].blockage_estimate.assign(mn, 0);
    }

    ChannelTensor residual = y;
    ChannelTensor hidden(M, N, y.P);

    auto make_high_bounce = [&](const ChannelTensor& yl, double tau) {
        PathEstimate est;
        est.bounce_class = BounceClass::high_bounce;
        est.reference_delay = tau;
        est.reference_channel = ref_channel;
        est.equivalent_amplitude.assign(mn, cplx(0.0, 0.0));
        est.blockage_estimate.assign(mn, 0);
        est.blockage_estimate[ref_channel] = 1;
        const cplx amp =
            channel_correlation(yl.values.data() +
                                    static_cast<std::size_t>(ref_channel) * yl.P,
                                yl.P, rf, tau) /
            static_cast<double>(yl.P);
        est.equivalent_amplitude[ref_channel] = amp;
        est.objective_value = (yl.energy() - std::norm(amp) * yl.P) /
                              std::max(beta * state.noise_variance, 1e-300);
        return est;
    };

    auto update_path = [&](int l, const PathEstimate& est) {
        ChannelTensor z_new = synthesize_estimate(est, M, N, rf);
        for (std::size_t i = 0; i < residual.values.size(); ++i)
            residual.values[i] += z[l].values[i] - z_new.values[i];
        z[l] = std::move(z_new);
        estimates[l] = est;
    };

    auto process_path = [&](int l) {
        for (std::size_t i = 0; i < hidden.values.size(); ++i)
            hidden.values[i] = z[l].values[i] + beta * residual.values[i];
        std::optional<PathEstimate> one, two;
        if (!dict_one[l].empty())
            one = m_step(hidden, dict_one[l], scene, rf, beta, state.noise_variance);
        if (!dict_two[l].empty())
            two = m_step(hidden, dict_two[l], scene, rf, beta, state.noise_variance);
        auto chosen = classify_bounce(one, two);
        if (chosen) {
            chosen->blockage_estimate = detect_blockage(
                chosen->equivalent_amplitude, state.noise_variance, y.P,
                opts.threshold_factor);
            const double unblocked =
                static_cast<double>(std::count(chosen->blockage_estimate.begin(),
                                               chosen->blockage_estimate.end(), 1)) /
                static_cast<double>(mn);
            if (unblocked < opts.min_unblocked_fraction)
                chosen = make_high_bounce(hidden, estimates[l].reference_delay);
        } else {
            chosen = make_high_bounce(hidden, estimates[l].reference_delay);
        }
        if (chosen->bounce_class == BounceClass::high_bounce)
            chosen->reference_delay = estimates[l].reference_delay;
        chosen->reference_channel = ref_channel;
        update_path(l, *chosen);
    };

    double prev_obj = residual.energy();
    for (int iter = 0; iter < opts.max_iters; ++iter) {
        for (const int l : order) process_path(l);
        state.iteration = iter + 1;
        const double obj = residual.energy();
        state.objective_trace.push_back(obj);
        if (prev_obj > 0.0 && (prev_obj - obj) / prev_obj < opts.convergence_tol) {
            state.converged = true;
            break;
        }
        prev_obj = obj;
    }

    if (opts.refine) {
        for (const int l : order) {
            if (estimates[l].bounce_class == BounceClass::high_bounce) continue;
            const auto& coarse = estimates[l].bounce_class == BounceClass::one_bounce
                                     ? dict_one[l]
                                     : dict_two[l];
            // Multi-scale local descent: each level recenters a 5x finer
            // grid on the previous argmin.
            for (const double div : {5.0, 25.0, 125.0}) {
                const SearchDictionary local = local_refinement_dictionary(
                    estimates[l], scene, coarse, delay_tol, coarse.grid_step / div);
                if (local.empty()) continue;
                for (std::size_t i = 0; i < hidden.values.size(); ++i)
                    hidden.values[i] = z[l].values[i] + beta * residual.values[i];
                PathEstimate refined =
                    m_step(hidden, local, scene, rf, beta, state.noise_variance);
                refined.reference_channel = ref_channel;
                refined.blockage_estimate =
                    detect_blockage(refined.equivalent_amplitude, state.noise_variance,
                                    y.P, opts.threshold_factor);
                update_path(l, refined);
            }
        }
        state.objective_trace.push_back(residual.energy());
    }

    std::sort(estimates.begin(), estimates.end(),
              [](const PathEstimate& a, const PathEstimate& b) {
                  return a.reference_delay < b.reference_delay;
              });
    state.estimates = std::move(estimates);
    state.residual = std::move(residual);
    return state;
}

}  // namespace mbrec
