// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include "mbrec/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace mbrec {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string class_name(int bounce_order) {
    switch (bounce_order) {
        case 0: return "los";
        case 1: return "one-bounce";
        case 2: return "two-bounce";
        default: return "high-bounce";
    }
}

std::string mask_string(const std::vector<std::uint8_t>& mask) {
    std::string s(mask.size(), '0');
    for (std::size_t i = 0; i < mask.size(); ++i) s[i] = mask[i] ? '1' : '0';
    return s;
}

}  // namespace

std::vector<double> localization_error(const std::vector<Point2>& est,
                                       const std::vector<Point2>& truth) {
    if (est.size() != truth.size())
        throw std::invalid_argument("scatterer lists differ in length");
    std::vector<double> errors(est.size());
    for (std::size_t i = 0; i < est.size(); ++i) errors[i] = distance(est[i], truth[i]);
    return errors;
}

RealMatrix concatenated_pdp(const ChannelTensor& y, int tx_index) {
    if (tx_index < 0 || tx_index >= y.M)
        throw std::invalid_argument("tx index out of range");
    RealMatrix out;
    out.rows = y.N;
    out.cols = y.P;
    out.data.resize(out.rows * out.cols);
    const double scale = 1.0 / std::sqrt(static_cast<double>(y.P));
    for (int n = 0; n < y.N; ++n) {
        const cplx* ch = y.channel(tx_index, n);
        for (int k = 0; k < y.P; ++k) {
            cplx acc{0.0, 0.0};
            for (int p = 0; p < y.P; ++p)
                acc += ch[p] * std::polar(1.0, kTwoPi * p * k / static_cast<double>(y.P));
            out.at(n, k) = std::norm(acc * scale);
        }
    }
    return out;
}

RealMatrix sns_amplitude_map(const std::vector<PathEstimate>& estimates, int N,
                             int tx_index, double db_floor) {
    if (estimates.empty()) throw std::invalid_argument("no estimates");
    RealMatrix out;
    out.rows = estimates.size();
    out.cols = N;
    out.data.resize(out.rows * out.cols);
    for (std::size_t l = 0; l < estimates.size(); ++l) {
        const auto& amps = estimates[l].equivalent_amplitude;
        for (int n = 0; n < N; ++n) {
            const std::size_t c = static_cast<std::size_t>(tx_index) * N + n;
            const double mag = c < amps.size() ? std::abs(amps[c]) : 0.0;
            out.at(l, n) = mag > 0.0 ? std::max(20.0 * std::log10(mag), db_floor) : db_floor;
        }
    }
    return out;
}

Confusion blockage_confusion(const std::vector<std::uint8_t>& detected,
                             const std::vector<std::uint8_t>& truth) {
    if (detected.size() != truth.size())
        throw std::invalid_argument("mask lengths differ");
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool pred_blocked = detected[i] == 0;
        const bool true_blocked = truth[i] == 0;
        if (pred_blocked && true_blocked) ++c.tp;
        else if (pred_blocked && !true_blocked) ++c.fp;
        else if (!pred_blocked && true_blocked) ++c.fn;
        else ++c.tn;
    }
    return c;
}

ReconstructionReport build_report(const std::vector<PathTruth>& truth,
                                  const SageState& state, const RfConfig& rf,
                                  const ReportOptions& opts) {
    ReconstructionReport report;
    report.objective_trace = state.objective_trace;
    report.noise_variance = state.noise_variance;
    report.converged = state.converged;
    report.iterations = state.iteration;
    report.outlier_threshold_m = opts.outlier_threshold_m;
    report.match_tolerance_s = opts.match_tolerance_bins * rf.delay_bin();
    report.config_echo = opts.config_echo;

    // Greedy nearest-delay unique matching.
    struct Pair {
        double gap;
        std::size_t t, e;
    };
    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < truth.size(); ++t)
        for (std::size_t e = 0; e < state.estimates.size(); ++e)
            pairs.push_back({std::abs(truth[t].reference_delay -
                                      state.estimates[e].reference_delay),
                             t, e});
    std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        if (a.gap != b.gap) return a.gap < b.gap;
        if (a.t != b.t) return a.t < b.t;
        return a.e < b.e;
    });
    std::vector<int> truth_match(truth.size(), -1);
    std::vector<int> est_match(state.estimates.size(), -1);
    for (const auto& p : pairs) {
        if (p.gap > report.match_tolerance_s) break;
        if (truth_match[p.t] >= 0 || est_match[p.e] >= 0) continue;
        truth_match[p.t] = static_cast<int>(p.e);
        est_match[p.e] = static_cast<int>(p.t);
    }

    for (std::size_t t = 0; t < truth.size(); ++t) {
        PathReport pr;
        pr.truth_index = static_cast<int>(t);
        pr.truth_class = class_name(truth[t].bounce_order);
        pr.wall_labels = truth[t].wall_labels;
        pr.truth_scatterers = truth[t].scatterers;
        pr.truth_delay = truth[t].reference_delay;
        pr.scored = truth[t].bounce_order == 1 || truth[t].bounce_order == 2;
        if (truth_match[t] >= 0) {
            const auto& est = state.estimates[truth_match[t]];
            pr.estimate_index = truth_match[t];
            pr.estimate_class = to_string(est.bounce_class);
            pr.estimate_scatterers = est.scatterers;
            pr.estimate_delay = est.reference_delay;
            pr.class_correct =
                pr.scored && est.scatterers.size() == truth[t].scatterers.size() &&
                ((truth[t].bounce_order == 1 &&
                  est.bounce_class == BounceClass::one_bounce) ||
                 (truth[t].bounce_order == 2 &&
                  est.bounce_class == BounceClass::two_bounce));
            if (pr.class_correct) {
                pr.errors = localization_error(est.scatterers, truth[t].scatterers);
                for (const double e : pr.errors)
                    if (e > opts.outlier_threshold_m) pr.outlier = true;
            }
            if (est.bounce_class != BounceClass::high_bounce)
                pr.confusion =
                    blockage_confusion(est.blockage_estimate, truth[t].blockage_mask);
        }
        report.paths.push_back(std::move(pr));
    }
    for (std::size_t e = 0; e < state.estimates.size(); ++e) {
        if (est_match[e] >= 0) continue;
        PathReport pr;  // spurious estimate
        pr.estimate_index = static_cast<int>(e);
        pr.estimate_class = to_string(state.estimates[e].bounce_class);
        pr.estimate_scatterers = state.estimates[e].scatterers;
        pr.estimate_delay = state.estimates[e].reference_delay;
        report.paths.push_back(std::move(pr));
    }
    return report;
}

void emit_report(const ReconstructionReport& report, const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);

    nlohmann::ordered_json j;
    j["schema_version"] = report.schema_version;
    j["converged"] = report.converged;
    j["iterations"] = report.iterations;
    j["noise_variance"] = report.noise_variance;
    j["outlier_threshold_m"] = report.outlier_threshold_m;
    j["match_tolerance_s"] = report.match_tolerance_s;
    j["config_echo"] = report.config_echo;
    j["objective_trace"] = report.objective_trace;
    j["paths"] = nlohmann::ordered_json::array();
    for (const auto& p : report.paths) {
        nlohmann::ordered_json pj;
        pj["truth_index"] = p.truth_index;
        pj["estimate_index"] = p.estimate_index;
        pj["truth_class"] = p.truth_class;
        pj["estimate_class"] = p.estimate_class;
        pj["walls"] = p.wall_labels;
        auto pts = [](const std::vector<Point2>& v) {
            nlohmann::ordered_json a = nlohmann::ordered_json::array();
            for (const auto& pt : v) a.push_back({pt.x, pt.y});
            return a;
        };
        pj["truth_scatterers"] = pts(p.truth_scatterers);
        pj["estimate_scatterers"] = pts(p.estimate_scatterers);
        pj["truth_delay_s"] = p.truth_delay;
        pj["estimate_delay_s"] = p.estimate_delay;
        pj["scored"] = p.scored;
        pj["class_correct"] = p.class_correct;
        pj["errors_m"] = p.errors;
        pj["outlier"] = p.outlier;
        pj["blockage_confusion"] = {{"tp", p.confusion.tp},
                                    {"fp", p.confusion.fp},
                                    {"tn", p.confusion.tn},
                                    {"fn", p.confusion.fn}};
        j["paths"].push_back(std::move(pj));
    }
    {
        std::ofstream out(fs::path(directory) / "report.json");
        if (!out) throw std::runtime_error("cannot write report.json in " + directory);
        out << j.dump(2) << "\n";
    }
    {
        std::ofstream out(fs::path(directory) / "report.txt");
        if (!out) throw std::runtime_error("cannot write report.txt in " + directory);
        out << "Scatterer localization report\n";
        out << "converged: " << (report.converged ? "yes" : "no")
            << "  sweeps: " << report.iterations
            << "  sigma0^2: " << fmt(report.noise_variance) << "\n\n";
        out << "walls | class (truth/est) | truth | estimate | errors [m] | flags\n";
        for (const auto& p : report.paths) {
            std::ostringstream line;
            if (p.wall_labels.empty()) line << "-";
            for (std::size_t i = 0; i < p.wall_labels.size(); ++i)
                line << (i ? "+" : "") << p.wall_labels[i];
            line << " | " << (p.truth_class.empty() ? "-" : p.truth_class) << "/"
                 << (p.estimate_class.empty() ? "-" : p.estimate_class) << " | ";
            auto coords = [&](const std::vector<Point2>& v) {
                if (v.empty()) line << "-";
                for (const auto& pt : v)
                    line << "(" << fmt(pt.x) << ", " << fmt(pt.y) << ") ";
            };
            coords(p.truth_scatterers);
            line << "| ";
            coords(p.estimate_scatterers);
            line << "| ";
            if (p.errors.empty()) line << "-";
            for (const double e : p.errors) line << fmt(e) << " ";
            line << "|";
            if (!p.scored) line << " unscored";
            if (p.truth_index < 0) line << " spurious";
            if (p.estimate_index < 0) line << " missed";
            if (p.scored && p.estimate_index >= 0 && !p.class_correct)
                line << " class-mismatch";
            if (p.outlier) line << " ambiguity-outlier";
            out << line.str() << "\n";
        }
    }
    {
        std::ofstream out(fs::path(directory) / "objective_trace.csv");
        if (!out)
            throw std::runtime_error("cannot write objective_trace.csv in " + directory);
        out << "sweep,objective\n";
        for (std::size_t i = 0; i < report.objective_trace.size(); ++i)
            out << i + 1 << "," << fmt(report.objective_trace[i]) << "\n";
    }
}

void write_pdp_csv(const RealMatrix& pdp, const RfConfig& rf, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "rx_index";
    for (std::size_t k = 0; k < pdp.cols; ++k)
        out << ",d=" << fmt(k * kSpeedOfLight * rf.delay_bin()) << "m";
    out << "\n";
    for (std::size_t n = 0; n < pdp.rows; ++n) {
        out << n + 1;
        for (std::size_t k = 0; k < pdp.cols; ++k) out << "," << fmt(pdp.at(n, k));
        out << "\n";
    }
}

void write_amplitude_map_csv(const RealMatrix& map, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "path_index";
    for (std::size_t n = 0; n < map.cols; ++n) out << ",rx" << n + 1 << "_dB";
    out << "\n";
    for (std::size_t l = 0; l < map.rows; ++l) {
        out << l + 1;
        for (std::size_t n = 0; n < map.cols; ++n) out << "," << fmt(map.at(l, n));
        out << "\n";
    }
}

}  // namespace mbrec
