// SPDX-License-Identifier: Apache-2.0
//
// mbrec - multi-bounce channel simulation and scatterer localization

#include "mbrec/io.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace mbrec {

namespace {

constexpr char kTensorMagic[4] = {'M', 'B', 'C', 'T'};
constexpr std::uint32_t kTensorVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw format_error("truncated tensor file: " + path);
    return v;
}

double read_f64(std::istream& in, const std::string& path) {
    double v = 0.0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v))
        throw format_error("truncated tensor file: " + path);
    return v;
}

nlohmann::json parse_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw format_error("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw format_error(path + ": " + e.what());
    }
    return j;
}

template <typename F>
auto require(const std::string& path, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw format_error(path + ": " + e.what());
    }
}

nlohmann::ordered_json point_json(Point2 p) {
    return nlohmann::ordered_json::array({p.x, p.y});
}

Point2 point_from(const nlohmann::json& j) {
    if (!j.is_array() || j.size() != 2) throw format_error("point must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

std::vector<std::uint8_t> mask_from(const std::string& s) {
    std::vector<std::uint8_t> m(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '0' && s[i] != '1')
            throw format_error("blockage mask must contain only 0 and 1");
        m[i] = s[i] == '1';
    }
    return m;
}

std::string mask_to(const std::vector<std::uint8_t>& m) {
    std::string s(m.size(), '0');
    for (std::size_t i = 0; i < m.size(); ++i) s[i] = m[i] ? '1' : '0';
    return s;
}

}  // namespace

void save_tensor(const ChannelTensor& y, const RfConfig& rf, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kTensorMagic, 4);
    write_u32(out, kTensorVersion);
    write_u32(out, static_cast<std::uint32_t>(y.M));
    write_u32(out, static_cast<std::uint32_t>(y.N));
    write_u32(out, static_cast<std::uint32_t>(y.P));
    write_f64(out, rf.sub_bandwidth);
    write_f64(out, rf.snr_db);
    for (const cplx& v : y.values) {
        write_f64(out, v.real());
        write_f64(out, v.imag());
    }
    if (!out) throw std::runtime_error("short write to " + path);
}

ChannelTensor load_tensor(const std::string& path, RfConfig* rf) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw format_error("cannot open " + path);
    char magic[4] = {};
    if (!in.read(magic, 4) || std::memcmp(magic, kTensorMagic, 4) != 0)
        throw format_error("bad magic in " + path);
    const std::uint32_t version = read_u32(in, path);
    if (version != kTensorVersion)
        throw format_error("unsupported tensor version in " + path);
    const std::uint32_t M = read_u32(in, path);
    const std::uint32_t N = read_u32(in, path);
    const std::uint32_t P = read_u32(in, path);
    if (M == 0 || N == 0 || P == 0 || M > 100000 || N > 100000 || P > 1000000)
        throw format_error("implausible tensor dimensions in " + path);
    const double fs = read_f64(in, path);
    const double snr = read_f64(in, path);
    ChannelTensor y(static_cast<int>(M), static_cast<int>(N), static_cast<int>(P));
    for (cplx& v : y.values) {
        const double re = read_f64(in, path);
        const double im = read_f64(in, path);
        v = {re, im};
    }
    if (rf) {
        rf->sub_bandwidth = fs;
        rf->sub_band_count = static_cast<int>(P);
        rf->snr_db = snr;
    }
    return y;
}

void save_scene(const Scene& scene, const RfConfig& rf, const TraceOptions& trace,
                const std::string& path) {
    nlohmann::ordered_json j;
    j["room"] = {{"width", scene.room_width}, {"height", scene.room_height}};
    j["walls"] = nlohmann::ordered_json::array();
    for (const Wall& w : scene.walls)
        j["walls"].push_back({{"label", w.label},
                              {"a", point_json(w.a)},
                              {"b", point_json(w.b)}});
    if (scene.obstacle) {
        nlohmann::ordered_json verts = nlohmann::ordered_json::array();
        for (const Point2& v : scene.obstacle->vertices) verts.push_back(point_json(v));
        j["obstacle"] = {{"vertices", verts}};
    } else {
        j["obstacle"] = nullptr;
    }
    auto array_json = [](const ArrayGeometry& a) {
        return nlohmann::ordered_json{{"reference", point_json(a.reference)},
                                      {"elements", a.element_count},
                                      {"spacing_m", a.element_spacing},
                                      {"orientation", point_json(a.orientation)}};
    };
    j["tx"] = array_json(scene.tx);
    j["rx"] = array_json(scene.rx);
    j["rf"] = {{"carrier_frequency_hz", rf.carrier_frequency},
               {"sub_bandwidth_hz", rf.sub_bandwidth},
               {"sub_bands", rf.sub_band_count},
               {"snr_db", rf.snr_db},
               {"one_based_frequency_indexing", rf.one_based_frequency_indexing}};
    j["trace"] = {{"include_los", trace.include_los},
                  {"amplitude_scale", trace.amplitude_scale}};
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

void load_scene(const std::string& path, Scene& scene, RfConfig& rf,
                TraceOptions& trace) {
    const nlohmann::json j = parse_json(path);
    require(path, [&] {
        rf = RfConfig{};
        if (j.contains("rf")) {
            const auto& r = j.at("rf");
            rf.carrier_frequency = r.value("carrier_frequency_hz", rf.carrier_frequency);
            rf.sub_bandwidth = r.value("sub_bandwidth_hz", rf.sub_bandwidth);
            rf.sub_band_count = r.value("sub_bands", rf.sub_band_count);
            if (r.contains("snr_db")) {
                if (r.at("snr_db").is_null())
                    rf.snr_db = std::numeric_limits<double>::infinity();
                else
                    rf.snr_db = r.at("snr_db").get<double>();
            }
            rf.one_based_frequency_indexing =
                r.value("one_based_frequency_indexing", rf.one_based_frequency_indexing);
        }
        if (rf.carrier_frequency <= 0 || rf.sub_bandwidth <= 0 || rf.sub_band_count <= 0)
            throw format_error(path + ": non-positive RF parameter");

        scene = Scene{};
        scene.room_width = j.at("room").at("width").get<double>();
        scene.room_height = j.at("room").at("height").get<double>();
        for (const auto& w : j.at("walls")) {
            Wall wall;
            wall.label = w.at("label").get<std::string>();
            wall.a = point_from(w.at("a"));
            wall.b = point_from(w.at("b"));
            scene.walls.push_back(std::move(wall));
        }
        if (j.contains("obstacle") && !j.at("obstacle").is_null()) {
            Obstacle obs;
            for (const auto& v : j.at("obstacle").at("vertices"))
                obs.vertices.push_back(point_from(v));
            scene.obstacle = std::move(obs);
        }
        auto array_from = [&](const nlohmann::json& a) {
            ArrayGeometry g;
            g.reference = point_from(a.at("reference"));
            g.element_count = a.at("elements").get<int>();
            if (a.contains("spacing_m"))
                g.element_spacing = a.at("spacing_m").get<double>();
            else
                g.element_spacing = a.at("spacing_lambda").get<double>() * rf.wavelength();
            if (a.contains("orientation")) {
                g.orientation = point_from(a.at("orientation"));
                const double n = norm(g.orientation);
                if (n <= 0) throw format_error(path + ": zero orientation vector");
                g.orientation = (1.0 / n) * g.orientation;
            }
            return g;
        };
        scene.tx = array_from(j.at("tx"));
        scene.rx = array_from(j.at("rx"));

        trace = TraceOptions{};
        if (j.contains("trace")) {
            trace.include_los = j.at("trace").value("include_los", trace.include_los);
            trace.amplitude_scale =
                j.at("trace").value("amplitude_scale", trace.amplitude_scale);
        }
        return 0;
    });
    try {
        scene.validate();
    } catch (const invalid_geometry& e) {
        throw format_error(path + ": " + e.what());
    }
}

void save_truth(const std::vector<PathTruth>& truth, const std::string& path) {
    nlohmann::ordered_json j;
    j["paths"] = nlohmann::ordered_json::array();
    for (const PathTruth& t : truth) {
        nlohmann::ordered_json pj;
        pj["bounce_order"] = t.bounce_order;
        pj["walls"] = t.wall_labels;
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        for (const Point2& s : t.scatterers) pts.push_back(point_json(s));
        pj["scatterers"] = pts;
        pj["reference_delay_s"] = t.reference_delay;
        pj["reference_distance_m"] = t.reference_distance;
        pj["amplitude"] = point_json({t.amplitude.real(), t.amplitude.imag()});
        pj["blockage_mask"] = mask_to(t.blockage_mask);
        j["paths"].push_back(std::move(pj));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::vector<PathTruth> load_truth(const std::string& path) {
    const nlohmann::json j = parse_json(path);
    return require(path, [&] {
        std::vector<PathTruth> truth;
        for (const auto& pj : j.at("paths")) {
            PathTruth t;
            t.bounce_order = pj.at("bounce_order").get<int>();
            t.wall_labels = pj.at("walls").get<std::vector<std::string>>();
            for (const auto& s : pj.at("scatterers"))
                t.scatterers.push_back(point_from(s));
            t.reference_delay = pj.at("reference_delay_s").get<double>();
            t.reference_distance = pj.at("reference_distance_m").get<double>();
            const Point2 a = point_from(pj.at("amplitude"));
            t.amplitude = {a.x, a.y};
            t.blockage_mask = mask_from(pj.at("blockage_mask").get<std::string>());
            truth.push_back(std::move(t));
        }
        return truth;
    });
}

void save_estimates(const SageState& state, const std::string& path) {
    nlohmann::ordered_json j;
    j["iterations"] = state.iteration;
    j["converged"] = state.converged;
    j["noise_variance"] = state.noise_variance;
    j["objective_trace"] = state.objective_trace;
    j["interference_weights"] = state.interference_weights;
    j["estimates"] = nlohmann::ordered_json::array();
    for (const PathEstimate& e : state.estimates) {
        nlohmann::ordered_json ej;
        ej["class"] = to_string(e.bounce_class);
        nlohmann::ordered_json pts = nlohmann::ordered_json::array();
        for (const Point2& s : e.scatterers) pts.push_back(point_json(s));
        ej["scatterers"] = pts;
        ej["reference_delay_s"] = e.reference_delay;
        nlohmann::ordered_json amps = nlohmann::ordered_json::array();
        for (const cplx& a : e.equivalent_amplitude)
            amps.push_back({a.real(), a.imag()});
        ej["equivalent_amplitude"] = std::move(amps);
        ej["blockage"] = mask_to(e.blockage_estimate);
        ej["delays_s"] = e.delays;
        ej["objective"] = e.objective_value;
        ej["reference_channel"] = e.reference_channel;
        j["estimates"].push_back(std::move(ej));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

SageState load_estimates(const std::string& path) {
    const nlohmann::json j = parse_json(path);
    return require(path, [&] {
        SageState state;
        state.iteration = j.at("iterations").get<int>();
        state.converged = j.at("converged").get<bool>();
        state.noise_variance = j.at("noise_variance").get<double>();
        state.objective_trace = j.at("objective_trace").get<std::vector<double>>();
        state.interference_weights =
            j.at("interference_weights").get<std::vector<double>>();
        for (const auto& ej : j.at("estimates")) {
            PathEstimate e;
            const std::string cls = ej.at("class").get<std::string>();
            if (cls == "one-bounce") e.bounce_class = BounceClass::one_bounce;
            else if (cls == "two-bounce") e.bounce_class = BounceClass::two_bounce;
            else if (cls == "high-bounce") e.bounce_class = BounceClass::high_bounce;
            else throw format_error(path + ": unknown path class " + cls);
            for (const auto& s : ej.at("scatterers"))
                e.scatterers.push_back(point_from(s));
            e.reference_delay = ej.at("reference_delay_s").get<double>();
            for (const auto& a : ej.at("equivalent_amplitude")) {
                const Point2 v = point_from(a);
                e.equivalent_amplitude.push_back({v.x, v.y});
            }
            e.blockage_estimate = mask_from(ej.at("blockage").get<std::string>());
            e.delays = ej.at("delays_s").get<std::vector<double>>();
            e.objective_value = ej.at("objective").get<double>();
            e.reference_channel = ej.at("reference_channel").get<int>();
            state.estimates.push_back(std::move(e));
        }
        return state;
    });
}

}  // namespace mbrec
