#include "dstyle/serialize.hpp"

#include <fstream>
#include <sstream>

#include "dstyle/errors.hpp"
#include "text_util.hpp"

namespace dstyle {

namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const Json::exception& e) {
        throw ParseError(std::string(what) + ": " + e.what());
    }
}

Vec3 vec3_from(const Json& j) {
    if (!j.is_array() || j.size() != 3) throw ParseError("expected an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

Json to_json(const Scaler& s) { return Json{{"mins", s.mins}, {"maxs", s.maxs}}; }

Scaler scaler_from_json(const Json& j) {
    return guarded("scaler", [&] {
        Scaler s;
        s.mins = vec3_from(j.at("mins"));
        s.maxs = vec3_from(j.at("maxs"));
        for (std::size_t f = 0; f < 3; ++f) {
            if (!(s.maxs[f] > s.mins[f])) throw ValidationError("scaler: max must exceed min");
        }
        return s;
    });
}

Json to_json(const ClusterModel& m, const std::string& scaler_ref) {
    Json order = Json::array();
    for (int s : m.label_order) order.push_back(s + 1);
    return Json{{"centroids", m.centroids}, {"inertia", m.inertia}, {"label_order", order}, {"scaler_ref", scaler_ref}};
}

ClusterModel cluster_model_from_json(const Json& j) {
    return guarded("cluster model", [&] {
        ClusterModel m;
        for (const auto& c : j.at("centroids")) m.centroids.push_back(vec3_from(c));
        m.inertia = j.at("inertia").get<double>();
        for (const auto& s : j.at("label_order")) m.label_order.push_back(s.get<int>() - 1);
        if (m.label_order.size() != m.centroids.size()) throw ParseError("cluster model: label_order size mismatch");
        std::vector<bool> seen(m.centroids.size(), false);
        for (int s : m.label_order) {
            if (s < 0 || static_cast<std::size_t>(s) >= seen.size() || seen[static_cast<std::size_t>(s)]) {
                throw ParseError("cluster model: label_order is not a permutation");
            }
            seen[static_cast<std::size_t>(s)] = true;
        }
        return m;
    });
}

Json to_json(const AnfisModel& m, const std::string& scaler_ref) {
    Json mfs = Json::array();
    for (const auto& input : m.mfs) {
        Json row = Json::array();
        for (const auto& mf : input) row.push_back(Json{{"a", mf.a}, {"b", mf.b}, {"e", mf.e}});
        mfs.push_back(row);
    }
    return Json{{"inputs", 3},
                {"mfs", mfs},
                {"consequents", m.consequents},
                {"rule_order", "i1-major"},
                {"scaler_ref", scaler_ref}};
}

AnfisModel anfis_from_json(const Json& j) {
    return guarded("ANFIS model", [&] {
        if (j.at("inputs").get<int>() != 3) throw ParseError("ANFIS model: expected 3 inputs");
        if (j.at("rule_order").get<std::string>() != "i1-major") throw ParseError("ANFIS model: unknown rule order");
        AnfisModel m;
        const auto& mfs = j.at("mfs");
        if (mfs.size() != 3) throw ParseError("ANFIS model: expected 3 x 3 membership functions");
        for (std::size_t i = 0; i < 3; ++i) {
            if (mfs[i].size() != 3) throw ParseError("ANFIS model: expected 3 x 3 membership functions");
            for (std::size_t l = 0; l < 3; ++l) {
                const auto& mf = mfs[i][l];
                m.mfs[i][l] = {mf.at("a").get<double>(), mf.at("b").get<double>(), mf.at("e").get<double>()};
                if (!(m.mfs[i][l].a > 0.0 && m.mfs[i][l].b > 0.0)) throw ValidationError("ANFIS model: a and b must be positive");
            }
        }
        const auto& c = j.at("consequents");
        if (c.size() != kAnfisRules) throw ParseError("ANFIS model: expected 27 consequents");
        for (std::size_t k = 0; k < kAnfisRules; ++k) m.consequents[k] = c[k].get<double>();
        return m;
    });
}

Json to_json(const PlaneModel& p) {
    Json pts = Json::array();
    for (const auto& q : p.points) pts.push_back(Json::array({q.thw_rms, q.tith, q.thw_hat}));
    Json j{{"cluster", p.style + 1}, {"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma},
           {"points", pts},          {"floor_s", p.floor_s}, {"fitted", p.fitted}};
    if (!p.note.empty()) j["note"] = p.note;
    return j;
}

PlaneModel plane_from_json(const Json& j) {
    return guarded("plane", [&] {
        PlaneModel p;
        p.style = j.at("cluster").get<int>() - 1;
        p.alpha = j.at("alpha").get<double>();
        p.beta = j.at("beta").get<double>();
        p.gamma = j.at("gamma").get<double>();
        const auto& pts = j.at("points");
        if (pts.size() != 3) throw ParseError("plane: expected 3 points");
        for (std::size_t i = 0; i < 3; ++i) {
            const auto v = vec3_from(pts[i]);
            p.points[i] = {v[0], v[1], v[2]};
        }
        p.floor_s = j.at("floor_s").get<double>();
        p.fitted = j.value("fitted", true);
        p.note = j.value("note", std::string{});
        return p;
    });
}

Json to_json(const HwAnfis& hw) {
    Json formats = Json::array();
    for (std::size_t i = 0; i < hw.formats.size(); ++i) {
        const auto& f = hw.formats[i];
        formats.push_back(Json{{"stage", kFormatNames[i]},
                               {"total_bits", f.total_bits},
                               {"frac_bits", f.frac_bits},
                               {"signed", f.is_signed}});
    }
    return Json{{"magic", "HWA1"}, {"luts", hw.luts}, {"consequents", hw.consequents}, {"formats", formats}};
}

Json to_json(const ConfusionMatrix& cm) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < cm.k; ++i) {
        Json row = Json::array();
        for (std::size_t j = 0; j < cm.k; ++j) row.push_back(cm.at(i, j));
        rows.push_back(row);
    }
    return Json{{"rows_actual_cols_identified", rows},
                {"accuracy", cm.accuracy()},
                {"per_class_by_row", cm.per_class_by_row()},
                {"per_class_by_column", cm.per_class_by_column()}};
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::string out = "actual\\identified";
    for (std::size_t j = 0; j < cm.k; ++j) out += ",cluster" + std::to_string(j + 1);
    out += '\n';
    for (std::size_t i = 0; i < cm.k; ++i) {
        out += "cluster" + std::to_string(i + 1);
        for (std::size_t j = 0; j < cm.k; ++j) out += ',' + std::to_string(cm.at(i, j));
        out += '\n';
    }
    return out;
}

Json segment_manifest(std::span<const CarFollowingSegment> segments) {
    Json arr = Json::array();
    for (const auto& s : segments) {
        arr.push_back(Json{{"trip_id", s.trip_id},
                           {"driver_id", s.driver_id},
                           {"start_index", s.start_index},
                           {"end_index", s.end_index},
                           {"duration_s", s.duration_s}});
    }
    return arr;
}

std::vector<SegmentRef> manifest_from_json(const Json& j) {
    return guarded("segment manifest", [&] {
        if (!j.is_array()) throw ParseError("segment manifest: expected an array");
        std::vector<SegmentRef> out;
        for (const auto& e : j) {
            SegmentRef r;
            r.trip_id = e.at("trip_id").get<std::string>();
            r.driver_id = e.at("driver_id").get<std::string>();
            r.start_index = e.at("start_index").get<std::size_t>();
            r.end_index = e.at("end_index").get<std::size_t>();
            r.duration_s = e.at("duration_s").get<double>();
            if (r.end_index < r.start_index) throw ValidationError("segment manifest: end before start");
            out.push_back(std::move(r));
        }
        return out;
    });
}

CarFollowingSegment materialize(const SegmentRef& ref, const Trip& trip, const Premises& premises) {
    if (ref.end_index >= trip.samples.size()) {
        throw ValidationError("segment of trip '" + ref.trip_id + "' reaches past the end of the trip");
    }
    CarFollowingSegment seg;
    seg.trip_id = ref.trip_id;
    seg.driver_id = ref.driver_id;
    seg.start_index = ref.start_index;
    seg.end_index = ref.end_index;
    seg.sample_period = trip.sample_period;
    seg.samples.assign(trip.samples.begin() + static_cast<std::ptrdiff_t>(ref.start_index),
                       trip.samples.begin() + static_cast<std::ptrdiff_t>(ref.end_index) + 1);
    for (const auto& s : seg.samples) seg.bridged.push_back(sample_compliant(s, premises) ? 0 : 1);
    seg.duration_s = seg.duration();
    return seg;
}

std::string features_csv(std::span<const FeatureRow> rows) {
    bool labeled = !rows.empty();
    for (const auto& r : rows) labeled = labeled && r.style >= 0;
    std::string out = "trip_id,segment_idx,thw_rms,teth,tith,duration_s";
    out += labeled ? ",style\n" : "\n";
    for (const auto& r : rows) {
        out += r.trip_id;
        out += ',' + std::to_string(r.segment_idx) + ',';
        append_double(out, r.fv.thw_rms);
        out += ',';
        append_double(out, r.fv.teth);
        out += ',';
        append_double(out, r.fv.tith);
        out += ',';
        append_double(out, r.fv.duration);
        if (labeled) out += ',' + std::to_string(r.style + 1);
        out += '\n';
    }
    return out;
}

std::vector<FeatureRow> parse_features_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("feature table: empty");
    const auto header = trim_cr(line);
    bool labeled;
    if (header == "trip_id,segment_idx,thw_rms,teth,tith,duration_s") {
        labeled = false;
    } else if (header == "trip_id,segment_idx,thw_rms,teth,tith,duration_s,style") {
        labeled = true;
    } else {
        throw ParseError("feature table: unexpected header");
    }
    std::vector<FeatureRow> rows;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
        ++row_no;
        const auto view = trim_cr(line);
        if (view.empty()) continue;
        const auto f = split(view, ',');
        if (f.size() != (labeled ? 7u : 6u)) {
            throw ParseError("feature table row " + std::to_string(row_no) + ": wrong field count");
        }
        try {
            FeatureRow r;
            r.trip_id = std::string(f[0]);
            r.segment_idx = static_cast<std::size_t>(parse_int(f[1]));
            r.fv.thw_rms = parse_double(f[2]);
            r.fv.teth = parse_double(f[3]);
            r.fv.tith = parse_double(f[4]);
            r.fv.duration = parse_double(f[5]);
            if (labeled) r.style = static_cast<int>(parse_int(f[6])) - 1;
            rows.push_back(std::move(r));
        } catch (const ParseError& e) {
            throw ParseError("feature table row " + std::to_string(row_no) + ": " + e.what());
        }
    }
    return rows;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArtifactError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
    if (!out) throw ValidationError("write failed for " + path.string());
}

Json read_json(const std::filesystem::path& path) {
    const auto text = read_text(path);
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace dstyle
