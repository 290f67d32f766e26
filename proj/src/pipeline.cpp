#include "dstyle/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "dstyle/errors.hpp"
#include "dstyle/hw_model.hpp"
#include "dstyle/personalization.hpp"
#include "dstyle/random.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace dstyle {

namespace {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as typos.
class Section {
public:
    Section(const Json* j, std::string where) : j_(j), where_(std::move(where)) {
        if (j_ != nullptr && !j_->is_object()) throw ParseError("config: '" + where_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out) {
        used_.insert(key);
        if (j_ == nullptr || !j_->contains(key)) return;
        try {
            out = (*j_)[key].get<T>();
        } catch (const Json::exception&) {
            throw ParseError("config: bad value for '" + where_ + key + "'");
        }
    }

    const Json* sub(const char* key) {
        used_.insert(key);
        if (j_ == nullptr || !j_->contains(key)) return nullptr;
        return &(*j_)[key];
    }

    void finish() const {
        if (j_ == nullptr) return;
        for (const auto& [k, v] : j_->items()) {
            if (!used_.contains(k)) throw ValidationError("config: unknown key '" + where_ + k + "'");
        }
    }

private:
    const Json* j_;
    std::string where_;
    std::set<std::string, std::less<>> used_;
};

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-';
        if (!ok) return false;
    }
    return true;
}

fs::path at(const fs::path& out_dir, const std::string& rel) { return out_dir / rel; }

fs::path sidecar_of(const fs::path& artifact) {
    return artifact.parent_path() / (artifact.stem().string() + ".prov.json");
}

void require(const fs::path& p, const char* producer) {
    if (!fs::exists(p)) {
        throw ArtifactError("missing " + p.string() + "; run `dstyle " + producer + "` first");
    }
}

void check_hash(const Json& holder, const PipelineConfig& cfg, const fs::path& p, const char* producer) {
    const auto it = holder.find("provenance");
    const std::string found = (it != holder.end() && it->is_object()) ? it->value("config_hash", std::string{}) : "";
    const auto want = config_hash(cfg);
    if (found != want) {
        throw ArtifactError(p.string() + " was produced under config hash '" + found +
                            "' but the current config hashes to '" + want + "'; rerun `dstyle " + producer + "`");
    }
}

Json load_checked(const fs::path& p, const PipelineConfig& cfg, const char* producer) {
    require(p, producer);
    auto j = read_json(p);
    check_hash(j, cfg, p, producer);
    return j;
}

// For artifacts whose own schema has no room for provenance.
void check_sidecar(const fs::path& artifact, const PipelineConfig& cfg, const char* producer) {
    require(artifact, producer);
    const auto side = sidecar_of(artifact);
    require(side, producer);
    check_hash(read_json(side), cfg, side, producer);
}

void write_sidecar(const fs::path& artifact, const PipelineConfig& cfg, Json extra = Json::object()) {
    Json j{{"artifact", artifact.filename().string()}, {"provenance", provenance(cfg)}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_json(sidecar_of(artifact), j);
}

Json with_provenance(const PipelineConfig& cfg, Json body) {
    Json j{{"provenance", provenance(cfg)}};
    for (auto& [k, v] : body.items()) j[k] = v;
    return j;
}

struct CohortDriver {
    std::string driver_id;
    int archetype{0};
    std::vector<std::string> trip_files;
};

std::vector<CohortDriver> load_cohort(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto j = load_checked(at(out_dir, cfg.paths.cohort), cfg, "gen");
    std::vector<CohortDriver> out;
    try {
        for (const auto& d : j.at("drivers")) {
            CohortDriver cd;
            cd.driver_id = d.at("driver_id").get<std::string>();
            cd.archetype = d.at("archetype").get<int>();
            for (const auto& t : d.at("trips")) cd.trip_files.push_back(t.get<std::string>());
            out.push_back(std::move(cd));
        }
    } catch (const Json::exception& e) {
        throw ParseError("cohort: " + std::string(e.what()));
    }
    return out;
}

std::vector<CarFollowingSegment> segment_trip(const Trip& trip, const PipelineConfig& cfg) {
    const auto stretches = find_stretches(trip, cfg.premises);
    const auto segs = uniformize(stretches, cfg.max_segment_s, cfg.min_segment_s);
    return filter_by_thw_rms(segs, cfg.thw_rms_max);
}

std::vector<FeatureRow> load_features(const fs::path& p, const PipelineConfig& cfg, const char* producer) {
    check_sidecar(p, cfg, producer);
    return parse_features_csv(read_text(p));
}

Scaler load_scaler(const PipelineConfig& cfg, const fs::path& out_dir) {
    return scaler_from_json(load_checked(at(out_dir, cfg.paths.scaler), cfg, "features"));
}

ClassifierBank load_bank(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto j = load_checked(at(out_dir, cfg.paths.bank), cfg, "train");
    ClassifierBank bank;
    bank.scaler = scaler_from_json(j.at("scaler"));
    const auto& models = j.at("models");
    if (models.size() != 3) throw ParseError("bank: expected 3 models");
    for (std::size_t s = 0; s < 3; ++s) bank.models[s] = anfis_from_json(models[s]);
    return bank;
}

std::array<HwAnfis, 3> load_hw_bank(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto bin = at(out_dir, cfg.paths.hw_bank);
    require(bin, "quantize");
    const auto side = load_checked(at(out_dir, cfg.paths.hw_sidecar), cfg, "quantize");
    const auto text = read_text(bin);
    const std::vector<std::uint8_t> bytes(text.begin(), text.end());
    std::array<HwAnfis, 3> bank;
    std::size_t offset = 0;
    for (std::size_t s = 0; s < 3; ++s) {
        std::size_t used = 0;
        bank[s] = decode_hwa1(std::span(bytes).subspan(offset), &used);
        offset += used;
        if (side.at("records").at(s) != to_json(bank[s])) {
            throw ArtifactError(bin.string() + " does not match its sidecar; rerun `dstyle quantize`");
        }
    }
    if (offset != bytes.size()) throw ArtifactError(bin.string() + ": trailing bytes");
    return bank;
}

std::vector<PlaneModel> load_planes(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto j = load_checked(at(out_dir, cfg.paths.planes), cfg, "cluster");
    std::vector<PlaneModel> planes;
    for (const auto& p : j.at("planes")) planes.push_back(plane_from_json(p));
    if (planes.size() != 3) throw ParseError("planes: expected 3 planes");
    for (std::size_t s = 0; s < 3; ++s) {
        if (planes[s].style != static_cast<int>(s)) throw ParseError("planes: out of order");
    }
    return planes;
}

Json cycle_json(const CycleReport& r) {
    return Json{{"mf", r.mf},
                {"rule_product", r.rule_product},
                {"sum_of_products", r.sum_of_products},
                {"divider", r.divider},
                {"total", r.total()},
                {"wall_time_ns_at_100mhz", r.wall_time_ns(100.0)}};
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

void finalize(PipelineConfig& cfg) {
    cfg.kmeans.seed = mix_seed(cfg.seed, 0x6b6dULL);
    cfg.train.split_seed = mix_seed(cfg.seed, 0x7370ULL);
    validate(cfg.premises);
    validate(cfg.train);
    const auto& c = cfg.cohort;
    if (c.drivers_per_archetype < 1 || c.trips_per_driver < 1 || c.archetypes.empty() || !(c.driver_thw_sd >= 0.0)) {
        throw ValidationError("config: invalid cohort");
    }
    if (!(c.trip_duration_s >= 60.0)) throw ValidationError("config: trip_duration_s must be >= 60");
    for (const auto& a : c.archetypes) {
        if (!valid_name(a.name)) throw ValidationError("config: archetype names use letters, digits and '-'");
        if (!(a.target_thw > 0.0) || !(a.thw_jitter_sd >= 0.0) || !(a.gain > 0.0)) {
            throw ValidationError("config: invalid archetype '" + a.name + "'");
        }
    }
    if (!(cfg.min_segment_s > 0.0) || !(cfg.max_segment_s >= cfg.min_segment_s)) {
        throw ValidationError("config: invalid segment bounds");
    }
    if (!(cfg.thw_rms_max > 0.0) || !(cfg.threshold.thw_star > 0.0)) throw ValidationError("config: invalid thresholds");
    if (cfg.kmeans.k != 3) throw ValidationError("config: the classifier bank needs k = 3");
    if (cfg.kmeans.restarts < 1 || cfg.kmeans.max_iters < 1 || !(cfg.kmeans.tol >= 0.0)) {
        throw ValidationError("config: invalid k-means settings");
    }
    if (cfg.hwsim_sweep < 1 || cfg.window_segments < 1) throw ValidationError("config: invalid hwsim/window settings");
}

PipelineConfig config_from_json(const Json& j) {
    PipelineConfig cfg;
    Section top(&j, "");
    top.get("seed", cfg.seed);

    Section cohort(top.sub("cohort"), "cohort.");
    cohort.get("drivers_per_archetype", cfg.cohort.drivers_per_archetype);
    cohort.get("trips_per_driver", cfg.cohort.trips_per_driver);
    cohort.get("trip_duration_s", cfg.cohort.trip_duration_s);
    cohort.get("driver_thw_sd", cfg.cohort.driver_thw_sd);
    if (const Json* arr = cohort.sub("archetypes")) {
        if (!arr->is_array()) throw ParseError("config: 'cohort.archetypes' must be an array");
        cfg.cohort.archetypes.clear();
        for (const auto& a : *arr) {
            ArchetypeParams proto;
            Section s(&a, "cohort.archetypes[].");
            s.get("name", proto.name);
            s.get("target_thw", proto.target_thw);
            s.get("thw_jitter_sd", proto.thw_jitter_sd);
            s.get("gain", proto.gain);
            s.finish();
            cfg.cohort.archetypes.push_back(proto);
        }
    }
    Section gen(cohort.sub("generator"), "cohort.generator.");
    auto& g = cfg.cohort.generator;
    gen.get("sample_period", g.sample_period);
    gen.get("constant_lead_speed", g.constant_lead_speed);
    gen.get("lead_speed", g.lead_speed);
    gen.get("min_lead_speed", g.min_lead_speed);
    gen.get("max_lead_speed", g.max_lead_speed);
    gen.get("min_hold_s", g.min_hold_s);
    gen.get("max_hold_s", g.max_hold_s);
    gen.get("lead_accel", g.lead_accel);
    gen.get("lead_change_prob", g.lead_change_prob);
    gen.get("dropout_rate_hz", g.dropout_rate_hz);
    gen.get("max_dropout_samples", g.max_dropout_samples);
    gen.get("distance_noise_sd", g.distance_noise_sd);
    gen.get("jitter_time_constant_s", g.jitter_time_constant_s);
    gen.get("initial_gap_factor", g.initial_gap_factor);
    gen.finish();
    cohort.finish();

    Section prem(top.sub("premises"), "premises.");
    prem.get("max_distance", cfg.premises.max_distance);
    prem.get("min_speed", cfg.premises.min_speed);
    prem.get("max_abs_ttci", cfg.premises.max_abs_ttci);
    prem.get("min_duration", cfg.premises.min_duration);
    prem.get("dropout_tolerance", cfg.premises.dropout_tolerance);
    prem.get("min_distance", cfg.premises.min_distance);
    prem.finish();

    Section seg(top.sub("segmentation"), "segmentation.");
    seg.get("max_segment_s", cfg.max_segment_s);
    seg.get("min_segment_s", cfg.min_segment_s);
    seg.get("thw_rms_max", cfg.thw_rms_max);
    seg.finish();

    Section feat(top.sub("features"), "features.");
    feat.get("thw_star", cfg.threshold.thw_star);
    feat.finish();

    Section km(top.sub("kmeans"), "kmeans.");
    km.get("k", cfg.kmeans.k);
    km.get("restarts", cfg.kmeans.restarts);
    km.get("max_iters", cfg.kmeans.max_iters);
    km.get("tol", cfg.kmeans.tol);
    km.finish();

    Section tr(top.sub("train"), "train.");
    tr.get("epochs", cfg.train.epochs);
    tr.get("learning_rate", cfg.train.learning_rate);
    tr.get("train_fraction", cfg.train.train_fraction);
    tr.get("lse_ridge", cfg.train.lse_ridge);
    tr.get("consequent_min", cfg.train.consequent_min);
    tr.get("consequent_max", cfg.train.consequent_max);
    tr.finish();

    Section hw(top.sub("hwsim"), "hwsim.");
    hw.get("sweep", cfg.hwsim_sweep);
    hw.finish();

    Section pers(top.sub("personalize"), "personalize.");
    pers.get("window_segments", cfg.window_segments);
    pers.get("require_monotone_planes", cfg.require_monotone_planes);
    pers.finish();

    Section paths(top.sub("paths"), "paths.");
    auto& p = cfg.paths;
    for (auto [key, field] : {std::pair{"trips", &p.trips}, {"cohort", &p.cohort}, {"segments", &p.segments},
                              {"features", &p.features}, {"scaler", &p.scaler}, {"cluster_model", &p.cluster_model},
                              {"labeled_features", &p.labeled_features}, {"planes", &p.planes}, {"bank", &p.bank},
                              {"confusion", &p.confusion}, {"train_report", &p.train_report}, {"hw_bank", &p.hw_bank},
                              {"hw_sidecar", &p.hw_sidecar}, {"quantize_report", &p.quantize_report},
                              {"hwsim_report", &p.hwsim_report}, {"summary", &p.summary}}) {
        paths.get(key, *field);
    }
    paths.finish();

    top.finish();
    finalize(cfg);
    return cfg;
}

PipelineConfig load_config(const fs::path& path) {
    if (!fs::exists(path)) throw ValidationError("config file not found: " + path.string());
    return config_from_json(read_json(path));
}

Json config_to_json(const PipelineConfig& cfg) {
    Json archetypes = Json::array();
    for (const auto& a : cfg.cohort.archetypes) {
        archetypes.push_back(
            Json{{"name", a.name}, {"target_thw", a.target_thw}, {"thw_jitter_sd", a.thw_jitter_sd}, {"gain", a.gain}});
    }
    const auto& g = cfg.cohort.generator;
    const auto& p = cfg.paths;
    return Json{
        {"seed", cfg.seed},
        {"cohort",
         {{"drivers_per_archetype", cfg.cohort.drivers_per_archetype},
          {"trips_per_driver", cfg.cohort.trips_per_driver},
          {"trip_duration_s", cfg.cohort.trip_duration_s},
          {"driver_thw_sd", cfg.cohort.driver_thw_sd},
          {"archetypes", archetypes},
          {"generator",
           {{"sample_period", g.sample_period},
            {"constant_lead_speed", g.constant_lead_speed},
            {"lead_speed", g.lead_speed},
            {"min_lead_speed", g.min_lead_speed},
            {"max_lead_speed", g.max_lead_speed},
            {"min_hold_s", g.min_hold_s},
            {"max_hold_s", g.max_hold_s},
            {"lead_accel", g.lead_accel},
            {"lead_change_prob", g.lead_change_prob},
            {"dropout_rate_hz", g.dropout_rate_hz},
            {"max_dropout_samples", g.max_dropout_samples},
            {"distance_noise_sd", g.distance_noise_sd},
            {"jitter_time_constant_s", g.jitter_time_constant_s},
            {"initial_gap_factor", g.initial_gap_factor}}}}},
        {"premises",
         {{"max_distance", cfg.premises.max_distance},
          {"min_speed", cfg.premises.min_speed},
          {"max_abs_ttci", cfg.premises.max_abs_ttci},
          {"min_duration", cfg.premises.min_duration},
          {"dropout_tolerance", cfg.premises.dropout_tolerance},
          {"min_distance", cfg.premises.min_distance}}},
        {"segmentation",
         {{"max_segment_s", cfg.max_segment_s}, {"min_segment_s", cfg.min_segment_s}, {"thw_rms_max", cfg.thw_rms_max}}},
        {"features", {{"thw_star", cfg.threshold.thw_star}}},
        {"kmeans",
         {{"k", cfg.kmeans.k}, {"restarts", cfg.kmeans.restarts}, {"max_iters", cfg.kmeans.max_iters}, {"tol", cfg.kmeans.tol}}},
        {"train",
         {{"epochs", cfg.train.epochs},
          {"learning_rate", cfg.train.learning_rate},
          {"train_fraction", cfg.train.train_fraction},
          {"lse_ridge", cfg.train.lse_ridge},
          {"consequent_min", cfg.train.consequent_min},
          {"consequent_max", cfg.train.consequent_max}}},
        {"hwsim", {{"sweep", cfg.hwsim_sweep}}},
        {"personalize",
         {{"window_segments", cfg.window_segments}, {"require_monotone_planes", cfg.require_monotone_planes}}},
        {"paths",
         {{"trips", p.trips},
          {"cohort", p.cohort},
          {"segments", p.segments},
          {"features", p.features},
          {"scaler", p.scaler},
          {"cluster_model", p.cluster_model},
          {"labeled_features", p.labeled_features},
          {"planes", p.planes},
          {"bank", p.bank},
          {"confusion", p.confusion},
          {"train_report", p.train_report},
          {"hw_bank", p.hw_bank},
          {"hw_sidecar", p.hw_sidecar},
          {"quantize_report", p.quantize_report},
          {"hwsim_report", p.hwsim_report},
          {"summary", p.summary}}}};
}

std::string config_hash(const PipelineConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config_to_json(cfg).dump())));
    return buf;
}

Json provenance(const PipelineConfig& cfg) {
    return Json{{"config_hash", config_hash(cfg)},
                {"seed", cfg.seed},
                {"kmeans_seed", cfg.kmeans.seed},
                {"split_seed", cfg.train.split_seed}};
}

Json cmd_gen(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto trip_dir = at(out_dir, cfg.paths.trips);
    fs::create_directories(trip_dir);
    Json drivers = Json::array();
    std::uint64_t driver_no = 0;
    std::size_t n_trips = 0;
    for (std::size_t a = 0; a < cfg.cohort.archetypes.size(); ++a) {
        const auto& proto = cfg.cohort.archetypes[a];
        for (int d = 0; d < cfg.cohort.drivers_per_archetype; ++d, ++driver_no) {
            Rng rng(mix_seed(cfg.seed, 0xd000 + driver_no));
            DriverArchetype arch;
            arch.target_thw = std::max(0.3, rng.normal(proto.target_thw, cfg.cohort.driver_thw_sd));
            arch.thw_jitter_sd = proto.thw_jitter_sd;
            arch.gain = proto.gain;
            arch.speed_profile_seed = mix_seed(cfg.seed, driver_no);

            char num[16];
            std::snprintf(num, sizeof num, "%02d", d);
            const std::string driver_id = proto.name + num;
            Json trips = Json::array();
            for (int t = 0; t < cfg.cohort.trips_per_driver; ++t) {
                auto trip = generate_trip(arch, cfg.cohort.trip_duration_s,
                                          mix_seed(mix_seed(cfg.seed, driver_no), static_cast<std::uint64_t>(t)),
                                          cfg.cohort.generator);
                trip.driver_id = driver_id;
                trip.trip_id = driver_id + "-t" + std::to_string(t);
                const auto name = trip_filename(trip);
                write_trip(trip, trip_dir / name);
                trips.push_back(name);
                ++n_trips;
            }
            drivers.push_back(Json{{"driver_id", driver_id},
                                   {"archetype", static_cast<int>(a)},
                                   {"archetype_name", proto.name},
                                   {"target_thw", arch.target_thw},
                                   {"trips", trips}});
        }
    }
    write_json(at(out_dir, cfg.paths.cohort), with_provenance(cfg, Json{{"drivers", drivers}}));
    return Json{{"drivers", drivers.size()}, {"trips", n_trips}};
}

Json cmd_segment(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto cohort = load_cohort(cfg, out_dir);
    std::vector<CarFollowingSegment> all;
    std::size_t n_stretches = 0;
    std::size_t n_uniform = 0;
    std::size_t n_trips = 0;
    for (const auto& d : cohort) {
        for (const auto& f : d.trip_files) {
            const auto path = at(out_dir, cfg.paths.trips) / f;
            require(path, "gen");
            const auto trip = load_trip(path);
            const auto stretches = find_stretches(trip, cfg.premises);
            const auto segs = uniformize(stretches, cfg.max_segment_s, cfg.min_segment_s);
            auto kept = filter_by_thw_rms(segs, cfg.thw_rms_max);
            n_stretches += stretches.size();
            n_uniform += segs.size();
            ++n_trips;
            for (auto& s : kept) all.push_back(std::move(s));
        }
    }
    if (all.empty()) throw ValidationError("segment: no car-following segments found in the cohort");
    const auto path = at(out_dir, cfg.paths.segments);
    write_json(path, segment_manifest(all));
    Json stats{{"trips", n_trips},
               {"stretches", n_stretches},
               {"segments", all.size()},
               {"dropped_by_thw_rms", n_uniform - all.size()}};
    write_sidecar(path, cfg, stats);
    return stats;
}

Json cmd_features(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto seg_path = at(out_dir, cfg.paths.segments);
    check_sidecar(seg_path, cfg, "segment");
    const auto refs = manifest_from_json(read_json(seg_path));
    const auto cohort = load_cohort(cfg, out_dir);
    std::map<std::string, fs::path> trip_files;  // "driver__trip" stem -> path
    for (const auto& d : cohort) {
        for (const auto& f : d.trip_files) trip_files[fs::path(f).stem().string()] = at(out_dir, cfg.paths.trips) / f;
    }

    std::map<std::string, Trip> trips;
    std::map<std::string, std::size_t> per_trip;
    std::vector<FeatureRow> rows;
    std::vector<FeatureVector> vectors;
    for (const auto& r : refs) {
        const auto key = r.driver_id + "__" + r.trip_id;
        auto it = trips.find(key);
        if (it == trips.end()) {
            const auto f = trip_files.find(key);
            if (f == trip_files.end()) throw ArtifactError("segment manifest names unknown trip '" + key + "'; rerun `dstyle segment`");
            require(f->second, "gen");
            it = trips.emplace(key, load_trip(f->second)).first;
        }
        const auto seg = materialize(r, it->second, cfg.premises);
        FeatureRow row;
        row.trip_id = r.trip_id;
        row.segment_idx = per_trip[key]++;
        row.fv = featurize(seg, cfg.threshold);
        vectors.push_back(row.fv);
        rows.push_back(std::move(row));
    }
    const auto scaler = fit_scaler(vectors);
    const auto path = at(out_dir, cfg.paths.features);
    write_text(path, features_csv(rows));
    write_sidecar(path, cfg, Json{{"rows", rows.size()}});
    write_json(at(out_dir, cfg.paths.scaler), with_provenance(cfg, to_json(scaler)));
    return Json{{"segments", rows.size()}, {"scaler", to_json(scaler)}};
}

Json cmd_cluster(const PipelineConfig& cfg, const fs::path& out_dir) {
    auto rows = load_features(at(out_dir, cfg.paths.features), cfg, "features");
    const auto scaler = load_scaler(cfg, out_dir);
    std::vector<Vec3> points;
    for (const auto& r : rows) points.push_back(apply_scaler(scaler, r.fv));
    const auto model = kmeans_fit(points, cfg.kmeans);
    const auto labels = assign_all(model, points);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].style = labels[i];

    write_json(at(out_dir, cfg.paths.cluster_model), with_provenance(cfg, to_json(model, cfg.paths.scaler)));
    const auto lpath = at(out_dir, cfg.paths.labeled_features);
    write_text(lpath, features_csv(rows));
    write_sidecar(lpath, cfg, Json{{"rows", rows.size()}});

    std::vector<double> thw;
    std::vector<double> tith;
    for (const auto& r : rows) {
        thw.push_back(r.fv.thw_rms);
        tith.push_back(apply_scaler(scaler, kTith, r.fv.tith));
    }
    const auto stats = compute_cluster_stats(thw, tith, labels, 3);
    Json planes = Json::array();
    Json stats_json = Json::array();
    for (const auto& s : stats) {
        PlaneModel plane;
        try {
            plane = fit_plane(s, cfg.require_monotone_planes);
        } catch (const NumericError& e) {
            plane = constant_plane(s, e.what());
        }
        planes.push_back(to_json(plane));
        stats_json.push_back(Json{{"cluster", s.style + 1},
                                  {"count", s.count},
                                  {"thw_mean", s.thw_mean},
                                  {"thw_sd", s.thw_sd},
                                  {"thw_min", s.thw_min},
                                  {"thw_max", s.thw_max},
                                  {"tith_min", s.tith_min},
                                  {"tith_max", s.tith_max},
                                  {"tith_mean", s.tith_mean}});
    }
    write_json(at(out_dir, cfg.paths.planes), with_provenance(cfg, Json{{"planes", planes}, {"cluster_stats", stats_json}}));

    Json summary{{"inertia", model.inertia}, {"cluster_stats", stats_json}};

    // Agreement with the generating archetypes, when the cohort is ours.
    const auto cpath = at(out_dir, cfg.paths.cohort);
    if (fs::exists(cpath)) {
        const auto cohort = load_cohort(cfg, out_dir);
        std::map<std::string, int> by_driver;
        for (const auto& d : cohort) by_driver[d.driver_id] = d.archetype;
        std::vector<int> truth;
        std::vector<int> found;
        for (const auto& r : rows) {
            const auto dash = r.trip_id.rfind("-t");
            const auto it = by_driver.find(r.trip_id.substr(0, dash));
            if (dash == std::string::npos || it == by_driver.end()) continue;
            truth.push_back(it->second);
            found.push_back(r.style);
        }
        if (truth.size() == rows.size()) summary["ari_vs_generator"] = adjusted_rand_index(truth, found);
    }
    return summary;
}

Json cmd_train(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto rows = load_features(at(out_dir, cfg.paths.labeled_features), cfg, "cluster");
    const auto scaler = load_scaler(cfg, out_dir);
    std::vector<LabeledVector> data;
    std::vector<int> labels;
    for (const auto& r : rows) {
        if (r.style < 0 || r.style > 2) throw ValidationError("train: labeled feature table has no valid style column");
        data.push_back({apply_scaler(scaler, r.fv), r.style});
        labels.push_back(r.style);
    }
    const auto split = stratified_split(labels, cfg.train.train_fraction, cfg.train.split_seed);
    std::vector<LabeledVector> train_set;
    std::vector<LabeledVector> test_set;
    for (auto i : split.train) train_set.push_back(data[i]);
    for (auto i : split.test) test_set.push_back(data[i]);

    std::array<std::vector<double>, 3> history;
    const auto bank = train_bank(train_set, scaler, cfg.train, &history);
    const auto cm = evaluate(bank, test_set);
    const auto cm_train = evaluate(bank, train_set);

    Json models = Json::array();
    for (const auto& m : bank.models) models.push_back(to_json(m, cfg.paths.scaler));
    write_json(at(out_dir, cfg.paths.bank),
               with_provenance(cfg, Json{{"scaler_ref", cfg.paths.scaler}, {"scaler", to_json(scaler)}, {"models", models}}));
    const auto cpath = at(out_dir, cfg.paths.confusion);
    write_text(cpath, confusion_csv(cm));
    write_sidecar(cpath, cfg);

    Json rmse = Json::array();
    for (std::size_t s = 0; s < 3; ++s) {
        rmse.push_back(Json{{"cluster", s + 1}, {"first_epoch", history[s].front()}, {"last_epoch", history[s].back()}});
    }
    Json report{{"train_size", train_set.size()},
                {"test_size", test_set.size()},
                {"test", to_json(cm)},
                {"train_accuracy", cm_train.accuracy()},
                {"training_rmse", rmse}};
    write_json(at(out_dir, cfg.paths.train_report), with_provenance(cfg, report));
    return report;
}

Json cmd_quantize(const PipelineConfig& cfg, const fs::path& out_dir) {
    const auto bank = load_bank(cfg, out_dir);
    std::vector<std::uint8_t> bytes;
    Json records = Json::array();
    Json fidelity = Json::array();
    bool within_half_lsb = true;
    for (std::size_t s = 0; s < 3; ++s) {
        const auto hw = quantize_model(bank.models[s]);
        const auto rec = encode_hwa1(hw);
        bytes.insert(bytes.end(), rec.begin(), rec.end());
        records.push_back(to_json(hw));
        const auto q = quantization_report(bank.models[s], hw);
        within_half_lsb = within_half_lsb && q.max_lut_error_lsb <= 0.5;
        fidelity.push_back(Json{{"cluster", s + 1},
                                {"max_lut_error", q.max_lut_error},
                                {"max_lut_error_lsb", q.max_lut_error_lsb},
                                {"saturated_lut_entries", q.saturated_entries},
                                {"max_consequent_error", q.max_consequent_error}});
    }
    write_text(at(out_dir, cfg.paths.hw_bank), std::string(bytes.begin(), bytes.end()));
    write_json(at(out_dir, cfg.paths.hw_sidecar), with_provenance(cfg, Json{{"records", records}}));
    Json report{{"models", fidelity}, {"lut_within_half_lsb", within_half_lsb}, {"bytes", bytes.size()}};
    write_json(at(out_dir, cfg.paths.quantize_report), with_provenance(cfg, report));
    return report;
}

Json cmd_hwsim(const PipelineConfig& cfg, const fs::path& out_dir, const HwsimOptions& opts) {
    const auto hw = load_hw_bank(cfg, out_dir);
    std::vector<HwInput> inputs;
    if (opts.x) {
        for (double v : *opts.x) {
            if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("hwsim: --x components must lie in [0, 1]");
        }
        inputs.push_back(encode_inputs(*opts.x));
    } else {
        const int n = opts.sweep > 0 ? opts.sweep : cfg.hwsim_sweep;
        Rng rng(mix_seed(cfg.seed, 0x6877ULL));
        for (int i = 0; i < n; ++i) {
            HwInput x;
            for (auto& c : x) c = static_cast<std::uint8_t>(rng.below(256));
            inputs.push_back(x);
        }
    }

    std::optional<ClassifierBank> fbank;
    if (opts.compare_float) fbank = load_bank(cfg, out_dir);

    std::array<std::size_t, 3> histogram{};
    double max_dy = 0.0;
    double sum_dy = 0.0;
    std::size_t agree = 0;
    std::size_t outside_band = 0;
    CycleReport report;
    HwBankResult first;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto r = bank_infer(hw, inputs[i]);
        if (i == 0) first = r;
        report = r.report;
        ++histogram[static_cast<std::size_t>(r.style)];
        if (fbank) {
            const auto f = classify(*fbank, decode_inputs(inputs[i]));
            const auto h = r.outputs();
            for (std::size_t s = 0; s < 3; ++s) {
                const double dy = std::abs(h[s] - f.outputs[s]);
                max_dy = std::max(max_dy, dy);
                sum_dy += dy;
            }
            if (f.style == r.style) {
                ++agree;
            } else {
                const double gap = f.outputs[static_cast<std::size_t>(f.style)] - f.outputs[static_cast<std::size_t>(r.style)];
                if (gap > kNearTieBand) ++outside_band;
            }
        }
    }

    Json out{{"inputs", inputs.size()}, {"cycle_report", cycle_json(report)}};
    if (opts.x) {
        out["input_codes"] = inputs[0];
        out["outputs"] = first.outputs();
        out["outputs_raw"] = first.y_q;
        out["cluster"] = first.style + 1;
    } else {
        out["cluster_histogram"] = histogram;
    }
    if (fbank) {
        const double n = static_cast<double>(inputs.size());
        out["compare_float"] = Json{{"max_abs_dy", max_dy},
                                    {"mean_abs_dy", sum_dy / (3.0 * n)},
                                    {"tolerance", kHwFloatTolerance},
                                    {"argmax_agreement", static_cast<double>(agree) / n},
                                    {"disagreements_outside_near_tie_band", outside_band}};
    }
    if (opts.trace) {
        const auto trace = run_control_sequence(hw[static_cast<std::size_t>(first.style)], inputs[0]);
        write_text(*opts.trace, trace_csv(trace));
        out["trace_cluster"] = first.style + 1;
    }
    write_json(at(out_dir, cfg.paths.hwsim_report), with_provenance(cfg, out));
    if (fbank && max_dy > kHwFloatTolerance) {
        throw NumericError("hwsim: max |hw - float| = " + format_double(max_dy) + " exceeds 2^-6");
    }
    return out;
}

SetpointResult cmd_personalize(const PipelineConfig& cfg, const fs::path& out_dir, const PersonalizeOptions& opts) {
    if (opts.trip.empty()) throw ValidationError("personalize: --trip is required");
    if (!fs::exists(opts.trip)) throw ValidationError("personalize: trip file not found: " + opts.trip.string());
    const int window = opts.window > 0 ? opts.window : cfg.window_segments;
    const auto planes = load_planes(cfg, out_dir);
    const auto scaler = load_scaler(cfg, out_dir);
    const auto hw = load_hw_bank(cfg, out_dir);

    const auto trip = load_trip(opts.trip);
    const auto segs = segment_trip(trip, cfg);
    if (segs.empty()) throw ValidationError("personalize: the trip has no car-following segment");
    const auto n = std::min(segs.size(), static_cast<std::size_t>(window));

    std::vector<FeatureVector> fvs;
    Vec3 mean{};
    for (std::size_t i = 0; i < n; ++i) {
        fvs.push_back(featurize(segs[i], cfg.threshold));
        const auto x = apply_scaler(scaler, fvs.back());
        for (std::size_t f = 0; f < 3; ++f) mean[f] += x[f] / static_cast<double>(n);
    }
    SetpointResult r;
    r.observation = learning_window(fvs, scaler);
    r.style = bank_infer(hw, encode_inputs(mean)).style;
    r.thw_s = personalize(planes[static_cast<std::size_t>(r.style)], r.observation);
    r.ts = segs[n - 1].samples.back().t;
    r.line = setpoint_line(r.thw_s, r.style, r.ts);
    return r;
}

Json cmd_pipeline(const PipelineConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    Json stages;
    stages["gen"] = cmd_gen(cfg, out_dir);
    stages["segment"] = cmd_segment(cfg, out_dir);
    stages["features"] = cmd_features(cfg, out_dir);
    stages["cluster"] = cmd_cluster(cfg, out_dir);
    stages["train"] = cmd_train(cfg, out_dir);
    stages["quantize"] = cmd_quantize(cfg, out_dir);
    HwsimOptions hopts;
    hopts.compare_float = true;
    stages["hwsim"] = cmd_hwsim(cfg, out_dir, hopts);

    Json setpoints = Json::array();
    for (const auto& d : load_cohort(cfg, out_dir)) {
        PersonalizeOptions popts;
        popts.trip = at(out_dir, cfg.paths.trips) / d.trip_files.front();
        try {
            const auto r = cmd_personalize(cfg, out_dir, popts);
            setpoints.push_back(Json{{"driver_id", d.driver_id},
                                     {"archetype", d.archetype},
                                     {"cluster", r.style + 1},
                                     {"thw_rms_bar", r.observation.thw_rms_bar},
                                     {"tith_norm", r.observation.tith_norm},
                                     {"thw_s", r.thw_s},
                                     {"ts", r.ts}});
        } catch (const ValidationError& e) {
            setpoints.push_back(Json{{"driver_id", d.driver_id}, {"skipped", e.what()}});
        }
    }

    const auto& train = stages["train"]["test"];
    const auto& cmp = stages["hwsim"]["compare_float"];
    Json headline{{"segments", stages["segment"]["segments"]},
                  {"test_accuracy", train["accuracy"]},
                  {"per_class_by_row", train["per_class_by_row"]},
                  {"per_class_by_column", train["per_class_by_column"]},
                  {"max_abs_dy", cmp["max_abs_dy"]},
                  {"mean_abs_dy", cmp["mean_abs_dy"]},
                  {"argmax_agreement", cmp["argmax_agreement"]},
                  {"total_cycles", stages["hwsim"]["cycle_report"]["total"]}};
    if (stages["cluster"].contains("ari_vs_generator")) headline["ari_vs_generator"] = stages["cluster"]["ari_vs_generator"];
    const auto summary = with_provenance(cfg, Json{{"headline", headline}, {"stages", stages}, {"setpoints", setpoints}});
    write_json(at(out_dir, cfg.paths.summary), summary);
    return summary;
}

}  // namespace dstyle
