#ifndef RADSPLICE_SERIALIZATION_HPP
#define RADSPLICE_SERIALIZATION_HPP

#include <optional>
#include <set>
#include <string>

#include <json.hpp>

#include "radsplice/consistency.hpp"
#include "radsplice/corpus.hpp"
#include "radsplice/pipeline.hpp"
#include "radsplice/synth.hpp"

namespace radsplice {

using Json = nlohmann::ordered_json;

namespace detail {

/// Reads optional keys from one JSON object and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object()) throw Error(ErrorCode::InvalidInput, where_ + ": expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::InvalidInput, where_ + "." + key + ": " + e.what());
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        if (j_.at(key).is_null()) {
            out.reset();
            return;
        }
        T v{};
        get(key, v);
        out = v;
    }

    const Json* child(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) throw Error(ErrorCode::InvalidInput, where_ + ": unknown key '" + k + "'");
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

template <class T>
Json opt(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

}  // namespace detail

// ---- configuration ----

inline Json to_json(const RunConfig& c) {
    Json j;
    j["edge"] = {{"sigma", c.edge.sigma}, {"threshold", c.edge.threshold},
                 {"hysteresis_low", detail::opt(c.edge.hysteresis_low)}};
    const auto& s = c.segment;
    j["segment"] = {{"link_gap", s.link_gap},
                    {"max_turn_deg", s.max_turn_deg},
                    {"tolerance", s.tolerance},
                    {"merge_gap", s.merge_gap},
                    {"min_points", s.min_points},
                    {"max_sign_changes", s.max_sign_changes},
                    {"deviation_deadband", s.deviation_deadband},
                    {"smoothness_tol", s.smoothness_tol},
                    {"arc_window", s.arc_window},
                    {"dedup_radius", s.dedup_radius},
                    {"dedup_fraction", s.dedup_fraction},
                    {"min_length_fraction", s.min_length_fraction}};
    const auto& e = c.estimator;
    j["estimator"] = {{"jacobian_step", e.jacobian_step},
                      {"step_tol", e.step_tol},
                      {"cost_tol", e.cost_tol},
                      {"max_iterations", e.max_iterations},
                      {"initial_damping", e.initial_damping}};
    const auto& k = c.consistency;
    j["consistency"] = {{"sign_floor", k.sign_floor},
                        {"mono_slack", k.mono_slack},
                        {"sym_slack", k.sym_slack},
                        {"pair_tol", k.pair_tol},
                        {"residual_ceiling", detail::opt(k.residual_ceiling)}};
    j["edgel_jitter"] = c.edgel_jitter;
    j["jitter_seed"] = c.jitter_seed;
    return j;
}

/// Overlays the keys present in j onto c; absent keys keep their value.
inline void merge_json(RunConfig& c, const Json& j) {
    detail::ObjectReader r(j, "config");
    if (const Json* e = r.child("edge")) {
        detail::ObjectReader x(*e, "config.edge");
        x.get("sigma", c.edge.sigma);
        x.get("threshold", c.edge.threshold);
        x.get("hysteresis_low", c.edge.hysteresis_low);
        x.finish();
    }
    if (const Json* e = r.child("segment")) {
        detail::ObjectReader x(*e, "config.segment");
        auto& s = c.segment;
        x.get("link_gap", s.link_gap);
        x.get("max_turn_deg", s.max_turn_deg);
        x.get("tolerance", s.tolerance);
        x.get("merge_gap", s.merge_gap);
        x.get("min_points", s.min_points);
        x.get("max_sign_changes", s.max_sign_changes);
        x.get("deviation_deadband", s.deviation_deadband);
        x.get("smoothness_tol", s.smoothness_tol);
        x.get("arc_window", s.arc_window);
        x.get("dedup_radius", s.dedup_radius);
        x.get("dedup_fraction", s.dedup_fraction);
        x.get("min_length_fraction", s.min_length_fraction);
        x.finish();
    }
    if (const Json* e = r.child("estimator")) {
        detail::ObjectReader x(*e, "config.estimator");
        auto& s = c.estimator;
        x.get("jacobian_step", s.jacobian_step);
        x.get("step_tol", s.step_tol);
        x.get("cost_tol", s.cost_tol);
        x.get("max_iterations", s.max_iterations);
        x.get("initial_damping", s.initial_damping);
        x.finish();
    }
    if (const Json* e = r.child("consistency")) {
        detail::ObjectReader x(*e, "config.consistency");
        auto& s = c.consistency;
        x.get("sign_floor", s.sign_floor);
        x.get("mono_slack", s.mono_slack);
        x.get("sym_slack", s.sym_slack);
        x.get("pair_tol", s.pair_tol);
        x.get("residual_ceiling", s.residual_ceiling);
        x.finish();
    }
    r.get("edgel_jitter", c.edgel_jitter);
    r.get("jitter_seed", c.jitter_seed);
    r.finish();
}

// ---- scenes ----

inline Json to_json(const SceneLine& l) {
    return {{"normal_deg", l.normal_deg}, {"offset", l.offset}, {"contrast", l.contrast}};
}

inline Json to_json(const SceneSpec& s) {
    Json j;
    j["width"] = s.width;
    j["height"] = s.height;
    j["pattern"] = s.pattern == ScenePattern::Lines ? "lines" : "checkerboard";
    j["k1"] = s.k1;
    if (s.pattern == ScenePattern::Lines) {
        j["lines"] = Json::array();
        for (const auto& l : s.lines) j["lines"].push_back(to_json(l));
    } else {
        j["checker_columns"] = s.checker_columns;
        j["checker_contrast"] = s.checker_contrast;
    }
    j["background"] = s.background;
    j["noise_sigma"] = s.noise_sigma;
    j["noise_seed"] = s.noise_seed;
    j["jpeg_quality"] = detail::opt(s.jpeg_quality);
    return j;
}

inline SceneLine scene_line_from_json(const Json& j) {
    SceneLine l;
    detail::ObjectReader r(j, "line");
    r.get("normal_deg", l.normal_deg);
    r.get("offset", l.offset);
    r.get("contrast", l.contrast);
    r.finish();
    return l;
}

inline SceneSpec scene_from_json(const Json& j) {
    SceneSpec s;
    detail::ObjectReader r(j, "scene");
    r.get("width", s.width);
    r.get("height", s.height);
    std::string pattern = "lines";
    r.get("pattern", pattern);
    if (pattern == "lines") s.pattern = ScenePattern::Lines;
    else if (pattern == "checkerboard") s.pattern = ScenePattern::Checkerboard;
    else throw Error(ErrorCode::InvalidInput, "scene.pattern must be 'lines' or 'checkerboard'");
    r.get("k1", s.k1);
    if (const Json* lines = r.child("lines")) {
        if (!lines->is_array()) throw Error(ErrorCode::InvalidInput, "scene.lines must be an array");
        for (const auto& l : *lines) s.lines.push_back(scene_line_from_json(l));
    }
    r.get("checker_columns", s.checker_columns);
    r.get("checker_contrast", s.checker_contrast);
    r.get("background", s.background);
    r.get("noise_sigma", s.noise_sigma);
    r.get("noise_seed", s.noise_seed);
    r.get("jpeg_quality", s.jpeg_quality);
    r.finish();
    return s;
}

inline Json to_json(const SpliceSpec& s) {
    Json j;
    j["host"] = to_json(s.host);
    j["donor"] = to_json(s.donor);
    j["replacements"] = Json::array();
    for (const auto& r : s.replacements)
        j["replacements"].push_back({{"host_line", r.host_line}, {"donor_line", r.donor_line}, {"mirror", r.mirror}});
    return j;
}

inline SpliceSpec splice_from_json(const Json& j) {
    SpliceSpec s;
    detail::ObjectReader r(j, "splice");
    const Json* host = r.child("host");
    const Json* donor = r.child("donor");
    const Json* reps = r.child("replacements");
    r.finish();
    if (!host || !reps) throw Error(ErrorCode::InvalidInput, "splice needs 'host' and 'replacements'");
    s.host = scene_from_json(*host);
    // the donor defaults to the host itself (copy-move)
    s.donor = donor ? scene_from_json(*donor) : s.host;
    if (!reps->is_array()) throw Error(ErrorCode::InvalidInput, "splice.replacements must be an array");
    for (const auto& x : *reps) {
        LineReplacement lr;
        detail::ObjectReader rr(x, "replacement");
        rr.get("host_line", lr.host_line);
        lr.donor_line = lr.host_line;
        rr.get("donor_line", lr.donor_line);
        rr.get("mirror", lr.mirror);
        rr.finish();
        s.replacements.push_back(lr);
    }
    return s;
}

inline Json to_json(const GroundTruth& g) {
    Json j;
    j["spliced"] = g.spliced;
    j["undetectable"] = g.undetectable;
    j["k1"] = g.k1;
    j["lines"] = Json::array();
    for (const auto& l : g.lines)
        j["lines"].push_back({{"index", l.index},
                              {"normal_deg", l.geometry.normal_deg},
                              {"offset", l.geometry.offset},
                              {"distance", l.distance},
                              {"k1", l.k1},
                              {"expected_k1", l.expected_k1},
                              {"visible_length_px", l.visible_length},
                              {"replaced", l.replaced},
                              {"expect_flag", l.expect_flag}});
    return j;
}

// ---- reports ----

inline Json to_json(const ConsistencyReport& rep, double scale = 0.0) {
    Json j;
    j["verdict"] = to_string(rep.verdict);
    j["rules"] = {{"a", rep.rule_a_ok}, {"b", rep.rule_b_ok}};
    j["note"] = rep.note;
    j["lines"] = Json::array();
    for (const auto& l : rep.lines) {
        Json x = {{"id", l.id},
                  {"distance", l.distance},
                  {"k1", l.k1},
                  {"residual_rms", l.residual_rms}};
        if (scale > 0) x["residual_rms_px"] = l.residual_rms * scale;
        x["n_points"] = l.n_points;
        x["converged"] = l.converged;
        x["usable"] = l.usable;
        x["significant"] = l.significant;
        x["flags"] = flag_names(l.flags);
        j["lines"].push_back(std::move(x));
    }
    return j;
}

/// Full analyze report: verdict, per-line rows, and every tunable used.
inline Json report_json(const PipelineResult& res, const RunConfig& cfg, const std::string& input = {}) {
    const RadialModel model = RadialModel::for_image(res.dims);
    Json j = to_json(res.report, model.scale);
    Json image = {{"width", res.dims.width}, {"height", res.dims.height}};
    if (!input.empty()) image["path"] = input;
    j["image"] = image;
    std::size_t accepted = 0;
    for (const auto& s : res.linked) accepted += s.check.accepted ? 1 : 0;
    j["stats"] = {{"edgels", res.edgel_count},
                  {"segments_linked", res.linked.size()},
                  {"segments_accepted", accepted},
                  {"lines_estimated", res.lines.size()}};
    j["config_used"] = to_json(cfg);
    return j;
}

/// Per-line rows sorted left to right.
inline Json lines_json(const PipelineResult& res, const RunConfig& cfg) {
    const RadialModel model = RadialModel::for_image(res.dims);
    Json rows = Json::array();
    for (const auto& l : res.report.lines)
        rows.push_back({{"id", l.id},
                        {"distance", l.distance},
                        {"k1", l.k1},
                        {"residual_rms", l.residual_rms},
                        {"residual_rms_px", l.residual_rms * model.scale},
                        {"n_points", l.n_points},
                        {"converged", l.converged}});
    return {{"lines", rows}, {"config_used", to_json(cfg)}};
}

inline Json segments_json(const PipelineResult& res) {
    Json out = Json::array();
    for (const auto& s : res.linked) {
        Json pts = Json::array();
        for (const auto& p : s.segment.points()) pts.push_back({p.x, p.y});
        out.push_back({{"accepted", s.check.accepted},
                       {"reason", s.check.reason},
                       {"sign_changes", s.check.sign_changes},
                       {"arc_rms", s.check.arc_rms},
                       {"arc_length", s.segment.arc_length()},
                       {"points", pts}});
    }
    return out;
}

// ---- corpus ----

inline Json to_json(const CorpusConfig& c) {
    return {{"n_spliced", c.n_spliced},
            {"n_authentic", c.n_authentic},
            {"seed", c.seed},
            {"width", c.width},
            {"height", c.height},
            {"k1_min", c.k1_min},
            {"k1_max", c.k1_max},
            {"zero_fraction", c.zero_fraction},
            {"min_k1_contrast", c.min_k1_contrast},
            {"noise_sigma", c.noise_sigma},
            {"jpeg_quality", detail::opt(c.jpeg_quality)},
            {"threads", c.threads},
            {"run", to_json(c.run)}};
}

inline CorpusConfig corpus_from_json(const Json& j, CorpusConfig c = {}) {
    detail::ObjectReader r(j, "corpus");
    r.get("n_spliced", c.n_spliced);
    r.get("n_authentic", c.n_authentic);
    r.get("seed", c.seed);
    r.get("width", c.width);
    r.get("height", c.height);
    r.get("k1_min", c.k1_min);
    r.get("k1_max", c.k1_max);
    r.get("zero_fraction", c.zero_fraction);
    r.get("min_k1_contrast", c.min_k1_contrast);
    r.get("noise_sigma", c.noise_sigma);
    r.get("jpeg_quality", c.jpeg_quality);
    r.get("threads", c.threads);
    if (const Json* run = r.child("run")) merge_json(c.run, *run);
    r.finish();
    return c;
}

/// Aggregate rates plus one report per image. The thread count is left
/// out so the bytes depend only on the corpus definition.
inline Json to_json(const CorpusResult& res, const CorpusConfig& cfg) {
    Json j;
    j["detection_rate"] = res.detection_rate;
    j["false_positive_rate"] = res.false_positive_rate;
    j["counts"] = {{"detectable", res.n_detectable},
                   {"detected", res.n_detected},
                   {"authentic", res.n_authentic},
                   {"false_positives", res.n_false_positive},
                   {"inconclusive", res.n_inconclusive}};
    Json c = to_json(cfg);
    c.erase("threads");
    j["corpus"] = c;
    j["images"] = Json::array();
    for (const auto& it : res.items) {
        Json x = {{"index", it.index},
                  {"kind", to_string(it.kind)},
                  {"host_k1", it.host_k1},
                  {"donor_k1", it.donor_k1},
                  {"spliced", it.spliced},
                  {"undetectable", it.undetectable},
                  {"verdict", to_string(it.verdict)},
                  {"replaced_line_flagged", it.replaced_line_flagged}};
        x["report"] = to_json(it.report);
        j["images"].push_back(std::move(x));
    }
    return j;
}

}  // namespace radsplice

#endif
