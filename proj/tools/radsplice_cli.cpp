// radsplice: per-line lens distortion consistency checks on images.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "radsplice/radsplice.hpp"

using namespace radsplice;

namespace {

constexpr int kExitAuthentic = 0;
constexpr int kExitError = 1;
constexpr int kExitSpliced = 2;
constexpr int kExitInconclusive = 3;

int exit_code(Verdict v) {
    switch (v) {
        case Verdict::Authentic: return kExitAuthentic;
        case Verdict::Spliced: return kExitSpliced;
        case Verdict::Inconclusive: return kExitInconclusive;
    }
    return kExitError;
}

Json read_json_file(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    try {
        return Json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::InvalidInput, path + ": " + e.what());
    }
}

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    detail::write_file_atomic(path, text.data(), text.size());
}

/// Command-line overrides for every pipeline tunable; unset ones leave
/// the file/default value alone.
struct Overrides {
    std::optional<std::string> config_path;
    std::optional<double> sigma, threshold, hysteresis_low;
    std::optional<double> link_gap, max_turn, tolerance, merge_gap, deviation_deadband, smoothness_tol, arc_window,
        dedup_radius, dedup_fraction, min_length_fraction;
    std::optional<std::size_t> min_points;
    std::optional<int> max_sign_changes;
    std::optional<double> jacobian_step, step_tol, cost_tol, initial_damping;
    std::optional<int> max_iterations;
    std::optional<double> sign_floor, mono_slack, sym_slack, pair_tol, residual_ceiling;
    std::optional<double> edgel_jitter;
    std::optional<std::uint64_t> jitter_seed;

    void attach(CLI::App* app) {
        app->add_option("--config", config_path, "JSON config file (default: $RADSPLICE_CONFIG)");
        auto* g = app->add_option_group("tunables");
        g->add_option("--sigma", sigma, "edge: Gaussian derivative scale, px");
        g->add_option("--threshold", threshold, "edge: gradient magnitude threshold");
        g->add_option("--hysteresis-low", hysteresis_low, "edge: weak threshold, enables hysteresis");
        g->add_option("--link-gap", link_gap, "segment: max edgel spacing in a chain, px");
        g->add_option("--max-turn", max_turn, "segment: max direction change, degrees");
        g->add_option("--tolerance", tolerance, "segment: tolerance region half-width, px");
        g->add_option("--merge-gap", merge_gap, "segment: max gap bridged when merging, px");
        g->add_option("--min-points", min_points, "segment: min edgels per segment");
        g->add_option("--max-sign-changes", max_sign_changes, "segment: allowed deviation sign changes");
        g->add_option("--deviation-deadband", deviation_deadband, "segment: unsigned deviation band, px");
        g->add_option("--smoothness-tol", smoothness_tol, "segment: max RMS about local arcs, px");
        g->add_option("--arc-window", arc_window, "segment: local arc length, px");
        g->add_option("--dedup-radius", dedup_radius, "segment: duplicate proximity, px");
        g->add_option("--dedup-fraction", dedup_fraction, "segment: duplicate overlap fraction");
        g->add_option("--min-length-fraction", min_length_fraction, "segment: min length / image height");
        g->add_option("--jacobian-step", jacobian_step, "estimator: finite-difference step");
        g->add_option("--step-tol", step_tol, "estimator: step convergence tolerance");
        g->add_option("--cost-tol", cost_tol, "estimator: relative cost tolerance");
        g->add_option("--max-iterations", max_iterations, "estimator: iteration cap");
        g->add_option("--initial-damping", initial_damping, "estimator: initial LM damping");
        g->add_option("--sign-floor", sign_floor, "consistency: |k1| significance floor");
        g->add_option("--mono-slack", mono_slack, "consistency: monotonicity slack");
        g->add_option("--sym-slack", sym_slack, "consistency: symmetry slack");
        g->add_option("--pair-tol", pair_tol, "consistency: symmetric partner |distance| tolerance");
        g->add_option("--residual-ceiling", residual_ceiling, "consistency: drop lines fitting worse (normalized)");
        g->add_option("--edgel-jitter", edgel_jitter, "probe: Gaussian edgel noise, px");
        g->add_option("--jitter-seed", jitter_seed, "probe: edgel noise seed");
    }

    /// defaults < config file (--config, else $RADSPLICE_CONFIG) < flags
    RunConfig resolve() const {
        RunConfig c;
        std::optional<std::string> path = config_path;
        if (!path) {
            if (const char* env = std::getenv("RADSPLICE_CONFIG"); env && *env) path = env;
        }
        if (path) merge_json(c, read_json_file(*path));
        auto set = [](auto& dst, const auto& src) {
            if (src) dst = *src;
        };
        if (hysteresis_low) c.edge.hysteresis_low = *hysteresis_low;
        set(c.edge.sigma, sigma);
        set(c.edge.threshold, threshold);
        set(c.segment.link_gap, link_gap);
        set(c.segment.max_turn_deg, max_turn);
        set(c.segment.tolerance, tolerance);
        set(c.segment.merge_gap, merge_gap);
        set(c.segment.min_points, min_points);
        set(c.segment.max_sign_changes, max_sign_changes);
        set(c.segment.deviation_deadband, deviation_deadband);
        set(c.segment.smoothness_tol, smoothness_tol);
        set(c.segment.arc_window, arc_window);
        set(c.segment.dedup_radius, dedup_radius);
        set(c.segment.dedup_fraction, dedup_fraction);
        set(c.segment.min_length_fraction, min_length_fraction);
        set(c.estimator.jacobian_step, jacobian_step);
        set(c.estimator.step_tol, step_tol);
        set(c.estimator.cost_tol, cost_tol);
        set(c.estimator.max_iterations, max_iterations);
        set(c.estimator.initial_damping, initial_damping);
        set(c.consistency.sign_floor, sign_floor);
        set(c.consistency.mono_slack, mono_slack);
        set(c.consistency.sym_slack, sym_slack);
        set(c.consistency.pair_tol, pair_tol);
        if (residual_ceiling) c.consistency.residual_ceiling = *residual_ceiling;
        set(c.edgel_jitter, edgel_jitter);
        set(c.jitter_seed, jitter_seed);
        c.validate();
        return c;
    }
};

void warn_if_inconclusive(const ConsistencyReport& rep) {
    if (rep.verdict == Verdict::Inconclusive && !rep.note.empty()) std::cerr << "radsplice: " << rep.note << "\n";
}

int cmd_analyze(const std::string& input, const Overrides& ov, const std::string& report_path,
                const std::string& overlay_path, const std::string& plot_path, const std::string& segments_path) {
    const RunConfig cfg = ov.resolve();
    const GrayImage img = read_image(input);
    const PipelineResult res = analyze(img, cfg);
    write_text(report_path, report_json(res, cfg, input).dump(2) + "\n");
    if (!overlay_path.empty()) write_text(overlay_path, overlay_svg(img, res));
    if (!plot_path.empty()) write_text(plot_path, scatter_svg(res.report));
    if (!segments_path.empty()) write_text(segments_path, segments_json(res).dump() + "\n");
    warn_if_inconclusive(res.report);
    return exit_code(res.report.verdict);
}

int cmd_lines(const std::string& input, const Overrides& ov, const std::string& format, const std::string& out_path) {
    const RunConfig cfg = ov.resolve();
    const GrayImage img = read_image(input);
    PipelineResult res = estimate_lines(img, cfg);
    std::vector<LineEstimate> est;
    for (const auto& l : res.lines) est.push_back(l.estimate);
    res.report = check_consistency(est, cfg.consistency);  // only used for left-to-right ids
    std::string text;
    if (format == "json") {
        text = lines_json(res, cfg).dump(2) + "\n";
    } else {
        const double scale = RadialModel::for_image(res.dims).scale;
        std::ostringstream os;
        char buf[160];
        std::snprintf(buf, sizeof buf, "%4s %10s %12s %14s %8s\n", "line", "distance", "k1", "residual_px", "points");
        os << buf;
        for (const auto& l : res.report.lines) {
            std::snprintf(buf, sizeof buf, "%4d %10.4f %12.6f %14.4f %8zu\n", l.id, l.distance, l.k1,
                          l.residual_rms * scale, l.n_points);
            os << buf;
        }
        text = os.str();
    }
    write_text(out_path, text);
    if (res.lines.empty()) {
        std::cerr << "radsplice: insufficient lines: need at least two usable lines of at least 1/3 image height\n";
        return kExitInconclusive;
    }
    return kExitAuthentic;
}

int cmd_synth(const std::string& spec_path, const std::string& out_path, std::string manifest_path) {
    const Json spec = read_json_file(spec_path);
    Rendered r;
    Json manifest;
    if (spec.is_object() && spec.contains("host")) {
        const SpliceSpec s = splice_from_json(spec);
        r = render_splice(s);
        manifest["splice"] = to_json(s);
    } else {
        const SceneSpec s = scene_from_json(spec);
        r = render(s);
        manifest["scene"] = to_json(s);
    }
    manifest["image"] = out_path;
    manifest["truth"] = to_json(r.truth);
    write_image(out_path, r.image);
    if (manifest_path.empty()) manifest_path = out_path + ".json";
    write_text(manifest_path, manifest.dump(2) + "\n");
    return 0;
}

int cmd_eval(const std::string& corpus_path, std::optional<std::uint64_t> seed, std::optional<int> n_spliced,
             std::optional<int> n_authentic, std::optional<unsigned> threads, const std::string& out_path) {
    CorpusConfig cfg;
    if (!corpus_path.empty()) cfg = corpus_from_json(read_json_file(corpus_path));
    if (seed) cfg.seed = *seed;
    if (n_spliced) cfg.n_spliced = *n_spliced;
    if (n_authentic) cfg.n_authentic = *n_authentic;
    if (threads) cfg.threads = *threads;
    const CorpusResult res = evaluate_corpus(cfg);
    write_text(out_path, to_json(res, cfg).dump(2) + "\n");
    std::fprintf(stderr, "detection_rate %.4f (%d/%d)  false_positive_rate %.4f (%d/%d)\n", res.detection_rate,
                 res.n_detected, res.n_detectable, res.false_positive_rate, res.n_false_positive, res.n_authentic);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"radsplice: detect splicing from inconsistent lens radial distortion across straight lines"};
    app.require_subcommand(1);

    std::string input, report_path = "-", overlay_path, plot_path, segments_path, format = "text", lines_out = "-";
    Overrides analyze_ov, lines_ov;

    auto* analyze_cmd = app.add_subcommand("analyze", "run the full pipeline and write a JSON report");
    analyze_cmd->add_option("image", input, "PNG, PGM or PPM image")->required();
    analyze_cmd->add_option("-o,--report", report_path, "report path ('-' for stdout)");
    analyze_cmd->add_option("--overlay", overlay_path, "SVG overlay of segments colored by flag");
    analyze_cmd->add_option("--plot", plot_path, "SVG scatter of k1 against distance");
    analyze_cmd->add_option("--segments", segments_path, "JSON dump of all linked segments");
    analyze_ov.attach(analyze_cmd);

    auto* lines_cmd = app.add_subcommand("lines", "estimate k1 per line, sorted left to right");
    lines_cmd->add_option("image", input, "PNG, PGM or PPM image")->required();
    lines_cmd->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
    lines_cmd->add_option("-o,--output", lines_out, "output path ('-' for stdout)");
    lines_ov.attach(lines_cmd);

    std::string spec_path, synth_out, manifest_path;
    auto* synth_cmd = app.add_subcommand("synth", "render a scene or splice spec");
    synth_cmd->add_option("spec", spec_path, "scene or splice JSON")->required();
    synth_cmd->add_option("-o,--out", synth_out, "image path (.png or .pgm)")->required();
    synth_cmd->add_option("--manifest", manifest_path, "ground-truth manifest (default: <out>.json)");

    std::string corpus_path, eval_out = "-";
    std::optional<std::uint64_t> seed;
    std::optional<int> n_spliced, n_authentic;
    std::optional<unsigned> threads;
    auto* eval_cmd = app.add_subcommand("eval", "render and score a seeded synthetic corpus");
    eval_cmd->add_option("corpus", corpus_path, "corpus JSON (optional; defaults otherwise)");
    eval_cmd->add_option("--seed", seed, "corpus seed");
    eval_cmd->add_option("--spliced", n_spliced, "number of composites");
    eval_cmd->add_option("--authentic", n_authentic, "number of authentic images");
    eval_cmd->add_option("--threads", threads, "worker threads");
    eval_cmd->add_option("-o,--output", eval_out, "output path ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitError;
    }

    try {
        if (*analyze_cmd) return cmd_analyze(input, analyze_ov, report_path, overlay_path, plot_path, segments_path);
        if (*lines_cmd) return cmd_lines(input, lines_ov, format, lines_out);
        if (*synth_cmd) return cmd_synth(spec_path, synth_out, manifest_path);
        if (*eval_cmd) return cmd_eval(corpus_path, seed, n_spliced, n_authentic, threads, eval_out);
    } catch (const Error& e) {
        std::cerr << "radsplice: " << to_string(e.code()) << ": " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "radsplice: " << e.what() << "\n";
        return kExitError;
    }
    return kExitError;
}
