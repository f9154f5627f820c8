#ifndef RADSPLICE_PIPELINE_HPP
#define RADSPLICE_PIPELINE_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "radsplice/consistency.hpp"
#include "radsplice/edge_detection.hpp"
#include "radsplice/image.hpp"
#include "radsplice/k1_estimation.hpp"
#include "radsplice/segment_extraction.hpp"

namespace radsplice {

/// Every tunable of the detect -> link -> reject -> trim -> estimate ->
/// check chain.
struct RunConfig {
    EdgeConfig edge;
    SegmentConfig segment;
    EstimatorConfig estimator;
    ConsistencyConfig consistency;
    double edgel_jitter = 0.0;  ///< Gaussian positional noise added to edgels, px (test probe)
    std::uint64_t jitter_seed = 0;

    void validate() const {
        edge.validate();
        segment.validate();
        consistency.validate();
        if (!(edgel_jitter >= 0)) throw Error(ErrorCode::InvalidInput, "edgel_jitter must be non-negative");
        if (!(estimator.jacobian_step > 0 && estimator.max_iterations > 0))
            throw Error(ErrorCode::InvalidInput, "invalid estimator configuration");
    }
};

struct SegmentOutcome {
    CurveSegment segment;
    PerturbationCheck check;
};

struct LineResult {
    CurveSegment segment;  ///< trimmed
    LineEstimate estimate;
};

struct PipelineResult {
    ImageDims dims;
    std::size_t edgel_count = 0;
    std::vector<SegmentOutcome> linked;  ///< every linked segment with its perturbation check
    std::vector<LineResult> lines;       ///< estimation order; report ids map via LineVerdict::source
    ConsistencyReport report;
};

inline void jitter_edgels(std::vector<SubpixelEdgel>& edgels, double sigma, std::uint64_t seed) {
    if (sigma <= 0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& e : edgels) {
        e.pos.x += n(rng);
        e.pos.y += n(rng);
    }
}

/// Runs up to and including per-line estimation.
inline PipelineResult estimate_lines(const GrayImage& img, const RunConfig& cfg = {}) {
    cfg.validate();
    PipelineResult out;
    out.dims = img.dims();
    auto edgels = detect_edges(img, cfg.edge);
    out.edgel_count = edgels.size();
    jitter_edgels(edgels, cfg.edgel_jitter, cfg.jitter_seed);
    std::vector<CurveSegment> accepted;
    for (auto& s : link_segments(edgels, cfg.segment)) {
        auto check = reject_perturbed(s, cfg.segment);
        if (check.accepted) accepted.push_back(s);
        out.linked.push_back({std::move(s), std::move(check)});
    }
    const RadialModel model = RadialModel::for_image(img.dims());
    for (auto& s : trim_to_common_length(accepted, img.dims(), cfg.segment)) {
        LineResult r{s, {}};
        try {
            r.estimate = estimate_k1(s, model, cfg.estimator);
        } catch (const Error&) {
            continue;  // degenerate segment: too few points to fit
        }
        out.lines.push_back(std::move(r));
    }
    return out;
}

inline PipelineResult analyze(const GrayImage& img, const RunConfig& cfg = {}) {
    PipelineResult out = estimate_lines(img, cfg);
    std::vector<LineEstimate> est;
    for (const auto& l : out.lines) est.push_back(l.estimate);
    out.report = check_consistency(est, cfg.consistency);
    return out;
}

}  // namespace radsplice

#endif
