#ifndef RADSPLICE_SYNTH_HPP
#define RADSPLICE_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "radsplice/distortion_model.hpp"
#include "radsplice/error.hpp"
#include "radsplice/image.hpp"
#include "radsplice/image_io.hpp"
#include "radsplice/k1_estimation.hpp"

namespace radsplice {

/// Ideal straight edge n . u = offset in undistorted normalized
/// coordinates, n = (cos normal_deg, sin normal_deg). normal_deg = 0 is a
/// vertical line, positive offsets lie right of (or below) the center.
struct SceneLine {
    double normal_deg = 0.0;
    double offset = 0.0;
    double contrast = 0.4;  ///< signed luminance step across the edge; positive is brighter on the +n side

    Vec2 normal() const { return {std::cos(deg_to_rad(normal_deg)), std::sin(deg_to_rad(normal_deg))}; }
    HesseLine hesse() const {
        const Vec2 n = normal();
        if (offset < 0) return {-n.x, -n.y, -offset};
        return {n.x, n.y, offset};
    }
    double signed_distance(NormalizedPoint u) const { return dot(normal(), u.vec()) - offset; }
};

enum class ScenePattern { Lines, Checkerboard };

struct SceneSpec {
    int width = 800;
    int height = 600;
    ScenePattern pattern = ScenePattern::Lines;
    std::vector<SceneLine> lines;  ///< used by ScenePattern::Lines
    int checker_columns = 12;      ///< squares across the width
    double checker_contrast = 0.5;
    double background = 0.5;
    double k1 = 0.0;
    double noise_sigma = 0.0;  ///< additive Gaussian luminance noise
    std::uint64_t noise_seed = 0;
    std::optional<int> jpeg_quality;

    ImageDims dims() const { return {width, height}; }
    RadialModel model() const { return RadialModel::for_image(dims(), k1); }
    double checker_square_px() const { return static_cast<double>(width) / checker_columns; }

    void validate() const;
};

struct GroundTruthLine {
    int index = 0;              ///< position in the scene's line list
    SceneLine geometry;         ///< ideal line the estimator should find
    double distance = 0.0;      ///< signed center distance as reported by the estimator
    double k1 = 0.0;            ///< distortion the edge was rendered with
    double expected_k1 = 0.0;   ///< k1 of the rendered trace read in host coordinates
    double visible_length = 0;  ///< pixels inside the image
    bool replaced = false;
    bool expect_flag = false;
};

struct GroundTruth {
    bool spliced = false;
    bool undetectable = false;
    double k1 = 0.0;
    std::vector<GroundTruthLine> lines;
};

struct Rendered {
    GrayImage image;
    GroundTruth truth;
};

namespace detail {

/// Distorted pixel trace of an ideal line, restricted to the image.
inline std::vector<PixelPoint> trace_line(const SceneLine& line, const RadialModel& model, ImageDims dims,
                                         double step_px = 1.0) {
    const Vec2 n = line.normal();
    const Vec2 t = perp(n);
    const Vec2 foot = n * line.offset;
    const double reach = 2.0 * model.max_radius(dims) + std::abs(line.offset);
    const double ds = step_px / model.scale;
    std::vector<PixelPoint> out;
    for (double s = -reach; s <= reach; s += ds) {
        const Vec2 u = foot + t * s;
        NormalizedPoint d;
        try {
            d = distort({u.x, u.y}, model.k1);
        } catch (const Error&) {
            continue;
        }
        const PixelPoint p = model.to_pixel(d);
        if (p.x >= 0 && p.y >= 0 && p.x <= dims.width - 1 && p.y <= dims.height - 1) out.push_back(p);
    }
    return out;
}

inline double polyline_length(const std::vector<PixelPoint>& p) {
    double s = 0;
    for (std::size_t i = 1; i < p.size(); ++i) s += distance(p[i - 1], p[i]);
    return s;
}

inline double ramp(double signed_px) { return std::clamp(signed_px, -0.5, 0.5); }

/// Alternating unit-amplitude square wave with 1 px ramps at multiples of sq.
inline double checker_wave(double px, double sq) {
    const double f = px / sq;
    const double m = std::round(f);
    const double parity = (static_cast<long long>(m) % 2 == 0) ? 1.0 : -1.0;
    return parity * ramp((f - m) * sq);
}

inline void finish(GrayImage& img, const SceneSpec& spec) {
    if (spec.noise_sigma > 0) {
        std::mt19937_64 rng(spec.noise_seed);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (float& v : img.pixels()) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
    }
    if (spec.jpeg_quality) img = jpeg_roundtrip(img, *spec.jpeg_quality);
}

}  // namespace detail

/// Ideal lines of a scene: the configured list, or every square boundary
/// of the checkerboard whose distorted trace crosses the image.
inline std::vector<SceneLine> scene_lines(const SceneSpec& spec) {
    if (spec.pattern == ScenePattern::Lines) return spec.lines;
    std::vector<SceneLine> out;
    const RadialModel m = spec.model();
    const double sq = spec.checker_square_px();
    const int reach = static_cast<int>(std::ceil(2.0 * m.max_radius(spec.dims()) * m.scale / sq));
    for (double normal_deg : {0.0, 90.0})
        for (int i = -reach; i <= reach; ++i) {
            const SceneLine l{normal_deg, i * sq / m.scale, spec.checker_contrast};
            if (detail::trace_line(l, m, spec.dims(), 4.0).size() >= 2) out.push_back(l);
        }
    return out;
}

inline void SceneSpec::validate() const {
    if (width < GrayImage::kMinSide || height < GrayImage::kMinSide)
        throw Error(ErrorCode::InvalidInput, "scene must be at least 16x16");
    if (!std::isfinite(k1) || !in_monotone_regime(k1, model().max_radius(dims())))
        throw Error(ErrorCode::InvalidInput, "scene k1 outside the monotone regime");
    if (!(noise_sigma >= 0) || !(background >= 0 && background <= 1))
        throw Error(ErrorCode::InvalidInput, "invalid noise or background level");
    if (jpeg_quality && (*jpeg_quality < 1 || *jpeg_quality > 100))
        throw Error(ErrorCode::InvalidInput, "jpeg quality must be in 1..100");
    if (pattern == ScenePattern::Checkerboard) {
        if (checker_columns < 2 || !(checker_contrast > 0 && checker_contrast <= 1))
            throw Error(ErrorCode::InvalidInput, "invalid checkerboard");
        return;
    }
    if (lines.empty()) throw Error(ErrorCode::InvalidInput, "scene has no lines");
    const RadialModel m = model();
    for (const auto& l : lines) {
        if (!std::isfinite(l.offset) || !std::isfinite(l.normal_deg) || l.contrast == 0 || std::abs(l.contrast) > 1)
            throw Error(ErrorCode::InvalidInput, "invalid scene line");
        if (detail::polyline_length(detail::trace_line(l, m, dims())) < height / 3.0)
            throw Error(ErrorCode::InvalidInput, "scene line shorter than 1/3 of the image height");
    }
}

/// Luminance of the ideal (undistorted) scene at a normalized point.
inline double scene_value(const SceneSpec& spec, NormalizedPoint u, double scale) {
    if (spec.pattern == ScenePattern::Checkerboard) {
        const double sq = spec.checker_square_px();
        const double w = detail::checker_wave(u.x * scale, sq) * detail::checker_wave(u.y * scale, sq);
        return std::clamp(spec.background + 2.0 * spec.checker_contrast * w, 0.0, 1.0);
    }
    double v = spec.background;
    for (const auto& l : spec.lines) v += l.contrast * detail::ramp(l.signed_distance(u) * scale);
    return std::clamp(v, 0.0, 1.0);
}

inline std::vector<GroundTruthLine> ground_truth_lines(const SceneSpec& spec) {
    std::vector<GroundTruthLine> out;
    const RadialModel m = spec.model();
    const auto lines = scene_lines(spec);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        GroundTruthLine g;
        g.index = static_cast<int>(i);
        g.geometry = lines[i];
        g.distance = signed_center_distance(lines[i].hesse());
        g.k1 = g.expected_k1 = spec.k1;
        g.visible_length = detail::polyline_length(detail::trace_line(lines[i], m, spec.dims()));
        out.push_back(g);
    }
    return out;
}

/// Inverse-mapped render: each output pixel is undistorted and the
/// analytic scene is evaluated there, then noise and JPEG are applied.
inline Rendered render(const SceneSpec& spec) {
    spec.validate();
    const RadialModel m = spec.model();
    Rendered r;
    r.image = GrayImage(spec.width, spec.height);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            const NormalizedPoint u = undistort(m.normalize({double(x), double(y)}), spec.k1);
            r.image.at(x, y) = static_cast<float>(scene_value(spec, u, m.scale));
        }
    detail::finish(r.image, spec);
    r.truth.k1 = spec.k1;
    r.truth.lines = ground_truth_lines(spec);
    return r;
}

/// One host line re-rendered with the geometry of a donor line: the donor
/// edge (donor k1, donor position) is translated so its foot lands on the
/// host line's foot, optionally mirrored across its own tangent first.
struct LineReplacement {
    int host_line = 0;
    int donor_line = 0;
    bool mirror = false;
};

struct SpliceSpec {
    SceneSpec host;
    SceneSpec donor;
    std::vector<LineReplacement> replacements;

    void validate() const {
        host.validate();
        donor.validate();
        if (host.pattern != ScenePattern::Lines || donor.pattern != ScenePattern::Lines)
            throw Error(ErrorCode::InvalidInput, "splices need line-pattern scenes");
        if (replacements.empty()) throw Error(ErrorCode::InvalidInput, "splice replaces no line");
        std::vector<int> seen;
        for (const auto& r : replacements) {
            if (r.host_line < 0 || r.host_line >= static_cast<int>(host.lines.size()) || r.donor_line < 0 ||
                r.donor_line >= static_cast<int>(donor.lines.size()))
                throw Error(ErrorCode::InvalidInput, "replacement line index out of range");
            if (std::find(seen.begin(), seen.end(), r.host_line) != seen.end())
                throw Error(ErrorCode::InvalidInput, "host line replaced twice");
            seen.push_back(r.host_line);
        }
    }
};

namespace detail {

/// Maps host pixels into donor pixels for one replacement.
struct DonorPlacement {
    RadialModel donor_model;
    SceneLine donor_line;
    Vec2 shift;        ///< host pixel = donor pixel (after mirroring) + shift
    Vec2 anchor;       ///< donor foot in donor pixels
    Vec2 axis;         ///< unit tangent of the mirror axis
    bool mirror = false;
    double polarity = 1.0;
    double contrast = 0.4;

    Vec2 reflect(Vec2 p) const {
        if (!mirror) return p;
        const Vec2 d = p - anchor;
        const Vec2 along = axis * dot(d, axis);
        return anchor + along * 2.0 - d;
    }
    PixelPoint to_donor(PixelPoint host) const { return reflect(host - shift); }
    PixelPoint to_host(PixelPoint donor) const { return reflect(donor) + shift; }

    double value(PixelPoint host) const {
        const NormalizedPoint u = undistort(donor_model.normalize(to_donor(host)), donor_model.k1);
        return contrast * ramp(polarity * donor_line.signed_distance(u) * donor_model.scale);
    }
};

inline DonorPlacement place(const SpliceSpec& s, const LineReplacement& r) {
    DonorPlacement p;
    const RadialModel host_model = s.host.model();
    p.donor_model = s.donor.model();
    p.donor_line = s.donor.lines[r.donor_line];
    p.mirror = r.mirror;
    const SceneLine& h = s.host.lines[r.host_line];
    p.contrast = h.contrast;
    auto foot_px = [](const SceneLine& l, const RadialModel& m) {
        const Vec2 f = l.normal() * l.offset;
        return m.to_pixel(distort({f.x, f.y}, m.k1));
    };
    p.anchor = foot_px(p.donor_line, p.donor_model);
    p.axis = perp(p.donor_line.normal());
    p.shift = foot_px(h, host_model) - p.anchor;
    // reflection across the tangent negates the donor normal
    const Vec2 n = p.mirror ? p.donor_line.normal() * -1.0 : p.donor_line.normal();
    p.polarity = dot(n, h.normal()) >= 0 ? 1.0 : -1.0;
    return p;
}

/// The donor scene must stay on its monotone branch across the host frame,
/// otherwise the undistortion folds and paints spurious edges.
inline void check_placements(ImageDims dims, const std::vector<DonorPlacement>& placed) {
    for (const auto& p : placed) {
        if (p.donor_model.k1 >= 0) continue;
        const double r_star = 1.0 / std::sqrt(-3.0 * p.donor_model.k1);
        for (PixelPoint c : {PixelPoint{0, 0}, PixelPoint{dims.width - 1.0, 0}, PixelPoint{0, dims.height - 1.0},
                             PixelPoint{dims.width - 1.0, dims.height - 1.0}})
            if (p.donor_model.normalize(p.to_donor(c)).radius() >= 0.98 * r_star)
                throw Error(ErrorCode::InvalidInput, "donor placement leaves the monotone branch of the donor model");
    }
}

}  // namespace detail

/// Host image with the designated lines replaced by donor geometry, plus
/// which lines the consistency rules should flag.
inline Rendered render_splice(const SpliceSpec& spec) {
    spec.validate();
    const RadialModel hm = spec.host.model();
    const ImageDims dims = spec.host.dims();
    std::vector<detail::DonorPlacement> placed;
    for (const auto& r : spec.replacements) placed.push_back(detail::place(spec, r));

    detail::check_placements(dims, placed);

    std::vector<char> replaced(spec.host.lines.size(), 0);
    for (const auto& r : spec.replacements) replaced[r.host_line] = 1;

    Rendered out;
    out.image = GrayImage(dims.width, dims.height);
    for (int y = 0; y < dims.height; ++y)
        for (int x = 0; x < dims.width; ++x) {
            const PixelPoint px{double(x), double(y)};
            const NormalizedPoint u = undistort(hm.normalize(px), hm.k1);
            double v = spec.host.background;
            for (std::size_t i = 0; i < spec.host.lines.size(); ++i)
                if (!replaced[i]) v += spec.host.lines[i].contrast * detail::ramp(spec.host.lines[i].signed_distance(u) * hm.scale);
            for (const auto& p : placed) v += p.value(px);
            out.image.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    detail::finish(out.image, spec.host);

    GroundTruth& gt = out.truth;
    gt.k1 = spec.host.k1;
    gt.lines = ground_truth_lines(spec.host);
    bool any_difference = false;
    for (std::size_t k = 0; k < spec.replacements.size(); ++k) {
        const auto& r = spec.replacements[k];
        const auto& p = placed[k];
        GroundTruthLine& g = gt.lines[r.host_line];
        g.replaced = true;
        g.k1 = spec.donor.k1;
        std::vector<PixelPoint> trace;
        for (const auto& q : detail::trace_line(p.donor_line, p.donor_model, spec.donor.dims(), 1.0)) {
            const PixelPoint h = p.to_host(q);
            if (h.x >= 0 && h.y >= 0 && h.x <= dims.width - 1 && h.y <= dims.height - 1) trace.push_back(h);
        }
        g.visible_length = detail::polyline_length(trace);
        std::vector<NormalizedPoint> pts;
        for (const auto& q : trace) pts.push_back(hm.normalize(q));
        if (pts.size() >= 8) {
            const LineEstimate e = estimate_k1(pts);
            g.expected_k1 = e.k1;
            g.distance = e.distance;
        }
        const SceneLine& h = spec.host.lines[r.host_line];
        const bool same_geometry = spec.donor.k1 == spec.host.k1 && p.donor_line.offset == h.offset &&
                                   p.donor_line.normal_deg == h.normal_deg && (!r.mirror || h.offset == 0.0);
        if (!same_geometry) any_difference = true;
        g.expect_flag = !same_geometry;
    }
    gt.spliced = true;
    gt.undetectable = !any_difference;
    return out;
}

}  // namespace radsplice

#endif
