#ifndef RADSPLICE_SEGMENT_EXTRACTION_HPP
#define RADSPLICE_SEGMENT_EXTRACTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "radsplice/edge_detection.hpp"
#include "radsplice/error.hpp"
#include "radsplice/geometry.hpp"

namespace radsplice {

struct SegmentConfig {
    double link_gap = 4.0;          ///< max spacing of consecutive edgels in a raw chain, px
    double max_turn_deg = 10.0;     ///< max direction change per step or across a merge
    double tolerance = 2.0;         ///< half-width of the tolerance region, px
    double merge_gap = 12.0;        ///< max gap bridged when merging broken pieces, px
    std::size_t min_points = 8;
    int max_sign_changes = 0;       ///< interior sign changes of the smoothed chord deviation
    double deviation_deadband = 0.15;  ///< |deviation| below this carries no sign, px
    double smoothness_tol = 0.3;    ///< RMS about the local arcs, px
    double arc_window = 40.0;       ///< arc length covered by one local arc, px
    double dedup_radius = 1.0;
    double dedup_fraction = 0.8;
    double min_length_fraction = 1.0 / 3.0;  ///< floor on arc length, relative to image height

    void validate() const {
        if (!(link_gap > 0 && tolerance > 0 && merge_gap >= link_gap && max_turn_deg > 0 &&
              max_turn_deg < 90 && smoothness_tol > 0 && arc_window > 0 && min_points >= 2 &&
              max_sign_changes >= 0 && deviation_deadband >= 0 && dedup_radius > 0 &&
              dedup_fraction > 0 && dedup_fraction <= 1 && min_length_fraction >= 0))
            throw Error(ErrorCode::InvalidInput, "invalid segment configuration");
    }
};

/// Ordered chain of edgel positions hypothesized to image one 3-D line.
class CurveSegment {
public:
    CurveSegment() = default;
    explicit CurveSegment(std::vector<PixelPoint> points) : points_(std::move(points)) {
        arc_length_ = 0.0;
        for (std::size_t i = 1; i < points_.size(); ++i) arc_length_ += distance(points_[i - 1], points_[i]);
    }

    const std::vector<PixelPoint>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    double arc_length() const { return arc_length_; }
    PixelPoint front() const { return points_.front(); }
    PixelPoint back() const { return points_.back(); }

    double max_spacing() const {
        double m = 0.0;
        for (std::size_t i = 1; i < points_.size(); ++i) m = std::max(m, distance(points_[i - 1], points_[i]));
        return m;
    }

    /// Structural invariants: enough points, bounded spacing, points inside
    /// the image.
    bool satisfies_invariants(const SegmentConfig& cfg, ImageDims dims) const {
        if (points_.size() < cfg.min_points) return false;
        if (max_spacing() > std::max(cfg.link_gap, cfg.merge_gap) + 1e-9) return false;
        for (const auto& p : points_)
            if (p.x < -0.5 || p.y < -0.5 || p.x > dims.width - 0.5 || p.y > dims.height - 0.5) return false;
        return true;
    }

    bool operator==(const CurveSegment& o) const { return points_ == o.points_; }

private:
    std::vector<PixelPoint> points_;
    double arc_length_ = 0.0;
};

namespace detail {

inline bool position_less(Vec2 a, Vec2 b) { return std::tie(a.y, a.x) < std::tie(b.y, b.x); }

/// Orients a chain so that its first point precedes its last in
/// (row, column) order.
inline void canonicalize(std::vector<PixelPoint>& pts) {
    if (pts.size() >= 2 && position_less(pts.back(), pts.front())) std::reverse(pts.begin(), pts.end());
}

class CellGrid {
public:
    explicit CellGrid(double cell) : cell_(cell) {}

    void insert(Vec2 p, std::size_t id) { cells_[key(cell_of(p.x), cell_of(p.y))].push_back(id); }

    template <class F>
    void visit(Vec2 p, double radius, F&& f) const {
        const long x0 = cell_of(p.x - radius), x1 = cell_of(p.x + radius);
        const long y0 = cell_of(p.y - radius), y1 = cell_of(p.y + radius);
        for (long cy = y0; cy <= y1; ++cy)
            for (long cx = x0; cx <= x1; ++cx) {
                auto it = cells_.find(key(cx, cy));
                if (it == cells_.end()) continue;
                for (std::size_t id : it->second) f(id);
            }
    }

private:
    long cell_of(double v) const { return static_cast<long>(std::floor(v / cell_)); }
    static std::int64_t key(long cx, long cy) { return (static_cast<std::int64_t>(cy) << 32) ^ (cx & 0xffffffffLL); }

    double cell_;
    std::unordered_map<std::int64_t, std::vector<std::size_t>> cells_;
};

/// Finds the best neighbor of edgel i strictly ahead (sense=+1) or behind
/// (sense=-1) along its tangent. Ties are broken by position so the result
/// does not depend on input order.
inline long best_neighbor(const std::vector<SubpixelEdgel>& e, const CellGrid& grid, std::size_t i, int sense,
                          const SegmentConfig& cfg) {
    const Vec2 t = e[i].tangent() * static_cast<double>(sense);
    const Vec2 u = e[i].normal();
    const double cos_turn = std::cos(deg_to_rad(cfg.max_turn_deg));
    const double tan_turn = std::tan(deg_to_rad(cfg.max_turn_deg));
    long best = -1;
    std::tuple<double, double, double, double, double> best_key{};
    grid.visit(e[i].pos, cfg.link_gap, [&](std::size_t j) {
        if (j == i) return;
        const Vec2 d = e[j].pos - e[i].pos;
        const double along = dot(d, t);
        if (!(along > 1e-9)) return;
        const double dist = norm(d);
        if (dist > cfg.link_gap) return;
        if (dot(e[j].normal(), u) < cos_turn) return;
        const double lateral = std::abs(dot(d, u));
        if (lateral > 1.0 + along * tan_turn) return;
        const auto key = std::make_tuple(dist + 2.0 * lateral, e[j].pos.y, e[j].pos.x, e[j].gradient_dir,
                                         e[j].gradient_mag);
        if (best < 0 || key < best_key) {
            best = static_cast<long>(j);
            best_key = key;
        }
    });
    return best;
}

/// Chains edgels by mutually-best forward/backward links.
inline std::vector<std::vector<PixelPoint>> chain_edgels(const std::vector<SubpixelEdgel>& e, const SegmentConfig& cfg) {
    CellGrid grid(std::max(1.0, cfg.link_gap));
    for (std::size_t i = 0; i < e.size(); ++i) grid.insert(e[i].pos, i);
    std::vector<long> fwd(e.size()), bwd(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        fwd[i] = best_neighbor(e, grid, i, +1, cfg);
        bwd[i] = best_neighbor(e, grid, i, -1, cfg);
    }
    std::vector<long> next(e.size(), -1), prev(e.size(), -1);
    for (std::size_t i = 0; i < e.size(); ++i) {
        const long j = fwd[i];
        if (j >= 0 && bwd[j] == static_cast<long>(i)) {
            next[i] = j;
            prev[j] = static_cast<long>(i);
        }
    }

    std::vector<std::size_t> order(e.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::make_tuple(e[a].pos.y, e[a].pos.x, e[a].gradient_dir) <
               std::make_tuple(e[b].pos.y, e[b].pos.x, e[b].gradient_dir);
    });

    std::vector<char> used(e.size(), 0);
    std::vector<std::vector<PixelPoint>> chains;
    auto walk = [&](std::size_t start) {
        std::vector<PixelPoint> pts;
        long k = static_cast<long>(start);
        while (k >= 0 && !used[k]) {
            used[k] = 1;
            pts.push_back(e[k].pos);
            k = next[k];
        }
        chains.push_back(std::move(pts));
    };
    for (std::size_t i : order)
        if (!used[i] && prev[i] < 0) walk(i);
    for (std::size_t i : order)  // closed loops
        if (!used[i]) walk(i);
    return chains;
}

struct ChainEnd {
    Vec2 pos;
    Vec2 outward;  ///< unit tangent pointing away from the chain
};

/// Principal direction of the last few points at one end of a chain.
inline ChainEnd chain_end(const std::vector<PixelPoint>& pts, bool at_back) {
    const std::size_t n = pts.size();
    const std::size_t m = std::min<std::size_t>(n, 15);
    auto pick = [&](std::size_t k) { return at_back ? pts[n - 1 - k] : pts[k]; };
    Vec2 mean{};
    for (std::size_t k = 0; k < m; ++k) mean = mean + pick(k);
    mean = mean * (1.0 / m);
    double sxx = 0, syy = 0, sxy = 0;
    for (std::size_t k = 0; k < m; ++k) {
        const Vec2 d = pick(k) - mean;
        sxx += d.x * d.x;
        syy += d.y * d.y;
        sxy += d.x * d.y;
    }
    const double theta = 0.5 * std::atan2(2 * sxy, sxx - syy);
    Vec2 dir{std::cos(theta), std::sin(theta)};
    if (dot(dir, pick(0) - pick(m - 1)) < 0) dir = dir * -1.0;
    return {pick(0), dir};
}

/// Joins broken pieces whose facing ends lie inside each other's tolerance
/// region and agree in direction (sign-insensitive, so polarity flips along
/// a line do not split it).
inline std::vector<std::vector<PixelPoint>> merge_pieces(std::vector<std::vector<PixelPoint>> chains,
                                                           const SegmentConfig& cfg) {
    std::vector<std::vector<PixelPoint>> pieces;
    for (auto& c : chains)
        if (c.size() >= 2) {
            canonicalize(c);
            pieces.push_back(std::move(c));
        }
    std::sort(pieces.begin(), pieces.end(),
              [](const auto& a, const auto& b) { return position_less(a.front(), b.front()); });

    const std::size_t n = pieces.size();
    std::vector<ChainEnd> ends(2 * n);  // end 2k: front of piece k, 2k+1: back
    CellGrid grid(cfg.merge_gap);
    for (std::size_t k = 0; k < n; ++k) {
        ends[2 * k] = chain_end(pieces[k], false);
        ends[2 * k + 1] = chain_end(pieces[k], true);
        grid.insert(ends[2 * k].pos, 2 * k);
        grid.insert(ends[2 * k + 1].pos, 2 * k + 1);
    }
    const double cos_turn = std::cos(deg_to_rad(cfg.max_turn_deg));

    struct Candidate {
        double cost;
        std::size_t a, b;
    };
    std::vector<Candidate> cands;
    for (std::size_t a = 0; a < 2 * n; ++a)
        grid.visit(ends[a].pos, cfg.merge_gap, [&](std::size_t b) {
            if (b <= a || b / 2 == a / 2) return;
            const Vec2 v = ends[b].pos - ends[a].pos;
            const double gap = norm(v);
            if (gap > cfg.merge_gap) return;
            if (dot(ends[a].outward, ends[b].outward * -1.0) < cos_turn) return;
            const double along_a = dot(v, ends[a].outward);
            const double along_b = -dot(v, ends[b].outward);
            if (along_a < -0.5 || along_b < -0.5) return;
            const double lat_a = std::abs(cross(ends[a].outward, v));
            const double lat_b = std::abs(cross(ends[b].outward, v));
            if (lat_a > cfg.tolerance || lat_b > cfg.tolerance) return;
            cands.push_back({gap + lat_a + lat_b, a, b});
        });
    std::sort(cands.begin(), cands.end(), [](const Candidate& x, const Candidate& y) {
        return std::tie(x.cost, x.a, x.b) < std::tie(y.cost, y.a, y.b);
    });

    std::vector<long> partner(2 * n, -1);
    std::vector<std::size_t> root(n);
    std::iota(root.begin(), root.end(), 0);
    auto find = [&](std::size_t k) {
        while (root[k] != k) k = root[k] = root[root[k]];
        return k;
    };
    for (const auto& c : cands) {
        if (partner[c.a] >= 0 || partner[c.b] >= 0) continue;
        const std::size_t ra = find(c.a / 2), rb = find(c.b / 2);
        if (ra == rb) continue;
        partner[c.a] = static_cast<long>(c.b);
        partner[c.b] = static_cast<long>(c.a);
        root[ra] = rb;
    }

    std::vector<char> used(n, 0);
    std::vector<std::vector<PixelPoint>> merged;
    for (std::size_t k = 0; k < n; ++k) {
        if (used[k]) continue;
        // walk out through the front until reaching the free end of the path
        std::size_t start = k;
        std::size_t entry_end = 2 * k;
        while (partner[entry_end] >= 0) {
            const std::size_t other = static_cast<std::size_t>(partner[entry_end]);
            start = other / 2;
            entry_end = other ^ 1u;
        }
        std::vector<PixelPoint> pts;
        std::size_t cur = start, in_end = entry_end;
        while (true) {
            used[cur] = 1;
            const auto& p = pieces[cur];
            if (in_end % 2 == 0) pts.insert(pts.end(), p.begin(), p.end());
            else pts.insert(pts.end(), p.rbegin(), p.rend());
            const std::size_t out_end = (in_end % 2 == 0) ? 2 * cur + 1 : 2 * cur;
            if (partner[out_end] < 0) break;
            const std::size_t nxt = static_cast<std::size_t>(partner[out_end]);
            if (used[nxt / 2]) break;
            cur = nxt / 2;
            in_end = nxt;
        }
        merged.push_back(std::move(pts));
    }
    return merged;
}

/// Drops any chain with at least `fraction` of its points within `radius`
/// of a longer surviving chain.
inline std::vector<std::vector<PixelPoint>> deduplicate(std::vector<std::vector<PixelPoint>> chains,
                                                        const SegmentConfig& cfg) {
    std::vector<double> len(chains.size());
    for (std::size_t k = 0; k < chains.size(); ++k) len[k] = CurveSegment(chains[k]).arc_length();
    std::vector<std::size_t> order(chains.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (len[a] != len[b]) return len[a] > len[b];
        return position_less(chains[a].front(), chains[b].front());
    });
    CellGrid grid(std::max(1.0, cfg.dedup_radius));
    std::vector<PixelPoint> kept_points;
    std::vector<std::vector<PixelPoint>> kept;
    for (std::size_t k : order) {
        const auto& c = chains[k];
        std::size_t near = 0;
        for (const auto& p : c) {
            bool hit = false;
            grid.visit(p, cfg.dedup_radius, [&](std::size_t id) {
                if (!hit && distance(kept_points[id], p) <= cfg.dedup_radius) hit = true;
            });
            near += hit;
        }
        if (static_cast<double>(near) >= cfg.dedup_fraction * static_cast<double>(c.size())) continue;
        for (const auto& p : c) {
            grid.insert(p, kept_points.size());
            kept_points.push_back(p);
        }
        kept.push_back(c);
    }
    return kept;
}

}  // namespace detail

/// Chains edgels into candidate line projections: mutual nearest-neighbor
/// linking under the gap and turn limits, merging of broken pieces inside
/// the tolerance region, removal of short chains and of duplicates.
/// Output is canonical (sorted by first point), independent of input order.
inline std::vector<CurveSegment> link_segments(const std::vector<SubpixelEdgel>& edgels, const SegmentConfig& cfg = {}) {
    cfg.validate();
    if (edgels.empty()) return {};
    auto chains = detail::chain_edgels(edgels, cfg);
    chains = detail::merge_pieces(std::move(chains), cfg);
    std::erase_if(chains, [&](const auto& c) { return c.size() < cfg.min_points; });
    chains = detail::deduplicate(std::move(chains), cfg);
    std::vector<CurveSegment> out;
    out.reserve(chains.size());
    for (auto& c : chains) {
        detail::canonicalize(c);
        out.emplace_back(std::move(c));
    }
    std::sort(out.begin(), out.end(), [](const CurveSegment& a, const CurveSegment& b) {
        return detail::position_less(a.front(), b.front());
    });
    return out;
}

struct PerturbationCheck {
    bool accepted = false;
    std::string reason;         ///< empty when accepted
    int sign_changes = 0;
    double max_deviation = 0.0; ///< max |orthogonal deviation from the chord|, px
    double arc_rms = 0.0;       ///< RMS about the local arcs, px
};

namespace detail {

/// Least-squares quadratic through (t_k, d_k); returns residual sum of
/// squares. Falls back to a line, then a constant, when ill-posed.
inline double quadratic_rss(const std::vector<double>& t, const std::vector<double>& d, std::size_t lo,
                            std::size_t hi) {
    const std::size_t m = hi - lo;
    double tm = 0;
    for (std::size_t k = lo; k < hi; ++k) tm += t[k];
    tm /= static_cast<double>(m);
    double s[5] = {0, 0, 0, 0, 0}, r[3] = {0, 0, 0};
    for (std::size_t k = lo; k < hi; ++k) {
        const double u = t[k] - tm;
        double p = 1;
        for (int e = 0; e < 5; ++e) {
            s[e] += p;
            if (e < 3) r[e] += p * d[k];
            p *= u;
        }
    }
    // normal equations [s0 s1 s2; s1 s2 s3; s2 s3 s4] c = r
    const double a[3][3] = {{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}};
    const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                       a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                       a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    double c[3] = {r[0] / s[0], 0, 0};
    const double scale = s[0] * s[2] * s[4];
    if (m >= 3 && scale > 0 && std::abs(det) > 1e-12 * scale) {
        auto solve = [&](int col) {
            double b[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) b[i][j] = (j == col) ? r[i] : a[i][j];
            return (b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1]) -
                    b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0]) +
                    b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0])) / det;
        };
        c[0] = solve(0);
        c[1] = solve(1);
        c[2] = solve(2);
    } else if (m >= 2 && s[2] > 0) {
        c[1] = r[1] / s[2];
    }
    double rss = 0;
    for (std::size_t k = lo; k < hi; ++k) {
        const double u = t[k] - tm;
        const double e = d[k] - (c[0] + u * (c[1] + u * c[2]));
        rss += e * e;
    }
    return rss;
}

}  // namespace detail

/// Accepts a segment iff its smoothed deviation from the chord keeps one
/// sign (up to cfg.max_sign_changes changes) and the points hug smooth
/// local arcs (RMS <= cfg.smoothness_tol). Both tests use chord-frame
/// quantities only, so the decision is invariant under rigid motions.
inline PerturbationCheck reject_perturbed(const CurveSegment& seg, const SegmentConfig& cfg = {}) {
    PerturbationCheck out;
    const auto& p = seg.points();
    const std::size_t n = p.size();
    if (n < 3) {
        out.reason = "too few points";
        return out;
    }
    const Vec2 chord = p.back() - p.front();
    const double chord_len = norm(chord);
    if (chord_len <= 0) {
        out.reason = "closed chain";
        return out;
    }
    const Vec2 c = chord * (1.0 / chord_len);
    const Vec2 nrm = perp(c);
    std::vector<double> t(n), dev(n);
    for (std::size_t k = 0; k < n; ++k) {
        t[k] = dot(p[k] - p.front(), c);
        dev[k] = dot(p[k] - p.front(), nrm);
        out.max_deviation = std::max(out.max_deviation, std::abs(dev[k]));
    }

    // (i) sign changes of the moving-average deviation outside the dead band
    const std::size_t half = std::clamp<std::size_t>(n / 80, 1, 12);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + dev[k];
    int last_sign = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t lo = k >= half ? k - half : 0;
        const std::size_t hi = std::min(n, k + half + 1);
        const double s = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
        if (std::abs(s) <= cfg.deviation_deadband) continue;
        const int sign = s > 0 ? 1 : -1;
        if (last_sign != 0 && sign != last_sign) ++out.sign_changes;
        last_sign = sign;
    }

    // (ii) RMS about piecewise local quadratic arcs covering cfg.arc_window each
    double rss = 0.0;
    std::size_t lo = 0;
    double s_lo = 0.0, s = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
        if (k < n) s += distance(p[k - 1], p[k]);
        const bool close = k == n || (s - s_lo >= cfg.arc_window && n - k >= 5);
        if (close && k - lo >= 5) {
            rss += detail::quadratic_rss(t, dev, lo, k);
            lo = k;
            s_lo = s;
        } else if (k == n) {
            rss += detail::quadratic_rss(t, dev, lo, k);
        }
    }
    out.arc_rms = std::sqrt(rss / static_cast<double>(n));

    if (out.sign_changes > cfg.max_sign_changes) {
        out.reason = "oscillating deviation";
    } else if (out.arc_rms > cfg.smoothness_tol) {
        out.reason = "rough arc fit";
    } else {
        out.accepted = true;
    }
    return out;
}

/// Trims every segment to the arc length of the shortest one, after
/// discarding segments shorter than min_length_fraction * image height
/// (inclusive floor). Points are removed alternately from both ends so the
/// survivor stays centered on the arc-length midpoint; trimming stops as
/// soon as dropping either end point would go below the target, so
/// trimmed lengths lie within one point spacing above it. Returns an empty
/// list when fewer than two segments survive.
inline std::vector<CurveSegment> trim_to_common_length(const std::vector<CurveSegment>& segs, ImageDims dims,
                                                       const SegmentConfig& cfg = {}) {
    const double floor_len = cfg.min_length_fraction * dims.height;
    std::vector<const CurveSegment*> survivors;
    for (const auto& s : segs)
        if (s.arc_length() >= floor_len * (1.0 - 1e-12)) survivors.push_back(&s);
    if (survivors.size() < 2) return {};
    double target = std::numeric_limits<double>::infinity();
    for (const auto* s : survivors) target = std::min(target, s->arc_length());

    std::vector<CurveSegment> out;
    out.reserve(survivors.size());
    for (const auto* s : survivors) {
        const auto& p = s->points();
        std::size_t lo = 0, hi = p.size();  // half-open
        double len = s->arc_length();
        double cut_front = 0.0, cut_back = 0.0;
        while (hi - lo > 2) {
            const double gf = distance(p[lo], p[lo + 1]);
            const double gb = distance(p[hi - 2], p[hi - 1]);
            const bool front_first = cut_front <= cut_back;
            if (front_first && len - gf >= target) {
                len -= gf; cut_front += gf; ++lo;
            } else if (len - gb >= target) {
                len -= gb; cut_back += gb; --hi;
            } else if (!front_first && len - gf >= target) {
                len -= gf; cut_front += gf; ++lo;
            } else {
                break;
            }
        }
        out.emplace_back(std::vector<PixelPoint>(p.begin() + static_cast<long>(lo), p.begin() + static_cast<long>(hi)));
    }
    return out;
}

}  // namespace radsplice

#endif
