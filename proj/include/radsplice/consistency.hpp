#ifndef RADSPLICE_CONSISTENCY_HPP
#define RADSPLICE_CONSISTENCY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "radsplice/error.hpp"
#include "radsplice/k1_estimation.hpp"

namespace radsplice {

struct ConsistencyConfig {
    double sign_floor = 0.001;  ///< |k1| below this is distortion-silent
    double mono_slack = 0.5;    ///< allowed relative dip below the running maximum
    double sym_slack = 0.6;     ///< allowed relative disagreement of mirrored lines
    double pair_tol = 0.08;     ///< max | |d1| - |d2| | for mirrored partners
    std::optional<double> residual_ceiling;  ///< drop lines fitting worse than this (normalized)

    void validate() const {
        if (!(sign_floor >= 0 && mono_slack >= 0 && mono_slack < 1 && sym_slack >= 0 && sym_slack <= 1 &&
              pair_tol >= 0 && (!residual_ceiling || *residual_ceiling > 0)))
            throw Error(ErrorCode::InvalidInput, "invalid consistency configuration");
    }
};

enum class Verdict { Authentic, Spliced, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Authentic: return "authentic";
        case Verdict::Spliced: return "spliced";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

enum LineFlag : std::uint8_t {
    kSignFlip = 1u << 0,
    kMonotonicityBreak = 1u << 1,
    kSymmetryBreak = 1u << 2,
};

inline std::vector<std::string> flag_names(std::uint8_t flags) {
    std::vector<std::string> out;
    if (flags & kSignFlip) out.emplace_back("sign_flip");
    if (flags & kMonotonicityBreak) out.emplace_back("monotonicity_break");
    if (flags & kSymmetryBreak) out.emplace_back("symmetry_break");
    return out;
}

struct LineVerdict {
    int id = 0;                 ///< 1-based, left to right
    std::size_t source = 0;     ///< index into the input list
    double distance = 0.0;
    double k1 = 0.0;
    double residual_rms = 0.0;
    std::size_t n_points = 0;
    bool converged = true;
    bool usable = true;
    bool significant = false;   ///< |k1| >= sign_floor
    std::uint8_t flags = 0;
    double isotonic_fit = 0.0;  ///< monotone |k1| model at this line (rule-a lines only)

    bool has(LineFlag f) const { return (flags & f) != 0; }
};

struct ConsistencyReport {
    Verdict verdict = Verdict::Inconclusive;
    bool rule_a_ok = true;
    bool rule_b_ok = true;
    std::vector<LineVerdict> lines;
    ConsistencyConfig config;
    std::string note;

    std::size_t flagged_count() const {
        return static_cast<std::size_t>(std::count_if(lines.begin(), lines.end(), [](const auto& l) { return l.flags != 0; }));
    }
    const LineVerdict* line(int id) const {
        for (const auto& l : lines)
            if (l.id == id) return &l;
        return nullptr;
    }
};

/// Pool-adjacent-violators: least-squares non-decreasing fit.
inline std::vector<double> isotonic_fit(std::span<const double> values) {
    struct Block {
        double sum;
        std::size_t count;
    };
    std::vector<Block> blocks;
    for (double v : values) {
        blocks.push_back({v, 1});
        while (blocks.size() >= 2) {
            const Block& b = blocks.back();
            const Block& a = blocks[blocks.size() - 2];
            if (a.sum / a.count <= b.sum / b.count) break;
            const Block merged{a.sum + b.sum, a.count + b.count};
            blocks.pop_back();
            blocks.back() = merged;
        }
    }
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / b.count);
    return out;
}

/// Applies the sign rule (b) and the symmetric-growth rule (a) to per-line
/// estimates. Lines are reported left to right; the result does not depend
/// on input order.
inline ConsistencyReport check_consistency(std::span<const LineEstimate> estimates, const ConsistencyConfig& cfg = {}) {
    cfg.validate();
    ConsistencyReport rep;
    rep.config = cfg;
    for (const auto& e : estimates) {
        LineVerdict l;
        l.source = rep.lines.size();
        l.distance = e.distance;
        l.k1 = e.k1;
        l.residual_rms = e.residual_rms;
        l.n_points = e.n_points;
        l.converged = e.converged;
        l.usable = e.converged && std::isfinite(e.k1) &&
                   (!cfg.residual_ceiling || e.residual_rms <= *cfg.residual_ceiling);
        l.significant = l.usable && std::abs(e.k1) >= cfg.sign_floor;
        rep.lines.push_back(l);
    }
    std::sort(rep.lines.begin(), rep.lines.end(), [](const LineVerdict& a, const LineVerdict& b) {
        return std::make_tuple(a.distance, a.k1, a.residual_rms) < std::make_tuple(b.distance, b.k1, b.residual_rms);
    });
    for (std::size_t i = 0; i < rep.lines.size(); ++i) rep.lines[i].id = static_cast<int>(i) + 1;

    auto& L = rep.lines;
    const auto usable = static_cast<std::size_t>(std::count_if(L.begin(), L.end(), [](const auto& l) { return l.usable; }));
    if (usable < 2) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = "insufficient lines: need at least two usable lines of at least 1/3 image height";
        return rep;
    }

    // rule (b): one sign among significant lines
    std::size_t pos = 0, neg = 0;
    double pos_mass = 0, neg_mass = 0;
    for (const auto& l : L)
        if (l.significant) {
            if (l.k1 > 0) { ++pos; pos_mass += l.k1; }
            else { ++neg; neg_mass -= l.k1; }
        }
    const bool positive_dominant = pos != neg ? pos > neg : pos_mass >= neg_mass;
    for (auto& l : L)
        if (l.significant && ((l.k1 > 0) != positive_dominant)) l.flags |= kSignFlip;

    // rule (a) on usable lines that agree in sign, ordered by |distance|
    std::vector<std::size_t> a_set;
    for (std::size_t i = 0; i < L.size(); ++i)
        if (L[i].usable && !L[i].has(kSignFlip)) a_set.push_back(i);
    std::sort(a_set.begin(), a_set.end(), [&](std::size_t i, std::size_t j) {
        return std::make_tuple(std::abs(L[i].distance), std::abs(L[i].k1), L[i].distance) <
               std::make_tuple(std::abs(L[j].distance), std::abs(L[j].k1), L[j].distance);
    });
    std::vector<double> mags;
    for (std::size_t i : a_set) mags.push_back(std::abs(L[i].k1));
    const auto iso = isotonic_fit(mags);
    for (std::size_t r = 0; r < a_set.size(); ++r) L[a_set[r]].isotonic_fit = iso[r];
    auto deviance = [&](std::size_t i) { return std::abs(std::abs(L[i].k1) - L[i].isotonic_fit); };
    auto blame = [&](std::size_t i, std::size_t j, LineFlag f) {
        const double di = deviance(i), dj = deviance(j);
        // pooled lines deviate equally up to rounding; treat that as a tie
        const bool tie = std::abs(di - dj) <= 1e-9 * std::max(di, dj);
        if ((!tie && di > dj) || (tie && std::abs(L[i].k1) >= std::abs(L[j].k1))) L[i].flags |= f;
        else L[j].flags |= f;
    };

    if (!a_set.empty()) {
        std::size_t peak = a_set.front();
        for (std::size_t r = 1; r < a_set.size(); ++r) {
            const std::size_t j = a_set[r];
            const double peak_mag = std::abs(L[peak].k1);
            if (peak_mag >= cfg.sign_floor && std::abs(L[j].k1) < (1.0 - cfg.mono_slack) * peak_mag)
                blame(peak, j, kMonotonicityBreak);
            if (std::abs(L[j].k1) > peak_mag) peak = j;
        }
    }

    // mirrored partners: mutual nearest |distance| on opposite sides
    auto nearest_opposite = [&](std::size_t i) -> long {
        long best = -1;
        double best_gap = 0;
        for (std::size_t j : a_set) {
            if ((L[j].distance > 0) == (L[i].distance > 0) || L[j].distance == 0 || L[i].distance == 0) continue;
            const double gap = std::abs(std::abs(L[i].distance) - std::abs(L[j].distance));
            if (best < 0 || gap < best_gap || (gap == best_gap && L[j].id < L[best].id)) {
                best = static_cast<long>(j);
                best_gap = gap;
            }
        }
        return best;
    };
    for (std::size_t i : a_set) {
        if (L[i].distance >= 0) continue;  // visit each pair once from the left
        const long j = nearest_opposite(i);
        if (j < 0 || nearest_opposite(static_cast<std::size_t>(j)) != static_cast<long>(i)) continue;
        if (std::abs(std::abs(L[i].distance) - std::abs(L[j].distance)) > cfg.pair_tol) continue;
        const double a = std::abs(L[i].k1), b = std::abs(L[j].k1);
        const double hi = std::max(a, b);
        if (hi < cfg.sign_floor) continue;
        if (std::abs(a - b) / hi > cfg.sym_slack) blame(i, static_cast<std::size_t>(j), kSymmetryBreak);
    }

    bool counted = false;
    for (const auto& l : L) {
        if (!l.significant || l.flags == 0) continue;
        counted = true;
        if (l.has(kSignFlip)) rep.rule_b_ok = false;
        if (l.has(kMonotonicityBreak) || l.has(kSymmetryBreak)) rep.rule_a_ok = false;
    }
    const auto significant = static_cast<std::size_t>(std::count_if(L.begin(), L.end(), [](const auto& l) { return l.significant; }));
    if (counted) rep.verdict = Verdict::Spliced;
    else if (significant < 2) {
        rep.verdict = Verdict::Inconclusive;
        rep.note = "fewer than two lines with measurable distortion";
    } else {
        rep.verdict = Verdict::Authentic;
    }
    return rep;
}

/// (distance, k1) rows of the reference per-line tables, left to right.
inline std::vector<LineEstimate> reference_table(int table) {
    using Row = std::pair<double, double>;
    std::vector<Row> rows;
    switch (table) {
        case 2: rows = {{-0.4095, 0.01439}, {-0.1727, 0.00455}, {-0.1139, 0.00065},
                        {0.1181, 0.00071}, {0.1809, 0.00478}, {0.4112, 0.01485}}; break;
        case 3: rows = {{-0.4736, -0.00371}, {-0.1981, -0.04611}, {-0.144, 0.000923},
                        {0.1193, 0.000872}, {0.1934, 0.003192}, {0.4614, 0.048074}}; break;
        case 4: rows = {{-0.4688, 0.038074}, {-0.2033, 0.004531}, {-0.1447, -0.00172},
                        {0.1285, 0.01014}, {0.1934, 0.0043}, {0.4614, 0.034251}}; break;
        case 5: rows = {{-0.4704, -0.00077}, {-0.199, -0.00169}, {-0.1337, -0.01394},
                        {0.1247, -0.0128}, {0.1963, 0.002672}, {0.4754, 0.038046}}; break;
        case 6: rows = {{-0.4798, 0.107796}, {-0.2111, 0.001981}, {-0.1464, 0.001776},
                        {0.1118, 0.0008}, {0.1782, -0.00331}, {0.4454, 0.019655}}; break;
        default: throw Error(ErrorCode::UnknownTable, "no reference table " + std::to_string(table));
    }
    std::vector<LineEstimate> out;
    for (const auto& [d, k] : rows) {
        LineEstimate e;
        e.distance = d;
        e.k1 = k;
        e.converged = true;
        e.n_points = 0;
        out.push_back(e);
    }
    return out;
}

/// Replays a reference table through the consistency rules.
inline ConsistencyReport check_table(int table, const ConsistencyConfig& cfg = {}) {
    const auto rows = reference_table(table);
    return check_consistency(rows, cfg);
}

}  // namespace radsplice

#endif
