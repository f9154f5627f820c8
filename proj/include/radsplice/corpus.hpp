#ifndef RADSPLICE_CORPUS_HPP
#define RADSPLICE_CORPUS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "radsplice/pipeline.hpp"
#include "radsplice/synth.hpp"

namespace radsplice {

enum class SpliceKind { None, CopyMove, Magnitude, OppositeSign };

inline const char* to_string(SpliceKind k) {
    switch (k) {
        case SpliceKind::None: return "authentic";
        case SpliceKind::CopyMove: return "copy_move";
        case SpliceKind::Magnitude: return "magnitude";
        case SpliceKind::OppositeSign: return "opposite_sign";
    }
    return "?";
}

struct CorpusConfig {
    int n_spliced = 100;
    int n_authentic = 100;
    std::uint64_t seed = 20241014;
    int width = 800;
    int height = 600;
    double k1_min = 0.02;             ///< |k1| range of hosts and donors
    double k1_max = 0.2;
    double zero_fraction = 0.1;       ///< share of authentic images rendered with k1 = 0
    double min_k1_contrast = 0.02;    ///< least |k1| difference between host and donor
    double noise_sigma = 0.0;
    std::optional<int> jpeg_quality;
    unsigned threads = 1;
    RunConfig run;

    void validate() const {
        if (n_spliced < 0 || n_authentic < 0 || n_spliced + n_authentic < 1)
            throw Error(ErrorCode::InvalidInput, "corpus needs at least one image");
        if (!(k1_min > 0 && k1_max >= k1_min && zero_fraction >= 0 && zero_fraction <= 1 && min_k1_contrast >= 0))
            throw Error(ErrorCode::InvalidInput, "invalid corpus k1 range");
        run.validate();
    }
};

struct CorpusItem {
    int index = 0;
    SpliceKind kind = SpliceKind::None;
    double host_k1 = 0.0;
    double donor_k1 = 0.0;
    bool spliced = false;
    bool undetectable = false;
    Verdict verdict = Verdict::Inconclusive;
    bool replaced_line_flagged = false;
    ConsistencyReport report;
};

struct CorpusResult {
    double detection_rate = 0.0;
    double false_positive_rate = 0.0;
    int n_detectable = 0;
    int n_detected = 0;
    int n_authentic = 0;
    int n_false_positive = 0;
    int n_inconclusive = 0;
    std::vector<CorpusItem> items;
};

/// Splitmix64 finalizer; decorrelates per-image seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct CorpusCase {
    SpliceKind kind = SpliceKind::None;
    SceneSpec host;
    std::optional<SpliceSpec> splice;
};

namespace detail {

inline SceneSpec random_host(std::mt19937_64& rng, const CorpusConfig& cfg, double k1) {
    std::uniform_real_distribution<double> jit(-0.02, 0.02), contrast(0.2, 0.35);
    SceneSpec s;
    s.width = cfg.width;
    s.height = cfg.height;
    s.k1 = k1;
    s.noise_sigma = cfg.noise_sigma;
    s.noise_seed = rng();
    s.jpeg_quality = cfg.jpeg_quality;
    int i = 0;
    for (double o : {-0.45, -0.3, -0.15, 0.15, 0.3, 0.45}) {
        const double c = contrast(rng);
        s.lines.push_back({0.0, o + jit(rng), (i++ % 2) ? -c : c});
    }
    return s;
}

inline double random_k1(std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> mag(lo, hi);
    const double m = mag(rng);
    return (rng() & 1u) ? m : -m;
}

inline bool placement_ok(const SpliceSpec& s) {
    try {
        s.validate();
        std::vector<DonorPlacement> placed;
        for (const auto& r : s.replacements) placed.push_back(place(s, r));
        check_placements(s.host.dims(), placed);
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace detail

/// Deterministic description of corpus image `index`: the first
/// n_spliced images are composites cycling through copy-move, magnitude
/// change and opposite-sign donors; the rest are authentic.
inline CorpusCase corpus_case(const CorpusConfig& cfg, int index) {
    std::mt19937_64 rng(splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(index))));
    CorpusCase c;
    if (index >= cfg.n_spliced) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const double k1 = u(rng) < cfg.zero_fraction ? 0.0 : detail::random_k1(rng, cfg.k1_min, cfg.k1_max);
        c.host = detail::random_host(rng, cfg, k1);
        return c;
    }
    c.kind = static_cast<SpliceKind>(1 + index % 3);
    std::uniform_int_distribution<int> pick_line(0, 5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        SpliceSpec s;
        const int a = pick_line(rng);
        switch (c.kind) {
            case SpliceKind::CopyMove: {
                s.host = detail::random_host(rng, cfg, detail::random_k1(rng, cfg.k1_min, cfg.k1_max));
                s.donor = s.host;
                const double oa = s.host.lines[a].offset;
                if (u(rng) < 1.0 / 3.0) {
                    s.replacements.push_back({a, a, true});  // same line, mirrored
                    break;
                }
                // another line from the opposite side, or from the same side
                // at least 2.5x farther from (or nearer to) the center
                std::vector<int> sources;
                for (int b = 0; b < 6; ++b) {
                    const double ob = s.host.lines[b].offset;
                    const double ratio = std::abs(ob) / std::abs(oa);
                    if (b != a && ((ob > 0) != (oa > 0) || ratio >= 2.5 || ratio <= 0.4)) sources.push_back(b);
                }
                std::uniform_int_distribution<std::size_t> pick(0, sources.size() - 1);
                s.replacements.push_back({a, sources[pick(rng)], false});
                break;
            }
            case SpliceKind::Magnitude: {
                s.host = detail::random_host(rng, cfg, detail::random_k1(rng, cfg.k1_min, cfg.k1_max));
                const double kh = std::abs(s.host.k1);
                const double ratio = 3.0 + u(rng);
                const bool up_ok = kh * ratio <= cfg.k1_max && kh * (ratio - 1) >= cfg.min_k1_contrast;
                const bool down_ok = kh / ratio >= 0.5 * cfg.k1_min && kh * (1 - 1 / ratio) >= cfg.min_k1_contrast;
                if (!up_ok && !down_ok) continue;
                const bool up = up_ok && (!down_ok || (rng() & 1u));
                s.donor = s.host;
                s.donor.k1 = std::copysign(up ? kh * ratio : kh / ratio, s.host.k1);
                s.replacements.push_back({a, a, false});
                break;
            }
            default: {
                s.host = detail::random_host(rng, cfg, detail::random_k1(rng, cfg.k1_min, cfg.k1_max));
                std::uniform_real_distribution<double> mag(cfg.k1_min, cfg.k1_max);
                s.donor = s.host;
                s.donor.k1 = -std::copysign(mag(rng), s.host.k1);
                if (std::abs(s.donor.k1 - s.host.k1) < cfg.min_k1_contrast) continue;
                s.replacements.push_back({a, a, false});
                break;
            }
        }
        if (!detail::placement_ok(s)) continue;
        c.host = s.host;
        c.splice = s;
        return c;
    }
    throw Error(ErrorCode::InvalidInput, "could not draw a valid splice for corpus image " + std::to_string(index));
}

inline CorpusItem evaluate_case(const CorpusConfig& cfg, int index) {
    const CorpusCase c = corpus_case(cfg, index);
    const Rendered r = c.splice ? render_splice(*c.splice) : render(c.host);
    RunConfig run = cfg.run;
    run.jitter_seed = splitmix64(cfg.run.jitter_seed ^ static_cast<std::uint64_t>(index));
    const PipelineResult res = analyze(r.image, run);
    CorpusItem it;
    it.index = index;
    it.kind = c.kind;
    it.host_k1 = c.host.k1;
    it.donor_k1 = c.splice ? c.splice->donor.k1 : c.host.k1;
    it.spliced = r.truth.spliced;
    it.undetectable = r.truth.undetectable;
    it.verdict = res.report.verdict;
    it.report = res.report;
    for (const auto& g : r.truth.lines) {
        if (!g.replaced) continue;
        for (const auto& l : res.report.lines)
            if (l.flags != 0 && std::abs(l.distance - g.distance) < 0.03) it.replaced_line_flagged = true;
    }
    return it;
}

/// Renders and scores the seeded corpus. Each image draws from its own
/// seed, so results do not depend on the thread count.
inline CorpusResult evaluate_corpus(const CorpusConfig& cfg) {
    cfg.validate();
    const int n = cfg.n_spliced + cfg.n_authentic;
    CorpusResult out;
    out.items.resize(static_cast<std::size_t>(n));
    const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(n)));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](unsigned t) {
        try {
            for (int i = static_cast<int>(t); i < n; i += static_cast<int>(threads))
                out.items[static_cast<std::size_t>(i)] = evaluate_case(cfg, i);
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            failure = std::current_exception();
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    for (const auto& it : out.items) {
        if (it.verdict == Verdict::Inconclusive) ++out.n_inconclusive;
        if (it.spliced) {
            if (it.undetectable) continue;
            ++out.n_detectable;
            if (it.verdict == Verdict::Spliced) ++out.n_detected;
        } else {
            ++out.n_authentic;
            if (it.verdict == Verdict::Spliced) ++out.n_false_positive;
        }
    }
    out.detection_rate = out.n_detectable ? double(out.n_detected) / out.n_detectable : 0.0;
    out.false_positive_rate = out.n_authentic ? double(out.n_false_positive) / out.n_authentic : 0.0;
    return out;
}

}  // namespace radsplice

#endif
