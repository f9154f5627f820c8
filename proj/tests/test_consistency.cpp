#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "radsplice/consistency.hpp"

using namespace radsplice;

namespace {

std::vector<LineEstimate> rows(std::initializer_list<std::pair<double, double>> l) {
    std::vector<LineEstimate> out;
    for (const auto& [d, k] : l) {
        LineEstimate e;
        e.distance = d;
        e.k1 = k;
        e.converged = true;
        e.n_points = 100;
        out.push_back(e);
    }
    return out;
}

/// Authentic-looking set: |k1| grows with |distance| under one sign.
std::vector<LineEstimate> lawful_set(std::mt19937_64& rng, int n, double sign) {
    std::uniform_real_distribution<double> d(-0.8, 0.8), a(0.02, 0.3);
    const double amp = a(rng);
    std::vector<LineEstimate> out;
    for (int i = 0; i < n; ++i) {
        LineEstimate e;
        e.distance = d(rng);
        e.k1 = sign * amp * (0.05 + e.distance * e.distance);
        e.converged = true;
        e.n_points = 100;
        out.push_back(e);
    }
    return out;
}

void expect_same_report(const ConsistencyReport& a, const ConsistencyReport& b) {
    ASSERT_EQ(a.lines.size(), b.lines.size());
    EXPECT_EQ(a.verdict, b.verdict);
    EXPECT_EQ(a.rule_a_ok, b.rule_a_ok);
    EXPECT_EQ(a.rule_b_ok, b.rule_b_ok);
    for (std::size_t i = 0; i < a.lines.size(); ++i) {
        EXPECT_EQ(a.lines[i].id, b.lines[i].id);
        EXPECT_EQ(a.lines[i].distance, b.lines[i].distance);
        EXPECT_EQ(a.lines[i].k1, b.lines[i].k1);
        EXPECT_EQ(a.lines[i].flags, b.lines[i].flags);
    }
}

TEST(Isotonic, PoolsAdjacentViolators) {
    const std::vector<double> v{1, 3, 2, 4};
    EXPECT_EQ(isotonic_fit(v), (std::vector<double>{1, 2.5, 2.5, 4}));
    const std::vector<double> w{5, 1, 1, 1};
    EXPECT_EQ(isotonic_fit(w), (std::vector<double>{2, 2, 2, 2}));
    EXPECT_TRUE(isotonic_fit(std::vector<double>{}).empty());
}

TEST(Consistency, AuthenticReferenceSet) {
    const auto rep = check_consistency(rows({{-0.4095, 0.01439}, {-0.1727, 0.00455}, {-0.1139, 0.00065},
                                             {0.1181, 0.00071}, {0.1809, 0.00478}, {0.4112, 0.01485}}));
    EXPECT_EQ(rep.verdict, Verdict::Authentic);
    EXPECT_EQ(rep.flagged_count(), 0u);
    EXPECT_TRUE(rep.rule_a_ok);
    EXPECT_TRUE(rep.rule_b_ok);
    ASSERT_EQ(rep.lines.size(), 6u);
    for (int id = 1; id <= 6; ++id) EXPECT_EQ(rep.line(id)->source, static_cast<std::size_t>(id - 1));
}

TEST(Consistency, WeakOppositeSignAndDip) {
    const auto rep = check_consistency(rows({{-0.4688, 0.038074}, {-0.2033, 0.004531}, {-0.1447, -0.00172},
                                             {0.1285, 0.01014}, {0.1934, 0.0043}, {0.4614, 0.034251}}));
    EXPECT_EQ(rep.verdict, Verdict::Spliced);
    EXPECT_FALSE(rep.rule_b_ok);
    EXPECT_FALSE(rep.rule_a_ok);
    EXPECT_TRUE(rep.line(3)->has(kSignFlip));
    EXPECT_TRUE(rep.line(4)->has(kMonotonicityBreak) || rep.line(5)->has(kMonotonicityBreak));
    for (int id : {1, 2, 6}) EXPECT_FALSE(rep.line(id)->has(kSignFlip)) << id;
}

TEST(Consistency, ReferenceTableReplays) {
    EXPECT_EQ(check_table(2).verdict, Verdict::Authentic);
    for (int t : {3, 4, 5, 6}) {
        const auto rep = check_table(t);
        EXPECT_EQ(rep.verdict, Verdict::Spliced) << "table " << t;
        EXPECT_GE(rep.flagged_count(), 1u) << "table " << t;
    }
    const auto t3 = check_table(3);
    EXPECT_TRUE(t3.line(2)->flags != 0);
    const auto t5 = check_table(5);
    bool any_sign = false;
    for (const auto& l : t5.lines) any_sign |= l.has(kSignFlip);
    EXPECT_TRUE(any_sign);
    EXPECT_TRUE(check_table(6).line(5)->has(kSignFlip));
}

TEST(Consistency, UnknownTable) {
    try {
        check_table(7);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownTable);
    }
}

TEST(Consistency, AllZeroIsInconclusive) {
    const auto rep = check_consistency(rows({{-0.4, 0}, {-0.1, 0}, {0.2, 0}, {0.5, 0}}));
    EXPECT_EQ(rep.verdict, Verdict::Inconclusive);
    EXPECT_EQ(rep.flagged_count(), 0u);
}

TEST(Consistency, TooFewLinesIsInconclusive) {
    const auto none = check_consistency(std::vector<LineEstimate>{});
    EXPECT_EQ(none.verdict, Verdict::Inconclusive);
    EXPECT_NE(none.note.find("insufficient lines"), std::string::npos);
    EXPECT_NE(none.note.find("1/3"), std::string::npos);
    EXPECT_EQ(check_consistency(rows({{0.3, 0.02}})).verdict, Verdict::Inconclusive);
}

TEST(Consistency, UnusableLinesAreDropped) {
    auto r = rows({{-0.4, 0.02}, {0.1, -0.03}, {0.45, 0.025}});
    r[1].residual_rms = 0.01;  // a line fitting badly
    ConsistencyConfig cfg;
    EXPECT_EQ(check_consistency(r, cfg).verdict, Verdict::Spliced);
    cfg.residual_ceiling = 0.001;
    const auto rep = check_consistency(r, cfg);
    EXPECT_EQ(rep.verdict, Verdict::Authentic);
    EXPECT_FALSE(rep.line(2)->usable);
    r[0].converged = false;
    EXPECT_EQ(check_consistency(r, cfg).verdict, Verdict::Inconclusive);
}

TEST(Consistency, SymmetryBreak) {
    const auto rep = check_consistency(rows({{-0.5, 0.03}, {-0.3, 0.004}, {0.1, 0.002}, {0.32, 0.03}, {0.52, 0.031}}));
    EXPECT_EQ(rep.verdict, Verdict::Spliced);
    bool sym = false;
    for (const auto& l : rep.lines) sym |= l.has(kSymmetryBreak);
    EXPECT_TRUE(sym);
}

TEST(Consistency, RejectsBadConfig) {
    ConsistencyConfig cfg;
    cfg.mono_slack = -1;
    EXPECT_THROW(check_consistency(rows({{0.1, 0.1}}), cfg), Error);
}

TEST(Consistency, FlagNames) {
    EXPECT_EQ(flag_names(kSignFlip | kSymmetryBreak), (std::vector<std::string>{"sign_flip", "symmetry_break"}));
    EXPECT_STREQ(to_string(Verdict::Spliced), "spliced");
}

// ---- properties ----

TEST(ConsistencyProperty, PermutationInvariance) {
    std::mt19937_64 rng(12);
    std::vector<std::vector<LineEstimate>> sets;
    for (int t = 2; t <= 6; ++t) sets.push_back(reference_table(t));
    std::uniform_real_distribution<double> d(-0.8, 0.8), k(-0.05, 0.08);
    for (int i = 0; i < 100; ++i) {
        std::vector<LineEstimate> s;
        for (int j = 0; j < 2 + i % 7; ++j) {
            LineEstimate e;
            e.distance = d(rng);
            e.k1 = k(rng);
            e.converged = true;
            s.push_back(e);
        }
        sets.push_back(s);
    }
    for (const auto& s : sets) {
        const auto ref = check_consistency(s);
        for (int p = 0; p < 5; ++p) {
            auto q = s;
            std::shuffle(q.begin(), q.end(), rng);
            expect_same_report(check_consistency(q), ref);
        }
    }
}

TEST(ConsistencyProperty, ScaleCoherence) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> d(-0.8, 0.8), mag(0.001, 0.05), c(1.0, 20.0);
    std::bernoulli_distribution neg(0.2);
    for (int i = 0; i < 300; ++i) {
        std::vector<LineEstimate> s;
        for (int j = 0; j < 2 + i % 7; ++j) {
            LineEstimate e;
            e.distance = d(rng);
            e.k1 = (neg(rng) ? -1 : 1) * mag(rng);
            e.converged = true;
            s.push_back(e);
        }
        const auto ref = check_consistency(s);
        auto scaled = s;
        const double f = c(rng);
        for (auto& e : scaled) e.k1 *= f;
        const auto rep = check_consistency(scaled);
        EXPECT_EQ(rep.verdict, ref.verdict);
        for (std::size_t j = 0; j < s.size(); ++j) EXPECT_EQ(rep.lines[j].flags, ref.lines[j].flags);
    }
}

TEST(ConsistencyProperty, LawfulLineNeverFlipsAuthentic) {
    std::mt19937_64 rng(14);
    std::uniform_real_distribution<double> d(-0.8, 0.8);
    int checked = 0;
    for (int i = 0; i < 300; ++i) {
        const double sign = i % 2 ? 1.0 : -1.0;
        auto s = lawful_set(rng, 3 + i % 5, sign);
        const auto ref = check_consistency(s);
        if (ref.verdict != Verdict::Authentic) continue;
        // the extra line follows the same monotone law as the others
        const double amp = s[0].k1 / (0.05 + s[0].distance * s[0].distance);
        LineEstimate e;
        e.distance = d(rng);
        e.k1 = amp * (0.05 + e.distance * e.distance);
        e.converged = true;
        s.push_back(e);
        EXPECT_EQ(check_consistency(s).verdict, Verdict::Authentic);
        ++checked;
    }
    EXPECT_GT(checked, 200);
}

TEST(ConsistencyProperty, VerdictMatchesFlagsOnSignificantLines) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> d(-0.8, 0.8), k(-0.03, 0.06);
    for (int i = 0; i < 500; ++i) {
        std::vector<LineEstimate> s;
        for (int j = 0; j < i % 8; ++j) {
            LineEstimate e;
            e.distance = d(rng);
            e.k1 = k(rng);
            e.converged = true;
            s.push_back(e);
        }
        const auto rep = check_consistency(s);
        bool flagged_significant = false;
        std::size_t usable = 0, significant = 0;
        for (const auto& l : rep.lines) {
            if (l.flags && l.significant) flagged_significant = true;
            usable += l.usable;
            significant += l.usable && l.significant;
        }
        EXPECT_EQ(rep.verdict == Verdict::Spliced, flagged_significant);
        if (!flagged_significant) {
            EXPECT_EQ(rep.verdict == Verdict::Inconclusive, usable < 2 || significant < 2);
        }
    }
}

}  // namespace
