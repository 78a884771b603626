#include <gtest/gtest.h>

#include <cmath>

#include "hypcrit/boundary.hpp"
#include "hypcrit/lemmas.hpp"

using namespace hypcrit;

namespace {

const double log3 = std::log(3.0);

} // namespace

TEST(InequalityCheck, RecordsFirstViolation) {
    InequalityCheck c{"demo", 1.0, 0.1};
    c.record(0.5, "a");
    c.record(1.05, "b");
    EXPECT_TRUE(c.pass());
    c.record(1.2, "c");
    c.record(1.5, "d");
    EXPECT_FALSE(c.pass());
    EXPECT_EQ(c.configurations, 4u);
    EXPECT_EQ(c.violations, 2u);
    EXPECT_EQ(c.witness.value_or(""), "c");
    EXPECT_DOUBLE_EQ(c.max_defect(), 0.5);
}

TEST(InequalityReport, LookupAndVerdict) {
    InequalityCheck ok{"ok", 0.0, 0.0}, bad{"bad", 0.0, 0.0};
    ok.record(0.0, "");
    bad.record(1.0, "x");
    InequalityReport rep{{ok}};
    EXPECT_TRUE(rep.pass());
    rep.checks.push_back(bad);
    EXPECT_FALSE(rep.pass());
    EXPECT_EQ(rep.at("bad").violations, 1u);
    EXPECT_THROW(rep.at("missing"), ArgumentError);
}

TEST(GeodesicLemmas, SeedIsReproducible) {
    LemmaSampling plan;
    plan.configurations = 200;
    auto a = check_geodesic_lemmas(ModelSpace::hyperbolic_plane(), log3, plan);
    auto b = check_geodesic_lemmas(ModelSpace::hyperbolic_plane(), log3, plan);
    for (std::size_t i = 0; i < a.checks.size(); ++i) EXPECT_EQ(a.checks[i].max_value, b.checks[i].max_value);
}

TEST(GeodesicLemmas, TreeWithLongerEdges) {
    auto rep = check_geodesic_lemmas(ModelSpace::tree(6, Rational(3, 2)), 0.0);
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass()) << c.name << " " << c.witness.value_or("");
}

TEST(GeodesicLemmas, PlaneDefectsStayWellBelowTheirConstants) {
    auto rep = check_geodesic_lemmas(ModelSpace::hyperbolic_plane(), log3);
    // the insize of an ideal triangle is log 3, a quarter of the constant
    EXPECT_LE(rep.at("thin_triangles").max_value, log3 + 1e-7);
    EXPECT_LT(rep.at("thin_triangles").max_value, rep.at("thin_triangles").constant / 3);
}

TEST(CylinderPackCov, CountsDistinctPrefixes) {
    auto s = ModelSpace::tree(4, Rational(1));
    std::vector<TreeEnd> C{TreeEnd{Word::parse("abab")}, TreeEnd{Word::parse("abba")}, TreeEnd{Word::parse("aBab")},
                           TreeEnd{Word::parse("BBBB")}};
    // open balls at the root are cylinders one level below log(1/rho)
    auto r0 = tree_cylinder_pack_cov(s, C, 1.0);
    EXPECT_EQ(r0.cov, 2u);
    EXPECT_EQ(r0.pack_star, 2u);
    auto r1 = tree_cylinder_pack_cov(s, C, std::exp(-1.0));
    EXPECT_EQ(r1.cov, 3u);
    EXPECT_THROW(tree_cylinder_pack_cov(s, C, std::exp(-4.0)), InsufficientData);
}

TEST(FinitePackCov, PackStarNeverExceedsCov) {
    Rng rng(61);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int k = 0; k < 200; ++k) {
        std::size_t n = 3 + k % 10;
        std::vector<std::vector<double>> P(n, std::vector<double>(n, 0.0));
        for (std::size_t i = 0; i < n; ++i) {
            P[i][i] = 100.0;
            for (std::size_t j = i + 1; j < n; ++j) P[i][j] = P[j][i] = u(rng);
        }
        auto r = lemma_detail::finite_pack_cov(P, 1.5);
        EXPECT_LE(r.pack_star, r.cov);
        EXPECT_GE(r.pack_star, 1u);
    }
}

TEST(ShadowBallLemma, Tree) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto ball = enumerate_orbit_ball(a, 10.0);
    auto rep = check_shadow_ball_lemma(a, limit_set_sample(a, ball, 10.0));
    for (const auto& c : rep.checks) {
        EXPECT_TRUE(c.pass()) << c.name << " " << c.witness.value_or("");
        EXPECT_GT(c.configurations, 0u) << c.name;
    }
    EXPECT_GE(rep.at("pack_star_le_cov").configurations, 1000u);
}

TEST(ShadowBallLemma, Schottky) {
    auto a = certify(plane_action(schottky_pair(4.0), log3, 3.0));
    auto ball = enumerate_orbit_ball(a, 24.0);
    auto rep = check_shadow_ball_lemma(a, limit_set_sample(a, ball, 12.0));
    for (const auto& c : rep.checks) EXPECT_TRUE(c.pass()) << c.name << " " << c.witness.value_or("");
}

TEST(ShadowBallLemma, NeedsTwoEnds) {
    auto a = certify(free_group_action(4, Rational(1)));
    EXPECT_THROW(check_shadow_ball_lemma(a, {TreeEnd{Word::parse("ab")}}), ArgumentError);
}
