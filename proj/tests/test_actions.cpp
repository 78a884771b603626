#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "hypcrit/actions.hpp"
#include "hypcrit/sampling.hpp"

using namespace hypcrit;

namespace {

GroupAction schottky(double L) { return plane_action(schottky_pair(L), std::log(3.0), 3.0); }

// reduced words of length <= n, enumerated independently of the library
std::size_t brute_force_ball(int rank, std::size_t n) {
    std::set<std::string> seen{""};
    std::vector<std::string> level{""};
    for (std::size_t k = 0; k < n; ++k) {
        std::vector<std::string> next;
        for (const auto& w : level)
            for (int i = 0; i < rank; ++i)
                for (char c : {static_cast<char>('a' + i), static_cast<char>('A' + i)}) {
                    if (!w.empty() && (w.back() ^ 0x20) == c) continue;
                    next.push_back(w + c);
                }
        for (const auto& w : next) seen.insert(w);
        level = std::move(next);
    }
    return seen.size();
}

} // namespace

TEST(Certify, TreeAction) {
    auto a = certify(free_group_action(4, Rational(1)));
    EXPECT_EQ(a.certification, Certification::free_tree);
    EXPECT_EQ(a.systole_bound, 1.0);
}

TEST(Certify, SchottkyPingPong) {
    auto a = certify(schottky(4.0));
    EXPECT_EQ(a.certification, Certification::ping_pong);
    ASSERT_TRUE(a.ping_pong.has_value());
    EXPECT_GT(a.systole_bound, 0.5);
}

TEST(Certify, TinyTranslationFailsAtSystole) {
    auto a = plane_action({plane::Mat2::diag_translation(1.0 / 64)}, std::log(3.0), 3.0);
    try {
        certify(a);
        FAIL() << "expected CertificationError";
    } catch (const CertificationError& e) {
        EXPECT_NE(std::string(e.what()).find("systole below class threshold"), std::string::npos);
    }
}

TEST(Certify, EllipticGeneratorFailsClassification) {
    // trace 1: rotation by 2π/3 about i, displacement 0 would trip the systole first,
    // so conjugate it away from the basepoint
    plane::Mat2 r = plane::Mat2::rotation(2.0 * std::numbers::pi / 3.0);
    plane::Mat2 t = plane::Mat2::diag_translation(3.0);
    auto a = plane_action({t * r * t.inverse()}, std::log(3.0), 3.0);
    EXPECT_THROW(certify(a), ClassificationError);
}

TEST(Certify, ShortSchottkyPairIsRefused) {
    EXPECT_THROW(certify(schottky(1.0 / 64)), CertificationError);
}

TEST(Certify, SingleAxisGenerator) {
    auto a = certify(plane_action({plane::Mat2::diag_translation(2.0)}, std::log(3.0), 1.0));
    EXPECT_EQ(a.certification, Certification::elementary);
    EXPECT_NEAR(a.systole_bound, 2.0, 1e-9);
}

TEST(PlaneAction, RejectsBadDeterminant) {
    EXPECT_THROW(plane_action({plane::Mat2{2, 0, 0, 2}}, 0.0, 0.0), ArgumentError);
    EXPECT_THROW(plane_action({}, 0.0, 0.0), ArgumentError);
}

TEST(Enumerate, TreeCountsMatchBruteForce) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto ball = enumerate_orbit_ball(a, 8.0);
    for (const auto& [t, n] : ball.count_by_shell) {
        auto k = static_cast<std::size_t>(std::lround(t));
        EXPECT_EQ(n, brute_force_ball(2, k)) << "t=" << t;
        EXPECT_EQ(n, 2 * static_cast<std::size_t>(std::lround(std::pow(3.0, static_cast<double>(k)))) - 1);
    }
}

TEST(Enumerate, ValenceSixCounts) {
    auto a = certify(free_group_action(6, Rational(1)));
    auto ball = enumerate_orbit_ball(a, 5.0);
    EXPECT_EQ(ball.entries.size(), brute_force_ball(3, 5));
}

TEST(Enumerate, EdgeLengthScalesRadius) {
    auto a = certify(free_group_action(4, Rational(2)));
    EXPECT_EQ(enumerate_orbit_ball(a, 10.0).entries.size(), brute_force_ball(2, 5));
    EXPECT_EQ(enumerate_orbit_ball(a, 9.0).entries.size(), brute_force_ball(2, 4));
}

TEST(Enumerate, ThreadCountDoesNotChangeTheBall) {
    for (auto a : {certify(free_group_action(4, Rational(1))), certify(schottky(4.0))}) {
        Length T = a.space.kind == SpaceKind::tree ? 9.0 : 20.0;
        auto one = enumerate_orbit_ball(a, T);
        for (unsigned t : {4u, 8u}) {
            EnumerateOptions opt;
            opt.threads = t;
            auto many = enumerate_orbit_ball(a, T, opt);
            ASSERT_EQ(many.entries.size(), one.entries.size());
            EXPECT_EQ(many.count_by_shell, one.count_by_shell);
            for (std::size_t i = 0; i < one.entries.size(); ++i)
                EXPECT_EQ(many.entries[i].word, one.entries[i].word);
        }
    }
}

TEST(Enumerate, EntriesLieInTheBallAndAreComplete) {
    auto a = certify(schottky(4.0));
    auto ball = enumerate_orbit_ball(a, 16.0);
    std::set<std::string> keys;
    for (const auto& e : ball.entries) {
        EXPECT_LE(e.displacement, 16.0 + 1e-9);
        EXPECT_NEAR(e.displacement, a.displacement(a.element(e.word)), 1e-9);
        keys.insert(e.word.key());
    }
    EXPECT_EQ(keys.size(), ball.entries.size());
    // every short word landing in the ball is present
    detail::for_each_reduced_word(2, 4, [&](const Word& w) {
        if (a.displacement(a.element(w)) <= 16.0 - 1e-6) {
            EXPECT_TRUE(keys.count(w.key())) << w.str();
        }
    });
}

TEST(Enumerate, CountsAreMonotone) {
    auto ball = enumerate_orbit_ball(certify(schottky(4.0)), 20.0);
    for (std::size_t i = 1; i < ball.count_by_shell.size(); ++i)
        EXPECT_LE(ball.count_by_shell[i - 1].second, ball.count_by_shell[i].second);
}

TEST(Enumerate, NegativeRadiusIsRefused) {
    EXPECT_THROW(enumerate_orbit_ball(certify(free_group_action(4, Rational(1))), -1.0), ArgumentError);
}

TEST(SigmaR, SelectsByDisplacement) {
    auto ball = enumerate_orbit_ball(certify(free_group_action(4, Rational(1))), 4.0);
    EXPECT_EQ(sigma_R(ball, 1.0).size(), 5u);
    EXPECT_THROW(sigma_R(ball, 5.0), InsufficientData);
}

TEST(Generating, TreeAndSchottkyPass) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto r = check_generating(a, enumerate_orbit_ball(a, 6.0));
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.class_threshold, 1.0);

    auto s = certify(schottky(4.0));
    auto rs = check_generating(s, enumerate_orbit_ball(s, 20.0));
    EXPECT_TRUE(rs.pass);
    EXPECT_LT(rs.threshold, rs.class_threshold);
}

TEST(Generating, TooSmallStepFindsUnreachable) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto r = check_generating(a, enumerate_orbit_ball(a, 6.0), 0.5);
    EXPECT_FALSE(r.pass);
    ASSERT_TRUE(r.unreachable.has_value());
    EXPECT_EQ(r.unreachable->size(), 1u);
}

TEST(Systole, TreeAndSchottky) {
    auto a = certify(free_group_action(4, Rational(3, 2)));
    EXPECT_EQ(measure_systole(enumerate_orbit_ball(a, 6.0)).min_displacement, 1.5);
    auto s = certify(schottky(4.0));
    auto sys = measure_systole(enumerate_orbit_ball(s, 10.0));
    EXPECT_NEAR(sys.min_displacement, 4.0, 1e-9);
    EXPECT_GE(sys.min_displacement, s.systole_bound);
}

TEST(Systole, NeedsANonidentityElement) {
    auto a = certify(free_group_action(4, Rational(1)));
    EXPECT_THROW(measure_systole(enumerate_orbit_ball(a, 0.5)), InsufficientData);
}

TEST(WordMetric, TreeAtRadiusTwo) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto r = check_word_metric_comparison(a, enumerate_orbit_ball(a, 8.0), 2.0);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.lower_constant, 1.0);
    EXPECT_GE(r.worst_lower_ratio, 1.0);
    EXPECT_LE(r.worst_upper_ratio, 1.0);
}

TEST(WordMetric, RadiusBelowClassThresholdIsRefused) {
    auto a = certify(free_group_action(4, Rational(1)));
    EXPECT_THROW(check_word_metric_comparison(a, enumerate_orbit_ball(a, 4.0), 1.0), ArgumentError);
}

TEST(Codiameter, TreeNeverExceedsHalfEdge) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto ball = enumerate_orbit_ball(a, 6.0);
    Rng rng(31);
    std::vector<ModelPoint> samples;
    for (int i = 0; i < 500; ++i) samples.push_back(random_point(a.space, 4.0, rng));
    auto r = measure_codiameter(a, ball, samples);
    EXPECT_LE(r.value, 0.5 + 1e-12);
    EXPECT_GT(r.value, 0.4);
}
