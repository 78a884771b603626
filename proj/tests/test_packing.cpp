#include <gtest/gtest.h>

#include <cmath>

#include "hypcrit/audits.hpp"
#include "hypcrit/packing.hpp"
#include "hypcrit/sampling.hpp"

using namespace hypcrit;

namespace {

// subset enumeration oracles, independent of the branch-and-bound search
std::size_t brute_cov(const ModelSpace& s, const std::vector<ModelPoint>& Y, Length r) {
    std::size_t n = Y.size(), best = n;
    for (std::uint32_t m = 1; m < (1u << n); ++m) {
        auto k = static_cast<std::size_t>(__builtin_popcount(m));
        if (k >= best) continue;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            bool near = false;
            for (std::size_t j = 0; j < n && !near; ++j)
                if ((m >> j & 1u) && distance(s, Y[i], Y[j]) <= r + s.tolerance) near = true;
            ok = near;
        }
        if (ok) best = k;
    }
    return best;
}

std::size_t brute_pack(const ModelSpace& s, const std::vector<ModelPoint>& Y, Length r) {
    std::size_t n = Y.size(), best = 0;
    for (std::uint32_t m = 1; m < (1u << n); ++m) {
        auto k = static_cast<std::size_t>(__builtin_popcount(m));
        if (k <= best) continue;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i)
            for (std::size_t j = i + 1; j < n && ok; ++j)
                if ((m >> i & 1u) && (m >> j & 1u) && distance(s, Y[i], Y[j]) <= 2 * r) ok = false;
        if (ok) best = k;
    }
    return best;
}

std::vector<ModelPoint> sample(const ModelSpace& s, std::size_t n, Length R, Rng& rng) {
    std::vector<ModelPoint> Y;
    for (std::size_t i = 0; i < n; ++i) Y.push_back(random_point(s, R, rng));
    return Y;
}

} // namespace

TEST(Nets, EmptyInput) {
    auto s = ModelSpace::hyperbolic_plane();
    EXPECT_EQ(covering_number(s, {}, 1.0, NetMode::exact).value, 0u);
    EXPECT_EQ(packing_number(s, {}, 1.0, NetMode::greedy).value, 0u);
}

TEST(Nets, Refusals) {
    auto s = ModelSpace::hyperbolic_plane();
    Rng rng(1);
    EXPECT_THROW(covering_number(s, sample(s, 25, 3, rng), 1.0, NetMode::exact), ArgumentError);
    EXPECT_THROW(packing_number(s, sample(s, 25, 3, rng), 1.0, NetMode::exact), ArgumentError);
    EXPECT_THROW(covering_number(s, sample(s, 3, 3, rng), -1.0, NetMode::greedy), ArgumentError);
}

TEST(Nets, TreeSphereExample) {
    auto s = ModelSpace::tree(4, Rational(1));
    std::vector<ModelPoint> Y{TreePoint::parse_vertex("a"), TreePoint::parse_vertex("A"), TreePoint::parse_vertex("b"),
                              TreePoint::parse_vertex("B")};
    EXPECT_EQ(covering_number(s, Y, 1.0, NetMode::exact).value, 4u);
    EXPECT_EQ(covering_number(s, Y, 2.0, NetMode::exact).value, 1u);
    EXPECT_EQ(packing_number(s, Y, 0.5, NetMode::exact).value, 4u);
    EXPECT_EQ(packing_number(s, Y, 1.0, NetMode::exact).value, 1u);
}

class NetProperties : public ::testing::TestWithParam<SpaceKind> {
protected:
    ModelSpace space() const {
        return GetParam() == SpaceKind::tree ? ModelSpace::tree(4, Rational(1)) : ModelSpace::hyperbolic_plane();
    }
};

TEST_P(NetProperties, ExactMatchesBruteForce) {
    auto s = space();
    Rng rng(41);
    std::uniform_real_distribution<double> scale(0.1, 2.5);
    for (int i = 0; i < 150; ++i) {
        auto Y = sample(s, 3 + i % 8, 4.0, rng);
        double r = scale(rng);
        EXPECT_EQ(covering_number(s, Y, r, NetMode::exact).value, brute_cov(s, Y, r));
        EXPECT_EQ(packing_number(s, Y, r, NetMode::exact).value, brute_pack(s, Y, r));
    }
}

TEST_P(NetProperties, GreedyBracketsExact) {
    auto s = space();
    Rng rng(42);
    std::uniform_real_distribution<double> scale(0.1, 2.5);
    for (int i = 0; i < 150; ++i) {
        auto Y = sample(s, 4 + i % 16, 4.0, rng);
        double r = scale(rng);
        auto gc = covering_number(s, Y, r, NetMode::greedy), ec = covering_number(s, Y, r, NetMode::exact);
        auto gp = packing_number(s, Y, r, NetMode::greedy), ep = packing_number(s, Y, r, NetMode::exact);
        EXPECT_GE(gc.value, ec.value);
        EXPECT_LE(gp.value, ep.value);
    }
}

TEST_P(NetProperties, ChosenSetsAreValid) {
    auto s = space();
    Rng rng(43);
    for (int i = 0; i < 50; ++i) {
        auto Y = sample(s, 60, 5.0, rng);
        double r = 0.3 + 0.05 * i;
        auto cov = covering_number(s, Y, r, NetMode::greedy);
        for (const auto& y : Y) {
            bool near = false;
            for (auto c : cov.chosen) near = near || distance(s, y, Y[c]) <= r + s.tolerance;
            EXPECT_TRUE(near);
        }
        auto pack = packing_number(s, Y, r, NetMode::greedy);
        for (std::size_t a = 0; a < pack.chosen.size(); ++a)
            for (std::size_t b = a + 1; b < pack.chosen.size(); ++b)
                EXPECT_GT(distance(s, Y[pack.chosen[a]], Y[pack.chosen[b]]), 2 * r);
    }
}

TEST_P(NetProperties, PackCovChainOnRandomSubsets) {
    auto s = space();
    Rng rng(44);
    auto pool = sample(s, 300, 6.0, rng);
    BoundSuiteOptions opt;
    auto chain = check_pack_cov_chain(s, pool, opt);
    EXPECT_EQ(chain.configurations, 1000u);
    EXPECT_EQ(chain.violations, 0u) << chain.witness.value_or("");
    EXPECT_TRUE(chain.pass());
}

TEST_P(NetProperties, ExactIsMonotoneInRadius) {
    auto s = space();
    Rng rng(45);
    auto Y = sample(s, 14, 5.0, rng);
    std::size_t prev_cov = Y.size() + 1, prev_pack = Y.size() + 1;
    for (double r = 0.25; r <= 4.0; r += 0.25) {
        auto c = covering_number(s, Y, r, NetMode::exact).value;
        auto p = packing_number(s, Y, r, NetMode::exact).value;
        EXPECT_LE(c, prev_cov);
        EXPECT_LE(p, prev_pack);
        prev_cov = c;
        prev_pack = p;
    }
}

INSTANTIATE_TEST_SUITE_P(BothModels, NetProperties, ::testing::Values(SpaceKind::tree, SpaceKind::plane),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(BoundSuite, TreeHasNoViolations) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto ball = enumerate_orbit_ball(a, 10.0);
    auto rep = check_bound_suite(a, ball, std::log(3.0));
    for (const auto& c : rep.checks) {
        EXPECT_TRUE(c.pass()) << c.name << " " << c.witness.value_or("");
        EXPECT_GT(c.configurations, 0u) << c.name;
    }
    EXPECT_GE(rep.at("word_metric").configurations, 1000u);
    EXPECT_EQ(rep.at("pack_cov_chain").configurations, 1000u);
}

TEST(BoundSuite, LowEntropyFailsTheLowerBound) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto ball = enumerate_orbit_ball(a, 6.0);
    BoundSuiteOptions opt;
    opt.configurations = 10;
    auto rep = check_bound_suite(a, ball, 0.05, opt);
    EXPECT_FALSE(rep.at("entropy_lower_bound").pass());
    EXPECT_TRUE(rep.at("generating").pass());
}

TEST(PackingGrowthConstant, TreeAtEdgeScale) {
    auto a = certify(free_group_action(4, Rational(1)));
    auto ball = enumerate_orbit_ball(a, 6.0);
    // delta = 0, so the ball radius is 3r
    std::vector<ModelPoint> inner;
    for (const auto& e : ball.entries)
        if (e.displacement <= 3.0) inner.push_back(e.point);
    auto P = packing_growth_constant(a, ball, 1.0);
    EXPECT_EQ(P, packing_number(a.space, inner, 1.0, NetMode::greedy).value);
    EXPECT_GE(P, 1u);
}
