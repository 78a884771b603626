#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "hypcrit/models.hpp"
#include "hypcrit/sampling.hpp"

using namespace hypcrit;

TEST(Word, ParsesAndReduces) {
    EXPECT_EQ(Word::parse("abBa").str(), "aa");
    EXPECT_TRUE(Word::parse("aA").empty());
    EXPECT_TRUE(Word::parse("id").empty());
    EXPECT_EQ(Word::parse("ab").inverse().str(), "BA");
    EXPECT_THROW(Word::parse("a1"), ArgumentError);
}

TEST(Word, ProductCancels) {
    EXPECT_EQ((Word::parse("ab") * Word::parse("Bc")).str(), "ac");
    EXPECT_TRUE((Word::parse("abc") * Word::parse("abc").inverse()).empty());
}

TEST(Word, CyclicLength) {
    EXPECT_EQ(Word::parse("abA").cyclic_length(), 1u);
    EXPECT_EQ(Word::parse("ab").cyclic_length(), 2u);
    EXPECT_EQ(Word::parse("").cyclic_length(), 0u);
}

TEST(Rational, ArithmeticIsExact) {
    EXPECT_EQ(Rational(1, 3) + Rational(1, 6), Rational(1, 2));
    EXPECT_EQ(Rational(2, 4), Rational(1, 2));
    EXPECT_EQ(Rational(-3, 2).floor(), -2);
    EXPECT_LT(Rational(1, 3), Rational(1, 2));
    EXPECT_EQ(Rational::approximate(1.0 + std::ldexp(1.0, -6)), Rational(65, 64));
}

TEST(Classify, TraceRegimes) {
    EXPECT_EQ(classify(Isometry{plane::Mat2::diag_translation(1.0)}), IsometryType::hyperbolic);
    EXPECT_EQ(classify(Isometry{plane::Mat2::rotation(1.0)}), IsometryType::elliptic);
    EXPECT_EQ(classify(Isometry{plane::Mat2{1, 1, 0, 1}}), IsometryType::parabolic);
    EXPECT_EQ(classify(Isometry{plane::Mat2{}}), IsometryType::identity);
    EXPECT_EQ(classify(Isometry{Word::parse("ab")}), IsometryType::hyperbolic);
}

TEST(TranslationLength, PlaneDiagonal) {
    auto space = ModelSpace::hyperbolic_plane();
    EXPECT_NEAR(translation_length(space, Isometry{plane::Mat2::diag_translation(2.5)}), 2.5, 1e-12);
}

TEST(TranslationLength, TreeIsCyclicLengthTimesEdge) {
    auto space = ModelSpace::tree(4, Rational(3, 2));
    EXPECT_EQ(translation_length(space, Isometry{Word::parse("abA")}), 1.5);
    EXPECT_EQ(translation_length(space, Isometry{Word::parse("ab")}), 3.0);
}

TEST(TranslationLength, EllipticAndParabolicAreRefused) {
    auto space = ModelSpace::hyperbolic_plane();
    try {
        translation_length(space, Isometry{plane::Mat2{0.5, std::sqrt(0.75), -std::sqrt(0.75), 0.5}});
        FAIL() << "expected ClassificationError";
    } catch (const ClassificationError& e) {
        EXPECT_NE(std::string(e.what()).find("elliptic"), std::string::npos);
    }
    EXPECT_THROW(translation_length(space, Isometry{plane::Mat2{1, 1, 0, 1}}), ClassificationError);
}

TEST(TranslationLength, KindMismatch) {
    EXPECT_THROW(translation_length(ModelSpace::hyperbolic_plane(), Isometry{Word::parse("a")}), KindMismatch);
}

TEST(Apply, TreeTranslatesVertices) {
    auto p = hypcrit::apply(Isometry{Word::parse("a")}, ModelPoint{TreePoint::parse_vertex("Ab")});
    EXPECT_EQ(std::get<TreePoint>(p), TreePoint::parse_vertex("b"));
}

TEST(Apply, IsometriesPreserveDistance) {
    Rng rng(21);
    for (SpaceKind kind : {SpaceKind::tree, SpaceKind::plane}) {
        auto space = kind == SpaceKind::tree ? ModelSpace::tree(4, Rational(1)) : ModelSpace::hyperbolic_plane();
        auto gens = kind == SpaceKind::tree ? std::vector<Isometry>{Word::parse("a"), Word::parse("b")}
                                            : std::vector<Isometry>{schottky_pair(2.0)[0], schottky_pair(2.0)[1]};
        for (int i = 0; i < 300; ++i) {
            Isometry g = evaluate(random_word(rng, 2, 3), gens, kind);
            auto p = random_point(space, 4, rng), q = random_point(space, 4, rng);
            EXPECT_NEAR(distance(space, hypcrit::apply(g, p), hypcrit::apply(g, q)), distance(space, p, q), 1e-8);
        }
    }
}

TEST(Apply, ComposeAndInverse) {
    Isometry g = plane::Mat2::diag_translation(1.0), h = plane::Mat2::rotation(0.7);
    ModelPoint p = PlanePoint{0.2, 0.9};
    auto gh = hypcrit::apply(compose(g, h), p);
    auto seq = hypcrit::apply(g, hypcrit::apply(h, p));
    EXPECT_NEAR(plane::distance(std::get<PlanePoint>(gh), std::get<PlanePoint>(seq)), 0.0, 1e-12);
    auto back = hypcrit::apply(inverse(g), hypcrit::apply(g, p));
    EXPECT_NEAR(plane::distance(std::get<PlanePoint>(back), std::get<PlanePoint>(p)), 0.0, 1e-12);
}

TEST(SchottkyPair, GeneratorsTranslateByLength) {
    auto space = ModelSpace::hyperbolic_plane();
    for (const auto& m : schottky_pair(4.0)) EXPECT_NEAR(translation_length(space, Isometry{m}), 4.0, 1e-9);
}

TEST(PingPong, CertifiesLongSchottkyPair) {
    auto res = certify_ping_pong(SchottkyDescription::from_bisectors(schottky_pair(4.0)));
    ASSERT_TRUE(std::holds_alternative<PingPongCertificate>(res));
    const auto& cert = std::get<PingPongCertificate>(res);
    EXPECT_GT(cert.systole_lower_bound, 0.0);
    EXPECT_LE(cert.systole_lower_bound, 4.0);
    EXPECT_GT(cert.per_letter_gain, 0.0);
}

TEST(PingPong, RejectsShortPair) {
    auto res = certify_ping_pong(SchottkyDescription::from_bisectors(schottky_pair(1.0 / 64)));
    EXPECT_TRUE(std::holds_alternative<PingPongFailure>(res));
}

TEST(PingPong, CertificateBoundsWordDisplacement) {
    auto gens = schottky_pair(3.0);
    auto res = certify_ping_pong(SchottkyDescription::from_bisectors(gens));
    ASSERT_TRUE(std::holds_alternative<PingPongCertificate>(res));
    const auto& cert = std::get<PingPongCertificate>(res);
    std::vector<Isometry> iso{gens[0], gens[1]};
    Rng rng(22);
    for (int i = 0; i < 500; ++i) {
        std::size_t len = 1 + i % 6;
        Word w = random_word(rng, 2, len);
        auto m = std::get<plane::Mat2>(evaluate(w, iso, SpaceKind::plane));
        double d = plane::distance(PlanePoint{0, 1}, m.apply(PlanePoint{0, 1}));
        double bound = cert.first_letter_bound + static_cast<double>(w.size() - 1) * cert.per_letter_gain;
        EXPECT_GE(d + 1e-9, bound) << w.str();
    }
}
