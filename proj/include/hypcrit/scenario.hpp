#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "hypcrit/actions.hpp"
#include "hypcrit/errors.hpp"
#include "hypcrit/models.hpp"
#include "hypcrit/plane.hpp"
#include "hypcrit/rational.hpp"

namespace hypcrit {

using json = nlohmann::ordered_json;

class ScenarioError : public Error {
public:
    using Error::Error;
};

/// A parsed scenario document (schema 1). Experiment blocks are kept as JSON
/// and read by the command that uses them.
struct Scenario {
    std::string name;
    SpaceKind kind = SpaceKind::tree;
    int valence = 4;
    Rational edge = Rational(1);
    std::vector<plane::Mat2> matrices;
    Length delta = 0.0;
    Length codiameter = 0.0;
    bool unsafe = false;
    std::uint64_t seed = 1;
    json entropy;
    json boundary;
    json verify;
    json family;

    /// The (uncertified) action described by the model and generator blocks.
    GroupAction action() const {
        GroupAction a;
        if (kind == SpaceKind::tree) {
            a = free_group_action(valence, edge);
            a.declared_delta = delta;
            a.declared_codiameter = codiameter;
        } else {
            a = plane_action(matrices, delta, codiameter);
        }
        a.name = name;
        return a;
    }
};

namespace scenario_detail {

inline std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && issp(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && issp(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i);
}

inline std::int64_t parse_int(const std::string& s) {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        throw ScenarioError("not an integer: '" + s + "'");
    }
    if (used != s.size()) throw ScenarioError("not an integer: '" + s + "'");
    return v;
}

/// Exact value of "p/q", an integer, or a finite decimal literal.
inline Rational parse_rational(const std::string& text) {
    std::string s = trim(text);
    if (auto slash = s.find('/'); slash != std::string::npos)
        return Rational(parse_int(trim(s.substr(0, slash))), parse_int(trim(s.substr(slash + 1))));
    auto dot = s.find('.');
    if (dot == std::string::npos) return Rational(parse_int(s));
    std::string frac = s.substr(dot + 1);
    if (frac.size() > 17) throw ScenarioError("too many decimal digits: '" + s + "'");
    std::string whole = s.substr(0, dot);
    bool neg = !whole.empty() && whole[0] == '-';
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    std::int64_t w = whole.empty() || whole == "-" || whole == "+" ? 0 : parse_int(whole);
    std::int64_t f = frac.empty() ? 0 : parse_int(frac);
    Rational r = Rational(w) + Rational(f, den) * Rational(neg ? -1 : 1);
    return r;
}

inline Rational rational_value(const json& j, const std::string& what) {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number()) return Rational::approximate(j.get<double>());
    throw ScenarioError(what + " must be a number or a string");
}

/// A real: JSON number, decimal or "p/q" string, or "log3"-style logarithms.
inline double real_value(const json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (!j.is_string()) throw ScenarioError(what + " must be a number or a string");
    std::string s = trim(j.get<std::string>());
    std::string compact;
    for (char c : s)
        if (c != ' ') compact += c;
    for (const char* pre : {"log", "ln"}) {
        std::string p = pre;
        if (compact.rfind(p, 0) == 0) {
            std::string arg = compact.substr(p.size());
            if (!arg.empty() && arg.front() == '(' && arg.back() == ')') arg = arg.substr(1, arg.size() - 2);
            return std::log(parse_rational(arg).to_double());
        }
    }
    if (compact.find('/') != std::string::npos) return parse_rational(compact).to_double();
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(compact, &used);
    } catch (const std::exception&) {
        throw ScenarioError(what + ": cannot parse '" + s + "'");
    }
    if (used != compact.size()) throw ScenarioError(what + ": cannot parse '" + s + "'");
    return v;
}

inline const json& required(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw ScenarioError(where + ": missing field '" + key + "'");
    return j.at(key);
}

inline std::vector<plane::Mat2> parse_generators(const json& gens) {
    if (!gens.is_array() || gens.empty()) throw ScenarioError("generators must be a nonempty list");
    std::vector<plane::Mat2> out;
    for (const auto& g : gens) {
        if (g.is_array()) {
            if (g.size() != 4) throw ScenarioError("matrix generators are row-major 4-tuples");
            plane::Mat2 m{real_value(g[0], "matrix entry"), real_value(g[1], "matrix entry"),
                          real_value(g[2], "matrix entry"), real_value(g[3], "matrix entry")};
            out.push_back(m);
            continue;
        }
        std::string preset = required(g, "preset", "generator").get<std::string>();
        if (preset == "schottky_pair") {
            auto p = schottky_pair(real_value(required(g, "length", "schottky_pair"), "length"));
            out.insert(out.end(), p.begin(), p.end());
        } else if (preset == "translation") {
            out.push_back(plane::Mat2::diag_translation(real_value(required(g, "length", "translation"), "length")));
        } else if (preset == "rotation") {
            out.push_back(plane::Mat2::rotation(real_value(required(g, "angle", "rotation"), "angle")));
        } else {
            throw ScenarioError("unknown generator preset '" + preset + "'");
        }
    }
    return out;
}

} // namespace scenario_detail

inline Scenario parse_scenario(const json& doc) {
    using namespace scenario_detail;
    if (!doc.is_object()) throw ScenarioError("scenario must be a JSON object");
    if (!doc.contains("schema") || !doc["schema"].is_number_integer() || doc["schema"].get<int>() != 1)
        throw ScenarioError("unsupported scenario schema (expected \"schema\": 1)");
    Scenario s;
    s.name = required(doc, "name", "scenario").get<std::string>();
    const json& model = required(doc, "model", "scenario");
    std::string kind = required(model, "kind", "model").get<std::string>();
    if (kind == "tree") {
        s.kind = SpaceKind::tree;
        s.valence = model.value("valence", 4);
        if (model.contains("edge")) s.edge = rational_value(model["edge"], "edge");
        if (doc.contains("generators")) throw ScenarioError("tree generators are implied by the valence");
    } else if (kind == "plane") {
        s.kind = SpaceKind::plane;
        s.matrices = parse_generators(required(doc, "generators", "plane scenario"));
    } else {
        throw ScenarioError("unknown model kind '" + kind + "'");
    }
    const json& declared = required(doc, "declared", "scenario");
    s.delta = real_value(required(declared, "delta", "declared"), "delta");
    s.codiameter = real_value(required(declared, "codiameter", "declared"), "codiameter");
    s.unsafe = declared.value("unsafe", false);
    double expected = s.kind == SpaceKind::tree ? 0.0 : std::log(3.0);
    if (!s.unsafe && std::abs(s.delta - expected) > 1e-12)
        throw ScenarioError(std::string("declared delta must be ") + (s.kind == SpaceKind::tree ? "0" : "log 3") +
                            " for this model unless \"unsafe\": true");
    if (!(s.codiameter >= 0)) throw ScenarioError("codiameter must be nonnegative");
    const json& seed = required(doc, "seed", "scenario");
    if (!seed.is_number_unsigned()) throw ScenarioError("seed must be a nonnegative integer");
    s.seed = seed.get<std::uint64_t>();
    for (auto [key, field] : {std::pair{"entropy", &s.entropy}, std::pair{"boundary", &s.boundary},
                              std::pair{"verify", &s.verify}, std::pair{"family", &s.family}})
        if (doc.contains(key)) *field = doc[key];
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ScenarioError("scenario " + path + " is not valid JSON: " + e.what());
    }
    return parse_scenario(doc);
}

} // namespace hypcrit
