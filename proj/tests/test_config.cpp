#include <gtest/gtest.h>

#include <fstream>

#include "fbpsim/config.hpp"
#include "oracles.hpp"

using namespace fbpsim;

namespace {

Json minimal() {
    return Json::parse(R"({
        "grid": {"dim": 1, "extent": 1.0, "n": 31},
        "potential": {"kind": "doublewell", "k": 1.0},
        "graph": {"kind": "sign", "beta0": 0.1},
        "time": {"T_end": 1.0},
        "initial": {"kind": "constant", "value": 0.5}
    })");
}

std::vector<Violation> violations_of(const Json& doc) {
    try {
        config_from_json(doc);
    } catch (const ValidationError& e) {
        return e.violations();
    }
    return {};
}

bool has_key(const std::vector<Violation>& v, const std::string& key) {
    for (const auto& x : v)
        if (x.key == key) return true;
    return false;
}

}  // namespace

TEST(Config, MinimalDocumentGetsDefaults) {
    const auto c = config_from_json(minimal()).cfg;
    EXPECT_EQ(c.grid.dim, 1);
    EXPECT_EQ(c.grid.n[0], 31);
    EXPECT_EQ(c.scheme, Scheme::PicardImplicit);
    EXPECT_FALSE(c.tau.has_value());
    EXPECT_EQ(c.picard_tol, 1e-12);
    EXPECT_EQ(c.elliptic_tol, 1e-9);
    EXPECT_EQ(c.subsample, 1);
    EXPECT_EQ(c.M_rounds, 6);
    EXPECT_FALSE(c.M.has_value());
    EXPECT_EQ(c.boundary.kind, BoundarySpec::Kind::None);
    EXPECT_EQ(c.graph.name(), MonotoneGraph::scaled_sign(0.1).name());
    EXPECT_TRUE(c.diagnostics_energy && c.diagnostics_max_principle && c.diagnostics_zeta_star);
}

TEST(Config, EveryViolationIsListed) {
    Json d = minimal();
    d["grid"]["n"] = 1;
    d["potential"]["k"] = -1.0;
    d["graph"]["kind"] = "cone";
    d["time"]["T_end"] = "soon";
    d["bogus"] = 3;
    const auto v = violations_of(d);
    EXPECT_GE(v.size(), 5u);
    for (const char* k : {"grid.n", "potential.k", "graph.kind", "time.T_end", "bogus"}) EXPECT_TRUE(has_key(v, k)) << k;
}

TEST(Config, UnknownNestedKeyIsAViolation) {
    Json d = minimal();
    d["time"]["dt"] = 0.1;
    EXPECT_TRUE(has_key(violations_of(d), "time.dt"));
}

TEST(Config, TauAboveTheContractionBoundNamesIt) {
    Json d = minimal();
    d["time"]["tau"] = 10.0;
    const auto v = violations_of(d);
    ASSERT_TRUE(has_key(v, "time.tau"));
    bool named = false;
    for (const auto& x : v) named = named || x.rule.find("tau * L < 1") != std::string::npos;
    EXPECT_TRUE(named);
    // the semi-implicit scheme has no such bound
    d["time"]["scheme"] = "semi";
    EXPECT_TRUE(violations_of(d).empty());
}

TEST(Config, IntervalGraphMustContainZero) {
    Json d = minimal();
    d["graph"] = {{"kind", "interval"}, {"a", 0.1}, {"b", 0.5}};
    const auto v = violations_of(d);
    ASSERT_EQ(v.size(), 1u);
    EXPECT_EQ(v[0].key, "graph.a");
    EXPECT_NE(v[0].rule.find("0 in [a, b]"), std::string::npos);
}

TEST(Config, InitialValuesOutsideThePotentialDomainAreRejected) {
    Json d = minimal();
    d["potential"] = {{"kind", "log"}, {"theta", 0.3}};
    d["initial"]["value"] = 1.5;
    EXPECT_TRUE(has_key(violations_of(d), "initial"));
}

TEST(Config, BoundaryShapesAreChecked) {
    Json d = minimal();
    d["boundary"] = {{"kind", "uniform"}, {"times", {0.0, 1.0}}, {"values", {0.0}}};
    EXPECT_TRUE(has_key(violations_of(d), "boundary.values"));
    d["boundary"] = {{"kind", "uniform"}, {"times", {1.0, 0.0}}, {"values", {0.0, 0.1}}};
    EXPECT_TRUE(has_key(violations_of(d), "boundary.times"));
    d["boundary"] = {{"kind", "sides"}, {"times", {0.0}}, {"values", {{0.1, 0.2}}}};
    EXPECT_TRUE(violations_of(d).empty());
    d["grid"] = {{"dim", 2}, {"extent", {1.0, 1.0}}, {"n", {8, 8}}};
    EXPECT_TRUE(has_key(violations_of(d), "boundary.values"));
}

TEST(Config, ParseErrorCarriesLineAndColumn) {
    const std::string text = "{\n  \"grid\": {\"dim\": 1,\n  \"n\": }\n}";
    try {
        detail::parse_json_text(text, "broken.json");
        FAIL() << "no exception";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_EQ(e.column(), 8);
        EXPECT_NE(std::string(e.what()).find("broken.json:3:8"), std::string::npos);
    }
}

TEST(Config, OverridesApplyBeforeValidation) {
    const auto dir = oracle::temp_dir("config_overrides");
    {
        std::ofstream(dir / "s.json") << minimal().dump();
    }
    const auto a = parse_and_validate(dir / "s.json", {{"time.tau", 0.05}, {"graph.beta0", 0.3}});
    EXPECT_EQ(*a.cfg.tau, 0.05);
    EXPECT_EQ(a.raw["graph"]["beta0"], 0.3);
    EXPECT_EQ(a.base_dir, std::filesystem::absolute(dir));
    EXPECT_THROW(parse_and_validate(dir / "s.json", {{"grid.n", 0}}), ValidationError);
    EXPECT_THROW(parse_and_validate(dir / "missing.json"), IoError);
}

TEST(Config, SetDottedCreatesIntermediateObjects) {
    Json d = Json::object();
    set_dotted(d, "a.b.c", 2);
    EXPECT_EQ(d["a"]["b"]["c"], 2);
    EXPECT_THROW(set_dotted(d, "a..c", 1), DomainError);
}

TEST(Config, ExpressionInitialEvaluatesAtNodes) {
    Json d = minimal();
    d["initial"] = {{"kind", "expression"}, {"expr", "0.5 + 0.25*sin(pi*x) - exp(-x)*0 + cos(0)/4"}};
    const auto c = config_from_json(d).cfg;
    const Field u = initial_field(c, c.grid.make());
    for (int k = 0; k < u.size(); ++k) {
        const double x = (k + 1) / 32.0;
        EXPECT_NEAR(u[k], 0.75 + 0.25 * std::sin(std::numbers::pi * x), 1e-15);
    }
}

TEST(Config, ExpressionGrammarErrorsAreViolations) {
    for (const char* bad : {"x +", "sin(x", "2 ** x", "z", "x^2"}) {
        Json d = minimal();
        d["initial"] = {{"kind", "expression"}, {"expr", bad}};
        EXPECT_TRUE(has_key(violations_of(d), "initial.expr")) << bad;
    }
}

TEST(Expression, PrecedenceAndUnaryMinus) {
    EXPECT_DOUBLE_EQ(Expression::parse("1 + 2*3")(0), 7.0);
    EXPECT_DOUBLE_EQ(Expression::parse("(1 + 2)*3")(0), 9.0);
    EXPECT_DOUBLE_EQ(Expression::parse("-x*2 + y")(1.5, 4.0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("8/4/2")(0), 1.0);
    EXPECT_DOUBLE_EQ(Expression::parse("1e-1 * 10")(0), 1.0);
}

TEST(Config, CsvInitialReadsTheUColumn) {
    const auto dir = oracle::temp_dir("config_csv");
    {
        std::ofstream f(dir / "u0.csv");
        f << "x,u\n";
        for (int i = 0; i < 31; ++i) f << (i + 1) / 32.0 << "," << 0.4 + 0.001 * i << "\n";
    }
    Json d = minimal();
    d["initial"] = {{"kind", "csv"}, {"path", "u0.csv"}};
    const auto c = config_from_json(d, dir).cfg;
    ASSERT_EQ(c.initial.values.size(), 31u);
    EXPECT_DOUBLE_EQ(c.initial.values[30], 0.43);

    d["grid"]["n"] = 30;
    try {
        config_from_json(d, dir);
        FAIL() << "row count mismatch accepted";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.violations().at(0).key, "initial.path");
    }
    d["grid"]["n"] = 31;
    d["initial"]["path"] = "nope.csv";
    try {
        config_from_json(d, dir);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.violations().at(0).key, "initial.path");
    }
}

TEST(Config, PhysicalBlockIsAppliedOnce) {
    Json d = minimal();
    d["grid"]["extent"] = 2.0;
    d["time"]["T_end"] = 4.0;
    d["graph"] = {{"kind", "interval"}, {"a", -0.05}, {"b", 0.05}};
    d["physical"] = {{"alpha", 2.0}, {"m", 2.0}};  // T0 = 2, L0 = 2
    const auto c = config_from_json(d).cfg;
    EXPECT_DOUBLE_EQ(c.grid.extent[0], 1.0);
    EXPECT_DOUBLE_EQ(c.T_end, 2.0);
    const auto& iv = std::get<graph::IndicatorInterval>(c.graph.variant());
    EXPECT_DOUBLE_EQ(iv.b, 0.1);
    ASSERT_TRUE(c.physical.has_value());
    EXPECT_EQ(c.physical->alpha, 2.0);
    d["physical"]["m"] = 0.0;
    EXPECT_TRUE(has_key(violations_of(d), "physical.m"));
}

TEST(Config, BundledScenariosAllValidate) {
    for (const auto& e : std::filesystem::recursive_directory_iterator(FBPSIM_SCENARIOS)) {
        if (e.path().extension() != ".json" || e.path().parent_path().filename() == "experiments") continue;
        EXPECT_NO_THROW(parse_and_validate(e.path())) << e.path();
    }
}
