#include <cstdlib>

#include <gtest/gtest.h>

#include "vlfq/ensemble.hpp"
#include "vlfq/io.hpp"
#include "vlfq/kidecomp.hpp"

using namespace vlfq;
using io::Json;

namespace {

ErrorKind kind_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::InternalConsistency;
}

}  // namespace

TEST(Writer, SeventeenDigits) {
  EXPECT_EQ(io::detail::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(io::detail::format_double(1.0), "1");
  EXPECT_EQ(io::detail::format_double(-0.0), "0");
  const std::string s = io::dump(Json{{"x", 1.0 / 3.0}, {"n", 3}, {"v", Json::array({0.5, 0.25})}});
  EXPECT_NE(s.find("0.33333333333333331"), std::string::npos);
  EXPECT_NE(s.find("\"n\": 3"), std::string::npos);
  EXPECT_NE(s.find("[0.5, 0.25]"), std::string::npos);
}

TEST(Ensembles, RoundTripIsExact) {
  for (const auto& name : fixture_names()) {
    const auto e = fixture(name);
    const auto text = io::dump(io::ensemble_to_json(e));
    const auto back = io::ensemble_from_json(io::parse_text(text));
    ASSERT_EQ(back.size(), e.size());
    EXPECT_EQ(back.labels, e.labels);
    EXPECT_EQ(back.probs, e.probs);
    for (std::size_t i = 0; i < e.size(); ++i) EXPECT_EQ(back.states[i], e.states[i]) << name;
    EXPECT_EQ(io::dump(io::ensemble_to_json(back)), text);
  }
}

TEST(Ensembles, ReaderErrors) {
  EXPECT_EQ(kind_of([] { io::parse_text("{\"dim\": "); }), ErrorKind::ParseError);

  Json j = io::ensemble_to_json(fixture("E3"));
  j["comment"] = "x";
  EXPECT_EQ(kind_of([&] { io::ensemble_from_json(j); }), ErrorKind::ParseError);
  EXPECT_NO_THROW(io::ensemble_from_json(j, true));

  j = io::ensemble_to_json(fixture("E3"));
  j["letters"][0]["state"][1].erase(1);
  EXPECT_EQ(kind_of([&] { io::ensemble_from_json(j); }), ErrorKind::BadShape);

  j = io::ensemble_to_json(fixture("E3"));
  j["letters"][0]["state"][0][0] = Json::array({1.0});
  EXPECT_EQ(kind_of([&] { io::ensemble_from_json(j); }), ErrorKind::BadShape);

  j = io::ensemble_to_json(fixture("E3"));
  j["letters"][1].erase("prob");
  EXPECT_EQ(kind_of([&] { io::ensemble_from_json(j); }), ErrorKind::ParseError);

  j = io::ensemble_to_json(fixture("E3"));
  j["letters"] = Json::array();
  EXPECT_EQ(kind_of([&] { io::ensemble_from_json(j); }), ErrorKind::EmptyInput);

  EXPECT_EQ(kind_of([] { io::load_ensemble("/nonexistent/e.json"); }), ErrorKind::IoError);
}

TEST(Decompositions, ExportImport) {
  const auto e = fixture("E5");
  const auto d = ki_decompose(e);
  const auto j = io::decomposition_to_json(d);
  const auto back = io::decomposition_from_json(io::parse_text(io::dump(j)));
  ASSERT_EQ(back.blocks.size(), d.blocks.size());
  for (std::size_t l = 0; l < d.blocks.size(); ++l) {
    EXPECT_EQ(back.blocks[l].isometry, d.blocks[l].isometry);
    EXPECT_EQ(back.blocks[l].p_il, d.blocks[l].p_il);
    for (std::size_t i = 0; i < e.size(); ++i)
      EXPECT_EQ(back.blocks[l].rho_j_il[i].has_value(), d.blocks[l].rho_j_il[i].has_value());
  }
  EXPECT_TRUE(verify(back, e).passed());
  EXPECT_TRUE(back.report.passed());
  EXPECT_EQ(io::dump(io::decomposition_to_json(back)), io::dump(j));
}

TEST(Decompositions, ImportRejectsWrongShapes) {
  Json j = io::decomposition_to_json(ki_decompose(fixture("E6")));
  j["blocks"][0]["dim_k"] = 3;
  EXPECT_EQ(kind_of([&] { io::decomposition_from_json(j); }), ErrorKind::BadShape);
}
