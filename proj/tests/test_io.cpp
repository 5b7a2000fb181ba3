#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "oracles.hpp"
#include "stegcap/cli.hpp"
#include "stegcap/io/csv.hpp"
#include "stegcap/io/serialize.hpp"

using namespace stegcap;
using namespace stegcap::io;

namespace {

std::string random_field(oracle::Gen& g) {
  static const std::string alphabet = "ab,\"\n\r x1.-";
  std::string s;
  const auto len = g.integer(0, 8);
  for (std::size_t i = 0; i < len; ++i) s += alphabet[g.integer(0, alphabet.size() - 1)];
  return s;
}

}  // namespace

TEST(Csv, RoundTripsArbitraryFields) {
  oracle::Gen g(31);
  for (int trial = 0; trial < 300; ++trial) {
    CsvTable t;
    const auto cols = g.integer(1, 5);
    for (std::size_t c = 0; c < cols; ++c) t.header.push_back("h" + std::to_string(c));
    for (std::size_t r = 0, rows = g.integer(0, 6); r < rows; ++r) {
      CsvRecord rec;
      for (std::size_t c = 0; c < cols; ++c) rec.fields.push_back(random_field(g));
      // A single empty field is indistinguishable from a blank line.
      if (cols == 1 && rec.fields[0].empty()) rec.fields[0] = "x";
      t.rows.push_back(rec);
    }
    std::stringstream ss;
    write_csv(ss, t);
    const auto back = read_csv(ss);
    ASSERT_EQ(back.header, t.header);
    ASSERT_EQ(back.rows.size(), t.rows.size()) << ss.str();
    for (std::size_t r = 0; r < t.rows.size(); ++r) EXPECT_EQ(back.rows[r].fields, t.rows[r].fields);
  }
}

TEST(Csv, AcceptsCrlfAndReportsLines) {
  std::istringstream is("a,b\r\n1,\"x\r\ny\"\r\n\r\n3,4\r\n");
  const auto t = read_csv(is);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].fields[1], "x\r\ny");
  EXPECT_EQ(t.rows[0].line, 2u);
  EXPECT_EQ(t.rows[1].line, 5u);
}

TEST(Csv, MalformedInput) {
  std::istringstream unterminated("a,b\n1,\"oops\n");
  EXPECT_THROW(read_csv(unterminated), SchemaError);
  std::istringstream stray("a,b\n1,x\"y\n");
  try {
    read_csv(stray);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.column(), 2u);
  }
}

TEST(Csv, DoublesRoundTripExactly) {
  oracle::Gen g(4);
  for (int i = 0; i < 2000; ++i) {
    const double x = g.normal() * std::pow(10.0, g.uniform(-300, 300));
    EXPECT_EQ(parse_double(format_double(x)), x);
  }
  EXPECT_EQ(parse_double(format_double(std::numeric_limits<double>::denorm_min())),
            std::numeric_limits<double>::denorm_min());
  EXPECT_THROW(parse_double("1.5x", 3, 4), SchemaError);
  EXPECT_THROW(parse_double("", 3, 4), SchemaError);
}

TEST(Json, ModelRoundTrip) {
  oracle::Gen g(8);
  const std::vector<GaussianModel> models{
      GaussianModel::centered(5, cov::ScaledIdentity{2.0}, 1.5),
      GaussianModel(g.vector(4), cov::Ar1Toeplitz{1.1, -0.3}),
      GaussianModel(g.vector(3), cov::Dense{g.spd(3)}),
  };
  for (const auto& m : models) {
    const auto back = model_from_json(Json::parse(to_json(m).dump()));
    EXPECT_EQ(back.mean(), m.mean());
    EXPECT_EQ(to_dense(back.covariance(), back.dim()), to_dense(m.covariance(), m.dim()));
    EXPECT_EQ(back.covariance().index(), m.covariance().index());
  }
}

TEST(Json, ModelSchemaErrors) {
  EXPECT_THROW(model_from_json(Json::parse(R"({"covariance":{"type":"scaled_identity","sigma2":1}})")), SchemaError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"dim":2,"covariance":{"type":"wavelet"}})")), SchemaError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"dim":2,"mean":[1],"covariance":{"type":"scaled_identity","sigma2":1}})")),
               SchemaError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"dim":2,"covariance":{"type":"dense","matrix":[[1,0]]}})")),
               SchemaError);
  EXPECT_THROW(model_from_json(Json::parse(R"({"dim":1,"covariance":{"type":"scaled_identity","sigma2":-1}})")),
               NotPositiveDefinite);
}

TEST(Json, GibbsSpecRoundTrip) {
  const auto j = Json::parse(R"({
    "sites": ["a", "b", "c"],
    "neighbors": [[1], [0], []],
    "cliques": [[0, 1], [2]],
    "alphabet": [-1, 0, 1],
    "potential_form": "absolute",
    "potentials": [
      {"mean": [0, 0.5], "covariance": [[1, 0.2], [0.2, 1]]},
      {"mean": [1], "covariance": [[2]]}
    ]})");
  const auto f = gibbs_from_json(j);
  EXPECT_EQ(f.spec.alphabet.size(), 3u);
  EXPECT_EQ(f.potential.form, gibbs::PotentialForm::AbsoluteDeviation);
  EXPECT_EQ(f.spec.temperature, 1.0);
  const auto again = gibbs_from_json(Json::parse(to_json(f).dump()));
  EXPECT_EQ(to_json(again), to_json(f));
}

TEST(Json, ReportsEmbedTheirInputs) {
  DetectionExperiment e{GaussianModel::centered(2, cov::ScaledIdentity{1}), 0.3, std::nullopt, 10, 42, 1};
  const auto j = to_json(e);
  EXPECT_EQ(j["seed"], 42);
  EXPECT_TRUE(j["grid"].is_null());
  const auto r = to_json(max_embedding_rate(CapacityQuery::from_epsilon(0.1, 100)), std::log(2.0));
  EXPECT_NEAR(r["rate_total"].get<double>(), 1.4075782043669633 / std::log(2.0), 1e-12);
}

TEST(PublishedPoints, ReadWriteRoundTrip) {
  const std::vector<cli::PublishedPoint> pts{{"A, with comma", "SRM", 0.1, 0.4, "tag \"q\""},
                                             {"B", "maxSRMd2", 0.4, 0.2, ""}};
  std::stringstream ss;
  cli::write_published_points(ss, pts);
  const auto back = cli::read_published_points(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].method, pts[0].method);
  EXPECT_EQ(back[0].source, pts[0].source);
  EXPECT_EQ(back[1].payload_bpp, 0.4);
}

TEST(PublishedPoints, SchemaErrorsNameLineAndColumn) {
  auto error_at = [](const std::string& text) -> std::pair<std::size_t, std::size_t> {
    std::istringstream is(text);
    try {
      cli::read_published_points(is);
    } catch (const SchemaError& e) {
      return {e.line(), e.column()};
    }
    return {0, 0};
  };
  const std::string h = "method,steganalyzer,payload_bpp,pe,source\n";
  EXPECT_EQ(error_at(h + "A,SRM,0.1,0.4,x\nB,SRM,abc,0.3,x\n"), std::make_pair(std::size_t{3}, std::size_t{3}));
  EXPECT_EQ(error_at(h + "A,SRM,0.1,0.7,x\n"), std::make_pair(std::size_t{2}, std::size_t{4}));
  EXPECT_EQ(error_at(h + "A,SRM,-0.1,0.2,x\n"), std::make_pair(std::size_t{2}, std::size_t{3}));
  EXPECT_EQ(error_at(h + "A,SRM,0.1\n").first, 2u);
  EXPECT_EQ(error_at("method,payload\nA,1\n").first, 1u);
  EXPECT_EQ(error_at("").first, 1u);
  std::istringstream only_header(h);
  EXPECT_TRUE(cli::read_published_points(only_header).empty());
}

TEST(RateCurves, CsvRoundTripsExactly) {
  const auto rows = cli::rate_vs_n_rows({0.1, 0.2}, cli::log_grid(100, 1'000'000, 10));
  std::stringstream ss;
  write_csv(ss, cli::rate_vs_n_table(rows));
  const auto back = cli::rate_vs_n_from_table(read_csv(ss));
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].n, rows[i].n);
    EXPECT_EQ(back[i].rate_nats, rows[i].rate_nats);
    EXPECT_EQ(back[i].a_lower, rows[i].a_lower);
  }
}

TEST(RateCurves, LogGrid) {
  const auto g = cli::log_grid(100, 1'000'000, 20);
  EXPECT_EQ(g.front(), 100u);
  EXPECT_EQ(g.back(), 1'000'000u);
  EXPECT_EQ(g.size(), 81u);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
  EXPECT_EQ(cli::log_grid(5, 5, 3), std::vector<std::size_t>{5});
  EXPECT_THROW(cli::log_grid(0, 5, 3), DomainError);
}
