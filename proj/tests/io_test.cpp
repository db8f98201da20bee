#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include <gtest/gtest.h>

#include "dygauss/dygauss.hpp"

using namespace dygauss;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("dygauss_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir / name;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

ContingencyTable csv(const std::string& text, const std::vector<int>& levels = {}) {
  std::istringstream in(text);
  return parse_table_csv(in, levels);
}

}  // namespace

TEST(TableCsv, ParsesLongFormat) {
  const ContingencyTable t = csv("a,b,count\n0,0,5\n1,1,7\n0,1,2\n\n");
  EXPECT_EQ(t.schema().levels(), (std::vector<int>{2, 2}));
  EXPECT_EQ(t.counts(), (std::vector<std::int64_t>{5, 2, 0, 7}));
}

TEST(TableCsv, LevelsInferredOrOverridden) {
  EXPECT_EQ(csv("x,n\n2,1\n").schema().levels(), std::vector<int>{3});
  EXPECT_EQ(csv("x,n\n0,1\n").schema().levels(), std::vector<int>{2});
  EXPECT_EQ(csv("x,y,n\n0,0,1\n", {3, 2}).schema().num_cells(), 6);
  EXPECT_THROW(csv("x,y,n\n0,0,1\n", {3}), InputError);
  EXPECT_THROW(csv("x,n\n4,1\n", {3}), InputError);
}

TEST(TableCsv, RejectsMalformed) {
  EXPECT_THROW(csv(""), InputError);
  EXPECT_THROW(csv("count\n3\n"), InputError);
  EXPECT_THROW(csv("a,n\n0,1,2\n"), InputError);
  EXPECT_THROW(csv("a,n\n0,x\n"), InputError);
  EXPECT_THROW(csv("a,n\n0,-1\n"), InputError);
  EXPECT_THROW(csv("a,n\n-1,1\n"), InputError);
  EXPECT_THROW(csv("a,n\n0,1\n0,2\n"), InputError);
}

TEST(TableJson, RoundTripAndFileDispatch) {
  const ContingencyTable t(TableSchema({2, 3}), {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(table_from_json(table_to_json(t)).counts(), t.counts());
  const fs::path p = scratch("t.json");
  write(p, table_to_json(t).dump());
  EXPECT_EQ(read_table(p.string()).schema().levels(), (std::vector<int>{2, 3}));
  write(p, "{\"levels\": [2], \"counts\": [1]}");
  EXPECT_THROW(read_table(p.string()), InputError);
  write(p, "{\"levels\": [2, ");
  EXPECT_THROW(read_table(p.string()), InputError);
  EXPECT_THROW(read_table((p.parent_path() / "missing.csv").string()), InputError);
}

TEST(Prior, Parsing) {
  EXPECT_EQ(parse_prior("1").kind, PriorSpec::Kind::constant);
  EXPECT_DOUBLE_EQ(parse_prior(" 0.25 ").a, 0.25);
  EXPECT_EQ(parse_prior("1/d").kind, PriorSpec::Kind::one_over_d);
  EXPECT_THROW(parse_prior("0"), InputError);
  EXPECT_THROW(parse_prior("-2"), InputError);
  EXPECT_THROW(parse_prior("inf"), InputError);

  const DirichletParams b = parse_prior("1/d").resolve(8);
  EXPECT_DOUBLE_EQ(b[3], 1.0 / 7);
  EXPECT_EQ(parse_prior("1/d").label(), "1/d");
  EXPECT_EQ(parse_prior("0.5").label(), "0.5");
}

TEST(Prior, VectorFiles) {
  const fs::path a = scratch("prior.json"), b = scratch("prior.txt");
  write(a, "[1, 2, 3]");
  write(b, "0.5, 0.5\n1 2\n");
  EXPECT_EQ(parse_prior(a.string()).resolve(3).beta(), Vector::LinSpaced(3, 1, 3));
  EXPECT_EQ(parse_prior(b.string()).alpha.size(), 4);
  EXPECT_THROW(parse_prior(a.string()).resolve(4), InputError);
  write(b, "1 0\n");
  EXPECT_THROW(parse_prior(b.string()), InputError);
  write(b, "3\n");
  EXPECT_THROW(parse_prior(b.string()), InputError);
}

TEST(GaussianJson, RoundTrip) {
  const DirichletParams beta(Vector::LinSpaced(8, 1, 4));
  const GaussianApprox cs = optimal_gaussian(beta);
  const GaussianApprox back = gaussian_from_json(gaussian_to_json(cs));
  EXPECT_EQ(back.mean, cs.mean);
  EXPECT_EQ(back.dense_cov(), cs.dense_cov());

  const GaussianApprox dense = transform_gaussian(cs, corner_design(TableSchema::binary(3)));
  const GaussianApprox d2 = gaussian_from_json(gaussian_to_json(dense));
  EXPECT_EQ(d2.parametrization, DesignKind::corner);
  EXPECT_EQ(d2.labels, dense.labels);
  EXPECT_EQ(d2.dense_cov(), dense.dense_cov());

  json bad = gaussian_to_json(cs);
  bad["cov"]["type"] = "banded";
  EXPECT_THROW(gaussian_from_json(bad), InputError);
  EXPECT_THROW(gaussian_from_json(json::object()), InputError);
}

TEST(SampleBatchFiles, RoundTripBitExact) {
  const DirichletParams beta(Vector::LinSpaced(4, 0.5, 3));
  const DesignMatrix x = corner_design(TableSchema::binary(2));
  const SampleBatch s = mc_approx(beta, 50, 99, &x, 4);
  const fs::path p = scratch("draws.csv");
  write_sample_batch(s, beta, p.string());
  const SampleBatch r = read_sample_batch(p.string());
  EXPECT_EQ(r.draws, s.draws);
  EXPECT_EQ(r.seed, 99u);
  EXPECT_EQ(r.stream, 4u);
  EXPECT_EQ(r.labels, x.labels());
  EXPECT_EQ(r.parametrization, DesignKind::corner);
}

TEST(ReferenceGraph, ParsesIdsAndLetters) {
  std::istringstream in("# header\n0 1\nb,a\nc d  # trailing\n\n3 2\n1,4\n");
  const auto e = parse_reference_graph(in);
  EXPECT_EQ(e, (std::vector<Edge>{{0, 1}, {1, 4}, {2, 3}}));
  EXPECT_EQ(marginal_reference_edges(e, {1, 2, 4}), (std::vector<bool>{false, true, false}));
  EXPECT_EQ(marginal_reference_edges(e, {0, 1}), std::vector<bool>{true});

  std::istringstream loop("2 2\n"), three("0 1 2\n"), neg("0 -1\n");
  EXPECT_THROW(parse_reference_graph(loop), InputError);
  EXPECT_THROW(parse_reference_graph(three), InputError);
  EXPECT_THROW(parse_reference_graph(neg), InputError);
}

TEST(SelectionJson, CarriesLabels) {
  SelectionResult s;
  s.chosen = Vector::Zero(3);
  s.chosen[2] = 1.5;
  s.support = {2};
  s.alpha = 0.1;
  const json j = selection_to_json(s, {"01", "10", "11"});
  EXPECT_EQ(j.at("support"), json::array({"11"}));
  EXPECT_EQ(j.at("chosen")[2], 1.5);
  EXPECT_FALSE(selection_to_json(s).contains("labels"));
}
