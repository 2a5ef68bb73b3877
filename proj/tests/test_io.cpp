#include "fcreml/io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <functional>
#include <random>

namespace fcreml::io {
namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("fcreml_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return "";
}

TEST(FormatDouble, ShortestFormRoundTrips) {
  EXPECT_EQ(format_double(1.0), "1");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(-2.5e-300), "-2.5e-300");
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    double x;
    const std::uint64_t b = bits(rng);
    std::memcpy(&x, &b, sizeof x);
    if (!std::isfinite(x)) continue;
    const std::string s = format_double(x);
    EXPECT_EQ(parse_double(s, "t"), x) << s;
    EXPECT_LE(s.size(), 24u);
  }
}

TEST(ParseDouble, RejectsJunk) {
  EXPECT_THROW(parse_double("", "w"), ParseError);
  EXPECT_THROW(parse_double("1.5x", "w"), ParseError);
  EXPECT_THROW(parse_double("nan", "w"), ParseError);
  EXPECT_THROW(parse_double("inf", "w"), ParseError);
  EXPECT_EQ(parse_double(" 2.5\r", "w"), 2.5);
  EXPECT_EQ(parse_double("+3", "w"), 3.0);
}

TEST(RegionCsv, MinimalFileRoundTripsByteIdentically) {
  const std::string text = "voxel_id,x,y,z,t1,t2,t3\n7,1,2,3,0.1,-2.5,1e-300\n";
  const RegionData r = parse_region_csv(text, "a", "mem");
  ASSERT_EQ(r.voxels(), 1);
  ASSERT_EQ(r.timepoints(), 3);
  EXPECT_EQ(r.voxel_ids, std::vector<long long>{7});
  EXPECT_EQ(r.X(0, 2), 1e-300);
  EXPECT_EQ(region_csv(r), text);
}

TEST(RegionCsv, ErrorsNameTheLine) {
  const std::string head = "voxel_id,x,y,z,t1,t2\n";
  auto err = [&](const std::string& body) {
    return message_of([&] { parse_region_csv(head + body, "a", "f.csv"); });
  };
  EXPECT_NE(err("1,0,0,0,1,2\n2,0,0,1,1\n").find("f.csv:3: expected 6 fields, found 5"), std::string::npos);
  EXPECT_NE(err("1,0,0,0,1,2\n1,0,0,1,1,2\n").find("f.csv:3: duplicate voxel_id 1"), std::string::npos);
  EXPECT_NE(err("1,0,0,0,1,abc\n").find("f.csv:2"), std::string::npos);
  EXPECT_NE(err("x,0,0,0,1,2\n").find("not an integer"), std::string::npos);
  EXPECT_NE(message_of([] { parse_region_csv("voxel_id,x,y,q,t1\n", "a", "h.csv"); }).find("h.csv:1"),
            std::string::npos);
  EXPECT_NE(message_of([] { parse_region_csv("voxel_id,x,y,z,t1,t3\n", "a", "h.csv"); }).find("'t2'"),
            std::string::npos);
  EXPECT_THROW(parse_region_csv("", "a", "e.csv"), ParseError);
  EXPECT_THROW(parse_region_csv(head, "a", "e.csv"), ParseError);
}

TEST(RegionCsv, ToleratesCrlfAndTrailingBlankLine) {
  const RegionData r = parse_region_csv("voxel_id,x,y,z,t1\r\n4,0,1,2,5\r\n\r\n", "a", "m");
  EXPECT_EQ(r.voxels(), 1);
  EXPECT_EQ(r.X(0, 0), 5.0);
}

ModelConfig small_config() {
  ModelConfig c = preset_config("keta0.5-phi0.25");
  c.M = 12;
  c.L = 6;
  c.lattice_side = 3;
  c.seed = 17;
  return c;
}

TEST(Dataset, SimulatorOutputLoadsBackEqual) {
  const auto data = simulate_dataset(small_config(), 2);
  const fs::path dir = scratch_dir("sim");
  save_dataset(data, dir);
  for (const fs::path& p : {dir, dir / "manifest.json"}) {
    const auto back = load_dataset(p);
    ASSERT_EQ(back.size(), data.size());
    for (std::size_t j = 0; j < data.size(); ++j) {
      EXPECT_EQ(back[j].label, data[j].label);
      EXPECT_EQ(back[j].voxel_ids, data[j].voxel_ids);
      EXPECT_TRUE(back[j].coords == data[j].coords);
      EXPECT_TRUE(back[j].X == data[j].X);
    }
  }
  EXPECT_EQ(read_json(dir / "manifest.json").at("schema_version"), kSchemaVersion);
}

TEST(Dataset, MissingFileIsNamed) {
  const fs::path dir = scratch_dir("missing");
  write_json(dir / "manifest.json",
             {{"schema_version", 1}, {"regions", {{{"label", "a"}, {"file", "absent.csv"}}}}});
  const std::string msg = message_of([&] { load_dataset(dir); });
  EXPECT_NE(msg.find((dir / "absent.csv").string()), std::string::npos) << msg;
  EXPECT_NE(message_of([] { load_dataset("/nonexistent/dir"); }).find("/nonexistent/dir"), std::string::npos);
}

TEST(Dataset, MismatchedTimepointsAndLabelsAreRejected) {
  const fs::path dir = scratch_dir("mismatch");
  write_text(dir / "a.csv", "voxel_id,x,y,z,t1,t2\n0,0,0,0,1,2\n");
  write_text(dir / "b.csv", "voxel_id,x,y,z,t1\n0,0,0,0,1\n");
  write_json(dir / "manifest.json",
             {{"regions", {{{"label", "a"}, {"file", "a.csv"}}, {{"label", "b"}, {"file", "b.csv"}}}}});
  EXPECT_NE(message_of([&] { load_dataset(dir); }).find("has 1 timepoints, expected 2"), std::string::npos);
  write_json(dir / "manifest.json",
             {{"regions", {{{"label", "a"}, {"file", "a.csv"}}, {{"label", "a"}, {"file", "a.csv"}}}}});
  EXPECT_NE(message_of([&] { load_dataset(dir); }).find("duplicate region label"), std::string::npos);
}

TEST(ModelJson, RoundTripsAndRejectsUnknownKeys) {
  const ModelConfig c = small_config();
  const ModelConfig back = model_config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_TRUE(back.R == c.R);
  EXPECT_THROW(model_config_from_json({{"sigma", 1.0}}), ParseError);
  EXPECT_THROW(model_config_from_json({{"eta", {{"k_eta", 1.0}}}}), ParseError);
  // Partial overrides keep the base.
  const ModelConfig over = model_config_from_json({{"M", 8}}, c);
  EXPECT_EQ(over.M, 8);
  EXPECT_EQ(over.L, c.L);
  EXPECT_THROW(model_config_from_json({{"J", 2}}, c), std::invalid_argument);
}

TEST(RunConfigJson, UnknownKeysAndBadValuesRejected) {
  RunConfig c;
  EXPECT_THROW(apply_config_json(c, {{"kk", 3}}), ParseError);
  EXPECT_THROW(apply_config_json(c, {{"optimizer", "newton"}}), std::invalid_argument);
  apply_config_json(c, {{"K", 12}, {"q", 0.01}, {"mode", "fixed"}, {"se_mode", "marginal"}});
  EXPECT_EQ(c.K, 12);
  EXPECT_EQ(c.q, 0.01);
  EXPECT_EQ(c.mode, Stage2Mode::Fixed);
  EXPECT_EQ(c.se_mode, SeMode::Marginal);
  c.q = 1.5;
  EXPECT_THROW(validate(c), std::invalid_argument);
}

NetworkResult random_network(int J, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NetworkResult n;
  n.J = J;
  for (int j = 0; j < J; ++j) n.labels.push_back("n" + std::to_string(j));
  for (auto [j, k] : enumerate_pairs(J)) {
    PairRecord e;
    e.j = j;
    e.k = k;
    e.ok = u(rng) > 0.1;
    e.p = std::pow(u(rng), 6.0);
    e.rho_hat = 2.0 * u(rng) - 1.0;
    e.se = u(rng);
    e.z = u(rng);
    e.ci_lower = e.rho_hat - 0.1;
    e.ci_upper = e.rho_hat + 0.1;
    if (!e.ok) e.error = "failed";
    n.pairs.push_back(e);
  }
  n.q = 0.05;
  select_edges(n);
  return n;
}

TEST(NetworkJson, ReportReselectionMatchesByThreshold) {
  const NetworkResult n = random_network(12, 9);
  NetworkResult back = network_from_json(json::parse(to_json(n).dump()));
  EXPECT_EQ(edges_csv(back), edges_csv(n));
  back.q = 0.01;
  select_edges(back);
  std::vector<double> p;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n.pairs.size(); ++i)
    if (n.pairs[i].ok) {
      p.push_back(n.pairs[i].p);
      idx.push_back(i);
    }
  std::vector<bool> expected(n.pairs.size(), false);
  for (std::size_t s : by_threshold(p, 0.01)) expected[idx[s]] = true;
  for (std::size_t i = 0; i < n.pairs.size(); ++i) EXPECT_EQ(back.pairs[i].selected, expected[i]) << i;
}

TEST(Report, TablesAgreeWithTheNetwork) {
  const NetworkResult n = random_network(5, 10);
  const fs::path dir = scratch_dir("report");
  write_report(n, dir);
  const json r = read_json(dir / "report.json");
  EXPECT_EQ(r.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(r.at("edges").size(), n.pairs.size());
  const std::string adj = read_text(dir / "adjacency.csv");
  EXPECT_EQ(std::count(adj.begin(), adj.end(), '\n'), n.J + 1);
  const std::string nodes = read_text(dir / "nodes.csv");
  EXPECT_EQ(std::count(nodes.begin(), nodes.end(), '\n'), n.J + 1);
  for (int v = 0; v < n.J; ++v)
    EXPECT_EQ(r.at("nodes")[static_cast<std::size_t>(v)].at("node_degree"), n.node_degree[static_cast<std::size_t>(v)]);
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
}

}  // namespace
}  // namespace fcreml::io
