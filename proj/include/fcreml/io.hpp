#ifndef FCREML_IO_HPP
#define FCREML_IO_HPP

#include "fcreml/network.hpp"
#include "fcreml/simulator.hpp"

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace fcreml::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

/// Malformed input file; the message names the file and line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(where + ": '" + std::string(s) + "' is not a finite number");
  }
  return v;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      std::string_view cell = line.substr(start, i - start);
      while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      out.push_back(cell);
      start = i + 1;
    }
  }
  return out;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

inline json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------- region CSV

inline std::string region_csv(const RegionData& r) {
  const Index L = r.voxels(), M = r.timepoints();
  detail::require(r.coords.rows() == L, "coords and signals disagree on the voxel count");
  detail::require(r.voxel_ids.empty() || static_cast<Index>(r.voxel_ids.size()) == L,
                  "voxel ids and signals disagree on the voxel count");
  std::string out = "voxel_id,x,y,z";
  for (Index m = 1; m <= M; ++m) out += ",t" + std::to_string(m);
  out += "\n";
  for (Index l = 0; l < L; ++l) {
    out += std::to_string(r.voxel_ids.empty() ? static_cast<long long>(l) : r.voxel_ids[static_cast<size_t>(l)]);
    for (int c = 0; c < 3; ++c) out += "," + format_double(r.coords(l, c));
    for (Index m = 0; m < M; ++m) out += "," + format_double(r.X(l, m));
    out += "\n";
  }
  return out;
}

inline RegionData parse_region_csv(const std::string& text, const std::string& label, const std::string& name) {
  std::vector<std::string_view> lines;
  std::string_view rest(text);
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    lines.push_back(rest.substr(0, nl));
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  while (!lines.empty() && split_csv_line(lines.back()) == std::vector<std::string_view>{""}) lines.pop_back();
  if (lines.empty()) throw ParseError(name + ": empty file");

  const auto header = split_csv_line(lines[0]);
  const char* fixed[] = {"voxel_id", "x", "y", "z"};
  if (header.size() < 5) throw ParseError(name + ":1: header needs voxel_id,x,y,z and at least one t column");
  for (std::size_t c = 0; c < 4; ++c)
    if (header[c] != fixed[c]) throw ParseError(name + ":1: expected column '" + fixed[c] + "', found '" + std::string(header[c]) + "'");
  const std::size_t M = header.size() - 4;
  for (std::size_t m = 0; m < M; ++m)
    if (header[4 + m] != "t" + std::to_string(m + 1))
      throw ParseError(name + ":1: expected column 't" + std::to_string(m + 1) + "', found '" + std::string(header[4 + m]) + "'");

  RegionData r;
  r.label = label;
  const std::size_t L = lines.size() - 1;
  if (L == 0) throw ParseError(name + ": no voxel rows");
  r.coords.resize(static_cast<Index>(L), 3);
  r.X.resize(static_cast<Index>(L), static_cast<Index>(M));
  std::set<long long> seen;
  for (std::size_t l = 0; l < L; ++l) {
    const std::string where = name + ":" + std::to_string(l + 2);
    const auto cells = split_csv_line(lines[l + 1]);
    if (cells.size() != M + 4)
      throw ParseError(where + ": expected " + std::to_string(M + 4) + " fields, found " + std::to_string(cells.size()));
    long long id = 0;
    const auto res = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), id);
    if (cells[0].empty() || res.ec != std::errc() || res.ptr != cells[0].data() + cells[0].size())
      throw ParseError(where + ": voxel_id '" + std::string(cells[0]) + "' is not an integer");
    if (!seen.insert(id).second) throw ParseError(where + ": duplicate voxel_id " + std::to_string(id));
    r.voxel_ids.push_back(id);
    for (int c = 0; c < 3; ++c) r.coords(static_cast<Index>(l), c) = parse_double(cells[1 + static_cast<size_t>(c)], where);
    for (std::size_t m = 0; m < M; ++m)
      r.X(static_cast<Index>(l), static_cast<Index>(m)) = parse_double(cells[4 + m], where);
  }
  return r;
}

inline RegionData read_region_csv(const fs::path& path, const std::string& label) {
  if (!fs::exists(path)) throw std::runtime_error("region file not found: '" + path.string() + "'");
  return parse_region_csv(read_text(path), label, path.string());
}

// ----------------------------------------------------------------- datasets

inline fs::path manifest_path(const fs::path& p) { return fs::is_directory(p) ? p / "manifest.json" : p; }

/// Writes manifest.json plus one CSV per region into `dir`.
inline void save_dataset(const std::vector<RegionData>& regions, const fs::path& dir, const json& extra = json::object()) {
  detail::require(!regions.empty(), "dataset has no regions");
  json manifest = {{"schema_version", kSchemaVersion}, {"kind", "dataset"}};
  manifest["M"] = regions.front().timepoints();
  json list = json::array();
  for (std::size_t j = 0; j < regions.size(); ++j) {
    detail::require(regions[j].timepoints() == regions.front().timepoints(), "regions disagree on M");
    const std::string file = "region_" + std::to_string(j + 1) + ".csv";
    write_text(dir / file, region_csv(regions[j]));
    list.push_back({{"label", regions[j].label}, {"file", file}});
  }
  manifest["regions"] = list;
  for (const auto& [k, v] : extra.items()) manifest[k] = v;
  write_json(dir / "manifest.json", manifest);
}

/// Reads a dataset from its directory or manifest path.
inline std::vector<RegionData> load_dataset(const fs::path& path) {
  const fs::path mpath = manifest_path(path);
  if (!fs::exists(mpath)) throw std::runtime_error("manifest not found: '" + mpath.string() + "'");
  const json manifest = read_json(mpath);
  if (!manifest.contains("regions") || !manifest["regions"].is_array() || manifest["regions"].empty())
    throw ParseError(mpath.string() + ": 'regions' must be a non-empty array");
  std::vector<RegionData> out;
  std::set<std::string> labels;
  for (const json& entry : manifest["regions"]) {
    if (!entry.contains("label") || !entry.contains("file") || !entry["label"].is_string() || !entry["file"].is_string())
      throw ParseError(mpath.string() + ": each region needs string 'label' and 'file'");
    const std::string label = entry["label"];
    if (!labels.insert(label).second) throw ParseError(mpath.string() + ": duplicate region label '" + label + "'");
    out.push_back(read_region_csv(mpath.parent_path() / entry["file"].get<std::string>(), label));
    if (out.back().timepoints() != out.front().timepoints())
      throw ParseError("region '" + label + "' has " + std::to_string(out.back().timepoints()) +
                       " timepoints, expected " + std::to_string(out.front().timepoints()));
  }
  if (manifest.contains("M") && manifest["M"].get<Index>() != out.front().timepoints())
    throw ParseError(mpath.string() + ": manifest M does not match the region files");
  return out;
}

// ------------------------------------------------------------ JSON mappings

inline json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline VectorXd vector_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

inline json to_json(const RegionTheta& t) {
  return {{"phi_gamma", t.phi_gamma}, {"k_gamma_ratio", t.k_gamma_ratio}, {"tau_gamma", t.tau_gamma}};
}

inline json to_json(const PairTheta& t) {
  json out = json::object();
  const VectorXd v = t.to_vector();
  for (int i = 0; i < 10; ++i) out[theta_names()[static_cast<size_t>(i)]] = v(i);
  return out;
}

/// Rejects keys outside `allowed`.
inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ParseError(where + ": unknown key '" + k + "'");
}

inline json to_json(const ModelConfig& c) {
  json regions = json::array();
  for (const RegionTheta& t : c.regions) regions.push_back(to_json(t));
  json R = json::array();
  for (Index i = 0; i < c.R.rows(); ++i) R.push_back(vector_json(c.R.row(i).transpose()));
  return {{"J", c.J},
          {"mu", vector_json(c.mu)},
          {"R", R},
          {"eta", {{"k_eta_ratio", c.eta.k_eta_ratio}, {"tau_eta", c.eta.tau_eta}, {"nugget_ratio", c.eta.nugget_ratio}}},
          {"regions", regions},
          {"sigma2", c.sigma2},
          {"M", c.M},
          {"L", c.L},
          {"lattice_side", c.lattice_side},
          {"seed", c.seed},
          {"labels", c.labels}};
}

inline ModelConfig model_config_from_json(const json& j, ModelConfig c = {}) {
  check_keys(j, {"J", "mu", "R", "eta", "regions", "sigma2", "M", "L", "lattice_side", "seed", "labels"}, "model");
  try {
    if (j.contains("J")) c.J = j["J"].get<int>();
    if (j.contains("mu")) c.mu = vector_from_json(j["mu"]);
    if (j.contains("R")) {
      const auto rows = j["R"].get<std::vector<std::vector<double>>>();
      c.R.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.size()));
      for (std::size_t a = 0; a < rows.size(); ++a) {
        if (rows[a].size() != rows.size()) throw ParseError("model.R must be square");
        for (std::size_t b = 0; b < rows.size(); ++b) c.R(static_cast<Index>(a), static_cast<Index>(b)) = rows[a][b];
      }
    }
    if (j.contains("eta")) {
      check_keys(j["eta"], {"k_eta_ratio", "tau_eta", "nugget_ratio"}, "model.eta");
      c.eta.k_eta_ratio = j["eta"].value("k_eta_ratio", c.eta.k_eta_ratio);
      c.eta.tau_eta = j["eta"].value("tau_eta", c.eta.tau_eta);
      c.eta.nugget_ratio = j["eta"].value("nugget_ratio", c.eta.nugget_ratio);
    }
    if (j.contains("regions")) {
      c.regions.clear();
      for (const json& r : j["regions"]) {
        check_keys(r, {"phi_gamma", "k_gamma_ratio", "tau_gamma"}, "model.regions[]");
        RegionTheta t;
        t.phi_gamma = r.value("phi_gamma", t.phi_gamma);
        t.k_gamma_ratio = r.value("k_gamma_ratio", t.k_gamma_ratio);
        t.tau_gamma = r.value("tau_gamma", t.tau_gamma);
        c.regions.push_back(t);
      }
    }
    if (j.contains("sigma2")) c.sigma2 = j["sigma2"].get<double>();
    if (j.contains("M")) c.M = j["M"].get<int>();
    if (j.contains("L")) c.L = j["L"].get<int>();
    if (j.contains("lattice_side")) c.lattice_side = j["lattice_side"].get<int>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("labels")) c.labels = j["labels"].get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
  fcreml::validate(c);
  return c;
}

inline json to_json(const Stage1Fit& f) {
  return {{"theta", to_json(f.theta)},
          {"sigma2_hat", f.sigma2_hat},
          {"v_hat", vector_json(f.v_hat)},
          {"nu_hat", vector_json(f.nu_hat)},
          {"objective", f.objective},
          {"initial_objective", f.initial_objective},
          {"iterations", f.iterations},
          {"evaluations", f.evaluations},
          {"status", to_string(f.status)},
          {"clamped_eigenvalues", f.clamped_eigenvalues}};
}

inline json to_json(const Stage2Fit& f) {
  return {{"theta", to_json(f.theta)},
          {"initial_theta", to_json(f.initial_theta)},
          {"mu_hat", vector_json(f.mu_hat)},
          {"sigma2_hat", f.sigma2_hat},
          {"sigma2_init", f.sigma2_init},
          {"objective", f.objective},
          {"initial_objective", f.initial_objective},
          {"iterations", f.iterations},
          {"evaluations", f.evaluations},
          {"status", to_string(f.status)},
          {"mode", to_string(f.mode)},
          {"rho_on_boundary", f.rho_on_boundary}};
}

inline json to_json(const PairInference& p) {
  return {{"rho_hat", p.rho_hat}, {"se", p.se_rho},          {"se_z", p.se_z},
          {"z", p.z_score},       {"p", p.p_value},          {"ci", {p.ci_lower, p.ci_upper}},
          {"alpha", p.alpha},     {"se_mode", to_string(p.mode)}};
}

inline json to_json(const PairRecord& e, const std::vector<std::string>& labels) {
  json out = {{"j", e.j},
              {"k", e.k},
              {"label_j", labels[static_cast<size_t>(e.j)]},
              {"label_k", labels[static_cast<size_t>(e.k)]},
              {"ok", e.ok},
              {"selected", e.selected}};
  if (!e.ok) {
    out["error"] = e.error;
    return out;
  }
  out.update({{"rho_hat", e.rho_hat},
              {"se", e.se},
              {"z", e.z},
              {"p", e.p},
              {"ci", {e.ci_lower, e.ci_upper}},
              {"ca", e.ca},
              {"fe", e.fe},
              {"status", to_string(e.status)},
              {"rho_on_boundary", e.rho_on_boundary},
              {"swapped", e.swapped},
              {"fit", to_json(e.fit)}});
  return out;
}

inline json to_json(const NetworkResult& n) {
  json regions = json::array();
  for (const RegionRecord& r : n.regions) {
    json x = {{"label", r.label}, {"ok", r.ok}};
    if (r.ok) x["fit"] = to_json(r.fit);
    else x["error"] = r.error;
    regions.push_back(x);
  }
  json pairs = json::array();
  for (const PairRecord& e : n.pairs) pairs.push_back(to_json(e, n.labels));
  return {{"schema_version", kSchemaVersion},
          {"kind", "network"},
          {"J", n.J},
          {"labels", n.labels},
          {"q", n.q},
          {"regions", regions},
          {"pairs", pairs},
          {"node_degree", n.node_degree},
          {"fcs", n.fcs}};
}

/// Pair-level fields of a stored network; per-pair fits are not restored.
inline NetworkResult network_from_json(const json& j) {
  try {
    if (j.value("kind", "") != "network") throw ParseError("not a network artifact");
    NetworkResult n;
    n.J = j.at("J").get<int>();
    n.labels = j.at("labels").get<std::vector<std::string>>();
    n.q = j.at("q").get<double>();
    if (static_cast<int>(n.labels.size()) != n.J) throw ParseError("labels must have J entries");
    for (const json& p : j.at("pairs")) {
      PairRecord e;
      e.j = p.at("j").get<int>();
      e.k = p.at("k").get<int>();
      e.ok = p.at("ok").get<bool>();
      e.selected = p.value("selected", false);
      if (e.ok) {
        e.rho_hat = p.at("rho_hat").get<double>();
        e.se = p.at("se").get<double>();
        e.z = p.at("z").get<double>();
        e.p = p.at("p").get<double>();
        e.ci_lower = p.at("ci").at(0).get<double>();
        e.ci_upper = p.at("ci").at(1).get<double>();
        e.ca = p.at("ca").get<double>();
        e.fe = p.at("fe").get<double>();
        e.rho_on_boundary = p.value("rho_on_boundary", false);
      } else {
        e.error = p.value("error", "");
      }
      n.pairs.push_back(e);
    }
    summarize(n);
    return n;
  } catch (const json::exception& e) {
    throw ParseError(std::string("network: ") + e.what());
  }
}

// ------------------------------------------------------------------ reports

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

inline std::string edges_csv(const NetworkResult& n) {
  std::string out = "region_j,region_k,ok,rho_hat,se,z,p,ci_lower,ci_upper,ca,fe,selected\n";
  for (const PairRecord& e : n.pairs) {
    out += csv_field(n.labels[static_cast<size_t>(e.j)]) + "," + csv_field(n.labels[static_cast<size_t>(e.k)]) + "," +
           (e.ok ? "1" : "0");
    for (double v : {e.rho_hat, e.se, e.z, e.p, e.ci_lower, e.ci_upper, e.ca, e.fe}) out += "," + (e.ok ? format_double(v) : "");
    out += std::string(",") + (e.selected ? "1" : "0") + "\n";
  }
  return out;
}

/// J x J matrix of rho_hat on selected edges, zero elsewhere.
inline std::string adjacency_csv(const NetworkResult& n) {
  MatrixXd A = MatrixXd::Zero(n.J, n.J);
  for (const PairRecord& e : n.pairs)
    if (e.selected) A(e.j, e.k) = A(e.k, e.j) = e.rho_hat;
  std::string out = "region";
  for (const auto& l : n.labels) out += "," + csv_field(l);
  out += "\n";
  for (int a = 0; a < n.J; ++a) {
    out += csv_field(n.labels[static_cast<size_t>(a)]);
    for (int b = 0; b < n.J; ++b) out += "," + format_double(A(a, b));
    out += "\n";
  }
  return out;
}

inline std::string nodes_csv(const NetworkResult& n) {
  std::string out = "region,node_degree,fcs\n";
  for (int a = 0; a < n.J; ++a) {
    const auto ua = static_cast<size_t>(a);
    out += csv_field(n.labels[ua]) + "," + std::to_string(n.node_degree[ua]) + "," + format_double(n.fcs[ua]) + "\n";
  }
  return out;
}

inline json report_json(const NetworkResult& n) {
  json edges = json::array();
  for (const PairRecord& e : n.pairs) {
    json x = {{"region_j", n.labels[static_cast<size_t>(e.j)]},
              {"region_k", n.labels[static_cast<size_t>(e.k)]},
              {"ok", e.ok},
              {"selected", e.selected}};
    if (e.ok)
      x.update({{"rho_hat", e.rho_hat}, {"se", e.se}, {"z", e.z}, {"p", e.p}, {"ci", {e.ci_lower, e.ci_upper}},
                {"ca", e.ca}, {"fe", e.fe}});
    edges.push_back(x);
  }
  json nodes = json::array();
  for (int a = 0; a < n.J; ++a)
    nodes.push_back({{"region", n.labels[static_cast<size_t>(a)]},
                     {"node_degree", n.node_degree[static_cast<size_t>(a)]},
                     {"fcs", n.fcs[static_cast<size_t>(a)]}});
  return {{"schema_version", kSchemaVersion}, {"kind", "report"}, {"q", n.q}, {"edges", edges}, {"nodes", nodes}};
}

inline void write_report(const NetworkResult& n, const fs::path& dir) {
  write_text(dir / "edges.csv", edges_csv(n));
  write_text(dir / "adjacency.csv", adjacency_csv(n));
  write_text(dir / "nodes.csv", nodes_csv(n));
  write_json(dir / "report.json", report_json(n));
}

// --------------------------------------------------------------- run config

struct RunConfig {
  std::string data;                // dataset directory or manifest
  std::string network;             // stored network JSON for `report`
  std::string output_dir = ".";
  std::string preset = "paper-s4";
  json model = json::object();     // overrides on top of the preset for `simulate`
  std::uint64_t seed = 1;
  std::uint64_t replicate = 0;
  std::vector<std::string> regions;
  int K = 30;
  OptimizerKind optimizer = OptimizerKind::TrustRegion;
  Stage2Mode mode = Stage2Mode::Refine;
  PairLikelihood likelihood = PairLikelihood::Structured;
  SeMode se_mode = SeMode::FullInverse;
  double q = 0.05;
  double alpha = 0.05;
  int workers = 0;
  bool allow_duplicate_voxels = false;
};

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "trust-region") return OptimizerKind::TrustRegion;
  if (s == "quasi-newton") return OptimizerKind::QuasiNewton;
  throw std::invalid_argument("unknown optimizer '" + s + "'");
}

inline Stage2Mode stage2_mode_from_string(const std::string& s) {
  if (s == "refine") return Stage2Mode::Refine;
  if (s == "fixed") return Stage2Mode::Fixed;
  throw std::invalid_argument("unknown stage-2 mode '" + s + "'");
}

inline PairLikelihood likelihood_from_string(const std::string& s) {
  for (auto p : {PairLikelihood::Structured, PairLikelihood::Schur, PairLikelihood::Dense})
    if (s == to_string(p)) return p;
  throw std::invalid_argument("unknown likelihood path '" + s + "'");
}

inline void validate(const RunConfig& c) {
  detail::require(c.K >= 4, "K must be at least 4");
  detail::require(c.q > 0.0 && c.q < 1.0, "q must lie in (0, 1)");
  detail::require(c.alpha > 0.0 && c.alpha < 1.0, "alpha must lie in (0, 1)");
  detail::require(c.workers >= 0, "workers must be non-negative");
  detail::require(!c.output_dir.empty(), "output directory must be non-empty");
}

/// Applies a JSON config file on top of `c`; unknown keys are rejected.
inline void apply_config_json(RunConfig& c, const json& j) {
  check_keys(j,
             {"data", "network", "output_dir", "preset", "model", "seed", "replicate", "regions", "K", "optimizer",
              "mode", "likelihood", "se_mode", "q", "alpha", "workers", "allow_duplicate_voxels"},
             "config");
  try {
    if (j.contains("data")) c.data = j["data"].get<std::string>();
    if (j.contains("network")) c.network = j["network"].get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("preset")) c.preset = j["preset"].get<std::string>();
    if (j.contains("model")) c.model = j["model"];
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("replicate")) c.replicate = j["replicate"].get<std::uint64_t>();
    if (j.contains("regions")) c.regions = j["regions"].get<std::vector<std::string>>();
    if (j.contains("K")) c.K = j["K"].get<int>();
    if (j.contains("optimizer")) c.optimizer = optimizer_from_string(j["optimizer"].get<std::string>());
    if (j.contains("mode")) c.mode = stage2_mode_from_string(j["mode"].get<std::string>());
    if (j.contains("likelihood")) c.likelihood = likelihood_from_string(j["likelihood"].get<std::string>());
    if (j.contains("se_mode")) c.se_mode = se_mode_from_string(j["se_mode"].get<std::string>());
    if (j.contains("q")) c.q = j["q"].get<double>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("workers")) c.workers = j["workers"].get<int>();
    if (j.contains("allow_duplicate_voxels")) c.allow_duplicate_voxels = j["allow_duplicate_voxels"].get<bool>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
}

inline json to_json(const RunConfig& c) {
  return {{"data", c.data},
          {"network", c.network},
          {"preset", c.preset},
          {"model", c.model},
          {"seed", c.seed},
          {"replicate", c.replicate},
          {"regions", c.regions},
          {"K", c.K},
          {"optimizer", to_string(c.optimizer)},
          {"mode", to_string(c.mode)},
          {"likelihood", to_string(c.likelihood)},
          {"se_mode", to_string(c.se_mode)},
          {"q", c.q},
          {"alpha", c.alpha},
          {"allow_duplicate_voxels", c.allow_duplicate_voxels}};
}

inline NetworkOptions network_options(const RunConfig& c) {
  NetworkOptions o;
  o.stage1.K = c.K;
  o.stage1.optimizer.kind = c.optimizer;
  o.stage1.allow_duplicate_voxels = c.allow_duplicate_voxels;
  o.stage2.mode = c.mode;
  o.stage2.likelihood = c.likelihood;
  o.stage2.optimizer.kind = c.optimizer;
  o.stage2.allow_duplicate_voxels = c.allow_duplicate_voxels;
  o.inference.mode = c.se_mode;
  o.inference.alpha = c.alpha;
  o.q = c.q;
  o.workers = c.workers;
  return o;
}

}  // namespace fcreml::io

#endif  // FCREML_IO_HPP
