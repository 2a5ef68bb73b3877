#include "fcreml/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

using fcreml::io::json;
namespace fs = std::filesystem;
namespace io = fcreml::io;

// Flags left unset keep whatever the config file or environment supplied.
struct Flags {
  std::optional<std::string> config, data, network, out, preset, model;
  std::optional<std::uint64_t> seed, replicate;
  std::vector<std::string> regions;
  std::optional<int> K, workers;
  std::optional<std::string> optimizer, mode, likelihood, se_mode;
  std::optional<double> q, alpha;
  bool allow_duplicates = false;
};

int env_int(const char* name) {
  const char* v = std::getenv(name);
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != std::string(v).size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string(name) + " must be an integer, got '" + v + "'");
  }
}

io::RunConfig resolve(const Flags& f) {
  io::RunConfig c;
  if (f.config) io::apply_config_json(c, io::read_json(*f.config));
  if (std::getenv("FCREML_WORKERS")) c.workers = env_int("FCREML_WORKERS");
  if (const char* d = std::getenv("FCREML_OUTPUT_DIR")) c.output_dir = d;
  if (f.data) c.data = *f.data;
  if (f.network) c.network = *f.network;
  if (f.out) c.output_dir = *f.out;
  if (f.preset) c.preset = *f.preset;
  if (f.model) c.model = io::read_json(*f.model);
  if (f.seed) c.seed = *f.seed;
  if (f.replicate) c.replicate = *f.replicate;
  if (!f.regions.empty()) c.regions = f.regions;
  if (f.K) c.K = *f.K;
  if (f.workers) c.workers = *f.workers;
  if (f.optimizer) c.optimizer = io::optimizer_from_string(*f.optimizer);
  if (f.mode) c.mode = io::stage2_mode_from_string(*f.mode);
  if (f.likelihood) c.likelihood = io::likelihood_from_string(*f.likelihood);
  if (f.se_mode) c.se_mode = fcreml::se_mode_from_string(*f.se_mode);
  if (f.q) c.q = *f.q;
  if (f.alpha) c.alpha = *f.alpha;
  if (f.allow_duplicates) c.allow_duplicate_voxels = true;
  io::validate(c);
  return c;
}

std::vector<fcreml::RegionData> load(const io::RunConfig& c) {
  if (c.data.empty()) throw std::invalid_argument("--data is required");
  return io::load_dataset(c.data);
}

const fcreml::RegionData& find_region(const std::vector<fcreml::RegionData>& data, const std::string& label) {
  for (const auto& r : data)
    if (r.label == label) return r;
  throw std::invalid_argument("no region labelled '" + label + "' in the dataset");
}

json envelope(const std::string& kind, const io::RunConfig& c) {
  return {{"schema_version", io::kSchemaVersion}, {"kind", kind}, {"config", io::to_json(c)}};
}

void announce(const fs::path& p) { std::cout << p.string() << "\n"; }

void run_simulate(const io::RunConfig& c) {
  fcreml::ModelConfig model = io::model_config_from_json(c.model, fcreml::preset_config(c.preset));
  model.seed = c.seed;
  const auto data = fcreml::simulate_dataset(model, c.replicate);
  io::save_dataset(data, c.output_dir,
                   {{"model", io::to_json(model)}, {"preset", c.preset}, {"replicate", c.replicate}});
  announce(fs::path(c.output_dir) / "manifest.json");
}

void run_fit_region(const io::RunConfig& c) {
  const auto data = load(c);
  const fcreml::NetworkOptions opts = io::network_options(c);
  std::vector<const fcreml::RegionData*> chosen;
  if (c.regions.empty())
    for (const auto& r : data) chosen.push_back(&r);
  else
    for (const auto& l : c.regions) chosen.push_back(&find_region(data, l));
  const auto fits = fcreml::parallel_map(chosen.size(), opts.workers > 0 ? opts.workers : fcreml::default_workers(),
                                         [&](std::size_t i) { return fcreml::fit_region(*chosen[i], opts.stage1); });
  json out = envelope("region_fits", c);
  out["regions"] = json::array();
  for (std::size_t i = 0; i < chosen.size(); ++i)
    out["regions"].push_back({{"label", chosen[i]->label}, {"fit", io::to_json(fits[i])}});
  const fs::path path = fs::path(c.output_dir) / "regions.json";
  io::write_json(path, out);
  announce(path);
}

void run_fit_pair(const io::RunConfig& c) {
  if (c.regions.size() != 2) throw std::invalid_argument("fit-pair needs exactly two --region labels");
  if (c.regions[0] == c.regions[1]) throw std::invalid_argument("fit-pair needs two distinct regions");
  const auto data = load(c);
  const auto& a = find_region(data, c.regions[0]);
  const auto& b = find_region(data, c.regions[1]);
  const fcreml::NetworkOptions opts = io::network_options(c);
  const auto f1 = fcreml::fit_region(a, opts.stage1);
  const auto f2 = fcreml::fit_region(b, opts.stage1);
  const auto fit = fcreml::fit_pair(a, b, f1, f2, opts.stage2);
  const auto inf = fcreml::infer_pair(fit, a.coords, b.coords, a.timepoints(), opts.inference,
                                      opts.stage2.allow_duplicate_voxels);
  json out = envelope("pair_fit", c);
  out["regions"] = {a.label, b.label};
  out.update(io::to_json(inf));
  out["ca"] = fcreml::corr_of_averages(a.X, b.X);
  out["fe"] = fcreml::fe_correlation(f1.nu_hat, f2.nu_hat);
  out["stage2"] = io::to_json(fit);
  out["stage1"] = {io::to_json(f1), io::to_json(f2)};
  const fs::path path = fs::path(c.output_dir) / "pair.json";
  io::write_json(path, out);
  announce(path);
}

void run_fit_network(const io::RunConfig& c) {
  const auto data = load(c);
  const fcreml::NetworkResult net = fcreml::fit_network(data, io::network_options(c));
  json out = io::to_json(net);
  out["config"] = io::to_json(c);
  const fs::path dir = c.output_dir;
  io::write_json(dir / "network.json", out);
  io::write_report(net, dir);
  announce(dir / "network.json");
}

void run_report(const io::RunConfig& c, bool q_given) {
  if (c.network.empty()) throw std::invalid_argument("--network is required");
  fcreml::NetworkResult net = io::network_from_json(io::read_json(c.network));
  if (q_given) net.q = c.q;
  fcreml::select_edges(net);
  io::write_report(net, c.output_dir);
  announce(fs::path(c.output_dir) / "report.json");
}

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const io::ParseError*>(&e)) return "parse_error";
  if (dynamic_cast<const fcreml::NumericalError*>(&e)) return "numerical_error";
  if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid_argument";
  if (dynamic_cast<const std::runtime_error*>(&e)) return "io_error";
  return "error";
}

void report_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"schema_version", io::kSchemaVersion}, {"error", {{"kind", kind}, {"message", message}}}}.dump()
            << "\n";
}

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration; flags override it");
  sub->add_option("--out", f.out, "output directory (env FCREML_OUTPUT_DIR)");
}

void add_fit_options(CLI::App* sub, Flags& f) {
  sub->add_option("--data", f.data, "dataset directory or manifest.json");
  sub->add_option("--K", f.K, "B-spline basis size for the mean curve (default 30)");
  sub->add_option("--optimizer", f.optimizer, "trust-region | quasi-newton");
  sub->add_option("--mode", f.mode, "pair stage: refine | fixed");
  sub->add_option("--likelihood", f.likelihood, "pair likelihood path: structured | schur | dense");
  sub->add_option("--se-mode", f.se_mode, "full-inverse | marginal");
  sub->add_option("--alpha", f.alpha, "confidence intervals at level 1 - alpha (default 0.05)");
  sub->add_option("--workers", f.workers, "worker threads, 0 for all cores (env FCREML_WORKERS)");
  sub->add_flag("--allow-duplicate-voxels", f.allow_duplicates, "jitter coincident voxels instead of failing");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Voxel-level functional connectivity by two-stage restricted maximum likelihood"};
  app.require_subcommand(1);
  Flags f;

  auto* sim = app.add_subcommand("simulate", "write a simulated dataset");
  add_common(sim, f);
  sim->add_option("--preset", f.preset, "simulation preset (default paper-s4)")
      ->check(CLI::IsMember([] {
        std::vector<std::string> names;
        for (const auto& p : fcreml::presets()) names.push_back(p.name);
        return names;
      }()));
  sim->add_option("--model", f.model, "JSON model overrides applied on top of the preset");
  sim->add_option("--seed", f.seed, "simulation seed");
  sim->add_option("--replicate", f.replicate, "replicate index under the seed");

  auto* region = app.add_subcommand("fit-region", "fit the single-region model to each region");
  add_common(region, f);
  add_fit_options(region, f);
  region->add_option("--region", f.regions, "region labels to fit (default all)");

  auto* pair = app.add_subcommand("fit-pair", "fit one pair of regions and report rho with its uncertainty");
  add_common(pair, f);
  add_fit_options(pair, f);
  pair->add_option("--region", f.regions, "the two region labels")->expected(2);

  auto* network = app.add_subcommand("fit-network", "fit every pair and select edges");
  add_common(network, f);
  add_fit_options(network, f);
  network->add_option("--q", f.q, "false discovery rate for edge selection (default 0.05)");

  auto* report = app.add_subcommand("report", "write edge, adjacency and node tables from a stored network");
  add_common(report, f);
  report->add_option("--network", f.network, "network.json written by fit-network");
  report->add_option("--q", f.q, "re-select edges at this false discovery rate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage_error", e.what());
    return 2;
  }

  try {
    const io::RunConfig c = resolve(f);
    if (*sim) run_simulate(c);
    else if (*region) run_fit_region(c);
    else if (*pair) run_fit_pair(c);
    else if (*network) run_fit_network(c);
    else if (*report) run_report(c, f.q.has_value() || (f.config && io::read_json(*f.config).contains("q")));
  } catch (const std::exception& e) {
    report_error(error_kind(e), e.what());
    return 1;
  }
  return 0;
}
