#ifndef FCREML_NETWORK_HPP
#define FCREML_NETWORK_HPP

#include "fcreml/baselines.hpp"
#include "fcreml/inference.hpp"
#include "fcreml/parallel.hpp"
#include "fcreml/stage1.hpp"
#include "fcreml/stage2.hpp"

#include <numeric>
#include <set>

namespace fcreml {

struct NetworkOptions {
  Stage1Options stage1;
  Stage2Options stage2;
  InferenceOptions inference;
  double q = 0.05;   // FDR level
  int workers = 0;   // 0: default_workers()
};

struct RegionRecord {
  std::string label;
  bool ok = false;
  std::string error;
  Stage1Fit fit;
};

struct PairRecord {
  int j = 0, k = 0;  // region indices, j < k
  bool ok = false;
  std::string error;
  double rho_hat = 0.0;
  double se = 0.0;
  double z = 0.0;
  double p = 1.0;
  double ci_lower = 0.0, ci_upper = 0.0;
  double ca = 0.0;  // correlation of averages
  double fe = 0.0;  // correlation of fitted fixed effects
  bool selected = false;
  OptStatus status = OptStatus::Stalled;
  bool rho_on_boundary = false;
  bool swapped = false;  // fit.theta.region1 describes region k
  Stage2Fit fit;
};

struct NetworkResult {
  int J = 0;
  std::vector<std::string> labels;
  std::vector<RegionRecord> regions;
  std::vector<PairRecord> pairs;  // lexicographic (j, k)
  double q = 0.05;
  std::vector<int> node_degree;
  std::vector<double> fcs;
};

/// Harmonic number c(m) = sum_{i<=m} 1/i.
inline double harmonic(std::size_t m) {
  double c = 0.0;
  for (std::size_t i = m; i >= 1; --i) c += 1.0 / static_cast<double>(i);
  return c;
}

/// Benjamini-Yekutieli step-up rule: indices of the k* smallest p-values, with
/// k* = max{k : p_(k) <= k q / (m c(m))}. Returned in ascending index order.
inline std::vector<std::size_t> by_threshold(const std::vector<double>& p, double q) {
  detail::require(q > 0.0 && q < 1.0, "q must lie in (0, 1)");
  for (double x : p) detail::require(x >= 0.0 && x <= 1.0, "p-values must lie in [0, 1]");
  const std::size_t m = p.size();
  if (m == 0) return {};
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p[a] < p[b]; });
  const double denom = static_cast<double>(m) * harmonic(m);
  std::size_t k_star = 0;
  for (std::size_t k = 1; k <= m; ++k)
    if (p[order[k - 1]] <= static_cast<double>(k) * q / denom) k_star = k;
  std::vector<std::size_t> out(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_star));
  std::sort(out.begin(), out.end());
  return out;
}

/// Node degree and mean rho_hat over the selected edges at each region.
inline void summarize(NetworkResult& net) {
  net.node_degree.assign(static_cast<std::size_t>(net.J), 0);
  net.fcs.assign(static_cast<std::size_t>(net.J), 0.0);
  for (const PairRecord& e : net.pairs) {
    if (!e.selected) continue;
    for (int v : {e.j, e.k}) {
      detail::require(v >= 0 && v < net.J, "edge endpoint out of range");
      ++net.node_degree[static_cast<std::size_t>(v)];
      net.fcs[static_cast<std::size_t>(v)] += e.rho_hat;
    }
  }
  for (std::size_t v = 0; v < net.fcs.size(); ++v)
    if (net.node_degree[v] > 0) net.fcs[v] /= net.node_degree[v];
}

/// Marks the BY selection over the successful pairs and refreshes the summaries.
inline void select_edges(NetworkResult& net) {
  std::vector<double> p;
  std::vector<std::size_t> index;
  for (std::size_t i = 0; i < net.pairs.size(); ++i) {
    net.pairs[i].selected = false;
    if (net.pairs[i].ok) {
      p.push_back(net.pairs[i].p);
      index.push_back(i);
    }
  }
  for (std::size_t s : by_threshold(p, net.q)) net.pairs[index[s]].selected = true;
  summarize(net);
}

inline std::vector<std::pair<int, int>> enumerate_pairs(int J) {
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < J; ++j)
    for (int k = j + 1; k < J; ++k) out.emplace_back(j, k);
  return out;
}

/// Stage 1 per region, then Stage 2 and inference per unordered pair. Failures are
/// recorded on the affected records and leave the rest of the run intact.
inline NetworkResult fit_network(const std::vector<RegionData>& regions, const NetworkOptions& opts = {}) {
  const int J = static_cast<int>(regions.size());
  detail::require(J >= 2, "a network needs at least two regions");
  NetworkResult net;
  net.J = J;
  net.q = opts.q;
  std::set<std::string> seen;
  for (int j = 0; j < J; ++j) {
    std::string label = regions[static_cast<std::size_t>(j)].label;
    if (label.empty()) label = "R" + std::to_string(j + 1);
    detail::require(seen.insert(label).second, "duplicate region label '" + label + "'");
    net.labels.push_back(label);
  }
  const int workers = opts.workers > 0 ? opts.workers : default_workers();

  net.regions = parallel_map(static_cast<std::size_t>(J), workers, [&](std::size_t j) {
    RegionRecord r;
    r.label = net.labels[j];
    try {
      r.fit = fit_region(regions[j], opts.stage1);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
    return r;
  });

  const auto pairs = enumerate_pairs(J);
  net.pairs = parallel_map(pairs.size(), workers, [&](std::size_t i) {
    PairRecord e;
    e.j = pairs[i].first;
    e.k = pairs[i].second;
    const auto uj = static_cast<std::size_t>(e.j), uk = static_cast<std::size_t>(e.k);
    const RegionRecord &rj = net.regions[uj], &rk = net.regions[uk];
    if (!rj.ok || !rk.ok) {
      e.error = "region fit failed: " + (rj.ok ? rk.label : rj.label);
      return e;
    }
    // Fit in label order so the result does not depend on the input order.
    const bool swap = net.labels[uk] < net.labels[uj];
    const std::size_t a = swap ? uk : uj, b = swap ? uj : uk;
    e.swapped = swap;
    try {
      e.ca = corr_of_averages(regions[a].X, regions[b].X);
      e.fe = fe_correlation(net.regions[a].fit.nu_hat, net.regions[b].fit.nu_hat);
      e.fit = fit_pair(regions[a], regions[b], net.regions[a].fit, net.regions[b].fit, opts.stage2);
      const PairInference inf =
          infer_pair(e.fit, regions[a].coords, regions[b].coords, regions[a].timepoints(), opts.inference,
                     opts.stage2.allow_duplicate_voxels);
      e.rho_hat = inf.rho_hat;
      e.se = inf.se_rho;
      e.z = inf.z_score;
      e.p = inf.p_value;
      e.ci_lower = inf.ci_lower;
      e.ci_upper = inf.ci_upper;
      e.status = e.fit.status;
      e.rho_on_boundary = e.fit.rho_on_boundary;
      e.ok = true;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    return e;
  });
  select_edges(net);
  return net;
}

}  // namespace fcreml

#endif  // FCREML_NETWORK_HPP
