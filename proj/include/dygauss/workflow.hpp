#pragma once

// End-to-end pipelines behind the command line: approximate a table's
// posterior, and run penalized credible region selection on a table or on
// all of its k-variable marginals.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dygauss/eval.hpp"
#include "dygauss/io.hpp"
#include "dygauss/parametrization.hpp"
#include "dygauss/pool.hpp"
#include "dygauss/posterior.hpp"
#include "dygauss/select.hpp"

namespace dygauss {

struct ApproxReport {
  DirichletParams beta;
  GaussianApprox approx;  // in the requested parametrization
  double min_kl;
  KlBound bound;
  std::vector<Interval> intervals;
};

inline ApproxReport approximate_table(const ContingencyTable& table, const PriorSpec& prior, DesignKind kind,
                                      double level = 0.95) {
  const TableSchema& schema = table.schema();
  DirichletParams beta = dy_update(prior.resolve(schema.num_cells()), table);
  const DesignMatrix x = make_design(kind, schema);
  GaussianApprox g = transform_gaussian(optimal_gaussian(beta), x);
  const double kl = exact_min_kl(beta);
  const KlBound bound = kl_bound(beta);
  auto intervals = gaussian_intervals(g.mean, g.marginal_variances(), level);
  return {std::move(beta), std::move(g), kl, bound, std::move(intervals)};
}

inline json approx_report_to_json(const ApproxReport& r, double level = 0.95) {
  json j;
  j["beta"] = to_std(r.beta.beta());
  j["approximation"] = gaussian_to_json(r.approx);
  j["exact_min_kl"] = r.min_kl;
  j["kl_bound"] = {{"value", r.bound.value}, {"valid", r.bound.valid}};
  json iv = json::array();
  for (std::size_t k = 0; k < r.intervals.size(); ++k) {
    json e{{"lower", r.intervals[k].lo}, {"upper", r.intervals[k].hi}};
    if (k < r.approx.labels.size()) e["label"] = r.approx.labels[k];
    iv.push_back(std::move(e));
  }
  j["interval_level"] = level;
  j["intervals"] = std::move(iv);
  return j;
}

struct TableSelection {
  std::vector<int> variables;  // ids of the kept variables in the full table
  std::vector<std::string> labels;
  SelectionResult result;
  std::vector<bool> edges;  // over variable_pairs(variables.size())
  std::size_t path_length = 0;
};

inline TableSelection select_on_table(const ContingencyTable& table, const PriorSpec& prior, double alpha,
                                      DesignKind kind, const LassoOptions& opts = {}) {
  const TableSchema& schema = table.schema();
  const DirichletParams beta = dy_update(prior.resolve(schema.num_cells()), table);
  const DesignMatrix x = make_design(kind, schema);
  const GaussianApprox on = optimal_gaussian(beta);
  TableSelection out;
  out.labels = x.labels();
  if (kind == DesignKind::identity) {
    const auto& cs = std::get<CompoundSymmetryMatrix>(on.cov);
    const LassoPath path = lasso_path(on.mean, cs, opts);
    out.result = pcr_select(path, on.mean, cs, alpha);
    out.path_length = path.size();
  } else {
    const GaussianApprox g = transform_gaussian(on, x);
    const Matrix sigma = g.dense_cov();
    const LassoPath path = lasso_path(g.mean, sigma, opts);
    out.result = pcr_select(path, g.mean, sigma, alpha);
    out.path_length = path.size();
  }
  out.edges = edges_from_support(schema, out.result.support);
  return out;
}

/// All k-subsets of {0, ..., p-1} in lexicographic order.
inline std::vector<std::vector<int>> k_subsets(int p, int k) {
  std::vector<std::vector<int>> out;
  if (k < 1 || k > p) return out;
  std::vector<int> cur(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) cur[static_cast<std::size_t>(i)] = i;
  for (;;) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[static_cast<std::size_t>(i)] == p - k + i) --i;
    if (i < 0) break;
    ++cur[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) cur[static_cast<std::size_t>(j)] = cur[static_cast<std::size_t>(j - 1)] + 1;
  }
  return out;
}

/// Selection on the full table (k = 0) or on every k-variable marginal,
/// fanned out over the worker pool; results are in subset order.
inline std::vector<TableSelection> select_marginals(const ContingencyTable& table, const PriorSpec& prior,
                                                    double alpha, DesignKind kind, int k,
                                                    const LassoOptions& opts = {}) {
  const int p = table.schema().num_vars();
  if (k < 0 || k > p)
    throw InputError("--marginals " + std::to_string(k) + " exceeds the number of variables (" + std::to_string(p) +
                     ")");
  std::vector<std::vector<int>> subsets;
  if (k == 0 || k == p) {
    subsets.emplace_back(static_cast<std::size_t>(p));
    for (int v = 0; v < p; ++v) subsets.back()[static_cast<std::size_t>(v)] = v;
  } else {
    subsets = k_subsets(p, k);
  }
  std::vector<TableSelection> out(subsets.size());
  parallel_for(subsets.size(), [&](std::size_t i) {
    const ContingencyTable marg = subsets[i].size() == static_cast<std::size_t>(p) ? table : marginalize(table, subsets[i]);
    out[i] = select_on_table(marg, prior, alpha, kind, opts);
    out[i].variables = subsets[i];
  });
  return out;
}

inline json table_selection_to_json(const TableSelection& s) {
  json j;
  j["variables"] = s.variables;
  j["path_length"] = s.path_length;
  j["selection"] = selection_to_json(s.result, s.labels);
  json edges = json::array();
  const auto pairs = variable_pairs(static_cast<int>(s.variables.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (s.edges[k])
      edges.push_back({s.variables[static_cast<std::size_t>(pairs[k].first)],
                       s.variables[static_cast<std::size_t>(pairs[k].second)]});
  j["edges"] = std::move(edges);
  return j;
}

inline ConfusionCounts confusion_against(const std::vector<TableSelection>& sel, const std::vector<Edge>& reference) {
  std::vector<std::vector<bool>> chosen, truth;
  for (const auto& s : sel) {
    chosen.push_back(s.edges);
    truth.push_back(marginal_reference_edges(reference, s.variables));
  }
  return edge_confusion(chosen, truth);
}

}  // namespace dygauss
