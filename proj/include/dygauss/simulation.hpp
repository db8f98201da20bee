#pragma once

// Seeded simulation study comparing the optimal Gaussian approximation with
// the Laplace and Monte Carlo baselines.
//
// Each replicate draws pi ~ Dirichlet(a, ..., a), y ~ Multinomial(N, pi),
// forms beta = a + y and scores every approximation against the true
// theta0 = log(pi / pi_0). Replicate jobs are independent, each with its own
// random streams, so results do not depend on the worker count.
//
// Config (JSON):
//   {
//     "p": 8,                      or "levels": [2, 3, ...]
//     "N": [250, 10000],
//     "a": [1, "1/d"],
//     "mc": [1000, 100000],        [] skips Monte Carlo
//     "replicates": 100,
//     "seed": 12345,
//     "parametrizations": ["identity", "corner"],
//     "laplace": true,
//     "mc_intervals": true,        MC credible intervals (extra passes)
//     "ks_coordinates": 20,        KS against oN on the largest mc; 0 skips
//     "timing_runs": 5,
//     "level": 0.95,
//     "output_dir": "out"
//   }

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "dygauss/baselines.hpp"
#include "dygauss/eval.hpp"
#include "dygauss/io.hpp"
#include "dygauss/parametrization.hpp"
#include "dygauss/pool.hpp"
#include "dygauss/posterior.hpp"
#include "dygauss/random.hpp"

namespace dygauss {

struct SimulationConfig {
  std::vector<int> levels;
  std::vector<std::int64_t> n;
  std::vector<PriorSpec> priors;
  std::vector<std::int64_t> mc;
  int replicates = 100;
  std::uint64_t seed = 1;
  std::vector<DesignKind> parametrizations{DesignKind::identity, DesignKind::corner};
  bool laplace = true;
  bool mc_intervals = true;
  int ks_coordinates = 20;
  int timing_runs = 5;
  double level = 0.95;
  std::string output_dir;
  // Doubles held per Monte Carlo column pass, per job.
  std::int64_t column_budget = std::int64_t{1} << 24;

  void validate() const {
    if (levels.empty()) throw InputError("config: need p or levels");
    for (int l : levels)
      if (l < 2) throw InputError("config: every variable needs at least two levels");
    if (n.empty()) throw InputError("config: N list is empty");
    for (auto v : n)
      if (v < 1) throw InputError("config: N values must be positive");
    if (priors.empty()) throw InputError("config: a list is empty");
    for (const auto& pr : priors)
      if (pr.kind == PriorSpec::Kind::vector) throw InputError("config: a must be a number or \"1/d\"");
    for (auto v : mc)
      if (v < 2) throw InputError("config: mc values must be at least 2");
    if (mc.size() > 62) throw InputError("config: at most 62 mc values");
    if (replicates < 1) throw InputError("config: replicates must be positive");
    if (parametrizations.empty()) throw InputError("config: parametrizations list is empty");
    if (ks_coordinates < 0) throw InputError("config: ks_coordinates must be >= 0");
    if (timing_runs < 1) throw InputError("config: timing_runs must be positive");
    if (!(level > 0.0 && level < 1.0)) throw InputError("config: level must lie in (0, 1)");
    if (column_budget < 1) throw InputError("config: column_budget must be positive");
  }

  static SimulationConfig from_json(const json& j) {
    SimulationConfig c;
    try {
      if (!j.is_object()) throw InputError("config: expected a JSON object");
      if (j.contains("levels")) {
        c.levels = j.at("levels").get<std::vector<int>>();
      } else if (j.contains("p")) {
        const int p = j.at("p").get<int>();
        if (p < 1 || p > 20) throw InputError("config: p must lie in [1, 20]");
        c.levels.assign(static_cast<std::size_t>(p), 2);
      }
      c.n = j.at("N").get<std::vector<std::int64_t>>();
      for (const auto& a : j.at("a")) {
        if (a.is_string()) {
          if (a.get<std::string>() != "1/d") throw InputError("config: a entries must be numbers or \"1/d\"");
          PriorSpec spec;
          spec.kind = PriorSpec::Kind::one_over_d;
          c.priors.push_back(spec);
        } else {
          PriorSpec spec;
          spec.a = a.get<double>();
          if (!(spec.a > 0.0) || !std::isfinite(spec.a)) throw InputError("config: a must be positive");
          c.priors.push_back(spec);
        }
      }
      if (j.contains("mc")) c.mc = j.at("mc").get<std::vector<std::int64_t>>();
      c.replicates = j.value("replicates", c.replicates);
      c.seed = j.value("seed", c.seed);
      if (j.contains("parametrizations")) {
        c.parametrizations.clear();
        for (const auto& s : j.at("parametrizations")) c.parametrizations.push_back(design_kind_from_string(s));
      }
      c.laplace = j.value("laplace", c.laplace);
      c.mc_intervals = j.value("mc_intervals", c.mc_intervals);
      c.ks_coordinates = j.value("ks_coordinates", c.ks_coordinates);
      c.timing_runs = j.value("timing_runs", c.timing_runs);
      c.level = j.value("level", c.level);
      c.output_dir = j.value("output_dir", std::string{});
      c.column_budget = j.value("column_budget", c.column_budget);
    } catch (const InputError&) {
      throw;
    } catch (const std::exception& e) {
      throw InputError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

struct KsRecord {
  std::string parametrization;
  std::string prior;
  std::int64_t n = 0;
  std::int64_t mc = 0;
  int replicate = 0;
  int coordinate = 0;
  std::string label;
  double ks = 0.0;
};

struct TimingRecord {
  std::string method;
  std::string parametrization;
  std::string prior;
  std::int64_t n = 0;
  std::int64_t mc = 0;
  int replicate = 0;
  double seconds = 0.0;
};

struct SummaryRecord {
  std::string metric;
  std::string method;
  std::string parametrization;
  std::string prior;
  std::int64_t n = 0;
  std::int64_t mc = 0;
  double mean = 0.0;
  double sd = 0.0;
  int count = 0;
};

struct StudyResult {
  std::vector<MetricReport> metrics;
  std::vector<KsRecord> ks;
  std::vector<TimingRecord> timings;
  std::vector<SummaryRecord> summary;

  /// Mean of one summary cell, or NaN if absent.
  double mean_of(const std::string& metric, const std::string& method, const std::string& parametrization,
                 std::int64_t n, std::int64_t mc = 0) const {
    for (const auto& s : summary)
      if (s.metric == metric && s.method == method && s.parametrization == parametrization && s.n == n &&
          s.mc == mc)
        return s.mean;
    return NAN;
  }
};

namespace detail {

template <typename Fn>
double time_once(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename Fn>
double median_time(int runs, Fn&& fn) {
  std::vector<double> t(static_cast<std::size_t>(runs));
  for (auto& v : t) v = time_once(fn);
  std::sort(t.begin(), t.end());
  const std::size_t m = t.size() / 2;
  return t.size() % 2 ? t[m] : 0.5 * (t[m - 1] + t[m]);
}

// Streams per replicate job: data draw, one per mc value, KS coordinate choice.
inline std::uint64_t data_stream(std::uint64_t job) { return job * 64; }
inline std::uint64_t mc_stream(std::uint64_t job, std::size_t m) { return job * 64 + 1 + m; }
inline std::uint64_t ks_stream(std::uint64_t job) { return job * 64 + 63; }

struct PreparedDesign {
  DesignMatrix x;
  Matrix inverse;  // dense X^{-1}; empty for identity
};

struct JobOutput {
  std::vector<MetricReport> metrics;
  std::vector<KsRecord> ks;
  std::vector<TimingRecord> timings;
};

struct ReplicateData {
  Vector theta0;
  DirichletParams beta;
};

inline ReplicateData draw_replicate(const DirichletParams& alpha, std::int64_t n, RngStream& rng) {
  const Eigen::Index d = alpha.dim();
  Vector lg(d + 1);
  log_gamma_vector(alpha.beta(), rng, lg);
  Vector pi = (lg.array() - lg.maxCoeff()).exp();
  pi /= pi.sum();
  const auto y = multinomial_sample(n, pi, rng);
  Vector yv(d + 1);
  for (Eigen::Index j = 0; j <= d; ++j) yv[j] = static_cast<double>(y[static_cast<std::size_t>(j)]);
  return {(lg.tail(d).array() - lg[0]).matrix(), dy_update(alpha, yv)};
}

inline std::vector<int> choose_coordinates(Eigen::Index d, int k, std::uint64_t seed, std::uint64_t stream) {
  std::vector<int> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), idx.size());
  RngStream rng(seed, stream);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t span = idx.size() - i;
    const std::size_t j = i + std::min(span - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(span)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Per-column sorted Monte Carlo draws of theta_P for the columns in `cols`,
/// regenerated from the same stream so every pass sees identical draws.
inline Matrix mc_columns(const DirichletParams& beta, std::int64_t mc, std::uint64_t seed, std::uint64_t stream,
                         const PreparedDesign& pd, const std::vector<int>& cols) {
  const Eigen::Index w = static_cast<Eigen::Index>(cols.size());
  Matrix out(mc, w);
  Matrix proj;
  if (pd.x.kind() != DesignKind::identity) {
    proj.resize(w, beta.dim());
    for (Eigen::Index k = 0; k < w; ++k) proj.row(k) = pd.inverse.row(cols[static_cast<std::size_t>(k)]);
  }
  RngStream rng(seed, stream);
  Eigen::Index row = 0;
  for_each_theta_block(beta, mc, rng, [&](const Matrix& block) {
    if (proj.size()) {
      out.middleRows(row, block.rows()).noalias() = block * proj.transpose();
    } else {
      for (Eigen::Index k = 0; k < w; ++k)
        out.col(k).segment(row, block.rows()) = block.col(cols[static_cast<std::size_t>(k)]);
    }
    row += block.rows();
  });
  for (Eigen::Index k = 0; k < w; ++k) std::sort(out.col(k).data(), out.col(k).data() + mc);
  return out;
}

}  // namespace detail

/// Runs the whole study in memory. Pass `write` to also emit the CSV files.
inline StudyResult run_study(const SimulationConfig& cfg, bool write = false) {
  cfg.validate();
  const TableSchema schema(cfg.levels);
  const Eigen::Index d = schema.dim();
  if (d < 2) throw InputError("config: the table needs at least three cells");

  std::vector<detail::PreparedDesign> designs;
  for (DesignKind k : cfg.parametrizations) {
    DesignMatrix x = make_design(k, schema);
    Matrix inv = k == DesignKind::identity ? Matrix() : x.inverse();
    designs.push_back({std::move(x), std::move(inv)});
  }

  const std::size_t n_n = cfg.n.size();
  const std::size_t n_r = static_cast<std::size_t>(cfg.replicates);
  const std::size_t jobs = cfg.priors.size() * n_n * n_r;
  const std::int64_t ks_mc = cfg.mc.empty() ? 0 : *std::max_element(cfg.mc.begin(), cfg.mc.end());
  std::vector<detail::JobOutput> outputs(jobs);

  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t pi_idx = job / (n_n * n_r);
    const std::size_t n_idx = (job / n_r) % n_n;
    const int rep = static_cast<int>(job % n_r);
    const PriorSpec& prior = cfg.priors[pi_idx];
    const std::string prior_label = prior.label();
    const std::int64_t n = cfg.n[n_idx];
    const DirichletParams alpha = prior.resolve(schema.num_cells());
    detail::JobOutput& out = outputs[job];

    RngStream data_rng(cfg.seed, detail::data_stream(job));
    const detail::ReplicateData rd = detail::draw_replicate(alpha, n, data_rng);
    const DirichletParams& beta = rd.beta;

    auto metric = [&](const char* name, const char* method, const DesignMatrix& x, std::int64_t mc, double v) {
      out.metrics.push_back({name, method, to_string(x.kind()), prior_label, n, mc, rep, v});
    };
    auto timing = [&](const char* method, const DesignMatrix& x, std::int64_t mc, double s) {
      out.timings.push_back({method, to_string(x.kind()), prior_label, n, mc, rep, s});
    };
    auto point_metrics = [&](const char* method, const DesignMatrix& x, std::int64_t mc, const Vector& est,
                             const Vector& truth) {
      metric("uv", method, x, mc, unexplained_variation(est, truth, UvScale::total));
      metric("uv_rms", method, x, mc, unexplained_variation(est, truth, UvScale::per_coordinate));
    };

    const std::vector<int> ks_cols =
        ks_mc > 0 && cfg.ks_coordinates > 0
            ? detail::choose_coordinates(d, cfg.ks_coordinates, cfg.seed, detail::ks_stream(job))
            : std::vector<int>{};

    std::optional<GaussianApprox> laplace;
    if (cfg.laplace) {
      try {
        laplace = laplace_approx(beta);
      } catch (const NumericalError&) {
        // Recorded as missing; the summary skips NaN values.
      }
    }
    std::vector<SampleMoments> moments;
    for (std::size_t m = 0; m < cfg.mc.size(); ++m) {
      SampleMoments sm;
      const double secs = detail::time_once(
          [&] { sm = mc_moments(beta, cfg.mc[m], cfg.seed, nullptr, detail::mc_stream(job, m)); });
      for (const auto& pd : designs) timing("mc", pd.x, cfg.mc[m], secs);
      moments.push_back(std::move(sm));
    }

    for (const auto& pd : designs) {
      const DesignMatrix& x = pd.x;
      const bool id = x.kind() == DesignKind::identity;
      const Vector truth = id ? rd.theta0 : Vector(x.solve(rd.theta0));

      GaussianApprox on;
      timing("oN", x, 0, detail::median_time(cfg.timing_runs, [&] {
               on = optimal_gaussian(beta);
               if (!id) on = transform_gaussian(on, x);
             }));
      const Vector on_var = on.marginal_variances();
      const Matrix on_cov = on.dense_cov();
      point_metrics("oN", x, 0, on.mean, truth);
      metric("coverage", "oN", x, 0, coverage(gaussian_intervals(on.mean, on_var, cfg.level), truth));

      if (cfg.laplace) {
        if (laplace) {
          GaussianApprox lp;
          timing("laplace", x, 0, detail::median_time(cfg.timing_runs, [&] {
                   lp = laplace_approx(beta);
                   if (!id) lp = transform_gaussian(lp, x);
                 }));
          point_metrics("laplace", x, 0, lp.mean, truth);
          metric("coverage", "laplace", x, 0,
                 coverage(gaussian_intervals(lp.mean, lp.marginal_variances(), cfg.level), truth));
          metric("frobenius", "laplace", x, 0, frobenius_loss(lp.dense_cov(), on_cov));
        } else {
          for (const char* name : {"uv", "uv_rms", "coverage", "frobenius"}) metric(name, "laplace", x, 0, NAN);
        }
      }

      for (std::size_t m = 0; m < cfg.mc.size(); ++m) {
        const std::int64_t mc = cfg.mc[m];
        Vector mean = moments[m].mean;
        Matrix cov = moments[m].cov;
        if (!id) {
          mean = x.solve(mean);
          const Matrix left = x.solve(cov);
          cov = x.solve(Matrix(left.transpose()));
          cov = 0.5 * (cov + cov.transpose());
        }
        point_metrics("mc", x, mc, mean, truth);
        metric("frobenius", "mc", x, mc, frobenius_loss(cov, on_cov));

        const bool want_ks = mc == ks_mc && !ks_cols.empty();
        if (!cfg.mc_intervals && !want_ks) continue;
        std::vector<int> wanted;
        if (cfg.mc_intervals) {
          wanted.resize(static_cast<std::size_t>(d));
          std::iota(wanted.begin(), wanted.end(), 0);
        } else {
          wanted = ks_cols;
        }
        const std::size_t width =
            static_cast<std::size_t>(std::max<std::int64_t>(1, cfg.column_budget / mc));
        std::vector<Interval> intervals(static_cast<std::size_t>(d));
        for (std::size_t start = 0; start < wanted.size(); start += width) {
          const std::vector<int> cols(wanted.begin() + static_cast<std::ptrdiff_t>(start),
                                      wanted.begin() + static_cast<std::ptrdiff_t>(std::min(wanted.size(), start + width)));
          const Matrix sorted = detail::mc_columns(beta, mc, cfg.seed, detail::mc_stream(job, m), pd, cols);
          for (std::size_t k = 0; k < cols.size(); ++k) {
            const int c = cols[k];
            const std::span<const double> col(sorted.col(static_cast<Eigen::Index>(k)).data(),
                                              static_cast<std::size_t>(mc));
            intervals[static_cast<std::size_t>(c)] = {empirical_quantile(col, 0.5 * (1.0 - cfg.level)),
                                                      empirical_quantile(col, 0.5 * (1.0 + cfg.level))};
            if (want_ks && std::binary_search(ks_cols.begin(), ks_cols.end(), c)) {
              const std::string label =
                  x.labels().empty() ? std::to_string(c + 1) : x.labels()[static_cast<std::size_t>(c)];
              out.ks.push_back({to_string(x.kind()), prior_label, n, mc, rep, c, label,
                                ks_statistic(col, on.mean[c], std::sqrt(on_var[c]))});
            }
          }
        }
        if (cfg.mc_intervals) metric("coverage", "mc", x, mc, coverage(intervals, truth));
      }
    }
  });

  StudyResult res;
  for (auto& o : outputs) {
    res.metrics.insert(res.metrics.end(), o.metrics.begin(), o.metrics.end());
    res.ks.insert(res.ks.end(), o.ks.begin(), o.ks.end());
    res.timings.insert(res.timings.end(), o.timings.begin(), o.timings.end());
  }

  // Summary cells in first-appearance order.
  using Key = std::tuple<std::string, std::string, std::string, std::string, std::int64_t, std::int64_t>;
  std::map<Key, std::size_t> slot;
  std::vector<std::vector<double>> values;
  for (const auto& r : res.metrics) {
    const Key key{r.metric, r.method, r.parametrization, r.prior, r.n, r.mc};
    auto [it, inserted] = slot.emplace(key, res.summary.size());
    if (inserted) {
      res.summary.push_back({r.metric, r.method, r.parametrization, r.prior, r.n, r.mc, 0.0, 0.0, 0});
      values.emplace_back();
    }
    if (std::isfinite(r.value)) values[it->second].push_back(r.value);
  }
  for (std::size_t i = 0; i < res.summary.size(); ++i) {
    const auto& v = values[i];
    auto& s = res.summary[i];
    s.count = static_cast<int>(v.size());
    if (v.empty()) {
      s.mean = s.sd = NAN;
      continue;
    }
    s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  }

  if (write) {
    namespace fs = std::filesystem;
    const fs::path dir = cfg.output_dir.empty() ? fs::path(".") : fs::path(cfg.output_dir);
    fs::create_directories(dir);
    char buf[64];
    auto num = [&](double v) {
      std::snprintf(buf, sizeof buf, "%.10g", v);
      return std::string(buf);
    };
    auto open = [&](const char* name) {
      std::ofstream f(dir / name);
      if (!f) throw InputError("cannot write '" + (dir / name).string() + "'");
      return f;
    };
    {
      auto f = open("metrics.csv");
      f << MetricReport::csv_header << '\n';
      for (const auto& r : res.metrics) write_csv_row(f, r);
    }
    {
      auto f = open("ks.csv");
      f << "parametrization,a,N,mc,replicate,coordinate,label,ks\n";
      for (const auto& r : res.ks)
        f << r.parametrization << ',' << r.prior << ',' << r.n << ',' << r.mc << ',' << r.replicate << ','
          << r.coordinate << ',' << r.label << ',' << num(r.ks) << '\n';
    }
    {
      auto f = open("summary.csv");
      f << "metric,method,parametrization,a,N,mc,mean,sd,count\n";
      for (const auto& s : res.summary)
        f << s.metric << ',' << s.method << ',' << s.parametrization << ',' << s.prior << ',' << s.n << ','
          << s.mc << ',' << num(s.mean) << ',' << num(s.sd) << ',' << s.count << '\n';
    }
    {
      auto f = open("timings.csv");
      f << "method,parametrization,a,N,mc,replicate,seconds\n";
      for (const auto& t : res.timings)
        f << t.method << ',' << t.parametrization << ',' << t.prior << ',' << t.n << ',' << t.mc << ','
          << t.replicate << ',' << num(t.seconds) << '\n';
    }
  }
  return res;
}

}  // namespace dygauss
