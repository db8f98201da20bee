// dygauss: optimal Gaussian approximation for contingency-table posteriors.
//
//   dygauss approx  --table T --prior A [--parametrization identity|corner] [--out F]
//   dygauss compare --config sim.json [--output-dir D]
//   dygauss select  --table T --prior A --alpha X [--marginals k] [--reference G]
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "dygauss/dygauss.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

void emit(const dygauss::json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw dygauss::InputError("cannot write '" + out + "'");
  f << j.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal Gaussian approximation to logistic-Dirichlet posteriors"};
  app.require_subcommand(1);

  std::string table_path, prior_text = "1", par_text = "identity", out_path, config_path, output_dir;
  std::vector<int> levels;
  double level = 0.95;

  auto* approx = app.add_subcommand("approx", "Optimal Gaussian approximation for one table");
  approx->add_option("--table", table_path, "Table file (CSV or JSON)")->required();
  approx->add_option("--prior", prior_text, "Prior: a number, 1/d, or a file of d+1 values");
  approx->add_option("--parametrization", par_text, "identity or corner")
      ->check(CLI::IsMember({"identity", "corner"}));
  approx->add_option("--levels", levels, "Levels per variable (CSV tables only)");
  approx->add_option("--level", level, "Credible interval level")->check(CLI::Range(0.0, 1.0));
  approx->add_option("--out", out_path, "Write JSON here instead of stdout");

  auto* compare = app.add_subcommand("compare", "Run a seeded simulation study");
  compare->add_option("--config", config_path, "Simulation config (JSON)")->required();
  compare->add_option("--output-dir", output_dir, "Override the config's output directory");

  double alpha = 0.1;
  int marginals = 0;
  std::string reference_path, select_par = "corner";
  dygauss::LassoOptions lasso;
  auto* select = app.add_subcommand("select", "Penalized credible region selection");
  select->add_option("--table", table_path, "Table file (CSV or JSON)")->required();
  select->add_option("--prior", prior_text, "Prior: a number, 1/d, or a file of d+1 values");
  select->add_option("--alpha", alpha, "Credible region is 1 - alpha")->required();
  select->add_option("--marginals", marginals, "Select on every k-variable marginal table")
      ->check(CLI::NonNegativeNumber);
  select->add_option("--reference", reference_path, "Reference graph edge list");
  select->add_option("--parametrization", select_par, "identity or corner")
      ->check(CLI::IsMember({"identity", "corner"}));
  select->add_option("--levels", levels, "Levels per variable (CSV tables only)");
  select->add_option("--n-lambda", lasso.n_lambda, "Lasso path length");
  select->add_option("--lambda-min-ratio", lasso.lambda_min_ratio, "Smallest lambda as a fraction of lambda_max");
  select->add_option("--out", out_path, "Write JSON here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*approx) {
      const auto table = dygauss::read_table(table_path, levels);
      const auto prior = dygauss::parse_prior(prior_text);
      const auto report =
          dygauss::approximate_table(table, prior, dygauss::design_kind_from_string(par_text), level);
      emit(dygauss::approx_report_to_json(report, level), out_path);
    } else if (*compare) {
      std::ifstream f(config_path);
      if (!f) throw dygauss::InputError("cannot open '" + config_path + "'");
      dygauss::json j;
      try {
        j = dygauss::json::parse(f);
      } catch (const dygauss::json::parse_error& e) {
        throw dygauss::InputError("config '" + config_path + "': " + e.what());
      }
      auto cfg = dygauss::SimulationConfig::from_json(j);
      if (!output_dir.empty()) cfg.output_dir = output_dir;
      if (cfg.output_dir.empty()) cfg.output_dir = ".";
      const auto res = dygauss::run_study(cfg, true);
      std::printf("%-10s %-8s %-9s %-5s %-7s %-8s %12s %12s\n", "metric", "method", "param", "a", "N", "mc",
                  "mean", "sd");
      for (const auto& s : res.summary)
        std::printf("%-10s %-8s %-9s %-5s %-7lld %-8lld %12.5g %12.5g\n", s.metric.c_str(), s.method.c_str(),
                    s.parametrization.c_str(), s.prior.c_str(), static_cast<long long>(s.n),
                    static_cast<long long>(s.mc), s.mean, s.sd);
      std::printf("wrote %s/{metrics,summary,ks,timings}.csv\n", cfg.output_dir.c_str());
    } else if (*select) {
      lasso.validate();
      const auto table = dygauss::read_table(table_path, levels);
      const auto prior = dygauss::parse_prior(prior_text);
      if (!(alpha > 0.0 && alpha < 1.0)) throw dygauss::InputError("--alpha must lie in (0, 1)");
      const auto results = dygauss::select_marginals(table, prior, alpha, dygauss::design_kind_from_string(select_par),
                                                     marginals, lasso);
      dygauss::json j;
      j["parametrization"] = select_par;
      j["marginals"] = marginals;
      j["tables"] = dygauss::json::array();
      for (const auto& r : results) j["tables"].push_back(dygauss::table_selection_to_json(r));
      if (!reference_path.empty()) {
        const auto reference = dygauss::read_reference_graph(reference_path);
        for (const auto& [u, v] : reference)
          if (v >= table.schema().num_vars())
            throw dygauss::InputError("reference graph names variable " + std::to_string(v) +
                                      " but the table has " + std::to_string(table.schema().num_vars()));
        const auto c = dygauss::confusion_against(results, reference);
        j["confusion"] = {{"tn", c.tn}, {"fn", c.fn}, {"fp", c.fp}, {"tp", c.tp}, {"fdr", c.fdr()}, {"f1", c.f1()}};
        std::fprintf(stderr, "            reference\n            absent  present\nselected no  %6lld  %6lld\n"
                             "         yes  %6lld  %6lld\nFDR %.4f  F1 %.4f\n",
                     static_cast<long long>(c.tn), static_cast<long long>(c.fn), static_cast<long long>(c.fp),
                     static_cast<long long>(c.tp), c.fdr(), c.f1());
      }
      emit(j, out_path);
    }
  } catch (const dygauss::InputError& e) {
    std::cerr << "dygauss: " << e.what() << '\n';
    return kExitInput;
  } catch (const dygauss::NumericalError& e) {
    std::cerr << "dygauss: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "dygauss: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::domain_error& e) {
    std::cerr << "dygauss: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::out_of_range& e) {
    std::cerr << "dygauss: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "dygauss: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
