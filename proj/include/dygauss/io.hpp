#pragma once

// File formats.
//
// Contingency tables
//   CSV:  header "i_1,...,i_p,count" (column names are free, the last column
//         is the count); one row per cell, any order; missing cells are zero.
//         Levels are inferred as max observed level + 1 (at least 2) unless
//         given explicitly.
//   JSON: {"levels": [d_1, ..., d_p], "counts": [...]} with counts in
//         canonical cell order (last variable fastest).
//
// Priors: a positive number a (Dirichlet(a, ..., a)), the keyword "1/d"
// (a = 1/d), or a file holding d+1 positive numbers (JSON array or
// whitespace/comma separated).
//
// Reference graphs: one edge per line, two variable ids separated by
// whitespace or a comma. Ids are 0-based integers or single letters
// (a = 0, b = 1, ...). '#' starts a comment.
//
// Sample batches: CSV matrix (header = coordinate labels) plus a JSON sidecar
// "<file>.json" with seed, stream, beta and parametrization.

#include <cctype>
#include <cstdint>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dygauss/baselines.hpp"
#include "dygauss/parametrization.hpp"
#include "dygauss/posterior.hpp"
#include "dygauss/select.hpp"

namespace dygauss {

using json = nlohmann::json;

/// Malformed or unreadable input.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(trim(field));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline std::int64_t parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(where + ": expected an integer, got '" + s + "'");
  }
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(where + ": expected a number, got '" + s + "'");
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace detail

inline ContingencyTable parse_table_csv(std::istream& in, const std::vector<int>& levels_override = {}) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) {
      header = detail::split(line, ',');
      break;
    }
  }
  if (header.size() < 2) throw InputError("table CSV: header must name at least one variable and a count column");
  const std::size_t p = header.size() - 1;

  std::map<Cell, std::int64_t> cells;
  std::vector<int> max_level(p, 0);
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split(line, ',');
    const std::string where = "table CSV line " + std::to_string(line_no);
    if (fields.size() != p + 1)
      throw InputError(where + ": expected " + std::to_string(p + 1) + " fields, got " + std::to_string(fields.size()));
    Cell cell(p);
    for (std::size_t v = 0; v < p; ++v) {
      const auto lv = detail::parse_int(fields[v], where);
      if (lv < 0) throw InputError(where + ": levels must be nonnegative");
      cell[v] = static_cast<int>(lv);
      max_level[v] = std::max(max_level[v], cell[v]);
    }
    const auto count = detail::parse_int(fields[p], where);
    if (count < 0) throw InputError(where + ": counts must be nonnegative");
    if (!cells.emplace(cell, count).second) throw InputError(where + ": duplicate cell");
  }

  std::vector<int> levels(p);
  if (!levels_override.empty()) {
    if (levels_override.size() != p) throw InputError("table CSV: --levels arity does not match the header");
    levels = levels_override;
  } else {
    for (std::size_t v = 0; v < p; ++v) levels[v] = std::max(2, max_level[v] + 1);
  }
  try {
    TableSchema schema(levels);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(schema.num_cells()), 0);
    for (const auto& [cell, count] : cells) counts[static_cast<std::size_t>(schema.index_of(cell))] = count;
    return ContingencyTable(std::move(schema), std::move(counts));
  } catch (const std::logic_error& e) {
    throw InputError(std::string("table CSV: ") + e.what());
  }
}

inline ContingencyTable table_from_json(const json& j) {
  try {
    if (!j.is_object() || !j.contains("levels") || !j.contains("counts"))
      throw InputError("table JSON: expected an object with 'levels' and 'counts'");
    TableSchema schema(j.at("levels").get<std::vector<int>>());
    return ContingencyTable(std::move(schema), j.at("counts").get<std::vector<std::int64_t>>());
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("table JSON: ") + e.what());
  }
}

inline json table_to_json(const ContingencyTable& t) {
  return json{{"levels", t.schema().levels()}, {"counts", t.counts()}};
}

/// Reads a table file; JSON when the first non-blank character is '{', CSV otherwise.
inline ContingencyTable read_table(const std::string& path, const std::vector<int>& levels_override = {}) {
  const std::string text = detail::read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw InputError("table JSON '" + path + "': " + e.what());
    }
    return table_from_json(j);
  }
  std::istringstream in(text);
  return parse_table_csv(in, levels_override);
}

/// A prior specification resolved against a table's cell count.
struct PriorSpec {
  enum class Kind { constant, one_over_d, vector } kind = Kind::constant;
  double a = 1.0;
  Vector alpha;

  DirichletParams resolve(std::int64_t cells) const {
    switch (kind) {
      case Kind::constant: return DirichletParams::symmetric(cells, a);
      case Kind::one_over_d: return DirichletParams::symmetric(cells, 1.0 / static_cast<double>(cells - 1));
      case Kind::vector:
        if (alpha.size() != cells)
          throw InputError("prior vector has " + std::to_string(alpha.size()) + " entries, table has " +
                           std::to_string(cells) + " cells");
        return DirichletParams(alpha);
    }
    throw InputError("invalid prior");
  }

  std::string label() const {
    switch (kind) {
      case Kind::constant: {
        std::ostringstream ss;
        ss << a;
        return ss.str();
      }
      case Kind::one_over_d: return "1/d";
      case Kind::vector: return "vector";
    }
    return "?";
  }
};

inline PriorSpec parse_prior(const std::string& text) {
  PriorSpec spec;
  const std::string t = detail::trim(text);
  if (t == "1/d") {
    spec.kind = PriorSpec::Kind::one_over_d;
    return spec;
  }
  try {
    std::size_t pos = 0;
    const double a = std::stod(t, &pos);
    if (pos == t.size()) {
      if (!(a > 0.0) || !std::isfinite(a)) throw InputError("prior must be positive, got " + t);
      spec.a = a;
      return spec;
    }
  } catch (const InputError&) {
    throw;
  } catch (const std::exception&) {
  }
  // Otherwise a file of d+1 values.
  std::string body = detail::read_file(t);
  std::vector<double> values;
  const auto first = body.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && body[first] == '[') {
    try {
      values = json::parse(body).get<std::vector<double>>();
    } catch (const std::exception& e) {
      throw InputError("prior file '" + t + "': " + e.what());
    }
  } else {
    for (char& c : body)
      if (c == ',') c = ' ';
    std::istringstream in(body);
    std::string tok;
    while (in >> tok) values.push_back(detail::parse_double(tok, "prior file '" + t + "'"));
  }
  if (values.size() < 2) throw InputError("prior file '" + t + "' must contain at least two values");
  for (double v : values)
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError("prior file '" + t + "': values must be positive");
  spec.kind = PriorSpec::Kind::vector;
  spec.alpha = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return spec;
}

inline std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

inline json gaussian_to_json(const GaussianApprox& g) {
  json j;
  j["parametrization"] = to_string(g.parametrization);
  if (!g.labels.empty()) j["labels"] = g.labels;
  j["mean"] = to_std(g.mean);
  if (const auto* cs = std::get_if<CompoundSymmetryMatrix>(&g.cov)) {
    j["cov"] = {{"type", "cs"}, {"diag", to_std(cs->diag())}, {"common", cs->common()}};
  } else {
    const Matrix& m = std::get<Matrix>(g.cov);
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(to_std(m.row(r).transpose()));
    j["cov"] = {{"type", "dense"}, {"matrix", rows}};
  }
  return j;
}

inline GaussianApprox gaussian_from_json(const json& j) {
  try {
    GaussianApprox g;
    const std::string par = j.at("parametrization").get<std::string>();
    g.parametrization = par == "custom" ? DesignKind::custom : design_kind_from_string(par);
    if (j.contains("labels")) g.labels = j.at("labels").get<std::vector<std::string>>();
    const auto mean = j.at("mean").get<std::vector<double>>();
    g.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    const json& cov = j.at("cov");
    const std::string type = cov.at("type").get<std::string>();
    if (type == "cs") {
      const auto diag = cov.at("diag").get<std::vector<double>>();
      g.cov = CompoundSymmetryMatrix(Eigen::Map<const Vector>(diag.data(), static_cast<Eigen::Index>(diag.size())),
                                     cov.at("common").get<double>());
    } else if (type == "dense") {
      const auto rows = cov.at("matrix").get<std::vector<std::vector<double>>>();
      Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != rows.size()) throw InputError("dense covariance must be square");
        for (std::size_t c = 0; c < rows.size(); ++c)
          m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
      g.cov = std::move(m);
    } else {
      throw InputError("unknown covariance type '" + type + "'");
    }
    g.validate();
    return g;
  } catch (const InputError&) {
    throw;
  } catch (const std::exception& e) {
    throw InputError(std::string("GaussianApprox JSON: ") + e.what());
  }
}

inline json selection_to_json(const SelectionResult& s, const std::vector<std::string>& labels = {}) {
  json j;
  j["alpha"] = s.alpha;
  j["delta"] = s.delta;
  j["delta_max"] = s.delta_max;
  j["fallback"] = s.fallback;
  j["path_index"] = s.path_index;
  j["lambda"] = s.lambda;
  j["support_index"] = s.support;
  if (!labels.empty()) {
    json names = json::array();
    for (int k : s.support) names.push_back(labels.at(static_cast<std::size_t>(k)));
    j["support"] = names;
    j["labels"] = labels;
  }
  j["chosen"] = to_std(s.chosen);
  return j;
}

inline void write_sample_batch(const SampleBatch& batch, const DirichletParams& beta, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw InputError("cannot write '" + csv_path + "'");
  const Eigen::Index d = batch.draws.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j) out << ',';
    if (static_cast<Eigen::Index>(batch.labels.size()) == d) out << batch.labels[static_cast<std::size_t>(j)];
    else out << "theta_" << (j + 1);
  }
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < batch.draws.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", batch.draws(i, j));
      if (j) out << ',';
      out << buf;
    }
    out << '\n';
  }
  json side{{"seed", batch.seed},
            {"stream", batch.stream},
            {"rows", batch.draws.rows()},
            {"cols", d},
            {"parametrization", to_string(batch.parametrization)},
            {"beta", to_std(beta.beta())}};
  std::ofstream meta(csv_path + ".json");
  if (!meta) throw InputError("cannot write '" + csv_path + ".json'");
  meta << side.dump(2) << '\n';
}

inline SampleBatch read_sample_batch(const std::string& csv_path) {
  const json side = json::parse(detail::read_file(csv_path + ".json"));
  SampleBatch batch;
  batch.seed = side.at("seed").get<std::uint64_t>();
  batch.stream = side.at("stream").get<std::uint64_t>();
  const std::string par = side.at("parametrization").get<std::string>();
  batch.parametrization = par == "custom" ? DesignKind::custom : design_kind_from_string(par);
  const auto rows = side.at("rows").get<Eigen::Index>();
  const auto cols = side.at("cols").get<Eigen::Index>();
  std::istringstream in(detail::read_file(csv_path));
  std::string line;
  std::getline(in, line);
  batch.labels = detail::split(line, ',');
  batch.draws.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw InputError("sample batch '" + csv_path + "' is truncated");
    const auto fields = detail::split(line, ',');
    if (static_cast<Eigen::Index>(fields.size()) != cols) throw InputError("sample batch row has wrong width");
    for (Eigen::Index j = 0; j < cols; ++j)
      batch.draws(i, j) = detail::parse_double(fields[static_cast<std::size_t>(j)], "sample batch");
  }
  return batch;
}

using Edge = std::pair<int, int>;

inline std::vector<Edge> parse_reference_graph(std::istream& in) {
  std::vector<Edge> edges;
  std::string line;
  int line_no = 0;
  auto parse_id = [&](const std::string& tok) {
    const std::string where = "reference graph line " + std::to_string(line_no);
    if (tok.size() == 1 && std::isalpha(static_cast<unsigned char>(tok[0])))
      return std::tolower(static_cast<unsigned char>(tok[0])) - 'a';
    const auto v = detail::parse_int(tok, where);
    if (v < 0) throw InputError(where + ": variable ids must be nonnegative");
    return static_cast<int>(v);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    for (char& c : line)
      if (c == ',') c = ' ';
    std::istringstream ls(line);
    std::vector<std::string> toks;
    std::string tok;
    while (ls >> tok) toks.push_back(tok);
    if (toks.empty()) continue;
    if (toks.size() != 2) throw InputError("reference graph line " + std::to_string(line_no) + ": expected two ids");
    int u = parse_id(toks[0]);
    int v = parse_id(toks[1]);
    if (u == v) throw InputError("reference graph line " + std::to_string(line_no) + ": self loop");
    if (u > v) std::swap(u, v);
    edges.emplace_back(u, v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

inline std::vector<Edge> read_reference_graph(const std::string& path) {
  std::istringstream in(detail::read_file(path));
  return parse_reference_graph(in);
}

/// Reference edges restricted to `kept` (ascending variable ids), reported
/// over the pairs of the marginal table. No moralization is applied.
inline std::vector<bool> marginal_reference_edges(const std::vector<Edge>& edges, const std::vector<int>& kept) {
  const auto pairs = variable_pairs(static_cast<int>(kept.size()));
  std::vector<bool> out(pairs.size(), false);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Edge e{kept[static_cast<std::size_t>(pairs[k].first)], kept[static_cast<std::size_t>(pairs[k].second)]};
    out[k] = std::binary_search(edges.begin(), edges.end(), e);
  }
  return out;
}

}  // namespace dygauss
