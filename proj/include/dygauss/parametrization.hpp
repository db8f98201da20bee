#pragma once

// Contingency-table schemas, the canonical cell order, design matrices for
// the identity and corner parametrizations, and marginal tables.
//
// Cells are ordered mixed-radix with the last variable varying fastest, so a
// 2x2x2 table is listed 000, 001, 010, 011, 100, ... . Cell 0 is the
// reference cell; theta_j (identity parametrization) belongs to cell j.
// Corner parameters theta*_F(i_F) are indexed by the cell that carries i_F on
// F and zeros elsewhere, and columns follow the canonical order of those cells.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dygauss/simplex.hpp"

namespace dygauss {

using Cell = std::vector<int>;

class TableSchema {
 public:
  TableSchema() = default;
  explicit TableSchema(std::vector<int> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) throw std::invalid_argument("TableSchema: at least one variable required");
    std::int64_t cells = 1;
    for (int l : levels_) {
      if (l < 2) throw std::invalid_argument("TableSchema: every variable needs at least two levels");
      cells *= l;
      if (cells > (std::int64_t{1} << 30)) throw std::invalid_argument("TableSchema: table too large");
    }
    cells_ = cells;
  }

  /// p binary variables.
  static TableSchema binary(int p) { return TableSchema(std::vector<int>(static_cast<std::size_t>(p), 2)); }

  const std::vector<int>& levels() const { return levels_; }
  int num_vars() const { return static_cast<int>(levels_.size()); }
  std::int64_t num_cells() const { return cells_; }
  /// Free parameters: cells - 1.
  Eigen::Index dim() const { return static_cast<Eigen::Index>(cells_ - 1); }

  std::int64_t index_of(const Cell& cell) const {
    if (cell.size() != levels_.size()) throw std::invalid_argument("TableSchema: cell arity mismatch");
    std::int64_t idx = 0;
    for (std::size_t v = 0; v < levels_.size(); ++v) {
      if (cell[v] < 0 || cell[v] >= levels_[v]) throw std::out_of_range("TableSchema: level out of range");
      idx = idx * levels_[v] + cell[v];
    }
    return idx;
  }

  Cell cell_at(std::int64_t index) const {
    if (index < 0 || index >= cells_) throw std::out_of_range("TableSchema: cell index out of range");
    Cell cell(levels_.size());
    for (std::size_t v = levels_.size(); v-- > 0;) {
      cell[v] = static_cast<int>(index % levels_[v]);
      index /= levels_[v];
    }
    return cell;
  }

  /// Compact label: concatenated levels ("011") when every level fits in a
  /// single digit, otherwise dot-separated ("0.12.3").
  std::string label(const Cell& cell) const {
    bool single = std::all_of(levels_.begin(), levels_.end(), [](int l) { return l <= 10; });
    std::string out;
    for (std::size_t v = 0; v < cell.size(); ++v) {
      if (!single && v > 0) out += '.';
      out += std::to_string(cell[v]);
    }
    return out;
  }

  bool operator==(const TableSchema& other) const { return levels_ == other.levels_; }

 private:
  std::vector<int> levels_;
  std::int64_t cells_ = 0;
};

inline std::vector<Cell> canonical_cell_order(const TableSchema& schema) {
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(schema.num_cells()));
  for (std::int64_t i = 0; i < schema.num_cells(); ++i) cells.push_back(schema.cell_at(i));
  return cells;
}

class ContingencyTable {
 public:
  ContingencyTable(TableSchema schema, std::vector<std::int64_t> counts)
      : schema_(std::move(schema)), counts_(std::move(counts)) {
    if (static_cast<std::int64_t>(counts_.size()) != schema_.num_cells())
      throw std::invalid_argument("ContingencyTable: expected " + std::to_string(schema_.num_cells()) +
                                  " counts, got " + std::to_string(counts_.size()));
    for (auto c : counts_)
      if (c < 0) throw std::invalid_argument("ContingencyTable: counts must be nonnegative");
  }

  const TableSchema& schema() const { return schema_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }
  std::int64_t total() const { return std::accumulate(counts_.begin(), counts_.end(), std::int64_t{0}); }

  /// Counts as a real vector of length d+1 (reference cell first).
  Vector count_vector() const {
    Vector y(static_cast<Eigen::Index>(counts_.size()));
    for (std::size_t i = 0; i < counts_.size(); ++i) y[static_cast<Eigen::Index>(i)] = static_cast<double>(counts_[i]);
    return y;
  }

 private:
  TableSchema schema_;
  std::vector<std::int64_t> counts_;
};

/// Sum out every variable not in `keep` (0-based variable indices).
inline ContingencyTable marginalize(const ContingencyTable& table, std::vector<int> keep) {
  const auto& schema = table.schema();
  if (keep.empty()) throw std::invalid_argument("marginalize: keep set must be nonempty");
  std::sort(keep.begin(), keep.end());
  if (std::adjacent_find(keep.begin(), keep.end()) != keep.end())
    throw std::invalid_argument("marginalize: duplicate variable in keep set");
  if (keep.front() < 0 || keep.back() >= schema.num_vars())
    throw std::out_of_range("marginalize: variable index out of range");

  std::vector<int> levels;
  for (int v : keep) levels.push_back(schema.levels()[static_cast<std::size_t>(v)]);
  TableSchema out_schema(levels);
  std::vector<std::int64_t> out(static_cast<std::size_t>(out_schema.num_cells()), 0);
  Cell sub(keep.size());
  for (std::int64_t i = 0; i < schema.num_cells(); ++i) {
    const Cell cell = schema.cell_at(i);
    for (std::size_t k = 0; k < keep.size(); ++k) sub[k] = cell[static_cast<std::size_t>(keep[k])];
    out[static_cast<std::size_t>(out_schema.index_of(sub))] += table.counts()[static_cast<std::size_t>(i)];
  }
  return ContingencyTable(std::move(out_schema), std::move(out));
}

enum class DesignKind { identity, corner, custom };

inline const char* to_string(DesignKind kind) {
  switch (kind) {
    case DesignKind::identity: return "identity";
    case DesignKind::corner: return "corner";
    case DesignKind::custom: return "custom";
  }
  return "custom";
}

inline DesignKind design_kind_from_string(const std::string& s) {
  if (s == "identity") return DesignKind::identity;
  if (s == "corner") return DesignKind::corner;
  throw std::invalid_argument("unknown parametrization '" + s + "' (expected identity or corner)");
}

/// Binary non-singular d x d matrix X with log(pi/pi_0) = X theta*.
class DesignMatrix {
 public:
  DesignMatrix(Matrix entries, DesignKind kind, std::vector<std::string> labels = {})
      : entries_(std::move(entries)), kind_(kind), labels_(std::move(labels)) {
    if (entries_.rows() != entries_.cols() || entries_.rows() < 1)
      throw std::invalid_argument("DesignMatrix: must be square and non-empty");
    for (Eigen::Index i = 0; i < entries_.size(); ++i) {
      const double v = entries_.data()[i];
      if (v != 0.0 && v != 1.0) throw std::invalid_argument("DesignMatrix: entries must be 0 or 1");
    }
    if (!labels_.empty() && static_cast<Eigen::Index>(labels_.size()) != entries_.cols())
      throw std::invalid_argument("DesignMatrix: label count mismatch");

    // A binary unit lower-triangular matrix has determinant one; otherwise
    // fall back to a rank-revealing factorization.
    unit_lower_ = (entries_.diagonal().array() == 1.0).all();
    for (Eigen::Index c = 1; c < entries_.cols() && unit_lower_; ++c)
      unit_lower_ = entries_.col(c).head(c).isZero(0.0);
    if (!unit_lower_) {
      Eigen::FullPivLU<Matrix> full(entries_);
      if (full.rank() != entries_.rows()) throw std::invalid_argument("DesignMatrix: matrix is singular");
      lu_ = Eigen::PartialPivLU<Matrix>(entries_);
    }
  }

  Eigen::Index dim() const { return entries_.rows(); }
  const Matrix& entries() const { return entries_; }
  DesignKind kind() const { return kind_; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool unit_lower_triangular() const { return unit_lower_; }

  /// X^{-1} b for a vector or a block of columns.
  template <typename Derived>
  Matrix solve(const Eigen::MatrixBase<Derived>& rhs) const {
    if (rhs.rows() != dim()) throw std::invalid_argument("DesignMatrix::solve: dimension mismatch");
    if (unit_lower_) return entries_.triangularView<Eigen::UnitLower>().solve(rhs);
    return lu_->solve(rhs);
  }

  /// Dense X^{-1}.
  Matrix inverse() const { return solve(Matrix::Identity(dim(), dim())); }

 private:
  Matrix entries_;
  DesignKind kind_;
  std::vector<std::string> labels_;
  bool unit_lower_ = false;
  std::optional<Eigen::PartialPivLU<Matrix>> lu_;
};

namespace detail {
inline std::vector<std::string> cell_labels(const TableSchema& schema) {
  std::vector<std::string> labels;
  labels.reserve(static_cast<std::size_t>(schema.dim()));
  for (std::int64_t i = 1; i < schema.num_cells(); ++i) labels.push_back(schema.label(schema.cell_at(i)));
  return labels;
}
}  // namespace detail

inline DesignMatrix identity_design(const TableSchema& schema) {
  return DesignMatrix(Matrix::Identity(schema.dim(), schema.dim()), DesignKind::identity,
                      detail::cell_labels(schema));
}

inline DesignMatrix identity_design(Eigen::Index d) {
  return DesignMatrix(Matrix::Identity(d, d), DesignKind::identity);
}

/// Corner parametrization: the row of cell i = (i_E, 0) has a one in the
/// column of every cell (i_F, 0) with F a nonempty subset of E.
inline DesignMatrix corner_design(const TableSchema& schema) {
  const Eigen::Index d = schema.dim();
  Matrix x = Matrix::Zero(d, d);
  for (std::int64_t r = 1; r < schema.num_cells(); ++r) {
    const Cell cell = schema.cell_at(r);
    std::vector<std::size_t> support;
    for (std::size_t v = 0; v < cell.size(); ++v)
      if (cell[v] != 0) support.push_back(v);
    const std::uint64_t subsets = std::uint64_t{1} << support.size();
    Cell sub(cell.size());
    for (std::uint64_t mask = 1; mask < subsets; ++mask) {
      std::fill(sub.begin(), sub.end(), 0);
      for (std::size_t k = 0; k < support.size(); ++k)
        if (mask & (std::uint64_t{1} << k)) sub[support[k]] = cell[support[k]];
      x(r - 1, schema.index_of(sub) - 1) = 1.0;
    }
  }
  return DesignMatrix(std::move(x), DesignKind::corner, detail::cell_labels(schema));
}

inline DesignMatrix make_design(DesignKind kind, const TableSchema& schema) {
  switch (kind) {
    case DesignKind::identity: return identity_design(schema);
    case DesignKind::corner: return corner_design(schema);
    default: throw std::invalid_argument("make_design: custom designs must be built explicitly");
  }
}

/// theta* = X^{-1} theta.
inline Vector to_theta_star(const NaturalParam& theta, const DesignMatrix& x) {
  return x.solve(theta.theta());
}

/// theta = X theta*.
inline NaturalParam from_theta_star(const Vector& theta_star, const DesignMatrix& x) {
  if (theta_star.size() != x.dim()) throw std::invalid_argument("from_theta_star: dimension mismatch");
  return NaturalParam(x.entries() * theta_star);
}

}  // namespace dygauss
