#include "sagal/sparse.hpp"

#include <algorithm>
#include <cmath>

namespace sagal {

double CsrMatrix::at(std::size_t r, std::size_t c) const {
  auto cols_r = row_cols(r);
  auto it = std::lower_bound(cols_r.begin(), cols_r.end(),
                             static_cast<NodeId>(c));
  if (it == cols_r.end() || *it != c) return 0.0;
  return values[row_ptr[r] + static_cast<std::size_t>(it - cols_r.begin())];
}

CsrMatrix CsrMatrix::transpose() const {
  CsrMatrix t;
  t.rows = cols;
  t.cols = rows;
  t.row_ptr.assign(cols + 1, 0);
  for (NodeId c : col_idx) ++t.row_ptr[c + 1];
  for (std::size_t i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
  t.col_idx.resize(nnz());
  t.values.resize(nnz());
  std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
  // Rows visited in ascending order, so each transposed row stays sorted.
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      std::size_t dst = cursor[col_idx[p]]++;
      t.col_idx[dst] = static_cast<NodeId>(r);
      t.values[dst] = values[p];
    }
  }
  return t;
}

DenseMatrix CsrMatrix::to_dense() const {
  DenseMatrix d = DenseMatrix::Zero(static_cast<Eigen::Index>(rows),
                                    static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p)
      d(static_cast<Eigen::Index>(r), col_idx[p]) = values[p];
  return d;
}

void CsrMatrix::check() const {
  if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 ||
      row_ptr.back() != col_idx.size() || values.size() != col_idx.size())
    throw std::logic_error("csr: inconsistent array sizes");
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1])
      throw std::logic_error("csr: row pointers not monotone");
    for (std::size_t p = row_ptr[r]; p < row_ptr[r + 1]; ++p) {
      if (col_idx[p] >= cols)
        throw std::logic_error("csr: column index out of range");
      if (p > row_ptr[r] && col_idx[p] <= col_idx[p - 1])
        throw std::logic_error("csr: columns not strictly increasing");
      if (!std::isfinite(values[p]))
        throw std::logic_error("csr: non-finite value");
    }
  }
}

MemoryBudgetError::MemoryBudgetError(std::size_t retained, std::size_t budget)
    : std::runtime_error(
          "sparse product retained " + std::to_string(retained) +
          " entries, above the budget of " + std::to_string(budget) +
          "; increase the pruning threshold epsilon"),
      retained_(retained) {}

CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b,
                   double prune_threshold, std::size_t max_entries) {
  if (a.cols != b.rows)
    throw std::invalid_argument("multiply: inner dimensions differ");
  CsrMatrix c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.row_ptr.assign(a.rows + 1, 0);

  // Gustavson row-by-row product with a dense accumulator.
  std::vector<double> acc(b.cols, 0.0);
  std::vector<char> touched(b.cols, 0);
  std::vector<NodeId> pattern;
  for (std::size_t r = 0; r < a.rows; ++r) {
    pattern.clear();
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p) {
      const double av = a.values[p];
      const std::size_t k = a.col_idx[p];
      for (std::size_t q = b.row_ptr[k]; q < b.row_ptr[k + 1]; ++q) {
        const NodeId j = b.col_idx[q];
        if (!touched[j]) {
          touched[j] = 1;
          pattern.push_back(j);
        }
        acc[j] += av * b.values[q];
      }
    }
    std::sort(pattern.begin(), pattern.end());
    for (NodeId j : pattern) {
      const double v = acc[j];
      if (std::abs(v) > prune_threshold) {
        c.col_idx.push_back(j);
        c.values.push_back(v);
      }
      acc[j] = 0.0;
      touched[j] = 0;
    }
    if (c.col_idx.size() > max_entries)
      throw MemoryBudgetError(c.col_idx.size(), max_entries);
    c.row_ptr[r + 1] = c.col_idx.size();
  }
  return c;
}

void multiply_dense(const CsrMatrix& a, const DenseMatrix& dense,
                    DenseMatrix& out) {
  if (a.cols != static_cast<std::size_t>(dense.rows()))
    throw std::invalid_argument("multiply_dense: inner dimensions differ");
  out.setZero(static_cast<Eigen::Index>(a.rows), dense.cols());
  for (std::size_t r = 0; r < a.rows; ++r) {
    auto dst = out.row(static_cast<Eigen::Index>(r));
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p)
      dst.noalias() += a.values[p] * dense.row(a.col_idx[p]);
  }
}

void multiply_transpose_dense(const CsrMatrix& a, const DenseMatrix& dense,
                              DenseMatrix& out) {
  if (a.rows != static_cast<std::size_t>(dense.rows()))
    throw std::invalid_argument(
        "multiply_transpose_dense: inner dimensions differ");
  out.setZero(static_cast<Eigen::Index>(a.cols), dense.cols());
  for (std::size_t r = 0; r < a.rows; ++r) {
    auto src = dense.row(static_cast<Eigen::Index>(r));
    for (std::size_t p = a.row_ptr[r]; p < a.row_ptr[r + 1]; ++p)
      out.row(a.col_idx[p]).noalias() += a.values[p] * src;
  }
}

CsrMatrix csr_from_dense_rows(std::span<const float> data, std::size_t rows,
                              std::size_t cols) {
  if (data.size() != rows * cols)
    throw std::invalid_argument("csr_from_dense_rows: size mismatch");
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_ptr.assign(rows + 1, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const float v = data[r * cols + c];
      if (v != 0.0f) {
        m.col_idx.push_back(static_cast<NodeId>(c));
        m.values.push_back(static_cast<double>(v));
      }
    }
    m.row_ptr[r + 1] = m.col_idx.size();
  }
  return m;
}

}  // namespace sagal
