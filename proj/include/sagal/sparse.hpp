#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sagal {

using NodeId = std::uint32_t;

/// Row-major dense matrix used for activations, weights and gradients.
using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
struct CsrMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<NodeId> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return col_idx.size(); }

  std::span<const NodeId> row_cols(std::size_t r) const {
    return {col_idx.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values.data() + row_ptr[r], row_ptr[r + 1] - row_ptr[r]};
  }

  /// Entry lookup by binary search over the row; 0 when not stored.
  double at(std::size_t r, std::size_t c) const;

  CsrMatrix transpose() const;
  DenseMatrix to_dense() const;

  /// Structural and numeric check of the CSR invariants.
  void check() const;
};

class MemoryBudgetError : public std::runtime_error {
 public:
  MemoryBudgetError(std::size_t retained, std::size_t budget);
  std::size_t retained() const { return retained_; }

 private:
  std::size_t retained_;
};

/// C = A * B, dropping every product entry with |value| <= prune_threshold.
/// Throws MemoryBudgetError when more than max_entries survive.
CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b,
                   double prune_threshold = 0.0,
                   std::size_t max_entries = SIZE_MAX);

/// out = A * dense.
void multiply_dense(const CsrMatrix& a, const DenseMatrix& dense,
                    DenseMatrix& out);

/// out = A^T * dense, without materializing the transpose.
void multiply_transpose_dense(const CsrMatrix& a, const DenseMatrix& dense,
                              DenseMatrix& out);

/// Converts a row-major float buffer into CSR, skipping exact zeros.
CsrMatrix csr_from_dense_rows(std::span<const float> data, std::size_t rows,
                              std::size_t cols);

}  // namespace sagal
