#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "s3rec/errors.hpp"
#include "s3rec/ring.hpp"

namespace s3rec {

template <typename T>
constexpr bool value_is_zero(const T& v) {
  if constexpr (std::is_same_v<T, RingElement>) {
    return v.v == 0;
  } else {
    return v == T{};
  }
}

// Row-major dense matrix over reals (model side) or ring elements
// (protocol side).
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  Matrix(size_t rows, size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ShapeError("matrix data length != rows*cols");
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  T& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using RingMatrix = Matrix<RingElement>;

struct Loc {
  uint32_t row = 0;
  uint32_t col = 0;
  friend auto operator<=>(const Loc&, const Loc&) = default;
};

// The paper's (l_y, v_y) pair: locations sorted row-major with no
// duplicates, values parallel to them. Explicit zeros are permitted so a
// public support can be shape-stable regardless of the data (the diagonal
// matrices in the insensitive protocol rely on this).
template <typename T>
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols) {}

  // Sums duplicate entries and drops zeros; the canonical ingestion path.
  static SparseMatrix from_entries(size_t rows, size_t cols,
                                   std::vector<std::tuple<uint32_t, uint32_t, T>> entries) {
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return std::pair(std::get<0>(a), std::get<1>(a)) < std::pair(std::get<0>(b), std::get<1>(b));
    });
    SparseMatrix m(rows, cols);
    for (const auto& [r, c, v] : entries) {
      if (r >= rows || c >= cols) throw ShapeError("sparse entry out of bounds");
      if (!m.locs_.empty() && m.locs_.back() == Loc{r, c}) {
        m.vals_.back() = m.vals_.back() + v;
      } else {
        m.locs_.push_back({r, c});
        m.vals_.push_back(v);
      }
    }
    // Drop entries that cancelled to zero.
    size_t w = 0;
    for (size_t i = 0; i < m.vals_.size(); i++) {
      if (!value_is_zero(m.vals_[i])) {
        m.locs_[w] = m.locs_[i];
        m.vals_[w] = m.vals_[i];
        w++;
      }
    }
    m.locs_.resize(w);
    m.vals_.resize(w);
    return m;
  }

  // Trusted constructor for pre-sorted support that may include zeros.
  static SparseMatrix from_sorted(size_t rows, size_t cols, std::vector<Loc> locs,
                                  std::vector<T> vals) {
    if (locs.size() != vals.size()) throw ShapeError("loc/value length mismatch");
    SparseMatrix m(rows, cols);
    for (size_t i = 0; i < locs.size(); i++) {
      if (locs[i].row >= rows || locs[i].col >= cols) throw ShapeError("sparse entry out of bounds");
      if (i > 0 && !(locs[i - 1] < locs[i])) throw UsageError("locations not strictly sorted");
    }
    m.locs_ = std::move(locs);
    m.vals_ = std::move(vals);
    return m;
  }

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t nnz() const { return locs_.size(); }
  double density() const {
    return rows_ * cols_ == 0 ? 0.0 : static_cast<double>(nnz()) / (rows_ * cols_);
  }
  const std::vector<Loc>& locs() const { return locs_; }
  const std::vector<T>& vals() const { return vals_; }

  size_t distinct_rows() const {
    size_t d = 0;
    for (size_t i = 0; i < locs_.size(); i++) {
      if (i == 0 || locs_[i].row != locs_[i - 1].row) d++;
    }
    return d;
  }

  Matrix<T> to_dense() const {
    Matrix<T> m(rows_, cols_);
    for (size_t i = 0; i < locs_.size(); i++) m(locs_[i].row, locs_[i].col) = vals_[i];
    return m;
  }

  SparseMatrix transpose() const {
    std::vector<std::tuple<uint32_t, uint32_t, T>> flipped;
    flipped.reserve(locs_.size());
    for (size_t i = 0; i < locs_.size(); i++) {
      flipped.emplace_back(locs_[i].col, locs_[i].row, vals_[i]);
    }
    std::sort(flipped.begin(), flipped.end(), [](const auto& a, const auto& b) {
      return std::pair(std::get<0>(a), std::get<1>(a)) < std::pair(std::get<0>(b), std::get<1>(b));
    });
    SparseMatrix m(cols_, rows_);
    for (const auto& [r, c, v] : flipped) {
      m.locs_.push_back({r, c});
      m.vals_.push_back(v);
    }
    return m;
  }

 private:
  size_t rows_ = 0, cols_ = 0;
  std::vector<Loc> locs_;
  std::vector<T> vals_;
};

template <typename T>
SparseMatrix<T> to_loc_val(const Matrix<T>& m) {
  std::vector<std::tuple<uint32_t, uint32_t, T>> entries;
  for (size_t r = 0; r < m.rows(); r++) {
    for (size_t c = 0; c < m.cols(); c++) {
      if (!value_is_zero(m(r, c))) {
        entries.emplace_back(static_cast<uint32_t>(r), static_cast<uint32_t>(c), m(r, c));
      }
    }
  }
  return SparseMatrix<T>::from_entries(m.rows(), m.cols(), std::move(entries));
}

template <typename T>
struct DiagonalMatrix {
  size_t dim = 0;
  std::vector<T> diag;

  DiagonalMatrix() = default;
  explicit DiagonalMatrix(size_t d) : dim(d), diag(d) {}

  // Full diagonal support, zeros kept: the support is public shape, not data.
  SparseMatrix<T> to_sparse_full() const {
    std::vector<Loc> locs(dim);
    for (size_t i = 0; i < dim; i++) locs[i] = {static_cast<uint32_t>(i), static_cast<uint32_t>(i)};
    return SparseMatrix<T>::from_sorted(dim, dim, std::move(locs), diag);
  }
};

// D = diag(row sums), E = diag(column sums) of a square matrix.
template <typename T>
std::pair<DiagonalMatrix<T>, DiagonalMatrix<T>> build_d_e(const SparseMatrix<T>& s) {
  if (s.rows() != s.cols()) throw ShapeError("build_d_e: matrix must be square");
  DiagonalMatrix<T> d(s.rows()), e(s.rows());
  for (size_t i = 0; i < s.nnz(); i++) {
    d.diag[s.locs()[i].row] = d.diag[s.locs()[i].row] + s.vals()[i];
    e.diag[s.locs()[i].col] = e.diag[s.locs()[i].col] + s.vals()[i];
  }
  return {std::move(d), std::move(e)};
}

// Aligned bins for one output row: for each output column j, the x-entries
// of X's row i that meet a nonzero of Y's column j, and those nonzeros, in
// ascending row order. Total pairs across all (i, j) is k * nnz.
template <typename T>
struct BinTable {
  std::vector<std::vector<std::pair<uint32_t, T>>> bins;
};

// Per-column support of Y, shared by both parties' bin construction so the
// alignment needs no negotiation: ascending (row, value) lists per column.
template <typename T>
std::vector<std::vector<std::pair<uint32_t, T>>> column_support(const SparseMatrix<T>& y) {
  std::vector<std::vector<std::pair<uint32_t, T>>> cols(y.cols());
  for (size_t i = 0; i < y.nnz(); i++) {
    cols[y.locs()[i].col].emplace_back(y.locs()[i].row, y.vals()[i]);
  }
  for (auto& c : cols) {
    std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return cols;
}

template <typename T>
std::pair<BinTable<T>, BinTable<T>> build_bins(const Matrix<T>& x, size_t row_i,
                                               const SparseMatrix<T>& y) {
  if (x.cols() != y.rows()) throw ShapeError("build_bins: X cols != Y rows");
  if (row_i >= x.rows()) throw ShapeError("build_bins: row index out of range");
  auto support = column_support(y);
  BinTable<T> tx, ty;
  tx.bins.resize(y.cols());
  ty.bins.resize(y.cols());
  for (size_t j = 0; j < y.cols(); j++) {
    for (const auto& [a, v] : support[j]) {
      tx.bins[j].emplace_back(a, x(row_i, a));
      ty.bins[j].emplace_back(a, v);
    }
  }
  return {std::move(tx), std::move(ty)};
}

// Exact plaintext product; the reference for every secure protocol. Ring
// accumulation wraps mod 2^64, which is the exact answer in the ring.
template <typename T>
Matrix<T> matmul_oracle(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions disagree");
  Matrix<T> out(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); i++) {
    for (size_t l = 0; l < a.cols(); l++) {
      const T& x = a(i, l);
      if (value_is_zero(x)) continue;
      for (size_t j = 0; j < b.cols(); j++) {
        out(i, j) = out(i, j) + x * b(l, j);
      }
    }
  }
  return out;
}

template <typename T>
Matrix<T> matmul_oracle(const Matrix<T>& a, const SparseMatrix<T>& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions disagree");
  Matrix<T> out(a.rows(), b.cols());
  for (size_t i = 0; i < a.rows(); i++) {
    for (size_t e = 0; e < b.nnz(); e++) {
      out(i, b.locs()[e].col) = out(i, b.locs()[e].col) + a(i, b.locs()[e].row) * b.vals()[e];
    }
  }
  return out;
}

// Plaintext dense helpers used by the recommender.
inline RealMatrix transpose(const RealMatrix& a) {
  RealMatrix out(a.cols(), a.rows());
  for (size_t r = 0; r < a.rows(); r++) {
    for (size_t c = 0; c < a.cols(); c++) out(c, r) = a(r, c);
  }
  return out;
}

inline RealMatrix operator+(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("matrix add shape mismatch");
  RealMatrix out = a;
  for (size_t i = 0; i < out.data().size(); i++) out.data()[i] += b.data()[i];
  return out;
}

inline RealMatrix operator-(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("matrix sub shape mismatch");
  RealMatrix out = a;
  for (size_t i = 0; i < out.data().size(); i++) out.data()[i] -= b.data()[i];
  return out;
}

inline RealMatrix operator*(double s, const RealMatrix& a) {
  RealMatrix out = a;
  for (auto& v : out.data()) v *= s;
  return out;
}

inline RealMatrix hadamard(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("hadamard shape mismatch");
  RealMatrix out = a;
  for (size_t i = 0; i < out.data().size(); i++) out.data()[i] *= b.data()[i];
  return out;
}

inline double max_abs_diff(const RealMatrix& a, const RealMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("max_abs_diff shape mismatch");
  double m = 0;
  for (size_t i = 0; i < a.data().size(); i++) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

// Elementwise fixed-point encode/decode between real and ring matrices.
inline RingMatrix encode_matrix(const RealMatrix& m, const FixedPointCodec& codec) {
  RingMatrix out(m.rows(), m.cols());
  for (size_t i = 0; i < m.data().size(); i++) out.data()[i] = codec.encode(m.data()[i]);
  return out;
}

inline RealMatrix decode_matrix(const RingMatrix& m, const FixedPointCodec& codec,
                                int scale_bits) {
  RealMatrix out(m.rows(), m.cols());
  for (size_t i = 0; i < m.data().size(); i++) {
    out.data()[i] = codec.decode_scale(m.data()[i], scale_bits);
  }
  return out;
}

inline SparseMatrix<RingElement> encode_sparse(const SparseMatrix<double>& m,
                                               const FixedPointCodec& codec) {
  std::vector<RingElement> vals(m.nnz());
  for (size_t i = 0; i < m.nnz(); i++) vals[i] = codec.encode(m.vals()[i]);
  return SparseMatrix<RingElement>::from_sorted(m.rows(), m.cols(), m.locs(), std::move(vals));
}

}  // namespace s3rec
