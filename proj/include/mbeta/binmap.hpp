#pragma once

// Transformation matrices between m-variate binary outcomes and the 2^m
// multinomial cells: H maps cell probabilities to success probabilities,
// H2 holds the pairwise Hadamard row products, Htilde = [H; H2; 1] collects
// the full moment system. Cell indices are 1-based at the API boundary,
// matching the k = 1..w convention used throughout.

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mbeta/errors.hpp"

namespace mbeta {

inline constexpr int default_m_max = 14;

struct HBasis {
  int m = 0;
  std::size_t w = 0;      // 2^m
  Eigen::MatrixXd H;      // m x w; column k is the binary representation of k-1, MSB in row 0
  Eigen::MatrixXd H2;     // m(m-1)/2 x w; row for pair (j, j') is H.row(j) cwise* H.row(j')
  Eigen::MatrixXd Htilde; // r x w with r = 1 + m(m+1)/2; [H; H2; ones]

  int r() const { return 1 + m * (m + 1) / 2; }
  int n_pairs() const { return m * (m - 1) / 2; }

  // 0-based row of H2 for the 1-based pair j < jp.
  int pair_row(int j, int jp) const {
    require(1 <= j && j < jp && jp <= m, errc::domain_error, "pair indices out of range");
    // pairs enumerated (1,2),(1,3),...,(1,m),(2,3),...
    int before = (j - 1) * m - (j - 1) * j / 2;
    return before + (jp - j - 1);
  }
};

inline HBasis build_basis(int m, int m_max = default_m_max) {
  require(m >= 1, errc::domain_error, "dimension m must be >= 1");
  require(m <= m_max, errc::dimension_too_large,
          "m = " + std::to_string(m) + " exceeds m_max = " + std::to_string(m_max));
  HBasis b;
  b.m = m;
  b.w = std::size_t{1} << m;
  const auto w = static_cast<Eigen::Index>(b.w);
  b.H.setZero(m, w);
  for (Eigen::Index k = 0; k < w; ++k)
    for (int j = 0; j < m; ++j)
      b.H(j, k) = static_cast<double>((static_cast<std::uint64_t>(k) >> (m - 1 - j)) & 1u);

  b.H2.setZero(b.n_pairs(), w);
  int p = 0;
  for (int j = 0; j < m; ++j)
    for (int jp = j + 1; jp < m; ++jp, ++p)
      b.H2.row(p) = b.H.row(j).cwiseProduct(b.H.row(jp));

  b.Htilde.setZero(b.r(), w);
  b.Htilde.topRows(m) = b.H;
  b.Htilde.middleRows(m, b.n_pairs()) = b.H2;
  b.Htilde.bottomRows(1).setOnes();
  return b;
}

// 1-based cell index of a binary outcome vector.
inline std::size_t encode_outcome(const std::vector<std::uint8_t>& x) {
  std::size_t k = 0;
  for (auto v : x) {
    require(v <= 1, errc::non_binary_entry, "outcome entries must be 0 or 1");
    k = (k << 1) | v;
  }
  return k + 1;
}

// Binary outcome vector of the 1-based cell index k.
inline std::vector<std::uint8_t> decode_outcome(int m, std::size_t k) {
  require(k >= 1 && k <= (std::size_t{1} << m), errc::domain_error, "cell index out of range");
  std::vector<std::uint8_t> x(m);
  std::size_t v = k - 1;
  for (int j = m - 1; j >= 0; --j) {
    x[j] = static_cast<std::uint8_t>(v & 1u);
    v >>= 1;
  }
  return x;
}

inline std::string outcome_bits(int m, std::size_t k) {
  auto x = decode_outcome(m, k);
  std::string s(x.size(), '0');
  for (std::size_t i = 0; i < x.size(); ++i) s[i] = x[i] ? '1' : '0';
  return s;
}

// n x m binary data matrix, row-major.
struct BinaryData {
  std::size_t n = 0;
  int m = 0;
  std::vector<std::uint8_t> values;

  std::uint8_t operator()(std::size_t i, int j) const { return values[i * m + j]; }
};

struct CellCounts {
  std::vector<std::int64_t> d;  // length 2^m
  std::int64_t n = 0;           // sum of d

  Eigen::VectorXd as_vector() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d.size()));
    for (std::size_t k = 0; k < d.size(); ++k) v(static_cast<Eigen::Index>(k)) = static_cast<double>(d[k]);
    return v;
  }
};

inline CellCounts cell_counts(const BinaryData& data) {
  require(data.values.size() == data.n * static_cast<std::size_t>(data.m), errc::length_mismatch,
          "binary data storage does not match n x m");
  CellCounts cc;
  cc.d.assign(std::size_t{1} << data.m, 0);
  for (std::size_t i = 0; i < data.n; ++i) {
    std::size_t k = 0;
    for (int j = 0; j < data.m; ++j) {
      const auto v = data(i, j);
      require(v <= 1, errc::non_binary_entry,
              "entry at row " + std::to_string(i + 1) + ", column " + std::to_string(j + 1) +
                  " is not 0/1");
      k = (k << 1) | v;
    }
    ++cc.d[k];
  }
  cc.n = static_cast<std::int64_t>(data.n);
  return cc;
}

// Entrywise product of the rows of H indexed by the 1-based set J; indicator of
// the cells whose outcome has x_j = 1 for every j in J.
inline Eigen::RowVectorXd hadamard_row(const HBasis& basis, const std::vector<int>& J) {
  require(!J.empty(), errc::empty_index_set, "index set J must be nonempty");
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(static_cast<Eigen::Index>(basis.w));
  for (int j : J) {
    require(j >= 1 && j <= basis.m, errc::domain_error, "index in J out of range");
    row = row.cwiseProduct(basis.H.row(j - 1));
  }
  return row;
}

}  // namespace mbeta
