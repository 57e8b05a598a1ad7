// Copyright 2026 The opsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Count-based word vectors: positive pointwise mutual information over a
// symmetric context window, factorized to `dim` dimensions.

#ifndef OPSUM_EMBEDDINGS_HPP_
#define OPSUM_EMBEDDINGS_HPP_

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "opsum/base.hpp"

namespace opsum {

// Sparse V x V PPMI matrix, max(0, log(c(w,u)·T / (c(w)·c(u)))).
inline Eigen::SparseMatrix<double> ppmi_matrix(std::span<const std::vector<int>> sequences,
                                               int vocab_size, int window) {
  if (window < 1) throw ValidationError("ppmi: window must be >= 1");
  std::vector<Eigen::Triplet<double>> trips;
  for (const auto& seq : sequences) {
    const int n = static_cast<int>(seq.size());
    for (int i = 0; i < n; ++i) {
      if (seq[i] < 0 || seq[i] >= vocab_size) throw ValidationError("ppmi: token id out of range");
      for (int j = std::max(0, i - window); j <= std::min(n - 1, i + window); ++j)
        if (j != i) trips.emplace_back(seq[i], seq[j], 1.0);
    }
  }
  Eigen::SparseMatrix<double> C(vocab_size, vocab_size);
  C.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd row = Eigen::VectorXd::Zero(vocab_size);
  for (int k = 0; k < C.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(C, k); it; ++it) row(it.row()) += it.value();
  const double total = row.sum();
  std::vector<Eigen::Triplet<double>> out;
  for (int k = 0; k < C.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(C, k); it; ++it) {
      double v = std::log(it.value() * total / (row(it.row()) * row(it.col())));
      if (v > 0.0) out.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), v);
    }
  }
  Eigen::SparseMatrix<double> P(vocab_size, vocab_size);
  P.setFromTriplets(out.begin(), out.end());
  return P;
}

// Rows are U_k·sqrt(λ_k) for the top-`dim` eigenpairs of the PPMI matrix,
// found by randomized subspace iteration, then scaled to root-mean-square
// `scale`. Words never seen get small random vectors. Deterministic in
// `seed`.
inline Eigen::MatrixXd cooccurrence_embeddings(std::span<const std::vector<int>> sequences,
                                               int vocab_size, int dim, std::uint64_t seed,
                                               int window = 2, double scale = 1.0,
                                               int power_iterations = 6) {
  if (dim < 1 || vocab_size < 1) throw ValidationError("cooccurrence_embeddings: bad shape");
  auto P = ppmi_matrix(sequences, vocab_size, window);
  std::mt19937_64 rng(derive_seed(seed, 0xe3b));
  std::normal_distribution<double> normal(0.0, 1.0);
  const int k = std::min(vocab_size, dim + 8);
  Eigen::MatrixXd Q(vocab_size, k);
  for (Eigen::Index c = 0; c < k; ++c)
    for (Eigen::Index r = 0; r < vocab_size; ++r) Q(r, c) = normal(rng);
  auto orthonormalize = [](const Eigen::MatrixXd& M) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
    return Eigen::MatrixXd(qr.householderQ() * Eigen::MatrixXd::Identity(M.rows(), M.cols()));
  };
  Q = orthonormalize(P * Q);
  for (int it = 0; it < power_iterations; ++it) Q = orthonormalize(P * Q);
  Eigen::MatrixXd T = Q.transpose() * (P * Q);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (T + T.transpose()));
  Eigen::MatrixXd emb = Eigen::MatrixXd::Zero(vocab_size, dim);
  const int take = std::min(dim, k);
  for (int c = 0; c < take; ++c) {
    int idx = k - 1 - c;  // eigenvalues ascend
    double lambda = std::max(0.0, es.eigenvalues()(idx));
    emb.col(c) = Q * es.eigenvectors().col(idx) * std::sqrt(lambda);
  }
  double rms = std::sqrt(emb.array().square().mean());
  if (rms > 0.0) emb *= scale / rms;
  std::uniform_real_distribution<double> small(-0.01 * scale, 0.01 * scale);
  for (Eigen::Index r = 0; r < vocab_size; ++r)
    if (emb.row(r).squaredNorm() == 0.0)
      for (Eigen::Index c = 0; c < dim; ++c) emb(r, c) = small(rng);
  return emb;
}

}  // namespace opsum

#endif  // OPSUM_EMBEDDINGS_HPP_
