#pragma once

#include "hrob/graph.hpp"

namespace hrob {

/// Low-rank spectral preprocessing of the adjacency.
///   Variant I  — rank-k approximation first, then add self-loops, then normalize.
///   Variant II — add self-loops first, then rank-k approximation, then normalize.
struct SvdConfig {
    int rank = 5;
    enum class Variant { I, II } variant = Variant::II;  // II is the default ordering
    enum class Norm { symmetric, row_stochastic } normalization = Norm::symmetric;
};

/// Best rank-k Frobenius approximation U_k S_k V_k^T with a fixed sign
/// convention: the largest-magnitude entry of each left singular vector is
/// nonnegative.
Eigen::MatrixXd truncated_svd(const Eigen::MatrixXd& a, int k);

/// Dense normalization of a possibly signed matrix. Row-stochastic divides by
/// the signed row sum; symmetric uses D^-1/2 M D^-1/2 with D the row sums.
/// Errors with ZeroRowAfterApproximation on nonpositive row sums.
Eigen::MatrixXd normalize_dense(const Eigen::MatrixXd& m, SvdConfig::Norm norm);

/// The preprocessed propagation matrix per the configured variant ordering.
Eigen::MatrixXd svd_preprocess(const SparseAdjacency& a, const SvdConfig& cfg);

/// mean |diagonal| / mean |off-diagonal|; the variant diagnostic.
double diagonal_dominance_ratio(const Eigen::MatrixXd& m);

} // namespace hrob
