#include "hrob/defense.hpp"

#include "hrob/errors.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace hrob {

Eigen::MatrixXd truncated_svd(const Eigen::MatrixXd& a, int k) {
    const int n = static_cast<int>(a.rows());
    if (k < 1 || k > n) throw ConfigError("svd rank must be in [1, n]");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd u = svd.matrixU().leftCols(k);
    Eigen::MatrixXd v = svd.matrixV().leftCols(k);
    Eigen::VectorXd s = svd.singularValues().head(k);
    // sign convention: largest-magnitude entry of each left vector nonnegative
    for (int i = 0; i < k; ++i) {
        int arg = 0;
        for (int r = 1; r < u.rows(); ++r)
            if (std::fabs(u(r, i)) > std::fabs(u(arg, i))) arg = r;
        if (u(arg, i) < 0.0) {
            u.col(i) = -u.col(i);
            v.col(i) = -v.col(i);
        }
    }
    return u * s.asDiagonal() * v.transpose();
}

Eigen::MatrixXd normalize_dense(const Eigen::MatrixXd& m, SvdConfig::Norm norm) {
    const int n = static_cast<int>(m.rows());
    Eigen::VectorXd rowsum = m.rowwise().sum();
    for (int i = 0; i < n; ++i)
        if (rowsum(i) <= 0.0) throw ZeroRowAfterApproximationError(i);
    if (norm == SvdConfig::Norm::row_stochastic) return rowsum.cwiseInverse().asDiagonal() * m;
    Eigen::VectorXd dinv = rowsum.cwiseSqrt().cwiseInverse();
    return dinv.asDiagonal() * m * dinv.asDiagonal();
}

Eigen::MatrixXd svd_preprocess(const SparseAdjacency& a, const SvdConfig& cfg) {
    Eigen::MatrixXd dense = a.to_dense();
    const int n = a.num_nodes();
    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd m = cfg.variant == SvdConfig::Variant::I
                            ? Eigen::MatrixXd(truncated_svd(dense, cfg.rank) + eye)
                            : truncated_svd(dense + eye, cfg.rank);
    return normalize_dense(m, cfg.normalization);
}

double diagonal_dominance_ratio(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    double diag = 0.0, off = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            (i == j ? diag : off) += std::fabs(m(i, j));
    diag /= n;
    off /= static_cast<double>(n) * (n - 1);
    return diag / off;
}

} // namespace hrob
