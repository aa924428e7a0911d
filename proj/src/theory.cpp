#include "hrob/theory.hpp"

#include "hrob/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hrob {

namespace {

constexpr double kSingularTol = 1e-9;

// d(h|Y|-1) + |Y|-1, the denominator root shared by the 2-layer forms.
long double margin_denominator(double h, int d, int y) {
    return static_cast<long double>(d) * (static_cast<long double>(h) * y - 1.0L) + (y - 1.0L);
}

// d(alpha(h-1) - h)|Y| + d, the denominator of the ego-mixing form.
long double alpha_denominator(double h, int d, int y, double alpha) {
    long double a = alpha;
    return static_cast<long double>(d) * ((a * (static_cast<long double>(h) - 1.0L) -
                                           static_cast<long double>(h)) * y + 1.0L);
}

using VecL = std::vector<long double>;
using MatL = std::vector<VecL>;

// Gaussian elimination with partial pivoting; solves M x = b in place.
VecL solve_ld(MatL m, VecL b) {
    const int n = static_cast<int>(b.size());
    for (int i = 0; i < n; ++i) {
        int piv = i;
        for (int j = i + 1; j < n; ++j)
            if (std::fabs(static_cast<double>(m[j][i])) > std::fabs(static_cast<double>(m[piv][i])))
                piv = j;
        std::swap(m[i], m[piv]);
        std::swap(b[i], b[piv]);
        if (m[i][i] == 0.0L) throw SingularConfigurationError("stylized system is singular");
        for (int j = i + 1; j < n; ++j) {
            long double f = m[j][i] / m[i][i];
            for (int k = i; k < n; ++k) m[j][k] -= f * m[i][k];
            b[j] -= f * b[i];
        }
    }
    VecL x(n);
    for (int i = n - 1; i >= 0; --i) {
        long double s = b[i];
        for (int k = i + 1; k < n; ++k) s -= m[i][k] * x[k];
        x[i] = s / m[i][i];
    }
    return x;
}

// Feature vector of a class-c node.
VecL stylized_feature(int c, int y, long double p) {
    VecL x(y, (1.0L - p) / y);
    x[c] += p;
    return x;
}

// Rows of [A_bar_s X] per class under the exact class-mix assumption,
// normalization frozen at d+1.
MatL stylized_layer1(long double h, int d, int y, long double p) {
    long double q = (1.0L - h) / (y - 1);
    MatL m(y, VecL(y));
    for (int c = 0; c < y; ++c) {
        VecL acc(y, 0.0L);
        auto add = [&](const VecL& x, long double w) {
            for (int j = 0; j < y; ++j) acc[j] += w * x[j];
        };
        add(stylized_feature(c, y, p), 1.0L + h * d);  // self-loop + same-class neighbors
        for (int c2 = 0; c2 < y; ++c2)
            if (c2 != c) add(stylized_feature(c2, y, p), q * d);
        for (int j = 0; j < y; ++j) m[c][j] = acc[j] / (d + 1);
    }
    return m;
}

MatL stylized_layer2(long double h, int d, int y, long double p) {
    MatL m1 = stylized_layer1(h, d, y, p);
    long double q = (1.0L - h) / (y - 1);
    MatL m2(y, VecL(y));
    for (int c = 0; c < y; ++c) {
        VecL acc(y, 0.0L);
        for (int j = 0; j < y; ++j) acc[j] += (1.0L + h * d) * m1[c][j];
        for (int c2 = 0; c2 < y; ++c2)
            if (c2 != c)
                for (int j = 0; j < y; ++j) acc[j] += q * d * m1[c2][j];
        for (int j = 0; j < y; ++j) m2[c][j] = acc[j] / (d + 1);
    }
    return m2;
}

// z' = row * M^-1 via solving M^T y = row.
VecL times_inverse(const MatL& m, const VecL& row) {
    const int n = static_cast<int>(row.size());
    MatL mt(n, VecL(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) mt[i][j] = m[j][i];
    return solve_ld(std::move(mt), row);
}

void check_params(const TheoryParams& p) {
    if (p.num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (p.d < 1) throw ConfigError("d must be >= 1");
    if (p.h < 0.0 || p.h > 1.0) throw ConfigError("h must be in [0, 1]");
    if (p.p <= 0.0 || p.p > 1.0) throw ConfigError("p must be in (0, 1]");
}

} // namespace

Eigen::MatrixXd optimal_weights(double h, int d, int num_classes, double p) {
    const int y = num_classes;
    long double g = margin_denominator(h, d, y);
    if (std::fabs(static_cast<double>(g)) < kSingularTol)
        throw SingularConfigurationError("optimal_weights: d(h|Y|-1) + |Y|-1 = 0");
    long double c = static_cast<long double>(d + 1) * (d + 1) * (y - 1.0L) * (y - 1.0L) /
                    (static_cast<long double>(p) * g * g * y);
    Eigen::MatrixXd w(y, y);
    for (int i = 0; i < y; ++i)
        for (int j = 0; j < y; ++j) {
            long double base = (i == j) ? (y - 1.0L) : -1.0L;
            w(i, j) = static_cast<double>(c * base + 1.0L / y);
        }
    return w;
}

double cm_margin_loss(const Eigen::VectorXd& prediction, int true_label) {
    double best_other = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < prediction.size(); ++k)
        if (k != true_label) best_other = std::max(best_other, prediction(k));
    return -(prediction(true_label) - best_other);
}

double delta_loss_direct(const TheoryParams& p) {
    check_params(p);
    const int y = p.num_classes;
    long double g = margin_denominator(p.h, p.d, y);
    if (std::fabs(static_cast<double>(g)) < kSingularTol)
        throw SingularConfigurationError("delta_loss_direct: zero denominator");
    long double num = (y - 1.0L) *
                      (static_cast<long double>(p.d) * p.h * y - p.d + 2.0L * y - 2.0L);
    return static_cast<double>((-p.delta1 + p.delta2) * num / (g * g));
}

double delta_loss_indirect(const TheoryParams& p) {
    check_params(p);
    const int y = p.num_classes;
    long double g = margin_denominator(p.h, p.d, y);
    if (std::fabs(static_cast<double>(g)) < kSingularTol)
        throw SingularConfigurationError("delta_loss_indirect: zero denominator");
    return static_cast<double>((-p.delta1 + p.delta2) * (y - 1.0L) / g);
}

double delta_loss_alpha(const TheoryParams& p) {
    check_params(p);
    if (p.alpha < 0.0 || p.alpha > 1.0) throw ConfigError("alpha must be in [0, 1]");
    const int y = p.num_classes;
    long double den = alpha_denominator(p.h, p.d, y, p.alpha);
    if (std::fabs(static_cast<double>(den)) < kSingularTol)
        throw SingularConfigurationError("delta_loss_alpha: zero denominator");
    long double a = p.alpha;
    long double num = ((1.0L - a) * y + a - 1.0L) * p.delta1 + (a - 1.0L) * (y - 1.0L) * p.delta2;
    return static_cast<double>(num / den);
}

double degree_threshold(double h, int num_classes, Hop hop) {
    const int y = num_classes;
    if (h >= 1.0 / y)
        throw NotHeterophilousError("degree_threshold requires h < 1/|Y|, got h=" +
                                    std::to_string(h));
    double scale = hop == Hop::direct ? 2.0 : 1.0;
    return scale * (y - 1) / (1.0 - h * y);
}

double frozen_normalization_simulate(const TheoryParams& p, Hop hop) {
    check_params(p);
    const int y = p.num_classes;
    const long double hp = p.h, pp = p.p;
    if (std::fabs(static_cast<double>(margin_denominator(p.h, p.d, y))) < kSingularTol)
        throw SingularConfigurationError("frozen simulation: stylized system singular");

    MatL m1 = stylized_layer1(hp, p.d, y, pp);
    MatL m2 = stylized_layer2(hp, p.d, y, pp);

    // target class 0; heterophilous flips act through class 1
    const int c = 0, comp = 1;
    VecL dz(y, 0.0L);
    auto add_flip = [&](int delta, int cls) {
        if (delta == 0) return;
        VecL x = stylized_feature(cls, y, pp);
        for (int j = 0; j < y; ++j) {
            long double outer = m1[cls][j];  // the flipped node joins the outer aggregation
            long double inner =
                hop == Hop::direct ? x[j] / (p.d + 1) : 0.0L;  // target's own row change
            dz[j] += static_cast<long double>(delta) / (p.d + 1) * (inner + outer);
        }
    };
    add_flip(p.delta1, c);
    add_flip(p.delta2, comp);

    VecL clean = times_inverse(m2, m2[c]);
    VecL row(y);
    for (int j = 0; j < y; ++j) row[j] = m2[c][j] + dz[j];
    VecL pert = times_inverse(m2, row);

    // margin against the perturbed companion class, as in the derivations
    long double before = -(clean[c] - clean[comp]);
    long double after = -(pert[c] - pert[comp]);
    return static_cast<double>(after - before);
}

double frozen_normalization_simulate_alpha(const TheoryParams& p) {
    check_params(p);
    const int y = p.num_classes;
    const long double hp = p.h, pp = p.p, a = p.alpha;
    if (std::fabs(static_cast<double>(alpha_denominator(p.h, p.d, y, p.alpha))) < kSingularTol)
        throw SingularConfigurationError("frozen alpha simulation: singular configuration");

    long double q = (1.0L - hp) / (y - 1);
    MatL m(y, VecL(y, 0.0L));
    for (int c = 0; c < y; ++c) {
        VecL nb(y, 0.0L);
        auto add = [&](const VecL& x, long double w) {
            for (int j = 0; j < y; ++j) nb[j] += w * x[j];
        };
        add(stylized_feature(c, y, pp), hp);
        for (int c2 = 0; c2 < y; ++c2)
            if (c2 != c) add(stylized_feature(c2, y, pp), q);
        VecL self = stylized_feature(c, y, pp);
        for (int j = 0; j < y; ++j) m[c][j] = (1.0L - a) * nb[j] + a * self[j];
    }

    const int c = 0, comp = 1;
    VecL dz(y, 0.0L);
    auto add_flip = [&](int delta, int cls) {
        if (delta == 0) return;
        VecL x = stylized_feature(cls, y, pp);
        for (int j = 0; j < y; ++j)
            dz[j] += (1.0L - a) * static_cast<long double>(delta) / p.d * x[j];
    };
    add_flip(p.delta1, c);
    add_flip(p.delta2, comp);

    VecL clean = times_inverse(m, m[c]);
    VecL row(y);
    for (int j = 0; j < y; ++j) row[j] = m[c][j] + dz[j];
    VecL pert = times_inverse(m, row);
    return static_cast<double>(-(pert[c] - pert[comp]) + (clean[c] - clean[comp]));
}

double true_renormalization_simulate(const LabeledGraph& g, int target, int other, bool add,
                                     int comparison_class) {
    const int n = g.num_nodes();
    const int y = g.num_classes;
    auto predict_row = [&](const SparseAdjacency& adj, const Eigen::MatrixXd& w) {
        Eigen::SparseMatrix<double> p = normalize(adj, NormMode::row_stochastic_self_loop);
        Eigen::MatrixXd ax = p * (p * g.features);
        return Eigen::VectorXd(ax.row(target) * w);
    };

    // one train node per class, fit on the clean graph
    std::vector<int> train;
    for (int c = 0; c < y; ++c)
        for (int v = 0; v < n; ++v)
            if (g.labels[v] == c) {
                train.push_back(v);
                break;
            }
    LinearSurrogate s = fit_linear_surrogate(g, train);

    Eigen::VectorXd z0 = predict_row(g.adj, s.weights);
    SparseAdjacency pert = g.adj;
    if (add)
        pert.add_edge(target, other);
    else
        pert.remove_edge(target, other);
    Eigen::VectorXd z1 = predict_row(pert, s.weights);

    const int c = g.labels[target];
    double before = -(z0(c) - z0(comparison_class));
    double after = -(z1(c) - z1(comparison_class));
    return after - before;
}

LinearSurrogate fit_linear_surrogate(const LabeledGraph& g, const std::vector<int>& train_nodes) {
    const int y = g.num_classes;
    std::vector<char> seen(y, 0);
    for (int v : train_nodes) seen[g.labels[v]] = 1;
    for (int c = 0; c < y; ++c)
        if (!seen[c]) throw MissingClassInTrainError(c);

    Eigen::SparseMatrix<double> p = normalize(g.adj, NormMode::row_stochastic_self_loop);
    Eigen::MatrixXd ax = p * (p * g.features);

    Eigen::MatrixXd a(train_nodes.size(), g.features.cols());
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(train_nodes.size(), y);
    for (std::size_t i = 0; i < train_nodes.size(); ++i) {
        a.row(static_cast<int>(i)) = ax.row(train_nodes[i]);
        b(static_cast<int>(i), g.labels[train_nodes[i]]) = 1.0;
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
    LinearSurrogate s;
    s.weights = cod.solve(b);
    s.rank_deficient = cod.rank() < std::min(a.rows(), a.cols());
    return s;
}

Eigen::MatrixXd surrogate_predict(const LinearSurrogate& s, const LabeledGraph& g) {
    switch (s.propagation) {
        case LinearSurrogate::Propagation::two_layer_self_loop: {
            Eigen::SparseMatrix<double> p = normalize(g.adj, NormMode::row_stochastic_self_loop);
            return p * (p * g.features) * s.weights;
        }
        case LinearSurrogate::Propagation::one_layer_self_loop: {
            Eigen::SparseMatrix<double> p = normalize(g.adj, NormMode::row_stochastic_self_loop);
            return p * g.features * s.weights;
        }
        case LinearSurrogate::Propagation::alpha_mix: {
            Eigen::SparseMatrix<double> p = normalize(g.adj, NormMode::row_stochastic);
            Eigen::MatrixXd h = (1.0 - s.alpha) * (p * g.features) + s.alpha * g.features;
            return h * s.weights;
        }
    }
    throw ConfigError("unknown surrogate propagation");
}

namespace {

std::string point_str(int y, double h, int d, int d1, int d2, double alpha = -1.0) {
    std::ostringstream os;
    os << "|Y|=" << y << " h=" << h << " d=" << d << " d1=" << d1 << " d2=" << d2;
    if (alpha >= 0.0) os << " alpha=" << alpha;
    return os.str();
}

} // namespace

TheoremReport verify_theorems(const VerifyGrid& grid) {
    TheoremReport rep;
    constexpr double kBoundaryTol = 1e-12;
    const std::pair<int, int> unit_cases[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

    auto expect = [&](bool ok, const std::string& check, const std::string& params, double val) {
        ++rep.checks;
        if (!ok) rep.failures.push_back({check, params, val});
    };

    for (int y : grid.num_classes) {
        for (double h : grid.homophily) {
            if (std::fabs(h - 1.0 / y) < 1e-12) continue;  // solution-set branch boundary
            const bool homophilous = h > 1.0 / y;
            for (int d : grid.degrees) {
                TheoryParams base;
                base.h = h;
                base.d = d;
                base.num_classes = y;
                double g = d * (h * y - 1.0) + (y - 1.0);
                if (std::fabs(g) < 1e-9) continue;  // singular configuration

                // (a) sign laws for every unit perturbation, direct and indirect
                for (auto [d1, d2] : unit_cases) {
                    TheoryParams tp = base;
                    tp.delta1 = d1;
                    tp.delta2 = d2;
                    double dl_dir = delta_loss_direct(tp);
                    double dl_ind = delta_loss_indirect(tp);
                    // the published ranges: hetero-increasing flips (d1<0 or d2>0) are
                    // effective below the threshold (always, when homophilous);
                    // the direction flips above it
                    auto expected_sign = [&](Hop hop) {
                        bool hetero_increasing = d1 < 0 || d2 > 0;
                        if (homophilous) return hetero_increasing ? 1 : -1;
                        double dstar = degree_threshold(h, y, hop);
                        if (std::fabs(d - dstar) < kBoundaryTol) return 0;  // boundary: loss is 0
                        bool below = d < dstar;
                        return (hetero_increasing == below) ? 1 : -1;
                    };
                    int sd = expected_sign(Hop::direct);
                    int si = expected_sign(Hop::indirect);
                    if (sd != 0)
                        expect(sd > 0 ? dl_dir > 0 : dl_dir < 0, "sign_direct",
                               point_str(y, h, d, d1, d2), dl_dir);
                    if (si != 0)
                        expect(si > 0 ? dl_ind > 0 : dl_ind < 0, "sign_indirect",
                               point_str(y, h, d, d1, d2), dl_ind);
                }

                // (b) direct dominance for effective perturbations, homophilous regime
                if (homophilous) {
                    for (auto [d1, d2] : {std::pair<int, int>{-1, 0}, std::pair<int, int>{0, 1}}) {
                        TheoryParams tp = base;
                        tp.delta1 = d1;
                        tp.delta2 = d2;
                        double dl_dir = delta_loss_direct(tp);
                        double dl_ind = delta_loss_indirect(tp);
                        expect(dl_dir > dl_ind, "direct_gt_indirect", point_str(y, h, d, d1, d2),
                               dl_dir - dl_ind);
                    }
                }

                // (c) strict alpha dominance: alpha > 1/(1+d), h > 1/|Y|, d1 < d2
                if (homophilous) {
                    for (double a : grid.alphas) {
                        if (a <= 1.0 / (1 + d)) continue;
                        for (auto [d1, d2] :
                             {std::pair<int, int>{-1, 0}, std::pair<int, int>{0, 1},
                              std::pair<int, int>{-1, 1}}) {
                            TheoryParams tp = base;
                            tp.delta1 = d1;
                            tp.delta2 = d2;
                            tp.alpha = a;
                            double dl_fs = delta_loss_indirect(tp);  // single-layer f_s form
                            double dl_f = delta_loss_alpha(tp);
                            expect(dl_f < dl_fs, "alpha_dominance", point_str(y, h, d, d1, d2, a),
                                   dl_fs - dl_f);
                        }
                    }
                }
            }
        }
    }
    return rep;
}

} // namespace hrob
