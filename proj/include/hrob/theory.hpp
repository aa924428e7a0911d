#pragma once

#include "hrob/graph.hpp"

#include <string>
#include <vector>

namespace hrob {

/// Scalar bundle for the closed-form attack-loss analysis of the stylized
/// d-regular setup: homophily h, degree d, class count, feature signal p,
/// ego-mixing weight alpha, and the unit perturbation deltas (delta1 acts on
/// a homophilous edge/path, delta2 on a heterophilous one; each in {-1,0,1}).
struct TheoryParams {
    double h = 0.0;
    int d = 1;
    int num_classes = 2;
    double p = 1.0;
    double alpha = 0.0;
    int delta1 = 0;
    int delta2 = 0;
};

enum class Hop { direct, indirect };

/// Closed-form optimal weights W* for the 2-layer linear GNN on the stylized
/// setup: c * (|Y| I - J) + J/|Y| with
/// c = (d+1)^2 (|Y|-1)^2 / (p (-dh|Y| + d - (|Y|-1))^2 |Y|).
Eigen::MatrixXd optimal_weights(double h, int d, int num_classes, double p);

/// Negative classification margin -(z_y - max_{k != y} z_k).
double cm_margin_loss(const Eigen::VectorXd& prediction, int true_label);

/// Change in CM attack loss for a direct (1-hop) unit perturbation:
/// (-d1 + d2) (|Y|-1)(dh|Y| - d + 2|Y| - 2) / (d(h|Y|-1) + |Y|-1)^2.
double delta_loss_direct(const TheoryParams& p);

/// Change in CM attack loss for an indirect (2-hop) unit perturbation:
/// (-d1 + d2) (|Y|-1) / (d(h|Y|-1) + |Y|-1).
double delta_loss_indirect(const TheoryParams& p);

/// Change in CM attack loss for the single ego-mixing layer
/// ((1-alpha) A_bar + alpha I) X W:
/// [((1-a)|Y| + a - 1) d1 + (a-1)(|Y|-1) d2] / (d(a(h-1) - h)|Y| + d).
double delta_loss_alpha(const TheoryParams& p);

/// Degree at which the effective direction of direct (indirect) perturbations
/// flips in the heterophilous regime h < 1/|Y|:
/// direct 2(|Y|-1)/(1-h|Y|), indirect (|Y|-1)/(1-h|Y|).
double degree_threshold(double h, int num_classes, Hop hop);

/// Independent oracle for the closed forms: builds the stylized aggregated
/// feature rows numerically (normalization denominators frozen at d+1 per
/// hop), numerically inverts the construction matrix in extended precision,
/// applies the flip to the target row aggregation and returns the change in
/// CM loss measured against the perturbed companion class. Shares no code
/// with the delta_loss_* closed forms.
double frozen_normalization_simulate(const TheoryParams& p, Hop hop);

/// Same oracle for the single ego-mixing layer (direct perturbations only).
double frozen_normalization_simulate_alpha(const TheoryParams& p);

/// True-renormalization simulation on an actual graph: fits W on the clean
/// graph (one train node per class), applies the edge flip (target, other)
/// with full recomputation of the row-stochastic normalization, and returns
/// the change in margin against comparison_class. Used for sign-level checks.
double true_renormalization_simulate(const LabeledGraph& g, int target, int other, bool add,
                                     int comparison_class);

/// Gray-box linear surrogate f(A, X) = prop(A) X W.
struct LinearSurrogate {
    enum class Propagation { two_layer_self_loop, one_layer_self_loop, alpha_mix };
    Eigen::MatrixXd weights;  // F x |Y|
    Propagation propagation = Propagation::two_layer_self_loop;
    double alpha = 0.0;
    bool rank_deficient = false;  // warning channel; weights still valid (minimum-norm)
};

/// Least-squares fit of W on [A_bar_s^2 X]_train against one-hot labels.
/// Deterministic; minimum-norm when the aggregated rows are rank-deficient.
LinearSurrogate fit_linear_surrogate(const LabeledGraph& g, const std::vector<int>& train_nodes);

/// Surrogate predictions (n x |Y|).
Eigen::MatrixXd surrogate_predict(const LinearSurrogate& s, const LabeledGraph& g);

struct TheoremCheckFailure {
    std::string check;
    std::string params;
    double value = 0.0;
};

struct TheoremReport {
    long checks = 0;
    std::vector<TheoremCheckFailure> failures;
    long pass_count() const { return checks - static_cast<long>(failures.size()); }
};

struct VerifyGrid {
    std::vector<int> num_classes{2, 3, 5, 7};
    std::vector<double> homophily{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::vector<int> degrees;    // default 1..32
    std::vector<double> alphas{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    VerifyGrid() {
        for (int d = 1; d <= 32; ++d) degrees.push_back(d);
    }
};

/// Checks, for every grid point: (a) the sign of every closed form matches
/// the published valid-delta ranges (both hops, both regimes); (b) direct
/// dominance over indirect for effective perturbations when h > 1/|Y|;
/// (c) strict alpha-mixing dominance when alpha > 1/(1+d), h > 1/|Y| and
/// delta1 < delta2. Failures are report content, not errors.
TheoremReport verify_theorems(const VerifyGrid& grid);

} // namespace hrob
