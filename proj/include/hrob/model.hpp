#pragma once

#include "hrob/defense.hpp"
#include "hrob/graph.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hrob {

enum class Arch { gcn, sage_separate, h2gcn_style, alpha_mix, mlp };

std::string arch_name(Arch a);
Arch arch_from_name(const std::string& s);

struct ModelConfig {
    Arch arch = Arch::gcn;
    int hidden_dim = 64;
    int num_layers = 2;          // aggregation rounds for h2gcn_style
    double alpha = 0.5;          // alpha_mix only
    double dropout = 0.0;
    std::optional<SvdConfig> svd;  // set by build_defended_model
    // Treat empty neighborhoods as a zero neighbor-aggregate instead of an
    // error. Randomized smoothing turns this on: heavy edge deletion
    // legitimately produces isolated nodes in sampled graphs.
    bool zero_fill_isolated = false;
};

struct TrainConfig {
    int max_iters = 200;
    int patience = 100;
    double learning_rate = 0.01;
    double weight_decay = 0.0;  // 5e-4 for gcn per defaults_for()
    std::uint64_t seed = 0;
};

/// Per-arch defaults: plain GD, lr 0.01, 200 iters, patience 100,
/// weight decay 5e-4 on gcn only.
TrainConfig defaults_for(Arch arch, std::uint64_t seed = 0);

struct TrainedModel {
    ModelConfig config;
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    std::vector<double> loss_trace;   // training loss per iteration
    double best_val_accuracy = 0.0;
    int best_iteration = -1;
};

/// Softmax class probabilities (n x |Y|), dropout disabled.
Eigen::MatrixXd model_forward(const TrainedModel& model, const LabeledGraph& g);

/// Full-batch gradient descent on cross-entropy over the train nodes with
/// early stopping on validation accuracy; returns the best-validation
/// snapshot. Bitwise deterministic given the seed.
TrainedModel train(const ModelConfig& config, const TrainConfig& tcfg, const LabeledGraph& g,
                   const std::vector<int>& train_nodes, const std::vector<int>& val_nodes);

/// Fraction of nodes whose argmax prediction equals the label; prediction
/// ties break toward the lowest class id.
double evaluate(const TrainedModel& model, const LabeledGraph& g, const std::vector<int>& nodes);

/// Swap the arch's propagation matrices for their low-rank normalized
/// counterparts; everything else identical. Supported for gcn,
/// sage_separate and h2gcn_style.
ModelConfig build_defended_model(const ModelConfig& base, const SvdConfig& cfg);

/// Training loss and analytic parameter gradients at the given parameters
/// (dropout ignored). Exposed for finite-difference verification.
double loss_and_gradients(const TrainedModel& model, const LabeledGraph& g,
                          const std::vector<int>& train_nodes,
                          std::vector<Eigen::MatrixXd>& grad_w,
                          std::vector<Eigen::VectorXd>& grad_b);

/// Fresh unoptimized parameters for the config (seeded Glorot-uniform).
TrainedModel init_model(const ModelConfig& config, int feature_dim, int num_classes,
                        std::uint64_t seed);

// Checkpoint format: one JSON header line (arch, dims, shapes), then the
// row-major float64 parameter arrays concatenated.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

} // namespace hrob
