#pragma once

#include "hrob/attack.hpp"
#include "hrob/certify.hpp"
#include "hrob/graph.hpp"
#include "hrob/model.hpp"
#include "hrob/synth.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hrob {

struct SplitAssignment {
    std::vector<int> train, val, test;
    std::uint64_t seed = 0;
    bool stratified = true;
    std::string warning;  // set when stratification was downgraded
};

/// Stratified-by-class split (downgraded to unstratified when a class is too
/// small, with a warning record). Deterministic per seed; global part sizes
/// are round(fraction * n).
SplitAssignment make_splits(const LabeledGraph& g, std::array<double, 3> fractions,
                            std::uint64_t seed);

void save_splits(const SplitAssignment& s, const std::string& path);
SplitAssignment load_splits(const std::string& path, int num_nodes);

enum class Scenario { clean, poison_targeted, evasion_targeted, poison_untargeted, evasion_untargeted };

std::string scenario_name(Scenario s);
Scenario scenario_from_name(const std::string& s);

struct ExperimentConfig {
    // dataset: either a directory or a synthetic spec
    std::string dataset_dir;          // empty = synthetic
    SynthSpec synth;
    std::vector<ModelConfig> models;
    std::vector<std::string> model_names;
    Scenario scenario = Scenario::clean;
    double budget_fraction = 0.2;     // untargeted
    int target_count = 0;             // 0 = auto: min(60, max(10, n/10))
    TargetedMode targeted_mode = TargetedMode::direct_only;
    std::optional<SmoothingScheme> smoothing;  // enables certification
    CertifyOptions cert;
    int cert_nodes = 20;
    int repetitions = 3;
    std::uint64_t seed = 1;
    TrainConfig train_overrides;      // applied on top of defaults_for(arch)
    bool has_train_overrides = false;
    std::array<double, 3> fractions{0.1, 0.1, 0.8};
};

/// Flat key=value config file; unknown keys are an error.
ExperimentConfig parse_experiment_config(const std::string& path);

struct ModelResult {
    std::string name;
    std::vector<double> clean_acc;     // per repetition
    std::vector<double> attacked_acc;  // per repetition (empty for clean scenario)
    std::vector<CertSummary> cert;     // per repetition (when smoothing enabled)
};

struct RepetitionStats {
    double h_before = 0.0, h_after = 0.0;
    std::optional<double> ht_before, ht_after;
    double additions_mean = 0.0;       // per perturbation
    double additions_hetero_pct = 0.0;  // pooled over flips
    double deletions_mean = 0.0;
    double deletions_homo_pct = 0.0;
    double hetero_increasing_pct = 0.0;  // pooled over all flips
};

struct ReportBundle {
    ExperimentConfig config;
    std::vector<ModelResult> models;
    std::vector<RepetitionStats> stats;  // per repetition (attack scenarios)
    std::vector<std::string> errors;     // per-repetition failures, bundle-level notes
};

ReportBundle run_experiment(const ExperimentConfig& cfg);

enum class ReportFormat { csv, json };

/// Writes stats (homophily-shift table), accuracy, and certification tables.
/// CSV and JSON encode identical numbers; identical config and seeds give
/// byte-identical files.
void emit_report(const ReportBundle& bundle, ReportFormat format, const std::string& out_dir);

double mean(const std::vector<double>& v);
double stdev(const std::vector<double>& v);

} // namespace hrob
