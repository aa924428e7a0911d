#pragma once

#include "hrob/graph.hpp"
#include "hrob/theory.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hrob {

struct Flip {
    int u = 0, v = 0;
    bool add = true;  // add on non-edges, remove on existing edges
    bool operator==(const Flip&) const = default;
};

/// Ordered list of signed edge flips against a base graph.
struct Perturbation {
    std::vector<Flip> flips;
    int budget_used = 0;
};

struct PerturbationStats {
    int additions_total = 0;
    double additions_hetero_fraction = 0.0;  // 0 when no additions
    int deletions_total = 0;
    double deletions_homo_fraction = 0.0;    // 0 when no deletions
    double h_before = 0.0;
    double h_after = 0.0;
    std::optional<double> ht_before;  // targeted runs only
    std::optional<double> ht_after;
};

enum class TargetedMode { direct_only, with_influencers };

/// Greedy gray-box targeted attack through the linear surrogate. Each step
/// rescores every candidate flip by the surrogate CM-loss increase (rank-1
/// re-aggregation under true renormalization), applies the best, and stops
/// at the budget or when no flip improves. Ties break by (score desc,
/// u asc, v asc). Flips that would isolate either endpoint are excluded.
Perturbation targeted_attack(const LabeledGraph& g, const LinearSurrogate& surrogate, int target,
                             int budget, TargetedMode mode);

/// Convenience overload fitting the surrogate on the given train nodes.
Perturbation targeted_attack(const LabeledGraph& g, const std::vector<int>& train_nodes,
                             int target, int budget, TargetedMode mode);

/// Greedy untargeted attack: budget = round(budget_fraction * |E|) flips
/// chosen by the gradient of the surrogate training loss with respect to a
/// dense virtual adjacency, refitting the surrogate every refit_every steps.
/// A documented simplification of meta-gradient attacks.
Perturbation untargeted_attack(const LabeledGraph& g, const std::vector<int>& train_nodes,
                               double budget_fraction, int refit_every = 10);

/// New graph with the flips applied; the original is untouched.
LabeledGraph apply_perturbation(const LabeledGraph& g, const Perturbation& p);

/// Classifies flips as homophilous/heterophilous and reports homophily
/// before/after (and target homophily when targets are given).
PerturbationStats perturbation_stats(const LabeledGraph& g, const Perturbation& p,
                                     const std::vector<int>* targets = nullptr);

// File format: one flip per line, "+ u v" or "- u v".
void save_perturbation(const Perturbation& p, const std::string& path);
Perturbation load_perturbation(const std::string& path);

} // namespace hrob
