#pragma once

#include "hrob/graph.hpp"

#include <cstdint>

namespace hrob {

/// How cross-class degree is distributed when it does not divide evenly.
///   exact    — every node has exactly (d - d_in)/(|Y|-1) neighbors in each
///              other class; errors when that is not an integer.
///   balanced — same-class degree is still exactly d_in, but the d - d_in
///              cross-class neighbors are spread round-robin over the other
///              classes (per-node counts differ by at most one). Realized
///              edge homophily is d_in/d in both modes.
enum class ClassMix { exact, balanced };

struct SynthSpec {
    int n = 0;               // node count, divisible by num_classes
    int d = 0;               // regular degree
    double h = 0.0;          // target homophily in [0, 1]
    int num_classes = 2;
    double p = 1.0;          // feature signal strength in (0, 1]
    std::uint64_t seed = 0;
    ClassMix mix = ClassMix::exact;
};

/// d-regular self-loop-free graph with exact per-node class mix: d_in =
/// round(h*d) same-class neighbors per node, remainder spread over other
/// classes per `mix`. Labels are assigned in contiguous balanced blocks.
/// Features are left empty; see signal_features.
LabeledGraph regular_homophily_graph(const SynthSpec& spec);

/// Row v = p * onehot(y_v) + (1-p)/|Y| in every coordinate (F = |Y|).
Eigen::MatrixXd signal_features(const std::vector<int>& labels, int num_classes, double p);

/// regular_homophily_graph with signal_features attached.
LabeledGraph make_synthetic(const SynthSpec& spec);

} // namespace hrob
