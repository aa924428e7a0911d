#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hrob {

/// Symmetric 0/1 adjacency without self-loops. Neighbor lists are kept
/// sorted ascending so every iteration over the graph is deterministic.
class SparseAdjacency {
public:
    SparseAdjacency() = default;
    explicit SparseAdjacency(int n) : n_(n), nbrs_(n) {}

    /// Build from an undirected edge list (each pair listed once, any order).
    static SparseAdjacency from_edges(int n, const std::vector<std::pair<int, int>>& edges);

    int num_nodes() const { return n_; }
    std::size_t num_edges() const;

    int degree(int v) const { return static_cast<int>(nbrs_[v].size()); }
    const std::vector<int>& neighbors(int v) const { return nbrs_[v]; }
    bool has_edge(int u, int v) const;

    void add_edge(int u, int v);
    void remove_edge(int u, int v);

    /// All edges as (u, v) with u < v, lexicographically sorted.
    std::vector<std::pair<int, int>> edges() const;

    Eigen::MatrixXd to_dense() const;

    bool operator==(const SparseAdjacency& o) const { return n_ == o.n_ && nbrs_ == o.nbrs_; }

private:
    int n_ = 0;
    std::vector<std::vector<int>> nbrs_;
};

enum class NormMode {
    row_stochastic,            // D^-1 A
    row_stochastic_self_loop,  // D_s^-1 (A + I)
    symmetric,                 // D^-1/2 A D^-1/2
    symmetric_self_loop,       // D_s^-1/2 (A + I) D_s^-1/2
};

/// Normalized propagation matrix. Modes without self-loops require every
/// node to have degree >= 1 (IsolatedNodeError otherwise).
Eigen::SparseMatrix<double> normalize(const SparseAdjacency& a, NormMode mode);

/// Entry (u,v) = 1 iff the shortest path between u and v has length exactly 2.
SparseAdjacency two_hop_adjacency(const SparseAdjacency& a);

struct LabeledGraph {
    SparseAdjacency adj;
    Eigen::MatrixXd features;  // n x F, may be 0-column
    std::vector<int> labels;   // class ids in [0, num_classes)
    int num_classes = 0;

    int num_nodes() const { return adj.num_nodes(); }
    void validate() const;  // label range, feature row count
};

struct HomophilyReport {
    double edge_homophily = 0.0;
    double random_baseline = 0.0;            // 1/|Y|
    std::optional<double> target_homophily;  // filled by target_homophily()
};

/// Fraction of edges whose endpoints share a label. Errors on edgeless graphs.
HomophilyReport edge_homophily(const LabeledGraph& g);

/// Mean over targets of the per-target fraction of homophilous incident edges.
double target_homophily(const LabeledGraph& g, const std::vector<int>& targets);

/// BFS snowball sample keeping floor(keep_ratio * deg) neighbors per pop
/// (at least 1 when deg >= 1), seeded from a random node of the largest
/// connected component. Stops as soon as n_target nodes are collected.
LabeledGraph snowball_sample(const LabeledGraph& g, int n_target, double keep_ratio,
                             std::uint64_t seed);

/// Node ids of the sampled subgraph in the original graph (same traversal
/// as snowball_sample; exposed for tests).
std::vector<int> snowball_sample_nodes(const LabeledGraph& g, int n_target, double keep_ratio,
                                       std::uint64_t seed);

/// Induced subgraph on the given nodes (ids relabeled by position).
LabeledGraph induced_subgraph(const LabeledGraph& g, const std::vector<int>& nodes);

// Dataset directory format: edges.tsv ("u<TAB>v", one undirected edge per
// line), labels.tsv ("node<TAB>label"), features.csv (row i = node i).
void save_dataset(const LabeledGraph& g, const std::string& dir);
LabeledGraph load_dataset(const std::string& dir);

} // namespace hrob
