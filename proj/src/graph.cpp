#include "hrob/graph.hpp"

#include "hrob/errors.hpp"
#include "hrob/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace hrob {

SparseAdjacency SparseAdjacency::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    SparseAdjacency a(n);
    for (auto [u, v] : edges) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw Error("edge endpoint out of range: (" + std::to_string(u) + "," + std::to_string(v) + ")");
        if (u == v) throw Error("self-loop not allowed: " + std::to_string(u));
        a.nbrs_[u].push_back(v);
        a.nbrs_[v].push_back(u);
    }
    for (auto& lst : a.nbrs_) {
        std::sort(lst.begin(), lst.end());
        lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
    }
    return a;
}

std::size_t SparseAdjacency::num_edges() const {
    std::size_t deg_sum = 0;
    for (const auto& lst : nbrs_) deg_sum += lst.size();
    return deg_sum / 2;
}

bool SparseAdjacency::has_edge(int u, int v) const {
    const auto& lst = nbrs_[u];
    return std::binary_search(lst.begin(), lst.end(), v);
}

void SparseAdjacency::add_edge(int u, int v) {
    auto ins = [](std::vector<int>& lst, int x) {
        lst.insert(std::lower_bound(lst.begin(), lst.end(), x), x);
    };
    ins(nbrs_[u], v);
    ins(nbrs_[v], u);
}

void SparseAdjacency::remove_edge(int u, int v) {
    auto del = [](std::vector<int>& lst, int x) {
        lst.erase(std::lower_bound(lst.begin(), lst.end(), x));
    };
    del(nbrs_[u], v);
    del(nbrs_[v], u);
}

std::vector<std::pair<int, int>> SparseAdjacency::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(num_edges());
    for (int u = 0; u < n_; ++u)
        for (int v : nbrs_[u])
            if (u < v) out.emplace_back(u, v);
    return out;
}

Eigen::MatrixXd SparseAdjacency::to_dense() const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
    for (int u = 0; u < n_; ++u)
        for (int v : nbrs_[u]) m(u, v) = 1.0;
    return m;
}

Eigen::SparseMatrix<double> normalize(const SparseAdjacency& a, NormMode mode) {
    const int n = a.num_nodes();
    const bool self_loop = mode == NormMode::row_stochastic_self_loop ||
                           mode == NormMode::symmetric_self_loop;
    const bool symmetric = mode == NormMode::symmetric ||
                           mode == NormMode::symmetric_self_loop;

    std::vector<double> deg(n);
    for (int v = 0; v < n; ++v) {
        deg[v] = a.degree(v) + (self_loop ? 1.0 : 0.0);
        if (deg[v] == 0.0) throw IsolatedNodeError(v);
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * a.num_edges() + (self_loop ? n : 0));
    for (int u = 0; u < n; ++u) {
        if (self_loop) {
            double w = symmetric ? 1.0 / std::sqrt(deg[u] * deg[u]) : 1.0 / deg[u];
            trips.emplace_back(u, u, w);
        }
        for (int v : a.neighbors(u)) {
            double w = symmetric ? 1.0 / std::sqrt(deg[u] * deg[v]) : 1.0 / deg[u];
            trips.emplace_back(u, v, w);
        }
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

SparseAdjacency two_hop_adjacency(const SparseAdjacency& a) {
    const int n = a.num_nodes();
    SparseAdjacency out(n);
    std::vector<std::pair<int, int>> pairs;
    std::vector<char> mark(n, 0);
    for (int u = 0; u < n; ++u) {
        // mark distance-1 nodes, then collect unmarked distance-2 nodes
        for (int v : a.neighbors(u)) mark[v] = 1;
        mark[u] = 1;
        for (int v : a.neighbors(u))
            for (int w : a.neighbors(v))
                if (!mark[w] && u < w) pairs.emplace_back(u, w);
        for (int v : a.neighbors(u)) mark[v] = 0;
        mark[u] = 0;
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return SparseAdjacency::from_edges(n, pairs);
}

void LabeledGraph::validate() const {
    const int n = adj.num_nodes();
    if (static_cast<int>(labels.size()) != n)
        throw DimensionMismatchError("label vector length != node count");
    if (features.size() > 0 && features.rows() != n)
        throw DimensionMismatchError("feature matrix row count != node count");
    for (int v = 0; v < n; ++v)
        if (labels[v] < 0 || labels[v] >= num_classes)
            throw Error("label out of range at node " + std::to_string(v));
}

HomophilyReport edge_homophily(const LabeledGraph& g) {
    const auto edges = g.adj.edges();
    if (edges.empty()) throw EmptyEdgeSetError();
    std::size_t homo = 0;
    for (auto [u, v] : edges)
        if (g.labels[u] == g.labels[v]) ++homo;
    HomophilyReport r;
    r.edge_homophily = static_cast<double>(homo) / static_cast<double>(edges.size());
    r.random_baseline = 1.0 / g.num_classes;
    return r;
}

double target_homophily(const LabeledGraph& g, const std::vector<int>& targets) {
    if (targets.empty()) throw EmptyNodeSetError();
    double sum = 0.0;
    for (int t : targets) {
        const auto& nb = g.adj.neighbors(t);
        if (nb.empty()) throw IsolatedTargetError(t);
        int homo = 0;
        for (int u : nb)
            if (g.labels[u] == g.labels[t]) ++homo;
        sum += static_cast<double>(homo) / static_cast<double>(nb.size());
    }
    return sum / static_cast<double>(targets.size());
}

namespace {

std::vector<int> largest_component(const SparseAdjacency& a) {
    const int n = a.num_nodes();
    std::vector<int> comp(n, -1);
    int best_id = -1;
    std::size_t best_size = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        std::deque<int> q{s};
        comp[s] = s;
        std::size_t size = 0;
        while (!q.empty()) {
            int u = q.front();
            q.pop_front();
            ++size;
            for (int v : a.neighbors(u))
                if (comp[v] < 0) {
                    comp[v] = s;
                    q.push_back(v);
                }
        }
        if (size > best_size) {
            best_size = size;
            best_id = s;
        }
    }
    std::vector<int> out;
    out.reserve(best_size);
    for (int v = 0; v < n; ++v)
        if (comp[v] == best_id) out.push_back(v);
    return out;
}

} // namespace

std::vector<int> snowball_sample_nodes(const LabeledGraph& g, int n_target, double keep_ratio,
                                       std::uint64_t seed) {
    if (keep_ratio <= 0.0 || keep_ratio > 1.0)
        throw ConfigError("keep_ratio must be in (0, 1]");
    if (n_target > g.num_nodes())
        throw ConfigError("n_target exceeds node count");
    Rng rng(seed);
    const auto cc = largest_component(g.adj);
    const int start = cc[static_cast<int>(rng.next_below(cc.size()))];

    std::vector<char> sampled(g.num_nodes(), 0);
    std::vector<int> order;
    std::deque<int> queue{start};
    sampled[start] = 1;
    order.push_back(start);
    while (static_cast<int>(order.size()) < n_target) {
        if (queue.empty()) throw UnreachableTargetError(static_cast<int>(order.size()), n_target);
        int u = queue.front();
        queue.pop_front();
        const auto& nb = g.adj.neighbors(u);
        if (nb.empty()) continue;
        int keep = static_cast<int>(std::floor(keep_ratio * static_cast<double>(nb.size())));
        keep = std::max(keep, 1);
        auto picks = rng.sample_without_replacement(static_cast<int>(nb.size()), keep);
        std::sort(picks.begin(), picks.end());  // deterministic visit order
        for (int i : picks) {
            int v = nb[i];
            if (sampled[v]) continue;
            sampled[v] = 1;
            order.push_back(v);
            queue.push_back(v);
            if (static_cast<int>(order.size()) >= n_target) break;
        }
    }
    std::sort(order.begin(), order.end());
    return order;
}

LabeledGraph induced_subgraph(const LabeledGraph& g, const std::vector<int>& nodes) {
    std::unordered_map<int, int> remap;
    remap.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) remap[nodes[i]] = static_cast<int>(i);

    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        for (int v : g.adj.neighbors(nodes[i])) {
            auto it = remap.find(v);
            if (it != remap.end() && static_cast<int>(i) < it->second)
                edges.emplace_back(static_cast<int>(i), it->second);
        }

    LabeledGraph out;
    out.adj = SparseAdjacency::from_edges(static_cast<int>(nodes.size()), edges);
    out.num_classes = g.num_classes;
    out.labels.resize(nodes.size());
    if (g.features.size() > 0) out.features.resize(nodes.size(), g.features.cols());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        out.labels[i] = g.labels[nodes[i]];
        if (g.features.size() > 0) out.features.row(i) = g.features.row(nodes[i]);
    }
    return out;
}

LabeledGraph snowball_sample(const LabeledGraph& g, int n_target, double keep_ratio,
                             std::uint64_t seed) {
    return induced_subgraph(g, snowball_sample_nodes(g, n_target, keep_ratio, seed));
}

void save_dataset(const LabeledGraph& g, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);

    std::ofstream ef(dir + "/edges.tsv");
    if (!ef) throw IoError("cannot write " + dir + "/edges.tsv");
    for (auto [u, v] : g.adj.edges()) ef << u << '\t' << v << '\n';

    std::ofstream lf(dir + "/labels.tsv");
    if (!lf) throw IoError("cannot write " + dir + "/labels.tsv");
    for (int v = 0; v < g.num_nodes(); ++v) lf << v << '\t' << g.labels[v] << '\n';

    std::ofstream ff(dir + "/features.csv");
    if (!ff) throw IoError("cannot write " + dir + "/features.csv");
    ff.precision(17);
    for (int i = 0; i < g.features.rows(); ++i) {
        for (int j = 0; j < g.features.cols(); ++j) {
            if (j) ff << ',';
            ff << g.features(i, j);
        }
        ff << '\n';
    }
}

LabeledGraph load_dataset(const std::string& dir) {
    std::ifstream lf(dir + "/labels.tsv");
    if (!lf) throw IoError("cannot read " + dir + "/labels.tsv");
    std::vector<int> labels;
    int max_label = -1;
    {
        int node, label;
        std::vector<std::pair<int, int>> rows;
        while (lf >> node >> label) rows.emplace_back(node, label);
        labels.resize(rows.size(), -1);
        for (auto [nd, lb] : rows) {
            if (nd < 0 || nd >= static_cast<int>(rows.size()))
                throw IoError("labels.tsv: node id out of range");
            labels[nd] = lb;
            max_label = std::max(max_label, lb);
        }
    }
    const int n = static_cast<int>(labels.size());

    std::ifstream ef(dir + "/edges.tsv");
    if (!ef) throw IoError("cannot read " + dir + "/edges.tsv");
    std::vector<std::pair<int, int>> edges;
    {
        int u, v;
        while (ef >> u >> v) edges.emplace_back(u, v);
    }

    LabeledGraph g;
    g.adj = SparseAdjacency::from_edges(n, edges);
    g.labels = std::move(labels);
    g.num_classes = max_label + 1;

    std::ifstream ff(dir + "/features.csv");
    if (ff) {
        std::vector<std::vector<double>> rows;
        std::string line;
        while (std::getline(ff, line)) {
            if (line.empty()) continue;
            std::vector<double> row;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
            rows.push_back(std::move(row));
        }
        if (!rows.empty()) {
            if (static_cast<int>(rows.size()) != n)
                throw IoError("features.csv row count != node count");
            g.features.resize(n, static_cast<int>(rows[0].size()));
            for (int i = 0; i < n; ++i) {
                if (rows[i].size() != static_cast<std::size_t>(g.features.cols()))
                    throw IoError("features.csv: ragged rows");
                for (int j = 0; j < g.features.cols(); ++j) g.features(i, j) = rows[i][j];
            }
        }
    }
    g.validate();
    return g;
}

} // namespace hrob
