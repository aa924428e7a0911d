#include "hrob/synth.hpp"

#include "hrob/errors.hpp"
#include "hrob/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <utility>
#include <vector>

namespace hrob {

namespace {

// d_reg-regular simple graph on node ids [offset, offset+m): circulant seed
// plus randomizing double-edge swaps (degree-preserving, stays simple).
std::vector<std::pair<int, int>> regular_block(int m, int d_reg, int offset, Rng& rng) {
    std::set<std::pair<int, int>> eset;
    const int half = d_reg / 2;
    for (int i = 0; i < m; ++i)
        for (int j = 1; j <= half; ++j) {
            int a = i, b = (i + j) % m;
            eset.insert({std::min(a, b), std::max(a, b)});
        }
    if (d_reg % 2 == 1)
        for (int i = 0; i < m / 2; ++i) eset.insert({i, i + m / 2});

    std::vector<std::pair<int, int>> edges(eset.begin(), eset.end());
    const std::size_t swaps = 20 * edges.size();
    for (std::size_t t = 0; t < swaps; ++t) {
        std::size_t i = rng.next_below(edges.size());
        std::size_t j = rng.next_below(edges.size());
        if (i == j) continue;
        auto [a, b] = edges[i];
        auto [c, d] = edges[j];
        if (rng.next_below(2)) std::swap(c, d);
        if (a == c || a == d || b == c || b == d) continue;
        std::pair<int, int> e1{std::min(a, d), std::max(a, d)};
        std::pair<int, int> e2{std::min(c, b), std::max(c, b)};
        if (eset.count(e1) || eset.count(e2)) continue;
        eset.erase(edges[i]);
        eset.erase(edges[j]);
        eset.insert(e1);
        eset.insert(e2);
        edges[i] = e1;
        edges[j] = e2;
    }
    std::vector<std::pair<int, int>> out;
    out.reserve(edges.size());
    for (auto [a, b] : eset) out.emplace_back(a + offset, b + offset);
    return out;
}

// Bipartite stub matching between two equal-length node lists; avoids
// duplicates and edges already present. Shuffle + conflict-repair passes.
void pair_stub_lists(SparseAdjacency& adj, const std::vector<int>& left, std::vector<int> right,
                     Rng& rng) {
    if (left.size() != right.size())
        throw InfeasibleSpecError("cross-class stub lists have unequal length");
    const std::size_t m = left.size();
    if (m == 0) return;
    rng.shuffle(right);

    auto conflicted = [&](std::size_t i, const std::map<std::pair<int, int>, int>& cnt) {
        std::pair<int, int> key{left[i], right[i]};
        return adj.has_edge(left[i], right[i]) || cnt.at(key) > 1;
    };

    for (int pass = 0; pass < 1000; ++pass) {
        std::map<std::pair<int, int>, int> cnt;
        for (std::size_t i = 0; i < m; ++i) ++cnt[{left[i], right[i]}];
        std::vector<std::size_t> bad;
        for (std::size_t i = 0; i < m; ++i)
            if (conflicted(i, cnt)) bad.push_back(i);
        if (bad.empty()) {
            for (std::size_t i = 0; i < m; ++i) adj.add_edge(left[i], right[i]);
            return;
        }
        for (std::size_t i : bad) {
            std::size_t j = rng.next_below(m);
            std::swap(right[i], right[j]);
        }
    }
    throw ConstructionFailedError("cross-class pairing failed after 1000 repair passes");
}

} // namespace

LabeledGraph regular_homophily_graph(const SynthSpec& spec) {
    const int n = spec.n, d = spec.d, Y = spec.num_classes;
    if (Y < 2) throw InfeasibleSpecError("need at least 2 classes");
    if (spec.h < 0.0 || spec.h > 1.0) throw InfeasibleSpecError("h must be in [0, 1]");
    if (n % Y != 0)
        throw InfeasibleSpecError("n=" + std::to_string(n) + " not divisible by |Y|=" + std::to_string(Y));
    const int npc = n / Y;
    const int d_in = static_cast<int>(std::lround(spec.h * d));
    const int d_cross = d - d_in;
    if (d_in >= npc)
        throw InfeasibleSpecError("intra-class degree " + std::to_string(d_in) +
                                  " >= class size " + std::to_string(npc));
    if ((npc * d_in) % 2 != 0)
        throw InfeasibleSpecError("class size * d_in = " + std::to_string(npc * d_in) +
                                  " is odd; intra-class pairing impossible");
    if (spec.mix == ClassMix::exact && d_cross % (Y - 1) != 0)
        throw InfeasibleSpecError("d - round(h*d) = " + std::to_string(d_cross) +
                                  " not divisible by |Y|-1 = " + std::to_string(Y - 1));
    if (d_cross >= npc * (Y - 1))
        throw InfeasibleSpecError("cross-class degree exceeds available nodes");

    Rng rng(spec.seed);
    SparseAdjacency adj(n);
    std::vector<int> labels(n);
    for (int c = 0; c < Y; ++c)
        for (int i = 0; i < npc; ++i) labels[c * npc + i] = c;

    if (d_in > 0)
        for (int c = 0; c < Y; ++c)
            for (auto [u, v] : regular_block(npc, d_in, c * npc, rng)) adj.add_edge(u, v);

    if (d_cross > 0) {
        // stubs[(c, c2)] = nodes of class c wanting one more neighbor of class c2
        std::map<std::pair<int, int>, std::vector<int>> stubs;
        for (int c = 0; c < Y; ++c) {
            std::vector<int> others;
            for (int c2 = 0; c2 < Y; ++c2)
                if (c2 != c) others.push_back(c2);
            for (int i = 0; i < npc; ++i)
                for (int k = 0; k < d_cross; ++k) {
                    int c2 = spec.mix == ClassMix::exact
                                 ? others[k % (Y - 1)]
                                 : others[(i * d_cross + k) % (Y - 1)];
                    stubs[{c, c2}].push_back(c * npc + i);
                }
        }
        for (int c1 = 0; c1 < Y; ++c1)
            for (int c2 = c1 + 1; c2 < Y; ++c2) {
                auto& l = stubs[{c1, c2}];
                auto& r = stubs[{c2, c1}];
                if (l.size() != r.size())
                    throw InfeasibleSpecError(
                        "balanced cross split is uneven between classes " + std::to_string(c1) +
                        " and " + std::to_string(c2) + "; choose n/|Y| divisible by |Y|-1");
                pair_stub_lists(adj, l, r, rng);
            }
    }

    for (int v = 0; v < n; ++v)
        if (adj.degree(v) != d)
            throw ConstructionFailedError("degree check failed at node " + std::to_string(v));

    LabeledGraph g;
    g.adj = std::move(adj);
    g.labels = std::move(labels);
    g.num_classes = Y;
    return g;
}

Eigen::MatrixXd signal_features(const std::vector<int>& labels, int num_classes, double p) {
    if (p <= 0.0 || p > 1.0) throw ConfigError("p must be in (0, 1]");
    Eigen::MatrixXd x(labels.size(), num_classes);
    x.setConstant((1.0 - p) / num_classes);
    for (std::size_t v = 0; v < labels.size(); ++v) x(static_cast<int>(v), labels[v]) += p;
    return x;
}

LabeledGraph make_synthetic(const SynthSpec& spec) {
    LabeledGraph g = regular_homophily_graph(spec);
    g.features = signal_features(g.labels, g.num_classes, spec.p);
    return g;
}

} // namespace hrob
