#include "hrob/attack.hpp"

#include "hrob/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace hrob {

namespace {

// Mutable view of the attack state: neighbor sets plus cached first-layer
// aggregation sums S_v = x_v + sum_{u in N(v)} x_u (self-loop form).
struct AttackState {
    const Eigen::MatrixXd& x;
    std::vector<std::set<int>> nbrs;
    Eigen::MatrixXd sums;  // n x F
    std::vector<double> deg;

    explicit AttackState(const LabeledGraph& g) : x(g.features) {
        const int n = g.num_nodes();
        nbrs.resize(n);
        deg.resize(n);
        sums = x;
        for (int v = 0; v < n; ++v) {
            const auto& nb = g.adj.neighbors(v);
            nbrs[v] = std::set<int>(nb.begin(), nb.end());
            deg[v] = static_cast<double>(nb.size());
            for (int u : nb) sums.row(v) += x.row(u);
        }
    }

    void apply(int a, int b, bool add) {
        double s = add ? 1.0 : -1.0;
        if (add) {
            nbrs[a].insert(b);
            nbrs[b].insert(a);
        } else {
            nbrs[a].erase(b);
            nbrs[b].erase(a);
        }
        deg[a] += s;
        deg[b] += s;
        sums.row(a) += s * x.row(b);
        sums.row(b) += s * x.row(a);
    }

    // Surrogate prediction row for `target` with no flip applied.
    Eigen::RowVectorXd predict_clean(int target, const Eigen::MatrixXd& w) const {
        Eigen::RowVectorXd tot = sums.row(target) / (deg[target] + 1.0);
        for (int u : nbrs[target]) tot += sums.row(u) / (deg[u] + 1.0);
        return (tot / (deg[target] + 1.0)) * w;
    }

    // Surrogate prediction row for `target` after hypothetically flipping
    // (a, b): z = (1/(deg'_t + 1)) * sum_{w in N'(t) or {t}} S'_w / (deg'_w + 1).
    Eigen::RowVectorXd predict_after(int target, int a, int b, bool add,
                                     const Eigen::MatrixXd& w) const {
        double s = add ? 1.0 : -1.0;
        auto row_of = [&](int node) -> Eigen::RowVectorXd {
            if (node == a) return (sums.row(a) + s * x.row(b)) / (deg[a] + s + 1.0);
            if (node == b) return (sums.row(b) + s * x.row(a)) / (deg[b] + s + 1.0);
            return sums.row(node) / (deg[node] + 1.0);
        };
        const int partner = a == target ? b : (b == target ? a : -1);
        Eigen::RowVectorXd tot = row_of(target);
        for (int u : nbrs[target]) {
            if (u == partner && !add) continue;  // removed edge leaves the aggregation
            tot += row_of(u);
        }
        if (partner >= 0 && add) tot += row_of(partner);
        double dt = deg[target] + (partner >= 0 ? s : 0.0);
        return (tot / (dt + 1.0)) * w;
    }
};

} // namespace

Perturbation targeted_attack(const LabeledGraph& g, const LinearSurrogate& surrogate, int target,
                             int budget, TargetedMode mode) {
    if (budget < 1) throw ConfigError("budget must be >= 1");
    const int n = g.num_nodes();
    const int cls = g.labels[target];
    const Eigen::MatrixXd& w = surrogate.weights;

    AttackState st(g);
    auto margin = [&](const Eigen::RowVectorXd& z) {
        double best_other = -std::numeric_limits<double>::infinity();
        for (int k = 0; k < z.size(); ++k)
            if (k != cls) best_other = std::max(best_other, z(k));
        return -(z(cls) - best_other);
    };

    Perturbation pert;
    double base = margin(st.predict_clean(target, w));
    std::set<std::pair<int, int>> used;  // a pair is flipped at most once

    for (int step = 0; step < budget; ++step) {
        double best_score = 0.0;
        int best_u = -1, best_v = -1;
        bool best_add = true;

        auto consider = [&](int a, int b) {
            if (a == b) return;
            int u = std::min(a, b), v = std::max(a, b);
            if (used.count({u, v})) return;
            bool add = !st.nbrs[u].count(v);
            if (!add && (st.deg[u] <= 1.0 || st.deg[v] <= 1.0)) return;  // would isolate
            double score = margin(st.predict_after(target, u, v, add, w)) - base;
            if (score <= 0.0) return;
            bool better = score > best_score;
            if (!better && score == best_score && best_u >= 0)
                better = u < best_u || (u == best_u && v < best_v);
            if (better) {
                best_score = score;
                best_u = u;
                best_v = v;
                best_add = add;
            }
        };

        for (int u = 0; u < n; ++u) consider(target, u);
        if (mode == TargetedMode::with_influencers) {
            std::vector<int> hood(st.nbrs[target].begin(), st.nbrs[target].end());
            for (int wnode : hood)
                for (int u = 0; u < n; ++u)
                    if (u != target) consider(wnode, u);
        }

        if (best_u < 0) break;  // NoImprovingFlip: return the partial perturbation
        st.apply(best_u, best_v, best_add);
        used.insert({best_u, best_v});
        base += best_score;
        pert.flips.push_back({best_u, best_v, best_add});
        ++pert.budget_used;
    }
    return pert;
}

Perturbation targeted_attack(const LabeledGraph& g, const std::vector<int>& train_nodes,
                             int target, int budget, TargetedMode mode) {
    return targeted_attack(g, fit_linear_surrogate(g, train_nodes), target, budget, mode);
}

Perturbation untargeted_attack(const LabeledGraph& g, const std::vector<int>& train_nodes,
                               double budget_fraction, int refit_every) {
    if (budget_fraction <= 0.0 || budget_fraction > 1.0)
        throw ConfigError("budget_fraction must be in (0, 1]");
    const int n = g.num_nodes();
    const int budget =
        static_cast<int>(std::llround(budget_fraction * static_cast<double>(g.adj.num_edges())));

    Perturbation pert;
    if (budget == 0) return pert;

    LabeledGraph cur = g;
    std::set<std::pair<int, int>> used;
    Eigen::MatrixXd w;
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(train_nodes.size(), g.num_classes);
    for (std::size_t i = 0; i < train_nodes.size(); ++i)
        onehot(static_cast<int>(i), g.labels[train_nodes[i]]) = 1.0;

    for (int step = 0; step < budget; ++step) {
        if (step % refit_every == 0) w = fit_linear_surrogate(cur, train_nodes).weights;

        Eigen::SparseMatrix<double> p = normalize(cur.adj, NormMode::row_stochastic_self_loop);
        Eigen::MatrixXd hx = p * cur.features;          // P X
        Eigen::MatrixXd ax = p * hx;                    // P^2 X
        // least-squares surrogate training loss; gradient wrt P
        Eigen::MatrixXd gfull = Eigen::MatrixXd::Zero(n, cur.features.cols());
        for (std::size_t i = 0; i < train_nodes.size(); ++i) {
            Eigen::RowVectorXd err =
                ax.row(train_nodes[i]) * w - onehot.row(static_cast<int>(i));
            gfull.row(train_nodes[i]) = 2.0 * err * w.transpose();
        }
        Eigen::MatrixXd dldp = gfull * hx.transpose() +
                               (p.transpose() * gfull) * cur.features.transpose();

        // chain through the row-stochastic normalization of A + I
        Eigen::VectorXd rowdot(n), rs(n);
        for (int i = 0; i < n; ++i) {
            rs(i) = cur.adj.degree(i) + 1.0;
            double acc = dldp(i, i) / rs(i);  // self-loop entry
            for (int v : cur.adj.neighbors(i)) acc += dldp(i, v) / rs(i);
            rowdot(i) = acc;
        }

        double best_score = 0.0;
        int best_u = -1, best_v = -1;
        bool best_add = true;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) {
                if (used.count({u, v})) continue;
                bool add = !cur.adj.has_edge(u, v);
                if (!add && (cur.adj.degree(u) <= 1 || cur.adj.degree(v) <= 1)) continue;
                double grad = (dldp(u, v) - rowdot(u)) / rs(u) +
                              (dldp(v, u) - rowdot(v)) / rs(v);
                double score = (add ? 1.0 : -1.0) * grad;
                if (score > best_score) {
                    best_score = score;
                    best_u = u;
                    best_v = v;
                    best_add = add;
                }
            }
        if (best_u < 0) break;
        if (best_add)
            cur.adj.add_edge(best_u, best_v);
        else
            cur.adj.remove_edge(best_u, best_v);
        used.insert({best_u, best_v});
        pert.flips.push_back({best_u, best_v, best_add});
        ++pert.budget_used;
    }
    return pert;
}

LabeledGraph apply_perturbation(const LabeledGraph& g, const Perturbation& p) {
    LabeledGraph out = g;
    for (const Flip& f : p.flips) {
        int u = std::min(f.u, f.v), v = std::max(f.u, f.v);
        if (u == v) throw InvalidFlipError(f.u, f.v, "self-loop");
        if (u < 0 || v >= g.num_nodes()) throw InvalidFlipError(f.u, f.v, "node out of range");
        // validated flip by flip so an add/remove of the same pair cancels
        bool present = out.adj.has_edge(u, v);
        if (f.add && present) throw InvalidFlipError(f.u, f.v, "addition on existing edge");
        if (!f.add && !present) throw InvalidFlipError(f.u, f.v, "removal of absent edge");
        if (f.add)
            out.adj.add_edge(u, v);
        else
            out.adj.remove_edge(u, v);
    }
    return out;
}

PerturbationStats perturbation_stats(const LabeledGraph& g, const Perturbation& p,
                                     const std::vector<int>* targets) {
    PerturbationStats st;
    int hetero_adds = 0, homo_dels = 0;
    for (const Flip& f : p.flips) {
        bool homo = g.labels[f.u] == g.labels[f.v];
        if (f.add) {
            ++st.additions_total;
            hetero_adds += !homo;
        } else {
            ++st.deletions_total;
            homo_dels += homo;
        }
    }
    if (st.additions_total > 0)
        st.additions_hetero_fraction =
            static_cast<double>(hetero_adds) / st.additions_total;
    if (st.deletions_total > 0)
        st.deletions_homo_fraction = static_cast<double>(homo_dels) / st.deletions_total;

    LabeledGraph after = apply_perturbation(g, p);
    st.h_before = edge_homophily(g).edge_homophily;
    st.h_after = edge_homophily(after).edge_homophily;
    if (targets) {
        st.ht_before = target_homophily(g, *targets);
        st.ht_after = target_homophily(after, *targets);
    }
    return st;
}

void save_perturbation(const Perturbation& p, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (const Flip& fl : p.flips)
        f << (fl.add ? '+' : '-') << ' ' << fl.u << ' ' << fl.v << '\n';
}

Perturbation load_perturbation(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path);
    Perturbation p;
    char sign;
    int u, v;
    while (f >> sign >> u >> v) {
        if (sign != '+' && sign != '-') throw IoError("bad flip sign in " + path);
        p.flips.push_back({u, v, sign == '+'});
    }
    p.budget_used = static_cast<int>(p.flips.size());
    return p;
}

} // namespace hrob
