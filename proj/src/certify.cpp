#include "hrob/certify.hpp"

#include "hrob/errors.hpp"
#include "hrob/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace hrob {

int VoteEstimate::top_class() const {
    int best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c)
        if (counts[c] > counts[best]) best = static_cast<int>(c);
    return best;
}

namespace {

// Regularized incomplete beta I_x(a, b) via the standard continued fraction.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14, kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - std::exp(lbeta + b * std::log1p(-x) + a * std::log(x)) * betacf(b, a, 1.0 - x) / b;
}

// Inverse of I_x(a, b) by bisection; monotone, so this is robust.
double inc_beta_inv(double a, double b, double p) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (inc_beta(a, b, mid) < p)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

struct Region {
    double ratio;       // adversarial mass / clean mass
    double clean_mass;
    double adv_mass;
};

double binom_pmf(int n, int k, double p) {
    if (k < 0 || k > n) return 0.0;
    double logc = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    double lp = 0.0;
    if (k > 0) lp += k * std::log(p);
    if (n - k > 0) lp += (n - k) * std::log1p(-p);
    return std::exp(logc + lp);
}

} // namespace

double lower_confidence_bound(long count, long n, double alpha_sig) {
    if (count < 0 || count > n) throw ConfigError("count must be in [0, n]");
    if (alpha_sig <= 0.0 || alpha_sig >= 1.0) throw ConfigError("alpha_sig must be in (0, 1)");
    if (count == 0) return 0.0;
    return inc_beta_inv(static_cast<double>(count), static_cast<double>(n - count + 1), alpha_sig);
}

double upper_confidence_bound(long count, long n, double alpha_sig) {
    if (count < 0 || count > n) throw ConfigError("count must be in [0, n]");
    if (alpha_sig <= 0.0 || alpha_sig >= 1.0) throw ConfigError("alpha_sig must be in (0, 1)");
    if (count == n) return 1.0;
    return inc_beta_inv(static_cast<double>(count + 1), static_cast<double>(n - count),
                        1.0 - alpha_sig);
}

double worst_case_top_probability(double p_lower, const SmoothingScheme& scheme, int r_a,
                                  int r_d) {
    if (p_lower < 0.0 || p_lower > 1.0) throw ConfigError("p_lower must be in [0, 1]");
    if (r_a < 0 || r_d < 0) throw ConfigError("radii must be nonnegative");
    const double pa = scheme.p_plus, pd = scheme.p_minus;
    // disjoint supports: the adversary's flips can never be replicated
    if ((r_a > 0 && pa == 0.0) || (r_d > 0 && pd == 0.0)) return 0.0;

    // region (ka, kd): the mask hits ka of the r_a addition positions and kd
    // of the r_d deletion positions
    std::vector<Region> regions;
    regions.reserve((r_a + 1) * (r_d + 1));
    for (int ka = 0; ka <= r_a; ++ka)
        for (int kd = 0; kd <= r_d; ++kd) {
            double mass = binom_pmf(r_a, ka, pa) * binom_pmf(r_d, kd, pd);
            if (mass <= 0.0) continue;
            // the adversary's mask must complement ours on the flipped
            // positions, so its region mass swaps hit and miss probabilities
            double adv = binom_pmf(r_a, r_a - ka, pa) * binom_pmf(r_d, r_d - kd, pd);
            // each hit position contributes (1-p)/p, each miss p/(1-p)
            double lr = 0.0;
            if (r_a > 0) lr += (ka - (r_a - ka)) * (std::log1p(-pa) - std::log(pa));
            if (r_d > 0) lr += (kd - (r_d - kd)) * (std::log1p(-pd) - std::log(pd));
            regions.push_back({std::exp(lr), mass, adv});
        }
    std::sort(regions.begin(), regions.end(),
              [](const Region& a, const Region& b) { return a.ratio < b.ratio; });

    // The adversary concentrates the available clean mass on low-ratio
    // regions. Fully taken regions contribute their exact adversarial mass;
    // for p_lower > 1/2 the complement view (removing 1 - p_lower from the
    // high-ratio end) keeps the boundary region at a moderate ratio, which
    // avoids amplifying round-off by ratios as large as ((1-p)/p)^r.
    if (p_lower > 0.5) {
        double total = 0.0;
        for (const Region& r : regions) total += r.adv_mass;
        double budget = 1.0 - p_lower, removed = 0.0;
        for (auto it = regions.rbegin(); it != regions.rend(); ++it) {
            if (budget >= it->clean_mass) {
                removed += it->adv_mass;
                budget -= it->clean_mass;
            } else {
                removed += budget * it->ratio;
                break;
            }
        }
        return total - removed;
    }
    double remaining = p_lower, worst = 0.0;
    for (const Region& r : regions) {
        if (remaining >= r.clean_mass) {
            worst += r.adv_mass;
            remaining -= r.clean_mass;
        } else {
            worst += remaining * r.ratio;
            remaining = 0.0;
        }
        if (remaining <= 0.0) break;
    }
    return worst;
}

bool certify_radius(double p_lower, const SmoothingScheme& scheme, int r_a, int r_d) {
    return worst_case_top_probability(p_lower, scheme, r_a, r_d) > 0.5;
}

namespace {

// Deterministic flippable-universe layout for node v: positions
// [0, |E|) are the base edges (sorted), positions [|E|, ...) the candidate
// ring of absent pairs (v, u) with u ascending.
SparseAdjacency perturbed_sample(const LabeledGraph& g, int node, const SmoothingScheme& scheme,
                                 const CounterStream& stream, long sample_index) {
    const auto base_edges = g.adj.edges();
    const std::uint64_t s = static_cast<std::uint64_t>(sample_index);
    std::vector<std::pair<int, int>> edges;
    edges.reserve(base_edges.size());
    std::uint64_t pos = 0;
    for (auto [u, v] : base_edges) {
        if (!(scheme.p_minus > 0.0 &&
              stream.uniform((s << 32) | pos) < scheme.p_minus))
            edges.emplace_back(u, v);
        ++pos;
    }
    if (scheme.p_plus > 0.0) {
        for (int u = 0; u < g.num_nodes(); ++u) {
            if (u == node) continue;
            if (g.adj.has_edge(node, u)) continue;
            if (stream.uniform((s << 32) | (pos + static_cast<std::uint64_t>(u))) < scheme.p_plus)
                edges.emplace_back(std::min(node, u), std::max(node, u));
        }
    }
    return SparseAdjacency::from_edges(g.num_nodes(), edges);
}

} // namespace

int smoothed_vote(const TrainedModel& model, const LabeledGraph& g, int node,
                  const SmoothingScheme& scheme, std::uint64_t seed, long sample_index) {
    CounterStream stream(seed, static_cast<std::uint64_t>(node));
    LabeledGraph pert = g;
    pert.adj = perturbed_sample(g, node, scheme, stream, sample_index);

    TrainedModel m = model;  // cheap: shared matrices are copied by value but small
    m.config.zero_fill_isolated = true;
    Eigen::MatrixXd pred = model_forward(m, pert);
    int best = 0;
    for (int c = 1; c < pred.cols(); ++c)
        if (pred(node, c) > pred(node, best)) best = c;
    return best;
}

VoteEstimate sample_smoothed_votes(const TrainedModel& model, const LabeledGraph& g, int node,
                                   const SmoothingScheme& scheme, long n_samples,
                                   std::uint64_t seed) {
    if (scheme.p_plus < 0.0 || scheme.p_plus > 1.0 || scheme.p_minus < 0.0 ||
        scheme.p_minus > 1.0)
        throw ConfigError("flip probabilities must be in [0, 1]");
    VoteEstimate est;
    est.counts.assign(g.num_classes, 0);
    est.n_samples = n_samples;
    CounterStream stream(seed, static_cast<std::uint64_t>(node));

    TrainedModel m = model;
    m.config.zero_fill_isolated = true;
    LabeledGraph pert = g;
    for (long i = 0; i < n_samples; ++i) {
        pert.adj = perturbed_sample(g, node, scheme, stream, i);
        Eigen::MatrixXd pred = model_forward(m, pert);
        int best = 0;
        for (int c = 1; c < pred.cols(); ++c)
            if (pred(node, c) > pred(node, best)) best = c;
        ++est.counts[best];
    }
    return est;
}

CertGrid certification_grid(const TrainedModel& model, const LabeledGraph& g,
                            const std::vector<int>& nodes, const SmoothingScheme& scheme,
                            const CertifyOptions& opt, std::uint64_t seed) {
    if (nodes.empty()) throw EmptyNodeSetError();
    CertGrid grid;
    grid.nodes = nodes;
    grid.ratios = Eigen::MatrixXd::Zero(opt.max_rd + 1, opt.max_ra + 1);

    const double alpha = opt.multi_class ? opt.alpha_sig / 2.0 : opt.alpha_sig;
    for (int node : nodes) {
        // phase 0: smoothed prediction; phase 1: confidence bound
        VoteEstimate sel = sample_smoothed_votes(model, g, node, scheme, opt.n0, mix64(seed));
        int cls = sel.top_class();
        VoteEstimate est =
            sample_smoothed_votes(model, g, node, scheme, opt.n1, mix64(seed ^ 0xb0b0ULL));
        double plo = lower_confidence_bound(est.counts[cls], opt.n1, alpha);
        double phi_b = 0.0;
        if (opt.multi_class) {
            long runner = 0;
            for (std::size_t c = 0; c < est.counts.size(); ++c)
                if (static_cast<int>(c) != cls) runner = std::max(runner, est.counts[c]);
            phi_b = upper_confidence_bound(runner, opt.n1, alpha);
        }

        bool correct = cls == g.labels[node];
        grid.smoothed_class.push_back(cls);
        grid.correct.push_back(correct ? 1 : 0);
        grid.p_lower.push_back(plo);

        auto certified = [&](int ra, int rd) {
            double worst = worst_case_top_probability(plo, scheme, ra, rd);
            if (!opt.multi_class) return worst > 0.5;
            // best case for the runner-up under the same perturbation
            double best_b = 1.0 - worst_case_top_probability(1.0 - phi_b, scheme, ra, rd);
            return worst > best_b;
        };

        int mra = -1, mrd = -1;
        for (int rd = 0; rd <= opt.max_rd; ++rd)
            for (int ra = 0; ra <= opt.max_ra; ++ra) {
                bool ok = certified(ra, rd);
                if (correct && ok) grid.ratios(rd, ra) += 1.0;
                if (ok && rd == 0) mra = ra;
                if (ok && ra == 0) mrd = rd;
            }
        grid.max_ra.push_back(std::max(mra, 0));
        grid.max_rd.push_back(std::max(mrd, 0));
    }
    grid.ratios /= static_cast<double>(nodes.size());
    return grid;
}

CertSummary summarize_certification(const CertGrid& grid) {
    CertSummary s;
    s.accuracy = grid.ratios(0, 0);
    s.accumulated_certification = grid.ratios.sum() - grid.ratios(0, 0);
    double ra = 0.0, rd = 0.0;
    long correct = 0;
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        if (!grid.correct[i]) continue;
        ++correct;
        ra += grid.max_ra[i];
        rd += grid.max_rd[i];
    }
    if (correct > 0) {
        s.ra_bar = ra / static_cast<double>(correct);
        s.rd_bar = rd / static_cast<double>(correct);
    }
    return s;
}

void save_cert_grid_csv(const CertGrid& grid, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f.precision(17);
    f << "r_d\\r_a";
    for (int ra = 0; ra < grid.ratios.cols(); ++ra) f << ',' << ra;
    f << '\n';
    for (int rd = 0; rd < grid.ratios.rows(); ++rd) {
        f << rd;
        for (int ra = 0; ra < grid.ratios.cols(); ++ra) f << ',' << grid.ratios(rd, ra);
        f << '\n';
    }
}

void save_cert_summary_json(const CertSummary& s, const std::string& path) {
    nlohmann::json j;
    j["AC"] = s.accumulated_certification;
    j["acc"] = s.accuracy;
    if (s.ra_bar)
        j["ra_bar"] = *s.ra_bar;
    else
        j["ra_bar"] = nullptr;
    if (s.rd_bar)
        j["rd_bar"] = *s.rd_bar;
    else
        j["rd_bar"] = nullptr;
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << j.dump(2) << '\n';
}

} // namespace hrob
