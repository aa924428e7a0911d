#pragma once

#include "hrob/graph.hpp"
#include "hrob/model.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hrob {

/// Randomization scheme over edge flips: each edge present in the base graph
/// flips off with probability p_minus per sample, and each candidate absent
/// pair incident to the certified node flips on with probability p_plus.
/// Flip probabilities are attached to positions by base-graph membership.
struct SmoothingScheme {
    double p_plus = 0.0;
    double p_minus = 0.0;
};

struct VoteEstimate {
    std::vector<long> counts;  // per class
    long n_samples = 0;
    double p_lower = 0.0;  // one-sided Clopper-Pearson lower bound, filled by callers
    int top_class() const;  // majority vote, ties toward the lowest class id
};

/// Certifiably-correct ratios R(r_a, r_d) plus per-node maximum certified
/// radii along the two axes.
struct CertGrid {
    Eigen::MatrixXd ratios;            // (max_rd+1) x (max_ra+1); R(r_a, r_d) = ratios(r_d, r_a)
    std::vector<int> nodes;            // certified node ids
    std::vector<int> smoothed_class;   // majority prediction per node
    std::vector<char> correct;         // smoothed_class == label
    std::vector<int> max_ra;           // at r_d = 0 (capped at grid edge)
    std::vector<int> max_rd;           // at r_a = 0
    std::vector<double> p_lower;       // per node
};

struct CertSummary {
    double accumulated_certification = 0.0;  // sum over the grid minus R(0,0)
    std::optional<double> ra_bar;            // mean max r_a over correct nodes
    std::optional<double> rd_bar;
    double accuracy = 0.0;                   // R(0,0)
};

/// One smoothed-sample vote: base model argmax at `node` on a perturbed copy
/// of the graph. Draw `sample_index` of the stream is a pure function of
/// (seed, node, sample_index), so votes are reproducible in isolation.
int smoothed_vote(const TrainedModel& model, const LabeledGraph& g, int node,
                  const SmoothingScheme& scheme, std::uint64_t seed, long sample_index);

VoteEstimate sample_smoothed_votes(const TrainedModel& model, const LabeledGraph& g, int node,
                                   const SmoothingScheme& scheme, long n_samples,
                                   std::uint64_t seed);

/// One-sided Clopper-Pearson lower confidence bound on a Bernoulli parameter.
double lower_confidence_bound(long count, long n, double alpha_sig);

/// Upper counterpart (used by the optional multi-class certificate).
double upper_confidence_bound(long count, long n, double alpha_sig);

/// Exact worst-case probability of the top class at radius (r_a, r_d):
/// likelihood-ratio regions indexed by how many flipped positions the random
/// mask hits, worst-case mass filled greedily. Returns 0 for a direction
/// with flip probability 0 and positive radius (disjoint supports).
double worst_case_top_probability(double p_lower, const SmoothingScheme& scheme, int r_a, int r_d);

/// True iff the worst case stays above 1/2.
bool certify_radius(double p_lower, const SmoothingScheme& scheme, int r_a, int r_d);

struct CertifyOptions {
    long n0 = 1000;        // samples for the smoothed prediction
    long n1 = 10000;       // samples for the confidence bound
    double alpha_sig = 0.01;
    int max_ra = 3;
    int max_rd = 10;
    // Optional multi-class certificate: compare the worst case of the top
    // class against the best case of the runner-up, Bonferroni-splitting
    // alpha_sig. Off by default (binary p_lower > 1/2 criterion).
    bool multi_class = false;
};

CertGrid certification_grid(const TrainedModel& model, const LabeledGraph& g,
                            const std::vector<int>& nodes, const SmoothingScheme& scheme,
                            const CertifyOptions& opt, std::uint64_t seed);

CertSummary summarize_certification(const CertGrid& grid);

// CSV: rows r_d, columns r_a. JSON summary: {AC, ra_bar, rd_bar, acc}.
void save_cert_grid_csv(const CertGrid& grid, const std::string& path);
void save_cert_summary_json(const CertSummary& s, const std::string& path);

} // namespace hrob
