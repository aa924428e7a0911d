#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hrob/errors.hpp"
#include "hrob/model.hpp"
#include "hrob/rng.hpp"
#include "hrob/synth.hpp"

#include <cmath>
#include <filesystem>

using namespace hrob;

namespace {

LabeledGraph ten_node_graph(std::uint64_t seed) {
    LabeledGraph g;
    g.adj = SparseAdjacency::from_edges(
        10, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 8}, {8, 9}, {9, 0},
             {0, 5}, {2, 7}});
    g.labels = {0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
    g.num_classes = 3;
    g.features.resize(10, 4);
    Rng rng(seed);
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 4; ++j) g.features(i, j) = 2.0 * rng.next_double() - 1.0;
    return g;
}

ModelConfig config_for(Arch a, int hidden = 6) {
    ModelConfig c;
    c.arch = a;
    c.hidden_dim = hidden;
    c.alpha = 0.6;
    return c;
}

double rel_err(double a, double b) {
    double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / denom;
}

constexpr Arch kAllArchs[] = {Arch::gcn, Arch::sage_separate, Arch::h2gcn_style, Arch::alpha_mix,
                              Arch::mlp};

} // namespace

TEST_CASE("softmax rows sum to one for every arch") {
    LabeledGraph g = ten_node_graph(1);
    for (Arch a : kAllArchs) {
        TrainedModel m = init_model(config_for(a), 4, 3, 7);
        Eigen::MatrixXd pred = model_forward(m, g);
        for (int i = 0; i < pred.rows(); ++i) {
            CHECK(std::fabs(pred.row(i).sum() - 1.0) < 1e-9);
            CHECK(pred.row(i).minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("mlp ignores the adjacency entirely") {
    LabeledGraph g = ten_node_graph(2);
    TrainedModel m = init_model(config_for(Arch::mlp), 4, 3, 3);
    Eigen::MatrixXd with_edges = model_forward(m, g);
    LabeledGraph bare = g;
    bare.adj = SparseAdjacency(10);
    Eigen::MatrixXd without_edges = model_forward(m, bare);
    CHECK((with_edges - without_edges).cwiseAbs().maxCoeff() == 0.0);  // bitwise
}

TEST_CASE("alpha_mix with alpha=1 equals an mlp sharing the same weights") {
    LabeledGraph g = ten_node_graph(3);
    ModelConfig ac = config_for(Arch::alpha_mix);
    ac.alpha = 1.0;
    TrainedModel am = init_model(ac, 4, 3, 11);
    TrainedModel mlp = init_model(config_for(Arch::mlp), 4, 3, 11);
    mlp.weights = am.weights;  // identical parameter shapes
    mlp.biases = am.biases;
    Eigen::MatrixXd za = model_forward(am, g);
    Eigen::MatrixXd zm = model_forward(mlp, g);
    CHECK((za - zm).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gcn symmetry: identical nodes get identical predictions") {
    LabeledGraph g;
    g.adj = SparseAdjacency::from_edges(2, {{0, 1}});
    g.labels = {0, 0};
    g.num_classes = 2;
    g.features.resize(2, 3);
    g.features << 0.3, -0.2, 0.9, 0.3, -0.2, 0.9;
    TrainedModel m = init_model(config_for(Arch::gcn), 3, 2, 5);
    Eigen::MatrixXd pred = model_forward(m, g);
    CHECK((pred.row(0) - pred.row(1)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("analytic gradients match central finite differences") {
    LabeledGraph g = ten_node_graph(4);
    std::vector<int> train{0, 1, 2, 4, 6, 8};
    const double step = 1e-5;
    for (Arch a : kAllArchs) {
        CAPTURE(arch_name(a));
        TrainedModel m = init_model(config_for(a), 4, 3, 13);
        std::vector<Eigen::MatrixXd> gw;
        std::vector<Eigen::VectorXd> gb;
        loss_and_gradients(m, g, train, gw, gb);
        double worst = 0.0;
        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            for (int i = 0; i < m.weights[l].rows(); ++i)
                for (int j = 0; j < m.weights[l].cols(); ++j) {
                    TrainedModel mp = m, mm = m;
                    mp.weights[l](i, j) += step;
                    mm.weights[l](i, j) -= step;
                    std::vector<Eigen::MatrixXd> tw;
                    std::vector<Eigen::VectorXd> tb;
                    double num = (loss_and_gradients(mp, g, train, tw, tb) -
                                  loss_and_gradients(mm, g, train, tw, tb)) /
                                 (2 * step);
                    worst = std::max(worst, rel_err(num, gw[l](i, j)));
                }
            for (int i = 0; i < m.biases[l].size(); ++i) {
                TrainedModel mp = m, mm = m;
                mp.biases[l](i) += step;
                mm.biases[l](i) -= step;
                std::vector<Eigen::MatrixXd> tw;
                std::vector<Eigen::VectorXd> tb;
                double num = (loss_and_gradients(mp, g, train, tw, tb) -
                              loss_and_gradients(mm, g, train, tw, tb)) /
                             (2 * step);
                worst = std::max(worst, rel_err(num, gb[l](i)));
            }
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("training is deterministic and separable data reaches accuracy 1") {
    SynthSpec s;
    s.n = 60;
    s.d = 4;
    s.h = 0.5;
    s.num_classes = 2;
    s.p = 1.0;
    s.seed = 6;
    LabeledGraph g = make_synthetic(s);
    std::vector<int> tr, va;
    for (int v = 0; v < 60; ++v) (v % 5 == 0 ? tr : va).push_back(v);

    for (Arch a : kAllArchs) {
        CAPTURE(arch_name(a));
        TrainConfig tc = defaults_for(a, 17);
        tc.learning_rate = 0.3;
        tc.max_iters = 300;
        tc.patience = 300;
        tc.weight_decay = 0.0;
        ModelConfig mc = config_for(a, 16);
        mc.alpha = 0.5;
        TrainedModel m1 = train(mc, tc, g, tr, va);
        TrainedModel m2 = train(mc, tc, g, tr, va);
        for (std::size_t l = 0; l < m1.weights.size(); ++l)
            CHECK((m1.weights[l] - m2.weights[l]).cwiseAbs().maxCoeff() == 0.0);  // bitwise
        CHECK(evaluate(m1, g, tr) == doctest::Approx(1.0));
    }
}

TEST_CASE("patience zero returns the iteration-0 model") {
    LabeledGraph g = ten_node_graph(5);
    std::vector<int> tr{0, 1, 2}, va{3, 4, 5};
    TrainConfig tc = defaults_for(Arch::gcn, 23);
    tc.patience = 0;
    TrainedModel trained = train(config_for(Arch::gcn), tc, g, tr, va);
    TrainedModel fresh = init_model(config_for(Arch::gcn), 4, 3, 23);
    for (std::size_t l = 0; l < trained.weights.size(); ++l)
        CHECK((trained.weights[l] - fresh.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK(trained.best_iteration == -1);
}

TEST_CASE("train validates splits and class coverage") {
    LabeledGraph g = ten_node_graph(6);
    TrainConfig tc = defaults_for(Arch::mlp, 1);
    CHECK_THROWS_AS(train(config_for(Arch::mlp), tc, g, {0, 1}, {1, 2}), ConfigError);
    CHECK_THROWS_AS(train(config_for(Arch::mlp), tc, g, {0, 1}, {5}),
                    MissingClassInTrainError);  // class 2 missing
}

TEST_CASE("evaluate: exact onehots, tie-break, random baseline") {
    LabeledGraph g = ten_node_graph(7);
    CHECK_THROWS_AS(evaluate(init_model(config_for(Arch::mlp), 4, 3, 1), g, {}),
                    EmptyNodeSetError);

    // a model with zero final weights emits uniform rows: argmax tie-break is class 0
    TrainedModel uniform = init_model(config_for(Arch::mlp), 4, 3, 2);
    for (auto& w : uniform.weights) w.setZero();
    for (auto& b : uniform.biases) b.setZero();
    LabeledGraph zeros = g;
    zeros.labels.assign(10, 0);
    std::vector<int> all(10);
    for (int i = 0; i < 10; ++i) all[i] = i;
    CHECK(evaluate(uniform, zeros, all) == doctest::Approx(1.0));

    // random predictor lands near 1/|Y| on balanced labels (Monte Carlo)
    LabeledGraph big;
    big.adj = SparseAdjacency(400);
    big.num_classes = 4;
    big.labels.resize(400);
    for (int i = 0; i < 400; ++i) big.labels[i] = i % 4;
    big.features.resize(400, 4);
    Rng rng(123);  // features carry no label signal
    for (int i = 0; i < big.features.rows(); ++i)
        for (int j = 0; j < big.features.cols(); ++j)
            big.features(i, j) = rng.next_double();
    TrainedModel m = init_model(config_for(Arch::mlp, 8), 4, 4, 3);
    std::vector<int> nodes(400);
    for (int i = 0; i < 400; ++i) nodes[i] = i;
    double acc = evaluate(m, big, nodes);
    CHECK(acc > 0.25 - 0.05 - 0.05);  // loose Monte Carlo band
    CHECK(acc < 0.25 + 0.15);
}

TEST_CASE("permutation equivariance of predictions") {
    LabeledGraph g = ten_node_graph(9);
    std::vector<int> perm{3, 1, 4, 0, 9, 2, 6, 8, 7, 5};
    LabeledGraph gp;
    std::vector<std::pair<int, int>> edges;
    for (auto [u, v] : g.adj.edges()) edges.emplace_back(perm[u], perm[v]);
    gp.adj = SparseAdjacency::from_edges(10, edges);
    gp.labels.resize(10);
    gp.features.resize(10, 4);
    gp.num_classes = 3;
    for (int i = 0; i < 10; ++i) {
        gp.labels[perm[i]] = g.labels[i];
        gp.features.row(perm[i]) = g.features.row(i);
    }
    for (Arch a : kAllArchs) {
        CAPTURE(arch_name(a));
        TrainedModel m = init_model(config_for(a), 4, 3, 31);
        Eigen::MatrixXd z = model_forward(m, g);
        Eigen::MatrixXd zp = model_forward(m, gp);
        double worst = 0.0;
        for (int i = 0; i < 10; ++i)
            worst = std::max(worst, (z.row(i) - zp.row(perm[i])).cwiseAbs().maxCoeff());
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("ego path is independent of the adjacency when neighbor weights are zeroed") {
    LabeledGraph g = ten_node_graph(10);
    LabeledGraph no_edges = g;
    no_edges.adj = SparseAdjacency(10);

    // sage: rows [0, F) of W1 multiply the aggregated block, rows [F, 2F) the ego block
    ModelConfig sc = config_for(Arch::sage_separate);
    sc.zero_fill_isolated = true;
    TrainedModel sage = init_model(sc, 4, 3, 41);
    sage.weights[0].topRows(4).setZero();
    sage.weights[1].topRows(sage.config.hidden_dim).setZero();
    CHECK((model_forward(sage, g) - model_forward(sage, no_edges)).cwiseAbs().maxCoeff() <
          1e-12);

    // h2gcn: keep only the R0 block of the final concatenation
    ModelConfig hc = config_for(Arch::h2gcn_style);
    hc.zero_fill_isolated = true;
    TrainedModel h2 = init_model(hc, 4, 3, 42);
    int hdim = hc.hidden_dim;
    h2.weights[1].bottomRows(h2.weights[1].rows() - hdim).setZero();
    CHECK((model_forward(h2, g) - model_forward(h2, no_edges)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("isolated nodes: error by default, zero-fill when requested") {
    LabeledGraph g = ten_node_graph(11);
    g.adj.remove_edge(9, 0);
    g.adj.remove_edge(8, 9);  // node 9 now isolated
    ModelConfig sc = config_for(Arch::sage_separate);
    TrainedModel m = init_model(sc, 4, 3, 43);
    CHECK_THROWS_AS(model_forward(m, g), IsolatedNodeError);
    m.config.zero_fill_isolated = true;
    CHECK_NOTHROW(model_forward(m, g));
    // gcn has self-loops and never needs the policy
    TrainedModel mg = init_model(config_for(Arch::gcn), 4, 3, 44);
    CHECK_NOTHROW(model_forward(mg, g));
}

TEST_CASE("checkpoint round trip is exact") {
    LabeledGraph g = ten_node_graph(12);
    ModelConfig mc = config_for(Arch::h2gcn_style);
    TrainConfig tc = defaults_for(mc.arch, 3);
    tc.max_iters = 5;
    tc.patience = 5;
    std::vector<int> tr{0, 1, 2, 4, 6}, va{3, 5, 7};
    TrainedModel m = train(mc, tc, g, tr, va);
    std::string path = (std::filesystem::temp_directory_path() / "hrob_model_test.bin").string();
    save_model(m, path);
    TrainedModel r = load_model(path);
    CHECK(r.config.arch == m.config.arch);
    CHECK(r.config.hidden_dim == m.config.hidden_dim);
    REQUIRE(r.weights.size() == m.weights.size());
    for (std::size_t l = 0; l < m.weights.size(); ++l) {
        CHECK((r.weights[l] - m.weights[l]).cwiseAbs().maxCoeff() == 0.0);
        CHECK((r.biases[l] - m.biases[l]).cwiseAbs().maxCoeff() == 0.0);
    }
    CHECK((model_forward(r, g) - model_forward(m, g)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dropout training stays deterministic and within valid range") {
    LabeledGraph g = ten_node_graph(13);
    ModelConfig mc = config_for(Arch::gcn);
    mc.dropout = 0.4;
    TrainConfig tc = defaults_for(mc.arch, 77);
    tc.max_iters = 20;
    tc.patience = 20;
    std::vector<int> tr{0, 1, 2, 4}, va{3, 5};
    TrainedModel a = train(mc, tc, g, tr, va);
    TrainedModel b = train(mc, tc, g, tr, va);
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        CHECK((a.weights[l] - b.weights[l]).cwiseAbs().maxCoeff() == 0.0);
    Eigen::MatrixXd pred = model_forward(a, g);  // inference has no dropout
    for (int i = 0; i < pred.rows(); ++i) CHECK(std::fabs(pred.row(i).sum() - 1.0) < 1e-9);
}
