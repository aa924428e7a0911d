#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hrob/errors.hpp"
#include "hrob/harness.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace hrob;

namespace {

LabeledGraph synth_graph(int n, int d, double h, int y, std::uint64_t seed) {
    SynthSpec s;
    s.n = n;
    s.d = d;
    s.h = h;
    s.num_classes = y;
    s.p = 0.8;
    s.seed = seed;
    s.mix = ClassMix::balanced;
    return make_synthetic(s);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

ExperimentConfig tiny_config(Scenario scenario) {
    ExperimentConfig cfg;
    cfg.synth.n = 60;
    cfg.synth.d = 4;
    cfg.synth.h = 0.75;
    cfg.synth.num_classes = 2;
    cfg.synth.p = 0.8;
    cfg.synth.mix = ClassMix::balanced;
    cfg.scenario = scenario;
    cfg.repetitions = 2;
    cfg.seed = 5;
    cfg.target_count = 6;
    cfg.budget_fraction = 0.1;
    cfg.has_train_overrides = true;
    cfg.train_overrides.max_iters = 80;
    cfg.train_overrides.patience = 80;
    cfg.train_overrides.learning_rate = 0.3;
    ModelConfig mlp;
    mlp.arch = Arch::mlp;
    mlp.hidden_dim = 8;
    ModelConfig gcn;
    gcn.arch = Arch::gcn;
    gcn.hidden_dim = 8;
    cfg.models = {gcn, mlp};
    cfg.model_names = {"gcn", "mlp"};
    return cfg;
}

} // namespace

TEST_CASE("make_splits: sizes, determinism, stratification") {
    LabeledGraph g = synth_graph(100, 4, 0.5, 2, 1);
    SplitAssignment s = make_splits(g, {0.1, 0.1, 0.8}, 3);
    CHECK(s.train.size() == 10);
    CHECK(s.val.size() == 10);
    CHECK(s.test.size() == 80);
    CHECK(s.stratified);

    SplitAssignment s2 = make_splits(g, {0.1, 0.1, 0.8}, 3);
    CHECK(s.train == s2.train);
    CHECK(s.val == s2.val);
    CHECK(s.test == s2.test);

    // per-class train counts within 1 of proportional
    std::map<int, int> counts;
    for (int v : s.train) ++counts[g.labels[v]];
    for (auto [cls, cnt] : counts) CHECK(std::abs(cnt - 5) <= 1);

    // disjoint and covering
    std::vector<char> seen(100, 0);
    for (const auto* part : {&s.train, &s.val, &s.test})
        for (int v : *part) {
            CHECK_FALSE(seen[v]);
            seen[v] = 1;
        }
    for (int v = 0; v < 100; ++v) CHECK(seen[v]);

    CHECK_THROWS_AS(make_splits(g, {0.5, 0.4, 0.2}, 1), ConfigError);
}

TEST_CASE("make_splits downgrades when a class is too small") {
    LabeledGraph g;
    g.adj = SparseAdjacency::from_edges(10, {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {8, 9}});
    g.labels = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1};  // class 1 has a single node
    g.num_classes = 2;
    SplitAssignment s = make_splits(g, {0.2, 0.2, 0.6}, 1);
    CHECK_FALSE(s.stratified);
    CHECK(s.warning.find("ClassTooSmall") != std::string::npos);
    CHECK(s.train.size() + s.val.size() + s.test.size() == 10);
}

TEST_CASE("split file round trip") {
    LabeledGraph g = synth_graph(60, 4, 0.5, 2, 2);
    SplitAssignment s = make_splits(g, {0.1, 0.1, 0.8}, 7);
    std::string path = temp_path("hrob_split_test.tsv");
    save_splits(s, path);
    SplitAssignment r = load_splits(path, 60);
    CHECK(r.train == s.train);
    CHECK(r.val == s.val);
    CHECK(r.test == s.test);
}

TEST_CASE("evasion with an empty perturbation equals clean evaluation") {
    ExperimentConfig cfg = tiny_config(Scenario::evasion_untargeted);
    cfg.budget_fraction = 1e-9;  // rounds to zero flips
    cfg.repetitions = 1;
    ReportBundle b = run_experiment(cfg);
    REQUIRE(b.errors.empty());
    for (const auto& m : b.models) {
        REQUIRE(m.clean_acc.size() == 1);
        CHECK(m.attacked_acc[0] == m.clean_acc[0]);
    }
}

TEST_CASE("mlp accuracy is identical under every structural scenario") {
    for (Scenario sc : {Scenario::evasion_untargeted, Scenario::poison_untargeted,
                        Scenario::evasion_targeted, Scenario::poison_targeted}) {
        CAPTURE(scenario_name(sc));
        ExperimentConfig cfg = tiny_config(sc);
        cfg.repetitions = 1;
        ReportBundle b = run_experiment(cfg);
        REQUIRE(b.errors.empty());
        const ModelResult& mlp = b.models[1];
        CHECK(mlp.attacked_acc[0] == mlp.clean_acc[0]);  // bitwise
    }
}

TEST_CASE("poison and evasion share the perturbation and reports are deterministic") {
    ExperimentConfig cfg = tiny_config(Scenario::poison_untargeted);
    ReportBundle b1 = run_experiment(cfg);
    ReportBundle b2 = run_experiment(cfg);
    REQUIRE(b1.errors.empty());
    REQUIRE(b1.stats.size() == b2.stats.size());
    for (std::size_t i = 0; i < b1.stats.size(); ++i) {
        CHECK(b1.stats[i].h_after == b2.stats[i].h_after);
        CHECK(b1.stats[i].additions_mean == b2.stats[i].additions_mean);
    }

    std::string d1 = temp_path("hrob_rep1");
    std::string d2 = temp_path("hrob_rep2");
    emit_report(b1, ReportFormat::csv, d1);
    emit_report(b2, ReportFormat::csv, d2);
    emit_report(b1, ReportFormat::json, d1);
    emit_report(b2, ReportFormat::json, d2);
    for (const char* f : {"/accuracy.csv", "/stats.csv", "/report.json"})
        CHECK(slurp(d1 + f) == slurp(d2 + f));  // byte-identical

    // evasion run on the same seeds sees the same perturbation statistics
    ExperimentConfig ecfg = cfg;
    ecfg.scenario = Scenario::evasion_untargeted;
    ReportBundle be = run_experiment(ecfg);
    REQUIRE(be.stats.size() == b1.stats.size());
    for (std::size_t i = 0; i < b1.stats.size(); ++i)
        CHECK(be.stats[i].h_after == b1.stats[i].h_after);
}

TEST_CASE("emit_report: single repetition leaves zero stdev; formats agree") {
    ExperimentConfig cfg = tiny_config(Scenario::evasion_untargeted);
    cfg.repetitions = 1;
    ReportBundle b = run_experiment(cfg);
    std::string dir = temp_path("hrob_rep_single");
    emit_report(b, ReportFormat::csv, dir);
    emit_report(b, ReportFormat::json, dir);

    std::string acc = slurp(dir + "/accuracy.csv");
    CHECK(acc.find("clean_mean") != std::string::npos);
    // stdev columns must be zero for a single repetition
    std::stringstream ss(acc);
    std::string line;
    std::getline(ss, line);  // header
    while (std::getline(ss, line)) {
        auto last = line.rfind(',');
        CHECK(line.substr(last + 1) == "0");
    }

    std::string stats = slurp(dir + "/stats.csv");
    for (const char* col : {"h_before_mean", "h_after_mean", "ht_before_mean", "ht_after_mean",
                            "additions_mean", "additions_hetero_pct_mean", "deletions_mean",
                            "deletions_homo_pct_mean"})
        CHECK(stats.find(col) != std::string::npos);
}

TEST_CASE("experiment config file: parse and reject unknown keys") {
    std::string path = temp_path("hrob_cfg_test.txt");
    {
        std::ofstream f(path);
        f << "# comment\n"
          << "dataset = synth\n"
          << "synth.n = 60\nsynth.d = 4\nsynth.h = 0.75\nsynth.classes = 2\nsynth.p = 0.8\n"
          << "synth.mix = balanced\n"
          << "models = gcn,mlp,gcn+svd\n"
          << "defense.rank = 5\ndefense.variant = II\ndefense.norm = sym\n"
          << "scenario = evasion_untargeted\n"
          << "budget_fraction = 0.15\n"
          << "repetitions = 2\nseed = 9\n"
          << "train.max_iters = 50\ntrain.lr = 0.2\n";
    }
    ExperimentConfig cfg = parse_experiment_config(path);
    CHECK(cfg.synth.n == 60);
    CHECK(cfg.models.size() == 3);
    CHECK(cfg.model_names[2] == "gcn+svd");
    CHECK(cfg.models[2].svd.has_value());
    CHECK(cfg.scenario == Scenario::evasion_untargeted);
    CHECK(cfg.budget_fraction == doctest::Approx(0.15));
    CHECK(cfg.has_train_overrides);

    {
        std::ofstream f(path);
        f << "dataset = synth\nsynth.n = 60\nnot_a_key = 1\n";
    }
    CHECK_THROWS_AS(parse_experiment_config(path), ConfigError);
}
