// Command-line front end: synth, stats, train, attack, defend, certify,
// theory verify, run. Exit codes: 0 ok, 2 config error, 3 runtime failure.

#include "hrob/attack.hpp"
#include "hrob/certify.hpp"
#include "hrob/defense.hpp"
#include "hrob/errors.hpp"
#include "hrob/graph.hpp"
#include "hrob/harness.hpp"
#include "hrob/model.hpp"
#include "hrob/rng.hpp"
#include "hrob/synth.hpp"
#include "hrob/theory.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

using namespace hrob;

namespace {

SplitAssignment splits_for(const LabeledGraph& g, const std::string& split_file,
                           std::uint64_t seed) {
    if (!split_file.empty()) return load_splits(split_file, g.num_nodes());
    return make_splits(g, {0.1, 0.1, 0.8}, seed);
}

void write_json(const nlohmann::json& j, const std::string& path) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << '\n';
        return;
    }
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    f << j.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"heterophily-aware graph robustness toolkit"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic regular graph dataset");
    SynthSpec spec;
    std::string synth_out = "dataset";
    std::string mix = "exact";
    synth_cmd->add_option("--n", spec.n, "node count")->required();
    synth_cmd->add_option("--d", spec.d, "regular degree")->required();
    synth_cmd->add_option("--homophily", spec.h, "target homophily")->required();
    synth_cmd->add_option("--classes", spec.num_classes, "class count")->required();
    synth_cmd->add_option("--p", spec.p, "feature signal strength");
    synth_cmd->add_option("--seed", spec.seed, "random seed");
    synth_cmd->add_option("--mix", mix, "class mix: exact|balanced");
    synth_cmd->add_option("--out", synth_out, "output dataset directory");

    // ---- stats ----
    auto* stats_cmd = app.add_subcommand("stats", "homophily statistics of a dataset");
    std::string stats_data, stats_pert, stats_out;
    std::vector<int> stats_targets;
    stats_cmd->add_option("--data", stats_data, "dataset directory")->required();
    stats_cmd->add_option("--perturbation", stats_pert, "perturbation file to analyze");
    stats_cmd->add_option("--targets", stats_targets, "target nodes for h_t");
    stats_cmd->add_option("--out", stats_out, "output JSON (default stdout)");

    // ---- train ----
    auto* train_cmd = app.add_subcommand("train", "train a model on a dataset");
    std::string tr_data, tr_arch = "gcn", tr_split, tr_out = "model.bin";
    int tr_hidden = 64, tr_iters = 200, tr_patience = 100;
    double tr_lr = 0.01, tr_wd = -1.0, tr_alpha = 0.5, tr_dropout = 0.0;
    std::uint64_t tr_seed = 0;
    train_cmd->add_option("--data", tr_data, "dataset directory")->required();
    train_cmd->add_option("--arch", tr_arch, "gcn|sage_separate|h2gcn_style|alpha_mix|mlp");
    train_cmd->add_option("--hidden", tr_hidden, "hidden width");
    train_cmd->add_option("--iters", tr_iters, "max training iterations");
    train_cmd->add_option("--patience", tr_patience, "early-stopping patience");
    train_cmd->add_option("--lr", tr_lr, "learning rate");
    train_cmd->add_option("--weight-decay", tr_wd, "weight decay (default per arch)");
    train_cmd->add_option("--alpha", tr_alpha, "ego-mixing weight (alpha_mix)");
    train_cmd->add_option("--dropout", tr_dropout, "dropout rate");
    train_cmd->add_option("--split", tr_split, "split file (default: seeded 10/10/80)");
    train_cmd->add_option("--seed", tr_seed, "random seed");
    train_cmd->add_option("--out", tr_out, "model checkpoint path");

    // ---- defend ----
    auto* defend_cmd =
        app.add_subcommand("defend", "train an SVD-defended model and report diagnostics");
    std::string df_data, df_arch = "gcn", df_split, df_out = "model.bin", df_variant = "II",
                df_norm = "sym";
    int df_rank = 5, df_hidden = 64, df_iters = 200, df_patience = 100;
    double df_lr = 0.01;
    std::uint64_t df_seed = 0;
    defend_cmd->add_option("--data", df_data, "dataset directory")->required();
    defend_cmd->add_option("--arch", df_arch, "gcn|sage_separate|h2gcn_style");
    defend_cmd->add_option("--rank", df_rank, "SVD rank k")->required();
    defend_cmd->add_option("--variant", df_variant, "I|II");
    defend_cmd->add_option("--norm", df_norm, "sym|rw");
    defend_cmd->add_option("--hidden", df_hidden, "hidden width");
    defend_cmd->add_option("--iters", df_iters, "max training iterations");
    defend_cmd->add_option("--patience", df_patience, "early-stopping patience");
    defend_cmd->add_option("--lr", df_lr, "learning rate");
    defend_cmd->add_option("--split", df_split, "split file");
    defend_cmd->add_option("--seed", df_seed, "random seed");
    defend_cmd->add_option("--out", df_out, "model checkpoint path");

    // ---- attack ----
    auto* attack_cmd = app.add_subcommand("attack", "generate structural perturbations");
    std::string at_data, at_split, at_out = "perturbation.txt", at_stats, at_mode = "targeted";
    int at_target = -1, at_budget = 0;
    double at_fraction = 0.2;
    bool at_influencers = false;
    std::uint64_t at_seed = 0;
    attack_cmd->add_option("--data", at_data, "dataset directory")->required();
    attack_cmd->add_option("--split", at_split, "split file");
    attack_cmd->add_option("--mode", at_mode, "targeted|untargeted");
    attack_cmd->add_option("--target", at_target, "target node (targeted)");
    attack_cmd->add_option("--budget", at_budget, "flip budget (targeted; default degree)");
    attack_cmd->add_flag("--influencers", at_influencers, "allow 1-hop influencer flips");
    attack_cmd->add_option("--budget-fraction", at_fraction, "edge fraction (untargeted)");
    attack_cmd->add_option("--seed", at_seed, "split seed when no split file");
    attack_cmd->add_option("--out", at_out, "perturbation file");
    attack_cmd->add_option("--stats-out", at_stats, "stats JSON (default stdout)");

    // ---- certify ----
    auto* cert_cmd = app.add_subcommand("certify", "randomized-smoothing certification");
    std::string ce_data, ce_model, ce_split, ce_grid = "cert_grid.csv",
                ce_summary = "cert_summary.json";
    double ce_pplus = 0.001, ce_pminus = 0.4, ce_alpha = 0.01;
    long ce_n0 = 1000, ce_n1 = 10000;
    int ce_maxra = 3, ce_maxrd = 10, ce_nodes = 20;
    std::uint64_t ce_seed = 0;
    cert_cmd->add_option("--data", ce_data, "dataset directory")->required();
    cert_cmd->add_option("--model", ce_model, "model checkpoint")->required();
    cert_cmd->add_option("--split", ce_split, "split file");
    cert_cmd->add_option("--p-plus", ce_pplus, "edge addition probability");
    cert_cmd->add_option("--p-minus", ce_pminus, "edge deletion probability");
    cert_cmd->add_option("--n0", ce_n0, "samples for the smoothed prediction");
    cert_cmd->add_option("--n1", ce_n1, "samples for the confidence bound");
    cert_cmd->add_option("--alpha-sig", ce_alpha, "significance level");
    cert_cmd->add_option("--max-ra", ce_maxra, "max addition radius");
    cert_cmd->add_option("--max-rd", ce_maxrd, "max deletion radius");
    cert_cmd->add_option("--nodes", ce_nodes, "number of test nodes to certify");
    cert_cmd->add_option("--seed", ce_seed, "random seed");
    cert_cmd->add_option("--out-grid", ce_grid, "grid CSV path");
    cert_cmd->add_option("--out-summary", ce_summary, "summary JSON path");

    // ---- theory ----
    auto* theory_cmd = app.add_subcommand("theory", "closed-form theory tools");
    theory_cmd->require_subcommand(1);
    auto* verify_cmd = theory_cmd->add_subcommand("verify", "verify the theorem sign laws");
    std::string tv_out;
    verify_cmd->add_option("--out", tv_out, "report JSON (default stdout)");

    // ---- run ----
    auto* run_cmd = app.add_subcommand("run", "run a full experiment from a config file");
    std::string run_config, run_out = "reports";
    std::uint64_t run_seed = 0;
    bool run_seed_set = false;
    run_cmd->add_option("--config", run_config, "flat key=value config file")->required();
    run_cmd->add_option("--out-dir", run_out, "report output directory");
    run_cmd->add_option("--seed", run_seed, "override config seed")
        ->each([&](const std::string&) { run_seed_set = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth_cmd) {
            spec.mix = mix == "balanced" ? ClassMix::balanced : ClassMix::exact;
            LabeledGraph g = make_synthetic(spec);
            save_dataset(g, synth_out);
            auto rep = edge_homophily(g);
            std::cout << "wrote " << synth_out << ": n=" << g.num_nodes()
                      << " edges=" << g.adj.num_edges() << " h=" << rep.edge_homophily << '\n';
        } else if (*stats_cmd) {
            LabeledGraph g = load_dataset(stats_data);
            nlohmann::json j;
            auto rep = edge_homophily(g);
            j["n"] = g.num_nodes();
            j["edges"] = g.adj.num_edges();
            j["classes"] = g.num_classes;
            j["h"] = rep.edge_homophily;
            j["h_random"] = rep.random_baseline;
            if (!stats_targets.empty()) j["h_t"] = target_homophily(g, stats_targets);
            if (!stats_pert.empty()) {
                Perturbation p = load_perturbation(stats_pert);
                PerturbationStats st = perturbation_stats(
                    g, p, stats_targets.empty() ? nullptr : &stats_targets);
                j["perturbation"] = {
                    {"additions_total", st.additions_total},
                    {"additions_hetero_fraction", st.additions_hetero_fraction},
                    {"deletions_total", st.deletions_total},
                    {"deletions_homo_fraction", st.deletions_homo_fraction},
                    {"h_before", st.h_before},
                    {"h_after", st.h_after}};
                if (st.ht_before) j["perturbation"]["ht_before"] = *st.ht_before;
                if (st.ht_after) j["perturbation"]["ht_after"] = *st.ht_after;
            }
            write_json(j, stats_out);
        } else if (*train_cmd || *defend_cmd) {
            bool defended = static_cast<bool>(*defend_cmd);
            LabeledGraph g = load_dataset(defended ? df_data : tr_data);
            ModelConfig mc;
            mc.arch = arch_from_name(defended ? df_arch : tr_arch);
            mc.hidden_dim = defended ? df_hidden : tr_hidden;
            mc.alpha = tr_alpha;
            mc.dropout = defended ? 0.0 : tr_dropout;
            if (defended) {
                SvdConfig svd;
                svd.rank = df_rank;
                svd.variant = df_variant == "I" ? SvdConfig::Variant::I : SvdConfig::Variant::II;
                svd.normalization = df_norm == "rw" ? SvdConfig::Norm::row_stochastic
                                                    : SvdConfig::Norm::symmetric;
                mc = build_defended_model(mc, svd);
                std::cout << "diagonal dominance ratio: "
                          << diagonal_dominance_ratio(svd_preprocess(g.adj, svd)) << '\n';
            }
            TrainConfig tc = defaults_for(mc.arch, defended ? df_seed : tr_seed);
            tc.max_iters = defended ? df_iters : tr_iters;
            tc.patience = defended ? df_patience : tr_patience;
            tc.learning_rate = defended ? df_lr : tr_lr;
            if (!defended && tr_wd >= 0.0) tc.weight_decay = tr_wd;
            SplitAssignment sp =
                splits_for(g, defended ? df_split : tr_split, tc.seed);
            TrainedModel m = train(mc, tc, g, sp.train, sp.val);
            save_model(m, defended ? df_out : tr_out);
            std::cout << "val_acc=" << m.best_val_accuracy
                      << " test_acc=" << evaluate(m, g, sp.test) << " -> "
                      << (defended ? df_out : tr_out) << '\n';
        } else if (*attack_cmd) {
            LabeledGraph g = load_dataset(at_data);
            SplitAssignment sp = splits_for(g, at_split, at_seed);
            Perturbation p;
            std::vector<int> targets;
            if (at_mode == "targeted") {
                if (at_target < 0) throw ConfigError("targeted attack needs --target");
                int budget = at_budget > 0 ? at_budget : std::max(1, g.adj.degree(at_target));
                p = targeted_attack(g, sp.train, at_target, budget,
                                    at_influencers ? TargetedMode::with_influencers
                                                   : TargetedMode::direct_only);
                targets.push_back(at_target);
            } else if (at_mode == "untargeted") {
                p = untargeted_attack(g, sp.train, at_fraction);
            } else {
                throw ConfigError("unknown attack mode: " + at_mode);
            }
            save_perturbation(p, at_out);
            PerturbationStats st =
                perturbation_stats(g, p, targets.empty() ? nullptr : &targets);
            nlohmann::json j = {{"flips", p.budget_used},
                                {"additions_total", st.additions_total},
                                {"additions_hetero_fraction", st.additions_hetero_fraction},
                                {"deletions_total", st.deletions_total},
                                {"deletions_homo_fraction", st.deletions_homo_fraction},
                                {"h_before", st.h_before},
                                {"h_after", st.h_after}};
            if (st.ht_before) j["ht_before"] = *st.ht_before;
            if (st.ht_after) j["ht_after"] = *st.ht_after;
            write_json(j, at_stats);
        } else if (*cert_cmd) {
            LabeledGraph g = load_dataset(ce_data);
            TrainedModel m = load_model(ce_model);
            SplitAssignment sp = splits_for(g, ce_split, ce_seed);
            SmoothingScheme scheme{ce_pplus, ce_pminus};
            CertifyOptions opt;
            opt.n0 = ce_n0;
            opt.n1 = ce_n1;
            opt.alpha_sig = ce_alpha;
            opt.max_ra = ce_maxra;
            opt.max_rd = ce_maxrd;
            Rng rng(mix64(ce_seed ^ 0xce47ULL));
            auto picks = rng.sample_without_replacement(
                static_cast<int>(sp.test.size()),
                std::min<int>(ce_nodes, static_cast<int>(sp.test.size())));
            std::vector<int> nodes;
            for (int i : picks) nodes.push_back(sp.test[i]);
            std::sort(nodes.begin(), nodes.end());
            CertGrid grid = certification_grid(m, g, nodes, scheme, opt, ce_seed);
            save_cert_grid_csv(grid, ce_grid);
            CertSummary s = summarize_certification(grid);
            save_cert_summary_json(s, ce_summary);
            std::cout << "AC=" << s.accumulated_certification << " acc=" << s.accuracy << " -> "
                      << ce_grid << ", " << ce_summary << '\n';
        } else if (*verify_cmd) {
            TheoremReport rep = verify_theorems(VerifyGrid{});
            nlohmann::json j;
            j["grid"] = {{"num_classes", VerifyGrid{}.num_classes},
                         {"homophily", VerifyGrid{}.homophily},
                         {"degrees", "1..32"},
                         {"alphas", VerifyGrid{}.alphas}};
            j["checks"] = rep.checks;
            j["pass_count"] = rep.pass_count();
            j["failures"] = nlohmann::json::array();
            for (const auto& f : rep.failures)
                j["failures"].push_back(
                    {{"check", f.check}, {"params", f.params}, {"value", f.value}});
            write_json(j, tv_out);
            if (!rep.failures.empty()) return 3;
        } else if (*run_cmd) {
            ExperimentConfig cfg = parse_experiment_config(run_config);
            if (run_seed_set) cfg.seed = run_seed;
            ReportBundle bundle = run_experiment(cfg);
            emit_report(bundle, ReportFormat::csv, run_out);
            emit_report(bundle, ReportFormat::json, run_out);
            for (const auto& e : bundle.errors) std::cerr << "warning: " << e << '\n';
            std::cout << "reports written to " << run_out << '\n';
            if (!bundle.errors.empty()) return 3;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const InfeasibleSpecError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
