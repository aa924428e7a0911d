#include "hrob/harness.hpp"

#include "hrob/errors.hpp"
#include "hrob/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace hrob {

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stdev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

SplitAssignment make_splits(const LabeledGraph& g, std::array<double, 3> fractions,
                            std::uint64_t seed) {
    if (std::fabs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
    const int n = g.num_nodes();
    const int want_train = static_cast<int>(std::lround(fractions[0] * n));
    const int want_val = static_cast<int>(std::lround(fractions[1] * n));

    SplitAssignment out;
    out.seed = seed;
    Rng rng(mix64(seed ^ 0x5117ULL));

    std::vector<std::vector<int>> by_class(g.num_classes);
    for (int v = 0; v < n; ++v) by_class[g.labels[v]].push_back(v);
    int min_class = n;
    for (const auto& c : by_class) min_class = std::min(min_class, static_cast<int>(c.size()));

    if (min_class < 3) {
        out.stratified = false;
        out.warning = "ClassTooSmall: smallest class has " + std::to_string(min_class) +
                      " nodes; using unstratified split";
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        rng.shuffle(all);
        out.train.assign(all.begin(), all.begin() + want_train);
        out.val.assign(all.begin() + want_train, all.begin() + want_train + want_val);
        out.test.assign(all.begin() + want_train + want_val, all.end());
    } else {
        for (auto& c : by_class) rng.shuffle(c);
        auto allocate = [&](double frac, int want, std::vector<std::vector<int>>& pools,
                            std::vector<int>& dst) {
            std::vector<int> take(pools.size());
            std::vector<std::pair<double, int>> rema;  // (-remainder, class) for stable sort
            int total = 0;
            for (std::size_t c = 0; c < pools.size(); ++c) {
                double exact = frac * static_cast<double>(by_class[c].size());
                take[c] = static_cast<int>(std::floor(exact));
                total += take[c];
                rema.push_back({-(exact - take[c]), static_cast<int>(c)});
            }
            std::sort(rema.begin(), rema.end());
            for (std::size_t i = 0; total < want && i < rema.size(); ++i) {
                int c = rema[i].second;
                if (take[c] < static_cast<int>(pools[c].size())) {
                    ++take[c];
                    ++total;
                }
            }
            for (std::size_t c = 0; c < pools.size(); ++c) {
                for (int i = 0; i < take[c]; ++i) {
                    dst.push_back(pools[c].back());
                    pools[c].pop_back();
                }
            }
        };
        auto pools = by_class;
        allocate(fractions[0], want_train, pools, out.train);
        allocate(fractions[1], want_val, pools, out.val);
        for (const auto& c : pools) out.test.insert(out.test.end(), c.begin(), c.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

void save_splits(const SplitAssignment& s, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write " + path);
    for (int v : s.train) f << v << "\ttrain\n";
    for (int v : s.val) f << v << "\tval\n";
    for (int v : s.test) f << v << "\ttest\n";
}

SplitAssignment load_splits(const std::string& path, int num_nodes) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read " + path);
    SplitAssignment s;
    int v;
    std::string role;
    while (f >> v >> role) {
        if (v < 0 || v >= num_nodes) throw IoError("split node out of range: " + std::to_string(v));
        if (role == "train")
            s.train.push_back(v);
        else if (role == "val")
            s.val.push_back(v);
        else if (role == "test")
            s.test.push_back(v);
        else
            throw IoError("bad split role: " + role);
    }
    return s;
}

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::clean: return "clean";
        case Scenario::poison_targeted: return "poison_targeted";
        case Scenario::evasion_targeted: return "evasion_targeted";
        case Scenario::poison_untargeted: return "poison_untargeted";
        case Scenario::evasion_untargeted: return "evasion_untargeted";
    }
    return "?";
}

Scenario scenario_from_name(const std::string& s) {
    if (s == "clean") return Scenario::clean;
    if (s == "poison_targeted") return Scenario::poison_targeted;
    if (s == "evasion_targeted") return Scenario::evasion_targeted;
    if (s == "poison_untargeted") return Scenario::poison_untargeted;
    if (s == "evasion_untargeted") return Scenario::evasion_untargeted;
    throw ConfigError("unknown scenario: " + s);
}

namespace {

bool is_targeted(Scenario s) {
    return s == Scenario::poison_targeted || s == Scenario::evasion_targeted;
}
bool is_poison(Scenario s) {
    return s == Scenario::poison_targeted || s == Scenario::poison_untargeted;
}

int auto_target_count(int n) { return std::min(60, std::max(10, n / 10)); }

} // namespace

ReportBundle run_experiment(const ExperimentConfig& cfg) {
    if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");
    if (cfg.models.empty()) throw ConfigError("no models configured");
    ReportBundle bundle;
    bundle.config = cfg;
    bundle.models.resize(cfg.models.size());
    for (std::size_t i = 0; i < cfg.models.size(); ++i)
        bundle.models[i].name = cfg.model_names[i];

    for (int rep = 0; rep < cfg.repetitions; ++rep) {
        const std::uint64_t rep_seed = cfg.seed + static_cast<std::uint64_t>(rep);
        try {
            LabeledGraph g;
            if (cfg.dataset_dir.empty()) {
                SynthSpec spec = cfg.synth;
                spec.seed = rep_seed;
                g = make_synthetic(spec);
            } else {
                g = load_dataset(cfg.dataset_dir);
            }
            SplitAssignment splits = make_splits(g, cfg.fractions, rep_seed);

            // one set of perturbations per repetition, shared by every model
            // and by the poison/evasion variants
            std::vector<int> targets;
            std::vector<Perturbation> target_perts;
            Perturbation untargeted_pert;
            if (is_targeted(cfg.scenario)) {
                int count = cfg.target_count > 0 ? cfg.target_count
                                                 : auto_target_count(g.num_nodes());
                count = std::min<int>(count, static_cast<int>(splits.test.size()));
                Rng trng(mix64(rep_seed ^ 0x7a47ULL));
                auto picks = trng.sample_without_replacement(
                    static_cast<int>(splits.test.size()), count);
                for (int i : picks) targets.push_back(splits.test[i]);
                std::sort(targets.begin(), targets.end());

                LinearSurrogate sur = fit_linear_surrogate(g, splits.train);
                for (int t : targets)
                    target_perts.push_back(targeted_attack(
                        g, sur, t, std::max(1, g.adj.degree(t)), cfg.targeted_mode));
            } else if (cfg.scenario != Scenario::clean) {
                untargeted_pert = untargeted_attack(g, splits.train, cfg.budget_fraction);
            }

            // homophily-shift statistics for the repetition
            if (cfg.scenario != Scenario::clean) {
                RepetitionStats rs;
                rs.h_before = edge_homophily(g).edge_homophily;
                long adds = 0, dels = 0, hetero_adds = 0, homo_dels = 0;
                auto absorb = [&](const Perturbation& p) {
                    for (const Flip& f : p.flips) {
                        bool homo = g.labels[f.u] == g.labels[f.v];
                        if (f.add) {
                            ++adds;
                            hetero_adds += !homo;
                        } else {
                            ++dels;
                            homo_dels += homo;
                        }
                    }
                };
                if (is_targeted(cfg.scenario)) {
                    rs.ht_before = target_homophily(g, targets);
                    double h_after = 0.0, ht_after = 0.0;
                    for (std::size_t i = 0; i < targets.size(); ++i) {
                        absorb(target_perts[i]);
                        LabeledGraph gp = apply_perturbation(g, target_perts[i]);
                        h_after += edge_homophily(gp).edge_homophily;
                        ht_after += target_homophily(gp, {targets[i]});
                    }
                    rs.h_after = h_after / static_cast<double>(targets.size());
                    rs.ht_after = ht_after / static_cast<double>(targets.size());
                    rs.additions_mean = static_cast<double>(adds) / targets.size();
                    rs.deletions_mean = static_cast<double>(dels) / targets.size();
                } else {
                    absorb(untargeted_pert);
                    rs.h_after =
                        edge_homophily(apply_perturbation(g, untargeted_pert)).edge_homophily;
                    rs.additions_mean = static_cast<double>(adds);
                    rs.deletions_mean = static_cast<double>(dels);
                }
                rs.additions_hetero_pct = adds ? 100.0 * hetero_adds / adds : 0.0;
                rs.deletions_homo_pct = dels ? 100.0 * homo_dels / dels : 0.0;
                rs.hetero_increasing_pct =
                    (adds + dels) ? 100.0 * (hetero_adds + homo_dels) / (adds + dels) : 0.0;
                bundle.stats.push_back(rs);
            }

            for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
                const ModelConfig& mc = cfg.models[mi];
                TrainConfig tc =
                    cfg.has_train_overrides ? cfg.train_overrides : defaults_for(mc.arch);
                tc.seed = rep_seed;
                TrainedModel clean_model = train(mc, tc, g, splits.train, splits.val);

                ModelResult& mr = bundle.models[mi];
                const std::vector<int>& eval_nodes =
                    is_targeted(cfg.scenario) ? targets : splits.test;
                mr.clean_acc.push_back(evaluate(clean_model, g, eval_nodes));

                if (cfg.scenario == Scenario::clean) {
                    // nothing else to do
                } else if (is_targeted(cfg.scenario)) {
                    int ok = 0;
                    for (std::size_t i = 0; i < targets.size(); ++i) {
                        LabeledGraph gp = apply_perturbation(g, target_perts[i]);
                        const TrainedModel* m = &clean_model;
                        TrainedModel retrained;
                        if (is_poison(cfg.scenario)) {
                            retrained = train(mc, tc, gp, splits.train, splits.val);
                            m = &retrained;
                        }
                        ok += evaluate(*m, gp, {targets[i]}) > 0.5;
                    }
                    mr.attacked_acc.push_back(static_cast<double>(ok) /
                                              static_cast<double>(targets.size()));
                } else {
                    LabeledGraph gp = apply_perturbation(g, untargeted_pert);
                    if (is_poison(cfg.scenario)) {
                        TrainedModel m2 = train(mc, tc, gp, splits.train, splits.val);
                        mr.attacked_acc.push_back(evaluate(m2, gp, splits.test));
                    } else {
                        mr.attacked_acc.push_back(evaluate(clean_model, gp, splits.test));
                    }
                }

                if (cfg.smoothing) {
                    int count = std::min<int>(cfg.cert_nodes,
                                              static_cast<int>(splits.test.size()));
                    Rng crng(mix64(rep_seed ^ 0xce47ULL));
                    auto picks = crng.sample_without_replacement(
                        static_cast<int>(splits.test.size()), count);
                    std::vector<int> cert_nodes;
                    for (int i : picks) cert_nodes.push_back(splits.test[i]);
                    std::sort(cert_nodes.begin(), cert_nodes.end());
                    CertGrid grid = certification_grid(clean_model, g, cert_nodes,
                                                       *cfg.smoothing, cfg.cert, rep_seed);
                    mr.cert.push_back(summarize_certification(grid));
                }
            }
        } catch (const std::exception& e) {
            bundle.errors.push_back("repetition " + std::to_string(rep) + ": " + e.what());
        }
    }
    return bundle;
}

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

void emit_report(const ReportBundle& bundle, ReportFormat format, const std::string& out_dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (bundle.models.empty()) throw ConfigError("empty bundle");

    auto stat_cols = [&](auto get) {
        std::vector<double> v;
        for (const auto& s : bundle.stats) v.push_back(get(s));
        return std::pair<double, double>{mean(v), stdev(v)};
    };

    if (format == ReportFormat::csv) {
        {
            std::ofstream f(out_dir + "/accuracy.csv");
            if (!f) throw IoError("cannot write accuracy table");
            f << "model,scenario,clean_mean,clean_std,attacked_mean,attacked_std\n";
            for (const auto& m : bundle.models) {
                f << m.name << ',' << scenario_name(bundle.config.scenario) << ','
                  << fmt(mean(m.clean_acc)) << ',' << fmt(stdev(m.clean_acc)) << ','
                  << fmt(mean(m.attacked_acc)) << ',' << fmt(stdev(m.attacked_acc)) << '\n';
            }
        }
        if (!bundle.stats.empty()) {
            std::ofstream f(out_dir + "/stats.csv");
            if (!f) throw IoError("cannot write stats table");
            f << "h_before_mean,h_before_std,h_after_mean,h_after_std,"
                 "ht_before_mean,ht_before_std,ht_after_mean,ht_after_std,"
                 "additions_mean,additions_std,additions_hetero_pct_mean,additions_hetero_pct_std,"
                 "deletions_mean,deletions_std,deletions_homo_pct_mean,deletions_homo_pct_std,"
                 "hetero_increasing_pct_mean,hetero_increasing_pct_std\n";
            auto put = [&](auto get, bool last = false) {
                auto [m, s] = stat_cols(get);
                f << fmt(m) << ',' << fmt(s) << (last ? '\n' : ',');
            };
            put([](const RepetitionStats& s) { return s.h_before; });
            put([](const RepetitionStats& s) { return s.h_after; });
            put([](const RepetitionStats& s) { return s.ht_before.value_or(0.0); });
            put([](const RepetitionStats& s) { return s.ht_after.value_or(0.0); });
            put([](const RepetitionStats& s) { return s.additions_mean; });
            put([](const RepetitionStats& s) { return s.additions_hetero_pct; });
            put([](const RepetitionStats& s) { return s.deletions_mean; });
            put([](const RepetitionStats& s) { return s.deletions_homo_pct; });
            put([](const RepetitionStats& s) { return s.hetero_increasing_pct; }, true);
        }
        if (!bundle.models.front().cert.empty()) {
            std::ofstream f(out_dir + "/certification.csv");
            if (!f) throw IoError("cannot write certification table");
            f << "model,AC_mean,AC_std,ra_bar_mean,ra_bar_std,rd_bar_mean,rd_bar_std,"
                 "acc_mean,acc_std\n";
            for (const auto& m : bundle.models) {
                std::vector<double> ac, ra, rd, acc;
                for (const auto& c : m.cert) {
                    ac.push_back(c.accumulated_certification);
                    if (c.ra_bar) ra.push_back(*c.ra_bar);
                    if (c.rd_bar) rd.push_back(*c.rd_bar);
                    acc.push_back(c.accuracy);
                }
                f << m.name << ',' << fmt(mean(ac)) << ',' << fmt(stdev(ac)) << ','
                  << fmt(mean(ra)) << ',' << fmt(stdev(ra)) << ',' << fmt(mean(rd)) << ','
                  << fmt(stdev(rd)) << ',' << fmt(mean(acc)) << ',' << fmt(stdev(acc)) << '\n';
            }
        }
        return;
    }

    nlohmann::json j;
    j["scenario"] = scenario_name(bundle.config.scenario);
    j["repetitions"] = bundle.config.repetitions;
    j["errors"] = bundle.errors;
    for (const auto& m : bundle.models) {
        nlohmann::json jm;
        jm["name"] = m.name;
        jm["clean_acc"] = m.clean_acc;
        jm["attacked_acc"] = m.attacked_acc;
        jm["clean_mean"] = mean(m.clean_acc);
        jm["clean_std"] = stdev(m.clean_acc);
        jm["attacked_mean"] = mean(m.attacked_acc);
        jm["attacked_std"] = stdev(m.attacked_acc);
        if (!m.cert.empty()) {
            std::vector<double> ac, acc;
            for (const auto& c : m.cert) {
                ac.push_back(c.accumulated_certification);
                acc.push_back(c.accuracy);
            }
            jm["cert_AC_mean"] = mean(ac);
            jm["cert_AC_std"] = stdev(ac);
            jm["cert_acc_mean"] = mean(acc);
        }
        j["models"].push_back(jm);
    }
    if (!bundle.stats.empty()) {
        nlohmann::json js;
        auto put = [&](const char* key, auto get) {
            auto [m, s] = stat_cols(get);
            js[std::string(key) + "_mean"] = m;
            js[std::string(key) + "_std"] = s;
        };
        put("h_before", [](const RepetitionStats& s) { return s.h_before; });
        put("h_after", [](const RepetitionStats& s) { return s.h_after; });
        put("ht_before", [](const RepetitionStats& s) { return s.ht_before.value_or(0.0); });
        put("ht_after", [](const RepetitionStats& s) { return s.ht_after.value_or(0.0); });
        put("additions", [](const RepetitionStats& s) { return s.additions_mean; });
        put("additions_hetero_pct",
            [](const RepetitionStats& s) { return s.additions_hetero_pct; });
        put("deletions", [](const RepetitionStats& s) { return s.deletions_mean; });
        put("deletions_homo_pct", [](const RepetitionStats& s) { return s.deletions_homo_pct; });
        put("hetero_increasing_pct",
            [](const RepetitionStats& s) { return s.hetero_increasing_pct; });
        j["stats"] = js;
    }
    std::ofstream f(out_dir + "/report.json");
    if (!f) throw IoError("cannot write report.json");
    f << j.dump(2) << '\n';
}

namespace {

std::map<std::string, std::string> read_kv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read config " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(f, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (!key.empty()) kv[key] = val;
    }
    return kv;
}

} // namespace

ExperimentConfig parse_experiment_config(const std::string& path) {
    auto kv = read_kv(path);
    ExperimentConfig cfg;
    SvdConfig svd;
    bool has_svd = false;
    int hidden = 64;
    double alpha = 0.5, dropout = 0.0;
    std::string models_value = "gcn";

    auto take = [&](const std::string& key) -> std::optional<std::string> {
        auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };

    if (auto v = take("dataset")) cfg.dataset_dir = *v == "synth" ? "" : *v;
    if (auto v = take("synth.n")) cfg.synth.n = std::stoi(*v);
    if (auto v = take("synth.d")) cfg.synth.d = std::stoi(*v);
    if (auto v = take("synth.h")) cfg.synth.h = std::stod(*v);
    if (auto v = take("synth.classes")) cfg.synth.num_classes = std::stoi(*v);
    if (auto v = take("synth.p")) cfg.synth.p = std::stod(*v);
    if (auto v = take("synth.mix"))
        cfg.synth.mix = *v == "balanced" ? ClassMix::balanced : ClassMix::exact;
    if (auto v = take("scenario")) cfg.scenario = scenario_from_name(*v);
    if (auto v = take("budget_fraction")) cfg.budget_fraction = std::stod(*v);
    if (auto v = take("targets")) cfg.target_count = std::stoi(*v);
    if (auto v = take("mode"))
        cfg.targeted_mode =
            *v == "influencers" ? TargetedMode::with_influencers : TargetedMode::direct_only;
    if (auto v = take("repetitions")) cfg.repetitions = std::stoi(*v);
    if (auto v = take("seed")) cfg.seed = std::stoull(*v);
    if (auto v = take("fractions.train")) cfg.fractions[0] = std::stod(*v);
    if (auto v = take("fractions.val")) cfg.fractions[1] = std::stod(*v);
    if (auto v = take("fractions.test")) cfg.fractions[2] = std::stod(*v);
    if (auto v = take("model.hidden")) hidden = std::stoi(*v);
    if (auto v = take("model.alpha")) alpha = std::stod(*v);
    if (auto v = take("model.dropout")) dropout = std::stod(*v);
    if (auto v = take("models")) models_value = *v;
    if (auto v = take("defense.rank")) {
        svd.rank = std::stoi(*v);
        has_svd = true;
    }
    if (auto v = take("defense.variant"))
        svd.variant = *v == "I" ? SvdConfig::Variant::I : SvdConfig::Variant::II;
    if (auto v = take("defense.norm"))
        svd.normalization =
            *v == "rw" ? SvdConfig::Norm::row_stochastic : SvdConfig::Norm::symmetric;
    if (auto v = take("smoothing.p_plus")) {
        cfg.smoothing = cfg.smoothing.value_or(SmoothingScheme{});
        cfg.smoothing->p_plus = std::stod(*v);
    }
    if (auto v = take("smoothing.p_minus")) {
        cfg.smoothing = cfg.smoothing.value_or(SmoothingScheme{});
        cfg.smoothing->p_minus = std::stod(*v);
    }
    if (auto v = take("cert.n0")) cfg.cert.n0 = std::stol(*v);
    if (auto v = take("cert.n1")) cfg.cert.n1 = std::stol(*v);
    if (auto v = take("cert.alpha_sig")) cfg.cert.alpha_sig = std::stod(*v);
    if (auto v = take("cert.max_ra")) cfg.cert.max_ra = std::stoi(*v);
    if (auto v = take("cert.max_rd")) cfg.cert.max_rd = std::stoi(*v);
    if (auto v = take("cert.nodes")) cfg.cert_nodes = std::stoi(*v);
    if (auto v = take("cert.multi_class")) cfg.cert.multi_class = *v == "true";
    if (auto v = take("train.max_iters")) {
        cfg.train_overrides.max_iters = std::stoi(*v);
        cfg.has_train_overrides = true;
    }
    if (auto v = take("train.patience")) {
        cfg.train_overrides.patience = std::stoi(*v);
        cfg.has_train_overrides = true;
    }
    if (auto v = take("train.lr")) {
        cfg.train_overrides.learning_rate = std::stod(*v);
        cfg.has_train_overrides = true;
    }
    if (auto v = take("train.weight_decay")) {
        cfg.train_overrides.weight_decay = std::stod(*v);
        cfg.has_train_overrides = true;
    }
    if (!kv.empty()) throw ConfigError("unknown config key: " + kv.begin()->first);

    std::stringstream ss(models_value);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        bool defended = false;
        if (auto pos = name.find("+svd"); pos != std::string::npos) {
            defended = true;
            name = name.substr(0, pos);
        }
        ModelConfig mc;
        mc.arch = arch_from_name(name);
        mc.hidden_dim = hidden;
        mc.alpha = alpha;
        mc.dropout = dropout;
        std::string label = name;
        if (defended) {
            if (!has_svd) throw ConfigError("model " + name + "+svd needs defense.rank");
            mc = build_defended_model(mc, svd);
            label += "+svd";
        }
        cfg.models.push_back(mc);
        cfg.model_names.push_back(label);
    }
    if (cfg.models.empty()) throw ConfigError("no models configured");
    return cfg;
}

} // namespace hrob
