#include "hrob/model.hpp"

#include "hrob/errors.hpp"
#include "hrob/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace hrob {

std::string arch_name(Arch a) {
    switch (a) {
        case Arch::gcn: return "gcn";
        case Arch::sage_separate: return "sage_separate";
        case Arch::h2gcn_style: return "h2gcn_style";
        case Arch::alpha_mix: return "alpha_mix";
        case Arch::mlp: return "mlp";
    }
    return "?";
}

Arch arch_from_name(const std::string& s) {
    if (s == "gcn") return Arch::gcn;
    if (s == "sage_separate" || s == "sage") return Arch::sage_separate;
    if (s == "h2gcn_style" || s == "h2gcn") return Arch::h2gcn_style;
    if (s == "alpha_mix") return Arch::alpha_mix;
    if (s == "mlp") return Arch::mlp;
    throw ConfigError("unknown arch: " + s);
}

TrainConfig defaults_for(Arch arch, std::uint64_t seed) {
    TrainConfig t;
    t.seed = seed;
    if (arch == Arch::gcn) t.weight_decay = 5e-4;
    return t;
}

namespace {

// Propagation operator, sparse for plain graphs, dense after SVD preprocessing.
struct Prop {
    bool dense = false;
    Eigen::SparseMatrix<double> s;
    Eigen::MatrixXd d;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const {
        return dense ? Eigen::MatrixXd(d * x) : Eigen::MatrixXd(s * x);
    }
    Eigen::MatrixXd apply_t(const Eigen::MatrixXd& x) const {
        return dense ? Eigen::MatrixXd(d.transpose() * x) : Eigen::MatrixXd(s.transpose() * x);
    }
};

Prop sparse_prop(Eigen::SparseMatrix<double> m) {
    Prop p;
    p.s = std::move(m);
    return p;
}

Prop dense_prop(Eigen::MatrixXd m) {
    Prop p;
    p.dense = true;
    p.d = std::move(m);
    return p;
}

// Row-stochastic or symmetric normalization without self-loops; zero rows
// allowed when zero_fill is set (empty neighborhood aggregates to zero).
Eigen::SparseMatrix<double> normalize_or_zero(const SparseAdjacency& a, bool symmetric,
                                              bool zero_fill) {
    const int n = a.num_nodes();
    if (!zero_fill)
        return normalize(a, symmetric ? NormMode::symmetric : NormMode::row_stochastic);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * a.num_edges());
    for (int u = 0; u < n; ++u) {
        double du = a.degree(u);
        if (du == 0) continue;
        for (int v : a.neighbors(u)) {
            double w = symmetric ? 1.0 / std::sqrt(du * std::max<double>(a.degree(v), 1.0))
                                 : 1.0 / du;
            trips.emplace_back(u, v, w);
        }
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

// Arch-appropriate propagation operators, honoring an SVD defense if set.
std::vector<Prop> build_props(const ModelConfig& cfg, const LabeledGraph& g) {
    const int n = g.num_nodes();
    switch (cfg.arch) {
        case Arch::mlp:
            return {};
        case Arch::gcn: {
            if (cfg.svd) return {dense_prop(svd_preprocess(g.adj, *cfg.svd))};
            return {sparse_prop(normalize(g.adj, NormMode::symmetric_self_loop))};
        }
        case Arch::sage_separate: {
            if (cfg.svd) {
                SvdConfig c = *cfg.svd;
                c.normalization = SvdConfig::Norm::row_stochastic;  // per the wiring
                return {dense_prop(normalize_dense(truncated_svd(g.adj.to_dense(), c.rank),
                                                   c.normalization))};
            }
            return {sparse_prop(normalize_or_zero(g.adj, false, cfg.zero_fill_isolated))};
        }
        case Arch::h2gcn_style: {
            SparseAdjacency a2 = two_hop_adjacency(g.adj);
            if (cfg.svd) {
                int k = cfg.svd->rank;
                return {dense_prop(normalize_dense(truncated_svd(g.adj.to_dense(), k),
                                                   SvdConfig::Norm::symmetric)),
                        dense_prop(normalize_dense(truncated_svd(a2.to_dense(), k),
                                                   SvdConfig::Norm::symmetric))};
            }
            // the 2-hop operator may legitimately have empty rows; zero-fill it always
            return {sparse_prop(normalize_or_zero(g.adj, true, cfg.zero_fill_isolated)),
                    sparse_prop(normalize_or_zero(a2, true, true))};
        }
        case Arch::alpha_mix: {
            Eigen::SparseMatrix<double> abar =
                normalize_or_zero(g.adj, false, cfg.zero_fill_isolated);
            Eigen::SparseMatrix<double> eye(n, n);
            eye.setIdentity();
            Eigen::SparseMatrix<double> p = (1.0 - cfg.alpha) * abar;
            p += Eigen::SparseMatrix<double>(cfg.alpha * eye);
            return {sparse_prop(std::move(p))};
        }
    }
    throw ConfigError("unknown arch");
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& m) { return m.cwiseMax(0.0); }

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
    Eigen::MatrixXd out(z.rows(), z.cols());
    for (int i = 0; i < z.rows(); ++i) {
        double mx = z.row(i).maxCoeff();
        Eigen::ArrayXd e = (z.row(i).array() - mx).exp();
        out.row(i) = (e / e.sum()).matrix();
    }
    return out;
}

Eigen::MatrixXd hconcat(std::initializer_list<const Eigen::MatrixXd*> parts) {
    int cols = 0;
    for (auto* p : parts) cols += static_cast<int>(p->cols());
    Eigen::MatrixXd out(( *parts.begin())->rows(), cols);
    int at = 0;
    for (auto* p : parts) {
        out.middleCols(at, static_cast<int>(p->cols())) = *p;
        at += static_cast<int>(p->cols());
    }
    return out;
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // layer input matrix (what multiplies W)
    std::vector<Eigen::MatrixXd> pre;     // pre-activations of hidden layers
    std::vector<Eigen::MatrixXd> masks;   // dropout masks (empty when off)
    std::vector<Eigen::MatrixXd> rounds;  // h2gcn round outputs R0..RK
    Eigen::MatrixXd logits;
};

int h2gcn_final_dim(int hidden, int rounds) {
    int dim = 0, block = hidden;
    for (int k = 0; k <= rounds; ++k) {
        dim += block;
        block *= 3;
    }
    return dim;
}

// Dropout mask stream: deterministic in (seed, iteration, layer).
Eigen::MatrixXd dropout_mask(double rate, int rows, int cols, std::uint64_t seed, int iter,
                             int layer) {
    Eigen::MatrixXd m(rows, cols);
    Rng rng(mix64(seed ^ mix64(0x5eedu + iter)) ^ mix64(layer));
    const double keep = 1.0 - rate;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.next_double() < keep ? 1.0 / keep : 0.0;
    return m;
}

Eigen::MatrixXd forward_impl(const TrainedModel& model, const LabeledGraph& g,
                             const std::vector<Prop>& props, bool training, std::uint64_t seed,
                             int iter, ForwardCache* cache) {
    const ModelConfig& cfg = model.config;
    const Eigen::MatrixXd& x = g.features;
    if (x.cols() == 0) throw DimensionMismatchError("graph has no features");
    const int n_layers = static_cast<int>(model.weights.size());
    const bool drop = training && cfg.dropout > 0.0;

    auto maybe_dropout = [&](Eigen::MatrixXd& r, int layer) {
        if (!drop) return;
        Eigen::MatrixXd m = dropout_mask(cfg.dropout, static_cast<int>(r.rows()),
                                         static_cast<int>(r.cols()), seed, iter, layer);
        r = r.cwiseProduct(m);
        if (cache) cache->masks.push_back(std::move(m));
    };

    Eigen::MatrixXd logits;
    switch (cfg.arch) {
        case Arch::mlp: {
            Eigen::MatrixXd r = x;
            for (int l = 0; l < n_layers; ++l) {
                if (cache) cache->inputs.push_back(r);
                Eigen::MatrixXd h = (r * model.weights[l]).rowwise() +
                                    model.biases[l].transpose();
                if (l + 1 < n_layers) {
                    if (cache) cache->pre.push_back(h);
                    r = relu(h);
                    maybe_dropout(r, l);
                } else {
                    logits = std::move(h);
                }
            }
            break;
        }
        case Arch::gcn:
        case Arch::alpha_mix: {
            const Prop& p = props[0];
            Eigen::MatrixXd r = x;
            for (int l = 0; l < n_layers; ++l) {
                if (cache) cache->inputs.push_back(r);
                Eigen::MatrixXd h =
                    p.apply(r * model.weights[l]).rowwise() + model.biases[l].transpose();
                if (l + 1 < n_layers) {
                    if (cache) cache->pre.push_back(h);
                    r = relu(h);
                    maybe_dropout(r, l);
                } else {
                    logits = std::move(h);
                }
            }
            break;
        }
        case Arch::sage_separate: {
            const Prop& p = props[0];
            Eigen::MatrixXd r = x;
            for (int l = 0; l < n_layers; ++l) {
                Eigen::MatrixXd agg = p.apply(r);
                Eigen::MatrixXd c = hconcat({&agg, &r});
                if (cache) cache->inputs.push_back(c);
                Eigen::MatrixXd h = (c * model.weights[l]).rowwise() +
                                    model.biases[l].transpose();
                if (l + 1 < n_layers) {
                    if (cache) cache->pre.push_back(h);
                    r = relu(h);
                    maybe_dropout(r, l);
                } else {
                    logits = std::move(h);
                }
            }
            break;
        }
        case Arch::h2gcn_style: {
            const Prop& p1 = props[0];  // 1-hop
            const Prop& p2 = props[1];  // 2-hop
            Eigen::MatrixXd h0 = (x * model.weights[0]).rowwise() + model.biases[0].transpose();
            if (cache) {
                cache->inputs.push_back(x);
                cache->pre.push_back(h0);
            }
            Eigen::MatrixXd r = relu(h0);
            maybe_dropout(r, 0);
            std::vector<Eigen::MatrixXd> rounds{r};
            for (int k = 1; k <= cfg.num_layers; ++k) {
                Eigen::MatrixXd a2 = p2.apply(rounds.back());
                Eigen::MatrixXd a1 = p1.apply(rounds.back());
                rounds.push_back(hconcat({&a2, &a1, &rounds.back()}));
            }
            Eigen::MatrixXd fin(x.rows(), h2gcn_final_dim(cfg.hidden_dim, cfg.num_layers));
            int at = 0;
            for (const auto& rk : rounds) {
                fin.middleCols(at, static_cast<int>(rk.cols())) = rk;
                at += static_cast<int>(rk.cols());
            }
            if (cache) {
                cache->rounds = rounds;
                cache->inputs.push_back(fin);
            }
            logits = (fin * model.weights[1]).rowwise() + model.biases[1].transpose();
            break;
        }
    }
    if (cache) cache->logits = logits;
    return logits;
}

double ce_loss_and_logit_grad(const Eigen::MatrixXd& logits, const std::vector<int>& labels,
                              const std::vector<int>& train_nodes, Eigen::MatrixXd* grad) {
    Eigen::MatrixXd s = softmax_rows(logits);
    double loss = 0.0;
    if (grad) *grad = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
    const double inv = 1.0 / static_cast<double>(train_nodes.size());
    for (int v : train_nodes) {
        int y = labels[v];
        loss -= std::log(std::max(s(v, y), 1e-300));
        if (grad) {
            grad->row(v) = s.row(v) * inv;
            (*grad)(v, y) -= inv;
        }
    }
    return loss * inv;
}

// Backward pass matching forward_impl; fills parameter gradients.
void backward_impl(const TrainedModel& model, const LabeledGraph& g,
                   const std::vector<Prop>& props, const ForwardCache& cache,
                   const Eigen::MatrixXd& glogits, std::vector<Eigen::MatrixXd>& gw,
                   std::vector<Eigen::VectorXd>& gb) {
    const ModelConfig& cfg = model.config;
    const int n_layers = static_cast<int>(model.weights.size());
    gw.resize(n_layers);
    gb.resize(n_layers);
    const bool drop = !cache.masks.empty();

    auto relu_back = [](const Eigen::MatrixXd& pre, const Eigen::MatrixXd& grad) {
        return Eigen::MatrixXd((pre.array() > 0.0).cast<double>() * grad.array());
    };

    switch (cfg.arch) {
        case Arch::mlp: {
            Eigen::MatrixXd gout = glogits;
            for (int l = n_layers - 1; l >= 0; --l) {
                gw[l] = cache.inputs[l].transpose() * gout;
                gb[l] = gout.colwise().sum();
                if (l > 0) {
                    Eigen::MatrixXd gr = gout * model.weights[l].transpose();
                    if (drop) gr = gr.cwiseProduct(cache.masks[l - 1]);
                    gout = relu_back(cache.pre[l - 1], gr);
                }
            }
            break;
        }
        case Arch::gcn:
        case Arch::alpha_mix: {
            const Prop& p = props[0];
            Eigen::MatrixXd gout = glogits;
            for (int l = n_layers - 1; l >= 0; --l) {
                Eigen::MatrixXd gp = p.apply_t(gout);
                gw[l] = cache.inputs[l].transpose() * gp;
                gb[l] = gout.colwise().sum();
                if (l > 0) {
                    Eigen::MatrixXd gr = gp * model.weights[l].transpose();
                    if (drop) gr = gr.cwiseProduct(cache.masks[l - 1]);
                    gout = relu_back(cache.pre[l - 1], gr);
                }
            }
            break;
        }
        case Arch::sage_separate: {
            const Prop& p = props[0];
            Eigen::MatrixXd gout = glogits;
            for (int l = n_layers - 1; l >= 0; --l) {
                gw[l] = cache.inputs[l].transpose() * gout;
                gb[l] = gout.colwise().sum();
                if (l > 0) {
                    Eigen::MatrixXd gc = gout * model.weights[l].transpose();
                    int half = static_cast<int>(gc.cols()) / 2;
                    Eigen::MatrixXd gr =
                        p.apply_t(gc.leftCols(half)) + gc.rightCols(half);
                    if (drop) gr = gr.cwiseProduct(cache.masks[l - 1]);
                    gout = relu_back(cache.pre[l - 1], gr);
                }
            }
            break;
        }
        case Arch::h2gcn_style: {
            const Prop& p1 = props[0];
            const Prop& p2 = props[1];
            const Eigen::MatrixXd& fin = cache.inputs[1];
            gw[1] = fin.transpose() * glogits;
            gb[1] = glogits.colwise().sum();
            Eigen::MatrixXd gfin = glogits * model.weights[1].transpose();

            // split dF into per-round blocks, then walk rounds backwards
            std::vector<Eigen::MatrixXd> ground(cfg.num_layers + 1);
            int at = 0;
            for (int k = 0; k <= cfg.num_layers; ++k) {
                int cols = static_cast<int>(cache.rounds[k].cols());
                ground[k] = gfin.middleCols(at, cols);
                at += cols;
            }
            for (int k = cfg.num_layers; k >= 1; --k) {
                int cols = static_cast<int>(cache.rounds[k - 1].cols());
                ground[k - 1] += p2.apply_t(ground[k].leftCols(cols)) +
                                 p1.apply_t(ground[k].middleCols(cols, cols)) +
                                 ground[k].rightCols(cols);
            }
            Eigen::MatrixXd gr0 = ground[0];
            if (drop) gr0 = gr0.cwiseProduct(cache.masks[0]);
            Eigen::MatrixXd gh0 = relu_back(cache.pre[0], gr0);
            gw[0] = g.features.transpose() * gh0;
            gb[0] = gh0.colwise().sum();
            break;
        }
    }
}

} // namespace

TrainedModel init_model(const ModelConfig& config, int feature_dim, int num_classes,
                        std::uint64_t seed) {
    TrainedModel m;
    m.config = config;
    Rng rng(mix64(seed ^ 0x1217ULL));
    auto glorot = [&](int fi, int fo) {
        double s = std::sqrt(6.0 / (fi + fo));
        Eigen::MatrixXd w(fi, fo);
        for (int i = 0; i < fi; ++i)
            for (int j = 0; j < fo; ++j) w(i, j) = (2.0 * rng.next_double() - 1.0) * s;
        return w;
    };
    const int h = config.hidden_dim;
    switch (config.arch) {
        case Arch::mlp:
        case Arch::gcn:
        case Arch::alpha_mix: {
            int in = feature_dim;
            for (int l = 0; l < config.num_layers; ++l) {
                int out = (l + 1 == config.num_layers) ? num_classes : h;
                m.weights.push_back(glorot(in, out));
                m.biases.push_back(Eigen::VectorXd::Zero(out));
                in = out;
            }
            break;
        }
        case Arch::sage_separate: {
            int in = feature_dim;
            for (int l = 0; l < config.num_layers; ++l) {
                int out = (l + 1 == config.num_layers) ? num_classes : h;
                m.weights.push_back(glorot(2 * in, out));
                m.biases.push_back(Eigen::VectorXd::Zero(out));
                in = out;
            }
            break;
        }
        case Arch::h2gcn_style: {
            m.weights.push_back(glorot(feature_dim, h));
            m.biases.push_back(Eigen::VectorXd::Zero(h));
            int fin = h2gcn_final_dim(h, config.num_layers);
            m.weights.push_back(glorot(fin, num_classes));
            m.biases.push_back(Eigen::VectorXd::Zero(num_classes));
            break;
        }
    }
    return m;
}

Eigen::MatrixXd model_forward(const TrainedModel& model, const LabeledGraph& g) {
    auto props = build_props(model.config, g);
    Eigen::MatrixXd logits = forward_impl(model, g, props, false, 0, 0, nullptr);
    return softmax_rows(logits);
}

double loss_and_gradients(const TrainedModel& model, const LabeledGraph& g,
                          const std::vector<int>& train_nodes,
                          std::vector<Eigen::MatrixXd>& grad_w,
                          std::vector<Eigen::VectorXd>& grad_b) {
    auto props = build_props(model.config, g);
    ForwardCache cache;
    Eigen::MatrixXd logits = forward_impl(model, g, props, false, 0, 0, &cache);
    Eigen::MatrixXd glogits;
    double loss = ce_loss_and_logit_grad(logits, g.labels, train_nodes, &glogits);
    backward_impl(model, g, props, cache, glogits, grad_w, grad_b);
    return loss;
}

TrainedModel train(const ModelConfig& config, const TrainConfig& tcfg, const LabeledGraph& g,
                   const std::vector<int>& train_nodes, const std::vector<int>& val_nodes) {
    if (tcfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
    if (tcfg.patience > tcfg.max_iters) throw ConfigError("patience must be <= max_iters");
    {
        std::vector<char> in_train(g.num_nodes(), 0);
        for (int v : train_nodes) in_train[v] = 1;
        for (int v : val_nodes)
            if (in_train[v]) throw ConfigError("train/val overlap at node " + std::to_string(v));
        std::vector<char> seen(g.num_classes, 0);
        for (int v : train_nodes) seen[g.labels[v]] = 1;
        for (int c = 0; c < g.num_classes; ++c)
            if (!seen[c]) throw MissingClassInTrainError(c);
    }

    TrainedModel model = init_model(config, static_cast<int>(g.features.cols()), g.num_classes,
                                    tcfg.seed);
    auto props = build_props(config, g);

    auto val_accuracy = [&](const TrainedModel& m) {
        if (val_nodes.empty()) return 0.0;
        Eigen::MatrixXd logits = forward_impl(m, g, props, false, 0, 0, nullptr);
        int ok = 0;
        for (int v : val_nodes) {
            int best = 0;
            for (int c = 1; c < logits.cols(); ++c)
                if (logits(v, c) > logits(v, best)) best = c;
            ok += best == g.labels[v];
        }
        return static_cast<double>(ok) / static_cast<double>(val_nodes.size());
    };

    TrainedModel best = model;
    best.best_val_accuracy = val_accuracy(model);
    best.best_iteration = -1;
    if (tcfg.patience == 0) return best;  // zero tolerance: the iteration-0 model

    int bad = 0;
    std::vector<double> trace;
    for (int it = 0; it < tcfg.max_iters; ++it) {
        ForwardCache cache;
        Eigen::MatrixXd logits =
            forward_impl(model, g, props, true, tcfg.seed, it, &cache);
        Eigen::MatrixXd glogits;
        double loss = ce_loss_and_logit_grad(logits, g.labels, train_nodes, &glogits);
        trace.push_back(loss);
        std::vector<Eigen::MatrixXd> gw;
        std::vector<Eigen::VectorXd> gb;
        backward_impl(model, g, props, cache, glogits, gw, gb);
        for (std::size_t l = 0; l < model.weights.size(); ++l) {
            model.weights[l] -=
                tcfg.learning_rate * (gw[l] + tcfg.weight_decay * model.weights[l]);
            model.biases[l] -= tcfg.learning_rate * gb[l];
        }
        double acc = val_accuracy(model);
        if (acc > best.best_val_accuracy) {
            double prev = acc;
            best = model;
            best.best_val_accuracy = prev;
            best.best_iteration = it;
            bad = 0;
        } else if (++bad > tcfg.patience) {
            break;
        }
    }
    best.loss_trace = std::move(trace);
    return best;
}

double evaluate(const TrainedModel& model, const LabeledGraph& g, const std::vector<int>& nodes) {
    if (nodes.empty()) throw EmptyNodeSetError();
    Eigen::MatrixXd pred = model_forward(model, g);
    int ok = 0;
    for (int v : nodes) {
        int best = 0;
        for (int c = 1; c < pred.cols(); ++c)
            if (pred(v, c) > pred(v, best)) best = c;  // ties keep the lowest class id
        ok += best == g.labels[v];
    }
    return static_cast<double>(ok) / static_cast<double>(nodes.size());
}

ModelConfig build_defended_model(const ModelConfig& base, const SvdConfig& cfg) {
    if (base.arch != Arch::gcn && base.arch != Arch::sage_separate &&
        base.arch != Arch::h2gcn_style)
        throw UnsupportedArchError("SVD defense supports gcn, sage_separate, h2gcn_style; got " +
                                   arch_name(base.arch));
    ModelConfig out = base;
    out.svd = cfg;
    return out;
}

void save_model(const TrainedModel& model, const std::string& path) {
    nlohmann::json hdr;
    hdr["format"] = "hrob-model-v1";
    hdr["arch"] = arch_name(model.config.arch);
    hdr["hidden_dim"] = model.config.hidden_dim;
    hdr["num_layers"] = model.config.num_layers;
    hdr["alpha"] = model.config.alpha;
    hdr["dropout"] = model.config.dropout;
    hdr["zero_fill_isolated"] = model.config.zero_fill_isolated;
    if (model.config.svd) {
        hdr["svd"] = {{"rank", model.config.svd->rank},
                      {"variant", model.config.svd->variant == SvdConfig::Variant::I ? "I" : "II"},
                      {"norm", model.config.svd->normalization == SvdConfig::Norm::symmetric
                                   ? "sym"
                                   : "rw"}};
    }
    hdr["best_val_accuracy"] = model.best_val_accuracy;
    hdr["best_iteration"] = model.best_iteration;
    std::vector<std::vector<int>> shapes;
    for (const auto& w : model.weights)
        shapes.push_back({static_cast<int>(w.rows()), static_cast<int>(w.cols())});
    hdr["weight_shapes"] = shapes;
    std::vector<int> bsizes;
    for (const auto& b : model.biases) bsizes.push_back(static_cast<int>(b.size()));
    hdr["bias_sizes"] = bsizes;

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << hdr.dump() << '\n';
    auto put = [&](const double* p, std::size_t count) {
        f.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(count * sizeof(double)));
    };
    for (const auto& w : model.weights) {
        // row-major on disk
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) {
                double v = w(i, j);
                put(&v, 1);
            }
    }
    for (const auto& b : model.biases) put(b.data(), static_cast<std::size_t>(b.size()));
}

TrainedModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot read " + path);
    std::string line;
    std::getline(f, line);
    nlohmann::json hdr = nlohmann::json::parse(line);
    if (hdr.value("format", "") != "hrob-model-v1") throw IoError("bad model header in " + path);

    TrainedModel m;
    m.config.arch = arch_from_name(hdr["arch"]);
    m.config.hidden_dim = hdr["hidden_dim"];
    m.config.num_layers = hdr["num_layers"];
    m.config.alpha = hdr["alpha"];
    m.config.dropout = hdr["dropout"];
    m.config.zero_fill_isolated = hdr["zero_fill_isolated"];
    if (hdr.contains("svd")) {
        SvdConfig s;
        s.rank = hdr["svd"]["rank"];
        s.variant = hdr["svd"]["variant"] == "I" ? SvdConfig::Variant::I : SvdConfig::Variant::II;
        s.normalization = hdr["svd"]["norm"] == "sym" ? SvdConfig::Norm::symmetric
                                                      : SvdConfig::Norm::row_stochastic;
        m.config.svd = s;
    }
    m.best_val_accuracy = hdr["best_val_accuracy"];
    m.best_iteration = hdr["best_iteration"];

    for (const auto& sh : hdr["weight_shapes"]) {
        Eigen::MatrixXd w(static_cast<int>(sh[0]), static_cast<int>(sh[1]));
        for (int i = 0; i < w.rows(); ++i)
            for (int j = 0; j < w.cols(); ++j) {
                double v;
                f.read(reinterpret_cast<char*>(&v), sizeof(double));
                w(i, j) = v;
            }
        m.weights.push_back(std::move(w));
    }
    for (const auto& sz : hdr["bias_sizes"]) {
        Eigen::VectorXd b(static_cast<int>(sz));
        f.read(reinterpret_cast<char*>(b.data()),
               static_cast<std::streamsize>(b.size() * sizeof(double)));
        m.biases.push_back(std::move(b));
    }
    if (!f) throw IoError("truncated model file " + path);
    return m;
}

} // namespace hrob
