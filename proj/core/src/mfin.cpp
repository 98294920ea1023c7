#include "mfin/mfin.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "json.hpp"
#include "mfin/errors.hpp"
#include "mfin/metrics.hpp"

namespace mfin {

using ad::Graph;
using ad::NodeId;
using ad::Tensor;

namespace {
constexpr double kDegenerateLoss = 1e6;
constexpr double kDegenerateStd = 1e-12;

Tensor glorot(Rng& rng, std::vector<int> shape, int fan_in, int fan_out) {
    Tensor t(std::move(shape));
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (auto& v : t.v) v = rng.uniform(-limit, limit);
    return t;
}
}  // namespace

std::string MfinHyper::key() const {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "C=%.2gbps,K=%.2g,do=%.2g,lr=%.2g,NH=%d,nf=%d,l=%d",
                  cost_c * 1e4, corr_penalty, dropout, learning_rate, hidden, n_filters,
                  ts_filter_len);
    return buf;
}

const std::vector<std::string>& MfinModel::param_names() {
    static const std::vector<std::string> names = {
        "conv_ts_kernel", "conv_ts_bias", "conv_cs_kernel", "conv_cs_bias",
        "conv_comb_kernel", "conv_comb_bias", "conv_unit_kernel", "conv_unit_bias",
        "reduce_w", "reduce_b", "lstm_w", "lstm_u", "lstm_b", "head_w", "head_b"};
    return names;
}

void MfinModel::init(int assets, int inputs, const MfinHyper& h, std::uint64_t seed_in) {
    if (assets < 1 || inputs < 1) throw ConfigError("mfin: need at least one asset/feature");
    if (h.ts_filter_len < 1 || h.n_filters < 1 || h.hidden < 1)
        throw ConfigError("mfin: invalid architecture hyperparameters");
    hyper = h;
    n_assets = assets;
    n_inputs = inputs;
    seed = seed_in;

    const int F = h.n_filters;
    const int L = h.ts_filter_len;
    const int NI = n_inputs;
    const int H = h.hidden;
    const int flat = (2 * NI + 2) * F;
    const int D = n_assets * F;

    Rng rng(seed);
    params.clear();
    params.push_back(glorot(rng, {L, 1, 1, F}, L, L * F));            // conv_ts_kernel
    params.emplace_back(std::vector<int>{F}, 0.0);                    // conv_ts_bias
    params.push_back(glorot(rng, {1, NI, 1, F}, NI, NI * F));         // conv_cs_kernel
    params.emplace_back(std::vector<int>{F}, 0.0);                    // conv_cs_bias
    params.push_back(glorot(rng, {L, NI, 1, F}, L * NI, L * NI * F)); // conv_comb_kernel
    params.emplace_back(std::vector<int>{F}, 0.0);                    // conv_comb_bias
    params.push_back(glorot(rng, {1, 1, 1, F}, 1, F));                // conv_unit_kernel
    params.emplace_back(std::vector<int>{F}, 0.0);                    // conv_unit_bias
    params.push_back(glorot(rng, {flat, F}, flat, F));                // reduce_w
    params.push_back(Tensor::matrix(1, F, 0.0));                      // reduce_b
    params.push_back(glorot(rng, {D, 4 * H}, D, 4 * H));              // lstm_w
    params.push_back(glorot(rng, {H, 4 * H}, H, 4 * H));              // lstm_u
    Tensor lstm_b = Tensor::matrix(1, 4 * H, 0.0);
    for (int j = H; j < 2 * H; ++j) lstm_b.at2(0, j) = 1.0;  // forget gate opens at init
    params.push_back(std::move(lstm_b));
    params.push_back(glorot(rng, {H, n_assets}, H, n_assets));        // head_w
    params.push_back(Tensor::matrix(1, n_assets, 0.0));               // head_b
}

std::int64_t MfinModel::total_params() const {
    std::int64_t n = 0;
    for (const auto& p : params) n += p.numel();
    return n;
}

ParamCount param_count(int n_assets, int n_inputs, const MfinHyper& h) {
    const std::int64_t F = h.n_filters;
    const std::int64_t L = h.ts_filter_len;
    const std::int64_t NI = n_inputs;
    const std::int64_t H = h.hidden;
    const std::int64_t D = static_cast<std::int64_t>(n_assets) * F;
    ParamCount c;
    c.extractor = F * (L + NI + L * NI + 1) + 4 * F;
    c.reduction = (2 * NI + 2) * F * F + F;
    c.lstm = 4 * (H * (D + H) + H);
    c.head = H * n_assets + n_assets;
    return c;
}

namespace {

struct ExtractorIds {
    std::vector<NodeId> params;  // conv kernels/biases + reduction, in order
};

// Shared feature extractor on one asset: four parallel causal conv branches
// whose flattened outputs feed a pointwise reduction back to n_filters
// channels. The branches themselves stay linear; the nonlinearity belongs to
// the stage after the reduction.
NodeId extractor_graph(Graph& g, const std::vector<NodeId>& pid, NodeId x3d, int rows) {
    const NodeId ts = g.conv2d_causal(x3d, pid[0], pid[1]);     // (T, NI, F)
    const NodeId cs = g.conv2d_causal(x3d, pid[2], pid[3]);     // (T, 1, F)
    const NodeId comb = g.conv2d_causal(x3d, pid[4], pid[5]);   // (T, 1, F)
    const NodeId unit = g.conv2d_causal(x3d, pid[6], pid[7]);   // (T, NI, F)
    const NodeId cat = g.concat_cols({g.flatten_width(ts), g.flatten_width(cs),
                                      g.flatten_width(comb), g.flatten_width(unit)});
    (void)rows;
    return ad::dense(g, cat, pid[8], pid[9]);  // (T, F)
}

std::vector<NodeId> push_params(Graph& g, const MfinModel& model) {
    std::vector<NodeId> ids;
    ids.reserve(model.params.size());
    for (const auto& p : model.params) ids.push_back(g.param(p));
    return ids;
}

Tensor asset_slice(const std::vector<double>& x, int rows, int n_assets, int n_inputs,
                   int asset) {
    Tensor t(std::vector<int>{rows, n_inputs, 1});
    for (int r = 0; r < rows; ++r)
        for (int j = 0; j < n_inputs; ++j)
            t.v[static_cast<std::size_t>(r) * n_inputs + j] =
                x[(static_cast<std::size_t>(r) * n_assets + asset) * n_inputs + j];
    return t;
}

}  // namespace

Tensor origcim_forward(const MfinModel& model, const Tensor& x_asset) {
    if (x_asset.ndim() != 2 || x_asset.cols() != model.n_inputs)
        throw ConfigError("origcim_forward: expected (T, N_I) input");
    if (model.hyper.ts_filter_len > x_asset.rows())
        throw ConfigError("origcim_forward: filter length exceeds sequence length");
    Graph g;
    const auto pid = push_params(g, model);
    Tensor x3d(std::vector<int>{x_asset.rows(), x_asset.cols(), 1});
    x3d.v = x_asset.v;
    const NodeId out = extractor_graph(g, pid, g.input(std::move(x3d)), x_asset.rows());
    return g.val(out);
}

void mfin_forward_graph(ForwardGraph& fg, const MfinModel& model,
                        const std::vector<double>& x, int rows, bool training, Rng* rng) {
    if (model.hyper.ts_filter_len > rows)
        throw ConfigError("mfin_forward: filter length exceeds sequence length");
    if (static_cast<std::size_t>(rows) * model.n_assets * model.n_inputs != x.size())
        throw ConfigError("mfin_forward: input size mismatch");
    Graph& g = fg.graph;
    fg.param_ids = push_params(g, model);
    const auto& pid = fg.param_ids;

    std::vector<NodeId> features;
    features.reserve(model.n_assets);
    for (int i = 0; i < model.n_assets; ++i) {
        const NodeId xi = g.input(asset_slice(x, rows, model.n_assets, model.n_inputs, i));
        NodeId f = extractor_graph(g, pid, xi, rows);
        f = g.elu(f);
        if (training && rng) f = g.dropout(f, model.hyper.dropout, *rng, true);
        features.push_back(f);
    }
    const NodeId joint = g.concat_cols(features);  // (T, NA * F)
    NodeId hidden = ad::lstm_forward(g, joint, pid[10], pid[11], pid[12], model.hyper.hidden);
    if (training && rng) hidden = g.dropout(hidden, model.hyper.dropout, *rng, true);
    const NodeId head = ad::dense(g, hidden, pid[13], pid[14]);
    fg.weights = g.tanh_(head);
}

Tensor mfin_forward(const MfinModel& model, const std::vector<double>& x, int rows) {
    ForwardGraph fg;
    mfin_forward_graph(fg, model, x, rows, false, nullptr);
    return fg.graph.val(fg.weights);
}

LossResult sharpe_loss_graph(ForwardGraph& fg, const std::vector<double>& y1,
                             const std::vector<double>& y2, int rows, int n_assets,
                             double cost_c, double corr_k) {
    if (rows < 3) throw ConfigError("sharpe_loss: batch too short for a variance estimate");
    Graph& g = fg.graph;
    Tensor ty1 = Tensor::matrix(rows, n_assets);
    Tensor ty2 = Tensor::matrix(rows, n_assets);
    std::copy(y1.begin(), y1.begin() + ty1.numel(), ty1.v.begin());
    std::copy(y2.begin(), y2.begin() + ty2.numel(), ty2.v.begin());

    // Benchmark stream: equal-weight long-only on the same scaled returns.
    std::vector<double> bench(rows, 0.0);
    for (int t = 0; t < rows; ++t) {
        for (int i = 0; i < n_assets; ++i) bench[t] += ty1.at2(t, i);
        bench[t] /= n_assets;
    }

    const NodeId y1n = g.input(std::move(ty1));
    const NodeId y2n = g.input(std::move(ty2));
    const NodeId gains = g.row_sum(g.mul(fg.weights, y1n));  // (T,1)
    const NodeId scaled_pos = g.mul(fg.weights, y2n);
    const NodeId prev = g.shift_rows_down(scaled_pos, 1);  // first row enters from flat
    const NodeId churn = g.row_sum(g.abs_(g.sub(scaled_pos, prev)));
    const NodeId pnl =
        g.scale(g.sub(gains, g.scale(churn, cost_c)), 1.0 / n_assets);  // (T,1)

    const NodeId m = g.mean(pnl);
    const NodeId dev = g.sub_bcast(pnl, m);
    const NodeId var = g.scale(g.sum(g.mul(dev, dev)), 1.0 / (rows - 1));
    const NodeId sd = g.sqrt_(var);

    LossResult res;
    if (g.scalar_val(sd) <= kDegenerateStd) {
        // Flat portfolio: no Sharpe to optimize, return the guard penalty.
        res.loss = g.input(Tensor::scalar(kDegenerateLoss));
        res.degenerate = true;
        return res;
    }

    NodeId loss = g.scale(g.divide(m, sd), -std::sqrt(kTradingDays));
    if (corr_k != 0.0) {
        const double bench_sd = stddev_of(bench);
        if (bench_sd > kDegenerateStd) {
            Tensor tb = Tensor::matrix(rows, 1);
            std::copy(bench.begin(), bench.end(), tb.v.begin());
            const NodeId bn = g.input(std::move(tb));
            const NodeId bdev = g.sub_bcast(bn, g.mean(bn));
            const NodeId cov = g.scale(g.sum(g.mul(dev, bdev)), 1.0 / (rows - 1));
            const NodeId corr = g.div_bcast(cov, g.scale(sd, bench_sd));
            loss = g.add(loss, g.scale(g.abs_(corr), corr_k));
        }
    }
    res.loss = loss;
    return res;
}

double evaluate_loss(const MfinModel& model, const ModelInputs& mi, int first_row, int rows,
                     double cost_c, double corr_k) {
    std::vector<double> x(static_cast<std::size_t>(rows) * mi.n_assets * mi.n_features);
    std::vector<double> y1(static_cast<std::size_t>(rows) * mi.n_assets);
    std::vector<double> y2(y1.size());
    std::copy_n(mi.x.begin() + mi.xidx(first_row, 0, 0), x.size(), x.begin());
    std::copy_n(mi.y1.begin() + mi.yidx(first_row, 0), y1.size(), y1.begin());
    std::copy_n(mi.y2.begin() + mi.yidx(first_row, 0), y2.size(), y2.begin());

    ForwardGraph fg;
    mfin_forward_graph(fg, model, x, rows, false, nullptr);
    const auto res = sharpe_loss_graph(fg, y1, y2, rows, mi.n_assets, cost_c, corr_k);
    return fg.graph.scalar_val(res.loss);
}

namespace {

struct BatchSpan {
    int first = 0;
    int rows = 0;
};

std::vector<BatchSpan> make_batches(int first, int total, int seq_len, int min_rows) {
    std::vector<BatchSpan> out;
    int t = first;
    while (t + seq_len <= first + total) {
        out.push_back({t, seq_len});
        t += seq_len;
    }
    // Keep the chronological tail as a shorter final batch when it is long
    // enough to be meaningful.
    const int tail = first + total - t;
    if (tail >= min_rows) out.push_back({t, tail});
    if (out.empty() && total >= min_rows) out.push_back({first, total});
    return out;
}

}  // namespace

TrainResult train_mfin(const MfinConfig& cfg, const ModelInputs& inputs, std::uint64_t seed,
                       int max_epochs_override, int n_batches_cap) {
    const int total = inputs.rows;
    for (int r = 0; r < total; ++r)
        if (!inputs.y_valid[r])
            throw ConfigError("train_mfin: training rows must have valid targets");

    const int train_rows = std::max(1, static_cast<int>(total * cfg.fixed.train_fraction));
    const int valid_rows = total - train_rows;
    const int min_rows = std::max(cfg.hyper.ts_filter_len + 2, 8);
    if (valid_rows < min_rows)
        throw ConfigError("train_mfin: validation window too short");

    auto batches = make_batches(0, train_rows, cfg.fixed.seq_len, min_rows);
    if (batches.empty()) throw ConfigError("train_mfin: training window too short");
    if (n_batches_cap > 0 && static_cast<int>(batches.size()) > n_batches_cap)
        batches.resize(n_batches_cap);

    TrainResult result;
    result.model.init(inputs.n_assets, inputs.n_features, cfg.hyper, seed);
    MfinModel& model = result.model;

    ad::AdamState adam;
    adam.lr = cfg.hyper.learning_rate;
    adam.init(model.params);
    Rng dropout_rng(seed ^ 0x9e3779b97f4a7c15ull);

    const int max_epochs =
        max_epochs_override > 0 ? max_epochs_override : cfg.fixed.max_epochs;
    std::vector<Tensor> best_params = model.params;
    double best_valid = 1e300;
    int best_epoch = 0, stale = 0;

    std::vector<double> bx, by1, by2;
    for (int epoch = 1; epoch <= max_epochs; ++epoch) {
        double train_loss = 0.0;
        for (const auto& b : batches) {
            bx.assign(inputs.x.begin() + inputs.xidx(b.first, 0, 0),
                      inputs.x.begin() + inputs.xidx(b.first, 0, 0) +
                          static_cast<std::size_t>(b.rows) * inputs.n_assets *
                              inputs.n_features);
            by1.assign(inputs.y1.begin() + inputs.yidx(b.first, 0),
                       inputs.y1.begin() + inputs.yidx(b.first, 0) +
                           static_cast<std::size_t>(b.rows) * inputs.n_assets);
            by2.assign(inputs.y2.begin() + inputs.yidx(b.first, 0),
                       inputs.y2.begin() + inputs.yidx(b.first, 0) +
                           static_cast<std::size_t>(b.rows) * inputs.n_assets);

            ForwardGraph fg;
            mfin_forward_graph(fg, model, bx, b.rows, true, &dropout_rng);
            const auto loss = sharpe_loss_graph(fg, by1, by2, b.rows, inputs.n_assets,
                                                cfg.hyper.cost_c, cfg.hyper.corr_penalty);
            const double lv = fg.graph.scalar_val(loss.loss);
            if (!std::isfinite(lv))
                throw NumericError("train_mfin: non-finite loss at epoch " +
                                   std::to_string(epoch));
            train_loss += lv;
            if (loss.degenerate) continue;  // zero gradient from the guard

            fg.graph.backward(loss.loss);
            std::vector<Tensor> grads;
            grads.reserve(fg.param_ids.size());
            for (NodeId pid : fg.param_ids) grads.push_back(fg.graph.grad(pid));
            adam.update(model.params, grads);
        }
        train_loss /= static_cast<double>(batches.size());

        const double valid_loss =
            evaluate_loss(model, inputs, train_rows, valid_rows, 0.0, 0.0);
        if (!std::isfinite(valid_loss))
            throw NumericError("train_mfin: non-finite validation loss");
        result.log.push_back({epoch, train_loss, valid_loss, adam.lr});
        result.epochs_run = epoch;

        if (valid_loss < best_valid) {
            best_valid = valid_loss;
            best_epoch = epoch;
            best_params = model.params;
            stale = 0;
        } else {
            ++stale;
            if (stale >= cfg.fixed.early_stop_patience) {
                result.early_stopped = true;
                break;
            }
        }
    }

    model.params = std::move(best_params);
    result.best_epoch = best_epoch;
    result.best_valid = best_valid;
    return result;
}

WeightsMatrix mfin_weights(const MfinModel& model, const ModelInputs& mi, int first_out_row) {
    if (first_out_row < 0 || first_out_row >= mi.rows)
        throw ConfigError("mfin_weights: output row out of range");
    const Tensor w = mfin_forward(model, mi.x, mi.rows);
    WeightsMatrix out;
    out.first_day = mi.row_dates[first_out_row] + 1;  // trade the day after the row date
    out.n_assets = mi.n_assets;
    out.label = "MFIN";
    const int rows_out = mi.rows - first_out_row;
    out.w.resize(static_cast<std::size_t>(rows_out) * mi.n_assets);
    for (int r = 0; r < rows_out; ++r)
        for (int i = 0; i < mi.n_assets; ++i)
            out.at(r, i) = w.at2(first_out_row + r, i);
    return out;
}

std::vector<HyperbandBracket> hyperband_schedule(int max_epochs, int factor) {
    if (max_epochs < 1 || factor < 2) throw ConfigError("hyperband: bad schedule arguments");
    const int s_max = static_cast<int>(std::log(static_cast<double>(max_epochs)) /
                                       std::log(static_cast<double>(factor)));
    std::vector<HyperbandBracket> out;
    for (int s = s_max; s >= 0; --s) {
        HyperbandBracket bracket;
        const double n0 = std::ceil(static_cast<double>(s_max + 1) / (s + 1) *
                                    std::pow(factor, s));
        const double r0 = max_epochs / std::pow(factor, s);
        for (int i = 0; i <= s; ++i) {
            HyperbandRung rung;
            rung.trials = static_cast<int>(std::floor(n0 / std::pow(factor, i)));
            rung.epochs = std::max(1, static_cast<int>(std::floor(r0 * std::pow(factor, i))));
            if (rung.trials < 1) break;
            bracket.rungs.push_back(rung);
        }
        out.push_back(bracket);
    }
    return out;
}

namespace {

MfinHyper sample_hyper(const MfinSearchSpace& sp, Rng& rng) {
    MfinHyper h;
    h.cost_c = sp.cost_c_bps[rng.below(sp.cost_c_bps.size())] * 1e-4;
    h.corr_penalty = sp.corr_penalty[rng.below(sp.corr_penalty.size())];
    h.dropout = sp.dropout[rng.below(sp.dropout.size())];
    h.learning_rate = sp.learning_rate[rng.below(sp.learning_rate.size())];
    h.hidden = sp.hidden[rng.below(sp.hidden.size())];
    h.n_filters = sp.n_filters[rng.below(sp.n_filters.size())];
    h.ts_filter_len = sp.ts_filter_len[rng.below(sp.ts_filter_len.size())];
    return h;
}

std::int64_t space_size(const MfinSearchSpace& sp) {
    return static_cast<std::int64_t>(sp.cost_c_bps.size()) * sp.corr_penalty.size() *
           sp.dropout.size() * sp.learning_rate.size() * sp.hidden.size() *
           sp.n_filters.size() * sp.ts_filter_len.size();
}

}  // namespace

HyperbandResult hyperband_search(const MfinConfig& cfg, const ModelInputs& inputs,
                                 std::uint64_t seed, int threads) {
    const auto schedule = hyperband_schedule(cfg.fixed.hb_max_epochs, cfg.fixed.hb_factor);
    Rng rng(seed);
    HyperbandResult result;
    result.best_valid = 1e300;

    int sampled = 0;
    for (int iter = 0; iter < cfg.fixed.hb_iterations; ++iter) {
        for (std::size_t bi = 0; bi < schedule.size(); ++bi) {
            const auto& bracket = schedule[bi];
            if (bracket.rungs.empty()) continue;
            int want = bracket.rungs[0].trials;
            if (sampled + want > cfg.fixed.hb_max_trials)
                want = cfg.fixed.hb_max_trials - sampled;
            if (want <= 0) break;

            // Sample the bracket's configurations (dedupe best effort).
            std::vector<MfinHyper> configs;
            std::set<std::string> seen;
            const std::int64_t distinct = space_size(cfg.space);
            while (static_cast<int>(configs.size()) < want) {
                MfinHyper h = sample_hyper(cfg.space, rng);
                if (static_cast<std::int64_t>(seen.size()) < distinct &&
                    !seen.insert(h.key()).second)
                    continue;
                configs.push_back(h);
            }
            sampled += want;

            // Successive halving: retrain survivors from scratch at each
            // rung's epoch budget, score by best validation loss.
            std::vector<std::size_t> alive(configs.size());
            for (std::size_t i = 0; i < alive.size(); ++i) alive[i] = i;
            std::vector<double> score(configs.size(), 1e300);

            for (std::size_t ri = 0; ri < bracket.rungs.size() && !alive.empty(); ++ri) {
                const int epochs = bracket.rungs[ri].epochs;
                std::vector<double> rung_score(alive.size(), 1e300);
                auto run_trial = [&](std::size_t slot) {
                    MfinConfig trial_cfg = cfg;
                    trial_cfg.hyper = configs[alive[slot]];
                    const std::uint64_t trial_seed =
                        seed ^ (0x51ed2700ull + 7919ull * alive[slot] + 131ull * bi);
                    try {
                        auto tr = train_mfin(trial_cfg, inputs, trial_seed, epochs);
                        rung_score[slot] = tr.best_valid;
                    } catch (const std::exception&) {
                        rung_score[slot] = 1e300;  // diverged or unrunnable trial loses
                    }
                };
                if (threads > 1 && alive.size() > 1) {
                    std::vector<std::thread> pool;
                    const int n_threads =
                        static_cast<int>(std::min<std::size_t>(threads, alive.size()));
                    for (int w = 0; w < n_threads; ++w) {
                        pool.emplace_back([&, w]() {
                            for (std::size_t s = w; s < alive.size();
                                 s += static_cast<std::size_t>(n_threads))
                                run_trial(s);
                        });
                    }
                    for (auto& th : pool) th.join();
                } else {
                    for (std::size_t s = 0; s < alive.size(); ++s) run_trial(s);
                }

                for (std::size_t s = 0; s < alive.size(); ++s) {
                    score[alive[s]] = rung_score[s];
                    result.trials.push_back({configs[alive[s]], rung_score[s], epochs});
                }

                if (ri + 1 < bracket.rungs.size()) {
                    const int keep = std::min<int>(bracket.rungs[ri + 1].trials,
                                                   static_cast<int>(alive.size()));
                    std::stable_sort(alive.begin(), alive.end(),
                                     [&score](std::size_t a, std::size_t b) {
                                         return score[a] < score[b];
                                     });
                    alive.resize(std::max(keep, 0));
                }
            }

            for (std::size_t i = 0; i < configs.size(); ++i) {
                if (score[i] < result.best_valid) {
                    result.best_valid = score[i];
                    result.best = configs[i];
                }
            }
        }
    }
    if (result.best_valid >= 1e300)
        throw ConfigError("hyperband_search: no trial completed");
    return result;
}

void save_model(const MfinModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["seed"] = model.seed;
    j["n_assets"] = model.n_assets;
    j["n_inputs"] = model.n_inputs;
    j["hyper"] = {{"cost_c", model.hyper.cost_c},
                  {"corr_penalty", model.hyper.corr_penalty},
                  {"dropout", model.hyper.dropout},
                  {"learning_rate", model.hyper.learning_rate},
                  {"hidden", model.hyper.hidden},
                  {"n_filters", model.hyper.n_filters},
                  {"ts_filter_len", model.hyper.ts_filter_len}};
    nlohmann::json tensors = nlohmann::json::object();
    const auto& names = MfinModel::param_names();
    for (std::size_t k = 0; k < model.params.size(); ++k) {
        tensors[names[k]] = {{"shape", model.params[k].shape},
                             {"data", model.params[k].v}};
    }
    j["params"] = std::move(tensors);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out << j.dump() << "\n";
}

MfinModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read checkpoint " + path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    MfinModel model;
    model.seed = j.at("seed");
    model.n_assets = j.at("n_assets");
    model.n_inputs = j.at("n_inputs");
    const auto& h = j.at("hyper");
    model.hyper.cost_c = h.at("cost_c");
    model.hyper.corr_penalty = h.at("corr_penalty");
    model.hyper.dropout = h.at("dropout");
    model.hyper.learning_rate = h.at("learning_rate");
    model.hyper.hidden = h.at("hidden");
    model.hyper.n_filters = h.at("n_filters");
    model.hyper.ts_filter_len = h.at("ts_filter_len");
    const auto& names = MfinModel::param_names();
    for (const auto& name : names) {
        const auto& t = j.at("params").at(name);
        Tensor tensor(t.at("shape").get<std::vector<int>>());
        tensor.v = t.at("data").get<std::vector<double>>();
        if (static_cast<std::int64_t>(tensor.v.size()) != tensor.numel())
            throw DataError("checkpoint tensor size mismatch for " + name);
        model.params.push_back(std::move(tensor));
    }
    return model;
}

}  // namespace mfin
