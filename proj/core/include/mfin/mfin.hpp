#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfin/autodiff.hpp"
#include "mfin/ingest.hpp"
#include "mfin/portfolio.hpp"

namespace mfin {

// Tuned hyperparameters of one model. Costs are stored in fraction units
// (1 bp = 1e-4), matching the backtest convention.
struct MfinHyper {
    double cost_c = 0.0;
    double corr_penalty = 0.0;  // weight on |corr to long-only| in the loss
    double dropout = 0.1;
    double learning_rate = 1e-3;
    int hidden = 32;          // LSTM cells
    int n_filters = 16;       // filters per inception branch
    int ts_filter_len = 3;    // temporal kernel length

    std::string key() const;
};

// Fixed training block plus search-budget settings.
struct MfinFixed {
    int seq_len = 100;  // sequence length; batches are one sequence long
    int max_epochs = 250;
    int early_stop_patience = 25;
    double train_fraction = 0.9;  // chronological train/valid split
    int hb_max_epochs = 10;
    int hb_factor = 3;
    int hb_iterations = 1;
    int hb_max_trials = 30;
};

// Search grids for the tuned block.
struct MfinSearchSpace {
    std::vector<double> cost_c_bps = {0.0, 0.5, 1.0, 2.0, 5.0};
    std::vector<double> corr_penalty = {0.0, 1.0, 2.0, 5.0};
    std::vector<double> dropout = {0.1, 0.2, 0.3};
    std::vector<double> learning_rate = {1e-3, 1e-4, 1e-5};
    std::vector<int> hidden = {32, 64, 96, 128};
    std::vector<int> n_filters = {16, 32, 48, 64};
    std::vector<int> ts_filter_len = {3, 5, 10, 15, 20};
};

struct MfinConfig {
    MfinFixed fixed;
    MfinHyper hyper;
    MfinSearchSpace space;
    double sigma_target = kSigmaTarget;
};

// One trained network. The inception extractor and its reduction are shared
// across assets; the position sizer runs one LSTM over the cross-asset
// feature concatenation and a dense head maps hidden state to one weight per
// asset, squashed by tanh into [-1, 1].
struct MfinModel {
    MfinHyper hyper;
    int n_assets = 0;
    int n_inputs = 0;
    std::uint64_t seed = 0;
    std::vector<ad::Tensor> params;

    static const std::vector<std::string>& param_names();
    void init(int assets, int inputs, const MfinHyper& h, std::uint64_t seed_in);
    std::int64_t total_params() const;
};

struct ParamCount {
    std::int64_t extractor = 0;  // four conv branches
    std::int64_t reduction = 0;  // pointwise map over the flattened branch axis
    std::int64_t lstm = 0;
    std::int64_t head = 0;
    std::int64_t total() const { return extractor + reduction + lstm + head; }
};

ParamCount param_count(int n_assets, int n_inputs, const MfinHyper& h);

// Feature extractor applied to one asset's (T, N_I) standardized returns;
// returns the (T, n_filters) reduced features (no activation inside).
ad::Tensor origcim_forward(const MfinModel& model, const ad::Tensor& x_asset);

// Full forward pass. X rows are [T][asset][feature]; returns (T, N_A)
// weights in [-1, 1]. Dropout fires only when training with an RNG.
struct ForwardGraph {
    ad::Graph graph;
    ad::NodeId weights = -1;
    std::vector<ad::NodeId> param_ids;
};

void mfin_forward_graph(ForwardGraph& fg, const MfinModel& model,
                        const std::vector<double>& x, int rows, bool training, Rng* rng);

ad::Tensor mfin_forward(const MfinModel& model, const std::vector<double>& x, int rows);

// Sharpe-ratio loss over one batch: negative annualized Sharpe of the
// cost-adjusted vol-scaled portfolio plus corr_k * |corr to the equal-weight
// benchmark|. Degenerate portfolio variance trips the guard instead of
// dividing by zero.
struct LossResult {
    ad::NodeId loss = -1;
    bool degenerate = false;
};

LossResult sharpe_loss_graph(ForwardGraph& fg, const std::vector<double>& y1,
                             const std::vector<double>& y2, int rows, int n_assets,
                             double cost_c, double corr_k);

// Loss value only (fresh forward, no training side effects).
double evaluate_loss(const MfinModel& model, const ModelInputs& mi, int first_row, int rows,
                     double cost_c, double corr_k);

struct TrainLogRow {
    int epoch = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double learning_rate = 0.0;
};

struct TrainResult {
    MfinModel model;  // parameters of the best validation epoch
    std::vector<TrainLogRow> log;
    int best_epoch = 0;
    double best_valid = 0.0;
    int epochs_run = 0;
    bool early_stopped = false;
};

// Adam over contiguous seq_len batches in chronological order, 90/10
// chronological train/valid split, validation at zero cost and penalty,
// early stop on stale validation loss. Deterministic for a fixed seed.
TrainResult train_mfin(const MfinConfig& cfg, const ModelInputs& inputs, std::uint64_t seed,
                       int max_epochs_override = -1, int n_batches_cap = -1);

// Weights for trade dates following each input row (row date + 1), taken
// from output rows [first_out_row, rows).
WeightsMatrix mfin_weights(const MfinModel& model, const ModelInputs& mi, int first_out_row);

// Successive-halving schedule for one Hyperband iteration.
struct HyperbandRung {
    int trials = 0;
    int epochs = 0;
};
struct HyperbandBracket {
    std::vector<HyperbandRung> rungs;
};
std::vector<HyperbandBracket> hyperband_schedule(int max_epochs, int factor);

struct HyperbandTrial {
    MfinHyper hyper;
    double valid_loss = 0.0;
    int epochs = 0;
};

struct HyperbandResult {
    MfinHyper best;
    double best_valid = 0.0;
    std::vector<HyperbandTrial> trials;
};

HyperbandResult hyperband_search(const MfinConfig& cfg, const ModelInputs& inputs,
                                 std::uint64_t seed, int threads = 1);

void save_model(const MfinModel& model, const std::filesystem::path& path);
MfinModel load_model(const std::filesystem::path& path);

}  // namespace mfin
