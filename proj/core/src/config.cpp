#include "mfin/config.hpp"

#include <fstream>

#include "json.hpp"
#include "mfin/errors.hpp"

namespace mfin {

std::vector<std::string> FrameworkConfig::all_features() const {
    std::vector<std::string> out = cmc_features;
    out.insert(out.end(), bic_features.begin(), bic_features.end());
    out.insert(out.end(), bc_features.begin(), bc_features.end());
    return out;
}

std::vector<std::string> FrameworkConfig::alt_features() const {
    std::vector<std::string> out = bic_features;
    out.insert(out.end(), bc_features.begin(), bc_features.end());
    return out;
}

namespace {

Day parse_day_field(const nlohmann::json& j, const char* key, Day fallback) {
    if (!j.contains(key)) return fallback;
    Day d;
    if (!parse_date(j.at(key).get<std::string>(), d))
        throw ConfigError(std::string("config: malformed date in '") + key + "'");
    return d;
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

FrameworkConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("config parse failure: " + std::string(e.what()));
    }

    FrameworkConfig cfg;
    maybe(j, "assets", cfg.assets);
    if (j.contains("features")) {
        const auto& f = j.at("features");
        maybe(f, "cmc", cfg.cmc_features);
        maybe(f, "bic", cfg.bic_features);
        maybe(f, "bc", cfg.bc_features);
        maybe(f, "open", cfg.open_feature);
    }
    if (j.contains("calendar")) {
        const auto& c = j.at("calendar");
        cfg.calendar_first = parse_day_field(c, "first", cfg.calendar_first);
        cfg.calendar_last = parse_day_field(c, "last", cfg.calendar_last);
        cfg.first_test_start = parse_day_field(c, "first_test_start", cfg.first_test_start);
    }
    maybe(j, "sigma_target", cfg.sigma_target);
    maybe(j, "cost_grid_bps", cfg.cost_grid_bps);
    maybe(j, "adf_max_pvalue", cfg.adf_max_pvalue);
    maybe(j, "n_seeds", cfg.n_seeds);
    maybe(j, "base_seed", cfg.base_seed);
    maybe(j, "threads", cfg.threads);

    if (j.contains("mfin")) {
        const auto& m = j.at("mfin");
        auto& fx = cfg.mfin.fixed;
        maybe(m, "sequence_length", fx.seq_len);
        maybe(m, "max_epochs", fx.max_epochs);
        maybe(m, "early_stopping", fx.early_stop_patience);
        maybe(m, "train_fraction", fx.train_fraction);
        if (m.contains("hyperband")) {
            const auto& hb = m.at("hyperband");
            maybe(hb, "max_epochs", fx.hb_max_epochs);
            maybe(hb, "factor", fx.hb_factor);
            maybe(hb, "iterations", fx.hb_iterations);
            maybe(hb, "max_trials", fx.hb_max_trials);
        }
        if (m.contains("grids")) {
            const auto& gr = m.at("grids");
            auto& sp = cfg.mfin.space;
            maybe(gr, "cost_c_bps", sp.cost_c_bps);
            maybe(gr, "corr_penalty", sp.corr_penalty);
            maybe(gr, "dropout_rate", sp.dropout);
            maybe(gr, "learning_rate", sp.learning_rate);
            maybe(gr, "hidden_layer_size", sp.hidden);
            maybe(gr, "n_filters", sp.n_filters);
            maybe(gr, "ts_filter_length", sp.ts_filter_len);
        }
        if (m.contains("default")) {
            const auto& d = m.at("default");
            auto& h = cfg.mfin.hyper;
            double c_bps = h.cost_c * 1e4;
            maybe(d, "cost_c_bps", c_bps);
            h.cost_c = c_bps * 1e-4;
            maybe(d, "corr_penalty", h.corr_penalty);
            maybe(d, "dropout_rate", h.dropout);
            maybe(d, "learning_rate", h.learning_rate);
            maybe(d, "hidden_layer_size", h.hidden);
            maybe(d, "n_filters", h.n_filters);
            maybe(d, "ts_filter_length", h.ts_filter_len);
        }
    }
    cfg.mfin.sigma_target = cfg.sigma_target;

    if (cfg.assets.empty()) throw ConfigError("config: empty asset universe");
    if (cfg.calendar_last <= cfg.calendar_first)
        throw ConfigError("config: calendar bounds out of order");
    if (cfg.sigma_target <= 0.0) throw ConfigError("config: sigma_target must be positive");
    return cfg;
}

void save_config(const FrameworkConfig& cfg, const std::filesystem::path& path) {
    nlohmann::json j;
    j["assets"] = cfg.assets;
    j["features"] = {{"cmc", cfg.cmc_features},
                     {"bic", cfg.bic_features},
                     {"bc", cfg.bc_features},
                     {"open", cfg.open_feature}};
    j["calendar"] = {{"first", format_date(cfg.calendar_first)},
                     {"last", format_date(cfg.calendar_last)},
                     {"first_test_start", format_date(cfg.first_test_start)}};
    j["sigma_target"] = cfg.sigma_target;
    j["cost_grid_bps"] = cfg.cost_grid_bps;
    j["adf_max_pvalue"] = cfg.adf_max_pvalue;
    j["n_seeds"] = cfg.n_seeds;
    j["base_seed"] = cfg.base_seed;
    j["threads"] = cfg.threads;
    const auto& fx = cfg.mfin.fixed;
    const auto& sp = cfg.mfin.space;
    const auto& h = cfg.mfin.hyper;
    j["mfin"] = {
        {"sequence_length", fx.seq_len},
        {"max_epochs", fx.max_epochs},
        {"early_stopping", fx.early_stop_patience},
        {"train_fraction", fx.train_fraction},
        {"hyperband",
         {{"max_epochs", fx.hb_max_epochs},
          {"factor", fx.hb_factor},
          {"iterations", fx.hb_iterations},
          {"max_trials", fx.hb_max_trials}}},
        {"grids",
         {{"cost_c_bps", sp.cost_c_bps},
          {"corr_penalty", sp.corr_penalty},
          {"dropout_rate", sp.dropout},
          {"learning_rate", sp.learning_rate},
          {"hidden_layer_size", sp.hidden},
          {"n_filters", sp.n_filters},
          {"ts_filter_length", sp.ts_filter_len}}},
        {"default",
         {{"cost_c_bps", h.cost_c * 1e4},
          {"corr_penalty", h.corr_penalty},
          {"dropout_rate", h.dropout},
          {"learning_rate", h.learning_rate},
          {"hidden_layer_size", h.hidden},
          {"n_filters", h.n_filters},
          {"ts_filter_length", h.ts_filter_len}}}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write config " + path.string());
    out << j.dump(2) << "\n";
}

std::uint64_t file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return 0;
    std::uint64_t h = 1469598103934665603ull;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace mfin
