#include "mfin/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"
#include "mfin/csv.hpp"
#include "mfin/errors.hpp"
#include "mfin/ewstats.hpp"

namespace mfin {

std::string source_name(Source s) {
    switch (s) {
        case Source::CMC: return "CMC";
        case Source::BIC: return "BIC";
        case Source::BC: return "BC";
        case Source::GT: return "GT";
    }
    return "?";
}

Source source_from_name(const std::string& name) {
    if (name == "CMC") return Source::CMC;
    if (name == "BIC") return Source::BIC;
    if (name == "BC") return Source::BC;
    if (name == "GT") return Source::GT;
    throw ConfigError("unknown data source: " + name);
}

double FactorPanel::std_annual(int t, int i, int j) const {
    return std_daily(t, i, j) * std::sqrt(kTradingDays);
}

int FactorPanel::asset_index(const std::string& name) const {
    for (int i = 0; i < n_assets(); ++i)
        if (assets[i] == name) return i;
    return -1;
}

int FactorPanel::feature_index(const std::string& name) const {
    for (int j = 0; j < n_features(); ++j)
        if (features[j] == name) return j;
    return -1;
}

std::vector<RawSeries> load_csv(const std::filesystem::path& path, Source source,
                                const std::string& asset, const std::string& value_feature) {
    const CsvTable table = read_csv(path);
    if (table.header.empty() || table.header[0] != "date")
        throw DataError(path.string() + ": first column must be 'date'");
    if (table.header.size() < 2)
        throw DataError(path.string() + ": no value columns");

    std::vector<RawSeries> out;
    for (std::size_t c = 1; c < table.header.size(); ++c) {
        RawSeries s;
        s.asset = asset;
        s.source = source;
        s.feature = table.header[c];
        if (table.header.size() == 2 && s.feature == "value" && !value_feature.empty())
            s.feature = value_feature;
        out.push_back(std::move(s));
    }

    std::set<Day> seen;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size())
            throw DataError(path.string() + ": row " + std::to_string(r + 1) +
                            " has wrong column count");
        Day day;
        if (!parse_date(row[0], day))
            throw DataError(path.string() + ": row " + std::to_string(r + 1) +
                            " has malformed date '" + row[0] + "'");
        if (!seen.insert(day).second)
            throw DataError(path.string() + ": duplicate date " + row[0] + " at row " +
                            std::to_string(r + 1));
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c].empty()) continue;  // missing cell
            double v;
            if (!parse_double(row[c], v))
                throw DataError(path.string() + ": row " + std::to_string(r + 1) +
                                " column '" + table.header[c] + "' is not a number: '" +
                                row[c] + "'");
            out[c - 1].observations.push_back({day, v});
        }
    }
    for (auto& s : out)
        std::sort(s.observations.begin(), s.observations.end(),
                  [](const Observation& a, const Observation& b) { return a.date < b.date; });
    return out;
}

RawSeries link_segments(const std::vector<RawSeries>& segments) {
    if (segments.empty()) throw DataError("link_segments: no segments");
    for (const auto& s : segments)
        if (s.observations.empty()) throw DataError("link_segments: empty segment");

    RawSeries out = segments.back();
    // Walk backwards: each preceding segment is rescaled so its value on the
    // roll date equals the (already adjusted) first value of the segment
    // after it, then prepended without the duplicated roll observation.
    for (int k = static_cast<int>(segments.size()) - 2; k >= 0; --k) {
        const RawSeries& prev = segments[k];
        const Observation& roll_prev = prev.observations.back();
        const Observation& roll_next = out.observations.front();
        if (roll_prev.date != roll_next.date)
            throw DataError("link_segments: segments must overlap on exactly one roll date (" +
                            format_date(roll_prev.date) + " vs " + format_date(roll_next.date) +
                            ")");
        const double g1 = roll_prev.value;
        const double g2 = roll_next.value;
        if (g1 == 0.0)
            throw NumericError("link_segments: degenerate scale, last datum of preceding "
                               "segment is 0 on " + format_date(roll_prev.date));
        const double ratio = g2 / g1;
        std::vector<Observation> merged;
        merged.reserve(prev.observations.size() - 1 + out.observations.size());
        for (std::size_t i = 0; i + 1 < prev.observations.size(); ++i)
            merged.push_back({prev.observations[i].date, prev.observations[i].value * ratio});
        for (const auto& obs : out.observations) merged.push_back(obs);
        out.observations = std::move(merged);
    }
    for (std::size_t i = 1; i < out.observations.size(); ++i)
        if (out.observations[i].date <= out.observations[i - 1].date)
            throw DataError("link_segments: segments out of order");
    return out;
}

FactorPanel build_panel(const std::vector<RawSeries>& series, const Calendar& calendar,
                        const std::vector<std::string>& assets,
                        const std::vector<std::string>& features, MissingPolicy policy) {
    calendar.validate();
    FactorPanel panel;
    panel.calendar = calendar;
    panel.assets = assets;
    panel.features = features;

    const int T = panel.n_dates();
    const int NA = panel.n_assets();
    const int NI = panel.n_features();
    const std::size_t cells = static_cast<std::size_t>(T) * NA * NI;
    panel.levels.assign(cells, 0.0);
    panel.level_mask.assign(cells, 0);
    panel.returns.assign(cells, 0.0);
    panel.return_mask.assign(cells, 0);
    panel.std63.assign(cells, 0.0);
    panel.std_mask.assign(cells, 0);
    panel.zret.assign(cells, 0.0);

    // Collect observations per (asset, feature); later sources may fill dates
    // earlier ones left missing, but never overwrite an existing datum (the
    // first-listed series for a cell wins, so callers order by preference).
    std::vector<std::map<Day, double>> cell_obs(static_cast<std::size_t>(NA) * NI);
    std::vector<bool> declared(static_cast<std::size_t>(NA) * NI, false);
    for (const auto& s : series) {
        const int i = panel.asset_index(s.asset);
        const int j = panel.feature_index(s.feature);
        if (i < 0 || j < 0) continue;  // not part of this panel universe
        declared[static_cast<std::size_t>(i) * NI + j] = true;
        auto& dst = cell_obs[static_cast<std::size_t>(i) * NI + j];
        for (const auto& obs : s.observations) {
            if (!std::isfinite(obs.value))
                throw DataError("non-finite level for " + s.asset + "/" + s.feature + " on " +
                                format_date(obs.date));
            dst.emplace(obs.date, obs.value);  // keeps first insertion
        }
    }

    for (int i = 0; i < NA; ++i) {
        for (int j = 0; j < NI; ++j) {
            const auto& obs = cell_obs[static_cast<std::size_t>(i) * NI + j];
            if (obs.empty()) {
                if (policy == MissingPolicy::ForwardFill)
                    throw ConfigError("no data for asset '" + assets[i] + "' feature '" +
                                      features[j] + "' (use neutral-fill policy to allow)");
                continue;  // neutral fill: stays masked, standardized returns 0
            }
            // Forward-fill levels from first availability onwards.
            auto it = obs.begin();
            bool have = false;
            double last = 0.0;
            for (int t = 0; t < T; ++t) {
                const Day d = calendar.days[t];
                while (it != obs.end() && it->first <= d) {
                    last = it->second;
                    have = true;
                    ++it;
                }
                if (have) {
                    panel.levels[panel.idx(t, i, j)] = last;
                    panel.level_mask[panel.idx(t, i, j)] = 1;
                }
            }
            // Returns and EW stds in one causal sweep.
            EwStats stats = EwStats::from_span(kStdSpan, kStdWarmup);
            for (int t = 1; t < T; ++t) {
                const std::size_t id = panel.idx(t, i, j);
                const std::size_t prev = panel.idx(t - 1, i, j);
                if (!panel.level_mask[id] || !panel.level_mask[prev]) continue;
                if (panel.levels[prev] == 0.0) continue;  // flagged gap: undefined return
                const double r = panel.levels[id] / panel.levels[prev] - 1.0;
                panel.returns[id] = r;
                panel.return_mask[id] = 1;
                stats.add(r);
                if (stats.std_valid()) {
                    panel.std63[id] = stats.stddev();
                    panel.std_mask[id] = 1;
                    if (panel.std63[id] > 0.0)
                        panel.zret[id] = r / panel.std63[id];
                }
            }
        }
    }
    return panel;
}

void save_panel(const FactorPanel& panel, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["assets"] = panel.assets;
    manifest["features"] = panel.features;
    manifest["calendar"] = {{"first", format_date(panel.calendar.front())},
                            {"last", format_date(panel.calendar.back())}};
    nlohmann::json spans = nlohmann::json::object();
    for (int i = 0; i < panel.n_assets(); ++i) {
        for (int j = 0; j < panel.n_features(); ++j) {
            int first = -1;
            for (int t = 0; t < panel.n_dates(); ++t)
                if (panel.has_level(t, i, j)) {
                    first = t;
                    break;
                }
            if (first >= 0)
                spans[panel.assets[i] + "/" + panel.features[j]] =
                    format_date(panel.calendar.days[first]);
        }
    }
    manifest["first_available"] = spans;
    std::ofstream mf(dir / "manifest.json");
    mf << manifest.dump(2) << "\n";

    for (int i = 0; i < panel.n_assets(); ++i) {
        CsvTable table;
        table.header.push_back("date");
        for (const auto& f : panel.features) table.header.push_back(f);
        for (int t = 0; t < panel.n_dates(); ++t) {
            std::vector<std::string> row;
            row.push_back(format_date(panel.calendar.days[t]));
            for (int j = 0; j < panel.n_features(); ++j)
                row.push_back(panel.has_level(t, i, j)
                                  ? format_double(panel.level(t, i, j), 17)
                                  : std::string());
            table.rows.push_back(std::move(row));
        }
        write_csv(dir / (panel.assets[i] + ".csv"), table);
    }
}

FactorPanel load_panel(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw DataError("missing manifest.json in " + dir.string());
    nlohmann::json manifest = nlohmann::json::parse(mf);
    const std::vector<std::string> assets = manifest.at("assets");
    const std::vector<std::string> features = manifest.at("features");
    Day first, last;
    if (!parse_date(manifest.at("calendar").at("first"), first) ||
        !parse_date(manifest.at("calendar").at("last"), last))
        throw DataError("manifest.json: malformed calendar bounds");

    std::vector<RawSeries> series;
    for (const auto& asset : assets) {
        auto per_asset = load_csv(dir / (asset + ".csv"), Source::CMC, asset);
        for (auto& s : per_asset) series.push_back(std::move(s));
    }
    return build_panel(series, Calendar::daily_range(first, last), assets, features,
                       MissingPolicy::NeutralFill);
}

ModelInputs build_model_inputs(const FactorPanel& panel, int first_row_index, int rows,
                               int open_feature, double sigma_target) {
    if (first_row_index < 0 || rows <= 0 || first_row_index + rows > panel.n_dates())
        throw ConfigError("model input rows out of panel range");
    if (open_feature < 0 || open_feature >= panel.n_features())
        throw ConfigError("open feature index out of range");

    ModelInputs mi;
    mi.rows = rows;
    mi.n_assets = panel.n_assets();
    mi.n_features = panel.n_features();
    mi.open_feature = open_feature;
    mi.row_dates.resize(rows);
    mi.x.assign(static_cast<std::size_t>(rows) * mi.n_assets * mi.n_features, 0.0);
    mi.y1.assign(static_cast<std::size_t>(rows) * mi.n_assets, 0.0);
    mi.y2.assign(static_cast<std::size_t>(rows) * mi.n_assets, 0.0);
    mi.y_valid.assign(rows, 0);

    for (int r = 0; r < rows; ++r) {
        const int t = first_row_index + r;
        mi.row_dates[r] = panel.calendar.days[t];
        for (int i = 0; i < mi.n_assets; ++i)
            for (int j = 0; j < mi.n_features; ++j)
                mi.x[mi.xidx(r, i, j)] = panel.zreturn(t, i, j);

        // Scaling factor is ex-ante at the row date; the earned return is the
        // standardized open return two days forward.
        const int target = t + 2;
        bool valid = target < panel.n_dates();
        for (int i = 0; i < mi.n_assets; ++i) {
            const double sd = panel.std_annual(t, i, open_feature);
            const double scale =
                (panel.has_std(t, i, open_feature) && sd > 0.0) ? sigma_target / sd : 0.0;
            mi.y2[mi.yidx(r, i)] = scale;
            if (valid)
                mi.y1[mi.yidx(r, i)] = panel.zreturn(target, i, open_feature) * scale;
        }
        mi.y_valid[r] = valid ? 1 : 0;
    }
    return mi;
}

ModelInputs make_model_inputs(const FactorPanel& panel, Day window_end, int T,
                              int open_feature, double sigma_target) {
    const int end_idx = panel.calendar.index_of(window_end);
    if (end_idx < 0) throw ConfigError("window end not on panel calendar");
    if (end_idx < T + 2)
        throw ConfigError("insufficient history: need " + std::to_string(T + 2) +
                          " prior days, have " + std::to_string(end_idx));
    return build_model_inputs(panel, end_idx - T, T, open_feature, sigma_target);
}

}  // namespace mfin
