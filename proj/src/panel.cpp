#include "causaladj/panel.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <nlohmann/json.hpp>

#include "causaladj/io.hpp"

namespace causaladj {

void TimeSeriesPanel::validate() const {
    const int n = n_nodes();
    const int t = n_steps();
    if (n < 2 || t < 8 || n_channels() < 1)
        throw ShapeMismatch("panel needs N >= 2, T >= 8, F >= 1 (got N=" + std::to_string(n) +
                            ", T=" + std::to_string(t) + ", F=" + std::to_string(n_channels()) + ")");
    std::set<std::string> seen;
    for (const auto& id : node_ids)
        if (!seen.insert(id).second) throw DuplicateNodeId(id);
    if (target_channel < 0 || target_channel >= n_channels())
        throw ShapeMismatch("target_channel out of range");
    for (const auto& ch : channels) {
        if (ch.rows() != n || ch.cols() != t) throw ShapeMismatch("channel shape mismatch");
        if (!ch.allFinite()) throw NonFiniteInput("panel contains NaN/Inf");
    }
}

PanelSchema load_schema(const std::filesystem::path& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw MissingFile(manifest_path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    PanelSchema schema;
    for (const auto& p : j.at("channels"))
        schema.channel_paths.push_back(manifest_path.parent_path() / p.get<std::string>());
    schema.target_channel = j.value("target_channel", 0);
    schema.time_step = j.value("time_step", "week");
    return schema;
}

TimeSeriesPanel load_panel(const PanelSchema& schema) {
    if (schema.channel_paths.empty()) throw MissingFile("manifest lists no channels");
    TimeSeriesPanel panel;
    panel.target_channel = schema.target_channel;
    panel.time_step = schema.time_step;
    for (const auto& path : schema.channel_paths) {
        LabeledMatrix m = read_labeled_matrix(path);  // rows = time, cols = nodes
        if (panel.channels.empty()) {
            panel.node_ids = m.col_ids;
        } else if (m.col_ids != panel.node_ids) {
            throw ShapeMismatch("channel files disagree on node ids: " + path.string());
        }
        panel.channels.push_back(m.values.transpose());  // store N x T
    }
    panel.validate();
    return panel;
}

TimeSeriesPanel load_panel(const std::filesystem::path& manifest_path) {
    return load_panel(load_schema(manifest_path));
}

std::filesystem::path save_panel(const TimeSeriesPanel& panel,
                                 const std::filesystem::path& out_dir,
                                 const std::string& basename) {
    std::filesystem::create_directories(out_dir);
    std::vector<std::string> time_labels(panel.n_steps());
    for (int t = 0; t < panel.n_steps(); ++t) time_labels[t] = std::to_string(t);
    nlohmann::json manifest;
    manifest["target_channel"] = panel.target_channel;
    manifest["time_step"] = panel.time_step;
    std::vector<std::string> names;
    for (int f = 0; f < panel.n_channels(); ++f) {
        std::string name = basename + "_c" + std::to_string(f) + ".csv";
        write_labeled_matrix(out_dir / name, time_labels, panel.node_ids,
                             panel.channels[f].transpose());
        names.push_back(name);
    }
    manifest["channels"] = names;
    auto manifest_path = out_dir / (basename + ".manifest.json");
    write_text_file(manifest_path, manifest.dump(2) + "\n");
    return manifest_path;
}

std::pair<TimeSeriesPanel, NormStats> zscore(const TimeSeriesPanel& panel,
                                             bool normalize_all_channels) {
    for (const auto& ch : panel.channels)
        if (!ch.allFinite()) throw NonFiniteInput("zscore input");
    const int n = panel.n_nodes();
    const int f_count = panel.n_channels();
    const double t = static_cast<double>(panel.n_steps());
    NormStats stats;
    stats.mean = Eigen::MatrixXd::Zero(n, f_count);
    stats.std = Eigen::MatrixXd::Ones(n, f_count);
    TimeSeriesPanel out = panel;
    for (int f = 0; f < f_count; ++f) {
        if (!normalize_all_channels && f != panel.target_channel) continue;
        for (int i = 0; i < n; ++i) {
            const double mean = panel.channels[f].row(i).mean();
            // Population (1/T) std; deterministic and matches the window pipeline.
            const double var = (panel.channels[f].row(i).array() - mean).square().sum() / t;
            double sd = std::sqrt(var);
            stats.mean(i, f) = mean;
            if (sd <= 0.0) {
                sd = 1.0;
                stats.constant_series.emplace_back(i, f);
            }
            stats.std(i, f) = sd;
            out.channels[f].row(i) = (panel.channels[f].row(i).array() - mean) / sd;
        }
    }
    return {out, stats};
}

TimeSeriesPanel denormalize(const TimeSeriesPanel& panel, const NormStats& stats) {
    if (stats.mean.rows() != panel.n_nodes() || stats.mean.cols() != panel.n_channels())
        throw ShapeMismatch("NormStats shape does not match panel");
    TimeSeriesPanel out = panel;
    for (int f = 0; f < panel.n_channels(); ++f)
        for (int i = 0; i < panel.n_nodes(); ++i)
            out.channels[f].row(i) =
                panel.channels[f].row(i).array() * stats.std(i, f) + stats.mean(i, f);
    return out;
}

std::vector<WindowSample> make_windows(const TimeSeriesPanel& panel, int tau, int tau_prime,
                                       int begin, int end) {
    if (tau < 1 || tau_prime < 1) throw ShapeMismatch("tau and tau' must be >= 1");
    if (begin < 0 || end > panel.n_steps() || begin >= end)
        throw ShapeMismatch("window region out of panel range");
    const int len = end - begin;
    if (len < tau + tau_prime)
        throw RegionTooShort("region length " + std::to_string(len) + " < tau+tau' = " +
                             std::to_string(tau + tau_prime));
    const int n = panel.n_nodes();
    const int f_count = panel.n_channels();
    std::vector<WindowSample> windows;
    windows.reserve(len - tau - tau_prime + 1);
    for (int origin = begin + tau - 1; origin + tau_prime < end; ++origin) {
        WindowSample w;
        w.t_origin = origin;
        w.tau = tau;
        w.n_features = f_count;
        w.x.resize(n, tau * f_count);
        for (int s = 0; s < tau; ++s)
            for (int f = 0; f < f_count; ++f)
                w.x.col(s * f_count + f) = panel.channels[f].col(origin - tau + 1 + s);
        w.y = panel.target().middleCols(origin + 1, tau_prime);
        windows.push_back(std::move(w));
    }
    return windows;
}

std::vector<WindowSample> make_windows(const TimeSeriesPanel& panel, int tau, int tau_prime,
                                       const SplitSpec& split, Region region) {
    split.validate(panel.n_steps());
    switch (region) {
        case Region::train: return make_windows(panel, tau, tau_prime, 0, split.train_end);
        case Region::val: return make_windows(panel, tau, tau_prime, split.train_end, split.val_end);
        case Region::test: return make_windows(panel, tau, tau_prime, split.val_end, panel.n_steps());
    }
    throw Error("unreachable", 1);
}

}  // namespace causaladj
