#ifndef CAUSALADJ_PANEL_HPP
#define CAUSALADJ_PANEL_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "causaladj/common.hpp"

namespace causaladj {

/// Spatiotemporal panel: N nodes, T time steps, F feature channels.
/// Stored channel-major as F matrices of shape N x T. Immutable after load;
/// all operations below are pure functions.
struct TimeSeriesPanel {
    std::vector<std::string> node_ids;
    std::vector<Eigen::MatrixXd> channels;  // each N x T
    int target_channel = 0;
    std::string time_step = "week";

    int n_nodes() const { return static_cast<int>(node_ids.size()); }
    int n_steps() const { return channels.empty() ? 0 : static_cast<int>(channels[0].cols()); }
    int n_channels() const { return static_cast<int>(channels.size()); }

    const Eigen::MatrixXd& target() const { return channels[target_channel]; }
    // One node's series on one channel, length T.
    Eigen::VectorXd series(int node, int channel) const {
        return channels[channel].row(node).transpose();
    }

    void validate() const;
};

struct NormStats {
    Eigen::MatrixXd mean;  // N x F
    Eigen::MatrixXd std;   // N x F, entries > 0 (constant series recorded as 1)
    std::vector<std::pair<int, int>> constant_series;  // (node, channel) flags
};

struct WindowSample {
    Eigen::MatrixXd x;  // N x (tau*F), laid out time-major: col t*F + f
    Eigen::MatrixXd y;  // N x tau_prime, target channel
    int t_origin = 0;   // time index of last input step
    int tau = 0;
    int n_features = 0;

    double x_at(int node, int t, int f) const { return x(node, t * n_features + f); }
};

struct SplitSpec {
    int train_end = 0;  // exclusive
    int val_end = 0;    // exclusive; test = [val_end, T)

    void validate(int T) const {
        if (!(train_end > 0 && val_end > train_end && val_end < T))
            throw ShapeMismatch("split must satisfy 0 < train_end < val_end < T");
    }
};

// Manifest describing a panel on disk: one CSV per channel plus target index.
struct PanelSchema {
    std::vector<std::filesystem::path> channel_paths;
    int target_channel = 0;
    std::string time_step = "week";
};

PanelSchema load_schema(const std::filesystem::path& manifest_path);
TimeSeriesPanel load_panel(const PanelSchema& schema);
TimeSeriesPanel load_panel(const std::filesystem::path& manifest_path);
// Writes one CSV per channel plus the manifest JSON. Returns the manifest path.
std::filesystem::path save_panel(const TimeSeriesPanel& panel,
                                 const std::filesystem::path& out_dir,
                                 const std::string& basename = "panel");

// Per-(node, channel) z-score over the time axis with population std.
// Zero-variance series are centered only (std recorded as 1) and flagged.
std::pair<TimeSeriesPanel, NormStats> zscore(const TimeSeriesPanel& panel,
                                             bool normalize_all_channels = true);
TimeSeriesPanel denormalize(const TimeSeriesPanel& panel, const NormStats& stats);

enum class Region { train, val, test };

// Stride-1 windows fully inside the chosen region; count = len - tau - tau' + 1.
std::vector<WindowSample> make_windows(const TimeSeriesPanel& panel, int tau, int tau_prime,
                                       const SplitSpec& split, Region region);
// Windowing over an explicit [begin, end) time range.
std::vector<WindowSample> make_windows(const TimeSeriesPanel& panel, int tau, int tau_prime,
                                       int begin, int end);

}  // namespace causaladj

#endif
