#ifndef CAUSALADJ_STGCN_HPP
#define CAUSALADJ_STGCN_HPP

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "causaladj/adjacency.hpp"
#include "causaladj/panel.hpp"

namespace causaladj {

struct LaplacianPair {
    Eigen::MatrixXd laplacian;         // L = I - D^{-1/2} A D^{-1/2}
    Eigen::MatrixXd scaled;            // (2/lambda_max) L - I
    double lambda_max = 2.0;
    bool power_iteration_converged = true;
};

// Symmetrizes directed input as max(A, A^T) first; isolated nodes get L row e_i.
Eigen::MatrixXd normalized_laplacian(const Adjacency& adj);
LaplacianPair scale_laplacian(const Eigen::MatrixXd& laplacian);
LaplacianPair build_laplacian(const Adjacency& adj);

enum class Activation { relu, identity };

struct ChebLayer {
    std::vector<Eigen::MatrixXd> theta;  // K matrices, C_in x C_out
    Eigen::VectorXd bias;                // C_out
};

struct TemporalDecoder {
    std::vector<Eigen::MatrixXd> kernel;  // tau matrices, C_hidden x tau_prime
    Eigen::VectorXd bias;                 // tau_prime
};

// Two shared-weight Chebyshev encoder layers applied per input step, then one
// full-window linear decoder mapping the hidden stack to the tau'-step forecast.
struct StgcnModel {
    int cheb_order = 3;
    int tau = 4;
    int tau_prime = 4;
    int in_channels = 1;
    int hidden_channels = 16;
    Activation activation = Activation::relu;
    ChebLayer layer1;
    ChebLayer layer2;
    TemporalDecoder decoder;
};

StgcnModel init_model(int cheb_order, int tau, int tau_prime, int in_channels,
                      int hidden_channels, std::uint64_t seed,
                      Activation activation = Activation::relu);

// Parameter vector round-trip, fixed ordering; used by Adam, the gradient
// checker, and model serialization.
Eigen::VectorXd flatten_parameters(const StgcnModel& model);
void unflatten_parameters(StgcnModel& model, const Eigen::VectorXd& params);
long parameter_count(const StgcnModel& model);

// y = sum_k T_k(Lscaled) x theta_k + bias.
Eigen::MatrixXd cheb_conv(const Eigen::MatrixXd& x, const LaplacianPair& pair,
                          const ChebLayer& layer);

Eigen::MatrixXd forward(const StgcnModel& model, const WindowSample& sample,
                        const LaplacianPair& pair);

double mse_loss(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXd& y);

// Exact reverse-mode gradients of the mean loss over the batch, flattened in
// the same order as flatten_parameters. Also returns the batch loss.
std::pair<Eigen::VectorXd, double> backward(const StgcnModel& model,
                                            const std::vector<WindowSample>& batch,
                                            const LaplacianPair& pair);

enum class Optimizer { adam, sgd };

struct TrainConfig {
    double learning_rate = 1e-2;
    int max_epochs = 500;
    int patience = 30;
    std::uint64_t seed = 0;
    Optimizer optimizer = Optimizer::adam;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_rmse = 0.0;
};

struct TrainResult {
    StgcnModel model;  // best-validation parameters
    std::vector<EpochRecord> history;
    double best_val_rmse = 0.0;
    int best_epoch = 0;
};

TrainResult train(StgcnModel model, const std::vector<WindowSample>& train_windows,
                  const std::vector<WindowSample>& val_windows, const LaplacianPair& pair,
                  const TrainConfig& cfg);

struct HorizonMetrics {
    std::vector<double> rmse;  // per horizon 1..tau'
    std::vector<double> mae;
    double avg_rmse = 0.0;
    double avg_mae = 0.0;
};

struct EvalReport {
    HorizonMetrics normalized;
    HorizonMetrics denormalized;
};

EvalReport evaluate(const StgcnModel& model, const std::vector<WindowSample>& test_windows,
                    const LaplacianPair& pair, const NormStats& stats, int target_channel);

void save_model(const StgcnModel& model, const std::filesystem::path& path);
StgcnModel load_model(const std::filesystem::path& path);

}  // namespace causaladj

#endif
