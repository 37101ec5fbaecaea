#include "causaladj/stgcn.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <nlohmann/json.hpp>

#include "causaladj/io.hpp"

namespace causaladj {

namespace {

// Z_k = T_k(Lscaled) x via the Chebyshev recurrence.
std::vector<Eigen::MatrixXd> cheb_stack(const Eigen::MatrixXd& l_scaled, const Eigen::MatrixXd& x,
                                        int order) {
    std::vector<Eigen::MatrixXd> z(order);
    z[0] = x;
    if (order > 1) z[1] = l_scaled * x;
    for (int k = 2; k < order; ++k) z[k] = 2.0 * l_scaled * z[k - 1] - z[k - 2];
    return z;
}

Eigen::MatrixXd apply_cheb(const Eigen::MatrixXd& l_scaled, const Eigen::MatrixXd& m, int order) {
    if (order == 0) return m;
    Eigen::MatrixXd prev = m;
    Eigen::MatrixXd cur = l_scaled * m;
    for (int k = 2; k <= order; ++k) {
        Eigen::MatrixXd next = 2.0 * l_scaled * cur - prev;
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation act) {
    if (act == Activation::identity) return pre;
    return pre.cwiseMax(0.0);
}

Eigen::MatrixXd activate_backward(const Eigen::MatrixXd& grad, const Eigen::MatrixXd& pre,
                                  Activation act) {
    if (act == Activation::identity) return grad;
    return (pre.array() > 0.0).select(grad, Eigen::MatrixXd::Zero(grad.rows(), grad.cols()));
}

struct StepCache {
    std::vector<Eigen::MatrixXd> z1;  // T_k stacks of the input step
    Eigen::MatrixXd pre1, h1;
    std::vector<Eigen::MatrixXd> z2;  // T_k stacks of h1
    Eigen::MatrixXd pre2, h2;
};

Eigen::MatrixXd forward_cached(const StgcnModel& model, const WindowSample& sample,
                               const LaplacianPair& pair, std::vector<StepCache>* cache) {
    const int n = static_cast<int>(sample.x.rows());
    if (sample.tau != model.tau || sample.n_features != model.in_channels ||
        sample.y.cols() != model.tau_prime)
        throw ShapeMismatch("window does not match model dimensions");
    if (pair.scaled.rows() != n) throw ShapeMismatch("Laplacian does not match window");

    Eigen::MatrixXd y_hat = model.decoder.bias.transpose().replicate(n, 1);
    if (cache) cache->resize(model.tau);
    for (int t = 0; t < model.tau; ++t) {
        const Eigen::MatrixXd x_t = sample.x.middleCols(t * model.in_channels, model.in_channels);
        StepCache step;
        step.z1 = cheb_stack(pair.scaled, x_t, model.cheb_order);
        step.pre1 = model.layer1.bias.transpose().replicate(n, 1);
        for (int k = 0; k < model.cheb_order; ++k)
            step.pre1.noalias() += step.z1[k] * model.layer1.theta[k];
        step.h1 = activate(step.pre1, model.activation);

        step.z2 = cheb_stack(pair.scaled, step.h1, model.cheb_order);
        step.pre2 = model.layer2.bias.transpose().replicate(n, 1);
        for (int k = 0; k < model.cheb_order; ++k)
            step.pre2.noalias() += step.z2[k] * model.layer2.theta[k];
        step.h2 = activate(step.pre2, model.activation);

        y_hat.noalias() += step.h2 * model.decoder.kernel[t];
        if (cache) (*cache)[t] = std::move(step);
    }
    return y_hat;
}

struct ModelGrads {
    ChebLayer layer1, layer2;
    TemporalDecoder decoder;
};

ModelGrads zero_grads(const StgcnModel& model) {
    ModelGrads g;
    auto zero_layer = [&](const ChebLayer& l) {
        ChebLayer out;
        for (const auto& th : l.theta) out.theta.push_back(Eigen::MatrixXd::Zero(th.rows(), th.cols()));
        out.bias = Eigen::VectorXd::Zero(l.bias.size());
        return out;
    };
    g.layer1 = zero_layer(model.layer1);
    g.layer2 = zero_layer(model.layer2);
    for (const auto& k : model.decoder.kernel)
        g.decoder.kernel.push_back(Eigen::MatrixXd::Zero(k.rows(), k.cols()));
    g.decoder.bias = Eigen::VectorXd::Zero(model.decoder.bias.size());
    return g;
}

}  // namespace

Eigen::MatrixXd normalized_laplacian(const Adjacency& adj) {
    const int n = adj.n_nodes();
    if ((adj.matrix.array() < 0.0).any()) throw NegativeWeight("adjacency entry < 0");
    Eigen::MatrixXd a = adj.matrix.cwiseMax(adj.matrix.transpose());  // max-symmetrization
    Eigen::VectorXd degree = a.rowwise().sum();
    Eigen::VectorXd d_inv_sqrt(n);
    for (int i = 0; i < n; ++i) d_inv_sqrt(i) = degree(i) > 0.0 ? 1.0 / std::sqrt(degree(i)) : 0.0;
    Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n) -
                        d_inv_sqrt.asDiagonal() * a * d_inv_sqrt.asDiagonal();
    return ((l + l.transpose()) / 2.0).eval();
}

LaplacianPair scale_laplacian(const Eigen::MatrixXd& laplacian) {
    const int n = static_cast<int>(laplacian.rows());
    LaplacianPair pair;
    pair.laplacian = laplacian;

    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = u(rng);
    v.normalize();
    double lambda = 0.0;
    bool converged = false;
    for (int it = 0; it < 5000; ++it) {
        Eigen::VectorXd w = laplacian * v;
        const double norm = w.norm();
        if (norm < 1e-14) {  // L = 0: empty graph handled by lambda fallback below
            lambda = 0.0;
            converged = true;
            break;
        }
        v = w / norm;
        const double next = v.dot(laplacian * v);
        if (it > 0 && std::abs(next - lambda) <= 1e-8 * std::max(1.0, std::abs(next))) {
            lambda = next;
            converged = true;
            break;
        }
        lambda = next;
    }
    if (!converged || lambda <= 1e-12) {
        pair.lambda_max = converged && lambda <= 1e-12 ? 1.0 : 2.0;
        pair.power_iteration_converged = converged;
    } else {
        pair.lambda_max = lambda;
    }
    pair.scaled = (2.0 / pair.lambda_max) * laplacian - Eigen::MatrixXd::Identity(n, n);
    return pair;
}

LaplacianPair build_laplacian(const Adjacency& adj) {
    return scale_laplacian(normalized_laplacian(adj));
}

StgcnModel init_model(int cheb_order, int tau, int tau_prime, int in_channels,
                      int hidden_channels, std::uint64_t seed, Activation activation) {
    StgcnModel model;
    model.cheb_order = cheb_order;
    model.tau = tau;
    model.tau_prime = tau_prime;
    model.in_channels = in_channels;
    model.hidden_channels = hidden_channels;
    model.activation = activation;

    std::mt19937_64 rng(seed);
    auto fill = [&](Eigen::MatrixXd& m, double bound) {
        std::uniform_real_distribution<double> u(-bound, bound);
        for (int c = 0; c < m.cols(); ++c)
            for (int r = 0; r < m.rows(); ++r) m(r, c) = u(rng);
    };
    auto init_layer = [&](ChebLayer& layer, int c_in, int c_out) {
        const double bound = std::sqrt(1.0 / (c_in * cheb_order));
        for (int k = 0; k < cheb_order; ++k) {
            layer.theta.emplace_back(c_in, c_out);
            fill(layer.theta.back(), bound);
        }
        layer.bias = Eigen::VectorXd::Zero(c_out);
    };
    init_layer(model.layer1, in_channels, hidden_channels);
    init_layer(model.layer2, hidden_channels, hidden_channels);
    const double bound = std::sqrt(1.0 / (tau * hidden_channels));
    for (int t = 0; t < tau; ++t) {
        model.decoder.kernel.emplace_back(hidden_channels, tau_prime);
        fill(model.decoder.kernel.back(), bound);
    }
    model.decoder.bias = Eigen::VectorXd::Zero(tau_prime);
    return model;
}

long parameter_count(const StgcnModel& model) {
    long n = 0;
    for (const auto& th : model.layer1.theta) n += th.size();
    n += model.layer1.bias.size();
    for (const auto& th : model.layer2.theta) n += th.size();
    n += model.layer2.bias.size();
    for (const auto& k : model.decoder.kernel) n += k.size();
    n += model.decoder.bias.size();
    return n;
}

Eigen::VectorXd flatten_parameters(const StgcnModel& model) {
    Eigen::VectorXd out(parameter_count(model));
    long at = 0;
    auto put = [&](const Eigen::MatrixXd& m) {
        out.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
        at += m.size();
    };
    for (const auto& th : model.layer1.theta) put(th);
    put(model.layer1.bias);
    for (const auto& th : model.layer2.theta) put(th);
    put(model.layer2.bias);
    for (const auto& k : model.decoder.kernel) put(k);
    put(model.decoder.bias);
    return out;
}

void unflatten_parameters(StgcnModel& model, const Eigen::VectorXd& params) {
    if (params.size() != parameter_count(model)) throw ShapeMismatch("parameter vector size");
    long at = 0;
    auto take = [&](Eigen::MatrixXd& m) {
        Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = params.segment(at, m.size());
        at += m.size();
    };
    auto take_vec = [&](Eigen::VectorXd& v) {
        v = params.segment(at, v.size());
        at += v.size();
    };
    for (auto& th : model.layer1.theta) take(th);
    take_vec(model.layer1.bias);
    for (auto& th : model.layer2.theta) take(th);
    take_vec(model.layer2.bias);
    for (auto& k : model.decoder.kernel) take(k);
    take_vec(model.decoder.bias);
}

Eigen::MatrixXd cheb_conv(const Eigen::MatrixXd& x, const LaplacianPair& pair,
                          const ChebLayer& layer) {
    if (layer.theta.empty() || x.cols() != layer.theta[0].rows())
        throw ShapeMismatch("cheb_conv input channels");
    const auto z = cheb_stack(pair.scaled, x, static_cast<int>(layer.theta.size()));
    Eigen::MatrixXd y = layer.bias.transpose().replicate(x.rows(), 1);
    for (size_t k = 0; k < z.size(); ++k) y.noalias() += z[k] * layer.theta[k];
    return y;
}

Eigen::MatrixXd forward(const StgcnModel& model, const WindowSample& sample,
                        const LaplacianPair& pair) {
    return forward_cached(model, sample, pair, nullptr);
}

double mse_loss(const Eigen::MatrixXd& y_hat, const Eigen::MatrixXd& y) {
    if (y_hat.rows() != y.rows() || y_hat.cols() != y.cols())
        throw ShapeMismatch("mse_loss shapes");
    return (y_hat - y).squaredNorm() / static_cast<double>(y.size());
}

std::pair<Eigen::VectorXd, double> backward(const StgcnModel& model,
                                            const std::vector<WindowSample>& batch,
                                            const LaplacianPair& pair) {
    if (batch.empty()) throw Error("backward: empty batch");
    ModelGrads grads = zero_grads(model);
    double total_loss = 0.0;
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    std::vector<StepCache> cache;
    for (const auto& sample : batch) {
        const Eigen::MatrixXd y_hat = forward_cached(model, sample, pair, &cache);
        total_loss += mse_loss(y_hat, sample.y);
        // d(mean batch loss)/d(y_hat) for this sample
        const Eigen::MatrixXd g_out =
            (2.0 * inv_batch / static_cast<double>(sample.y.size())) * (y_hat - sample.y);

        grads.decoder.bias += g_out.colwise().sum().transpose();
        for (int t = 0; t < model.tau; ++t) {
            const StepCache& step = cache[t];
            grads.decoder.kernel[t].noalias() += step.h2.transpose() * g_out;
            const Eigen::MatrixXd g_h2 = g_out * model.decoder.kernel[t].transpose();
            const Eigen::MatrixXd g_pre2 = activate_backward(g_h2, step.pre2, model.activation);

            grads.layer2.bias += g_pre2.colwise().sum().transpose();
            Eigen::MatrixXd g_h1 = Eigen::MatrixXd::Zero(g_pre2.rows(), model.hidden_channels);
            for (int k = 0; k < model.cheb_order; ++k) {
                grads.layer2.theta[k].noalias() += step.z2[k].transpose() * g_pre2;
                // T_k(Lscaled) symmetric, so the input gradient reuses T_k directly
                g_h1.noalias() +=
                    apply_cheb(pair.scaled, g_pre2 * model.layer2.theta[k].transpose(), k);
            }
            const Eigen::MatrixXd g_pre1 = activate_backward(g_h1, step.pre1, model.activation);
            grads.layer1.bias += g_pre1.colwise().sum().transpose();
            for (int k = 0; k < model.cheb_order; ++k)
                grads.layer1.theta[k].noalias() += step.z1[k].transpose() * g_pre1;
        }
    }

    // flatten in the same order as flatten_parameters
    StgcnModel shaped = model;
    shaped.layer1 = grads.layer1;
    shaped.layer2 = grads.layer2;
    shaped.decoder = grads.decoder;
    return {flatten_parameters(shaped), total_loss * inv_batch};
}

namespace {

double validation_rmse(const StgcnModel& model, const std::vector<WindowSample>& windows,
                       const LaplacianPair& pair) {
    double sq = 0.0;
    long count = 0;
    for (const auto& w : windows) {
        const Eigen::MatrixXd y_hat = forward(model, w, pair);
        sq += (y_hat - w.y).squaredNorm();
        count += w.y.size();
    }
    return std::sqrt(sq / static_cast<double>(count));
}

}  // namespace

TrainResult train(StgcnModel model, const std::vector<WindowSample>& train_windows,
                  const std::vector<WindowSample>& val_windows, const LaplacianPair& pair,
                  const TrainConfig& cfg) {
    if (train_windows.empty() || val_windows.empty())
        throw Error("train needs at least one train and one val window");

    Eigen::VectorXd params = flatten_parameters(model);
    Eigen::VectorXd m = Eigen::VectorXd::Zero(params.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(params.size());
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    TrainResult result;
    result.model = model;
    result.best_val_rmse = validation_rmse(model, val_windows, pair);
    result.best_epoch = 0;
    int stale = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto [grad, loss] = backward(model, train_windows, pair);
        if (!std::isfinite(loss)) throw Divergence("training loss is not finite at epoch " +
                                                   std::to_string(epoch));
        if (cfg.optimizer == Optimizer::adam) {
            m = beta1 * m + (1.0 - beta1) * grad;
            v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
            const double bc1 = 1.0 - std::pow(beta1, epoch);
            const double bc2 = 1.0 - std::pow(beta2, epoch);
            params -= (cfg.learning_rate * (m / bc1).array() /
                       ((v / bc2).array().sqrt() + adam_eps))
                          .matrix();
        } else {
            params -= cfg.learning_rate * grad;
        }
        unflatten_parameters(model, params);

        const double val_rmse = validation_rmse(model, val_windows, pair);
        result.history.push_back({epoch, loss, val_rmse});
        if (val_rmse < result.best_val_rmse - 1e-12) {
            result.best_val_rmse = val_rmse;
            result.best_epoch = epoch;
            result.model = model;
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    return result;
}

EvalReport evaluate(const StgcnModel& model, const std::vector<WindowSample>& test_windows,
                    const LaplacianPair& pair, const NormStats& stats, int target_channel) {
    if (test_windows.empty()) throw Error("evaluate: no test windows");
    const int horizons = model.tau_prime;
    const int n = static_cast<int>(test_windows[0].y.rows());
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(horizons), ab = Eigen::VectorXd::Zero(horizons);
    Eigen::VectorXd sq_dn = Eigen::VectorXd::Zero(horizons), ab_dn = Eigen::VectorXd::Zero(horizons);
    long count = 0;
    for (const auto& w : test_windows) {
        const Eigen::MatrixXd err = forward(model, w, pair) - w.y;
        for (int h = 0; h < horizons; ++h) {
            for (int i = 0; i < n; ++i) {
                const double e = err(i, h);
                const double e_dn = e * stats.std(i, target_channel);
                sq(h) += e * e;
                ab(h) += std::abs(e);
                sq_dn(h) += e_dn * e_dn;
                ab_dn(h) += std::abs(e_dn);
            }
        }
        ++count;
    }
    const double denom = static_cast<double>(count) * n;
    EvalReport report;
    for (int h = 0; h < horizons; ++h) {
        report.normalized.rmse.push_back(std::sqrt(sq(h) / denom));
        report.normalized.mae.push_back(ab(h) / denom);
        report.denormalized.rmse.push_back(std::sqrt(sq_dn(h) / denom));
        report.denormalized.mae.push_back(ab_dn(h) / denom);
    }
    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    report.normalized.avg_rmse = mean_of(report.normalized.rmse);
    report.normalized.avg_mae = mean_of(report.normalized.mae);
    report.denormalized.avg_rmse = mean_of(report.denormalized.rmse);
    report.denormalized.avg_mae = mean_of(report.denormalized.mae);
    return report;
}

void save_model(const StgcnModel& model, const std::filesystem::path& path) {
    nlohmann::json j;
    j["cheb_order"] = model.cheb_order;
    j["tau"] = model.tau;
    j["tau_prime"] = model.tau_prime;
    j["in_channels"] = model.in_channels;
    j["hidden_channels"] = model.hidden_channels;
    j["activation"] = model.activation == Activation::relu ? "relu" : "identity";
    const Eigen::VectorXd params = flatten_parameters(model);
    j["parameters"] = std::vector<double>(params.data(), params.data() + params.size());
    write_text_file(path, j.dump() + "\n");
}

StgcnModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path.string());
    nlohmann::json j = nlohmann::json::parse(in);
    StgcnModel model = init_model(j.at("cheb_order"), j.at("tau"), j.at("tau_prime"),
                                  j.at("in_channels"), j.at("hidden_channels"), 0,
                                  j.at("activation") == "relu" ? Activation::relu
                                                               : Activation::identity);
    const auto values = j.at("parameters").get<std::vector<double>>();
    unflatten_parameters(model, Eigen::Map<const Eigen::VectorXd>(
                                    values.data(), static_cast<long>(values.size())));
    return model;
}

}  // namespace causaladj
