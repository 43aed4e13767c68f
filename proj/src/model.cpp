#include "factorcast/model.hpp"
#include "factorcast/errors.hpp"
#include "factorcast/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace factorcast {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int gate_count(Architecture arch) {
    switch (arch) {
        case Architecture::Rnn: return 1;
        case Architecture::Lstm: return 4;
        case Architecture::Gru: return 3;
    }
    return 1;
}

const char* const kLstmGates[] = {"input", "forget", "cell", "output"};
const char* const kGruGates[] = {"update", "reset", "candidate"};

// Offsets into the flat parameter vector. Per-gate input matrices come
// first, then recurrent matrices, then biases, then the head.
struct Layout {
    int H, p, Q, G;

    Layout(const ModelConfig& c)
        : H(c.hidden_size), p(c.input_size), Q(c.loss.output_width()),
          G(gate_count(c.architecture)) {}

    int w_in(int g) const { return g * H * p; }
    int w_rec(int g) const { return G * H * p + g * H * H; }
    int bias(int g) const { return G * (H * p + H * H) + g * H; }
    int head_w() const { return G * (H * p + H * H + H); }
    int head_b() const { return head_w() + Q * H; }
    int total() const { return head_b() + Q; }
};

Eigen::Map<const MatrixXd> cmat(const VectorXd& w, int offset, int rows, int cols) {
    return {w.data() + offset, rows, cols};
}
Eigen::Map<MatrixXd> mmat(VectorXd& w, int offset, int rows, int cols) {
    return {w.data() + offset, rows, cols};
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

VectorXd sigmoid_v(const VectorXd& x) {
    return x.unaryExpr([](double v) { return sigmoid(v); });
}

// Per-step activations kept for the backward pass.
struct Cache {
    std::vector<VectorXd> h;          // h[0] = 0, h[1..L]
    std::vector<VectorXd> c;          // LSTM cell states, c[0] = 0
    std::vector<VectorXd> gate[4];    // gate activations per step
};

VectorXd forward_impl(const ModelConfig& cfg, const VectorXd& w,
                      const MatrixXd& win, Cache* cache) {
    const Layout L(cfg);
    const int steps = static_cast<int>(win.rows());
    const auto head_w = cmat(w, L.head_w(), L.Q, L.H);
    const auto head_b = cmat(w, L.head_b(), L.Q, 1);

    VectorXd h = VectorXd::Zero(L.H);
    VectorXd c = VectorXd::Zero(L.H);
    if (cache) {
        cache->h.assign(1, h);
        if (cfg.architecture == Architecture::Lstm) cache->c.assign(1, c);
    }

    for (int t = 0; t < steps; ++t) {
        const VectorXd x = win.row(t).transpose();
        switch (cfg.architecture) {
            case Architecture::Rnn: {
                const auto Wx = cmat(w, L.w_in(0), L.H, L.p);
                const auto Wh = cmat(w, L.w_rec(0), L.H, L.H);
                const auto b = cmat(w, L.bias(0), L.H, 1);
                h = (Wx * x + Wh * h + b.col(0)).array().tanh().matrix();
                break;
            }
            case Architecture::Lstm: {
                VectorXd a[4];
                for (int g = 0; g < 4; ++g)
                    a[g] = cmat(w, L.w_in(g), L.H, L.p) * x +
                           cmat(w, L.w_rec(g), L.H, L.H) * h +
                           cmat(w, L.bias(g), L.H, 1).col(0);
                const VectorXd i = sigmoid_v(a[0]);
                const VectorXd f = sigmoid_v(a[1]);
                const VectorXd g = a[2].array().tanh().matrix();
                const VectorXd o = sigmoid_v(a[3]);
                c = (f.array() * c.array() + i.array() * g.array()).matrix();
                h = (o.array() * c.array().tanh()).matrix();
                if (cache) {
                    cache->gate[0].push_back(i);
                    cache->gate[1].push_back(f);
                    cache->gate[2].push_back(g);
                    cache->gate[3].push_back(o);
                    cache->c.push_back(c);
                }
                break;
            }
            case Architecture::Gru: {
                const VectorXd z = sigmoid_v(cmat(w, L.w_in(0), L.H, L.p) * x +
                                             cmat(w, L.w_rec(0), L.H, L.H) * h +
                                             cmat(w, L.bias(0), L.H, 1).col(0));
                const VectorXd r = sigmoid_v(cmat(w, L.w_in(1), L.H, L.p) * x +
                                             cmat(w, L.w_rec(1), L.H, L.H) * h +
                                             cmat(w, L.bias(1), L.H, 1).col(0));
                const VectorXd rh = (r.array() * h.array()).matrix();
                const VectorXd n = (cmat(w, L.w_in(2), L.H, L.p) * x +
                                    cmat(w, L.w_rec(2), L.H, L.H) * rh +
                                    cmat(w, L.bias(2), L.H, 1).col(0))
                                       .array().tanh().matrix();
                h = ((1.0 - z.array()) * n.array() + z.array() * h.array()).matrix();
                if (cache) {
                    cache->gate[0].push_back(z);
                    cache->gate[1].push_back(r);
                    cache->gate[2].push_back(n);
                }
                break;
            }
        }
        if (cache) cache->h.push_back(h);
    }
    return head_w * h + head_b.col(0);
}

// Accumulates d loss / d params into grad given d loss / d output.
void backward_impl(const ModelConfig& cfg, const VectorXd& w, const MatrixXd& win,
                   const Cache& cache, const VectorXd& dout, VectorXd& grad) {
    const Layout L(cfg);
    const int steps = static_cast<int>(win.rows());
    const VectorXd& hL = cache.h[steps];

    mmat(grad, L.head_w(), L.Q, L.H) += dout * hL.transpose();
    mmat(grad, L.head_b(), L.Q, 1).col(0) += dout;

    VectorXd dh = cmat(w, L.head_w(), L.Q, L.H).transpose() * dout;
    VectorXd dc = VectorXd::Zero(L.H);

    for (int t = steps - 1; t >= 0; --t) {
        const VectorXd x = win.row(t).transpose();
        const VectorXd& h_prev = cache.h[t];
        switch (cfg.architecture) {
            case Architecture::Rnn: {
                const VectorXd& h = cache.h[t + 1];
                const VectorXd da = (dh.array() * (1.0 - h.array().square())).matrix();
                mmat(grad, L.w_in(0), L.H, L.p) += da * x.transpose();
                mmat(grad, L.w_rec(0), L.H, L.H) += da * h_prev.transpose();
                mmat(grad, L.bias(0), L.H, 1).col(0) += da;
                dh = cmat(w, L.w_rec(0), L.H, L.H).transpose() * da;
                break;
            }
            case Architecture::Lstm: {
                const VectorXd& i = cache.gate[0][t];
                const VectorXd& f = cache.gate[1][t];
                const VectorXd& g = cache.gate[2][t];
                const VectorXd& o = cache.gate[3][t];
                const VectorXd& c = cache.c[t + 1];
                const VectorXd& c_prev = cache.c[t];
                const VectorXd tc = c.array().tanh().matrix();

                const VectorXd do_ = (dh.array() * tc.array()).matrix();
                dc += (dh.array() * o.array() * (1.0 - tc.array().square())).matrix();
                const VectorXd di = (dc.array() * g.array()).matrix();
                const VectorXd dg = (dc.array() * i.array()).matrix();
                const VectorXd df = (dc.array() * c_prev.array()).matrix();
                dc = (dc.array() * f.array()).matrix();

                const VectorXd da[4] = {
                    (di.array() * i.array() * (1.0 - i.array())).matrix(),
                    (df.array() * f.array() * (1.0 - f.array())).matrix(),
                    (dg.array() * (1.0 - g.array().square())).matrix(),
                    (do_.array() * o.array() * (1.0 - o.array())).matrix(),
                };
                dh.setZero();
                for (int gi = 0; gi < 4; ++gi) {
                    mmat(grad, L.w_in(gi), L.H, L.p) += da[gi] * x.transpose();
                    mmat(grad, L.w_rec(gi), L.H, L.H) += da[gi] * h_prev.transpose();
                    mmat(grad, L.bias(gi), L.H, 1).col(0) += da[gi];
                    dh += cmat(w, L.w_rec(gi), L.H, L.H).transpose() * da[gi];
                }
                break;
            }
            case Architecture::Gru: {
                const VectorXd& z = cache.gate[0][t];
                const VectorXd& r = cache.gate[1][t];
                const VectorXd& n = cache.gate[2][t];
                const VectorXd rh = (r.array() * h_prev.array()).matrix();

                const VectorXd dz = (dh.array() * (h_prev.array() - n.array())).matrix();
                const VectorXd dn = (dh.array() * (1.0 - z.array())).matrix();
                VectorXd dh_prev = (dh.array() * z.array()).matrix();

                const VectorXd dan = (dn.array() * (1.0 - n.array().square())).matrix();
                mmat(grad, L.w_in(2), L.H, L.p) += dan * x.transpose();
                mmat(grad, L.w_rec(2), L.H, L.H) += dan * rh.transpose();
                mmat(grad, L.bias(2), L.H, 1).col(0) += dan;
                const VectorXd drh = cmat(w, L.w_rec(2), L.H, L.H).transpose() * dan;
                const VectorXd dr = (drh.array() * h_prev.array()).matrix();
                dh_prev += (drh.array() * r.array()).matrix();

                const VectorXd daz = (dz.array() * z.array() * (1.0 - z.array())).matrix();
                const VectorXd dar = (dr.array() * r.array() * (1.0 - r.array())).matrix();
                mmat(grad, L.w_in(0), L.H, L.p) += daz * x.transpose();
                mmat(grad, L.w_rec(0), L.H, L.H) += daz * h_prev.transpose();
                mmat(grad, L.bias(0), L.H, 1).col(0) += daz;
                mmat(grad, L.w_in(1), L.H, L.p) += dar * x.transpose();
                mmat(grad, L.w_rec(1), L.H, L.H) += dar * h_prev.transpose();
                mmat(grad, L.bias(1), L.H, 1).col(0) += dar;
                dh_prev += cmat(w, L.w_rec(0), L.H, L.H).transpose() * daz;
                dh_prev += cmat(w, L.w_rec(1), L.H, L.H).transpose() * dar;
                dh = dh_prev;
                break;
            }
        }
    }
}

// Per-quantile pinball derivative wrt the prediction; q at the kink.
double pinball_grad(double q, double e) { return e > 0.0 ? -q : 1.0 - q; }

// Batch loss and per-sample gradients wrt the predictions. Quantile loss
// averages over quantiles and samples; RMSE is computed over the whole
// batch so its gradient couples the samples through the common root.
double batch_loss(const LossConfig& loss, const std::vector<VectorXd>& preds,
                  std::span<const double> targets, std::vector<VectorXd>* grads) {
    const int B = static_cast<int>(preds.size());
    if (grads) grads->assign(B, VectorXd());
    if (loss.kind == LossConfig::Kind::Quantile) {
        const int Q = static_cast<int>(loss.quantiles.size());
        double total = 0.0;
        for (int s = 0; s < B; ++s) {
            VectorXd g = VectorXd::Zero(Q);
            for (int j = 0; j < Q; ++j) {
                const double q = loss.quantiles[j];
                const double e = targets[s] - preds[s](j);
                total += std::max((q - 1.0) * e, q * e) / Q;
                g(j) = pinball_grad(q, e) / (Q * B);
            }
            if (grads) (*grads)[s] = std::move(g);
        }
        return total / B;
    }
    double sq = 0.0;
    for (int s = 0; s < B; ++s) {
        const double e = targets[s] - preds[s](0);
        sq += e * e;
    }
    const double value = std::sqrt(sq / B);
    if (grads) {
        for (int s = 0; s < B; ++s) {
            VectorXd g(1);
            const double e = targets[s] - preds[s](0);
            g(0) = value > 0.0 ? -e / (B * value) : 0.0;
            (*grads)[s] = std::move(g);
        }
    }
    return value;
}

void check_window_shape(const ModelConfig& cfg, const MatrixXd& window) {
    if (window.rows() != cfg.window_len || window.cols() != cfg.input_size)
        throw ShapeError("window is " + std::to_string(window.rows()) + "x" +
                         std::to_string(window.cols()) + ", config expects " +
                         std::to_string(cfg.window_len) + "x" +
                         std::to_string(cfg.input_size));
}

std::string hexf(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

double parse_double(const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size())
        throw FormatError("forecaster file: bad number '" + tok + "'");
    return v;
}

} // namespace

void ModelConfig::validate() const {
    if (hidden_size < 1) throw ConfigError("hidden_size must be >= 1");
    if (input_size < 0) throw ConfigError("input_size must be >= 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (window_len < 1) throw ConfigError("window_len must be >= 1");
    if (loss.kind == LossConfig::Kind::Quantile) {
        if (loss.quantiles.empty()) throw ConfigError("quantile loss needs quantiles");
        for (std::size_t i = 0; i < loss.quantiles.size(); ++i) {
            const double q = loss.quantiles[i];
            if (!(q > 0.0 && q < 1.0))
                throw ConfigError("quantiles must lie strictly in (0, 1)");
            if (i > 0 && !(q > loss.quantiles[i - 1]))
                throw ConfigError("quantiles must be strictly ascending");
        }
    }
}

std::vector<ParamSegment> param_segments(const ModelConfig& config) {
    const Layout L(config);
    std::vector<ParamSegment> segs;
    const char* const* gates = nullptr;
    if (config.architecture == Architecture::Lstm) gates = kLstmGates;
    if (config.architecture == Architecture::Gru) gates = kGruGates;
    auto gate_name = [&](const char* base, int g) {
        return gates ? std::string(base) + "_" + gates[g] : std::string(base);
    };
    for (int g = 0; g < L.G; ++g)
        segs.push_back({gate_name("w_in", g), L.w_in(g), L.H, L.p});
    for (int g = 0; g < L.G; ++g)
        segs.push_back({gate_name("w_rec", g), L.w_rec(g), L.H, L.H});
    for (int g = 0; g < L.G; ++g)
        segs.push_back({gate_name("bias", g), L.bias(g), L.H, 1});
    segs.push_back({"head_w", L.head_w(), L.Q, L.H});
    segs.push_back({"head_b", L.head_b(), L.Q, 1});
    return segs;
}

int param_count(const ModelConfig& config) { return Layout(config).total(); }

Eigen::MatrixXd MinMaxNormalizer::transform(const Eigen::MatrixXd& window) const {
    if (window.cols() != static_cast<Eigen::Index>(feature_range.size()))
        throw ShapeError("normalizer fitted for " +
                         std::to_string(feature_range.size()) + " features, got " +
                         std::to_string(window.cols()));
    Eigen::MatrixXd out = window;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const auto [lo, hi] = feature_range[j];
        out.col(j) = (out.col(j).array() - lo) / (hi - lo);
    }
    return out;
}

double MinMaxNormalizer::normalize_target(double value) const {
    return (value - target_range.first) / (target_range.second - target_range.first);
}

double MinMaxNormalizer::denormalize_target(double value) const {
    return target_range.first + value * (target_range.second - target_range.first);
}

Eigen::VectorXd forward(const ModelConfig& config, const Eigen::VectorXd& weights,
                        const Eigen::MatrixXd& window) {
    config.validate();
    check_window_shape(config, window);
    if (weights.size() != param_count(config))
        throw ShapeError("weight vector has " + std::to_string(weights.size()) +
                         " entries, architecture needs " +
                         std::to_string(param_count(config)));
    if (!weights.allFinite()) throw NumericError("forward: non-finite weights");
    return forward_impl(config, weights, window, nullptr);
}

double quantile_loss(std::span<const double> predicted, double actual,
                     std::span<const double> quantiles) {
    if (predicted.size() != quantiles.size())
        throw ShapeError("quantile_loss: prediction/quantile count mismatch");
    if (predicted.empty()) throw DomainError("quantile_loss: empty inputs");
    double total = 0.0;
    for (std::size_t j = 0; j < quantiles.size(); ++j) {
        const double q = quantiles[j];
        if (!(q > 0.0 && q < 1.0))
            throw DomainError("quantile_loss: quantile outside (0, 1)");
        const double e = actual - predicted[j];
        total += std::max((q - 1.0) * e, q * e);
    }
    return total / static_cast<double>(quantiles.size());
}

double rmse_loss(std::span<const double> predicted, std::span<const double> actual) {
    if (predicted.size() != actual.size())
        throw ShapeError("rmse_loss: length mismatch");
    if (predicted.empty()) throw DomainError("rmse_loss: empty inputs");
    double sq = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double e = actual[i] - predicted[i];
        sq += e * e;
    }
    return std::sqrt(sq / static_cast<double>(predicted.size()));
}

TrainedForecaster train(const ModelConfig& config, const WindowedDataset& train_set) {
    ModelConfig cfg = config;
    if (train_set.size() == 0) throw EmptyDataError("train: empty training set");
    const int p = static_cast<int>(train_set.inputs[0].cols());
    if (cfg.input_size == 0) cfg.input_size = p;
    cfg.validate();
    if (cfg.input_size != p)
        throw ShapeError("train: config expects " + std::to_string(cfg.input_size) +
                         " features, data has " + std::to_string(p));
    if (train_set.inputs[0].rows() != cfg.window_len)
        throw ShapeError("train: window length mismatch");

    // Min-max fitted on the training split only.
    MinMaxNormalizer norm;
    norm.feature_range.assign(p, {std::numeric_limits<double>::infinity(),
                                  -std::numeric_limits<double>::infinity()});
    for (const auto& win : train_set.inputs)
        for (int j = 0; j < p; ++j) {
            norm.feature_range[j].first =
                std::min(norm.feature_range[j].first, win.col(j).minCoeff());
            norm.feature_range[j].second =
                std::max(norm.feature_range[j].second, win.col(j).maxCoeff());
        }
    norm.target_range = {
        *std::min_element(train_set.targets.begin(), train_set.targets.end()),
        *std::max_element(train_set.targets.begin(), train_set.targets.end())};
    for (auto& [lo, hi] : norm.feature_range)
        if (lo == hi) { lo -= 0.5; hi += 0.5; }
    if (norm.target_range.first == norm.target_range.second) {
        norm.target_range.first -= 0.5;
        norm.target_range.second += 0.5;
    }

    const int N = static_cast<int>(train_set.size());
    std::vector<MatrixXd> inputs;
    std::vector<double> targets(N);
    inputs.reserve(N);
    for (int s = 0; s < N; ++s) {
        inputs.push_back(norm.transform(train_set.inputs[s]));
        targets[s] = norm.normalize_target(train_set.targets[s]);
    }

    const int n_params = param_count(cfg);
    VectorXd w(n_params);
    Rng rng(cfg.seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_size));
    for (int i = 0; i < n_params; ++i) w(i) = rng.uniform(-bound, bound);

    // Adam
    VectorXd m = VectorXd::Zero(n_params);
    VectorXd v = VectorXd::Zero(n_params);
    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    std::vector<double> history;
    history.reserve(cfg.epochs);
    VectorXd grad(n_params);
    std::vector<Cache> caches;
    std::vector<VectorXd> preds, out_grads;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        double epoch_acc = 0.0; // sum of per-sample pinball / squared error
        for (int start = 0; start < N; start += cfg.batch_size) {
            const int B = std::min(cfg.batch_size, N - start);
            caches.assign(B, Cache{});
            preds.resize(B);
            for (int s = 0; s < B; ++s)
                preds[s] = forward_impl(cfg, w, inputs[start + s], &caches[s]);

            const double loss_value =
                batch_loss(cfg.loss, preds,
                           std::span(targets).subspan(start, B), &out_grads);
            if (cfg.loss.kind == LossConfig::Kind::Quantile)
                epoch_acc += loss_value * B;
            else
                epoch_acc += loss_value * loss_value * B;

            grad.setZero();
            for (int s = 0; s < B; ++s)
                backward_impl(cfg, w, inputs[start + s], caches[s], out_grads[s], grad);

            if (cfg.grad_clip > 0.0) {
                const double norm2 = grad.norm();
                if (norm2 > cfg.grad_clip) grad *= cfg.grad_clip / norm2;
            }

            ++step;
            m = beta1 * m + (1.0 - beta1) * grad;
            v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            w.array() -= cfg.learning_rate * (m.array() / bc1) /
                         ((v.array() / bc2).sqrt() + adam_eps);
        }
        const double epoch_loss = cfg.loss.kind == LossConfig::Kind::Quantile
                                      ? epoch_acc / N
                                      : std::sqrt(epoch_acc / N);
        if (!std::isfinite(epoch_loss))
            throw TrainingError("training diverged at epoch " + std::to_string(epoch),
                                epoch);
        history.push_back(epoch_loss);
    }

    TrainedForecaster out;
    out.config = cfg;
    out.weights = std::move(w);
    out.normalizer = std::move(norm);
    out.training_loss_history = std::move(history);
    return out;
}

ForecastSeries predict(const TrainedForecaster& model, const WindowedDataset& dataset) {
    const ModelConfig& cfg = model.config;
    ForecastSeries out;
    if (dataset.size() == 0) return out;
    if (dataset.inputs[0].cols() != cfg.input_size)
        throw ShapeError("predict: dataset has " +
                         std::to_string(dataset.inputs[0].cols()) +
                         " features, model expects " + std::to_string(cfg.input_size));
    if (dataset.inputs[0].rows() != cfg.window_len)
        throw ShapeError("predict: window length mismatch");

    int point_idx = 0;
    if (cfg.loss.kind == LossConfig::Kind::Quantile) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < cfg.loss.quantiles.size(); ++j) {
            const double d = std::abs(cfg.loss.quantiles[j] - 0.5);
            if (d < best) { best = d; point_idx = static_cast<int>(j); }
        }
    }

    for (std::size_t s = 0; s < dataset.size(); ++s) {
        VectorXd pred = forward_impl(cfg, model.weights,
                                     model.normalizer.transform(dataset.inputs[s]),
                                     nullptr);
        for (int j = 0; j < pred.size(); ++j)
            pred(j) = model.normalizer.denormalize_target(pred(j));
        out.dates.push_back(dataset.sample_dates[s]);
        out.actual.push_back(dataset.targets[s]);
        out.point_estimate.push_back(pred(point_idx));
        out.predicted.push_back(std::move(pred));
    }
    return out;
}

double gradient_check(const ModelConfig& config, const Eigen::VectorXd& weights,
                      const Eigen::MatrixXd& window, double target) {
    ModelConfig cfg = config;
    cfg.input_size = static_cast<int>(window.cols());
    cfg.window_len = static_cast<int>(window.rows());
    cfg.validate();
    if (weights.size() != param_count(cfg))
        throw ShapeError("gradient_check: weight count mismatch");

    auto loss_at = [&](const VectorXd& w) {
        std::vector<VectorXd> preds{forward_impl(cfg, w, window, nullptr)};
        return batch_loss(cfg.loss, preds, std::span(&target, 1), nullptr);
    };

    // Move the target off any pinball kink so central differences see a
    // smooth function.
    {
        bool on_kink = true;
        while (on_kink) {
            on_kink = false;
            const VectorXd pred = forward_impl(cfg, weights, window, nullptr);
            for (int j = 0; j < pred.size(); ++j)
                if (std::abs(target - pred(j)) < 1e-4) { on_kink = true; break; }
            if (on_kink) target += 0.0137 * (1.0 + std::abs(target));
        }
    }

    Cache cache;
    std::vector<VectorXd> preds{forward_impl(cfg, weights, window, &cache)};
    std::vector<VectorXd> out_grads;
    batch_loss(cfg.loss, preds, std::span(&target, 1), &out_grads);
    VectorXd analytic = VectorXd::Zero(weights.size());
    backward_impl(cfg, weights, window, cache, out_grads[0], analytic);

    // Seeded coordinate subset of at least 200 entries.
    const int n = static_cast<int>(weights.size());
    std::vector<int> coords(n);
    for (int i = 0; i < n; ++i) coords[i] = i;
    if (n > 200) {
        Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
        for (int i = n - 1; i > 0; --i) {
            const int j = static_cast<int>(rng.next_u64() % (i + 1));
            std::swap(coords[i], coords[j]);
        }
        coords.resize(200);
    }

    // The 1e-4 denominator floor keeps cancellation noise (~1e-10 on the
    // central difference at this step) from dominating coordinates whose
    // true gradient is near zero.
    constexpr double step = 1e-6;
    double max_rel = 0.0;
    VectorXd w = weights;
    for (int idx : coords) {
        const double keep = w(idx);
        w(idx) = keep + step;
        const double up = loss_at(w);
        w(idx) = keep - step;
        const double down = loss_at(w);
        w(idx) = keep;
        const double numeric = (up - down) / (2.0 * step);
        const double denom = std::max({std::abs(numeric), std::abs(analytic(idx)), 1e-4});
        max_rel = std::max(max_rel, std::abs(numeric - analytic(idx)) / denom);
    }
    return max_rel;
}

const char* architecture_name(Architecture arch) {
    switch (arch) {
        case Architecture::Rnn: return "rnn";
        case Architecture::Lstm: return "lstm";
        case Architecture::Gru: return "gru";
    }
    return "?";
}

Architecture architecture_from_name(const std::string& name) {
    if (name == "rnn") return Architecture::Rnn;
    if (name == "lstm") return Architecture::Lstm;
    if (name == "gru") return Architecture::Gru;
    throw ConfigError("unknown architecture '" + name + "'");
}

void save_forecaster(const TrainedForecaster& model, const std::string& path) {
    std::ofstream out(path);
    if (!out.is_open()) throw IoError("cannot write " + path);
    const ModelConfig& c = model.config;
    out << "factorcast-forecaster v1\n";
    out << "architecture " << architecture_name(c.architecture) << '\n';
    out << "loss " << (c.loss.kind == LossConfig::Kind::Quantile ? "quantile" : "rmse");
    if (c.loss.kind == LossConfig::Kind::Quantile)
        for (double q : c.loss.quantiles) out << ' ' << hexf(q);
    out << '\n';
    out << "input_size " << c.input_size << '\n';
    out << "hidden_size " << c.hidden_size << '\n';
    out << "window_len " << c.window_len << '\n';
    out << "seed " << c.seed << '\n';
    out << "learning_rate " << hexf(c.learning_rate) << '\n';
    out << "epochs " << c.epochs << '\n';
    out << "batch_size " << c.batch_size << '\n';
    out << "grad_clip " << hexf(c.grad_clip) << '\n';
    out << "params " << model.weights.size() << '\n';
    for (Eigen::Index i = 0; i < model.weights.size(); ++i)
        out << hexf(model.weights(i)) << '\n';
    out << "normalizer " << model.normalizer.feature_range.size() << '\n';
    for (const auto& [lo, hi] : model.normalizer.feature_range)
        out << hexf(lo) << ' ' << hexf(hi) << '\n';
    out << "target_range " << hexf(model.normalizer.target_range.first) << ' '
        << hexf(model.normalizer.target_range.second) << '\n';
    out << "history " << model.training_loss_history.size() << '\n';
    for (double h : model.training_loss_history) out << hexf(h) << '\n';
}

TrainedForecaster load_forecaster(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw IoError("cannot open " + path);
    std::string line;
    auto next_line = [&]() {
        if (!std::getline(in, line))
            throw FormatError(path + ": truncated forecaster file");
        return line;
    };
    auto expect_key = [&](const std::string& key) {
        next_line();
        if (line.rfind(key + " ", 0) != 0)
            throw FormatError(path + ": expected '" + key + "', got '" + line + "'");
        return line.substr(key.size() + 1);
    };

    if (next_line() != "factorcast-forecaster v1")
        throw FormatError(path + ": unrecognized forecaster header");

    TrainedForecaster model;
    ModelConfig& c = model.config;
    c.architecture = architecture_from_name(expect_key("architecture"));
    {
        std::istringstream ls(expect_key("loss"));
        std::string kind;
        ls >> kind;
        if (kind == "quantile") {
            c.loss.kind = LossConfig::Kind::Quantile;
            c.loss.quantiles.clear();
            std::string tok;
            while (ls >> tok) c.loss.quantiles.push_back(parse_double(tok));
        } else if (kind == "rmse") {
            c.loss.kind = LossConfig::Kind::Rmse;
        } else {
            throw FormatError(path + ": unknown loss '" + kind + "'");
        }
    }
    c.input_size = std::stoi(expect_key("input_size"));
    c.hidden_size = std::stoi(expect_key("hidden_size"));
    c.window_len = std::stoi(expect_key("window_len"));
    c.seed = std::stoull(expect_key("seed"));
    c.learning_rate = parse_double(expect_key("learning_rate"));
    c.epochs = std::stoi(expect_key("epochs"));
    c.batch_size = std::stoi(expect_key("batch_size"));
    c.grad_clip = parse_double(expect_key("grad_clip"));

    const int n_params = std::stoi(expect_key("params"));
    if (n_params != param_count(c))
        throw FormatError(path + ": parameter count does not match architecture");
    model.weights.resize(n_params);
    for (int i = 0; i < n_params; ++i) model.weights(i) = parse_double(next_line());

    const int n_feat = std::stoi(expect_key("normalizer"));
    for (int j = 0; j < n_feat; ++j) {
        std::istringstream ls(next_line());
        std::string lo, hi;
        if (!(ls >> lo >> hi)) throw FormatError(path + ": bad normalizer row");
        model.normalizer.feature_range.emplace_back(parse_double(lo), parse_double(hi));
    }
    {
        std::istringstream ls(expect_key("target_range"));
        std::string lo, hi;
        if (!(ls >> lo >> hi)) throw FormatError(path + ": bad target range");
        model.normalizer.target_range = {parse_double(lo), parse_double(hi)};
    }
    const int n_hist = std::stoi(expect_key("history"));
    for (int i = 0; i < n_hist; ++i)
        model.training_loss_history.push_back(parse_double(next_line()));
    c.validate();
    return model;
}

} // namespace factorcast
