#include "fusekit/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "fusekit/csv.hpp"

namespace fusekit {

namespace {
constexpr double kOutputClamp = 1e-12;
constexpr double kScgSigma = 1e-4;
constexpr double kScgInitialLambda = 1e-6;
}  // namespace

std::size_t FusionNet::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        n += static_cast<std::size_t>(dims[l + 1]) * dims[l] + dims[l + 1];
    return n;
}

std::vector<double> FusionNet::flatten_parameters() const {
    std::vector<double> flat;
    flat.reserve(parameter_count());
    for (std::size_t l = 0; l < weights.size(); ++l) {
        flat.insert(flat.end(), weights[l].data().begin(), weights[l].data().end());
        flat.insert(flat.end(), biases[l].begin(), biases[l].end());
    }
    return flat;
}

void FusionNet::load_parameters(std::span<const double> flat) {
    if (flat.size() != parameter_count())
        throw validation_error("FusionNet: parameter vector length mismatch");
    std::size_t pos = 0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        std::copy(flat.begin() + pos, flat.begin() + pos + weights[l].data().size(),
                  weights[l].data().begin());
        pos += weights[l].data().size();
        std::copy(flat.begin() + pos, flat.begin() + pos + biases[l].size(), biases[l].begin());
        pos += biases[l].size();
    }
}

FusionNet fusion_net_init(const std::vector<int>& dims, std::uint64_t seed) {
    if (dims.size() != 4) throw validation_error("fusion net needs exactly 4 layers");
    for (int d : dims)
        if (d < 1) throw validation_error("fusion net layer sizes must be >= 1");
    FusionNet net;
    net.dims = dims;
    net.seed = seed;
    std::mt19937_64 rng(mix_seed(seed, 0xfee'd));
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> uniform(-bound, bound);
        Matrix w(fan_out, fan_in);
        for (double& v : w.data()) v = uniform(rng);
        std::vector<double> b(fan_out);
        for (double& v : b) v = uniform(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

Matrix encode_targets(const std::vector<int>& labels, int n_classes) {
    Matrix targets(labels.size(), n_classes, 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= n_classes)
            throw validation_error("encode_targets: label outside [0, n_classes)");
        targets.at(i, labels[i]) = 1.0;
    }
    return targets;
}

namespace {

void affine(const Matrix& w, const std::vector<double>& b, std::span<const double> in,
            std::vector<double>& out) {
    out.resize(w.rows());
    for (std::size_t r = 0; r < w.rows(); ++r) {
        double acc = b[r];
        const auto row = w.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * in[c];
        out[r] = acc;
    }
}

void softmax_inplace(std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

struct LayerCache {
    std::vector<double> a1, a2, out;
};

void forward_cached(const FusionNet& net, std::span<const double> x, LayerCache& cache) {
    affine(net.weights[0], net.biases[0], x, cache.a1);
    for (double& v : cache.a1) v = std::tanh(v);
    affine(net.weights[1], net.biases[1], cache.a1, cache.a2);
    for (double& v : cache.a2) v = std::tanh(v);
    affine(net.weights[2], net.biases[2], cache.a2, cache.out);
    softmax_inplace(cache.out);
}

}  // namespace

std::vector<double> forward(const FusionNet& net, std::span<const double> input) {
    if (static_cast<int>(input.size()) != net.input_dim())
        throw validation_error("forward: input length " + std::to_string(input.size()) + " != " +
                               std::to_string(net.input_dim()));
    LayerCache cache;
    forward_cached(net, input, cache);
    return cache.out;
}

Matrix forward_batch(const FusionNet& net, const Matrix& inputs) {
    Matrix out(inputs.rows(), net.output_dim());
    LayerCache cache;
    for (std::size_t i = 0; i < inputs.rows(); ++i) {
        forward_cached(net, inputs.row(i), cache);
        out.set_row(i, cache.out);
    }
    return out;
}

double cross_entropy(const Matrix& targets, const Matrix& outputs) {
    if (targets.rows() != outputs.rows() || targets.cols() != outputs.cols())
        throw validation_error("cross_entropy: shape mismatch");
    if (targets.rows() == 0) throw validation_error("cross_entropy: empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < targets.rows(); ++i)
        for (std::size_t c = 0; c < targets.cols(); ++c) {
            const double t = targets.at(i, c);
            if (t != 0.0) total -= t * std::log(std::max(outputs.at(i, c), kOutputClamp));
        }
    return total / static_cast<double>(targets.rows());
}

double value_and_gradient(const FusionNet& net, const Matrix& inputs, const Matrix& targets,
                          std::vector<double>& gradient_out) {
    if (inputs.rows() != targets.rows())
        throw validation_error("gradient: inputs/targets row mismatch");
    if (static_cast<int>(inputs.cols()) != net.input_dim() ||
        static_cast<int>(targets.cols()) != net.output_dim())
        throw validation_error("gradient: shape mismatch with net dims");

    const std::size_t n_rows = inputs.rows();
    Matrix gw0(net.weights[0].rows(), net.weights[0].cols());
    Matrix gw1(net.weights[1].rows(), net.weights[1].cols());
    Matrix gw2(net.weights[2].rows(), net.weights[2].cols());
    std::vector<double> gb0(net.biases[0].size(), 0.0);
    std::vector<double> gb1(net.biases[1].size(), 0.0);
    std::vector<double> gb2(net.biases[2].size(), 0.0);

    LayerCache cache;
    std::vector<double> dz3, dz2, dz1;
    double loss = 0.0;
    for (std::size_t i = 0; i < n_rows; ++i) {
        const auto x = inputs.row(i);
        forward_cached(net, x, cache);
        for (std::size_t c = 0; c < targets.cols(); ++c) {
            const double t = targets.at(i, c);
            if (t != 0.0) loss -= t * std::log(std::max(cache.out[c], kOutputClamp));
        }

        // Softmax + cross-entropy: output error is (out - target).
        dz3.assign(cache.out.begin(), cache.out.end());
        for (std::size_t c = 0; c < targets.cols(); ++c) dz3[c] -= targets.at(i, c);

        for (std::size_t r = 0; r < gw2.rows(); ++r) {
            for (std::size_t c = 0; c < gw2.cols(); ++c) gw2.at(r, c) += dz3[r] * cache.a2[c];
            gb2[r] += dz3[r];
        }
        dz2.assign(cache.a2.size(), 0.0);
        for (std::size_t r = 0; r < net.weights[2].rows(); ++r)
            for (std::size_t c = 0; c < net.weights[2].cols(); ++c)
                dz2[c] += net.weights[2].at(r, c) * dz3[r];
        for (std::size_t c = 0; c < dz2.size(); ++c) dz2[c] *= 1.0 - cache.a2[c] * cache.a2[c];

        for (std::size_t r = 0; r < gw1.rows(); ++r) {
            for (std::size_t c = 0; c < gw1.cols(); ++c) gw1.at(r, c) += dz2[r] * cache.a1[c];
            gb1[r] += dz2[r];
        }
        dz1.assign(cache.a1.size(), 0.0);
        for (std::size_t r = 0; r < net.weights[1].rows(); ++r)
            for (std::size_t c = 0; c < net.weights[1].cols(); ++c)
                dz1[c] += net.weights[1].at(r, c) * dz2[r];
        for (std::size_t c = 0; c < dz1.size(); ++c) dz1[c] *= 1.0 - cache.a1[c] * cache.a1[c];

        for (std::size_t r = 0; r < gw0.rows(); ++r) {
            for (std::size_t c = 0; c < gw0.cols(); ++c) gw0.at(r, c) += dz1[r] * x[c];
            gb0[r] += dz1[r];
        }
    }

    const double inv_n = 1.0 / static_cast<double>(n_rows);
    gradient_out.clear();
    gradient_out.reserve(net.parameter_count());
    auto push_scaled = [&](const std::vector<double>& v) {
        for (double g : v) gradient_out.push_back(g * inv_n);
    };
    push_scaled(gw0.data());
    push_scaled(gb0);
    push_scaled(gw1.data());
    push_scaled(gb1);
    push_scaled(gw2.data());
    push_scaled(gb2);
    return loss * inv_n;
}

std::vector<double> gradient(const FusionNet& net, const Matrix& inputs, const Matrix& targets) {
    std::vector<double> grad;
    value_and_gradient(net, inputs, targets, grad);
    return grad;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2_sq(std::span<const double> v) { return dot(v, v); }

// Stratified-by-class row split for early stopping.
void split_rows(const Matrix& inputs, const Matrix& targets, double fraction, std::uint64_t seed,
                Matrix& train_in, Matrix& train_tg, Matrix& val_in, Matrix& val_tg) {
    std::map<std::size_t, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < targets.rows(); ++i) by_class[argmax(targets.row(i))].push_back(i);

    std::mt19937_64 rng(mix_seed(seed, 0xa1));
    std::vector<std::size_t> train_rows, val_rows;
    for (auto& [cls, rows] : by_class) {
        std::shuffle(rows.begin(), rows.end(), rng);
        std::size_t take = static_cast<std::size_t>(std::llround(fraction * rows.size()));
        take = std::min(take, rows.size() - 1);
        val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + take);
        train_rows.insert(train_rows.end(), rows.begin() + take, rows.end());
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());

    auto gather = [&](const std::vector<std::size_t>& rows, const Matrix& src) {
        Matrix out(rows.size(), src.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) out.set_row(i, src.row(rows[i]));
        return out;
    };
    train_in = gather(train_rows, inputs);
    train_tg = gather(train_rows, targets);
    val_in = gather(val_rows, inputs);
    val_tg = gather(val_rows, targets);
}

}  // namespace

TrainResult train_scg(FusionNet net, const Matrix& inputs, const Matrix& targets,
                      const TrainConfig& config) {
    if (inputs.rows() == 0) throw validation_error("train_scg: empty training data");
    if (config.max_epochs < 1) throw validation_error("train_scg: max_epochs must be >= 1");
    if (config.validation_fraction <= 0.0 || config.validation_fraction >= 1.0)
        throw validation_error("train_scg: validation_fraction must be in (0, 1)");

    Matrix train_in, train_tg, val_in, val_tg;
    split_rows(inputs, targets, config.validation_fraction, config.seed, train_in, train_tg, val_in,
               val_tg);
    const bool has_val = val_in.rows() > 0;

    TrainResult result;
    const std::size_t n_params = net.parameter_count();
    std::vector<double> w = net.flatten_parameters();
    std::vector<double> grad_now(n_params), grad_shift(n_params);

    auto eval_loss = [&](const std::vector<double>& params) {
        net.load_parameters(params);
        return cross_entropy(train_tg, forward_batch(net, train_in));
    };
    auto eval_grad = [&](const std::vector<double>& params, std::vector<double>& grad_out) {
        net.load_parameters(params);
        return value_and_gradient(net, train_in, train_tg, grad_out);
    };
    auto val_loss_at = [&](const std::vector<double>& params) {
        if (!has_val) return 0.0;
        net.load_parameters(params);
        return cross_entropy(val_tg, forward_batch(net, val_in));
    };

    double loss_now = eval_grad(w, grad_now);
    std::vector<double> r(n_params), p(n_params);
    for (std::size_t i = 0; i < n_params; ++i) r[i] = -grad_now[i];
    p = r;

    double lambda = kScgInitialLambda;
    double lambda_bar = 0.0;
    double delta = 0.0;
    bool success = true;

    double best_val = std::numeric_limits<double>::infinity();
    std::vector<double> best_w = w;
    int wait = 0;
    bool restore_best = false;

    std::vector<double> w_trial(n_params), step_probe(n_params), s(n_params);
    std::string stop_reason = "max_epochs";

    int k = 0;
    double norm_p_sq = norm2_sq(p);
    for (k = 1; k <= config.max_epochs; ++k) {
        if (success) {
            norm_p_sq = norm2_sq(p);
            if (norm_p_sq == 0.0) {
                stop_reason = "direction_vanished";
                break;
            }
            const double sigma_k = kScgSigma / std::sqrt(norm_p_sq);
            for (std::size_t i = 0; i < n_params; ++i) step_probe[i] = w[i] + sigma_k * p[i];
            eval_grad(step_probe, grad_shift);
            for (std::size_t i = 0; i < n_params; ++i)
                s[i] = (grad_shift[i] - grad_now[i]) / sigma_k;
            delta = dot(p, s);
        }

        delta += (lambda - lambda_bar) * norm_p_sq;
        if (delta <= 0.0) {
            lambda_bar = 2.0 * (lambda - delta / norm_p_sq);
            delta = -delta + lambda * norm_p_sq;
            lambda = lambda_bar;
        }

        const double mu = dot(p, r);
        if (mu <= 0.0) {
            // Direction lost descent alignment; restart along the gradient.
            p = r;
            success = true;
            result.trace.push_back({k, loss_now, val_loss_at(w), false});
            continue;
        }
        const double alpha = mu / delta;

        for (std::size_t i = 0; i < n_params; ++i) w_trial[i] = w[i] + alpha * p[i];
        const double loss_trial = eval_loss(w_trial);
        const double comparison =
            std::isfinite(loss_trial) ? 2.0 * delta * (loss_now - loss_trial) / (mu * mu)
                                      : -1.0;

        if (comparison > 0.0) {
            // Accepted: strictly decreasing training loss.
            w = w_trial;
            loss_now = loss_trial;
            if (!std::isfinite(loss_now))
                throw validation_error("train_scg: non-finite loss at iteration " + std::to_string(k));
            eval_grad(w, grad_now);
            std::vector<double>& r_old = step_probe;  // scratch: holds r_k for the beta update
            r_old = r;
            for (std::size_t i = 0; i < n_params; ++i) r[i] = -grad_now[i];
            lambda_bar = 0.0;
            success = true;
            if (k % static_cast<int>(n_params) == 0) {
                p = r;
            } else {
                const double beta = (norm2_sq(r) - dot(r, r_old)) / mu;
                for (std::size_t i = 0; i < n_params; ++i) p[i] = r[i] + beta * p[i];
            }
            if (comparison >= 0.75) lambda *= 0.25;

            const double vl = val_loss_at(w);
            result.trace.push_back({k, loss_now, vl, true});

            if (has_val) {
                if (vl < best_val - 1e-12) {
                    best_val = vl;
                    best_w = w;
                    wait = 0;
                } else {
                    ++wait;
                    if (wait > config.patience) {
                        stop_reason = "patience";
                        restore_best = true;
                        break;
                    }
                }
            }
            if (std::sqrt(norm2_sq(r)) < config.grad_tol) {
                stop_reason = "grad_tol";
                break;
            }
        } else {
            lambda_bar = lambda;
            success = false;
            result.trace.push_back({k, loss_now, val_loss_at(w), false});
        }

        if (comparison < 0.25) lambda += delta * (1.0 - comparison) / norm_p_sq;
        if (!std::isfinite(lambda) || lambda > 1e100) lambda = 1e100;
    }
    if (k > config.max_epochs) stop_reason = "max_epochs";

    if (restore_best) w = best_w;
    net.load_parameters(w);
    result.net = std::move(net);
    result.stop_reason = stop_reason;
    result.iterations = static_cast<int>(result.trace.size());
    return result;
}

int nn_fuse_decision(const FusionNet& net, const std::vector<double>& p_x,
                     const std::vector<double>& p_s) {
    if (p_x.size() != p_s.size())
        throw validation_error("nn_fuse_decision: posterior lengths differ");
    std::vector<double> input;
    input.reserve(p_x.size() + p_s.size());
    input.insert(input.end(), p_x.begin(), p_x.end());
    input.insert(input.end(), p_s.begin(), p_s.end());
    return static_cast<int>(argmax(forward(net, input)));
}

void save_fusion_net(const FusionNet& net, const std::string& path) {
    std::ostringstream out;
    out << "fusekit-model fusion-net v1\n";
    out << "dims";
    for (int d : net.dims) out << ' ' << d;
    out << '\n';
    out << "activation tanh softmax\n";
    out << "seed " << net.seed << '\n';
    out << "params";
    for (double v : net.flatten_parameters()) out << ' ' << format_double(v);
    out << '\n';
    write_text_file(path, out.str());
}

FusionNet load_fusion_net(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.size() < 5 || lines[0] != "fusekit-model fusion-net v1")
        throw validation_error(path + ": not a fusekit fusion-net model file");
    std::vector<int> dims;
    {
        std::istringstream in(lines[1]);
        std::string key;
        in >> key;
        int d;
        while (in >> d) dims.push_back(d);
    }
    if (lines[2] != "activation tanh softmax")
        throw validation_error(path + ": unsupported activation spec");
    std::uint64_t seed = 0;
    {
        std::istringstream in(lines[3]);
        std::string key;
        in >> key >> seed;
    }
    FusionNet net = fusion_net_init(dims, seed);
    std::vector<double> params;
    {
        std::istringstream in(lines[4]);
        std::string token;
        in >> token;  // "params"
        while (in >> token) params.push_back(parse_double(token, path + " params"));
    }
    net.load_parameters(params);
    return net;
}

void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
    std::ostringstream out;
    out << "iteration,train_loss,val_loss,accepted\n";
    for (const TraceRow& row : trace)
        out << row.iteration << ',' << format_double(row.train_loss) << ','
            << format_double(row.val_loss) << ',' << (row.accepted ? 1 : 0) << '\n';
    write_text_file(path, out.str());
}

}  // namespace fusekit
