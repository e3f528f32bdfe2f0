// Fusion network: 4-layer feedforward net (2n -> h1 -> h2 -> n) mapping two
// concatenated posteriors to class probabilities, trained by scaled
// conjugate gradient on cross-entropy.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fusekit/common.hpp"

namespace fusekit {

struct FusionNet {
    std::vector<int> dims;  // [2n, h1, h2, n]
    // weights[l] is dims[l+1] x dims[l]; biases[l] has dims[l+1] entries.
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::uint64_t seed = 0;

    int input_dim() const { return dims.front(); }
    int output_dim() const { return dims.back(); }
    std::size_t parameter_count() const;
    std::vector<double> flatten_parameters() const;
    void load_parameters(std::span<const double> flat);
};

// Weights and biases drawn uniformly from [-1/sqrt(fan_in), +1/sqrt(fan_in)].
FusionNet fusion_net_init(const std::vector<int>& dims, std::uint64_t seed);

// One-hot rows, one per label.
Matrix encode_targets(const std::vector<int>& labels, int n_classes);

// tanh hidden layers, exponential-normalized output; returns a simplex vector.
std::vector<double> forward(const FusionNet& net, std::span<const double> input);
Matrix forward_batch(const FusionNet& net, const Matrix& inputs);

// Mean over rows of -sum_c target * log(output), outputs clamped at 1e-12.
double cross_entropy(const Matrix& targets, const Matrix& outputs);

// Analytic gradient of cross_entropy(targets, forward(inputs)) w.r.t. the
// flattened parameters; mean over rows. Returns the loss.
double value_and_gradient(const FusionNet& net, const Matrix& inputs, const Matrix& targets,
                          std::vector<double>& gradient_out);
std::vector<double> gradient(const FusionNet& net, const Matrix& inputs, const Matrix& targets);

struct TrainConfig {
    int max_epochs = 500;              // one SCG step (accepted or rejected) per epoch
    double validation_fraction = 0.25;  // held out for early stopping
    int patience = 25;                  // accepted steps without validation improvement
    double grad_tol = 1e-6;             // L2 norm of the gradient
    std::uint64_t seed = 0;             // controls the validation split
};

struct TraceRow {
    int iteration = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool accepted = false;
};

struct TrainResult {
    FusionNet net;
    std::vector<TraceRow> trace;
    std::string stop_reason;  // max_epochs | grad_tol | patience | direction_vanished
    int iterations = 0;
};

// Moller's scaled conjugate gradient on full-batch cross-entropy. Accepted
// steps have strictly non-increasing training loss; deterministic given the
// net's initial state and config.seed.
TrainResult train_scg(FusionNet net, const Matrix& inputs, const Matrix& targets,
                      const TrainConfig& config);

// argmax_k forward(net, p_x || p_s), ties to the lowest index.
int nn_fuse_decision(const FusionNet& net, const std::vector<double>& p_x,
                     const std::vector<double>& p_s);

void save_fusion_net(const FusionNet& net, const std::string& path);
FusionNet load_fusion_net(const std::string& path);
void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path);

}  // namespace fusekit
