// Metrics and the repeated-split experiment harness that trains both source
// classifiers, applies every configured fusion method and emits result tables.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fusekit/common.hpp"
#include "fusekit/dataset.hpp"

namespace fusekit {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Mean over samples of |symmetric difference| / n_atomic.
double hamming_loss(const std::vector<LabelSet>& predicted, const std::vector<LabelSet>& truth,
                    int n_atomic);

double exact_match(const std::vector<LabelSet>& predicted, const std::vector<LabelSet>& truth);

std::vector<double> per_class_f1(const std::vector<int>& predictions, const std::vector<int>& labels,
                                 int n_classes);

struct SourceConfig {
    std::string type = "forest";  // "forest" or "rnb" (rnb only for the answer source)
    int n_trees = 1000;
    int mtry = 0;  // 0 = ceil(sqrt(d))
    int min_leaf = 1;
    int bags = 1000;
    int features_per_bag = 0;  // 0 = ceil(sqrt(T))
    double smoothing = 1.0;
};

struct SplitConfig {
    std::string type = "repeated";  // "repeated" (stratified) or "fixed" (by count)
    int repeats = 5;
    int train_per_class = 15;
    int train_count = 0;  // fixed splits only
};

struct NetSpec {
    int hidden1 = 0;  // 0 = 2 * n_classes
    int hidden2 = 0;  // 0 = n_classes
    int max_epochs = 300;
    int patience = 25;
    double grad_tol = 1e-6;
};

struct ExperimentConfig {
    int schema_version = 1;
    std::string dataset_manifest;
    bool multilabel = false;
    SplitConfig split;
    SourceConfig visual;
    SourceConfig textual;
    std::vector<std::string> methods;  // of kMethodNames
    double validation_fraction = 0.25;
    NetSpec net;
    std::string prior_mode = "empirical";  // or "uniform"
    std::string output_dir;
    std::uint64_t seed = 0;  // set by the caller; stochastic stages derive from it
    int threads = 1;
};

extern const std::vector<std::string> kMethodNames;  // valid "methods" entries

ExperimentConfig load_experiment_config(const std::string& path);

struct RepeatMetrics {
    double accuracy = 0.0;
    std::optional<double> hamming_accuracy;  // 1 - Hamming loss; multilabel runs
    std::optional<double> exact_match;
    std::vector<double> per_class_f1;  // atomic labels in multilabel runs
};

struct MethodResult {
    std::string method;
    std::vector<RepeatMetrics> repeats;
};

struct MetricSummary {
    double mean = 0.0;
    double std_dev = 0.0;  // sample standard deviation; 0 for one repeat
    double min = 0.0;
    double max = 0.0;
};

MetricSummary summarize(const std::vector<double>& values);

struct ExperimentResult {
    std::string dataset_name;
    std::string split_mode;  // records whether fixed or repeated splits were used
    bool multilabel = false;
    int n_repeats = 0;
    std::vector<std::string> class_f1_names;  // row names for per-class F1 output
    std::vector<MethodResult> methods;

    const MethodResult& method(const std::string& name) const;
    MetricSummary accuracy_summary(const std::string& name) const;
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// report.csv + report.txt + runs.csv + per_class_f1.csv in out_dir;
// byte-stable for a fixed result.
void write_report(const ExperimentResult& result, const std::string& out_dir);

// Re-renders the aligned text table from a runs.csv written by write_report.
std::string render_report_from_runs(const std::string& runs_csv_path);

}  // namespace fusekit
