#include "fusekit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "fusekit/bayes.hpp"
#include "fusekit/csv.hpp"
#include "fusekit/forest.hpp"
#include "fusekit/fusion.hpp"
#include "fusekit/neural.hpp"
#include "json.hpp"

namespace fusekit {

namespace fs = std::filesystem;
using nlohmann::json;

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty() || predictions.size() != labels.size())
        throw validation_error("accuracy: empty input or length mismatch");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == labels[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double hamming_loss(const std::vector<LabelSet>& predicted, const std::vector<LabelSet>& truth,
                    int n_atomic) {
    if (predicted.empty() || predicted.size() != truth.size())
        throw validation_error("hamming_loss: empty input or length mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        for (const LabelSet* set : {&predicted[i], &truth[i]})
            for (int a : *set)
                if (a < 0 || a >= n_atomic)
                    throw validation_error("hamming_loss: atomic index " + std::to_string(a) +
                                           " outside [0, " + std::to_string(n_atomic) + ")");
        std::vector<int> diff;
        std::set_symmetric_difference(predicted[i].begin(), predicted[i].end(), truth[i].begin(),
                                      truth[i].end(), std::back_inserter(diff));
        total += static_cast<double>(diff.size()) / static_cast<double>(n_atomic);
    }
    return total / static_cast<double>(predicted.size());
}

double exact_match(const std::vector<LabelSet>& predicted, const std::vector<LabelSet>& truth) {
    if (predicted.empty() || predicted.size() != truth.size())
        throw validation_error("exact_match: empty input or length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == truth[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::vector<double> per_class_f1(const std::vector<int>& predictions, const std::vector<int>& labels,
                                 int n_classes) {
    if (predictions.size() != labels.size())
        throw validation_error("per_class_f1: length mismatch");
    std::vector<double> tp(n_classes, 0.0), fp(n_classes, 0.0), fn(n_classes, 0.0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int p = predictions[i];
        const int t = labels[i];
        if (p == t && p >= 0) tp[p] += 1.0;
        else {
            if (p >= 0 && p < n_classes) fp[p] += 1.0;
            if (t >= 0 && t < n_classes) fn[t] += 1.0;
        }
    }
    std::vector<double> f1(n_classes, 0.0);
    for (int c = 0; c < n_classes; ++c) {
        const double denom = 2.0 * tp[c] + fp[c] + fn[c];
        f1[c] = denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
    }
    return f1;
}

MetricSummary summarize(const std::vector<double>& values) {
    if (values.empty()) throw validation_error("summarize: no values");
    MetricSummary s;
    s.min = values.front();
    s.max = values.front();
    double sum = 0.0;
    for (double v : values) {
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

const std::vector<std::string> kMethodNames = {
    "visual-only", "textual-only", "concat", "equal-weight", "modified-nb", "neural-net"};

namespace {

SourceConfig parse_source(const json& j, const std::string& context) {
    SourceConfig cfg;
    cfg.type = j.value("type", cfg.type);
    if (cfg.type != "forest" && cfg.type != "rnb")
        throw validation_error(context + ": type must be 'forest' or 'rnb'");
    cfg.n_trees = j.value("n_trees", cfg.n_trees);
    cfg.mtry = j.value("mtry", cfg.mtry);
    cfg.min_leaf = j.value("min_leaf", cfg.min_leaf);
    cfg.bags = j.value("bags", cfg.bags);
    cfg.features_per_bag = j.value("features_per_bag", cfg.features_per_bag);
    cfg.smoothing = j.value("smoothing", cfg.smoothing);
    return cfg;
}

}  // namespace

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open config: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw validation_error("config " + path + ": " + e.what());
    }

    ExperimentConfig cfg;
    try {
        cfg.schema_version = j.at("schema_version").get<int>();
        if (cfg.schema_version != 1)
            throw validation_error("config " + path + ": unsupported schema_version " +
                                   std::to_string(cfg.schema_version));
        const fs::path base = fs::path(path).parent_path();
        cfg.dataset_manifest = (base / j.at("dataset").get<std::string>()).string();
        cfg.multilabel = j.value("multilabel", false);
        if (j.contains("split")) {
            const json& s = j["split"];
            cfg.split.type = s.value("type", cfg.split.type);
            cfg.split.repeats = s.value("repeats", cfg.split.repeats);
            cfg.split.train_per_class = s.value("train_per_class", cfg.split.train_per_class);
            cfg.split.train_count = s.value("train_count", cfg.split.train_count);
        }
        if (cfg.split.type != "repeated" && cfg.split.type != "fixed")
            throw validation_error("config " + path + ": split.type must be 'repeated' or 'fixed'");
        if (j.contains("visual")) cfg.visual = parse_source(j["visual"], "config visual");
        if (j.contains("textual")) cfg.textual = parse_source(j["textual"], "config textual");
        if (cfg.visual.type == "rnb")
            throw validation_error("config " + path + ": the visual source cannot use rnb");
        cfg.methods = j.at("methods").get<std::vector<std::string>>();
        cfg.validation_fraction = j.value("validation_fraction", cfg.validation_fraction);
        if (j.contains("net")) {
            const json& n = j["net"];
            cfg.net.hidden1 = n.value("hidden1", cfg.net.hidden1);
            cfg.net.hidden2 = n.value("hidden2", cfg.net.hidden2);
            cfg.net.max_epochs = n.value("max_epochs", cfg.net.max_epochs);
            cfg.net.patience = n.value("patience", cfg.net.patience);
            cfg.net.grad_tol = n.value("grad_tol", cfg.net.grad_tol);
        }
        cfg.prior_mode = j.value("prior", cfg.prior_mode);
        if (cfg.prior_mode != "empirical" && cfg.prior_mode != "uniform")
            throw validation_error("config " + path + ": prior must be 'empirical' or 'uniform'");
        if (j.contains("output_dir"))
            cfg.output_dir = (base / j.at("output_dir").get<std::string>()).string();
    } catch (const json::exception& e) {
        throw validation_error("config " + path + ": " + e.what());
    }

    if (cfg.methods.empty())
        throw validation_error("config " + path + ": at least one method required");
    for (const auto& m : cfg.methods)
        if (std::find(kMethodNames.begin(), kMethodNames.end(), m) == kMethodNames.end())
            throw validation_error("config " + path + ": unknown method '" + m + "'");
    return cfg;
}

namespace {

struct RepeatData {
    std::vector<std::vector<double>> fit_features, fit_answers;
    std::vector<int> fit_labels;
    std::vector<std::vector<double>> val_features, val_answers;
    std::vector<int> val_labels;
    std::vector<std::vector<double>> test_features, test_answers;
    std::vector<int> test_labels;  // -1 for test combinations unseen in training
    int n_classes = 0;
};

// Posterior provider over one source; forest or rnb behind one call.
struct FittedSource {
    std::optional<Forest> forest;
    std::optional<RnbEnsemble> rnb;

    Matrix predict(const std::vector<std::vector<double>>& rows, int threads) const {
        if (forest) return forest_posterior_batch(*forest, rows, threads);
        return rnb_posterior_batch(*rnb, rows, threads);
    }
};

FittedSource fit_source(const SourceConfig& cfg, const std::vector<std::vector<double>>& rows,
                        const std::vector<int>& labels, int n_classes, std::uint64_t seed,
                        int threads) {
    FittedSource fitted;
    if (cfg.type == "forest") {
        ForestConfig fc;
        fc.n_trees = cfg.n_trees;
        fc.mtry = cfg.mtry;
        fc.min_leaf = cfg.min_leaf;
        fc.threads = threads;
        fitted.forest = forest_fit(rows, labels, n_classes, fc, seed);
    } else {
        RnbConfig rc;
        rc.n_bags = cfg.bags;
        rc.features_per_bag = cfg.features_per_bag;
        rc.smoothing = cfg.smoothing;
        rc.threads = threads;
        fitted.rnb = rnb_fit(rows, labels, n_classes, rc, seed);
    }
    return fitted;
}

std::vector<int> row_argmax(const Matrix& m) {
    std::vector<int> out(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) out[i] = static_cast<int>(argmax(m.row(i)));
    return out;
}

}  // namespace

const MethodResult& ExperimentResult::method(const std::string& name) const {
    for (const auto& m : methods)
        if (m.method == name) return m;
    throw validation_error("no results for method '" + name + "'");
}

MetricSummary ExperimentResult::accuracy_summary(const std::string& name) const {
    const MethodResult& m = method(name);
    std::vector<double> acc;
    for (const auto& r : m.repeats) acc.push_back(r.accuracy);
    return summarize(acc);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const Dataset ds = load_dataset(config.dataset_manifest);
    const bool multilabel = config.multilabel || ds.multilabel;
    if (config.validation_fraction <= 0.0 || config.validation_fraction >= 1.0)
        throw validation_error("run_experiment: validation_fraction must be in (0, 1)");
    if (config.split.repeats < 1) throw validation_error("run_experiment: repeats must be >= 1");
    if (multilabel && config.split.type == "repeated")
        throw validation_error(
            "run_experiment: multilabel datasets use split.type 'fixed' (stratified repeated "
            "splits are undefined for rare label combinations)");

    // Methods in canonical order, solo baselines always included.
    std::vector<std::string> methods = {"visual-only", "textual-only"};
    for (const auto& name : kMethodNames)
        if (std::find(config.methods.begin(), config.methods.end(), name) != config.methods.end() &&
            std::find(methods.begin(), methods.end(), name) == methods.end())
            methods.push_back(name);

    ExperimentResult result;
    result.dataset_name = ds.name;
    result.multilabel = multilabel;
    result.n_repeats = config.split.repeats;
    if (config.split.type == "repeated") {
        result.split_mode = "repeated(train_per_class=" + std::to_string(config.split.train_per_class) +
                            ", repeats=" + std::to_string(config.split.repeats) + ")";
    } else {
        result.split_mode = "fixed(train_count=" + std::to_string(config.split.train_count) +
                            ", repeats=" + std::to_string(config.split.repeats) + ")";
    }
    for (const auto& m : methods) result.methods.push_back({m, {}});

    // Per-class F1 rows: dense classes, or atomic labels for multilabel runs.
    result.class_f1_names = ds.label_names;

    std::vector<SplitPair> splits;
    if (config.split.type == "repeated") {
        splits = repeated_subsample_splits(ds, config.split.repeats, config.split.train_per_class,
                                           mix_seed(config.seed, 0x5b11));
    } else {
        if (config.split.train_count <= 0)
            throw validation_error("run_experiment: fixed split needs train_count > 0");
        for (int r = 0; r < config.split.repeats; ++r)
            splits.push_back(fixed_split(ds, config.split.train_count, mix_seed(config.seed, 0x5b11, r)));
    }

    for (int rep = 0; rep < config.split.repeats; ++rep) {
        const SplitPair& split = splits[rep];

        // Per-repeat label space (the powerset codebook is training-derived).
        std::vector<int> labels(ds.size(), -1);
        int n_classes = 0;
        PowersetCodebook codebook;
        if (multilabel) {
            std::vector<LabelSet> train_sets;
            train_sets.reserve(split.train.size());
            for (std::size_t i : split.train) train_sets.push_back(ds.label_sets[i]);
            auto [book, train_labels] = powerset_encode(train_sets);
            codebook = std::move(book);
            n_classes = codebook.size();
            for (std::size_t k = 0; k < split.train.size(); ++k)
                labels[split.train[k]] = train_labels[k];
            for (std::size_t i : split.test) labels[i] = codebook.lookup(ds.label_sets[i]);
        } else {
            for (std::size_t i = 0; i < ds.size(); ++i) labels[i] = ds.samples[i].label;
            n_classes = ds.n_classes;
        }

        auto [fit_idx, val_idx] = stratified_holdout(labels, split.train, config.validation_fraction,
                                                     mix_seed(config.seed, rep, 1));

        RepeatData data;
        data.n_classes = n_classes;
        auto gather = [&](const std::vector<std::size_t>& idx,
                          std::vector<std::vector<double>>& feats,
                          std::vector<std::vector<double>>& answers, std::vector<int>& lbls) {
            for (std::size_t i : idx) {
                feats.push_back(ds.samples[i].features);
                answers.push_back(ds.samples[i].answers);
                lbls.push_back(labels[i]);
            }
        };
        gather(fit_idx, data.fit_features, data.fit_answers, data.fit_labels);
        gather(val_idx, data.val_features, data.val_answers, data.val_labels);
        gather(split.test, data.test_features, data.test_answers, data.test_labels);

        // Class prior from the fitted subset (or uniform).
        std::vector<double> prior(n_classes, 0.0);
        if (config.prior_mode == "uniform") {
            std::fill(prior.begin(), prior.end(), 1.0 / n_classes);
        } else {
            for (int label : data.fit_labels) prior[label] += 1.0;
            for (double& p : prior) p /= static_cast<double>(data.fit_labels.size());
            // Strictly positive prior needed by the fusion rules.
            bool any_zero = false;
            for (double p : prior)
                if (p == 0.0) any_zero = true;
            if (any_zero) {
                const double eps = 0.5 / static_cast<double>(data.fit_labels.size());
                for (double& p : prior) p += eps;
                normalize(prior);
            }
        }

        const FittedSource visual = fit_source(config.visual, data.fit_features, data.fit_labels,
                                               n_classes, mix_seed(config.seed, rep, 2), config.threads);
        const FittedSource textual = fit_source(config.textual, data.fit_answers, data.fit_labels,
                                                n_classes, mix_seed(config.seed, rep, 3), config.threads);

        const Matrix px_test = visual.predict(data.test_features, config.threads);
        const Matrix ps_test = textual.predict(data.test_answers, config.threads);

        const bool needs_val =
            std::find(methods.begin(), methods.end(), "modified-nb") != methods.end() ||
            std::find(methods.begin(), methods.end(), "neural-net") != methods.end();
        Matrix px_val, ps_val;
        if (needs_val) {
            px_val = visual.predict(data.val_features, config.threads);
            ps_val = textual.predict(data.val_answers, config.threads);
        }

        auto score_method = [&](const std::string& name, const std::vector<int>& predictions) {
            RepeatMetrics metrics;
            metrics.accuracy = accuracy(predictions, data.test_labels);
            if (multilabel) {
                std::vector<LabelSet> pred_sets, true_sets;
                pred_sets.reserve(predictions.size());
                for (std::size_t i = 0; i < predictions.size(); ++i) {
                    pred_sets.push_back(codebook.decode(predictions[i]));
                    true_sets.push_back(ds.label_sets[split.test[i]]);
                }
                metrics.hamming_accuracy = 1.0 - hamming_loss(pred_sets, true_sets, ds.n_classes);
                metrics.exact_match = exact_match(pred_sets, true_sets);
                // Atomic-label F1: binary presence per atomic label.
                std::vector<double> tp(ds.n_classes, 0.0), fp(ds.n_classes, 0.0), fn(ds.n_classes, 0.0);
                for (std::size_t i = 0; i < pred_sets.size(); ++i) {
                    for (int a : pred_sets[i])
                        if (std::binary_search(true_sets[i].begin(), true_sets[i].end(), a)) tp[a] += 1.0;
                        else fp[a] += 1.0;
                    for (int a : true_sets[i])
                        if (!std::binary_search(pred_sets[i].begin(), pred_sets[i].end(), a)) fn[a] += 1.0;
                }
                metrics.per_class_f1.resize(ds.n_classes);
                for (int c = 0; c < ds.n_classes; ++c) {
                    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
                    metrics.per_class_f1[c] = denom > 0.0 ? 2.0 * tp[c] / denom : 0.0;
                }
            } else {
                metrics.per_class_f1 = per_class_f1(predictions, data.test_labels, n_classes);
            }
            for (auto& m : result.methods)
                if (m.method == name) m.repeats.push_back(std::move(metrics));
        };

        auto run_method = [&](const std::string& name) {
            if (name == "visual-only") {
                score_method(name, row_argmax(px_test));
            } else if (name == "textual-only") {
                score_method(name, row_argmax(ps_test));
            } else if (name == "concat") {
                std::vector<std::vector<double>> fit_concat, test_concat;
                for (std::size_t i = 0; i < data.fit_features.size(); ++i)
                    fit_concat.push_back(concat_features(data.fit_features[i], data.fit_answers[i]));
                for (std::size_t i = 0; i < data.test_features.size(); ++i)
                    test_concat.push_back(concat_features(data.test_features[i], data.test_answers[i]));
                SourceConfig concat_cfg = config.visual;
                concat_cfg.type = "forest";
                const FittedSource model = fit_source(concat_cfg, fit_concat, data.fit_labels,
                                                      n_classes, mix_seed(config.seed, rep, 4),
                                                      config.threads);
                score_method(name, row_argmax(model.predict(test_concat, config.threads)));
            } else if (name == "equal-weight") {
                const auto fused =
                    fuse_batch(px_test, ps_test, prior, FusionMethod::equal_weight);
                score_method(name, fused.predictions);
            } else if (name == "modified-nb") {
                // Thresholds minimize the empirical risk of the fused
                // classifier on the held-in validation posteriors.
                const ThresholdTable table =
                    greedy_threshold_search(px_val, ps_val, data.val_labels, prior);
                const auto fused =
                    fuse_batch(px_test, ps_test, prior, FusionMethod::modified_nb, table);
                score_method(name, fused.predictions);
            } else if (name == "neural-net") {
                Matrix net_inputs(px_val.rows(), 2 * n_classes);
                for (std::size_t i = 0; i < px_val.rows(); ++i) {
                    for (int c = 0; c < n_classes; ++c) {
                        net_inputs.at(i, c) = px_val.at(i, c);
                        net_inputs.at(i, n_classes + c) = ps_val.at(i, c);
                    }
                }
                const Matrix net_targets = encode_targets(data.val_labels, n_classes);
                const int h1 = config.net.hidden1 > 0 ? config.net.hidden1 : 2 * n_classes;
                const int h2 = config.net.hidden2 > 0 ? config.net.hidden2 : n_classes;
                FusionNet net = fusion_net_init({2 * n_classes, h1, h2, n_classes},
                                                mix_seed(config.seed, rep, 5));
                TrainConfig tc;
                tc.max_epochs = config.net.max_epochs;
                tc.patience = config.net.patience;
                tc.grad_tol = config.net.grad_tol;
                tc.seed = mix_seed(config.seed, rep, 6);
                const TrainResult trained = train_scg(std::move(net), net_inputs, net_targets, tc);
                std::vector<int> predictions(px_test.rows());
                for (std::size_t i = 0; i < px_test.rows(); ++i)
                    predictions[i] = nn_fuse_decision(trained.net, px_test.row_vec(i),
                                                      ps_test.row_vec(i));
                score_method(name, predictions);
            }
        };
        for (const auto& name : methods) {
            try {
                run_method(name);
            } catch (const validation_error& e) {
                throw validation_error("method '" + name + "', repeat " + std::to_string(rep) +
                                       ": " + e.what());
            }
        }
    }
    return result;
}

namespace {

std::string fmt_fixed(double v, int digits) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

}  // namespace

void write_report(const ExperimentResult& result, const std::string& out_dir) {
    fs::create_directories(out_dir);
    const fs::path base(out_dir);
    const bool ml = result.multilabel;

    // runs.csv: raw per-repeat metrics.
    {
        std::ostringstream out;
        out << "method,repeat,accuracy";
        if (ml) out << ",hamming_accuracy,exact_match";
        out << '\n';
        for (const auto& m : result.methods)
            for (std::size_t r = 0; r < m.repeats.size(); ++r) {
                out << csv_escape(m.method) << ',' << r << ','
                    << format_double(m.repeats[r].accuracy);
                if (ml)
                    out << ',' << format_double(m.repeats[r].hamming_accuracy.value_or(0.0)) << ','
                        << format_double(m.repeats[r].exact_match.value_or(0.0));
                out << '\n';
            }
        write_text_file((base / "runs.csv").string(), out.str());
    }

    // report.csv: aggregated summaries.
    {
        std::ostringstream out;
        out << "method,metric,mean,std,min,max\n";
        auto emit = [&](const std::string& method, const std::string& metric,
                        const std::vector<double>& values) {
            const MetricSummary s = summarize(values);
            out << csv_escape(method) << ',' << metric << ',' << format_double(s.mean) << ','
                << format_double(s.std_dev) << ',' << format_double(s.min) << ','
                << format_double(s.max) << '\n';
        };
        for (const auto& m : result.methods) {
            std::vector<double> acc, ham, ex;
            for (const auto& r : m.repeats) {
                acc.push_back(r.accuracy);
                if (r.hamming_accuracy) ham.push_back(*r.hamming_accuracy);
                if (r.exact_match) ex.push_back(*r.exact_match);
            }
            emit(m.method, "accuracy", acc);
            if (!ham.empty()) emit(m.method, "hamming_accuracy", ham);
            if (!ex.empty()) emit(m.method, "exact_match", ex);
        }
        write_text_file((base / "report.csv").string(), out.str());
    }

    // per_class_f1.csv: mean F1 per class per method.
    {
        std::ostringstream out;
        out << "method,class,f1_mean\n";
        for (const auto& m : result.methods) {
            if (m.repeats.empty()) continue;
            const std::size_t n = m.repeats.front().per_class_f1.size();
            for (std::size_t c = 0; c < n; ++c) {
                double sum = 0.0;
                for (const auto& r : m.repeats) sum += r.per_class_f1[c];
                const std::string cls = c < result.class_f1_names.size()
                                            ? result.class_f1_names[c]
                                            : "class_" + std::to_string(c);
                out << csv_escape(m.method) << ',' << csv_escape(cls) << ','
                    << format_double(sum / static_cast<double>(m.repeats.size())) << '\n';
            }
        }
        write_text_file((base / "per_class_f1.csv").string(), out.str());
    }

    // report.txt: aligned table.
    {
        std::ostringstream out;
        out << "dataset: " << result.dataset_name << '\n';
        out << "split:   " << result.split_mode << '\n';
        out << "repeats: " << result.n_repeats << '\n';
        out << '\n';
        std::size_t width = 12;
        for (const auto& m : result.methods) width = std::max(width, m.method.size() + 2);
        out << std::left << std::setw(static_cast<int>(width)) << "method"
            << std::setw(20) << "accuracy";
        if (ml) out << std::setw(20) << "hamming_acc" << std::setw(20) << "exact_match";
        out << '\n';
        for (const auto& m : result.methods) {
            std::vector<double> acc, ham, ex;
            for (const auto& r : m.repeats) {
                acc.push_back(r.accuracy);
                if (r.hamming_accuracy) ham.push_back(*r.hamming_accuracy);
                if (r.exact_match) ex.push_back(*r.exact_match);
            }
            const MetricSummary a = summarize(acc);
            out << std::left << std::setw(static_cast<int>(width)) << m.method
                << std::setw(20) << (fmt_fixed(a.mean, 4) + " +/- " + fmt_fixed(a.std_dev, 4));
            if (ml) {
                const MetricSummary h = summarize(ham);
                const MetricSummary e = summarize(ex);
                out << std::setw(20) << (fmt_fixed(h.mean, 4) + " +/- " + fmt_fixed(h.std_dev, 4))
                    << std::setw(20) << (fmt_fixed(e.mean, 4) + " +/- " + fmt_fixed(e.std_dev, 4));
            }
            out << '\n';
        }
        write_text_file((base / "report.txt").string(), out.str());
    }
}

std::string render_report_from_runs(const std::string& runs_csv_path) {
    const auto lines = read_lines(runs_csv_path);
    if (lines.empty()) throw validation_error(runs_csv_path + ": empty runs file");
    const auto header = split_csv_line(lines[0]);
    if (header.size() < 3 || header[0] != "method" || header[1] != "repeat")
        throw validation_error(runs_csv_path + ": not a fusekit runs.csv");

    std::vector<std::string> order;
    std::map<std::string, std::vector<std::vector<double>>> metric_values;  // method -> per metric
    const std::size_t n_metrics = header.size() - 2;
    for (std::size_t r = 1; r < lines.size(); ++r) {
        if (lines[r].empty()) continue;
        const auto cells = split_csv_line(lines[r]);
        if (cells.size() != header.size())
            throw validation_error(runs_csv_path + " row " + std::to_string(r) + ": bad width");
        const std::string& method = cells[0];
        auto it = metric_values.find(method);
        if (it == metric_values.end()) {
            order.push_back(method);
            it = metric_values.emplace(method, std::vector<std::vector<double>>(n_metrics)).first;
        }
        for (std::size_t m = 0; m < n_metrics; ++m)
            it->second[m].push_back(parse_double(cells[2 + m], runs_csv_path));
    }

    std::ostringstream out;
    std::size_t width = 12;
    for (const auto& m : order) width = std::max(width, m.size() + 2);
    out << std::left << std::setw(static_cast<int>(width)) << "method";
    for (std::size_t m = 0; m < n_metrics; ++m) out << std::setw(20) << header[2 + m];
    out << '\n';
    for (const auto& method : order) {
        out << std::left << std::setw(static_cast<int>(width)) << method;
        for (const auto& values : metric_values.at(method)) {
            const MetricSummary s = summarize(values);
            out << std::setw(20) << (fmt_fixed(s.mean, 4) + " +/- " + fmt_fixed(s.std_dev, 4));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace fusekit
