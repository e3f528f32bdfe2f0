// fusekit command line: synthetic data generation, source classifier
// training, posterior prediction, fusion and the evaluation harness.
//
// Exit codes: 0 success, 2 usage error, 3 file error, 4 schema/validation
// error, 1 any other failure.
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fusekit/bayes.hpp"
#include "fusekit/csv.hpp"
#include "fusekit/dataset.hpp"
#include "fusekit/eval.hpp"
#include "fusekit/forest.hpp"
#include "fusekit/fusion.hpp"
#include "fusekit/neural.hpp"
#include "fusekit/synth.hpp"

namespace fs = std::filesystem;
using namespace fusekit;

namespace {

std::vector<std::vector<double>> gather_rows(const Dataset& ds, const std::string& source) {
    std::vector<std::vector<double>> rows;
    rows.reserve(ds.size());
    for (const Sample& s : ds.samples) {
        if (source == "features") rows.push_back(s.features);
        else if (source == "answers") rows.push_back(s.answers);
        else rows.push_back(concat_features(s.features, s.answers));
    }
    return rows;
}

std::vector<int> single_labels(const Dataset& ds) {
    if (ds.multilabel)
        throw validation_error("dataset '" + ds.name +
                               "' is multilabel; the stage-wise commands handle single-label data, "
                               "use 'eval' with a multilabel config instead");
    return ds.labels();
}

std::string detect_source(const Dataset& ds, int model_dim, const std::string& requested) {
    if (requested != "auto") return requested;
    std::vector<std::string> matching;
    if (model_dim == ds.feature_dim) matching.push_back("features");
    if (model_dim == ds.n_tags) matching.push_back("answers");
    if (model_dim == ds.feature_dim + ds.n_tags) matching.push_back("concat");
    if (matching.size() == 1) return matching.front();
    if (matching.empty())
        throw validation_error("model input dimension " + std::to_string(model_dim) +
                               " matches neither features, answers nor their concatenation");
    throw validation_error("model input dimension is ambiguous for this dataset; pass --source");
}

std::vector<double> load_prior(const std::string& path, std::size_t n_classes) {
    const Matrix m = read_csv_matrix(path);
    if (m.rows() != 1 || m.cols() != n_classes)
        throw validation_error(path + ": prior file must be one row of " +
                               std::to_string(n_classes) + " values");
    return m.row_vec(0);
}

Matrix posteriors_to_inputs(const Matrix& px, const Matrix& ps) {
    if (px.rows() != ps.rows() || px.cols() != ps.cols())
        throw validation_error("posterior matrices are not congruent");
    Matrix inputs(px.rows(), 2 * px.cols());
    for (std::size_t i = 0; i < px.rows(); ++i) {
        for (std::size_t c = 0; c < px.cols(); ++c) {
            inputs.at(i, c) = px.at(i, c);
            inputs.at(i, px.cols() + c) = ps.at(i, c);
        }
    }
    return inputs;
}

void write_predictions(const std::string& path, const std::vector<int>& predictions) {
    std::string out = "prediction\n";
    for (int p : predictions) out += std::to_string(p) + "\n";
    write_text_file(path, out);
}

int run(int argc, char** argv) {
    CLI::App app{"fusekit: classifier fusion toolkit for two heterogeneous information sources"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_spec, synth_out;
    std::uint64_t synth_seed = 0;
    synth->add_option("--spec", synth_spec, "generator spec (json)")->required();
    synth->add_option("--seed", synth_seed, "rng seed")->required();
    synth->add_option("--out", synth_out, "output directory")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "train a source classifier");
    std::string fit_manifest, fit_type = "forest", fit_source_kind = "features", fit_out;
    std::uint64_t fit_seed = 0;
    int fit_trees = 1000, fit_mtry = 0, fit_min_leaf = 1;
    int fit_bags = 1000, fit_fpb = 0, fit_threads = 0;
    double fit_smoothing = 1.0;
    bool fit_no_bootstrap = false;
    fit->add_option("--manifest", fit_manifest, "dataset manifest")->required();
    fit->add_option("--model-type", fit_type, "forest|rnb")
        ->check(CLI::IsMember({"forest", "rnb"}));
    fit->add_option("--source", fit_source_kind, "features|answers|concat")
        ->check(CLI::IsMember({"features", "answers", "concat"}));
    fit->add_option("--out", fit_out, "model output file")->required();
    fit->add_option("--seed", fit_seed, "rng seed")->required();
    fit->add_option("--trees", fit_trees, "forest: number of trees");
    fit->add_option("--mtry", fit_mtry, "forest: features per split (0 = sqrt)");
    fit->add_option("--min-leaf", fit_min_leaf, "forest: minimum samples per child");
    fit->add_option("--bags", fit_bags, "rnb: number of bags");
    fit->add_option("--features-per-bag", fit_fpb, "rnb: tags per bag (0 = sqrt)");
    fit->add_option("--smoothing", fit_smoothing, "rnb: additive smoothing");
    fit->add_flag("--no-bootstrap", fit_no_bootstrap, "disable bootstrap resampling");
    fit->add_option("--threads", fit_threads, "worker threads (0 = cores)");

    // predict
    auto* predict = app.add_subcommand("predict", "emit a posterior matrix for a dataset");
    std::string pred_manifest, pred_model, pred_out, pred_source = "auto";
    int pred_threads = 0;
    predict->add_option("--manifest", pred_manifest, "dataset manifest")->required();
    predict->add_option("--model", pred_model, "model file")->required();
    predict->add_option("--out", pred_out, "posterior csv output")->required();
    predict->add_option("--source", pred_source, "features|answers|concat|auto")
        ->check(CLI::IsMember({"features", "answers", "concat", "auto"}));
    predict->add_option("--threads", pred_threads, "worker threads (0 = cores)");

    // grid-thresholds
    auto* grid = app.add_subcommand("grid-thresholds",
                                    "learn per-class thresholds from held-in posteriors");
    std::string grid_px, grid_ps, grid_manifest, grid_out, grid_objective = "source-f1",
                grid_prior_file;
    grid->add_option("--posteriors-x", grid_px, "visual-source posterior csv")->required();
    grid->add_option("--posteriors-s", grid_ps, "answer-source posterior csv")->required();
    grid->add_option("--manifest", grid_manifest, "dataset manifest providing the labels")->required();
    grid->add_option("--out", grid_out, "threshold table output")->required();
    grid->add_option("--objective", grid_objective,
                     "source-f1: per-source confidence F1; fused-f1: greedy empirical risk "
                     "of the fused classifier")
        ->check(CLI::IsMember({"source-f1", "fused-f1"}));
    grid->add_option("--prior-file", grid_prior_file, "class prior csv (fused-f1; default uniform)");

    // fuse
    auto* fuse = app.add_subcommand("fuse", "fuse two posterior matrices");
    std::string fuse_px, fuse_ps, fuse_method, fuse_out, fuse_thresholds, fuse_model,
        fuse_prior_file, fuse_pred_out;
    fuse->add_option("--posteriors-x", fuse_px, "visual-source posterior csv")->required();
    fuse->add_option("--posteriors-s", fuse_ps, "answer-source posterior csv")->required();
    fuse->add_option("--method", fuse_method, "equal-weight|modified-nb|neural-net")
        ->required()
        ->check(CLI::IsMember({"equal-weight", "modified-nb", "neural-net"}));
    fuse->add_option("--out", fuse_out, "fused posterior csv output")->required();
    fuse->add_option("--thresholds", fuse_thresholds, "threshold table (modified-nb)");
    fuse->add_option("--model", fuse_model, "fusion net model (neural-net)");
    fuse->add_option("--prior-file", fuse_prior_file, "class prior csv (default uniform)");
    fuse->add_option("--predictions", fuse_pred_out, "also write predicted class indices");

    // train-net
    auto* train = app.add_subcommand("train-net", "train the fusion network on posterior pairs");
    std::string train_px, train_ps, train_manifest, train_out, train_trace;
    std::uint64_t train_seed = 0;
    int train_h1 = 0, train_h2 = 0, train_epochs = 300, train_patience = 25;
    double train_val_fraction = 0.25, train_grad_tol = 1e-6;
    train->add_option("--posteriors-x", train_px, "visual-source posterior csv")->required();
    train->add_option("--posteriors-s", train_ps, "answer-source posterior csv")->required();
    train->add_option("--manifest", train_manifest, "dataset manifest providing the labels")->required();
    train->add_option("--out", train_out, "net model output")->required();
    train->add_option("--seed", train_seed, "rng seed")->required();
    train->add_option("--hidden1", train_h1, "first hidden width (0 = 2n)");
    train->add_option("--hidden2", train_h2, "second hidden width (0 = n)");
    train->add_option("--max-epochs", train_epochs, "scg iteration budget");
    train->add_option("--patience", train_patience, "early-stop patience");
    train->add_option("--val-fraction", train_val_fraction, "held-out fraction");
    train->add_option("--grad-tol", train_grad_tol, "gradient norm tolerance");
    train->add_option("--trace", train_trace, "loss trace csv output");

    // eval
    auto* eval = app.add_subcommand("eval", "run the full experiment harness");
    std::string eval_config, eval_out;
    std::uint64_t eval_seed = 0;
    int eval_threads = 0;
    eval->add_option("--config", eval_config, "experiment config (json)")->required();
    eval->add_option("--seed", eval_seed, "rng seed")->required();
    eval->add_option("--out", eval_out, "report directory (overrides config output_dir)");
    eval->add_option("--threads", eval_threads, "worker threads (0 = cores)");

    // report
    auto* report = app.add_subcommand("report", "re-render the aggregate table from runs.csv");
    std::string report_runs, report_out;
    report->add_option("--runs", report_runs, "runs.csv from a previous eval")->required();
    report->add_option("--out", report_out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);  // prints help text or the usage diagnostic
        return code == 0 ? 0 : 2;
    }

    if (synth->parsed()) {
        const SynthSpec spec = SynthSpec::from_json_file(synth_spec);
        const Dataset ds = synth_generate(spec, synth_seed);
        save_dataset(ds, synth_out);
        std::cout << "wrote " << ds.size() << " samples to " << synth_out << '\n';
    } else if (fit->parsed()) {
        const Dataset ds = load_dataset(fit_manifest);
        const std::vector<int> labels = single_labels(ds);
        if (fit_type == "rnb") {
            if (fit->get_option("--source")->count() > 0 && fit_source_kind != "answers")
                throw validation_error("rnb models train on the answer source");
            RnbConfig cfg;
            cfg.n_bags = fit_bags;
            cfg.features_per_bag = fit_fpb;
            cfg.smoothing = fit_smoothing;
            cfg.bootstrap = !fit_no_bootstrap;
            cfg.threads = fit_threads;
            const RnbEnsemble model =
                rnb_fit(gather_rows(ds, "answers"), labels, ds.n_classes, cfg, fit_seed);
            save_rnb(model, fit_out);
        } else {
            ForestConfig cfg;
            cfg.n_trees = fit_trees;
            cfg.mtry = fit_mtry;
            cfg.min_leaf = fit_min_leaf;
            cfg.bootstrap = !fit_no_bootstrap;
            cfg.threads = fit_threads;
            const Forest model =
                forest_fit(gather_rows(ds, fit_source_kind), labels, ds.n_classes, cfg, fit_seed);
            save_forest(model, fit_out);
        }
        std::cout << "wrote model to " << fit_out << '\n';
    } else if (predict->parsed()) {
        const Dataset ds = load_dataset(pred_manifest);
        const auto lines = read_lines(pred_model);
        if (lines.empty()) throw validation_error(pred_model + ": empty model file");
        Matrix posteriors;
        int model_classes = 0;
        if (lines[0] == "fusekit-model forest v1") {
            const Forest model = load_forest(pred_model);
            model_classes = model.n_classes;
            const std::string source = detect_source(ds, model.dim, pred_source);
            posteriors = forest_posterior_batch(model, gather_rows(ds, source), pred_threads);
        } else if (lines[0] == "fusekit-model rnb v1") {
            const RnbEnsemble model = load_rnb(pred_model);
            model_classes = model.n_classes;
            posteriors = rnb_posterior_batch(model, gather_rows(ds, "answers"), pred_threads);
        } else {
            throw validation_error(pred_model + ": unknown model type");
        }
        if (model_classes != ds.n_classes)
            throw validation_error("model has " + std::to_string(model_classes) +
                                   " classes but dataset has " + std::to_string(ds.n_classes));
        write_posterior_csv(pred_out, posteriors, ds.label_names);
        std::cout << "wrote posteriors to " << pred_out << '\n';
    } else if (grid->parsed()) {
        const PosteriorFile px = read_posterior_csv(grid_px);
        const PosteriorFile ps = read_posterior_csv(grid_ps);
        const Dataset ds = load_dataset(grid_manifest);
        const std::vector<int> labels = single_labels(ds);
        if (px.values.rows() != labels.size() || ps.values.rows() != labels.size())
            throw validation_error("posterior row count differs from dataset size");
        ThresholdTable table;
        if (grid_objective == "fused-f1") {
            std::vector<double> prior(px.values.cols(),
                                      1.0 / static_cast<double>(px.values.cols()));
            if (!grid_prior_file.empty()) prior = load_prior(grid_prior_file, px.values.cols());
            table = greedy_threshold_search(px.values, ps.values, labels, prior);
        } else {
            std::vector<std::string> warnings;
            table.theta_x = grid_search_thresholds(px.values, labels, &warnings);
            table.theta_s = grid_search_thresholds(ps.values, labels, &warnings);
            for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        }
        save_thresholds(table, px.class_names, grid_out);
        std::cout << "wrote thresholds to " << grid_out << '\n';
    } else if (fuse->parsed()) {
        const PosteriorFile px = read_posterior_csv(fuse_px);
        const PosteriorFile ps = read_posterior_csv(fuse_ps);
        std::vector<double> prior(px.values.cols(), 1.0 / static_cast<double>(px.values.cols()));
        if (!fuse_prior_file.empty()) prior = load_prior(fuse_prior_file, px.values.cols());

        Matrix fused;
        std::vector<int> predictions;
        if (fuse_method == "neural-net") {
            if (fuse_model.empty())
                throw CLI::RequiredError("--model is required with --method neural-net");
            const FusionNet net = load_fusion_net(fuse_model);
            const Matrix inputs = posteriors_to_inputs(px.values, ps.values);
            if (net.input_dim() != static_cast<int>(inputs.cols()))
                throw validation_error("net input width differs from posterior pair width");
            fused = forward_batch(net, inputs);
            predictions.resize(fused.rows());
            for (std::size_t i = 0; i < fused.rows(); ++i)
                predictions[i] = static_cast<int>(argmax(fused.row(i)));
        } else {
            std::optional<ThresholdTable> table;
            FusionMethod method = FusionMethod::equal_weight;
            if (fuse_method == "modified-nb") {
                if (fuse_thresholds.empty())
                    throw CLI::RequiredError("--thresholds is required with --method modified-nb");
                table = load_thresholds(fuse_thresholds);
                method = FusionMethod::modified_nb;
            }
            const FuseBatchResult result = fuse_batch(px.values, ps.values, prior, method, table);
            fused = result.fused;
            predictions = result.predictions;
        }
        write_posterior_csv(fuse_out, fused, px.class_names);
        if (!fuse_pred_out.empty()) write_predictions(fuse_pred_out, predictions);
        std::cout << "wrote fused posteriors to " << fuse_out << '\n';
    } else if (train->parsed()) {
        const PosteriorFile px = read_posterior_csv(train_px);
        const PosteriorFile ps = read_posterior_csv(train_ps);
        const Dataset ds = load_dataset(train_manifest);
        const std::vector<int> labels = single_labels(ds);
        if (px.values.rows() != labels.size())
            throw validation_error("posterior row count differs from dataset size");
        const int n = static_cast<int>(px.values.cols());
        const Matrix inputs = posteriors_to_inputs(px.values, ps.values);
        const Matrix targets = encode_targets(labels, n);
        const int h1 = train_h1 > 0 ? train_h1 : 2 * n;
        const int h2 = train_h2 > 0 ? train_h2 : n;
        FusionNet net = fusion_net_init({2 * n, h1, h2, n}, train_seed);
        TrainConfig cfg;
        cfg.max_epochs = train_epochs;
        cfg.patience = train_patience;
        cfg.validation_fraction = train_val_fraction;
        cfg.grad_tol = train_grad_tol;
        cfg.seed = mix_seed(train_seed, 1);
        const TrainResult result = train_scg(std::move(net), inputs, targets, cfg);
        save_fusion_net(result.net, train_out);
        if (!train_trace.empty()) write_trace_csv(result.trace, train_trace);
        std::cout << "trained net (" << result.iterations << " iterations, stop: "
                  << result.stop_reason << ") -> " << train_out << '\n';
    } else if (eval->parsed()) {
        ExperimentConfig cfg = load_experiment_config(eval_config);
        cfg.seed = eval_seed;
        cfg.threads = eval_threads;
        if (!eval_out.empty()) cfg.output_dir = eval_out;
        if (cfg.output_dir.empty())
            throw validation_error("no output directory: set config output_dir or pass --out");
        const ExperimentResult result = run_experiment(cfg);
        write_report(result, cfg.output_dir);
        std::cout << render_report_from_runs((fs::path(cfg.output_dir) / "runs.csv").string());
    } else if (report->parsed()) {
        const std::string table = render_report_from_runs(report_runs);
        if (report_out.empty()) std::cout << table;
        else write_text_file(report_out, table);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
