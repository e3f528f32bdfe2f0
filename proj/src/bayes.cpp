#include "fusekit/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "fusekit/csv.hpp"

namespace fusekit {

MultinomialNb nb_fit(const std::vector<std::vector<double>>& answers, const std::vector<int>& labels,
                     int n_classes, std::vector<int> feature_subset, double smoothing) {
    if (answers.empty() || answers.size() != labels.size())
        throw validation_error("nb_fit: empty training set or label count mismatch");
    if (feature_subset.empty()) throw validation_error("nb_fit: feature subset must be non-empty");
    if (smoothing <= 0.0) throw validation_error("nb_fit: smoothing must be positive");

    const int n_tags = static_cast<int>(answers.front().size());
    std::sort(feature_subset.begin(), feature_subset.end());
    for (int t : feature_subset)
        if (t < 0 || t >= n_tags)
            throw validation_error("nb_fit: subset tag " + std::to_string(t) + " outside [0, T)");

    MultinomialNb model;
    model.n_classes = n_classes;
    model.n_tags = n_tags;
    model.feature_subset = std::move(feature_subset);
    const int F = static_cast<int>(model.feature_subset.size());
    model.theta.assign(static_cast<std::size_t>(F) * n_classes * kAlphabetSize, 0.0);

    std::vector<double> class_count(n_classes, 0.0);
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const int c = labels[i];
        if (c < 0 || c >= n_classes)
            throw validation_error("nb_fit: label " + std::to_string(c) + " outside [0, n_classes)");
        if (static_cast<int>(answers[i].size()) != n_tags)
            throw validation_error("nb_fit: ragged answer vectors");
        class_count[c] += 1.0;
        for (int f = 0; f < F; ++f) {
            const int k = certainty_symbol_index(answers[i][model.feature_subset[f]]);
            model.theta_at(f, c, k) += 1.0;
        }
    }

    for (int f = 0; f < F; ++f)
        for (int c = 0; c < n_classes; ++c)
            for (int k = 1; k <= kAlphabetSize; ++k)
                model.theta_at(f, c, k) = (model.theta_at(f, c, k) + smoothing) /
                                          (class_count[c] + kAlphabetSize * smoothing);

    model.log_prior.resize(n_classes);
    const double n = static_cast<double>(answers.size());
    for (int c = 0; c < n_classes; ++c)
        model.log_prior[c] = class_count[c] > 0.0
                                 ? std::log(class_count[c] / n)
                                 : -std::numeric_limits<double>::infinity();
    return model;
}

std::vector<double> nb_class_conditional_log(const MultinomialNb& model,
                                             const std::vector<double>& answers) {
    if (static_cast<int>(answers.size()) != model.n_tags)
        throw validation_error("nb_class_conditional_log: answer length " +
                               std::to_string(answers.size()) + " != T " +
                               std::to_string(model.n_tags));
    const int F = static_cast<int>(model.feature_subset.size());
    std::vector<int> symbols(F);
    for (int f = 0; f < F; ++f)
        symbols[f] = certainty_symbol_index(answers[model.feature_subset[f]]);

    std::vector<double> ll(model.n_classes, 0.0);
    for (int c = 0; c < model.n_classes; ++c) {
        double acc = 0.0;
        for (int f = 0; f < F; ++f) acc += std::log(model.theta_at(f, c, symbols[f]));
        ll[c] = acc;
    }
    return ll;
}

std::vector<double> nb_posterior(const MultinomialNb& model, const std::vector<double>& answers) {
    std::vector<double> scores = nb_class_conditional_log(model, answers);
    for (int c = 0; c < model.n_classes; ++c) scores[c] += model.log_prior[c];
    normalize_log_scores(scores);
    return scores;
}

RnbEnsemble rnb_fit(const std::vector<std::vector<double>>& answers, const std::vector<int>& labels,
                    int n_classes, const RnbConfig& config, std::uint64_t seed) {
    if (answers.empty() || answers.size() != labels.size())
        throw validation_error("rnb_fit: empty training set or label count mismatch");
    const int n_tags = static_cast<int>(answers.front().size());
    int F = config.features_per_bag;
    if (F == 0) F = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_tags))));
    if (F < 1 || F > n_tags)
        throw validation_error("rnb_fit: features_per_bag " + std::to_string(F) +
                               " outside [1, " + std::to_string(n_tags) + "]");
    if (config.n_bags < 1) throw validation_error("rnb_fit: n_bags must be >= 1");

    RnbEnsemble ensemble;
    ensemble.n_classes = n_classes;
    ensemble.n_tags = n_tags;
    ensemble.n_bags = config.n_bags;
    ensemble.features_per_bag = F;
    ensemble.smoothing = config.smoothing;
    ensemble.seed = seed;
    ensemble.bootstrap = config.bootstrap;
    ensemble.bags.resize(config.n_bags);

    // Ensemble prior: empirical frequency over the full training set.
    std::vector<double> class_count(n_classes, 0.0);
    for (int label : labels) {
        if (label < 0 || label >= n_classes)
            throw validation_error("rnb_fit: label outside [0, n_classes)");
        class_count[label] += 1.0;
    }
    ensemble.log_prior.resize(n_classes);
    for (int c = 0; c < n_classes; ++c)
        ensemble.log_prior[c] = class_count[c] > 0.0
                                    ? std::log(class_count[c] / static_cast<double>(labels.size()))
                                    : -std::numeric_limits<double>::infinity();

    parallel_for(config.n_bags, config.threads, [&](std::size_t b) {
        std::mt19937_64 rng(mix_seed(seed, b));
        std::vector<int> subset = sample_without_replacement(F, n_tags, rng);
        if (config.bootstrap) {
            const auto idx = bootstrap_indices(answers.size(), rng);
            std::vector<std::vector<double>> bag_answers(idx.size());
            std::vector<int> bag_labels(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) {
                bag_answers[i] = answers[idx[i]];
                bag_labels[i] = labels[idx[i]];
            }
            ensemble.bags[b] = nb_fit(bag_answers, bag_labels, n_classes, std::move(subset),
                                      config.smoothing);
        } else {
            ensemble.bags[b] = nb_fit(answers, labels, n_classes, std::move(subset), config.smoothing);
        }
    });
    return ensemble;
}

std::vector<double> rnb_posterior(const RnbEnsemble& model, const std::vector<double>& answers) {
    if (model.bags.empty()) throw validation_error("rnb_posterior: ensemble has no bags");
    // log score(c) = log(sum_b p_b(S|c)) + log prior(c); the bag average's
    // 1/B factor cancels in the normalization.
    std::vector<double> per_bag(model.bags.size());
    std::vector<double> scores(model.n_classes);
    std::vector<std::vector<double>> bag_ll(model.bags.size());
    for (std::size_t b = 0; b < model.bags.size(); ++b)
        bag_ll[b] = nb_class_conditional_log(model.bags[b], answers);
    for (int c = 0; c < model.n_classes; ++c) {
        for (std::size_t b = 0; b < model.bags.size(); ++b) per_bag[b] = bag_ll[b][c];
        scores[c] = log_sum_exp(per_bag) + model.log_prior[c];
    }
    normalize_log_scores(scores);
    return scores;
}

Matrix rnb_posterior_batch(const RnbEnsemble& model, const std::vector<std::vector<double>>& answers,
                           int threads) {
    Matrix out(answers.size(), model.n_classes);
    parallel_for(answers.size(), threads, [&](std::size_t i) {
        out.set_row(i, rnb_posterior(model, answers[i]));
    });
    return out;
}

namespace {

void write_doubles(std::ostream& out, const std::vector<double>& values) {
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out << ' ';
        out << format_double(values[i]);
    }
    out << '\n';
}

std::vector<double> parse_doubles(const std::string& line, std::size_t expected,
                                  const std::string& context) {
    std::istringstream in(line);
    std::vector<double> out;
    std::string token;
    while (in >> token) out.push_back(parse_double(token, context));
    if (out.size() != expected)
        throw validation_error(context + ": expected " + std::to_string(expected) + " values, got " +
                               std::to_string(out.size()));
    return out;
}

}  // namespace

void save_rnb(const RnbEnsemble& model, const std::string& path) {
    std::ostringstream out;
    out << "fusekit-model rnb v1\n";
    out << "n_classes " << model.n_classes << '\n';
    out << "n_tags " << model.n_tags << '\n';
    out << "n_bags " << model.n_bags << '\n';
    out << "features_per_bag " << model.features_per_bag << '\n';
    out << "smoothing " << format_double(model.smoothing) << '\n';
    out << "seed " << model.seed << '\n';
    out << "bootstrap " << (model.bootstrap ? 1 : 0) << '\n';
    out << "log_prior ";
    write_doubles(out, model.log_prior);
    for (const MultinomialNb& bag : model.bags) {
        out << "bag\n";
        out << "subset";
        for (int t : bag.feature_subset) out << ' ' << t;
        out << '\n';
        out << "bag_log_prior ";
        write_doubles(out, bag.log_prior);
        out << "theta ";
        write_doubles(out, bag.theta);
    }
    write_text_file(path, out.str());
}

RnbEnsemble load_rnb(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "fusekit-model rnb v1")
        throw validation_error(path + ": not a fusekit rnb model file");

    auto field = [&](std::size_t row, const std::string& key) -> std::string {
        if (row >= lines.size() || lines[row].rfind(key + " ", 0) != 0)
            throw validation_error(path + ": expected '" + key + "' on line " + std::to_string(row + 1));
        return lines[row].substr(key.size() + 1);
    };

    RnbEnsemble model;
    model.n_classes = static_cast<int>(parse_int(field(1, "n_classes"), path));
    model.n_tags = static_cast<int>(parse_int(field(2, "n_tags"), path));
    model.n_bags = static_cast<int>(parse_int(field(3, "n_bags"), path));
    model.features_per_bag = static_cast<int>(parse_int(field(4, "features_per_bag"), path));
    model.smoothing = parse_double(field(5, "smoothing"), path);
    model.seed = static_cast<std::uint64_t>(parse_int(field(6, "seed"), path));
    model.bootstrap = parse_int(field(7, "bootstrap"), path) != 0;
    model.log_prior = parse_doubles(field(8, "log_prior"), model.n_classes, path + " log_prior");

    std::size_t row = 9;
    for (int b = 0; b < model.n_bags; ++b) {
        if (row >= lines.size() || lines[row] != "bag")
            throw validation_error(path + ": expected 'bag' on line " + std::to_string(row + 1));
        ++row;
        MultinomialNb bag;
        bag.n_classes = model.n_classes;
        bag.n_tags = model.n_tags;
        {
            const std::string subset_line = field(row, "subset");
            std::istringstream in(subset_line);
            std::string token;
            while (in >> token) bag.feature_subset.push_back(static_cast<int>(parse_int(token, path)));
            ++row;
        }
        bag.log_prior = parse_doubles(field(row, "bag_log_prior"), model.n_classes, path + " bag prior");
        ++row;
        const std::size_t theta_size =
            bag.feature_subset.size() * static_cast<std::size_t>(model.n_classes) * kAlphabetSize;
        bag.theta = parse_doubles(field(row, "theta"), theta_size, path + " theta");
        ++row;
        model.bags.push_back(std::move(bag));
    }
    return model;
}

}  // namespace fusekit
