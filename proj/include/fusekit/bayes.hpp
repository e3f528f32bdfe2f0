// Generative model of user answers: multinomial naive Bayes over the
// certainty alphabet, and the randomized ensemble (bootstrap resamples plus
// random tag subsets) that averages per-bag likelihoods.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fusekit/common.hpp"
#include "fusekit/dataset.hpp"

namespace fusekit {

struct MultinomialNb {
    int n_classes = 0;
    int n_tags = 0;               // full answer length T the model expects
    std::vector<int> feature_subset;  // sorted active tag indices, size F
    // theta[(f * n_classes + c) * K + (k-1)] = p(s_t = k | c) for t = feature_subset[f].
    std::vector<double> theta;
    std::vector<double> log_prior;  // length n_classes; empirical class frequency

    double theta_at(int f, int c, int symbol_index) const {
        return theta[(static_cast<std::size_t>(f) * n_classes + c) * kAlphabetSize + (symbol_index - 1)];
    }
    double& theta_at(int f, int c, int symbol_index) {
        return theta[(static_cast<std::size_t>(f) * n_classes + c) * kAlphabetSize + (symbol_index - 1)];
    }
};

struct RnbEnsemble {
    int n_classes = 0;
    int n_tags = 0;
    int n_bags = 0;            // B
    int features_per_bag = 0;  // F
    double smoothing = 1.0;
    std::uint64_t seed = 0;
    bool bootstrap = true;
    std::vector<double> log_prior;  // ensemble-level prior, applied once
    std::vector<MultinomialNb> bags;
};

// theta_tck = (count(s_t = k, label = c) + smoothing) / (count(label = c) + K * smoothing).
MultinomialNb nb_fit(const std::vector<std::vector<double>>& answers, const std::vector<int>& labels,
                     int n_classes, std::vector<int> feature_subset, double smoothing);

// log p(S|c) = sum over active tags of log theta; length n_classes.
std::vector<double> nb_class_conditional_log(const MultinomialNb& model,
                                             const std::vector<double>& answers);

// softmax(log p(S|c) + log prior): the plain naive Bayes posterior.
std::vector<double> nb_posterior(const MultinomialNb& model, const std::vector<double>& answers);

struct RnbConfig {
    int n_bags = 1000;
    int features_per_bag = 0;  // 0 = ceil(sqrt(T))
    double smoothing = 1.0;
    bool bootstrap = true;
    int threads = 1;
};

RnbEnsemble rnb_fit(const std::vector<std::vector<double>>& answers, const std::vector<int>& labels,
                    int n_classes, const RnbConfig& config, std::uint64_t seed);

// score(c) = (sum over bags of p_b(S|c)) * prior(c), normalized; computed
// through log-sum-exp.
std::vector<double> rnb_posterior(const RnbEnsemble& model, const std::vector<double>& answers);

Matrix rnb_posterior_batch(const RnbEnsemble& model, const std::vector<std::vector<double>>& answers,
                           int threads = 1);

void save_rnb(const RnbEnsemble& model, const std::string& path);
RnbEnsemble load_rnb(const std::string& path);

}  // namespace fusekit
