#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "fusekit/bayes.hpp"
#include "fusekit/synth.hpp"
#include "test_util.hpp"

using namespace fusekit;
using testutil::TempDir;

namespace {

std::vector<std::vector<double>> answers_from_symbols(const std::vector<std::vector<int>>& symbols) {
    std::vector<std::vector<double>> out;
    for (const auto& row : symbols) {
        std::vector<double> values;
        for (int k : row) values.push_back(certainty_symbol_value(k));
        out.push_back(values);
    }
    return out;
}

std::vector<int> full_subset(int n_tags) {
    std::vector<int> s(n_tags);
    for (int i = 0; i < n_tags; ++i) s[i] = i;
    return s;
}

}  // namespace

TEST_CASE("nb_fit concentrates theta on observed symbols") {
    // One class, five identical samples; hand-tallied closed form.
    const int n = 5;
    const double alpha = 1.0;
    const auto answers = answers_from_symbols(std::vector<std::vector<int>>(n, {2, 4}));
    const std::vector<int> labels(n, 0);
    const MultinomialNb model = nb_fit(answers, labels, 1, full_subset(2), alpha);

    const double observed = (n + alpha) / (n + kAlphabetSize * alpha);
    const double unobserved = alpha / (n + kAlphabetSize * alpha);
    CHECK(model.theta_at(0, 0, 2) == doctest::Approx(observed).epsilon(1e-15));
    CHECK(model.theta_at(1, 0, 4) == doctest::Approx(observed).epsilon(1e-15));
    for (int k = 1; k <= kAlphabetSize; ++k) {
        if (k != 2) CHECK(model.theta_at(0, 0, k) == doctest::Approx(unobserved).epsilon(1e-15));
        if (k != 4) CHECK(model.theta_at(1, 0, k) == doctest::Approx(unobserved).epsilon(1e-15));
    }
}

TEST_CASE("nb_fit smoothing floor for zero observations") {
    const auto answers = answers_from_symbols({{1}, {1}, {1}, {6}, {6}});
    const std::vector<int> labels = {0, 0, 0, 1, 1};
    const double alpha = 0.5;
    const MultinomialNb model = nb_fit(answers, labels, 2, full_subset(1), alpha);
    // Class 1 never shows symbol 1: theta = alpha / (n_c + 6 alpha) > 0.
    CHECK(model.theta_at(0, 1, 1) == doctest::Approx(alpha / (2 + 6 * alpha)).epsilon(1e-15));
    for (int c = 0; c < 2; ++c)
        for (int k = 1; k <= kAlphabetSize; ++k) CHECK(model.theta_at(0, c, k) > 0.0);
}

TEST_CASE("nb_fit theta rows sum to one and balanced labels give a uniform prior") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> symbol(1, 6);
    std::vector<std::vector<int>> rows;
    std::vector<int> labels;
    for (int i = 0; i < 60; ++i) {
        rows.push_back({symbol(rng), symbol(rng), symbol(rng)});
        labels.push_back(i % 3);
    }
    const MultinomialNb model = nb_fit(answers_from_symbols(rows), labels, 3, full_subset(3), 1.0);
    for (int f = 0; f < 3; ++f)
        for (int c = 0; c < 3; ++c) {
            double sum = 0.0;
            for (int k = 1; k <= kAlphabetSize; ++k) sum += model.theta_at(f, c, k);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    double prior_sum = 0.0;
    for (int c = 0; c < 3; ++c) {
        CHECK(std::exp(model.log_prior[c]) == doctest::Approx(1.0 / 3).epsilon(1e-12));
        prior_sum += std::exp(model.log_prior[c]);
    }
    CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(nb_fit({}, {}, 2, {0}, 1.0), validation_error);
}

TEST_CASE("nb_class_conditional_log") {
    SUBCASE("single tag model returns the single log theta") {
        const auto answers = answers_from_symbols({{3}, {3}, {5}});
        const std::vector<int> labels = {0, 0, 0};
        const MultinomialNb model = nb_fit(answers, labels, 1, full_subset(1), 1.0);
        const auto ll = nb_class_conditional_log(model, {certainty_symbol_value(3)});
        CHECK(ll[0] == doctest::Approx(std::log(model.theta_at(0, 0, 3))).epsilon(1e-15));
    }
    SUBCASE("uniform theta gives identical log-likelihood across classes") {
        MultinomialNb model;
        model.n_classes = 4;
        model.n_tags = 2;
        model.feature_subset = {0, 1};
        model.theta.assign(2 * 4 * kAlphabetSize, 1.0 / kAlphabetSize);
        model.log_prior.assign(4, std::log(0.25));
        const auto ll = nb_class_conditional_log(model, {0.25, 1.0});
        for (int c = 1; c < 4; ++c) CHECK(ll[c] == doctest::Approx(ll[0]).epsilon(1e-15));
    }
    SUBCASE("exp of the result equals the direct product of thetas") {
        std::mt19937_64 rng(17);
        std::uniform_int_distribution<int> symbol(1, 6);
        std::vector<std::vector<int>> rows;
        std::vector<int> labels;
        for (int i = 0; i < 40; ++i) {
            rows.push_back({symbol(rng), symbol(rng), symbol(rng)});
            labels.push_back(i % 2);
        }
        const MultinomialNb model = nb_fit(answers_from_symbols(rows), labels, 2, full_subset(3), 1.0);
        const std::vector<double> query = {certainty_symbol_value(symbol(rng)),
                                           certainty_symbol_value(symbol(rng)),
                                           certainty_symbol_value(symbol(rng))};
        const auto ll = nb_class_conditional_log(model, query);
        for (int c = 0; c < 2; ++c) {
            double product = 1.0;  // direct product oracle
            for (int f = 0; f < 3; ++f)
                product *= model.theta_at(f, c, certainty_symbol_index(query[f]));
            CHECK(std::exp(ll[c]) == doctest::Approx(product).epsilon(1e-12));
        }
    }
    SUBCASE("length mismatch is rejected") {
        const auto answers = answers_from_symbols({{1, 2}});
        const MultinomialNb model = nb_fit(answers, {0}, 1, full_subset(2), 1.0);
        CHECK_THROWS_AS(nb_class_conditional_log(model, {0.25}), validation_error);
    }
}

TEST_CASE("rnb degenerate ensemble equals plain naive Bayes") {
    SynthSpec spec;
    spec.n_classes = 3;
    spec.n_tags = 5;
    spec.feature_dim = 2;
    spec.samples_per_class = 20;
    spec.answer_noise = 0.3;
    const Dataset ds = synth_generate(spec, 11);
    std::vector<std::vector<double>> answers;
    for (const auto& s : ds.samples) answers.push_back(s.answers);
    const auto labels = ds.labels();

    RnbConfig cfg;
    cfg.n_bags = 1;
    cfg.features_per_bag = spec.n_tags;
    cfg.bootstrap = false;
    const RnbEnsemble ensemble = rnb_fit(answers, labels, 3, cfg, 5);
    const MultinomialNb plain = nb_fit(answers, labels, 3, full_subset(spec.n_tags), 1.0);

    CHECK(ensemble.bags[0].theta == plain.theta);
    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> symbol(1, 6);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> query(spec.n_tags);
        for (double& v : query) v = certainty_symbol_value(symbol(rng));
        const auto ens = rnb_posterior(ensemble, query);
        const auto ref = nb_posterior(plain, query);
        for (int c = 0; c < 3; ++c) CHECK(std::abs(ens[c] - ref[c]) < 1e-12);
    }
}

TEST_CASE("bootstrap resamples cover the usual unique fraction") {
    const std::size_t n = 10000;
    double total_fraction = 0.0;
    const int resamples = 20;
    for (int r = 0; r < resamples; ++r) {
        std::mt19937_64 rng(mix_seed(77, r));
        const auto idx = bootstrap_indices(n, rng);
        const std::set<std::size_t> unique(idx.begin(), idx.end());
        total_fraction += static_cast<double>(unique.size()) / static_cast<double>(n);
    }
    const double mean = total_fraction / resamples;
    CHECK(mean > 0.62);
    CHECK(mean < 0.645);
}

TEST_CASE("rnb_fit determinism and feature subset shape") {
    SynthSpec spec;
    spec.n_classes = 2;
    spec.n_tags = 8;
    spec.feature_dim = 2;
    spec.samples_per_class = 15;
    spec.answer_noise = 0.4;
    const Dataset ds = synth_generate(spec, 19);
    std::vector<std::vector<double>> answers;
    for (const auto& s : ds.samples) answers.push_back(s.answers);
    const auto labels = ds.labels();

    RnbConfig cfg;
    cfg.n_bags = 12;
    cfg.features_per_bag = 3;
    const RnbEnsemble a = rnb_fit(answers, labels, 2, cfg, 31);
    cfg.threads = 4;
    const RnbEnsemble b = rnb_fit(answers, labels, 2, cfg, 31);
    REQUIRE(a.bags.size() == b.bags.size());
    for (std::size_t i = 0; i < a.bags.size(); ++i) {
        CHECK(a.bags[i].theta == b.bags[i].theta);  // parallel == serial, bit-exact
        CHECK(a.bags[i].feature_subset == b.bags[i].feature_subset);
        CHECK(a.bags[i].feature_subset.size() == 3);
        CHECK(std::is_sorted(a.bags[i].feature_subset.begin(), a.bags[i].feature_subset.end()));
    }
    cfg.features_per_bag = 9;
    CHECK_THROWS_AS(rnb_fit(answers, labels, 2, cfg, 31), validation_error);
}

TEST_CASE("rnb_posterior") {
    SUBCASE("identical bags reduce to the single-bag posterior") {
        const auto answers = answers_from_symbols({{1, 2}, {2, 1}, {6, 6}, {5, 5}});
        const std::vector<int> labels = {0, 0, 1, 1};
        RnbConfig cfg;
        cfg.n_bags = 3;
        cfg.features_per_bag = 2;
        cfg.bootstrap = false;  // every bag sees the full data and both tags
        const RnbEnsemble ensemble = rnb_fit(answers, labels, 2, cfg, 7);
        const MultinomialNb plain = nb_fit(answers, labels, 2, full_subset(2), 1.0);
        const std::vector<double> query = {1.0, 0.0};
        const auto ens = rnb_posterior(ensemble, query);
        const auto ref = nb_posterior(plain, query);
        for (int c = 0; c < 2; ++c) CHECK(ens[c] == doctest::Approx(ref[c]).epsilon(1e-12));
    }
    SUBCASE("posterior lies on the simplex") {
        SynthSpec spec;
        spec.n_classes = 4;
        spec.n_tags = 6;
        spec.feature_dim = 2;
        spec.samples_per_class = 12;
        spec.answer_noise = 0.5;
        const Dataset ds = synth_generate(spec, 3);
        std::vector<std::vector<double>> answers;
        for (const auto& s : ds.samples) answers.push_back(s.answers);
        RnbConfig cfg;
        cfg.n_bags = 9;
        cfg.features_per_bag = 2;
        const RnbEnsemble ensemble = rnb_fit(answers, ds.labels(), 4, cfg, 41);
        std::mt19937_64 rng(5);
        std::uniform_int_distribution<int> symbol(1, 6);
        for (int trial = 0; trial < 25; ++trial) {
            std::vector<double> query(spec.n_tags);
            for (double& v : query) v = certainty_symbol_value(symbol(rng));
            const auto p = rnb_posterior(ensemble, query);
            double sum = 0.0;
            for (double v : p) {
                CHECK(v >= 0.0);
                sum += v;
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
        }
    }
    SUBCASE("two hand-specified bags match the arithmetic oracle") {
        // 2 bags, 2 classes, single tag each; thetas set directly.
        MultinomialNb bag0;
        bag0.n_classes = 2;
        bag0.n_tags = 2;
        bag0.feature_subset = {0};
        bag0.theta = {0.7, 0.05, 0.05, 0.05, 0.05, 0.1,    // class 0 over symbols 1..6
                      0.1, 0.2, 0.3, 0.2, 0.1, 0.1};       // class 1
        bag0.log_prior = {std::log(0.5), std::log(0.5)};
        MultinomialNb bag1 = bag0;
        bag1.feature_subset = {1};
        bag1.theta = {0.4, 0.1, 0.1, 0.1, 0.1, 0.2,
                      0.05, 0.05, 0.2, 0.3, 0.3, 0.1};

        RnbEnsemble ensemble;
        ensemble.n_classes = 2;
        ensemble.n_tags = 2;
        ensemble.n_bags = 2;
        ensemble.features_per_bag = 1;
        ensemble.log_prior = {std::log(0.25), std::log(0.75)};
        ensemble.bags = {bag0, bag1};

        // Query symbols: tag0 -> symbol 1, tag1 -> symbol 6.
        const std::vector<double> query = {0.0, 1.0};
        // Oracle: score(c) = (bag0_theta[c][s0] + bag1_theta[c][s1]) * prior(c).
        const double s0 = (0.7 + 0.2) * 0.25;
        const double s1 = (0.1 + 0.1) * 0.75;
        const auto p = rnb_posterior(ensemble, query);
        CHECK(p[0] == doctest::Approx(s0 / (s0 + s1)).epsilon(1e-12));
        CHECK(p[1] == doctest::Approx(s1 / (s0 + s1)).epsilon(1e-12));
    }
}

TEST_CASE("rnb permutation equivariance") {
    SynthSpec spec;
    spec.n_classes = 3;
    spec.n_tags = 5;
    spec.feature_dim = 2;
    spec.samples_per_class = 15;
    spec.answer_noise = 0.3;
    const Dataset ds = synth_generate(spec, 29);
    std::vector<std::vector<double>> answers;
    for (const auto& s : ds.samples) answers.push_back(s.answers);
    const auto labels = ds.labels();

    // Permute class indices 0->1->2->0.
    std::vector<int> permuted(labels.size());
    const int perm[3] = {1, 2, 0};
    for (std::size_t i = 0; i < labels.size(); ++i) permuted[i] = perm[labels[i]];

    RnbConfig cfg;
    cfg.n_bags = 5;
    cfg.features_per_bag = 5;
    cfg.bootstrap = false;  // keep the per-bag sample sets aligned across the two fits
    const RnbEnsemble base = rnb_fit(answers, labels, 3, cfg, 13);
    const RnbEnsemble perm_model = rnb_fit(answers, permuted, 3, cfg, 13);

    const std::vector<double> query = answers[7];
    const auto p = rnb_posterior(base, query);
    const auto q = rnb_posterior(perm_model, query);
    for (int c = 0; c < 3; ++c) CHECK(q[perm[c]] == doctest::Approx(p[c]).epsilon(1e-12));
}

TEST_CASE("rnb noiseless separability on synthetic patterns") {
    SynthSpec spec;
    spec.n_classes = 4;
    spec.n_tags = 6;
    spec.feature_dim = 2;
    spec.samples_per_class = 10;
    spec.answer_noise = 0.0;
    const Dataset ds = synth_generate(spec, 53);
    std::vector<std::vector<double>> answers;
    for (const auto& s : ds.samples) answers.push_back(s.answers);
    const auto labels = ds.labels();

    RnbConfig cfg;
    cfg.n_bags = 50;
    cfg.features_per_bag = 3;
    const RnbEnsemble model = rnb_fit(answers, labels, 4, cfg, 61);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < answers.size(); ++i) {
        const auto p = rnb_posterior(model, answers[i]);
        if (static_cast<int>(argmax(p)) == labels[i]) ++correct;
    }
    CHECK(correct == answers.size());
}

TEST_CASE("rnb serialization round-trips bit exactly") {
    SynthSpec spec;
    spec.n_classes = 3;
    spec.n_tags = 5;
    spec.feature_dim = 2;
    spec.samples_per_class = 8;
    spec.answer_noise = 0.2;
    const Dataset ds = synth_generate(spec, 67);
    std::vector<std::vector<double>> answers;
    for (const auto& s : ds.samples) answers.push_back(s.answers);

    RnbConfig cfg;
    cfg.n_bags = 4;
    cfg.features_per_bag = 2;
    const RnbEnsemble model = rnb_fit(answers, ds.labels(), 3, cfg, 71);

    TempDir dir("rnb");
    save_rnb(model, dir.file("model.txt"));
    const RnbEnsemble loaded = load_rnb(dir.file("model.txt"));
    CHECK(loaded.log_prior == model.log_prior);
    REQUIRE(loaded.bags.size() == model.bags.size());
    for (std::size_t b = 0; b < model.bags.size(); ++b) {
        CHECK(loaded.bags[b].theta == model.bags[b].theta);
        CHECK(loaded.bags[b].feature_subset == model.bags[b].feature_subset);
        CHECK(loaded.bags[b].log_prior == model.bags[b].log_prior);
    }
    save_rnb(loaded, dir.file("model2.txt"));
    CHECK(testutil::slurp(dir.file("model.txt")) == testutil::slurp(dir.file("model2.txt")));
}

TEST_CASE("rnb serialization keeps -inf priors from class-free bags") {
    // A bootstrap bag can miss a class entirely; its empirical prior is 0.
    MultinomialNb bag;
    bag.n_classes = 2;
    bag.n_tags = 1;
    bag.feature_subset = {0};
    bag.theta.assign(2 * kAlphabetSize, 1.0 / kAlphabetSize);
    bag.log_prior = {0.0, -std::numeric_limits<double>::infinity()};

    RnbEnsemble model;
    model.n_classes = 2;
    model.n_tags = 1;
    model.n_bags = 1;
    model.features_per_bag = 1;
    model.log_prior = {std::log(0.5), std::log(0.5)};
    model.bags = {bag};

    TempDir dir("rnb_inf");
    save_rnb(model, dir.file("m.txt"));
    const RnbEnsemble loaded = load_rnb(dir.file("m.txt"));
    CHECK(loaded.bags[0].log_prior[0] == 0.0);
    CHECK(std::isinf(loaded.bags[0].log_prior[1]));
    CHECK(loaded.bags[0].log_prior[1] < 0.0);
}
