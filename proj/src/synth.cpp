#include "fusekit/synth.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace fusekit {

using nlohmann::json;

SynthSpec SynthSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open synth spec: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw validation_error("synth spec " + path + ": " + e.what());
    }
    SynthSpec spec;
    try {
        spec.name = j.value("name", spec.name);
        spec.n_classes = j.at("n_classes").get<int>();
        spec.n_tags = j.at("n_tags").get<int>();
        spec.feature_dim = j.at("feature_dim").get<int>();
        spec.samples_per_class = j.at("samples_per_class").get<int>();
        if (j.contains("answers")) {
            spec.answers_informative = j["answers"].value("informative", true);
            spec.answer_noise = j["answers"].value("noise_rate", 0.0);
        }
        if (j.contains("features")) {
            spec.feature_mean_scale = j["features"].value("mean_scale", spec.feature_mean_scale);
            spec.feature_noise_sigma = j["features"].value("noise_sigma", spec.feature_noise_sigma);
        }
    } catch (const json::exception& e) {
        throw validation_error("synth spec " + path + ": " + e.what());
    }
    spec.validate();
    return spec;
}

std::string SynthSpec::to_json() const {
    json j;
    j["name"] = name;
    j["n_classes"] = n_classes;
    j["n_tags"] = n_tags;
    j["feature_dim"] = feature_dim;
    j["samples_per_class"] = samples_per_class;
    j["answers"] = {{"informative", answers_informative}, {"noise_rate", answer_noise}};
    j["features"] = {{"mean_scale", feature_mean_scale}, {"noise_sigma", feature_noise_sigma}};
    return j.dump(2) + "\n";
}

void SynthSpec::validate() const {
    if (n_classes < 1) throw validation_error("synth spec: n_classes must be >= 1");
    if (n_tags < 1) throw validation_error("synth spec: n_tags must be >= 1");
    if (feature_dim < 1) throw validation_error("synth spec: feature_dim must be >= 1");
    if (samples_per_class < 1) throw validation_error("synth spec: samples_per_class must be >= 1");
    if (answer_noise < 0.0 || answer_noise > 1.0)
        throw validation_error("synth spec: answer noise_rate must be in [0, 1]");
    if (feature_noise_sigma <= 0.0)
        throw validation_error("synth spec: feature noise_sigma must be > 0");
    if (feature_mean_scale < 0.0)
        throw validation_error("synth spec: feature mean_scale must be >= 0");
    if (answers_informative) {
        // Distinct per-class patterns need enough alphabet capacity.
        double capacity = 1.0;
        for (int t = 0; t < n_tags && capacity <= n_classes; ++t) capacity *= kAlphabetSize;
        if (capacity < n_classes)
            throw validation_error("synth spec: alphabet^n_tags < n_classes, distinct patterns impossible");
    }
}

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed) {
    spec.validate();

    // Independent streams so that pattern/mean layout does not shift when
    // sample counts change.
    std::mt19937_64 pattern_rng(mix_seed(seed, 1));
    std::mt19937_64 mean_rng(mix_seed(seed, 2));
    std::mt19937_64 sample_rng(mix_seed(seed, 3));

    std::uniform_int_distribution<int> symbol(1, kAlphabetSize);

    // Per-class tag patterns (symbol indices 1..K).
    std::vector<std::vector<int>> patterns(spec.n_classes);
    if (spec.answers_informative) {
        std::set<std::vector<int>> seen;
        for (int c = 0; c < spec.n_classes; ++c) {
            std::vector<int> pattern(spec.n_tags);
            do {
                for (int& s : pattern) s = symbol(pattern_rng);
            } while (!seen.insert(pattern).second);
            patterns[c] = std::move(pattern);
        }
    } else {
        std::vector<int> shared(spec.n_tags);
        for (int& s : shared) s = symbol(pattern_rng);
        for (auto& p : patterns) p = shared;
    }

    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> means(spec.n_classes, std::vector<double>(spec.feature_dim, 0.0));
    for (auto& mean : means)
        for (double& m : mean) m = spec.feature_mean_scale * gauss(mean_rng);

    Dataset ds;
    ds.name = spec.name;
    ds.n_classes = spec.n_classes;
    ds.n_tags = spec.n_tags;
    ds.feature_dim = spec.feature_dim;
    for (int c = 0; c < spec.n_classes; ++c) ds.label_names.push_back("class_" + std::to_string(c));

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const std::size_t total = static_cast<std::size_t>(spec.n_classes) * spec.samples_per_class;
    ds.samples.reserve(total);
    ds.label_sets.reserve(total);

    std::size_t row = 0;
    for (int c = 0; c < spec.n_classes; ++c) {
        for (int i = 0; i < spec.samples_per_class; ++i, ++row) {
            Sample s;
            s.id = "sample_" + std::to_string(row);
            s.label = c;
            s.answers.resize(spec.n_tags);
            for (int t = 0; t < spec.n_tags; ++t) {
                int k = patterns[c][t];
                if (spec.answer_noise > 0.0 && unit(sample_rng) < spec.answer_noise)
                    k = symbol(sample_rng);
                s.answers[t] = certainty_symbol_value(k);
            }
            s.features.resize(spec.feature_dim);
            for (int j = 0; j < spec.feature_dim; ++j)
                s.features[j] = means[c][j] + spec.feature_noise_sigma * gauss(sample_rng);
            ds.samples.push_back(std::move(s));
            ds.label_sets.push_back({c});
        }
    }
    return ds;
}

}  // namespace fusekit
