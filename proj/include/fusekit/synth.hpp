// Seeded synthetic dataset generator: class-conditional tag patterns for
// answers, Gaussian class means for features.
#pragma once

#include <cstdint>
#include <string>

#include "fusekit/dataset.hpp"

namespace fusekit {

struct SynthSpec {
    std::string name = "synth";
    int n_classes = 2;
    int n_tags = 4;
    int feature_dim = 4;
    int samples_per_class = 50;

    // Answers: each class owns a deterministic tag pattern (distinct across
    // classes when informative). Every tag is replaced by a uniformly random
    // alphabet symbol with probability answer_noise.
    bool answers_informative = true;
    double answer_noise = 0.0;

    // Features: x = mean[class] + sigma * N(0, I). mean entries are drawn
    // N(0, mean_scale^2) per class; mean_scale 0 makes features pure noise.
    double feature_mean_scale = 2.0;
    double feature_noise_sigma = 1.0;

    static SynthSpec from_json_file(const std::string& path);
    std::string to_json() const;
    void validate() const;
};

Dataset synth_generate(const SynthSpec& spec, std::uint64_t seed);

}  // namespace fusekit
