// Data model: certainty alphabet, dataset manifests, label-powerset
// transform and train/test splitting.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fusekit/common.hpp"

namespace fusekit {

enum class Polarity { negative, positive };
enum class Confidence { guessing, probably, definitely };

inline constexpr int kAlphabetSize = 6;

// The six certainty values in ascending order; symbol index k is position+1.
const std::array<double, kAlphabetSize>& certainty_alphabet();

// Certainty value for (polarity, confidence); total over the enum domain.
double certainty_encode(Polarity polarity, Confidence confidence);

bool is_certainty_value(double value);
// 1-based symbol index of an alphabet value (ascending numeric order).
int certainty_symbol_index(double value);
double certainty_symbol_value(int symbol_index);

// Canonical multilabel target: sorted, deduplicated, non-empty.
using LabelSet = std::vector<int>;
LabelSet canonical_label_set(LabelSet members);

struct Sample {
    std::string id;
    std::vector<double> features;
    std::vector<double> answers;
    int label = -1;  // dense class index; -1 for rows that are multilabel-only
};

struct Dataset {
    std::string name;
    int n_classes = 0;  // classes, or atomic labels when multilabel
    int n_tags = 0;
    int feature_dim = 0;
    bool multilabel = false;
    std::vector<std::string> label_names;
    std::vector<Sample> samples;
    std::vector<LabelSet> label_sets;  // per sample; singletons for single-label data

    std::size_t size() const { return samples.size(); }
    std::vector<int> labels() const;
    const std::string& label_name(int index) const;
};

Dataset load_dataset(const std::string& manifest_path);

// Writes manifest.json plus features/answers/labels CSVs into dir.
// Byte-stable for a fixed dataset, so load/save round-trips bit-exactly.
void save_dataset(const Dataset& dataset, const std::string& dir);

class PowersetCodebook {
public:
    int size() const { return static_cast<int>(classes_.size()); }
    // Dense class index for a combination; -1 when unseen.
    int lookup(const LabelSet& combo) const;
    int add(const LabelSet& combo);  // existing index if already present
    const LabelSet& decode(int label) const;
    const std::vector<LabelSet>& classes() const { return classes_; }
    std::string class_name(int label, const std::vector<std::string>& atomic_names) const;

private:
    std::vector<LabelSet> classes_;
    std::map<LabelSet, int> index_;
};

// Maps each distinct combination to a dense class index (first-appearance
// order) and returns the per-input class labels.
std::pair<PowersetCodebook, std::vector<int>> powerset_encode(const std::vector<LabelSet>& labelsets);
LabelSet powerset_decode(const PowersetCodebook& codebook, int label);

struct SplitPair {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Stratified repeated random sub-sampling: per repeat, exactly
// train_per_class training samples from every class, remainder test.
std::vector<SplitPair> repeated_subsample_splits(const Dataset& dataset, int repeats,
                                                 int train_per_class, std::uint64_t seed);

// Single unstratified random split with a fixed train count.
SplitPair fixed_split(const Dataset& dataset, std::size_t train_count, std::uint64_t seed);

// Splits `pool` into (kept, held_out) stratified by labels[i]; held_out gets
// about `fraction` of each class but never a class's last sample.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const std::vector<int>& labels, const std::vector<std::size_t>& pool, double fraction,
    std::uint64_t seed);

}  // namespace fusekit
