#include "fusekit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fusekit/csv.hpp"
#include "json.hpp"

namespace fusekit {

namespace fs = std::filesystem;
using nlohmann::json;

const std::array<double, kAlphabetSize>& certainty_alphabet() {
    static const std::array<double, kAlphabetSize> values = {0.0, 0.25, 0.375, 0.625, 0.75, 1.0};
    return values;
}

double certainty_encode(Polarity polarity, Confidence confidence) {
    if (polarity == Polarity::positive) {
        switch (confidence) {
            case Confidence::guessing: return 0.625;
            case Confidence::probably: return 0.75;
            case Confidence::definitely: return 1.0;
        }
    } else {
        switch (confidence) {
            case Confidence::guessing: return 0.375;
            case Confidence::probably: return 0.25;
            case Confidence::definitely: return 0.0;
        }
    }
    throw validation_error("certainty_encode: invalid enum value");
}

bool is_certainty_value(double value) {
    for (double v : certainty_alphabet())
        if (v == value) return true;
    return false;
}

int certainty_symbol_index(double value) {
    const auto& alphabet = certainty_alphabet();
    for (int i = 0; i < kAlphabetSize; ++i)
        if (alphabet[i] == value) return i + 1;
    throw validation_error("value " + format_double(value) + " is not in the certainty alphabet");
}

double certainty_symbol_value(int symbol_index) {
    if (symbol_index < 1 || symbol_index > kAlphabetSize)
        throw validation_error("symbol index " + std::to_string(symbol_index) + " outside 1.." +
                               std::to_string(kAlphabetSize));
    return certainty_alphabet()[symbol_index - 1];
}

LabelSet canonical_label_set(LabelSet members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.empty()) throw validation_error("label set must be non-empty");
    return members;
}

std::vector<int> Dataset::labels() const {
    std::vector<int> out(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].label;
    return out;
}

const std::string& Dataset::label_name(int index) const {
    if (index < 0 || index >= static_cast<int>(label_names.size()))
        throw validation_error("label index " + std::to_string(index) + " has no name");
    return label_names[index];
}

namespace {

std::string sample_id(std::size_t row) { return "sample_" + std::to_string(row); }

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string token;
    while (in >> token) out.push_back(token);
    return out;
}

}  // namespace

Dataset load_dataset(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw io_error("cannot open manifest: " + manifest_path);
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::exception& e) {
        throw validation_error("manifest " + manifest_path + ": " + e.what());
    }

    Dataset ds;
    try {
        ds.name = manifest.at("name").get<std::string>();
        ds.n_classes = manifest.at("n_classes").get<int>();
        ds.n_tags = manifest.at("n_tags").get<int>();
        ds.feature_dim = manifest.at("feature_dim").get<int>();
        ds.label_names = manifest.at("label_names").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw validation_error("manifest " + manifest_path + ": " + e.what());
    }
    if (ds.n_classes < 1 || ds.n_tags < 0 || ds.feature_dim < 0)
        throw validation_error("manifest " + manifest_path + ": non-positive dimensions");
    if (static_cast<int>(ds.label_names.size()) != ds.n_classes)
        throw validation_error("manifest " + manifest_path + ": label_names size " +
                               std::to_string(ds.label_names.size()) + " != n_classes " +
                               std::to_string(ds.n_classes));

    const fs::path base = fs::path(manifest_path).parent_path();
    auto file_of = [&](const char* key) {
        const auto rel = manifest.at("files").at(key).get<std::string>();
        return (base / rel).string();
    };

    const Matrix features = read_csv_matrix(file_of("features"));
    const Matrix answers = ds.n_tags > 0 ? read_csv_matrix(file_of("answers")) : Matrix(features.rows(), 0);
    const auto label_lines = read_lines(file_of("labels"));

    std::vector<std::string> label_rows;
    for (const auto& line : label_lines)
        if (!line.empty()) label_rows.push_back(line);

    if (features.rows() != label_rows.size() || (ds.n_tags > 0 && answers.rows() != features.rows()))
        throw validation_error("manifest " + manifest_path + ": row counts differ (features " +
                               std::to_string(features.rows()) + ", answers " +
                               std::to_string(answers.rows()) + ", labels " +
                               std::to_string(label_rows.size()) + ")");
    if (static_cast<int>(features.cols()) != ds.feature_dim)
        throw validation_error("features file: width " + std::to_string(features.cols()) +
                               " != feature_dim " + std::to_string(ds.feature_dim));
    if (ds.n_tags > 0 && static_cast<int>(answers.cols()) != ds.n_tags)
        throw validation_error("answers file: width " + std::to_string(answers.cols()) +
                               " != n_tags " + std::to_string(ds.n_tags));

    ds.samples.resize(features.rows());
    ds.label_sets.resize(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        Sample& s = ds.samples[i];
        s.id = sample_id(i);
        s.features = features.row_vec(i);
        for (double v : s.features)
            if (!std::isfinite(v))
                throw validation_error(s.id + ", features: non-finite entry");
        if (ds.n_tags > 0) {
            s.answers = answers.row_vec(i);
            for (double v : s.answers)
                if (!is_certainty_value(v))
                    throw validation_error(s.id + ", answers: value " + format_double(v) +
                                           " is outside the certainty alphabet");
        }

        const auto tokens = tokenize(label_rows[i]);
        if (tokens.empty()) throw validation_error(s.id + ", labels: empty row");
        LabelSet set;
        for (const auto& tok : tokens) {
            const long long value = parse_int(tok, s.id + ", labels");
            if (value < 0 || value >= ds.n_classes)
                throw validation_error(s.id + ", labels: index " + std::to_string(value) +
                                       " outside [0, " + std::to_string(ds.n_classes) + ")");
            set.push_back(static_cast<int>(value));
        }
        ds.label_sets[i] = canonical_label_set(std::move(set));
        if (ds.label_sets[i].size() == 1) {
            s.label = ds.label_sets[i][0];
        } else {
            s.label = -1;
            ds.multilabel = true;
        }
    }
    return ds;
}

void save_dataset(const Dataset& dataset, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path base(dir);

    Matrix features(dataset.size(), dataset.feature_dim);
    Matrix answers(dataset.size(), dataset.n_tags);
    std::ostringstream labels;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample& s = dataset.samples[i];
        if (static_cast<int>(s.features.size()) != dataset.feature_dim)
            throw validation_error(s.id + ": feature length differs from feature_dim");
        if (static_cast<int>(s.answers.size()) != dataset.n_tags)
            throw validation_error(s.id + ": answer length differs from n_tags");
        features.set_row(i, s.features);
        answers.set_row(i, s.answers);
        const LabelSet& set = dataset.label_sets.at(i);
        for (std::size_t j = 0; j < set.size(); ++j) {
            if (j) labels << ' ';
            labels << set[j];
        }
        labels << '\n';
    }

    write_csv_matrix((base / "features.csv").string(), features);
    write_csv_matrix((base / "answers.csv").string(), answers);
    write_text_file((base / "labels.csv").string(), labels.str());

    json manifest;
    manifest["name"] = dataset.name;
    manifest["n_classes"] = dataset.n_classes;
    manifest["n_tags"] = dataset.n_tags;
    manifest["feature_dim"] = dataset.feature_dim;
    manifest["files"] = {{"features", "features.csv"},
                         {"answers", "answers.csv"},
                         {"labels", "labels.csv"}};
    manifest["label_names"] = dataset.label_names;
    write_text_file((base / "manifest.json").string(), manifest.dump(2) + "\n");
}

int PowersetCodebook::lookup(const LabelSet& combo) const {
    const auto it = index_.find(combo);
    return it == index_.end() ? -1 : it->second;
}

int PowersetCodebook::add(const LabelSet& combo) {
    const auto it = index_.find(combo);
    if (it != index_.end()) return it->second;
    const int id = static_cast<int>(classes_.size());
    classes_.push_back(combo);
    index_.emplace(combo, id);
    return id;
}

const LabelSet& PowersetCodebook::decode(int label) const {
    if (label < 0 || label >= size())
        throw validation_error("powerset decode: unknown class index " + std::to_string(label));
    return classes_[label];
}

std::string PowersetCodebook::class_name(int label, const std::vector<std::string>& atomic_names) const {
    const LabelSet& set = decode(label);
    std::string name;
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (i) name += '+';
        name += atomic_names.at(set[i]);
    }
    return name;
}

std::pair<PowersetCodebook, std::vector<int>> powerset_encode(const std::vector<LabelSet>& labelsets) {
    PowersetCodebook codebook;
    std::vector<int> labels;
    labels.reserve(labelsets.size());
    for (const auto& raw : labelsets) {
        const LabelSet combo = canonical_label_set(raw);
        labels.push_back(codebook.add(combo));
    }
    return {std::move(codebook), std::move(labels)};
}

LabelSet powerset_decode(const PowersetCodebook& codebook, int label) {
    return codebook.decode(label);
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& dataset) {
    std::vector<std::vector<std::size_t>> by_class(dataset.n_classes);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const int label = dataset.samples[i].label;
        if (label < 0)
            throw validation_error(dataset.samples[i].id +
                                   ": multilabel sample has no dense class; encode with the "
                                   "powerset transform before splitting per class");
        by_class[label].push_back(i);
    }
    return by_class;
}

}  // namespace

std::vector<SplitPair> repeated_subsample_splits(const Dataset& dataset, int repeats,
                                                 int train_per_class, std::uint64_t seed) {
    if (repeats < 1) throw validation_error("repeats must be >= 1");
    if (train_per_class < 1) throw validation_error("train_per_class must be >= 1");
    const auto by_class = indices_by_class(dataset);
    for (int c = 0; c < dataset.n_classes; ++c)
        if (by_class[c].size() <= static_cast<std::size_t>(train_per_class))
            throw validation_error("class " + std::to_string(c) + " has " +
                                   std::to_string(by_class[c].size()) +
                                   " samples; needs more than " + std::to_string(train_per_class));

    std::vector<SplitPair> splits(repeats);
    for (int r = 0; r < repeats; ++r) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(r)));
        SplitPair& split = splits[r];
        for (int c = 0; c < dataset.n_classes; ++c) {
            auto pool = by_class[c];
            std::shuffle(pool.begin(), pool.end(), rng);
            split.train.insert(split.train.end(), pool.begin(), pool.begin() + train_per_class);
            split.test.insert(split.test.end(), pool.begin() + train_per_class, pool.end());
        }
        std::sort(split.train.begin(), split.train.end());
        std::sort(split.test.begin(), split.test.end());
    }
    return splits;
}

SplitPair fixed_split(const Dataset& dataset, std::size_t train_count, std::uint64_t seed) {
    if (train_count == 0 || train_count >= dataset.size())
        throw validation_error("fixed split: train_count must be in (0, n_samples)");
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(mix_seed(seed, 0));
    std::shuffle(order.begin(), order.end(), rng);
    SplitPair split;
    split.train.assign(order.begin(), order.begin() + train_count);
    split.test.assign(order.begin() + train_count, order.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const std::vector<int>& labels, const std::vector<std::size_t>& pool, double fraction,
    std::uint64_t seed) {
    if (fraction <= 0.0 || fraction >= 1.0)
        throw validation_error("holdout fraction must be in (0, 1)");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t idx : pool) by_class[labels.at(idx)].push_back(idx);

    std::mt19937_64 rng(mix_seed(seed, 0x5eed));
    std::vector<std::size_t> kept, held;
    for (auto& [label, members] : by_class) {
        std::shuffle(members.begin(), members.end(), rng);
        std::size_t take = static_cast<std::size_t>(std::llround(fraction * members.size()));
        take = std::min(take, members.size() - 1);  // never drain a class
        held.insert(held.end(), members.begin(), members.begin() + take);
        kept.insert(kept.end(), members.begin() + take, members.end());
    }
    std::sort(kept.begin(), kept.end());
    std::sort(held.begin(), held.end());
    return {std::move(kept), std::move(held)};
}

}  // namespace fusekit
