#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "fusekit/csv.hpp"
#include "fusekit/dataset.hpp"
#include "fusekit/synth.hpp"
#include "test_util.hpp"

using namespace fusekit;
using testutil::TempDir;

TEST_CASE("certainty table matches the published cells") {
    CHECK(certainty_encode(Polarity::positive, Confidence::definitely) == 1.0);
    CHECK(certainty_encode(Polarity::negative, Confidence::guessing) == 0.375);
    CHECK(certainty_encode(Polarity::positive, Confidence::guessing) == 0.625);
    CHECK(certainty_encode(Polarity::positive, Confidence::probably) == 0.75);
    CHECK(certainty_encode(Polarity::negative, Confidence::probably) == 0.25);
    CHECK(certainty_encode(Polarity::negative, Confidence::definitely) == 0.0);
}

TEST_CASE("certainty polarity sits on either side of 0.5") {
    for (auto conf : {Confidence::guessing, Confidence::probably, Confidence::definitely}) {
        CHECK(certainty_encode(Polarity::positive, conf) > 0.5);
        CHECK(certainty_encode(Polarity::negative, conf) < 0.5);
    }
}

TEST_CASE("symbol indices are a bijection in ascending value order") {
    const auto& alphabet = certainty_alphabet();
    for (int k = 1; k <= kAlphabetSize; ++k) {
        CHECK(certainty_symbol_value(k) == alphabet[k - 1]);
        CHECK(certainty_symbol_index(alphabet[k - 1]) == k);
    }
    CHECK(std::is_sorted(alphabet.begin(), alphabet.end()));
    CHECK_THROWS_AS(certainty_symbol_index(0.5), validation_error);
    CHECK_THROWS_AS(certainty_symbol_value(0), validation_error);
    CHECK_THROWS_AS(certainty_symbol_value(7), validation_error);
}

namespace {

SynthSpec small_spec() {
    SynthSpec spec;
    spec.n_classes = 3;
    spec.n_tags = 4;
    spec.feature_dim = 2;
    spec.samples_per_class = 10;
    spec.answer_noise = 0.2;
    return spec;
}

}  // namespace

TEST_CASE("manifest round trip is bit exact") {
    TempDir dir("manifest");
    const Dataset original = synth_generate(small_spec(), 7);
    save_dataset(original, dir.path.string());
    const Dataset loaded = load_dataset(dir.file("manifest.json"));

    REQUIRE(loaded.size() == original.size());
    CHECK(loaded.n_classes == original.n_classes);
    CHECK(loaded.n_tags == original.n_tags);
    CHECK(loaded.feature_dim == original.feature_dim);
    CHECK(loaded.label_names == original.label_names);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded.samples[i].features == original.samples[i].features);
        CHECK(loaded.samples[i].answers == original.samples[i].answers);
        CHECK(loaded.samples[i].label == original.samples[i].label);
    }

    // Saving the loaded dataset reproduces the files byte for byte.
    TempDir dir2("manifest2");
    save_dataset(loaded, dir2.path.string());
    for (const char* name : {"features.csv", "answers.csv", "labels.csv", "manifest.json"})
        CHECK(testutil::slurp(dir.file(name)) == testutil::slurp(dir2.file(name)));
}

TEST_CASE("loader rejects alphabet violations naming the sample") {
    TempDir dir("alpha");
    const Dataset ds = synth_generate(small_spec(), 3);
    save_dataset(ds, dir.path.string());
    // Corrupt one answer to 0.5 (not an alphabet value).
    auto lines = read_lines(dir.file("answers.csv"));
    lines[2] = "0.5,0,0,0";
    std::string joined;
    for (const auto& l : lines) joined += l + "\n";
    write_text_file(dir.file("answers.csv"), joined);

    try {
        load_dataset(dir.file("manifest.json"));
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sample_2") != std::string::npos);
        CHECK(msg.find("answers") != std::string::npos);
    }
}

TEST_CASE("loader reports missing files and bad labels") {
    TempDir dir("badfiles");
    const Dataset ds = synth_generate(small_spec(), 3);
    save_dataset(ds, dir.path.string());

    SUBCASE("missing feature file") {
        std::filesystem::remove(dir.file("features.csv"));
        CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), io_error);
    }
    SUBCASE("label out of range") {
        auto lines = read_lines(dir.file("labels.csv"));
        lines[0] = "99";
        std::string joined;
        for (const auto& l : lines) joined += l + "\n";
        write_text_file(dir.file("labels.csv"), joined);
        CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), validation_error);
    }
    SUBCASE("row count mismatch") {
        const std::string labels = testutil::slurp(dir.file("labels.csv"));
        write_text_file(dir.file("labels.csv"), labels + "0\n");
        CHECK_THROWS_AS(load_dataset(dir.file("manifest.json")), validation_error);
    }
}

TEST_CASE("habitat-scale feature width loads") {
    TempDir dir("wide");
    SynthSpec spec = small_spec();
    spec.feature_dim = 8976;
    spec.n_classes = 2;
    spec.samples_per_class = 2;
    const Dataset ds = synth_generate(spec, 5);
    save_dataset(ds, dir.path.string());
    const Dataset loaded = load_dataset(dir.file("manifest.json"));
    CHECK(loaded.feature_dim == 8976);
    CHECK(loaded.size() == 4);
}

TEST_CASE("powerset encoding") {
    SUBCASE("two distinct singletons yield a codebook of size 2") {
        auto [book, labels] = powerset_encode({{1}, {1}, {2}});
        CHECK(book.size() == 2);
        CHECK(labels == std::vector<int>{0, 0, 1});
    }
    SUBCASE("order inside a combination does not matter") {
        auto [book, labels] = powerset_encode({{1, 2}, {2, 1}});
        CHECK(book.size() == 1);
        CHECK(labels[0] == labels[1]);
    }
    SUBCASE("encode then decode is the identity") {
        const std::vector<LabelSet> sets = {{3, 5}, {1}, {0, 2, 4}, {3, 5}, {1, 4}};
        auto [book, labels] = powerset_encode(sets);
        for (std::size_t i = 0; i < sets.size(); ++i)
            CHECK(powerset_decode(book, labels[i]) == sets[i]);
    }
    SUBCASE("unknown label is rejected") {
        auto [book, labels] = powerset_encode({{1}, {2}});
        CHECK_THROWS_AS(powerset_decode(book, 2), validation_error);
        CHECK_THROWS_AS(powerset_decode(book, -1), validation_error);
    }
    SUBCASE("codebook partitions exactly the distinct input combinations") {
        std::mt19937_64 rng(11);
        std::uniform_int_distribution<int> atom(0, 7);
        std::uniform_int_distribution<int> len(1, 4);
        std::vector<LabelSet> sets;
        for (int i = 0; i < 200; ++i) {
            LabelSet s;
            for (int j = 0; j < len(rng); ++j) s.push_back(atom(rng));
            sets.push_back(canonical_label_set(s));
        }
        auto [book, labels] = powerset_encode(sets);
        const std::set<LabelSet> distinct(sets.begin(), sets.end());
        REQUIRE(book.size() == static_cast<int>(distinct.size()));
        std::set<LabelSet> decoded;
        for (int c = 0; c < book.size(); ++c) decoded.insert(powerset_decode(book, c));
        CHECK(decoded == distinct);
    }
    SUBCASE("empty set is rejected") {
        CHECK_THROWS_AS(powerset_encode({LabelSet{}}), validation_error);
    }
}

TEST_CASE("repeated subsample splits") {
    SynthSpec spec = small_spec();
    spec.n_classes = 4;
    spec.samples_per_class = 12;
    const Dataset ds = synth_generate(spec, 21);

    SUBCASE("five repeats with exact per-class stratification") {
        const auto splits = repeated_subsample_splits(ds, 5, 7, 99);
        REQUIRE(splits.size() == 5);
        for (const auto& split : splits) {
            CHECK(split.train.size() == 4 * 7);
            CHECK(split.test.size() == ds.size() - 4 * 7);
            std::map<int, int> per_class;
            for (std::size_t i : split.train) per_class[ds.samples[i].label]++;
            for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 7);
            // Disjointness.
            std::set<std::size_t> train_set(split.train.begin(), split.train.end());
            for (std::size_t i : split.test) CHECK(train_set.count(i) == 0);
        }
    }
    SUBCASE("same seed gives identical splits") {
        const auto a = repeated_subsample_splits(ds, 3, 5, 123);
        const auto b = repeated_subsample_splits(ds, 3, 5, 123);
        for (int r = 0; r < 3; ++r) {
            CHECK(a[r].train == b[r].train);
            CHECK(a[r].test == b[r].test);
        }
        const auto c = repeated_subsample_splits(ds, 3, 5, 124);
        CHECK(a[0].train != c[0].train);
    }
    SUBCASE("class too small is rejected") {
        CHECK_THROWS_AS(repeated_subsample_splits(ds, 1, 12, 5), validation_error);
        CHECK_THROWS_AS(repeated_subsample_splits(ds, 1, 30, 5), validation_error);
    }
}

TEST_CASE("200 classes x 15 train gives 3000 train rows per repeat") {
    SynthSpec spec;
    spec.n_classes = 200;
    spec.n_tags = 4;
    spec.feature_dim = 2;
    spec.samples_per_class = 18;
    const Dataset ds = synth_generate(spec, 2);
    const auto splits = repeated_subsample_splits(ds, 2, 15, 7);
    for (const auto& split : splits) CHECK(split.train.size() == 3000);
}

TEST_CASE("fixed split") {
    const Dataset ds = synth_generate(small_spec(), 4);
    const SplitPair split = fixed_split(ds, 20, 3);
    CHECK(split.train.size() == 20);
    CHECK(split.test.size() == ds.size() - 20);
    const SplitPair again = fixed_split(ds, 20, 3);
    CHECK(split.train == again.train);
    CHECK_THROWS_AS(fixed_split(ds, 0, 1), validation_error);
    CHECK_THROWS_AS(fixed_split(ds, ds.size(), 1), validation_error);
}

TEST_CASE("synth generator") {
    SUBCASE("same spec and seed give byte-identical files") {
        TempDir a("synth_a"), b("synth_b");
        const SynthSpec spec = small_spec();
        save_dataset(synth_generate(spec, 42), a.path.string());
        save_dataset(synth_generate(spec, 42), b.path.string());
        for (const char* name : {"features.csv", "answers.csv", "labels.csv", "manifest.json"})
            CHECK(testutil::slurp(a.file(name)) == testutil::slurp(b.file(name)));
    }
    SUBCASE("all emitted answers are alphabet values") {
        SynthSpec spec = small_spec();
        spec.answer_noise = 0.7;
        const Dataset ds = synth_generate(spec, 9);
        for (const Sample& s : ds.samples)
            for (double v : s.answers) CHECK(is_certainty_value(v));
    }
    SUBCASE("noiseless distinct patterns separate classes perfectly") {
        SynthSpec spec = small_spec();
        spec.answer_noise = 0.0;
        const Dataset ds = synth_generate(spec, 17);
        std::map<std::vector<double>, std::set<int>> groups;
        for (const Sample& s : ds.samples) groups[s.answers].insert(s.label);
        CHECK(groups.size() == static_cast<std::size_t>(spec.n_classes));
        for (const auto& [answers, labels] : groups) CHECK(labels.size() == 1);
    }
    SUBCASE("uninformative answers carry near-zero mutual information") {
        SynthSpec spec;
        spec.n_classes = 5;
        spec.n_tags = 6;
        spec.feature_dim = 2;
        spec.samples_per_class = 400;
        spec.answers_informative = false;
        spec.answer_noise = 1.0;
        const Dataset ds = synth_generate(spec, 31);

        // Plug-in MI estimate per tag, in bits.
        const double n = static_cast<double>(ds.size());
        double max_mi = 0.0;
        for (int t = 0; t < spec.n_tags; ++t) {
            std::map<std::pair<int, int>, double> joint;
            std::map<int, double> p_symbol, p_label;
            for (const Sample& s : ds.samples) {
                const int k = certainty_symbol_index(s.answers[t]);
                joint[{k, s.label}] += 1.0 / n;
                p_symbol[k] += 1.0 / n;
                p_label[s.label] += 1.0 / n;
            }
            double mi = 0.0;
            for (const auto& [key, p] : joint)
                mi += p * std::log2(p / (p_symbol[key.first] * p_label[key.second]));
            max_mi = std::max(max_mi, mi);
        }
        CHECK(max_mi < 0.05);

        // Contrast: informative noiseless answers carry substantial MI.
        SynthSpec informative = spec;
        informative.answers_informative = true;
        informative.answer_noise = 0.0;
        const Dataset ds2 = synth_generate(informative, 31);
        std::map<std::pair<int, int>, double> joint;
        std::map<int, double> p_symbol, p_label;
        for (const Sample& s : ds2.samples) {
            const int k = certainty_symbol_index(s.answers[0]);
            joint[{k, s.label}] += 1.0 / n;
            p_symbol[k] += 1.0 / n;
            p_label[s.label] += 1.0 / n;
        }
        double mi = 0.0;
        for (const auto& [key, p] : joint)
            mi += p * std::log2(p / (p_symbol[key.first] * p_label[key.second]));
        CHECK(mi > 0.3);
    }
    SUBCASE("invalid specs are rejected") {
        SynthSpec spec = small_spec();
        spec.feature_noise_sigma = 0.0;
        CHECK_THROWS_AS(synth_generate(spec, 1), validation_error);
        spec = small_spec();
        spec.n_classes = 0;
        CHECK_THROWS_AS(synth_generate(spec, 1), validation_error);
        spec = small_spec();
        spec.n_tags = 1;
        spec.n_classes = 7;  // 6^1 < 7 distinct patterns impossible
        CHECK_THROWS_AS(synth_generate(spec, 1), validation_error);
    }
}

TEST_CASE("stratified holdout keeps every class represented") {
    SynthSpec spec = small_spec();
    spec.samples_per_class = 8;
    const Dataset ds = synth_generate(spec, 13);
    std::vector<std::size_t> pool(ds.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
    const auto labels = ds.labels();
    auto [kept, held] = stratified_holdout(labels, pool, 0.25, 5);
    CHECK(kept.size() + held.size() == pool.size());
    CHECK(held.size() == 3 * 2);  // 8 per class, 25% rounds to 2
    std::map<int, int> kept_per_class;
    for (std::size_t i : kept) kept_per_class[labels[i]]++;
    for (int c = 0; c < spec.n_classes; ++c) CHECK(kept_per_class[c] == 6);
}
