// Shared numerics, RNG seeding and small utilities used across the toolkit.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fusekit {

// Missing/unreadable files and malformed containers.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Data or configuration that violates a documented schema or precondition.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Derives an independent sub-seed from (seed, index) so that per-bag /
// per-tree / per-repeat RNG streams are stable under parallel scheduling.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

// log(sum_i exp(v_i)); tolerates -inf entries, returns -inf for all -inf.
double log_sum_exp(std::span<const double> v);

// Replaces log-domain scores by the normalized probabilities exp(v)/sum.
// Falls back to the uniform distribution when every score is -inf.
void normalize_log_scores(std::vector<double>& log_scores);

// Normalizes a non-negative vector to the simplex (uniform fallback on zero sum).
void normalize(std::vector<double>& v);

// Index of the maximum element; ties resolved toward the lowest index.
std::size_t argmax(std::span<const double> v);

double entropy_bits(std::span<const double> dist);

// Shortest round-trip decimal text for a double (stable across runs).
std::string format_double(double v);
double parse_double(std::string_view text, const std::string& context);
long long parse_int(std::string_view text, const std::string& context);

// n indices drawn uniformly with replacement from [0, n).
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::mt19937_64& rng);

// k distinct values from [0, range), returned sorted ascending.
std::vector<int> sample_without_replacement(int k, int range, std::mt19937_64& rng);

// Runs body(i) for i in [0, n) over at most `threads` workers. Each index
// must touch only its own outputs; results are then independent of the
// thread count. threads <= 0 means hardware concurrency.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);
int resolve_threads(int requested);

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::vector<double> row_vec(std::size_t r) const {
        return std::vector<double>(data_.begin() + r * cols_, data_.begin() + (r + 1) * cols_);
    }
    void set_row(std::size_t r, std::span<const double> values);
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }
    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace fusekit
