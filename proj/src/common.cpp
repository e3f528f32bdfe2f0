#include "fusekit/common.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace fusekit {

namespace {
std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ (index + 0x5851f42d4c957f2dULL));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;  // all -inf (or an explicit +inf)
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

void normalize_log_scores(std::vector<double>& log_scores) {
    const double lse = log_sum_exp(log_scores);
    if (!std::isfinite(lse)) {
        const double u = 1.0 / static_cast<double>(log_scores.size());
        std::fill(log_scores.begin(), log_scores.end(), u);
        return;
    }
    for (double& x : log_scores) x = std::exp(x - lse);
}

void normalize(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    if (s <= 0.0) {
        std::fill(v.begin(), v.end(), 1.0 / static_cast<double>(v.size()));
        return;
    }
    for (double& x : v) x /= s;
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

double entropy_bits(std::span<const double> dist) {
    double total = 0.0;
    for (double x : dist) {
        if (x < 0.0) throw validation_error("entropy: negative entry");
        total += x;
    }
    if (total <= 0.0) throw validation_error("entropy: all-zero distribution");
    double e = 0.0;
    for (double x : dist) {
        if (x > 0.0) {
            const double p = x / total;
            e -= p * std::log2(p);
        }
    }
    return e;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& context) {
    double out = 0.0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw validation_error(context + ": expected a number, got '" + std::string(text) + "'");
    return out;
}

long long parse_int(std::string_view text, const std::string& context) {
    long long out = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
        throw validation_error(context + ": expected an integer, got '" + std::string(text) + "'");
    return out;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> out(n);
    for (auto& i : out) i = pick(rng);
    return out;
}

std::vector<int> sample_without_replacement(int k, int range, std::mt19937_64& rng) {
    if (k < 0 || k > range) throw validation_error("sample_without_replacement: k out of range");
    // Partial Fisher-Yates over an index array.
    std::vector<int> pool(range);
    for (int i = 0; i < range; ++i) pool[i] = i;
    for (int i = 0; i < k; ++i) {
        std::uniform_int_distribution<int> pick(i, range - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    const int t = std::min<std::size_t>(resolve_threads(threads), n);
    if (t <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(t);
    std::exception_ptr error;
    std::mutex error_mutex;
    for (int w = 0; w < t; ++w) {
        const std::size_t lo = n * w / t;
        const std::size_t hi = n * (w + 1) / t;
        workers.emplace_back([&, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::scoped_lock lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (error) std::rethrow_exception(error);
}

void Matrix::set_row(std::size_t r, std::span<const double> values) {
    if (values.size() != cols_) throw validation_error("Matrix::set_row: width mismatch");
    std::copy(values.begin(), values.end(), data_.begin() + r * cols_);
}

}  // namespace fusekit
