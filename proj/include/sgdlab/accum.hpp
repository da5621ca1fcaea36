#pragma once

// Deterministic reductions for Monte Carlo ensembles: pairwise summation in
// fixed index order, plus a block scheduler whose results are independent of
// the number of worker threads.

#include <array>
#include <atomic>
#include <cstdint>
#include <cmath>
#include <stdexcept>
#include <thread>
#include <vector>

namespace sgdlab {

// Binary-counter pairwise summation: partial k holds the sum of a completed
// run of 2^k consecutive inputs.  Result depends only on insertion order.
class PairwiseSum {
public:
    void add(double x) {
        std::uint64_t c = count_;
        int lvl = 0;
        while (c & 1u) {
            x += part_[lvl];
            part_[lvl] = 0.0;
            ++lvl;
            c >>= 1;
        }
        part_[lvl] = x;
        ++count_;
    }

    double total() const {
        double s = 0.0;
        std::uint64_t c = count_;
        for (int lvl = 0; c != 0; ++lvl, c >>= 1)
            if (c & 1u) s += part_[lvl];
        return s;
    }

    std::uint64_t count() const { return count_; }

private:
    std::array<double, 64> part_{};
    std::uint64_t count_ = 0;
};

// Pairwise fold of per-block totals, in block index order.
inline double pairwise_total(std::vector<double> v) {
    if (v.empty()) return 0.0;
    while (v.size() > 1) {
        std::size_t half = v.size() / 2;
        for (std::size_t i = 0; i < half; ++i) v[i] = v[2 * i] + v[2 * i + 1];
        if (v.size() & 1u) {
            v[half] = v.back();
            v.resize(half + 1);
        } else {
            v.resize(half);
        }
    }
    return v[0];
}

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n_samples = 0;
};

// Mean and standard error from block sums of x and x^2.
inline Estimate estimate_from_sums(double s, double s2, std::int64_t n) {
    Estimate e;
    e.n_samples = n;
    if (n <= 0) return e;
    e.value = s / static_cast<double>(n);
    if (n >= 2) {
        double var = (s2 / static_cast<double>(n) - e.value * e.value) *
                     (static_cast<double>(n) / static_cast<double>(n - 1));
        if (var < 0.0) var = 0.0;
        e.std_error = std::sqrt(var / static_cast<double>(n));
    }
    return e;
}

// Runs fn(block_index, begin, end) over [0,n) split into fixed-size blocks.
// The block structure (and therefore any per-block accumulation) does not
// depend on the thread count; callers combine per-block results in block
// index order.
template <class Fn>
void for_each_block(std::int64_t n, std::int64_t block_size, int threads, Fn&& fn) {
    if (n <= 0) return;
    if (block_size <= 0) throw std::invalid_argument("block_size must be positive");
    std::int64_t n_blocks = (n + block_size - 1) / block_size;
    if (threads <= 1 || n_blocks == 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b)
            fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        return;
    }
    std::atomic<std::int64_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::int64_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            fn(b, b * block_size, std::min(n, (b + 1) * block_size));
        }
    };
    int n_workers = static_cast<int>(std::min<std::int64_t>(threads, n_blocks));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

inline constexpr std::int64_t kEnsembleBlock = 4096;

}  // namespace sgdlab
