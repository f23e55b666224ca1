#pragma once

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace madet {

// Bad inputs (files, arguments, malformed data). CLI maps this to exit code 2.
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Broken internal invariant. CLI maps this to exit code 3.
struct internal_error : std::logic_error {
    using std::logic_error::logic_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw internal_error(what);
}

inline void require_input(bool cond, const std::string& what) {
    if (!cond) throw input_error(what);
}

// Deterministic random stream. All sampling goes through these helpers so the
// draw sequence never depends on library internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    // unbiased integer in [0, n)
    std::uint64_t below(std::uint64_t n) {
        require(n > 0, "Rng::below: empty range");
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() -
            std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do { v = next(); } while (v >= limit);
        return v % n;
    }

    double uniform01() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01(), u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
        return mean + stddev * z;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 eng_;
};

// Derives independent child seeds (e.g. one per fold) from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline int thread_count() {
    if (const char* s = std::getenv("MADET_THREADS")) {
        char* end = nullptr;
        long n = std::strtol(s, &end, 10);
        if (end && *end == '\0' && n > 0 && n < 1024) return int(n);
    }
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : int(n);
}

namespace detail {
inline bool& parallel_depth_flag() {
    thread_local bool inside = false;
    return inside;
}
}  // namespace detail

// Splits [0, n) into contiguous chunks, one worker thread per chunk. Chunks
// are disjoint so results are identical for any thread count. Nested calls run
// serially.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    if (n == 0) return;
    int workers = thread_count();
    if (workers <= 1 || n == 1 || detail::parallel_depth_flag()) {
        detail::parallel_depth_flag() = true;
        fn(std::size_t(0), n);
        detail::parallel_depth_flag() = false;
        return;
    }
    if (std::size_t(workers) > n) workers = int(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (int t = 0; t < workers; ++t) {
        std::size_t lo = std::size_t(t) * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            detail::parallel_depth_flag() = true;
            fn(lo, hi);
            detail::parallel_depth_flag() = false;
        });
    }
    for (auto& th : pool) th.join();
}

// ---- number <-> text helpers ----------------------------------------------

// Shortest decimal form that still round-trips a double.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double back = std::strtod(buf, nullptr);
    if (back == v) {
        for (int prec = 1; prec <= 16; ++prec) {
            char shorter[64];
            std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
            if (std::strtod(shorter, nullptr) == v) return shorter;
        }
    }
    return buf;
}

// Exact (bit-preserving) text form, for files that must round-trip.
inline std::string format_double_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& what) {
    if (s.empty()) throw input_error(what + ": empty number");
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        throw input_error(what + ": bad number '" + s + "'");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& what) {
    long long v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw input_error(what + ": bad integer '" + s + "'");
    return v;
}

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

}  // namespace madet
