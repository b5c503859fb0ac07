#pragma once

// Small shared utilities: error type, stable hashing, worker pool helper.
// Hashing is pinned to FNV-1a/64 + a splitmix64 finalizer so every artifact
// that depends on it (bucketed embeddings, per-question seeds) is reproducible
// across platforms and builds.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace epr {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Seed for all per-question randomness: global seed xor a stable hash of the
// question id, so question order and worker count never change the draws.
constexpr std::uint64_t question_seed(std::uint64_t global_seed, std::string_view qid) {
    return global_seed ^ fnv1a64(qid);
}

std::string to_lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Runs fn(0..n) over `workers` threads with a static partition. Results must
// be written to per-index slots; exceptions are rethrown on the caller thread.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace epr
