#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace eesim {

// One step of the splitmix64 sequence (advances the state).
std::uint64_t splitmix64(std::uint64_t& state);

// FNV-1a hash of a byte string.
std::uint64_t fnv1a64(std::string_view s);

// Derives an independent sub-seed from a top-level seed and a purpose tag
// ("split", "gen", ...), so one experiment seed drives several uncorrelated
// streams.
std::uint64_t fork_seed(std::uint64_t seed, std::string_view purpose);

// Deterministic random source. The raw stream is std::mt19937_64, whose
// output is pinned bit-for-bit by the C++ standard; every distribution
// transform is implemented here because the std:: distribution classes are
// implementation-defined and would break cross-platform reproducibility.
class Engine {
  public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform01();

    // Uniform integer on [0, n); unbiased via rejection sampling. n >= 1.
    std::uint64_t uniform_below(std::uint64_t n);

    // Standard normal via Box-Muller; always consumes exactly two uniforms.
    double normal();

    // Gamma(alpha, 1) via Marsaglia-Tsang, with the power boost for alpha < 1.
    double gamma(double alpha);

    // Symmetric Dirichlet(alpha) over k components.
    std::vector<double> dirichlet(std::size_t k, double alpha);

    // Index draw from a probability vector via inverse CDF.
    std::size_t categorical(const std::vector<double>& probs);

    // In-place Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_below(i))]);
        }
    }

  private:
    std::mt19937_64 gen_;
};

}  // namespace eesim
