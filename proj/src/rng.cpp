#include "eesim/rng.hpp"

#include <cmath>
#include <numbers>

#include "eesim/error.hpp"

namespace eesim {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t fork_seed(std::uint64_t seed, std::string_view purpose) {
    std::uint64_t state = seed ^ fnv1a64(purpose);
    splitmix64(state);
    return splitmix64(state);
}

double Engine::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Engine::uniform_below(std::uint64_t n) {
    if (n == 0) throw ValidationError("uniform_below: n must be >= 1");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    std::uint64_t r;
    do {
        r = next_u64();
    } while (r < threshold);
    return r % n;
}

double Engine::normal() {
    const double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Engine::gamma(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ValidationError("gamma: alpha must be positive and finite");
    }
    if (alpha < 1.0) {
        const double u = uniform01();
        return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    const double d = alpha - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x;
        double v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> Engine::dirichlet(std::size_t k, double alpha) {
    std::vector<double> q(k);
    double sum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        q[i] = gamma(alpha);
        sum += q[i];
    }
    if (sum <= 0.0) {  // all draws underflowed; fall back to uniform
        for (double& v : q) v = 1.0 / static_cast<double>(k);
        return q;
    }
    for (double& v : q) v /= sum;
    return q;
}

std::size_t Engine::categorical(const std::vector<double>& probs) {
    if (probs.empty()) throw ValidationError("categorical: empty probability vector");
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    return probs.size() - 1;  // guards against round-off in the final bin
}

}  // namespace eesim
