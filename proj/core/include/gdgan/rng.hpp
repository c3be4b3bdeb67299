#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

#include <ATen/core/Generator.h>

namespace gdgan {

/// Mixes a base seed with string tags into a new 64-bit seed. Every random
/// draw in the pipeline is keyed this way, e.g. derive_seed(seed, {"oversample", "plan"}).
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> tags);

/// 64-bit FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

/// Portable random source. std::mt19937_64 is fully specified by the standard;
/// the distributions below are written out so results do not depend on the
/// standard library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p) { return uniform() < p; }
    /// Approximately standard normal (Box-Muller).
    double normal();

private:
    std::mt19937_64 engine_;
};

/// Torch CPU generator seeded deterministically.
at::Generator make_torch_generator(std::uint64_t seed);

}  // namespace gdgan
