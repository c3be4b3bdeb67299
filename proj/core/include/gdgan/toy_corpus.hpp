#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gdgan/image_store.hpp"
#include "gdgan/labels.hpp"
#include "gdgan/rng.hpp"

namespace gdgan {

/// Prevalence of toy detailed labels 1..3; label 0 uses the caller's rare rate.
inline constexpr std::array<double, 3> kToyCommonRates = {0.15, 0.25, 0.35};

struct ToyCorpus {
    LabelSchema schema;
    std::vector<LabelRecord> records;
    MemoryStore images;
};

/// Procedural stand-in for a chest X-ray corpus. General labels are global
/// image properties (stripe orientation, frame inset); detailed labels are
/// bright localized marks at fixed quadrant positions. Requires n >= 100 and
/// 0 < rare_rate <= 0.5 (BadRate / BadArgument otherwise).
ToyCorpus generate_toy_corpus(std::size_t n, double rare_rate, std::uint64_t seed);

/// Renders one toy image for the given labels.
RawImage render_toy_image(const std::vector<int>& general, const std::vector<std::uint8_t>& detailed, Rng& rng);

}  // namespace gdgan
