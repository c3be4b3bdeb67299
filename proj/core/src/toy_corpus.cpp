#include "gdgan/toy_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "gdgan/error.hpp"

namespace gdgan {

namespace {
constexpr int kMarkCenters[4][2] = {{20, 20}, {20, 44}, {44, 20}, {44, 44}};
constexpr int kMarkRadius = 5;
}  // namespace

RawImage render_toy_image(const std::vector<int>& general, const std::vector<std::uint8_t>& detailed, Rng& rng) {
    constexpr int S = kImageSize;
    std::vector<double> px(S * S);
    const bool vertical = general.at(0) == 1;
    const int inset = general.at(1) == 1 ? 3 : 12;
    const double phase = rng.uniform(0.0, 8.0);

    for (int y = 0; y < S; ++y) {
        for (int x = 0; x < S; ++x) {
            const double coord = vertical ? x : y;
            double v = 70.0 + 28.0 * std::sin((coord + phase) * 2.0 * 3.14159265358979 / 8.0);
            const bool on_frame = (x >= inset && x < S - inset && y >= inset && y < S - inset) &&
                                  (x < inset + 3 || x >= S - inset - 3 || y < inset + 3 || y >= S - inset - 3);
            if (on_frame) v += 60.0;
            px[y * S + x] = v;
        }
    }
    for (std::size_t k = 0; k < detailed.size() && k < 4; ++k) {
        if (!detailed[k]) continue;
        const int cy = kMarkCenters[k][0] + static_cast<int>(rng.below(5)) - 2;
        const int cx = kMarkCenters[k][1] + static_cast<int>(rng.below(5)) - 2;
        for (int y = cy - kMarkRadius; y <= cy + kMarkRadius; ++y)
            for (int x = cx - kMarkRadius; x <= cx + kMarkRadius; ++x)
                if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= kMarkRadius * kMarkRadius) px[y * S + x] = 235.0;
    }
    RawImage img{S, S, 1, std::vector<std::uint8_t>(S * S)};
    for (int i = 0; i < S * S; ++i) {
        const double noisy = px[i] + 6.0 * rng.normal();
        img.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(noisy), 0L, 255L));
    }
    return img;
}

ToyCorpus generate_toy_corpus(std::size_t n, double rare_rate, std::uint64_t seed) {
    if (n < 100) raise(ErrorKind::BadArgument, "toy corpus needs n >= 100");
    if (!(rare_rate > 0.0 && rare_rate <= 0.5)) raise(ErrorKind::BadRate, "rare_rate must be in (0, 0.5]");

    ToyCorpus corpus;
    corpus.schema = LabelSchema::toy();
    corpus.records.reserve(n);
    Rng labels(derive_seed(seed, {"toy", "labels"}));
    Rng pixels(derive_seed(seed, {"toy", "pixels"}));

    int patient = 0;
    int left_for_patient = 0;
    int patient_age = 0;
    char buf[32];
    for (std::size_t i = 0; i < n; ++i) {
        if (left_for_patient == 0) {
            ++patient;
            left_for_patient = 1 + static_cast<int>(labels.below(3));
            patient_age = 20 + static_cast<int>(labels.below(60));
        }
        --left_for_patient;
        LabelRecord r;
        std::snprintf(buf, sizeof buf, "toy_%06zu", i);
        r.image_id = buf;
        std::snprintf(buf, sizeof buf, "p%05d", patient);
        r.patient_id = buf;
        r.age = patient_age;
        r.general = {static_cast<int>(labels.below(2)), static_cast<int>(labels.below(2))};
        r.detailed.push_back(labels.bernoulli(rare_rate) ? 1 : 0);
        for (double rate : kToyCommonRates) r.detailed.push_back(labels.bernoulli(rate) ? 1 : 0);
        corpus.images.write(r.image_id, render_toy_image(r.general, r.detailed, pixels));
        corpus.records.push_back(std::move(r));
    }
    return corpus;
}

}  // namespace gdgan
