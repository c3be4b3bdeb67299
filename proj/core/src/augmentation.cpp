#include "gdgan/augmentation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>
#include <torch/torch.h>

#include "gdgan/error.hpp"
#include "gdgan/gan_sampling.hpp"
#include "gdgan/rng.hpp"

namespace gdgan {

using nlohmann::json;

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::none: return "none";
        case Strategy::undersample: return "undersample";
        case Strategy::oversample: return "oversample";
        case Strategy::acgan: return "acgan";
        case Strategy::gdgan: return "gdgan";
    }
    return "unknown";
}

Strategy strategy_from_string(const std::string& s) {
    for (auto st : all_strategies())
        if (to_string(st) == s) return st;
    raise(ErrorKind::BadArgument, "unknown strategy '" + s + "'");
}

std::vector<Strategy> all_strategies() {
    return {Strategy::none, Strategy::undersample, Strategy::oversample, Strategy::acgan, Strategy::gdgan};
}

std::size_t AugmentationPlan::duplicate_count() const {
    std::size_t n = 0;
    for (const auto& d : duplicate) n += d.second;
    return n;
}

std::size_t AugmentationPlan::synthesize_count() const {
    std::size_t n = 0;
    for (const auto& s : synthesize) n += s.count;
    return n;
}

void AugmentationPlan::check_invariants() const {
    auto fail = [&](const std::string& why) { raise(ErrorKind::BadArgument, to_string(strategy) + " plan: " + why); };
    switch (strategy) {
        case Strategy::none:
        case Strategy::undersample:
            if (!duplicate.empty() || !synthesize.empty()) fail("must not duplicate or synthesize");
            break;
        case Strategy::oversample:
            if (!synthesize.empty()) fail("must not synthesize");
            break;
        case Strategy::acgan:
        case Strategy::gdgan:
            if (!duplicate.empty()) fail("must not duplicate");
            break;
    }
    std::unordered_map<std::string, int> kept;
    for (const auto& k : keep) kept[k] = 1;
    for (const auto& [id, count] : duplicate)
        if (!kept.count(id)) fail("duplicates '" + id + "' which is not kept");
    if (target_counts.count("total") && target_counts.at("total") != total()) fail("target total mismatch");
}

std::string AugmentationPlan::to_json() const {
    json j;
    j["strategy"] = to_string(strategy);
    j["seed"] = seed;
    j["focus_label"] = focus_label;
    j["targets"] = {{"total", targets.total}, {"focus", targets.focus}};
    j["keep_count"] = keep.size();
    j["keep"] = keep;
    j["duplicates"] = json::array();
    for (const auto& [id, count] : duplicate) j["duplicates"].push_back({{"id", id}, {"count", count}});
    j["synthesize"] = json::array();
    for (const auto& s : synthesize)
        j["synthesize"].push_back({{"general", s.general}, {"detailed", s.detailed}, {"count", s.count}});
    j["target_counts"] = target_counts;
    return j.dump();
}

AugmentationPlan AugmentationPlan::from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        AugmentationPlan p;
        p.strategy = strategy_from_string(j.at("strategy").get<std::string>());
        p.seed = j.at("seed").get<std::uint64_t>();
        p.focus_label = j.at("focus_label").get<std::string>();
        p.targets.total = j.at("targets").at("total").get<std::size_t>();
        p.targets.focus = j.at("targets").at("focus").get<std::size_t>();
        p.keep = j.at("keep").get<std::vector<std::string>>();
        for (const auto& d : j.at("duplicates")) p.duplicate.emplace_back(d.at("id"), d.at("count"));
        for (const auto& s : j.at("synthesize"))
            p.synthesize.push_back({s.at("general").get<std::vector<int>>(),
                                    s.at("detailed").get<std::vector<std::uint8_t>>(), s.at("count").get<std::size_t>()});
        p.target_counts = j.at("target_counts").get<std::map<std::string, std::size_t>>();
        if (j.at("keep_count").get<std::size_t>() != p.keep.size())
            raise(ErrorKind::CorruptFile, "keep_count disagrees with keep list");
        return p;
    } catch (const json::exception& e) {
        raise(ErrorKind::CorruptFile, std::string("bad plan file: ") + e.what());
    }
}

void AugmentationPlan::save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(ErrorKind::IoError, "cannot write " + path.string());
    f << to_json() << '\n';
}

AugmentationPlan AugmentationPlan::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) raise(ErrorKind::MissingArtifact, "cannot read " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
}

namespace {

using LabelKey = std::pair<std::vector<int>, std::vector<std::uint8_t>>;

/// Records (indices) that are focus-negative but carry another minority label;
/// all focus-negative records when there are none.
std::vector<std::size_t> minority_pool(const std::vector<LabelRecord>& train, std::size_t focus, double threshold) {
    const std::size_t d = train.front().detailed.size();
    std::vector<bool> minority(d, false);
    for (std::size_t k = 0; k < d; ++k)
        if (k != focus)
            minority[k] = static_cast<double>(count_positive(train, k)) < threshold * static_cast<double>(train.size());
    std::vector<std::size_t> pool, negatives;
    for (std::size_t i = 0; i < train.size(); ++i) {
        if (train[i].has(focus)) continue;
        negatives.push_back(i);
        for (std::size_t k = 0; k < d; ++k)
            if (minority[k] && train[i].has(k)) {
                pool.push_back(i);
                break;
            }
    }
    return pool.empty() ? negatives : pool;
}

void fill_target_counts(AugmentationPlan& plan, const std::vector<LabelRecord>& train, const LabelSchema& schema) {
    std::unordered_map<std::string, const LabelRecord*> by_id;
    for (const auto& r : train) by_id[r.image_id] = &r;
    std::vector<std::size_t> counts(schema.detailed_labels.size(), 0);
    auto add = [&](const std::vector<std::uint8_t>& det, std::size_t times) {
        for (std::size_t k = 0; k < det.size(); ++k) counts[k] += det[k] * times;
    };
    for (const auto& id : plan.keep) add(by_id.at(id)->detailed, 1);
    for (const auto& [id, c] : plan.duplicate) add(by_id.at(id)->detailed, c);
    for (const auto& s : plan.synthesize) add(s.detailed, s.count);
    plan.target_counts.clear();
    plan.target_counts["total"] = plan.total();
    for (std::size_t k = 0; k < counts.size(); ++k) plan.target_counts[schema.detailed_labels[k]] = counts[k];
}

}  // namespace

AugmentationPlan build_plan(Strategy strategy, const std::vector<LabelRecord>& train, const LabelSchema& schema,
                            const std::string& focus_label, PlanTargets targets, std::uint64_t seed,
                            PlanOptions options) {
    if (train.empty()) raise(ErrorKind::EmptyInput, "empty train split");
    const std::size_t focus = schema.detailed_index_or_throw(focus_label);
    const std::size_t n = train.size();
    const std::size_t n_focus = count_positive(train, focus);
    Rng rng(derive_seed(seed, {"plan", to_string(strategy)}));

    AugmentationPlan plan;
    plan.strategy = strategy;
    plan.seed = seed;
    plan.focus_label = focus_label;
    plan.targets = targets;
    auto unachievable = [&](const std::string& why) {
        raise(ErrorKind::UnachievableTarget, to_string(strategy) + ": " + why + " (train has " + std::to_string(n) +
                                                 " records, " + std::to_string(n_focus) + " positive for " +
                                                 focus_label + ")");
    };

    switch (strategy) {
        case Strategy::none: {
            plan.targets = {n, n_focus};
            for (const auto& r : train) plan.keep.push_back(r.image_id);
            break;
        }
        case Strategy::undersample: {
            if (targets.focus != n_focus) unachievable("undersampling cannot change the focus count");
            if (targets.total > n) unachievable("undersampling cannot grow the train set");
            std::vector<std::size_t> negatives;
            for (std::size_t i = 0; i < n; ++i)
                if (!train[i].has(focus)) negatives.push_back(i);
            const std::size_t remove = n - targets.total;
            if (remove > negatives.size()) unachievable("not enough focus-negative records to remove");
            // Partial Fisher–Yates: the first `remove` slots are the removed records.
            for (std::size_t i = 0; i < remove; ++i) std::swap(negatives[i], negatives[i + rng.below(negatives.size() - i)]);
            std::vector<bool> removed(n, false);
            for (std::size_t i = 0; i < remove; ++i) removed[negatives[i]] = true;
            for (std::size_t i = 0; i < n; ++i)
                if (!removed[i]) plan.keep.push_back(train[i].image_id);
            break;
        }
        case Strategy::oversample:
        case Strategy::acgan:
        case Strategy::gdgan: {
            if (targets.focus < n_focus) unachievable("focus target below current focus count");
            const std::size_t focus_extra = targets.focus - n_focus;
            if (targets.total < n + focus_extra) unachievable("total target too small for the focus target");
            const std::size_t other_extra = targets.total - n - focus_extra;
            std::vector<std::size_t> positives;
            for (std::size_t i = 0; i < n; ++i)
                if (train[i].has(focus)) positives.push_back(i);
            if (focus_extra > 0 && positives.empty()) unachievable("no focus-positive records to draw from");
            std::vector<std::size_t> pool;
            if (other_extra > 0) {
                pool = minority_pool(train, focus, options.minority_threshold);
                if (pool.empty()) unachievable("no focus-negative records to fill the total target");
            }
            for (const auto& r : train) plan.keep.push_back(r.image_id);

            if (strategy == Strategy::oversample) {
                std::vector<std::size_t> copies(n, 0);
                for (std::size_t i = 0; i < focus_extra; ++i) ++copies[positives[rng.below(positives.size())]];
                for (std::size_t i = 0; i < other_extra; ++i) ++copies[pool[rng.below(pool.size())]];
                for (std::size_t i = 0; i < n; ++i)
                    if (copies[i]) plan.duplicate.emplace_back(train[i].image_id, copies[i]);
            } else {
                std::map<LabelKey, std::size_t> entries;
                auto draw = [&](const std::vector<std::size_t>& detailed_source) {
                    const auto& det = train[detailed_source[rng.below(detailed_source.size())]].detailed;
                    const auto& gen = train[rng.below(n)].general;
                    ++entries[{gen, det}];
                };
                for (std::size_t i = 0; i < focus_extra; ++i) draw(positives);
                for (std::size_t i = 0; i < other_extra; ++i) draw(pool);
                for (const auto& [key, count] : entries) plan.synthesize.push_back({key.first, key.second, count});
            }
            break;
        }
    }
    fill_target_counts(plan, train, schema);
    const std::size_t realized_focus = plan.target_counts.at(focus_label);
    if (plan.total() != plan.targets.total || realized_focus != plan.targets.focus)
        raise(ErrorKind::UnachievableTarget, "plan realized (" + std::to_string(plan.total()) + ", " +
                                                 std::to_string(realized_focus) + ") instead of targets");
    plan.check_invariants();
    return plan;
}

MaterializedSet materialize(const AugmentationPlan& plan, const std::vector<LabelRecord>& train, ImageStore& delta,
                            const GeneratorSet& generators, std::uint64_t seed, std::int64_t batch_size) {
    plan.check_invariants();
    std::unordered_map<std::string, const LabelRecord*> by_id;
    for (const auto& r : train) by_id[r.image_id] = &r;
    auto lookup = [&](const std::string& id) -> const LabelRecord& {
        auto it = by_id.find(id);
        if (it == by_id.end()) raise(ErrorKind::BadArgument, "plan references '" + id + "' outside the train split");
        return *it->second;
    };

    if (!plan.synthesize.empty()) {
        if (plan.strategy == Strategy::acgan && !generators.acgan)
            raise(ErrorKind::MissingGenerator, "acgan plan needs a trained ACGAN bundle");
        if (plan.strategy == Strategy::gdgan && (!generators.stage1 || !generators.stage2))
            raise(ErrorKind::MissingGenerator, "gdgan plan needs trained stage-1 and stage-2 bundles");
    }

    MaterializedSet out;
    auto& m = out.manifest;
    for (const auto& id : plan.keep) {
        m.rows.push_back(lookup(id));
        m.sources.push_back(id);
    }
    for (const auto& [id, count] : plan.duplicate) {
        const auto& src = lookup(id);
        for (std::size_t k = 1; k <= count; ++k) {
            auto row = src;
            row.image_id = "dup" + std::to_string(k) + "_" + id;
            m.rows.push_back(std::move(row));
            m.sources.push_back(id);
        }
    }

    // Flatten synthesis entries into one label list, generated in fixed-size batches.
    std::vector<const SynthesisEntry*> flat;
    for (const auto& s : plan.synthesize)
        for (std::size_t c = 0; c < s.count; ++c) flat.push_back(&s);
    auto gen = make_torch_generator(derive_seed(seed, {"materialize", to_string(plan.strategy)}));
    char buf[64];
    for (std::size_t start = 0; start < flat.size(); start += static_cast<std::size_t>(batch_size)) {
        const auto len = static_cast<std::int64_t>(std::min<std::size_t>(batch_size, flat.size() - start));
        const auto g = static_cast<std::int64_t>(flat[start]->general.size());
        const auto d = static_cast<std::int64_t>(flat[start]->detailed.size());
        auto general = torch::empty({len, g}, torch::kLong);
        auto detailed = torch::empty({len, d}, torch::kFloat32);
        for (std::int64_t i = 0; i < len; ++i) {
            const auto* e = flat[start + i];
            for (std::int64_t k = 0; k < g; ++k) general[i][k] = e->general[k];
            for (std::int64_t k = 0; k < d; ++k) detailed[i][k] = static_cast<float>(e->detailed[k]);
        }
        const auto images = plan.strategy == Strategy::acgan
                                ? sample_acgan(*generators.acgan, general, detailed, gen).images
                                : sample_gdgan(*generators.stage1, *generators.stage2, general, detailed, gen).images;
        for (std::int64_t i = 0; i < len; ++i) {
            std::snprintf(buf, sizeof buf, "syn_%s_%07zu", to_string(plan.strategy).c_str(), start + i);
            const std::string id = buf;
            delta.write(id, quantize(images.image(i)));
            LabelRecord row;
            row.image_id = id;
            row.patient_id = "synthetic";
            row.general = flat[start + i]->general;
            row.detailed = flat[start + i]->detailed;
            m.rows.push_back(std::move(row));
            m.sources.push_back(id);
            out.synthetic_ids.push_back(id);
        }
    }
    if (m.size() != plan.total())
        raise(ErrorKind::BadArgument, "materialized " + std::to_string(m.size()) + " rows for a plan of " +
                                          std::to_string(plan.total()));
    return out;
}

}  // namespace gdgan
