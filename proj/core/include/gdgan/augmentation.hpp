#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "gdgan/gan_bundle.hpp"
#include "gdgan/image_store.hpp"
#include "gdgan/labels.hpp"
#include "gdgan/manifest.hpp"

namespace gdgan {

enum class Strategy { none, undersample, oversample, acgan, gdgan };

std::string to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
std::vector<Strategy> all_strategies();

struct PlanTargets {
    std::size_t total = 0;
    std::size_t focus = 0;
};

struct SynthesisEntry {
    std::vector<int> general;
    std::vector<std::uint8_t> detailed;
    std::size_t count = 0;
};

/// Declarative recipe for one augmented training set. Only train-split records
/// are referenced.
struct AugmentationPlan {
    Strategy strategy = Strategy::none;
    std::uint64_t seed = 0;
    std::string focus_label;
    PlanTargets targets;
    std::vector<std::string> keep;
    /// Extra copies per kept record, listed in keep order.
    std::vector<std::pair<std::string, std::size_t>> duplicate;
    std::vector<SynthesisEntry> synthesize;
    /// Realized counts: "total" plus one entry per detailed label.
    std::map<std::string, std::size_t> target_counts;

    std::size_t duplicate_count() const;
    std::size_t synthesize_count() const;
    std::size_t total() const { return keep.size() + duplicate_count() + synthesize_count(); }

    /// Checks the per-strategy structural invariants (BadArgument on violation).
    void check_invariants() const;

    std::string to_json() const;
    static AugmentationPlan from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static AugmentationPlan load(const std::filesystem::path& path);
};

struct PlanOptions {
    /// Detailed labels with train prevalence below this count as minority
    /// classes; oversample/synthesis fills the gap between the focus target and
    /// the total target with records carrying such labels.
    double minority_threshold = 0.2;
};

/// Builds a plan whose realized (total, focus) equal `targets` exactly.
/// `none` ignores targets and reproduces the train set. Throws UnachievableTarget.
AugmentationPlan build_plan(Strategy strategy, const std::vector<LabelRecord>& train, const LabelSchema& schema,
                            const std::string& focus_label, PlanTargets targets, std::uint64_t seed,
                            PlanOptions options = {});

/// Trained generators available for synthesis.
struct GeneratorSet {
    GanBundle* acgan = nullptr;
    GanBundle* stage1 = nullptr;
    GanBundle* stage2 = nullptr;
};

struct MaterializedSet {
    TrainingManifest manifest;
    std::vector<std::string> synthetic_ids;
};

/// Expands a plan into a training manifest. Synthetic images are written to
/// `delta` as `syn_<strategy>_<index>`; duplicate rows get ids
/// `dup<k>_<original>` and reuse the original image via the manifest's source
/// column. Deterministic for a fixed seed. Throws MissingGenerator.
MaterializedSet materialize(const AugmentationPlan& plan, const std::vector<LabelRecord>& train,
                            ImageStore& delta, const GeneratorSet& generators, std::uint64_t seed,
                            std::int64_t batch_size = 256);

}  // namespace gdgan
