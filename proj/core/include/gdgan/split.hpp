#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gdgan/labels.hpp"

namespace gdgan {

enum class SplitMode { by_image, by_patient };

std::string to_string(SplitMode mode);
SplitMode split_mode_from_string(const std::string& s);

struct SplitRatios {
    double train = 0.7;
    double validation = 0.1;
    double test = 0.2;
};

/// Disjoint, exhaustive train/validation/test partition of a manifest's ids.
/// Each partition lists ids in manifest order.
struct DatasetSplit {
    std::vector<std::string> train;
    std::vector<std::string> validation;
    std::vector<std::string> test;
    std::uint64_t seed = 0;
    SplitMode mode = SplitMode::by_image;

    std::size_t total() const { return train.size() + validation.size() + test.size(); }
    /// Content hash over all three partitions (and seed/mode).
    std::uint64_t hash() const;
    /// Content hash of the test partition alone.
    std::uint64_t test_hash() const;

    std::string to_json() const;
    static DatasetSplit from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static DatasetSplit load(const std::filesystem::path& path);
};

/// Deterministic for fixed (records, seed, mode). Partition sizes in by_image
/// mode are round(n*train), round(n*validation), remainder. In by_patient mode
/// whole patients are assigned in shuffled order until each quota is reached.
DatasetSplit make_split(const std::vector<LabelRecord>& records, SplitRatios ratios, std::uint64_t seed,
                        SplitMode mode = SplitMode::by_image);

/// Selects records whose image_id is in `ids`, in the order of `ids`.
std::vector<LabelRecord> select_records(const std::vector<LabelRecord>& records, const std::vector<std::string>& ids);

}  // namespace gdgan
