#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "gdgan/labels.hpp"

namespace gdgan {

/// CSV manifest: header `image_id,patient_id,age,<general...>,<detailed...>`.
/// Columns are located by name; extra columns are allowed and ignored except
/// `source_id`, which maps a row to the stored image it reuses (augmented sets).
std::vector<LabelRecord> load_manifest(const std::filesystem::path& path, const LabelSchema& schema);
std::vector<LabelRecord> parse_manifest(std::istream& in, const LabelSchema& schema);

/// Manifest rows plus, per row, the id of the stored image backing it.
struct TrainingManifest {
    std::vector<LabelRecord> rows;
    std::vector<std::string> sources;

    static TrainingManifest identity(std::vector<LabelRecord> records);
    std::size_t size() const { return rows.size(); }
};

TrainingManifest load_training_manifest(const std::filesystem::path& path, const LabelSchema& schema);

void write_manifest(std::ostream& out, const std::vector<LabelRecord>& records, const LabelSchema& schema);
void write_manifest(const std::filesystem::path& path, const std::vector<LabelRecord>& records,
                    const LabelSchema& schema);
void write_training_manifest(const std::filesystem::path& path, const TrainingManifest& manifest,
                             const LabelSchema& schema);

}  // namespace gdgan
