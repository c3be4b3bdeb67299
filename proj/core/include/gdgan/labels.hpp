#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gdgan {

/// A categorical label that conditions the first-stage generator. The value
/// tokens are what appears in a manifest column; cardinality = tokens.size().
struct GeneralLabel {
    std::string name;
    std::vector<std::string> tokens;

    int cardinality() const { return static_cast<int>(tokens.size()); }
};

struct LabelSchema {
    std::vector<GeneralLabel> general_labels;
    std::vector<std::string> detailed_labels;
    std::vector<std::string> metadata_fields;

    /// NIH Chest X-ray layout: gender {M,F}, view position {PA,AP}, 14 findings.
    static LabelSchema chest_xray();
    /// Toy corpus layout: stroke orientation {H,V}, frame size {S,L}, 4 marks.
    static LabelSchema toy();

    /// Throws BadArgument when names repeat, a cardinality is < 2, or a group is empty.
    void validate() const;

    std::optional<std::size_t> detailed_index(const std::string& name) const;
    std::size_t detailed_index_or_throw(const std::string& name) const;
    /// Sum of general cardinalities (width of the one-hot general encoding).
    int general_one_hot_width() const;
    std::vector<int> general_cardinalities() const;
};

struct LabelRecord {
    std::string image_id;
    std::string patient_id;
    std::vector<int> general;
    std::vector<std::uint8_t> detailed;
    int age = 0;

    bool has(std::size_t detailed_index) const { return detailed.at(detailed_index) != 0; }
};

/// Checks a record against the schema; returns an error description or empty.
std::string check_record(const LabelRecord& record, const LabelSchema& schema);

std::size_t count_positive(const std::vector<LabelRecord>& records, std::size_t detailed_index);

}  // namespace gdgan
