#include "gdgan/labels.hpp"

#include <set>

#include "gdgan/error.hpp"

namespace gdgan {

LabelSchema LabelSchema::chest_xray() {
    LabelSchema s;
    s.general_labels = {{"gender", {"M", "F"}}, {"view_position", {"PA", "AP"}}};
    s.detailed_labels = {"Atelectasis", "Cardiomegaly", "Effusion",     "Infiltration", "Mass",
                         "Nodule",      "Pneumonia",    "Pneumothorax", "Consolidation", "Edema",
                         "Emphysema",   "Fibrosis",     "Pleural_Thickening", "Hernia"};
    s.metadata_fields = {"age", "patient_id"};
    return s;
}

LabelSchema LabelSchema::toy() {
    LabelSchema s;
    s.general_labels = {{"stroke_orientation", {"H", "V"}}, {"frame_size", {"S", "L"}}};
    s.detailed_labels = {"mark0", "mark1", "mark2", "mark3"};
    s.metadata_fields = {"age", "patient_id"};
    return s;
}

void LabelSchema::validate() const {
    if (general_labels.empty()) raise(ErrorKind::BadArgument, "schema needs at least one general label");
    if (detailed_labels.empty()) raise(ErrorKind::BadArgument, "schema needs at least one detailed label");
    std::set<std::string> names;
    auto add = [&](const std::string& n) {
        if (!names.insert(n).second) raise(ErrorKind::BadArgument, "duplicate label name '" + n + "'");
    };
    for (const auto& g : general_labels) {
        add(g.name);
        if (g.cardinality() < 2) raise(ErrorKind::BadArgument, "general label '" + g.name + "' has cardinality < 2");
        std::set<std::string> tokens(g.tokens.begin(), g.tokens.end());
        if (tokens.size() != g.tokens.size())
            raise(ErrorKind::BadArgument, "general label '" + g.name + "' has repeated tokens");
    }
    for (const auto& d : detailed_labels) add(d);
    for (const auto& m : metadata_fields) add(m);
}

std::optional<std::size_t> LabelSchema::detailed_index(const std::string& name) const {
    for (std::size_t i = 0; i < detailed_labels.size(); ++i)
        if (detailed_labels[i] == name) return i;
    return std::nullopt;
}

std::size_t LabelSchema::detailed_index_or_throw(const std::string& name) const {
    auto idx = detailed_index(name);
    if (!idx) raise(ErrorKind::BadArgument, "unknown detailed label '" + name + "'");
    return *idx;
}

int LabelSchema::general_one_hot_width() const {
    int w = 0;
    for (const auto& g : general_labels) w += g.cardinality();
    return w;
}

std::vector<int> LabelSchema::general_cardinalities() const {
    std::vector<int> out;
    for (const auto& g : general_labels) out.push_back(g.cardinality());
    return out;
}

std::string check_record(const LabelRecord& record, const LabelSchema& schema) {
    if (record.general.size() != schema.general_labels.size())
        return "expected " + std::to_string(schema.general_labels.size()) + " general labels";
    for (std::size_t i = 0; i < record.general.size(); ++i) {
        const int v = record.general[i];
        if (v < 0 || v >= schema.general_labels[i].cardinality())
            return "general label '" + schema.general_labels[i].name + "' out of range";
    }
    if (record.detailed.size() != schema.detailed_labels.size())
        return "expected " + std::to_string(schema.detailed_labels.size()) + " detailed labels, got " +
               std::to_string(record.detailed.size());
    for (auto d : record.detailed)
        if (d > 1) return "detailed labels must be 0 or 1";
    return {};
}

std::size_t count_positive(const std::vector<LabelRecord>& records, std::size_t detailed_index) {
    std::size_t n = 0;
    for (const auto& r : records) n += r.detailed.at(detailed_index) != 0;
    return n;
}

}  // namespace gdgan
