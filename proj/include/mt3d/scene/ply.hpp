#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mt3d {

enum class PlyFormat { kAscii, kBinaryLittleEndian, kBinaryBigEndian };

enum class PlyType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

struct PlyProperty {
    std::string name;
    PlyType type = PlyType::kFloat64;
    bool is_list = false;
    PlyType count_type = PlyType::kUInt8;
};

/// One element block. Scalar properties are stored column-wise as doubles,
/// list properties as per-row integer lists.
struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
    std::vector<std::vector<double>> columns;                       // per property
    std::vector<std::vector<std::vector<std::int64_t>>> lists;      // per property

    int find(const std::string& property) const;
    bool has(const std::string& property) const { return find(property) >= 0; }
    /// Column of a scalar property; throws InvalidInput naming element and property.
    const std::vector<double>& column(const std::string& property) const;

    void add_column(const std::string& property, PlyType type, std::vector<double> values);
};

struct PlyData {
    PlyFormat format = PlyFormat::kBinaryLittleEndian;
    std::vector<std::string> comments;
    std::vector<PlyElement> elements;

    const PlyElement* find(const std::string& element) const;
    const PlyElement& element(const std::string& element) const;
};

/// Malformed input raises InvalidInput naming the offending element.
PlyData read_ply(std::istream& in);
PlyData read_ply(const std::filesystem::path& path);
void write_ply(std::ostream& out, const PlyData& data);
void write_ply(const std::filesystem::path& path, const PlyData& data);

}  // namespace mt3d
