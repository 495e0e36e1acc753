#include "mt3d/scene/ply.hpp"

#include <algorithm>
#include <bit>
#include <iterator>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "mt3d/core/errors.hpp"

namespace mt3d {

namespace {

PlyType parse_type(const std::string& s, const std::string& element) {
    if (s == "char" || s == "int8") return PlyType::kInt8;
    if (s == "uchar" || s == "uint8") return PlyType::kUInt8;
    if (s == "short" || s == "int16") return PlyType::kInt16;
    if (s == "ushort" || s == "uint16") return PlyType::kUInt16;
    if (s == "int" || s == "int32") return PlyType::kInt32;
    if (s == "uint" || s == "uint32") return PlyType::kUInt32;
    if (s == "float" || s == "float32") return PlyType::kFloat32;
    if (s == "double" || s == "float64") return PlyType::kFloat64;
    throw InvalidInput("malformed PLY: element '" + element + "' has unknown type '" + s + "'");
}

const char* type_name(PlyType t) {
    switch (t) {
        case PlyType::kInt8: return "char";
        case PlyType::kUInt8: return "uchar";
        case PlyType::kInt16: return "short";
        case PlyType::kUInt16: return "ushort";
        case PlyType::kInt32: return "int";
        case PlyType::kUInt32: return "uint";
        case PlyType::kFloat32: return "float";
        case PlyType::kFloat64: return "double";
    }
    return "double";
}

std::size_t type_size(PlyType t) {
    switch (t) {
        case PlyType::kInt8:
        case PlyType::kUInt8: return 1;
        case PlyType::kInt16:
        case PlyType::kUInt16: return 2;
        case PlyType::kInt32:
        case PlyType::kUInt32:
        case PlyType::kFloat32: return 4;
        case PlyType::kFloat64: return 8;
    }
    return 8;
}

template <typename T>
T load_as(const unsigned char* p, bool swap) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, p, sizeof(T));
    if (swap) std::reverse(buf, buf + sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

double decode(PlyType t, const unsigned char* p, bool swap) {
    switch (t) {
        case PlyType::kInt8: return load_as<std::int8_t>(p, swap);
        case PlyType::kUInt8: return load_as<std::uint8_t>(p, swap);
        case PlyType::kInt16: return load_as<std::int16_t>(p, swap);
        case PlyType::kUInt16: return load_as<std::uint16_t>(p, swap);
        case PlyType::kInt32: return load_as<std::int32_t>(p, swap);
        case PlyType::kUInt32: return load_as<std::uint32_t>(p, swap);
        case PlyType::kFloat32: return load_as<float>(p, swap);
        case PlyType::kFloat64: return load_as<double>(p, swap);
    }
    return 0.0;
}

template <typename T>
void store_as(std::ostream& out, double v) {
    const T x = static_cast<T>(v);
    char buf[sizeof(T)];
    std::memcpy(buf, &x, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
    out.write(buf, sizeof(T));
}

void encode(std::ostream& out, PlyType t, double v) {
    switch (t) {
        case PlyType::kInt8: store_as<std::int8_t>(out, v); break;
        case PlyType::kUInt8: store_as<std::uint8_t>(out, v); break;
        case PlyType::kInt16: store_as<std::int16_t>(out, v); break;
        case PlyType::kUInt16: store_as<std::uint16_t>(out, v); break;
        case PlyType::kInt32: store_as<std::int32_t>(out, v); break;
        case PlyType::kUInt32: store_as<std::uint32_t>(out, v); break;
        case PlyType::kFloat32: store_as<float>(out, v); break;
        case PlyType::kFloat64: store_as<double>(out, v); break;
    }
}

bool is_integral(PlyType t) { return t != PlyType::kFloat32 && t != PlyType::kFloat64; }

[[noreturn]] void malformed(const std::string& element, const std::string& what) {
    throw InvalidInput("malformed PLY: element '" + element + "': " + what);
}

void read_body_ascii(std::istream& in, PlyElement& el) {
    for (std::size_t row = 0; row < el.count; ++row) {
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
            const PlyProperty& prop = el.properties[p];
            if (prop.is_list) {
                long long n = 0;
                if (!(in >> n) || n < 0) malformed(el.name, "bad list length in row " + std::to_string(row));
                std::vector<std::int64_t> items(static_cast<std::size_t>(n));
                for (auto& it : items) {
                    double v;
                    if (!(in >> v)) malformed(el.name, "truncated list in row " + std::to_string(row));
                    it = static_cast<std::int64_t>(v);
                }
                el.lists[p].push_back(std::move(items));
            } else {
                double v;
                if (!(in >> v)) malformed(el.name, "truncated row " + std::to_string(row));
                el.columns[p].push_back(v);
            }
        }
    }
}

void read_body_binary(const std::vector<unsigned char>& bytes, std::size_t& pos, PlyElement& el,
                      bool swap) {
    auto need = [&](std::size_t n, std::size_t row) {
        if (pos + n > bytes.size()) malformed(el.name, "truncated binary data in row " + std::to_string(row));
    };
    for (std::size_t row = 0; row < el.count; ++row) {
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
            const PlyProperty& prop = el.properties[p];
            if (prop.is_list) {
                need(type_size(prop.count_type), row);
                const double nd = decode(prop.count_type, bytes.data() + pos, swap);
                pos += type_size(prop.count_type);
                if (nd < 0) malformed(el.name, "negative list length");
                const auto n = static_cast<std::size_t>(nd);
                const std::size_t sz = type_size(prop.type);
                need(n * sz, row);
                std::vector<std::int64_t> items(n);
                for (std::size_t i = 0; i < n; ++i, pos += sz)
                    items[i] = static_cast<std::int64_t>(decode(prop.type, bytes.data() + pos, swap));
                el.lists[p].push_back(std::move(items));
            } else {
                const std::size_t sz = type_size(prop.type);
                need(sz, row);
                el.columns[p].push_back(decode(prop.type, bytes.data() + pos, swap));
                pos += sz;
            }
        }
    }
}

}  // namespace

int PlyElement::find(const std::string& property) const {
    for (std::size_t i = 0; i < properties.size(); ++i)
        if (properties[i].name == property) return static_cast<int>(i);
    return -1;
}

const std::vector<double>& PlyElement::column(const std::string& property) const {
    const int i = find(property);
    if (i < 0 || properties[i].is_list)
        malformed(name, "missing scalar property '" + property + "'");
    return columns[i];
}

void PlyElement::add_column(const std::string& property, PlyType type, std::vector<double> values) {
    if (values.size() != count) throw ContractError("PLY column size differs from element count");
    properties.push_back({property, type, false, PlyType::kUInt8});
    columns.push_back(std::move(values));
    lists.emplace_back();
}

const PlyElement* PlyData::find(const std::string& element) const {
    for (const auto& e : elements)
        if (e.name == element) return &e;
    return nullptr;
}

const PlyElement& PlyData::element(const std::string& name) const {
    const PlyElement* e = find(name);
    if (!e) malformed(name, "element missing");
    return *e;
}

PlyData read_ply(std::istream& in) {
    PlyData data;
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply")
        malformed("header", "missing 'ply' magic");
    bool have_format = false;
    while (true) {
        if (!std::getline(in, line)) malformed("header", "missing end_header");
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key.empty()) continue;
        if (key == "end_header") break;
        if (key == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") data.format = PlyFormat::kAscii;
            else if (fmt == "binary_little_endian") data.format = PlyFormat::kBinaryLittleEndian;
            else if (fmt == "binary_big_endian") data.format = PlyFormat::kBinaryBigEndian;
            else malformed("header", "unknown format '" + fmt + "'");
            have_format = true;
        } else if (key == "comment" || key == "obj_info") {
            data.comments.push_back(line.size() > key.size() + 1 ? line.substr(key.size() + 1) : "");
        } else if (key == "element") {
            PlyElement el;
            long long count = -1;
            ls >> el.name >> count;
            if (el.name.empty() || count < 0) malformed(el.name.empty() ? "header" : el.name, "bad element declaration");
            el.count = static_cast<std::size_t>(count);
            data.elements.push_back(std::move(el));
        } else if (key == "property") {
            if (data.elements.empty()) malformed("header", "property before any element");
            PlyElement& el = data.elements.back();
            std::string t;
            ls >> t;
            PlyProperty prop;
            if (t == "list") {
                std::string ct, it;
                ls >> ct >> it >> prop.name;
                prop.is_list = true;
                prop.count_type = parse_type(ct, el.name);
                prop.type = parse_type(it, el.name);
                if (!is_integral(prop.count_type)) malformed(el.name, "list count type must be integral");
            } else {
                prop.type = parse_type(t, el.name);
                ls >> prop.name;
            }
            if (prop.name.empty()) malformed(el.name, "property without a name");
            el.properties.push_back(prop);
        } else {
            malformed("header", "unexpected keyword '" + key + "'");
        }
    }
    if (!have_format) malformed("header", "missing format line");

    for (auto& el : data.elements) {
        el.columns.assign(el.properties.size(), {});
        el.lists.assign(el.properties.size(), {});
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
            if (el.properties[p].is_list) el.lists[p].reserve(el.count);
            else el.columns[p].reserve(el.count);
        }
    }

    if (data.format == PlyFormat::kAscii) {
        for (auto& el : data.elements) read_body_ascii(in, el);
    } else {
        std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                         std::istreambuf_iterator<char>());
        const bool file_le = data.format == PlyFormat::kBinaryLittleEndian;
        const bool swap = file_le != (std::endian::native == std::endian::little);
        std::size_t pos = 0;
        for (auto& el : data.elements) read_body_binary(bytes, pos, el, swap);
    }
    return data;
}

PlyData read_ply(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open PLY file: " + path.string());
    return read_ply(in);
}

void write_ply(std::ostream& out, const PlyData& data) {
    out << "ply\n";
    switch (data.format) {
        case PlyFormat::kAscii: out << "format ascii 1.0\n"; break;
        case PlyFormat::kBinaryLittleEndian: out << "format binary_little_endian 1.0\n"; break;
        case PlyFormat::kBinaryBigEndian:
            throw ContractError("PLY writer supports ascii and binary_little_endian only");
    }
    for (const auto& c : data.comments) out << "comment " << c << "\n";
    for (const auto& el : data.elements) {
        out << "element " << el.name << " " << el.count << "\n";
        for (const auto& p : el.properties) {
            if (p.is_list)
                out << "property list " << type_name(p.count_type) << " " << type_name(p.type) << " " << p.name << "\n";
            else
                out << "property " << type_name(p.type) << " " << p.name << "\n";
        }
    }
    out << "end_header\n";
    for (const auto& el : data.elements) {
        for (std::size_t row = 0; row < el.count; ++row) {
            for (std::size_t p = 0; p < el.properties.size(); ++p) {
                const PlyProperty& prop = el.properties[p];
                if (data.format == PlyFormat::kAscii) {
                    if (p > 0) out << ' ';
                    if (prop.is_list) {
                        const auto& items = el.lists[p][row];
                        out << items.size();
                        for (auto v : items) out << ' ' << v;
                    } else if (is_integral(prop.type)) {
                        out << static_cast<long long>(el.columns[p][row]);
                    } else {
                        out << std::setprecision(17) << el.columns[p][row];
                    }
                } else if (prop.is_list) {
                    const auto& items = el.lists[p][row];
                    encode(out, prop.count_type, static_cast<double>(items.size()));
                    for (auto v : items) encode(out, prop.type, static_cast<double>(v));
                } else {
                    encode(out, prop.type, el.columns[p][row]);
                }
            }
            if (data.format == PlyFormat::kAscii) out << '\n';
        }
    }
}

void write_ply(const std::filesystem::path& path, const PlyData& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write PLY file: " + path.string());
    write_ply(out, data);
    if (!out) throw ConfigError("failed writing PLY file: " + path.string());
}

}  // namespace mt3d
