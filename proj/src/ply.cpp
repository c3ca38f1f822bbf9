#include "v2xsim/ply.hpp"

#include "v2xsim/errors.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace v2xsim {

bool PlyTable::has(const std::string& name) const {
    for (const auto& n : names) {
        if (n == name) return true;
    }
    return false;
}

const std::vector<double>& PlyTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return columns[i];
    }
    throw ParseError("PLY property missing: " + name);
}

void PlyTable::add_column(std::string name, std::vector<double> values) {
    if (!columns.empty() && values.size() != rows()) {
        throw InvalidInput("PLY column length mismatch for " + name);
    }
    names.push_back(std::move(name));
    columns.push_back(std::move(values));
}

namespace {

enum class ScalarType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

ScalarType parse_type(const std::string& t) {
    if (t == "char" || t == "int8") return ScalarType::Int8;
    if (t == "uchar" || t == "uint8") return ScalarType::UInt8;
    if (t == "short" || t == "int16") return ScalarType::Int16;
    if (t == "ushort" || t == "uint16") return ScalarType::UInt16;
    if (t == "int" || t == "int32") return ScalarType::Int32;
    if (t == "uint" || t == "uint32") return ScalarType::UInt32;
    if (t == "float" || t == "float32") return ScalarType::Float32;
    if (t == "double" || t == "float64") return ScalarType::Float64;
    throw ParseError("unsupported PLY scalar type: " + t);
}

std::size_t type_size(ScalarType t) {
    switch (t) {
        case ScalarType::Int8:
        case ScalarType::UInt8: return 1;
        case ScalarType::Int16:
        case ScalarType::UInt16: return 2;
        case ScalarType::Int32:
        case ScalarType::UInt32:
        case ScalarType::Float32: return 4;
        case ScalarType::Float64: return 8;
    }
    return 0;
}

template <class T>
double load(const char* p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    return double(v);
}

double decode(ScalarType t, const char* p) {
    switch (t) {
        case ScalarType::Int8: return load<std::int8_t>(p);
        case ScalarType::UInt8: return load<std::uint8_t>(p);
        case ScalarType::Int16: return load<std::int16_t>(p);
        case ScalarType::UInt16: return load<std::uint16_t>(p);
        case ScalarType::Int32: return load<std::int32_t>(p);
        case ScalarType::UInt32: return load<std::uint32_t>(p);
        case ScalarType::Float32: return load<float>(p);
        case ScalarType::Float64: return load<double>(p);
    }
    return 0;
}

struct ElementSpec {
    std::string name;
    std::size_t count = 0;
    std::vector<std::pair<std::string, ScalarType>> props;
};

}  // namespace

PlyTable read_ply_vertices(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open PLY file: " + path.string());
    }
    std::string line;
    std::getline(in, line);
    if (line.rfind("ply", 0) != 0) {
        throw ParseError("not a PLY file: " + path.string());
    }
    std::string format;
    std::vector<ElementSpec> elements;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "format") {
            ls >> format;
        } else if (key == "element") {
            ElementSpec e;
            ls >> e.name >> e.count;
            elements.push_back(e);
        } else if (key == "property") {
            std::string type, name;
            ls >> type;
            if (type == "list") {
                throw ParseError("PLY list properties are not supported");
            }
            ls >> name;
            if (elements.empty()) throw ParseError("PLY property before element");
            elements.back().props.emplace_back(name, parse_type(type));
        } else if (key == "end_header") {
            break;
        }
    }
    if (format != "ascii" && format != "binary_little_endian") {
        throw ParseError("unsupported PLY format '" + format + "' in " + path.string());
    }
    if (elements.empty() || elements.front().name != "vertex") {
        throw ParseError("PLY file must start with a vertex element: " + path.string());
    }
    const ElementSpec& v = elements.front();
    PlyTable table;
    for (const auto& [name, type] : v.props) {
        table.names.push_back(name);
        table.columns.emplace_back(v.count, 0.0);
    }
    if (format == "ascii") {
        for (std::size_t r = 0; r < v.count; ++r) {
            for (std::size_t c = 0; c < v.props.size(); ++c) {
                if (!(in >> table.columns[c][r])) {
                    throw ParseError("truncated ascii PLY: " + path.string());
                }
            }
        }
    } else {
        std::size_t stride = 0;
        for (const auto& p : v.props) stride += type_size(p.second);
        std::vector<char> buf(stride);
        for (std::size_t r = 0; r < v.count; ++r) {
            in.read(buf.data(), std::streamsize(stride));
            if (!in) {
                throw ParseError("truncated binary PLY: " + path.string());
            }
            std::size_t off = 0;
            for (std::size_t c = 0; c < v.props.size(); ++c) {
                table.columns[c][r] = decode(v.props[c].second, buf.data() + off);
                off += type_size(v.props[c].second);
            }
        }
    }
    return table;
}

void write_ply_vertices(const std::filesystem::path& path, const PlyTable& table) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write PLY file: " + path.string());
    }
    out << "ply\nformat binary_little_endian 1.0\nelement vertex " << table.rows() << "\n";
    for (const auto& n : table.names) {
        out << "property float " << n << "\n";
    }
    out << "end_header\n";
    std::vector<float> row(table.names.size());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            row[c] = float(table.columns[c][r]);
        }
        out.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size() * sizeof(float)));
    }
}

GaussianSet read_gaussian_ply(const std::filesystem::path& path) {
    const PlyTable t = read_ply_vertices(path);
    int rest = 0;
    while (t.has("f_rest_" + std::to_string(rest))) ++rest;
    if (rest % 3 != 0) {
        throw ParseError("f_rest property count not divisible by 3 in " + path.string());
    }
    const int coeffs = 1 + rest / 3;
    int degree = -1;
    for (int d = 0; d <= kMaxShDegree; ++d) {
        if (sh_coeff_count(d) == coeffs) degree = d;
    }
    if (degree < 0) {
        throw ParseError("f_rest count does not match any SH degree in " + path.string());
    }
    int classes = 0;
    while (t.has("sem_" + std::to_string(classes))) ++classes;

    GaussianSet set(degree, classes);
    set.resize(t.rows());
    const char* axes[] = {"x", "y", "z"};
    for (int k = 0; k < 3; ++k) {
        const auto& pc = t.column(axes[k]);
        const auto& sc = t.column("scale_" + std::to_string(k));
        for (std::size_t i = 0; i < t.rows(); ++i) {
            set.position(i)[k] = pc[i];
            set.log_scale(i)[k] = sc[i];
        }
    }
    for (int k = 0; k < 4; ++k) {
        const auto& rc = t.column("rot_" + std::to_string(k));
        for (std::size_t i = 0; i < t.rows(); ++i) set.rotation(i)[k] = rc[i];
    }
    const auto& oc = t.column("opacity");
    for (std::size_t i = 0; i < t.rows(); ++i) set.opacity_logit(i) = oc[i];
    for (int c = 0; c < 3; ++c) {
        const auto& dc = t.column("f_dc_" + std::to_string(c));
        for (std::size_t i = 0; i < t.rows(); ++i) set.sh(i)[c] = dc[i];
        for (int k = 1; k < coeffs; ++k) {
            const auto& col = t.column("f_rest_" + std::to_string(c * (coeffs - 1) + (k - 1)));
            for (std::size_t i = 0; i < t.rows(); ++i) set.sh(i)[3 * k + c] = col[i];
        }
    }
    for (int k = 0; k < classes; ++k) {
        const auto& col = t.column("sem_" + std::to_string(k));
        for (std::size_t i = 0; i < t.rows(); ++i) set.semantic(i)[k] = col[i];
    }
    return set;
}

void write_gaussian_ply(const std::filesystem::path& path, const GaussianSet& set) {
    const std::size_t n = set.size();
    PlyTable t;
    auto col = [&](auto&& fn) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = fn(i);
        return v;
    };
    const char* axes[] = {"x", "y", "z"};
    for (int k = 0; k < 3; ++k) t.add_column(axes[k], col([&](std::size_t i) { return set.position(i)[k]; }));
    for (const char* nn : {"nx", "ny", "nz"}) t.add_column(nn, std::vector<double>(n, 0.0));
    const int coeffs = set.sh_coeffs();
    for (int c = 0; c < 3; ++c) {
        t.add_column("f_dc_" + std::to_string(c), col([&](std::size_t i) { return set.sh(i)[c]; }));
    }
    for (int c = 0; c < 3; ++c) {
        for (int k = 1; k < coeffs; ++k) {
            t.add_column("f_rest_" + std::to_string(c * (coeffs - 1) + (k - 1)),
                         col([&](std::size_t i) { return set.sh(i)[3 * k + c]; }));
        }
    }
    t.add_column("opacity", col([&](std::size_t i) { return set.opacity_logit(i); }));
    for (int k = 0; k < 3; ++k) {
        t.add_column("scale_" + std::to_string(k), col([&](std::size_t i) { return set.log_scale(i)[k]; }));
    }
    for (int k = 0; k < 4; ++k) {
        t.add_column("rot_" + std::to_string(k), col([&](std::size_t i) { return set.rotation(i)[k]; }));
    }
    for (int k = 0; k < set.num_classes(); ++k) {
        t.add_column("sem_" + std::to_string(k), col([&](std::size_t i) { return set.semantic(i)[k]; }));
    }
    write_ply_vertices(path, t);
}

}  // namespace v2xsim
