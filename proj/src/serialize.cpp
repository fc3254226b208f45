#include "dsattn/serialize.hpp"

#include <cstring>
#include <fstream>

namespace dsattn {

namespace {

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

constexpr char kMagic[4] = {'D', 'S', 'A', 'C'};

}  // namespace

const Matrix& Container::find(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return e.m;
    throw IoError("container: missing entry '" + name + "'");
}

bool Container::has(const std::string& name) const {
    for (const auto& e : entries)
        if (e.name == name) return true;
    return false;
}

void write_container(const std::string& path, const std::vector<NamedMatrix>& entries,
                     const std::string& meta_json) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_container: cannot open " + path);
    f.write(kMagic, 4);
    put<uint32_t>(f, 1);
    put<uint32_t>(f, static_cast<uint32_t>(entries.size()));
    put<uint32_t>(f, static_cast<uint32_t>(meta_json.size()));
    f.write(meta_json.data(), static_cast<std::streamsize>(meta_json.size()));
    for (const auto& e : entries) {
        put<uint32_t>(f, static_cast<uint32_t>(e.name.size()));
        f.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        put<uint64_t>(f, e.m.rows());
        put<uint64_t>(f, e.m.cols());
        put<uint8_t>(f, static_cast<uint8_t>(e.m.precision()));
        if (e.m.precision() == Precision::f32) {
            for (size_t i = 0; i < e.m.size(); ++i)
                put<float>(f, static_cast<float>(e.m.data()[i]));
        } else {
            f.write(reinterpret_cast<const char*>(e.m.data()),
                    static_cast<std::streamsize>(e.m.size() * sizeof(double)));
        }
    }
    if (!f) throw IoError("write_container: write failed for " + path);
}

Container read_container(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_container: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("read_container: bad magic in " + path);
    if (get<uint32_t>(f) != 1) throw IoError("read_container: unsupported version in " + path);
    const uint32_t count = get<uint32_t>(f);
    const uint32_t meta_len = get<uint32_t>(f);
    Container c;
    c.meta.resize(meta_len);
    f.read(c.meta.data(), meta_len);
    for (uint32_t e = 0; e < count; ++e) {
        const uint32_t name_len = get<uint32_t>(f);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        const uint64_t rows = get<uint64_t>(f);
        const uint64_t cols = get<uint64_t>(f);
        const auto prec = static_cast<Precision>(get<uint8_t>(f));
        Matrix m(rows, cols, prec);
        if (prec == Precision::f32) {
            for (size_t i = 0; i < m.size(); ++i) m.raw()[i] = get<float>(f);
        } else {
            f.read(reinterpret_cast<char*>(m.raw()),
                   static_cast<std::streamsize>(m.size() * sizeof(double)));
        }
        if (!f) throw IoError("read_container: truncated file " + path);
        c.entries.push_back({std::move(name), std::move(m)});
    }
    return c;
}

void write_matrix(const std::string& path, const Matrix& m) {
    write_container(path, {{"m", m}});
}

Matrix read_matrix(const std::string& path) { return read_container(path).find("m"); }

}  // namespace dsattn
