#include "dsattn/mask.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

namespace dsattn {

SparseMask SparseMask::full(size_t n) {
    SparseMask m(n);
    for (auto& row : m.kept) {
        row.resize(n);
        std::iota(row.begin(), row.end(), 0u);
    }
    return m;
}

SparseMask SparseMask::diagonal(size_t n) {
    SparseMask m(n);
    for (size_t i = 0; i < n; ++i) m.kept[i] = {static_cast<uint32_t>(i)};
    return m;
}

size_t SparseMask::nnz() const {
    size_t n = 0;
    for (const auto& row : kept) n += row.size();
    return n;
}

double SparseMask::sparsity() const {
    if (l == 0) return 0.0;
    return 1.0 - static_cast<double>(nnz()) / (static_cast<double>(l) * static_cast<double>(l));
}

bool SparseMask::row_balanced() const { return balanced_count().has_value(); }

std::optional<size_t> SparseMask::balanced_count() const {
    if (kept.empty()) return std::nullopt;
    const size_t c = kept[0].size();
    for (const auto& row : kept)
        if (row.size() != c) return std::nullopt;
    return c;
}

std::vector<uint32_t> SparseMask::empty_rows() const {
    std::vector<uint32_t> out;
    for (size_t i = 0; i < kept.size(); ++i)
        if (kept[i].empty()) out.push_back(static_cast<uint32_t>(i));
    return out;
}

bool SparseMask::has_empty_rows() const {
    for (const auto& row : kept)
        if (row.empty()) return true;
    return false;
}

bool SparseMask::contains(size_t row, uint32_t col) const {
    const auto& r = kept[row];
    return std::binary_search(r.begin(), r.end(), col);
}

void SparseMask::validate() const {
    if (kept.size() != l) throw ShapeError("SparseMask: kept rows != l");
    for (const auto& row : kept) {
        for (size_t j = 0; j < row.size(); ++j) {
            if (row[j] >= l) throw ParamError("SparseMask: column index out of range");
            if (j > 0 && row[j] <= row[j - 1])
                throw ParamError("SparseMask: row not strictly ascending");
        }
    }
}

void write_mask(const std::string& path, const SparseMask& m) {
    std::ofstream f(path);
    if (!f) throw IoError("write_mask: cannot open " + path);
    f << "DSAMASK 1\n";
    auto bc = m.balanced_count();
    f << m.l << ' ' << (bc ? static_cast<long long>(*bc) : -1LL) << '\n';
    for (const auto& row : m.kept) {
        for (size_t j = 0; j < row.size(); ++j) {
            if (j) f << ' ';
            f << row[j];
        }
        f << '\n';
    }
    if (!f) throw IoError("write_mask: write failed for " + path);
}

SparseMask read_mask(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("read_mask: cannot open " + path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "DSAMASK" || version != 1) throw IoError("read_mask: bad header in " + path);
    size_t l = 0;
    long long balanced = 0;
    f >> l >> balanced;
    f.ignore();  // rest of header line
    SparseMask m(l);
    std::string line;
    for (size_t i = 0; i < l; ++i) {
        if (!std::getline(f, line)) throw IoError("read_mask: truncated file " + path);
        std::istringstream ss(line);
        uint32_t v;
        while (ss >> v) m.kept[i].push_back(v);
    }
    m.validate();
    if (balanced >= 0 && m.balanced_count() != static_cast<size_t>(balanced))
        throw IoError("read_mask: balanced-count header mismatch in " + path);
    return m;
}

}  // namespace dsattn
