#pragma once

#include <string>
#include <vector>

#include "dsattn/matrix.hpp"

namespace dsattn {

// Binary matrix container, little-endian:
//   "DSAC" | u32 version=1 | u32 entry count | u32 meta length | meta bytes
//   per entry: u32 name length | name | u64 rows | u64 cols | u8 precision
//              | payload (f32 entries as 4-byte floats, f64 as 8-byte doubles)
// Used for fixtures and checkpoints; meta carries a JSON document.

struct NamedMatrix {
    std::string name;
    Matrix m;
};

struct Container {
    std::string meta;
    std::vector<NamedMatrix> entries;

    const Matrix& find(const std::string& name) const;
    bool has(const std::string& name) const;
};

void write_container(const std::string& path, const std::vector<NamedMatrix>& entries,
                     const std::string& meta_json = "");
Container read_container(const std::string& path);

// Single-matrix convenience wrappers (one entry named "m").
void write_matrix(const std::string& path, const Matrix& m);
Matrix read_matrix(const std::string& path);

}  // namespace dsattn
