#include "dsattn/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dsattn/kernels.hpp"
#include "dsattn/linalg.hpp"

namespace dsattn {

OpCounters& op_counters() {
    thread_local OpCounters counters;
    return counters;
}

namespace {

struct Csr {
    std::vector<uint64_t> rowptr;
    std::vector<uint32_t> cols;
};

Csr to_csr(const SparseMask& m) {
    Csr c;
    c.rowptr.resize(m.l + 1, 0);
    c.cols.reserve(m.nnz());
    for (size_t i = 0; i < m.l; ++i) {
        c.rowptr[i + 1] = c.rowptr[i] + m.kept[i].size();
        c.cols.insert(c.cols.end(), m.kept[i].begin(), m.kept[i].end());
    }
    return c;
}

}  // namespace

SparseScores sddmm(const Matrix& q, const Matrix& k, const SparseMask& mask, bool scale) {
    if (q.cols() != k.cols()) throw ShapeError("sddmm: Q/K feature dims differ");
    if (q.rows() != mask.l || k.rows() != mask.l)
        throw ShapeError("sddmm: mask size != sequence length");
    mask.validate();
    Csr csr = to_csr(mask);
    SparseScores out;
    out.mask = mask;
    out.row_offsets = csr.rowptr;
    out.values.resize(csr.cols.size());
    const double sc = scale ? 1.0 / std::sqrt(static_cast<double>(q.cols())) : 1.0;
    kernels::sddmm(q.data(), k.data(), q.cols(), csr.cols.data(), csr.rowptr.data(), mask.l, sc,
                   out.values.data());
    op_counters().sddmm_mults += static_cast<uint64_t>(csr.cols.size()) * q.cols();
    return out;
}

SparseWeights sparse_softmax(const SparseScores& s) {
    SparseWeights out;
    out.mask = s.mask;
    out.row_offsets = s.row_offsets;
    out.values.resize(s.values.size());
    out.empty_row.assign(s.mask.l, 0);
    for (size_t i = 0; i < s.mask.l; ++i) {
        const uint64_t b = s.row_offsets[i], e = s.row_offsets[i + 1];
        if (b == e) {
            out.empty_row[i] = 1;
            continue;
        }
        double m = s.values[b];
        for (uint64_t p = b + 1; p < e; ++p) m = std::max(m, s.values[p]);
        double sum = 0.0;
        for (uint64_t p = b; p < e; ++p) {
            out.values[p] = std::exp(s.values[p] - m);
            sum += out.values[p];
        }
        for (uint64_t p = b; p < e; ++p) out.values[p] /= sum;
        op_counters().softmax_exps += e - b;
    }
    return out;
}

Matrix spmm(const SparseWeights& a, const Matrix& v) {
    if (a.mask.l != v.rows()) throw ShapeError("spmm: V rows != sequence length");
    Matrix z(a.mask.l, v.cols(), v.precision());
    std::vector<uint32_t> cols;
    cols.reserve(a.values.size());
    for (const auto& row : a.mask.kept) cols.insert(cols.end(), row.begin(), row.end());
    kernels::spmm(a.values.data(), cols.data(), a.row_offsets.data(), a.mask.l, v.data(),
                  v.cols(), z.raw());
    z.round_to_precision();
    op_counters().spmm_mults += static_cast<uint64_t>(cols.size()) * v.cols();
    return z;
}

Matrix sparse_attention(const Matrix& x, const AttentionParams& p,
                        std::span<const SparseMask> per_head) {
    if (per_head.size() != p.heads)
        throw ShapeError("sparse_attention: need one mask per head");
    Qkv qkv = project_qkv(x, p);
    std::vector<Matrix> zs;
    for (size_t h = 0; h < p.heads; ++h) {
        SparseWeights w = sparse_softmax(sddmm(qkv.q[h], qkv.k[h], per_head[h], p.scale));
        zs.push_back(spmm(w, qkv.v[h]));
    }
    if (zs.size() == 1) return zs[0];
    size_t total = 0;
    for (const auto& z : zs) total += z.cols();
    Matrix out(zs[0].rows(), total, zs[0].precision());
    size_t off = 0;
    for (const auto& z : zs) {
        for (size_t i = 0; i < z.rows(); ++i)
            for (size_t j = 0; j < z.cols(); ++j) out.raw()[i * total + off + j] = z(i, j);
        off += z.cols();
    }
    out.round_to_precision();
    return out;
}

Matrix sparse_attention(const Matrix& x, const AttentionParams& p, const SparseMask& mask) {
    std::vector<SparseMask> masks(p.heads, mask);
    return sparse_attention(x, p, masks);
}

void write_sparse_scores(const std::string& path, const SparseScores& s) {
    std::ofstream f(path);
    if (!f) throw IoError("write_sparse_scores: cannot open " + path);
    f << "DSASPARSE 1\n";
    auto bc = s.mask.balanced_count();
    f << s.mask.l << ' ' << (bc ? static_cast<long long>(*bc) : -1LL) << '\n';
    f.precision(17);
    for (size_t i = 0; i < s.mask.l; ++i) {
        const auto& row = s.mask.kept[i];
        for (size_t j = 0; j < row.size(); ++j) {
            if (j) f << ' ';
            f << row[j] << ':' << s.value(i, j);
        }
        f << '\n';
    }
    if (!f) throw IoError("write_sparse_scores: write failed for " + path);
}

SparseScores read_sparse_scores(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("read_sparse_scores: cannot open " + path);
    std::string magic;
    int version = 0;
    f >> magic >> version;
    if (magic != "DSASPARSE" || version != 1)
        throw IoError("read_sparse_scores: bad header in " + path);
    size_t l = 0;
    long long balanced = 0;
    f >> l >> balanced;
    f.ignore();
    SparseScores s;
    s.mask = SparseMask(l);
    s.row_offsets.assign(l + 1, 0);
    std::string line;
    for (size_t i = 0; i < l; ++i) {
        if (!std::getline(f, line)) throw IoError("read_sparse_scores: truncated " + path);
        std::istringstream ss(line);
        std::string tok;
        while (ss >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw IoError("read_sparse_scores: bad token in " + path);
            s.mask.kept[i].push_back(static_cast<uint32_t>(std::stoul(tok.substr(0, colon))));
            s.values.push_back(std::stod(tok.substr(colon + 1)));
        }
        s.row_offsets[i + 1] = s.values.size();
    }
    s.mask.validate();
    return s;
}

}  // namespace dsattn
