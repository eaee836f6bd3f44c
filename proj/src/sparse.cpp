#include "wavesrc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "wavesrc/errors.hpp"

namespace wavesrc {

void Csr::matvec(const double* x, double* y) const {
    for (int i = 0; i < nrows; ++i) {
        double s = 0.0;
        for (std::int64_t k = ptr[i]; k < ptr[i + 1]; ++k) s += val[k] * x[col[k]];
        y[i] = s;
    }
}

std::vector<double> Csr::matvec(const std::vector<double>& x) const {
    if (int(x.size()) != ncols)
        throw numeric_error("matvec: vector length " + std::to_string(x.size()) +
                            " != ncols " + std::to_string(ncols));
    std::vector<double> y(nrows);
    matvec(x.data(), y.data());
    return y;
}

std::vector<double> Csr::diagonal() const {
    std::vector<double> d(std::min(nrows, ncols), 0.0);
    for (int i = 0; i < int(d.size()); ++i)
        for (std::int64_t k = ptr[i]; k < ptr[i + 1]; ++k)
            if (col[k] == i) { d[i] = val[k]; break; }
    return d;
}

void CooBuilder::add(std::int64_t row, std::int64_t colidx, double value) {
    if (row < 0 || row >= nrows || colidx < 0 || colidx >= ncols)
        throw numeric_error("triplet (" + std::to_string(row) + "," + std::to_string(colidx) +
                            ") outside " + std::to_string(nrows) + "x" + std::to_string(ncols));
    r.push_back(std::int32_t(row));
    c.push_back(std::int32_t(colidx));
    v.push_back(value);
}

Csr CooBuilder::build() {
    const std::size_t m = r.size();
    std::vector<std::int64_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
        if (r[a] != r[b]) return r[a] < r[b];
        if (c[a] != c[b]) return c[a] < c[b];
        return a < b; // stable within duplicates so merge order is insertion order
    });

    Csr out;
    out.nrows = nrows;
    out.ncols = ncols;
    out.ptr.assign(nrows + 1, 0);
    out.col.reserve(m);
    out.val.reserve(m);

    std::size_t i = 0;
    while (i < m) {
        const std::int32_t row = r[order[i]], cc = c[order[i]];
        double s = 0.0;
        while (i < m && r[order[i]] == row && c[order[i]] == cc) s += v[order[i++]];
        out.col.push_back(cc);
        out.val.push_back(s);
        out.ptr[row + 1]++;
    }
    for (int k = 0; k < nrows; ++k) out.ptr[k + 1] += out.ptr[k];
    return out;
}

Csr transpose(const Csr& a) {
    Csr t;
    t.nrows = a.ncols;
    t.ncols = a.nrows;
    t.ptr.assign(a.ncols + 1, 0);
    t.col.resize(a.nnz());
    t.val.resize(a.nnz());
    for (std::int64_t k = 0; k < a.nnz(); ++k) t.ptr[a.col[k] + 1]++;
    for (int j = 0; j < a.ncols; ++j) t.ptr[j + 1] += t.ptr[j];
    std::vector<std::int64_t> fill(t.ptr.begin(), t.ptr.end() - 1);
    for (int i = 0; i < a.nrows; ++i)
        for (std::int64_t k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
            const std::int64_t pos = fill[a.col[k]]++;
            t.col[pos] = i;
            t.val[pos] = a.val[k];
        }
    return t; // rows come out sorted because the source rows are scanned in order
}

Csr spgemm(const Csr& a, const Csr& b) {
    if (a.ncols != b.nrows)
        throw numeric_error("spgemm: inner dimensions " + std::to_string(a.ncols) + " vs " +
                            std::to_string(b.nrows));
    Csr out;
    out.nrows = a.nrows;
    out.ncols = b.ncols;
    out.ptr.assign(a.nrows + 1, 0);

    std::vector<double> acc(b.ncols, 0.0);
    std::vector<std::int32_t> stamp(b.ncols, -1);
    std::vector<std::int32_t> touched;
    touched.reserve(256);

    for (int i = 0; i < a.nrows; ++i) {
        touched.clear();
        for (std::int64_t ka = a.ptr[i]; ka < a.ptr[i + 1]; ++ka) {
            const double av = a.val[ka];
            const std::int32_t k = a.col[ka];
            for (std::int64_t kb = b.ptr[k]; kb < b.ptr[k + 1]; ++kb) {
                const std::int32_t j = b.col[kb];
                if (stamp[j] != i) {
                    stamp[j] = i;
                    acc[j] = 0.0;
                    touched.push_back(j);
                }
                acc[j] += av * b.val[kb];
            }
        }
        std::sort(touched.begin(), touched.end());
        out.ptr[i + 1] = out.ptr[i] + std::int64_t(touched.size());
        for (const std::int32_t j : touched) {
            out.col.push_back(j);
            out.val.push_back(acc[j]);
        }
    }
    return out;
}

Csr vstack(const std::vector<const Csr*>& blocks) {
    Csr out;
    if (blocks.empty()) return out;
    out.ncols = blocks[0]->ncols;
    for (const Csr* blk : blocks) {
        if (blk->ncols != out.ncols) throw numeric_error("vstack: mismatched column counts");
        out.nrows += blk->nrows;
    }
    out.ptr.reserve(out.nrows + 1);
    out.ptr.push_back(0);
    for (const Csr* blk : blocks) {
        const std::int64_t base = out.nnz();
        out.col.insert(out.col.end(), blk->col.begin(), blk->col.end());
        out.val.insert(out.val.end(), blk->val.begin(), blk->val.end());
        for (int i = 0; i < blk->nrows; ++i) out.ptr.push_back(base + blk->ptr[i + 1]);
    }
    return out;
}

Csr add_diagonal(const Csr& a, double d) {
    if (a.nrows != a.ncols) throw numeric_error("add_diagonal: matrix not square");
    Csr out;
    out.nrows = a.nrows;
    out.ncols = a.ncols;
    out.ptr.assign(a.nrows + 1, 0);
    out.col.reserve(a.nnz() + a.nrows);
    out.val.reserve(a.nnz() + a.nrows);
    for (int i = 0; i < a.nrows; ++i) {
        bool placed = false;
        for (std::int64_t k = a.ptr[i]; k < a.ptr[i + 1]; ++k) {
            if (!placed && a.col[k] > i) {
                out.col.push_back(i);
                out.val.push_back(d);
                placed = true;
            }
            if (a.col[k] == i) {
                out.col.push_back(i);
                out.val.push_back(a.val[k] + d);
                placed = true;
            } else {
                out.col.push_back(a.col[k]);
                out.val.push_back(a.val[k]);
            }
        }
        if (!placed) {
            out.col.push_back(i);
            out.val.push_back(d);
        }
        out.ptr[i + 1] = std::int64_t(out.col.size());
    }
    return out;
}

void export_coo(const Csr& a, std::ostream& os) {
    os.precision(17);
    for (int i = 0; i < a.nrows; ++i)
        for (std::int64_t k = a.ptr[i]; k < a.ptr[i + 1]; ++k)
            os << (i + 1) << ' ' << (a.col[k] + 1) << ' ' << a.val[k] << '\n';
}

} // namespace wavesrc
