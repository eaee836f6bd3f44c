#pragma once
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace wavesrc {

// Compressed sparse row matrix. Column indices are sorted and unique per row.
struct Csr {
    int nrows = 0, ncols = 0;
    std::vector<std::int64_t> ptr; // size nrows+1
    std::vector<std::int32_t> col;
    std::vector<double> val;

    std::int64_t nnz() const { return std::int64_t(col.size()); }

    // y = A x
    void matvec(const double* x, double* y) const;
    std::vector<double> matvec(const std::vector<double>& x) const;

    std::vector<double> diagonal() const;
};

// Triplet accumulator; build() sorts by (row, col) and merges duplicates by
// summation in sorted order, so assembly is deterministic.
struct CooBuilder {
    int nrows = 0, ncols = 0;
    std::vector<std::int32_t> r, c;
    std::vector<double> v;

    CooBuilder(int nrows_, int ncols_) : nrows(nrows_), ncols(ncols_) {}
    void add(std::int64_t row, std::int64_t colidx, double value);
    Csr build();
};

Csr transpose(const Csr& a);

// Gustavson row-merge product A*B. Per output row, contributions accumulate in
// increasing inner-index order; A^T*A computed this way is bitwise symmetric.
Csr spgemm(const Csr& a, const Csr& b);

// Row concatenation (all blocks share ncols).
Csr vstack(const std::vector<const Csr*>& blocks);

// Adds d to every diagonal entry (inserting missing diagonals).
Csr add_diagonal(const Csr& a, double d);

// 1-based (row, col, value) triplets for external inspection.
void export_coo(const Csr& a, std::ostream& os);

} // namespace wavesrc
