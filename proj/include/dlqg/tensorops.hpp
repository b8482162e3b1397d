#pragma once

#include <Eigen/Dense>

#include <array>
#include <utility>
#include <vector>

// Block-matrix indexing, vectorization, Kronecker products, commutation
// matrices, and the 0/1 selector matrices that map the stacked free blocks of
// a sparsity-constrained matrix to its full vectorization.  Everything here is
// dense: the hosted problems are tiny (n ≤ ~30), so clarity wins over sparse
// machinery.

namespace dlqg::tensorops {

// Block row/column dimensions of a partitioned matrix.  Block indices are
// 0-based throughout the library.
struct BlockPartition {
    std::vector<int> row_sizes;
    std::vector<int> col_sizes;

    int rows() const;
    int cols() const;
    int row_offset(int block) const;  // first scalar row of block `block`
    int col_offset(int block) const;
};

// 3×3 block-level zero/nonzero pattern.  The two patterns used by the
// three-player problem are:
//   diagonal: {(0,0),(1,1),(2,2)}                      — local feedback F
//   neighbor: {(0,0),(0,2),(1,0),(1,1),(2,1),(2,2)}    — A, G, F¹, K¹
struct SparsityMask {
    std::array<std::array<bool, 3>, 3> pattern{};

    static SparsityMask diagonal();
    static SparsityMask neighbor();
    static SparsityMask full();

    bool at(int i, int j) const { return pattern[static_cast<size_t>(i)][static_cast<size_t>(j)]; }
    int count() const;
    bool operator==(const SparsityMask&) const = default;
};

// Full-column-rank 0/1 matrix E with vec(M) = E·ξ for every M conforming to
// the generating mask, where ξ stacks vec of the masked-in blocks in the
// order recorded by column_map.  EᵀE = I by construction (asserted).
struct SelectorMatrix {
    Eigen::MatrixXd entries;
    std::vector<std::pair<int, int>> column_map;  // (block row, block col) per column group
    std::vector<int> column_offsets;              // first ξ index of each column group
    std::vector<int> column_counts;               // ξ length of each column group

    int cols() const { return static_cast<int>(entries.cols()); }
    int rows() const { return static_cast<int>(entries.rows()); }
};

// Columns of M stacked top-to-bottom into one column vector.
Eigen::VectorXd vec(const Eigen::Ref<const Eigen::MatrixXd>& M);

// Inverse of vec for a known target shape.
Eigen::MatrixXd unvec(const Eigen::Ref<const Eigen::VectorXd>& v, int rows, int cols);

// Kronecker product: (i,j) block of the result is A(i,j)·B.
Eigen::MatrixXd kron(const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B);

// Unique permutation P(m,n) with vec(Xᵀ) = P(m,n)·vec(X) for all m×n X.
// Equals Σ_{ij} E_ij ⊗ E_ijᵀ over the m×n unit matrices E_ij.
Eigen::MatrixXd commutation_matrix(int m, int n);

// Build the selector E for `mask` over the given block sizes, with ξ blocks
// ordered as in `block_order` (which must list exactly the masked-in blocks).
// Constructed as E = P·T: T routes each ξ block into the column-major
// (block-col outer, block-row inner) slot stacking, and P — a block diagonal
// of commutation-matrix products — permutes that stacking into vec order.
SelectorMatrix build_selector(const SparsityMask& mask,
                              const std::vector<int>& row_sizes,
                              const std::vector<int>& col_sizes,
                              const std::vector<std::pair<int, int>>& block_order);

// Masked-in blocks of `mask` in column-major order; the canonical ξ ordering.
std::vector<std::pair<int, int>> column_major_order(const SparsityMask& mask);

// Sub-matrix made of the selected block rows and columns, concatenated in the
// order given (e.g. rows {0}, cols {1,2} → [X₀₁ X₀₂]).  Throws on
// out-of-range block indices.
Eigen::MatrixXd block_get(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const BlockPartition& part,
                          const std::vector<int>& rows,
                          const std::vector<int>& cols);

// Rebuild the masked matrix from its stacked free blocks: unvec(E·ξ).
Eigen::MatrixXd unpack_selection(const SelectorMatrix& E,
                                 const Eigen::Ref<const Eigen::VectorXd>& xi,
                                 int rows, int cols);

// Largest |entry| outside the mask's blocks (0 when M conforms exactly).
double max_offpattern_abs(const Eigen::Ref<const Eigen::MatrixXd>& M,
                          const SparsityMask& mask,
                          const std::vector<int>& row_sizes,
                          const std::vector<int>& col_sizes);

// Copy of M with every off-pattern block forced to exact zero.
Eigen::MatrixXd mask_project(const Eigen::Ref<const Eigen::MatrixXd>& M,
                             const SparsityMask& mask,
                             const std::vector<int>& row_sizes,
                             const std::vector<int>& col_sizes);

// (M + Mᵀ)/2 into a fresh matrix.  Safe as `X = symmetric_part(X)`, unlike
// writing the expression in place, where the transpose reads entries the
// assignment has already overwritten.
Eigen::MatrixXd symmetric_part(const Eigen::Ref<const Eigen::MatrixXd>& M);

}  // namespace dlqg::tensorops
