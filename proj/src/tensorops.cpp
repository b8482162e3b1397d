#include <dlqg/tensorops.hpp>

#include <numeric>
#include <set>
#include <stdexcept>

namespace dlqg::tensorops {

int BlockPartition::rows() const {
    return std::accumulate(row_sizes.begin(), row_sizes.end(), 0);
}

int BlockPartition::cols() const {
    return std::accumulate(col_sizes.begin(), col_sizes.end(), 0);
}

int BlockPartition::row_offset(int block) const {
    return std::accumulate(row_sizes.begin(), row_sizes.begin() + block, 0);
}

int BlockPartition::col_offset(int block) const {
    return std::accumulate(col_sizes.begin(), col_sizes.begin() + block, 0);
}

SparsityMask SparsityMask::diagonal() {
    SparsityMask m;
    for (int i = 0; i < 3; ++i) m.pattern[static_cast<size_t>(i)][static_cast<size_t>(i)] = true;
    return m;
}

SparsityMask SparsityMask::neighbor() {
    SparsityMask m;
    for (auto [i, j] : {std::pair{0, 0}, {0, 2}, {1, 0}, {1, 1}, {2, 1}, {2, 2}})
        m.pattern[static_cast<size_t>(i)][static_cast<size_t>(j)] = true;
    return m;
}

SparsityMask SparsityMask::full() {
    SparsityMask m;
    for (auto& row : m.pattern) row.fill(true);
    return m;
}

int SparsityMask::count() const {
    int c = 0;
    for (const auto& row : pattern)
        for (bool b : row) c += b ? 1 : 0;
    return c;
}

Eigen::VectorXd vec(const Eigen::Ref<const Eigen::MatrixXd>& M) {
    return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

Eigen::MatrixXd unvec(const Eigen::Ref<const Eigen::VectorXd>& v, int rows, int cols) {
    if (v.size() != static_cast<Eigen::Index>(rows) * cols)
        throw std::invalid_argument("unvec: vector length does not match target shape");
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

Eigen::MatrixXd kron(const Eigen::Ref<const Eigen::MatrixXd>& A,
                     const Eigen::Ref<const Eigen::MatrixXd>& B) {
    Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return K;
}

Eigen::MatrixXd commutation_matrix(int m, int n) {
    if (m < 1 || n < 1) throw std::invalid_argument("commutation_matrix: m, n must be >= 1");
    // P(m,n) = Σ_{ij} E_ij ⊗ E_ijᵀ places a single 1 per row: vec(X) holds
    // X(i,j) at position j·m+i, and vec(Xᵀ) wants it at position i·n+j.
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m) * n,
                                              static_cast<Eigen::Index>(m) * n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) P(i * n + j, j * m + i) = 1.0;
    return P;
}

std::vector<std::pair<int, int>> column_major_order(const SparsityMask& mask) {
    std::vector<std::pair<int, int>> order;
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            if (mask.at(i, j)) order.emplace_back(i, j);
    return order;
}

SelectorMatrix build_selector(const SparsityMask& mask,
                              const std::vector<int>& row_sizes,
                              const std::vector<int>& col_sizes,
                              const std::vector<std::pair<int, int>>& block_order) {
    const int p = static_cast<int>(row_sizes.size());
    const int q = static_cast<int>(col_sizes.size());
    if (p != 3 || q != 3)
        throw std::invalid_argument("build_selector: masks are 3x3 block patterns");
    for (int s : row_sizes)
        if (s < 1) throw std::invalid_argument("build_selector: block sizes must be positive");
    for (int s : col_sizes)
        if (s < 1) throw std::invalid_argument("build_selector: block sizes must be positive");
    if (mask.count() == 0) throw std::invalid_argument("build_selector: empty mask");

    // block_order must list exactly the masked-in blocks, no repeats.
    {
        std::set<std::pair<int, int>> seen;
        for (auto [i, j] : block_order) {
            if (i < 0 || i >= p || j < 0 || j >= q || !mask.at(i, j) || !seen.insert({i, j}).second)
                throw std::invalid_argument("build_selector: block_order inconsistent with mask");
        }
        if (static_cast<int>(block_order.size()) != mask.count())
            throw std::invalid_argument("build_selector: block_order inconsistent with mask");
    }

    const int m_total = std::accumulate(row_sizes.begin(), row_sizes.end(), 0);
    const int n_total = std::accumulate(col_sizes.begin(), col_sizes.end(), 0);
    const int total = m_total * n_total;

    // Column-major slot layout: for block column j, then block row i, a run of
    // length m_i·c_j holding vec(M_ij).
    std::array<std::array<int, 3>, 3> slot_offset{};
    {
        int pos = 0;
        for (int j = 0; j < q; ++j)
            for (int i = 0; i < p; ++i) {
                slot_offset[static_cast<size_t>(i)][static_cast<size_t>(j)] = pos;
                pos += row_sizes[static_cast<size_t>(i)] * col_sizes[static_cast<size_t>(j)];
            }
    }

    // T routes ξ into the slot stacking.
    int xi_len = 0;
    for (auto [i, j] : block_order) xi_len += row_sizes[static_cast<size_t>(i)] * col_sizes[static_cast<size_t>(j)];
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(total, xi_len);
    SelectorMatrix result;
    result.column_map = block_order;
    {
        int pos = 0;
        for (auto [i, j] : block_order) {
            const int len = row_sizes[static_cast<size_t>(i)] * col_sizes[static_cast<size_t>(j)];
            T.block(slot_offset[static_cast<size_t>(i)][static_cast<size_t>(j)], pos, len, len) =
                Eigen::MatrixXd::Identity(len, len);
            result.column_offsets.push_back(pos);
            result.column_counts.push_back(len);
            pos += len;
        }
    }

    // P = diag over block columns of P(c_j, m)·diag_i(P(m_i, c_j)), which maps
    // the per-column slot run [vec(M_0j); …; vec(M_pj)] onto vec of the full
    // column strip, so P overall maps the slot stacking onto vec(M).
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(total, total);
    {
        int pos = 0;
        for (int j = 0; j < q; ++j) {
            const int cj = col_sizes[static_cast<size_t>(j)];
            const int strip = m_total * cj;
            Eigen::MatrixXd inner = Eigen::MatrixXd::Zero(strip, strip);
            int ipos = 0;
            for (int i = 0; i < p; ++i) {
                const int len = row_sizes[static_cast<size_t>(i)] * cj;
                inner.block(ipos, ipos, len, len) =
                    commutation_matrix(row_sizes[static_cast<size_t>(i)], cj);
                ipos += len;
            }
            P.block(pos, pos, strip, strip) = commutation_matrix(cj, m_total) * inner;
            pos += strip;
        }
    }

    result.entries = P * T;

    // Structural self-check: columns of E are distinct unit vectors.
    Eigen::MatrixXd gram = result.entries.transpose() * result.entries;
    if ((gram - Eigen::MatrixXd::Identity(xi_len, xi_len)).lpNorm<Eigen::Infinity>() != 0.0)
        throw std::logic_error("build_selector: E'E != I, selector construction is broken");

    return result;
}

Eigen::MatrixXd block_get(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const BlockPartition& part,
                          const std::vector<int>& rows,
                          const std::vector<int>& cols) {
    if (X.rows() != part.rows() || X.cols() != part.cols())
        throw std::invalid_argument("block_get: matrix does not match partition");
    const int nrb = static_cast<int>(part.row_sizes.size());
    const int ncb = static_cast<int>(part.col_sizes.size());
    int out_rows = 0, out_cols = 0;
    for (int r : rows) {
        if (r < 0 || r >= nrb) throw std::out_of_range("block_get: row block index out of range");
        out_rows += part.row_sizes[static_cast<size_t>(r)];
    }
    for (int c : cols) {
        if (c < 0 || c >= ncb) throw std::out_of_range("block_get: column block index out of range");
        out_cols += part.col_sizes[static_cast<size_t>(c)];
    }
    Eigen::MatrixXd out(out_rows, out_cols);
    int ro = 0;
    for (int r : rows) {
        int co = 0;
        for (int c : cols) {
            out.block(ro, co, part.row_sizes[static_cast<size_t>(r)], part.col_sizes[static_cast<size_t>(c)]) =
                X.block(part.row_offset(r), part.col_offset(c),
                        part.row_sizes[static_cast<size_t>(r)], part.col_sizes[static_cast<size_t>(c)]);
            co += part.col_sizes[static_cast<size_t>(c)];
        }
        ro += part.row_sizes[static_cast<size_t>(r)];
    }
    return out;
}

Eigen::MatrixXd unpack_selection(const SelectorMatrix& E,
                                 const Eigen::Ref<const Eigen::VectorXd>& xi,
                                 int rows, int cols) {
    if (xi.size() != E.cols())
        throw std::invalid_argument("unpack_selection: coefficient length mismatch");
    return unvec(E.entries * xi, rows, cols);
}

double max_offpattern_abs(const Eigen::Ref<const Eigen::MatrixXd>& M,
                          const SparsityMask& mask,
                          const std::vector<int>& row_sizes,
                          const std::vector<int>& col_sizes) {
    BlockPartition part{row_sizes, col_sizes};
    if (M.rows() != part.rows() || M.cols() != part.cols())
        throw std::invalid_argument("max_offpattern_abs: matrix does not match block sizes");
    double worst = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (mask.at(i, j)) continue;
            worst = std::max(worst, M.block(part.row_offset(i), part.col_offset(j),
                                            row_sizes[static_cast<size_t>(i)],
                                            col_sizes[static_cast<size_t>(j)])
                                        .cwiseAbs()
                                        .maxCoeff());
        }
    return worst;
}

Eigen::MatrixXd mask_project(const Eigen::Ref<const Eigen::MatrixXd>& M,
                             const SparsityMask& mask,
                             const std::vector<int>& row_sizes,
                             const std::vector<int>& col_sizes) {
    BlockPartition part{row_sizes, col_sizes};
    if (M.rows() != part.rows() || M.cols() != part.cols())
        throw std::invalid_argument("mask_project: matrix does not match block sizes");
    Eigen::MatrixXd out = M;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            if (mask.at(i, j)) continue;
            out.block(part.row_offset(i), part.col_offset(j),
                      row_sizes[static_cast<size_t>(i)], col_sizes[static_cast<size_t>(j)])
                .setZero();
        }
    return out;
}

Eigen::MatrixXd symmetric_part(const Eigen::Ref<const Eigen::MatrixXd>& M) {
    if (M.rows() != M.cols())
        throw std::invalid_argument("symmetric_part: matrix must be square");
    return 0.5 * (M + M.transpose());
}

}  // namespace dlqg::tensorops
