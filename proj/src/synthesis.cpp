#include <dlqg/synthesis.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include <dlqg/jsonio.hpp>

namespace dlqg::synthesis {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPdTol = 1e-10;
constexpr double kConditionLimit = 1e12;
constexpr double kMaskTol = 1e-10;

// Factor a matrix that the theory guarantees positive definite, refusing to
// proceed on numerical evidence to the contrary.
Eigen::LLT<MatrixXd> checked_llt(const MatrixXd& M, const std::string& what) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi > kConditionLimit * lo)
        throw std::runtime_error(what + " is not numerically positive definite");
    return Eigen::LLT<MatrixXd>(M);
}

void check_pass_shapes(const model::ProblemSpec& spec, const riccati::RiccatiPass& ric,
                       const filtering::FilterPass& fil) {
    const auto N = static_cast<size_t>(spec.N);
    if (ric.L.size() != N || ric.H.size() != N)
        throw std::invalid_argument("control pass length does not match the problem horizon");
    if (fil.Ytilde.size() != N || fil.K1.size() != N || fil.P1.size() != N ||
        fil.Y1.size() != N || fil.Ptilde.size() != N)
        throw std::invalid_argument("estimation pass length does not match the problem horizon");
    if (ric.L[0].rows() != spec.q() || ric.L[0].cols() != spec.n() ||
        fil.Ytilde[0].rows() != spec.p())
        throw std::invalid_argument("pass dimensions do not match the problem partition");
}

MatrixXd identity_kron_lb(const model::ProblemSpec& spec, const MatrixXd& L) {
    // I_p ⊗ L(k)B maps vec F(k−1) to vec(L(k)B F(k−1)).
    return tensorops::kron(MatrixXd::Identity(spec.p(), spec.p()), L * spec.B);
}

}  // namespace

QpAssembly assemble_qp(const model::ProblemSpec& spec, const riccati::RiccatiPass& ric,
                       const filtering::FilterPass& fil) {
    check_pass_shapes(spec, ric, fil);
    const int N = spec.N;
    const int q = spec.q();
    const int p = spec.p();
    const int qp = q * p;

    QpAssembly out;
    out.q_sizes = spec.partition.q_sizes();
    out.p_sizes = spec.partition.p_sizes();
    const auto diag_mask = tensorops::SparsityMask::diagonal();
    const auto nbr_mask = tensorops::SparsityMask::neighbor();
    out.E1 = tensorops::build_selector(diag_mask, out.q_sizes, out.p_sizes,
                                       tensorops::column_major_order(diag_mask));
    out.E2 = tensorops::build_selector(nbr_mask, out.q_sizes, out.p_sizes,
                                       tensorops::column_major_order(nbr_mask));
    const int c1 = out.E1.cols();
    const int c2 = out.E2.cols();
    out.E = MatrixXd::Zero(2 * qp, c1 + c2);
    out.E.topLeftCorner(qp, c1) = out.E1.entries;
    out.E.bottomRightCorner(qp, c2) = out.E2.entries;

    const auto un = static_cast<size_t>(N);
    out.Z1.assign(un + 1, MatrixXd());
    out.Z2.assign(un, MatrixXd());
    out.b.assign(un + 1, VectorXd());
    out.dims.assign(un + 1, 0);
    for (int k = 1; k <= N; ++k) out.dims[static_cast<size_t>(k)] = (k == N) ? c1 : c1 + c2;

    // Stage k of the objective couples F(k−1) (through the innovation it acts
    // on at time k−1) with F¹(k) and the L(k)BF(k−1) replay at time k, so the
    // blocks below mix moments at k−1 with weights at both k−1 and k.
    for (int k = 1; k <= N; ++k) {
        const auto uk = static_cast<size_t>(k);
        const MatrixXd& h_prev = ric.H[uk - 1];
        const MatrixXd kron_y1_h = tensorops::kron(fil.Y1[uk - 1], h_prev);
        const MatrixXd cp1_prev = spec.C * fil.P1[uk - 1];
        const VectorXd vl_prev = tensorops::vec(ric.L[uk - 1]);

        if (k == N) {
            const MatrixXd& e1 = out.E1.entries;
            out.Z1[uk] = tensorops::symmetric_part(2.0 * e1.transpose() * kron_y1_h * e1);
            VectorXd bn = e1.transpose() * tensorops::kron(cp1_prev, h_prev) * vl_prev;
            if (N >= 2) {
                bn += e1.transpose() * tensorops::kron(spec.C * fil.Ptilde[uk - 1], h_prev) *
                      tensorops::vec(ric.L[uk - 1] * fil.K1[uk - 2]);
            }
            out.b[uk] = 2.0 * bn;
            break;
        }

        const MatrixXd& h_k = ric.H[uk];
        const MatrixXd kron_y_h = tensorops::kron(fil.Ytilde[uk - 1], h_k);
        const MatrixXd lb = identity_kron_lb(spec, ric.L[uk]);

        MatrixXd g1 = MatrixXd::Zero(qp, c1 + c2);
        g1.leftCols(c1) = out.E1.entries;
        MatrixXd g2(qp, c1 + c2);
        g2.leftCols(c1) = -lb * out.E1.entries;
        g2.rightCols(c2) = out.E2.entries;

        out.Z1[uk] = tensorops::symmetric_part(
            2.0 * (g1.transpose() * kron_y1_h * g1 + g2.transpose() * kron_y_h * g2));

        const MatrixXd cross =
            tensorops::kron((spec.C * fil.Ptilde[uk]).transpose(), h_k);
        if (k + 1 == N) {
            out.Z2[uk] = 2.0 * g2.transpose() * cross * out.E1.entries;
        } else {
            out.Z2[uk] = 2.0 * g2.transpose() * cross * g1;
        }

        VectorXd bk = g2.transpose() * kron_y_h * tensorops::vec(ric.L[uk] * fil.K1[uk - 1]);
        bk += g2.transpose() * tensorops::kron(fil.Ptilde[uk].transpose(), h_k) *
              tensorops::vec(ric.L[uk]);
        bk += g1.transpose() * tensorops::kron(cp1_prev, h_prev) * vl_prev;
        if (k >= 2) {
            bk += g1.transpose() * tensorops::kron(spec.C * fil.Ptilde[uk - 1], h_prev) *
                  tensorops::vec(ric.L[uk - 1] * fil.K1[uk - 2]);
        }
        out.b[uk] = 2.0 * bk;
    }

    for (int k = 1; k <= N; ++k) {
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(out.Z1[static_cast<size_t>(k)]);
        if (eig.eigenvalues().minCoeff() <= kPdTol)
            throw std::runtime_error("Z1(" + std::to_string(k) +
                                     ") fails its positive-definiteness check");
    }
    return out;
}

GainSchedule solve_gains(const QpAssembly& assembly) {
    const int N = static_cast<int>(assembly.dims.size()) - 1;
    if (N < 1) throw std::invalid_argument("assembly holds no stages");
    const int c1 = assembly.E1.cols();
    const int c2 = assembly.E2.cols();
    int q = 0;
    for (int s : assembly.q_sizes) q += s;
    int p = 0;
    for (int s : assembly.p_sizes) p += s;

    GainSchedule out;
    const auto un = static_cast<size_t>(N);
    out.R.assign(un + 1, MatrixXd());
    out.c.assign(un + 1, VectorXd());
    out.R[un] = assembly.Z1[un];
    out.c[un] = assembly.b[un];
    for (int k = N - 1; k >= 1; --k) {
        const auto uk = static_cast<size_t>(k);
        auto llt = checked_llt(out.R[uk + 1], "R(" + std::to_string(k + 1) + ")");
        out.R[uk] = tensorops::symmetric_part(
            assembly.Z1[uk] - assembly.Z2[uk] * llt.solve(assembly.Z2[uk].transpose()));
        out.c[uk] = assembly.b[uk] - assembly.Z2[uk] * llt.solve(out.c[uk + 1]);
    }

    std::vector<VectorXd> zeta(un + 1);
    zeta[1] = checked_llt(out.R[1], "R(1)").solve(out.c[1]);
    for (int k = 1; k < N; ++k) {
        const auto uk = static_cast<size_t>(k);
        auto llt = checked_llt(out.R[uk + 1], "R(" + std::to_string(k + 1) + ")");
        zeta[uk + 1] = llt.solve(out.c[uk + 1] - assembly.Z2[uk].transpose() * zeta[uk]);
    }

    out.F.assign(un, MatrixXd());
    out.F1.assign(un, MatrixXd::Zero(q, p));
    out.G.assign(un, MatrixXd::Zero(q, p));
    for (int k = 1; k < N; ++k) {
        const auto uk = static_cast<size_t>(k);
        out.F[uk - 1] = tensorops::unpack_selection(assembly.E1, zeta[uk].head(c1), q, p);
        out.F1[uk] = tensorops::unpack_selection(assembly.E2, zeta[uk].tail(c2), q, p);
    }
    out.F[un - 1] = tensorops::unpack_selection(assembly.E1, zeta[un], q, p);

    // At the stationary point Φ(ζ*) = −½ Σ b(k)ᵀζ*(k).
    double acc = 0.0;
    for (size_t k = 1; k <= un; ++k) acc += assembly.b[k].dot(zeta[k]);
    out.Jtilde_opt = -0.5 * acc;
    return out;
}

std::vector<Eigen::MatrixXd> derive_G(const GainSchedule& gains, const model::ProblemSpec& spec,
                                      const filtering::FilterPass& fil) {
    const size_t N = gains.F.size();
    if (N == 0 || gains.F1.size() != N)
        throw std::invalid_argument("gain schedule is empty or inconsistent");
    const auto q_sizes = spec.partition.q_sizes();
    const auto p_sizes = spec.partition.p_sizes();
    const auto mask = tensorops::SparsityMask::neighbor();

    std::vector<MatrixXd> G(N, MatrixXd::Zero(spec.q(), spec.p()));
    for (size_t k = 1; k < N; ++k) {
        MatrixXd g =
            gains.F1[k] - gains.F[k] * spec.C * (fil.K1[k - 1] + spec.B * gains.F[k - 1]);
        const double stray = tensorops::max_offpattern_abs(g, mask, q_sizes, p_sizes);
        if (stray > kMaskTol)
            throw std::runtime_error(
                "derived measurement gain leaves the neighbor pattern (off-pattern mass " +
                std::to_string(stray) + "); the supplied gains are inconsistent");
        G[k] = tensorops::mask_project(g, mask, q_sizes, p_sizes);
    }
    return G;
}

std::vector<Eigen::MatrixXd> onestep_gains(const model::ProblemSpec& spec,
                                           const riccati::RiccatiPass& ric,
                                           const filtering::FilterPass& fil,
                                           const tensorops::SparsityMask& mask) {
    check_pass_shapes(spec, ric, fil);
    const auto q_sizes = spec.partition.q_sizes();
    const auto p_sizes = spec.partition.p_sizes();
    const auto selector =
        tensorops::build_selector(mask, q_sizes, p_sizes, tensorops::column_major_order(mask));
    const MatrixXd& e = selector.entries;

    std::vector<MatrixXd> F(static_cast<size_t>(spec.N));
    for (size_t k = 0; k < F.size(); ++k) {
        const MatrixXd normal = tensorops::symmetric_part(
            e.transpose() * tensorops::kron(fil.Ytilde[k], ric.H[k]) * e);
        const VectorXd rhs = e.transpose() *
                             tensorops::kron(spec.C * fil.P[k], ric.H[k]) *
                             tensorops::vec(ric.L[k]);
        auto llt = checked_llt(normal, "one-step normal-equation matrix at k=" + std::to_string(k));
        F[k] = tensorops::unpack_selection(selector, llt.solve(rhs), spec.q(), spec.p());
    }
    return F;
}

std::vector<Eigen::VectorXd> dense_qp_oracle(const QpAssembly& assembly) {
    const int N = static_cast<int>(assembly.dims.size()) - 1;
    if (N < 1) throw std::invalid_argument("assembly holds no stages");
    std::vector<int> offsets(static_cast<size_t>(N) + 1, 0);
    int total = 0;
    for (int k = 1; k <= N; ++k) {
        offsets[static_cast<size_t>(k)] = total;
        total += assembly.dims[static_cast<size_t>(k)];
    }

    MatrixXd hessian = MatrixXd::Zero(total, total);
    VectorXd rhs = VectorXd::Zero(total);
    for (int k = 1; k <= N; ++k) {
        const auto uk = static_cast<size_t>(k);
        const int at = offsets[uk];
        const int dim = assembly.dims[uk];
        hessian.block(at, at, dim, dim) = assembly.Z1[uk];
        rhs.segment(at, dim) = assembly.b[uk];
        if (k < N) {
            const int next = offsets[uk + 1];
            const int ndim = assembly.dims[uk + 1];
            hessian.block(at, next, dim, ndim) = assembly.Z2[uk];
            hessian.block(next, at, ndim, dim) = assembly.Z2[uk].transpose();
        }
    }

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(hessian);
    if (eig.eigenvalues().minCoeff() <= 0.0)
        throw std::runtime_error("stacked QP Hessian is not positive definite");
    const VectorXd solution = eig.eigenvectors() *
                              eig.eigenvalues().cwiseInverse().asDiagonal() *
                              (eig.eigenvectors().transpose() * rhs);

    std::vector<VectorXd> zeta(static_cast<size_t>(N) + 1);
    for (int k = 1; k <= N; ++k) {
        const auto uk = static_cast<size_t>(k);
        zeta[uk] = solution.segment(offsets[uk], assembly.dims[uk]);
    }
    return zeta;
}

double qp_objective(const QpAssembly& assembly, const std::vector<Eigen::VectorXd>& zeta) {
    const size_t N = assembly.dims.size() - 1;
    if (zeta.size() != N + 1) throw std::invalid_argument("zeta sequence length mismatch");
    double value = 0.0;
    for (size_t k = 1; k <= N; ++k) {
        if (zeta[k].size() != assembly.dims[k])
            throw std::invalid_argument("zeta(" + std::to_string(k) + ") has the wrong length");
        value += 0.5 * zeta[k].dot(assembly.Z1[k] * zeta[k]) - assembly.b[k].dot(zeta[k]);
        if (k < N) value += zeta[k].dot(assembly.Z2[k] * zeta[k + 1]);
    }
    return value;
}

double jtilde_value(const model::ProblemSpec& spec, const riccati::RiccatiPass& ric,
                    const filtering::FilterPass& fil, const std::vector<Eigen::MatrixXd>& F,
                    const std::vector<Eigen::MatrixXd>& F1) {
    check_pass_shapes(spec, ric, fil);
    const auto N = static_cast<size_t>(spec.N);
    if (F.size() != N || F1.size() != N)
        throw std::invalid_argument("gain sequences must cover the whole horizon");

    double total = 0.0;
    for (size_t k = 0; k < N; ++k) {
        const MatrixXd& h = ric.H[k];
        const MatrixXd& l = ric.L[k];
        // Innovation-replay error at stage k; no shared measurement exists yet
        // at k = 0, and P̃(0) = 0 removes the cross terms there too.
        MatrixXd d = MatrixXd::Zero(spec.q(), spec.p());
        MatrixXd y_prev = MatrixXd::Zero(spec.p(), spec.p());
        if (k >= 1) {
            d = F1[k] - l * fil.K1[k - 1] - l * spec.B * F[k - 1];
            y_prev = fil.Ytilde[k - 1];
        }
        const MatrixXd cpt = spec.C * fil.Ptilde[k];
        total += (h * F[k] * fil.Y1[k] * F[k].transpose()).trace();
        total += (h * d * y_prev * d.transpose()).trace();
        total += (h * l * fil.P1[k] * l.transpose()).trace();
        total += 2.0 * (h * F[k] * cpt * d.transpose()).trace();
        total -= 2.0 * (h * F[k] * spec.C * fil.P1[k] * l.transpose()).trace();
        total -= 2.0 * (h * l * fil.Ptilde[k] * d.transpose()).trace();
    }
    return total;
}

double jtilde_constant(const model::ProblemSpec& spec, const riccati::RiccatiPass& ric,
                       const filtering::FilterPass& fil) {
    check_pass_shapes(spec, ric, fil);
    const auto N = static_cast<size_t>(spec.N);
    double total = 0.0;
    for (size_t k = 0; k < N; ++k) {
        total += (ric.H[k] * ric.L[k] * fil.P1[k] * ric.L[k].transpose()).trace();
    }
    for (size_t k = 1; k < N; ++k) {
        const MatrixXd replay = ric.L[k] * fil.K1[k - 1];
        total += (ric.H[k] * replay * fil.Ytilde[k - 1] * replay.transpose()).trace();
        total += 2.0 * (ric.H[k] * replay * fil.Ptilde[k].transpose() * ric.L[k].transpose()).trace();
    }
    return total;
}

ControlLaw make_control_law(const model::ProblemSpec& spec, const GainSchedule& gains,
                            const riccati::RiccatiPass& ric, const filtering::FilterPass& fil) {
    ControlLaw law;
    law.N = static_cast<int>(gains.F.size());
    law.F = gains.F;
    law.F1 = gains.F1;
    law.G = derive_G(gains, spec, fil);
    law.L = ric.L;
    law.K = fil.K;
    law.K1 = fil.K1;
    if (law.L.size() != gains.F.size() || law.K.size() != gains.F.size() ||
        law.K1.size() != gains.F.size())
        throw std::invalid_argument("pass lengths do not match the gain schedule");
    return law;
}

std::string control_law_to_json(const ControlLaw& law) {
    if (law.N < 1 || law.F.size() != static_cast<size_t>(law.N))
        throw std::invalid_argument("control law is empty or inconsistent");
    auto sequence = [](const std::vector<MatrixXd>& ms, size_t from) {
        std::string out = "[";
        for (size_t i = from; i < ms.size(); ++i) {
            if (i > from) out += ", ";
            out += jsonio::matrix_to_json(ms[i]);
        }
        out += "]";
        return out;
    };
    std::string out = "{\n";
    out += "  \"N\": " + std::to_string(law.N) + ",\n";
    out += "  \"F\": " + sequence(law.F, 0) + ",\n";
    out += "  \"F1\": " + sequence(law.F1, 1) + ",\n";
    out += "  \"G\": " + sequence(law.G, 1) + ",\n";
    out += "  \"L\": " + sequence(law.L, 0) + ",\n";
    out += "  \"K\": " + sequence(law.K, 0) + ",\n";
    out += "  \"K1\": " + sequence(law.K1, 0) + "\n";
    out += "}\n";
    return out;
}

ControlLaw load_control_law(const std::string& json_text) {
    const jsonio::json doc = jsonio::parse(json_text);
    const std::string where = "control law";
    jsonio::require_keys(doc, {"N", "F", "F1", "G", "L", "K", "K1"}, where);
    ControlLaw law;
    law.N = jsonio::get_int(doc, "N", where);
    if (law.N < 1) throw std::invalid_argument(where + ": N must be at least 1");

    auto read_sequence = [&](const char* key, size_t expected) {
        const jsonio::json& field = jsonio::get_field(doc, key, where);
        if (!field.is_array() || field.size() != expected)
            throw std::invalid_argument(where + ": field \"" + key + "\" must be an array of " +
                                        std::to_string(expected) + " matrices");
        std::vector<MatrixXd> out;
        out.reserve(expected);
        for (size_t i = 0; i < expected; ++i) {
            out.push_back(jsonio::matrix_from_json(
                field.at(i), where + ": " + key + "[" + std::to_string(i) + "]"));
        }
        return out;
    };
    auto check_uniform = [&](const char* key, const std::vector<MatrixXd>& ms, Eigen::Index rows,
                             Eigen::Index cols) {
        for (const MatrixXd& m : ms) {
            if (m.rows() != rows || m.cols() != cols)
                throw std::invalid_argument(where + ": field \"" + key +
                                            "\" holds matrices of inconsistent shape");
        }
    };

    const auto un = static_cast<size_t>(law.N);
    law.F = read_sequence("F", un);
    const Eigen::Index q = law.F[0].rows();
    const Eigen::Index p = law.F[0].cols();
    check_uniform("F", law.F, q, p);

    std::vector<MatrixXd> f1 = read_sequence("F1", un - 1);
    check_uniform("F1", f1, q, p);
    law.F1.assign(un, MatrixXd::Zero(q, p));
    for (size_t k = 1; k < un; ++k) law.F1[k] = f1[k - 1];

    std::vector<MatrixXd> g = read_sequence("G", un - 1);
    check_uniform("G", g, q, p);
    law.G.assign(un, MatrixXd::Zero(q, p));
    for (size_t k = 1; k < un; ++k) law.G[k] = g[k - 1];

    law.L = read_sequence("L", un);
    const Eigen::Index n = law.L[0].cols();
    if (law.L[0].rows() != q)
        throw std::invalid_argument(where + ": L and F disagree on the input dimension");
    check_uniform("L", law.L, q, n);

    law.K = read_sequence("K", un);
    if (law.K[0].rows() != n || law.K[0].cols() != p)
        throw std::invalid_argument(where + ": K must map measurements to states");
    check_uniform("K", law.K, n, p);

    law.K1 = read_sequence("K1", un);
    check_uniform("K1", law.K1, n, p);
    return law;
}

}  // namespace dlqg::synthesis
