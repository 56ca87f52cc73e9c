#pragma once

// Analysis of coupling matrices D = (d_ij): monotone sign structure,
// M-matrix splitting D = sI - B, irreducibility as graph reachability with
// explicit chain/separating-set witnesses, strictly positive left null vector
// built from cofactor columns, spectrum classification and the large-time
// limit of exp(-tD).
//
// Conventions: equation and cell indices are 0-based everywhere, the left
// null vector is normalized to unit component sum, and eigenvalues within
// kEigTol of zero count as zero.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hjsys/errors.hpp"

namespace hjsys {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kEigTol = 1e-9;  // "zero eigenvalue" classification
inline constexpr long kConstantCell = -1;

// ---------------------------------------------------------------------------
// CouplingField: one matrix per grid cell, or a single constant matrix.

class CouplingField {
  public:
    static CouplingField constant(Matrix D) {
        validate(D);
        CouplingField f;
        f.m_ = static_cast<int>(D.rows());
        f.constant_ = std::move(D);
        return f;
    }

    static CouplingField per_cell(std::map<long, Matrix> cells) {
        if (cells.empty()) throw Error("per-cell coupling field needs at least one cell");
        CouplingField f;
        f.m_ = static_cast<int>(cells.begin()->second.rows());
        for (const auto& [cell, D] : cells) {
            validate(D);
            if (D.rows() != f.m_)
                throw Error("coupling field cells disagree on dimension");
        }
        f.cells_ = std::move(cells);
        return f;
    }

    int m() const { return m_; }
    bool is_constant() const { return constant_.has_value(); }

    const Matrix& at(long cell) const {
        if (constant_) return *constant_;
        auto it = cells_.find(cell);
        if (it == cells_.end())
            throw Error("coupling field has no matrix for cell " + std::to_string(cell));
        return it->second;
    }

    const std::map<long, Matrix>& cells() const { return cells_; }

    // Cell indices carrying a stored matrix; {kConstantCell} for constant fields.
    std::vector<long> stored_cells() const {
        if (constant_) return {kConstantCell};
        std::vector<long> out;
        out.reserve(cells_.size());
        for (const auto& [cell, D] : cells_) out.push_back(cell);
        return out;
    }

  private:
    static void validate(const Matrix& D) {
        if (D.rows() == 0 || D.rows() != D.cols())
            throw Error("coupling matrix must be square and nonempty");
        if (!D.allFinite()) throw Error("coupling matrix has non-finite entries");
    }

    int m_ = 0;
    std::optional<Matrix> constant_;
    std::map<long, Matrix> cells_;
};

// ---------------------------------------------------------------------------
// Monotone sign structure: d_ii >= 0, d_ij <= 0 off-diagonal, row sums >= 0.

enum class ViolationKind { DiagSign, OffdiagSign, RowSum };

inline const char* to_string(ViolationKind k) {
    switch (k) {
        case ViolationKind::DiagSign: return "DIAG_SIGN";
        case ViolationKind::OffdiagSign: return "OFFDIAG_SIGN";
        case ViolationKind::RowSum: return "ROW_SUM";
    }
    return "?";
}

struct MonotonicityViolation {
    long cell;  // kConstantCell for constant fields
    int i;
    int j;  // column for sign violations, == i for row sums
    ViolationKind kind;
    double value;
};

struct MonotonicityReport {
    bool holds = true;
    std::vector<MonotonicityViolation> violations;
};

inline MonotonicityReport check_monotone_coupling(const CouplingField& D, double tol = kEigTol) {
    MonotonicityReport report;
    for (long cell : D.stored_cells()) {
        const Matrix& M = D.at(cell);
        const int m = static_cast<int>(M.rows());
        for (int i = 0; i < m; ++i) {
            if (M(i, i) < -tol)
                report.violations.push_back({cell, i, i, ViolationKind::DiagSign, M(i, i)});
            for (int j = 0; j < m; ++j)
                if (j != i && M(i, j) > tol)
                    report.violations.push_back({cell, i, j, ViolationKind::OffdiagSign, M(i, j)});
            const double row_sum = M.row(i).sum();
            if (row_sum < -tol)
                report.violations.push_back({cell, i, i, ViolationKind::RowSum, row_sum});
        }
    }
    report.holds = report.violations.empty();
    return report;
}

inline MonotonicityReport check_monotone_coupling(const Matrix& D, double tol = kEigTol) {
    return check_monotone_coupling(CouplingField::constant(D), tol);
}

// ---------------------------------------------------------------------------
// Irreducibility: every ordered pair (i,j) joined by a chain of nonzero
// entries. Equivalent to strong connectivity of the support digraph of the
// off-diagonal entries; witnessed either by shortest chains or by a proper
// index subset with no outgoing nonzero entry.

struct IrreducibilityWitness {
    bool irreducible = false;
    // chain(i,j): i = c_0, c_1, ..., c_k = j with D(c_{l-1}, c_l) != 0;
    // indexed i*m + j, present iff irreducible.
    std::vector<std::vector<int>> chains;
    // Nonempty proper subset I with d_ij = 0 for all i in I, j outside;
    // present iff reducible.
    std::vector<int> separating_set;

    const std::vector<int>& chain(int i, int j) const {
        const int m = static_cast<int>(std::lround(std::sqrt(double(chains.size()))));
        return chains[static_cast<std::size_t>(i) * m + j];
    }
};

inline IrreducibilityWitness is_irreducible(const Matrix& D, double zero_tol = 0.0) {
    const int m = static_cast<int>(D.rows());
    if (m != D.cols()) throw Error("is_irreducible needs a square matrix");

    auto edge = [&](int i, int j) { return i != j && std::abs(D(i, j)) > zero_tol; };

    // BFS from every source; record parents for chain reconstruction.
    std::vector<std::vector<int>> parent(m, std::vector<int>(m, -2));  // -2 unreachable, -1 root
    for (int s = 0; s < m; ++s) {
        std::deque<int> queue{s};
        parent[s][s] = -1;
        while (!queue.empty()) {
            const int u = queue.front();
            queue.pop_front();
            for (int v = 0; v < m; ++v)
                if (edge(u, v) && parent[s][v] == -2) {
                    parent[s][v] = u;
                    queue.push_back(v);
                }
        }
    }

    IrreducibilityWitness w;
    for (int s = 0; s < m; ++s) {
        bool full = true;
        for (int v = 0; v < m; ++v) full = full && parent[s][v] != -2;
        if (!full) {
            // The reach set of s is closed under outgoing edges, hence separating.
            w.irreducible = false;
            for (int v = 0; v < m; ++v)
                if (parent[s][v] != -2) w.separating_set.push_back(v);
            return w;
        }
    }

    w.irreducible = true;
    w.chains.resize(static_cast<std::size_t>(m) * m);
    for (int s = 0; s < m; ++s)
        for (int v = 0; v < m; ++v) {
            std::vector<int> chain;
            for (int u = v; u != -1; u = parent[s][u]) chain.push_back(u);
            std::reverse(chain.begin(), chain.end());
            w.chains[static_cast<std::size_t>(s) * m + v] = std::move(chain);
        }
    return w;
}

// ---------------------------------------------------------------------------
// Spectral radius of an entrywise-nonnegative matrix: power iteration with a
// full eigensolve fallback when the iteration stalls or breaks down.

inline double spectral_radius(const Matrix& B, double tol = kEigTol) {
    const int m = static_cast<int>(B.rows());
    if (m != B.cols()) throw Error("spectral_radius needs a square matrix");
    if ((B.array() < 0.0).any()) throw NotNonnegative("spectral_radius: matrix has negative entries");
    if (B.lpNorm<Eigen::Infinity>() == 0.0) return 0.0;

    Vector v = Vector::Ones(m);
    double estimate = 0.0;
    double previous = -1.0;
    const double scale = std::max(1.0, B.lpNorm<Eigen::Infinity>());
    for (int iter = 0; iter < 200; ++iter) {
        Vector w = B * v;
        const double norm = w.norm();
        if (norm <= 1e-300 * scale) return 0.0;  // start vector fell in the kernel: nilpotent-like
        estimate = v.dot(w) / v.squaredNorm();
        v = w / norm;
        if (iter > 4 && std::abs(estimate - previous) <= tol * std::max(1.0, std::abs(estimate)))
            return estimate;
        previous = estimate;
    }
    // Oscillatory spectrum (several eigenvalues on the spectral circle):
    // fall back to the full eigensolve, exact enough for the small m used here.
    Eigen::EigenSolver<Matrix> es(B);
    double rho = 0.0;
    for (int k = 0; k < m; ++k) rho = std::max(rho, std::abs(es.eigenvalues()[k]));
    return rho;
}

// ---------------------------------------------------------------------------
// M-matrix splitting D = sI - B with B >= 0 and s >= rho(B).

struct MDecomposition {
    double s = 0.0;
    Matrix B;
    double rho = 0.0;
};

inline MDecomposition m_decompose(const Matrix& D, double tol = kEigTol) {
    const auto report = check_monotone_coupling(D, tol);
    if (!report.holds) {
        std::ostringstream msg;
        msg << "m_decompose: matrix is not monotone (" << report.violations.size() << " violations)";
        throw MonotonicityViolated(msg.str());
    }
    MDecomposition dec;
    dec.s = D.diagonal().maxCoeff();
    if (dec.s < 0.0) dec.s = 0.0;  // only from entries within -tol of zero
    dec.B = dec.s * Matrix::Identity(D.rows(), D.cols()) - D;
    dec.B = dec.B.cwiseMax(0.0);   // clip the same sub-tol negatives
    dec.rho = spectral_radius(dec.B, tol);
    if (dec.s < dec.rho - tol)
        throw MonotonicityViolated("m_decompose: s < rho(B) beyond tolerance");
    return dec;
}

// ---------------------------------------------------------------------------
// Spectrum classification: nonzero eigenvalues must sit in the open right
// half plane; r is the smallest such real part (the spectral gap when the
// kernel is one-dimensional).

struct SpectrumCheck {
    bool ok = false;
    std::optional<double> r;
    int zero_count = 0;
};

inline SpectrumCheck nonzero_spectrum_check(const Matrix& D, double tol = kEigTol) {
    SpectrumCheck out;
    out.ok = true;
    Eigen::EigenSolver<Matrix> es(D);
    for (int k = 0; k < D.rows(); ++k) {
        const std::complex<double> lambda = es.eigenvalues()[k];
        if (std::abs(lambda) <= tol) {
            ++out.zero_count;
            continue;
        }
        if (lambda.real() <= 0.0) out.ok = false;
        if (!out.r || lambda.real() < *out.r) out.r = lambda.real();
    }
    if (!out.ok) out.r.reset();
    return out;
}

// ---------------------------------------------------------------------------
// Left null vector via cofactor columns (continuous in D, strictly positive
// for irreducible monotone matrices).

enum class PerronMode { Degenerate, General };

struct PerronData {
    Vector lambda_vec;      // > 0, sum = 1
    int kernel_dim = 0;
    std::optional<double> min_nonzero_real_part;
    std::optional<Matrix> limit_projector;  // lim exp(-tD), degenerate case only
};

namespace detail {

inline Matrix cofactor_matrix(const Matrix& D) {
    const int m = static_cast<int>(D.rows());
    Matrix C(m, m);
    if (m == 1) {
        C(0, 0) = 1.0;  // determinant of the empty minor
        return C;
    }
    Matrix minor(m - 1, m - 1);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            for (int r = 0, rr = 0; r < m; ++r) {
                if (r == i) continue;
                for (int c = 0, cc = 0; c < m; ++c) {
                    if (c == j) continue;
                    minor(rr, cc++) = D(r, c);
                }
                ++rr;
            }
            const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
            C(i, j) = sign * minor.determinant();
        }
    return C;
}

}  // namespace detail

inline PerronData perron_left_null_vector(const Matrix& D, PerronMode mode = PerronMode::Degenerate,
                                          double tol = kEigTol) {
    const int m = static_cast<int>(D.rows());
    if (!is_irreducible(D).irreducible)
        throw NotIrreducible("perron_left_null_vector: matrix is reducible");

    const Vector row_sums = D.rowwise().sum();
    Matrix Dtilde = D;
    if (mode == PerronMode::Degenerate) {
        const double scale = std::max(1.0, D.lpNorm<Eigen::Infinity>());
        if (row_sums.lpNorm<Eigen::Infinity>() > 1e-7 * scale)
            throw RowSumsNonzero("perron_left_null_vector: row sums are not zero");
    } else {
        Dtilde -= row_sums.asDiagonal();  // subtract alpha_i = sum_j d_ij
    }

    // Columns of the cofactor matrix of the degenerate part span ker(D~^T);
    // summing their absolute values keeps the choice continuous and positive.
    const Matrix C = detail::cofactor_matrix(Dtilde);
    Vector lambda = Vector::Zero(m);
    for (int j = 0; j < m; ++j) lambda += C.col(j).cwiseAbs();
    const double total = lambda.sum();
    if (!(total > m * 1e-300) || !lambda.allFinite())
        throw DegenerateCofactor("perron_left_null_vector: cofactor matrix is numerically zero");
    lambda /= total;
    if ((lambda.array() <= 0.0).any())
        throw DegenerateCofactor("perron_left_null_vector: null vector is not strictly positive");

    const Vector image = D.transpose() * lambda;
    const double check_tol = 1e-8 * std::max(1.0, D.lpNorm<Eigen::Infinity>());
    if (mode == PerronMode::Degenerate) {
        if (image.lpNorm<Eigen::Infinity>() > check_tol)
            throw DegenerateCofactor("perron_left_null_vector: D^T Lambda != 0");
    } else if ((image.array() < -check_tol).any()) {
        throw DegenerateCofactor("perron_left_null_vector: D^T Lambda has negative entries");
    }

    PerronData out;
    out.lambda_vec = lambda;
    const SpectrumCheck spectrum = nonzero_spectrum_check(D, tol);
    out.kernel_dim = spectrum.zero_count;
    if (spectrum.ok) out.min_nonzero_real_part = spectrum.r;
    if (mode == PerronMode::Degenerate && out.kernel_dim == 1 && spectrum.ok)
        out.limit_projector = Vector::Ones(m) * lambda.transpose();
    return out;
}

// ---------------------------------------------------------------------------
// exp(-tD) by scaling and squaring with a (6,6) Pade approximant; the scaled
// argument has norm <= 2^-4, putting the truncation error far below 1e-12
// relative.

inline Matrix expm(const Matrix& A) {
    const int m = static_cast<int>(A.rows());
    const double norm = A.lpNorm<1>();
    int squarings = 0;
    Matrix X = A;
    if (norm > 0.0625) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm / 0.0625))));
        X /= std::pow(2.0, squarings);
    }

    // Pade (6,6): N(X)/D(X) with D(X) = N(-X).
    static const double c[7] = {1.0, 0.5, 5.0 / 44.0, 1.0 / 66.0, 1.0 / 792.0, 1.0 / 15840.0,
                                1.0 / 665280.0};
    const Matrix I = Matrix::Identity(m, m);
    const Matrix X2 = X * X;
    const Matrix X4 = X2 * X2;
    const Matrix even = c[0] * I + c[2] * X2 + c[4] * X4 + c[6] * X4 * X2;
    const Matrix odd = X * (c[1] * I + c[3] * X2 + c[5] * X4);
    Matrix F = (even - odd).partialPivLu().solve(even + odd);
    for (int k = 0; k < squarings; ++k) F = F * F;
    return F;
}

inline Matrix matrix_exponential(const Matrix& D, double t) {
    if (t < 0.0) throw Error("matrix_exponential: t must be nonnegative");
    return expm(Matrix(-t * D));
}

// ---------------------------------------------------------------------------
// Large-time limit of exp(-tD) for irreducible zero-row-sum monotone D:
// the rank-one projector onto ker D = span{1} along im D, with the spectral
// gap r governing the approach rate.

struct ExpLimit {
    Matrix projector;
    double r = 0.0;
};

inline ExpLimit exp_limit_projector(const Matrix& D, double tol = kEigTol) {
    const PerronData perron = perron_left_null_vector(D, PerronMode::Degenerate, tol);
    if (perron.kernel_dim != 1)
        throw KernelDimNotOne("exp_limit_projector: kernel dimension is " +
                              std::to_string(perron.kernel_dim));
    if (!perron.min_nonzero_real_part)
        throw KernelDimNotOne("exp_limit_projector: no spectral gap (D = 0?)");

    ExpLimit out;
    out.projector = Vector::Ones(D.rows()) * perron.lambda_vec.transpose();
    out.r = *perron.min_nonzero_real_part;

    // exp(-tD) must approach the projector at rate e^{-rt/2} on sampled times.
    const double t0 = 0.5 / std::max(out.r, 1e-6);
    const double base = (matrix_exponential(D, t0) - out.projector).lpNorm<Eigen::Infinity>();
    const double C = 16.0 * (base * std::exp(out.r * t0 / 2.0) + 1.0);
    for (double factor : {2.0, 4.0, 8.0}) {
        const double t = factor * t0;
        const double gap = (matrix_exponential(D, t) - out.projector).lpNorm<Eigen::Infinity>();
        if (gap > C * std::exp(-out.r * t / 2.0))
            throw Error("exp_limit_projector: exp(-tD) does not approach the projector");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Memoized per-cell analysis of a CouplingField, plus the largest jump of the
// null vector between stored cells (reported, not reconciled).

class CouplingAnalysis {
  public:
    explicit CouplingAnalysis(const CouplingField& field, PerronMode mode = PerronMode::Degenerate)
        : field_(&field), mode_(mode) {}

    const PerronData& perron_at(long cell) {
        const long key = field_->is_constant() ? kConstantCell : cell;
        auto it = memo_.find(key);
        if (it == memo_.end())
            it = memo_.emplace(key, perron_left_null_vector(field_->at(key), mode_)).first;
        return it->second;
    }

    // Max null-vector jump between consecutive stored cells (0 when constant).
    double max_adjacent_lambda_jump() {
        if (field_->is_constant()) return 0.0;
        double worst = 0.0;
        const Vector* prev = nullptr;
        for (const auto& [cell, D] : field_->cells()) {
            const Vector& lam = perron_at(cell).lambda_vec;
            if (prev) worst = std::max(worst, (lam - *prev).lpNorm<Eigen::Infinity>());
            prev = &perron_at(cell).lambda_vec;
        }
        return worst;
    }

  private:
    const CouplingField* field_;
    PerronMode mode_;
    std::map<long, PerronData> memo_;
};

}  // namespace hjsys
