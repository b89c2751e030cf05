/// @file numkit.hpp
/// @brief Small deterministic numeric kernel: dense matrices, softmax, RMS
/// normalization, central finite differences and singular-value rank checks.
///
/// Everything is double precision. The theorem checks downstream assert
/// identities at 1e-9, which single precision cannot resolve.

#pragma once

#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Dense>

namespace genius::numkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Sequence-by-feature matrix, one token per row, stored row-major.
using TokenMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Throws DomainError if any entry is NaN or infinite.
void require_finite(const Eigen::Ref<const Matrix>& m, const char* what);

/// Row-wise softmax with per-row max subtraction.
TokenMatrix softmax_rows(const TokenMatrix& m);

/// Softmax of a single logit vector.
Vector softmax(const Vector& logits);

/// Root mean square with the biased (divide by n) mean.
double rms(const Vector& v);

/// v / rms(v). Throws DomainError when rms(v) == 0.
Vector rms_normalize(const Vector& v);

/// Applies rms_normalize to every row.
TokenMatrix rms_normalize_rows(const TokenMatrix& m);

using ScalarField = std::function<double(const Matrix&)>;

/// Central-difference gradient (f(x + h e_ij) - f(x - h e_ij)) / 2h for each entry.
/// Throws ContractError if step <= 0 and DomainError on a non-finite evaluation.
Matrix finite_diff_grad(const ScalarField& f, const Matrix& at, double step);

/// Singular values in non-increasing order.
Vector singular_values(const Matrix& m);

/// Number of singular values strictly greater than rel_tol times the largest.
int numerical_rank(const Matrix& m, double rel_tol);

/// sigma_2 / sigma_1, or 0 when the matrix is zero or has a single singular value.
double second_singular_ratio(const Matrix& m);

/// Largest absolute entry; 0 for an empty matrix.
double max_abs(const Eigen::Ref<const Matrix>& m);

/// Seeded generator with a portable draw sequence.
///
/// Uses std::mt19937_64 for the raw stream and derives uniforms and normals
/// by hand so the sequence does not depend on the standard library's
/// distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Integer uniform in [lo, hi].
    int uniform_int(int lo, int hi);
    /// Standard normal via Box-Muller.
    double normal();

    Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);
    TokenMatrix normal_tokens(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);
    Vector normal_vector(Eigen::Index n, double stddev = 1.0);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

/// SplitMix64 step; used to derive independent per-trial seeds from a base seed.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index);

}  // namespace genius::numkit
