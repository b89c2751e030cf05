#include "genius/numkit/numkit.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "genius/error.hpp"

namespace genius::numkit {

void require_finite(const Eigen::Ref<const Matrix>& m, const char* what) {
    if (!m.allFinite()) {
        throw DomainError(std::string(what) + ": non-finite entry");
    }
}

TokenMatrix softmax_rows(const TokenMatrix& m) {
    TokenMatrix out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const double top = m.row(r).maxCoeff();
        double total = 0.0;
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out(r, c) = std::exp(m(r, c) - top);
            total += out(r, c);
        }
        out.row(r) /= total;
    }
    return out;
}

Vector softmax(const Vector& logits) {
    TokenMatrix row = logits.transpose();
    return softmax_rows(row).row(0).transpose();
}

double rms(const Vector& v) {
    if (v.size() == 0) {
        throw ContractError("rms: empty vector");
    }
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

Vector rms_normalize(const Vector& v) {
    const double r = rms(v);
    if (!(r > 0.0) || !std::isfinite(r)) {
        throw DomainError("rms_normalize: root mean square is zero or non-finite");
    }
    return v / r;
}

TokenMatrix rms_normalize_rows(const TokenMatrix& m) {
    TokenMatrix out(m.rows(), m.cols());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out.row(r) = rms_normalize(m.row(r).transpose()).transpose();
    }
    return out;
}

Matrix finite_diff_grad(const ScalarField& f, const Matrix& at, double step) {
    if (!(step > 0.0)) {
        throw ContractError("finite_diff_grad: step must be positive");
    }
    Matrix grad(at.rows(), at.cols());
    Matrix x = at;
    for (Eigen::Index c = 0; c < at.cols(); ++c) {
        for (Eigen::Index r = 0; r < at.rows(); ++r) {
            const double orig = x(r, c);
            x(r, c) = orig + step;
            const double plus = f(x);
            x(r, c) = orig - step;
            const double minus = f(x);
            x(r, c) = orig;
            if (!std::isfinite(plus) || !std::isfinite(minus)) {
                throw DomainError("finite_diff_grad: non-finite function value");
            }
            grad(r, c) = (plus - minus) / (2.0 * step);
        }
    }
    return grad;
}

Vector singular_values(const Matrix& m) {
    if (m.size() == 0) {
        return Vector();
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues();
}

int numerical_rank(const Matrix& m, double rel_tol) {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw ContractError("numerical_rank: rel_tol must lie in (0, 1)");
    }
    const Vector sv = singular_values(m);
    if (sv.size() == 0 || sv(0) == 0.0) {
        return 0;
    }
    const double cutoff = rel_tol * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) {
            ++rank;
        }
    }
    return rank;
}

double second_singular_ratio(const Matrix& m) {
    const Vector sv = singular_values(m);
    if (sv.size() < 2 || sv(0) == 0.0) {
        return 0.0;
    }
    return sv(1) / sv(0);
}

double max_abs(const Eigen::Ref<const Matrix>& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Rng::uniform_int(int lo, int hi) {
    if (hi < lo) {
        throw ContractError("Rng::uniform_int: empty range");
    }
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) {
        u1 = uniform();
    }
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

Matrix Rng::normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev) {
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = stddev * normal();
        }
    }
    return m;
}

TokenMatrix Rng::normal_tokens(Eigen::Index rows, Eigen::Index cols, double stddev) {
    return normal_matrix(rows, cols, stddev);
}

Vector Rng::normal_vector(Eigen::Index n, double stddev) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = stddev * normal();
    }
    return v;
}

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace genius::numkit
