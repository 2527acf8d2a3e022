#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace xmodal {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Library error. `code()` is a short machine-readable tag (e.g. "E_DIM")
/// that the CLI prints as the prefix of its single-line failure message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace codes {
inline constexpr const char* dimension = "E_DIM";
inline constexpr const char* precondition = "E_PRECONDITION";
inline constexpr const char* singular = "E_SINGULAR";
inline constexpr const char* range = "E_RANGE";
inline constexpr const char* io = "E_IO";
inline constexpr const char* config = "E_CONFIG";
inline constexpr const char* missing_input = "E_MISSING_INPUT";
inline constexpr const char* disconnected = "E_DISCONNECTED";
inline constexpr const char* check_failed = "E_CHECK_FAILED";
}  // namespace codes

inline void require(bool cond, const char* code, const std::string& what) {
    if (!cond) throw Error(code, what);
}

/// Seeded generator with platform-independent uniform/normal draws.
/// std::*_distribution output is implementation-defined, so reports that must
/// be byte-identical across toolchains draw through this wrapper instead.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    Matrix normal_matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = normal();
        return m;
    }

    Matrix uniform_matrix(Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) m(i, j) = uniform(lo, hi);
        return m;
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Derive an independent stream seed (restart r of base seed s).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    Rng r(base ^ (0xD1B54A32D192ED03ULL * (stream + 1)));
    return r.next_u64();
}

/// Ascending eigenvalues of a symmetric matrix.
inline Vector symmetric_eigenvalues(const Matrix& a) {
    if (a.rows() == 0) return Vector();
    Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

/// Largest singular value (exact, via SVD).
inline double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

}  // namespace xmodal
