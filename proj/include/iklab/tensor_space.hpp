#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace iklab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;
inline const cplx I_pi{0.0, pi};

struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::size_t pow3(int k)
{
    std::size_t r = 1;
    for (int i = 0; i < k; ++i) r *= 3;
    return r;
}

// Dense operator on (C^3)^{⊗sites}. Basis index of |i_1..i_k> (digits 0..2)
// has i_1 as the most significant base-3 digit.
class Op {
public:
    Op() = default;

    Op(Mat data, int sites) : data_(std::move(data)), sites_(sites)
    {
        if (sites_ < 1) throw InvalidInput("Op: sites must be positive");
        const auto n = static_cast<Eigen::Index>(pow3(sites_));
        if (data_.rows() != n || data_.cols() != n)
            throw InvalidInput("Op: matrix side must be 3^sites");
        if (!data_.allFinite()) throw NumericalFailure("Op: non-finite entry");
    }

    static Op identity(int sites)
    {
        const auto n = static_cast<Eigen::Index>(pow3(sites));
        return Op(Mat::Identity(n, n), sites);
    }

    const Mat& matrix() const { return data_; }
    int sites() const { return sites_; }
    Eigen::Index dim() const { return data_.rows(); }

    Op operator*(const Op& o) const { return Op(data_ * o.require_same(*this).data_, sites_); }
    Op operator+(const Op& o) const { return Op(data_ + o.require_same(*this).data_, sites_); }
    Op operator-(const Op& o) const { return Op(data_ - o.require_same(*this).data_, sites_); }
    Op operator*(cplx s) const { return Op(data_ * s, sites_); }
    friend Op operator*(cplx s, const Op& a) { return a * s; }

private:
    const Op& require_same(const Op& o) const
    {
        if (o.sites_ != sites_) throw InvalidInput("Op: site count mismatch");
        return *this;
    }

    Mat data_;
    int sites_ = 0;
};

inline double fro(const Mat& m) { return m.norm(); }

// ‖a−b‖ / max(‖a‖, ‖b‖, 1e−300)
inline double rel_diff(const Mat& a, const Mat& b)
{
    const double s = std::max({a.norm(), b.norm(), 1e-300});
    return (a - b).norm() / s;
}

inline double rel_diff(cplx a, cplx b)
{
    const double s = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / s;
}

inline Mat kron(const Mat& a, const Mat& b)
{
    Mat r(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return r;
}

inline Op kron(const Op& a, const Op& b)
{
    return Op(kron(a.matrix(), b.matrix()), a.sites() + b.sites());
}

// base-3 digit of basis index `idx` at 0-based site `s` of an n-site space
inline int digit(std::size_t idx, int s, int n)
{
    return static_cast<int>((idx / pow3(n - 1 - s)) % 3);
}

inline Op embed(const Op& a, int j, int n)
{
    if (a.sites() != 1) throw InvalidInput("embed: operand must act on one site");
    if (j < 1 || j > n) throw InvalidInput("embed: site index out of range");
    const auto left = static_cast<Eigen::Index>(pow3(j - 1));
    const auto right = static_cast<Eigen::Index>(pow3(n - j));
    return Op(kron(kron(Mat::Identity(left, left), a.matrix()), Mat::Identity(right, right)), n);
}

// b's first factor acts on site i, its second on site j (1-based, i != j).
inline Op embed_pair(const Op& b, int i, int j, int n)
{
    if (b.sites() != 2) throw InvalidInput("embed_pair: operand must act on two sites");
    if (i < 1 || i > n || j < 1 || j > n) throw InvalidInput("embed_pair: site index out of range");
    if (i == j) throw InvalidInput("embed_pair: sites must differ");
    const std::size_t dim = pow3(n);
    const std::size_t wi = pow3(n - i), wj = pow3(n - j);
    const Mat& bm = b.matrix();
    Mat r = Mat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t col = 0; col < dim; ++col) {
        const int ci = digit(col, i - 1, n), cj = digit(col, j - 1, n);
        const std::size_t base = col - ci * wi - cj * wj;
        for (int ri = 0; ri < 3; ++ri)
            for (int rj = 0; rj < 3; ++rj) {
                const cplx v = bm(3 * ri + rj, 3 * ci + cj);
                if (v != cplx{}) r(static_cast<Eigen::Index>(base + ri * wi + rj * wj), static_cast<Eigen::Index>(col)) = v;
            }
    }
    return Op(std::move(r), n);
}

inline Op permutation_matrix()
{
    Mat p = Mat::Zero(9, 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) p(3 * j + i, 3 * i + j) = 1.0;
    return Op(std::move(p), 2);
}

// Operator sending the factor at site k to site perm[k] (both 0-based).
inline Op site_permutation(const std::vector<int>& perm)
{
    const int n = static_cast<int>(perm.size());
    std::vector<int> chk(perm);
    std::sort(chk.begin(), chk.end());
    for (int k = 0; k < n; ++k)
        if (chk[k] != k) throw InvalidInput("site_permutation: not a permutation");
    const std::size_t dim = pow3(n);
    Mat r = Mat::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    for (std::size_t col = 0; col < dim; ++col) {
        std::size_t row = 0;
        for (int k = 0; k < n; ++k) row += digit(col, k, n) * pow3(n - 1 - perm[k]);
        r(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = 1.0;
    }
    return Op(std::move(r), n);
}

// Transpose on one factor (1-based); works for any number of sites.
inline Op partial_transpose(const Op& a, int which)
{
    const int n = a.sites();
    if (which < 1 || which > n) throw InvalidInput("partial_transpose: site index out of range");
    const std::size_t dim = pow3(n), w = pow3(n - which);
    Mat r(a.dim(), a.dim());
    for (std::size_t row = 0; row < dim; ++row) {
        const int dr = digit(row, which - 1, n);
        for (std::size_t col = 0; col < dim; ++col) {
            const int dc = digit(col, which - 1, n);
            const std::size_t r2 = row + (dc - dr) * static_cast<std::ptrdiff_t>(w);
            const std::size_t c2 = col + (dr - dc) * static_cast<std::ptrdiff_t>(w);
            r(static_cast<Eigen::Index>(r2), static_cast<Eigen::Index>(c2)) = a.matrix()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
        }
    }
    return Op(std::move(r), n);
}

inline Op partial_trace(const Op& a, int site)
{
    const int n = a.sites();
    if (site < 1 || site > n) throw InvalidInput("partial_trace: site index out of range");
    if (n == 1) throw InvalidInput("partial_trace: cannot trace the only site");
    const std::size_t w = pow3(n - site);
    const std::size_t out = pow3(n - 1);
    // reduced index = hi_part * w + lo_part; full index = hi_part * 3w + d * w + lo_part
    auto lift = [&](std::size_t red, int d) { return (red / w) * 3 * w + d * w + red % w; };
    Mat r = Mat::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(out));
    for (std::size_t row = 0; row < out; ++row)
        for (std::size_t col = 0; col < out; ++col) {
            cplx s{};
            for (int d = 0; d < 3; ++d)
                s += a.matrix()(static_cast<Eigen::Index>(lift(row, d)), static_cast<Eigen::Index>(lift(col, d)));
            r(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = s;
        }
    return Op(std::move(r), n - 1);
}

struct EigenDecomposition {
    Vec values;
    Mat right;  // columns v_r
    Mat left;   // columns v_l, with v_l^H a = λ v_l^H and v_l^H v_r = 1
    double condition = 0.0;
};

inline constexpr double near_defective_condition = 1e10;

// Eigenvalues sorted by (Re, Im). Throws NumericalFailure when the eigenvector
// matrix is too ill-conditioned to trust.
inline EigenDecomposition eig(const Mat& a, double max_condition = near_defective_condition)
{
    Eigen::ComplexEigenSolver<Mat> es(a, true);
    if (es.info() != Eigen::Success) throw NumericalFailure("eig: eigensolver did not converge");
    const auto n = a.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const Vec& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) {
        if (ev(x).real() != ev(y).real()) return ev(x).real() < ev(y).real();
        return ev(x).imag() < ev(y).imag();
    });
    EigenDecomposition out;
    out.values.resize(n);
    out.right.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = ev(order[static_cast<std::size_t>(k)]);
        out.right.col(k) = es.eigenvectors().col(order[static_cast<std::size_t>(k)]).normalized();
    }
    Eigen::JacobiSVD<Mat> svd(out.right);
    const auto& sv = svd.singularValues();
    out.condition = sv(n - 1) > 0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
    if (!(out.condition <= max_condition))
        throw NumericalFailure("eig: near-defective matrix (eigenvector condition " + std::to_string(out.condition) + ")");
    out.left = out.right.inverse().adjoint();
    return out;
}

inline EigenDecomposition eig(const Op& a, double max_condition = near_defective_condition)
{
    return eig(a.matrix(), max_condition);
}

}  // namespace iklab
