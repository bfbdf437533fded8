#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "tensor_space.hpp"

namespace iklab {

// Boundary parameters may be +inf (real part) to select the diagonal K-matrices.
struct ModelParams {
    cplx eta{0.3, 0.11};
    cplx eps{0.4, 0.0};
    cplx eps_p{0.7, 0.0};
    cplx sigma{0.5, 0.0};
    cplx sigma_p{-0.2, 0.0};
    std::vector<cplx> thetas;

    int n_sites() const { return static_cast<int>(thetas.size()); }

    static ModelParams default_profile(int n)
    {
        static const cplx th[] = {{0.23, 0.0}, {-0.41, 0.0}, {0.57, 0.0}, {-0.68, 0.0}};
        if (n < 1 || n > 4) throw InvalidInput("default profile supports 1 <= N <= 4");
        ModelParams p;
        p.thetas.assign(th, th + n);
        return p;
    }

    ModelParams diagonal_limit() const
    {
        ModelParams q = *this;
        q.eps = q.eps_p = cplx{std::numeric_limits<double>::infinity(), 0.0};
        return q;
    }

    ModelParams homogeneous() const
    {
        ModelParams q = *this;
        for (auto& t : q.thetas) t = 0.0;
        return q;
    }

    bool diagonal() const { return is_pos_inf(eps) && is_pos_inf(eps_p); }

    static bool is_pos_inf(cplx z) { return std::isinf(z.real()) && z.real() > 0; }
};

// e^{−ε}, exactly 0 in the diagonal limit
inline cplx boundary_weight(cplx e) { return ModelParams::is_pos_inf(e) ? cplx{} : std::exp(-e); }

// ---- R-matrix entries -------------------------------------------------------

enum class BTerm { Sinh, SinTypo };

struct REntries {
    cplx a, b, c, d, e, ebar, f, fbar, g, gbar;
};

inline REntries r_entries(cplx u, cplx eta, BTerm bt = BTerm::Sinh)
{
    using std::cosh, std::exp, std::sinh;
    const cplx s2 = sinh(2.0 * eta);
    REntries r;
    r.a = sinh(u - 3.0 * eta) - sinh(5.0 * eta) + sinh(3.0 * eta) + sinh(eta);
    r.b = sinh(u - 3.0 * eta) + (bt == BTerm::Sinh ? sinh(3.0 * eta) : std::sin(3.0 * eta));
    r.c = sinh(u - 5.0 * eta) + sinh(eta);
    r.d = sinh(u - eta) + sinh(eta);
    r.e = -2.0 * exp(-u / 2.0) * s2 * cosh(u / 2.0 - 3.0 * eta);
    r.ebar = -2.0 * exp(u / 2.0) * s2 * cosh(u / 2.0 - 3.0 * eta);
    r.f = -2.0 * exp(-u + 2.0 * eta) * sinh(eta) * s2 - exp(-eta) * sinh(4.0 * eta);
    r.fbar = 2.0 * exp(u - 2.0 * eta) * sinh(eta) * s2 - exp(eta) * sinh(4.0 * eta);
    r.g = 2.0 * exp(-u / 2.0 + 2.0 * eta) * sinh(u / 2.0) * s2;
    r.gbar = -2.0 * exp(u / 2.0 - 2.0 * eta) * sinh(u / 2.0) * s2;
    return r;
}

inline REntries r_entries_derivative(cplx u, cplx eta)
{
    using std::cosh, std::exp, std::sinh;
    const cplx s2 = sinh(2.0 * eta);
    REntries r;
    r.a = cosh(u - 3.0 * eta);
    r.b = cosh(u - 3.0 * eta);
    r.c = cosh(u - 5.0 * eta);
    r.d = cosh(u - eta);
    r.e = s2 * exp(-u + 3.0 * eta);
    r.ebar = -s2 * exp(u - 3.0 * eta);
    r.f = 2.0 * exp(-u + 2.0 * eta) * sinh(eta) * s2;
    r.fbar = 2.0 * exp(u - 2.0 * eta) * sinh(eta) * s2;
    r.g = s2 * exp(2.0 * eta - u);
    r.gbar = -s2 * exp(u - 2.0 * eta);
    return r;
}

inline Mat r_layout(const REntries& x)
{
    Mat m = Mat::Zero(9, 9);
    m(0, 0) = m(8, 8) = x.c;
    m(1, 1) = m(3, 3) = m(5, 5) = m(7, 7) = x.b;
    m(2, 2) = m(6, 6) = x.d;
    m(4, 4) = x.a;
    m(1, 3) = m(5, 7) = x.e;
    m(3, 1) = m(7, 5) = x.ebar;
    m(2, 4) = m(4, 6) = x.g;
    m(4, 2) = m(6, 4) = x.gbar;
    m(2, 6) = x.f;
    m(6, 2) = x.fbar;
    return m;
}

inline Op r_matrix(cplx u, cplx eta, BTerm bt = BTerm::Sinh) { return Op(r_layout(r_entries(u, eta, bt)), 2); }
inline Op r_matrix(cplx u, const ModelParams& p, BTerm bt = BTerm::Sinh) { return r_matrix(u, p.eta, bt); }
inline Op r_matrix_derivative(cplx u, const ModelParams& p) { return Op(r_layout(r_entries_derivative(u, p.eta)), 2); }

inline Op r21(cplx u, const ModelParams& p)
{
    const Op P = permutation_matrix();
    return P * r_matrix(u, p) * P;
}

// ---- V, M, K± ---------------------------------------------------------------

inline Op v_matrix(cplx eta)
{
    Mat v = Mat::Zero(3, 3);
    v(0, 2) = -std::exp(-eta);
    v(1, 1) = 1.0;
    v(2, 0) = -std::exp(eta);
    return Op(std::move(v), 1);
}

inline Op m_matrix(cplx eta)
{
    Mat m = Mat::Zero(3, 3);
    m(0, 0) = std::exp(2.0 * eta);
    m(1, 1) = 1.0;
    m(2, 2) = std::exp(-2.0 * eta);
    return Op(std::move(m), 1);
}

inline Op m_matrix_inverse(cplx eta) { return m_matrix(-eta); }

inline Op v_matrix(const ModelParams& p) { return v_matrix(p.eta); }
inline Op m_matrix(const ModelParams& p) { return m_matrix(p.eta); }

inline Mat k_minus_raw(cplx u, cplx eta, cplx eps, cplx sig)
{
    using std::exp, std::sinh;
    const cplx w = boundary_weight(eps);
    Mat k = Mat::Zero(3, 3);
    k(0, 0) = 1.0 + 2.0 * w * exp(-u) * sinh(eta);
    k(1, 1) = 1.0 - 2.0 * w * sinh(u - eta);
    k(2, 2) = 1.0 + 2.0 * w * exp(u) * sinh(eta);
    if (w != cplx{}) {
        k(0, 2) = 2.0 * w * exp(sig) * sinh(u);
        k(2, 0) = 2.0 * w * exp(-sig) * sinh(u);
    }
    return k;
}

inline Mat k_minus_raw_derivative(cplx u, cplx eta, cplx eps, cplx sig)
{
    using std::cosh, std::exp, std::sinh;
    const cplx w = boundary_weight(eps);
    Mat k = Mat::Zero(3, 3);
    if (w == cplx{}) return k;
    k(0, 0) = -2.0 * w * exp(-u) * sinh(eta);
    k(1, 1) = -2.0 * w * cosh(u - eta);
    k(2, 2) = 2.0 * w * exp(u) * sinh(eta);
    k(0, 2) = 2.0 * w * exp(sig) * cosh(u);
    k(2, 0) = 2.0 * w * exp(-sig) * cosh(u);
    return k;
}

inline Op k_minus(cplx u, const ModelParams& p) { return Op(k_minus_raw(u, p.eta, p.eps, p.sigma), 1); }

inline Op k_plus(cplx u, const ModelParams& p)
{
    return Op(m_matrix(p.eta).matrix() * k_minus_raw(-u + 6.0 * p.eta + I_pi, p.eta, p.eps_p, p.sigma_p), 1);
}

inline Op k_minus_derivative(cplx u, const ModelParams& p)
{
    return Op(k_minus_raw_derivative(u, p.eta, p.eps, p.sigma), 1);
}

inline Op k_plus_derivative(cplx u, const ModelParams& p)
{
    return Op(-(m_matrix(p.eta).matrix() * k_minus_raw_derivative(-u + 6.0 * p.eta + I_pi, p.eta, p.eps_p, p.sigma_p)), 1);
}

// ---- fusion -----------------------------------------------------------------

struct FusionVectors {
    Vec phi0, phi1, phi2, phi3;
};

inline Vec basis_ket(int i, int j)  // 1-based labels
{
    Vec v = Vec::Zero(9);
    v(3 * (i - 1) + (j - 1)) = 1.0;
    return v;
}

inline FusionVectors fusion_vectors(cplx eta)
{
    using std::cosh, std::exp, std::sinh, std::sqrt;
    const cplx s1 = sqrt(2.0 * cosh(2.0 * eta) + 1.0);
    const cplx s2 = sqrt(2.0 * cosh(2.0 * eta));
    FusionVectors f;
    f.phi0 = (exp(-eta) * basis_ket(1, 3) - basis_ket(2, 2) + exp(eta) * basis_ket(3, 1)) / s1;
    f.phi1 = (exp(-eta) * basis_ket(1, 2) - exp(eta) * basis_ket(2, 1)) / s2;
    f.phi2 = (basis_ket(1, 3) - 2.0 * sinh(eta) * basis_ket(2, 2) - basis_ket(3, 1)) / s2;
    f.phi3 = (exp(-eta) * basis_ket(2, 3) - exp(eta) * basis_ket(3, 2)) / s2;
    return f;
}

inline FusionVectors fusion_vectors(const ModelParams& p) { return fusion_vectors(p.eta); }

struct Projectors {
    Op p1_12, p3_12, p1_21, p3_21;
};

// Bilinear pairing: |Φ><Φ| means Φ Φ^T.
inline Projectors projectors(const ModelParams& p)
{
    const auto f = fusion_vectors(p);
    const Mat P = permutation_matrix().matrix();
    const Mat p1 = f.phi0 * f.phi0.transpose();
    const Mat p3 = f.phi1 * f.phi1.transpose() + f.phi2 * f.phi2.transpose() + f.phi3 * f.phi3.transpose();
    return {Op(p1, 2), Op(p3, 2), Op(P * p1 * P, 2), Op(P * p3 * P, 2)};
}

// 9x3 isometry onto the rank-3 fused space (columns Φ1, Φ2, Φ3).
inline Mat fused_basis(const ModelParams& p)
{
    const auto f = fusion_vectors(p);
    Mat b(9, 3);
    b.col(0) = f.phi1;
    b.col(1) = f.phi2;
    b.col(2) = f.phi3;
    return b;
}

// ---- scalar functions -------------------------------------------------------

inline cplx rho1(cplx u, cplx eta)
{
    using std::cosh, std::sinh;
    return -4.0 * sinh(u / 2.0 - 2.0 * eta) * sinh(u / 2.0 + 2.0 * eta) * cosh(u / 2.0 - 3.0 * eta) * cosh(u / 2.0 + 3.0 * eta);
}

inline cplx rho2(cplx u, cplx eta)
{
    using std::cosh, std::sinh;
    return -4.0 * cosh(u / 2.0 - 5.0 * eta) * cosh(u / 2.0 - eta) * sinh(u / 2.0) * sinh(u / 2.0 - 6.0 * eta);
}

inline cplx rho3(cplx u, cplx eta)
{
    return -2.0 * std::sinh(u / 2.0 + 2.0 * eta) * std::cosh(u / 2.0 - 3.0 * eta);
}

enum class Scalar { Rho1, Rho2, Rho3, FMinus, FPlus, DetKMinus, DetKPlus, DeltaMinus, DeltaPlus, Delta1, Delta2 };

inline const char* scalar_name(Scalar s)
{
    switch (s) {
    case Scalar::Rho1: return "rho1";
    case Scalar::Rho2: return "rho2";
    case Scalar::Rho3: return "rho3";
    case Scalar::FMinus: return "f_minus";
    case Scalar::FPlus: return "f_plus";
    case Scalar::DetKMinus: return "det_k_minus";
    case Scalar::DetKPlus: return "det_k_plus";
    case Scalar::DeltaMinus: return "delta_minus";
    case Scalar::DeltaPlus: return "delta_plus";
    case Scalar::Delta1: return "delta1";
    case Scalar::Delta2: return "delta2";
    }
    return "?";
}

inline cplx scalar(Scalar s, cplx u, const ModelParams& p)
{
    using std::cosh, std::sinh;
    const cplx eta = p.eta;
    const cplx w = boundary_weight(p.eps), wp = boundary_weight(p.eps_p);
    switch (s) {
    case Scalar::Rho1: return rho1(u, eta);
    case Scalar::Rho2: return rho2(u, eta);
    case Scalar::Rho3: return rho3(u, eta);
    case Scalar::FMinus: return -2.0 * (1.0 - 2.0 * w * sinh(u - eta)) * cosh(u - eta) * sinh(u + 4.0 * eta);
    case Scalar::FPlus: return 2.0 * (1.0 - 2.0 * wp * sinh(u - eta)) * cosh(u - eta) * sinh(u - 6.0 * eta);
    case Scalar::DetKMinus:
        return -2.0 * (1.0 - 2.0 * w * sinh(u - eta)) * (1.0 + 2.0 * w * sinh(u + eta)) * sinh(u + 6.0 * eta) * cosh(u + eta);
    case Scalar::DetKPlus:
        return 2.0 * (1.0 - 2.0 * wp * sinh(u - eta)) * (1.0 + 2.0 * wp * sinh(u + eta)) * sinh(u - 6.0 * eta) * cosh(u - eta);
    case Scalar::DeltaMinus: return (1.0 - 2.0 * w * sinh(u - eta)) * (1.0 + 2.0 * w * sinh(u + eta));
    case Scalar::DeltaPlus: return (1.0 - 2.0 * wp * sinh(u - eta)) * (1.0 + 2.0 * wp * sinh(u + eta));
    case Scalar::Delta1: {
        cplx r = scalar(Scalar::DetKMinus, u, p) * scalar(Scalar::DetKPlus, u, p);
        for (const cplx& t : p.thetas) r *= rho1(u - t, eta) * rho1(u + t, eta);
        return r;
    }
    case Scalar::Delta2: {
        cplx r = scalar(Scalar::FMinus, u, p) * scalar(Scalar::FPlus, u, p);
        for (const cplx& t : p.thetas) r *= rho3(u - t, eta) * rho3(u + t, eta);
        return r;
    }
    }
    return {};
}

inline cplx k_minus_at_zero(const ModelParams& p) { return 1.0 + 2.0 * boundary_weight(p.eps) * std::sinh(p.eta); }

// ---- validation -------------------------------------------------------------

inline std::vector<std::string> violations(const ModelParams& p, bool require_distinct_thetas = true)
{
    std::vector<std::string> out;
    const double tiny = 1e-12;
    auto check = [&](cplx v, const std::string& what) {
        if (!(std::abs(v) > tiny)) out.push_back(what + " vanishes");
    };
    auto finite = [](cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
    if (!finite(p.eta) || !finite(p.sigma) || !finite(p.sigma_p)) out.push_back("eta/sigma must be finite");
    for (cplx e : {p.eps, p.eps_p})
        if (!finite(e) && !ModelParams::is_pos_inf(e)) out.push_back("eps must be finite or +inf");
    if (ModelParams::is_pos_inf(p.eps) != ModelParams::is_pos_inf(p.eps_p))
        out.push_back("eps and eps_p must be both finite or both +inf");
    if (p.thetas.empty()) out.push_back("chain needs at least one site");
    if (!out.empty()) return out;
    check(std::sinh(2.0 * p.eta), "sinh(2 eta)");
    check(2.0 * std::cosh(2.0 * p.eta) + 1.0, "2cosh(2 eta)+1");
    check(std::cosh(2.0 * p.eta), "cosh(2 eta)");
    if (require_distinct_thetas) {
        const int n = p.n_sites();
        for (int j = 0; j < n; ++j) {
            for (int k = j + 1; k < n; ++k) {
                if (std::abs(p.thetas[j] - p.thetas[k]) < tiny) out.push_back("theta_" + std::to_string(j + 1) + " = theta_" + std::to_string(k + 1));
                if (std::abs(p.thetas[j] + p.thetas[k]) < tiny) out.push_back("theta_" + std::to_string(j + 1) + " = -theta_" + std::to_string(k + 1));
            }
            const std::string tj = "theta_" + std::to_string(j + 1);
            check(rho1(2.0 * p.thetas[j], p.eta), "rho1(2 " + tj + ")");
            check(rho1(-2.0 * p.thetas[j], p.eta), "rho1(-2 " + tj + ")");
            check(rho2(-2.0 * p.thetas[j] + 8.0 * p.eta, p.eta), "rho2(-2 " + tj + " + 8 eta)");
            check(rho2(2.0 * p.thetas[j] + 8.0 * p.eta, p.eta), "rho2(2 " + tj + " + 8 eta)");
        }
    }
    return out;
}

inline void validate(const ModelParams& p, bool require_distinct_thetas = true)
{
    const auto v = violations(p, require_distinct_thetas);
    if (v.empty()) return;
    std::ostringstream os;
    os << "invalid model parameters:";
    for (const auto& s : v) os << ' ' << s << ';';
    throw InvalidInput(os.str());
}

}  // namespace iklab
