#pragma once

#include <optional>
#include <string>
#include <vector>

#include "check_report.hpp"
#include "laurent.hpp"
#include "model_data.hpp"
#include "newton.hpp"
#include "parallel.hpp"
#include "transfer_engine.hpp"

namespace iklab {

struct TQConfig {
    int n_sites = 1;
    int l1 = 0;
    int l2 = 0;
    std::vector<cplx> lambdas;

    int n_bar() const { return n_bar_for(n_sites, l1, l2); }
    int delta() const { return 4 * n_sites + 8 * l1 + 4 * l2 - 2; }

    static int n_bar_for(int n, int l1, int l2) { return 4 * (n + l1) + 2 * (l2 - 1); }

    void validate() const
    {
        if (n_sites < 1 || l1 < 0 || l2 < 0) throw InvalidInput("tq config: need N >= 1 and l1, l2 >= 0");
        if (n_bar() < 2) throw InvalidInput("tq config: n_bar = " + std::to_string(n_bar()) + " < 2");
        if (static_cast<int>(lambdas.size()) != n_bar())
            throw InvalidInput("tq config: expected " + std::to_string(n_bar()) + " roots, got " + std::to_string(lambdas.size()));
    }
};

// M roots of the reduced relations. In the diagonal limit fewer than M finite
// roots may be listed; the rest sit at infinity, where their Q factors cancel.
struct ReducedTQConfig {
    int m = 0;
    std::vector<cplx> lambdas;
};

namespace detail {

inline cplx ipow(cplx z, int k)
{
    cplx r = 1.0;
    for (int i = 0; i < k; ++i) r *= z;
    return r;
}

inline cplx sign_pow(int k) { return (k % 2 == 0) ? 1.0 : -1.0; }

// Π_l f(u − θ_l)·f(u + θ_l)
template <class F>
cplx theta_pair_product(const ModelParams& p, cplx u, F f)
{
    cplx r = 1.0;
    for (const cplx& t : p.thetas) r *= f(u - t) * f(u + t);
    return r;
}

struct Dressing {
    cplx pb, pc, pd;
};

inline Dressing dressing(cplx u, const ModelParams& p)
{
    return {theta_pair_product(p, u, [&](cplx x) { return r_entries(x, p.eta).b; }),
            theta_pair_product(p, u, [&](cplx x) { return r_entries(x, p.eta).c; }),
            theta_pair_product(p, u, [&](cplx x) { return r_entries(x, p.eta).d; })};
}

inline cplx boundary_factor(cplx x, double sign, cplx w, cplx wp)
{
    return (1.0 + sign * 2.0 * w * std::sinh(x)) * (1.0 + sign * 2.0 * wp * std::sinh(x));
}

inline bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

constexpr double inf = std::numeric_limits<double>::infinity();

}  // namespace detail

// ---- Q-functions and c -------------------------------------------------------

inline cplx q1(cplx u, const std::vector<cplx>& lam, cplx eta)
{
    cplx r = 1.0;
    for (const cplx& l : lam) r *= std::sinh((u - l) / 2.0 - eta);
    return r;
}

inline cplx q2(cplx u, const std::vector<cplx>& lam, cplx eta)
{
    cplx r = 1.0;
    for (const cplx& l : lam) r *= std::sinh((u + l) / 2.0 - eta);
    return r;
}

inline cplx q1(cplx u, const TQConfig& c, const ModelParams& p) { return q1(u, c.lambdas, p.eta); }
inline cplx q2(cplx u, const TQConfig& c, const ModelParams& p) { return q2(u, c.lambdas, p.eta); }

// Q(u) = Π sinh((u−λ)/2−η) sinh((u+λ)/2−η) of the reduced relations
inline cplx q_reduced(cplx u, const std::vector<cplx>& lam, cplx eta) { return q1(u, lam, eta) * q2(u, lam, eta); }

inline cplx c_const(const TQConfig& cfg, const ModelParams& p)
{
    cplx sum{};
    for (const cplx& l : cfg.lambdas) sum += l;
    const cplx eta = p.eta;
    const cplx dl = static_cast<double>(cfg.delta()) * eta;
    const cplx den = std::cosh(dl / 2.0 - sum / 2.0);
    if (std::abs(den) < 1e-14)
        throw InvalidInput("c_const: cosh(delta*eta/2 - sum/2) vanishes (|value| = " + std::to_string(std::abs(den)) + ")");
    const double pref = std::pow(2.0, 1 - 2 * cfg.l1 - cfg.l2) * detail::sign_pow(cfg.l2 + 1).real();
    const cplx w = boundary_weight(p.eps) * boundary_weight(p.eps_p);
    return pref * w * (std::cosh(p.sigma_p - p.sigma + 2.0 * eta) - std::cosh(dl - sum)) / den;
}

// ---- the inhomogeneous T-Q relation ------------------------------------------

struct TQEvalOptions {
    double exclusion = 1e-8;
    bool allow_interpolation = true;
    double interp_step = 1e-2;
};

namespace detail {

// smallest |factor| among the explicit denominators at u
inline double min_denominator(cplx u, const std::vector<cplx>& lam, cplx eta)
{
    double m = std::min({std::abs(std::sinh(u - 2.0 * eta)), std::abs(std::sinh(u - 4.0 * eta)), std::abs(std::cosh(u - 3.0 * eta))});
    const cplx s = u - 2.0 * eta + I_pi;
    for (const cplx& l : lam)
        m = std::min({m, std::abs(std::sinh((u - l) / 2.0 - eta)), std::abs(std::sinh((u + l) / 2.0 - eta)),
                      std::abs(std::sinh((s - l) / 2.0 - eta)), std::abs(std::sinh((s + l) / 2.0 - eta))});
    return m;
}

inline cplx lambda_tq_direct(cplx u, const TQConfig& cfg, const ModelParams& p, cplx c)
{
    using std::cosh, std::sinh;
    const cplx e = p.eta;
    const auto& L = cfg.lambdas;
    const cplx w = boundary_weight(p.eps), wp = boundary_weight(p.eps_p);
    const int N = p.n_sites();
    const auto [pb, pc, pd] = dressing(u, p);

    const cplx Q1u = q1(u, L, e), Q2u = q2(u, L, e);
    const cplx Q1s = q1(u - 2.0 * e + I_pi, L, e), Q2s = q2(u - 2.0 * e + I_pi, L, e);
    const cplx Q1p = q1(u + 2.0 * e + I_pi, L, e), Q2m = q2(u - 4.0 * e, L, e);

    const cplx t1 = pc * boundary_factor(u - e, -1.0, w, wp) * sinh(u - 6.0 * e) * cosh(u - e) /
                    (sinh(u - 2.0 * e) * cosh(u - 3.0 * e)) * q1(u + 4.0 * e, L, e) / Q2u;
    const cplx t2 = pd * boundary_factor(u - 5.0 * e, -1.0, w, wp) * sinh(u) * cosh(u - 5.0 * e) /
                    (sinh(u - 4.0 * e) * cosh(u - 3.0 * e)) * q2(u - 6.0 * e + I_pi, L, e) / Q1s;
    const cplx t3 = pb * boundary_factor(u - 3.0 * e, 1.0, w, wp) * sinh(u) * sinh(u - 6.0 * e) /
                    (sinh(u - 2.0 * e) * sinh(u - 4.0 * e)) * Q1p * Q2m / (Q2s * Q1u);
    const cplx s3 = ipow(sinh(u - 3.0 * e), cfg.l1);
    const cplx bracket = Q1p * s3 * ipow(sinh(u - e), cfg.l1) * ipow(cosh(u - 2.0 * e), cfg.l2) / (Q1u * Q2u) -
                         sign_pow(cfg.l2) * Q2m * s3 * ipow(sinh(u - 5.0 * e), cfg.l1) * ipow(cosh(u - 4.0 * e), cfg.l2) / (Q1s * Q2s);
    const cplx t4 = std::pow(4.0, 1 - N) * c * sinh(u) * sinh(u - 6.0 * e) / cosh(u - 3.0 * e) * pc * pd * bracket;
    return t1 + t2 + t3 + t4;
}

// quadratic extrapolation back to u from three samples along a fixed direction
template <class F>
cplx extrapolate(F f, cplx u, double step)
{
    const cplx d = step * std::exp(cplx(0.0, pi / 7.0));
    return 3.0 * f(u + d) - 3.0 * f(u + 2.0 * d) + f(u + 3.0 * d);
}

}  // namespace detail

inline cplx lambda_tq_inhom(cplx u, const TQConfig& cfg, const ModelParams& p, const TQEvalOptions& o = {})
{
    const cplx c = c_const(cfg, p);
    if (detail::min_denominator(u, cfg.lambdas, p.eta) > o.exclusion) return detail::lambda_tq_direct(u, cfg, p, c);
    if (!o.allow_interpolation) throw InvalidInput("lambda_tq_inhom: u lies within the exclusion radius of a denominator zero");
    return detail::extrapolate([&](cplx z) { return detail::lambda_tq_direct(z, cfg, p, c); }, u, o.interp_step);
}

// ---- Bethe ansatz equations --------------------------------------------------

inline std::vector<cplx> bae_residuals(const TQConfig& cfg, const ModelParams& p)
{
    using std::cosh, std::sinh;
    cfg.validate();
    const cplx e = p.eta;
    const cplx w = boundary_weight(p.eps), wp = boundary_weight(p.eps_p);
    const auto& L = cfg.lambdas;
    cplx c;
    try {
        c = c_const(cfg, p);
    } catch (const InvalidInput&) {
        return std::vector<cplx>(L.size(), cplx(detail::inf, 0.0));
    }
    std::vector<cplx> out;
    for (std::size_t j = 0; j < L.size(); ++j) {
        const cplx l = L[j];
        // Q2(λ−2η)Q2(λ+2η) with the k = j factors sinh(λ−2η)·sinh(λ) cancelled
        cplx qq = 1.0;
        for (std::size_t k = 0; k < L.size(); ++k)
            if (k != j) qq *= sinh((l - 2.0 * e + L[k]) / 2.0 - e) * sinh((l + 2.0 * e + L[k]) / 2.0 - e);
        const cplx den = 4.0 * detail::ipow(sinh(l + e), cfg.l1) * detail::ipow(sinh(l - e), cfg.l1) * detail::ipow(cosh(l), cfg.l2);
        if (std::abs(den) < 1e-12) {
            out.emplace_back(detail::inf, 0.0);
            continue;
        }
        const cplx lhs = detail::boundary_factor(l - e, 1.0, w, wp) * cosh(l - e) * qq / den;
        cplx th = 1.0;
        for (const cplx& t : p.thetas) th *= sinh((l - t) / 2.0 - e) * sinh((l + t) / 2.0 - e) * cosh((l - t) / 2.0) * cosh((l + t) / 2.0);
        const cplx rhs = -c * q2(l + I_pi, L, e) * th;
        const cplx r = (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
        out.push_back(detail::finite(r) ? r : cplx(detail::inf, 0.0));
    }
    return out;
}

inline double max_abs(const std::vector<cplx>& v)
{
    double m = 0.0;
    for (const cplx& z : v) m = std::max(m, detail::finite(z) ? std::abs(z) : detail::inf);
    return m;
}

// ---- residue checks ----------------------------------------------------------

// |(1/2πi)∮f du| on a circle of radius r, relative to r·max|f| on the circle
inline double residue_ratio(const std::function<cplx(cplx)>& f, cplx u0, double r = 1e-3, int nodes = 32)
{
    cplx s{};
    double mx = 1e-300;
    for (int k = 0; k < nodes; ++k) {
        const cplx z = std::exp(cplx(0.0, 2.0 * pi * (k + 0.5) / nodes));
        const cplx v = f(u0 + r * z);
        s += v * r * z;
        mx = std::max(mx, std::abs(v));
    }
    s /= static_cast<double>(nodes);
    const double ratio = std::abs(s) / (r * mx);
    return std::isfinite(ratio) ? ratio : detail::inf;
}

// zeros of sinh(u−2η), sinh(u−4η), cosh(u−3η) inside one period
inline std::vector<cplx> fixed_pole_points(const ModelParams& p)
{
    const cplx e = p.eta;
    return {2.0 * e, 2.0 * e + I_pi, 4.0 * e, 4.0 * e + I_pi, 3.0 * e + I_pi / 2.0, 3.0 * e - I_pi / 2.0};
}

// zeros of Q1(u), Q2(u), Q1(u−2η+iπ), Q2(u−2η+iπ)
inline std::vector<cplx> root_pole_points(const std::vector<cplx>& lam, const ModelParams& p)
{
    const cplx e = p.eta;
    std::vector<cplx> v;
    for (const cplx& l : lam)
        for (cplx z : {l + 2.0 * e, -l + 2.0 * e, l + 4.0 * e + I_pi, -l + 4.0 * e + I_pi}) v.push_back(z);
    return v;
}

inline CheckReport residue_check(const TQConfig& cfg, const ModelParams& p, double tol_fixed = 1e-8, double tol_roots = 1e-6)
{
    cfg.validate();
    const cplx c = c_const(cfg, p);
    auto f = [&](cplx u) { return detail::lambda_tq_direct(u, cfg, p, c); };
    ResidualTracker fixed, roots;
    for (cplx z : fixed_pole_points(p)) fixed.add_residual(residue_ratio(f, z), z);
    for (cplx z : root_pole_points(cfg.lambdas, p)) roots.add_residual(residue_ratio(f, z), z);
    return CheckReport::aggregate("residue_check", {fixed.report("fixed_poles", tol_fixed), roots.report("root_poles", tol_roots)});
}

// ---- characterizing functional relations -------------------------------------

struct FunctionalOptions {
    double tol = 1e-8;
    std::uint64_t seed = 11;
    int samples = 8;
    double asymptotic_radius = 30.0;
};

inline cplx special_value_zero(const ModelParams& p)
{
    return k_minus_at_zero(p) * k_plus(0.0, p).matrix().trace() * prod_over_thetas(p, 0.0, -1, rho1);
}

inline cplx special_value_ipi(const ModelParams& p)
{
    return (1.0 - 2.0 * boundary_weight(p.eps) * std::sinh(p.eta)) * k_plus(I_pi, p).matrix().trace() * prod_over_thetas(p, I_pi, -1, rho1);
}

inline cplx asymptotic_coefficient_prediction(const ModelParams& p)
{
    return std::pow(0.25, p.n_sites()) * boundary_weight(p.eps) * boundary_weight(p.eps_p) *
           (1.0 + 2.0 * std::cosh(p.sigma_p - p.sigma + 2.0 * p.eta));
}

// The eight characterizing properties, checked on any eigenvalue function:
// identities at ±θ_j, crossing, periodicity, special values, asymptotics and
// the Laurent degree 2N+2.
inline CheckReport functional_relations(const std::function<cplx(cplx)>& lam, const ModelParams& p, const FunctionalOptions& o = {})
{
    const cplx e = p.eta;
    const int N = p.n_sites();
    std::vector<CheckReport> parts;

    ResidualTracker id1, id2;
    for (const cplx& th : p.thetas)
        for (double s : {1.0, -1.0}) {
            const cplx z = s * th;
            const cplx lz = lam(z);
            id1.add(lz * lam(z + 6.0 * e + I_pi), scalar(Scalar::Delta1, z, p) / rho1(2.0 * z, e), z);
            id2.add(lz * lam(z + 4.0 * e), scalar(Scalar::Delta2, z, p) / rho2(-2.0 * z + 8.0 * e, e) * lam(z + 2.0 * e + I_pi), z);
        }
    parts.push_back(id1.report("eigen_identity_1", o.tol));
    parts.push_back(id2.report("eigen_identity_2", o.tol));

    Sampler smp(o.seed);
    ResidualTracker cross, per;
    for (cplx u : smp.points(o.samples)) {
        const cplx v = lam(u);
        cross.add(v, lam(-u + 6.0 * e + I_pi), u);
        per.add(v, lam(u + 2.0 * I_pi), u);
    }
    parts.push_back(cross.report("eigen_crossing", o.tol));
    parts.push_back(per.report("eigen_periodicity", o.tol));

    ResidualTracker v1, v2;
    v1.add(lam(0.0), special_value_zero(p), 0.0);
    v1.add(lam(6.0 * e + I_pi), special_value_zero(p), 6.0 * e + I_pi);
    v2.add(lam(I_pi), special_value_ipi(p), I_pi);
    v2.add(lam(6.0 * e), special_value_ipi(p), 6.0 * e);
    parts.push_back(v1.report("eigen_value_1", o.tol));
    parts.push_back(v2.report("eigen_value_2", o.tol));

    ResidualTracker asym;
    const cplx pred = asymptotic_coefficient_prediction(p);
    for (double d : {1.0, -1.0}) {
        const cplx u{d * o.asymptotic_radius, 0.3};
        asym.add(lam(u) / std::exp(d * 2.0 * (N + 1) * (u - 3.0 * e)), pred, u);
    }
    parts.push_back(asym.report("eigen_asymptotic", o.tol));

    LaurentGrid g;
    g.degree = 2 * N + 2;
    g.dft_re_u = 3.0 * e.real();
    std::vector<cplx> nv, hv, dv;
    for (cplx u : g.nodes()) nv.push_back(lam(u));
    for (cplx u : g.holdout()) hv.push_back(lam(u));
    for (cplx u : g.dft_nodes()) dv.push_back(lam(u));
    const LaurentFit fit = g.fit(nv, hv);
    const LaurentFit dft = g.dft_fit(dv);
    auto lr = CheckReport::single("eigen_laurent_degree", std::max(fit.holdout_error, dft.band_tail), o.tol);
    if (!std::isfinite(lr.residual)) lr.passed = false;
    parts.push_back(lr);
    parts.push_back(CheckReport::single("eigen_laurent_pairing", dft.pairing_residual(6.0 * e + I_pi), o.tol));
    return CheckReport::aggregate("functional_relations", std::move(parts));
}

inline CheckReport functional_relation_suite(const EigenCurve& curve, const TransferEngine& eng, const FunctionalOptions& o = {})
{
    auto r = functional_relations([&](cplx u) { return eng.evaluate(curve, u); }, eng.params(), o);
    r.name = "functional_relations_curve_" + std::to_string(curve.id);
    return r;
}

// ---- reduced (constrained and diagonal) T-Q relations ------------------------

inline double constraint0_residual(const ModelParams& p, int m)
{
    const int N = p.n_sites();
    const cplx a = std::cosh(p.sigma_p - p.sigma + 2.0 * p.eta);
    const cplx b = std::cosh(4.0 * m * p.eta - 4.0 * N * p.eta + 2.0 * p.eta);
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1.0});
}

namespace detail {

inline cplx reduced_direct(cplx u, const std::vector<cplx>& L, const ModelParams& p, cplx w, cplx wp)
{
    using std::cosh, std::sinh;
    const cplx e = p.eta;
    const auto [pb, pc, pd] = dressing(u, p);
    const cplx Qu = q_reduced(u, L, e), Qs = q_reduced(u - 2.0 * e + I_pi, L, e);
    const cplx t1 = pc * boundary_factor(u - e, -1.0, w, wp) * sinh(u - 6.0 * e) * cosh(u - e) /
                    (sinh(u - 2.0 * e) * cosh(u - 3.0 * e)) * q_reduced(u + 4.0 * e, L, e) / Qu;
    const cplx t2 = pd * boundary_factor(u - 5.0 * e, -1.0, w, wp) * sinh(u) * cosh(u - 5.0 * e) /
                    (sinh(u - 4.0 * e) * cosh(u - 3.0 * e)) * q_reduced(u - 6.0 * e - I_pi, L, e) / Qs;
    const cplx t3 = pb * boundary_factor(u - 3.0 * e, 1.0, w, wp) * sinh(u) * sinh(u - 6.0 * e) /
                    (sinh(u - 2.0 * e) * sinh(u - 4.0 * e)) * q_reduced(u - 4.0 * e, L, e) * q_reduced(u + 2.0 * e + I_pi, L, e) /
                    (Qs * Qu);
    return t1 + t2 + t3;
}

inline cplx reduced_eval(cplx u, const std::vector<cplx>& L, const ModelParams& p, cplx w, cplx wp, const TQEvalOptions& o)
{
    if (min_denominator(u, L, p.eta) > o.exclusion) return reduced_direct(u, L, p, w, wp);
    if (!o.allow_interpolation) throw InvalidInput("reduced T-Q: u lies within the exclusion radius of a denominator zero");
    return extrapolate([&](cplx z) { return reduced_direct(z, L, p, w, wp); }, u, o.interp_step);
}

inline std::vector<cplx> reduced_bae(const std::vector<cplx>& L, const ModelParams& p, cplx w, cplx wp)
{
    using std::cosh, std::sinh;
    const cplx e = p.eta;
    std::vector<cplx> out;
    for (const cplx& l : L) {
        cplx lhs = 1.0;
        for (const cplx& t : p.thetas)
            lhs *= sinh((l - t) / 2.0 - e) * sinh((l + t) / 2.0 - e) / (sinh((l - t) / 2.0 + e) * sinh((l + t) / 2.0 + e));
        lhs *= boundary_factor(l + e, -1.0, w, wp) / boundary_factor(l - e, 1.0, w, wp);
        // residue cancellation at u = λ+2η between the first and third terms
        const cplx qr = q_reduced(l - 2.0 * e, L, e) * q_reduced(l + 4.0 * e + I_pi, L, e) /
                        (q_reduced(-l - 2.0 * e, L, e) * q_reduced(-l + 4.0 * e + I_pi, L, e));
        const cplx rhs = -qr * sinh(l + 2.0 * e) * cosh(l - e) / (sinh(l - 2.0 * e) * cosh(l + e));
        const cplx r = (lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1.0});
        out.push_back(finite(r) ? r : cplx(inf, 0.0));
    }
    return out;
}

inline void require_constraint(const ReducedTQConfig& r, const ModelParams& p)
{
    if (static_cast<int>(r.lambdas.size()) != r.m)
        throw InvalidInput("conventional T-Q: expected " + std::to_string(r.m) + " roots, got " + std::to_string(r.lambdas.size()));
    const double res = constraint0_residual(p, r.m);
    if (res > 1e-8) {
        const cplx diff = std::cosh(p.sigma_p - p.sigma + 2.0 * p.eta) - std::cosh(4.0 * r.m * p.eta - 4.0 * p.n_sites() * p.eta + 2.0 * p.eta);
        throw InvalidInput("conventional T-Q: boundary constraint violated, cosh(s'-s+2eta) - cosh(4M eta-4N eta+2eta) = (" +
                           std::to_string(diff.real()) + ", " + std::to_string(diff.imag()) + ")");
    }
}

inline void require_sector(const ReducedTQConfig& r, const ModelParams& p)
{
    if (r.m < 0 || r.m > 2 * p.n_sites()) throw InvalidInput("diagonal T-Q: sector M must lie in 0..2N");
    if (static_cast<int>(r.lambdas.size()) > r.m) throw InvalidInput("diagonal T-Q: more finite roots than M");
}

}  // namespace detail

inline cplx lambda_tq_conventional(cplx u, const ReducedTQConfig& r, const ModelParams& p, const TQEvalOptions& o = {})
{
    detail::require_constraint(r, p);
    return detail::reduced_eval(u, r.lambdas, p, boundary_weight(p.eps), boundary_weight(p.eps_p), o);
}

inline std::vector<cplx> bae_conventional_residuals(const ReducedTQConfig& r, const ModelParams& p)
{
    detail::require_constraint(r, p);
    return detail::reduced_bae(r.lambdas, p, boundary_weight(p.eps), boundary_weight(p.eps_p));
}

// boundary dressing removed; only η and θ are read from p
inline cplx diagonal_tq(cplx u, const ReducedTQConfig& r, const ModelParams& p, const TQEvalOptions& o = {})
{
    detail::require_sector(r, p);
    return detail::reduced_eval(u, r.lambdas, p, 0.0, 0.0, o);
}

inline std::vector<cplx> diagonal_bae_residuals(const ReducedTQConfig& r, const ModelParams& p)
{
    detail::require_sector(r, p);
    return detail::reduced_bae(r.lambdas, p, 0.0, 0.0);
}

// ---- constraint branches -----------------------------------------------------

struct ConstraintBranch {
    int k = 0;
    std::string regime;
    std::vector<int> m_values;  // M⁻ first when there are two
    double residual = 0.0;      // |σ′−σ+4kη − 2πi·m|
};

struct BranchReport {
    bool constrained = false;
    int window = 0;
    std::vector<ConstraintBranch> branches;
};

inline std::vector<int> branch_m_values(int n, int k, std::string* regime = nullptr)
{
    if (k <= -n) {
        if (regime) *regime = "k<=-N";
        return {n - k};
    }
    if (k >= n + 1) {
        if (regime) *regime = "k>=N+1";
        return {n + k - 1};
    }
    if (regime) *regime = "1-N<=k<=N";
    return {n - k, n + k - 1};
}

// Integer k in [−window, window] with σ′−σ ≡ −4kη (mod 2πi).
inline BranchReport constraint_branches(const ModelParams& p, int n, int window = 16, double tol = 1e-10)
{
    BranchReport rep;
    rep.window = window;
    const double scale = std::max({1.0, std::abs(p.sigma), std::abs(p.sigma_p), std::abs(p.eta) * window});
    for (int k = -window; k <= window; ++k) {
        const cplx z = p.sigma_p - p.sigma + 4.0 * k * p.eta;
        const double m = std::round(z.imag() / (2.0 * pi));
        const double res = std::abs(z - cplx(0.0, 2.0 * pi * m));
        if (res > tol * scale) continue;
        ConstraintBranch b;
        b.k = k;
        b.residual = res;
        b.m_values = branch_m_values(n, k, &b.regime);
        rep.branches.push_back(std::move(b));
    }
    rep.constrained = !rep.branches.empty();
    return rep;
}

// η = (σ−σ′)/(4N−4M) + 2πi·m/(4N−4M)
inline cplx degenerate_eta(cplx sigma, cplx sigma_p, int n, int M = 0, int m = 1)
{
    if (n == M) throw InvalidInput("degenerate_eta: requires M != N");
    const double d = 4.0 * (n - M);
    return (sigma - sigma_p) / d + cplx(0.0, 2.0 * pi * m / d);
}

// ---- fitting roots to exact eigencurves ----------------------------------------

struct FitOptions {
    int starts = 1024;
    int holdout_points = 50;
    std::uint64_t holdout_seed = 2024;
    double accept_mismatch = 1e-6;
    double accept_bae = 1e-5;
    double match_tolerance = 1e-9;  // LM residual below which a start counts as converged
    double re_range = 3.0;
    LMOptions lm{};
};

struct TQFit {
    bool success = false;
    std::vector<cplx> lambdas;  // gauge-fixed
    double mismatch = detail::inf;  // max relative holdout error
    double bae_max = detail::inf;
    std::vector<cplx> bae;
    int starts = 0;
    int converged_starts = 0;
    int finite_roots = 0;  // diagonal fits: roots not at infinity
    std::string note;
};

// Im λ into (−period/2, period/2]
inline double wrap_imag(double x, double period)
{
    double r = std::fmod(x + period / 2.0, period);
    if (r <= 0) r += period;
    return r - period / 2.0;
}

inline bool lex_less(cplx a, cplx b) { return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag(); }

inline bool lex_less(const std::vector<cplx>& a, const std::vector<cplx>& b)
{
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), [](cplx x, cplx y) { return lex_less(x, y); });
}

// inhomogeneous roots: a shift λ → λ+2πi flips Q1, Q2 and c together, so Im λ
// is reduced into (−π, π]
inline std::vector<cplx> gauge_inhom(std::vector<cplx> v)
{
    for (cplx& z : v) z = cplx(z.real(), wrap_imag(z.imag(), 2.0 * pi));
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) { return lex_less(a, b); });
    return v;
}

// reduced roots: Q is invariant under λ → −λ and λ → λ + 2πi
inline std::vector<cplx> gauge_reduced(std::vector<cplx> v)
{
    for (cplx& z : v) {
        z = cplx(z.real(), wrap_imag(z.imag(), 2.0 * pi));
        if (z.real() < 0 || (z.real() == 0 && z.imag() < 0)) z = cplx(-z.real(), wrap_imag(-z.imag(), 2.0 * pi));
    }
    std::sort(v.begin(), v.end(), [](cplx a, cplx b) { return lex_less(a, b); });
    return v;
}

namespace detail {

inline std::vector<cplx> match_points(int count)
{
    std::vector<cplx> v;
    for (int s = 0; s < count; ++s) v.emplace_back(-1.3 + 2.6 * (s + 0.5) / count, 0.35 + 0.9 * halton(static_cast<std::uint64_t>(s) + 1, 3));
    return v;
}

struct FitProblem {
    int unknowns = 0;
    double im_half_range = 2.0 * pi;  // starts drawn from Im ∈ (−h, h]
    std::function<cplx(cplx, const std::vector<cplx>&)> model;
    std::function<std::vector<cplx>(const std::vector<cplx>&)> bae;
    std::function<std::vector<cplx>(std::vector<cplx>)> gauge;
};

inline TQFit run_fit(const FitProblem& prob, const std::function<cplx(cplx)>& target, const FitOptions& o)
{
    TQFit out;
    out.starts = o.starts;
    out.finite_roots = prob.unknowns;
    const int n = prob.unknowns;
    const auto mp = match_points(n + 4);
    std::vector<cplx> tv;
    double scale = 1e-300;
    for (cplx u : mp) {
        tv.push_back(target(u));
        scale = std::max(scale, std::abs(tv.back()));
    }
    Sampler hs(o.holdout_seed);
    const auto hold = hs.points(o.holdout_points);
    std::vector<cplx> hv;
    double hscale = 1e-300;
    for (cplx u : hold) {
        hv.push_back(target(u));
        hscale = std::max(hscale, std::abs(hv.back()));
    }
    auto mismatch_of = [&](const std::vector<cplx>& x) {
        double m = 0.0;
        for (std::size_t i = 0; i < hold.size(); ++i) {
            const cplx v = prob.model(hold[i], x);
            m = std::max(m, finite(v) ? std::abs(v - hv[i]) : inf);
        }
        return m / hscale;
    };

    if (n == 0) {
        out.mismatch = mismatch_of({});
        out.bae_max = 0.0;
        out.converged_starts = 1;
        out.success = out.mismatch <= o.accept_mismatch;
        return out;
    }

    const ResidualFn f = [&](const std::vector<cplx>& x) {
        Vec r(static_cast<Eigen::Index>(mp.size()));
        for (std::size_t i = 0; i < mp.size(); ++i) r(static_cast<Eigen::Index>(i)) = (prob.model(mp[i], x) - tv[i]) / scale;
        return r;
    };
    struct Slot {
        bool converged = false;
        std::vector<cplx> x;
        double residual = inf;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(o.starts));
    parallel_for(slots.size(), [&](std::size_t s) {
        std::vector<cplx> x0;
        for (int j = 0; j < n; ++j) {
            const double hr = halton(s + 1, nth_prime(2 * j)), hi = halton(s + 1, nth_prime(2 * j + 1));
            x0.emplace_back(-o.re_range + 2.0 * o.re_range * hr, -prob.im_half_range + 2.0 * prob.im_half_range * hi);
        }
        auto r = levenberg_marquardt(f, std::move(x0), o.lm);
        slots[s].residual = r.residual;
        slots[s].x = std::move(r.x);
        slots[s].converged = r.finite && r.residual <= o.match_tolerance;
    });

    // deterministic selection: accepted first, then smallest mismatch, then root order
    struct Cand {
        std::vector<cplx> x;
        double mismatch;
        double bae;
        bool accepted;
    };
    std::optional<Cand> best;
    double best_residual = inf;
    std::vector<cplx> best_residual_x;
    for (const auto& s : slots) {
        if (s.residual < best_residual) {
            best_residual = s.residual;
            best_residual_x = s.x;
        }
        if (!s.converged) continue;
        ++out.converged_starts;
        Cand c{prob.gauge(s.x), 0.0, 0.0, false};
        c.mismatch = mismatch_of(c.x);
        c.bae = max_abs(prob.bae(c.x));
        c.accepted = c.mismatch <= o.accept_mismatch && c.bae <= o.accept_bae;
        auto better = [&](const Cand& a, const Cand& b) {
            if (a.accepted != b.accepted) return a.accepted;
            if (a.mismatch != b.mismatch) return a.mismatch < b.mismatch;
            return lex_less(a.x, b.x);
        };
        if (!best || better(c, *best)) best = std::move(c);
    }
    if (!best) {
        out.lambdas = best_residual_x.empty() ? std::vector<cplx>{} : prob.gauge(best_residual_x);
        out.mismatch = out.lambdas.empty() ? inf : mismatch_of(out.lambdas);
        out.note = "no start converged; best matching residual " + std::to_string(best_residual);
        if (!out.lambdas.empty()) {
            out.bae = prob.bae(out.lambdas);
            out.bae_max = max_abs(out.bae);
        }
        return out;
    }
    out.lambdas = best->x;
    out.mismatch = best->mismatch;
    out.bae = prob.bae(best->x);
    out.bae_max = best->bae;
    out.success = best->accepted;
    if (!out.success) out.note = "converged starts did not meet the acceptance thresholds";
    return out;
}

}  // namespace detail

inline TQFit fit_tq_to_curve(const std::function<cplx(cplx)>& target, const ModelParams& p, int l1, int l2, const FitOptions& o = {})
{
    TQConfig proto{p.n_sites(), l1, l2, {}};
    const int nb = proto.n_bar();
    if (nb < 2 || nb > 8) throw InvalidInput("fit_tq_to_curve: n_bar = " + std::to_string(nb) + " outside 2..8");
    detail::FitProblem prob;
    prob.unknowns = nb;
    prob.model = [&](cplx u, const std::vector<cplx>& x) {
        TQConfig c{p.n_sites(), l1, l2, x};
        try {
            return lambda_tq_inhom(u, c, p);
        } catch (const InvalidInput&) {
            return cplx(detail::inf, 0.0);
        }
    };
    prob.bae = [&](const std::vector<cplx>& x) { return bae_residuals(TQConfig{p.n_sites(), l1, l2, x}, p); };
    prob.gauge = gauge_inhom;
    return detail::run_fit(prob, target, o);
}

inline TQFit fit_tq_to_curve(const EigenCurve& curve, const TransferEngine& eng, int l1, int l2, const FitOptions& o = {})
{
    return fit_tq_to_curve([&](cplx u) { return eng.evaluate(curve, u); }, eng.params(), l1, l2, o);
}

// Conventional T-Q fit with M roots; requires the boundary constraint for M.
inline TQFit fit_conventional_to_curve(const std::function<cplx(cplx)>& target, const ModelParams& p, int m, const FitOptions& o = {})
{
    detail::require_constraint(ReducedTQConfig{m, std::vector<cplx>(static_cast<std::size_t>(m))}, p);
    detail::FitProblem prob;
    prob.unknowns = m;
    prob.im_half_range = pi;
    const cplx w = boundary_weight(p.eps), wp = boundary_weight(p.eps_p);
    prob.model = [&, w, wp](cplx u, const std::vector<cplx>& x) { return detail::reduced_eval(u, x, p, w, wp, TQEvalOptions{}); };
    prob.bae = [&, w, wp](const std::vector<cplx>& x) { return detail::reduced_bae(x, p, w, wp); };
    prob.gauge = gauge_reduced;
    return detail::run_fit(prob, target, o);
}

// Diagonal fit in sector M: the fewest finite roots (the rest at infinity)
// that reproduce the curve.
inline TQFit fit_diagonal_to_curve(const std::function<cplx(cplx)>& target, const ModelParams& p, int m, FitOptions o = {})
{
    detail::require_sector(ReducedTQConfig{m, {}}, p);
    TQFit last;
    for (int mf = 0; mf <= m; ++mf) {
        detail::FitProblem prob;
        prob.unknowns = mf;
        prob.im_half_range = pi;
        prob.model = [&](cplx u, const std::vector<cplx>& x) { return detail::reduced_eval(u, x, p, 0.0, 0.0, TQEvalOptions{}); };
        prob.bae = [&](const std::vector<cplx>& x) { return detail::reduced_bae(x, p, 0.0, 0.0); };
        prob.gauge = gauge_reduced;
        last = detail::run_fit(prob, target, o);
        if (last.success) return last;
    }
    return last;
}

// Best-effort blind solve of the inhomogeneous BAE from low-discrepancy
// starts; returns distinct gauge-fixed solutions.
inline std::vector<TQConfig> solve_bae(const ModelParams& p, int l1, int l2, int starts = 256, double tol = 1e-10)
{
    const int nb = TQConfig::n_bar_for(p.n_sites(), l1, l2);
    if (nb < 2 || nb > 8) throw InvalidInput("solve_bae: n_bar outside 2..8");
    const ResidualFn f = [&](const std::vector<cplx>& x) {
        const auto r = bae_residuals(TQConfig{p.n_sites(), l1, l2, x}, p);
        Vec v(static_cast<Eigen::Index>(r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) v(static_cast<Eigen::Index>(i)) = r[i];
        return v;
    };
    std::vector<std::optional<std::vector<cplx>>> found(static_cast<std::size_t>(starts));
    parallel_for(found.size(), [&](std::size_t s) {
        std::vector<cplx> x0;
        for (int j = 0; j < nb; ++j)
            x0.emplace_back(-3.0 + 6.0 * halton(s + 1, nth_prime(2 * j)), -2.0 * pi + 4.0 * pi * halton(s + 1, nth_prime(2 * j + 1)));
        const auto r = levenberg_marquardt(f, std::move(x0));
        if (r.finite && r.residual <= tol) found[s] = gauge_inhom(r.x);
    });
    std::vector<TQConfig> out;
    for (const auto& x : found) {
        if (!x) continue;
        // Roots coinciding mod 4πi, or pole-pinned λ, are not genuine solutions.
        bool degenerate = false;
        for (std::size_t a = 0; a < x->size(); ++a)
            for (std::size_t b = a + 1; b < x->size(); ++b) degenerate = degenerate || std::abs((*x)[a] - (*x)[b]) < 1e-6;
        if (degenerate) continue;
        const bool dup = std::any_of(out.begin(), out.end(), [&](const TQConfig& c) {
            double d = 0.0;
            for (std::size_t i = 0; i < x->size(); ++i) d = std::max(d, std::abs(c.lambdas[i] - (*x)[i]));
            return d < 1e-6;
        });
        if (!dup) out.push_back(TQConfig{p.n_sites(), l1, l2, *x});
    }
    std::sort(out.begin(), out.end(), [](const TQConfig& a, const TQConfig& b) { return lex_less(a.lambdas, b.lambdas); });
    return out;
}

}  // namespace iklab
