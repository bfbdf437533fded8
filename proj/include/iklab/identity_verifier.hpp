#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "check_report.hpp"
#include "model_data.hpp"
#include "parallel.hpp"
#include "transfer_engine.hpp"

namespace iklab {

struct SampleSpec {
    std::uint64_t seed = 20240611;
    int count = 20;
};

namespace detail {

// per-check stream so that checks are independent of evaluation order
inline Sampler sampler_for(const SampleSpec& s, std::uint64_t salt)
{
    return Sampler(s.seed * 0x9E3779B97F4A7C15ull + salt);
}

inline Mat e1(const Op& a, int site, int n) { return embed(a, site, n).matrix(); }
inline Mat e2(const Op& b, int i, int j, int n) { return embed_pair(b, i, j, n).matrix(); }

}  // namespace detail

inline CheckReport check_qybe(const ModelParams& p, SampleSpec s = {50, 50}, double tol = 1e-10, BTerm bt = BTerm::Sinh)
{
    using detail::e2;
    auto smp = detail::sampler_for(s, 1);
    ResidualTracker tr;
    for (int k = 0; k < s.count; ++k) {
        const cplx u1 = smp.next(), u2 = smp.next(), u3 = smp.next();
        const Mat r12 = e2(r_matrix(u1 - u2, p, bt), 1, 2, 3), r13 = e2(r_matrix(u1 - u3, p, bt), 1, 3, 3),
                  r23 = e2(r_matrix(u2 - u3, p, bt), 2, 3, 3);
        tr.add(r12 * r13 * r23, r23 * r13 * r12, u1);
    }
    return tr.report("qybe", tol);
}

inline CheckReport check_unitarity(const ModelParams& p, SampleSpec s = {}, double tol = 1e-10)
{
    auto smp = detail::sampler_for(s, 2);
    ResidualTracker tr;
    for (cplx u : smp.points(s.count)) tr.add((r_matrix(u, p) * r21(-u, p)).matrix(), rho1(u, p.eta) * Mat::Identity(9, 9), u);
    return tr.report("unitarity", tol);
}

inline CheckReport check_crossing(const ModelParams& p, SampleSpec s = {}, double tol = 1e-10)
{
    using detail::e1;
    auto smp = detail::sampler_for(s, 3);
    const Op V = v_matrix(p);
    const Mat V1 = e1(V, 1, 2), V2 = e1(V, 2, 2), Vt1 = e1(Op(V.matrix().transpose(), 1), 1, 2);
    const Mat V1inv = e1(Op(V.matrix().inverse(), 1), 1, 2);
    ResidualTracker a, b, c;
    for (cplx u : smp.points(s.count)) {
        const Op rc = r_matrix(-u + 6.0 * p.eta + I_pi, p);
        a.add(r_matrix(u, p).matrix(), V1 * partial_transpose(rc, 2).matrix() * V1inv, u);
        b.add(r21(u, p).matrix(), Vt1 * partial_transpose(rc, 1).matrix() * Vt1, u);
        c.add(r21(u, p).matrix(), V2 * partial_transpose(rc, 2).matrix() * V2, u);
    }
    return CheckReport::aggregate("crossing", {a.report("crossing_r12", tol), b.report("crossing_r21_site1", tol), c.report("crossing_r21_site2", tol)});
}

inline CheckReport check_pt(const ModelParams& p, SampleSpec s = {}, double tol = 1e-10)
{
    auto smp = detail::sampler_for(s, 4);
    ResidualTracker tr;
    for (cplx u : smp.points(s.count))
        tr.add(r21(u, p).matrix(), partial_transpose(partial_transpose(r_matrix(u, p), 1), 2).matrix(), u);
    return tr.report("pt_symmetry", tol);
}

inline CheckReport check_periodicity(const ModelParams& p, SampleSpec s = {}, double tol = 1e-10)
{
    auto smp = detail::sampler_for(s, 5);
    ResidualTracker r, km, kp;
    const cplx shift = 2.0 * I_pi;
    for (cplx u : smp.points(s.count)) {
        r.add(r_matrix(u + shift, p).matrix(), r_matrix(u, p).matrix(), u);
        km.add(k_minus(u + shift, p).matrix(), k_minus(u, p).matrix(), u);
        kp.add(k_plus(u + shift, p).matrix(), k_plus(u, p).matrix(), u);
    }
    return CheckReport::aggregate("periodicity", {r.report("periodicity_r", tol), km.report("periodicity_k_minus", tol), kp.report("periodicity_k_plus", tol)});
}

inline CheckReport check_crossing_unitarity(const ModelParams& p, SampleSpec s = {}, double tol = 1e-10)
{
    using detail::e1;
    auto smp = detail::sampler_for(s, 6);
    const Mat M1 = e1(m_matrix(p), 1, 2), M1i = e1(m_matrix_inverse(p.eta), 1, 2);
    ResidualTracker tr;
    for (cplx u : smp.points(s.count)) {
        const Mat lhs = partial_transpose(r_matrix(u, p), 1).matrix() * M1 * partial_transpose(r21(-u + 12.0 * p.eta, p), 1).matrix() * M1i;
        tr.add(lhs, rho2(u, p.eta) * Mat::Identity(9, 9), u);
    }
    return tr.report("crossing_unitarity", tol);
}

inline CheckReport check_m_invariance(const ModelParams& p, SampleSpec s = {}, double tol = 1e-10)
{
    auto smp = detail::sampler_for(s, 7);
    const Mat MM = kron(m_matrix(p).matrix(), m_matrix(p).matrix());
    const Mat MMi = kron(m_matrix_inverse(p.eta).matrix(), m_matrix_inverse(p.eta).matrix());
    ResidualTracker tr;
    for (cplx u : smp.points(s.count)) tr.add(MM * r_matrix(u, p).matrix() * MMi, r_matrix(u, p).matrix(), u);
    return tr.report("m_invariance", tol);
}

inline CheckReport check_re(const ModelParams& p, SampleSpec s = {30, 30}, double tol = 1e-10)
{
    using detail::e1;
    auto smp = detail::sampler_for(s, 8);
    ResidualTracker tr;
    for (int k = 0; k < s.count; ++k) {
        const cplx u = smp.next(), v = smp.next();
        const Mat K1 = e1(k_minus(u, p), 1, 2), K2 = e1(k_minus(v, p), 2, 2);
        const Mat lhs = r_matrix(u - v, p).matrix() * K1 * r21(u + v, p).matrix() * K2;
        const Mat rhs = K2 * r_matrix(u + v, p).matrix() * K1 * r21(u - v, p).matrix();
        tr.add(lhs, rhs, u);
    }
    return tr.report("reflection", tol);
}

inline CheckReport check_dual_re(const ModelParams& p, SampleSpec s = {30, 30}, double tol = 1e-10)
{
    using detail::e1;
    auto smp = detail::sampler_for(s, 9);
    const Mat M1 = e1(m_matrix(p), 1, 2), M1i = e1(m_matrix_inverse(p.eta), 1, 2);
    const Mat M2 = e1(m_matrix(p), 2, 2), M2i = e1(m_matrix_inverse(p.eta), 2, 2);
    ResidualTracker tr;
    for (int k = 0; k < s.count; ++k) {
        const cplx u = smp.next(), v = smp.next();
        const Mat K1 = e1(k_plus(u, p), 1, 2), K2 = e1(k_plus(v, p), 2, 2);
        const cplx w = -u - v + 12.0 * p.eta;
        const Mat lhs = r_matrix(v - u, p).matrix() * K1 * M1i * r21(w, p).matrix() * M1 * K2;
        const Mat rhs = K2 * M2i * r_matrix(w, p).matrix() * M2 * K1 * r21(v - u, p).matrix();
        tr.add(lhs, rhs, u);
    }
    return tr.report("dual_reflection", tol);
}

inline CheckReport check_fusion(const ModelParams& p, double tol = 1e-10)
{
    const auto pr = projectors(p);
    std::vector<CheckReport> parts;
    auto rank_part = [&](const char* name, cplx u, int expected) {
        Eigen::JacobiSVD<Mat> svd(r_matrix(u, p).matrix());
        const auto& sv = svd.singularValues();
        int rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv(i) > 1e-8 * sv(0)) ++rank;
        // residual: size of the first singular value that should vanish
        auto r = CheckReport::single(name, sv(expected) / sv(0), std::min(tol, 1e-8), {u});
        r.passed = r.passed && rank == expected;
        r.note = "rank " + std::to_string(rank);
        parts.push_back(std::move(r));
    };
    const cplx u1 = 6.0 * p.eta + I_pi, u3 = 4.0 * p.eta;
    rank_part("fusion_rank_1", u1, 1);
    rank_part("fusion_rank_3", u3, 3);
    const Mat R1 = r_matrix(u1, p).matrix(), R3 = r_matrix(u3, p).matrix();
    parts.push_back(CheckReport::single("fusion_projection_1", rel_diff(pr.p1_12.matrix() * R1, R1), tol, {u1}));
    parts.push_back(CheckReport::single("fusion_projection_3", rel_diff(pr.p3_12.matrix() * R3, R3), tol, {u3}));
    return CheckReport::aggregate("fusion", std::move(parts));
}

inline CheckReport check_fused_r(const ModelParams& p, SampleSpec s = {}, double tol = 1e-10)
{
    using detail::e2;
    auto smp = detail::sampler_for(s, 10);
    const auto pr = projectors(p);
    const Mat P1 = e2(pr.p1_12, 1, 2, 3);
    const Mat B = kron(fused_basis(p), Mat::Identity(3, 3));  // 27 × 9
    const cplx eta = p.eta;
    ResidualTracker f1, f2, f3, f4, qd;
    for (cplx u : smp.points(s.count)) {
        auto R = [&](cplx x, int i, int j) { return e2(r_matrix(x, p), i, j, 3); };
        const Mat x1 = P1 * R(u, 2, 3) * R(u + 6.0 * eta + I_pi, 1, 3) * P1;
        f1.add(x1, rho1(u, eta) * P1, u);
        f2.add(P1 * R(u, 3, 1) * R(u + 6.0 * eta + I_pi, 3, 2) * P1, rho1(u, eta) * P1, u);
        f3.add(B.transpose() * R(u, 2, 3) * R(u + 4.0 * eta, 1, 3) * B, rho3(u, eta) * r_matrix(u + 2.0 * eta + I_pi, p).matrix(), u);
        f4.add(B.transpose() * R(u, 3, 1) * R(u + 4.0 * eta, 3, 2) * B, rho3(u, eta) * r21(u + 2.0 * eta + I_pi, p).matrix(), u);
        qd.add(partial_trace(partial_trace(Op(x1, 3), 1), 1).matrix(), rho1(u, eta) * Mat::Identity(3, 3), u);
    }
    return CheckReport::aggregate("fused_r", {f1.report("fused_r_1", tol), f2.report("fused_r_2", tol), f3.report("fused_r_3", tol),
                                              f4.report("fused_r_4", tol), qd.report("quantum_determinant", tol)});
}

inline CheckReport check_fused_k(const ModelParams& p, SampleSpec s = {}, double tol = 1e-10)
{
    using detail::e1;
    auto smp = detail::sampler_for(s, 11);
    const auto fv = fusion_vectors(p);
    const Mat P = permutation_matrix().matrix();
    const Vec phi = fv.phi0, pphi = P * fv.phi0;
    const cplx overlap = phi.transpose() * pphi;
    const auto pr = projectors(p);
    const Mat B12 = fused_basis(p), B21 = P * B12;
    const Mat M1 = e1(m_matrix(p), 1, 2), M1i = e1(m_matrix_inverse(p.eta), 1, 2);
    const cplx eta = p.eta;
    ResidualTracker k1, k2, k3, k4, t1, t2;
    for (cplx u : smp.points(s.count)) {
        const Mat xm = e1(k_minus(u, p), 1, 2) * r21(2.0 * u + 6.0 * eta + I_pi, p).matrix() * e1(k_minus(u + 6.0 * eta + I_pi, p), 2, 2);
        const Mat xp = e1(k_plus(u + 6.0 * eta + I_pi, p), 2, 2) * M1 * r_matrix(-2.0 * u + 6.0 * eta + I_pi, p).matrix() * M1i * e1(k_plus(u, p), 1, 2);
        const cplx dm = scalar(Scalar::DetKMinus, u, p), dp = scalar(Scalar::DetKPlus, u, p);
        const Mat lm = pr.p1_21.matrix() * xm * pr.p1_12.matrix();
        const Mat lp = pr.p1_12.matrix() * xp * pr.p1_21.matrix();
        k1.add(lm, dm * pphi * phi.transpose(), u);
        k2.add(lp, dp * phi * pphi.transpose(), u);
        t1.add(lm.trace(), dm * overlap, u);
        t2.add(lp.trace(), dp * overlap, u);
        const Mat x3 = e1(k_minus(u, p), 1, 2) * r21(2.0 * u + 4.0 * eta, p).matrix() * e1(k_minus(u + 4.0 * eta, p), 2, 2);
        k3.add(B21.transpose() * x3 * B12, scalar(Scalar::FMinus, u, p) * k_minus(u + 2.0 * eta + I_pi, p).matrix(), u);
        const Mat x4 = e1(k_plus(u + 4.0 * eta, p), 2, 2) * M1 * r_matrix(-2.0 * u + 8.0 * eta, p).matrix() * M1i * e1(k_plus(u, p), 1, 2);
        k4.add(B12.transpose() * x4 * B21, scalar(Scalar::FPlus, u, p) * k_plus(u + 2.0 * eta + I_pi, p).matrix(), u);
    }
    return CheckReport::aggregate("fused_k", {k1.report("fused_k_1", tol), k2.report("fused_k_2", tol), k3.report("fused_k_3", tol),
                                              k4.report("fused_k_4", tol), t1.report("det_k_minus_trace", tol), t2.report("det_k_plus_trace", tol)});
}

// Chain used for the monodromy crossing relations: first two inhomogeneities of
// p, padded from the default profile when p is shorter.
inline ModelParams crossing_chain(const ModelParams& p)
{
    ModelParams q = p;
    const auto d = ModelParams::default_profile(2);
    q.thetas.resize(2);
    for (std::size_t i = p.thetas.size(); i < 2; ++i) q.thetas[i] = d.thetas[i];
    return q;
}

inline CheckReport check_boundary_crossing(const ModelParams& p, SampleSpec s = {10, 10}, double tol = 1e-10)
{
    using detail::e1;
    auto smp = detail::sampler_for(s, 12);
    smp.avoid([&](cplx u) { return scalar(Scalar::DeltaMinus, u, p); }).avoid([&](cplx u) { return scalar(Scalar::DeltaPlus, u, p); });
    const cplx eta = p.eta;
    const Mat V = v_matrix(p).matrix(), Vt = V.transpose();
    const Mat I3 = Mat::Identity(3, 3);
    const Mat P = permutation_matrix().matrix();
    const ModelParams chain = crossing_chain(p);
    const TransferEngine eng(chain);
    const Mat V0 = e1(Op(V, 1), 1, 3), Vt0 = e1(Op(Vt, 1), 1, 3);
    ResidualTracker ku1, ku2, kc1, kc2, mc1, mc2;
    for (cplx u : smp.points(s.count)) {
        const cplx c = -u + 6.0 * eta + I_pi;
        ku1.add(k_minus(u, p).matrix() * k_minus(-u, p).matrix(), scalar(Scalar::DeltaMinus, u, p) * I3, u);
        ku2.add(Vt * k_plus(c, p).matrix() * V * Vt * k_plus(u + 6.0 * eta + I_pi, p).matrix() * V, scalar(Scalar::DeltaPlus, u, p) * I3, u);
        const Mat kbm = partial_trace(Op(P * r21(-2.0 * u, p).matrix() * e1(Op(V, 1), 2, 2) *
                                              e1(Op(k_minus(u + 6.0 * eta + I_pi, p).matrix().transpose(), 1), 2, 2) * e1(Op(Vt, 1), 2, 2), 2), 2).matrix();
        kc1.add(kbm, scalar(Scalar::DetKMinus, u, p) / scalar(Scalar::DeltaMinus, u, p) * k_minus(-u, p).matrix(), u);
        const Mat kbp = partial_trace(Op(P * r_matrix(2.0 * u, p).matrix() * e1(Op(k_plus(u, p).matrix().transpose(), 1), 2, 2), 2), 2).matrix();
        kc2.add(kbp, scalar(Scalar::DetKPlus, u, p) / scalar(Scalar::DeltaPlus, u, p) * Vt * k_plus(c, p).matrix() * V, u);
        mc1.add(partial_transpose(eng.monodromy_t(c), 1).matrix(), Vt0 * eng.monodromy_that(u).matrix() * Vt0, u);
        mc2.add(partial_transpose(eng.monodromy_that(c), 1).matrix(), V0 * eng.monodromy_t(u).matrix() * V0, u);
    }
    return CheckReport::aggregate("boundary_crossing", {ku1.report("k_unitarity_minus", tol), ku2.report("k_unitarity_plus", tol),
                                                 kc1.report("k_crossing_minus", tol), kc2.report("k_crossing_plus", tol),
                                                 mc1.report("monodromy_crossing_t", tol), mc2.report("monodromy_crossing_that", tol)});
}

// The full model-level suite, flattened so each identity is its own report,
// sorted by name.
inline std::vector<CheckReport> identity_suite(const ModelParams& p, std::uint64_t seed, double tol = 1e-10)
{
    using Fn = std::function<CheckReport()>;
    const std::vector<Fn> checks = {
        [&] { return check_qybe(p, {seed, 50}, tol); },
        [&] { return check_unitarity(p, {seed, 20}, tol); },
        [&] { return check_crossing(p, {seed, 20}, tol); },
        [&] { return check_pt(p, {seed, 20}, tol); },
        [&] { return check_periodicity(p, {seed, 20}, tol); },
        [&] { return check_crossing_unitarity(p, {seed, 20}, tol); },
        [&] { return check_m_invariance(p, {seed, 20}, tol); },
        [&] { return check_re(p, {seed, 30}, tol); },
        [&] { return check_dual_re(p, {seed, 30}, tol); },
        [&] { return check_fusion(p, tol); },
        [&] { return check_fused_r(p, {seed, 20}, tol); },
        [&] { return check_fused_k(p, {seed, 20}, tol); },
        [&] { return check_boundary_crossing(p, {seed, 10}, tol); },
    };
    std::vector<CheckReport> raw(checks.size());
    parallel_for(checks.size(), [&](std::size_t i) { raw[i] = checks[i](); });
    std::vector<CheckReport> out;
    for (auto& r : raw) {
        const bool split = r.name == "fused_r" || r.name == "fused_k" || r.name == "boundary_crossing";
        if (split)
            for (auto& c : r.components) out.push_back(std::move(c));
        else
            out.push_back(std::move(r));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return out;
}

}  // namespace iklab
