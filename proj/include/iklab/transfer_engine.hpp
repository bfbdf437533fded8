#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "check_report.hpp"
#include "laurent.hpp"
#include "model_data.hpp"
#include "parallel.hpp"

namespace iklab {

// ---- chain building blocks ---------------------------------------------------
// Sites are 1-based inside a space of n_total sites; quantum site j sits at
// first_quantum + j − 1.

inline Op monodromy_on(cplx u, const ModelParams& p, int aux, int first_quantum, int n_total)
{
    Op m = Op::identity(n_total);
    for (int j = p.n_sites(); j >= 1; --j)
        m = m * embed_pair(r_matrix(u - p.thetas[j - 1], p), aux, first_quantum + j - 1, n_total);
    return m;
}

inline Op monodromy_hat_on(cplx u, const ModelParams& p, int aux, int first_quantum, int n_total)
{
    Op m = Op::identity(n_total);
    for (int j = 1; j <= p.n_sites(); ++j)
        m = m * embed_pair(r_matrix(u + p.thetas[j - 1], p), first_quantum + j - 1, aux, n_total);
    return m;
}

inline cplx prod_over_thetas(const ModelParams& p, cplx u, int sign, cplx (*f)(cplx, cplx))
{
    cplx r = 1.0;
    for (const cplx& t : p.thetas) r *= f(u + static_cast<double>(sign) * t, p.eta);
    return r;
}

// ---- eigencurves -------------------------------------------------------------

struct EigenCurve {
    int id = 0;
    int multiplicity = 1;
    std::vector<std::pair<cplx, cplx>> samples;  // (u, Λ(u))
    LaurentFit laurent;      // horizontal-segment fit
    LaurentFit laurent_dft;  // same coefficients from one period on a vertical line
    Mat right;  // dim × multiplicity
    Mat left;   // dim × multiplicity, left^H right = I
    std::optional<long> charge;  // eigenvalue of the splitter operator, if one was supplied
    double spot_residual = 0.0;
};

struct EigencurveOptions {
    cplx anchor{0.37, 0.19};
    cplx anchor_step{0.113, 0.071};
    int max_anchor_shifts = 8;
    double gap = 1e-6;
    std::optional<Mat> splitter;  // commuting operator used to resolve clusters
    LaurentGrid grid{};           // degree set from N when left at 0
};

struct AsymptoticResult {
    int direction = 1;
    cplx coefficient{};
    cplx predicted{};
    double off_identity = 0.0;
    double relative_error = 0.0;
    double radius = 0.0;
    bool converged = false;
    bool degenerate_leading_order = false;
};

class TransferEngine {
public:
    explicit TransferEngine(ModelParams p, int max_sites = 4) : p_(std::move(p))
    {
        validate(p_, false);
        if (p_.n_sites() > max_sites)
            throw InvalidInput("chain length " + std::to_string(p_.n_sites()) + " exceeds maximum " + std::to_string(max_sites));
    }

    const ModelParams& params() const { return p_; }
    int n() const { return p_.n_sites(); }
    Eigen::Index dim() const { return static_cast<Eigen::Index>(pow3(n())); }

    Op monodromy_t(cplx u) const { return monodromy_on(u, p_, 1, 2, n() + 1); }
    Op monodromy_that(cplx u) const { return monodromy_hat_on(u, p_, 1, 2, n() + 1); }

    Op double_row(cplx u) const
    {
        return monodromy_t(u) * embed(k_minus(u, p_), 1, n() + 1) * monodromy_that(u);
    }

    Op transfer(cplx u) const
    {
        return partial_trace(embed(k_plus(u, p_), 1, n() + 1) * double_row(u), 1);
    }

    // t′(u) from closed-form entry derivatives and the product rule.
    Op transfer_derivative(cplx u) const
    {
        const int N = n(), S = N + 1;
        std::vector<Op> a(static_cast<std::size_t>(N)), da(a.size()), b(a.size()), db(a.size());
        for (int j = 1; j <= N; ++j) {
            const cplx th = p_.thetas[static_cast<std::size_t>(j - 1)];
            a[j - 1] = embed_pair(r_matrix(u - th, p_), 1, j + 1, S);
            da[j - 1] = embed_pair(r_matrix_derivative(u - th, p_), 1, j + 1, S);
            b[j - 1] = embed_pair(r_matrix(u + th, p_), j + 1, 1, S);
            db[j - 1] = embed_pair(r_matrix_derivative(u + th, p_), j + 1, 1, S);
        }
        auto ordered = [&](const std::vector<Op>& f, const std::vector<Op>& df, bool descending) {
            std::pair<Op, Op> out{Op::identity(S), Op(Mat::Zero(pow3(S), pow3(S)), S)};
            for (int step = 0; step < N; ++step) {
                const int k = descending ? N - 1 - step : step;
                out.second = out.second * f[k] + out.first * df[k];
                out.first = out.first * f[k];
            }
            return out;
        };
        const auto [T, dT] = ordered(a, da, true);
        const auto [Th, dTh] = ordered(b, db, false);
        const Op Km = embed(k_minus(u, p_), 1, S), dKm = embed(k_minus_derivative(u, p_), 1, S);
        const Op Kp = embed(k_plus(u, p_), 1, S), dKp = embed(k_plus_derivative(u, p_), 1, S);
        const Op total = dKp * T * Km * Th + Kp * dT * Km * Th + Kp * T * dKm * Th + Kp * T * Km * dTh;
        return partial_trace(total, 1);
    }

    // central difference with one Richardson step
    Op transfer_derivative_fd(cplx u, double h = 1e-5) const
    {
        auto D = [&](double s) { return (transfer(u + s) - transfer(u - s)) * cplx(1.0 / (2.0 * s)); };
        return (D(h / 2) * cplx(4.0) - D(h)) * cplx(1.0 / 3.0);
    }

    // ---- operator-level checks -------------------------------------------------

    CheckReport check_commutativity(const std::vector<std::pair<cplx, cplx>>& pairs, double tol) const
    {
        ResidualTracker tr;
        for (auto [u, v] : pairs) {
            const Mat tu = transfer(u).matrix(), tv = transfer(v).matrix();
            tr.add_residual((tu * tv - tv * tu).norm() / (tu.norm() * tv.norm()), u);
        }
        return tr.report("transfer_commutativity", tol);
    }

    CheckReport check_operator_identities(int j, int sign, double tol) const
    {
        if (j < 1 || j > n()) throw InvalidInput("operator identity: site index out of range");
        const cplx eta = p_.eta;
        const cplx th = p_.thetas[static_cast<std::size_t>(j - 1)];
        const cplx z = static_cast<double>(sign) * th;
        const cplx r1 = rho1(2.0 * z, eta), r2 = rho2(-2.0 * z + 8.0 * eta, eta);
        const std::string tag = std::string(sign > 0 ? "+" : "-") + "theta_" + std::to_string(j);
        if (std::abs(r1) < 1e-12) throw InvalidInput("operator identity at " + tag + ": rho1(2z) vanishes");
        if (std::abs(r2) < 1e-12) throw InvalidInput("operator identity at " + tag + ": rho2(-2z+8eta) vanishes");
        const Mat tz = transfer(z).matrix();
        const Mat id = Mat::Identity(dim(), dim());
        std::vector<CheckReport> parts;
        {
            ResidualTracker a;
            a.add(tz * transfer(z + 6.0 * eta + I_pi).matrix(), scalar(Scalar::Delta1, z, p_) / r1 * id, z);
            parts.push_back(a.report("id1_" + tag, tol));
        }
        {
            ResidualTracker a;
            a.add(tz * transfer(z + 4.0 * eta).matrix(), scalar(Scalar::Delta2, z, p_) / r2 * transfer(z + 2.0 * eta + I_pi).matrix(), z);
            parts.push_back(a.report("id2_" + tag, tol));
        }
        if (sign < 0) {
            // the id1 relation at −θ follows from +θ: crossing maps the operator product, and
            // the scalar side must be even in z
            ResidualTracker a;
            a.add(scalar(Scalar::Delta1, z, p_) / r1, scalar(Scalar::Delta1, -z, p_) / rho1(-2.0 * z, eta), z);
            a.add(tz, transfer(-z + 6.0 * eta + I_pi).matrix(), z);
            parts.push_back(a.report("id1_" + tag + "_via_crossing", tol));
        }
        return CheckReport::aggregate("operator_identities_" + tag, std::move(parts));
    }

    CheckReport check_all_operator_identities(double tol) const
    {
        std::vector<CheckReport> parts;
        for (int j = 1; j <= n(); ++j)
            for (int s : {1, -1}) parts.push_back(check_operator_identities(j, s, tol));
        return CheckReport::aggregate("operator_identities", std::move(parts));
    }

    CheckReport check_crossing_symmetry(const std::vector<cplx>& us, double tol) const
    {
        ResidualTracker tr;
        for (cplx u : us) tr.add(transfer(u).matrix(), transfer(-u + 6.0 * p_.eta + I_pi).matrix(), u);
        return tr.report("transfer_crossing", tol);
    }

    CheckReport check_periodicity(const std::vector<cplx>& us, double tol) const
    {
        ResidualTracker tr;
        for (cplx u : us) tr.add(transfer(u).matrix(), transfer(u + 2.0 * I_pi).matrix(), u);
        return tr.report("transfer_periodicity", tol);
    }

    cplx special_value_zero() const
    {
        return k_minus_at_zero(p_) * k_plus(0.0, p_).matrix().trace() * prod_over_thetas(p_, 0.0, -1, rho1);
    }

    cplx special_value_ipi() const
    {
        return (1.0 - 2.0 * boundary_weight(p_.eps) * std::sinh(p_.eta)) * k_plus(I_pi, p_).matrix().trace() *
               prod_over_thetas(p_, I_pi, -1, rho1);
    }

    CheckReport check_special_values(double tol) const
    {
        const cplx eta = p_.eta;
        const Mat id = Mat::Identity(dim(), dim());
        const Mat t0 = transfer(0.0).matrix(), t6 = transfer(6.0 * eta + I_pi).matrix();
        const Mat ti = transfer(I_pi).matrix(), t6r = transfer(6.0 * eta).matrix();
        std::vector<CheckReport> parts;
        auto one = [&](const char* name, const Mat& a, const Mat& b, cplx u) {
            ResidualTracker r;
            r.add(a, b, u);
            parts.push_back(r.report(name, tol));
        };
        one("t(0)", t0, special_value_zero() * id, 0.0);
        one("t(6eta+ipi)", t6, special_value_zero() * id, 6.0 * eta + I_pi);
        one("t(ipi)", ti, special_value_ipi() * id, I_pi);
        one("t(6eta)", t6r, special_value_ipi() * id, 6.0 * eta);
        return CheckReport::aggregate("transfer_special_values", std::move(parts));
    }

    CheckReport check_monodromy_relations(const std::vector<cplx>& us, double tol) const
    {
        const int S = n() + 1;
        const Op M0 = embed(m_matrix(p_), 1, S), M0i = embed(m_matrix_inverse(p_.eta), 1, S);
        const Mat id = Mat::Identity(static_cast<Eigen::Index>(pow3(S)), static_cast<Eigen::Index>(pow3(S)));
        ResidualTracker a, b;
        for (cplx u : us) {
            a.add((monodromy_t(u) * monodromy_that(-u)).matrix(), prod_over_thetas(p_, u, -1, rho1) * id, u);
            const Op lhs = partial_transpose(monodromy_t(u), 1) * M0 * partial_transpose(monodromy_that(-u + 12.0 * p_.eta), 1) * M0i;
            b.add(lhs.matrix(), prod_over_thetas(p_, u, -1, rho2) * id, u);
        }
        return CheckReport::aggregate("monodromy_relations", {a.report("monodromy_unitarity", tol), b.report("monodromy_crossing_unitarity", tol)});
    }

    // Two auxiliary spaces (sites 1, 2) in front of the chain.
    CheckReport check_fused_monodromy(const std::vector<cplx>& us, double tol) const
    {
        if (n() > 2) throw InvalidInput("fused monodromy check supports N <= 2");
        const int N = n(), S = N + 2;
        const cplx eta = p_.eta;
        const auto pr = projectors(p_);
        const Op P1 = embed_pair(pr.p1_12, 1, 2, S);
        const Mat B = kron(fused_basis(p_), Mat::Identity(static_cast<Eigen::Index>(pow3(N)), static_cast<Eigen::Index>(pow3(N))));
        ResidualTracker f1, f2, f3, f4;
        for (cplx u : us) {
            auto T = [&](cplx x, int aux) { return monodromy_on(x, p_, aux, 3, S); };
            auto Th = [&](cplx x, int aux) { return monodromy_hat_on(x, p_, aux, 3, S); };
            f1.add((P1 * T(u, 2) * T(u + 6.0 * eta + I_pi, 1) * P1).matrix(), prod_over_thetas(p_, u, -1, rho1) * P1.matrix(), u);
            f2.add((P1 * Th(u, 1) * Th(u + 6.0 * eta + I_pi, 2) * P1).matrix(), prod_over_thetas(p_, u, 1, rho1) * P1.matrix(), u);
            f3.add(B.transpose() * (T(u, 2) * T(u + 4.0 * eta, 1)).matrix() * B,
                   prod_over_thetas(p_, u, -1, rho3) * monodromy_t(u + 2.0 * eta + I_pi).matrix(), u);
            f4.add(B.transpose() * (Th(u, 1) * Th(u + 4.0 * eta, 2)).matrix() * B,
                   prod_over_thetas(p_, u, 1, rho3) * monodromy_that(u + 2.0 * eta + I_pi).matrix(), u);
        }
        return CheckReport::aggregate("fused_monodromy", {f1.report("fused_monodromy_1", tol), f2.report("fused_monodromy_2", tol),
                                                          f3.report("fused_monodromy_3", tol), f4.report("fused_monodromy_4", tol)});
    }

    cplx asymptotic_prediction() const
    {
        return std::pow(0.25, n()) * boundary_weight(p_.eps) * boundary_weight(p_.eps_p) *
               (1.0 + 2.0 * std::cosh(p_.sigma_p - p_.sigma + 2.0 * p_.eta));
    }

    AsymptoticResult asymptotic_coefficient(int direction, double off_tol = 1e-8) const
    {
        AsymptoticResult res;
        res.direction = direction > 0 ? 1 : -1;
        res.predicted = asymptotic_prediction();
        const double d = static_cast<double>(res.direction);
        const double e_scale = 2.0 * (n() + 1);
        for (double R : {30.0, 40.0, 50.0}) {
            const cplx u{d * R, 0.3};
            const Mat C = transfer(u).matrix() / std::exp(d * e_scale * (u - 3.0 * p_.eta));
            res.radius = R;
            res.coefficient = C.trace() / static_cast<double>(dim());
            const double cnorm = std::max(C.norm(), 1e-300);
            res.off_identity = (C - res.coefficient * Mat::Identity(dim(), dim())).norm() / cnorm;
            if (res.off_identity <= off_tol) {
                res.converged = true;
                break;
            }
        }
        const double scale = std::pow(0.25, n()) * std::abs(boundary_weight(p_.eps) * boundary_weight(p_.eps_p));
        res.degenerate_leading_order = std::abs(res.predicted) <= 1e-10 * std::max(scale, 1e-300);
        res.relative_error = rel_diff(res.coefficient, res.predicted);
        return res;
    }

    // ---- Hamiltonian ----------------------------------------------------------

    void require_homogeneous() const
    {
        for (const cplx& t : p_.thetas)
            if (t != cplx{}) throw InvalidInput("hamiltonian requires the homogeneous point theta_j = 0");
        if (std::abs(k_minus_at_zero(p_)) < 1e-12) throw InvalidInput("t(0) singular: 1+2e^{-eps}sinh(eta) vanishes");
        if (std::abs(k_plus(0.0, p_).matrix().trace()) < 1e-12) throw InvalidInput("t(0) singular: tr K+(0) vanishes");
    }

    static Mat right_divide(const Mat& a, const Mat& b) { return b.transpose().partialPivLu().solve(a.transpose()).transpose(); }

    Op hamiltonian_logderiv() const
    {
        require_homogeneous();
        return Op(right_divide(transfer_derivative(0.0).matrix(), transfer(0.0).matrix()), n());
    }

    Op hamiltonian_logderiv_fd(double h = 1e-5) const
    {
        require_homogeneous();
        return Op(right_divide(transfer_derivative_fd(0.0, h).matrix(), transfer(0.0).matrix()), n());
    }

    Op hamiltonian_explicit() const
    {
        require_homogeneous();
        using std::cosh, std::exp, std::sinh;
        const int N = n();
        const cplx e = p_.eta;
        const cplx w = boundary_weight(p_.eps), wp = boundary_weight(p_.eps_p);
        auto E = [&](int m, int nu, int j) {
            Mat a = Mat::Zero(3, 3);
            a(m - 1, nu - 1) = 1.0;
            return embed(Op(a, 1), j, N).matrix();
        };
        const cplx s1 = sinh(e), s2 = sinh(2.0 * e), s3 = sinh(3.0 * e), c3 = cosh(3.0 * e), c5 = cosh(5.0 * e), c1 = cosh(e);
        const cplx c05 = s1 - sinh(5.0 * e);
        Mat H = Mat::Zero(dim(), dim());
        for (int j = 1; j < N; ++j) {
            auto EE = [&](int a, int b, int c, int d) { return Mat(E(a, b, j) * E(c, d, j + 1)); };
            const Mat bulk = c5 * (EE(1, 1, 1, 1) + EE(3, 3, 3, 3)) + s2 * (s3 - c3) * (EE(1, 1, 2, 2) + EE(2, 2, 3, 3)) +
                             s2 * (s3 + c3) * (EE(2, 2, 1, 1) + EE(3, 3, 2, 2)) +
                             2.0 * s1 * s2 * (exp(-2.0 * e) * EE(1, 1, 3, 3) + exp(2.0 * e) * EE(3, 3, 1, 1)) +
                             c1 * (EE(1, 3, 3, 1) + EE(3, 1, 1, 3)) +
                             c3 * (EE(1, 2, 2, 1) + EE(2, 1, 1, 2) + EE(2, 2, 2, 2) + EE(2, 3, 3, 2) + EE(3, 2, 2, 3)) -
                             exp(-2.0 * e) * s2 * (EE(1, 2, 3, 2) + EE(2, 1, 2, 3)) + exp(2.0 * e) * s2 * (EE(2, 3, 2, 1) + EE(3, 2, 1, 2));
            H += 2.0 / c05 * bulk;
        }
        if (w != cplx{})
            H += -2.0 * w / (1.0 + 2.0 * w * s1) *
                 (s1 * (E(1, 1, 1) - E(3, 3, 1)) + c1 * E(2, 2, 1) - exp(p_.sigma) * E(1, 3, 1) - exp(-p_.sigma) * E(3, 1, 1));
        const cplx den = 2.0 * cosh(2.0 * e) - 4.0 * wp * s1 * cosh(4.0 * e) + 1.0 + 2.0 * wp * sinh(5.0 * e);
        const cplx pre = 2.0 / (c05 * den);
        const cplx A = exp(2.0 * e) - 2.0 * exp(-4.0 * e) * wp * s1;
        const cplx Bc = 1.0 + 2.0 * wp * sinh(5.0 * e);
        const cplx C2 = exp(-2.0 * e) - 2.0 * exp(4.0 * e) * wp * s1;
        const cplx X1 = A * c5 + Bc * s2 * (s3 - c3) + 2.0 * (exp(-4.0 * e) - 2.0 * exp(2.0 * e) * wp * s1) * s1 * s2;
        const cplx X2 = A * s2 * (s3 + c3) + Bc * c3 + C2 * s2 * (s3 - c3);
        const cplx X3 = 2.0 * (exp(4.0 * e) - 2.0 * exp(-2.0 * e) * wp * s1) * s1 * s2 + Bc * s2 * (s3 + c3) + C2 * c5;
        H += pre * (X1 * E(1, 1, N) + X2 * E(2, 2, N) + X3 * E(3, 3, N));
        if (wp != cplx{}) {
            H += pre * (-2.0 * wp * sinh(6.0 * e) * c1) * (exp(2.0 * e + p_.sigma_p) * E(1, 3, N) + exp(-2.0 * e - p_.sigma_p) * E(3, 1, N));
            H += 2.0 * wp * (2.0 * s1 * sinh(4.0 * e) - c5) / den * Mat::Identity(dim(), dim());
        }
        return Op(std::move(H), N);
    }

    // ---- spectrum -------------------------------------------------------------

    std::vector<Mat> transfer_batch(const std::vector<cplx>& us) const
    {
        std::vector<Mat> out(us.size());
        parallel_for(us.size(), [&](std::size_t i) { out[i] = transfer(us[i]).matrix(); });
        return out;
    }

    cplx evaluate(const EigenCurve& c, const Mat& t) const
    {
        return (c.left.adjoint() * t * c.right).trace() / static_cast<double>(c.multiplicity);
    }

    cplx evaluate(const EigenCurve& c, cplx u) const { return evaluate(c, transfer(u).matrix()); }

    LaurentGrid default_grid() const
    {
        LaurentGrid g;
        g.degree = 2 * n() + 2;
        g.dft_re_u = 3.0 * p_.eta.real();
        return g;
    }

    std::vector<EigenCurve> eigencurves(const std::vector<cplx>& u_samples, EigencurveOptions opt = {}) const
    {
        if (opt.grid.degree == 0) opt.grid.degree = 2 * n() + 2;
        // the line Re u = Re 3η is mapped to itself by u → −u + 6η + iπ
        opt.grid.dft_re_u = 3.0 * p_.eta.real();
        const Eigen::Index D = dim();

        // Anchor escalation: first anchor whose spectrum has no clusters wins;
        // otherwise keep the one with fewest clustered states.
        struct Candidate {
            EigenDecomposition ed;
            std::vector<std::vector<Eigen::Index>> groups;
            std::size_t clustered = 0;
            cplx anchor;
        };
        std::optional<Candidate> best;
        for (int k = 0; k < opt.max_anchor_shifts; ++k) {
            const cplx a = opt.anchor + static_cast<double>(k) * opt.anchor_step;
            Candidate c;
            c.anchor = a;
            try {
                c.ed = eig(transfer(a).matrix());
            } catch (const NumericalFailure&) {
                continue;
            }
            c.groups = cluster_values(c.ed.values, opt.gap);
            for (const auto& g : c.groups)
                if (g.size() > 1) c.clustered += g.size();
            if (!best || c.clustered < best->clustered) best = std::move(c);
            if (best->clustered == 0) break;
        }
        if (!best) throw NumericalFailure("eigencurves: transfer matrix near-defective at every anchor");

        // Resolve clusters with a second spectral point (plus the splitter).
        const cplx second = best->anchor + cplx(0.29, -0.17);
        const Mat t2 = transfer(second).matrix();
        std::vector<EigenCurve> curves;
        for (const auto& g : best->groups) {
            Mat R(D, static_cast<Eigen::Index>(g.size())), L(D, static_cast<Eigen::Index>(g.size()));
            for (std::size_t i = 0; i < g.size(); ++i) {
                R.col(static_cast<Eigen::Index>(i)) = best->ed.right.col(g[i]);
                L.col(static_cast<Eigen::Index>(i)) = best->ed.left.col(g[i]);
            }
            if (g.size() == 1) {
                EigenCurve c;
                c.right = R;
                c.left = L;
                curves.push_back(std::move(c));
                continue;
            }
            Mat restricted = L.adjoint() * t2 * R;
            if (opt.splitter) restricted += cplx(0.731, 0.417) * (L.adjoint() * (*opt.splitter) * R);
            const auto sub = eig(restricted);
            for (const auto& sg : cluster_values(sub.values, opt.gap)) {
                EigenCurve c;
                c.multiplicity = static_cast<int>(sg.size());
                c.right.resize(D, c.multiplicity);
                c.left.resize(D, c.multiplicity);
                for (std::size_t i = 0; i < sg.size(); ++i) {
                    c.right.col(static_cast<Eigen::Index>(i)) = R * sub.right.col(sg[i]);
                    c.left.col(static_cast<Eigen::Index>(i)) = L * sub.left.col(sg[i]);
                }
                curves.push_back(std::move(c));
            }
        }
        if (opt.splitter) {
            for (auto& c : curves) {
                const cplx q = (c.left.adjoint() * (*opt.splitter) * c.right).trace() / static_cast<double>(c.multiplicity);
                c.charge = std::lround(q.real());
            }
        }

        // spot checks at three points, then sampling and Laurent fits
        const std::vector<cplx> spots = {cplx(-0.61, 0.83), cplx(0.44, -1.27), cplx(1.13, 2.05)};
        const auto spot_t = transfer_batch(spots);
        for (auto& c : curves) {
            for (const Mat& t : spot_t) {
                const Mat tv = t * c.right;
                const Mat proj = c.right * (c.left.adjoint() * tv);
                c.spot_residual = std::max(c.spot_residual, (tv - proj).norm() / t.norm());
            }
        }
        const auto nodes = opt.grid.nodes(), hold = opt.grid.holdout(), dft = opt.grid.dft_nodes();
        std::vector<cplx> all_u(u_samples);
        all_u.insert(all_u.end(), nodes.begin(), nodes.end());
        all_u.insert(all_u.end(), hold.begin(), hold.end());
        all_u.insert(all_u.end(), dft.begin(), dft.end());
        const auto ts = transfer_batch(all_u);
        for (std::size_t ci = 0; ci < curves.size(); ++ci) {
            auto& c = curves[ci];
            std::vector<cplx> vals(all_u.size());
            for (std::size_t i = 0; i < all_u.size(); ++i) vals[i] = evaluate(c, ts[i]);
            for (std::size_t i = 0; i < u_samples.size(); ++i) c.samples.emplace_back(u_samples[i], vals[i]);
            auto slice = [&](std::size_t from, std::size_t count) {
                return std::vector<cplx>(vals.begin() + static_cast<long>(from), vals.begin() + static_cast<long>(from + count));
            };
            const auto ns = u_samples.size();
            c.laurent = opt.grid.fit(slice(ns, nodes.size()), slice(ns + nodes.size(), hold.size()));
            c.laurent_dft = opt.grid.dft_fit(slice(ns + nodes.size() + hold.size(), dft.size()));
        }
        // deterministic order: by value at the anchor
        std::vector<std::pair<cplx, std::size_t>> key;
        const Mat ta = transfer(best->anchor).matrix();
        for (std::size_t i = 0; i < curves.size(); ++i) key.emplace_back(evaluate(curves[i], ta), i);
        std::stable_sort(key.begin(), key.end(), [](const auto& x, const auto& y) {
            if (x.first.real() != y.first.real()) return x.first.real() < y.first.real();
            return x.first.imag() < y.first.imag();
        });
        std::vector<EigenCurve> ordered;
        for (std::size_t i = 0; i < key.size(); ++i) {
            ordered.push_back(std::move(curves[key[i].second]));
            ordered.back().id = static_cast<int>(i);
        }
        return ordered;
    }

    // U(1) charge Σ_j q_j with q = 0, 1, 2 for the three basis states; commutes
    // with t(u) in the diagonal limit.
    Mat charge_operator() const
    {
        const Eigen::Index D = dim();
        Mat q = Mat::Zero(D, D);
        for (Eigen::Index i = 0; i < D; ++i) {
            int s = 0;
            for (int k = 0; k < n(); ++k) s += digit(static_cast<std::size_t>(i), k, n());
            q(i, i) = static_cast<double>(s);
        }
        return q;
    }

    static std::vector<std::vector<Eigen::Index>> cluster_values(const Vec& v, double gap)
    {
        const Eigen::Index n = v.size();
        double scale = 1e-300;
        for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, std::abs(v(i)));
        std::vector<Eigen::Index> parent(static_cast<std::size_t>(n));
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](Eigen::Index x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                if (std::abs(v(i) - v(j)) < gap * scale) parent[find(j)] = find(i);
        std::vector<std::vector<Eigen::Index>> groups;
        std::vector<Eigen::Index> slot(static_cast<std::size_t>(n), -1);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto r = find(i);
            if (slot[r] < 0) {
                slot[r] = static_cast<Eigen::Index>(groups.size());
                groups.emplace_back();
            }
            groups[static_cast<std::size_t>(slot[r])].push_back(i);
        }
        return groups;
    }

private:
    ModelParams p_;
};

}  // namespace iklab
