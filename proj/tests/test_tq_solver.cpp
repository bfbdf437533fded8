#include <gtest/gtest.h>

#include <iklab/tq_solver.hpp>

using namespace iklab;

namespace {

std::vector<cplx> random_roots(int n, std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<cplx> v;
    for (int j = 0; j < n; ++j) v.emplace_back(rng.uniform(-1.5, 1.5), rng.uniform(-pi, pi));
    return v;
}

double max_rel_diff(const std::function<cplx(cplx)>& f, const std::function<cplx(cplx)>& g, std::uint64_t seed, int count = 8)
{
    double worst = 0.0;
    for (cplx u : Sampler(seed).points(count)) worst = std::max(worst, rel_diff(f(u), g(u)));
    return worst;
}

// constrained k = 0 profile: σ′ = σ admits M = N and M = N − 1
ModelParams constrained(int n)
{
    ModelParams p = ModelParams::default_profile(n);
    p.sigma_p = p.sigma;
    return p;
}

}  // namespace

// ---- Q-functions, c and evaluation -----------------------------------------------

TEST(TQSolver, RootCountFollowsL1L2)
{
    EXPECT_EQ(TQConfig::n_bar_for(1, 0, 0), 2);
    EXPECT_EQ(TQConfig::n_bar_for(2, 0, 0), 6);
    EXPECT_EQ(TQConfig::n_bar_for(1, 0, 1), 4);
    EXPECT_EQ(TQConfig::n_bar_for(1, 1, 0), 6);
    EXPECT_THROW((TQConfig{1, 0, 0, {cplx(0.1, 0.0)}}.validate()), InvalidInput);
    EXPECT_THROW((TQConfig{1, -1, 0, {}}.validate()), InvalidInput);
}

TEST(TQSolver, QFunctionZeros)
{
    const cplx eta{0.3, 0.11};
    const std::vector<cplx> lam = {cplx(0.4, -0.2), cplx(-0.9, 1.3)};
    EXPECT_LT(std::abs(q1(lam[1] + 2.0 * eta, lam, eta)), 1e-15);
    EXPECT_LT(std::abs(q2(-lam[0] + 2.0 * eta, lam, eta)), 1e-15);
    // a 4πi shift of u leaves every factor invariant
    const cplx u{0.7, 0.2};
    EXPECT_LT(rel_diff(q1(u + 4.0 * I_pi, lam, eta), q1(u, lam, eta)), 1e-13);
}

TEST(TQSolver, ConstantVanishesOnItsZeroSet)
{
    const ModelParams p = ModelParams::default_profile(1);
    TQConfig cfg{1, 0, 0, {cplx(0.3, 0.2), cplx{}}};
    const cplx target = static_cast<double>(cfg.delta()) * p.eta - (p.sigma_p - p.sigma + 2.0 * p.eta);
    cfg.lambdas[1] = target - cfg.lambdas[0];
    EXPECT_LT(std::abs(c_const(cfg, p)), 1e-14);
    cfg.lambdas[1] += 0.1;
    EXPECT_GT(std::abs(c_const(cfg, p)), 1e-3);
}

TEST(TQSolver, ConstantRejectsVanishingDenominator)
{
    const ModelParams p = ModelParams::default_profile(1);
    TQConfig cfg{1, 0, 0, {cplx(0.2, 0.0), cplx{}}};
    cfg.lambdas[1] = static_cast<double>(cfg.delta()) * p.eta - I_pi - cfg.lambdas[0];
    EXPECT_THROW(c_const(cfg, p), InvalidInput);
}

TEST(TQSolver, AsymptoticsFixedByConstant)
{
    const ModelParams p = ModelParams::default_profile(1);
    const TQConfig cfg{1, 0, 0, random_roots(2, 5)};
    const cplx c = c_const(cfg, p);
    const cplx pred = asymptotic_coefficient_prediction(p);
    auto ratio = [&](cplx cc, double d) {
        const cplx u{30.0 * d, 0.3};
        return detail::lambda_tq_direct(u, cfg, p, cc) / std::exp(d * 4.0 * (u - 3.0 * p.eta));
    };
    for (double d : {1.0, -1.0}) {
        EXPECT_LT(rel_diff(ratio(c, d), pred), 1e-7);
        EXPECT_GT(rel_diff(ratio(1.01 * c, d), pred), 1e-4);
    }
}

TEST(TQSolver, NearPoleExtrapolation)
{
    const ModelParams p = ModelParams::default_profile(1);
    const TQConfig cfg{1, 0, 0, random_roots(2, 6)};
    const cplx u0 = 2.0 * p.eta;  // removable for any roots
    const cplx near = u0 + cplx(3e-3, -2e-3);
    const cplx v = lambda_tq_inhom(u0, cfg, p), w = lambda_tq_inhom(near, cfg, p);
    EXPECT_TRUE(std::isfinite(std::abs(v)));
    EXPECT_LT(std::abs(v - w) / std::abs(w), 1e-1);
    TQEvalOptions strict;
    strict.allow_interpolation = false;
    EXPECT_THROW(lambda_tq_inhom(u0, cfg, p, strict), InvalidInput);
    EXPECT_NO_THROW(lambda_tq_inhom(near, cfg, p, strict));
}

TEST(TQSolver, UnconditionalRelationsHoldForRandomRoots)
{
    const ModelParams p = ModelParams::default_profile(1);
    const TQConfig cfg{1, 0, 0, random_roots(2, 7)};
    const auto r = functional_relations([&](cplx u) { return lambda_tq_inhom(u, cfg, p); }, p);
    for (const auto& c : r.components) {
        if (c.name.rfind("eigen_laurent", 0) == 0) EXPECT_FALSE(c.passed) << c.name;
        else EXPECT_TRUE(c.passed) << c.name << " residual " << c.residual;
    }
}

TEST(TQSolver, GaugeShiftOfOneRootIsASymmetry)
{
    const ModelParams p = ModelParams::default_profile(1);
    const TQConfig a{1, 0, 1, random_roots(4, 8)};
    TQConfig b = a;
    b.lambdas[2] += 2.0 * I_pi;
    EXPECT_LT(max_rel_diff([&](cplx u) { return lambda_tq_inhom(u, a, p); }, [&](cplx u) { return lambda_tq_inhom(u, b, p); }, 9), 1e-10);
    EXPECT_LT(std::abs(max_abs(bae_residuals(a, p)) - max_abs(bae_residuals(b, p))), 1e-8);
    const auto ga = gauge_inhom(a.lambdas), gb = gauge_inhom(b.lambdas);
    ASSERT_EQ(ga.size(), gb.size());
    for (std::size_t j = 0; j < ga.size(); ++j) {
        EXPECT_GT(gb[j].imag(), -pi);
        EXPECT_LE(gb[j].imag(), pi);
        EXPECT_LT(std::abs(ga[j] - gb[j]), 1e-12);
    }
}

TEST(TQSolver, SingularBaeRootReportsInfinity)
{
    const ModelParams p = ModelParams::default_profile(1);
    TQConfig cfg{1, 0, 1, random_roots(4, 10)};
    cfg.lambdas[0] = I_pi / 2.0;  // cosh λ = 0 in the l2 = 1 denominator
    const auto r = bae_residuals(cfg, p);
    EXPECT_TRUE(std::isinf(std::abs(r[0])));
    EXPECT_TRUE(std::isfinite(std::abs(r[1])));
}

// ---- fitting against an exact eigencurve ---------------------------------------

class OneSiteFit : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        eng_ = new TransferEngine(ModelParams::default_profile(1));
        curves_ = new std::vector<EigenCurve>(eng_->eigencurves({}));
        fit_ = new TQFit(fit_tq_to_curve(curves_->at(0), *eng_, 0, 0));
    }
    static void TearDownTestSuite()
    {
        delete fit_;
        delete curves_;
        delete eng_;
    }
    static TransferEngine* eng_;
    static std::vector<EigenCurve>* curves_;
    static TQFit* fit_;
};

TransferEngine* OneSiteFit::eng_ = nullptr;
std::vector<EigenCurve>* OneSiteFit::curves_ = nullptr;
TQFit* OneSiteFit::fit_ = nullptr;

TEST_F(OneSiteFit, FitReproducesCurve)
{
    ASSERT_TRUE(fit_->success) << fit_->note;
    EXPECT_LT(fit_->mismatch, 1e-6);
    EXPECT_LT(fit_->bae_max, 1e-5);
    const TQConfig cfg{1, 0, 0, fit_->lambdas};
    const auto& c = curves_->at(0);
    EXPECT_LT(max_rel_diff([&](cplx u) { return lambda_tq_inhom(u, cfg, eng_->params()); }, [&](cplx u) { return eng_->evaluate(c, u); }, 31),
              1e-8);
}

TEST_F(OneSiteFit, FitIsSensitiveToRoots)
{
    ASSERT_TRUE(fit_->success);
    TQConfig cfg{1, 0, 0, fit_->lambdas};
    cfg.lambdas[0] += 1e-3;
    const auto& c = curves_->at(0);
    EXPECT_GT(max_rel_diff([&](cplx u) { return lambda_tq_inhom(u, cfg, eng_->params()); }, [&](cplx u) { return eng_->evaluate(c, u); }, 32),
              1e-4);
    EXPECT_GT(max_abs(bae_residuals(cfg, eng_->params())), 1e-5);
}

TEST_F(OneSiteFit, ResiduesVanishOnlyForBetheRoots)
{
    ASSERT_TRUE(fit_->success);
    const ModelParams& p = eng_->params();
    EXPECT_TRUE(residue_check(TQConfig{1, 0, 0, fit_->lambdas}, p).passed);
    const auto bad = residue_check(TQConfig{1, 0, 0, random_roots(2, 12)}, p);
    EXPECT_TRUE(bad.components[0].passed);
    EXPECT_GT(bad.components[1].residual, 1e-3);
}

TEST_F(OneSiteFit, FittedCurveHasLaurentStructure)
{
    ASSERT_TRUE(fit_->success);
    const ModelParams& p = eng_->params();
    const TQConfig cfg{1, 0, 0, fit_->lambdas};
    EXPECT_TRUE(functional_relations([&](cplx u) { return lambda_tq_inhom(u, cfg, p); }, p).passed);
}

TEST_F(OneSiteFit, NearPoleValueMatchesCurve)
{
    ASSERT_TRUE(fit_->success);
    const ModelParams& p = eng_->params();
    const TQConfig cfg{1, 0, 0, fit_->lambdas};
    for (cplx u0 : fixed_pole_points(p)) EXPECT_LT(rel_diff(lambda_tq_inhom(u0, cfg, p), eng_->evaluate(curves_->at(0), u0)), 1e-5);
}

TEST_F(OneSiteFit, RejectsOversizedProblem)
{
    EXPECT_THROW(fit_tq_to_curve(curves_->at(0), *eng_, 2, 0), InvalidInput);
}

// ---- reduced relations --------------------------------------------------------

TEST(TQReduced, SymmetricPairReducesToConventionalM1)
{
    const ModelParams p = constrained(1);
    const cplx mu{0.37, -0.52};
    const TQConfig inhom{1, 0, 0, {mu, -mu}};
    EXPECT_LT(std::abs(c_const(inhom, p)), 1e-14);
    const ReducedTQConfig red{1, {mu}};
    EXPECT_LT(max_rel_diff([&](cplx u) { return lambda_tq_inhom(u, inhom, p); }, [&](cplx u) { return lambda_tq_conventional(u, red, p); }, 41),
              1e-10);
}

TEST(TQReduced, ShiftedPairReducesToConventionalM0)
{
    const ModelParams p = constrained(1);
    const cplx nu{-0.61, 0.83};
    const TQConfig inhom{1, 0, 0, {nu, -nu + 4.0 * p.eta}};
    const ReducedTQConfig red{0, {}};
    EXPECT_LT(max_rel_diff([&](cplx u) { return lambda_tq_inhom(u, inhom, p); }, [&](cplx u) { return lambda_tq_conventional(u, red, p); }, 42),
              1e-10);
}

TEST(TQReduced, ConventionalRequiresConstraint)
{
    const ModelParams p = ModelParams::default_profile(1);
    EXPECT_THROW(lambda_tq_conventional(0.3, ReducedTQConfig{1, {cplx(0.1, 0.2)}}, p), InvalidInput);
    EXPECT_THROW(fit_conventional_to_curve([](cplx) { return cplx{}; }, p, 1), InvalidInput);
    EXPECT_THROW(lambda_tq_conventional(0.3, ReducedTQConfig{1, {}}, constrained(1)), InvalidInput);
}

TEST(TQReduced, ConventionalFitSatisfiesBae)
{
    const ModelParams p = constrained(1);
    const TransferEngine eng(p);
    const auto curves = eng.eigencurves({});
    FitOptions o;
    o.starts = 256;
    bool found = false;
    for (const auto& c : curves) {
        const auto f = fit_conventional_to_curve([&](cplx u) { return eng.evaluate(c, u); }, p, 1, o);
        if (!f.success || std::abs(f.lambdas[0].real()) > 10.0) continue;
        found = true;
        const ReducedTQConfig red{1, f.lambdas};
        EXPECT_LT(max_abs(bae_conventional_residuals(red, p)), 1e-8);
        EXPECT_LT(max_rel_diff([&](cplx u) { return lambda_tq_conventional(u, red, p); }, [&](cplx u) { return eng.evaluate(c, u); }, 43), 1e-8);
        const ReducedTQConfig off{1, {f.lambdas[0] + 1e-2}};
        EXPECT_GT(max_abs(bae_conventional_residuals(off, p)), 1e-4);
    }
    EXPECT_TRUE(found);
}

TEST(TQReduced, DiagonalVacuumIsAnEigencurve)
{
    const ModelParams d = ModelParams::default_profile(2).diagonal_limit();
    const TransferEngine eng(d);
    const auto curves = eng.eigencurves({});
    const ReducedTQConfig vac{0, {}};
    double best = detail::inf;
    for (const auto& c : curves)
        best = std::min(best, max_rel_diff([&](cplx u) { return diagonal_tq(u, vac, d); }, [&](cplx u) { return eng.evaluate(c, u); }, 44, 4));
    EXPECT_LT(best, 1e-10);
}

TEST(TQReduced, DiagonalIsLargeEpsilonLimitOfConventional)
{
    ModelParams p = constrained(1);
    p.eps = p.eps_p = cplx(40.0, 0.0);
    const ReducedTQConfig r{1, {cplx(0.2, -0.4)}};
    EXPECT_LT(max_rel_diff([&](cplx u) { return lambda_tq_conventional(u, r, p); }, [&](cplx u) { return diagonal_tq(u, r, p); }, 45), 1e-12);
}

TEST(TQReduced, DiagonalSectorBounds)
{
    const ModelParams d = ModelParams::default_profile(1).diagonal_limit();
    EXPECT_THROW(diagonal_tq(0.2, ReducedTQConfig{3, {}}, d), InvalidInput);
    EXPECT_THROW(diagonal_tq(0.2, ReducedTQConfig{1, {cplx(0.1, 0.0), cplx(0.2, 0.0)}}, d), InvalidInput);
}

TEST(TQReduced, QShiftByTwoPiIIsInvisible)
{
    const cplx eta{0.3, 0.11};
    const auto lam = random_roots(3, 13);
    const cplx u{0.4, -0.8};
    EXPECT_LT(rel_diff(q_reduced(u - 6.0 * eta - I_pi, lam, eta), q_reduced(u - 6.0 * eta + I_pi, lam, eta)), 1e-13);
}

// ---- constraint branches -------------------------------------------------------

TEST(TQBranches, RegimesAndMValues)
{
    std::string regime;
    EXPECT_EQ(branch_m_values(2, -3, &regime), (std::vector<int>{5}));
    EXPECT_EQ(regime, "k<=-N");
    EXPECT_EQ(branch_m_values(2, -2), (std::vector<int>{4}));
    EXPECT_EQ(branch_m_values(2, -1, &regime), (std::vector<int>{3, 0}));
    EXPECT_EQ(regime, "1-N<=k<=N");
    EXPECT_EQ(branch_m_values(2, 2), (std::vector<int>{0, 3}));
    EXPECT_EQ(branch_m_values(2, 3, &regime), (std::vector<int>{4}));
    EXPECT_EQ(regime, "k>=N+1");
}

TEST(TQBranches, ConstructedInstancesAreFound)
{
    ModelParams p = ModelParams::default_profile(2);
    for (int k : {-3, -1, 0, 2, 4}) {
        p.sigma_p = p.sigma - 4.0 * static_cast<double>(k) * p.eta + 2.0 * I_pi;
        const auto rep = constraint_branches(p, 2);
        ASSERT_TRUE(rep.constrained);
        ASSERT_EQ(rep.branches.size(), 1u);
        EXPECT_EQ(rep.branches[0].k, k);
        // every listed M satisfies the boundary constraint
        for (int m : rep.branches[0].m_values) EXPECT_LT(constraint0_residual(p, m), 1e-12) << "k=" << k << " M=" << m;
    }
    EXPECT_FALSE(constraint_branches(ModelParams::default_profile(2), 2).constrained);
}

TEST(TQBranches, DegenerateEtaSatisfiesConstraint)
{
    ModelParams p = ModelParams::default_profile(2);
    p.eta = degenerate_eta(p.sigma, p.sigma_p, 2);
    EXPECT_LT(constraint0_residual(p, 0), 1e-12);
    EXPECT_NO_THROW(validate(p));
    EXPECT_THROW(degenerate_eta(p.sigma, p.sigma_p, 2, 2), InvalidInput);
}
