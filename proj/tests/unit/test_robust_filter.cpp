#include "fixtures.hpp"
#include "rkf/error.hpp"
#include "rkf/robust_filter.hpp"

#include <gtest/gtest.h>

#include <cmath>

using rkf::RobustPolicy;
using rkf::SymMatrix;
using rkf::Tau;
using rkf::testing::Generator;

namespace {

std::vector<Eigen::VectorXd> simulate_observations(Generator& gen, const rkf::testing::TextbookModel& m,
                                                   std::size_t count)
{
    std::vector<Eigen::VectorXd> ys;
    Eigen::VectorXd x = m.x0 + Eigen::LLT<Eigen::MatrixXd>(m.V0).matrixL() * gen.gaussian_vector(m.x0.size());
    for (std::size_t t = 0; t < count; ++t) {
        const Eigen::VectorXd v = gen.gaussian_vector(m.B.cols());
        ys.push_back(m.C * x + m.D * v);
        x = m.A * x + m.B * v;
    }
    return ys;
}

double max_abs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace

TEST(RobustPolicy, Validation)
{
    EXPECT_THROW(RobustPolicy::robust(Tau(0), -0.1), rkf::Error);
    EXPECT_THROW(RobustPolicy::risk_sensitive(Tau(0), 0.0), rkf::Error);
    EXPECT_THROW(RobustPolicy::robust(Tau(0), std::vector<double>{}), rkf::Error);
    const auto p = RobustPolicy::robust(Tau(1), std::vector<double>{0.1, 0.2});
    EXPECT_DOUBLE_EQ(p.tolerance(1), 0.2);
    EXPECT_DOUBLE_EQ(RobustPolicy::robust(Tau(1), 0.3).tolerance(400), 0.3);
}

TEST(RobustFilter, ZeroToleranceIsKalman)
{
    Generator gen(41);
    for (int i = 0; i < 10; ++i) {
        const auto tm = gen.model(gen.integer(1, 4), gen.integer(1, 2));
        const auto model = rkf::testing::to_model(tm, 60);
        const auto ys = simulate_observations(gen, tm, 61);
        const auto ref = rkf::testing::textbook_kalman(tm, ys);
        for (double tau : {0.0, 1.0}) {
            const auto trace = rkf::run_filter(model, RobustPolicy::robust(Tau(tau), 0.0), ys);
            ASSERT_EQ(trace.steps.size(), ref.size());
            for (std::size_t t = 0; t < ref.size(); ++t) {
                const auto& s = trace.steps[t];
                EXPECT_EQ(s.theta, 0.0);
                EXPECT_TRUE(s.phi.matrix().isZero(0.0));
                EXPECT_EQ(s.distorted_cov.matrix(), s.nominal_cov.matrix());
                EXPECT_LE(max_abs(s.gain, ref[t].gain), 1e-12);
                EXPECT_LE(max_abs(s.state_pred, ref[t].x_next), 1e-12);
                EXPECT_LE(max_abs(s.nominal_cov.matrix(), ref[t].P_next), 1e-12);
            }
        }
    }
}

TEST(RobustFilter, StandardPolicyEqualsZeroTolerance)
{
    const auto model = rkf::testing::example_model(50);
    const auto a = rkf::run_gain_schedule(model, RobustPolicy::standard());
    const auto b = rkf::run_gain_schedule(model, RobustPolicy::robust(Tau(0.5), 0.0));
    for (std::size_t t = 0; t < a.size(); ++t) {
        EXPECT_EQ(a[t].gain, b[t].gain);
    }
}

TEST(RobustFilter, RiskSensitiveClosedForm)
{
    Generator gen(42);
    int checked = 0;
    for (int i = 0; i < 20; ++i) {
        const auto tm = gen.model(gen.integer(1, 4), gen.integer(1, 2));
        const auto model = rkf::testing::to_model(tm, 80);
        // Pick theta well inside the admissible range of the nominal steady state.
        const auto nominal = rkf::run_gain_schedule(model, RobustPolicy::standard());
        double worst = 0.0;
        for (const auto& s : nominal) {
            worst = std::max(worst, rkf::operator_norm(s.nominal_cov));
        }
        const double theta = 0.2 / worst;
        std::vector<Eigen::MatrixXd> nominal_ref;
        const auto ref = rkf::testing::classical_risk_sensitive(tm, theta, 81, &nominal_ref);
        std::vector<rkf::CovarianceStep> schedule;
        try {
            schedule = rkf::run_gain_schedule(model, RobustPolicy::risk_sensitive(Tau(0), theta));
        } catch (const rkf::Error& e) {
            ASSERT_EQ(e.code(), rkf::ErrorCode::theta_out_of_range);
            continue;
        }
        for (std::size_t t = 0; t < schedule.size(); ++t) {
            const auto& s = schedule[t];
            const Eigen::MatrixXd closed =
                (s.nominal_cov.matrix().inverse() - theta * Eigen::MatrixXd::Identity(tm.A.rows(), tm.A.rows()))
                    .inverse();
            EXPECT_LT(rkf::relative_frobenius(s.distorted_cov.matrix(), closed), 1e-10);
            EXPECT_LT(rkf::relative_frobenius(s.distorted_cov.matrix(), ref[t]), 1e-10);
            EXPECT_EQ(s.theta, theta);
        }
        ++checked;
    }
    EXPECT_GE(checked, 15);
}

TEST(RobustFilter, RiskSensitiveThetaTooLarge)
{
    const auto model = rkf::testing::example_model(20);
    try {
        rkf::run_gain_schedule(model, RobustPolicy::risk_sensitive(Tau(0), 1e6));
        FAIL();
    } catch (const rkf::Error& e) {
        EXPECT_EQ(e.code(), rkf::ErrorCode::theta_out_of_range);
        ASSERT_TRUE(e.step().has_value());
        EXPECT_EQ(*e.step(), 0U);
        EXPECT_NE(std::string(e.what()).find("at t=0"), std::string::npos);
    }
}

TEST(RobustFilter, BudgetActiveAtEveryStep)
{
    const auto model = rkf::testing::example_model(500);
    for (double tau : {0.0, 0.5, 1.0}) {
        const auto schedule = rkf::run_gain_schedule(model, RobustPolicy::robust(Tau(tau), 0.1));
        for (const auto& s : schedule) {
            EXPECT_LE(std::abs(rkf::gamma_tau(s.nominal_cov, s.theta, Tau(tau)) - 0.1), rkf::budget_tolerance(0.1));
        }
    }
}

TEST(RobustFilter, ExampleSteadyStateTheta)
{
    const auto model = rkf::testing::example_model(500);
    const auto s0 = rkf::run_gain_schedule(model, RobustPolicy::robust(Tau(0), 0.1));
    const auto s1 = rkf::run_gain_schedule(model, RobustPolicy::robust(Tau(1), 0.1));
    EXPECT_NEAR(s0.back().theta, 0.193413, 1e-4);
    EXPECT_NEAR(s1.back().theta, 0.227285, 1e-4);
}

TEST(RobustFilter, PhiPositiveSemidefinite)
{
    Generator gen(43);
    for (int i = 0; i < 30; ++i) {
        const auto model = rkf::testing::to_model(gen.model(gen.integer(1, 3), gen.integer(1, 2)), 40);
        const double tau = gen.uniform(0.0, 1.0);
        for (const auto& s : rkf::run_gain_schedule(model, RobustPolicy::robust(Tau(tau), gen.uniform(1e-3, 0.5)))) {
            EXPECT_GE(rkf::min_eigenvalue(s.phi), -1e-9 * rkf::operator_norm(s.phi));
        }
    }
}

TEST(RobustFilter, ConservatismGrowsWithTolerance)
{
    // Pointwise in t, trace(V_{t+1}) is non-decreasing in c. (The Loewner
    // order is not: a larger V_t gives a larger P_{t+1} and hence a smaller
    // theta_t, and V_{t+1} can lose mass in some direction.)
    const auto model = rkf::testing::example_model(300);
    for (double tau : {0.0, 1.0}) {
        std::vector<double> previous;
        for (double c : {0.0, 1e-3, 1e-2, 1e-1}) {
            const auto schedule = rkf::run_gain_schedule(model, RobustPolicy::robust(Tau(tau), c));
            std::vector<double> traces;
            for (const auto& s : schedule) {
                traces.push_back(s.distorted_cov.matrix().trace());
            }
            for (std::size_t t = 0; t < previous.size(); ++t) {
                EXPECT_GE(traces[t], previous[t]) << "c=" << c << " t=" << t;
            }
            previous = traces;
        }
    }
}

TEST(RobustFilter, GainsConverge)
{
    const auto model = rkf::testing::example_model(500);
    for (const auto& policy : {RobustPolicy::standard(), RobustPolicy::robust(Tau(0), 0.1),
                               RobustPolicy::robust(Tau(1), 0.1)}) {
        const auto gains = rkf::gains_of(rkf::run_gain_schedule(model, policy));
        std::size_t settled = 0;
        for (std::size_t t = 1; t < gains.size(); ++t) {
            if ((gains[t] - gains[t - 1]).norm() < 1e-9) {
                settled = t;
                break;
            }
        }
        // Baseline run: settles at t = 71 (standard), 36 (tau = 0), 37 (tau = 1).
        EXPECT_GT(settled, 0U) << policy.describe();
        EXPECT_LE(settled, 80U) << policy.describe();
        for (std::size_t t = 200; t < gains.size(); ++t) {
            EXPECT_LT(max_abs(gains[t], gains.back()), 1e-8) << policy.describe() << " t=" << t;
        }
    }
}

TEST(RobustFilter, CovariancesSymmetric)
{
    const auto model = rkf::testing::example_model(100);
    for (const auto& s : rkf::run_gain_schedule(model, RobustPolicy::robust(Tau(0.4), 0.1))) {
        for (const SymMatrix* m : {&s.nominal_cov, &s.distorted_cov, &s.phi}) {
            EXPECT_LE((m->matrix() - m->matrix().transpose()).cwiseAbs().maxCoeff(), 1e-14);
        }
        EXPECT_GT(rkf::min_eigenvalue(s.phi), 0.0);
    }
}

TEST(RobustFilter, DeterministicAndConsistentWithSchedule)
{
    Generator gen(44);
    const auto tm = gen.model(3, 2);
    const auto model = rkf::testing::to_model(tm, 100);
    const auto ys = simulate_observations(gen, tm, 101);
    const auto policy = RobustPolicy::robust(Tau(0.3), 0.05);
    const auto a = rkf::run_filter(model, policy, ys, "m");
    const auto b = rkf::run_filter(model, policy, ys, "m");
    const auto schedule = rkf::run_gain_schedule(model, policy);
    ASSERT_EQ(a.steps.size(), schedule.size());
    for (std::size_t t = 0; t < schedule.size(); ++t) {
        EXPECT_EQ(a.steps[t].state_pred, b.steps[t].state_pred);
        EXPECT_EQ(a.steps[t].gain, schedule[t].gain);
        EXPECT_EQ(a.steps[t].distorted_cov.matrix(), schedule[t].distorted_cov.matrix());
        EXPECT_EQ(a.steps[t].theta, schedule[t].theta);
    }
}

TEST(RobustFilter, ObservationCountChecked)
{
    const auto model = rkf::testing::example_model(10);
    const std::vector<Eigen::VectorXd> ys(5, Eigen::VectorXd::Zero(1));
    EXPECT_THROW(rkf::run_filter(model, RobustPolicy::standard(), ys), rkf::Error);
}

TEST(StateSpaceModel, GammaRuleDiagnosed)
{
    rkf::ModelData data;
    data.A = {Eigen::MatrixXd::Identity(2, 2)};
    data.B = {Eigen::MatrixXd::Identity(2, 2)};
    data.C = {Eigen::MatrixXd::Ones(1, 2)};
    data.D = {Eigen::MatrixXd::Ones(1, 2)};
    data.x0_mean = Eigen::Vector2d::Zero();
    data.x0_cov = Eigen::Matrix2d::Identity();
    data.horizon = 5;
    const auto issues = rkf::diagnose(data);
    ASSERT_FALSE(issues.empty());
    bool cites_gamma = false;
    for (const auto& s : issues) {
        cites_gamma |= s.find("Gamma") != std::string::npos;
    }
    EXPECT_TRUE(cites_gamma);
    EXPECT_THROW(rkf::StateSpaceModel{data}, rkf::Error);
}

TEST(StateSpaceModel, SingularGammaRejected)
{
    rkf::ModelData data;
    data.A = {Eigen::MatrixXd::Identity(1, 1)};
    data.B = {Eigen::MatrixXd::Ones(1, 2)};
    data.C = {Eigen::MatrixXd::Ones(1, 1)};
    data.D = {Eigen::MatrixXd::Ones(1, 2)};
    data.x0_mean = Eigen::VectorXd::Zero(1);
    data.x0_cov = Eigen::MatrixXd::Identity(1, 1);
    data.horizon = 3;
    EXPECT_FALSE(rkf::diagnose(data).empty());
}

TEST(StateSpaceModel, TimeVaryingSequences)
{
    rkf::ModelData data;
    data.horizon = 2;
    for (int t = 0; t <= 2; ++t) {
        data.A.push_back(Eigen::MatrixXd::Constant(1, 1, 0.5 + t));
    }
    data.B = {Eigen::MatrixXd(Eigen::RowVector2d(1, 0))};
    data.C = {Eigen::MatrixXd::Ones(1, 1)};
    data.D = {Eigen::MatrixXd(Eigen::RowVector2d(0, 1))};
    data.x0_mean = Eigen::VectorXd::Zero(1);
    data.x0_cov = Eigen::MatrixXd::Identity(1, 1);
    const rkf::StateSpaceModel model(data);
    EXPECT_DOUBLE_EQ(model.A(2)(0, 0), 2.5);
    EXPECT_DOUBLE_EQ(model.B(2)(0, 0), 1.0);
    data.A.pop_back();
    EXPECT_THROW(rkf::StateSpaceModel{data}, rkf::Error);
}
