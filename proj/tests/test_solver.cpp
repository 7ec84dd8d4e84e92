#include <nonlocal/solver.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace nonlocal;

namespace {

SolverConfig fig1_like(double dx, double T, double eps = 0.0) {
  return SolverConfig{
      .grid = Grid1D(-2.0, 3.0, dx),
      .kernel = Kernel::linear_decreasing(0.5),
      .v1 = VelocityModel::greenshields_squared(),
      .v2 = VelocityModel::estimation(eps),
      .initial = InitialDatum::piecewise_constant({-0.5, 0.5}, {0.25, 0.75, 0.25}),
      .final_time = T,
      .lambda = LambdaPolicy::paper_preset(),
      .snapshot_times = {T},
  };
}

WeightVector toy_weights() { return WeightVector{{0.75, 0.25}, 2, 0.25}; }

}  // namespace

TEST(Solver, ToyNonlocalField) {
  const State s{{0.2, 0.6, 0.4}, 0.2, 0.4, 0.0};
  const auto v1 = VelocityModel::greenshields_squared();
  const auto v2 = VelocityModel::identity();
  const auto f = nonlocal_field_naive(s, toy_weights(), v1, v2);
  EXPECT_NEAR(f.at(0), 0.6975, 1e-15);
  EXPECT_NEAR(f.at(1), 0.84, 1e-15);
  EXPECT_NEAR(f.at(2), 0.84, 1e-15);
  // ghost velocity: V1(0.75 * 0.2 + 0.25 * 0.6)
  EXPECT_NEAR(f.at(-1), 0.91, 1e-15);
  const auto next = step(s, f, 0.5, 0.25);
  EXPECT_NEAR(next.interior[1], 0.41775, 1e-15);
  EXPECT_NEAR(next.time, 0.125, 1e-15);

  const auto g = nonlocal_field_fast(s, toy_weights(), v1, v2);
  EXPECT_LE(relative_deviation(g, f), 1e-14);
}

TEST(Solver, PaperPresetLambda) {
  const auto setup = prepare(fig1_like(1e-3, 0.5));
  EXPECT_NEAR(setup.weights.front(), 0.003996, 1e-17);
  EXPECT_NEAR(setup.lambda, 1.0 / (3.0 * 0.003996 + 1.0), 1e-15);
  EXPECT_NEAR(setup.lambda, 0.988154, 1e-6);
  EXPECT_LE(setup.lambda, setup.bounds.lambda_max);
  EXPECT_TRUE(setup.sign_condition);
  EXPECT_TRUE(setup.kernel_monotone);
}

TEST(Solver, CflBoundIdentityModels) {
  SolverConfig c{
      .grid = Grid1D(0.0, 4.0, 0.1),
      .kernel = Kernel::constant(1.0),
      .v1 = VelocityModel::identity(),
      .v2 = VelocityModel::identity(),
      .initial = InitialDatum::piecewise_constant({1.0}, {1.0, 0.2}),
      .final_time = 0.1,
  };
  const auto setup = prepare(c);
  EXPECT_EQ(setup.weights.n_eta, 10u);
  EXPECT_NEAR(setup.bounds.lambda_max, 1.0 / 1.1, 1e-14);
  EXPECT_NEAR(cfl_lambda(c), 1.0 / 1.1, 1e-14);
  c.lambda = LambdaPolicy::fixed(0.95);
  EXPECT_THROW(prepare(c), ValidationError);
  c.lambda = LambdaPolicy::fixed(0.5);
  EXPECT_NO_THROW(prepare(c));
}

TEST(Solver, ConstantV1IsPureTransport) {
  const auto one = VelocityModel::custom([](double) { return 1.0; }, [](double) { return 0.0; }, Sign::Zero,
                                         Sign::Zero, {0.0, 1.0}, "one");
  SolverConfig c{
      .grid = Grid1D(0.0, 1.0, 0.01),
      .kernel = Kernel::linear_decreasing(0.1),
      .v1 = one,
      .v2 = VelocityModel::identity(),
      .initial = InitialDatum::piecewise_constant({0.2, 0.3}, {0.1, 0.9, 0.1}),
      .final_time = 0.1,
      .snapshot_times = {0.1},
  };
  const auto r = run(c);
  EXPECT_EQ(r.lambda, 1.0);
  bool warned = false;
  for (const auto& w : r.warnings) warned = warned || w.find("V1' vanishes") != std::string::npos;
  EXPECT_TRUE(warned);
  // lambda = 1 shifts the profile by one cell per step
  const auto& q = r.snapshots.back().q;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const double x = (j + 0.5) * 0.01;
    EXPECT_NEAR(q[j], (x > 0.3 && x < 0.4) ? 0.9 : 0.1, 1e-14) << j;
  }
}

TEST(Solver, NaiveAndFastMatchOracle) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto id = VelocityModel::identity();
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 64 + static_cast<std::size_t>(200 * U(rng));
    State s;
    s.interior.resize(n);
    for (double& q : s.interior) q = U(rng);
    s.ghost_left = U(rng);
    s.ghost_right = U(rng);
    const double dx = 1.0 / 128;
    const auto w = weights(trial % 2 ? Kernel::constant(0.2) : Kernel::linear_decreasing(0.3), dx);

    std::vector<double> ext(n + w.n_eta);
    for (std::size_t i = 0; i < ext.size(); ++i) ext[i] = extend(s, static_cast<std::ptrdiff_t>(i));
    const auto ref = oracle::sliding_sums(ext, w.gamma, n + 1);

    const auto naive = nonlocal_field_naive(s, w, id, id);
    const auto fast = nonlocal_field_fast(s, w, id, id);
    EXPECT_NEAR(naive.ghost, ref[0], 1e-15);
    EXPECT_NEAR(fast.ghost, ref[0], 1e-14);
    for (std::size_t j = 0; j < n; ++j) {
      EXPECT_NEAR(naive.v_at[j], ref[j + 1], 1e-15);
      EXPECT_NEAR(fast.v_at[j], ref[j + 1], 1e-14);
    }
  }
}

TEST(Solver, ConstantStateIsFixedPoint) {
  SolverConfig c = fig1_like(4e-3, 0.2);
  c.initial = InitialDatum::constant(0.4);
  for (auto path : {NonlocalPath::Naive, NonlocalPath::Fast}) {
    c.path = path;
    const auto r = run(c);
    for (double q : r.snapshots.back().q) ASSERT_EQ(q, 0.4);
  }
  c.initial = InitialDatum::constant(0.0);
  c.path = NonlocalPath::Naive;
  const auto r = run(c);
  for (double q : r.snapshots.back().q) ASSERT_EQ(q, 0.0);
}

TEST(Solver, ZeroFinalTime) {
  SolverConfig c = fig1_like(4e-3, 0.0);
  const auto r = run(c);
  EXPECT_EQ(r.steps, 0u);
  ASSERT_EQ(r.trace.size(), 1u);
  ASSERT_EQ(r.snapshots.size(), 1u);
  EXPECT_EQ(r.snapshots[0].time, 0.0);
}

TEST(Solver, SnapshotsAndFinalTime) {
  SolverConfig c = fig1_like(4e-3, 0.1);
  c.snapshot_times = {0.0, 0.05, 0.1};
  const auto r = run(c);
  EXPECT_EQ(r.trace.size(), r.steps + 1);
  EXPECT_EQ(r.trace.back().time, 0.1);
  EXPECT_EQ(r.steps, static_cast<std::size_t>(std::ceil(0.1 / r.dt - 1e-10)));
  ASSERT_EQ(r.snapshots.size(), 3u);
  const auto* mid = r.snapshot_at(0.05);
  ASSERT_NE(mid, nullptr);
  EXPECT_GE(mid->time, 0.05 - 1e-15);
  EXPECT_LT(mid->time - 0.05, r.dt);
  EXPECT_EQ(r.snapshot_at(0.1)->time, 0.1);
  EXPECT_EQ(r.snapshot_at(0.07), nullptr);

  c.snapshot_times = {0.2};
  EXPECT_THROW(run(c), ValidationError);
  c.snapshot_times = {0.05, 0.01};
  EXPECT_THROW(run(c), ValidationError);
}

TEST(Solver, ConfigErrors) {
  SolverConfig c = fig1_like(4e-3, 0.1);
  c.final_time = -1.0;
  EXPECT_THROW(prepare(c), ValidationError);
  // 20 cells but N_eta = 25
  c = fig1_like(4e-3, 0.1);
  c.grid = Grid1D(0.0, 0.08, 4e-3);
  EXPECT_THROW(prepare(c), ConfigError);
  // non-monotone kernel rejected with diagnostics, accepted without
  c = fig1_like(4e-3, 0.1);
  c.kernel = Kernel::piecewise({{0.0, 0.25, {1.0, 0, 0, 0}}, {0.25, 0.5, {3.0, 0, 0, 0}}});
  EXPECT_THROW(prepare(c), ValidationError);
  c.diagnostics = false;
  const auto setup = prepare(c);
  EXPECT_FALSE(setup.kernel_monotone);
  EXPECT_FALSE(setup.warnings.empty());
}

TEST(Solver, SignConditionWarning) {
  SolverConfig c = fig1_like(4e-3, 0.01);
  c.v2 = VelocityModel::greenshields_squared();  // both decreasing
  c.lambda = LambdaPolicy::cfl();
  const auto setup = prepare(c);
  EXPECT_FALSE(setup.sign_condition);
  bool warned = false;
  for (const auto& w : setup.warnings) warned = warned || w.find("opposite signs") != std::string::npos;
  EXPECT_TRUE(warned);
}

TEST(Solver, BothPathRecordsDeviation) {
  SolverConfig c = fig1_like(4e-3, 0.05, 0.5);
  c.path = NonlocalPath::Both;
  const auto r = run(c);
  EXPECT_EQ(r.path, "both");
  EXPECT_LE(r.max_path_deviation, 1e-12);
  EXPECT_GT(r.max_path_deviation, 0.0);
  c.path = NonlocalPath::Naive;
  const auto naive = run(c);
  EXPECT_EQ(naive.snapshots.back().q, r.snapshots.back().q);
}

TEST(Solver, StepRejectsNonFinite) {
  State s{{0.5, 0.5}, 0.5, 0.5, 0.0};
  NonlocalField f{1.0, {std::nan(""), 1.0}};
  EXPECT_THROW(step(s, f, 0.5, 0.1, 7), SolverError);
}

TEST(Solver, MonotoneDataStayMonotoneForBothKernels) {
  for (const auto& kernel : {Kernel::constant(0.5), Kernel::linear_decreasing(0.5)}) {
    for (bool increasing : {true, false}) {
      SolverConfig c{
          .grid = Grid1D(-2.0, 3.0, 1.0 / 128),
          .kernel = kernel,
          .v1 = increasing ? VelocityModel::greenshields_squared() : VelocityModel::quadratic_free(),
          .v2 = VelocityModel::identity(),
          .initial = InitialDatum::callable([increasing](double x) {
            const double s = 0.6 / (1.0 + std::exp(-x / 0.15));
            return increasing ? 0.2 + s : 0.8 - s;
          }),
          .final_time = 0.5,
      };
      const auto r = run(c);
      const auto want = increasing ? Monotonicity::NonDecreasing : Monotonicity::NonIncreasing;
      for (const auto& e : r.trace) ASSERT_EQ(e.monotonicity, want) << "step " << e.step;
    }
  }
}
