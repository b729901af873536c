#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "intersub/spinstar.hpp"

using namespace intersub;

namespace {

constexpr double kPi = std::numbers::pi;

double max_abs(const CMatrix& m) { return m.cwiseAbs().maxCoeff(); }

// Reassembles Σ_j B_j tr f(N_j) style quantities: all eigenvalues of N_j
// with multiplicity B_j, sorted.
std::vector<std::pair<double, double>> spectrum(const SpinBlockSet& set, bool branch1) {
  std::vector<std::pair<double, double>> out;
  for (const auto& b : set.blocks) {
    const EigenSystem es = eigh(branch1 ? b.n1 : b.n0);
    for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k) {
      out.emplace_back(es.eigenvalues(k), b.degeneracy);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(ThermalPointer, Examples) {
  const PointerThermal hot = thermal_pointer(0.0);
  EXPECT_EQ(hot.lambda_plus, 0.5);
  EXPECT_EQ(hot.rho01, 0.0);
  const PointerThermal p = thermal_pointer(1.0);
  EXPECT_NEAR(p.lambda_plus, 0.731059, 1e-6);
  EXPECT_NEAR(p.lambda_minus, 0.268941, 1e-6);
  EXPECT_NEAR(std::abs(p.rho01), 0.231059, 1e-6);
  EXPECT_EQ(p.rho00, 0.5);
  EXPECT_NEAR(p.lambda_plus + p.lambda_minus, 1.0, 1e-15);
  EXPECT_NEAR(thermal_pointer(50.0).lambda_plus, 1.0, 1e-10);
  EXPECT_THROW(thermal_pointer(-0.1), DomainError);
  EXPECT_NEAR(thermal_pointer(1.0, PointerHamiltonian::Unit).lambda_plus,
              1.0 / (1.0 + std::exp(-2.0)), 1e-15);
}

TEST(ThermalPointer, HalfAngleRelations) {
  gen::Rng rng;
  for (int trial = 0; trial < gen::kTrials; ++trial) {
    const PointerThermal p = thermal_pointer(rng.uniform(0.01, 20.0));
    const double r = std::hypot(p.rho01, p.rho00 - p.lambda_plus);
    EXPECT_GT(r, 0.0);
    EXPECT_NEAR(std::sin(p.beta_e / 2), -(p.rho00 - p.lambda_plus) / r, 1e-12);
    EXPECT_NEAR(std::cos(p.beta_e / 2), p.rho01 / r, 1e-12);
  }
}

TEST(Degeneracy, Examples) {
  EXPECT_EQ(degeneracy_exact(4, 4), 1u);
  EXPECT_EQ(degeneracy_exact(4, 2), 3u);
  EXPECT_EQ(degeneracy_exact(4, 0), 2u);
  EXPECT_EQ(degeneracy_exact(2, 2), 1u);
  EXPECT_EQ(degeneracy_exact(2, 0), 1u);
  EXPECT_EQ(degeneracy_exact(1, 1), 1u);
  EXPECT_THROW(degeneracy_exact(4, 1), DomainError);
  EXPECT_THROW(degeneracy_exact(4, 6), DomainError);
  EXPECT_THROW(degeneracy_exact(65, 1), ResourceError);
}

TEST(Degeneracy, DimensionIdentityExact) {
  for (int l = 1; l <= 64; ++l) {
    unsigned __int128 sum = 0;
    for (int tj = l; tj >= 0; tj -= 2) {
      sum += static_cast<unsigned __int128>(degeneracy_exact(l, tj)) *
             static_cast<unsigned>(tj + 1);
    }
    EXPECT_TRUE(sum == (static_cast<unsigned __int128>(1) << l)) << "l=" << l;
  }
}

TEST(Degeneracy, LogSpaceBeyondSixtyFour) {
  for (int l : {65, 100, 128}) {
    double sum = 0.0;
    for (int tj = l; tj >= 0; tj -= 2) sum += degeneracy(l, tj) * (tj + 1);
    EXPECT_NEAR(sum / std::ldexp(1.0, l), 1.0, 1e-12) << "l=" << l;
  }
}

TEST(BranchBlocks, TimeZeroSpectrum) {
  const PointerThermal p = thermal_pointer(1.0);
  for (int l : {1, 2, 5}) {
    const SpinBlockSet set = branch_blocks(p, l, 1.0, 0.0);
    for (bool b1 : {false, true}) {
      const auto spec = spectrum(set, b1);
      std::vector<std::pair<double, double>> expected;
      for (int a = 0; a <= l; ++a) {
        const double v = std::pow(p.lambda_plus, a) * std::pow(p.lambda_minus, l - a);
        const double c = std::round(std::exp(std::lgamma(l + 1.0) - std::lgamma(a + 1.0) -
                                             std::lgamma(l - a + 1.0)));
        expected.emplace_back(v, c);
      }
      std::sort(expected.begin(), expected.end());
      // Collapse equal eigenvalues and compare multiplicities.
      std::size_t i = 0;
      for (const auto& [v, c] : expected) {
        double mult = 0.0;
        while (i < spec.size() && std::abs(spec[i].first - v) < 1e-12) mult += spec[i++].second;
        EXPECT_EQ(mult, c) << "l=" << l << " eigenvalue " << v;
      }
      EXPECT_EQ(i, spec.size());
    }
  }
}

TEST(BranchBlocks, SingleSpinMatchesDenseEvolution) {
  const PointerThermal p = thermal_pointer(1.0);
  const double t = kPi / 2;
  const SpinBlockSet set = branch_blocks(p, 1, 1.0, t);
  CMatrix rho(2, 2);
  rho << p.rho00, p.rho01, p.rho01, 1 - p.rho00;
  CMatrix v = CMatrix::Zero(2, 2);
  v(0, 0) = std::exp(cplx(0, -t / 2));
  v(1, 1) = std::exp(cplx(0, t / 2));
  EXPECT_LT(max_abs(set.blocks[0].n0 - v * rho * v.adjoint()), 1e-12);
  EXPECT_LT(max_abs(set.blocks[0].n1 - v.adjoint() * rho * v), 1e-12);
}

TEST(BranchBlocks, TracesNormalized) {
  const PointerThermal p = thermal_pointer(1.0);
  for (int l = 1; l <= 64; l += 7) {
    const auto tr = branch_traces(branch_blocks(p, l, 1.0, 0.37 * l));
    EXPECT_NEAR(tr[0], 1.0, 1e-10);
    EXPECT_NEAR(tr[1], 1.0, 1e-10);
  }
}

TEST(BranchBlocks, CachedModelMatchesEulerRoute) {
  gen::Rng rng;
  for (int trial = 0; trial < 100; ++trial) {
    const PointerThermal p = thermal_pointer(rng.uniform(0.0, 4.0));
    const int l = rng.integer(1, 24);
    const double g = rng.uniform(0.2, 2.0);
    const double t = rng.uniform(0.0, 8.0);
    const SpinBlockSet a = branch_blocks(p, l, g, t);
    const SpinBlockSet b = SpinStarModel(p, l, g).blocks_at(t);
    ASSERT_EQ(a.blocks.size(), b.blocks.size());
    for (std::size_t k = 0; k < a.blocks.size(); ++k) {
      EXPECT_LT(max_abs(a.blocks[k].n0 - b.blocks[k].n0), 1e-12);
      EXPECT_LT(max_abs(a.blocks[k].n1 - b.blocks[k].n1), 1e-12);
    }
  }
}

TEST(BranchBlocks, Limits) {
  const PointerThermal p = thermal_pointer(1.0);
  EXPECT_THROW(branch_blocks(p, 129, 1.0, 0.0), ResourceError);
  EXPECT_THROW(branch_blocks(p, 0, 1.0, 0.0), DomainError);
  std::size_t underflows = 0;
  branch_blocks(thermal_pointer(30.0), 128, 1.0, 0.1, &underflows);
  EXPECT_GT(underflows, 0u);
  EXPECT_EQ(SpinStarModel(p, 64, 1.0).underflow_count(), 0u);
}

TEST(Helstrom, TimeZeroAssignsEverythingToZero) {
  const PointerThermal p = thermal_pointer(1.0);
  const SpinBlockSet set = branch_blocks(p, 4, 1.0, 0.0);
  for (const auto& h : helstrom_blocks(set)) {
    for (int x : h.outcome) EXPECT_EQ(x, 0);
  }
  const OutcomeTable t = outcome_table(set, helstrom_blocks(set));
  EXPECT_NEAR(t[0][0], 1.0, 1e-12);
  EXPECT_NEAR(t[0][1], 1.0, 1e-12);
}

TEST(Helstrom, SingleSpinAnalyticPoint) {
  const OutcomeTable t = SpinStarModel(thermal_pointer(1.0), 1, 1.0).outcomes_at(kPi / 2);
  EXPECT_NEAR(t[0][0], 0.5 * (1 + std::tanh(0.5)), 1e-10);
  EXPECT_NEAR(t[0][0], 0.731059, 1e-6);
}

TEST(Helstrom, ProjectorsComplete) {
  const SpinBlockSet set = branch_blocks(thermal_pointer(0.7), 6, 1.0, 1.1);
  const auto hs = helstrom_blocks(set);
  for (std::size_t k = 0; k < hs.size(); ++k) {
    const CMatrix& v = hs[k].eig.eigenvectors;
    CMatrix p0 = CMatrix::Zero(v.rows(), v.rows());
    CMatrix p1 = p0;
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      (hs[k].outcome[static_cast<std::size_t>(c)] == 0 ? p0 : p1) += v.col(c) * v.col(c).adjoint();
    }
    EXPECT_LT(max_abs(p0 + p1 - CMatrix::Identity(v.rows(), v.rows())), 1e-10);
    EXPECT_LT(max_abs(p0 * p1), 1e-10);
  }
}

TEST(Observables, Examples) {
  const PointerThermal p = thermal_pointer(1.0);
  const ScanRecord zero = observables_at(p, 4, 8, 0.2, 1.0, 0.0);
  EXPECT_NEAR(zero.agreement, 1.0, 1e-12);
  EXPECT_NEAR(zero.bias, 0.8, 1e-12);
  const ScanRecord one = observables_at(p, 1, 1, 0.2, 1.0, kPi / 2);
  EXPECT_NEAR(one.p_out[0], 0.2 * 0.7310585786 + 0.8 * 0.2689414214, 1e-9);
  // Reference values carry four-digit inputs.
  EXPECT_NEAR(one.p_out[0], 0.36135, 5e-5);
  EXPECT_NEAR(one.bias, 0.16135, 5e-5);
  EXPECT_THROW(observables_at(p, 3, 8, 0.2, 1.0, 0.5), ConfigError);
  EXPECT_THROW(observables_at(p, 2, 8, 1.2, 1.0, 0.5), DomainError);
}

TEST(Observables, InfiniteTemperatureBranchesIndistinguishable) {
  const PointerThermal p = thermal_pointer(0.0);
  gen::Rng rng;
  for (int trial = 0; trial < 50; ++trial) {
    const double t = rng.uniform(0, 6);
    const ScanRecord r = observables_at(p, 4, 8, 0.3, 1.0, t);
    EXPECT_NEAR(r.p_correct_0 + r.p_correct_1, 1.0, 1e-12);
    EXPECT_NEAR(r.bias, std::abs(0.3 - r.p_out[0]), 1e-12);
    const ScanRecord ref = observables_at(p, 4, 8, 0.3, 1.0, 0.0);
    EXPECT_NEAR(r.p_out[0], ref.p_out[0], 1e-12);
  }
}

TEST(TimeScan, ExtremaAtHalfRecurrence) {
  const PointerThermal p = thermal_pointer(1.0);
  std::vector<double> grid;
  // gt = 0 and π give identical branches, where the tie rule makes
  // agreement trivially 1; only the interior is scanned.
  for (int k = 1; k < 200; ++k) grid.push_back(kPi * k / 200);
  const ScanSummary s = summarize(time_scan(p, 1, 2, 0.2, 1.0, grid));
  EXPECT_NEAR(s.t_max_agreement, kPi / 2, kPi / 200 + 1e-12);
  EXPECT_NEAR(s.t_min_bias, kPi / 2, kPi / 200 + 1e-12);
}

TEST(TimeScan, NearPurePointer) {
  const ScanSummary s =
      summarize(time_scan(thermal_pointer(50.0), 1, 2, 0.2, 1.0, default_time_grid(6.0, 240)));
  EXPECT_NEAR(s.max_agreement, 1.0, 1e-3);
}

TEST(TimeScan, TimeZeroOnly) {
  const auto recs = time_scan(thermal_pointer(1.0), 2, 4, 0.2, 1.0, {0.0});
  ASSERT_EQ(recs.size(), 1u);
  EXPECT_NEAR(recs[0].agreement, 1.0, 1e-12);
  EXPECT_NEAR(recs[0].bias, 0.8, 1e-12);
  EXPECT_THROW(time_scan(thermal_pointer(1.0), 2, 4, 0.2, 1.0, {}), ConfigError);
}

TEST(TimeScan, DefaultGrid) {
  const auto g = default_time_grid(6.0, 240);
  ASSERT_EQ(g.size(), 240u);
  EXPECT_EQ(g.front(), 0.025);
  EXPECT_EQ(g.back(), 6.0);
  EXPECT_THROW(default_time_grid(6.0, 0), ConfigError);
}

TEST(TimeScan, DeterministicAcrossWorkerCounts) {
  const SpinStarModel m(thermal_pointer(1.0), 8, 1.0);
  const auto grid = default_time_grid(6.0, 60);
  ::setenv("INTERSUB_THREADS", "1", 1);
  const auto a = time_scan(m, 64, 0.2, grid);
  ::setenv("INTERSUB_THREADS", "4", 1);
  const auto b = time_scan(m, 64, 0.2, grid);
  ::unsetenv("INTERSUB_THREADS");
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].agreement, b[i].agreement);
    EXPECT_EQ(a[i].bias, b[i].bias);
  }
}

TEST(LcgSweep, SingleObserver) {
  const auto rows = lcg_sweep(thermal_pointer(1.0), 8, 0.2, 1.0, default_time_grid(3.0, 30), {8});
  EXPECT_NEAR(rows[0].model.max_agreement, 1.0, 1e-12);
  EXPECT_NEAR(rows[0].bound_gamma, 1.0, 1e-12);
  EXPECT_THROW(lcg_sweep(thermal_pointer(1.0), 8, 0.2, 1.0, {1.0}, {3}), ConfigError);
}

TEST(DenseCheck, Examples) {
  const PointerThermal p = thermal_pointer(1.0);
  EXPECT_LT(dense_check(p, 2, 1.0, 0.7), 1e-8);
  EXPECT_LT(dense_check(p, 1, 1.0, 2.9), 1e-12);
  EXPECT_EQ(dense_check(p, 3, 1.0, 0.0), 0.0);
  EXPECT_THROW(dense_check(p, 7, 1.0, 0.1), ResourceError);
}

TEST(DenseCheck, RandomDraws) {
  gen::Rng rng;
  for (int l = 1; l <= 6; ++l) {
    for (int trial = 0; trial < 10; ++trial) {
      const PointerThermal p = thermal_pointer(rng.uniform(0.0, 5.0));
      EXPECT_LT(dense_check(p, l, 1.0, rng.uniform(0.0, 2 * kPi)), 1e-8) << "l=" << l;
    }
  }
}

TEST(SpinStarProperties, BranchNormalization) {
  gen::Rng rng;
  for (int trial = 0; trial < gen::kTrials; ++trial) {
    const PointerThermal p = thermal_pointer(rng.uniform(0.0, 5.0));
    const int l = rng.integer(1, 32);
    const OutcomeTable t = SpinStarModel(p, l, 1.0).outcomes_at(rng.uniform(0.0, 6.0));
    EXPECT_NEAR(t[0][0] + t[1][0], 1.0, 1e-10);
    EXPECT_NEAR(t[0][1] + t[1][1], 1.0, 1e-10);
  }
}

TEST(SpinStarProperties, Periodicity) {
  gen::Rng rng;
  for (int trial = 0; trial < gen::kTrials; ++trial) {
    const PointerThermal p = thermal_pointer(rng.uniform(0.1, 4.0));
    const int l = rng.integer(1, 16);
    const double g = rng.uniform(0.5, 2.0);
    const double t = rng.uniform(0.05, 3.0);
    const SpinStarModel m(p, l, g);
    const ScanRecord a = observables_at(m, 4 * l, 0.2, t);
    const ScanRecord b = observables_at(m, 4 * l, 0.2, t + kPi / g);
    EXPECT_NEAR(a.p_correct_0, b.p_correct_0, 1e-8);
    EXPECT_NEAR(a.p_correct_1, b.p_correct_1, 1e-8);
    EXPECT_NEAR(a.p_out[0], b.p_out[0], 1e-8);
    EXPECT_NEAR(a.agreement, b.agreement, 1e-8);
    EXPECT_NEAR(a.bias, b.bias, 1e-8);
  }
}

// The mean success probability is mirror-symmetric about gt = π/2.
TEST(SpinStarProperties, MeanSuccessSymmetricAboutHalfRecurrence) {
  gen::Rng rng;
  for (int trial = 0; trial < gen::kTrials; ++trial) {
    const PointerThermal p = thermal_pointer(rng.uniform(0.1, 4.0));
    const int l = rng.integer(1, 16);
    const double s = rng.uniform(0.0, kPi / 2);
    const SpinStarModel m(p, l, 1.0);
    const ScanRecord a = observables_at(m, l, 0.5, kPi / 2 - s);
    const ScanRecord b = observables_at(m, l, 0.5, kPi / 2 + s);
    EXPECT_NEAR(a.p_correct_0 + a.p_correct_1, b.p_correct_0 + b.p_correct_1, 1e-8);
  }
}

TEST(SpinStarProperties, EveryFieldSymmetricAboutHalfRecurrence) {
  gen::Rng rng;
  for (int trial = 0; trial < gen::kTrials; ++trial) {
    const PointerThermal p = thermal_pointer(rng.uniform(0.1, 4.0));
    const int l = rng.integer(1, 16);
    const double s = rng.uniform(0.0, kPi / 2);
    const SpinStarModel m(p, l, 1.0);
    const ScanRecord a = observables_at(m, 4 * l, 0.2, kPi / 2 - s);
    const ScanRecord b = observables_at(m, 4 * l, 0.2, kPi / 2 + s);
    EXPECT_NEAR(a.p_correct_0, b.p_correct_0, 1e-8) << "l=" << l;
    EXPECT_NEAR(a.p_correct_1, b.p_correct_1, 1e-8) << "l=" << l;
    EXPECT_NEAR(a.agreement, b.agreement, 1e-8) << "l=" << l;
    EXPECT_NEAR(a.bias, b.bias, 1e-8) << "l=" << l;
  }
}

TEST(SpinStarProperties, DenseEquivalence) {
  gen::Rng rng(7);
  for (int l = 1; l <= 6; ++l) {
    for (int trial = 0; trial < 10; ++trial) {
      EXPECT_LT(dense_check(thermal_pointer(rng.uniform(0.0, 5.0)), l, rng.uniform(0.3, 2.0),
                            rng.uniform(0.0, 6.0)),
                1e-8);
    }
  }
}

// Sweep configuration N = 1024, beta = 1, p0 = 0.2. Disagreement saturates at 1 in double precision for
// small l_cg, so it is compared through the exact complement (agreement).
// The bias half is expected to fail: min bias rises from l_cg = 1 to 2.
TEST(SpinStarProperties, MonotoneImprovementWithMacrofractionSize) {
  const auto rows = lcg_sweep(thermal_pointer(1.0), 1024, 0.2, 1.0, default_time_grid(6.0, 240),
                              {1, 2, 4, 8, 16, 32, 64});
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_GE(rows[i].model.max_agreement, rows[i - 1].model.max_agreement)
        << "l_cg=" << rows[i].l_cg;
    EXPECT_LE(rows[i].model.min_disagreement, rows[i - 1].model.min_disagreement);
    EXPECT_LE(rows[i].model.min_bias, rows[i - 1].model.min_bias) << "l_cg=" << rows[i].l_cg;
  }
}
