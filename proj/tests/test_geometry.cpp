#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "structbandit/geometry.hpp"
#include "structbandit/rng.hpp"

using namespace structbandit;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// E ||g||_2 for g ~ N(0, I_p): sqrt(2) * Gamma((p+1)/2) / Gamma(p/2).
double exact_l2_ball_width(int p) {
  return std::sqrt(2.0) * std::exp(std::lgamma((p + 1) / 2.0) - std::lgamma(p / 2.0));
}

VectorXd unit(int p, int i) {
  VectorXd e = VectorXd::Zero(p);
  e[i] = 1.0;
  return e;
}

}  // namespace

TEST_CASE("width of a singleton is near zero") {
  VectorXd v(3);
  v << 0.3, -1.2, 0.5;
  const auto est = estimate_width([&](const VectorXd& g) { return g.dot(v); }, 3, 100000, 5);
  CHECK(std::abs(est.mean) <= 3.0 * est.std_error);
}

TEST_CASE("width of the unit L2 ball matches the Gamma-ratio value") {
  for (int p : {2, 8, 32}) {
    const auto est =
        estimate_width([](const VectorXd& g) { return g.norm(); }, p, 100000, 17);
    CHECK(std::abs(est.mean - exact_l2_ball_width(p)) <= 3.0 * est.std_error);
  }
  CHECK(exact_l2_ball_width(2) == doctest::Approx(std::sqrt(M_PI / 2.0)));
}

TEST_CASE("width of the unit L1 ball at p=2 is 2/sqrt(pi)") {
  const auto model = StructureModel::l1(2, 1);
  const auto est = estimate_omega_width(model, 100000, 23);
  CHECK(std::abs(est.mean - 2.0 / std::sqrt(M_PI)) <= 3.0 * est.std_error);
}

TEST_CASE("width estimation input validation") {
  CHECK_THROWS_AS(estimate_width([](const VectorXd& g) { return g.norm(); }, 2, 1, 0),
                  InputError);
}

TEST_CASE("width estimation is deterministic and thread-count independent") {
  const auto support = [](const VectorXd& g) { return g.lpNorm<Eigen::Infinity>(); };
  const auto a = estimate_width(support, 4, 20000, 99, WidthTarget::OmegaR, 1);
  const auto b = estimate_width(support, 4, 20000, 99, WidthTarget::OmegaR, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  const auto c = estimate_width(support, 4, 20000, 100, WidthTarget::OmegaR, 1);
  CHECK(a.mean != c.mean);
}

TEST_CASE("width monotonicity and scaling on nested L1 balls") {
  const auto model = StructureModel::l1(6, 1);
  const auto support1 = [&](const VectorXd& g) { return model.dual_norm(g); };
  const auto w1 = estimate_width(support1, 6, 100000, 3);
  for (double c : {2.0, 10.0}) {
    const auto wc = estimate_width(
        [&](const VectorXd& g) { return c * model.dual_norm(g); }, 6, 100000, 3);
    // scaling: w(cA) = c w(A)
    CHECK(std::abs(wc.mean - c * w1.mean) <= 3.0 * (wc.std_error + c * w1.std_error));
    // monotonicity: A subset of cA for c > 1
    CHECK(w1.mean <= wc.mean + 3.0 * (w1.std_error + wc.std_error));
  }
}

TEST_CASE("error set membership") {
  const auto model = StructureModel::l1(4, 1);
  const VectorXd theta_star = unit(4, 0);
  const ErrorSetSpec spec{model, theta_star};

  CHECK(error_set_membership(spec, theta_star));
  CHECK_FALSE(error_set_membership(spec, 2.0 * theta_star));
  CHECK_FALSE(error_set_membership(spec, theta_star + 0.1 * unit(4, 1)));
  CHECK(error_set_membership(spec, 0.9 * theta_star));

  // error aligned with theta_star is excluded for every kind
  for (const auto& m :
       {StructureModel::l2(4), StructureModel::group_l12(4, {{0, 1}, {2, 3}}, 1),
        StructureModel::nuclear(2, 2, 1)}) {
    VectorXd ts = VectorXd::Zero(4);
    ts[0] = 1.0;
    CHECK_FALSE(error_set_membership(ErrorSetSpec{m, ts}, 2.0 * ts));
    CHECK(error_set_membership(ErrorSetSpec{m, ts}, ts));
  }
}

TEST_CASE("cap sampler emits unit members of the error cone") {
  const auto model = StructureModel::l1(8, 1);
  const VectorXd theta_star = unit(8, 0);
  CapSampler sampler(ErrorSetSpec{model, theta_star});

  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const VectorXd u = sampler.sample(seed);
    CHECK(std::abs(u.norm() - 1.0) <= 1e-12);
    CHECK(error_set_membership(sampler.spec(),
                               theta_star + sampler.probe_scale() * u));
  }
  CHECK(sampler.acceptance_rate() > 0.0);
  CHECK(sampler.acceptance_rate() <= 1.0);

  // determinism per seed
  CHECK(sampler.sample(7) == sampler.sample(7));
  CHECK(sampler.sample(7) != sampler.sample(8));
}

TEST_CASE("uniform sphere acceptance is a strict subset for the sparse cone") {
  const auto model = StructureModel::l1(8, 1);
  CapSampler sampler(ErrorSetSpec{model, unit(8, 0)});
  const double fraction = sampler.uniform_acceptance_fraction(20000, 11);
  CHECK(fraction > 0.0);
  CHECK(fraction < 1.0);
}

TEST_CASE("cap sampler works in thin high-dimensional cones") {
  // Uniform sphere proposals essentially never land in the sparse error
  // cone at p=64; the blended proposal must still deliver verified samples.
  const auto model = StructureModel::l1(64, 2);
  VectorXd theta_star = VectorXd::Zero(64);
  theta_star[0] = theta_star[1] = 1.0 / std::sqrt(2.0);
  CapSampler sampler(ErrorSetSpec{model, theta_star});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const VectorXd u = sampler.sample(seed);
    CHECK(std::abs(u.norm() - 1.0) <= 1e-12);
    CHECK(error_set_membership(sampler.spec(), theta_star + sampler.probe_scale() * u));
  }
}

TEST_CASE("restricted eigenvalue diagnostics") {
  const auto model = StructureModel::l1(4, 1);
  const VectorXd theta_star = unit(4, 0);
  CapSampler sampler(ErrorSetSpec{model, theta_star});

  SUBCASE("identity design gives 1/p for every direction") {
    const MatrixXd X = MatrixXd::Identity(4, 4);
    const auto diag = estimate_restricted_eigenvalue(X, sampler, 10, 5);
    CHECK(diag.kappa_hat == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(diag.t == 4);
    CHECK(diag.directions == 10);
  }

  SUBCASE("zero design gives zero") {
    const MatrixXd X = MatrixXd::Zero(6, 4);
    CHECK(estimate_restricted_eigenvalue(X, sampler, 5, 5).kappa_hat ==
          doctest::Approx(0.0));
  }

  SUBCASE("iid gaussian design concentrates near one") {
    const int p = 8, t = 50 * p;
    const auto model8 = StructureModel::l1(p, 1);
    CapSampler sampler8(ErrorSetSpec{model8, unit(p, 0)});
    SplitMix64 rng(77);
    MatrixXd X(t, p);
    for (int i = 0; i < t; ++i) X.row(i) = gaussian_vector(p, rng).transpose();
    const auto diag = estimate_restricted_eigenvalue(X, sampler8, 30, 5);
    CHECK(diag.kappa_hat >= 0.5);
    CHECK(diag.kappa_hat <= 1.5);
  }

  SUBCASE("minimum over a growing direction set is non-increasing in m") {
    SplitMix64 rng(3);
    MatrixXd X(12, 4);
    for (int i = 0; i < 12; ++i) X.row(i) = gaussian_vector(4, rng).transpose();
    double prev = std::numeric_limits<double>::infinity();
    for (int m : {1, 5, 20, 80}) {
      const double k = estimate_restricted_eigenvalue(X, sampler, m, 13).kappa_hat;
      CHECK(k <= prev + 1e-15);
      prev = k;
    }
  }
}

TEST_CASE("analytic default widths") {
  const auto l1 = StructureModel::l1(16, 2);
  CHECK(default_cap_width(l1) ==
        doctest::Approx(std::sqrt(2.0 * 2.0 * std::log(8.0)) + std::sqrt(2.0)));
  CHECK(default_cap_width(StructureModel::l2(16)) == doctest::Approx(4.0));
  const auto nuc = StructureModel::nuclear(4, 4, 2);
  CHECK(default_cap_width(nuc) == doctest::Approx(std::sqrt(3.0 * 2.0 * 8.0)));
  const auto grp = StructureModel::group_l12(8, {{0, 1}, {2, 3}, {4, 5}, {6, 7}}, 2);
  CHECK(default_cap_width(grp) == doctest::Approx(std::sqrt(2.0 * (2.0 + std::log(4.0)))));

  // the analytic omega bound upper-bounds the Monte-Carlo estimate
  for (const auto& m : {StructureModel::l1(16, 2), StructureModel::l2(8),
                        StructureModel::nuclear(4, 4, 2)}) {
    const auto est = estimate_omega_width(m, 20000, 9);
    CHECK(est.mean <= default_omega_width(m) + 3.0 * est.std_error);
  }
}

TEST_CASE("serialization of geometry records") {
  WidthEstimate est;
  est.mean = 1.25;
  est.std_error = 0.002;
  est.samples = 1000;
  const auto j = est.to_json();
  CHECK(j.at("mean").get<double>() == doctest::Approx(1.25));
  CHECK(j.at("target").get<std::string>() == "omega_r");

  REDiagnostic diag;
  diag.kappa_hat = 0.5;
  diag.t = 10;
  diag.directions = 3;
  CHECK(diag.to_json().at("kappa_hat").get<double>() == doctest::Approx(0.5));
}

TEST_CASE("restricted eigenvalue is positive past the width threshold (p=64)") {
  // 50 seeded runs with uniform-ball designs of length ceil(w^2(A_max) ln T)
  const int p = 64, horizon = 2000;
  const auto model = StructureModel::l1(p, 2);
  const double w = default_cap_width(model);
  const int t = static_cast<int>(std::ceil(w * w * std::log(double(horizon))));
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    SplitMix64 rng(derive_seed(seed, 0xba11));
    VectorXd theta_star = VectorXd::Zero(p);
    const int a = static_cast<int>(rng() % p);
    int b = static_cast<int>(rng() % p);
    while (b == a) b = static_cast<int>(rng() % p);
    theta_star[a] = theta_star[b] = 1.0 / std::sqrt(2.0);
    MatrixXd X(t, p);
    for (int i = 0; i < t; ++i) X.row(i) = ball_uniform(p, rng).transpose();
    CapSampler sampler(ErrorSetSpec{model, theta_star});
    if (estimate_restricted_eigenvalue(X, sampler, 50, derive_seed(seed, 0x4e)).kappa_hat >
        0.0)
      ++positive;
  }
  CHECK(positive >= 48);  // >= 95% of 50
}

TEST_CASE("an empty error cone raises the degenerate-cone error") {
  // at theta_star = 0 the membership inequality R(eps u) <= R(u) eps/2 fails
  // for every direction, so the cone is empty
  const auto model = StructureModel::l1(4, 1);
  CapSampler sampler(ErrorSetSpec{model, VectorXd::Zero(4)});
  CHECK_THROWS_AS(sampler.sample(1), DegenerateConeError);
  CHECK(sampler.acceptance_rate() == doctest::Approx(0.0));
}

TEST_CASE("generator moments match their distributions") {
  SplitMix64 rng(314159);
  const int n = 200000;
  double sum = 0.0, sq = 0.0, usum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(rng);
    sum += z;
    sq += z * z;
    usum += uniform01(rng);
  }
  CHECK(std::abs(sum / n) < 0.01);            // mean 0 (se ~ 0.0022)
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.02));  // variance 1
  CHECK(usum / n == doctest::Approx(0.5).epsilon(0.01));

  // sphere samples are unit and cover directions evenly in expectation
  VectorXd acc = VectorXd::Zero(5);
  for (int i = 0; i < 20000; ++i) {
    const VectorXd u = sphere_uniform(5, rng);
    CHECK(std::abs(u.norm() - 1.0) < 1e-12);
    acc += u;
  }
  CHECK((acc / 20000.0).norm() < 0.02);

  // ball radius follows r^p: E[||x||] = p/(p+1)
  double rsum = 0.0;
  for (int i = 0; i < 20000; ++i) rsum += ball_uniform(5, rng).norm();
  CHECK(rsum / 20000.0 == doctest::Approx(5.0 / 6.0).epsilon(0.02));
}
