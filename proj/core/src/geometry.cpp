#include "structbandit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "structbandit/rng.hpp"

namespace structbandit {

nlohmann::json WidthEstimate::to_json() const {
  return {{"mean", mean},
          {"std_error", std_error},
          {"samples", samples},
          {"target", target == WidthTarget::OmegaR ? "omega_r" : "cap_a"}};
}

nlohmann::json REDiagnostic::to_json() const {
  return {{"kappa_hat", kappa_hat}, {"t", t}, {"directions", directions}};
}

WidthEstimate estimate_width(const std::function<double(const Eigen::VectorXd&)>& support,
                             int dim, int samples, std::uint64_t seed, WidthTarget target,
                             int threads) {
  if (samples < 2) throw InputError("estimate_width: need at least 2 samples");
  if (dim < 1) throw InputError("estimate_width: dim must be positive");

  std::vector<double> values(static_cast<std::size_t>(samples));
  auto fill = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      SplitMix64 rng(derive_seed(seed, 0x77d7, static_cast<std::uint64_t>(i)));
      values[static_cast<std::size_t>(i)] = support(gaussian_vector(dim, rng));
    }
  };

  threads = std::max(1, std::min(threads, samples));
  if (threads == 1) {
    fill(0, samples);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (samples + threads - 1) / threads;
    for (int k = 0; k < threads; ++k) {
      const int begin = k * chunk;
      const int end = std::min(samples, begin + chunk);
      if (begin < end) pool.emplace_back(fill, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  const double mean = pairwise_sum(values) / samples;
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / (samples - 1);

  WidthEstimate est;
  est.mean = mean;
  est.std_error = std::sqrt(var / samples);
  est.samples = samples;
  est.target = target;
  return est;
}

bool error_set_membership(const ErrorSetSpec& spec, const Eigen::VectorXd& theta_hat) {
  const double lhs = spec.model.norm(theta_hat);
  const double rhs = spec.model.norm(spec.theta_star) +
                     spec.model.norm(theta_hat - spec.theta_star) / spec.rho;
  return lhs <= rhs + 1e-12 * (1.0 + std::abs(rhs));
}

CapSampler::CapSampler(ErrorSetSpec spec, double probe_scale)
    : spec_(std::move(spec)), probe_scale_(probe_scale) {
  if (spec_.theta_star.size() != spec_.model.dim())
    throw InputError("CapSampler: theta_star dimension mismatch");
  if (!(probe_scale_ > 0.0)) throw InputError("CapSampler: probe scale must be positive");
}

bool CapSampler::member_direction(const Eigen::VectorXd& unit_dir) const {
  return error_set_membership(spec_, spec_.theta_star + probe_scale_ * unit_dir);
}

Eigen::VectorXd CapSampler::sample(std::uint64_t seed) const {
  constexpr std::uint64_t kMaxDraws = 1000000;
  constexpr double kMinRate = 1e-4;
  const int p = spec_.model.dim();
  const double theta_norm = spec_.theta_star.norm();
  const bool have_anchor = theta_norm > 1e-12;
  const Eigen::VectorXd anchor =
      have_anchor ? Eigen::VectorXd(-spec_.theta_star / theta_norm)
                  : Eigen::VectorXd::Zero(p);

  for (std::uint64_t i = 0; i < kMaxDraws; ++i) {
    SplitMix64 rng(derive_seed(seed, 0xca9, i));
    Eigen::VectorXd cand = sphere_uniform(p, rng);
    // Half the candidates are blended toward the interior anchor direction;
    // the blend weight is uniform so candidates range from fully random to
    // fully anchored.
    if (have_anchor && uniform01(rng) < 0.5) {
      const double w = uniform01(rng);
      cand = (1.0 - w) * cand + w * anchor;
      const double nrm = cand.norm();
      if (nrm < 1e-12) continue;
      cand /= nrm;
    }
    const std::uint64_t seen = candidates_.fetch_add(1, std::memory_order_relaxed) + 1;
    if (member_direction(cand)) {
      accepted_.fetch_add(1, std::memory_order_relaxed);
      return cand;
    }
    if (seen >= kMaxDraws &&
        static_cast<double>(accepted_.load(std::memory_order_relaxed)) <
            kMinRate * static_cast<double>(seen)) {
      throw DegenerateConeError(
          "cap sampler: acceptance rate below 1e-4 over 1e6 draws (degenerate cone)");
    }
  }
  throw DegenerateConeError(
      "cap sampler: no acceptance within the candidate budget (degenerate cone)");
}

double CapSampler::acceptance_rate() const {
  const auto c = candidates_.load(std::memory_order_relaxed);
  if (c == 0) return 1.0;
  return static_cast<double>(accepted_.load(std::memory_order_relaxed)) /
         static_cast<double>(c);
}

double CapSampler::uniform_acceptance_fraction(int draws, std::uint64_t seed) const {
  if (draws < 1) throw InputError("uniform_acceptance_fraction: draws must be positive");
  const int p = spec_.model.dim();
  int accepted = 0;
  for (int i = 0; i < draws; ++i) {
    SplitMix64 rng(derive_seed(seed, 0xacc, static_cast<std::uint64_t>(i)));
    if (member_direction(sphere_uniform(p, rng))) ++accepted;
  }
  return static_cast<double>(accepted) / draws;
}

REDiagnostic estimate_restricted_eigenvalue(const Eigen::MatrixXd& X,
                                            const CapSampler& sampler, int m,
                                            std::uint64_t seed) {
  if (X.rows() < 1) throw InputError("estimate_restricted_eigenvalue: empty design");
  if (m < 1) throw InputError("estimate_restricted_eigenvalue: m must be positive");
  if (X.cols() != sampler.spec().model.dim())
    throw InputError("estimate_restricted_eigenvalue: design width mismatch");

  const double t = static_cast<double>(X.rows());
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd u = sampler.sample(derive_seed(seed, 0x4e, i));
    best = std::min(best, (X * u).squaredNorm() / t);
  }

  REDiagnostic d;
  d.kappa_hat = best;
  d.t = static_cast<int>(X.rows());
  d.directions = m;
  return d;
}

double default_cap_width(const StructureModel& model) {
  const double p = static_cast<double>(model.dim());
  switch (model.kind()) {
    case NormKind::L2:
      return std::sqrt(p);
    case NormKind::L1: {
      const double s = static_cast<double>(model.structure_size());
      return std::sqrt(2.0 * s * std::log(p / s)) + std::sqrt(s);
    }
    case NormKind::GroupL12: {
      const double sg = static_cast<double>(model.structure_size());
      std::size_t mg = 0;
      for (const auto& g : model.groups()) mg = std::max(mg, g.size());
      const double K = static_cast<double>(model.groups().size());
      return std::sqrt(sg * (static_cast<double>(mg) + std::log(K)));
    }
    case NormKind::Nuclear: {
      const double r = static_cast<double>(model.structure_size());
      return std::sqrt(3.0 * r * (model.rows() + model.cols()));
    }
  }
  return std::sqrt(p);
}

double default_omega_width(const StructureModel& model) {
  const double p = static_cast<double>(model.dim());
  switch (model.kind()) {
    case NormKind::L2:
      return std::sqrt(p);
    case NormKind::L1:
      return std::sqrt(2.0 * std::log(2.0 * p));
    case NormKind::GroupL12: {
      std::size_t mg = 0;
      for (const auto& g : model.groups()) mg = std::max(mg, g.size());
      const double K = static_cast<double>(model.groups().size());
      return std::sqrt(static_cast<double>(mg)) + std::sqrt(2.0 * std::log(2.0 * K));
    }
    case NormKind::Nuclear:
      return std::sqrt(static_cast<double>(model.rows())) +
             std::sqrt(static_cast<double>(model.cols()));
  }
  return std::sqrt(p);
}

WidthEstimate estimate_omega_width(const StructureModel& model, int samples,
                                   std::uint64_t seed, int threads) {
  return estimate_width([&model](const Eigen::VectorXd& g) { return model.dual_norm(g); },
                        model.dim(), samples, seed, WidthTarget::OmegaR, threads);
}

}  // namespace structbandit
