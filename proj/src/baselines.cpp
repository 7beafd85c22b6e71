#include "surveymix/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "surveymix/counts.hpp"
#include "surveymix/errors.hpp"
#include "surveymix/normal_math.hpp"
#include "surveymix/samplers.hpp"

namespace surveymix {

StratumLayout stratum_layout(const SurveySample& sample) {
  sample.validate();
  std::map<int, std::size_t> index;
  for (const auto& r : sample.records) index.emplace(r.stratum_id, 0);
  StratumLayout out;
  for (auto& [id, idx] : index) {
    idx = out.ids.size();
    out.ids.push_back(id);
  }
  const std::size_t M = out.ids.size();
  std::vector<double> weight_sum(M, 0.0);
  out.count.assign(M, 0);
  out.record_stratum.resize(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const std::size_t m = index.at(sample.records[i].stratum_id);
    out.record_stratum[i] = m;
    weight_sum[m] += sample.weights[i];
    ++out.count[m];
  }
  const double total = std::accumulate(weight_sum.begin(), weight_sum.end(), 0.0);
  for (std::size_t m = 0; m < M; ++m) {
    out.weight.push_back(weight_sum[m] / static_cast<double>(out.count[m]));
    out.inclusion.push_back(1.0 / out.weight.back());
    out.share.push_back(weight_sum[m] / total);
  }
  return out;
}

std::vector<double> baseline_response(const SurveySample& sample) {
  const auto y = sample.values();
  return sample.space == ObservationSpace::Count ? log_transform_competitor(y) : y;
}

BaselinePriors BaselinePriors::from_response(std::span<const double> y) {
  if (y.size() < 2) throw ValidationError("priors: need at least two observations");
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  if (!(var > 0.0)) throw ValidationError("priors: response has zero variance");
  BaselinePriors p;
  p.beta_var = var;
  p.sigma2_scale = var / 2.0;
  p.tau2_scale = var / 2.0;
  return p;
}

namespace {

struct Recorder {
  const McmcSchedule& schedule;
  int total() const { return schedule.burn_in + schedule.iterations; }
  bool keep(int sweep) const {
    const int post = sweep - schedule.burn_in;
    return post > 0 && post % schedule.thin == 0;
  }
};

// Draw from N(P^{-1} b, P^{-1}) given the precision matrix P.
Eigen::VectorXd sample_from_precision(RngStream& rng, const Eigen::MatrixXd& precision, const Eigen::VectorXd& b) {
  const Eigen::MatrixXd L = cholesky_with_jitter(precision);
  const Eigen::VectorXd mean = L.transpose().triangularView<Eigen::Upper>().solve(
      L.triangularView<Eigen::Lower>().solve(b));
  Eigen::VectorXd z(b.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + L.transpose().triangularView<Eigen::Upper>().solve(z);
}

Eigen::MatrixXd correlation(std::span<const double> x, double kappa) { return gp_covariance(x, 1.0, kappa); }

}  // namespace

GpInputs gp_inputs(const StratumLayout& layout) {
  GpInputs in;
  for (std::size_t m = 0; m < layout.size(); ++m) {
    const double x = std::log(layout.weight[m]);
    auto it = std::find_if(in.x.begin(), in.x.end(), [x](double v) { return std::abs(v - x) <= 1e-12 * std::max(1.0, std::abs(x)); });
    if (it == in.x.end()) {
      in.stratum_input.push_back(in.x.size());
      in.x.push_back(x);
    } else {
      in.stratum_input.push_back(static_cast<std::size_t>(it - in.x.begin()));
    }
  }
  return in;
}

Eigen::MatrixXd gp_covariance(std::span<const double> x, double tau2, double kappa) {
  const auto G = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd C(G, G);
  for (Eigen::Index i = 0; i < G; ++i) {
    for (Eigen::Index j = 0; j < G; ++j) {
      C(i, j) = tau2 * std::exp(-kappa * std::abs(x[static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(j)]));
    }
  }
  return C;
}

std::vector<HtState> fit_ht(const SurveySample& sample, const BaselinePriors& priors, const McmcSchedule& schedule,
                            RngStream& rng) {
  schedule.validate();
  const auto y = baseline_response(sample);
  const double n = static_cast<double>(y.size());
  // Rescaled responses y_i / pi_i = beta + e_i / pi_i, e_i / pi_i ~ N(0, sigma2).
  std::vector<double> z(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) z[i] = y[i] * sample.weights[i];
  const double z_sum = std::accumulate(z.begin(), z.end(), 0.0);

  HtState st;
  st.sigma2 = std::inner_product(z.begin(), z.end(), z.begin(), 0.0) / n;
  Recorder rec{schedule};
  std::vector<HtState> kept;
  kept.reserve(static_cast<std::size_t>(schedule.kept()));
  for (int sweep = 1; sweep <= rec.total(); ++sweep) {
    const double prec = 1.0 / priors.beta_var + n / st.sigma2;
    st.beta = sample_normal(rng, (z_sum / st.sigma2) / prec, std::sqrt(1.0 / prec));
    double ss = 0.0;
    for (double v : z) ss += (v - st.beta) * (v - st.beta);
    st.sigma2 = sample_inverse_gamma(rng, priors.sigma2_shape + 0.5 * n, priors.sigma2_scale + 0.5 * ss);
    if (rec.keep(sweep)) kept.push_back(st);
  }
  return kept;
}

std::vector<ReState> fit_re(const SurveySample& sample, const BaselinePriors& priors, const McmcSchedule& schedule,
                            RngStream& rng) {
  schedule.validate();
  const auto layout = stratum_layout(sample);
  const std::size_t M = layout.size();
  if (M < 2) throw ValidationError("random-effects model needs at least 2 strata");
  const auto y = baseline_response(sample);
  const std::size_t n = y.size();
  const auto& ri = layout.record_stratum;

  // Design rows (1, pi, pi^2) and residual precisions 1 / pi_i^2.
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd prec_unit(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double pi = 1.0 / sample.weights[i];
    const auto r = static_cast<Eigen::Index>(i);
    X(r, 0) = 1.0;
    X(r, 1) = pi;
    X(r, 2) = pi * pi;
    prec_unit[r] = sample.weights[i] * sample.weights[i];
  }
  const Eigen::MatrixXd XtWX = X.transpose() * prec_unit.asDiagonal() * X;
  std::vector<double> prec_sum(M, 0.0);
  for (std::size_t i = 0; i < n; ++i) prec_sum[ri[i]] += prec_unit[static_cast<Eigen::Index>(i)];

  ReState st;
  st.gamma.assign(M, 0.0);
  st.sigma2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) st.sigma2 += y[i] * y[i] * prec_unit[static_cast<Eigen::Index>(i)];
  st.sigma2 /= static_cast<double>(n);
  st.tau2 = priors.tau2_scale;

  Recorder rec{schedule};
  std::vector<ReState> kept;
  kept.reserve(static_cast<std::size_t>(schedule.kept()));
  Eigen::VectorXd target(static_cast<Eigen::Index>(n));
  for (int sweep = 1; sweep <= rec.total(); ++sweep) {
    for (std::size_t i = 0; i < n; ++i) target[static_cast<Eigen::Index>(i)] = y[i] - st.gamma[ri[i]];
    Eigen::MatrixXd P = XtWX / st.sigma2;
    P.diagonal().array() += 1.0 / priors.beta_var;
    const Eigen::VectorXd b = X.transpose() * (prec_unit.cwiseProduct(target) / st.sigma2);
    const Eigen::VectorXd beta = sample_from_precision(rng, P, b);
    st.beta0 = beta[0];
    st.beta1 = beta[1];
    st.beta2 = beta[2];

    const Eigen::VectorXd fitted = X * beta;
    std::vector<double> resid_sum(M, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      resid_sum[ri[i]] += (y[i] - fitted[r]) * prec_unit[r];
    }
    double g_ss = 0.0;
    for (std::size_t m = 0; m < M; ++m) {
      const double prec = 1.0 / st.tau2 + prec_sum[m] / st.sigma2;
      st.gamma[m] = sample_normal(rng, (resid_sum[m] / st.sigma2) / prec, std::sqrt(1.0 / prec));
      g_ss += st.gamma[m] * st.gamma[m];
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double e = y[i] - fitted[r] - st.gamma[ri[i]];
      ss += e * e * prec_unit[r];
    }
    st.sigma2 = sample_inverse_gamma(rng, priors.sigma2_shape + 0.5 * static_cast<double>(n),
                                     priors.sigma2_scale + 0.5 * ss);
    st.tau2 = sample_inverse_gamma(rng, priors.tau2_shape + 0.5 * static_cast<double>(M),
                                   priors.tau2_scale + 0.5 * g_ss);
    if (rec.keep(sweep)) kept.push_back(st);
  }
  return kept;
}

namespace {

// log N(r | 0, tau2 R) up to a constant, from the Cholesky factor of R.
double gp_loglik(const Eigen::MatrixXd& chol_R, const Eigen::VectorXd& r, double tau2) {
  const Eigen::VectorXd u = chol_R.triangularView<Eigen::Lower>().solve(r);
  const double log_det = 2.0 * chol_R.diagonal().array().log().sum();
  return -0.5 * (log_det + static_cast<double>(r.size()) * std::log(tau2) + u.squaredNorm() / tau2);
}

}  // namespace

std::vector<GpState> fit_gp(const SurveySample& sample, const BaselinePriors& priors, const McmcSchedule& schedule,
                            RngStream& rng) {
  schedule.validate();
  const auto layout = stratum_layout(sample);
  const auto inputs = gp_inputs(layout);
  const std::size_t G = inputs.x.size();
  if (G < 2) throw ValidationError("GP model needs at least 2 distinct stratum weights");
  const auto y = baseline_response(sample);
  const std::size_t n = y.size();

  std::vector<std::size_t> rec_input(n);
  std::vector<double> count(G, 0.0), sum(G, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    rec_input[i] = inputs.stratum_input[layout.record_stratum[i]];
    count[rec_input[i]] += 1.0;
    sum[rec_input[i]] += y[i];
  }
  const auto Gi = static_cast<Eigen::Index>(G);
  Eigen::VectorXd x(Gi), ybar(Gi), cnt(Gi);
  for (std::size_t g = 0; g < G; ++g) {
    const auto k = static_cast<Eigen::Index>(g);
    x[k] = inputs.x[g];
    cnt[k] = count[g];
    ybar[k] = sum[g] / count[g];
  }

  GpState st;
  st.mu.assign(ybar.data(), ybar.data() + G);
  st.sigma2 = 2.0 * priors.sigma2_scale;
  st.tau2 = 2.0 * priors.tau2_scale;
  st.kappa = priors.kappa_shape / priors.kappa_rate;
  Eigen::MatrixXd chol_R = cholesky_with_jitter(correlation(inputs.x, st.kappa));

  Recorder rec{schedule};
  std::vector<GpState> kept;
  kept.reserve(static_cast<std::size_t>(schedule.kept()));
  for (int sweep = 1; sweep <= rec.total(); ++sweep) {
    // mu | rest: condition the GP prior on group means ybar_g ~ N(mu_g, sigma2 / n_g).
    const Eigen::MatrixXd K = st.tau2 * correlation(inputs.x, st.kappa);
    const Eigen::VectorXd prior_mean = st.beta * x;
    Eigen::MatrixXd KS = K;
    KS.diagonal() += (st.sigma2 * cnt.cwiseInverse());
    const Eigen::LLT<Eigen::MatrixXd> llt(KS);
    const Eigen::VectorXd post_mean = prior_mean + K * llt.solve(ybar - prior_mean);
    Eigen::MatrixXd post_cov = K - K * llt.solve(K);
    post_cov = 0.5 * (post_cov + post_cov.transpose());
    const Eigen::VectorXd mu = sample_mvn_chol(rng, post_mean, post_cov);
    st.mu.assign(mu.data(), mu.data() + G);

    // beta | mu, tau2, kappa.
    const Eigen::VectorXd Lx = chol_R.triangularView<Eigen::Lower>().solve(x);
    const Eigen::VectorXd Lmu = chol_R.triangularView<Eigen::Lower>().solve(mu);
    const double prec = 1.0 / priors.beta_var + Lx.squaredNorm() / st.tau2;
    st.beta = sample_normal(rng, (Lx.dot(Lmu) / st.tau2) / prec, std::sqrt(1.0 / prec));

    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - st.mu[rec_input[i]];
      ss += e * e;
    }
    st.sigma2 = sample_inverse_gamma(rng, priors.sigma2_shape + 0.5 * static_cast<double>(n),
                                     priors.sigma2_scale + 0.5 * ss);

    const Eigen::VectorXd r = mu - st.beta * x;
    const double quad = chol_R.triangularView<Eigen::Lower>().solve(r).squaredNorm();
    st.tau2 = sample_inverse_gamma(rng, priors.tau2_shape + 0.5 * static_cast<double>(G),
                                   priors.tau2_scale + 0.5 * quad);

    // Random-walk Metropolis on log kappa; Ga prior plus the log-scale Jacobian.
    const double prop = st.kappa * std::exp(priors.log_kappa_step * rng.normal());
    const Eigen::MatrixXd chol_prop = cholesky_with_jitter(correlation(inputs.x, prop));
    const auto log_target = [&](double kappa, const Eigen::MatrixXd& L) {
      return gp_loglik(L, r, st.tau2) + priors.kappa_shape * std::log(kappa) - priors.kappa_rate * kappa;
    };
    if (std::log(rng.uniform()) < log_target(prop, chol_prop) - log_target(st.kappa, chol_R)) {
      st.kappa = prop;
      chol_R = chol_prop;
    }
    if (rec.keep(sweep)) kept.push_back(st);
  }
  return kept;
}

StratumPredictive predictive(const HtState& s, const StratumLayout& layout) {
  StratumPredictive p;
  for (std::size_t m = 0; m < layout.size(); ++m) {
    const double pi = layout.inclusion[m];
    p.mean.push_back(s.beta * pi);
    p.sd.push_back(pi * std::sqrt(s.sigma2));
  }
  return p;
}

StratumPredictive predictive(const ReState& s, const StratumLayout& layout) {
  StratumPredictive p;
  for (std::size_t m = 0; m < layout.size(); ++m) {
    const double pi = layout.inclusion[m];
    p.mean.push_back(s.beta0 + s.beta1 * pi + s.beta2 * pi * pi + s.gamma[m]);
    p.sd.push_back(pi * std::sqrt(s.sigma2));
  }
  return p;
}

StratumPredictive predictive(const GpState& s, const StratumLayout& layout, const GpInputs& inputs) {
  StratumPredictive p;
  for (std::size_t m = 0; m < layout.size(); ++m) {
    p.mean.push_back(s.mu[inputs.stratum_input[m]]);
    p.sd.push_back(std::sqrt(s.sigma2));
  }
  return p;
}

GridSummary competitor_population_density(const std::vector<StratumPredictive>& draws,
                                          std::span<const double> shares, std::span<const double> grid) {
  std::vector<std::vector<double>> values;
  values.reserve(draws.size());
  for (const auto& d : draws) {
    if (d.mean.size() != shares.size()) throw ValidationError("predictive does not match stratum shares");
    std::vector<double> v(grid.size(), 0.0);
    for (std::size_t m = 0; m < shares.size(); ++m) {
      for (std::size_t g = 0; g < grid.size(); ++g) v[g] += shares[m] * normal_pdf(grid[g], d.mean[m], d.sd[m]);
    }
    values.push_back(std::move(v));
  }
  return summarize_posterior(grid, values);
}

GridSummary competitor_population_pmf(const std::vector<StratumPredictive>& draws, std::span<const double> shares,
                                      std::int64_t K) {
  const auto grid = support_grid(K);
  std::vector<std::vector<double>> values;
  values.reserve(draws.size());
  double tail = 0.0;
  for (const auto& d : draws) {
    if (d.mean.size() != shares.size()) throw ValidationError("predictive does not match stratum shares");
    std::vector<double> v(grid.size(), 0.0);
    for (std::size_t m = 0; m < shares.size(); ++m) {
      const auto p = rounded_normal_pmf(d.mean[m], d.sd[m], CutpointScheme::LogShift, K);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] += shares[m] * p.pmf[k];
      tail += shares[m] * p.tail_mass;
    }
    values.push_back(std::move(v));
  }
  auto summary = summarize_posterior(grid, values);
  summary.tail_mass = tail / static_cast<double>(draws.size());
  return summary;
}

}  // namespace surveymix
