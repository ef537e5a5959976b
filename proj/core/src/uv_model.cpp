#include "widthlab/uv_model.hpp"

#include <cmath>

#include "widthlab/parameterization.hpp"

namespace widthlab {

std::string to_string(const UvParam& p) {
  switch (p.kind) {
    case UvParamKind::kNTP: return "ntp";
    case UvParamKind::kMuP: return "mup";
    case UvParamKind::kSP: {
      std::string s = "sp(c=" + std::to_string(p.c);
      while (s.back() == '0') s.pop_back();
      if (s.back() == '.') s.pop_back();
      return s + ")";
    }
  }
  return "unknown";
}

UvParamKind parse_uv_param(std::string_view name) {
  if (name == "ntp") return UvParamKind::kNTP;
  if (name == "sp") return UvParamKind::kSP;
  if (name == "mup") return UvParamKind::kMuP;
  throw ConfigError("unknown uv-model parameterization '" + std::string(name) + "'");
}

double UvState::effective_lr() const noexcept {
  return param.kind == UvParamKind::kSP ? eta * std::pow(n, -param.c) : eta;
}
double UvState::n_sp() const noexcept { return param.kind == UvParamKind::kSP ? n : 1.0; }
double UvState::n_ntp() const noexcept { return param.kind == UvParamKind::kNTP ? n : 1.0; }

namespace {

struct Scales {
  double a;
  double eta_u;
  double eta_v;
};

Scales scales_for(const UvParam& p, double n, double eta) {
  switch (p.kind) {
    case UvParamKind::kNTP: return {1.0 / std::sqrt(n), eta, eta};
    case UvParamKind::kMuP: return {1.0, eta * n, eta / n};
    case UvParamKind::kSP: {
      const double e = eta * std::pow(n, -p.c);
      return {1.0, e, e};
    }
  }
  return {1.0, eta, eta};
}

double sq(double v) { return v * v; }

bool out_of_range(double f, double lambda) {
  return !std::isfinite(f) || !std::isfinite(lambda) || std::abs(f) > kUvOverflowGuard;
}

}  // namespace

double uv_output(const UvWeights& w, const UvParam& param, std::span<const double> x) {
  const double n = static_cast<double>(w.u.rows());
  const Vector ux = matvec(w.u, x);
  return scales_for(param, n, 0.0).a * dot(w.v, ux);
}

double uv_kernel(const UvWeights& w, const UvParam& param, std::span<const double> x) {
  const double n = static_cast<double>(w.u.rows());
  const Vector ux = matvec(w.u, x);
  const double ux2 = dot(ux, ux);
  const double v2 = dot(w.v, w.v);
  const double x2 = dot(x, x);
  if (param.kind == UvParamKind::kMuP) return n * v2 * x2 + ux2 / n;
  return (ux2 + v2 * x2) / n;
}

UvInit uv_init(Rng& rng, const UvParam& param, std::size_t n, std::size_t d,
               std::span<const double> x, double y, double eta) {
  if (n < 1 || d < 1) throw ConfigError("uv_init: n and d must be >= 1");
  if (x.size() != d) throw ShapeError("uv_init: x has the wrong dimension");
  const double nd = static_cast<double>(n);
  const double dd = static_cast<double>(d);
  double var_u = 1.0, var_v = 1.0;
  if (param.kind == UvParamKind::kMuP) {
    var_u = 1.0 / dd;
    var_v = 1.0 / (nd * nd);
  } else if (param.kind == UvParamKind::kSP) {
    var_u = 1.0 / dd;
    var_v = 1.0 / nd;
  }
  UvInit out;
  out.weights.u = gaussian_matrix(rng, n, d, var_u);
  const Matrix v = gaussian_matrix(rng, n, 1, var_v);
  out.weights.v.assign(v.values().begin(), v.values().end());
  UvState& s = out.state;
  s.param = param;
  s.n = nd;
  s.eta = eta;
  s.y = y;
  s.x_norm2 = dot(x, x);
  if (!(s.x_norm2 > 0.0)) throw ConfigError("uv_init: ||x|| must be > 0");
  s.f = uv_output(out.weights, param, x);
  s.lambda = uv_kernel(out.weights, param, x);
  return out;
}

UvState uv_step(const UvState& s) {
  if (s.diverged) return s;
  const double eta = s.effective_lr();
  const double chi = s.chi();
  const double nsp = s.n_sp();
  const double nntp = s.n_ntp();
  UvState next = s;
  next.f = s.f * (1.0 + eta * eta * chi * chi * s.x_norm2 / nntp) - nsp * eta * chi * s.lambda;
  next.lambda =
      s.lambda + s.x_norm2 * eta * chi * (eta * chi * s.lambda - 4.0 * s.f / nsp) / nntp;
  next.diverged = out_of_range(next.f, next.lambda);
  return next;
}

UvTrajectory uv_closed_form(const UvState& initial, std::size_t steps) {
  UvTrajectory tr;
  UvState s = initial;
  tr.points.push_back({s.f, s.lambda});
  for (std::size_t t = 0; t < steps; ++t) {
    s = uv_step(s);
    if (s.diverged) {
      tr.diverged = true;
      break;
    }
    tr.points.push_back({s.f, s.lambda});
  }
  return tr;
}

UvTrajectory uv_explicit_train(UvWeights w, const UvParam& param, double eta,
                               std::span<const double> x, double y, std::size_t steps) {
  const std::size_t n = w.u.rows();
  const std::size_t d = w.u.cols();
  if (x.size() != d || w.v.size() != n) throw ShapeError("uv_explicit_train: shape mismatch");
  const Scales sc = scales_for(param, static_cast<double>(n), eta);
  UvTrajectory tr;
  tr.points.push_back({uv_output(w, param, x), uv_kernel(w, param, x)});
  for (std::size_t t = 0; t < steps; ++t) {
    const Vector ux = matvec(w.u, x);
    const double chi = sc.a * dot(w.v, ux) - y;
    // grad_u = a chi v x^T, grad_v = a chi u x; both use the pre-step weights.
    const Vector v_old = w.v;
    for (std::size_t i = 0; i < n; ++i) w.v[i] -= sc.eta_v * sc.a * chi * ux[i];
    for (std::size_t i = 0; i < n; ++i) {
      auto row = w.u.row(i);
      const double coef = sc.eta_u * sc.a * chi * v_old[i];
      for (std::size_t j = 0; j < d; ++j) row[j] -= coef * x[j];
    }
    const UvPoint p{uv_output(w, param, x), uv_kernel(w, param, x)};
    if (out_of_range(p.f, p.lambda)) {
      tr.diverged = true;
      break;
    }
    tr.points.push_back(p);
  }
  return tr;
}

double uv_loss_factor(const UvState& s) {
  const double eta = s.effective_lr();
  return eta * eta * s.x_norm2 * s.chi() * s.f / s.n_ntp() - eta * s.n_sp() * s.lambda;
}

bool loss_decreases(const UvState& s) {
  const double q = uv_loss_factor(s);
  return q > -2.0 && q < 0.0;
}

SharpnessChange sharpness_change(const UvState& s, double band) {
  const double eta = s.effective_lr();
  const double chi = s.chi();
  const double v = eta * chi * (eta * chi * s.lambda - 4.0 * s.f / s.n_sp());
  if (v > band) return SharpnessChange::kIncrease;
  if (v < -band) return SharpnessChange::kDecrease;
  return SharpnessChange::kBoundary;
}

bool sharpness_increases(const UvState& s) {
  return sharpness_change(s) == SharpnessChange::kIncrease;
}

bool uv_is_stable(const UvState& initial, std::size_t steps, double chi_growth_limit) {
  UvState s = initial;
  for (std::size_t t = 0; t < steps; ++t) {
    s = uv_step(s);
    if (s.diverged) return false;
  }
  return std::abs(s.chi()) <= chi_growth_limit * std::abs(initial.chi());
}

std::optional<double> uv_max_stable_lr(const UvParam& param, std::size_t n,
                                       std::span<const double> eta_grid,
                                       const UvStabilityOptions& opts) {
  if (eta_grid.empty()) throw ConfigError("uv_max_stable_lr: empty grid");
  if (opts.seeds == 0) throw ConfigError("uv_max_stable_lr: seeds must be >= 1");
  const double x[1] = {opts.x};
  double sum = 0.0;
  for (std::size_t s = 0; s < opts.seeds; ++s) {
    Rng rng(opts.seed + s, stream_id(streams::kUvInit, n));
    const UvInit init = uv_init(rng, param, n, 1, x, opts.y, 0.0);
    std::optional<double> best;
    for (double eta : eta_grid) {
      UvState st = init.state;
      st.eta = eta;
      if (!uv_is_stable(st, opts.steps, opts.chi_growth_limit)) break;
      best = eta;
    }
    if (!best) return std::nullopt;
    sum += *best;
  }
  return sum / static_cast<double>(opts.seeds);
}

UvSlope uv_slope_step(const UvSlope& s, UvParamKind kind, double n, double eta, double x,
                      double y) {
  const double nsp = kind == UvParamKind::kSP ? n : 1.0;
  const double nntp = kind == UvParamKind::kNTP ? n : 1.0;
  const double chi = s.g * x - y;
  UvSlope out;
  out.g = s.g * (1.0 + sq(eta * chi * x) / (nntp * nsp * nsp)) - eta * chi * x * s.k;
  out.k = s.k + eta / (nntp * nsp) * chi * x * (eta * chi * x * s.k / nsp - 4.0 * s.g / nsp);
  return out;
}

double uv_limit_kernel(UvParamKind kind) { return kind == UvParamKind::kSP ? 1.0 : 2.0; }

UvSlope uv_limit_slope_step(const UvSlope& s, UvParamKind kind, double eta, double x,
                            double y) {
  if (kind == UvParamKind::kMuP) return uv_slope_step(s, kind, 1.0, eta, x, y);
  const double chi = s.g * x - y;
  return {s.g - eta * chi * x * s.k, s.k};
}

std::vector<UvLimitRow> uv_limit_distance(UvParamKind kind, std::span<const std::size_t> widths,
                                          std::size_t steps, std::size_t seeds, double eta,
                                          std::uint64_t seed) {
  if (seeds == 0) throw ConfigError("uv_limit_distance: seeds must be >= 1");
  const UvParam param{kind, kind == UvParamKind::kSP ? 1.0 : 0.0};
  const double one[1] = {1.0};
  std::vector<UvLimitRow> rows;
  for (std::size_t n : widths) {
    std::vector<double> acc(steps + 1, 0.0);
    for (std::size_t s = 0; s < seeds; ++s) {
      Rng init_rng(seed + s, stream_id(streams::kUvInit, n));
      const UvInit init = uv_init(init_rng, param, n, 1, one, 0.0, eta);
      UvSlope fin{init.state.f, init.state.lambda};
      UvSlope lim{fin.g, uv_limit_kernel(kind)};
      // Data draws depend on the seed only, so every width sees the same points.
      Rng data_rng(seed + s, stream_id(streams::kUvData, 0));
      acc[0] += std::abs(fin.g - lim.g);
      for (std::size_t t = 1; t <= steps; ++t) {
        const double x = data_rng.normal();
        const double y = data_rng.normal();
        fin = uv_slope_step(fin, kind, static_cast<double>(n), eta, x, y);
        lim = uv_limit_slope_step(lim, kind, eta, x, y);
        acc[t] += std::abs(fin.g - lim.g);
      }
    }
    for (std::size_t t = 0; t <= steps; ++t)
      rows.push_back({n, t, acc[t] / static_cast<double>(seeds)});
  }
  return rows;
}

}  // namespace widthlab
