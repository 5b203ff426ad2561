// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmmflow/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iterator>
#include <limits>
#include <ostream>
#include <tuple>

#include "gmmflow/error.hpp"
#include "gmmflow/format.hpp"
#include "gmmflow/parallel.hpp"

namespace gmmflow {

namespace {

constexpr std::uint64_t kTrajectorySalt = 0x7452414A;  // "TRAJ"

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint64_t trajectory_seed(std::uint64_t seed, int d) {
  return derive_seed(derive_seed(seed, kTrajectorySalt), static_cast<std::uint64_t>(d));
}

double mean_of(const std::vector<double>& v, int* n_out) {
  double s = 0.0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      s += x;
      ++n;
    }
  *n_out = n;
  return n > 0 ? s / n : std::numeric_limits<double>::quiet_NaN();
}

double std_of(const std::vector<double>& v, double mean) {
  double s = 0.0;
  int n = 0;
  for (double x : v)
    if (std::isfinite(x)) {
      s += (x - mean) * (x - mean);
      ++n;
    }
  return n > 1 ? std::sqrt(s / (n - 1)) : 0.0;
}

// One instance, all K of the grid. Trajectory m of dimension d always starts
// from the same z_1, whatever the covariance.
std::vector<CellErrors> run_cells(const MixtureSpec& spec, const std::string& tag,
                                  const SweepConfig& cfg) {
  const int d = spec.dim();
  const std::size_t n = static_cast<std::size_t>(cfg.n_traj);
  const std::size_t nk = cfg.steps.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<CellErrors> cells(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    cells[k].d = d;
    cells[k].steps = cfg.steps[k];
    cells[k].sigma_tag = tag;
    cells[k].l2.assign(n, nan);
    cells[k].linf.assign(n, nan);
  }
  const std::uint64_t seed = trajectory_seed(cfg.seed, d);
  const SolveConfig ref_cfg{cfg.ref_steps, Integrator::kHeun, false};

  parallel_for(n, cfg.workers, [&](std::size_t m) {
    RngStream rng(seed, m);
    const Vector z1 = gaussian_vector(d, rng);
    Vector ref;
    try {
      ref = solve_eigen(spec, z1, ref_cfg).z_final;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumerical) throw;
      return;
    }
    for (std::size_t k = 0; k < nk; ++k) {
      try {
        const SolveConfig c{cfg.steps[k], cfg.approx_integrator, false};
        const Vector diff = solve_eigen(spec, z1, c).z_final - ref;
        cells[k].l2[m] = diff.norm();
        cells[k].linf[m] = diff.lpNorm<Eigen::Infinity>();
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumerical) throw;
      }
    }
  });
  for (CellErrors& c : cells)
    c.n_nonfinite = static_cast<int>(
        std::count_if(c.l2.begin(), c.l2.end(), [](double x) { return !std::isfinite(x); }));
  return cells;
}

void append_rows(ErrorReport& report, const SweepConfig& cfg, Norm norm) {
  const std::vector<Norm> norms =
      norm == Norm::kBoth ? std::vector<Norm>{Norm::kL2, Norm::kLinf} : std::vector<Norm>{norm};
  for (Norm nm : norms) {
    for (const CellErrors& c : report.cells) {
      const std::vector<double>& errs = nm == Norm::kL2 ? c.l2 : c.linf;
      int n_ok = 0;
      const double mean = mean_of(errs, &n_ok);
      ErrorRow row;
      row.norm = nm;
      row.d = c.d;
      row.steps = c.steps;
      row.h = 1.0 / c.steps;
      row.sigma_tag = c.sigma_tag;
      row.mean_error = mean;
      row.std_error = std_of(errs, mean);
      row.n_traj = cfg.n_traj;
      row.n_nonfinite = c.n_nonfinite;
      report.rows.push_back(std::move(row));
    }
  }
}

LineFit least_squares(const std::vector<std::pair<double, double>>& pts) {
  require(pts.size() >= 2, "fit: need at least two points");
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  require(sxx > 1e-300 * std::max(1.0, mx * mx), "fit: degenerate x range (all x equal)");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (const auto& [x, y] : pts) {
    const double r = y - (f.intercept + f.slope * x);
    f.residual += r * r;
  }
  f.r2 = syy > 0.0 ? 1.0 - f.residual / syy : 1.0;
  return f;
}

}  // namespace

std::string CovKind::tag() const {
  switch (type) {
    case Type::kCycle5FullSpd: return "cycle5_spd";
    case Type::kCycle5Diagonal: return "cycle5_diag";
    case Type::kIsotropic: return shortest(sigma);
    case Type::kUniformDiagonal: return "uniform_diag_" + shortest(lo) + "_" + shortest(hi);
  }
  return {};
}

std::vector<Vector> sample_means(MeanSampler kind, int J, double radius, int d, RngStream& rng) {
  require(J >= 1 && d >= 1, "sample_means: need J >= 1 and d >= 1");
  require(radius > 0.0, "sample_means: radius must be positive");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j) {
    Vector mu(d);
    switch (kind) {
      case MeanSampler::kBall: {
        Vector g = gaussian_vector(d, rng);
        while (g.norm() == 0.0) g = gaussian_vector(d, rng);
        const double r = radius * std::pow(rng.uniform(), 1.0 / d);
        mu = (r / g.norm()) * g;
        break;
      }
      case MeanSampler::kHypercube:
        for (int k = 0; k < d; ++k) mu(k) = radius * (2.0 * rng.uniform() - 1.0);
        break;
      case MeanSampler::kRademacherCorners:
        for (int k = 0; k < d; ++k) mu(k) = (rng.next_u64() >> 63) ? radius : -radius;
        break;
    }
    out.push_back(std::move(mu));
  }
  return out;
}

MixtureSpec build_instance(const InstanceConfig& cfg) {
  require(cfg.d >= 1 && cfg.num_components >= 1, "instance: need d >= 1 and J >= 1");
  const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(cfg.d));
  RngStream mean_rng(seed, 0);
  std::vector<Vector> means =
      sample_means(cfg.mean_sampler, cfg.num_components, cfg.radius, cfg.d, mean_rng);
  switch (cfg.cov.type) {
    case CovKind::Type::kCycle5FullSpd: {
      RngStream basis_rng(seed, 1);
      Matrix u = random_orthogonal(cfg.d, basis_rng);
      return MixtureSpec(std::move(means),
                         CovarianceSpec::eigen_factored(std::move(u), cycle5_spectrum(cfg.d)));
    }
    case CovKind::Type::kCycle5Diagonal:
      return MixtureSpec(std::move(means), CovarianceSpec::diagonal(cycle5_spectrum(cfg.d)));
    case CovKind::Type::kIsotropic:
      require(cfg.cov.sigma > 0.0, "instance: sigma must be positive");
      return MixtureSpec(std::move(means), CovarianceSpec::isotropic(cfg.cov.sigma, cfg.d));
    case CovKind::Type::kUniformDiagonal: {
      require(cfg.cov.lo > 0.0 && cfg.cov.hi >= cfg.cov.lo, "instance: need 0 < lo <= hi");
      RngStream diag_rng(seed, 2);
      Vector lambda(cfg.d);
      for (int k = 0; k < cfg.d; ++k)
        lambda(k) = cfg.cov.lo + (cfg.cov.hi - cfg.cov.lo) * diag_rng.uniform();
      return MixtureSpec(std::move(means), CovarianceSpec::diagonal(std::move(lambda)));
    }
  }
  fail(ErrorKind::kInvalidArgument, "instance: unknown covariance kind");
}

void SweepConfig::validate() const {
  require(!dims.empty() && !steps.empty(), "sweep: dims and steps must be nonempty");
  for (int d : dims) require(d >= 1, "sweep: dimensions must be >= 1");
  require(n_traj >= 1, "sweep: n_traj must be >= 1");
  require(num_components >= 1, "sweep: J must be >= 1");
  require(radius > 0.0, "sweep: radius M must be positive");
  require(ref_steps >= 1, "sweep: ref_K must be >= 1");
  for (int k : steps) {
    require(k >= 1, "sweep: step counts must be >= 1");
    if (approx_integrator == Integrator::kEuler)
      require(k < ref_steps, "sweep: ref_K must exceed every K of the grid");
    else
      require(k <= ref_steps, "sweep: ref_K must not be below any K of the grid");
  }
  if (norm != Norm::kL2)
    require(cov.is_diagonal() || !sigma_grid.empty(),
            "sweep: the l-infinity norm requires a diagonal covariance");
  for (double s : sigma_grid) require(s > 0.0, "sweep: sigma grid entries must be positive");
}

int ErrorReport::total_nonfinite() const {
  int n = 0;
  for (const CellErrors& c : cells) n += c.n_nonfinite;
  return n;
}

std::vector<ErrorRow> ErrorReport::select(Norm norm, int d, const std::string& tag) const {
  std::vector<ErrorRow> out;
  for (const ErrorRow& r : rows)
    if (r.norm == norm && (d < 0 || r.d == d) && (tag.empty() || r.sigma_tag == tag))
      out.push_back(r);
  return out;
}

ErrorReport run_error_sweep(const SweepConfig& cfg) {
  cfg.validate();
  ErrorReport report;
  for (int d : cfg.dims) {
    InstanceConfig ic{d, cfg.num_components, cfg.radius, cfg.mean_sampler, cfg.cov, cfg.seed};
    const MixtureSpec spec = build_instance(ic);
    for (CellErrors& c : run_cells(spec, cfg.cov.tag(), cfg)) report.cells.push_back(std::move(c));
  }
  append_rows(report, cfg, cfg.norm);
  return report;
}

ErrorReport run_sigma_sweep(const SweepConfig& cfg) {
  require(!cfg.sigma_grid.empty(), "sigma sweep: sigma grid is empty");
  cfg.validate();
  ErrorReport report;
  for (int d : cfg.dims) {
    for (double sigma : cfg.sigma_grid) {
      CovKind cov;
      cov.type = CovKind::Type::kIsotropic;
      cov.sigma = sigma;
      InstanceConfig ic{d, cfg.num_components, cfg.radius, cfg.mean_sampler, cov, cfg.seed};
      const MixtureSpec spec = build_instance(ic);
      for (CellErrors& c : run_cells(spec, cov.tag(), cfg)) report.cells.push_back(std::move(c));
    }
  }
  append_rows(report, cfg, Norm::kBoth);
  return report;
}

void write_error_csv(std::ostream& os, const ErrorReport& report) {
  os << "norm,d,K,h,sigma_tag,mean_error,std_error,n_traj,n_nonfinite\n";
  for (const ErrorRow& r : report.rows) {
    os << to_string(r.norm) << ',' << r.d << ',' << r.steps << ',' << fmt17(r.h) << ','
       << r.sigma_tag << ',' << fmt17(r.mean_error) << ',' << fmt17(r.std_error) << ','
       << r.n_traj << ',' << r.n_nonfinite << '\n';
  }
}

LineFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> logs;
  logs.reserve(points.size());
  for (const auto& [x, y] : points) {
    require(x > 0.0 && y > 0.0, "fit_loglog_slope: x and y must be positive");
    logs.emplace_back(std::log(x), std::log(y));
  }
  return least_squares(logs);
}

LineFit fit_log_growth(const std::vector<std::pair<double, double>>& points) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(points.size());
  for (const auto& [d, y] : points) {
    require(d > 0.0, "fit_log_growth: d must be positive");
    pts.emplace_back(std::log(d), y);
  }
  return least_squares(pts);
}

LineFit fit_linear(const std::vector<std::pair<double, double>>& points) {
  return least_squares(points);
}

namespace {

nlohmann::json fit_json(const LineFit& f) {
  return {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
}

bool usable(const std::vector<std::pair<double, double>>& pts) {
  for (const auto& [x, y] : pts)
    if (!(std::isfinite(y) && y > 0.0)) return false;
  return true;
}

}  // namespace

nlohmann::json summarize(const ErrorReport& report) {
  nlohmann::json out = {{"h_fits", nlohmann::json::array()},
                        {"d_fits", nlohmann::json::array()},
                        {"sigma_fits", nlohmann::json::array()},
                        {"total_nonfinite", report.total_nonfinite()}};
  // Groups keyed in first-seen order so output follows the sweep order.
  auto group_by = [&](auto key_of) {
    std::vector<std::pair<decltype(key_of(report.rows.front())), std::vector<ErrorRow>>> groups;
    for (const ErrorRow& r : report.rows) {
      const auto key = key_of(r);
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const auto& g) { return g.first == key; });
      if (it == groups.end()) {
        groups.push_back({key, {}});
        it = std::prev(groups.end());
      }
      it->second.push_back(r);
    }
    return groups;
  };
  if (report.rows.empty()) return out;

  for (const auto& [key, rows] :
       group_by([](const ErrorRow& r) { return std::tuple(r.norm, r.d, r.sigma_tag); })) {
    std::vector<std::pair<double, double>> pts;
    for (const ErrorRow& r : rows) pts.emplace_back(r.h, r.mean_error);
    nlohmann::json g = {{"norm", to_string(std::get<0>(key))},
                        {"d", std::get<1>(key)},
                        {"sigma_tag", std::get<2>(key)}};
    if (rows.size() < 2) {
      g["slope"] = nullptr;
      g["note"] = "undefined: single step size";
    } else if (!usable(pts)) {
      g["slope"] = nullptr;
      g["note"] = "undefined: non-positive or non-finite error";
    } else {
      g.update(fit_json(fit_loglog_slope(pts)));
    }
    out["h_fits"].push_back(g);
  }

  for (const auto& [key, rows] :
       group_by([](const ErrorRow& r) { return std::tuple(r.norm, r.steps, r.sigma_tag); })) {
    std::vector<std::pair<double, double>> pts;
    for (const ErrorRow& r : rows) pts.emplace_back(static_cast<double>(r.d), r.mean_error);
    nlohmann::json g = {{"norm", to_string(std::get<0>(key))},
                        {"K", std::get<1>(key)},
                        {"sigma_tag", std::get<2>(key)}};
    if (rows.size() < 2) {
      g["slope"] = nullptr;
      g["note"] = "undefined: single dimension";
    } else if (!usable(pts)) {
      g["slope"] = nullptr;
      g["note"] = "undefined: non-positive or non-finite error";
    } else {
      g.update(fit_json(fit_loglog_slope(pts)));
      g["log_growth_r2"] = fit_log_growth(pts).r2;
      g["linear_r2"] = fit_linear(pts).r2;
      const auto [lo, hi] = std::minmax_element(
          pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      g["ratio_max_min_d"] = hi->second / lo->second;
    }
    out["d_fits"].push_back(g);
  }

  for (const auto& [key, rows] :
       group_by([](const ErrorRow& r) { return std::tuple(r.norm, r.d, r.steps); })) {
    if (rows.size() < 2) continue;
    std::size_t best = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].mean_error < rows[best].mean_error) best = i;
    out["sigma_fits"].push_back({{"norm", to_string(std::get<0>(key))},
                                 {"d", std::get<1>(key)},
                                 {"K", std::get<2>(key)},
                                 {"argmin_tag", rows[best].sigma_tag},
                                 {"interior", best > 0 && best + 1 < rows.size()}});
  }
  return out;
}

std::string to_string(Norm n) {
  switch (n) {
    case Norm::kL2: return "l2";
    case Norm::kLinf: return "linf";
    case Norm::kBoth: return "both";
  }
  return {};
}

std::string to_string(MeanSampler s) {
  switch (s) {
    case MeanSampler::kBall: return "ball";
    case MeanSampler::kHypercube: return "hypercube";
    case MeanSampler::kRademacherCorners: return "corners";
  }
  return {};
}

Norm parse_norm(const std::string& s) {
  if (s == "l2") return Norm::kL2;
  if (s == "linf") return Norm::kLinf;
  if (s == "both") return Norm::kBoth;
  fail(ErrorKind::kInvalidArgument, "unknown norm '" + s + "' (expected l2, linf or both)");
}

MeanSampler parse_mean_sampler(const std::string& s) {
  if (s == "ball") return MeanSampler::kBall;
  if (s == "hypercube") return MeanSampler::kHypercube;
  if (s == "corners") return MeanSampler::kRademacherCorners;
  fail(ErrorKind::kInvalidArgument,
       "unknown mean sampler '" + s + "' (expected ball, hypercube or corners)");
}

CovKind parse_cov_kind(const std::string& s) {
  CovKind c;
  auto bad = [&]() {
    fail(ErrorKind::kInvalidArgument,
         "unknown covariance '" + s +
             "' (expected cycle5-spd, cycle5-diag, iso:<sigma>, uniform-diag:<lo>:<hi>)");
  };
  try {
    if (s == "cycle5-spd") {
      c.type = CovKind::Type::kCycle5FullSpd;
    } else if (s == "cycle5-diag") {
      c.type = CovKind::Type::kCycle5Diagonal;
    } else if (s.rfind("iso:", 0) == 0) {
      c.type = CovKind::Type::kIsotropic;
      c.sigma = parse_double(s.substr(4));
    } else if (s.rfind("uniform-diag:", 0) == 0) {
      c.type = CovKind::Type::kUniformDiagonal;
      const std::string rest = s.substr(13);
      const auto colon = rest.find(':');
      if (colon == std::string::npos) bad();
      c.lo = parse_double(rest.substr(0, colon));
      c.hi = parse_double(rest.substr(colon + 1));
    } else {
      bad();
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kFormat) bad();
    throw;
  }
  if (c.type == CovKind::Type::kIsotropic)
    require(c.sigma > 0.0, "covariance '" + s + "': sigma must be positive");
  if (c.type == CovKind::Type::kUniformDiagonal)
    require(c.lo > 0.0 && c.hi >= c.lo, "covariance '" + s + "': need 0 < lo <= hi");
  return c;
}

std::string cov_kind_spec(const CovKind& c) {
  switch (c.type) {
    case CovKind::Type::kCycle5FullSpd: return "cycle5-spd";
    case CovKind::Type::kCycle5Diagonal: return "cycle5-diag";
    case CovKind::Type::kIsotropic: return "iso:" + shortest(c.sigma);
    case CovKind::Type::kUniformDiagonal:
      return "uniform-diag:" + shortest(c.lo) + ":" + shortest(c.hi);
  }
  return {};
}

void to_json(nlohmann::json& j, const CovKind& c) { j = cov_kind_spec(c); }
void from_json(const nlohmann::json& j, CovKind& c) { c = parse_cov_kind(j.get<std::string>()); }

void to_json(nlohmann::json& j, const InstanceConfig& c) {
  j = nlohmann::json{{"d", c.d},
                     {"J", c.num_components},
                     {"M", c.radius},
                     {"mean_sampler", to_string(c.mean_sampler)},
                     {"cov", c.cov},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, InstanceConfig& c) {
  c.d = j.at("d").get<int>();
  c.num_components = j.at("J").get<int>();
  c.radius = j.at("M").get<double>();
  c.mean_sampler = parse_mean_sampler(j.at("mean_sampler").get<std::string>());
  c.cov = j.at("cov").get<CovKind>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const SweepConfig& c) {
  j = nlohmann::json{{"dims", c.dims},
                     {"steps", c.steps},
                     {"sigma_grid", c.sigma_grid},
                     {"n_traj", c.n_traj},
                     {"J", c.num_components},
                     {"M", c.radius},
                     {"mean_sampler", to_string(c.mean_sampler)},
                     {"cov", c.cov},
                     {"norm", to_string(c.norm)},
                     {"ref_K", c.ref_steps},
                     {"approx", to_string(c.approx_integrator)},
                     {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, SweepConfig& c) {
  if (j.contains("dims")) c.dims = j.at("dims").get<std::vector<int>>();
  if (j.contains("steps")) c.steps = j.at("steps").get<std::vector<int>>();
  if (j.contains("sigma_grid")) c.sigma_grid = j.at("sigma_grid").get<std::vector<double>>();
  if (j.contains("n_traj")) c.n_traj = j.at("n_traj").get<int>();
  if (j.contains("J")) c.num_components = j.at("J").get<int>();
  if (j.contains("M")) c.radius = j.at("M").get<double>();
  if (j.contains("mean_sampler"))
    c.mean_sampler = parse_mean_sampler(j.at("mean_sampler").get<std::string>());
  if (j.contains("cov")) c.cov = j.at("cov").get<CovKind>();
  if (j.contains("norm")) c.norm = parse_norm(j.at("norm").get<std::string>());
  if (j.contains("ref_K")) c.ref_steps = j.at("ref_K").get<int>();
  if (j.contains("approx"))
    c.approx_integrator = parse_integrator(j.at("approx").get<std::string>());
  if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
}

}  // namespace gmmflow
