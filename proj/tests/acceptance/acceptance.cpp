// Acceptance run: one PASS/FAIL line per criterion, exit status = failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "calibration/calibration.hpp"
#include "core/error.hpp"
#include "dispatch/robust.hpp"
#include "dispatch/uc_model.hpp"
#include "gmm/gmm.hpp"
#include "io/history.hpp"
#include "io/pipeline.hpp"
#include "sets/uncertainty_sets.hpp"

using namespace caus;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail, double seconds) {
  std::printf("criterion %2d: %s  %s [%.1f s]\n", id, pass ? "PASS" : "FAIL", detail.c_str(),
              seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

void run(int id, const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = Clock::now();
  try {
    const auto [pass, detail] = body();
    report(id, pass, detail, seconds_since(start));
  } catch (const std::exception& e) {
    report(id, false, std::string("threw: ") + e.what(), seconds_since(start));
  }
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

Matrix random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = z(rng);
  return a * a.transpose() + 0.2 * Matrix::Identity(n, n);
}

gmm::ConditionalGmm random_conditional(int k, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.2, 1.0);
  std::vector<double> w;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  double total = 0.0;
  for (int c = 0; c < k; ++c) {
    w.push_back(u(rng));
    total += w.back();
    means.push_back(Vector::NullaryExpr(m, [&](Eigen::Index) { return 4.0 * z(rng); }));
    covs.push_back(random_spd(m, rng));
  }
  for (double& x : w) x /= total;
  return gmm::ConditionalGmm::from_moments(w, means, covs);
}

int directions_for(int m) { return m == 1 ? 2 : sets::default_direction_count(m); }

sets::UnionSet random_caus(int k, int t, int m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> g(1.0, 9.0);
  std::vector<gmm::ConditionalGmm> models;
  std::vector<calibration::CalibratedRadius> radii;
  for (int p = 0; p < t; ++p) {
    models.push_back(random_conditional(k, m, rng));
    calibration::CalibratedRadius r;
    r.gamma = g(rng);
    r.period = p + 1;
    radii.push_back(r);
  }
  return sets::build_caus(models, radii, sets::make_directions(m, directions_for(m)));
}

// chi-square CDF in closed form for 1..3 degrees of freedom, inverted by bisection
double chi2_cdf(double x, int dof) {
  if (x <= 0.0) return 0.0;
  if (dof == 1) return std::erf(std::sqrt(x / 2.0));
  if (dof == 2) return 1.0 - std::exp(-x / 2.0);
  return std::erf(std::sqrt(x / 2.0)) - std::sqrt(2.0 * x / M_PI) * std::exp(-x / 2.0);
}

double chi2_quantile(double p, int dof) {
  double lo = 0.0, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (chi2_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::string data_path(const std::string& name) { return std::string(CAUS_DATA_DIR) + "/" + name; }

const json* find_method(const json& methods, const std::string& name) {
  for (const auto& m : methods)
    if (m.at("method") == name) return &m;
  return nullptr;
}

}  // namespace

int main() {
  const auto total_start = Clock::now();
  std::printf("acceptance: %s\n", CAUS_DATA_DIR);

  run(1, [] {
    const auto start = Clock::now();
    const auto model = io::synthetic_wind_model();
    const std::vector<Vector> covariates = {Vector{{40.0, 35.0}}, Vector{{55.0, 50.0}},
                                            Vector{{65.0, 60.0}}, Vector{{50.0, 45.0}}};
    std::vector<gmm::ConditionalGmm> conds;
    for (const auto& x : covariates) conds.push_back(gmm::condition(model, x));
    const auto dirs = sets::make_directions(2, 8);
    double worst_set = 1.0, worst_ellipsoids = 1.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      std::vector<calibration::CalibratedRadius> radii;
      for (std::size_t t = 0; t < conds.size(); ++t) {
        radii.push_back(calibration::calibrate(conds[t], 10000, 0.05, 100 * seed + t));
        radii.back().period = static_cast<int>(t) + 1;
      }
      const auto set = sets::build_caus(conds, radii, dirs);
      for (std::size_t t = 0; t < conds.size(); ++t) {
        const auto fresh = gmm::sample_conditional(conds[t], 10000, 7777 + 100 * seed + t);
        int in_set = 0, in_ellipsoids = 0;
        for (int i = 0; i < fresh.rows(); ++i) {
          const Vector p = fresh.row(i).transpose();
          in_set += set.containing_subset(static_cast<int>(t), p) >= 0;
          in_ellipsoids += calibration::union_score(conds[t], p) <= radii[t].gamma;
        }
        worst_set = std::min(worst_set, in_set / 10000.0);
        worst_ellipsoids = std::min(worst_ellipsoids, in_ellipsoids / 10000.0);
      }
    }
    const double secs = seconds_since(start);
    return std::make_pair(worst_set >= 0.94 && worst_ellipsoids >= 0.94 && secs < 60.0,
                          fmt("min coverage over 5 seeds x 4 periods: set %.4f, ellipsoid union "
                              "%.4f (>= 0.94), runtime %.1f s (< 60)",
                              worst_set, worst_ellipsoids, secs));
  });

  run(2, [] {
    const int kappa = calibration::order_statistic_rank(0.05, 10000);
    return std::make_pair(kappa == 9501, fmt("kappa(0.05, 10000) = %.0f (want 9501)", kappa));
  });

  run(3, [] {
    const auto start = Clock::now();
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    double worst = 0.0;
    int cases = 0;
    for (int k = 1; k <= 3; ++k)
      for (int t = 1; t <= 3; ++t) {
        const auto set = random_caus(k, t, 2, rng);
        for (int trial = 0; trial < 20; ++trial) {
          const Matrix obj = Matrix::NullaryExpr(t, 2, [&](Eigen::Index, Eigen::Index) { return z(rng); });
          const double a = sets::worst_case_milp(set, obj).value;
          const double b = sets::worst_case_enumerate(set, obj).value;
          worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
          ++cases;
        }
      }
    const double secs = seconds_since(start);
    return std::make_pair(worst <= 1e-6 && secs < 120.0,
                          fmt("%.0f cases, max relative difference %.2e (<= 1e-6), runtime %.1f s "
                              "(< 120)",
                              cases, worst, secs));
  });

  run(4, [] {
    std::mt19937_64 rng(4);
    int checked = 0, bad = 0;
    for (int m = 1; m <= 3; ++m)
      for (int k = 1; k <= 6; ++k)
        for (int t = 1; t <= 6; ++t) {
          const auto enc = sets::encode_milp(random_caus(k, t, m, rng));
          const int binaries = enc.block.num_binaries();
          const int auxiliaries = enc.block.num_variables() - binaries - t * m;
          bad += binaries != k * t || auxiliaries != k * t * m;
          ++checked;
        }
    return std::make_pair(bad == 0, fmt("%.0f (K, T, m) encodings counted, %.0f mismatches", checked, bad));
  });

  run(5, [] {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> g(0.5, 12.0);
    double worst = -std::numeric_limits<double>::infinity();
    for (int m = 1; m <= 3; ++m) {
      const auto dirs = sets::make_directions(m, directions_for(m));
      for (int trial = 0; trial < 50; ++trial) {
        const auto cond = random_conditional(1, m, rng);
        const auto& comp = cond.component(0);
        const double gamma = g(rng);
        const auto poly = sets::build_subset_polytope(comp, gamma, dirs);
        const Matrix l = comp.covariance.llt().matrixL();
        for (int i = 0; i < 10000; ++i) {
          Vector u = Vector::NullaryExpr(m, [&](Eigen::Index) { return z(rng); });
          u.normalize();
          const Vector p = comp.mean + std::sqrt(gamma) * l * u;
          const Vector slack = poly.d_matrix * p - poly.d_vector;
          for (int r = 0; r < slack.size(); ++r)
            worst = std::max(worst, slack(r) / std::max(1.0, std::abs(poly.d_vector(r))));
        }
      }
    }
    return std::make_pair(worst <= 1e-9,
                          fmt("150 covariances x 10^4 boundary points, max scaled violation %.2e "
                              "(<= 1e-9)",
                              worst));
  });

  run(6, [] {
    std::mt19937_64 rng(6);
    double worst = 0.0;
    std::string detail;
    for (int m = 1; m <= 3; ++m) {
      const auto cond = random_conditional(1, m, rng);
      const double gamma = calibration::calibrate(cond, 100000, 0.05, 60 + m).gamma;
      const double q = chi2_quantile(0.95, m);
      const double rel = std::abs(gamma / q - 1.0);
      worst = std::max(worst, rel);
      detail += fmt("m=%.0f gamma %.4f vs %.4f; ", m, gamma, q);
    }
    return std::make_pair(worst <= 0.04, detail + fmt("max relative error %.4f (<= 0.04)", worst));
  });

  json first_compare;
  double compare_seconds = 0.0;
  run(7, [&] {
    const auto start = Clock::now();
    first_compare = io::cmd_compare({{"config", data_path("compare_six_bus.json")}}).artifact;
    compare_seconds = seconds_since(start);
    const auto& methods = first_compare.at("methods");
    const double det = find_method(methods, "DO")->at("cost");
    const double caus = find_method(methods, "RO-caus")->at("cost");
    const double box = find_method(methods, "RO-box")->at("cost");
    const double rel = find_method(methods, "RO-caus")->at("reliability");
    const double slack = 1e-6 * std::max(1.0, box);
    const double reduction = (box - caus) / box;
    const bool order = det <= caus + slack && caus <= box + slack && reduction >= 0.005;

    // reliability must not drop as epsilon shrinks
    auto sweep = first_compare.at("sweep").get<std::vector<json>>();
    std::sort(sweep.begin(), sweep.end(), [](const json& a, const json& b) {
      return a.at("epsilon").get<double>() > b.at("epsilon").get<double>();
    });
    bool monotone = sweep.size() == 4;
    std::string trend;
    for (std::size_t i = 0; i < sweep.size(); ++i) {
      if (i > 0) monotone = monotone && sweep[i].at("reliability").get<double>() >=
                                            sweep[i - 1].at("reliability").get<double>();
      trend += fmt("%.4f ", sweep[i].at("reliability").get<double>());
    }
    const bool pass = order && rel >= 0.94 && monotone && compare_seconds < 600.0;
    return std::make_pair(
        pass, fmt("(a) DO %.1f <= CAUS %.1f <= box %.1f, ", det, caus, box) +
                  fmt("reduction %.2f%% (>= 0.5%%); (b) reliability %.4f (>= 0.94); ", 100.0 * reduction,
                      rel) +
                  "(c) sweep eps 0.2..0.01: " + trend + (monotone ? "non-decreasing" : "DECREASES") +
                  fmt("; runtime %.1f s (< 600)", compare_seconds));
  });

  run(8, [&] {
    // gaps of every robust solve in the comparison, then an independent
    // membership recheck of the CAUS and box certificates
    double worst_gap = 0.0;
    bool converged = true;
    if (!first_compare.is_null()) {
      for (const auto& m : first_compare.at("methods"))
        if (m.contains("gap")) {
          worst_gap = std::max(worst_gap, m.at("gap").get<double>());
          converged = converged && m.at("converged").get<bool>();
        }
      for (const auto& s : first_compare.at("sweep"))
        worst_gap = std::max(worst_gap, s.at("gap").get<double>());
    } else {
      converged = false;
    }
    const bool compare_members =
        !first_compare.is_null() && first_compare.at("checks").at("scenarios_are_members").get<bool>();

    const auto cfg = io::run_config_from_json(
        json::parse(io::read_file(data_path("compare_six_bus.json"))), CAUS_DATA_DIR);
    const auto form = dispatch::assemble(
        dispatch::instance_from_json(json::parse(io::read_file(cfg.instance))));
    gmm::EmConfig em;
    em.seed = cfg.fit_seed;
    const auto model = gmm::fit_gmm(io::read_history(cfg.history).samples, cfg.k, em).model;
    std::vector<gmm::ConditionalGmm> conds;
    std::vector<calibration::CalibratedRadius> radii;
    std::vector<SampleMatrix> samples;
    for (int t = 0; t < form.periods; ++t) {
      conds.push_back(gmm::condition(model, cfg.covariates[t]));
      auto full = calibration::calibrate_full(conds[t], cfg.n_samples, cfg.epsilon,
                                              cfg.calibration_seed + t);
      full.radius.period = t + 1;
      radii.push_back(full.radius);
      samples.push_back(full.samples);
    }
    dispatch::CcgConfig ccg;
    ccg.tolerance = cfg.ccg_tolerance;
    ccg.max_iterations = cfg.ccg_max_iterations;
    int scenarios = 0, outside = 0;
    for (const auto& set :
         {sets::build_caus(conds, radii, sets::make_directions(form.farms, cfg.j, cfg.direction_seed)),
          sets::to_union(sets::build_box(samples))}) {
      const auto sol = dispatch::solve_ccg(form, set, ccg);
      worst_gap = std::max(worst_gap, sol.gap);
      converged = converged && sol.converged;
      for (const auto& w : sol.worst_scenarios)
        for (int t = 0; t < w.rows(); ++t, ++scenarios) {
          double best = std::numeric_limits<double>::infinity();
          for (int k = 0; k < set.subsets(t); ++k)
            best = std::min(best, set.subset(t, k).max_violation(w.row(t).transpose()));
          outside += best > 1e-9;
        }
    }
    const bool pass = worst_gap <= 1e-4 && converged && compare_members && outside == 0;
    return std::make_pair(pass, fmt("max gap %.2e (<= 1e-4), all converged %.0f, ", worst_gap,
                                    converged) +
                                    fmt("comparison certificates members %.0f, rechecked %.0f "
                                        "period scenarios, %.0f outside",
                                        compare_members, scenarios, outside));
  });

  run(9, [] {
    Matrix cov(2, 2);
    cov << 1.0, 0.8, 0.8, 1.0;
    const gmm::JointGmm scalar(1, 1, {{1.0, Vector::Zero(2), cov}});
    const auto c = gmm::condition(scalar, Vector::Constant(1, 1.0));
    const double mean_err = std::abs(c.component(0).mean(0) - 0.8);
    const double var_err = std::abs(c.component(0).covariance(0, 0) - 0.36);

    std::mt19937_64 rng(9);
    std::normal_distribution<double> z;
    std::uniform_real_distribution<double> u(0.2, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<gmm::GaussianComponent> comps(3);
      for (auto& comp : comps) {
        comp.weight = u(rng);
        comp.mean = Vector::NullaryExpr(4, [&](Eigen::Index) { return 2.0 * z(rng); });
        comp.covariance = random_spd(4, rng);
      }
      double total = 0.0;
      for (const auto& comp : comps) total += comp.weight;
      for (auto& comp : comps) comp.weight /= total;
      const gmm::JointGmm model(2, 2, comps);
      const Vector x = Vector::NullaryExpr(2, [&](Eigen::Index) { return z(rng); });
      const auto cond = gmm::condition(model, x);
      // direct evaluation in extended precision
      std::vector<long double> w;
      long double sum = 0.0L;
      for (const auto& comp : comps) {
        using LM = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
        using LV = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
        const LM s = comp.covariance.topLeftCorner(2, 2).cast<long double>();
        const LV d = (x - comp.mean.head(2)).cast<long double>();
        w.push_back(comp.weight * std::exp(-0.5L * d.dot(s.inverse() * d)) / std::sqrt(s.determinant()));
        sum += w.back();
      }
      for (int k = 0; k < 3; ++k)
        worst = std::max(worst, std::abs(cond.component(k).weight - static_cast<double>(w[k] / sum)));
    }
    const bool pass = mean_err <= 1e-12 && var_err <= 1e-12 && worst <= 1e-10;
    return std::make_pair(pass, fmt("scalar mean error %.1e, variance error %.1e (<= 1e-12); "
                                    "100 random models max weight error %.1e (<= 1e-10)",
                                    mean_err, var_err, worst));
  });

  run(10, [&] {
    if (first_compare.is_null()) return std::make_pair(false, std::string("no first comparison run"));
    const auto second = io::cmd_compare({{"config", data_path("compare_six_bus.json")}}).artifact;
    const bool same = io::strip_timing(first_compare).dump() == io::strip_timing(second).dump();
    return std::make_pair(same, std::string("two comparison runs with fixed seeds ") +
                                    (same ? "match" : "DIFFER") + " after removing timing");
  });

  std::printf("acceptance: %d failed, total %.1f s\n", failures, seconds_since(total_start));
  return failures;
}
