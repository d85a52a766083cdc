// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../support/gradcheck.hpp"
#include "commands.hpp"
#include "optinet/structures.hpp"
#include "optinet/train.hpp"
#include "optinet/verify.hpp"

using namespace optinet;
using cli::CheckKind;

namespace {

constexpr std::uint64_t kMasterSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome sweep(CheckKind check, double tolerance, std::size_t expected_rows) {
  cli::VerifyConfig cfg;
  cfg.checks = {check};
  const auto acts = nonlinear_activations();
  cfg.activations.assign(acts.begin(), acts.end());
  const auto rows = cli::verify_rows(cfg, kMasterSeed, 1);
  double worst = 0.0;
  std::string where;
  for (const auto& r : rows) {
    const double dev = std::isfinite(r.max_deviation) ? r.max_deviation : INFINITY;
    if (dev >= worst) {
      worst = dev;
      where = r.activation + (r.dim ? " dim=" + std::to_string(r.dim) + " draw=" + std::to_string(r.draw) : "");
    }
  }
  Outcome o;
  o.pass = rows.size() == expected_rows && worst <= tolerance;
  o.detail = "cases=" + std::to_string(rows.size()) + " max_dev=" + fmt(worst) + " (" + where +
             ") tol=" + fmt(tolerance);
  return o;
}

Outcome gradient_oracle() {
  constexpr double tol = 1e-5;
  constexpr int draws = 20;
  RngStream rng(mix_seed(kMasterSeed, 5));
  double worst = 0.0;
  std::size_t checked = 0, skipped = 0;
  std::string where;
  for (StructureKind kind : all_structure_kinds()) {
    for (int d = 0; d < draws; ++d) {
      StructureSpec s;
      s.kind = kind;
      s.width = 2 + rng.index(7);
      s.depth = 1 + rng.index(5);
      s.bias = d % 2 == 1;
      s.policy = d % 4 < 2 ? CoefficientPolicy::learnable() : CoefficientPolicy::paper_schedule();
      if (d % 5 == 4) s.sharing = Sharing::shared;
      StructureParams p = init_params(s, rng);
      for (Matrix& b : p.biases) for (double& v : b.values()) v = 0.1 * rng.normal();
      for (double& c : p.coefficients) c += 0.05 * rng.normal();
      const std::size_t batch = 1 + rng.index(3);
      Matrix x(s.width, batch), g(s.width, batch);
      for (double& v : x.values()) v = rng.normal();
      for (double& v : g.values()) v = rng.normal();
      const auto r = gradcheck::check_gradients(s, p, x, g);
      checked += r.checked;
      skipped += r.skipped;
      if (r.max_relative >= worst) {
        worst = r.max_relative;
        where = std::string(structure_name(kind)) + " draw=" + std::to_string(d);
      }
    }
  }
  return {worst <= tol && checked > 0,
          "kinds=" + std::to_string(all_structure_kinds().size()) + " draws=20 scalars=" + std::to_string(checked) +
              " skipped=" + std::to_string(skipped) + " max_rel=" + fmt(worst) + " (" + where + ") tol=" + fmt(tol)};
}

Outcome rate_separation() {
  cli::RaceConfig cfg;
  cfg.kappas = {10.0, 100.0, 1e4};
  cfg.eps = 1e-6;
  cfg.seeds = {1, 2, 3, 4, 5};
  cfg.algorithms = {Algorithm::gd, Algorithm::hb, Algorithm::agd};
  const auto rows = cli::race_rows(cfg, kMasterSeed, 1);
  std::map<std::pair<double, std::uint64_t>, std::map<Algorithm, std::size_t>> cells;
  bool converged = true;
  for (const auto& r : rows) {
    cells[{r.kappa, r.seed}][r.algorithm] = r.iterations;
    converged = converged && r.converged;
  }
  bool ok = converged && cells.size() == 15;
  double min_ratio = INFINITY;
  for (auto& [key, c] : cells) {
    ok = ok && c[Algorithm::agd] <= c[Algorithm::gd] && c[Algorithm::hb] <= c[Algorithm::gd];
    if (key.first == 1e4) {
      const double ratio = static_cast<double>(c[Algorithm::gd]) / static_cast<double>(c[Algorithm::agd]);
      min_ratio = std::min(min_ratio, ratio);
    }
  }
  ok = ok && min_ratio >= 5.0;
  return {ok, "cells=" + std::to_string(cells.size()) + " all_converged=" + (converged ? "yes" : "no") +
                  " min gd/agd at kappa=1e4: " + fmt(min_ratio) + " (need >= 5)"};
}

struct Comparison {
  StructureKind lower;
  StructureKind higher;
  std::size_t depth;
};

Outcome trend() {
  cli::SimulateConfig cfg;
  cfg.width = 32;
  cfg.samples = 2000;
  cfg.depths = {10, 20, 30};
  cfg.train.epochs = 300;
  cfg.seeds = {1, 2, 3, 4, 5};
  const auto rows = cli::simulate_rows(cfg, kMasterSeed, 1, &std::cerr);
  std::map<std::tuple<StructureKind, std::size_t, std::uint64_t>, double> mse;
  for (const auto& r : rows) mse[{r.structure, r.depth, r.seed}] = r.final_mse;
  std::map<std::pair<StructureKind, std::size_t>, double> med;
  for (const auto& m : cli::medians(cfg, rows)) med[{m.structure, m.depth}] = m.median_mse;

  std::vector<Comparison> wanted{{StructureKind::agd2_net, StructureKind::feedforward, 30}};
  for (std::size_t d : cfg.depths) {
    for (StructureKind k : cfg.structures) {
      if (k != StructureKind::admm_net) wanted.push_back({k, StructureKind::admm_net, d});
    }
  }
  bool ok = true;
  std::ostringstream detail;
  for (const auto& c : wanted) {
    std::size_t wins = 0;
    for (std::uint64_t s : cfg.seeds) wins += mse[{c.lower, c.depth, s}] < mse[{c.higher, c.depth, s}];
    const double lo = med[{c.lower, c.depth}];
    const double hi = med[{c.higher, c.depth}];
    const bool held = wins >= 4 && lo < hi;
    ok = ok && held;
    if (!held || c.higher != StructureKind::admm_net || c.lower == StructureKind::feedforward) {
      detail << "\n    " << structure_name(c.lower) << " < " << structure_name(c.higher) << " d=" << c.depth
             << ": seeds " << wins << "/5, medians " << lo << " vs " << hi << (held ? " ok" : " VIOLATED");
    }
  }
  detail << "\n    medians:";
  for (StructureKind k : cfg.structures) {
    detail << "\n      " << structure_name(k);
    for (std::size_t d : cfg.depths) detail << " d" << d << "=" << med[{k, d}];
  }
  return {ok, detail.str()};
}

double trajectory_gap(const ParamForward& a, const ParamForward& b) {
  double gap = 0.0;
  auto cmp = [&](const std::vector<Matrix>& x, const std::vector<Matrix>& y) {
    if (x.size() != y.size()) {
      gap = INFINITY;
      return;
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
      for (std::size_t i = 0; i < x[k].size(); ++i) {
        gap = std::max(gap, std::abs(x[k].values()[i] - y[k].values()[i]));
      }
    }
  };
  cmp(a.state.outputs, b.state.outputs);
  cmp(a.state.secondary, b.state.secondary);
  return gap;
}

Outcome reductions() {
  constexpr double tol = 1e-14;
  RngStream rng(mix_seed(kMasterSeed, 8));
  double worst = 0.0;
  std::size_t trials = 0;
  for (int draw = 0; draw < 10; ++draw) {
    const std::size_t depth = 2 + rng.index(7);
    const std::size_t width = 2 + rng.index(7);
    StructureSpec base;
    base.depth = depth;
    base.width = width;
    base.bias = true;

    StructureSpec hb = base, agd2 = base, admm = base;
    hb.kind = StructureKind::hb_net;
    agd2.kind = StructureKind::agd2_net;
    admm.kind = StructureKind::admm_net;
    std::vector<double> resnet;
    for (std::size_t k = 0; k < depth; ++k) resnet.insert(resnet.end(), {1.0, 0.0});
    std::vector<double> dense(depth * (depth + 1), 0.0);
    std::vector<double> dmr(depth * (depth + 1), 0.0);
    for (std::size_t k = 0; k < depth; ++k) {
      for (std::size_t j = 0; j <= k; ++j) dense[history_coefficient_index(k, j, false)] = 1.0;
      dmr[history_coefficient_index(k, k, false)] = 0.5;
      dmr[history_coefficient_index(k, k, true)] = 0.5;
    }
    hb.policy = CoefficientPolicy::constants(resnet);
    agd2.policy = CoefficientPolicy::constants(dense);
    admm.policy = CoefficientPolicy::constants(dmr);

    const std::pair<StructureSpec, StructureKind> pairs[] = {
        {hb, StructureKind::resnet_form}, {agd2, StructureKind::densenet_sum_form}, {admm, StructureKind::dmr_form}};
    for (const auto& [general, form_kind] : pairs) {
      StructureParams p = init_params(general, rng);
      for (Matrix& b : p.biases) for (double& v : b.values()) v = 0.2 * rng.normal();
      StructureSpec form = base;
      form.kind = form_kind;
      StructureParams q = p;
      q.coefficients.clear();
      const Vector x0 = gaussian(width, rng);
      worst = std::max(worst, trajectory_gap(forward_param(general, p, x0), forward_param(form, q, x0)));
      ++trials;
    }
  }
  return {worst <= tol, "trials=" + std::to_string(trials) + " max_dev=" + fmt(worst) + " tol=" + fmt(tol)};
}

Outcome zero_baseline() {
  const std::size_t n = 2000, dim = 32;
  RngStream rng(mix_seed(kMasterSeed, 9));
  const Dataset d = gaussian_dataset(n, dim, rng);
  StructureSpec s;
  s.kind = StructureKind::feedforward;
  s.depth = 1;
  s.width = dim;
  s.activation = Activation::identity();
  StructureParams p;
  p.weights = {Matrix(dim, dim)};
  const double mse = evaluate_mse(s, p, d);
  const double band = 3.0 / std::sqrt(static_cast<double>(n * dim));
  return {std::abs(mse - 1.0) <= band, "mse=" + std::to_string(mse) + " band=1+-" + fmt(band)};
}

}  // namespace

int main() {
  retain_freed_memory();
  const std::size_t kinds = nonlinear_activations().size();
  const std::size_t sweep_rows = kinds * 3 * 10;
  const std::vector<Criterion> criteria{
      {1, "feedforward vs gradient descent", 30, [&] { return sweep(CheckKind::lemma1, 1e-9, sweep_rows); }},
      {2, "antiderivative identity", 5, [&] { return sweep(CheckKind::antiderivative, 1e-6, kinds); }},
      {3, "agd form equivalence", 30, [&] { return sweep(CheckKind::agd_forms, 1e-8, sweep_rows); }},
      {4, "admm consistency", 30, [&] { return sweep(CheckKind::admm, 1e-9, sweep_rows); }},
      {5, "gradient oracle", 60, gradient_oracle},
      {6, "rate separation", 10, rate_separation},
      {7, "depth trend at desk scale", 900, trend},
      {8, "special-case reductions", 5, reductions},
      {9, "zero-network baseline", 5, zero_baseline},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.name << ": " << o.detail
              << " time=" << fmt(secs) << "s limit=" << c.time_limit_s << "s" << (in_time ? "" : " (over budget)")
              << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
