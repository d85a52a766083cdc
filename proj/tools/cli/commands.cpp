#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "optinet/structures.hpp"

namespace optinet::cli {

namespace fs = std::filesystem;

namespace {

// Runs body(0..n-1) on up to `jobs` threads. Results must be written to
// per-index slots so output order never depends on scheduling.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& body) {
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next.store(n);
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory '" + dir.string() + "'" + (ec ? ": " + ec.message() : ""));
  }
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string header(const std::vector<std::string>& meta, const std::string& columns) {
  std::string s;
  for (const auto& line : meta) s += "# " + line + "\n";
  return s + columns + "\n";
}

Matrix verify_matrix(const VerifyConfig& cfg, std::uint64_t master_seed, std::size_t dim, std::size_t draw,
                     Vector& x0) {
  RngStream rng(mix_seed(mix_seed(master_seed, dim), draw));
  Matrix w = random_spd(dim, cfg.spectrum_min, cfg.spectrum_max, rng);
  x0 = gaussian(dim, rng);
  return w;
}

double default_tolerance(CheckKind kind) {
  switch (kind) {
    case CheckKind::lemma1: return kLemma1Tolerance;
    case CheckKind::antiderivative: return kAntiderivativeTolerance;
    case CheckKind::agd_forms: return kAgdFormsTolerance;
    case CheckKind::admm: return kAdmmTolerance;
  }
  return 0.0;
}

std::string loss_file_name(StructureKind kind, std::size_t depth, std::uint64_t seed) {
  return std::string(structure_name(kind)) + "_d" + std::to_string(depth) + "_s" + std::to_string(seed) + ".csv";
}

}  // namespace

std::size_t resolve_jobs(std::optional<std::size_t> flag) {
  std::size_t jobs = 1;
  if (flag) {
    jobs = *flag;
  } else if (const char* env = std::getenv("OPTINET_JOBS"); env && *env) {
    const std::string s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), jobs);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ConfigError("OPTINET_JOBS: expected a positive integer, got '" + s + "'");
    }
  }
  if (jobs == 0) throw ConfigError("jobs: must be >= 1");
  return jobs;
}

std::vector<VerifyRow> verify_rows(const VerifyConfig& cfg, std::uint64_t master_seed, std::size_t jobs) {
  struct Task {
    CheckKind check;
    std::size_t act;
    std::size_t dim;
    std::size_t draw;
  };
  std::vector<Task> tasks;
  for (CheckKind check : cfg.checks) {
    for (std::size_t a = 0; a < cfg.activations.size(); ++a) {
      if (check == CheckKind::antiderivative) {
        tasks.push_back({check, a, 0, 0});
        continue;
      }
      for (std::size_t dim : cfg.dims) {
        for (std::size_t draw = 0; draw < cfg.draws; ++draw) tasks.push_back({check, a, dim, draw});
      }
    }
  }

  std::vector<VerifyRow> rows(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t i) {
    const Task& t = tasks[i];
    const Activation& act = cfg.activations[t.act];
    const double tol = cfg.tolerance.value_or(default_tolerance(t.check));
    EquivalenceReport report;
    if (t.check == CheckKind::antiderivative) {
      report = check_antiderivative(act, -5.0, 5.0, 201, 1e-6, tol);
    } else {
      Vector x0;
      const Matrix w = verify_matrix(cfg, master_seed, t.dim, t.draw, x0);
      switch (t.check) {
        case CheckKind::lemma1: report = check_lemma1(act, w, x0, cfg.lemma1_layers, tol); break;
        case CheckKind::agd_forms: report = check_agd_forms(act, w, x0, cfg.agd_layers, tol); break;
        case CheckKind::admm: report = check_admm_consistency(act, w, x0, cfg.admm_layers, tol); break;
        case CheckKind::antiderivative: break;
      }
    }
    rows[i] = {check_name(t.check), std::string(act.name()), t.dim, t.draw, report.max_deviation, tol, report.pass};
  });
  return rows;
}

std::vector<RaceResult> race_rows(const RaceConfig& cfg, std::uint64_t master_seed, std::size_t jobs) {
  const std::size_t cells = cfg.kappas.size() * cfg.seeds.size();
  std::vector<std::vector<RaceResult>> per_cell(cells);
  RaceOptions options;
  options.max_iters = cfg.max_iters;
  options.algorithms = cfg.algorithms;
  parallel_for(cells, jobs, [&](std::size_t i) {
    const double kappa = cfg.kappas[i / cfg.seeds.size()];
    const std::uint64_t seed = cfg.seeds[i % cfg.seeds.size()];
    RngStream rng = RngStream(mix_seed(master_seed, seed)).derive(std::bit_cast<std::uint64_t>(kappa));
    for (const RaceRow& r : convergence_race(kappa, cfg.dim, cfg.eps, rng, options)) {
      per_cell[i].push_back({r.algorithm, kappa, seed, r.iterations, r.converged});
    }
  });
  std::vector<RaceResult> rows;
  for (auto& cell : per_cell) rows.insert(rows.end(), cell.begin(), cell.end());
  return rows;
}

std::uint64_t simulate_data_seed(std::uint64_t master_seed, std::uint64_t seed) { return mix_seed(master_seed, seed); }

std::uint64_t simulate_train_seed(std::uint64_t data_seed, StructureKind kind, std::size_t depth) {
  return mix_seed(data_seed, static_cast<std::uint64_t>(kind) * 1000 + depth);
}

StructureSpec simulate_spec(const SimulateConfig& cfg, StructureKind kind, std::size_t depth) {
  StructureSpec spec;
  spec.kind = kind;
  spec.depth = depth;
  spec.width = cfg.width;
  spec.policy = cfg.coefficients == CoefficientMode::learnable ? CoefficientPolicy::learnable()
                                                                : CoefficientPolicy::paper_schedule();
  spec.sharing = Sharing::per_layer;
  spec.activation = cfg.activation;
  spec.bias = cfg.bias;
  spec.hb_beta = cfg.hb_beta;
  spec.agd2_residual = cfg.agd2_residual;
  return spec;
}

std::vector<SimulateRow> simulate_rows(const SimulateConfig& cfg, std::uint64_t master_seed, std::size_t jobs,
                                       std::ostream* progress) {
  std::vector<Dataset> data;
  for (std::uint64_t seed : cfg.seeds) {
    RngStream rng(simulate_data_seed(master_seed, seed));
    data.push_back(gaussian_dataset(cfg.samples, cfg.width, rng));
  }

  const std::size_t per_structure = cfg.depths.size() * cfg.seeds.size();
  const std::size_t cells = cfg.structures.size() * per_structure;
  std::vector<SimulateRow> rows(cells);
  std::mutex progress_mutex;
  std::size_t done = 0;
  parallel_for(cells, jobs, [&](std::size_t i) {
    const StructureKind kind = cfg.structures[i / per_structure];
    const std::size_t depth = cfg.depths[(i % per_structure) / cfg.seeds.size()];
    const std::size_t s = i % cfg.seeds.size();
    const StructureSpec spec = simulate_spec(cfg, kind, depth);
    TrainConfig tc = cfg.train;
    tc.seed = simulate_train_seed(simulate_data_seed(master_seed, cfg.seeds[s]), kind, depth);

    const auto start = std::chrono::steady_clock::now();
    TrainResult result = train(spec, data[s], tc);
    SimulateRow row;
    row.structure = kind;
    row.depth = depth;
    row.seed = cfg.seeds[s];
    row.final_mse = result.losses.empty() ? evaluate_mse(spec, result.params, data[s]) : result.losses.back().mse;
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.losses = std::move(result.losses);
    rows[i] = std::move(row);

    if (progress) {
      std::lock_guard lock(progress_mutex);
      ++done;
      *progress << "[" << done << "/" << cells << "] " << structure_name(kind) << " depth=" << depth
                << " seed=" << rows[i].seed << " mse=" << num(rows[i].final_mse) << " time=" << std::fixed
                << std::setprecision(1) << rows[i].wall_time_s << "s" << std::defaultfloat << std::endl;
    }
  });
  return rows;
}

std::vector<MedianRow> medians(const SimulateConfig& cfg, const std::vector<SimulateRow>& rows) {
  std::vector<MedianRow> out;
  for (StructureKind kind : cfg.structures) {
    for (std::size_t depth : cfg.depths) {
      std::vector<double> v;
      for (const auto& r : rows) {
        if (r.structure == kind && r.depth == depth) v.push_back(r.final_mse);
      }
      if (v.empty()) continue;
      std::sort(v.begin(), v.end());
      const std::size_t n = v.size();
      const double m = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
      out.push_back({kind, depth, m});
    }
  }
  return out;
}

std::vector<std::string> metadata(const std::string& command, const std::string& resolved_json) {
  return {std::string("optinet ") + OPTINET_VERSION, "command: " + command, "rng: " + std::string(RngStream::algorithm()),
          "config: " + resolved_json};
}

int cmd_verify(const Loaded<VerifyConfig>& cfg, std::size_t jobs, std::ostream& log) {
  ensure_dir(cfg.common.out);
  const auto rows = verify_rows(cfg.command, cfg.common.seed, jobs);

  std::string csv = header(metadata("verify", cfg.resolved_json),
                           "check,activation,dim,draw,max_deviation,tolerance,pass");
  std::size_t failures = 0;
  for (const auto& r : rows) {
    const std::string dim = r.check == "antiderivative" ? "" : std::to_string(r.dim);
    const std::string draw = r.check == "antiderivative" ? "" : std::to_string(r.draw);
    csv += r.check + "," + r.activation + "," + dim + "," + draw + "," + num(r.max_deviation) + "," +
           num(r.tolerance) + "," + (r.pass ? "true" : "false") + "\n";
    if (!r.pass) ++failures;
  }
  const fs::path path = cfg.common.out / "verify.csv";
  write_file(path, csv);

  for (CheckKind kind : cfg.command.checks) {
    const std::string name = check_name(kind);
    double worst = 0.0;
    double tol = 0.0;
    bool pass = true;
    for (const auto& r : rows) {
      if (r.check != name) continue;
      worst = std::max(worst, r.max_deviation);
      tol = r.tolerance;
      pass = pass && r.pass;
    }
    log << std::left << std::setw(16) << name << " max_dev=" << num(worst) << " tol=" << num(tol) << "  "
        << (pass ? "PASS" : "FAIL") << '\n';
  }
  log << "wrote " << path.string() << '\n';
  return failures == 0 ? 0 : 1;
}

int cmd_race(const Loaded<RaceConfig>& cfg, std::size_t jobs, std::ostream& log) {
  ensure_dir(cfg.common.out);
  const auto rows = race_rows(cfg.command, cfg.common.seed, jobs);
  std::string csv = header(metadata("race", cfg.resolved_json), "algorithm,kappa,seed,iterations,converged");
  for (const auto& r : rows) {
    csv += std::string(algorithm_name(r.algorithm)) + "," + num(r.kappa) + "," + std::to_string(r.seed) + "," +
           std::to_string(r.iterations) + "," + (r.converged ? "true" : "false") + "\n";
  }
  const fs::path path = cfg.common.out / "race.csv";
  write_file(path, csv);

  for (double kappa : cfg.command.kappas) {
    log << "kappa=" << num(kappa);
    for (Algorithm alg : cfg.command.algorithms) {
      std::vector<std::size_t> counts;
      for (const auto& r : rows) {
        if (r.kappa == kappa && r.algorithm == alg) counts.push_back(r.iterations);
      }
      std::sort(counts.begin(), counts.end());
      log << "  " << algorithm_name(alg) << "=" << counts[counts.size() / 2];
    }
    log << "  (median iterations)\n";
  }
  log << "wrote " << path.string() << '\n';
  return 0;
}

int cmd_simulate(const Loaded<SimulateConfig>& cfg, std::size_t jobs, std::ostream& log) {
  const SimulateConfig& c = cfg.command;
  ensure_dir(cfg.common.out);
  if (c.write_losses) ensure_dir(cfg.common.out / "losses");
  // Fail on an unwritable directory before spending minutes on training.
  write_file(cfg.common.out / "simulate.csv", "");

  const auto rows = simulate_rows(c, cfg.common.seed, jobs, &log);
  const auto meta = metadata("simulate", cfg.resolved_json);

  std::string csv = header(meta, "structure,depth,seed,final_mse,wall_time_s");
  for (const auto& r : rows) {
    csv += std::string(structure_name(r.structure)) + "," + std::to_string(r.depth) + "," + std::to_string(r.seed) +
           "," + num(r.final_mse) + "," + num(r.wall_time_s) + "\n";
  }
  write_file(cfg.common.out / "simulate.csv", csv);

  std::string summary = header(meta, "structure,depth,median_final_mse");
  for (const auto& m : medians(c, rows)) {
    summary += std::string(structure_name(m.structure)) + "," + std::to_string(m.depth) + "," + num(m.median_mse) + "\n";
    log << std::left << std::setw(18) << structure_name(m.structure) << " depth=" << std::setw(4) << m.depth
        << " median_mse=" << num(m.median_mse) << '\n';
  }
  write_file(cfg.common.out / "simulate_summary.csv", summary);

  if (c.write_losses) {
    for (const auto& r : rows) {
      std::ostringstream os;
      std::vector<std::string> cell_meta = meta;
      cell_meta.push_back("cell: structure=" + std::string(structure_name(r.structure)) +
                          " depth=" + std::to_string(r.depth) + " seed=" + std::to_string(r.seed));
      write_loss_csv(os, r.losses, cell_meta);
      write_file(cfg.common.out / "losses" / loss_file_name(r.structure, r.depth, r.seed), os.str());
    }
  }
  log << "wrote " << (cfg.common.out / "simulate.csv").string() << '\n';
  return 0;
}

int cmd_export(const Loaded<ExportConfig>& cfg, std::ostream& log) {
  const ExportConfig& c = cfg.command;
  ensure_dir(cfg.common.out);
  for (StructureKind kind : c.structures) {
    for (std::size_t depth : c.depths) {
      StructureSpec spec;
      spec.kind = kind;
      spec.depth = depth;
      spec.width = c.width;
      spec.policy = c.coefficients == CoefficientMode::learnable ? CoefficientPolicy::learnable()
                                                                  : CoefficientPolicy::paper_schedule();
      const fs::path path = cfg.common.out / (std::string(structure_name(kind)) + "_d" + std::to_string(depth) + ".dot");
      write_file(path, export_dot(spec));
      log << "wrote " << path.string() << '\n';
    }
  }
  return 0;
}

}  // namespace optinet::cli
