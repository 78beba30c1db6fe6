// Copyright 2026 The qpovm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// qpovm command-line interface.

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qpovm/qpovm.hpp"

namespace {

using namespace qpovm;
using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

/// JSON configuration files for CLI11: top-level keys are global options,
/// objects are sections named after sub-commands.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static void collect(const json& j, std::vector<std::string> parents, std::vector<CLI::ConfigItem>& out) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        auto p = parents;
        p.push_back(key);
        collect(value, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& v : value) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(value));
      }
      out.push_back(std::move(item));
    }
  }
};

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

/// Serialized output: every file goes through one writer that records it in
/// the manifest.
class OutputWriter {
 public:
  explicit OutputWriter(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& content) {
    io::atomic_write(dir_ / name, content);
    files_.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  }

  void write_json(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }

  const json& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  json files_ = json::array();
};

struct PovmSource {
  bool sic = false;
  bool demo = false;
  std::string file;

  void add_to(CLI::App* cmd) {
    auto* g = cmd->add_option_group("povm source");
    g->add_flag("--sic", sic, "Tetrahedral SIC-POVM");
    g->add_flag("--demo", demo, "Four-outcome demonstration POVM");
    g->add_option("--povm", file, "POVM JSON file")->check(CLI::ExistingFile);
    g->require_option(0, 1);
  }

  std::string describe() const { return demo ? "demo" : (!file.empty() ? file : "sic"); }

  /// SIC when nothing is specified.
  Povm resolve() const {
    if (demo) return demo_povm();
    if (!file.empty()) return io::povm_from_json(json::parse(io::read_file(file)));
    return sic_povm();
  }
};

Lowering parse_lowering(const std::string& s) {
  if (s == "givens") return Lowering::kGivens;
  if (s == "sqrtx") return Lowering::kSqrtX;
  if (s == "compact") return Lowering::kCompact;
  if (s == "minimal") return Lowering::kMinimal;
  throw ValidationError("unknown lowering '" + s + "'");
}

const std::vector<std::string> kLoweringNames{"givens", "sqrtx", "compact", "minimal"};

std::string fmt(double x) { return io::fmt(x); }

std::array<int, 3> three(const std::vector<int>& v, const char* what) {
  if (v.size() != 3) throw ValidationError(std::string(what) + " needs exactly three values");
  return {v[0], v[1], v[2]};
}

// ---------------------------------------------------------------------------
// Commands

int cmd_povm(const PovmSource& src, double tol, OutputWriter& out) {
  const Povm p = src.resolve();
  const auto report = validate_povm(p, tol);
  out.write_json("report.json", io::report_to_json(report));
  std::cout << "operators: " << p.size() << "  dim: " << p.dim() << '\n'
            << "psd violation: " << fmt(report.psd_violation) << "  completeness residual: "
            << fmt(report.completeness_residual) << '\n'
            << "status: " << report.message() << '\n';
  if (!report.valid) return kExitValidation;
  out.write_json("povm.json", io::povm_to_json(p));
  return kExitOk;
}

struct CompileOptions {
  std::string lowering = "compact";
  double ratio = 45.0;
  std::vector<int> samples{70, 60, 20};
  double dt_ns = kSampleDt * 1e9;
  bool generic = false;
};

int cmd_compile(const PovmSource& src, const CompileOptions& o, OutputWriter& out) {
  const Povm target = src.resolve();
  require_valid(target);
  const auto samples = three(o.samples, "--samples");
  const double dt = o.dt_ns * 1e-9;
  const auto grid = TransmonGrid::make(calibrate_params(5.0, o.ratio), 1);
  const auto freqs = grid.frame_freqs();
  GateSequence seq;
  if (src.demo && !o.generic) {
    seq = schedule_demo();
  } else {
    seq = lower_sequence(givens_decompose(build_naimark_unitary(target)), parse_lowering(o.lowering));
  }
  const PulseSchedule sched =
      compile_schedule(seq, freqs, {samples[0] * dt, samples[1] * dt, samples[2] * dt}, dt);
  const CMatrix u = ideal_unitary_of_schedule(sched, energies_from_frames(freqs));
  const double dod = operational_distance(target, povm_from_dilation(u));
  std::size_t sqrtx = 0;
  for (const auto& p : sched.pulses) sqrtx += std::abs(p.theta - kPi / 2.0) < 1e-12 ? 1 : 0;
  out.write_json("gates.json", io::gates_to_json(seq));
  out.write_json("schedule.json", io::schedule_to_json(sched));
  out.write("schedule.txt", schedule_text(sched));
  out.write_json("summary.json", {{"povm", src.describe()},
                                  {"pulses", sched.pulses.size()},
                                  {"sqrtx_pulses", sqrtx},
                                  {"pulses_per_transition", {sched.count(0), sched.count(1), sched.count(2)}},
                                  {"total_duration", sched.total_duration()},
                                  {"round_trip_d_od", dod}});
  std::cout << "pulses: " << sched.pulses.size() << " (sqrt-X: " << sqrtx << ")\n"
            << "transitions 01/12/23: " << sched.count(0) << '/' << sched.count(1) << '/' << sched.count(2) << '\n'
            << "round-trip D_OD: " << fmt(dod) << '\n';
  return dod < 1e-9 ? kExitOk : kExitRuntime;
}

struct SimOptions {
  double ratio = 45.0;
  int k = kChannelSamples;
  double t_max_ns = std::numeric_limits<double>::infinity();
  std::string lowering = "compact";
  std::vector<int> grid = default_duration_grid();
  double dt_ns = kSampleDt * 1e9;
  std::vector<double> ratios{30, 40, 50, 60, 70, 80};
  std::vector<double> t_max_list{std::numeric_limits<double>::infinity()};
};

SweepOptions sweep_options(const SimOptions& o, int threads) {
  SweepOptions s;
  s.k_samples = o.k;
  s.sample_dt = o.dt_ns * 1e-9;
  s.duration_grid = o.grid;
  s.lowering = parse_lowering(o.lowering);
  s.threads = threads;
  return s;
}

int cmd_simulate(const PovmSource& src, const SimOptions& o, int threads, OutputWriter& out) {
  const Povm target = src.resolve();
  require_valid(target);
  const SweepOptions so = sweep_options(o, threads);
  const GateSequence seq = lower_sequence(givens_decompose(build_naimark_unitary(target)), so.lowering);
  const RatioCalibration rc = calibrate_ratio(o.ratio, so);
  out.write("spectrum.csv", io::spectrum_csv(compute_spectrum(rc.grid.params)));
  const char* names[3] = {"calibration_01.csv", "calibration_12.csv", "calibration_23.csv"};
  for (int n = 0; n < 3; ++n) out.write(names[n], io::calibration_csv(rc.cal[n]));
  const std::array<std::size_t, 3> counts{count_givens(seq, 0), count_givens(seq, 1), count_givens(seq, 2)};
  const BudgetResult b = budgeted_schedule(rc.cal, counts, o.t_max_ns * 1e-9);
  DriveConfig drive;
  drive.sample_dt = so.sample_dt;
  drive.samples = b.samples;
  drive.amplitudes = b.amplitudes;
  const PulseSchedule sched = build_drive_schedule(seq, rc.grid.frame_freqs(), drive);
  const Povm sim = simulated_povm(sched, rc.grid);
  const double dod = operational_distance(target, sim);
  out.write_json("schedule.json", io::schedule_to_json(sched, false));
  out.write_json("sim_povm.json", io::povm_to_json(sim));
  out.write_json("summary.json", {{"povm", src.describe()},
                                  {"ej_ec", o.ratio},
                                  {"ec_ghz", rc.grid.params.ec},
                                  {"ej_ghz", rc.grid.params.ej},
                                  {"samples", b.samples},
                                  {"fidelities", b.fidelities},
                                  {"t_total_ns", b.total_duration * 1e9},
                                  {"d_od", dod}});
  std::cout << "E_J/E_C " << fmt(o.ratio) << "  E_C " << fmt(rc.grid.params.ec) << " GHz\n";
  for (int n = 0; n < 3; ++n) {
    std::cout << "sqrt-X " << n << "<->" << n + 1 << ": " << b.samples[n] << " samples, F = " << fmt(b.fidelities[n])
              << '\n';
  }
  std::cout << "total duration: " << io::fmt_ns(b.total_duration) << " ns\nD_OD: " << fmt(dod) << '\n';
  return kExitOk;
}

int cmd_sweep(const PovmSource& src, const SimOptions& o, int threads, OutputWriter& out) {
  const Povm target = src.resolve();
  require_valid(target);
  std::vector<double> t_max;
  for (double t : o.t_max_list) t_max.push_back(t * 1e-9);
  const auto rows = sweep_ejec(o.ratios, t_max, target, sweep_options(o, threads));
  out.write("sweep.csv", io::sweep_csv(rows));
  bool failed = false;
  for (const auto& r : rows) {
    std::cout << "E_J/E_C " << fmt(r.ratio) << "  t_max " << io::fmt_ns(r.t_max) << " ns  D_OD " << fmt(r.d_od)
              << "  total " << io::fmt_ns(r.t_total) << " ns";
    if (!r.error.empty()) {
      std::cout << "  error: " << r.error;
      failed = true;
    }
    std::cout << '\n';
  }
  return failed ? kExitRuntime : kExitOk;
}

struct TomoOptions {
  std::uint64_t shots = 100000;
  std::string confusion = "none";
  std::string counts_file;
  bool scaling = false;
  std::vector<double> grid{1e3, 3162, 1e4, 31623, 1e5, 316228, 1e6};
  int repetitions = 5;
  int max_iter = 10000;
  double tol = 1e-8;
};

int cmd_tomo(const PovmSource& src, const TomoOptions& o, std::uint64_t seed, int threads, OutputWriter& out) {
  const Povm target = src.resolve();
  require_valid(target);
  const auto states = stabilizer_states();
  MlOptions ml;
  ml.tol = o.tol;
  ml.max_iter = o.max_iter;
  if (o.scaling) {
    std::vector<std::uint64_t> grid;
    for (double g : o.grid) grid.push_back(static_cast<std::uint64_t>(std::llround(g)));
    const auto res = tomo_scaling_experiment(target, grid, seed, o.repetitions, threads, ml);
    out.write("scaling.csv", io::scaling_csv(res));
    out.write_json("scaling_fit.json", {{"slope", res.slope}, {"intercept", res.intercept}});
    for (const auto& r : res.rows) std::cout << r.n_tomo << "  D_OD " << fmt(r.d_od) << '\n';
    std::cout << "fitted slope: " << fmt(res.slope) << '\n';
    return kExitOk;
  }
  std::optional<ConfusionMatrix> confusion;
  if (o.confusion == "reference") {
    confusion = reference_confusion();
  } else if (o.confusion != "none") {
    throw ValidationError("--confusion must be 'none' or 'reference'");
  }
  const CountsTable counts = o.counts_file.empty() ? sample_counts(target, states, o.shots, seed, confusion)
                                                   : io::counts_from_csv(io::read_file(o.counts_file), states);
  out.write("counts.csv", io::counts_csv(counts));
  const auto li = linear_inversion(counts, states);
  const auto res = ml_tomography(counts, states, ml);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  const double dod = operational_distance(target, res.povm);
  out.write_json("tomo_povm.json", io::povm_to_json(res.povm));
  out.write_json("summary.json", {{"povm", src.describe()},
                                  {"iterations", res.iterations},
                                  {"converged", res.converged},
                                  {"log_likelihood", log_likelihood(res.povm, counts, states)},
                                  {"linear_inversion_min_eigenvalue", li.min_eigenvalue},
                                  {"linear_inversion_physical", li.physical},
                                  {"d_od_to_target", dod},
                                  {"warnings", res.warnings}});
  std::cout << "ML iterations: " << res.iterations << (res.converged ? " (converged)" : " (cap reached)") << '\n'
            << "linear inversion min eigenvalue: " << fmt(li.min_eigenvalue) << '\n'
            << "D_OD(target, reconstruction): " << fmt(dod) << '\n';
  return kExitOk;
}

struct EstimateOptions {
  std::string observable_file;
  std::string pauli = "Z";
  std::string state_file;
  std::uint64_t shots = 100000;
  std::string tomo_povm_file;
  std::string confusion = "none";
};

int cmd_estimate(const PovmSource& src, const EstimateOptions& o, std::uint64_t seed, OutputWriter& out) {
  const Observable obs = o.observable_file.empty() ? Observable::pauli(o.pauli)
                                                   : io::observable_from_json(json::parse(io::read_file(o.observable_file)));
  const int n = obs.n_qubits();
  CVector state = CVector::Zero(Eigen::Index{1} << n);
  state(0) = 1.0;
  if (!o.state_file.empty()) state = io::state_from_json(json::parse(io::read_file(o.state_file)));
  if (state.size() != (Eigen::Index{1} << n)) throw DimensionError("state length does not match the observable");
  const Povm factor = src.resolve();
  require_valid(factor);
  const ProductPovm povm = ProductPovm::uniform(factor, n);
  // Samples come from the device; with readout errors it differs from the target.
  Povm device_factor = factor;
  if (o.confusion == "reference") device_factor = reference_confusion().apply(factor);
  const Probabilities p = outcome_probabilities(projector(state), ProductPovm::uniform(device_factor, n));
  const OutcomeHistogram hist = sample_outcomes(p, o.shots, seed);
  const ProductCoefficients coeffs(obs, povm);
  const EstimationReport rep = estimate_expectation(hist, coeffs);
  const double exact = (state.adjoint() * obs.dense() * state)(0, 0).real();
  json summary = {{"povm", src.describe()},
                  {"n_qubits", n},
                  {"shots", rep.shots},
                  {"estimate", rep.estimate},
                  {"std_error", rep.std_error},
                  {"second_moment", rep.second_moment},
                  {"exact", exact},
                  {"coefficients", "theoretical"}};
  std::cout << "estimate: " << fmt(rep.estimate) << " +- " << fmt(rep.std_error) << "  (exact " << fmt(exact)
            << ")\n";
  if (!o.tomo_povm_file.empty()) {
    const Povm tomo = io::povm_from_json(json::parse(io::read_file(o.tomo_povm_file)));
    require_valid(tomo, 1e-8);
    const EstimationReport mit = mitigated_estimate(obs, ProductPovm::uniform(tomo, n), hist);
    summary["mitigated"] = {{"estimate", mit.estimate},
                            {"std_error", mit.std_error},
                            {"second_moment", mit.second_moment},
                            {"coefficients", "tomographic"}};
    std::cout << "mitigated: " << fmt(mit.estimate) << " +- " << fmt(mit.std_error) << '\n';
  }
  if (n <= kMaxScatterQubits) {
    const ScatterTable t = scatter_export(obs, povm, state);
    out.write("scatter.csv", io::scatter_csv(t));
    summary["exact_second_moment"] = t.second_moment;
    std::cout << "second moment: " << fmt(t.second_moment) << '\n';
  }
  out.write_json("estimate.json", summary);
  return kExitOk;
}

json effective_config(const CLI::App& app, const CLI::App* sub) {
  auto dump = [](const CLI::App& a) {
    json j = json::object();
    for (const CLI::Option* opt : a.get_options()) {
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config") continue;
      if (opt->count() > 0) {
        const auto& r = opt->results();
        j[name] = r.size() == 1 ? json(r.front()) : json(r);
      } else {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* g : a.get_subcommands([](const CLI::App* s) { return s->get_name().empty(); })) {
      for (const CLI::Option* opt : g->get_options()) {
        const std::string name = opt->get_single_name();
        if (opt->count() > 0) j[name] = opt->results().size() == 1 ? json(opt->results().front()) : json(opt->results());
      }
    }
    return j;
  };
  json cfg = dump(app);
  if (sub) cfg[sub->get_name()] = dump(*sub);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"POVM toolkit for transmon qudits"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON configuration file");
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  std::string out_dir = "qpovm_out";
  int threads = 1;
  app.add_option("--seed", seed, "Random seed")->capture_default_str();
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();

  PovmSource povm_src, compile_src, sim_src, sweep_src, tomo_src, est_src;

  auto* povm = app.add_subcommand("povm", "Build or load a POVM and validate it");
  povm_src.add_to(povm);
  double povm_tol = kPsdTolerance;
  povm->add_option("--tol", povm_tol, "Validation tolerance")->capture_default_str();

  auto* compile = app.add_subcommand("compile", "Compile a rank-one POVM into a pulse schedule");
  compile_src.add_to(compile);
  CompileOptions copt;
  compile->add_option("--lowering", copt.lowering, "Gate lowering")
      ->check(CLI::IsMember(kLoweringNames))
      ->capture_default_str();
  compile->add_option("--ratio", copt.ratio, "E_J/E_C of the transmon supplying frame frequencies")
      ->capture_default_str();
  compile->add_option("--samples", copt.samples, "Pulse length per transition, in samples")
      ->delimiter(',')
      ->expected(3)
      ->capture_default_str();
  compile->add_option("--dt-ns", copt.dt_ns, "Sample duration")->capture_default_str();
  compile->add_flag("--generic", copt.generic, "Use the generic decomposition for --demo too");

  SimOptions sopt;
  auto add_sim = [&](CLI::App* cmd) {
    cmd->add_option("--k", sopt.k, "Offset-charge samples")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--lowering", sopt.lowering, "Gate lowering")
        ->check(CLI::IsMember(kLoweringNames))
        ->capture_default_str();
    cmd->add_option("--grid-samples", sopt.grid, "Calibration duration grid, in samples")->delimiter(',');
    cmd->add_option("--dt-ns", sopt.dt_ns, "Sample duration")->capture_default_str();
  };
  auto* simulate = app.add_subcommand("simulate", "Simulate a compiled POVM on a charge-noisy transmon");
  sim_src.add_to(simulate);
  add_sim(simulate);
  simulate->add_option("--ratio", sopt.ratio, "E_J/E_C")->capture_default_str();
  simulate->add_option("--t-max-ns", sopt.t_max_ns, "Schedule duration budget")->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Sweep E_J/E_C and duration budgets");
  sweep_src.add_to(sweep);
  add_sim(sweep);
  sweep->add_option("--ratios", sopt.ratios, "E_J/E_C values")->delimiter(',')->capture_default_str();
  sweep->add_option("--t-max-ns", sopt.t_max_list, "Duration budgets (inf = unconstrained)")
      ->delimiter(',')
      ->capture_default_str();

  auto* tomo = app.add_subcommand("tomo", "Detector tomography from synthetic or recorded counts");
  tomo_src.add_to(tomo);
  TomoOptions topt;
  tomo->add_option("--shots", topt.shots, "Shots per reference state")->capture_default_str();
  tomo->add_option("--confusion", topt.confusion, "Readout confusion model")
      ->check(CLI::IsMember({"none", "reference"}))
      ->capture_default_str();
  tomo->add_option("--counts", topt.counts_file, "Counts CSV (state_label,outcome,count)")->check(CLI::ExistingFile);
  tomo->add_flag("--scaling", topt.scaling, "Run the tomography shot-scaling study");
  tomo->add_option("--grid", topt.grid, "Total shot budgets for --scaling")->delimiter(',');
  tomo->add_option("--repetitions", topt.repetitions, "Repetitions per budget")->capture_default_str();
  tomo->add_option("--max-iter", topt.max_iter, "ML iteration cap")->capture_default_str();
  tomo->add_option("--tol", topt.tol, "ML convergence tolerance (D_OD between iterates)")->capture_default_str();

  auto* estimate = app.add_subcommand("estimate", "Estimate an observable from POVM samples");
  est_src.add_to(estimate);
  EstimateOptions eopt;
  estimate->add_option("--observable", eopt.observable_file, "Observable JSON ([[weight, \"ZX\"], ...])")
      ->check(CLI::ExistingFile);
  estimate->add_option("--pauli", eopt.pauli, "Single Pauli string when no observable file is given")
      ->capture_default_str();
  estimate->add_option("--state", eopt.state_file, "State amplitudes JSON")->check(CLI::ExistingFile);
  estimate->add_option("--shots", eopt.shots, "Shots")->capture_default_str();
  estimate->add_option("--tomo-povm", eopt.tomo_povm_file, "Reconstructed single-qubit POVM for mitigation")
      ->check(CLI::ExistingFile);
  estimate->add_option("--confusion", eopt.confusion, "Readout confusion applied when sampling")
      ->check(CLI::IsMember({"none", "reference"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  CLI::App* sub = app.get_subcommands().front();
  OutputWriter out(out_dir);
  int code = kExitOk;
  std::string error;
  try {
    if (sub == povm) code = cmd_povm(povm_src, povm_tol, out);
    else if (sub == compile) code = cmd_compile(compile_src, copt, out);
    else if (sub == simulate) code = cmd_simulate(sim_src, sopt, threads, out);
    else if (sub == sweep) code = cmd_sweep(sweep_src, sopt, threads, out);
    else if (sub == tomo) code = cmd_tomo(tomo_src, topt, seed, threads, out);
    else if (sub == estimate) code = cmd_estimate(est_src, eopt, seed, out);
  } catch (const ValidationError& e) {
    error = e.what();
    code = kExitValidation;
  } catch (const NotRankOneError& e) {
    error = e.what();
    code = kExitValidation;
  } catch (const InformationalIncompletenessError& e) {
    error = e.what();
    code = kExitValidation;
  } catch (const DimensionError& e) {
    error = e.what();
    code = kExitValidation;
  } catch (const std::exception& e) {
    error = e.what();
    code = kExitRuntime;
  }
  if (!error.empty()) std::cerr << "error: " << error << '\n';

  try {
    const json cfg = effective_config(app, sub);
    json manifest = {{"tool", "qpovm"},
                     {"version", kVersion},
                     {"command", sub->get_name()},
                     {"seed", seed},
                     {"config", cfg},
                     {"config_sha256", sha256_hex(cfg.dump())},
                     {"files", out.files()},
                     {"exit_code", code}};
    if (!error.empty()) manifest["error"] = error;
    io::atomic_write(out.dir() / "manifest.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    std::cerr << "error: cannot write manifest: " << e.what() << '\n';
    if (code == kExitOk) code = kExitRuntime;
  }
  return code;
}
