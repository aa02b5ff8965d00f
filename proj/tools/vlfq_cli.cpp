// Copyright 2026 The vlfq Authors
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


// vlfq: decompose ensembles, report rates, run codec experiments.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vlfq/ensemble.hpp"
#include "vlfq/error.hpp"
#include "vlfq/io.hpp"
#include "vlfq/kidecomp.hpp"
#include "vlfq/random.hpp"
#include "vlfq/rates.hpp"
#include "vlfq/vlfcodec.hpp"

namespace {

using vlfq::io::Json;

constexpr double kRoundtripTol = 1e-7;

struct RunConfig {
  double tol_p1 = 1e-7;
  double tol_p2 = 1e-7;
  std::uint64_t seed = 1;
  std::size_t t_samples = 5;
  std::size_t max_retries = 4;
  std::string format = "json";
  std::size_t max_dim = 256;
  bool lenient = false;

  vlfq::DecompositionConfig decomposition() const {
    vlfq::DecompositionConfig cfg;
    cfg.tol_p1 = tol_p1;
    cfg.tol_p2 = tol_p2;
    cfg.seed = seed;
    cfg.max_retries = static_cast<int>(max_retries);
    auto ts = vlfq::default_t_samples();
    if (t_samples <= ts.size()) {
      ts.resize(t_samples);
    } else {
      vlfq::Rng rng(vlfq::mix_seed(seed, 0x75));
      while (ts.size() < t_samples) ts.push_back(rng.uniform(-2.0, 2.0));
    }
    cfg.t_samples = ts;
    return cfg;
  }
};

vlfq::Ensemble load(const std::string& path, const RunConfig& rc) {
  vlfq::Ensemble e = vlfq::io::load_ensemble(path, rc.lenient);
  if (e.dim > rc.max_dim)
    throw vlfq::Error(vlfq::ErrorKind::DimensionTooLarge,
                      "dimension " + std::to_string(e.dim) + " exceeds --max-dim " + std::to_string(rc.max_dim));
  vlfq::require_valid(e);
  return e;
}

std::string fixed(double x, int digits = 9) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << (x == 0.0 ? 0.0 : x);
  return os.str();
}

int cmd_decompose(const std::string& input, const RunConfig& rc) {
  const auto e = load(input, rc);
  const auto d = vlfq::ki_decompose(e, rc.decomposition());
  if (rc.format == "json") {
    std::cout << vlfq::io::dump(vlfq::io::decomposition_to_json(d));
    return 0;
  }
  std::cout << "dim " << d.dim << ", support " << d.support_dim() << ", " << d.blocks.size() << " block(s)\n";
  std::cout << std::left << std::setw(7) << "block" << std::setw(7) << "dim_J" << std::setw(7) << "dim_K"
            << "p_l\n";
  for (std::size_t l = 0; l < d.blocks.size(); ++l) {
    const auto& b = d.blocks[l];
    std::cout << std::setw(7) << l << std::setw(7) << b.dim_j << std::setw(7) << b.dim_k << fixed(b.p_l) << "\n";
  }
  std::cout << d.report.summary();
  return 0;
}

int cmd_rates(const std::string& input, bool table1, const RunConfig& rc) {
  const auto e = load(input, rc);
  const auto d = vlfq::ki_decompose(e, rc.decomposition());
  const auto r = vlfq::make_report(e, d);
  if (rc.format == "json") {
    std::cout << vlfq::io::dump(vlfq::io::rates_to_json(r, d, table1));
    return 0;
  }
  const std::vector<std::pair<std::string, double>> rows = {
      {"I_C", r.i_c},           {"D_NC", r.d_nc},        {"I_NC", r.i_nc},
      {"I_LH", r.i_lh},         {"R_vlf", r.r_vlf_opt}, {"R_flaf", r.r_flaf_opt},
      {"gap F-AF", r.gap_f_af}, {"defect bound", r.defect_upper}};
  for (const auto& [name, v] : rows) std::cout << std::left << std::setw(14) << name << fixed(v) << "\n";
  std::cout << std::setw(14) << "I_eff in" << "[" << fixed(r.i_eff_lower()) << ", " << fixed(r.i_eff_upper())
            << "]\n";
  std::cout << std::setw(14) << "class" << vlfq::to_string(r.classification) << "\n";
  if (table1) std::cout << std::setw(14) << "relation" << vlfq::rate_relation(r.classification) << "\n";
  return 0;
}

int cmd_codec(const std::string& input, std::size_t n, std::size_t trials, const RunConfig& rc) {
  const auto e = load(input, rc);
  const auto run = vlfq::nblock_run(e, n, rc.decomposition(), rc.max_dim);
  const double residual = vlfq::roundtrip_check(run.decomposition, run.code, run.power);
  std::optional<vlfq::SampleStats> mc;
  if (trials > 0) mc = vlfq::sample_lengths(run.decomposition, run.code, run.power, trials, rc.seed);

  if (rc.format == "json") {
    Json j = {{"code", vlfq::io::code_to_json(run.code)},
              {"lengths", vlfq::io::length_stats_to_json(run.stats)},
              {"roundtrip_residual", residual}};
    if (mc)
      j["monte_carlo"] = {{"trials", mc->trials}, {"mean", mc->mean}, {"std_error", mc->std_error}};
    std::cout << vlfq::io::dump(j);
  } else {
    std::cout << std::left << std::setw(7) << "block" << std::setw(16) << "p_l" << std::setw(10) << "codeword"
              << "qubits\n";
    for (std::size_t l = 0; l < run.stats.per_block.size(); ++l) {
      const auto& b = run.stats.per_block[l];
      const std::string cw = run.code.codewords[l].empty() ? "-" : run.code.codewords[l];
      std::cout << std::setw(7) << l << std::setw(16) << fixed(b.p_l) << std::setw(10) << cw << b.payload_qubits
                << "\n";
    }
    std::cout << "expected length " << fixed(run.stats.expected_length) << " over n=" << n << "\n"
              << "per-letter rate " << fixed(run.stats.per_letter_rate) << " in [" << fixed(run.stats.window_lower)
              << ", " << fixed(run.stats.window_upper) << "]\n"
              << "roundtrip residual " << residual << "\n";
    if (mc) std::cout << "sampled mean " << fixed(mc->mean) << " +- " << fixed(mc->std_error) << "\n";
  }
  if (residual > kRoundtripTol)
    throw vlfq::Error(vlfq::ErrorKind::InternalConsistency,
                      "roundtrip residual " + std::to_string(residual) + " exceeds tolerance");
  return 0;
}

int cmd_fixtures(const std::string& name, const std::string& outdir) {
  std::vector<std::string> names;
  if (name == "all")
    names = vlfq::fixture_names();
  else
    names = {name};
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) throw vlfq::Error(vlfq::ErrorKind::IoError, "cannot create " + outdir + ": " + ec.message());
  for (const auto& n : names) {
    const auto e = vlfq::fixture(n);
    const auto path = (std::filesystem::path(outdir) / (n + ".json")).string();
    vlfq::io::write_file(path, vlfq::io::dump(vlfq::io::ensemble_to_json(e)));
    std::cerr << "wrote " << path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block decomposition, rates and variable-length codec for quantum ensembles"};
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig rc;
  app.add_option("--tol-p1", rc.tol_p1, "reconstruction tolerance")->check(CLI::PositiveNumber);
  app.add_option("--tol-p2", rc.tol_p2, "product-form tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", rc.seed, "seed for randomized steps");
  app.add_option("--t-samples", rc.t_samples, "number of modular-flow sample times")->check(CLI::PositiveNumber);
  app.add_option("--max-retries", rc.max_retries, "decomposition retries")->check(CLI::NonNegativeNumber);
  app.add_option("--format", rc.format, "output format")->check(CLI::IsMember({"json", "text"}));
  app.add_option("--max-dim", rc.max_dim, "largest Hilbert space dimension accepted")->check(CLI::PositiveNumber);
  app.add_flag("--lenient", rc.lenient, "ignore unknown fields in input files");

  std::string input;
  auto* dec = app.add_subcommand("decompose", "print the block decomposition");
  dec->add_option("input", input, "ensemble JSON file")->required();

  bool table1 = false;
  auto* rates = app.add_subcommand("rates", "print rates and gaps");
  rates->add_option("input", input, "ensemble JSON file")->required();
  rates->add_flag("--table1", table1, "include the classification cell");

  std::size_t n = 1;
  std::size_t trials = 0;
  auto* codec = app.add_subcommand("codec", "run the variable-length codec on blocks of n letters");
  codec->add_option("input", input, "ensemble JSON file")->required();
  codec->add_option("--n", n, "block length")->check(CLI::PositiveNumber);
  codec->add_option("--trials", trials, "Monte Carlo trials (0 to skip)");

  std::string fixture_name;
  std::string outdir = ".";
  auto* fix = app.add_subcommand("fixtures", "write built-in example ensembles");
  fix->add_option("name", fixture_name, "fixture name or 'all'")->required();
  fix->add_option("outdir", outdir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& ex) {
    const int rc_parse = app.exit(ex);
    return rc_parse == 0 ? 0 : 1;
  }

  try {
    if (*dec) return cmd_decompose(input, rc);
    if (*rates) return cmd_rates(input, table1, rc);
    if (*codec) return cmd_codec(input, n, trials, rc);
    if (*fix) return cmd_fixtures(fixture_name, outdir);
  } catch (const vlfq::DecompositionFailure& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    if (ex.report()) std::cerr << ex.report()->summary();
    return vlfq::exit_code(ex.kind());
  } catch (const vlfq::Error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return vlfq::exit_code(ex.kind());
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return 3;
  }
  return 1;
}
