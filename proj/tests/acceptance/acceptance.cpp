// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

#include "support/structured.hpp"
#include "vlfq/ensemble.hpp"
#include "vlfq/io.hpp"
#include "vlfq/kidecomp.hpp"
#include "vlfq/rates.hpp"
#include "vlfq/vlfcodec.hpp"

using namespace vlfq;

namespace {

// S of the eigenvalues (2 +- sqrt 2)/4, from the closed form of a 2x2 spectrum
constexpr double kE3Flaf = 0.6008760366928562;

struct Check {
  bool ok = true;
  std::ostringstream note;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) note << what;
    ok = ok && cond;
  }
};

std::vector<std::string> all_fixtures() { return fixture_names(); }

bool rates_close(const RateReport& a, const RateReport& b, double tol) {
  const double fields[][2] = {{a.i_c, b.i_c},           {a.d_nc, b.d_nc},
                              {a.i_nc, b.i_nc},         {a.i_lh, b.i_lh},
                              {a.r_vlf_opt, b.r_vlf_opt}, {a.r_flaf_opt, b.r_flaf_opt},
                              {a.gap_f_af, b.gap_f_af}, {a.defect_upper, b.defect_upper}};
  for (const auto& f : fields)
    if (std::abs(f[0] - f[1]) > tol) return false;
  return a.classification == b.classification;
}

/// Mixed bag of random ensembles with d <= 6 and at most 4 letters.
Ensemble random_ensemble(std::uint64_t k) {
  Rng rng(mix_seed(2024, k));
  switch (k % 3) {
    case 0: {
      const std::size_t dim = 2 + k % 5;
      return random_mixed(dim, 1 + k % 4, 1 + (k / 3) % dim, mix_seed(7, k));
    }
    case 1:
      return support::make_structured(support::random_shapes(rng, 6), 2 + k % 3, mix_seed(11, k)).ensemble;
    default:
      return support::random_commuting(mix_seed(13, k), 6);
  }
}

Check criterion1() {
  Check c;
  const auto r = full_report(fixture("E3"));
  c.require(std::abs(r.r_vlf_opt - 1.0) <= 1e-9, "r_vlf_opt " + std::to_string(r.r_vlf_opt));
  c.require(std::abs(r.r_flaf_opt - kE3Flaf) <= 1e-4, "r_flaf_opt " + std::to_string(r.r_flaf_opt));
  c.require(std::abs(r.gap_f_af - (1.0 - kE3Flaf)) <= 1e-4, "gap " + std::to_string(r.gap_f_af));
  c.require(r.r_vlf_opt > r.r_flaf_opt, "no gap");
  c.note << "r_vlf=" << r.r_vlf_opt << " r_flaf=" << r.r_flaf_opt << " gap=" << r.gap_f_af;
  return c;
}

Check criterion2() {
  Check c;
  for (const auto& name : all_fixtures()) {
    const auto d = ki_decompose(fixture(name));
    const double lo = i_c(d) + d_nc(d);
    LengthStats s;
    try {
      s = expected_length(d, block_code(d));
    } catch (const Error& ex) {
      c.require(false, name + ": " + ex.what());
      continue;
    }
    c.require(s.expected_length >= lo - 1e-9 && s.expected_length <= lo + 2 + 1e-9, name + " outside window");
    if (name == "E3" || name == "E4" || name == "E5")
      c.require(std::abs(s.expected_length - lo) <= 1e-9, name + " not at lower bound");
  }
  c.note << "E1-E7 within [I_C+D_NC, I_C+D_NC+2]; E3/E4/E5 at the lower bound";
  return c;
}

Check criterion3() {
  Check c;
  for (const char* name : {"E2", "E3", "E5"}) {
    const auto e = fixture(name);
    const auto d = ki_decompose(e);
    const double lo = i_c(d) + d_nc(d);
    for (std::size_t n = 1; n <= 3; ++n) {
      const auto s = nblock_experiment(e, n);
      const double hi = lo + 2.0 / static_cast<double>(n);
      c.require(s.per_letter_rate >= lo - 1e-9 && s.per_letter_rate <= hi + 1e-9,
                std::string(name) + " n=" + std::to_string(n) + " rate " + std::to_string(s.per_letter_rate));
      c.note << name << "/n" << n << "=" << s.per_letter_rate << " ";
    }
  }
  return c;
}

Check criterion4() {
  Check c;
  for (const char* name : {"E2", "E3", "E4", "E5", "E6", "E7"}) {
    const auto e = fixture(name);
    const auto d1 = ki_decompose(e);
    const auto d2 = ki_decompose(tensor_power(e, 2));
    c.require(std::abs(i_c(d2) - 2 * i_c(d1)) <= 1e-6, std::string(name) + " I_C not additive");
    c.require(std::abs(d_nc(d2) - 2 * d_nc(d1)) <= 1e-6, std::string(name) + " D_NC not additive");
  }
  c.note << "E2-E7 under n=2";
  return c;
}

Check criterion5() {
  Check c;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto e = support::random_commuting(mix_seed(5, seed));
    const auto d = ki_decompose(e);
    const auto o = classical_oracle(e);
    const auto r = make_report(e, d);
    const std::string tag = "seed " + std::to_string(seed) + ": ";
    c.require(r.gap_f_af <= 1e-7, tag + "gap " + std::to_string(r.gap_f_af));
    c.require(d.blocks.size() == o.blocks.size(), tag + "block count differs from oracle");
    if (d.blocks.size() != o.blocks.size()) continue;
    for (std::size_t l = 0; l < d.blocks.size(); ++l) {
      const auto& x = d.blocks[l];
      const auto& y = o.blocks[l];
      c.require(x.dim_j == 1, tag + "dim_J > 1");
      c.require(x.dim_k == y.dim_k, tag + "dim_K differs");
      c.require(std::abs(x.p_l - y.p_l) <= 1e-7, tag + "p_l differs");
      for (std::size_t i = 0; i < e.size(); ++i)
        c.require(std::abs(x.p_il[i] - y.p_il[i]) <= 1e-7, tag + "p_il differs");
      if (x.dim_k == y.dim_k) {
        c.require(max_norm(x.rho_k - y.rho_k) <= 1e-7, tag + "rho_K differs");
        c.require(max_norm(x.isometry * x.isometry.adjoint() - y.isometry * y.isometry.adjoint()) <= 1e-7,
                  tag + "block projector differs");
      }
    }
  }
  c.note << "50 commuting ensembles";
  return c;
}

Check criterion6() {
  Check c;
  double worst = 0.0;
  for (const auto& name : all_fixtures()) {
    const auto e = fixture(name);
    const auto d = ki_decompose(e);
    worst = std::max(worst, roundtrip_check(d, block_code(d), e));
  }
  for (std::uint64_t k = 0; k < 100; ++k) {
    const auto e = random_ensemble(k);
    const auto d = ki_decompose(e);
    worst = std::max(worst, roundtrip_check(d, block_code(d), e));
  }
  c.require(worst <= 1e-7, "worst residual " + std::to_string(worst));

  const auto e6 = fixture("E6");
  auto bad = ki_decompose(e6);
  bad.blocks[0].rho_k += diag({1e-3, -1e-3});
  const double rejected = roundtrip_check(bad, block_code(bad), e6);
  c.require(rejected >= 1e-4, "perturbed decomposition residual " + std::to_string(rejected));
  c.note << "worst residual " << worst << ", perturbed " << rejected;
  return c;
}

Check criterion7() {
  Check c;
  for (const auto& name : all_fixtures()) {
    const auto d = ki_decompose(fixture(name));
    const auto s = shadow_ensemble(d);
    const double h = shannon_entropy(s.probs);
    c.require(std::abs(h - (i_c(d) + d_nc(d))) <= 1e-9, name + " H(q) " + std::to_string(h));
  }
  c.note << "E1-E7";
  return c;
}

Check criterion8() {
  Check c;
  const std::pair<const char*, Classification> cells[] = {{"E2", Classification::ClassicalPure},
                                                          {"E5", Classification::ClassicalMixed},
                                                          {"E3", Classification::QuantumPure},
                                                          {"E7", Classification::QuantumMixed}};
  for (const auto& [name, want] : cells) {
    const auto r = full_report(fixture(name));
    c.require(r.classification == want,
              std::string(name) + " classified " + std::string(to_string(r.classification)));
  }
  for (const auto& name : all_fixtures()) {
    const auto r = full_report(fixture(name));
    const bool pure = r.classification == Classification::ClassicalPure ||
                      r.classification == Classification::QuantumPure;
    if (pure) c.require(r.defect_upper <= 1e-7, name + " defect " + std::to_string(r.defect_upper));
  }
  c.note << "E2 classical-pure, E5 classical-mixed, E3 quantum-pure, E7 quantum-mixed";
  return c;
}

Check criterion9() {
  Check c;
  Rng rng(909);
  for (std::uint64_t t = 0; t < 20; ++t) {
    const auto e = random_ensemble(1000 + t);
    const auto base = full_report(e);
    const std::string tag = "trial " + std::to_string(t) + ": ";

    const auto rotated = full_report(rotate(e, random_unitary(e.dim, rng)));
    c.require(rates_close(base, rotated, 1e-7), tag + "unitary");

    const auto redundant = full_report(attach_redundancy(e, random_density(2, 2, rng)));
    c.require(rates_close(base, redundant, 1e-7), tag + "redundancy");

    std::vector<std::size_t> order(e.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t k = order.size(); k > 1; --k)
      std::swap(order[k - 1], order[static_cast<std::size_t>(rng.uniform() * static_cast<double>(k))]);
    const auto permuted = full_report(permute(e, order));
    c.require(rates_close(base, permuted, 1e-7), tag + "permutation");
  }
  c.note << "20 trials each";
  return c;
}

int run_cli(const std::string& args, std::string& out) {
  const std::string cmd = std::string(VLFQ_CLI_PATH) + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return -1;
  out.clear();
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Check criterion10() {
  Check c;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("vlfq_accept_" + std::to_string(::getpid()));
  std::string out;
  c.require(run_cli("fixtures all " + dir.string(), out) == 0, "fixtures failed");
  const std::vector<std::string> commands = {
      "decompose " + (dir / "E6.json").string(),
      "rates --table1 " + (dir / "E7.json").string(),
      "--format text rates " + (dir / "E5.json").string(),
      "codec --n 2 --trials 1000 " + (dir / "E5.json").string(),
      "--seed 77 decompose " + (dir / "E3.json").string(),
  };
  for (const auto& args : commands) {
    std::string a, b;
    const int ca = run_cli(args, a);
    const int cb = run_cli(args, b);
    c.require(ca == 0 && cb == 0, args + " exited nonzero");
    c.require(!a.empty() && a == b, args + " output differs");
  }
  fs::remove_all(dir);
  c.note << commands.size() << " commands run twice";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::function<Check()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                        criterion5, criterion6, criterion7, criterion8,
                                                        criterion9, criterion10};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Check c;
    try {
      c = criteria[k]();
    } catch (const std::exception& ex) {
      c.ok = false;
      c.note << "exception: " << ex.what();
    }
    std::cout << "criterion " << (k + 1) << ": " << (c.ok ? "PASS" : "FAIL") << "  " << c.note.str() << "\n";
    if (!c.ok) ++failed;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " passed\n";
  return failed == 0 ? 0 : 1;
}
