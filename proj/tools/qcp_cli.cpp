// qcp: command-line front end for the scheme checks, security games and the
// acceptance suite.
//
// Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcp/designs.hpp"
#include "qcp/games.hpp"
#include "qcp/qas.hpp"
#include "qcp/suite.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemeParams {
  int m = 1, t = 1, k = 14;
};

SchemeParams parse_scheme(const std::string& text) {
  SchemeParams p;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  if (!(in >> p.m >> c1 >> p.t >> c2 >> p.k) || c1 != ',' || c2 != ',' || !in.eof()) {
    throw UsageError("--scheme expects m,t,k (got '" + text + "')");
  }
  return p;
}

// Values from --config, overridden by any flag given on the command line.
struct RunConfig {
  SchemeParams scheme;
  std::string game = "free";
  std::string adversary = "trivial-forward";
  std::uint64_t trials = 10000;
  std::uint64_t seed = 0;
  std::optional<double> r;
  std::string out;
  std::string csv;
  unsigned threads = 0;
  bool json_stdout = false;
};

struct Flags {
  std::string scheme, game, adversary, out, csv, config;
  std::uint64_t trials = 0, seed = 0;
  double r = 0.0;
  unsigned threads = 0;
  bool json = false;
  CLI::Option* o_scheme = nullptr;
  CLI::Option* o_game = nullptr;
  CLI::Option* o_adversary = nullptr;
  CLI::Option* o_trials = nullptr;
  CLI::Option* o_seed = nullptr;
  CLI::Option* o_r = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_csv = nullptr;
  CLI::Option* o_threads = nullptr;
};

void add_common(CLI::App* cmd, Flags& f, bool game_flags) {
  f.o_scheme = cmd->add_option("--scheme", f.scheme, "scheme parameters m,t,k (default 1,1,14)");
  f.o_seed = cmd->add_option("--seed", f.seed, "master seed (default 0)");
  f.o_out = cmd->add_option("--out", f.out, "write the JSON report here");
  cmd->add_option("--config", f.config, "JSON config file; flags override it");
  cmd->add_flag("--json", f.json, "print JSON to standard output");
  f.o_threads = cmd->add_option("--threads", f.threads, "worker threads (0 = all cores)");
  f.o_trials = cmd->add_option("--trials", f.trials, "Monte Carlo trials per run");
  if (game_flags) {
    f.o_game = cmd->add_option("--game", f.game, "free | ssl");
    f.o_adversary = cmd->add_option("--adversary", f.adversary, "adversary name");
    f.o_r = cmd->add_option("--r", f.r, "free game: Bob's mass at the point; ssl: verification mass at the point");
    f.o_csv = cmd->add_option("--csv", f.csv, "append a CSV row here (default: --out with .csv)");
  }
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw UsageError("cannot read config file " + f.config);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file " + f.config + ": " + e.what());
    }
    try {
      if (j.contains("scheme")) {
        const json& s = j["scheme"];
        c.scheme = s.is_string() ? parse_scheme(s.get<std::string>())
                                 : SchemeParams{s.at("m").get<int>(), s.at("t").get<int>(), s.at("k").get<int>()};
      }
      c.game = j.value("game", c.game);
      c.adversary = j.value("adversary", c.adversary);
      c.trials = j.value("trials", c.trials);
      c.seed = j.value("seed", c.seed);
      if (j.contains("r")) c.r = j["r"].get<double>();
      c.out = j.value("out", c.out);
      c.csv = j.value("csv", c.csv);
      c.threads = j.value("threads", c.threads);
    } catch (const json::exception& e) {
      throw UsageError("config file " + f.config + ": " + e.what());
    }
  }
  auto given = [](const CLI::Option* o) { return o != nullptr && o->count() > 0; };
  if (given(f.o_scheme)) c.scheme = parse_scheme(f.scheme);
  if (given(f.o_game)) c.game = f.game;
  if (given(f.o_adversary)) c.adversary = f.adversary;
  if (given(f.o_trials)) c.trials = f.trials;
  if (given(f.o_seed)) c.seed = f.seed;
  if (given(f.o_r)) c.r = f.r;
  if (given(f.o_out)) c.out = f.out;
  if (given(f.o_csv)) c.csv = f.csv;
  if (given(f.o_threads)) c.threads = f.threads;
  c.json_stdout = f.json;

  if (c.trials == 0) throw UsageError("--trials must be positive");
  if (c.r && !(*c.r >= 0.0 && *c.r <= 1.0)) throw UsageError("--r must lie in [0, 1]");
  return c;
}

// Validates (m, t, k) before any scheme state is allocated.
qcp::QasHandle build_scheme(const SchemeParams& p, bool for_games) {
  if (p.m < 1 || p.t < 1) throw UsageError("scheme needs m >= 1 and t >= 1");
  if (p.m + p.t > qcp::kMaxCliffordQubits) throw UsageError("m + t exceeds " + std::to_string(qcp::kMaxCliffordQubits));
  if (p.k < 1 || p.k > qcp::BitString::kMaxLength) throw UsageError("k must lie in [1, 30]");
  if (for_games && p.k > 20) throw UsageError("games enumerate the key space; k must be <= 20");
  if (for_games && 2 * (p.m + p.t) > qcp::qubit_cap()) throw UsageError("game registers exceed the qubit cap");
  const double entries = std::min(std::exp2(p.k) + 1.0, 1e18) * std::exp2(2 * p.m + p.t) * 16.0;
  if (entries > 512.0 * 1024 * 1024) throw UsageError("isometry table for this (m, t, k) exceeds the memory budget");
  return qcp::QasScheme::build(p.m, p.t, p.k);
}

void write_text(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw std::runtime_error("cannot rename onto " + path);
}

std::string csv_path_for(const RunConfig& c) {
  if (!c.csv.empty()) return c.csv;
  if (c.out.empty()) return {};
  const std::filesystem::path p(c.out);
  return std::filesystem::path(p).replace_extension(".csv").string();
}

const char* mark(bool ok) { return ok ? "PASS" : "FAIL"; }

// ---- design-check ---------------------------------------------------------------

int cmd_design_check(int qubits, std::uint64_t pairs, bool exhaustive, const std::string& cache_dir, const RunConfig& c) {
  if (qubits < 1 || qubits > qcp::kMaxCliffordQubits) {
    throw UsageError("--qubits must lie in [1, " + std::to_string(qcp::kMaxCliffordQubits) + "]");
  }
  qcp::check_qubit_cap(qubits, "design-check");
  const bool enumerable = qubits <= qcp::kMaxEnumeratedQubits;
  if (exhaustive && !enumerable) throw UsageError("--exhaustive needs --qubits <= 2");
  const bool use_exhaustive = enumerable && (exhaustive || pairs == 0);
  if (!use_exhaustive && pairs == 0) pairs = 1000000;

  std::optional<qcp::UnitaryDesign> design;
  if (enumerable) {
    design = cache_dir.empty() ? qcp::clifford_enumerate(qubits)
                               : qcp::clifford_enumerate(qubits, std::filesystem::path(cache_dir));
  } else {
    design = qcp::UnitaryDesign::clifford_sampler(qubits);
  }

  qcp::Rng rng(c.seed);
  const double fp = use_exhaustive ? qcp::frame_potential_exhaustive(*design)
                                   : qcp::frame_potential_sampled(*design, pairs, rng);
  const double tol = use_exhaustive ? 1e-9 : 0.05;
  const bool ok = std::abs(fp - 2.0) <= tol;

  json j = {{"qubits", qubits},
            {"mode", use_exhaustive ? "exhaustive" : "sampled"},
            {"cardinality", design->cardinality().str()},
            {"frame_potential", fp},
            {"tolerance", tol},
            {"seed", c.seed},
            {"pass", ok}};
  if (!use_exhaustive) j["pairs"] = pairs;

  if (c.json_stdout) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::printf("design            clifford-q%d\n", qubits);
    std::printf("cardinality       %s\n", design->cardinality().str().c_str());
    std::printf("mode              %s\n", use_exhaustive ? "exhaustive" : "sampled");
    if (!use_exhaustive) std::printf("pairs             %llu\n", static_cast<unsigned long long>(pairs));
    std::printf("frame_potential   %.6f\n", fp);
    std::printf("[%s] |frame_potential - 2| <= %g\n", mark(ok), tol);
  }
  if (!c.out.empty()) write_text(c.out, j.dump(2) + "\n");
  return ok ? kExitOk : kExitFail;
}

// ---- qas-verify -----------------------------------------------------------------

int cmd_qas_verify(bool inject_fault, int keys, int states, const RunConfig& c) {
  qcp::QasHandle s = build_scheme(c.scheme, false);
  if (inject_fault) s = s->with_corrupted_verify_key_map();
  qcp::Rng rng(c.seed);
  json checks = json::array();
  bool all = true;
  auto record = [&](const std::string& name, double measured, double bound, bool ok, json extra = json::object()) {
    json j = {{"name", name}, {"measured", measured}, {"bound", bound}, {"pass", ok}};
    j.update(extra);
    checks.push_back(j);
    all = all && ok;
  };

  // verify(auth(rho)) = rho (x) |Acc><Acc|.
  double dev = 0.0;
  Eigen::MatrixXcd acc_flag = Eigen::MatrixXcd::Zero(2, 2);
  acc_flag(1, 1) = 1.0;
  for (int i = 0; i < keys; ++i) {
    const std::uint64_t key = rng.uniform_below(s->key_count());
    for (int j = 0; j < states; ++j) {
      const qcp::DensityOperator rho = qcp::random_density(s->message_qubits(), rng);
      const qcp::DensityOperator out = qcp::verify_channel(*s, key, qcp::auth(*s, key, rho));
      dev = std::max(dev, (out.matrix() - qcp::kron(rho.matrix(), acc_flag)).cwiseAbs().maxCoeff());
    }
  }
  record("correctness", dev, 1e-9, dev < 1e-9, {{"keys", keys}, {"states", states}});

  // Average acceptance of fixed states over the design is 2^-t.
  const double expect = std::exp2(-s->trap_qubits());
  double worst = 0.0;
  if (s->design().enumerated()) {
    for (int j = 0; j < states; ++j) {
      const double avg = qcp::avg_wrong_key_accept(*s, qcp::random_density(s->y_qubits(), rng), qcp::WrongKeyMode::kDesign);
      worst = std::max(worst, std::abs(avg - expect));
    }
    record("wrong-key design average", expect + worst, expect, worst < 1e-9, {{"mode", "exhaustive"}, {"deviation", worst}});
  } else {
    // Monte Carlo over uniformly drawn design elements; 5 standard errors.
    const int samples = 20000;
    const qcp::DensityOperator rho = qcp::random_density(s->y_qubits(), rng);
    const Eigen::Index msg = Eigen::Index{1} << s->message_qubits();
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < samples; ++i) {
      const Eigen::MatrixXcd u = s->design().sample(rng);
      Eigen::MatrixXcd a(u.rows(), msg);
      for (Eigen::Index col = 0; col < msg; ++col) a.col(col) = u.col(col << s->trap_qubits());
      const double v = (a.adjoint() * rho.matrix() * a).trace().real();
      sum += v;
      sum_sq += v * v;
    }
    const double mean = sum / samples;
    const double se = std::sqrt(std::max(0.0, sum_sq / samples - mean * mean) / samples);
    record("wrong-key design average", mean, expect, std::abs(mean - expect) <= 5.0 * se + 1e-12,
           {{"mode", "sampled"}, {"samples", samples}, {"standard_error", se}});
  }
  const double two_eps = 2.0 * s->epsilon();
  record("wrong-key <= 2 epsilon", expect, two_eps, expect <= two_eps, {{"epsilon", s->epsilon()}});

  json report = {{"scheme", s->to_json()}, {"fault_injected", inject_fault}, {"seed", c.seed}, {"checks", checks}, {"pass", all}};
  if (c.json_stdout) {
    std::cout << report.dump(2) << '\n';
  } else {
    std::printf("scheme m=%d t=%d k=%d  epsilon=%.6g  epsilon'=%.6g%s\n", s->message_qubits(), s->trap_qubits(),
                s->key_bits(), s->epsilon(), s->epsilon_prime(), inject_fault ? "  (fault injected)" : "");
    for (const auto& ch : checks) {
      std::printf("[%s] %-26s measured=%-12.6g bound=%g\n", mark(ch["pass"].get<bool>()), ch["name"].get<std::string>().c_str(),
                  ch["measured"].get<double>(), ch["bound"].get<double>());
    }
  }
  if (!c.out.empty()) write_text(c.out, report.dump(2) + "\n");
  return all ? kExitOk : kExitFail;
}

// ---- games ------------------------------------------------------------------------

int cmd_game(qcp::GameKind game, const RunConfig& c) {
  const qcp::QasHandle s = build_scheme(c.scheme, true);
  qcp::AdversaryHandle adv;
  try {
    adv = qcp::make_adversary(c.adversary);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  qcp::GameSpec spec = qcp::GameSpec::standard(game, s);
  if (c.r) {
    if (game == qcp::GameKind::kFree) {
      spec.bob = qcp::ChallengeFamily::tr(*c.r);
    } else {
      spec.verify_r = *c.r;
    }
  }
  qcp::RunOptions opts;
  opts.trials = c.trials;
  opts.seed = c.seed;
  opts.threads = c.threads;
  const qcp::GameReport r = qcp::run_experiment(spec, *adv, opts);
  const bool ok = r.ci_lo <= r.bound;

  if (c.json_stdout) {
    std::cout << r.to_json().dump(2) << '\n';
  } else {
    std::printf("game        %s\n", qcp::to_string(r.game).c_str());
    std::printf("scheme      m=%d t=%d k=%d\n", r.m, r.t, r.k);
    std::printf("adversary   %s\n", r.adversary.c_str());
    std::printf("trials      %llu (wins %llu, seed %llu)\n", static_cast<unsigned long long>(r.trials),
                static_cast<unsigned long long>(r.wins), static_cast<unsigned long long>(r.seed));
    std::printf("estimate    %.6f   99%% interval [%.6f, %.6f]\n", r.estimate, r.ci_lo, r.ci_hi);
    if (r.oracle) {
      const bool inside = *r.oracle >= r.ci_lo && *r.oracle <= r.ci_hi;
      std::printf("oracle      %.6f   %s\n", *r.oracle, inside ? "inside interval" : "OUTSIDE interval");
    }
    std::printf("baseline    %.6f\n", r.baseline);
    std::printf("bound       %.6f\n", r.bound);
    std::printf("[%s] estimate within bound plus interval slack\n", mark(ok));
  }
  if (!c.out.empty()) write_text(c.out, r.to_json().dump(2) + "\n");
  const std::string csv = csv_path_for(c);
  if (!csv.empty()) qcp::append_csv(csv, r);
  return ok ? kExitOk : kExitFail;
}

// ---- suite ------------------------------------------------------------------------

int cmd_suite(const RunConfig& c, const Flags& f) {
  qcp::SuiteConfig cfg;
  if (f.o_seed->count() > 0 || !f.config.empty()) cfg.seed = c.seed;
  cfg.trials = c.trials;
  cfg.threads = c.threads;
  const std::vector<qcp::CriterionResult> results = qcp::run_suite(cfg);
  const json doc = qcp::suite_to_json(results, cfg);
  if (c.json_stdout) {
    std::cout << doc.dump(2) << '\n';
  } else {
    for (const auto& r : results) {
      std::printf("[%s] %2d %-28s measured=%-12.6g bound=%g\n", mark(r.pass), r.id, r.name.c_str(), r.measured, r.bound);
    }
  }
  if (!c.out.empty()) write_text(c.out, doc.dump(2) + "\n");
  bool all = true;
  for (const auto& r : results) {
    if (!r.pass) {
      std::fprintf(stderr, "criterion %d (%s) failed\n", r.id, r.name.c_str());
      all = false;
    }
  }
  return all ? kExitOk : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qcp: copy protection and secure software leasing simulator"};
  app.require_subcommand(1);

  Flags design_flags, qas_flags, cp_flags, ssl_flags, run_flags, suite_flags;

  CLI::App* design = app.add_subcommand("design-check", "frame potential of the Clifford group");
  int qubits = 1;
  std::uint64_t pairs = 0;
  bool exhaustive = false;
  std::string cache_dir;
  design->add_option("--qubits", qubits, "register size q")->required();
  design->add_option("--pairs", pairs, "sample this many pairs instead of the exhaustive sum");
  design->add_flag("--exhaustive", exhaustive, "force the exhaustive double sum (q <= 2)");
  design->add_option("--cache-dir", cache_dir, "load/store the enumeration here");
  add_common(design, design_flags, false);

  CLI::App* qas = app.add_subcommand("qas-verify", "authentication scheme invariants");
  bool inject_fault = false;
  int keys = 200, states = 20;
  qas->add_flag("--inject-fault", inject_fault, "verify with a corrupted key map (negative control)");
  qas->add_option("--keys", keys, "random keys for the correctness check")->check(CLI::PositiveNumber);
  qas->add_option("--states", states, "random states per key")->check(CLI::PositiveNumber);
  add_common(qas, qas_flags, false);

  CLI::App* cp = app.add_subcommand("cp", "copy-protection game");
  add_common(cp, cp_flags, true);
  CLI::App* ssl = app.add_subcommand("ssl", "software leasing game");
  add_common(ssl, ssl_flags, true);
  CLI::App* run = app.add_subcommand("run", "either game, chosen by --game");
  add_common(run, run_flags, true);

  CLI::App* suite = app.add_subcommand("suite", "the full acceptance battery");
  add_common(suite, suite_flags, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*design) return cmd_design_check(qubits, pairs, exhaustive, cache_dir, resolve(design_flags));
    if (*qas) return cmd_qas_verify(inject_fault, keys, states, resolve(qas_flags));
    if (*cp) {
      RunConfig c = resolve(cp_flags);
      return cmd_game(qcp::GameKind::kFree, c);
    }
    if (*ssl) {
      RunConfig c = resolve(ssl_flags);
      if (ssl_flags.o_adversary->count() == 0 && ssl_flags.config.empty()) c.adversary = "honest-return";
      return cmd_game(qcp::GameKind::kSsl, c);
    }
    if (*run) {
      const RunConfig c = resolve(run_flags);
      qcp::GameKind g;
      try {
        g = qcp::game_kind_from_string(c.game);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      return cmd_game(g, c);
    }
    if (*suite) return cmd_suite(resolve(suite_flags), suite_flags);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const qcp::CapacityError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFail;
  }
  return kExitUsage;
}
