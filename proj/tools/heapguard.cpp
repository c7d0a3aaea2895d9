// Batch driver: analyze programs and emit per-method information-flow
// guards, validate encodings, and run the executable soundness suites.

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "heapguard/crt/checks.hpp"
#include "heapguard/gen/sirgen.hpp"
#include "heapguard/infer/guard.hpp"
#include "heapguard/sir/parser.hpp"

using namespace heapguard;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitViolations = 1;
constexpr int kExitInputError = 2;
constexpr int kExitMissingStub = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> domains_of(const std::string& flag) {
  if (flag == "all") return {"deep", "shal", "dumb"};
  heap::HeapFamily::by_name(flag);  // validates
  return {flag};
}

struct AnalyzeConfig {
  std::vector<std::string> inputs;
  std::string domain = "deep";
  std::string stubs;
  std::string format = "text";
  double timeout_s = 300.0;
  size_t node_cap = sym::PredicateManager::kDefaultNodeBudget;
  bool assume_worst = false;
  unsigned jobs = 1;
  uint64_t seed = 0;
  std::string csv;
  bool stable = false;  // zero timing fields for byte-stable output
};

struct MethodTask {
  std::string method;
  std::string domain;
  uint32_t ref_count = 0;
};

int run_analyze(const AnalyzeConfig& cfg) {
  scfg::SummaryTable stubs;
  if (!cfg.stubs.empty()) {
    try {
      stubs = scfg::load_summaries(cfg.stubs);
    } catch (const scfg::StubError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitInputError;
    }
  }

  std::vector<sir::TypedProgram> programs;
  std::vector<MethodTask> tasks;
  try {
    for (const auto& path : cfg.inputs) {
      sir::TypedProgram tp = sir::typecheck(sir::parse_program(read_file(path)));
      for (const auto& m : tp.program().methods)
        for (const auto& d : domains_of(cfg.domain))
          tasks.push_back({m.name, d, (uint32_t)tp.info(m.name).refs.size()});
      programs.push_back(std::move(tp));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  std::sort(tasks.begin(), tasks.end(), [](const MethodTask& a, const MethodTask& b) {
    return std::tie(a.method, a.domain) < std::tie(b.method, b.domain);
  });

  auto find_program = [&](const std::string& method) -> const sir::TypedProgram* {
    for (const auto& tp : programs)
      if (tp.has_method(method)) return &tp;
    return nullptr;
  };

  std::vector<infer::Guard> results(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<size_t> next{0};
  std::atomic<bool> missing_stub{false};

  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const MethodTask& t = tasks[i];
      infer::SynthesisOptions opts;
      opts.limits.timeout =
          std::chrono::milliseconds(static_cast<int64_t>(cfg.timeout_s * 1000));
      opts.limits.node_cap = cfg.node_cap;
      opts.assume_worst = cfg.assume_worst;
      try {
        results[i] = infer::synthesize_guard(*find_program(t.method), t.method,
                                             heap::HeapFamily::by_name(t.domain), stubs, opts);
      } catch (const scfg::EncodeError& e) {
        errors[i] = e.what();
        if (std::string(e.what()).find("no summary") != std::string::npos)
          missing_stub.store(true);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (cfg.jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < cfg.jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i].empty()) {
      std::cerr << "error: " << tasks[i].method << " [" << tasks[i].domain
                << "]: " << errors[i] << "\n";
      return missing_stub.load() ? kExitMissingStub : kExitInputError;
    }
  }

  // Emission, order-stable.
  uint64_t interrupted = 0;
  std::map<std::string, uint64_t> class_counts;
  std::vector<uint64_t> times;
  if (cfg.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (auto& g : results) {
      if (cfg.stable) g.stats.millis = 0;
      arr.push_back(nlohmann::json::parse(infer::render_guard(g, infer::GuardFormat::Json)));
    }
    std::cout << arr.dump(2) << "\n";
  }
  for (const auto& g : results) {
    if (cfg.format == "text")
      std::cout << g.method << " [" << g.domain << "] " << to_string(g.classification) << ": "
                << render_guard(g, infer::GuardFormat::Text)
                << (g.interrupted ? "  (interrupted)" : "") << "\n";
    else if (cfg.format == "dnf")
      std::cout << g.method << " [" << g.domain << "] " << to_string(g.classification) << ":\n"
                << render_guard(g, infer::GuardFormat::Dnf);
    interrupted += g.interrupted;
    class_counts[to_string(g.classification)]++;
    times.push_back(g.stats.millis);
  }

  if (cfg.format != "json") {
    std::sort(times.begin(), times.end());
    auto pct = [&](double p) {
      if (times.empty()) return uint64_t(0);
      return times[std::min(times.size() - 1, static_cast<size_t>(p * times.size()))];
    };
    std::cout << "-- " << results.size() << " analyses:";
    for (const auto& [c, n] : class_counts) std::cout << " " << c << "=" << n;
    std::cout << "; interrupted=" << interrupted;
    if (!cfg.stable)
      std::cout << "; p50=" << pct(0.50) << "ms p90=" << pct(0.90) << "ms max="
                << (times.empty() ? 0 : times.back()) << "ms";
    std::cout << "\n";
  }

  if (!cfg.csv.empty()) {
    std::ofstream out(cfg.csv);
    out << "method,domain,refcount,statebits,millis,class\n";
    for (size_t i = 0; i < results.size(); ++i) {
      const auto& g = results[i];
      out << g.method << "," << g.domain << "," << tasks[i].ref_count << ","
          << g.stats.statebits << "," << (cfg.stable ? 0 : g.stats.millis) << ","
          << to_string(g.classification) << "\n";
    }
  }
  return kExitOk;
}

int run_validate(const AnalyzeConfig& cfg) {
  scfg::SummaryTable stubs;
  if (!cfg.stubs.empty()) stubs = scfg::load_summaries(cfg.stubs);
  int rc = kExitOk;
  for (const auto& path : cfg.inputs) {
    sir::TypedProgram tp;
    try {
      tp = sir::typecheck(sir::parse_program(read_file(path)));
    } catch (const std::exception& e) {
      std::cerr << "error: " << path << ": " << e.what() << "\n";
      return kExitInputError;
    }
    std::vector<std::string> methods;
    for (const auto& m : tp.program().methods) methods.push_back(m.name);
    std::sort(methods.begin(), methods.end());
    for (const auto& name : methods) {
      for (const auto& d : domains_of(cfg.domain)) {
        try {
          scfg::EncodeOptions eo;
          eo.assume_worst = cfg.assume_worst;
          scfg::EncodedMethod enc =
              scfg::encode_method(tp, name, heap::HeapFamily::by_name(d), stubs, eo);
          scfg::ValidationReport report = scfg::validate_scfg(enc.scfg);
          uint32_t bits = 0;
          for (sym::Var v : enc.scfg.state_vars) bits += enc.scfg.space->info(v).bit_width;
          std::cout << name << " [" << d << "] locations=" << enc.scfg.location_count()
                    << " statebits=" << bits << (report.ok() ? " valid" : " INVALID") << "\n";
          for (const auto& w : enc.warnings) std::cout << "  note: " << w << "\n";
          if (!report.ok()) {
            for (const auto& issue : report.issues) std::cout << "  " << issue.what << "\n";
            rc = kExitViolations;
          }
        } catch (const sir::IrreducibleCfg& e) {
          std::cerr << "error: " << name << " [" << d << "]: " << e.what() << "\n";
          rc = kExitInputError;
        } catch (const scfg::EncodeError& e) {
          std::cerr << "error: " << name << " [" << d << "]: " << e.what() << "\n";
          rc = std::string(e.what()).find("no summary") != std::string::npos ? kExitMissingStub
                                                                             : kExitInputError;
        }
      }
    }
  }
  return rc;
}

struct XcheckConfig {
  std::string suite;
  std::string domain = "deep";
  uint32_t refs = 3;
  uint64_t trials = 10000;
  uint64_t pairs = 100;
  uint64_t budget = 10000;
  uint64_t seed = 1;
  uint32_t max_refs = 4;
  std::string mutant = "none";
  std::string program;
  std::string method;
  uint32_t gen_corpus = 0;
  uint64_t gen_seed = 1;
  bool coherent = false;
  bool override_guard = false;
  bool json = false;
};

void print_report(const crt::CheckReport& r, bool as_json) {
  if (as_json) {
    std::cout << r.to_json() << "\n";
    return;
  }
  std::cout << r.check << " [" << r.domain << "] trials=" << r.trials << " cases=" << r.cases
            << " skipped=" << r.skipped << " violations=" << r.violations.size() << "\n";
  for (const auto& n : r.notes) std::cout << "  note: " << n << "\n";
  for (const auto& v : r.violations) {
    std::cout << "  violation: " << v.description << "\n";
    if (!v.reproducer.empty()) {
      std::istringstream ss(v.reproducer);
      std::string line;
      while (std::getline(ss, line)) std::cout << "    " << line << "\n";
    }
  }
}

int run_xcheck(const XcheckConfig& cfg) {
  heap::TransformerBug bug = heap::bug_by_name(cfg.mutant);
  bool all_ok = true;

  if (cfg.suite == "inductive") {
    for (const auto& d : domains_of(cfg.domain)) {
      crt::InductiveOptions opts;
      opts.bug = bug;
      opts.coherent_prestates = cfg.coherent;
      crt::CheckReport r = crt::check_inductive(d, cfg.refs, opts);
      print_report(r, cfg.json);
      all_ok &= r.ok();
    }
    return all_ok ? kExitOk : kExitViolations;
  }

  if (cfg.suite == "abstraction") {
    for (const auto& d : domains_of(cfg.domain)) {
      crt::AbstractionCheckOptions opts;
      opts.trials = cfg.trials;
      opts.seed = cfg.seed;
      opts.max_refs = cfg.max_refs;
      opts.bug = bug;
      crt::CheckReport r = crt::check_secure_abstraction(d, opts);
      print_report(r, cfg.json);
      all_ok &= r.ok();
    }
    return all_ok ? kExitOk : kExitViolations;
  }

  if (cfg.suite == "ni") {
    std::vector<std::pair<std::string, std::string>> sources;  // (name, text)
    if (!cfg.program.empty()) {
      sources.emplace_back(cfg.program, read_file(cfg.program));
    } else if (cfg.gen_corpus > 0) {
      gen::GenOptions gopts;
      for (uint32_t i = 0; i < cfg.gen_corpus; ++i)
        sources.emplace_back("generated-" + std::to_string(i),
                             gen::generate_program(gopts, 1, cfg.gen_seed + i));
    } else {
      std::cerr << "error: ni suite needs --program or --gen-corpus\n";
      return kExitInputError;
    }
    for (const auto& [name, text] : sources) {
      sir::TypedProgram tp;
      try {
        tp = sir::typecheck(sir::parse_program(text));
      } catch (const std::exception& e) {
        std::cerr << "error: " << name << ": " << e.what() << "\n";
        return kExitInputError;
      }
      for (const auto& m : tp.program().methods) {
        if (!cfg.method.empty() && m.name != cfg.method) continue;
        for (const auto& d : domains_of(cfg.domain)) {
          try {
            scfg::EncodedMethod enc =
                scfg::encode_method(tp, m.name, heap::HeapFamily::by_name(d), {});
            infer::Guard g = infer::synthesize_guard_from(enc, m.name, d);
            crt::NiCheckOptions opts;
            opts.pairs = cfg.pairs;
            opts.budget = cfg.budget;
            opts.seed = cfg.seed;
            opts.override_guard_true = cfg.override_guard;
            crt::CheckReport r = crt::check_noninterference(tp, m.name, enc, g, opts);
            print_report(r, cfg.json);
            all_ok &= r.ok();
          } catch (const std::exception& e) {
            std::cerr << "error: " << name << "/" << m.name << " [" << d << "]: " << e.what()
                      << "\n";
            return kExitInputError;
          }
        }
      }
    }
    return all_ok ? kExitOk : kExitViolations;
  }

  std::cerr << "error: unknown suite '" << cfg.suite
            << "' (expected inductive|abstraction|ni)\n";
  return kExitInputError;
}

int run_report(const std::vector<std::string>& inputs, const std::string& csv) {
  std::map<std::string, uint64_t> class_counts;
  uint64_t total = 0, interrupted = 0;
  std::vector<nlohmann::json> records;
  for (const auto& path : inputs) {
    nlohmann::json doc = nlohmann::json::parse(read_file(path));
    if (!doc.is_array()) {
      std::cerr << "error: " << path << " is not a guard-record array\n";
      return kExitInputError;
    }
    for (const auto& rec : doc) records.push_back(rec);
  }
  std::sort(records.begin(), records.end(), [](const nlohmann::json& a, const nlohmann::json& b) {
    return std::make_pair(a.at("method").get<std::string>(), a.at("domain").get<std::string>()) <
           std::make_pair(b.at("method").get<std::string>(), b.at("domain").get<std::string>());
  });
  for (const auto& rec : records) {
    ++total;
    class_counts[rec.at("classification").get<std::string>()]++;
    if (rec.value("interrupted", false)) ++interrupted;
  }
  std::cout << "guards: " << total;
  for (const auto& [c, n] : class_counts) std::cout << " " << c << "=" << n;
  std::cout << " interrupted=" << interrupted << "\n";
  if (!csv.empty()) {
    std::ofstream out(csv);
    out << "method,domain,statebits,millis,class\n";
    for (const auto& rec : records)
      out << rec.at("method").get<std::string>() << "," << rec.at("domain").get<std::string>()
          << "," << rec.at("stats").at("statebits") << "," << rec.at("stats").at("millis")
          << "," << rec.at("classification").get<std::string>() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polymorphic information-flow guard inference over symbolic abstract heaps"};
  app.require_subcommand(1);

  AnalyzeConfig acfg;
  CLI::App* analyze = app.add_subcommand("analyze", "Infer guards for every method");
  analyze->add_option("inputs", acfg.inputs, "input .sir files")->required();
  analyze->add_option("--domain", acfg.domain, "deep|shal|dumb|all");
  analyze->add_option("--stubs", acfg.stubs, "method summary stub file (JSON)");
  analyze->add_option("--format", acfg.format, "text|json|dnf")
      ->check(CLI::IsMember({"text", "json", "dnf"}));
  analyze->add_option("--timeout", acfg.timeout_s, "per-method timeout, seconds");
  analyze->add_option("--node-cap", acfg.node_cap, "per-method diagram node cap");
  analyze->add_flag("--assume-worst", acfg.assume_worst,
                    "havoc summaries for methods without stubs");
  analyze->add_option("--jobs", acfg.jobs, "parallel analyses");
  analyze->add_option("--seed", acfg.seed, "seed recorded in reports");
  analyze->add_option("--csv", acfg.csv, "write per-method CSV");
  analyze->add_flag("--stable", acfg.stable, "zero timing fields (byte-stable output)");

  AnalyzeConfig vcfg;
  vcfg.domain = "all";
  CLI::App* validate = app.add_subcommand("validate", "Encode and validate without solving");
  validate->add_option("inputs", vcfg.inputs, "input .sir files")->required();
  validate->add_option("--domain", vcfg.domain, "deep|shal|dumb|all");
  validate->add_option("--stubs", vcfg.stubs, "method summary stub file (JSON)");
  validate->add_flag("--assume-worst", vcfg.assume_worst,
                     "havoc summaries for methods without stubs");

  XcheckConfig xcfg;
  CLI::App* xcheck = app.add_subcommand("xcheck", "Run the executable soundness suites");
  xcheck->add_option("--suite", xcfg.suite, "inductive|abstraction|ni")->required();
  xcheck->add_option("--domain", xcfg.domain, "deep|shal|dumb|all");
  xcheck->add_option("--refs", xcfg.refs, "reference-set size for the exhaustive suite");
  xcheck->add_option("--trials", xcfg.trials, "randomized trials");
  xcheck->add_option("--pairs", xcfg.pairs, "state pairs per method (ni)");
  xcheck->add_option("--budget", xcfg.budget, "step budget per run (ni)");
  xcheck->add_option("--seed", xcfg.seed, "random seed");
  xcheck->add_option("--max-refs", xcfg.max_refs, "max sampled references (abstraction)");
  xcheck->add_option("--mutant", xcfg.mutant,
                     "none|drop-fieldalias|skip-freach-upgrade|drop-alias-on-copy");
  xcheck->add_option("--program", xcfg.program, "program file (ni)");
  xcheck->add_option("--method", xcfg.method, "only this method (ni)");
  xcheck->add_option("--gen-corpus", xcfg.gen_corpus, "generate N one-method programs (ni)");
  xcheck->add_option("--gen-seed", xcfg.gen_seed, "corpus generator seed");
  xcheck->add_flag("--coherent", xcfg.coherent,
                   "restrict the inductive enumeration to relationally coherent pre-states");
  xcheck->add_flag("--override-guard", xcfg.override_guard,
                   "force the guard to true (mutation control)");
  xcheck->add_flag("--json", xcfg.json, "emit reports as JSON");

  std::vector<std::string> rinputs;
  std::string rcsv;
  CLI::App* report = app.add_subcommand("report", "Summarize guard-record JSON files");
  report->add_option("inputs", rinputs, "guard-record JSON files")->required();
  report->add_option("--csv", rcsv, "write summary CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return run_analyze(acfg);
    if (validate->parsed()) return run_validate(vcfg);
    if (xcheck->parsed()) return run_xcheck(xcfg);
    if (report->parsed()) return run_report(rinputs, rcsv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitOk;
}
