// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "diolab/cli.hpp"

namespace {

// Every flag is collected as text and folded into one key=value document,
// config file first, command line second, so the file and the flags go
// through the same parser and the same override order every time.
struct RawFlags {
  std::string config, q, Q, Qgrid, gamma, psi, partition, seed, alphas, delta, ulo, uhi,
      metric, mode, precision, threads, out, baseline;
};

void add_options(CLI::App* cmd, RawFlags& raw) {
  cmd->add_option("--config", raw.config, "key=value config file; flags override its entries");
  cmd->add_option("--q", raw.q, "single index (measure, equidist, divisors)");
  cmd->add_option("--Q", raw.Q, "sweep bound");
  cmd->add_option("--Qgrid", raw.Qgrid, "comma-separated evaluation grid");
  cmd->add_option("--gamma", raw.gamma, "target spec: R, const:R, surd:NAME, random, alt:R1,R2");
  cmd->add_option("--psi", raw.psi, "psi spec: recip, pow:S, const:R, logq, cex0, cex1, table:PATH");
  cmd->add_option("--partition", raw.partition, "partition spec: residues:M, blocks");
  cmd->add_option("--seed", raw.seed, "seed, mandatory for randomized experiments");
  cmd->add_option("--alphas", raw.alphas, "counting: number of sampled alphas");
  cmd->add_option("--delta", raw.delta, "window exponent (rational)");
  cmd->add_option("--ulo", raw.ulo, "uniformity window lower endpoint");
  cmd->add_option("--uhi", raw.uhi, "uniformity window upper endpoint");
  cmd->add_option("--metric", raw.metric, "baseline metric: qia, lemn");
  cmd->add_option("--mode", raw.mode, "baseline mode: record, compare");
  cmd->add_option("--precision", raw.precision, "working precision in bits");
  cmd->add_option("--threads", raw.threads, "worker threads");
  cmd->add_option("--out", raw.out, "CSV output path; stdout when omitted");
  cmd->add_option("--baseline", raw.baseline, "baseline file path");
}

}  // namespace

int main(int argc, char** argv) {
  RawFlags raw;
  CLI::App app{"diolab: exact experiments on shifted fractional-part targets"};
  app.require_subcommand(0, 1);
  add_options(&app, raw);
  std::vector<CLI::App*> subs;
  for (const char* name :
       {"measure", "overlap", "qia", "counting", "equidist", "divisors", "pigeonhole",
        "counterexample", "bc", "yu", "uniformity", "baseline"}) {
    CLI::App* sub = app.add_subcommand(name);
    add_options(sub, raw);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  std::string text;
  if (!raw.config.empty()) {
    std::ifstream f(raw.config, std::ios::binary);
    if (!f) {
      std::cerr << "error: cannot read config '" << raw.config << "'\n";
      return 1;
    }
    std::ostringstream buf;
    buf << f.rdbuf();
    text = buf.str();
    if (!text.empty() && text.back() != '\n') text += '\n';
  }

  std::vector<CLI::App*> all = subs;
  all.push_back(&app);
  auto given = [&](const std::string& flag) {
    for (CLI::App* a : all)
      if (a->count(flag) > 0) return true;
    return false;
  };
  for (CLI::App* sub : subs)
    if (sub->parsed()) text += "subcommand=" + sub->get_name() + "\n";
  if (given("--q")) text += "q=" + raw.q + "\n";
  if (given("--Q")) text += "Q=" + raw.Q + "\n";
  if (given("--Qgrid")) text += "Qgrid=" + raw.Qgrid + "\n";
  if (given("--gamma")) text += "gamma=" + raw.gamma + "\n";
  if (given("--psi")) text += "psi=" + raw.psi + "\n";
  if (given("--partition")) text += "partition=" + raw.partition + "\n";
  if (given("--seed")) text += "seed=" + raw.seed + "\n";
  if (given("--alphas")) text += "alphas=" + raw.alphas + "\n";
  if (given("--delta")) text += "delta=" + raw.delta + "\n";
  if (given("--ulo")) text += "ulo=" + raw.ulo + "\n";
  if (given("--uhi")) text += "uhi=" + raw.uhi + "\n";
  if (given("--metric")) text += "metric=" + raw.metric + "\n";
  if (given("--mode")) text += "mode=" + raw.mode + "\n";
  if (given("--precision")) text += "precision=" + raw.precision + "\n";
  if (given("--threads")) text += "threads=" + raw.threads + "\n";
  if (given("--out")) text += "out=" + raw.out + "\n";
  if (given("--baseline")) text += "baseline=" + raw.baseline + "\n";

  diolab::cli::ExperimentConfig cfg;
  try {
    cfg = diolab::cli::parse_config(text);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (cfg.subcommand.empty()) {
    std::cerr << "error: no subcommand given\n" << app.help();
    return 1;
  }

  std::ofstream file;
  std::ostream* outp = &std::cout;
  if (!cfg.out.empty()) {
    file.open(cfg.out, std::ios::binary);
    if (!file) {
      std::cerr << "error: cannot write '" << cfg.out << "'\n";
      return 1;
    }
    outp = &file;
  }
  try {
    return diolab::cli::run_experiment(cfg, *outp, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
