// SPDX-License-Identifier: Apache-2.0
#include "diolab/cli.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "diolab/arith_stats.hpp"
#include "diolab/errors.hpp"
#include "diolab/interval_set.hpp"
#include "diolab/limsup.hpp"
#include "diolab/overlaps.hpp"
#include "diolab/rng.hpp"
#include "diolab/schmidt.hpp"
#include "diolab/sieve.hpp"

namespace diolab::cli {

namespace {

constexpr int kDigits = 8;

std::string dec(const Rational& x) { return rational_to_decimal(x, kDigits); }
std::string rat(const Rational& x) { return rational_to_string(x); }
std::string b2s(bool b) { return b ? "true" : "false"; }

void csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

std::string join_grid(const std::vector<long>& grid) {
  std::string s;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(grid[i]);
  }
  return s;
}

long parse_long_field(const std::string& text, const std::string& key) {
  try {
    std::size_t pos = 0;
    long v = std::stol(text, &pos);
    if (pos != text.size()) throw UsageError("");
    return v;
  } catch (const std::exception&) {
    throw UsageError("key '" + key + "' needs an integer, got '" + text + "'");
  }
}

std::uint64_t parse_u64_field(const std::string& text, const std::string& key) {
  try {
    if (text.empty() || text[0] == '-') throw UsageError("");
    std::size_t pos = 0;
    std::uint64_t v = std::stoull(text, &pos);
    if (pos != text.size()) throw UsageError("");
    return v;
  } catch (const std::exception&) {
    throw UsageError("key '" + key + "' needs an unsigned integer, got '" + text + "'");
  }
}

std::vector<long> parse_grid_field(const std::string& text) {
  std::vector<long> grid;
  if (text.empty()) return grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) grid.push_back(parse_long_field(item, "Qgrid"));
  return grid;
}

// Bare rationals become constant targets; the spelled-out surd aliases keep
// the shell-friendly form usable.
std::string normalize_gamma(const std::string& spec) {
  if (spec == "surd:sqrt2-1") return "surd:sqrt2m1";
  if (spec == "surd:sqrt3-1") return "surd:sqrt3m1";
  if (spec == "random" || spec.find(':') != std::string::npos) return spec;
  return "const:" + spec;
}

mpfr_prec_t prec_of(const ExperimentConfig& cfg) {
  return static_cast<mpfr_prec_t>(cfg.precision);
}

unsigned threads_of(const ExperimentConfig& cfg) {
  return static_cast<unsigned>(cfg.threads);
}

std::vector<long> points_or(const std::vector<long>& grid, long single) {
  if (!grid.empty()) return grid;
  return {single};
}

// ----- measure ------------------------------------------------------------

int run_measure(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.q < 1) throw UsageError("measure needs --q >= 1");
  PsiSpec psi = make_psi(cfg.psi);
  if (!psi.exact()) throw UsageError("measure needs an exactly evaluable psi");
  make_gamma(normalize_gamma(cfg.gamma), cfg.seed.value_or(0));
  Rational twice = Rational(2) * psi.eval(cfg.q);
  Rational m = std::min(Rational(1), twice);
  csv_row(out, {"q", "measure", "measure_dec"});
  csv_row(out, {std::to_string(cfg.q), rat(m), dec(m)});
  return 0;
}

// ----- overlap --------------------------------------------------------------

int run_overlap(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.Q < 2) throw UsageError("overlap needs --Q >= 2");
  PsiSpec psi = make_psi(cfg.psi);
  if (!psi.exact()) throw UsageError("overlap needs an exactly evaluable psi");
  TargetSeq gamma = make_gamma(normalize_gamma(cfg.gamma), cfg.seed.value_or(0));
  csv_row(out, {"q", "r", "meas", "meas_dec", "bound", "bound_dec", "verdict"});
  long failures = 0;
  for (long q = 2; q <= cfg.Q; ++q) {
    for (long r = 1; r < q; ++r) {
      OverlapRow row = overlap_row(q, r, psi, gamma);
      if (!row.verdict) ++failures;
      csv_row(out, {std::to_string(q), std::to_string(r), rat(row.meas), dec(row.meas),
                    rat(row.bound), dec(row.bound), b2s(row.verdict)});
    }
  }
  if (failures > 0) {
    err << "overlap bound falsified on " << failures << " pair(s)\n";
    return 2;
  }
  return 0;
}

// ----- qia ------------------------------------------------------------------

std::map<long, QiaPoint> qia_points(const std::vector<long>& grid, const PsiSpec& psi,
                                    const GammaValue& gamma, unsigned threads) {
  for (long Qv : grid)
    if (Qv < 1) throw UsageError("qia grid points must be >= 1");
  long qmax = *std::max_element(grid.begin(), grid.end());
  bool snapshots = std::all_of(grid.begin(), grid.end(), [&](long x) {
    return x == qmax || std::has_single_bit(static_cast<unsigned long>(x));
  });
  std::map<long, QiaPoint> pts;
  if (snapshots) {
    for (const QiaPoint& p : qia_grid(qmax, psi, gamma, QiaMode::kAuto, threads)) pts[p.Q] = p;
  } else {
    for (long Qv : grid)
      if (!pts.count(Qv)) pts[Qv] = qia_ratio(Qv, psi, gamma, QiaMode::kAuto, threads);
  }
  return pts;
}

int run_qia(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.Qgrid.empty()) throw UsageError("qia needs --Qgrid");
  PsiSpec psi = make_psi(cfg.psi);
  TargetSeq gseq = make_gamma(normalize_gamma(cfg.gamma), cfg.seed.value_or(0));
  if (gseq.kind() != TargetSeq::Kind::kConstant)
    throw UsageError("qia needs a constant target");
  std::map<long, QiaPoint> pts = qia_points(cfg.Qgrid, psi, gseq.at(1), threads_of(cfg));
  csv_row(out, {"Q", "psi_sum", "psi_sum_dec", "pairs_lo", "pairs_hi", "rho_lo", "rho_hi",
                "rho_dec", "exact"});
  for (long Qv : cfg.Qgrid) {
    const QiaPoint& p = pts.at(Qv);
    Rational mid = (p.rho_lo + p.rho_hi) / 2;
    csv_row(out, {std::to_string(p.Q), rat(p.psi_sum), dec(p.psi_sum), rat(p.num_lo),
                  rat(p.num_hi), rat(p.rho_lo), rat(p.rho_hi), dec(mid), b2s(p.exact)});
  }
  return 0;
}

// ----- counting -------------------------------------------------------------

int run_counting(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.Q < 1) throw UsageError("counting needs --Q >= 1");
  if (cfg.alphas < 1) throw UsageError("counting needs --alphas >= 1");
  PsiSpec psi = make_psi(cfg.psi);
  std::uint64_t seed = *cfg.seed;
  SeededStream alpha_stream(seed, "counting-alpha");
  std::string gnorm = normalize_gamma(cfg.gamma);
  TargetSeq gamma = gnorm == "random"
                        ? TargetSeq::seeded_uniform(SeededStream(seed, "counting-gamma").at(0))
                        : make_gamma(gnorm, seed);
  auto [phi_lo, phi_hi] = phi_sum(psi, cfg.Q, prec_of(cfg));
  Rational phi_mid = (phi_lo + phi_hi) / 2;
  if (!(phi_mid > 0)) throw UsageError("counting needs a positive psi mass");
  csv_row(out, {"seed", "alpha_id", "Q", "N_lo", "N_hi", "phi_lo", "phi_hi", "phi_dec",
                "ratio_dec"});
  for (long i = 0; i < cfg.alphas; ++i) {
    Rational alpha = alpha_stream.unit_rational_at(static_cast<std::uint64_t>(i));
    HitCount h = count_hits(alpha, psi, gamma, cfg.Q);
    Rational ratio = Rational(h.lo + h.hi) / (Rational(2) * phi_mid);
    csv_row(out, {std::to_string(seed), std::to_string(i), std::to_string(cfg.Q),
                  std::to_string(h.lo), std::to_string(h.hi), rat(phi_lo), rat(phi_hi),
                  dec(phi_mid), dec(ratio)});
  }
  return 0;
}

// ----- equidist -------------------------------------------------------------

int run_equidist(const ExperimentConfig& cfg, std::ostream& out) {
  std::vector<long> qs = points_or(cfg.Qgrid, cfg.q);
  for (long q : qs)
    if (q < 1) throw UsageError("equidist needs q >= 1");
  TargetSeq gseq = make_gamma(normalize_gamma(cfg.gamma), cfg.seed.value_or(0));
  csv_row(out, {"q", "s_count", "phi_q", "disc", "disc_dec"});
  for (long q : qs) {
    SchmidtApprox red = dirichlet_reduce(gseq.at(q), q);
    SqSet s = build_Sq(q, red);
    std::vector<Rational> points;
    points.reserve(s.members.size());
    for (long a : s.members) points.push_back(make_rational(Integer(a), Integer(q)));
    Rational disc = star_discrepancy(points);
    csv_row(out, {std::to_string(q), std::to_string(s.members.size()),
                  std::to_string(totient_u64(static_cast<std::uint64_t>(q))), rat(disc),
                  dec(disc)});
  }
  return 0;
}

// ----- divisors -------------------------------------------------------------

int run_divisors(const ExperimentConfig& cfg, std::ostream& out) {
  std::vector<long> xs = points_or(cfg.Qgrid, cfg.q);
  for (long x : xs)
    if (x < 3) throw UsageError("divisors needs x >= 3");
  csv_row(out, {"x", "kac_fraction", "kac_fraction_dec", "recip_ratio_dec"});
  for (long x : xs) {
    Rational kf = kac_fraction(static_cast<std::uint64_t>(x));
    FloatInterval rr = recip_divisor_ratio(static_cast<std::uint64_t>(x), prec_of(cfg));
    csv_row(out, {std::to_string(x), rat(kf), dec(kf), rr.mid_to_string(kDigits)});
  }
  return 0;
}

// ----- pigeonhole -----------------------------------------------------------

int run_pigeonhole(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  std::vector<long> qs = points_or(cfg.Qgrid, cfg.Q);
  long qmax = 0;
  for (long Qv : qs) {
    if (Qv < 1) throw UsageError("pigeonhole needs Q >= 1");
    qmax = std::max(qmax, Qv);
  }
  PartitionSpec partition = make_partition(cfg.partition);
  PsiSpec psi = make_psi(cfg.psi);
  SieveTables tables = sieve(static_cast<std::uint64_t>(qmax));
  Rational ell(partition.classes());
  csv_row(out, {"Q", "ell", "winner", "winner_sum_lo", "winner_sum_hi", "total_lo", "total_hi",
                "winner_sum_dec", "total_dec", "ok"});
  int rc = 0;
  for (long Qv : qs) {
    if (psi.exact()) {
      PigeonholeResult res = pigeonhole_select(partition, psi, Qv, tables);
      const Rational& w = res.sums[static_cast<std::size_t>(res.winner) - 1];
      bool ok = ell * w >= res.total;
      if (!ok) rc = 2;
      csv_row(out, {std::to_string(Qv), rat(ell), std::to_string(res.winner), rat(w), rat(w),
                    rat(res.total), rat(res.total), dec(w), dec(res.total), b2s(ok)});
    } else {
      PigeonholeBounds b = pigeonhole_select_bounds(partition, psi, Qv, tables, cfg.precision);
      const FloatInterval& w = b.sums[static_cast<std::size_t>(b.winner) - 1];
      csv_row(out, {std::to_string(Qv), rat(ell), std::to_string(b.winner),
                    rat(w.lo_rational()), rat(w.hi_rational()), rat(b.total.lo_rational()),
                    rat(b.total.hi_rational()), w.mid_to_string(kDigits),
                    b.total.mid_to_string(kDigits), b2s(b.certified)});
    }
  }
  if (rc == 2) err << "pigeonhole winner fell below total / l\n";
  return rc;
}

// ----- counterexample -------------------------------------------------------

int run_counterexample(const ExperimentConfig& cfg, std::ostream& out) {
  long k_max = cfg.Q > 0 ? cfg.Q : 6;
  if (k_max > 32) throw UsageError("counterexample k_max is capped at 32");
  csv_row(out, {"k", "lo", "hi", "even", "even_part", "even_part_dec", "odd_part",
                "odd_part_dec", "odd_exact"});
  for (const BlockSum& b : block_sums(static_cast<int>(k_max))) {
    csv_row(out, {std::to_string(b.k), b.lo.get_str(), b.hi.get_str(), b2s(b.even),
                  rat(b.even_part), dec(b.even_part), rat(b.odd_part), dec(b.odd_part),
                  b2s(b.odd_part_exact)});
  }
  return 0;
}

// ----- bc -------------------------------------------------------------------

int run_bc(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.Q < 1) throw UsageError("bc needs --Q >= 1");
  PsiSpec psi = make_psi(cfg.psi);
  TargetSeq gamma = make_gamma(normalize_gamma(cfg.gamma), cfg.seed.value_or(0));
  OverlapMatrix m = OverlapMatrix::from_circle(cfg.Q, psi, gamma, threads_of(cfg));
  csv_row(out, {"Qprime", "mu_sum", "mu_sum_dec", "pair_sum", "pair_sum_dec", "bc_bound",
                "bc_bound_dec"});
  for (long g : m.grid()) {
    Rational ms = m.mu_sum(g);
    Rational ps = m.pair_sum(g);
    Rational bc = bc_lower_bound(m, g);
    csv_row(out, {std::to_string(g), rat(ms), dec(ms), rat(ps), dec(ps), rat(bc), dec(bc)});
  }
  return 0;
}

// ----- yu -------------------------------------------------------------------

int run_yu(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.Q < 1) throw UsageError("yu needs --Q >= 1");
  PsiSpec psi = make_psi(cfg.psi);
  if (!psi.exact()) throw UsageError("yu weights need an exactly evaluable psi");
  std::vector<Rational> weights;
  weights.reserve(static_cast<std::size_t>(cfg.Q));
  for (long q = 1; q <= cfg.Q; ++q) weights.push_back(psi.eval(q));
  YuDecomposition d = yu_classes_default(cfg.Q, weights);
  csv_row(out, {"ell", "count", "first_q", "sigma", "sigma_dec"});
  for (const auto& [ell, members] : d.classes) {
    const Rational& sigma = d.sigma_ell.at(ell);
    csv_row(out, {std::to_string(ell), std::to_string(members.size()),
                  std::to_string(members.front()), rat(sigma), dec(sigma)});
  }
  return 0;
}

// ----- uniformity -----------------------------------------------------------

int run_uniformity(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.Q < 1) throw UsageError("uniformity needs --Q >= 1");
  Rational lo = parse_rational(cfg.ulo);
  Rational hi = parse_rational(cfg.uhi);
  CircleIntervalSet U = CircleIntervalSet::normalize({{lo, hi}});
  PsiSpec psi = make_psi(cfg.psi);
  TargetSeq gamma = make_gamma(normalize_gamma(cfg.gamma), cfg.seed.value_or(0));
  UniformityReport rep = uniformity_check(U, psi, gamma, 1, cfg.Q);
  csv_row(out, {"q", "meas_aq", "meas_aq_dec", "inter", "inter_dec", "ratio", "ratio_dec"});
  for (const UniformityRow& r : rep.rows) {
    csv_row(out, {std::to_string(r.q), rat(r.meas_aq), dec(r.meas_aq), rat(r.inter),
                  dec(r.inter), rat(r.ratio), dec(r.ratio)});
  }
  err << "q0=" << rep.q0 << " min_ratio=" << rat(rep.min_ratio) << "\n";
  return 0;
}

// ----- baseline -------------------------------------------------------------

struct BaselineData {
  std::string metric;
  std::string psi = "recip";
  std::string gamma = "const:0";
  std::vector<long> Qgrid;
  long Q = 0;
  std::string delta = "1/5";
  Rational value;
  Rational tolerance = make_rational(5, 4);
};

std::string render_baseline(const BaselineData& b) {
  std::ostringstream os;
  os << "metric=" << b.metric << "\n";
  os << "psi=" << b.psi << "\n";
  os << "gamma=" << b.gamma << "\n";
  os << "Qgrid=" << join_grid(b.Qgrid) << "\n";
  os << "Q=" << b.Q << "\n";
  os << "delta=" << b.delta << "\n";
  os << "value=" << rat(b.value) << "\n";
  os << "tolerance=" << rat(b.tolerance) << "\n";
  return os.str();
}

BaselineData parse_baseline(const std::string& text) {
  BaselineData b;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("baseline line without '=': '" + line + "'");
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "metric") b.metric = val;
    else if (key == "psi") b.psi = val;
    else if (key == "gamma") b.gamma = val;
    else if (key == "Qgrid") b.Qgrid = parse_grid_field(val);
    else if (key == "Q") b.Q = parse_long_field(val, key);
    else if (key == "delta") b.delta = val;
    else if (key == "value") b.value = parse_rational(val);
    else if (key == "tolerance") b.tolerance = parse_rational(val);
    else throw UsageError("unknown baseline key '" + key + "'");
  }
  if (b.metric.empty()) throw UsageError("baseline file lacks a metric");
  return b;
}

Rational baseline_value(const BaselineData& b, unsigned threads) {
  if (b.metric == "qia") {
    if (b.Qgrid.empty()) throw UsageError("qia baseline needs a Q grid");
    PsiSpec psi = make_psi(b.psi);
    TargetSeq gseq = make_gamma(normalize_gamma(b.gamma), 0);
    if (gseq.kind() != TargetSeq::Kind::kConstant)
      throw UsageError("qia baseline needs a constant target");
    std::map<long, QiaPoint> pts = qia_points(b.Qgrid, psi, gseq.at(1), threads);
    Rational worst(0);
    for (const auto& [Qv, p] : pts) worst = std::max(worst, p.rho_hi);
    return worst;
  }
  if (b.metric == "lemn") {
    if (b.Q < 2) throw UsageError("lemn baseline needs --Q >= 2");
    TargetSeq gseq = make_gamma(normalize_gamma(b.gamma), 0);
    GammaValue g = gseq.at(1);
    Rational delta = parse_rational(b.delta);
    Rational worst(0);
    for (long q = 2; q <= b.Q; ++q) {
      LemNReport rep = lemN_verify(q, delta, g);
      Rational top = rep.max_ratio_row().ratio.hi_rational();
      worst = std::max(worst, top);
    }
    return worst;
  }
  throw UsageError("baseline metric must be 'qia' or 'lemn'");
}

int run_baseline(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.baseline.empty()) throw UsageError("baseline needs --baseline PATH");
  csv_row(out, {"metric", "value", "value_dec", "recorded", "recorded_dec", "tolerance",
                "pass"});
  if (cfg.mode == "record") {
    BaselineData b;
    b.metric = cfg.metric;
    b.psi = cfg.psi;
    b.gamma = normalize_gamma(cfg.gamma);
    b.Qgrid = cfg.Qgrid;
    b.Q = cfg.Q;
    b.delta = cfg.delta;
    b.value = baseline_value(b, threads_of(cfg));
    std::ofstream file(cfg.baseline, std::ios::binary);
    if (!file) throw UsageError("cannot write baseline file '" + cfg.baseline + "'");
    file << render_baseline(b);
    csv_row(out, {b.metric, rat(b.value), dec(b.value), rat(b.value), dec(b.value),
                  rat(b.tolerance), "true"});
    return 0;
  }
  if (cfg.mode == "compare") {
    std::ifstream file(cfg.baseline, std::ios::binary);
    if (!file) throw UsageError("cannot read baseline file '" + cfg.baseline + "'");
    std::ostringstream buf;
    buf << file.rdbuf();
    BaselineData b = parse_baseline(buf.str());
    if (!cfg.metric.empty() && cfg.metric != b.metric)
      throw UsageError("baseline file metric '" + b.metric + "' does not match --metric");
    Rational fresh = baseline_value(b, threads_of(cfg));
    bool pass = fresh <= Rational(b.value * b.tolerance);
    csv_row(out, {b.metric, rat(fresh), dec(fresh), rat(b.value), dec(b.value),
                  rat(b.tolerance), b2s(pass)});
    if (!pass) {
      err << "baseline regression: " << rat(fresh) << " exceeds " << rat(b.value) << " * "
          << rat(b.tolerance) << "\n";
      return 1;
    }
    return 0;
  }
  throw UsageError("baseline mode must be 'record' or 'compare'");
}

}  // namespace

std::string render_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "subcommand=" << c.subcommand << "\n";
  os << "q=" << c.q << "\n";
  os << "Q=" << c.Q << "\n";
  os << "Qgrid=" << join_grid(c.Qgrid) << "\n";
  os << "gamma=" << c.gamma << "\n";
  os << "psi=" << c.psi << "\n";
  os << "partition=" << c.partition << "\n";
  os << "seed=" << (c.seed ? std::to_string(*c.seed) : "") << "\n";
  os << "alphas=" << c.alphas << "\n";
  os << "delta=" << c.delta << "\n";
  os << "ulo=" << c.ulo << "\n";
  os << "uhi=" << c.uhi << "\n";
  os << "metric=" << c.metric << "\n";
  os << "mode=" << c.mode << "\n";
  os << "precision=" << c.precision << "\n";
  os << "threads=" << c.threads << "\n";
  os << "out=" << c.out << "\n";
  os << "baseline=" << c.baseline << "\n";
  return os.str();
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig c;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line without '=': '" + line + "'");
    std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "subcommand") c.subcommand = val;
    else if (key == "q") c.q = parse_long_field(val, key);
    else if (key == "Q") c.Q = parse_long_field(val, key);
    else if (key == "Qgrid") c.Qgrid = parse_grid_field(val);
    else if (key == "gamma") c.gamma = val;
    else if (key == "psi") c.psi = val;
    else if (key == "partition") c.partition = val;
    else if (key == "seed") {
      if (val.empty()) c.seed.reset();
      else c.seed = parse_u64_field(val, key);
    } else if (key == "alphas") c.alphas = parse_long_field(val, key);
    else if (key == "delta") c.delta = val;
    else if (key == "ulo") c.ulo = val;
    else if (key == "uhi") c.uhi = val;
    else if (key == "metric") c.metric = val;
    else if (key == "mode") c.mode = val;
    else if (key == "precision") c.precision = parse_long_field(val, key);
    else if (key == "threads") c.threads = parse_long_field(val, key);
    else if (key == "out") c.out = val;
    else if (key == "baseline") c.baseline = val;
    else throw UsageError("unknown config key '" + key + "'");
  }
  return c;
}

OverlapRow overlap_row(long q, long r, const PsiSpec& psi, const TargetSeq& gamma) {
  if (q < 2 || r < 1 || r >= q) throw UsageError("overlap_row needs 1 <= r < q");
  OverlapRow row;
  row.q = q;
  row.r = r;
  const Rational half = make_rational(1, 2);
  Rational pq = psi.eval(q);
  Rational pr = psi.eval(r);
  if (pq > half || pr > half) {
    Rational two_pq = Rational(2) * pq;
    Rational two_pr = Rational(2) * pr;
    Rational mq = std::min(Rational(1), two_pq);
    Rational mr = std::min(Rational(1), two_pr);
    row.meas = std::min(mq, mr);
    long g = std::gcd(q, r);
    row.bound = Rational(2) * mq * mr + make_rational(g, q) * mq;
    row.verdict = row.meas <= row.bound;
  } else {
    PairStats st = overlap_bound_check(q, r, psi, gamma);
    row.meas = st.meas_qr;
    row.bound = st.bound_val;
    row.verdict = st.verdict;
  }
  return row;
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const std::string& sc = cfg.subcommand;
    if (cfg.precision < 32 || cfg.precision > 4096)
      throw UsageError("precision must lie in [32, 4096]");
    if (cfg.threads < 1 || cfg.threads > 64) throw UsageError("threads must lie in [1, 64]");
    bool randomized = sc == "counting" || normalize_gamma(cfg.gamma) == "random";
    if (randomized && !cfg.seed)
      throw UsageError("this experiment randomizes; provide --seed");
    if (sc == "measure") return run_measure(cfg, out);
    if (sc == "overlap") return run_overlap(cfg, out, err);
    if (sc == "qia") return run_qia(cfg, out);
    if (sc == "counting") return run_counting(cfg, out);
    if (sc == "equidist") return run_equidist(cfg, out);
    if (sc == "divisors") return run_divisors(cfg, out);
    if (sc == "pigeonhole") return run_pigeonhole(cfg, out, err);
    if (sc == "counterexample") return run_counterexample(cfg, out);
    if (sc == "bc") return run_bc(cfg, out);
    if (sc == "yu") return run_yu(cfg, out);
    if (sc == "uniformity") return run_uniformity(cfg, out, err);
    if (sc == "baseline") return run_baseline(cfg, out, err);
    throw UsageError("unknown subcommand '" + sc + "'");
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const PrecisionError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace diolab::cli
