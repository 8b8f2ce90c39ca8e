// SPDX-License-Identifier: Apache-2.0
#include "diolab/scenarios.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "diolab/errors.hpp"
#include "diolab/quad.hpp"

namespace diolab {

namespace {

// Blocks that fit in memory get summed term by term; beyond this the
// telescoping bound stands in.
constexpr unsigned long kEnumerableBlock = 1UL << 20;

void require_positive_q(long q) {
  if (q < 1) throw UsageError("psi/gamma evaluation needs q >= 1");
}

Rational inverse_square(long q) {
  Integer qq = Integer(q) * Integer(q);
  return make_rational(Integer(1), qq);
}

// Exact value of the counterexample pair at q.
Rational cex_eval(long q, int which) {
  if (q == 1) return Rational(1);  // below every block, so the q^(-2) clause
  int k = dexp_block_index(q);
  if (k % 2 == which % 2) return pow2_rat(-(1L << (k + 1)));
  return inverse_square(q);
}

}  // namespace

int dexp_block_index(long q) {
  if (q < 2) throw UsageError("block index needs q >= 2");
  unsigned m = static_cast<unsigned>(std::bit_width(static_cast<unsigned long long>(q)) - 1);
  return std::bit_width(m) - 1;
}

bool in_even_blocks(long q) {
  if (q < 1) throw UsageError("block membership needs q >= 1");
  if (q == 1) return false;
  return dexp_block_index(q) % 2 == 0;
}

PsiSpec PsiSpec::power(const Rational& c, const Rational& s) {
  if (sgn(c) < 0) throw UsageError("psi power kind needs c >= 0");
  if (sgn(s) < 0) throw UsageError("psi power kind needs s >= 0");
  PsiSpec p;
  p.kind_ = Kind::kPower;
  p.c_ = c;
  p.s_ = s;
  if (c == 1 && s == 1) {
    p.label_ = "recip";
  } else if (s == 0) {
    p.label_ = "const:" + rational_to_string(c);
  } else {
    p.label_ = "pow:" + rational_to_string(s);
    if (c != 1) p.label_ += "*" + rational_to_string(c);
  }
  return p;
}

PsiSpec PsiSpec::log_tempered() {
  PsiSpec p;
  p.kind_ = Kind::kLogTempered;
  p.label_ = "logq";
  return p;
}

PsiSpec PsiSpec::table(std::vector<Rational> values, bool require_decreasing) {
  if (values.empty()) throw UsageError("psi table must not be empty");
  for (const Rational& v : values)
    if (sgn(v) < 0) throw UsageError("psi table entries must be nonnegative");
  if (require_decreasing) {
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      if (values[i] < values[i + 1]) {
        throw UsageError("psi table not decreasing at q = " + std::to_string(i + 1));
      }
    }
  }
  PsiSpec p;
  p.kind_ = Kind::kTable;
  p.table_ = std::move(values);
  p.label_ = "table[" + std::to_string(p.table_.size()) + "]";
  return p;
}

PsiSpec PsiSpec::counterexample(int which) {
  if (which != 0 && which != 1) throw UsageError("counterexample selector must be 0 or 1");
  PsiSpec p;
  p.kind_ = Kind::kCounterexample;
  p.which_ = which;
  p.label_ = which == 0 ? "cex0" : "cex1";
  return p;
}

PsiSpec PsiSpec::custom(std::function<Rational(long)> fn, std::string label) {
  if (!fn) throw UsageError("psi custom kind needs a callable");
  PsiSpec p;
  p.kind_ = Kind::kCustom;
  p.fn_ = std::move(fn);
  p.label_ = "custom:" + std::move(label);
  return p;
}

PsiSpec PsiSpec::clamped() const {
  PsiSpec p = *this;
  if (!p.clamp_) {
    p.clamp_ = true;
    p.label_ += "+clamp";
  }
  return p;
}

bool PsiSpec::exact() const {
  switch (kind_) {
    case Kind::kPower:
      return s_.get_den() == 1;
    case Kind::kLogTempered:
      return false;
    default:
      return true;
  }
}

Rational PsiSpec::eval(long q) const {
  require_positive_q(q);
  Rational raw;
  switch (kind_) {
    case Kind::kPower: {
      if (s_.get_den() != 1)
        throw UsageError("fractional power exponent has no exact value; use eval_bounds");
      if (!s_.get_num().fits_ulong_p()) throw UsageError("power exponent too large");
      unsigned long e = s_.get_num().get_ui();
      Rational den(pow_int(Integer(q), e));
      raw = c_ / den;
      break;
    }
    case Kind::kLogTempered:
      throw UsageError("log-tempered psi has no exact value; use eval_bounds");
    case Kind::kTable:
      if (static_cast<std::size_t>(q) > table_.size())
        throw UsageError("psi table has no entry for q = " + std::to_string(q));
      raw = table_[static_cast<std::size_t>(q) - 1];
      break;
    case Kind::kCounterexample:
      raw = cex_eval(q, which_);
      break;
    case Kind::kCustom:
      raw = fn_(q);
      if (sgn(raw) < 0) throw UsageError("custom psi returned a negative value");
      break;
  }
  if (clamp_) {
    Rational cap = make_rational(1, q);
    if (cap < raw) raw = cap;
  }
  return raw;
}

std::pair<Rational, Rational> PsiSpec::eval_bounds(long q, mpfr_prec_t prec) const {
  require_positive_q(q);
  Rational lo, hi;
  if (kind_ == Kind::kPower && s_.get_den() != 1) {
    if (sgn(c_) == 0) return {Rational(0), Rational(0)};
    if (!s_.get_num().fits_slong_p() || !s_.get_den().fits_ulong_p())
      throw UsageError("power exponent too large");
    FloatInterval qs =
        FloatInterval::from_long(q, prec).pow_rat(s_.get_num().get_si(), s_.get_den().get_ui());
    FloatInterval v = FloatInterval::from_rational(c_, prec) / qs;
    lo = v.lo_rational();
    hi = v.hi_rational();
    if (sgn(lo) < 0) lo = 0;  // the true value is positive
  } else if (kind_ == Kind::kLogTempered) {
    FloatInterval fq = FloatInterval::from_long(q, prec);
    FloatInterval v = (fq * fq.log_clamped()).inverse();
    lo = v.lo_rational();
    hi = v.hi_rational();
    if (sgn(lo) < 0) lo = 0;
  } else {
    Rational v = eval(q);
    return {v, v};
  }
  if (clamp_) {
    Rational cap = make_rational(1, q);
    if (cap < lo) lo = cap;
    if (cap < hi) hi = cap;
  }
  return {lo, hi};
}

bool PsiSpec::check_decreasing(long qlo, long qhi) const {
  if (qlo < 1 || qhi < qlo) throw UsageError("bad monotonicity scan range");
  if (kind_ == Kind::kLogTempered) {
    // q * max(1, ln q) is a product of positive nondecreasing factors with
    // the first strictly increasing, so its reciprocal decreases. The clamp
    // takes a min with another decreasing function.
    return true;
  }
  if (kind_ == Kind::kPower) {
    // c q^(-s) >= c (q+1)^(-s) iff (q+1)^p >= q^p for s = p/r, since the
    // r-th root preserves order. True for every s >= 0, but scan anyway so a
    // future kind change cannot silently skip the check.
    if (sgn(c_) == 0) return true;
    if (!s_.get_num().fits_ulong_p()) throw UsageError("power exponent too large");
    unsigned long p = s_.get_num().get_ui();
    for (long q = qlo; q < qhi; ++q) {
      if (pow_int(Integer(q + 1), p) < pow_int(Integer(q), p)) return false;
    }
    return true;
  }
  Rational prev = eval(qlo);
  for (long q = qlo; q < qhi; ++q) {
    Rational next = eval(q + 1);
    if (prev < next) return false;
    prev = next;
  }
  return true;
}

namespace {

std::vector<Rational> read_psi_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open psi table file: " + path);
  std::vector<Rational> values;
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string token;
    while (row >> token) values.push_back(parse_rational(token));
  }
  return values;
}

}  // namespace

PsiSpec make_psi(const std::string& spec) {
  if (spec == "recip") return PsiSpec::reciprocal();
  if (spec == "logq") return PsiSpec::log_tempered();
  if (spec == "cex0") return PsiSpec::counterexample(0);
  if (spec == "cex1") return PsiSpec::counterexample(1);
  if (spec.rfind("pow:", 0) == 0) return PsiSpec::power(1, parse_rational(spec.substr(4)));
  if (spec.rfind("const:", 0) == 0) return PsiSpec::constant(parse_rational(spec.substr(6)));
  if (spec.rfind("table:", 0) == 0)
    return PsiSpec::table(read_psi_table(spec.substr(6)), /*require_decreasing=*/true);
  throw UsageError("unknown psi spec: '" + spec + "'");
}

std::vector<BlockSum> block_sums(int k_max) {
  if (k_max < 0) throw UsageError("block count must be nonnegative");
  if (k_max > 24) throw UsageError("block index too large to materialize");
  std::vector<BlockSum> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) {
    BlockSum b;
    b.k = k;
    b.even = k % 2 == 0;
    b.lo = 1;
    mpz_mul_2exp(b.lo.get_mpz_t(), b.lo.get_mpz_t(), 1UL << k);
    b.hi = 1;
    mpz_mul_2exp(b.hi.get_mpz_t(), b.hi.get_mpz_t(), 1UL << (k + 1));
    if (b.even) {
      // (hi - lo) * 2^(-2^(k+1)) collapses: hi * 2^(-2^(k+1)) = 1 and
      // lo * 2^(-2^(k+1)) = 2^(-2^k).
      b.even_part = 1 - pow2_rat(-(1L << k));
      b.odd_part = 0;
      b.odd_part_exact = true;
    } else {
      b.even_part = 0;
      Integer size = b.hi - b.lo;
      if (size <= kEnumerableBlock) {
        std::vector<Rational> terms;
        terms.reserve(size.get_ui());
        for (Integer q = b.lo; q < b.hi; ++q) {
          Integer qq = q * q;
          terms.push_back(make_rational(Integer(1), qq));
        }
        b.odd_part = sum_exact(std::move(terms));
        b.odd_part_exact = true;
      } else {
        // sum of q^(-2) over [lo, hi) < sum of 1/(q-1) - 1/q, telescoping
        Integer lo1 = b.lo - 1;
        Integer hi1 = b.hi - 1;
        b.odd_part = make_rational(Integer(1), lo1) - make_rational(Integer(1), hi1);
        b.odd_part_exact = false;
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

TargetSeq TargetSeq::constant(GammaValue value) {
  TargetSeq t;
  t.kind_ = Kind::kConstant;
  t.sigmas_.push_back(std::move(value));
  t.label_ = "const";
  return t;
}

TargetSeq TargetSeq::finite_set(std::vector<GammaValue> sigmas,
                                std::function<std::size_t(long)> assign) {
  if (sigmas.empty()) throw UsageError("finite-set target needs at least one value");
  if (!assign) throw UsageError("finite-set target needs an assignment map");
  TargetSeq t;
  t.kind_ = Kind::kFiniteSet;
  t.sigmas_ = std::move(sigmas);
  t.assign_ = std::move(assign);
  t.label_ = "finite-set[" + std::to_string(t.sigmas_.size()) + "]";
  return t;
}

TargetSeq TargetSeq::convergent(const Rational& limit, const Rational& scale,
                                unsigned long power) {
  if (power < 2) throw UsageError("convergent target needs power >= 2 for summable deviations");
  TargetSeq t;
  t.kind_ = Kind::kConvergent;
  t.limit_ = limit;
  t.scale_ = scale;
  t.power_ = power;
  t.label_ = "convergent";
  return t;
}

TargetSeq TargetSeq::seeded_uniform(std::uint64_t seed) {
  TargetSeq t;
  t.kind_ = Kind::kRandom;
  t.stream_.emplace(seed, "target-seq");
  t.label_ = "random";
  return t;
}

GammaValue TargetSeq::at(long q) const {
  require_positive_q(q);
  switch (kind_) {
    case Kind::kConstant:
      return sigmas_[0];
    case Kind::kFiniteSet: {
      std::size_t i = assign_(q);
      if (i >= sigmas_.size())
        throw UsageError("finite-set assignment out of range at q = " + std::to_string(q));
      return sigmas_[i];
    }
    case Kind::kConvergent: {
      Rational dev = scale_ / Rational(pow_int(Integer(q), power_));
      Rational v = limit_ + dev;
      return GammaValue(v);
    }
    case Kind::kRandom:
      return GammaValue(stream_->unit_rational_at(static_cast<std::uint64_t>(q)));
  }
  throw UsageError("corrupt target sequence");
}

std::size_t TargetSeq::class_count() const {
  if (kind_ != Kind::kFiniteSet) throw UsageError("class_count is for finite-set targets");
  return sigmas_.size();
}

std::size_t TargetSeq::class_of(long q) const {
  require_positive_q(q);
  if (kind_ != Kind::kFiniteSet) throw UsageError("class_of is for finite-set targets");
  std::size_t i = assign_(q);
  if (i >= sigmas_.size())
    throw UsageError("finite-set assignment out of range at q = " + std::to_string(q));
  return i;
}

const std::vector<GammaValue>& TargetSeq::sigmas() const {
  if (kind_ != Kind::kFiniteSet) throw UsageError("sigmas is for finite-set targets");
  return sigmas_;
}

TargetSeq make_gamma(const std::string& spec, std::uint64_t seed) {
  if (spec == "random") return TargetSeq::seeded_uniform(seed);
  if (spec.rfind("const:", 0) == 0)
    return TargetSeq::constant(GammaValue(parse_rational(spec.substr(6))));
  if (spec.rfind("surd:", 0) == 0) {
    std::string name = spec.substr(5);
    if (name == "sqrt2m1") return TargetSeq::constant(GammaValue(Quad(Rational(-1), Rational(1), 2)));
    if (name == "sqrt3m1") return TargetSeq::constant(GammaValue(Quad(Rational(-1), Rational(1), 3)));
    if (name == "golden")
      return TargetSeq::constant(GammaValue(Quad(make_rational(-1, 2), make_rational(1, 2), 5)));
    throw UsageError("unknown surd name: '" + name + "'");
  }
  if (spec.rfind("alt:", 0) == 0) {
    std::string body = spec.substr(4);
    std::size_t comma = body.find(',');
    if (comma == std::string::npos) throw UsageError("alt target needs two comma-separated values");
    GammaValue even(parse_rational(body.substr(0, comma)));
    GammaValue odd(parse_rational(body.substr(comma + 1)));
    return TargetSeq::finite_set({std::move(even), std::move(odd)},
                                 [](long q) { return static_cast<std::size_t>(q % 2); });
  }
  throw UsageError("unknown gamma spec: '" + spec + "'");
}

PartitionSpec PartitionSpec::residues(long modulus) {
  if (modulus < 1) throw UsageError("residue partition needs modulus >= 1");
  PartitionSpec p;
  p.classes_ = modulus;
  p.classify_ = [modulus](long q) { return q % modulus + 1; };
  p.label_ = "residues:" + std::to_string(modulus);
  return p;
}

PartitionSpec PartitionSpec::doubly_exponential_blocks() {
  PartitionSpec p;
  p.classes_ = 2;
  p.classify_ = [](long q) { return in_even_blocks(q) ? 1L : 2L; };
  p.label_ = "blocks";
  return p;
}

PartitionSpec PartitionSpec::custom(long classes, std::function<long(long)> classify,
                                    std::string label) {
  if (classes < 1) throw UsageError("partition needs at least one class");
  if (!classify) throw UsageError("custom partition needs a classifier");
  PartitionSpec p;
  p.classes_ = classes;
  p.classify_ = std::move(classify);
  p.label_ = "custom:" + std::move(label);
  return p;
}

long PartitionSpec::class_of(long q) const {
  require_positive_q(q);
  long k = classify_(q);
  if (k < 1 || k > classes_)
    throw UsageError("partition classifier out of range at q = " + std::to_string(q));
  return k;
}

PartitionSpec make_partition(const std::string& spec) {
  if (spec == "blocks") return PartitionSpec::doubly_exponential_blocks();
  if (spec.rfind("residues:", 0) == 0) {
    Rational m = parse_rational(spec.substr(9));
    if (m.get_den() != 1 || !m.get_num().fits_slong_p())
      throw UsageError("residue modulus must be an integer");
    return PartitionSpec::residues(m.get_num().get_si());
  }
  throw UsageError("unknown partition spec: '" + spec + "'");
}

PigeonholeResult pigeonhole_select(const PartitionSpec& partition, const PsiSpec& psi,
                                   long Q, const SieveTables& tables) {
  if (Q < 1) throw UsageError("pigeonhole needs Q >= 1");
  if (static_cast<std::uint64_t>(Q) > tables.limit)
    throw UsageError("pigeonhole Q exceeds the sieve limit");
  if (!psi.exact()) throw UsageError("pigeonhole sums need an exactly evaluable psi");

  std::size_t classes = static_cast<std::size_t>(partition.classes());
  std::vector<std::vector<Rational>> terms(classes);
  for (long q = 1; q <= Q; ++q) {
    std::size_t k = static_cast<std::size_t>(partition.class_of(q)) - 1;
    Rational weight = make_rational(Integer(tables.phi[static_cast<std::size_t>(q)]), Integer(q));
    terms[k].push_back(weight * psi.eval(q));
  }

  PigeonholeResult res;
  res.sums.reserve(classes);
  for (std::size_t k = 0; k < classes; ++k) res.sums.push_back(sum_exact(std::move(terms[k])));
  res.total = 0;
  for (const Rational& s : res.sums) res.total += s;
  res.winner = 1;
  for (std::size_t k = 1; k < classes; ++k) {
    if (res.sums[k] > res.sums[static_cast<std::size_t>(res.winner) - 1])
      res.winner = static_cast<long>(k) + 1;
  }
  return res;
}

PigeonholeBounds pigeonhole_select_bounds(const PartitionSpec& partition, const PsiSpec& psi,
                                          long Q, const SieveTables& tables, long start_prec) {
  if (psi.exact()) {
    PigeonholeResult ex = pigeonhole_select(partition, psi, Q, tables);
    PigeonholeBounds b;
    b.winner = ex.winner;
    long prec = std::max<long>(start_prec, 64);
    for (const Rational& s : ex.sums)
      b.sums.push_back(FloatInterval::from_rational(s, static_cast<mpfr_prec_t>(prec)));
    b.total = FloatInterval::from_rational(ex.total, static_cast<mpfr_prec_t>(prec));
    b.certified = Rational(partition.classes()) * ex.sums[static_cast<std::size_t>(ex.winner) - 1] >=
                  ex.total;
    return b;
  }

  if (Q < 1) throw UsageError("pigeonhole needs Q >= 1");
  if (static_cast<std::uint64_t>(Q) > tables.limit)
    throw UsageError("pigeonhole Q exceeds the sieve limit");

  const std::size_t classes = static_cast<std::size_t>(partition.classes());
  const Rational ell(partition.classes());
  for (long prec = std::max<long>(start_prec, 64); prec <= 4096; prec *= 2) {
    mpfr_prec_t p = static_cast<mpfr_prec_t>(prec);
    PigeonholeBounds b;
    b.sums.assign(classes, FloatInterval::from_long(0, p));
    for (long q = 1; q <= Q; ++q) {
      std::size_t k = static_cast<std::size_t>(partition.class_of(q)) - 1;
      Rational weight =
          make_rational(Integer(tables.phi[static_cast<std::size_t>(q)]), Integer(q));
      auto [plo, phi_] = psi.eval_bounds(q, p);
      FloatInterval term = FloatInterval::from_rational(weight, p) *
                           FloatInterval::from_bounds(plo, phi_, p);
      b.sums[k] = b.sums[k] + term;
    }
    b.total = FloatInterval::from_long(0, p);
    for (const FloatInterval& s : b.sums) b.total = b.total + s;

    // Argmax must be unambiguous: one class's lower end beats the others'
    // upper ends. A tie across distinct classes never resolves; the sums
    // here are irrational, so escalation terminates in practice.
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k)
      if (b.sums[k].mid_approx() > b.sums[best].mid_approx()) best = k;
    bool separated = true;
    for (std::size_t k = 0; k < classes && separated; ++k) {
      if (k == best) continue;
      if (!(b.sums[best].lo_rational() > b.sums[k].hi_rational())) separated = false;
    }
    if (!separated) continue;
    b.winner = static_cast<long>(best) + 1;
    if (ell * b.sums[best].lo_rational() >= b.total.hi_rational()) {
      b.certified = true;
      return b;
    }
  }
  throw PrecisionError("pigeonhole_select_bounds could not separate the classes");
}

}  // namespace diolab
