// SPDX-License-Identifier: Apache-2.0
#include "diolab/rational.hpp"

#include <cctype>

namespace diolab {

Rational parse_rational(const std::string& text) {
  if (text.empty()) throw UsageError("empty rational literal");
  auto fail = [&] { throw UsageError("bad rational literal: '" + text + "'"); };

  std::size_t dot = text.find('.');
  if (dot != std::string::npos) {
    // decimal literal: sign? digits . digits
    std::string head = text.substr(0, dot), tail = text.substr(dot + 1);
    bool neg = false;
    if (!head.empty() && (head[0] == '+' || head[0] == '-')) {
      neg = head[0] == '-';
      head.erase(head.begin());
    }
    if (head.empty() && tail.empty()) fail();
    for (char c : head)
      if (!std::isdigit(static_cast<unsigned char>(c))) fail();
    for (char c : tail)
      if (!std::isdigit(static_cast<unsigned char>(c))) fail();
    // explicit base: the default base-0 ctor would read "04343" as octal
    Integer ip = head.empty() ? Integer(0) : Integer(head, 10);
    Integer fp = tail.empty() ? Integer(0) : Integer(tail, 10);
    Integer den = pow_int(10, tail.size());
    Rational r = make_rational(ip * den + fp, den);
    return neg ? Rational(-r) : r;
  }

  Rational r;
  if (mpq_set_str(r.get_mpq_t(), text.c_str(), 10) != 0) fail();
  if (r.get_den() == 0) fail();
  r.canonicalize();
  return r;
}

Rational sum_exact(std::vector<Rational> terms) {
  if (terms.empty()) return Rational(0);
  std::size_t n = terms.size();
  while (n > 1) {
    std::size_t half = n / 2;
    for (std::size_t i = 0; i < half; ++i) terms[i] = terms[2 * i] + terms[2 * i + 1];
    if (n % 2 != 0) {
      terms[half] = terms[n - 1];
      ++half;
    }
    n = half;
  }
  return terms[0];
}

std::string rational_to_decimal(const Rational& x, int digits) {
  if (digits < 0) throw UsageError("negative digit count");
  bool neg = sgn(x) < 0;
  Rational a = abs(x);
  Integer scale = pow_int(10, static_cast<unsigned long>(digits));
  Integer num = a.get_num() * scale;
  const Integer& den = a.get_den();
  Integer q, rem;
  mpz_fdiv_qr(q.get_mpz_t(), rem.get_mpz_t(), num.get_mpz_t(), den.get_mpz_t());
  Integer twice = rem * 2;
  if (twice > den || (twice == den && mpz_odd_p(q.get_mpz_t()))) q += 1;

  Integer ip, fp;
  mpz_fdiv_qr(ip.get_mpz_t(), fp.get_mpz_t(), q.get_mpz_t(), scale.get_mpz_t());
  std::string out = neg && (ip != 0 || fp != 0) ? "-" : "";
  out += ip.get_str();
  if (digits > 0) {
    std::string frac = fp.get_str();
    out += "." + std::string(static_cast<std::size_t>(digits) - frac.size(), '0') + frac;
  }
  return out;
}

}  // namespace diolab
