#include "ksnno/kernel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace ksnno {
namespace {

double int_pow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// n * integral of v^p over [j/n, (j+1)/n] = ((j+1)^{p+1} - j^{p+1}) / ((p+1) n^p).
double scaled_moment(long j, long n, int p) {
  const double a = static_cast<double>(j);
  const double b = a + 1.0;
  return (int_pow(b, p + 1) - int_pow(a, p + 1)) / ((p + 1) * int_pow(static_cast<double>(n), p));
}

double parse_double(std::string_view text, std::string_view context) {
  std::string owned(text);
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(owned, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != owned.size()) {
    throw std::invalid_argument(fmt::format("kernel spec: bad number '{}' in '{}'", text, context));
  }
  return value;
}

int parse_exponent(std::string_view text, std::string_view context) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || value < 0) {
    throw std::invalid_argument(fmt::format("kernel spec: bad exponent '{}' in '{}'", text, context));
  }
  return value;
}

Monomial parse_monomial(std::string_view term) {
  // <c>*t^<p>*s^<q>; factors may be omitted, e.g. "2*s" or "t^2".
  Monomial m{1.0, 0, 0};
  bool have_coef = false;
  if (!term.empty() && (term.front() == '+' || term.front() == '-')) {
    if (term.front() == '-') m.coef = -1.0;
    term.remove_prefix(1);
  }
  std::size_t start = 0;
  while (start <= term.size()) {
    const std::size_t stop = std::min(term.find('*', start), term.size());
    const std::string_view factor = term.substr(start, stop - start);
    if (factor.empty()) throw std::invalid_argument(fmt::format("kernel spec: empty factor in '{}'", term));
    if (factor[0] == 't' || factor[0] == 's') {
      int exp = 1;
      if (factor.size() > 1) {
        if (factor[1] != '^') throw std::invalid_argument(fmt::format("kernel spec: bad factor '{}'", factor));
        exp = parse_exponent(factor.substr(2), term);
      }
      (factor[0] == 't' ? m.p : m.q) += exp;
    } else {
      if (have_coef) throw std::invalid_argument(fmt::format("kernel spec: two coefficients in '{}'", term));
      m.coef *= parse_double(factor, term);
      have_coef = true;
    }
    start = stop + 1;
  }
  return m;
}

}  // namespace

Kernel2D example_kernel() {
  Kernel2D k;
  k.name = "example-t2s";
  k.eval = [](double t, double s) { return t * t * s; };
  k.domain = {0.0, 1.0};
  k.u = 1.0;
  k.exact_cell_average = [](long j, long n) {
    const double jd = static_cast<double>(j);
    const double nd = static_cast<double>(n);
    return (3.0 * jd * jd + 3.0 * jd + 1.0) * (2.0 * jd + 1.0) / (6.0 * nd * nd * nd);
  };
  return k;
}

Kernel2D constant_kernel(double value, Interval domain) {
  Kernel2D k;
  k.name = fmt::format("const:{}", value);
  k.eval = [value](double, double) { return value; };
  k.domain = domain;
  k.u = 1.0;
  k.exact_cell_average = [value](long, long) { return value; };
  return k;
}

Kernel2D polynomial_kernel(std::vector<Monomial> terms, Interval domain) {
  if (terms.empty()) throw std::invalid_argument("polynomial_kernel: no terms");
  std::string name = "poly:";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    name += fmt::format("{}{}*t^{}*s^{}", i ? "+" : "", terms[i].coef, terms[i].p, terms[i].q);
  }
  Kernel2D k;
  k.name = std::move(name);
  k.domain = domain;
  k.u = 1.0;
  k.eval = [terms](double t, double s) {
    double v = 0.0;
    for (const Monomial& m : terms) v += m.coef * int_pow(t, m.p) * int_pow(s, m.q);
    return v;
  };
  k.exact_cell_average = [terms](long j, long n) {
    double v = 0.0;
    for (const Monomial& m : terms) v += m.coef * scaled_moment(j, n, m.p) * scaled_moment(j, n, m.q);
    return v;
  };
  return k;
}

Kernel2D linear_combination(double alpha, const Kernel2D& a, double beta, const Kernel2D& b) {
  Kernel2D k;
  k.name = fmt::format("{}*({})+{}*({})", alpha, a.name, beta, b.name);
  k.domain = {std::max(a.domain.lo, b.domain.lo), std::min(a.domain.hi, b.domain.hi)};
  k.u = std::min(a.u, b.u);
  k.eval = [alpha, beta, ea = a.eval, eb = b.eval](double t, double s) {
    return alpha * ea(t, s) + beta * eb(t, s);
  };
  if (a.exact_cell_average && b.exact_cell_average) {
    k.exact_cell_average = [alpha, beta, ca = a.exact_cell_average, cb = b.exact_cell_average](long j, long n) {
      return alpha * ca(j, n) + beta * cb(j, n);
    };
  }
  return k;
}

Kernel2D kernel_from_spec(std::string_view spec, Interval domain) {
  if (spec == "example-t2s") {
    Kernel2D k = example_kernel();
    k.domain = domain;
    return k;
  }
  if (spec.starts_with("const:")) return constant_kernel(parse_double(spec.substr(6), spec), domain);
  if (spec.starts_with("poly:")) {
    std::vector<Monomial> terms;
    const std::string_view body = spec.substr(5);
    // Terms are separated by '+' or '-'; a sign right after 'e', 'E', '^' or
    // '*' belongs to a number or exponent, and the sign stays with its term.
    std::size_t start = 0;
    for (std::size_t i = 1; i <= body.size(); ++i) {
      if (i < body.size()) {
        const char c = body[i];
        const char prev = body[i - 1];
        if ((c != '+' && c != '-') || prev == 'e' || prev == 'E' || prev == '^' || prev == '*') continue;
      }
      terms.push_back(parse_monomial(body.substr(start, i - start)));
      start = i;
    }
    if (terms.empty()) terms.push_back(parse_monomial(body));
    Kernel2D k = polynomial_kernel(std::move(terms), domain);
    k.name = std::string(spec);
    return k;
  }
  throw std::invalid_argument(fmt::format("unknown kernel spec '{}'", spec));
}

}  // namespace ksnno
