#include "heatflow/spec_parser.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "heatflow/error.hpp"

namespace heatflow {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : t_(text) {}

  DistributionSpec parse() {
    skip_ws();
    if (pos_ >= t_.size()) throw SyntaxError(pos_, "empty distribution spec");
    DistributionSpec s = spec();
    skip_ws();
    if (pos_ != t_.size()) throw SyntaxError(pos_, "unexpected trailing input");
    return s;
  }

 private:
  void skip_ws() {
    while (pos_ < t_.size() && std::isspace(static_cast<unsigned char>(t_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= t_.size() || t_[pos_] != c)
      throw SyntaxError(pos_, std::string("expected '") + c + "'");
    ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < t_.size() && t_[pos_] == c;
  }

  double number() {
    skip_ws();
    const std::size_t start = pos_;
    if (pos_ < t_.size() && (t_[pos_] == '+' || t_[pos_] == '-')) ++pos_;
    if (pos_ >= t_.size() || !(std::isdigit(static_cast<unsigned char>(t_[pos_])) || t_[pos_] == '.'))
      throw SyntaxError(start, "expected a number");
    const std::size_t body = t_[start] == '+' ? start + 1 : start;
    double v = 0.0;
    auto res = std::from_chars(t_.data() + body, t_.data() + t_.size(), v);
    if (res.ec != std::errc() || !std::isfinite(v)) throw SyntaxError(start, "malformed number");
    pos_ = static_cast<std::size_t>(res.ptr - t_.data());
    return v;
  }

  std::string ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < t_.size() && std::isalpha(static_cast<unsigned char>(t_[pos_]))) ++pos_;
    if (pos_ == start) throw SyntaxError(start, "expected a distribution name");
    return std::string(t_.substr(start, pos_ - start));
  }

  DistributionSpec spec() {
    skip_ws();
    const std::size_t start = pos_;
    const std::string name = ident();
    expect('(');
    if (name == "mix") {
      std::vector<MixtureComponent> cs;
      do {
        const double w = number();
        expect('*');
        cs.push_back({w, spec()});
      } while (peek(',') && (++pos_, true));
      expect(')');
      return DistributionSpec::mixture(std::move(cs));
    }
    if (name != "gaussian" && name != "uniform" && name != "laplace")
      throw SyntaxError(start, "unknown distribution '" + name + "'");
    const double a = number();
    expect(',');
    const double b = number();
    expect(')');
    if (name == "gaussian") return DistributionSpec::gaussian(a, b);
    if (name == "uniform") return DistributionSpec::uniform(a, b);
    return DistributionSpec::laplace(a, b);
  }

  std::string_view t_;
  std::size_t pos_ = 0;
};

double parse_number(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
    fail(ErrorKind::usage, "malformed number '" + std::string(s) + "'");
  return v;
}

}  // namespace

DistributionSpec parse_spec(std::string_view text) { return Parser(text).parse(); }

std::vector<double> parse_s_grid(std::string_view text) {
  const auto c1 = text.find(':');
  if (c1 == std::string_view::npos) return {parse_number(text)};
  const auto c2 = text.find(':', c1 + 1);
  if (c2 == std::string_view::npos) fail(ErrorKind::usage, "s grid must be a:b:n");
  const double a = parse_number(text.substr(0, c1));
  const double b = parse_number(text.substr(c1 + 1, c2 - c1 - 1));
  const double nd = parse_number(text.substr(c2 + 1));
  if (nd < 1 || nd != std::floor(nd) || nd > 1e6) fail(ErrorKind::usage, "s grid count must be a positive integer");
  const auto n = static_cast<std::size_t>(nd);
  if (n == 1) {
    if (a != b) fail(ErrorKind::usage, "a one-point s grid needs a == b");
    return {a};
  }
  if (!(b > a)) fail(ErrorKind::usage, "s grid needs b > a");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = i + 1 == n ? b : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace heatflow
