#include "linefollow/segmentation.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace linefollow {

Histogram histogram(const PixelBuffer& gray) {
  require_format(gray, PixelFormat::GRAY8, "histogram");
  const auto src = gray.data();
  const auto n = static_cast<std::ptrdiff_t>(src.size());
  Histogram h;
#pragma omp parallel
  {
    std::array<std::uint64_t, 256> local{};
#pragma omp for schedule(static) nowait
    for (std::ptrdiff_t i = 0; i < n; ++i) ++local[src[i]];
#pragma omp critical(linefollow_histogram)
    for (int i = 0; i < 256; ++i) h.counts[i] += local[i];
  }
  h.total = static_cast<std::uint64_t>(n);
  return h;
}

namespace {

// w1*w2*(mu1-mu2)^2 == (N*s1 - n1*S)^2 / (N^2 * n1 * n2), with n the class
// pixel counts and s the class level sums. Evaluated from exact integer
// prefix sums so that equal splits produce bit-identical variances.
double variance_from_prefix(std::uint64_t n1, std::uint64_t s1, std::uint64_t total, std::uint64_t sum) {
  const std::uint64_t n2 = total - n1;
  if (n1 == 0 || n2 == 0) return 0.0;
  const long double diff = static_cast<long double>(total) * s1 - static_cast<long double>(n1) * sum;
  const long double nn = static_cast<long double>(total) * total;
  return static_cast<double>(diff * diff / (nn * n1 * n2));
}

}  // namespace

double between_class_variance(const Histogram& hist, int k) {
  if (hist.total == 0) throw ContractError("between_class_variance: empty histogram");
  if (k < 0 || k > 255) throw ContractError("between_class_variance: level out of range");
  std::uint64_t n1 = 0, s1 = 0, sum = 0;
  for (int i = 0; i < 256; ++i) {
    sum += hist.counts[i] * static_cast<std::uint64_t>(i);
    if (i <= k) {
      n1 += hist.counts[i];
      s1 += hist.counts[i] * static_cast<std::uint64_t>(i);
    }
  }
  return variance_from_prefix(n1, s1, hist.total, sum);
}

ThresholdResult otsu_threshold(const Histogram& hist) {
  if (hist.total == 0) throw ContractError("otsu_threshold: empty histogram");

  int occupied = 0;
  int only_level = 0;
  std::uint64_t sum = 0;
  for (int i = 0; i < 256; ++i) {
    if (hist.counts[i]) {
      ++occupied;
      only_level = i;
    }
    sum += hist.counts[i] * static_cast<std::uint64_t>(i);
  }
  if (occupied == 1) return {only_level, 0.0, true};

  ThresholdResult best;
  std::uint64_t n1 = 0, s1 = 0;
  for (int k = 0; k < 256; ++k) {
    n1 += hist.counts[k];
    s1 += hist.counts[k] * static_cast<std::uint64_t>(k);
    const double v = variance_from_prefix(n1, s1, hist.total, sum);
    if (v > best.between_class_variance) {
      best.threshold = k;
      best.between_class_variance = v;
    }
  }
  return best;
}

PixelBuffer apply_threshold(const PixelBuffer& gray, int t, std::uint8_t below, std::uint8_t above) {
  require_format(gray, PixelFormat::GRAY8, "apply_threshold");
  if (below > 1 || above > 1) throw ContractError("apply_threshold: binary values must be 0 or 1");
  const auto src = gray.data();
  const auto n = static_cast<std::ptrdiff_t>(src.size());
  std::vector<std::uint8_t> out(src.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = src[i] <= t ? below : above;
  return PixelBuffer(gray.width(), gray.height(), PixelFormat::BINARY, std::move(out));
}

// ---------------------------------------------------------------------------
// Rule text

namespace {

class ClauseParser {
 public:
  ClauseParser(std::string_view text, std::size_t index) : text_(text), index_(index) {}

  RuleClause parse() {
    RuleClause clause;
    bool any_term = false;
    skip_ws();
    while (!at_end() && !is_comparator_start(peek())) {
      int sign = 1;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1 : 1;
        ++pos_;
        skip_ws();
      } else if (any_term) {
        fail("expected '+' or '-' between terms");
      }
      if (at_end()) fail("dangling sign");
      switch (std::toupper(static_cast<unsigned char>(peek()))) {
        case 'R': clause.a_r += sign; break;
        case 'G': clause.a_g += sign; break;
        case 'B': clause.a_b += sign; break;
        default: fail(std::string("unknown token '") + peek() + "'");
      }
      ++pos_;
      any_term = true;
      skip_ws();
    }
    if (!any_term) fail(at_end() ? "empty clause" : "missing channel terms");
    if (at_end()) fail("missing comparator");
    clause.op = parse_comparator();
    skip_ws();
    clause.c = parse_int();
    skip_ws();
    if (!at_end()) fail("trailing characters");
    return clause;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("rule clause " + std::to_string(index_) + ": " + what);
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }
  static bool is_comparator_start(char c) { return c == '<' || c == '>' || c == '\xE2'; }

  Comparator parse_comparator() {
    if (text_.substr(pos_, 3) == "≤") {
      pos_ += 3;
      return Comparator::LessEqual;
    }
    if (text_.substr(pos_, 3) == "≥") {
      pos_ += 3;
      return Comparator::GreaterEqual;
    }
    const char c = peek();
    if (c != '<' && c != '>') fail("missing comparator");
    ++pos_;
    const bool eq = !at_end() && peek() == '=';
    if (eq) ++pos_;
    if (c == '<') return eq ? Comparator::LessEqual : Comparator::Less;
    return eq ? Comparator::GreaterEqual : Comparator::Greater;
  }

  int parse_int() {
    int sign = 1;
    if (!at_end() && (peek() == '-' || peek() == '+')) {
      sign = peek() == '-' ? -1 : 1;
      ++pos_;
      skip_ws();
    }
    if (at_end() || !std::isdigit(static_cast<unsigned char>(peek()))) fail("expected integer constant");
    long v = 0;
    while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) {
      v = v * 10 + (peek() - '0');
      if (v > 1'000'000) fail("constant out of range");
      ++pos_;
    }
    return static_cast<int>(sign * v);
  }

  std::string_view text_;
  std::size_t index_;
  std::size_t pos_ = 0;
};

}  // namespace

ThresholdRule parse_rule(std::string_view text) {
  ThresholdRule rule;
  std::size_t index = 0;
  std::size_t start = 0;
  while (true) {
    const auto end = text.find(';', start);
    const auto piece = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    rule.clauses.push_back(ClauseParser(piece, index).parse());
    if (end == std::string_view::npos) break;
    start = end + 1;
    ++index;
  }
  return rule;
}

std::string to_string(const ThresholdRule& rule) {
  std::string out;
  for (std::size_t i = 0; i < rule.clauses.size(); ++i) {
    const auto& c = rule.clauses[i];
    if (i) out += ';';
    bool first = true;
    auto term = [&](int coef, char letter) {
      for (int k = 0; k < std::abs(coef); ++k) {
        if (coef < 0) out += '-';
        else if (!first) out += '+';
        out += letter;
        first = false;
      }
    };
    term(c.a_r, 'R');
    term(c.a_g, 'G');
    term(c.a_b, 'B');
    switch (c.op) {
      case Comparator::Less: out += '<'; break;
      case Comparator::Greater: out += '>'; break;
      case Comparator::LessEqual: out += "<="; break;
      case Comparator::GreaterEqual: out += ">="; break;
    }
    out += std::to_string(c.c);
  }
  return out;
}

PixelBuffer rule_segment(const PixelBuffer& rgb, const ThresholdRule& rule) {
  require_format(rgb, PixelFormat::RGB8, "rule_segment");
  const auto src = rgb.data();
  const auto n = static_cast<std::ptrdiff_t>(rgb.pixel_count());
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = rule_classify(src[3 * i], src[3 * i + 1], src[3 * i + 2], rule) ? 1 : 0;
  }
  return PixelBuffer(rgb.width(), rgb.height(), PixelFormat::BINARY, std::move(out));
}

// ---------------------------------------------------------------------------
// Scenario evaluation

const char* to_string(SampleClass c) { return c == SampleClass::Black ? "black" : "white"; }

const ScenarioCell* ScenarioReport::find(int scenario, SampleClass truth) const {
  for (const auto& c : cells) {
    if (c.scenario == scenario && c.truth == truth) return &c;
  }
  return nullptr;
}

ScenarioReport scenario_eval(const std::vector<LabeledSample>& samples, const ThresholdRule& rule) {
  if (samples.empty()) throw ContractError("scenario_eval: no samples");
  std::vector<int> scenarios;
  for (const auto& s : samples) scenarios.push_back(s.scenario);
  std::sort(scenarios.begin(), scenarios.end());
  scenarios.erase(std::unique(scenarios.begin(), scenarios.end()), scenarios.end());

  ScenarioReport report;
  for (auto truth : {SampleClass::Black, SampleClass::White}) {
    for (int sc : scenarios) report.cells.push_back({sc, truth, 0, 0});
  }
  for (const auto& s : samples) {
    const bool black = rule_classify(s.color.r, s.color.g, s.color.b, rule);
    const bool ok = black == (s.truth == SampleClass::Black);
    auto& cell = *std::find_if(report.cells.begin(), report.cells.end(),
                               [&](const ScenarioCell& c) { return c.scenario == s.scenario && c.truth == s.truth; });
    ++cell.total;
    ++report.total;
    if (ok) {
      ++cell.correct;
      ++report.correct;
    }
  }
  // Drop cells for class/scenario combinations with no samples.
  std::erase_if(report.cells, [](const ScenarioCell& c) { return c.total == 0; });
  return report;
}

namespace {

std::string percent(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.0f%%", v);
  return buf;
}

}  // namespace

std::string format_table(const ScenarioReport& report) {
  std::ostringstream out;
  auto row = [&](const std::string& label, auto cell_value, const std::string& total) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%-22s", label.c_str());
    out << buf;
    for (const auto& c : report.cells) {
      std::snprintf(buf, sizeof buf, "%8s", cell_value(c).c_str());
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%8s", total.c_str());
    out << buf << '\n';
  };
  row("Class", [](const ScenarioCell& c) { return std::string(to_string(c.truth)); }, "");
  row("Scenario", [](const ScenarioCell& c) { return std::to_string(c.scenario); }, "TOTAL");
  row("Collected samples", [](const ScenarioCell& c) { return std::to_string(c.total); },
      std::to_string(report.total));
  row("Properly classified", [](const ScenarioCell& c) { return std::to_string(c.correct); },
      std::to_string(report.correct));
  row("Improperly classified", [](const ScenarioCell& c) { return std::to_string(c.incorrect()); },
      std::to_string(report.total - report.correct));
  row("Success rate", [](const ScenarioCell& c) { return percent(c.rate_percent()); },
      percent(report.overall_percent()));
  return out.str();
}

std::string format_records(const ScenarioReport& report) {
  std::ostringstream out;
  char buf[96];
  out << "scenario,class,total,correct,rate\n";
  for (const auto& c : report.cells) {
    std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%.2f\n", c.scenario, to_string(c.truth), c.total, c.correct,
                  c.rate_percent());
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "all,all,%d,%d,%.2f\n", report.total, report.correct, report.overall_percent());
  out << buf;
  return out.str();
}

}  // namespace linefollow
