#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "linefollow/image.hpp"

namespace linefollow {

struct Histogram {
  std::array<std::uint64_t, 256> counts{};
  std::uint64_t total = 0;
};

struct ThresholdResult {
  int threshold = 0;
  double between_class_variance = 0.0;
  bool degenerate = false;
};

Histogram histogram(const PixelBuffer& gray);

/// Between-class variance w1*w2*(mu1-mu2)^2 of the split {<= k} / {> k}.
/// Zero when either class is empty.
double between_class_variance(const Histogram& hist, int k);

/// Otsu's threshold: the smallest k maximising between_class_variance.
/// A histogram with a single occupied level is flagged degenerate and
/// returns that level.
ThresholdResult otsu_threshold(const Histogram& hist);

/// g = below if f <= t, above otherwise.
PixelBuffer apply_threshold(const PixelBuffer& gray, int t, std::uint8_t below, std::uint8_t above);

enum class Comparator : std::uint8_t { Less, Greater, LessEqual, GreaterEqual };

struct RuleClause {
  int a_r = 0;
  int a_g = 0;
  int a_b = 0;
  Comparator op = Comparator::Less;
  int c = 0;

  bool holds(int r, int g, int b) const {
    const int lhs = a_r * r + a_g * g + a_b * b;
    switch (op) {
      case Comparator::Less: return lhs < c;
      case Comparator::Greater: return lhs > c;
      case Comparator::LessEqual: return lhs <= c;
      case Comparator::GreaterEqual: return lhs >= c;
    }
    return false;
  }
  friend bool operator==(const RuleClause&, const RuleClause&) = default;
};

/// Conjunction of linear RGB inequalities. A pixel is foreground iff every
/// clause holds.
struct ThresholdRule {
  std::vector<RuleClause> clauses;
  friend bool operator==(const ThresholdRule&, const ThresholdRule&) = default;
};

/// The experimental black-line rule: R+G+B<250; G-B<30; R-B>-30.
inline constexpr std::string_view kBlackLineRule = "R+G+B<250;G-B<30;R-B>-30";

/// Parses `<terms> <op> <int>` clauses separated by ';'. Terms are signed
/// channel letters (R, G, B, case-insensitive); whitespace is ignored.
ThresholdRule parse_rule(std::string_view text);
std::string to_string(const ThresholdRule& rule);

inline bool rule_classify(int r, int g, int b, const ThresholdRule& rule) {
  for (const auto& clause : rule.clauses) {
    if (!clause.holds(r, g, b)) return false;
  }
  return true;
}

PixelBuffer rule_segment(const PixelBuffer& rgb, const ThresholdRule& rule);

// ---------------------------------------------------------------------------
// Scenario evaluation (Table-1 style success rates)

enum class SampleClass : std::uint8_t { Black, White };

const char* to_string(SampleClass c);

struct LabeledSample {
  Rgb color;
  int scenario = 1;  // 1-based, darkest first
  SampleClass truth = SampleClass::Black;

  bool operator==(const LabeledSample&) const = default;
};

struct ScenarioCell {
  int scenario = 0;
  SampleClass truth = SampleClass::Black;
  int total = 0;
  int correct = 0;

  int incorrect() const { return total - correct; }
  double rate_percent() const { return total ? 100.0 * correct / total : 0.0; }
};

struct ScenarioReport {
  std::vector<ScenarioCell> cells;  // black cells by scenario, then white cells
  int total = 0;
  int correct = 0;

  double overall_percent() const { return total ? 100.0 * correct / total : 0.0; }
  const ScenarioCell* find(int scenario, SampleClass truth) const;
};

/// Black is the rule's foreground class.
ScenarioReport scenario_eval(const std::vector<LabeledSample>& samples, const ThresholdRule& rule);

/// Table-shaped text: one column per (class, scenario) plus TOTAL.
std::string format_table(const ScenarioReport& report);

/// `scenario,class,total,correct,rate` records, plus an `all,all,...` total.
std::string format_records(const ScenarioReport& report);

}  // namespace linefollow
