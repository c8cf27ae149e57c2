#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

namespace crboot {

/// One right-censored competing-risks observation. cause 0 = censored.
struct Observation {
  double time = 0.0;
  int cause = 0;

  bool operator==(const Observation&) const = default;
};

/// Input error carrying the 1-based line number of the offending CSV row
/// (0 when the problem is not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class Cohort {
 public:
  Cohort(std::vector<Observation> observations, int num_risks,
         double horizon = std::numeric_limits<double>::infinity())
      : obs_(std::move(observations)), k_(num_risks), horizon_(horizon) {
    if (k_ < 1) throw std::invalid_argument("Cohort: number of risks must be >= 1");
    if (obs_.empty()) throw std::invalid_argument("Cohort: at least one observation required");
    if (!(horizon_ > 0.0)) throw std::invalid_argument("Cohort: horizon must be positive");
    for (std::size_t i = 0; i < obs_.size(); ++i) {
      const auto& o = obs_[i];
      if (!std::isfinite(o.time) || o.time < 0.0) {
        throw std::invalid_argument("Cohort: observation " + std::to_string(i) +
                                    " has a negative or non-finite time");
      }
      if (o.cause < 0 || o.cause > k_) {
        throw std::invalid_argument("Cohort: observation " + std::to_string(i) +
                                    " has cause outside 0.." + std::to_string(k_));
      }
    }
  }

  std::size_t n() const { return obs_.size(); }
  int k() const { return k_; }
  double horizon() const { return horizon_; }
  const std::vector<Observation>& observations() const { return obs_; }
  const Observation& operator[](std::size_t i) const { return obs_[i]; }

  double max_time() const {
    double m = 0.0;
    for (const auto& o : obs_) m = std::max(m, o.time);
    return m;
  }

 private:
  std::vector<Observation> obs_;
  int k_;
  double horizon_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
    s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

/// Parses `time,cause` CSV text (header required, extra columns ignored).
inline Cohort parse_cohort(std::string_view csv, int num_risks,
                           double horizon = std::numeric_limits<double>::infinity()) {
  if (num_risks < 1) throw ParseError("number of risks must be >= 1", 0);

  // UTF-8 byte order mark
  if (csv.size() >= 3 && csv.substr(0, 3) == "\xEF\xBB\xBF") csv.remove_prefix(3);

  std::vector<Observation> obs;
  std::optional<std::size_t> time_col, cause_col;
  std::size_t width = 0;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  while (pos <= csv.size()) {
    auto end = csv.find('\n', pos);
    if (end == std::string_view::npos) end = csv.size();
    std::string_view line = csv.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (detail::trim(line).empty()) {
      if (end == csv.size()) break;
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (!have_header) {
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (fields[c] == "time") time_col = c;
        if (fields[c] == "cause") cause_col = c;
      }
      if (!time_col) throw ParseError("missing column 'time' in header (line " + std::to_string(line_no) + ")", line_no);
      if (!cause_col) throw ParseError("missing column 'cause' in header (line " + std::to_string(line_no) + ")", line_no);
      width = fields.size();
      have_header = true;
      if (end == csv.size()) break;
      continue;
    }
    const std::string at = " at line " + std::to_string(line_no);
    if (fields.size() < width) throw ParseError("too few fields" + at, line_no);

    const auto tf = fields[*time_col];
    const auto cf = fields[*cause_col];
    if (tf.empty() || tf == "NA") throw ParseError("missing time" + at, line_no);
    if (cf.empty() || cf == "NA") throw ParseError("missing cause" + at, line_no);

    double t = 0.0;
    auto [tp, tec] = std::from_chars(tf.data(), tf.data() + tf.size(), t);
    if (tec != std::errc{} || tp != tf.data() + tf.size())
      throw ParseError("malformed time '" + std::string(tf) + "'" + at, line_no);
    if (!std::isfinite(t)) throw ParseError("non-finite time" + at, line_no);
    if (t < 0.0) throw ParseError("negative time" + at, line_no);

    int cause = 0;
    auto [cp, cec] = std::from_chars(cf.data(), cf.data() + cf.size(), cause);
    if (cec != std::errc{} || cp != cf.data() + cf.size())
      throw ParseError("malformed cause '" + std::string(cf) + "'" + at, line_no);
    if (cause < 0 || cause > num_risks)
      throw ParseError("cause " + std::to_string(cause) + " outside 0.." + std::to_string(num_risks) + at,
                       line_no);

    obs.push_back({t, cause});
    if (end == csv.size()) break;
  }

  if (!have_header) throw ParseError("empty file: no header row", 0);
  if (obs.empty()) throw ParseError("no data rows after header", line_no);
  return Cohort(std::move(obs), num_risks, horizon);
}

/// One uncensored subject's cell in the risk table.
struct SubjectEvent {
  std::size_t subject;     // index into the cohort
  std::size_t time_index;  // index into RiskTable::times()
  int cause;               // 1..k
};

/// Distinct event times with at-risk counts Y(u) (t- convention) and
/// cause-specific jump counts. Immutable after construction.
class RiskTable {
 public:
  RiskTable() = default;

  std::size_t n() const { return n_; }
  int k() const { return k_; }
  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }

  const std::vector<double>& times() const { return times_; }
  double time(std::size_t l) const { return times_[l]; }
  const std::vector<int>& at_risk() const { return at_risk_; }
  int at_risk(std::size_t l) const { return at_risk_[l]; }
  /// Delta N_j(u_l), cause j in 1..k.
  int jumps(int cause, std::size_t l) const {
    return jumps_[static_cast<std::size_t>(cause - 1) * times_.size() + l];
  }
  const std::vector<int>& total_jumps() const { return total_; }
  int total_jumps(std::size_t l) const { return total_[l]; }
  const std::vector<SubjectEvent>& subject_events() const { return events_; }
  /// Y(X_i): number at risk at subject i's exit time.
  int exit_at_risk(std::size_t subject) const { return exit_at_risk_[subject]; }
  const std::vector<int>& exit_at_risk() const { return exit_at_risk_; }

  std::size_t num_censored() const { return censored_; }

  friend RiskTable build_risk_table(const Cohort& cohort);
  friend RiskTable collapse_to_two_risks(const RiskTable& rt, int primary);

 private:
  std::size_t n_ = 0;
  int k_ = 0;
  std::vector<double> times_;
  std::vector<int> at_risk_;
  std::vector<int> jumps_;
  std::vector<int> total_;
  std::vector<SubjectEvent> events_;
  std::vector<int> exit_at_risk_;
  std::size_t censored_ = 0;
};

inline RiskTable build_risk_table(const Cohort& cohort) {
  RiskTable rt;
  rt.n_ = cohort.n();
  rt.k_ = cohort.k();
  const auto& obs = cohort.observations();
  const double horizon = cohort.horizon();

  std::vector<double> sorted_times(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) sorted_times[i] = obs[i].time;
  std::sort(sorted_times.begin(), sorted_times.end());
  const auto at_risk_at = [&](double u) {
    return static_cast<int>(sorted_times.end() -
                            std::lower_bound(sorted_times.begin(), sorted_times.end(), u));
  };

  for (const auto& o : obs) {
    if (o.cause >= 1 && o.time <= horizon) rt.times_.push_back(o.time);
    if (o.cause == 0) ++rt.censored_;
  }
  std::sort(rt.times_.begin(), rt.times_.end());
  rt.times_.erase(std::unique(rt.times_.begin(), rt.times_.end()), rt.times_.end());

  const std::size_t m = rt.times_.size();
  rt.at_risk_.resize(m);
  for (std::size_t l = 0; l < m; ++l) rt.at_risk_[l] = at_risk_at(rt.times_[l]);

  rt.jumps_.assign(static_cast<std::size_t>(rt.k_) * m, 0);
  rt.total_.assign(m, 0);
  rt.exit_at_risk_.resize(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    rt.exit_at_risk_[i] = at_risk_at(o.time);
    if (o.cause < 1 || o.time > horizon) continue;
    const auto l = static_cast<std::size_t>(
        std::lower_bound(rt.times_.begin(), rt.times_.end(), o.time) - rt.times_.begin());
    ++rt.jumps_[static_cast<std::size_t>(o.cause - 1) * m + l];
    ++rt.total_[l];
    rt.events_.push_back({i, l, o.cause});
  }
  std::stable_sort(rt.events_.begin(), rt.events_.end(),
                   [](const SubjectEvent& a, const SubjectEvent& b) { return a.time_index < b.time_index; });
  return rt;
}

/// Two-risk view: cause 1 = `primary`, cause 2 = every other cause.
inline RiskTable collapse_to_two_risks(const RiskTable& rt, int primary) {
  if (primary < 1 || primary > rt.k()) throw std::invalid_argument("collapse_to_two_risks: cause out of range");
  RiskTable out;
  out.n_ = rt.n_;
  out.k_ = 2;
  out.times_ = rt.times_;
  out.at_risk_ = rt.at_risk_;
  out.total_ = rt.total_;
  out.exit_at_risk_ = rt.exit_at_risk_;
  out.censored_ = rt.censored_;
  const std::size_t m = rt.size();
  out.jumps_.assign(2 * m, 0);
  for (std::size_t l = 0; l < m; ++l) {
    const int own = rt.jumps(primary, l);
    out.jumps_[l] = own;
    out.jumps_[m + l] = rt.total_[l] - own;
  }
  out.events_ = rt.events_;
  for (auto& e : out.events_) e.cause = (e.cause == primary) ? 1 : 2;
  return out;
}

}  // namespace crboot
