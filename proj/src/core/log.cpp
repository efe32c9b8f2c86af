#include "pex/core/log.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include "pex/core/format.hpp"
#include "pex/core/random.hpp"

namespace pex {

namespace {

// Summing in sorted order makes the result independent of record order.
double order_free_mean(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

ValidationReport validate_log(const LogDataset& log, bool allow_empty) {
  ValidationReport report;
  auto flag = [&](std::size_t i, std::string msg) { report.violations.push_back({i, std::move(msg)}); };
  if (log.n < 1) flag(0, "arm count n must be >= 1");
  if (log.m < 1) flag(0, "outcome count m must be >= 1");
  if (!log.outcome_specs.empty() && log.outcome_specs.size() != log.m) {
    flag(0, "outcome spec count does not match m");
  }
  for (std::size_t a = 0; a < log.outcome_specs.size(); ++a) {
    for (std::size_t b = a + 1; b < log.outcome_specs.size(); ++b) {
      if (log.outcome_specs[a].name == log.outcome_specs[b].name) {
        flag(0, "duplicate outcome name '" + log.outcome_specs[a].name + "'");
      }
    }
  }
  if (!allow_empty && log.records.empty()) flag(0, "log is empty");

  for (std::size_t i = 0; i < log.records.size(); ++i) {
    const auto& r = log.records[i];
    if (r.covariates.size() != log.d) flag(i, "covariate length mismatch");
    if (r.outcomes.size() != log.m) flag(i, "outcome length mismatch");
    if (r.arm < 1 || r.arm > log.n) flag(i, "arm out of range");
    if (!(r.propensity > 0.0 && r.propensity <= 1.0)) flag(i, "propensity outside (0,1]");
    if (!std::all_of(r.covariates.begin(), r.covariates.end(), [](double v) { return std::isfinite(v); })) {
      flag(i, "non-finite covariate");
    }
    if (!std::all_of(r.outcomes.begin(), r.outcomes.end(), [](double v) { return std::isfinite(v); })) {
      flag(i, "non-finite outcome");
    }
  }
  return report;
}

AteMatrix compute_ate(const LogDataset& log) {
  if (log.n < 1 || log.m < 1) throw Error("compute_ate: log has no arms or outcomes");
  std::vector<std::vector<std::vector<double>>> by_arm(
      static_cast<std::size_t>(log.n), std::vector<std::vector<double>>(log.m));
  for (const auto& r : log.records) {
    if (r.arm < 1 || r.arm > log.n) throw Error("compute_ate: arm out of range");
    for (std::size_t j = 0; j < log.m; ++j) by_arm[r.arm - 1][j].push_back(r.outcomes.at(j));
  }
  std::vector<double> means(static_cast<std::size_t>(log.n) * log.m);
  for (int i = 1; i <= log.n; ++i) {
    if (by_arm[i - 1][0].empty()) {
      throw Error("compute_ate: arm " + std::to_string(i) + " has no records");
    }
    for (std::size_t j = 0; j < log.m; ++j) means[(i - 1) * log.m + j] = order_free_mean(by_arm[i - 1][j]);
  }
  AteMatrix ate(log.n, log.m);
  for (int i = 2; i <= log.n; ++i) {
    for (std::size_t j = 0; j < log.m; ++j) ate(i, j) = means[(i - 1) * log.m + j] - means[j];
  }
  return ate;
}

LogSplit split_log(const LogDataset& log, double holdout_fraction, std::uint64_t seed) {
  if (!(holdout_fraction >= 0.0 && holdout_fraction <= 1.0)) {
    throw Error("split_log: holdout fraction must lie in [0,1]");
  }
  const std::size_t total = log.size();
  const auto holdout_count = static_cast<std::size_t>(std::llround(holdout_fraction * static_cast<double>(total)));
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Engine eng = make_engine(seed, 0x5bd1e995);
  std::shuffle(order.begin(), order.end(), eng);
  std::vector<char> in_holdout(total, 0);
  for (std::size_t k = 0; k < holdout_count; ++k) in_holdout[order[k]] = 1;

  LogSplit out{log.empty_like(), log.empty_like()};
  out.holdout.records.reserve(holdout_count);
  out.main.records.reserve(total - holdout_count);
  for (std::size_t i = 0; i < total; ++i) {
    (in_holdout[i] ? out.holdout : out.main).records.push_back(log.records[i]);
  }
  return out;
}

ArmSubset arm_subset(const LogDataset& log, int arm) {
  ArmSubset s;
  s.y.resize(log.m);
  for (const auto& r : log.records) {
    if (r.arm != arm) continue;
    s.x.insert(s.x.end(), r.covariates.begin(), r.covariates.end());
    for (std::size_t j = 0; j < log.m; ++j) s.y[j].push_back(r.outcomes[j]);
    ++s.rows;
  }
  return s;
}

std::vector<double> covariate_matrix(const LogDataset& log) {
  std::vector<double> x;
  x.reserve(log.size() * log.d);
  for (const auto& r : log.records) x.insert(x.end(), r.covariates.begin(), r.covariates.end());
  return x;
}

void write_log_csv(std::ostream& os, const LogDataset& log) {
  os << "unit_id,arm,propensity";
  for (std::size_t k = 0; k < log.d; ++k) os << ",x_" << k;
  for (std::size_t j = 0; j < log.m; ++j) os << ",y_" << j;
  os << '\n';
  std::string line;
  for (const auto& r : log.records) {
    line.clear();
    line += r.unit_id;
    line += ',';
    line += std::to_string(r.arm);
    line += ',';
    line += format_double(r.propensity);
    for (double v : r.covariates) {
      line += ',';
      line += format_double(v);
    }
    for (double v : r.outcomes) {
      line += ',';
      line += format_double(v);
    }
    line += '\n';
    os << line;
  }
}

void write_log_csv(const std::string& path, const LogDataset& log) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write log file " + path);
  write_log_csv(os, log);
  if (!os) throw Error("failed writing log file " + path);
}

LogDataset read_log_csv(std::istream& is, int n, std::vector<OutcomeSpec> specs) {
  std::string line;
  if (!std::getline(is, line)) throw Error("log file is empty (missing header)");
  auto header = split_commas(line);
  if (header.size() < 3 || header[0] != "unit_id" || header[1] != "arm" || header[2] != "propensity") {
    throw Error("log header must start with unit_id,arm,propensity");
  }
  std::size_t d = 0;
  std::size_t m = 0;
  std::size_t col = 3;
  for (; col < header.size() && header[col] == "x_" + std::to_string(d); ++col) ++d;
  for (; col < header.size() && header[col] == "y_" + std::to_string(m); ++col) ++m;
  if (col != header.size() || m == 0) throw Error("log header columns malformed: " + line);

  LogDataset log;
  log.n = n;
  log.m = m;
  log.d = d;
  log.outcome_specs = specs.empty() ? default_outcome_specs(m) : std::move(specs);
  if (log.outcome_specs.size() != m) throw Error("outcome specs do not match log outcome columns");

  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto cells = split_commas(line);
    if (cells.size() != header.size()) {
      throw Error("log line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                  " fields, got " + std::to_string(cells.size()));
    }
    UnitRecord r;
    r.unit_id = std::string(cells[0]);
    r.arm = static_cast<int>(parse_int(cells[1]));
    r.propensity = parse_double(cells[2]);
    r.covariates.reserve(d);
    for (std::size_t k = 0; k < d; ++k) r.covariates.push_back(parse_double(cells[3 + k]));
    r.outcomes.reserve(m);
    for (std::size_t j = 0; j < m; ++j) r.outcomes.push_back(parse_double(cells[3 + d + j]));
    log.records.push_back(std::move(r));
  }
  return log;
}

LogDataset read_log_csv(const std::string& path, int n, std::vector<OutcomeSpec> specs) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open log file " + path);
  return read_log_csv(is, n, std::move(specs));
}

}  // namespace pex
