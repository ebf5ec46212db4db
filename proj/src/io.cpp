#include "s3w/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace s3w {
namespace {

constexpr double kUnitTol = 1e-6;

[[noreturn]] void fail_at(const std::string& path, std::size_t line,
                          const std::string& what) {
  throw std::invalid_argument(path + ":" + std::to_string(line) + ": " + what);
}

double parse_double(const std::string& token, const std::string& path,
                    std::size_t line) {
  const char* b = token.data();
  const char* e = b + token.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  double v = 0.0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e || b == e)
    fail_at(path, line, "not a number: '" + token + "'");
  return v;
}

double parse_double_arg(const std::string& token, const std::string& ctx) {
  const char* b = token.data();
  const char* e = b + token.size();
  double v = 0.0;
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc{} || res.ptr != e || b == e)
    throw std::invalid_argument(ctx + ": not a number: '" + token + "'");
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write " + path);
  return out;
}

}  // namespace

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_cloud_csv(const std::string& path, const Mat& points) {
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j) out << ',';
      out << format_g17(points(i, j));
    }
    out << '\n';
  }
}

void write_cloud_csv(const std::string& path, const Mat& points,
                     const Vec& weights) {
  if (weights.size() != points.rows())
    throw std::invalid_argument("weight count mismatch");
  std::ofstream out = open_out(path);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j)
      out << format_g17(points(i, j)) << ',';
    out << format_g17(weights(i)) << '\n';
  }
}

EmpiricalMeasure read_cloud_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t cols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto tokens = split(line, ',');
    std::vector<double> row;
    row.reserve(tokens.size());
    for (const auto& t : tokens) row.push_back(parse_double(t, path, lineno));
    if (cols == 0) {
      cols = row.size();
      if (cols < 2) fail_at(path, lineno, "need at least 2 columns");
    } else if (row.size() != cols) {
      fail_at(path, lineno,
              "expected " + std::to_string(cols) + " columns, got " +
                  std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument(path + ": empty cloud");

  auto head_unit = [&](const std::vector<double>& row, std::size_t k) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) n2 += row[j] * row[j];
    return std::abs(std::sqrt(n2) - 1.0) <= kUnitTol;
  };
  bool bare = true;
  for (const auto& row : rows)
    if (!head_unit(row, cols)) {
      bare = false;
      break;
    }
  if (bare) {
    Mat points(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j)
        points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            rows[i][j];
    return EmpiricalMeasure::from_points(std::move(points));
  }
  if (cols < 3)
    throw std::invalid_argument(path + ": rows are not unit vectors");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!head_unit(rows[i], cols - 1))
      fail_at(path, i + 1,
              "row is neither a unit point nor a unit point plus weight");
    if (rows[i][cols - 1] < 0.0) fail_at(path, i + 1, "negative weight");
  }
  Mat points(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(cols - 1));
  Vec weights(static_cast<Eigen::Index>(rows.size()));
  double wsum = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < cols; ++j)
      points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    weights(static_cast<Eigen::Index>(i)) = rows[i][cols - 1];
    wsum += rows[i][cols - 1];
  }
  if (!(wsum > 0.0)) throw std::invalid_argument(path + ": weights sum to 0");
  weights /= wsum;
  return EmpiricalMeasure::from_weighted(std::move(points), std::move(weights));
}

void write_trace_csv(const std::string& path, const FlowTrace& trace) {
  std::ofstream out = open_out(path);
  out << "step,loss,cum_seconds,nll,log_w2\n";
  auto field = [](double v) {
    return std::isnan(v) ? std::string() : format_g17(v);
  };
  for (std::size_t k = 0; k < trace.loss.size(); ++k) {
    out << (k + 1) << ',' << format_g17(trace.loss[k]) << ','
        << format_g17(trace.cum_seconds[k]) << ',' << field(trace.nll[k])
        << ',' << field(trace.log_w2[k]) << '\n';
  }
}

void write_study_csv(const std::string& path, const StudyReport& report) {
  std::ofstream out = open_out(path);
  out << "study";
  for (const auto& name : report.param_names) out << ',' << name;
  out << ",rep,value\n";
  for (const auto& cell : report.cells) {
    for (std::size_t r = 0; r < cell.values.size(); ++r) {
      out << report.id;
      for (const auto& kv : cell.params) out << ',' << kv.second;
      out << ',' << r << ',' << format_g17(cell.values[r]) << '\n';
    }
  }
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty grid");
  if (text.find(',') != std::string::npos) {
    std::vector<double> out;
    for (const auto& t : split(text, ','))
      out.push_back(parse_double_arg(t, "grid"));
    return out;
  }
  auto parts = split(text, ':');
  if (parts.size() == 1) return {parse_double_arg(parts[0], "grid")};
  const bool log_scale = parts.size() == 4 && parts[2] == "log";
  if (parts.size() != 3 && !log_scale)
    throw std::invalid_argument(
        "grid must be 'a,b,...', 'a:b:n', or 'a:b:log:n'");
  double a = parse_double_arg(parts[0], "grid start");
  double b = parse_double_arg(parts[1], "grid end");
  double nd = parse_double_arg(parts. back(), "grid count");
  auto n = static_cast<long long>(nd);
  if (n < 1 || static_cast<double>(n) != nd)
    throw std::invalid_argument("grid count must be a positive integer");
  if (log_scale && !(a > 0.0 && b > 0.0))
    throw std::invalid_argument("log grid needs positive endpoints");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = a;
    return out;
  }
  for (long long i = 0; i < n; ++i) {
    double f = static_cast<double>(i) / static_cast<double>(n - 1);
    out[static_cast<std::size_t>(i)] =
        log_scale ? std::exp(std::log(a) + (std::log(b) - std::log(a)) * f)
                  : a + (b - a) * f;
  }
  out.front() = a;
  out.back() = b;
  return out;
}

std::pair<std::size_t, std::size_t> parse_ramp(const std::string& text) {
  auto parts = split(text, ':');
  if (parts.size() != 2)
    throw std::invalid_argument("rotation schedule must be 'from:to'");
  double a = parse_double_arg(parts[0], "schedule start");
  double b = parse_double_arg(parts[1], "schedule end");
  if (a < 1 || b < 1 || a != std::floor(a) || b != std::floor(b))
    throw std::invalid_argument("schedule endpoints must be integers >= 1");
  return {static_cast<std::size_t>(a), static_cast<std::size_t>(b)};
}

GeneratedTarget load_target(const std::string& spec, Rng& rng) {
  auto parts = split(spec, ':');
  const std::string& kind = parts.front();
  if (kind != "uniform" && kind != "vmf" && kind != "icosa12") {
    GeneratedTarget out{read_cloud_csv(spec), std::nullopt};
    return out;
  }

  std::vector<std::pair<std::string, std::string>> kvs;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    auto eq = parts[i].find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("generator parameter needs key=value: '" +
                                  parts[i] + "'");
    kvs.emplace_back(parts[i].substr(0, eq), parts[i].substr(eq + 1));
  }
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    for (auto& kv : kvs)
      if (kv.first == key) {
        auto v = kv.second;
        kv.first.clear();
        return v;
      }
    return std::nullopt;
  };
  auto take_size = [&](const std::string& key, std::size_t fallback) {
    auto v = take(key);
    if (!v) return fallback;
    double d = parse_double_arg(*v, key);
    if (d < 1 || d != std::floor(d))
      throw std::invalid_argument(key + " must be an integer >= 1");
    return static_cast<std::size_t>(d);
  };
  auto take_double = [&](const std::string& key, double fallback) {
    auto v = take(key);
    return v ? parse_double_arg(*v, key) : fallback;
  };
  auto finish = [&] {
    for (const auto& kv : kvs)
      if (!kv.first.empty())
        throw std::invalid_argument("unknown generator parameter: " +
                                    kv.first);
  };

  GeneratedTarget out{EmpiricalMeasure{}, std::nullopt};
  if (kind == "uniform") {
    std::size_t n = take_size("n", 500);
    int d = static_cast<int>(take_size("d", 2));
    finish();
    out.measure = EmpiricalMeasure::from_points(sample_uniform_rows(d, n, rng));
    if (d == 2)
      out.density = VmfMixture::uniform_weights(
          {VonMisesFisher::from(north_pole(2), 0.0)});
  } else if (kind == "vmf") {
    auto mu_text = take("mu");
    if (!mu_text) throw std::invalid_argument("vmf generator needs mu=...");
    auto coords = split(*mu_text, ',');
    if (coords.size() < 2)
      throw std::invalid_argument("mu needs at least 2 coordinates");
    Vec mu(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i)
      mu(static_cast<Eigen::Index>(i)) = parse_double_arg(coords[i], "mu");
    double kappa = take_double("kappa", 10.0);
    std::size_t n = take_size("n", 500);
    finish();
    VonMisesFisher dist = VonMisesFisher::from(SpherePoint::from(mu), kappa);
    out.measure = EmpiricalMeasure::from_points(sample_vmf_rows(dist, n, rng));
    if (dist.sphere_dim() == 2)
      out.density = VmfMixture::uniform_weights({dist});
  } else {
    double kappa = take_double("kappa", 50.0);
    std::size_t n = take_size("n", 2400);
    finish();
    VmfMixture mix = icosahedron_mixture(kappa);
    out.measure =
        EmpiricalMeasure::from_points(sample_mixture_rows(mix, n, rng));
    out.density = std::move(mix);
  }
  return out;
}

}  // namespace s3w
