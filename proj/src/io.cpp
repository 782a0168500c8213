#include "twoway/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace twoway {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  if (s.empty()) return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) throw Error(ErrorCode::Io, where(path, line) + ": not a number '" + s + "'");
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

LabeledPanel read_panel_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::Io, path.string() + ": empty file");
  const auto header = split_fields(line);
  if (header.size() < 4 || header[0] != "i" || header[1] != "t" || header[2] != "y") {
    throw Error(ErrorCode::Io, path.string() + ": header must be i,t,y,x1[,x2,...]");
  }
  const std::size_t k = header.size() - 3;

  LabeledPanel out;
  std::unordered_map<std::string, Index> unit_id, period_id;
  struct Cell {
    Index i, t;
    std::vector<double> values;
    std::size_t line;
  };
  std::vector<Cell> cells;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw Error(ErrorCode::Io, where(path, lineno) + ": expected " + std::to_string(header.size()) + " fields");
    }
    const auto intern = [](auto& ids, auto& labels, const std::string& label) {
      auto [it, inserted] = ids.try_emplace(label, static_cast<Index>(labels.size()));
      if (inserted) labels.push_back(label);
      return it->second;
    };
    Cell c{intern(unit_id, out.units, fields[0]), intern(period_id, out.periods, fields[1]), {}, lineno};
    for (std::size_t f = 2; f < fields.size(); ++f) c.values.push_back(parse_double(fields[f], path, lineno));
    cells.push_back(std::move(c));
  }
  const auto n = static_cast<Index>(out.units.size());
  const auto t = static_cast<Index>(out.periods.size());
  if (n == 0) throw Error(ErrorCode::Io, path.string() + ": no data rows");

  Matrix y = Matrix::Constant(n, t, std::nan(""));
  std::vector<Matrix> x(k, Matrix::Zero(n, t));
  Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n, t);
  for (const auto& c : cells) {
    if (seen(c.i, c.t)++) {
      throw Error(ErrorCode::Io, where(path, c.line) + ": duplicate cell (" + out.units[static_cast<std::size_t>(c.i)] +
                                     ", " + out.periods[static_cast<std::size_t>(c.t)] + ")");
    }
    y(c.i, c.t) = c.values[0];
    for (std::size_t j = 0; j < k; ++j) x[j](c.i, c.t) = c.values[j + 1];
  }
  for (Index i = 0; i < n; ++i) {
    for (Index s = 0; s < t; ++s) {
      if (!seen(i, s)) {
        throw Error(ErrorCode::Io, path.string() + ": unbalanced panel, missing cell (" +
                                       out.units[static_cast<std::size_t>(i)] + ", " +
                                       out.periods[static_cast<std::size_t>(s)] + ")");
      }
    }
  }
  out.data = validate_panel(std::move(y), std::move(x));
  return out;
}

void write_panel_csv(const std::filesystem::path& path, const PanelData& data) {
  std::ofstream out = open_out(path);
  out << "i,t,y";
  for (Index j = 0; j < data.k(); ++j) out << ",x" << (j + 1);
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    for (Index s = 0; s < data.t(); ++s) {
      out << (i + 1) << ',' << (s + 1) << ',' << format_double(data.y(i, s));
      for (const auto& xk : data.x) out << ',' << format_double(xk(i, s));
      out << '\n';
    }
  }
  finish(out, path);
}

void write_estimate_csv(const std::filesystem::path& path, const EstimateResult& res, double level) {
  const auto ci = confidence_interval(res.beta, res.se, level);
  std::ofstream out = open_out(path);
  out << "coef,estimate,se,ci_lower,ci_upper,dfc,estimator\n";
  for (Index j = 0; j < res.beta.size(); ++j) {
    out << 'x' << (j + 1) << ',' << format_double(res.beta(j)) << ',' << format_double(res.se(j)) << ','
        << format_double(ci[static_cast<std::size_t>(j)].lower) << ','
        << format_double(ci[static_cast<std::size_t>(j)].upper) << ',' << format_double(res.dfc) << ','
        << res.estimator << '\n';
  }
  finish(out, path);
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectrumReport& report) {
  std::ofstream out = open_out(path);
  out << "r,singular_value,ratio\n";
  for (Index r = 0; r < report.singular_values.size(); ++r) {
    out << (r + 1) << ',' << format_double(report.singular_values(r)) << ',';
    if (r < report.ratios.size()) out << format_double(report.ratios(r));
    out << '\n';
  }
  finish(out, path);
}

void write_mc_summary_csv(const std::filesystem::path& path, const std::vector<McRow>& rows) {
  std::ofstream out = open_out(path);
  out << "estimator,N,T,rounds,bias,rmse,coverage,mean_se,sd_beta,failures\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.n << ',' << r.t << ',' << r.rounds << ',' << format_double(r.bias) << ','
        << format_double(r.rmse) << ',' << format_double(r.coverage) << ',' << format_double(r.mean_se) << ','
        << format_double(r.sd_beta) << ',' << r.failures << '\n';
  }
  finish(out, path);
}

std::vector<McRow> read_mc_summary_csv(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "estimator,N,T,rounds,bias,rmse,coverage,mean_se,sd_beta,failures") {
    throw Error(ErrorCode::Io, path.string() + ": not an mc_summary file");
  }
  std::vector<McRow> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 10) throw Error(ErrorCode::Io, where(path, lineno) + ": expected 10 fields");
    McRow r;
    r.estimator = f[0];
    r.n = static_cast<Index>(parse_double(f[1], path, lineno));
    r.t = static_cast<Index>(parse_double(f[2], path, lineno));
    r.rounds = static_cast<Index>(parse_double(f[3], path, lineno));
    r.bias = parse_double(f[4], path, lineno);
    r.rmse = parse_double(f[5], path, lineno);
    r.coverage = parse_double(f[6], path, lineno);
    r.mean_se = parse_double(f[7], path, lineno);
    r.sd_beta = parse_double(f[8], path, lineno);
    r.failures = static_cast<Index>(parse_double(f[9], path, lineno));
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_mc_rounds_csv(const std::filesystem::path& path, const std::vector<McRound>& rounds) {
  std::ofstream out = open_out(path);
  out << "estimator,N,T,round,beta,se,covered,failed\n";
  for (const auto& r : rounds) {
    out << r.estimator << ',' << r.n << ',' << r.t << ',' << (r.round + 1) << ','
        << (r.failed ? std::string() : format_double(r.beta)) << ','
        << (r.failed ? std::string() : format_double(r.se)) << ',' << (r.covered ? 1 : 0) << ','
        << (r.failed ? 1 : 0) << '\n';
  }
  finish(out, path);
}

}  // namespace twoway
