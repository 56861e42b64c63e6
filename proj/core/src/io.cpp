#include "cisim/io.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "cisim/error.hpp"

namespace cisim::io {

using nlohmann::json;

std::string format_number(double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.8e", v);
  return buf.data();
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  return f;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  const auto e = s.find_last_not_of(" \t\r\n");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw InvalidArgument("header and column counts differ");
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw InvalidArgument("CSV columns have different lengths");
  std::ofstream f = open_out(path);
  for (std::size_t k = 0; k < header.size(); ++k) f << (k ? "," : "") << header[k];
  f << "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t k = 0; k < columns.size(); ++k) f << (k ? "," : "") << format_number(columns[k][r]);
    f << "\n";
  }
}

void write_time_series_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series) {
  if (series.empty()) throw InvalidArgument("no series to write");
  std::vector<std::string> header{"t_us"};
  std::vector<std::vector<double>> cols{series.front().times};
  for (const auto& s : series) {
    if (s.times.size() != cols.front().size()) throw InvalidArgument("series '" + s.label + "' has a different time axis");
    header.push_back(s.label);
    cols.push_back(s.real());
  }
  write_csv(path, header, cols);
}

void write_wigner_csv(const std::filesystem::path& path, const WignerGrid& g) {
  std::ofstream f = open_out(path);
  f << "re_alpha\\im_alpha";
  for (double v : g.im_axis) f << "," << format_number(v);
  f << "\n";
  for (std::size_t i = 0; i < g.re_axis.size(); ++i) {
    f << format_number(g.re_axis[i]);
    for (std::size_t j = 0; j < g.im_axis.size(); ++j) f << "," << format_number(g.values(Eigen::Index(i), Eigen::Index(j)));
    f << "\n";
  }
}

fit::DataSet read_fit_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError(path.string(), "cannot open data file");
  std::string line;
  if (!std::getline(f, line)) throw ValidationError(path.string(), "empty data file");
  const auto header = split(trim(line), ',');
  if (header.size() != 2 && header.size() != 3)
    throw ValidationError(path.string(), "expected columns (t_us, value) or (t_us, delta_khz, value)");
  if (trim(header[0]) != "t_us") throw ValidationError(path.string() + ":1", "first column must be t_us");
  if (header.size() == 3 && trim(header[1]) != "delta_khz")
    throw ValidationError(path.string() + ":1", "second column must be delta_khz");
  fit::DataSet d;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line), ',');
    if (cells.size() != header.size())
      throw ValidationError(path.string() + ":" + std::to_string(lineno), "wrong number of columns");
    std::vector<double> v;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        const std::string t = trim(c);
        v.push_back(std::stod(t, &used));
        if (used != t.size()) throw std::invalid_argument(t);
      } catch (const std::exception&) {
        throw ValidationError(path.string() + ":" + std::to_string(lineno), "not a number: '" + c + "'");
      }
    }
    d.t_us.push_back(v[0]);
    if (v.size() == 3) d.delta_khz.push_back(v[1]);
    d.y.push_back(v.back());
  }
  return d;
}

void write_fit_csv(const std::filesystem::path& path, const fit::DataSet& d) {
  if (d.delta_khz.empty()) {
    write_csv(path, {"t_us", "value"}, {d.t_us, d.y});
  } else {
    write_csv(path, {"t_us", "delta_khz", "value"}, {d.t_us, d.delta_khz, d.y});
  }
}

void write_state_json(const std::filesystem::path& path, const QuantumState& s) {
  json j;
  j["dims"] = s.layout().dims();
  if (s.kind() == StateKind::Pure) {
    j["kind"] = "pure";
    std::vector<double> re, im;
    for (Eigen::Index k = 0; k < s.vector().size(); ++k) {
      re.push_back(s.vector()(k).real());
      im.push_back(s.vector()(k).imag());
    }
    j["real"] = re;
    j["imag"] = im;
  } else {
    j["kind"] = "mixed";
    const Mat rho = s.density();
    std::vector<std::vector<double>> re(std::size_t(rho.rows())), im(std::size_t(rho.rows()));
    for (Eigen::Index r = 0; r < rho.rows(); ++r)
      for (Eigen::Index c = 0; c < rho.cols(); ++c) {
        re[std::size_t(r)].push_back(rho(r, c).real());
        im[std::size_t(r)].push_back(rho(r, c).imag());
      }
    j["real"] = re;
    j["imag"] = im;
  }
  std::ofstream f = open_out(path);
  f << j.dump(1) << "\n";
}

QuantumState read_state_json(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ValidationError(path.string(), "cannot open state file");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ValidationError(path.string(), std::string("invalid JSON: ") + e.what());
  }
  try {
    for (const auto& [k, v] : j.items())
      if (k != "dims" && k != "kind" && k != "real" && k != "imag") throw ValidationError(k, "unknown field");
    const SubsystemLayout layout(j.at("dims").get<std::vector<int>>());
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "pure") {
      const auto re = j.at("real").get<std::vector<double>>();
      const auto im = j.at("imag").get<std::vector<double>>();
      if (re.size() != im.size()) throw ValidationError("imag", "length differs from real");
      Vec v(Eigen::Index(re.size()));
      for (std::size_t k = 0; k < re.size(); ++k) v(Eigen::Index(k)) = cplx(re[k], im[k]);
      return QuantumState::pure(layout, v, 1e-8);
    }
    if (kind == "mixed") {
      const auto re = j.at("real").get<std::vector<std::vector<double>>>();
      const auto im = j.at("imag").get<std::vector<std::vector<double>>>();
      const Eigen::Index n = Eigen::Index(re.size());
      if (im.size() != re.size()) throw ValidationError("imag", "shape differs from real");
      Mat m(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        if (re[std::size_t(r)].size() != std::size_t(n) || im[std::size_t(r)].size() != std::size_t(n))
          throw ValidationError("real", "density matrix must be square");
        for (Eigen::Index c = 0; c < n; ++c) m(r, c) = cplx(re[std::size_t(r)][std::size_t(c)], im[std::size_t(r)][std::size_t(c)]);
      }
      StateTolerance tol;
      tol.norm = 1e-6;
      tol.hermiticity = 1e-6;
      tol.min_eigenvalue = -1e-5;
      return QuantumState::mixed(layout, m, tol);
    }
    throw ValidationError("kind", "must be 'pure' or 'mixed'");
  } catch (const json::exception& e) {
    throw ValidationError(path.string(), std::string("malformed state file: ") + e.what());
  }
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1) {
    EVP_MD_CTX_free(ctx);
    throw Error("SHA-256 initialization failed");
  }
  std::array<char, 1 << 15> buf{};
  while (f) {
    f.read(buf.data(), buf.size());
    if (f.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), std::size_t(f.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  static const char* digits = "0123456789abcdef";
  for (unsigned int k = 0; k < len; ++k) {
    hex.push_back(digits[md[k] >> 4]);
    hex.push_back(digits[md[k] & 0xF]);
  }
  return hex;
}

}  // namespace cisim::io
