#include "widthlab/run_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace widthlab {

namespace {

const char* const kDiagColumns[] = {
    "step",          "layer",           "effective_rms",  "propagating_rms", "delta_h_rms",
    "rcc_residual",  "delta_w_rms",     "delta_x_rms",    "align_rms_update", "align_rms_init",
    "align_op_update", "align_op_init", "effective_rank", "sparsity",        "cosine",
    "grad_rms",      "logit_rms",       "delta_logit_rms"};

std::string join(const std::vector<std::string>& fields) {
  std::string s;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) s += ',';
    s += fields[i];
  }
  return s;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : kMissing;
}

std::optional<double> parse_optional(const std::string& field) {
  if (field == kMissing) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || *end != '\0')
    throw std::runtime_error("cannot parse number '" + field + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << text;
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& run) {
  std::size_t layers = 0;
  for (const auto& m : run.steps) layers = std::max(layers, m.grad_rms.size());
  std::vector<std::string> header{"step", "loss", "accuracy", "logit_rms",
                                  "chi_rms", "chi_max_abs", "diverged"};
  for (std::size_t l = 0; l < layers; ++l) header.push_back("grad_rms_" + std::to_string(l));
  std::string text = join(header) + "\n";
  for (const auto& m : run.steps) {
    std::vector<std::string> row{std::to_string(m.step), format_double(m.loss)};
    if (m.diverged && m.grad_rms.empty()) {
      for (int i = 0; i < 4; ++i) row.emplace_back(kMissing);
    } else {
      row.push_back(format_double(m.accuracy));
      row.push_back(format_double(m.logit_rms));
      row.push_back(format_double(m.chi_rms));
      row.push_back(format_double(m.chi_max_abs));
    }
    row.push_back(m.diverged ? "1" : "0");
    for (std::size_t l = 0; l < layers; ++l)
      row.push_back(l < m.grad_rms.size() ? format_double(m.grad_rms[l]) : kMissing);
    text += join(row) + "\n";
  }
  write_text_atomic(path, text);
}

void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticRecord>& probes) {
  std::vector<std::string> header(std::begin(kDiagColumns), std::end(kDiagColumns));
  std::string text = join(header) + "\n";
  for (const auto& rec : probes) {
    for (const auto& d : rec.layers) {
      const std::vector<std::string> row{std::to_string(rec.step),
                                         std::to_string(d.layer),
                                         format_double(d.rcc.effective_rms),
                                         format_double(d.rcc.propagating_rms),
                                         format_double(d.rcc.delta_h_rms),
                                         format_double(d.rcc.max_relative_residual),
                                         format_double(d.delta_w_rms),
                                         format_double(d.delta_x_rms),
                                         format_optional(d.align_rms_update),
                                         format_optional(d.align_rms_init),
                                         format_optional(d.align_op_update),
                                         format_optional(d.align_op_init),
                                         format_optional(d.effective_rank),
                                         format_optional(d.sparsity),
                                         format_optional(d.cosine),
                                         format_optional(d.grad_rms),
                                         format_double(rec.logit_rms),
                                         format_double(rec.delta_logit_rms)};
      text += join(row) + "\n";
    }
  }
  write_text_atomic(path, text);
}

std::vector<DiagnosticRecord> read_diagnostics_csv(const std::filesystem::path& path) {
  std::istringstream is(read_text(path));
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected(std::begin(kDiagColumns), std::end(kDiagColumns));
  if (header != expected) throw std::runtime_error(path.string() + ": unexpected header");

  std::vector<DiagnosticRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != expected.size())
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": wrong field count");
    auto num = [&](std::size_t i) {
      const auto v = parse_optional(f[i]);
      if (!v) throw std::runtime_error(path.string() + ": unexpected NA in " + expected[i]);
      return *v;
    };
    const auto step = static_cast<std::int64_t>(std::stoll(f[0]));
    if (out.empty() || out.back().step != step) {
      DiagnosticRecord rec;
      rec.step = step;
      rec.logit_rms = num(16);
      rec.delta_logit_rms = num(17);
      out.push_back(std::move(rec));
    }
    LayerDiagnostics d;
    d.layer = static_cast<std::size_t>(std::stoul(f[1]));
    d.rcc.effective_rms = num(2);
    d.rcc.propagating_rms = num(3);
    d.rcc.delta_h_rms = num(4);
    d.rcc.max_relative_residual = num(5);
    d.delta_w_rms = num(6);
    d.delta_x_rms = num(7);
    d.align_rms_update = parse_optional(f[8]);
    d.align_rms_init = parse_optional(f[9]);
    d.align_op_update = parse_optional(f[10]);
    d.align_op_init = parse_optional(f[11]);
    d.effective_rank = parse_optional(f[12]);
    d.sparsity = parse_optional(f[13]);
    d.cosine = parse_optional(f[14]);
    d.grad_rms = parse_optional(f[15]);
    out.back().layers.push_back(d);
  }
  return out;
}

}  // namespace widthlab
