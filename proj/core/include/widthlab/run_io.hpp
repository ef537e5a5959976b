#pragma once

// Run artifacts.
//
// metrics.csv      step,loss,accuracy,logit_rms,chi_rms,chi_max_abs,diverged,grad_rms_0..
// diagnostics.csv  step,layer,effective_rms,propagating_rms,delta_h_rms,rcc_residual,
//                  delta_w_rms,delta_x_rms,align_rms_update,align_rms_init,
//                  align_op_update,align_op_init,effective_rank,sparsity,cosine,
//                  grad_rms,logit_rms,delta_logit_rms
//
// Floats use "%.17g" so values round-trip exactly; missing values are "NA".

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "widthlab/diagnostics.hpp"
#include "widthlab/trainer.hpp"

namespace widthlab {

inline constexpr const char* kMissing = "NA";

std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);
/// Parses format_double output; "NA" yields nullopt.
std::optional<double> parse_optional(const std::string& field);

void write_metrics_csv(const std::filesystem::path& path, const RunMetrics& run);
void write_diagnostics_csv(const std::filesystem::path& path,
                           const std::vector<DiagnosticRecord>& probes);
std::vector<DiagnosticRecord> read_diagnostics_csv(const std::filesystem::path& path);

/// Writes through a temporary file and renames, so readers never see partial files.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Splits one CSV line on commas (fields never contain commas or quotes).
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace widthlab
