#pragma once

// Subcommand implementations behind the widthlab executable.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

namespace widthlab::cli {

/// Output root used when --out is absent; overrides the default "results".
inline constexpr const char* kOutRootEnv = "WIDTHLAB_OUT_ROOT";

struct CommonOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  unsigned jobs = 0;  // 0: all hardware threads
  std::uint64_t seed_offset = 0;
};

/// --out if given, else <root>/<config output or name> where root comes from
/// the environment or defaults to "results".
std::filesystem::path resolve_out_dir(const std::optional<std::filesystem::path>& out,
                                      const std::string& config_output,
                                      const std::string& config_name);

int cmd_train(const CommonOptions& o);
int cmd_sweep(const CommonOptions& o);
int cmd_coordcheck(const CommonOptions& o);
int cmd_align(const CommonOptions& o);
int cmd_uvmodel(const CommonOptions& o);
int cmd_gendata(const CommonOptions& o);
/// Regenerates the report for an existing sweep directory.
int cmd_report(const std::filesystem::path& dir);
/// Writes presets.md (scaling exponents per preset) into dir.
int cmd_presets(const std::filesystem::path& dir);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

/// Runs fn, logging any exception and mapping it to an exit code.
int guarded(const std::function<int()>& fn);

}  // namespace widthlab::cli
