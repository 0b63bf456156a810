#pragma once

#include "corrface/error.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace corrface::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitMismatch = 4;

struct RunManifest {
  std::string subcommand;
  std::filesystem::path config_path;  // empty: defaults only
  std::filesystem::path out_dir = "corrface_run";
  std::uint64_t seed = 0;
  int jobs = 1;
  int verbosity = 0;
};

int exit_code_for(Errc code);

// args[0] is the program name. Never throws.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace corrface::cli
