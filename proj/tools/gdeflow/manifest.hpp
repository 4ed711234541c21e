#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace gde::cli {

/// Run manifest: enough to regenerate every artifact (normalized config,
/// hash, seeds) plus the artifact list and a status flag. Written at run
/// start with status "running" and rewritten on completion or failure.
class Manifest {
 public:
  Manifest(const std::string& run_dir, const Config& cfg, std::vector<std::uint64_t> seeds);

  void add_artifact(const std::string& relative_path);
  void mark_running();
  void mark_completed();
  void mark_failed(const std::string& reason);

  const std::string& run_dir() const { return run_dir_; }

 private:
  void write(const std::string& status, const std::string& reason) const;

  std::string run_dir_;
  std::string config_text_;
  std::string hash_;
  std::vector<std::uint64_t> seeds_;
  std::vector<std::string> artifacts_;
};

}  // namespace gde::cli
