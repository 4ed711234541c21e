#include "manifest.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace gde::cli {

Manifest::Manifest(const std::string& run_dir, const Config& cfg, std::vector<std::uint64_t> seeds)
    : run_dir_(run_dir),
      config_text_(cfg.normalized_text()),
      hash_(config_hash(cfg)),
      seeds_(std::move(seeds)) {
  std::filesystem::create_directories(run_dir_);
}

void Manifest::add_artifact(const std::string& relative_path) {
  artifacts_.push_back(relative_path);
}

void Manifest::mark_running() { write("running", ""); }
void Manifest::mark_completed() { write("completed", ""); }
void Manifest::mark_failed(const std::string& reason) { write("failed", reason); }

void Manifest::write(const std::string& status, const std::string& reason) const {
  nlohmann::json j;
  j["status"] = status;
  if (!reason.empty()) j["failure"] = reason;
  j["config_hash"] = hash_;
  j["config"] = config_text_;
  j["seeds"] = seeds_;
  j["artifacts"] = artifacts_;
  std::ofstream out(run_dir_ + "/manifest.json");
  if (!out) throw std::runtime_error("manifest: cannot open " + run_dir_ + "/manifest.json");
  out << j.dump(2) << "\n";
}

}  // namespace gde::cli
