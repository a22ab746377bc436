#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace dtrkit {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Per-stage provenance lines: stage name, input digests, config digest and
/// output digests. Output paths are written relative to the run root.
class Manifest {
 public:
  explicit Manifest(std::filesystem::path root) : root_(std::move(root)) {}

  void record(const std::string& stage, const std::vector<std::filesystem::path>& inputs,
              const std::string& config_text, const std::vector<std::filesystem::path>& outputs);

  const std::vector<std::string>& lines() const { return lines_; }
  const std::filesystem::path& root() const { return root_; }

  /// Writes `manifest.txt` under the root.
  void write() const;

 private:
  std::filesystem::path root_;
  std::vector<std::string> lines_;
};

}  // namespace dtrkit
