#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace protoprompt::detail {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // merged stdout/stderr
};

std::string shell_quote(const std::string& arg);

// Runs `program` (already a shell fragment, e.g. "python3 tool.py") followed by
// the quoted arguments.
CommandResult run_command(const std::string& program, const std::vector<std::string>& args);

// Scoped temporary directory, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace protoprompt::detail
