#pragma once

#include <iosfwd>
#include <optional>
#include <string>

namespace renv::cli {

struct RunOptions {
  std::string config_path;
  std::string out_dir = "renv-out";
  std::optional<unsigned long long> seed_override;
  std::optional<int> threads_override;
};

// Exit codes: 0 all pass flags true, 1 runtime failure, 2 invalid config.
int run(const RunOptions& opts);

void list_fixtures(std::ostream& os);

int main_entry(int argc, char** argv);

}  // namespace renv::cli
