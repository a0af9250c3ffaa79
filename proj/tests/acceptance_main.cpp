#include <cstdio>
#include <string>
#include <vector>

#include <flowstab/acceptance.hpp>

// Usage: acceptance_tests [N ...]
// Runs the selected acceptance criteria (all twelve when none are given),
// prints one line per criterion, and exits nonzero if any fails.
int main(int argc, char** argv) {
  std::vector<int> ids;
  if (argc <= 1 || std::string(argv[1]) == "all") {
    for (int i = 1; i <= 12; ++i) ids.push_back(i);
  } else {
    for (int a = 1; a < argc; ++a) ids.push_back(std::stoi(argv[a]));
  }
  bool all_pass = true;
  for (int id : ids) {
    try {
      const auto r = flowstab::acceptance::run_criterion(id);
      std::printf("%s\n", flowstab::acceptance::format_result(r).c_str());
      std::fflush(stdout);
      all_pass = all_pass && r.pass;
    } catch (const std::exception& e) {
      std::printf("criterion %d: FAIL (exception: %s)\n", id, e.what());
      std::fflush(stdout);
      all_pass = false;
    }
  }
  return all_pass ? 0 : 1;
}
