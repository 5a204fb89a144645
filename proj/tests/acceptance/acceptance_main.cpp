#include <filesystem>
#include <iostream>
#include <unistd.h>

#include "criteria.hpp"

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  gancls::acceptance::Options opts;
  opts.work_dir = argc > 1 ? fs::path(argv[1])
                           : fs::temp_directory_path() / ("gancls_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(opts.work_dir);
  fs::create_directories(opts.work_dir);

  int failures = 0;
  gancls::acceptance::run_all(opts, [&](const gancls::acceptance::Outcome& o) {
    std::cout << gancls::acceptance::format_line(o) << std::endl;
    failures += !o.passed;
  });
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}
