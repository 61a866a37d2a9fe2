#include <string>
#include <vector>

#include "pme/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return pme::cli::run(args);
}
