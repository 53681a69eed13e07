#include <string>
#include <vector>

#include "causalgeo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return causalgeo::run_cli(args);
}
