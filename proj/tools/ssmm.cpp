#include <string>
#include <vector>

#include "ssmm/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ssmm::cli(args);
}
