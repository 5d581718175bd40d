#include <string>
#include <vector>

#include "convlim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return convlim::cli_dispatch(args);
}
