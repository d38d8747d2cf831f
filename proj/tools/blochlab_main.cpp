#include "blochlab/cli.hpp"

int main(int argc, char** argv) {
  return blochlab::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
