#include <string>
#include <vector>

#include "storctl/cli.hpp"

int main(int argc, char** argv) {
  return storctl::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
