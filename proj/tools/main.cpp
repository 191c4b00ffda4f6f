#include "cli.hpp"

int main(int argc, char** argv) {
  return elemgrasp::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
