#include "fpsel/cli.hpp"

int main(int argc, char** argv) { return fpsel::run_cli(std::vector<std::string>(argv + 1, argv + argc)); }
