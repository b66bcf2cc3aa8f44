#include "aoisched/cli.hpp"

int main(int argc, char** argv) { return aoisched::run_cli(argc, argv); }
