#include "agentjudge/cli.hpp"

int main(int argc, char** argv) { return agentjudge::run_cli(argc, argv); }
