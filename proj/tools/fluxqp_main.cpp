#include "fluxqp/commands.hpp"

int main(int argc, char** argv) { return fluxqp::io::run_cli(argc, argv); }
