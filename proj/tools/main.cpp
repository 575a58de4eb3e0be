#include "mfgsens/cli.hpp"

int main(int argc, char** argv) { return mfgsens::run_cli(argc, argv); }
