// SPDX-License-Identifier: Apache-2.0
#include "hoiforge/cli.hpp"

int main(int argc, char** argv) { return hoiforge::cli_main(argc, argv); }
