// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "lasst/cli.hpp"

int main(int argc, char** argv) { return lasst::cli_main(argc, argv, std::cout, std::cerr); }
