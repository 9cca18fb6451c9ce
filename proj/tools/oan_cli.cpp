// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "oan/cli.hpp"

int main(int argc, char** argv) { return oan::cli::run(argc, argv, std::cout, std::cerr); }
