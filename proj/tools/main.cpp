// Copyright 2026 The binaural Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "binaural/cli.hpp"

int main(int argc, char** argv) { return binaural::cli::run(argc, argv); }
