// Copyright 2026 The Sentiment Authors. Apache 2.0 License.
#include "sentiment/cli.hpp"

int main(int argc, char** argv) { return sentiment::run_cli(argc, argv); }
