#pragma once

namespace vawe {

// Entry point behind the `vawe` binary. Exit codes: 0 ok, 2 usage/config,
// 3 parse/checkpoint/io, 4 numeric/divergence, 5 protocol/shape. Errors are
// reported to stderr as one JSON line {"error": category, "message": ...}.
int run_cli(int argc, const char* const* argv);

}  // namespace vawe
