#pragma once

#include <iosfwd>

namespace fockdist::cli {

/// Parses argv, runs exactly one subcommand and writes its output to `out`
/// (or to --output). Returns 0 on success, 1 when the computation fails and
/// 2 for usage errors; failures write {"error": {"kind", "message"}} to `err`.
int run_scenario(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Hardware concurrency, capped by FOCK_DISTILLER_THREADS when set.
int worker_threads();

}  // namespace fockdist::cli
