#pragma once

#include <iosfwd>

namespace etpir {

/// Subcommands capacity, plan, codes, build, retrieve, audit and sweep; JSON
/// on `out`. Returns 0 on success, 1 when a check fails, 2 on usage errors.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace etpir
