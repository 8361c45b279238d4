#pragma once

namespace lfo {

// Parses argv and dispatches to the training/collection/evaluation entry
// points. Returns 0 on success, 1 on usage errors, 2 on runtime failures.
int run_cli(int argc, const char* const* argv);

}  // namespace lfo
