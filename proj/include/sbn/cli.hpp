#pragma once

#include <string>
#include <vector>

#include "sbn/frame_stack.hpp"
#include "sbn/solver.hpp"

namespace sbn::cli {

/// Result of decomposing one frame window.
struct WindowResult {
    std::size_t start = 0;
    std::size_t length = 0;
    DecompositionResult result;
};

struct WindowedDecomposition {
    FrameStack S, B, N;
    std::vector<WindowResult> windows;
};

/// Splits the stack into consecutive windows of `window_len` frames (the
/// remainder forms a final shorter window), decomposes each independently
/// (up to `jobs` in parallel) and concatenates the components.
/// window_len = 0 means a single window covering the whole stack.
WindowedDecomposition decompose_windowed(const FrameStack& stack, const SolverConfig& cfg,
                                         std::size_t window_len, int jobs = 1);

/// Batch entry point. Subcommands: synth, register, decompose, metrics, cdf,
/// detect, track, evaluate. Returns 0 on success, 1 on usage errors, 2 on
/// input/format errors, 3 on non-convergence under --strict.
int run(const std::vector<std::string>& args);

}  // namespace sbn::cli
